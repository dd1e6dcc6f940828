//! Domain and problem parsing into the typed model.

use super::sexpr::{read, Sx};
use super::*;
use crate::num::parse_decimal;
use std::collections::BTreeSet;

const REQUIREMENTS: &[&str] = &[
    ":strips",
    ":typing",
    ":negative-preconditions",
    ":equality",
    ":fluents",
    ":numeric-fluents",
    ":durative-actions",
    ":duration-inequalities",
    ":continuous-effects",
    ":time",
    ":processes",
    ":events",
    ":adl",
];

struct Ctx<'a> {
    file: &'a str,
    dom: &'a DomainModel,
    /// Parameters in scope (`?x` names).
    vars: Vec<Param>,
    /// Object names usable as arguments.
    objects: &'a [(String, String)],
    durative: bool,
}

fn err(file: &str, sx: &Sx, msg: impl AsRef<str>) -> PddlError {
    let (l, c) = sx.pos();
    PddlError::new(file, l, c, msg.as_ref())
}

fn kw(sx: &Sx) -> Option<String> {
    sx.atom().map(str::to_ascii_lowercase)
}

impl Ctx<'_> {
    fn err(&self, sx: &Sx, msg: impl AsRef<str>) -> PddlError {
        err(self.file, sx, msg)
    }

    fn arg(&self, sx: &Sx) -> Result<String, PddlError> {
        let a = sx.atom().ok_or_else(|| self.err(sx, "expected a variable or object name"))?;
        if a.starts_with('?') {
            if !self.vars.iter().any(|p| p.name == a) {
                return Err(self.err(sx, format!("undeclared variable {a}")));
            }
        } else if !self.objects.iter().any(|(o, _)| o == a) {
            return Err(self.err(sx, format!("undeclared object {a}")));
        }
        Ok(a.to_string())
    }

    fn fluent_ref(&self, sx: &Sx) -> Result<FluentRef, PddlError> {
        match sx {
            Sx::Atom { text, .. } => match self.dom.function(text) {
                Some(sig) if sig.params.is_empty() => Ok(FluentRef { name: text.clone(), args: vec![] }),
                Some(_) => Err(self.err(sx, format!("function {text} expects arguments"))),
                None => Err(self.err(sx, format!("undeclared function symbol {text}"))),
            },
            Sx::List { items, .. } => {
                let name = items.first().and_then(Sx::atom).ok_or_else(|| self.err(sx, "expected a function application"))?;
                let sig = self.dom.function(name).ok_or_else(|| self.err(sx, format!("undeclared function symbol {name}")))?;
                if sig.params.len() != items.len() - 1 {
                    return Err(self.err(sx, format!("function {name} expects {} arguments", sig.params.len())));
                }
                let args = items[1..].iter().map(|a| self.arg(a)).collect::<Result<_, _>>()?;
                Ok(FluentRef { name: name.to_string(), args })
            }
        }
    }

    fn expr(&self, sx: &Sx, allow_time: bool) -> Result<NumExpr, PddlError> {
        match sx {
            Sx::Atom { text, .. } => {
                if let Some(r) = parse_decimal(text) {
                    return Ok(NumExpr::Const(r));
                }
                match text.to_ascii_lowercase().as_str() {
                    "#t" if allow_time => Ok(NumExpr::Time),
                    "#t" => Err(self.err(sx, "#t outside a continuous effect")),
                    "?duration" if self.durative => Ok(NumExpr::Duration),
                    _ => self.fluent_ref(sx).map(NumExpr::Fluent),
                }
            }
            Sx::List { items, .. } => {
                let Some(head) = items.first().and_then(Sx::atom) else {
                    return Err(self.err(sx, "expected a numeric expression"));
                };
                if items.len() == 1 {
                    if let Some(r) = parse_decimal(head) {
                        return Ok(NumExpr::Const(r));
                    }
                }
                let sub = |i: usize| self.expr(&items[i], allow_time).map(Box::new);
                let nary = |mk: fn(Box<NumExpr>, Box<NumExpr>) -> NumExpr| -> Result<NumExpr, PddlError> {
                    if items.len() < 3 {
                        return Err(self.err(sx, format!("operator {head} expects at least two operands")));
                    }
                    let mut e = *sub(1)?;
                    for i in 2..items.len() {
                        e = mk(Box::new(e), sub(i)?);
                    }
                    Ok(e)
                };
                let unary = |mk: fn(Box<NumExpr>) -> NumExpr| -> Result<NumExpr, PddlError> {
                    if items.len() != 2 {
                        return Err(self.err(sx, format!("operator {head} expects one operand")));
                    }
                    Ok(mk(sub(1)?))
                };
                match head {
                    "+" => nary(NumExpr::Add),
                    "*" => nary(NumExpr::Mul),
                    "-" if items.len() == 2 => unary(NumExpr::Neg),
                    "-" if items.len() == 3 => Ok(NumExpr::Sub(sub(1)?, sub(2)?)),
                    "/" if items.len() == 3 => Ok(NumExpr::Div(sub(1)?, sub(2)?)),
                    "-" | "/" => Err(self.err(sx, format!("operator {head} expects two operands"))),
                    "sqrt" => unary(NumExpr::Sqrt),
                    "sq" => unary(NumExpr::Sq),
                    "^" => {
                        if items.len() == 3 && items[2].atom() == Some("2") {
                            Ok(NumExpr::Sq(sub(1)?))
                        } else {
                            Err(self.err(sx, "only squaring (^ e 2) is supported"))
                        }
                    }
                    _ => self.fluent_ref(sx).map(NumExpr::Fluent),
                }
            }
        }
    }

    fn literal(&self, sx: &Sx, neg: bool) -> Result<Literal, PddlError> {
        let (name, args) = match sx {
            Sx::Atom { text, .. } => (text.as_str(), &[][..]),
            Sx::List { items, .. } => {
                let n = items.first().and_then(Sx::atom).ok_or_else(|| self.err(sx, "expected a literal"))?;
                (n, &items[1..])
            }
        };
        let sig = self.dom.predicate(name).ok_or_else(|| self.err(sx, format!("undeclared predicate {name}")))?;
        if sig.params.len() != args.len() {
            return Err(self.err(sx, format!("predicate {name} expects {} arguments", sig.params.len())));
        }
        let args = args.iter().map(|a| self.arg(a)).collect::<Result<_, _>>()?;
        Ok(Literal { atom: FluentRef { name: name.to_string(), args }, neg })
    }

    fn comparison(&self, sx: &Sx) -> Result<Option<Comparison>, PddlError> {
        let Some(items) = sx.list() else { return Ok(None) };
        let Some(op) = items.first().and_then(Sx::atom).and_then(CmpOp::parse) else { return Ok(None) };
        if items.len() != 3 {
            return Err(self.err(sx, "comparison expects two operands"));
        }
        Ok(Some(Comparison { lhs: self.expr(&items[1], false)?, op, rhs: self.expr(&items[2], false)? }))
    }

    fn conjunct(&self, sx: &Sx) -> Result<Conjunct, PddlError> {
        if sx.head().as_deref() == Some("not") {
            let items = sx.list().unwrap();
            if items.len() != 2 {
                return Err(self.err(sx, "not expects one operand"));
            }
            if let Some(c) = self.comparison(&items[1])? {
                return Ok(Conjunct::Cmp(c.complement()));
            }
            return Ok(Conjunct::Lit(self.literal(&items[1], true)?));
        }
        if let Some(c) = self.comparison(sx)? {
            return Ok(Conjunct::Cmp(c));
        }
        Ok(Conjunct::Lit(self.literal(sx, false)?))
    }

    fn condition(&self, sx: &Sx, timing: Timing, timed_ok: bool, out: &mut Vec<Condition>) -> Result<(), PddlError> {
        let head = sx.head();
        let items = sx.list();
        match head.as_deref() {
            None if items.is_some_and(|i| i.is_empty()) => Ok(()),
            Some("and") => items.unwrap()[1..].iter().try_for_each(|c| self.condition(c, timing, timed_ok, out)),
            Some("at") | Some("over") | Some("overall") => {
                let items = items.unwrap();
                let (tag, body) = match (head.as_deref(), items.get(1).and_then(kw).as_deref()) {
                    (Some("at"), Some("start")) => (Timing::AtStart, items.get(2)),
                    (Some("at"), Some("end")) => (Timing::AtEnd, items.get(2)),
                    (Some("over"), Some("all")) => (Timing::OverAll, items.get(2)),
                    (Some("overall"), _) => (Timing::OverAll, items.get(1)),
                    _ => return Err(self.err(sx, "malformed timing specifier")),
                };
                if !timed_ok {
                    return Err(self.err(sx, "timed condition outside a durative action or process"));
                }
                if timing != Timing::Untimed {
                    return Err(self.err(sx, "nested timing specifier"));
                }
                let body = body.ok_or_else(|| self.err(sx, "timing specifier without a condition"))?;
                self.condition(body, tag, timed_ok, out)
            }
            Some("or") | Some("imply") | Some("exists") | Some("forall") | Some("when") => {
                Err(self.err(sx, format!("unsupported condition construct {}", head.unwrap())))
            }
            _ => {
                let c = self.conjunct(sx)?;
                match out.iter_mut().find(|x| x.timing == timing) {
                    Some(x) => x.conjuncts.push(c),
                    None => out.push(Condition { timing, conjuncts: vec![c] }),
                }
                Ok(())
            }
        }
    }

    fn effect(&self, sx: &Sx, kind: SchemaKind, timing: Option<EffectTiming>, out: &mut Vec<Effect>) -> Result<(), PddlError> {
        let head = sx.head();
        let items = sx.list();
        match head.as_deref() {
            None if items.is_some_and(|i| i.is_empty()) => Ok(()),
            Some("and") => items.unwrap()[1..].iter().try_for_each(|e| self.effect(e, kind, timing, out)),
            Some("at") => {
                let items = items.unwrap();
                let tag = match items.get(1).and_then(kw).as_deref() {
                    Some("start") => EffectTiming::AtStart,
                    Some("end") => EffectTiming::AtEnd,
                    _ => return Err(self.err(sx, "malformed timing specifier")),
                };
                if kind != SchemaKind::Durative {
                    return Err(self.err(sx, "timed effect outside a durative action"));
                }
                if timing.is_some() {
                    return Err(self.err(sx, "nested timing specifier"));
                }
                let body = items.get(2).ok_or_else(|| self.err(sx, "timing specifier without an effect"))?;
                self.effect(body, kind, Some(tag), out)
            }
            Some("increase") | Some("decrease") | Some("assign") => {
                let items = items.unwrap();
                if items.len() != 3 {
                    return Err(self.err(sx, "numeric effect expects a fluent and an expression"));
                }
                let op = match head.as_deref() {
                    Some("increase") => NumOp::Increase,
                    Some("decrease") => NumOp::Decrease,
                    _ => NumOp::Assign,
                };
                let fluent = self.fluent_ref(&items[1])?;
                let expr = self.expr(&items[2], true)?;
                let continuous = expr.mentions_time();
                let t = if continuous {
                    if op == NumOp::Assign {
                        return Err(self.err(sx, "assign effects cannot be continuous"));
                    }
                    match kind {
                        SchemaKind::Durative | SchemaKind::Process if timing.is_none() => EffectTiming::Continuous,
                        SchemaKind::Durative => return Err(self.err(sx, "continuous effect under a timing specifier")),
                        _ => return Err(self.err(sx, "continuous effect on an instantaneous action or event")),
                    }
                } else {
                    match kind {
                        SchemaKind::Process => return Err(self.err(sx, "process effects must be continuous")),
                        SchemaKind::Durative => timing.ok_or_else(|| self.err(sx, "untimed discrete effect in a durative action"))?,
                        _ => EffectTiming::Instant,
                    }
                };
                out.push(Effect::Num { timing: t, op, fluent, expr });
                Ok(())
            }
            Some("when") | Some("forall") => Err(self.err(sx, format!("unsupported effect construct {}", head.unwrap()))),
            _ => {
                let lit = match head.as_deref() {
                    Some("not") => {
                        let items = items.unwrap();
                        if items.len() != 2 {
                            return Err(self.err(sx, "not expects one operand"));
                        }
                        self.literal(&items[1], true)?
                    }
                    _ => self.literal(sx, false)?,
                };
                let t = match kind {
                    SchemaKind::Process => return Err(self.err(sx, "process effects must be continuous")),
                    SchemaKind::Durative => timing.ok_or_else(|| self.err(sx, "untimed discrete effect in a durative action"))?,
                    _ => EffectTiming::Instant,
                };
                out.push(Effect::Lit { timing: t, lit });
                Ok(())
            }
        }
    }
}

/// `a b - t c` style lists; untyped names default to `object`.
fn typed_list(file: &str, items: &[Sx], dom: Option<&DomainModel>) -> Result<Vec<(String, String)>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let sx = &items[i];
        let a = sx.atom().ok_or_else(|| err(file, sx, "expected a name"))?;
        if a == "-" {
            let t = items.get(i + 1).ok_or_else(|| err(file, sx, "missing type after '-'"))?;
            let tname = t.atom().ok_or_else(|| err(file, t, "unsupported type expression"))?;
            if let Some(d) = dom {
                if !d.has_type(tname) {
                    return Err(err(file, t, format!("unknown type {tname}")));
                }
            }
            for p in pending.drain(..) {
                out.push((p, tname.to_string()));
            }
            i += 2;
            continue;
        }
        pending.push(a.to_string());
        i += 1;
    }
    for p in pending {
        out.push((p, "object".to_string()));
    }
    Ok(out)
}

fn params(file: &str, sx: &Sx, dom: &DomainModel) -> Result<Vec<Param>, PddlError> {
    let items = sx.list().ok_or_else(|| err(file, sx, "expected a parameter list"))?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, (name, ty)) in typed_list(file, items, Some(dom))?.into_iter().enumerate() {
        if !name.starts_with('?') {
            return Err(err(file, &items[i.min(items.len() - 1)], format!("parameter {name} must start with '?'")));
        }
        if !seen.insert(name.clone()) {
            return Err(err(file, sx, format!("duplicate parameter {name}")));
        }
        out.push(Param { name, ty });
    }
    Ok(out)
}

fn signatures(file: &str, items: &[Sx], dom: &DomainModel) -> Result<Vec<Signature>, PddlError> {
    let mut out: Vec<Signature> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let sx = &items[i];
        if sx.atom() == Some("-") {
            // `- number` result type of functions
            match items.get(i + 1).and_then(Sx::atom) {
                Some("number") => {
                    i += 2;
                    continue;
                }
                _ => return Err(err(file, sx, "only numeric functions are supported")),
            }
        }
        let l = sx.list().ok_or_else(|| err(file, sx, "expected a declaration"))?;
        let name = l.first().and_then(Sx::atom).ok_or_else(|| err(file, sx, "expected a symbol name"))?;
        if out.iter().any(|s| s.name == name) {
            return Err(err(file, sx, format!("duplicate declaration of {name}")));
        }
        let ps = typed_list(file, &l[1..], Some(dom))?.into_iter().map(|(name, ty)| Param { name, ty }).collect();
        out.push(Signature { name: name.to_string(), params: ps });
        i += 1;
    }
    Ok(out)
}

pub fn parse_domain(text: &str) -> Result<DomainModel, PddlError> {
    parse_domain_named("<domain>", text)
}

pub fn parse_domain_named(file: &str, text: &str) -> Result<DomainModel, PddlError> {
    let top = read(file, text)?;
    let items = top.list().unwrap();
    if items.first().and_then(kw).as_deref() != Some("define") {
        return Err(err(file, &top, "expected (define (domain ...) ...)"));
    }
    let name = match items.get(1) {
        Some(h) if h.head().as_deref() == Some("domain") => {
            h.list().unwrap().get(1).and_then(Sx::atom).ok_or_else(|| err(file, h, "missing domain name"))?.to_string()
        }
        _ => return Err(err(file, &top, "expected (domain <name>)")),
    };
    let mut dom = DomainModel {
        name,
        requirements: vec![],
        types: vec![],
        constants: vec![],
        predicates: vec![],
        functions: vec![],
        schemas: vec![],
    };
    let sections = &items[2..];
    // Declarations first, so schemas may precede them in the file.
    for pass in ["types", "rest"] {
        for s in sections {
            let head = s.head().ok_or_else(|| err(file, s, "expected a section"))?;
            let body = &s.list().unwrap()[1..];
            match (pass, head.as_str()) {
                ("types", ":requirements") => {
                    for r in body {
                        let k = kw(r).ok_or_else(|| err(file, r, "expected a requirement flag"))?;
                        if !REQUIREMENTS.contains(&k.as_str()) {
                            return Err(err(file, r, format!("unsupported requirement {k}")));
                        }
                        dom.requirements.push(k);
                    }
                }
                ("types", ":types") => {
                    for (t, p) in typed_list(file, body, None)? {
                        if t != "object" {
                            dom.types.push((t, p));
                        }
                    }
                    for (t, p) in &dom.types {
                        if !dom.has_type(p) {
                            return Err(err(file, s, format!("type {t} has unknown parent {p}")));
                        }
                    }
                }
                ("rest", ":constants") => dom.constants = typed_list(file, body, Some(&dom))?,
                ("rest", ":predicates") => dom.predicates = signatures(file, body, &dom)?,
                ("rest", ":functions") => dom.functions = signatures(file, body, &dom)?,
                ("types", _) | ("rest", ":requirements") | ("rest", ":types") => {}
                ("rest", ":action") | ("rest", ":durative-action") | ("rest", ":process") | ("rest", ":event") => {}
                (_, other) => return Err(err(file, s, format!("unsupported section {other}"))),
            }
        }
    }
    for s in sections {
        let kind = match s.head().as_deref() {
            Some(":action") => SchemaKind::Action,
            Some(":durative-action") => SchemaKind::Durative,
            Some(":process") => SchemaKind::Process,
            Some(":event") => SchemaKind::Event,
            _ => continue,
        };
        let schema = parse_schema(file, s, kind, &dom)?;
        if dom.schemas.iter().any(|x| x.name == schema.name) {
            return Err(err(file, s, format!("duplicate schema {}", schema.name)));
        }
        dom.schemas.push(schema);
    }
    Ok(dom)
}

fn parse_schema(file: &str, sx: &Sx, kind: SchemaKind, dom: &DomainModel) -> Result<Schema, PddlError> {
    let items = sx.list().unwrap();
    let name = items.get(1).and_then(Sx::atom).ok_or_else(|| err(file, sx, "missing schema name"))?.to_string();
    let mut fields: Vec<(String, &Sx)> = Vec::new();
    let mut i = 2;
    while i < items.len() {
        let k = kw(&items[i]).filter(|k| k.starts_with(':')).ok_or_else(|| err(file, &items[i], format!("expected a keyword in {name}")))?;
        let v = items.get(i + 1).ok_or_else(|| err(file, &items[i], format!("missing value for {k} in {name}")))?;
        fields.push((k, v));
        i += 2;
    }
    let get = |k: &str| fields.iter().find(|(f, _)| f == k).map(|(_, v)| *v);
    for (k, v) in &fields {
        let ok = matches!(k.as_str(), ":parameters" | ":effect")
            || (k == ":precondition" && matches!(kind, SchemaKind::Action | SchemaKind::Event | SchemaKind::Process))
            || (k == ":condition" && matches!(kind, SchemaKind::Durative | SchemaKind::Process))
            || (k == ":duration" && kind == SchemaKind::Durative);
        if !ok {
            return Err(err(file, v, format!("unexpected field {k} in {name}")));
        }
    }
    let ps = match get(":parameters") {
        Some(p) => params(file, p, dom)?,
        None => vec![],
    };
    let ctx = Ctx { file, dom, vars: ps.clone(), objects: &dom.constants, durative: kind == SchemaKind::Durative };
    let mut conditions = Vec::new();
    if let Some(c) = get(":precondition").or_else(|| get(":condition")) {
        let timed = matches!(kind, SchemaKind::Durative | SchemaKind::Process);
        ctx.condition(c, Timing::Untimed, timed, &mut conditions)?;
        if kind == SchemaKind::Durative && conditions.iter().any(|c| c.timing == Timing::Untimed) {
            return Err(err(file, c, format!("untimed condition in durative action {name}")));
        }
        if kind == SchemaKind::Process && conditions.iter().any(|c| matches!(c.timing, Timing::AtStart | Timing::AtEnd)) {
            return Err(err(file, c, format!("process {name} only admits over all conditions")));
        }
    }
    let Some(e) = get(":effect") else {
        return Err(err(file, sx, format!("{} {name} is missing :effect", &kind.keyword()[1..])));
    };
    let mut effects = Vec::new();
    ctx.effect(e, kind, None, &mut effects)?;
    let duration = match (kind, get(":duration")) {
        (SchemaKind::Durative, None) => return Err(err(file, sx, format!("durative action {name} is missing :duration"))),
        (SchemaKind::Durative, Some(d)) => {
            let l = d.list().filter(|l| l.len() == 3).ok_or_else(|| err(file, d, format!("durative action {name} needs exactly one duration constraint")))?;
            let op = l[0].atom().and_then(CmpOp::parse).filter(|o| *o != CmpOp::Ne);
            let op = op.ok_or_else(|| err(file, d, format!("durative action {name} needs exactly one duration constraint")))?;
            if l[1].atom().map(str::to_ascii_lowercase).as_deref() != Some("?duration") {
                return Err(err(file, &l[1], "duration constraint must constrain ?duration"));
            }
            let rhs = ctx.expr(&l[2], false)?;
            if rhs.any(&|x| matches!(x, NumExpr::Duration)) {
                return Err(err(file, &l[2], "duration bound refers to ?duration"));
            }
            Some((op, rhs))
        }
        _ => None,
    };
    Ok(Schema { kind, name, params: ps, conditions, effects, duration })
}

pub fn parse_problem(text: &str, dom: &DomainModel) -> Result<PlanningInstance, PddlError> {
    parse_problem_named("<problem>", text, dom)
}

pub fn parse_problem_named(file: &str, text: &str, dom: &DomainModel) -> Result<PlanningInstance, PddlError> {
    let top = read(file, text)?;
    let items = top.list().unwrap();
    if items.first().and_then(kw).as_deref() != Some("define") {
        return Err(err(file, &top, "expected (define (problem ...) ...)"));
    }
    let problem = match items.get(1) {
        Some(h) if h.head().as_deref() == Some("problem") => {
            h.list().unwrap().get(1).and_then(Sx::atom).ok_or_else(|| err(file, h, "missing problem name"))?.to_string()
        }
        _ => return Err(err(file, &top, "expected (problem <name>)")),
    };
    let mut inst = PlanningInstance {
        domain: dom.clone(),
        problem,
        objects: vec![],
        init_facts: vec![],
        init_values: vec![],
        goal: vec![],
    };
    let sections = &items[2..];
    let mut domain_seen = false;
    for s in sections {
        let head = s.head().ok_or_else(|| err(file, s, "expected a section"))?;
        let body = &s.list().unwrap()[1..];
        match head.as_str() {
            ":domain" => {
                let d = body.first().and_then(Sx::atom).ok_or_else(|| err(file, s, "missing domain name"))?;
                if d != dom.name {
                    return Err(err(file, s, format!("problem is for domain {d}, not {}", dom.name)));
                }
                domain_seen = true;
            }
            ":objects" => {
                for (k, (o, t)) in typed_list(file, body, None)?.into_iter().enumerate() {
                    if !dom.has_type(&t) {
                        let at = body.iter().rev().find(|x| x.atom() == Some(t.as_str())).unwrap_or(&body[k.min(body.len() - 1)]);
                        return Err(err(file, at, format!("unknown object type {t}")));
                    }
                    if inst.all_objects().any(|(x, _)| *x == o) {
                        return Err(err(file, s, format!("duplicate object {o}")));
                    }
                    inst.objects.push((o, t));
                }
            }
            ":init" | ":goal" => {}
            other => return Err(err(file, s, format!("unsupported section {other}"))),
        }
    }
    if !domain_seen {
        return Err(err(file, &top, "missing (:domain ...)"));
    }
    let objects: Vec<(String, String)> = inst.all_objects().cloned().collect();
    let ctx = Ctx { file, dom, vars: vec![], objects: &objects, durative: false };
    for s in sections {
        let body = &s.list().unwrap()[1..];
        match s.head().as_deref() {
            Some(":init") => {
                for fact in body {
                    if fact.head().as_deref() == Some("=") {
                        let l = fact.list().unwrap();
                        if l.len() != 3 {
                            return Err(err(file, fact, "init assignment expects a fluent and a value"));
                        }
                        let f = ctx.fluent_ref(&l[1])?;
                        let v = match ctx.expr(&l[2], false)? {
                            NumExpr::Const(r) => r,
                            NumExpr::Neg(b) if matches!(*b, NumExpr::Const(_)) => match *b {
                                NumExpr::Const(r) => -r,
                                _ => unreachable!(),
                            },
                            _ => return Err(err(file, &l[2], "init value must be a number")),
                        };
                        if inst.init_values.iter().any(|(g, _)| *g == f) {
                            return Err(err(file, fact, format!("duplicate init assignment for {f}")));
                        }
                        inst.init_values.push((f, v));
                    } else if fact.head().as_deref() == Some("at") {
                        return Err(err(file, fact, "timed initial literals are not supported"));
                    } else {
                        let lit = ctx.literal(fact, false)?;
                        if !inst.init_facts.contains(&lit.atom) {
                            inst.init_facts.push(lit.atom);
                        }
                    }
                }
            }
            Some(":goal") => {
                let g = body.first().ok_or_else(|| err(file, s, "missing goal condition"))?;
                let mut conds = Vec::new();
                ctx.condition(g, Timing::Untimed, false, &mut conds)?;
                inst.goal = conds.into_iter().flat_map(|c| c.conjuncts).collect();
            }
            _ => {}
        }
    }
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::int;

    const THERMO: &str = "(define (domain thermostat)
 (:requirements :fluents :time :typing)
 (:types thermostat room)
 (:predicates (isOff ?t - thermostat) (isOn ?t - thermostat))
 (:functions (x ?r - room))
 (:process off
  :parameters (?t - thermostat ?r - room )
  :condition (and (overall (>= (x ?r) 18)) (isOff ?t))
  :effect
   (and
    (decrease (x ?r) (* #t (* (x ?r) (-0.1)))))
  )
 (:action switchOff
  :parameters (?t - thermostat ?r - room )
  :precondition (and (isOn ?t) (> (x ?r) 21))
  :effect
   (and (isOff ?t) (not (isOn ?t)))
  ))";

    #[test]
    fn thermostat_process() {
        let d = parse_domain(THERMO).unwrap();
        let off = d.schema("off").unwrap();
        assert_eq!(off.kind, SchemaKind::Process);
        let c: Vec<_> = off.conjuncts(Timing::OverAll).collect();
        assert_eq!(
            c,
            vec![&Conjunct::Cmp(Comparison {
                lhs: NumExpr::Fluent(FluentRef::new("x", &["?r"])),
                op: CmpOp::Ge,
                rhs: NumExpr::Const(int(18))
            })]
        );
        assert_eq!(off.effects.len(), 1);
        assert!(matches!(&off.effects[0], Effect::Num { timing: EffectTiming::Continuous, op: NumOp::Decrease, .. }));
        assert!(time_only_in_continuous_effects(&d));
    }

    #[test]
    fn missing_effect_names_the_action() {
        let src = "(define (domain d)\n (:predicates (p))\n (:action go\n  :parameters ()\n  :precondition (p)))";
        let e = parse_domain_named("d.pddl", src).unwrap_err();
        assert_eq!(e.to_string(), "d.pddl:3:2: action go is missing :effect");
    }

    #[test]
    fn time_outside_continuous_effect_is_rejected() {
        let src = "(define (domain d) (:functions (f)) (:action a :parameters () :precondition (> (f) #t) :effect (and)))";
        assert!(parse_domain(src).unwrap_err().message.contains("#t"));
        let src = "(define (domain d) (:functions (f)) (:action a :parameters () :effect (increase (f) (* #t 1))))";
        assert!(parse_domain(src).unwrap_err().message.contains("continuous"));
    }

    #[test]
    fn unsupported_requirement() {
        let src = "(define (domain d) (:requirements :preferences))";
        assert!(parse_domain(src).unwrap_err().message.contains("unsupported requirement"));
    }

    #[test]
    fn problem_errors() {
        let d = parse_domain(THERMO).unwrap();
        let p = "(define (problem p) (:domain thermostat) (:objects r1 - kitchen))";
        assert!(parse_problem(p, &d).unwrap_err().message.contains("unknown object type kitchen"));
        let p = "(define (problem p) (:domain thermostat) (:objects r1 - room) (:init (= (y r1) 3)))";
        assert!(parse_problem(p, &d).unwrap_err().message.contains("undeclared function symbol y"));
        let p = "(define (problem p) (:domain thermostat) (:objects r1 - room) (:init (= (x r1) 3) (= (x r1) 4)))";
        assert!(parse_problem(p, &d).unwrap_err().message.contains("duplicate init"));
        let p = "(define (problem p) (:domain thermostat))";
        let i = parse_problem(p, &d).unwrap();
        assert!(i.objects.is_empty() && i.goal.is_empty());
    }
}
