//! Reader for the textual rule format printed by `Rule`'s `Display`.

use super::{ArithOp, Atom, BodyLit, CaspError, CaspProgram, ChoiceElem, Head, NumFn, Rule, Term};
use crate::num::parse_decimal;
use crate::rel::CmpOp;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Var(String),
    Num(String),
    Punct(&'static str),
    Not,
    Eof,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

const PUNCTS: [&str; 22] = [
    ":-", "..", "<=", ">=", "!=", "<>", "==", "(", ")", ",", ".", ":", ";", "{", "}", "[", "]", "/", "+", "-", "*", "=",
];

impl<'a> Lexer<'a> {
    fn bump(&mut self) {
        if self.src[self.pos] == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        self.pos += 1;
    }

    fn peek_at(&self, off: usize) -> Option<u8> {
        self.src.get(self.pos + off).copied()
    }

    fn next(&mut self) -> Result<(Tok, usize, usize), CaspError> {
        loop {
            match self.peek_at(0) {
                Some(c) if c.is_ascii_whitespace() => self.bump(),
                Some(b'%') => {
                    while self.peek_at(0).is_some_and(|c| c != b'\n') {
                        self.bump();
                    }
                }
                _ => break,
            }
        }
        let (line, col) = (self.line, self.col);
        let Some(c) = self.peek_at(0) else { return Ok((Tok::Eof, line, col)) };
        if c.is_ascii_digit() {
            let start = self.pos;
            while self.peek_at(0).is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
            }
            if self.peek_at(0) == Some(b'.') && self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
                while self.peek_at(0).is_some_and(|c| c.is_ascii_digit()) {
                    self.bump();
                }
            }
            let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
            return Ok((Tok::Num(s), line, col));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = self.pos;
            loop {
                match self.peek_at(0) {
                    Some(c) if c.is_ascii_alphanumeric() || c == b'_' => self.bump(),
                    // decimal literals embedded in generated names, e.g. v_final_18.75
                    Some(b'.')
                        if self.pos > start
                            && self.src[self.pos - 1].is_ascii_digit()
                            && self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) =>
                    {
                        self.bump()
                    }
                    _ => break,
                }
            }
            let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
            if s == "not" {
                return Ok((Tok::Not, line, col));
            }
            let first = s.as_bytes()[0];
            return Ok((if first.is_ascii_uppercase() || first == b'_' { Tok::Var(s) } else { Tok::Ident(s) }, line, col));
        }
        for p in PUNCTS {
            if self.src[self.pos..].starts_with(p.as_bytes()) {
                for _ in 0..p.len() {
                    self.bump();
                }
                return Ok((Tok::Punct(p), line, col));
            }
        }
        for p in ["<", ">"] {
            if self.src[self.pos..].starts_with(p.as_bytes()) {
                self.bump();
                return Ok((Tok::Punct(if p == "<" { "<" } else { ">" }), line, col));
            }
        }
        Err(CaspError::Parse { line, col, msg: format!("unexpected character '{}'", c as char) })
    }
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    i: usize,
}

fn rel_of(p: &str) -> Option<CmpOp> {
    CmpOp::parse(p)
}

impl Parser {
    fn new(src: &str) -> Result<Parser, CaspError> {
        let mut lx = Lexer { src: src.as_bytes(), pos: 0, line: 1, col: 1 };
        let mut toks = Vec::new();
        loop {
            let t = lx.next()?;
            let eof = t.0 == Tok::Eof;
            toks.push(t);
            if eof {
                break;
            }
        }
        Ok(Parser { toks, i: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }
    fn peek2(&self) -> &Tok {
        &self.toks[(self.i + 1).min(self.toks.len() - 1)].0
    }
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, CaspError> {
        let (_, line, col) = self.toks[self.i];
        Err(CaspError::Parse { line, col, msg: msg.into() })
    }
    fn advance(&mut self) -> Tok {
        let t = self.toks[self.i].0.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }
    fn is(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }
    fn eat(&mut self, p: &str) -> bool {
        if self.is(p) {
            self.advance();
            true
        } else {
            false
        }
    }
    fn expect(&mut self, p: &str) -> Result<(), CaspError> {
        if self.eat(p) {
            Ok(())
        } else {
            self.err(format!("expected '{p}', found {:?}", self.peek()))
        }
    }
    fn peek_rel(&self) -> Option<CmpOp> {
        match self.peek() {
            Tok::Punct(p) => rel_of(p),
            _ => None,
        }
    }

    fn program(&mut self) -> Result<CaspProgram, CaspError> {
        let mut prog = CaspProgram::new();
        while *self.peek() != Tok::Eof {
            prog.push(self.statement()?);
        }
        Ok(prog)
    }

    fn statement(&mut self) -> Result<Rule, CaspError> {
        if self.eat(":-") {
            let body = self.body()?;
            self.expect(".")?;
            return Ok(Rule::denial(body));
        }
        let head = self.head()?;
        let body = if self.eat(":-") { self.body()? } else { vec![] };
        self.expect(".")?;
        Ok(Rule { head, body, note: None })
    }

    fn bound(&mut self) -> Result<Option<u64>, CaspError> {
        if let Tok::Num(n) = self.peek().clone() {
            self.advance();
            return n.parse::<u64>().map(Some).or_else(|_| self.err("bad choice bound"));
        }
        Ok(None)
    }

    fn head(&mut self) -> Result<Head, CaspError> {
        let is_choice = self.is("{") || (matches!(self.peek(), Tok::Num(_)) && matches!(self.peek2(), Tok::Punct("{")));
        if !is_choice {
            return Ok(Head::Atom(self.literal()?));
        }
        let lb = self.bound()?;
        self.expect("{")?;
        let mut elems = Vec::new();
        if !self.is("}") {
            loop {
                let atom = self.literal()?;
                let mut cond = Vec::new();
                if self.eat(":") {
                    loop {
                        cond.push(self.body_lit()?);
                        if !self.eat(",") {
                            break;
                        }
                    }
                }
                elems.push(ChoiceElem { atom, cond });
                if !self.eat(";") {
                    break;
                }
            }
        }
        self.expect("}")?;
        let ub = self.bound()?;
        Ok(Head::Choice { lb, ub, elems })
    }

    fn body(&mut self) -> Result<Vec<BodyLit>, CaspError> {
        let mut b = vec![self.body_lit()?];
        while self.eat(",") {
            b.push(self.body_lit()?);
        }
        Ok(b)
    }

    fn body_lit(&mut self) -> Result<BodyLit, CaspError> {
        if matches!(self.peek(), Tok::Not) {
            self.advance();
            return Ok(BodyLit::Neg(self.literal()?));
        }
        let t = self.expr()?;
        if let Some(op) = self.peek_rel() {
            self.advance();
            let r = self.expr()?;
            return Ok(BodyLit::Guard(op, t, r));
        }
        Ok(BodyLit::Pos(self.atom_of(t)?))
    }

    fn atom_of(&self, t: Term) -> Result<Atom, CaspError> {
        match t {
            Term::Sym(s) => Ok(Atom { pred: s, args: vec![], neg: false }),
            Term::Func(s, a) => Ok(Atom { pred: s, args: a, neg: false }),
            Term::Arith(ArithOp::Neg, mut a) if a.len() == 1 => {
                let mut at = self.atom_of(a.pop().unwrap())?;
                if at.neg {
                    return self.err("double classical negation");
                }
                at.neg = true;
                Ok(at)
            }
            t => self.err(format!("expected an atom, found term {t}")),
        }
    }

    fn literal(&mut self) -> Result<Atom, CaspError> {
        let neg = self.eat("-");
        let name = match self.advance() {
            Tok::Ident(s) => s,
            t => return self.err(format!("expected a predicate name, found {t:?}")),
        };
        let args = if self.eat("(") { self.args()? } else { vec![] };
        Ok(Atom { pred: name, args, neg })
    }

    fn args(&mut self) -> Result<Vec<Term>, CaspError> {
        let mut a = Vec::new();
        if self.eat(")") {
            return Ok(a);
        }
        loop {
            let t = self.expr()?;
            let t = if let Some(op) = self.peek_rel() {
                self.advance();
                let r = self.expr()?;
                Term::Rel(op, Box::new(t), Box::new(r))
            } else {
                t
            };
            a.push(t);
            if self.eat(")") {
                return Ok(a);
            }
            self.expect(",")?;
        }
    }

    fn expr(&mut self) -> Result<Term, CaspError> {
        let l = self.additive()?;
        if self.eat("..") {
            let r = self.additive()?;
            return Ok(Term::Range(Box::new(l), Box::new(r)));
        }
        Ok(l)
    }

    fn additive(&mut self) -> Result<Term, CaspError> {
        let mut l = self.multiplicative()?;
        loop {
            if self.eat("+") {
                l = Term::Arith(ArithOp::Add, vec![l, self.multiplicative()?]);
            } else if self.eat("-") {
                l = Term::Arith(ArithOp::Sub, vec![l, self.multiplicative()?]);
            } else {
                return Ok(l);
            }
        }
    }

    fn multiplicative(&mut self) -> Result<Term, CaspError> {
        let mut l = self.unary()?;
        loop {
            if self.eat("*") {
                l = Term::Arith(ArithOp::Mul, vec![l, self.unary()?]);
            } else if self.eat("/") {
                l = Term::Arith(ArithOp::Div, vec![l, self.unary()?]);
            } else {
                return Ok(l);
            }
        }
    }

    fn unary(&mut self) -> Result<Term, CaspError> {
        if self.eat("-") {
            let t = self.unary()?;
            return Ok(match t {
                Term::Num(r) => Term::Num(-r),
                t => Term::Arith(ArithOp::Neg, vec![t]),
            });
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Term, CaspError> {
        match self.advance() {
            Tok::Num(n) => match parse_decimal(&n) {
                Some(r) => Ok(Term::Num(r)),
                None => self.err("bad number"),
            },
            Tok::Var(v) => Ok(Term::Var(v)),
            Tok::Ident(name) => {
                if !self.is("(") {
                    return Ok(Term::Sym(name));
                }
                self.advance();
                if name == "sum" && self.is("[") {
                    return self.aggregate();
                }
                let args = self.args()?;
                let arith = match name.as_str() {
                    "sqrt" if args.len() == 1 => Some(ArithOp::Sqrt),
                    "sq" if args.len() == 1 => Some(ArithOp::Sq),
                    n => NumFn::from_name(n).filter(|g| g.arity() == args.len()).map(ArithOp::Fn),
                };
                Ok(match arith {
                    Some(op) => Term::Arith(op, args),
                    None => Term::Func(name, args),
                })
            }
            Tok::Punct("(") => {
                let t = self.expr()?;
                self.expect(")")?;
                Ok(t)
            }
            t => self.err(format!("unexpected token {t:?}")),
        }
    }

    fn aggregate(&mut self) -> Result<Term, CaspError> {
        self.expect("[")?;
        let selector = match self.advance() {
            Tok::Ident(name) => {
                let args = if self.eat("(") { self.args()? } else { vec![] };
                Term::func(&name, args)
            }
            _ => return self.err("expected selector relation"),
        };
        self.expect("/")?;
        let arity = match self.advance() {
            Tok::Num(n) => n.parse::<usize>().or_else(|_| self.err("bad arity"))?,
            _ => return self.err("expected selector arity"),
        };
        self.expect("]")?;
        self.expect(",")?;
        let op = match self.peek_rel() {
            Some(op) => {
                self.advance();
                op
            }
            None => return self.err("expected comparison in sum"),
        };
        self.expect(",")?;
        let target = self.expr()?;
        self.expect(")")?;
        Ok(Term::Agg { selector: Box::new(selector), arity, op, target: Box::new(target) })
    }
}

/// Parses a program in dump syntax.
pub fn parse_program(src: &str) -> Result<CaspProgram, CaspError> {
    Parser::new(src)?.program()
}

/// Parses a single term (relations allowed at top level).
pub fn parse_term(src: &str) -> Result<Term, CaspError> {
    let mut p = Parser::new(src)?;
    let t = p.expr()?;
    let t = if let Some(op) = p.peek_rel() {
        p.advance();
        Term::Rel(op, Box::new(t), Box::new(p.expr()?))
    } else {
        t
    };
    if *p.peek() != Tok::Eof {
        return p.err("trailing input");
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round(src: &str) {
        let p = parse_program(src).unwrap();
        let printed = p.dump();
        let again = parse_program(&printed).unwrap();
        assert_eq!(p, again, "{printed}");
    }

    #[test]
    fn round_trips_typical_rules() {
        round("step(0..3).");
        round("required(tend(I) >= tstart(I)) :- step(I).");
        round("holds(F,I2) :- fluent(F), step(I1), step(I2), I2 = I1+1, holds(F,I1), not -holds(F,I2).");
        round("1{ occurs(end(d),I2) : step(I2), I2 > I1, I2 < last_step }1 :- occurs(start(d),I1).");
        round(":- step(I), I < last_step, not some_action(I).");
        round("required(sum([decr(fuel_level,I)/3],=,v(contrib(fuel_level,decr),I))) :- step(I).");
        round("required(v(contrib(f,incr,r),I) = 0.8*sqrt(v_initial(l,I))*(tend(I)-tstart(I))-0.16*sq(tend(I)-tstart(I))) :- step(I).");
        round("required(v_final_18.75(fuel_level,2) <= 100) :- holds(inprogr(refuel(tank1)),2).");
        round("required(x = ric_v(1,-0.1,0,tend(1)-tstart(1))).");
        round("{ a; b }.");
    }

    #[test]
    fn reports_position() {
        let e = parse_program("p :- q.\nr :- .").unwrap_err();
        match e {
            CaspError::Parse { line, .. } => assert_eq!(line, 2),
            _ => panic!(),
        }
    }

    #[test]
    fn classical_negation_in_body() {
        let p = parse_program(":- -holds(avail(tk1),I), occurs(a,I).").unwrap();
        match &p.rules[0].body[0] {
            BodyLit::Pos(a) => assert!(a.neg),
            _ => panic!(),
        }
    }
}
