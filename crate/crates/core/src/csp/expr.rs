//! Expressions over indexed CSP variables.
//!
//! `Expr` keeps constants exact so linear parts stay rational through
//! elimination; `Tape` is its compiled form for fast point and interval
//! evaluation.

use crate::casp::{NumFn, NumTerm, Term};
use crate::num::{from_f64, to_f64, Rat};
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet, HashMap};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    C(Rat),
    V(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Sqrt(Box<Expr>),
    Sq(Box<Expr>),
    Fn(NumFn, Vec<Expr>),
}

/// `Σ coef·x + c` with exact coefficients.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Lin {
    pub coef: BTreeMap<usize, Rat>,
    pub c: Rat,
}

impl Lin {
    pub fn constant(c: Rat) -> Lin {
        Lin { coef: BTreeMap::new(), c }
    }
    pub fn var(v: usize) -> Lin {
        Lin { coef: [(v, Rat::one())].into_iter().collect(), c: Rat::zero() }
    }
    pub fn is_constant(&self) -> bool {
        self.coef.is_empty()
    }
    pub fn add_scaled(&mut self, o: &Lin, k: &Rat) {
        if k.is_zero() {
            return;
        }
        for (v, a) in &o.coef {
            let e = self.coef.entry(*v).or_insert_with(Rat::zero);
            *e += a * k;
            if e.is_zero() {
                self.coef.remove(v);
            }
        }
        self.c += &o.c * k;
    }
    pub fn scale(&self, k: &Rat) -> Lin {
        let mut out = Lin::default();
        out.add_scaled(self, k);
        out
    }
    /// Replaces `v` by `def`.
    pub fn substitute(&mut self, v: usize, def: &Lin) {
        if let Some(a) = self.coef.remove(&v) {
            self.add_scaled(def, &a);
        }
    }
    pub fn to_expr(&self) -> Expr {
        let mut e: Option<Expr> = None;
        for (v, a) in &self.coef {
            let t = if a.is_one() { Expr::V(*v) } else { Expr::Mul(Box::new(Expr::C(a.clone())), Box::new(Expr::V(*v))) };
            e = Some(match e {
                None => t,
                Some(p) => Expr::Add(Box::new(p), Box::new(t)),
            });
        }
        match e {
            None => Expr::C(self.c.clone()),
            Some(p) if self.c.is_zero() => p,
            Some(p) => Expr::Add(Box::new(p), Box::new(Expr::C(self.c.clone()))),
        }
    }
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coef.iter().map(|(v, a)| to_f64(a) * x[*v]).sum::<f64>() + to_f64(&self.c)
    }
}

fn exact_sqrt(r: &Rat) -> Option<Rat> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer().sqrt();
    let d = r.denom().sqrt();
    (&n * &n == *r.numer() && &d * &d == *r.denom()).then(|| Rat::new(n, d))
}

fn b(e: Expr) -> Box<Expr> {
    Box::new(e)
}

impl Expr {
    pub fn from_num(t: &NumTerm, var: &mut dyn FnMut(&Term) -> usize) -> Expr {
        match t {
            NumTerm::Const(r) => Expr::C(r.clone()),
            NumTerm::Var(v) => Expr::V(var(v)),
            NumTerm::Add(x, y) => Expr::Add(b(Expr::from_num(x, var)), b(Expr::from_num(y, var))),
            NumTerm::Sub(x, y) => Expr::Sub(b(Expr::from_num(x, var)), b(Expr::from_num(y, var))),
            NumTerm::Mul(x, y) => Expr::Mul(b(Expr::from_num(x, var)), b(Expr::from_num(y, var))),
            NumTerm::Div(x, y) => Expr::Div(b(Expr::from_num(x, var)), b(Expr::from_num(y, var))),
            NumTerm::Neg(x) => Expr::Neg(b(Expr::from_num(x, var))),
            NumTerm::Sqrt(x) => Expr::Sqrt(b(Expr::from_num(x, var))),
            NumTerm::Sq(x) => Expr::Sq(b(Expr::from_num(x, var))),
            NumTerm::Fn(g, a) => Expr::Fn(*g, a.iter().map(|x| Expr::from_num(x, var)).collect()),
        }
    }

    pub fn as_const(&self) -> Option<&Rat> {
        match self {
            Expr::C(r) => Some(r),
            _ => None,
        }
    }

    /// Constant folding and trivial identities.
    pub fn simplify(self) -> Expr {
        match self {
            Expr::Add(x, y) => match (x.simplify(), y.simplify()) {
                (Expr::C(a), Expr::C(c)) => Expr::C(a + c),
                (Expr::C(a), e) | (e, Expr::C(a)) if a.is_zero() => e,
                (p, q) => Expr::Add(b(p), b(q)),
            },
            Expr::Sub(x, y) => match (x.simplify(), y.simplify()) {
                (Expr::C(a), Expr::C(c)) => Expr::C(a - c),
                (e, Expr::C(a)) if a.is_zero() => e,
                (Expr::C(a), e) if a.is_zero() => Expr::Neg(b(e)),
                (p, q) => Expr::Sub(b(p), b(q)),
            },
            Expr::Mul(x, y) => match (x.simplify(), y.simplify()) {
                (Expr::C(a), Expr::C(c)) => Expr::C(a * c),
                (Expr::C(a), _) | (_, Expr::C(a)) if a.is_zero() => Expr::C(Rat::zero()),
                (Expr::C(a), e) | (e, Expr::C(a)) if a.is_one() => e,
                // a product of equal factors is a square, which keeps its enclosure nonnegative
                (p, q) if p == q => Expr::Sq(b(p)),
                (p, q) => Expr::Mul(b(p), b(q)),
            },
            Expr::Div(x, y) => match (x.simplify(), y.simplify()) {
                (Expr::C(a), Expr::C(c)) if !c.is_zero() => Expr::C(a / c),
                (e, Expr::C(c)) if c.is_one() => e,
                (p, q) => Expr::Div(b(p), b(q)),
            },
            Expr::Neg(x) => match x.simplify() {
                Expr::C(a) => Expr::C(-a),
                Expr::Neg(e) => *e,
                e => Expr::Neg(b(e)),
            },
            Expr::Sqrt(x) => match x.simplify() {
                Expr::C(a) if !a.is_negative() => Expr::C(exact_sqrt(&a).unwrap_or_else(|| from_f64(to_f64(&a).sqrt()))),
                e => Expr::Sqrt(b(e)),
            },
            Expr::Sq(x) => match x.simplify() {
                Expr::C(a) => Expr::C(&a * &a),
                e => Expr::Sq(b(e)),
            },
            Expr::Fn(g, a) => {
                let a: Vec<Expr> = a.into_iter().map(Expr::simplify).collect();
                let zero = |x: &Expr| x.as_const().is_some_and(Rat::is_zero);
                // no force and no speed: the state stays at zero
                if a.len() == 4 && zero(&a[0]) && zero(&a[2]) {
                    return Expr::C(Rat::zero());
                }
                if a.iter().all(|x| x.as_const().is_some()) {
                    let v: Vec<f64> = a.iter().map(|x| to_f64(x.as_const().unwrap())).collect();
                    let r = crate::csp::closed::eval_fn(g, &v);
                    if r.is_finite() {
                        return Expr::C(from_f64(r));
                    }
                }
                Expr::Fn(g, a)
            }
            e => e,
        }
    }

    /// Rewrites the expression as a sum of scaled distinct terms, so that
    /// copies of one nonlinear term cancel or merge.
    pub fn collect(self) -> Expr {
        fn canon(e: Expr) -> Expr {
            match e {
                Expr::Fn(g, a) => Expr::Fn(g, a.into_iter().map(Expr::collect).collect()),
                Expr::Sqrt(x) => Expr::Sqrt(b(x.collect())),
                Expr::Sq(x) => Expr::Sq(b(x.collect())),
                Expr::Mul(x, y) => Expr::Mul(b(x.collect()), b(y.collect())),
                Expr::Div(x, y) => Expr::Div(b(x.collect()), b(y.collect())),
                e => e,
            }
        }
        fn go(e: Expr, k: &Rat, acc: &mut BTreeMap<String, (Expr, Rat)>, c: &mut Rat) {
            match e {
                Expr::C(r) => *c += k * r,
                Expr::Add(x, y) => {
                    go(*x, k, acc, c);
                    go(*y, k, acc, c);
                }
                Expr::Sub(x, y) => {
                    go(*x, k, acc, c);
                    go(*y, &-k, acc, c);
                }
                Expr::Neg(x) => go(*x, &-k, acc, c),
                Expr::Mul(x, y) if x.as_const().is_some() => {
                    let f = x.as_const().unwrap().clone();
                    go(*y, &(k * f), acc, c)
                }
                Expr::Mul(x, y) if y.as_const().is_some() => {
                    let f = y.as_const().unwrap().clone();
                    go(*x, &(k * f), acc, c)
                }
                Expr::Div(x, y) if y.as_const().is_some_and(|d| !d.is_zero()) => {
                    let f = Rat::one() / y.as_const().unwrap();
                    go(*x, &(k * f), acc, c)
                }
                e => {
                    let e = canon(e);
                    let key = format!("{e:?}");
                    let slot = acc.entry(key).or_insert_with(|| (e, Rat::zero()));
                    slot.1 += k;
                }
            }
        }
        let mut acc = BTreeMap::new();
        let mut c = Rat::zero();
        go(self.simplify(), &Rat::one(), &mut acc, &mut c);
        let mut out: Option<Expr> = None;
        for (_, (e, k)) in acc {
            if k.is_zero() {
                continue;
            }
            let t = if k.is_one() { e } else { Expr::Mul(b(Expr::C(k)), b(e)) };
            out = Some(match out {
                None => t,
                Some(p) => Expr::Add(b(p), b(t)),
            });
        }
        match out {
            None => Expr::C(c),
            Some(p) if c.is_zero() => p,
            Some(p) => Expr::Add(b(p), b(Expr::C(c))),
        }
    }

    /// Linear form, if the expression is affine.
    pub fn linear(&self) -> Option<Lin> {
        Some(match self {
            Expr::C(r) => Lin::constant(r.clone()),
            Expr::V(v) => Lin::var(*v),
            Expr::Add(x, y) => {
                let mut l = x.linear()?;
                l.add_scaled(&y.linear()?, &Rat::one());
                l
            }
            Expr::Sub(x, y) => {
                let mut l = x.linear()?;
                l.add_scaled(&y.linear()?, &-Rat::one());
                l
            }
            Expr::Neg(x) => x.linear()?.scale(&-Rat::one()),
            Expr::Mul(x, y) => {
                let (p, q) = (x.linear()?, y.linear()?);
                if p.is_constant() {
                    q.scale(&p.c)
                } else if q.is_constant() {
                    p.scale(&q.c)
                } else {
                    return None;
                }
            }
            Expr::Div(x, y) => {
                let q = y.linear()?;
                if !q.is_constant() || q.c.is_zero() {
                    return None;
                }
                x.linear()?.scale(&(Rat::one() / q.c))
            }
            _ => return None,
        })
    }

    pub fn vars(&self, out: &mut BTreeSet<usize>) {
        match self {
            Expr::C(_) => {}
            Expr::V(v) => {
                out.insert(*v);
            }
            Expr::Add(x, y) | Expr::Sub(x, y) | Expr::Mul(x, y) | Expr::Div(x, y) => {
                x.vars(out);
                y.vars(out);
            }
            Expr::Neg(x) | Expr::Sqrt(x) | Expr::Sq(x) => x.vars(out),
            Expr::Fn(_, a) => a.iter().for_each(|e| e.vars(out)),
        }
    }

    pub fn contains(&self, v: usize) -> bool {
        match self {
            Expr::C(_) => false,
            Expr::V(w) => *w == v,
            Expr::Add(x, y) | Expr::Sub(x, y) | Expr::Mul(x, y) | Expr::Div(x, y) => x.contains(v) || y.contains(v),
            Expr::Neg(x) | Expr::Sqrt(x) | Expr::Sq(x) => x.contains(v),
            Expr::Fn(_, a) => a.iter().any(|e| e.contains(v)),
        }
    }

    pub fn subst(&self, f: &dyn Fn(usize) -> Option<Expr>) -> Expr {
        match self {
            Expr::C(_) => self.clone(),
            Expr::V(v) => f(*v).unwrap_or_else(|| self.clone()),
            Expr::Add(x, y) => Expr::Add(b(x.subst(f)), b(y.subst(f))),
            Expr::Sub(x, y) => Expr::Sub(b(x.subst(f)), b(y.subst(f))),
            Expr::Mul(x, y) => Expr::Mul(b(x.subst(f)), b(y.subst(f))),
            Expr::Div(x, y) => Expr::Div(b(x.subst(f)), b(y.subst(f))),
            Expr::Neg(x) => Expr::Neg(b(x.subst(f))),
            Expr::Sqrt(x) => Expr::Sqrt(b(x.subst(f))),
            Expr::Sq(x) => Expr::Sq(b(x.subst(f))),
            Expr::Fn(g, a) => Expr::Fn(*g, a.iter().map(|e| e.subst(f)).collect()),
        }
    }

    /// Splits `self = c·v + g` with constant `c ≠ 0` and `v ∉ g`.
    pub fn split_linear_in(&self, v: usize) -> Option<(Rat, Expr)> {
        if !self.contains(v) {
            return None;
        }
        fn go(e: &Expr, v: usize) -> Option<(Rat, Expr)> {
            if !e.contains(v) {
                return Some((Rat::zero(), e.clone()));
            }
            match e {
                Expr::V(_) => Some((Rat::one(), Expr::C(Rat::zero()))),
                Expr::Add(x, y) => {
                    let (a, p) = go(x, v)?;
                    let (c, q) = go(y, v)?;
                    Some((a + c, Expr::Add(b(p), b(q))))
                }
                Expr::Sub(x, y) => {
                    let (a, p) = go(x, v)?;
                    let (c, q) = go(y, v)?;
                    Some((a - c, Expr::Sub(b(p), b(q))))
                }
                Expr::Neg(x) => {
                    let (a, p) = go(x, v)?;
                    Some((-a, Expr::Neg(b(p))))
                }
                Expr::Mul(x, y) => {
                    let (k, other) = match (x.as_const(), y.as_const()) {
                        (Some(k), _) => (k.clone(), y),
                        (_, Some(k)) => (k.clone(), x),
                        _ => return None,
                    };
                    let (a, p) = go(other, v)?;
                    Some((a * &k, Expr::Mul(b(Expr::C(k)), b(p))))
                }
                Expr::Div(x, y) => {
                    let k = y.as_const()?.clone();
                    if k.is_zero() || y.contains(v) {
                        return None;
                    }
                    let (a, p) = go(x, v)?;
                    Some((a / &k, Expr::Div(b(p), b(Expr::C(k)))))
                }
                _ => None,
            }
        }
        let (c, g) = go(self, v)?;
        (!c.is_zero()).then(|| (c, g.simplify()))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::C(r) => to_f64(r),
            Expr::V(v) => x[*v],
            Expr::Add(p, q) => p.eval(x) + q.eval(x),
            Expr::Sub(p, q) => p.eval(x) - q.eval(x),
            Expr::Mul(p, q) => p.eval(x) * q.eval(x),
            Expr::Div(p, q) => p.eval(x) / q.eval(x),
            Expr::Neg(p) => -p.eval(x),
            Expr::Sqrt(p) => p.eval(x).sqrt(),
            Expr::Sq(p) => {
                let v = p.eval(x);
                v * v
            }
            Expr::Fn(g, a) => {
                let v: Vec<f64> = a.iter().map(|e| e.eval(x)).collect();
                crate::csp::closed::eval_fn(*g, &v)
            }
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Expr::C(_) | Expr::V(_) => 1,
            Expr::Add(x, y) | Expr::Sub(x, y) | Expr::Mul(x, y) | Expr::Div(x, y) => 1 + x.size() + y.size(),
            Expr::Neg(x) | Expr::Sqrt(x) | Expr::Sq(x) => 1 + x.size(),
            Expr::Fn(_, a) => 1 + a.iter().map(Expr::size).sum::<usize>(),
        }
    }
}

/// Postfix node list; children always precede their parent, the root is last.
#[derive(Clone, Debug)]
pub enum Node {
    C(f64),
    V(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Neg(usize),
    Sqrt(usize),
    Sq(usize),
    Fn(NumFn, [usize; 4]),
}

#[derive(Clone, Debug)]
pub struct Tape {
    pub nodes: Vec<Node>,
}

impl Tape {
    /// Compiles `e`, sharing structurally equal subterms.
    pub fn compile(e: &Expr) -> Tape {
        fn go(e: &Expr, out: &mut Vec<Node>, seen: &mut HashMap<String, usize>) -> usize {
            let n = match e {
                Expr::C(r) => Node::C(to_f64(r)),
                Expr::V(v) => Node::V(*v),
                Expr::Add(x, y) => {
                    let (a, c) = (go(x, out, seen), go(y, out, seen));
                    Node::Add(a, c)
                }
                Expr::Sub(x, y) => {
                    let (a, c) = (go(x, out, seen), go(y, out, seen));
                    Node::Sub(a, c)
                }
                Expr::Mul(x, y) => {
                    let (a, c) = (go(x, out, seen), go(y, out, seen));
                    Node::Mul(a, c)
                }
                Expr::Div(x, y) => {
                    let (a, c) = (go(x, out, seen), go(y, out, seen));
                    Node::Div(a, c)
                }
                Expr::Neg(x) => Node::Neg(go(x, out, seen)),
                Expr::Sqrt(x) => Node::Sqrt(go(x, out, seen)),
                Expr::Sq(x) => Node::Sq(go(x, out, seen)),
                Expr::Fn(g, a) => {
                    let mut idx = [0usize; 4];
                    for (i, x) in a.iter().enumerate().take(4) {
                        idx[i] = go(x, out, seen);
                    }
                    Node::Fn(*g, idx)
                }
            };
            let key = format!("{n:?}");
            if let Some(&i) = seen.get(&key) {
                return i;
            }
            out.push(n);
            seen.insert(key, out.len() - 1);
            out.len() - 1
        }
        let mut nodes = Vec::new();
        go(e, &mut nodes, &mut HashMap::new());
        Tape { nodes }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v = vec![0.0; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            v[i] = match *n {
                Node::C(c) => c,
                Node::V(k) => x[k],
                Node::Add(a, b) => v[a] + v[b],
                Node::Sub(a, b) => v[a] - v[b],
                Node::Mul(a, b) => v[a] * v[b],
                Node::Div(a, b) => v[a] / v[b],
                Node::Neg(a) => -v[a],
                Node::Sqrt(a) => v[a].sqrt(),
                Node::Sq(a) => v[a] * v[a],
                Node::Fn(g, a) => crate::csp::closed::eval_fn(g, &[v[a[0]], v[a[1]], v[a[2]], v[a[3]]]),
            };
        }
        *v.last().unwrap_or(&0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::int;

    #[test]
    fn linear_form_of_scaled_difference() {
        let e = Expr::Mul(b(Expr::C(int(2))), b(Expr::Sub(b(Expr::V(0)), b(Expr::V(1)))));
        let l = e.linear().unwrap();
        assert_eq!(l.coef[&0], int(2));
        assert_eq!(l.coef[&1], int(-2));
    }

    #[test]
    fn nonlinear_has_no_linear_form() {
        let e = Expr::Mul(b(Expr::V(0)), b(Expr::V(1)));
        assert!(e.linear().is_none());
        assert!(Expr::Sqrt(b(Expr::V(0))).linear().is_none());
    }

    #[test]
    fn split_definition() {
        // 3x - sqrt(y) = 0  ->  c = 3, g = -sqrt(y)
        let e = Expr::Sub(b(Expr::Mul(b(Expr::C(int(3))), b(Expr::V(0)))), b(Expr::Sqrt(b(Expr::V(1)))));
        let (c, g) = e.split_linear_in(0).unwrap();
        assert_eq!(c, int(3));
        assert!(!g.contains(0));
        assert!(e.split_linear_in(1).is_none());
    }

    #[test]
    fn exact_sqrt_folds() {
        let e = Expr::Mul(b(Expr::C(crate::num::ratio(4, 5))), b(Expr::Sqrt(b(Expr::C(int(25)))))).simplify();
        assert_eq!(e, Expr::C(int(4)));
    }

    #[test]
    fn collect_cancels_repeated_terms() {
        let f = Expr::Sqrt(b(Expr::V(0)));
        let e = Expr::Add(b(f.clone()), b(Expr::Sub(b(Expr::V(1)), b(f.clone()))));
        assert_eq!(e.collect(), Expr::V(1));
        let twice = Expr::Add(b(f.clone()), b(f.clone())).collect();
        assert_eq!(twice, Expr::Mul(b(Expr::C(int(2))), b(f)));
    }

    #[test]
    fn equal_factors_become_a_square() {
        let e = Expr::Mul(b(Expr::V(0)), b(Expr::V(0))).simplify();
        assert_eq!(e, Expr::Sq(b(Expr::V(0))));
    }

    #[test]
    fn tape_shares_subterms() {
        let f = Expr::Sqrt(b(Expr::V(0)));
        let e = Expr::Mul(b(f.clone()), b(f));
        assert_eq!(Tape::compile(&e).nodes.len(), 3);
    }

    #[test]
    fn tape_matches_tree() {
        let e = Expr::Add(b(Expr::Sq(b(Expr::V(0)))), b(Expr::Div(b(Expr::V(1)), b(Expr::C(int(4))))));
        let t = Tape::compile(&e);
        let x = [1.5, 2.0];
        assert_eq!(t.eval(&x), e.eval(&x));
    }
}
