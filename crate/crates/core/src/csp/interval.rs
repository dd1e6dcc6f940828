//! Outward-rounded interval arithmetic and HC4 contraction over tapes.

use super::closed::{ric_v, ric_x, ric_zero_time};
use super::expr::{Node, Tape};
use crate::casp::NumFn;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Iv {
    pub lo: f64,
    pub hi: f64,
}

fn down(x: f64) -> f64 {
    if x.is_finite() {
        x.next_down()
    } else {
        x
    }
}

fn up(x: f64) -> f64 {
    if x.is_finite() {
        x.next_up()
    } else {
        x
    }
}

fn mul0(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

impl Iv {
    pub const ENTIRE: Iv = Iv { lo: f64::NEG_INFINITY, hi: f64::INFINITY };

    pub fn new(lo: f64, hi: f64) -> Iv {
        Iv { lo, hi }
    }
    pub fn point(x: f64) -> Iv {
        Iv { lo: x, hi: x }
    }
    fn rounded(lo: f64, hi: f64) -> Iv {
        if lo.is_nan() || hi.is_nan() {
            return Iv::ENTIRE;
        }
        Iv { lo: down(lo), hi: up(hi) }
    }
    pub fn is_empty(&self) -> bool {
        !(self.lo <= self.hi)
    }
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
    pub fn mid(&self) -> f64 {
        if self.lo.is_finite() && self.hi.is_finite() {
            self.lo + 0.5 * (self.hi - self.lo)
        } else if self.lo.is_finite() {
            self.lo.max(0.0)
        } else if self.hi.is_finite() {
            self.hi.min(0.0)
        } else {
            0.0
        }
    }
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
    pub fn meet(&self, o: &Iv) -> Iv {
        Iv { lo: self.lo.max(o.lo), hi: self.hi.min(o.hi) }
    }
    pub fn hull(&self, o: &Iv) -> Iv {
        Iv { lo: self.lo.min(o.lo), hi: self.hi.max(o.hi) }
    }
    pub fn add(&self, o: &Iv) -> Iv {
        Iv::rounded(self.lo + o.lo, self.hi + o.hi)
    }
    pub fn sub(&self, o: &Iv) -> Iv {
        Iv::rounded(self.lo - o.hi, self.hi - o.lo)
    }
    pub fn neg(&self) -> Iv {
        Iv { lo: -self.hi, hi: -self.lo }
    }
    pub fn mul(&self, o: &Iv) -> Iv {
        let p = [mul0(self.lo, o.lo), mul0(self.lo, o.hi), mul0(self.hi, o.lo), mul0(self.hi, o.hi)];
        let lo = p.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Iv::rounded(lo, hi)
    }
    pub fn div(&self, o: &Iv) -> Iv {
        if o.contains(0.0) {
            return Iv::ENTIRE;
        }
        let inv = Iv::rounded(1.0 / o.hi, 1.0 / o.lo);
        self.mul(&inv)
    }
    pub fn sqrt(&self) -> Iv {
        if self.hi < 0.0 {
            return Iv { lo: 1.0, hi: 0.0 };
        }
        Iv { lo: down(self.lo.max(0.0).sqrt()).max(0.0), hi: up(self.hi.sqrt()) }
    }
    pub fn sq(&self) -> Iv {
        if self.lo >= 0.0 {
            Iv::rounded(self.lo * self.lo, self.hi * self.hi).meet(&Iv::new(0.0, f64::INFINITY))
        } else if self.hi <= 0.0 {
            Iv::rounded(self.hi * self.hi, self.lo * self.lo).meet(&Iv::new(0.0, f64::INFINITY))
        } else {
            let m = self.lo.abs().max(self.hi.abs());
            Iv { lo: 0.0, hi: up(m * m) }
        }
    }
}

/// Enclosure of `ric_v` or `ric_x` over a box of arguments.
///
/// Both functions are monotone increasing in `a`, `b` and `v0`; `ric_v` is
/// also monotone in `t`, while `ric_x` has its extremum over `t` at an
/// endpoint or where the state crosses zero. Past a blow-up both are
/// undefined and tend to `sign(b)·∞`, which is what the enclosure uses
/// there: undefined points never satisfy a constraint anyway.
pub fn fn_enclosure(g: NumFn, a: &[Iv; 4]) -> Iv {
    const BIG: f64 = 1e150;
    let t = a[3].meet(&Iv::new(0.0, f64::INFINITY));
    if t.is_empty() || a.iter().any(Iv::is_empty) {
        return Iv::new(f64::INFINITY, f64::NEG_INFINITY);
    }
    if !t.hi.is_finite() {
        return Iv::ENTIRE;
    }
    // unbounded arguments are cut at ±BIG; monotonicity then leaves the
    // matching side of the result open
    let open_lo = a.iter().take(3).any(|x| x.lo < -BIG);
    let open_hi = a.iter().take(3).any(|x| x.hi > BIG);
    let clip = |x: &Iv| Iv::new(x.lo.max(-BIG), x.hi.min(BIG));
    let a = [clip(&a[0]), clip(&a[1]), clip(&a[2]), a[3]];
    let blow = |b: f64| {
        if b < 0.0 {
            Some(f64::NEG_INFINITY)
        } else if b > 0.0 {
            Some(f64::INFINITY)
        } else {
            None
        }
    };
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    match g {
        NumFn::RicV => {
            for m in 0..16 {
                let pick = |i: usize, x: &Iv| if m >> i & 1 == 1 { x.hi } else { x.lo };
                let b = pick(1, &a[1]);
                let mut v = ric_v(pick(0, &a[0]), b, pick(2, &a[2]), pick(3, &t));
                if v.is_nan() {
                    match blow(b) {
                        Some(x) => v = x,
                        None => return Iv::ENTIRE,
                    }
                }
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        NumFn::RicX => {
            for (corner, is_hi) in [((a[0].lo, a[1].lo, a[2].lo), false), ((a[0].hi, a[1].hi, a[2].hi), true)] {
                let (p, q, v0) = corner;
                let mut ts = vec![t.lo, t.hi];
                if let Some(z) = ric_zero_time(p, q, v0) {
                    if t.contains(z) {
                        ts.push(z);
                    }
                }
                for s in ts {
                    let mut x = ric_x(p, q, v0, s);
                    if x.is_nan() {
                        match blow(q) {
                            // the blow-up only matters on the side it heads to
                            Some(inf) if (inf > 0.0) != is_hi => continue,
                            Some(inf) => x = inf,
                            None => return Iv::ENTIRE,
                        }
                    }
                    if is_hi {
                        hi = hi.max(x);
                    } else {
                        lo = lo.min(x);
                    }
                }
            }
            if lo > hi {
                return Iv::ENTIRE;
            }
        }
    }
    if open_lo {
        lo = f64::NEG_INFINITY;
    }
    if open_hi {
        hi = f64::INFINITY;
    }
    // Closed forms are evaluated in floating point; widen a little.
    let pad = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
    if !pad.is_finite() {
        return Iv::new(lo, hi);
    }
    Iv::rounded(lo - pad, hi + pad)
}

/// Narrows argument `k` of `g` from both ends, cutting slabs whose
/// enclosure misses `z`.
fn shave(g: NumFn, args: &mut [Iv; 4], k: usize, z: &Iv) -> bool {
    let misses = |args: &[Iv; 4], part: Iv| {
        let mut probe = *args;
        probe[k] = part;
        let e = fn_enclosure(g, &probe);
        e.is_empty() || e.meet(z).is_empty()
    };
    const BIG: f64 = 1e150;
    for from_lo in [true, false] {
        let x = args[k];
        if from_lo && x.lo < -BIG && x.hi > -BIG && misses(args, Iv::new(x.lo, -BIG)) {
            args[k].lo = -BIG;
        }
        if !from_lo && x.hi > BIG && x.lo < BIG && misses(args, Iv::new(BIG, x.hi)) {
            args[k].hi = BIG;
        }
        let mut w = args[k].width() / 64.0;
        let floor = (args[k].width() * 1e-4).max(1e-9);
        for _ in 0..40 {
            let x = args[k];
            if x.is_empty() {
                return false;
            }
            if !(w.is_finite() && w > 0.0) || w < floor {
                break;
            }
            let part = if from_lo { Iv::new(x.lo, (x.lo + w).min(x.hi)) } else { Iv::new((x.hi - w).max(x.lo), x.hi) };
            if misses(args, part) {
                if part.width() >= x.width() {
                    return false;
                }
                args[k] = if from_lo { Iv::new(part.hi, x.hi) } else { Iv::new(x.lo, part.lo) };
                w *= 2.0;
            } else {
                w /= 4.0;
            }
        }
    }
    true
}

pub fn forward(tape: &Tape, bx: &[Iv]) -> Vec<Iv> {
    let mut v: Vec<Iv> = Vec::with_capacity(tape.nodes.len());
    for n in &tape.nodes {
        let r = match *n {
            Node::C(c) => Iv::point(c),
            Node::V(k) => bx[k],
            Node::Add(a, b) => v[a].add(&v[b]),
            Node::Sub(a, b) => v[a].sub(&v[b]),
            Node::Mul(a, b) => v[a].mul(&v[b]),
            Node::Div(a, b) => v[a].div(&v[b]),
            Node::Neg(a) => v[a].neg(),
            Node::Sqrt(a) => v[a].sqrt(),
            Node::Sq(a) => v[a].sq(),
            Node::Fn(g, a) => fn_enclosure(g, &[v[a[0]], v[a[1]], v[a[2]], v[a[3]]]),
        };
        v.push(r);
    }
    v
}

/// Contracts `bx` so that the tape's value can lie in `target`.
/// Returns false when the box is proven empty.
pub fn hc4_revise(tape: &Tape, target: Iv, bx: &mut [Iv]) -> bool {
    let mut v = forward(tape, bx);
    let root = v.len() - 1;
    v[root] = v[root].meet(&target);
    if v[root].is_empty() {
        return false;
    }
    for i in (0..v.len()).rev() {
        let z = v[i];
        if z.is_empty() {
            return false;
        }
        match tape.nodes[i] {
            Node::C(_) => {}
            Node::Fn(g, a) => {
                let mut args = [v[a[0]], v[a[1]], v[a[2]], v[a[3]]];
                {
                    for k in (0..4).rev() {
                        if !shave(g, &mut args, k, &z) {
                            return false;
                        }
                    }
                    for k in 0..4 {
                        v[a[k]] = v[a[k]].meet(&args[k]);
                        if v[a[k]].is_empty() {
                            return false;
                        }
                    }
                }
            }
            Node::V(k) => {
                bx[k] = bx[k].meet(&z);
                if bx[k].is_empty() {
                    return false;
                }
            }
            Node::Add(a, b) => {
                v[a] = v[a].meet(&z.sub(&v[b]));
                v[b] = v[b].meet(&z.sub(&v[a]));
            }
            Node::Sub(a, b) => {
                v[a] = v[a].meet(&z.add(&v[b]));
                v[b] = v[b].meet(&v[a].sub(&z));
            }
            Node::Mul(a, b) => {
                if !v[b].contains(0.0) {
                    v[a] = v[a].meet(&z.div(&v[b]));
                }
                if !v[a].contains(0.0) {
                    v[b] = v[b].meet(&z.div(&v[a]));
                }
            }
            Node::Div(a, b) => {
                v[a] = v[a].meet(&z.mul(&v[b]));
                if !z.contains(0.0) {
                    v[b] = v[b].meet(&v[a].div(&z));
                }
            }
            Node::Neg(a) => v[a] = v[a].meet(&z.neg()),
            Node::Sqrt(a) => {
                let z = z.meet(&Iv::new(0.0, f64::INFINITY));
                v[a] = v[a].meet(&z.sq()).meet(&Iv::new(0.0, f64::INFINITY));
            }
            Node::Sq(a) => {
                let z = z.meet(&Iv::new(0.0, f64::INFINITY));
                if z.is_empty() {
                    return false;
                }
                let r = up(z.hi.sqrt());
                let mut x = v[a].meet(&Iv::new(-r, r));
                if z.lo > 0.0 {
                    let s = down(z.lo.sqrt());
                    if x.lo > -s {
                        x = x.meet(&Iv::new(s, r));
                    } else if x.hi < s {
                        x = x.meet(&Iv::new(-r, -s));
                    }
                }
                v[a] = x;
            }
        }
        if let Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) = tape.nodes[i] {
            if v[a].is_empty() || v[b].is_empty() {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::expr::Expr;
    use crate::num::int;

    #[test]
    fn enclosures_contain_samples() {
        let a = [Iv::new(0.5, 1.0), Iv::new(-0.2, -0.1), Iv::new(0.0, 3.0), Iv::new(0.0, 4.0)];
        for g in [NumFn::RicV, NumFn::RicX] {
            let e = fn_enclosure(g, &a);
            for i in 0..=4 {
                for j in 0..=4 {
                    let f = i as f64 / 4.0;
                    let s = j as f64 / 4.0;
                    let args = [0.5 + 0.5 * f, -0.2 + 0.1 * s, 3.0 * f, 4.0 * s];
                    let x = crate::csp::closed::eval_fn(g, &args);
                    assert!(e.contains(x), "{g:?} {args:?} -> {x} not in {e:?}");
                }
            }
        }
    }

    #[test]
    fn contracts_linear_sum() {
        // x + y = 10 with x in [0, 3] forces y into [7, 10]
        let e = Expr::Sub(
            Box::new(Expr::Add(Box::new(Expr::V(0)), Box::new(Expr::V(1)))),
            Box::new(Expr::C(int(10))),
        );
        let t = Tape::compile(&e);
        let mut bx = vec![Iv::new(0.0, 3.0), Iv::new(-100.0, 100.0)];
        assert!(hc4_revise(&t, Iv::point(0.0), &mut bx));
        assert!((bx[1].lo - 7.0).abs() < 1e-9 && (bx[1].hi - 10.0).abs() < 1e-9);
    }

    #[test]
    fn detects_empty_square() {
        let e = Expr::Add(Box::new(Expr::Sq(Box::new(Expr::V(0)))), Box::new(Expr::C(int(1))));
        let t = Tape::compile(&e);
        let mut bx = vec![Iv::new(-5.0, 5.0)];
        assert!(!hc4_revise(&t, Iv::new(f64::NEG_INFINITY, 0.0), &mut bx));
    }
}
