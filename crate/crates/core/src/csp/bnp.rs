//! Branch-and-prune search for nonlinear systems.

use super::expr::Tape;
use super::interval::{forward, hc4_revise, Iv};
use super::holds_with_tol;
use crate::rel::CmpOp;
use std::time::Instant;

pub struct Problem<'a> {
    pub cons: &'a [(Tape, CmpOp)],
    /// Variables of each constraint.
    pub vars: Vec<Vec<usize>>,
    pub domain: Vec<Iv>,
    pub integer: bool,
    pub tol: f64,
}

pub enum BnpResult {
    Found(Vec<f64>),
    Infeasible,
    Exhausted,
}

fn target(op: CmpOp, tol: f64) -> Option<Iv> {
    let h = tol / 2.0;
    match op {
        CmpOp::Le => Some(Iv::new(f64::NEG_INFINITY, h)),
        CmpOp::Ge => Some(Iv::new(-h, f64::INFINITY)),
        // witnesses of strict comparisons get no slack
        CmpOp::Lt => Some(Iv::new(f64::NEG_INFINITY, 0.0)),
        CmpOp::Gt => Some(Iv::new(0.0, f64::INFINITY)),
        CmpOp::Eq => Some(Iv::new(-h, h)),
        CmpOp::Ne => None,
    }
}

impl Problem<'_> {
    fn entailed(&self, t: &Tape, op: CmpOp, bx: &[Iv]) -> bool {
        let e = *forward(t, bx).last().unwrap_or(&Iv::ENTIRE);
        match op {
            CmpOp::Ne => e.hi < -self.tol || e.lo > self.tol,
            CmpOp::Lt => e.hi < 0.0,
            CmpOp::Gt => e.lo > 0.0,
            _ => target(op, 0.0).is_some_and(|tg| tg.lo <= e.lo && e.hi <= tg.hi),
        }
    }

    /// A strict comparison whose enclosure touches zero only from the wrong side.
    fn refuted(&self, t: &Tape, op: CmpOp, bx: &[Iv]) -> bool {
        let e = || *forward(t, bx).last().unwrap_or(&Iv::ENTIRE);
        match op {
            CmpOp::Lt => e().lo >= 0.0,
            CmpOp::Gt => e().hi <= 0.0,
            _ => false,
        }
    }

    fn satisfied(&self, x: &[f64]) -> bool {
        self.cons.iter().all(|(t, op)| holds_with_tol(t.eval(x), *op, self.tol))
    }

    fn propagate(&self, bx: &mut [Iv]) -> bool {
        for _ in 0..30 {
            let before: f64 = bx.iter().map(|i| i.width().min(1e12)).sum();
            for (t, op) in self.cons {
                if let Some(tg) = target(*op, self.tol) {
                    if !hc4_revise(t, tg, bx) {
                        return false;
                    }
                }
                if self.refuted(t, *op, bx) {
                    return false;
                }
            }
            if self.integer {
                for i in bx.iter_mut() {
                    *i = Iv::new(i.lo.ceil(), i.hi.floor());
                    if i.is_empty() {
                        return false;
                    }
                }
            }
            let after: f64 = bx.iter().map(|i| i.width().min(1e12)).sum();
            if !(after < 0.99 * before) {
                break;
            }
        }
        true
    }

    fn clamp(&self, x: &mut [f64], bx: &[Iv]) {
        for (v, i) in x.iter_mut().zip(bx) {
            *v = v.clamp(i.lo, i.hi);
            if self.integer {
                *v = v.round().clamp(i.lo.ceil(), i.hi.floor());
            }
        }
    }

    /// Gauss-Newton steps on the equalities and violated inequalities,
    /// taking the minimum-norm correction each time.
    fn polish(&self, mut x: Vec<f64>, bx: &[Iv]) -> Option<Vec<f64>> {
        for _ in 0..20 {
            if self.satisfied(&x) {
                return Some(x);
            }
            let mut rows: Vec<(usize, f64)> = Vec::new();
            for (i, (t, op)) in self.cons.iter().enumerate() {
                let g = t.eval(&x);
                if !g.is_finite() {
                    return None;
                }
                let aim = match op {
                    CmpOp::Eq => Some(0.0),
                    CmpOp::Le if g > 0.0 => Some(0.0),
                    CmpOp::Ge if g < 0.0 => Some(0.0),
                    CmpOp::Lt if g >= 0.0 => Some(-self.tol / 4.0),
                    CmpOp::Gt if g <= 0.0 => Some(self.tol / 4.0),
                    _ => None,
                };
                if let Some(a) = aim {
                    rows.push((i, g - a));
                }
            }
            let n = x.len();
            let m = rows.len();
            let mut jac = vec![vec![0.0; n]; m];
            for j in 0..n {
                let h = 1e-7 * (1.0 + x[j].abs());
                let mut xp = x.clone();
                xp[j] += h;
                for (r, (i, _)) in rows.iter().enumerate() {
                    let t = &self.cons[*i].0;
                    jac[r][j] = (t.eval(&xp) - t.eval(&x)) / h;
                }
            }
            // (J Jᵀ + λI) y = -r, step = Jᵀ y
            let mut a = vec![vec![0.0; m + 1]; m];
            for p in 0..m {
                for q in 0..m {
                    a[p][q] = (0..n).map(|k| jac[p][k] * jac[q][k]).sum::<f64>();
                }
                a[p][p] += 1e-12 * (1.0 + a[p][p]);
                a[p][m] = -rows[p].1;
            }
            let y = gauss(a)?;
            let mut moved = false;
            for j in 0..n {
                let d: f64 = (0..m).map(|p| jac[p][j] * y[p]).sum();
                if d.is_finite() && d != 0.0 {
                    x[j] += d;
                    moved = true;
                }
            }
            self.clamp(&mut x, bx);
            if !moved {
                break;
            }
        }
        self.satisfied(&x).then_some(x)
    }

    fn witness(&self, bx: &[Iv]) -> Option<Vec<f64>> {
        let mut lower: Vec<f64> = bx.iter().map(|i| i.lo).collect();
        self.clamp(&mut lower, bx);
        if self.satisfied(&lower) {
            return Some(lower);
        }
        let mut mid: Vec<f64> = bx.iter().map(|i| i.mid()).collect();
        self.clamp(&mut mid, bx);
        if self.satisfied(&mid) {
            return Some(mid);
        }
        // Newton from the middle of a huge box lands on far-away points
        // that only satisfy the system within rounding; wait for the
        // search to narrow things down first.
        let mut near: Vec<f64> = bx.iter().map(|i| i.lo + (0.5 * i.width()).min(1.0)).collect();
        self.clamp(&mut near, bx);
        if let Some(x) = self.polish(near, bx) {
            return Some(x);
        }
        if bx.iter().any(|i| i.width() > 1e4) {
            return None;
        }
        self.polish(lower, bx).or_else(|| self.polish(mid, bx))
    }

    pub fn solve(&self, budget: u64, deadline: Option<Instant>) -> BnpResult {
        let mut stack = vec![self.domain.clone()];
        let mut nodes = 0u64;
        let mut incomplete = false;
        while let Some(mut bx) = stack.pop() {
            nodes += 1;
            if nodes > budget || deadline.is_some_and(|d| Instant::now() > d) {
                return BnpResult::Exhausted;
            }
            if !self.propagate(&mut bx) {
                continue;
            }
            if let Some(w) = self.witness(&bx) {
                return BnpResult::Found(w);
            }
            // only variables of constraints not yet entailed on the box are split
            let mut open = vec![false; bx.len()];
            for (i, (t, op)) in self.cons.iter().enumerate() {
                if !self.entailed(t, *op, &bx) {
                    for &k in &self.vars[i] {
                        open[k] = true;
                    }
                }
            }
            if !open.contains(&true) {
                let mut mid: Vec<f64> = bx.iter().map(|i| i.mid()).collect();
                self.clamp(&mut mid, &bx);
                if self.satisfied(&mid) {
                    return BnpResult::Found(mid);
                }
                open = vec![true; bx.len()];
            }
            let widest = (0..bx.len()).filter(|&k| open[k]).max_by(|&a, &b| bx[a].width().total_cmp(&bx[b].width()));
            let Some(k) = widest else {
                // No variables left and the constant system is violated.
                continue;
            };
            let w = bx[k].width();
            if self.integer && w < 1.0 {
                continue;
            }
            if !self.integer && w <= 1e-9 * (1.0 + bx[k].lo.abs().max(bx[k].hi.abs())) {
                incomplete = true;
                continue;
            }
            let m = if self.integer { bx[k].mid().floor() } else { bx[k].mid() };
            let (mut a, mut b) = (bx.clone(), bx);
            a[k].hi = m;
            b[k].lo = if self.integer { m + 1.0 } else { m };
            stack.push(b);
            stack.push(a);
        }
        if incomplete {
            BnpResult::Exhausted
        } else {
            BnpResult::Infeasible
        }
    }
}

/// Solves an augmented system by Gaussian elimination with partial pivoting.
fn gauss(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let m = a.len();
    for c in 0..m {
        let p = (c..m).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-300 {
            return None;
        }
        a.swap(c, p);
        for r in 0..m {
            if r != c {
                let f = a[r][c] / a[c][c];
                if f != 0.0 {
                    let pr = a[c].clone();
                    for (x, y) in a[r].iter_mut().zip(pr).skip(c) {
                        *x -= f * y;
                    }
                }
            }
        }
    }
    Some((0..m).map(|i| a[i][m] / a[i][i]).collect())
}
