//! Exact general simplex over δ-rationals with conflict explanations.
//!
//! Rows are `slack = Σ a·x`; every bound remembers which input
//! constraints justified it, so an infeasible tableau yields the set of
//! constraints involved.

use super::expr::Lin;
use crate::num::Rat;
use crate::rel::CmpOp;
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};

pub type Prov = BTreeSet<usize>;

/// `c + k·δ` for an infinitesimal `δ > 0`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Dr {
    pub c: Rat,
    pub k: Rat,
}

impl Dr {
    fn new(c: Rat, k: Rat) -> Dr {
        Dr { c, k }
    }
    fn zero() -> Dr {
        Dr::new(Rat::zero(), Rat::zero())
    }
    fn add(&self, o: &Dr) -> Dr {
        Dr::new(&self.c + &o.c, &self.k + &o.k)
    }
    fn sub(&self, o: &Dr) -> Dr {
        Dr::new(&self.c - &o.c, &self.k - &o.k)
    }
    fn scale(&self, a: &Rat) -> Dr {
        Dr::new(&self.c * a, &self.k * a)
    }
}

#[derive(Clone, Debug)]
struct Bound {
    v: Dr,
    why: Prov,
}

#[derive(Clone, Debug)]
pub struct Simplex {
    nstruct: usize,
    rows: Vec<Vec<Rat>>,
    basic: Vec<usize>,
    row_of: Vec<Option<usize>>,
    lo: Vec<Option<Bound>>,
    hi: Vec<Option<Bound>>,
    val: Vec<Dr>,
    slack_of: BTreeMap<Vec<Rat>, usize>,
    pub pivots: usize,
}

impl Simplex {
    pub fn new(nstruct: usize) -> Simplex {
        Simplex {
            nstruct,
            rows: Vec::new(),
            basic: Vec::new(),
            row_of: vec![None; nstruct],
            lo: vec![None; nstruct],
            hi: vec![None; nstruct],
            val: vec![Dr::zero(); nstruct],
            slack_of: BTreeMap::new(),
            pivots: 0,
        }
    }

    fn nvars(&self) -> usize {
        self.val.len()
    }

    /// Slack variable for a normalized coefficient vector (leading entry 1).
    fn slack(&mut self, coef: Vec<Rat>) -> usize {
        if let Some(&s) = self.slack_of.get(&coef) {
            return s;
        }
        let s = self.nvars();
        for r in self.rows.iter_mut() {
            r.push(Rat::zero());
        }
        // Express the new row over the current nonbasic variables.
        let mut row = vec![Rat::zero(); s + 1];
        let mut v = Dr::zero();
        for (j, a) in coef.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            v = v.add(&self.val[j].scale(a));
            match self.row_of[j] {
                None => row[j] += a,
                Some(r) => {
                    for (k, b) in self.rows[r].iter().enumerate() {
                        if !b.is_zero() {
                            row[k] += a * b;
                        }
                    }
                }
            }
        }
        self.rows.push(row);
        self.basic.push(s);
        self.row_of.push(Some(self.rows.len() - 1));
        self.lo.push(None);
        self.hi.push(None);
        self.val.push(v);
        self.slack_of.insert(coef, s);
        s
    }

    /// Asserts `lin op 0` where `lin` ranges over structural variables.
    pub fn assert_lin(&mut self, lin: &Lin, op: CmpOp, why: Prov) -> Result<(), Prov> {
        debug_assert!(op != CmpOp::Ne);
        let Some((&first, lead)) = lin.coef.iter().next() else {
            let ok = op.holds(lin.c.clone(), Rat::zero());
            return if ok { Ok(()) } else { Err(why) };
        };
        let lead = lead.clone();
        let op = if lead.is_negative() { op.mirror() } else { op };
        let rhs = -&lin.c / &lead;
        let var = if lin.coef.len() == 1 {
            first
        } else {
            let mut coef = vec![Rat::zero(); self.nstruct];
            for (v, a) in &lin.coef {
                coef[*v] = a / &lead;
            }
            self.slack(coef)
        };
        let (lo, hi) = match op {
            CmpOp::Le => (None, Some(Dr::new(rhs, Rat::zero()))),
            CmpOp::Lt => (None, Some(Dr::new(rhs, -Rat::one()))),
            CmpOp::Ge => (Some(Dr::new(rhs, Rat::zero())), None),
            CmpOp::Gt => (Some(Dr::new(rhs, Rat::one())), None),
            CmpOp::Eq => (Some(Dr::new(rhs.clone(), Rat::zero())), Some(Dr::new(rhs, Rat::zero()))),
            CmpOp::Ne => unreachable!(),
        };
        if let Some(l) = lo {
            self.assert_lower(var, l, why.clone())?;
        }
        if let Some(u) = hi {
            self.assert_upper(var, u, why)?;
        }
        Ok(())
    }

    pub fn assert_lower(&mut self, x: usize, v: Dr, why: Prov) -> Result<(), Prov> {
        if let Some(b) = &self.lo[x] {
            if b.v >= v {
                return Ok(());
            }
        }
        if let Some(u) = &self.hi[x] {
            if v > u.v {
                return Err(&why | &u.why);
            }
        }
        self.lo[x] = Some(Bound { v: v.clone(), why });
        if self.row_of[x].is_none() && self.val[x] < v {
            self.update(x, v);
        }
        Ok(())
    }

    pub fn assert_upper(&mut self, x: usize, v: Dr, why: Prov) -> Result<(), Prov> {
        if let Some(b) = &self.hi[x] {
            if b.v <= v {
                return Ok(());
            }
        }
        if let Some(l) = &self.lo[x] {
            if v < l.v {
                return Err(&why | &l.why);
            }
        }
        self.hi[x] = Some(Bound { v: v.clone(), why });
        if self.row_of[x].is_none() && self.val[x] > v {
            self.update(x, v);
        }
        Ok(())
    }

    fn update(&mut self, j: usize, v: Dr) {
        let d = v.sub(&self.val[j]);
        for (r, row) in self.rows.iter().enumerate() {
            let a = &row[j];
            if !a.is_zero() {
                let b = self.basic[r];
                self.val[b] = self.val[b].add(&d.scale(a));
            }
        }
        self.val[j] = v;
    }

    fn pivot(&mut self, r: usize, j: usize) {
        self.pivots += 1;
        let b = self.basic[r];
        let a = self.rows[r][j].clone();
        let mut nr: Vec<Rat> = self.rows[r].iter().map(|x| -x / &a).collect();
        nr[j] = Rat::zero();
        nr[b] = Rat::one() / &a;
        for (k, row) in self.rows.iter_mut().enumerate() {
            if k == r {
                continue;
            }
            let c = std::mem::replace(&mut row[j], Rat::zero());
            if c.is_zero() {
                continue;
            }
            for (x, y) in row.iter_mut().zip(nr.iter()) {
                if !y.is_zero() {
                    *x += &c * y;
                }
            }
        }
        self.rows[r] = nr;
        self.basic[r] = j;
        self.row_of[j] = Some(r);
        self.row_of[b] = None;
    }

    fn below(&self, x: usize) -> bool {
        self.lo[x].as_ref().is_some_and(|l| self.val[x] < l.v)
    }
    fn above(&self, x: usize) -> bool {
        self.hi[x].as_ref().is_some_and(|u| self.val[x] > u.v)
    }

    /// Restores bound consistency; returns an explanation on conflict.
    /// `budget` limits pivots; `None` means it ran out.
    pub fn check(&mut self, budget: &mut u64) -> Option<Result<(), Prov>> {
        loop {
            let viol = (0..self.nvars())
                .filter(|&x| self.row_of[x].is_some())
                .find(|&x| self.below(x) || self.above(x));
            let Some(x) = viol else { return Some(Ok(())) };
            if *budget == 0 {
                return None;
            }
            *budget -= 1;
            let r = self.row_of[x].unwrap();
            let raise = self.below(x);
            let mut pick = None;
            for j in 0..self.nvars() {
                let a = &self.rows[r][j];
                if a.is_zero() || self.row_of[j].is_some() {
                    continue;
                }
                let up = a.is_positive() == raise;
                let room = if up {
                    self.hi[j].as_ref().is_none_or(|u| self.val[j] < u.v)
                } else {
                    self.lo[j].as_ref().is_none_or(|l| self.val[j] > l.v)
                };
                if room {
                    pick = Some(j);
                    break;
                }
            }
            match pick {
                None => {
                    let mut why = if raise {
                        self.lo[x].as_ref().unwrap().why.clone()
                    } else {
                        self.hi[x].as_ref().unwrap().why.clone()
                    };
                    for j in 0..self.nvars() {
                        let a = &self.rows[r][j];
                        if a.is_zero() || self.row_of[j].is_some() {
                            continue;
                        }
                        let b = if a.is_positive() == raise { &self.hi[j] } else { &self.lo[j] };
                        why.extend(b.as_ref().unwrap().why.iter().copied());
                    }
                    return Some(Err(why));
                }
                Some(j) => {
                    let target = if raise { self.lo[x].as_ref().unwrap().v.clone() } else { self.hi[x].as_ref().unwrap().v.clone() };
                    let theta = target.sub(&self.val[x]).scale(&(Rat::one() / &self.rows[r][j]));
                    self.val[x] = target;
                    self.val[j] = self.val[j].add(&theta);
                    for (k, row) in self.rows.iter().enumerate() {
                        if k != r && !row[j].is_zero() {
                            let b = self.basic[k];
                            self.val[b] = self.val[b].add(&theta.scale(&row[j]));
                        }
                    }
                    self.pivot(r, j);
                }
            }
        }
    }

    /// Concrete rational values for the structural variables.
    pub fn model(&self) -> Vec<Rat> {
        // Pick δ so every bound still holds once δ is substituted.
        let mut delta = Rat::one();
        for x in 0..self.nvars() {
            let v = &self.val[x];
            if let Some(l) = &self.lo[x] {
                if l.v.k > v.k && v.c > l.v.c {
                    delta = delta.min((&v.c - &l.v.c) / (&l.v.k - &v.k));
                }
            }
            if let Some(u) = &self.hi[x] {
                if v.k > u.v.k && u.v.c > v.c {
                    delta = delta.min((&u.v.c - &v.c) / (&v.k - &u.v.k));
                }
            }
        }
        let delta = delta / Rat::from_integer(2.into());
        (0..self.nstruct).map(|x| &self.val[x].c + &self.val[x].k * &delta).collect()
    }

    pub fn struct_count(&self) -> usize {
        self.nstruct
    }
}
