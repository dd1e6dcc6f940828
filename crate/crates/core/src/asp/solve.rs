//! Answer-set enumeration by backtracking search over the completion.
//!
//! Every rule body gets an auxiliary variable; clauses encode body
//! definitions, rule application and atom support, and choice rules become
//! cardinality constraints guarded by their body. Total supported models are
//! then checked for stability against the least model of the reduct.
//! Backtracking is chronological, so enumeration simply resumes by flipping
//! the most recent unflipped decision.

use crate::casp::{is_answer_set, AnswerSet, Atom, BodyLit, GroundProgram, Head};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::time::Instant;

type Var = usize;
type Lit = usize;

fn lit(v: Var, positive: bool) -> Lit {
    2 * v + usize::from(!positive)
}
fn var_of(l: Lit) -> Var {
    l / 2
}
fn neg(l: Lit) -> Lit {
    l ^ 1
}

const UNASSIGNED: u8 = 0;
const TRUE: u8 = 1;
const FALSE: u8 = 2;

/// Projection of an answer set onto its `occurs`/`is_false` atoms.
pub type Fingerprint = BTreeSet<Atom>;

pub fn is_projected(a: &Atom) -> bool {
    !a.neg && (a.pred == "occurs" || a.pred == "is_false")
}

pub fn fingerprint(a: &AnswerSet) -> Fingerprint {
    a.iter().filter(|x| is_projected(x)).cloned().collect()
}

/// Forbidden fingerprints, in insertion order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BlockSet {
    list: Vec<Fingerprint>,
    seen: HashSet<Fingerprint>,
}

impl BlockSet {
    pub fn new() -> Self {
        Self::default()
    }
    pub fn len(&self) -> usize {
        self.list.len()
    }
    pub fn is_empty(&self) -> bool {
        self.list.is_empty()
    }
    pub fn contains(&self, f: &Fingerprint) -> bool {
        self.seen.contains(f)
    }
    pub fn iter(&self) -> impl Iterator<Item = &Fingerprint> {
        self.list.iter()
    }
    /// Adds the fingerprint of `a`; duplicates are ignored.
    pub fn block(&mut self, a: &AnswerSet) {
        let f = fingerprint(a);
        if self.seen.insert(f.clone()) {
            self.list.push(f);
        }
    }
}

/// Value-style form of [`BlockSet::block`].
pub fn add_block(mut blocked: BlockSet, a: &AnswerSet) -> BlockSet {
    blocked.block(a);
    blocked
}

struct Card {
    /// `None` when the rule body is empty.
    cond: Option<Lit>,
    lits: Vec<Lit>,
    lb: usize,
    ub: usize,
}

/// Search counters.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub decisions: u64,
    pub conflicts: u64,
    pub models: u64,
    pub unstable: u64,
}

/// Stability test data: per rule, its head variables and body literals.
struct StableRule {
    heads: Vec<(Var, Option<Var>)>, // (head atom, required-true atom for choice elements)
    pos: Vec<Var>,
    negs: Vec<Var>,
    denial: bool,
}

enum Outcome {
    Ok,
    Conflict,
}

pub struct Solver {
    atoms: Vec<Atom>,
    index: HashMap<Atom, Var>,
    nvars: usize,
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<usize>>,
    cards: Vec<Card>,
    card_occ: Vec<Vec<usize>>,
    value: Vec<u8>,
    trail_pos: Vec<usize>,
    base_clauses: usize,
    trail: Vec<Lit>,
    qhead: usize,
    /// (trail length before the decision, decision literal, already flipped)
    decisions: Vec<(usize, Lit, bool)>,
    order: Vec<Var>,
    phase: Vec<bool>,
    rules: Vec<StableRule>,
    projected: Vec<Var>,
    synced_blocks: usize,
    pending: Vec<Vec<Lit>>,
    started: bool,
    exhausted: bool,
    program: Option<GroundProgram>,
    pub stats: SolverStats,
    deadline: Option<Instant>,
    timed_out: bool,
}

impl Solver {
    pub fn new(g: &GroundProgram, seed: u64) -> Solver {
        let mut atoms: Vec<Atom> = g.atoms.iter().cloned().collect();
        let mut index: HashMap<Atom, Var> = atoms.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
        let mut intern = |a: &Atom, atoms: &mut Vec<Atom>| -> Var {
            if let Some(&v) = index.get(a) {
                return v;
            }
            atoms.push(a.clone());
            index.insert(a.clone(), atoms.len() - 1);
            atoms.len() - 1
        };
        let mut choice_atoms: BTreeSet<Var> = BTreeSet::new();
        let mut parsed: Vec<(Vec<Lit>, &Head, Vec<Var>)> = Vec::new();
        for r in &g.rules {
            let mut body = Vec::new();
            for l in &r.body {
                match l {
                    BodyLit::Pos(a) => body.push(lit(intern(a, &mut atoms), true)),
                    BodyLit::Neg(a) => body.push(lit(intern(a, &mut atoms), false)),
                    BodyLit::Guard(..) => {}
                }
            }
            let heads: Vec<Var> = r.head_atoms().into_iter().map(|a| intern(a, &mut atoms)).collect();
            if matches!(r.head, Head::Choice { .. }) {
                choice_atoms.extend(heads.iter().copied());
            }
            parsed.push((body, &r.head, heads));
        }
        let natoms = atoms.len();
        let mut s = Solver {
            index,
            nvars: natoms + 1,
            clauses: Vec::new(),
            watches: Vec::new(),
            cards: Vec::new(),
            card_occ: Vec::new(),
            value: Vec::new(),
            trail_pos: Vec::new(),
            base_clauses: 0,
            trail: Vec::new(),
            qhead: 0,
            decisions: Vec::new(),
            order: Vec::new(),
            phase: vec![false; natoms],
            rules: Vec::new(),
            projected: Vec::new(),
            synced_blocks: 0,
            pending: Vec::new(),
            started: false,
            exhausted: false,
            program: None,
            stats: SolverStats::default(),
            deadline: None,
            timed_out: false,
            atoms,
        };
        let tvar = natoms; // constant true
        let mut initial: Vec<Vec<Lit>> = vec![vec![lit(tvar, true)]];
        let mut bodies: HashMap<Vec<Lit>, Var> = HashMap::new();
        let mut support: Vec<Vec<Lit>> = vec![Vec::new(); natoms];
        for (body, head, heads) in &parsed {
            let mut key = body.clone();
            key.sort_unstable();
            key.dedup();
            let bvar = if key.is_empty() {
                tvar
            } else if let Some(&b) = bodies.get(&key) {
                b
            } else {
                let b = s.nvars;
                s.nvars += 1;
                for &l in &key {
                    initial.push(vec![lit(b, false), l]);
                }
                let mut c: Vec<Lit> = key.iter().map(|&l| neg(l)).collect();
                c.push(lit(b, true));
                initial.push(c);
                bodies.insert(key.clone(), b);
                b
            };
            let blit = lit(bvar, true);
            match head {
                Head::Atom(_) => {
                    initial.push(vec![neg(blit), lit(heads[0], true)]);
                    support[heads[0]].push(blit);
                }
                Head::Denial => initial.push(vec![neg(blit)]),
                Head::Choice { lb, ub, .. } => {
                    let mut uniq = heads.clone();
                    uniq.sort_unstable();
                    uniq.dedup();
                    for &h in &uniq {
                        support[h].push(blit);
                    }
                    let n = uniq.len();
                    let lb = lb.map_or(0, |x| x as usize);
                    let ub = ub.map_or(n, |x| (x as usize).min(n));
                    if lb > 0 || ub < n {
                        s.cards.push(Card {
                            cond: (bvar != tvar).then_some(blit),
                            lits: uniq.iter().map(|&v| lit(v, true)).collect(),
                            lb,
                            ub,
                        });
                    }
                }
            }
            let mut pos = Vec::new();
            let mut negs = Vec::new();
            for &l in body {
                if l % 2 == 0 {
                    pos.push(var_of(l));
                } else {
                    negs.push(var_of(l));
                }
            }
            let choice = matches!(head, Head::Choice { .. });
            s.rules.push(StableRule {
                heads: heads.iter().map(|&h| (h, choice.then_some(h))).collect(),
                pos,
                negs,
                denial: matches!(head, Head::Denial),
            });
        }
        for (a, sup) in support.into_iter().enumerate() {
            let mut c = vec![lit(a, false)];
            c.extend(sup);
            initial.push(c);
        }
        for (i, a) in s.atoms.iter().enumerate() {
            if !a.neg {
                if let Some(&j) = s.index.get(&a.complement()) {
                    initial.push(vec![lit(i, false), lit(j, false)]);
                }
            }
            if is_projected(a) {
                s.projected.push(i);
            }
        }
        s.value = vec![UNASSIGNED; s.nvars];
        s.watches = vec![Vec::new(); 2 * s.nvars];
        s.card_occ = vec![Vec::new(); s.nvars];
        for (ci, c) in s.cards.iter().enumerate() {
            for &l in c.lits.iter().chain(c.cond.iter()) {
                s.card_occ[var_of(l)].push(ci);
            }
        }
        // decision order: choice atoms first, `occurs` among them first
        let class = |v: Var, atoms: &[Atom]| -> u8 {
            let a = &atoms[v];
            match (choice_atoms.contains(&v), a.pred == "occurs") {
                (true, true) => 0,
                (true, false) => 1,
                _ => 2,
            }
        };
        let mut order: Vec<Var> = (0..natoms).collect();
        order.sort_by_key(|&v| (class(v, &s.atoms), step_key(&s.atoms[v]), v));
        if seed != 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut i = 0;
            while i < order.len() {
                let c = class(order[i], &s.atoms);
                let mut j = i;
                while j < order.len() && class(order[j], &s.atoms) == c {
                    j += 1;
                }
                order[i..j].shuffle(&mut rng);
                i = j;
            }
        }
        s.order = order;
        s.trail_pos = vec![0; s.nvars];
        for c in initial {
            if matches!(s.add_clause(c, false), Outcome::Conflict) {
                s.exhausted = true;
                break;
            }
        }
        s.base_clauses = s.clauses.len();
        for ci in 0..s.cards.len() {
            if !s.exhausted && matches!(s.propagate_card(ci), Outcome::Conflict) {
                s.exhausted = true;
            }
        }
        if !s.exhausted && matches!(s.propagate(), Outcome::Conflict) {
            s.exhausted = true;
        }
        if cfg!(debug_assertions) {
            s.program = Some(g.clone());
        }
        s
    }

    pub fn set_deadline(&mut self, d: Option<Instant>) {
        self.deadline = d;
    }

    /// Whether the last `solve_next` stopped at the deadline.
    pub fn timed_out(&self) -> bool {
        self.timed_out
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    fn val(&self, l: Lit) -> u8 {
        match self.value[var_of(l)] {
            UNASSIGNED => UNASSIGNED,
            v => {
                if (v == TRUE) == (l % 2 == 0) {
                    TRUE
                } else {
                    FALSE
                }
            }
        }
    }

    fn assign(&mut self, l: Lit) {
        self.value[var_of(l)] = if l % 2 == 0 { TRUE } else { FALSE };
        self.trail_pos[var_of(l)] = self.trail.len();
        self.trail.push(l);
    }

    /// Adds a clause at any point of the search. Literals are arranged so the
    /// watched pair is the pair falsified last, which keeps the watches valid
    /// under chronological backtracking.
    fn add_clause(&mut self, mut c: Vec<Lit>, extra: bool) -> Outcome {
        c.sort_unstable();
        c.dedup();
        if c.windows(2).any(|w| w[0] == neg(w[1])) {
            return Outcome::Ok;
        }
        if c.is_empty() {
            self.exhausted = true;
            return Outcome::Conflict;
        }
        c.sort_by_key(|&l| match self.val(l) {
            TRUE => (0, 0),
            UNASSIGNED => (1, 0),
            _ => (2, usize::MAX - self.trail_pos[var_of(l)]),
        });
        if c.len() == 1 {
            if !extra {
                return match self.val(c[0]) {
                    TRUE => Outcome::Ok,
                    FALSE => {
                        self.exhausted = true;
                        Outcome::Conflict
                    }
                    _ => {
                        self.assign(c[0]);
                        Outcome::Ok
                    }
                };
            }
            c.push(c[0]);
        }
        let ci = self.clauses.len();
        self.watches[neg(c[0])].push(ci);
        if c[1] != c[0] {
            self.watches[neg(c[1])].push(ci);
        }
        let (v0, v1) = (self.val(c[0]), self.val(c[1]));
        let unit = c[1] == c[0] || v1 == FALSE;
        let first = c[0];
        self.clauses.push(c);
        match v0 {
            FALSE => {
                if self.decisions.is_empty() {
                    self.exhausted = true;
                }
                Outcome::Conflict
            }
            UNASSIGNED if unit => {
                self.assign(first);
                Outcome::Ok
            }
            _ => Outcome::Ok,
        }
    }

    fn propagate(&mut self) -> Outcome {
        while self.qhead < self.trail.len() {
            let l = self.trail[self.qhead];
            self.qhead += 1;
            // clauses watching l (i.e. containing ¬l)
            let mut ws = std::mem::take(&mut self.watches[l]);
            let mut i = 0;
            let mut conflict = false;
            while i < ws.len() {
                let ci = ws[i];
                let falsified = neg(l);
                let c = &mut self.clauses[ci];
                if c[0] == falsified {
                    c.swap(0, 1);
                }
                let other = c[0];
                let first_true = match self.value[var_of(other)] {
                    UNASSIGNED => false,
                    v => (v == TRUE) == (other % 2 == 0),
                };
                if first_true {
                    i += 1;
                    continue;
                }
                // look for a new watch
                let mut found = None;
                for k in 2..c.len() {
                    let lk = c[k];
                    let vk = self.value[var_of(lk)];
                    let is_false = vk != UNASSIGNED && (vk == TRUE) != (lk % 2 == 0);
                    if !is_false {
                        found = Some(k);
                        break;
                    }
                }
                if let Some(k) = found {
                    c.swap(1, k);
                    let nw = neg(c[1]);
                    self.watches[nw].push(ci);
                    ws.swap_remove(i);
                    continue;
                }
                // unit or conflict
                match self.val(other) {
                    UNASSIGNED => {
                        self.assign(other);
                        i += 1;
                    }
                    _ => {
                        conflict = true;
                        break;
                    }
                }
            }
            let rest = std::mem::take(&mut self.watches[l]);
            ws.extend(rest);
            self.watches[l] = ws;
            if conflict {
                return Outcome::Conflict;
            }
            let v = var_of(l);
            for k in 0..self.card_occ[v].len() {
                let ci = self.card_occ[v][k];
                if matches!(self.propagate_card(ci), Outcome::Conflict) {
                    return Outcome::Conflict;
                }
            }
        }
        Outcome::Ok
    }

    fn propagate_card(&mut self, ci: usize) -> Outcome {
        let (mut t, mut u) = (0usize, 0usize);
        for &l in &self.cards[ci].lits {
            match self.val(l) {
                TRUE => t += 1,
                UNASSIGNED => u += 1,
                _ => {}
            }
        }
        let (lb, ub) = (self.cards[ci].lb, self.cards[ci].ub);
        let cond = match self.cards[ci].cond {
            None => TRUE,
            Some(c) => self.val(c),
        };
        let violated = t > ub || t + u < lb;
        match cond {
            TRUE => {
                if violated {
                    return Outcome::Conflict;
                }
                if u > 0 && (t == ub || t + u == lb) {
                    let set_true = t + u == lb;
                    let lits: Vec<Lit> = self.cards[ci].lits.iter().copied().filter(|&l| self.val(l) == UNASSIGNED).collect();
                    for l in lits {
                        self.assign(if set_true { l } else { neg(l) });
                    }
                }
            }
            UNASSIGNED if violated => {
                let c = self.cards[ci].cond.unwrap();
                self.assign(neg(c));
            }
            _ => {}
        }
        Outcome::Ok
    }

    fn undo_to(&mut self, len: usize) {
        while self.trail.len() > len {
            let l = self.trail.pop().unwrap();
            self.value[var_of(l)] = UNASSIGNED;
        }
        self.qhead = self.qhead.min(len);
    }

    /// Chronological backtrack; false when the search space is exhausted.
    fn backtrack(&mut self) -> bool {
        while let Some((len, l, flipped)) = self.decisions.pop() {
            self.undo_to(len);
            if !flipped {
                self.decisions.push((len, neg(l), true));
                self.assign(neg(l));
                return true;
            }
        }
        self.exhausted = true;
        false
    }

    fn pick(&self) -> Option<Lit> {
        self.order
            .iter()
            .find(|&&v| self.value[v] == UNASSIGNED)
            .map(|&v| lit(v, self.phase[v]))
    }

    fn is_stable(&self) -> bool {
        let t = |v: Var| self.value[v] == TRUE;
        let n = self.atoms.len();
        let mut derived = vec![false; n];
        let mut waiting: Vec<usize> = Vec::with_capacity(self.rules.len());
        let mut occ: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut queue: Vec<Var> = Vec::new();
        for (ri, r) in self.rules.iter().enumerate() {
            let active = !r.denial && r.negs.iter().all(|&v| !t(v));
            if !active {
                waiting.push(usize::MAX);
                continue;
            }
            waiting.push(r.pos.len());
            for &p in &r.pos {
                occ[p].push(ri);
            }
        }
        let fire = |ri: usize, derived: &mut Vec<bool>, queue: &mut Vec<Var>| {
            for &(h, need) in &self.rules[ri].heads {
                if need.is_some_and(|x| !t(x)) {
                    continue;
                }
                if !derived[h] {
                    derived[h] = true;
                    queue.push(h);
                }
            }
        };
        for ri in 0..self.rules.len() {
            if waiting[ri] == 0 {
                fire(ri, &mut derived, &mut queue);
            }
        }
        while let Some(a) = queue.pop() {
            for k in 0..occ[a].len() {
                let ri = occ[a][k];
                waiting[ri] -= 1;
                if waiting[ri] == 0 {
                    fire(ri, &mut derived, &mut queue);
                }
            }
        }
        (0..n).all(|v| t(v) == derived[v])
    }

    fn model(&self) -> AnswerSet {
        (0..self.atoms.len()).filter(|&v| self.value[v] == TRUE).map(|v| self.atoms[v].clone()).collect()
    }

    fn clause_for_block(&self, f: &Fingerprint) -> Option<Vec<Lit>> {
        let mut c = Vec::new();
        for a in f {
            match self.index.get(a) {
                Some(&v) => c.push(lit(v, false)),
                None => return None,
            }
        }
        for &v in &self.projected {
            if !f.contains(&self.atoms[v]) {
                c.push(lit(v, true));
            }
        }
        Some(c)
    }

    /// Forbids the conjunction of `lits` (atom, truth value). Atoms unknown
    /// to the program are false.
    pub fn add_nogood(&mut self, lits: &[(Atom, bool)]) {
        let mut c = Vec::new();
        for (a, b) in lits {
            match self.index.get(a) {
                Some(&v) => c.push(lit(v, !*b)),
                None if *b => return,
                None => {}
            }
        }
        self.pending.push(c);
    }

    fn sync(&mut self, blocked: &BlockSet) -> Outcome {
        let fresh: Vec<Vec<Lit>> = blocked.list[self.synced_blocks.min(blocked.list.len())..]
            .iter()
            .filter_map(|f| self.clause_for_block(f))
            .collect();
        self.synced_blocks = blocked.list.len();
        let mut all = std::mem::take(&mut self.pending);
        all.extend(fresh);
        let mut out = Outcome::Ok;
        for c in all {
            if matches!(self.add_clause(c, true), Outcome::Conflict) {
                out = Outcome::Conflict;
            }
        }
        out
    }

    fn extra_clauses_hold(&self) -> bool {
        self.clauses[self.base_clauses..].iter().all(|c| c.iter().any(|&l| self.val(l) == TRUE))
    }

    /// Next answer set whose fingerprint is not blocked, in a deterministic
    /// order. Distinct calls never return the same answer set.
    pub fn solve_next(&mut self, blocked: &BlockSet) -> Option<AnswerSet> {
        self.timed_out = false;
        if self.exhausted {
            return None;
        }
        let mut conflict = matches!(self.sync(blocked), Outcome::Conflict);
        if self.exhausted {
            return None;
        }
        if self.started && !conflict {
            // resume after the previously returned model
            conflict = true;
        }
        self.started = true;
        let mut steps: u64 = 0;
        loop {
            if conflict {
                self.stats.conflicts += 1;
                if !self.backtrack() {
                    return None;
                }
            }
            conflict = false;
            if matches!(self.propagate(), Outcome::Conflict) {
                conflict = true;
                continue;
            }
            steps += 1;
            if steps % 1024 == 0 {
                if let Some(d) = self.deadline {
                    if Instant::now() >= d {
                        self.timed_out = true;
                        // forget the partial search position so a later call restarts cleanly
                        self.decisions.clear();
                        self.undo_to(0);
                        self.started = false;
                        return None;
                    }
                }
            }
            match self.pick() {
                Some(l) => {
                    self.stats.decisions += 1;
                    self.decisions.push((self.trail.len(), l, false));
                    self.assign(l);
                }
                None => {
                    // all atoms assigned; body variables follow by propagation
                    if (self.atoms.len()..self.nvars).any(|v| self.value[v] == UNASSIGNED) {
                        let v = (self.atoms.len()..self.nvars).find(|&v| self.value[v] == UNASSIGNED).unwrap();
                        self.decisions.push((self.trail.len(), lit(v, false), false));
                        self.assign(lit(v, false));
                        continue;
                    }
                    if !self.extra_clauses_hold() {
                        conflict = true;
                        continue;
                    }
                    if !self.is_stable() {
                        self.stats.unstable += 1;
                        conflict = true;
                        continue;
                    }
                    let m = self.model();
                    if blocked.contains(&fingerprint(&m)) {
                        conflict = true;
                        continue;
                    }
                    self.stats.models += 1;
                    if let Some(p) = &self.program {
                        debug_assert!(is_answer_set(p, &m), "solver returned a non-answer set");
                    }
                    if self.decisions.is_empty() {
                        self.exhausted = true;
                    }
                    return Some(m);
                }
            }
        }
    }
}

/// Orders atoms by their trailing step argument so earlier steps are decided first.
fn step_key(a: &Atom) -> i64 {
    a.args.last().and_then(|t| t.as_int()).unwrap_or(i64::MAX)
}

/// All answer sets of `g`, in enumeration order.
pub fn enumerate(g: &GroundProgram, seed: u64) -> Vec<AnswerSet> {
    let mut s = Solver::new(g, seed);
    let none = BlockSet::new();
    let mut out = Vec::new();
    while let Some(m) = s.solve_next(&none) {
        out.push(m);
    }
    out
}
