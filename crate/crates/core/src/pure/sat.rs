//! DPLL over the clausal encoding with a linear-arithmetic theory check.

use std::collections::BTreeMap;

use super::encode::{Atom, Cnf};
use super::lia::{self, Lin, LiaResult};

pub enum SatResult {
    Unsat,
    /// Boolean assignment (indexed by variable) and integer model.
    Sat(Vec<Option<bool>>, BTreeMap<usize, i64>),
    Unknown,
}

struct Dpll<'a> {
    cnf: &'a Cnf,
    atoms: &'a [Atom],
    assign: Vec<Option<bool>>,
    trail: Vec<usize>,
    unknown_seen: bool,
    budget: usize,
}

const DECISION_BUDGET: usize = 20_000;

fn var_of(l: i32) -> usize {
    (l.unsigned_abs() - 1) as usize
}

impl<'a> Dpll<'a> {
    fn value(&self, l: i32) -> Option<bool> {
        self.assign[var_of(l)].map(|b| b == (l > 0))
    }

    fn set(&mut self, l: i32) {
        let v = var_of(l);
        self.assign[v] = Some(l > 0);
        self.trail.push(v);
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let v = self.trail.pop().unwrap();
            self.assign[v] = None;
        }
    }

    /// Unit propagation; `false` on conflict.
    fn propagate(&mut self) -> bool {
        loop {
            let mut changed = false;
            for c in &self.cnf.clauses {
                let mut unassigned = None;
                let mut n_un = 0;
                let mut sat = false;
                for &l in c {
                    match self.value(l) {
                        Some(true) => {
                            sat = true;
                            break;
                        }
                        Some(false) => {}
                        None => {
                            n_un += 1;
                            unassigned = Some(l);
                        }
                    }
                }
                if sat {
                    continue;
                }
                match n_un {
                    0 => return false,
                    1 => {
                        self.set(unassigned.unwrap());
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                return true;
            }
        }
    }

    fn theory_rows(&self) -> Vec<Lin> {
        let mut rows = Vec::new();
        for (i, a) in self.atoms.iter().enumerate() {
            if let (Atom::Le(l), Some(b)) = (a, self.assign[i]) {
                if b {
                    rows.push(l.clone());
                } else if let Some(neg) = l.scale(-1).and_then(|n| n.add(&Lin::constant(1))) {
                    rows.push(neg);
                }
            }
        }
        rows
    }

    fn pick(&self) -> Option<i32> {
        for c in &self.cnf.clauses {
            if c.iter().any(|l| self.value(*l) == Some(true)) {
                continue;
            }
            if let Some(l) = c.iter().find(|l| self.value(**l).is_none()) {
                return Some(*l);
            }
        }
        None
    }

    fn search(&mut self) -> Option<BTreeMap<usize, i64>> {
        if self.budget == 0 {
            self.unknown_seen = true;
            return None;
        }
        self.budget -= 1;
        if !self.propagate() {
            return None;
        }
        let rows = self.theory_rows();
        let decision = self.pick();
        match lia::check(&rows) {
            LiaResult::Unsat => return None,
            LiaResult::Sat(m) if decision.is_none() => return Some(m),
            LiaResult::Unknown if decision.is_none() => {
                self.unknown_seen = true;
                return None;
            }
            _ => {}
        }
        let l = decision.unwrap();
        for lit in [l, -l] {
            let mark = self.trail.len();
            self.set(lit);
            if let Some(m) = self.search() {
                return Some(m);
            }
            self.undo_to(mark);
        }
        None
    }
}

pub fn solve(cnf: &Cnf, atoms: &[Atom]) -> SatResult {
    if cnf.clauses.iter().any(|c| c.is_empty()) {
        return SatResult::Unsat;
    }
    let mut d = Dpll {
        cnf,
        atoms,
        assign: vec![None; cnf.nvars],
        trail: Vec::new(),
        unknown_seen: false,
        budget: DECISION_BUDGET,
    };
    match d.search() {
        Some(m) => SatResult::Sat(d.assign, m),
        None if d.unknown_seen => SatResult::Unknown,
        None => SatResult::Unsat,
    }
}
