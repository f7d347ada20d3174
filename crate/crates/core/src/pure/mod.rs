//! Validity of pure implications over integers, locations, booleans,
//! finite sets and permission constants.

pub mod encode;
pub mod lia;
pub mod sat;
pub mod simplify;
pub mod smt;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::time::{Duration, Instant};

use crate::logic::eval::{holds, Val, Valuation};
use crate::logic::expr::{Expr, Sort};
use encode::{clausify, Atom, Encoder};
use sat::SatResult;
use smt::SmtBackend;

pub use simplify::{oriented_equalities, simplify};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Validity {
    Valid,
    Invalid,
    Unknown,
}

impl fmt::Display for Validity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Validity::Valid => "valid",
            Validity::Invalid => "invalid",
            Validity::Unknown => "unknown",
        })
    }
}

#[derive(Clone, Debug)]
pub enum Satisfiability {
    Sat(Valuation),
    Unsat,
    Unknown,
}

#[derive(Clone, Debug, Default)]
pub struct SolverStats {
    pub queries: usize,
    pub cache_hits: usize,
    pub fast_path: usize,
    pub external: usize,
    pub time: Duration,
}

/// A caching validity checker. Not shared between threads; create one per
/// search.
pub struct Solver {
    cache: HashMap<(Expr, Expr), Validity>,
    external: Option<SmtBackend>,
    pub stats: SolverStats,
}

impl Default for Solver {
    fn default() -> Self {
        Solver::new()
    }
}

impl Solver {
    /// Built-in procedure, plus the external prover named by `BOSSL_SMT`
    /// when that variable is set.
    pub fn new() -> Solver {
        Solver {
            cache: HashMap::new(),
            external: SmtBackend::from_env(),
            stats: SolverStats::default(),
        }
    }

    pub fn builtin() -> Solver {
        Solver {
            cache: HashMap::new(),
            external: None,
            stats: SolverStats::default(),
        }
    }

    pub fn with_external(backend: SmtBackend) -> Solver {
        Solver {
            external: Some(backend),
            ..Solver::builtin()
        }
    }

    /// Does `hyp ⇒ concl` hold for every valuation?
    pub fn valid(&mut self, hyp: &Expr, concl: &Expr) -> Validity {
        self.stats.queries += 1;
        let key = (hyp.clone(), concl.clone());
        if let Some(v) = self.cache.get(&key) {
            self.stats.cache_hits += 1;
            return *v;
        }
        let start = Instant::now();
        let r = self.valid_uncached(hyp, concl);
        self.stats.time += start.elapsed();
        self.cache.insert(key, r);
        r
    }

    fn valid_uncached(&mut self, hyp: &Expr, concl: &Expr) -> Validity {
        let concl = simplify(concl);
        if concl == Expr::Bool(true) {
            self.stats.fast_path += 1;
            return Validity::Valid;
        }
        let hyp = simplify(hyp);
        if hyp == Expr::Bool(false) {
            self.stats.fast_path += 1;
            return Validity::Valid;
        }
        let have: BTreeSet<Expr> = hyp.conjuncts().into_iter().collect();
        if concl.conjuncts().iter().all(|c| have.contains(c)) {
            self.stats.fast_path += 1;
            return Validity::Valid;
        }
        let query = Expr::bin(crate::logic::BinOp::And, hyp, Expr::not(concl));
        match self.satisfiable(&query) {
            Satisfiability::Unsat => Validity::Valid,
            Satisfiability::Sat(_) => Validity::Invalid,
            Satisfiability::Unknown => Validity::Unknown,
        }
    }

    /// Satisfiability with a verified model when `Sat`.
    pub fn satisfiable(&mut self, e: &Expr) -> Satisfiability {
        let r = builtin_satisfiable(e);
        if !matches!(r, Satisfiability::Unknown) {
            return r;
        }
        if let Some(ext) = &self.external {
            self.stats.external += 1;
            match ext.check_sat(e) {
                Some(true) => {
                    // no model from the subprocess; satisfiable is all we need
                    return Satisfiability::Sat(Valuation::new());
                }
                Some(false) => return Satisfiability::Unsat,
                None => {}
            }
        }
        Satisfiability::Unknown
    }

    /// Is `e` unsatisfiable? `Unknown` counts as no.
    pub fn unsat(&mut self, e: &Expr) -> bool {
        self.valid(e, &Expr::Bool(false)) == Validity::Valid
    }
}

/// The built-in decision procedure without caching or external fallback.
pub fn builtin_satisfiable(e: &Expr) -> Satisfiability {
    let mut enc = Encoder::new();
    let Ok(root) = enc.encode(e) else {
        return Satisfiability::Unknown;
    };
    let cnf = clausify(&root, enc.atoms.len());
    match sat::solve(&cnf, &enc.atoms) {
        SatResult::Unsat => Satisfiability::Unsat,
        SatResult::Unknown => Satisfiability::Unknown,
        SatResult::Sat(assign, ints) => {
            let mut val = Valuation::new();
            for v in e.vars() {
                let x = match v.sort() {
                    Sort::Int | Sort::Loc => {
                        Val::Int(enc.ints.get(&v).and_then(|i| ints.get(i)).copied().unwrap_or(0))
                    }
                    Sort::Perm => {
                        let n = enc.ints.get(&v).and_then(|i| ints.get(i)).copied().unwrap_or(1);
                        if n == 1 {
                            Val::Mut
                        } else {
                            Val::Imm
                        }
                    }
                    Sort::Bool => {
                        let b = enc
                            .atoms
                            .iter()
                            .position(|a| a == &Atom::Bool(v.clone()))
                            .and_then(|i| assign[i])
                            .unwrap_or(false);
                        Val::Bool(b)
                    }
                    Sort::Set => {
                        let mut s = BTreeSet::new();
                        for (i, a) in enc.atoms.iter().enumerate() {
                            if let Atom::Mem(p, x) = a {
                                if x == &v && assign[i] == Some(true) {
                                    if let Some(n) = enc.points()[*p].eval(&ints) {
                                        s.insert(n);
                                    }
                                }
                            }
                        }
                        Val::Set(s)
                    }
                };
                val.insert(v, x);
            }
            if holds(e, &val) == Some(true) {
                Satisfiability::Sat(val)
            } else {
                Satisfiability::Unknown
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::expr::Var;

    fn iv(n: &str) -> Expr {
        Expr::Var(Var::new(n, Sort::Int))
    }
    fn sv(n: &str) -> Expr {
        Expr::Var(Var::new(n, Sort::Set))
    }

    #[test]
    fn pick_failed_branch_is_invalid() {
        let mut s = Solver::builtin();
        let r = s.valid(&Expr::Bool(true), &Expr::le(Expr::Int(239), Expr::Int(100)));
        assert_eq!(r, Validity::Invalid);
    }

    #[test]
    fn reflexive() {
        let mut s = Solver::builtin();
        let phi = Expr::lt(iv("x"), Expr::add(iv("y"), Expr::Int(2)));
        assert_eq!(s.valid(&phi, &phi), Validity::Valid);
    }

    #[test]
    fn singleton_union_with_empty() {
        let mut s = Solver::builtin();
        let hyp = Expr::and_all([
            Expr::eq(sv("S"), Expr::union(Expr::SetLit(vec![iv("v")]), sv("S1"))),
            Expr::eq(sv("S1"), Expr::SetLit(vec![])),
        ]);
        let concl = Expr::eq(sv("S"), Expr::SetLit(vec![iv("v")]));
        assert_eq!(s.valid(&hyp, &concl), Validity::Valid);
        let wrong = Expr::eq(sv("S"), Expr::SetLit(vec![]));
        assert_eq!(s.valid(&hyp, &wrong), Validity::Invalid);
    }

    #[test]
    fn permission_equalities() {
        let a = Expr::Var(Var::new("a", Sort::Perm));
        let b = Expr::Var(Var::new("b", Sort::Perm));
        let mut s = Solver::builtin();
        let hyp = Expr::and_all([Expr::eq(a.clone(), Expr::Mut), Expr::eq(a.clone(), b.clone())]);
        assert_eq!(s.valid(&hyp, &Expr::eq(b.clone(), Expr::Mut)), Validity::Valid);
        // two values only: a != Mut means a == Imm
        assert_eq!(
            s.valid(&Expr::neq(a.clone(), Expr::Mut), &Expr::eq(a, Expr::Imm)),
            Validity::Valid
        );
    }

    #[test]
    fn strict_order_on_integers() {
        let mut s = Solver::builtin();
        let hyp = Expr::and_all([Expr::lt(iv("x"), iv("y")), Expr::lt(iv("y"), Expr::add(iv("x"), Expr::Int(2)))]);
        let concl = Expr::eq(iv("y"), Expr::add(iv("x"), Expr::Int(1)));
        assert_eq!(s.valid(&hyp, &concl), Validity::Valid);
    }

    #[test]
    fn cache_hits_are_counted() {
        let mut s = Solver::builtin();
        let p = Expr::le(iv("x"), Expr::Int(3));
        let q = Expr::le(iv("x"), Expr::Int(4));
        s.valid(&p, &q);
        s.valid(&p, &q);
        assert_eq!(s.stats.cache_hits, 1);
    }
}
