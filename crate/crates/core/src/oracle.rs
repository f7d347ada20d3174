//! Brute-force oracles for heap unification and pure validity, and the random
//! task generators that drive them.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::logic::eval::{holds, Val, Valuation};
use crate::logic::expr::{Expr, Sort, Var};
use crate::logic::heap::{Heaplet, Perm};
use crate::logic::subst::Subst;
use crate::pure::{Solver, Validity};
use crate::unify::{unify, UnifOrder};

/// Outcome of running an oracle over a batch of random tasks.
#[derive(Clone, Debug, Default)]
pub struct OracleSummary {
    pub tasks: usize,
    /// Tasks the implementation declined to decide.
    pub unknown: usize,
    pub disagreements: Vec<String>,
}

impl OracleSummary {
    pub fn agreed(&self) -> bool {
        self.disagreements.is_empty()
    }
}

/// A pattern heap to embed into a target heap, binding only `ex`.
#[derive(Clone, Debug)]
pub struct UnifTask {
    pub target: Vec<Heaplet>,
    pub pattern: Vec<Heaplet>,
    pub ex: BTreeSet<Var>,
}

fn v(name: &str, sort: Sort) -> Expr {
    Expr::Var(Var::new(name, sort))
}

fn pick<R: Rng, T: Clone>(rng: &mut R, xs: &[T]) -> T {
    xs.choose(rng).expect("non-empty choice").clone()
}

fn random_heaplet<R: Rng>(rng: &mut R, locs: &[Expr], vals: &[Expr], sets: &[Expr], perms: &[Perm]) -> Heaplet {
    match rng.gen_range(0..4) {
        0 => Heaplet::points_to(pick(rng, locs), rng.gen_range(0..2), pick(rng, vals), pick(rng, perms)),
        1 => Heaplet::block(pick(rng, locs), rng.gen_range(1..3), pick(rng, perms)),
        2 => Heaplet::pred("p", vec![pick(rng, locs), pick(rng, sets)], vec![pick(rng, perms)]),
        _ => Heaplet::pred("q", vec![pick(rng, locs)], vec![pick(rng, perms), pick(rng, perms)]),
    }
}

/// Replaces each term of `h` by an existential of the same sort with
/// probability one half.
fn abstract_heaplet<R: Rng>(rng: &mut R, h: &Heaplet) -> Heaplet {
    let term = |e: &Expr, rng: &mut R| -> Expr {
        if !rng.gen_bool(0.5) {
            return e.clone();
        }
        match e.sort() {
            Sort::Set => pick(rng, &[v("s1", Sort::Set), v("s2", Sort::Set)]),
            Sort::Int => v("n1", Sort::Int),
            _ => pick(rng, &[v("e1", Sort::Loc), v("e2", Sort::Loc)]),
        }
    };
    let perm = |p: &Perm, rng: &mut R| -> Perm {
        if rng.gen_bool(0.5) {
            pick(rng, &[Perm::borrow("p1"), Perm::borrow("p2")])
        } else {
            p.clone()
        }
    };
    match h {
        Heaplet::PointsTo { base, offset, value, perm: p } => {
            Heaplet::points_to(term(base, rng), *offset, term(value, rng), perm(p, rng))
        }
        Heaplet::Block { base, size, perm: p } => Heaplet::block(term(base, rng), *size, perm(p, rng)),
        Heaplet::Pred { name, args, perms, .. } => Heaplet::pred(
            name,
            args.iter().map(|a| term(a, rng)).collect(),
            perms.iter().map(|p| perm(p, rng)).collect(),
        ),
    }
}

/// A random task with at most three heaplets on each side.
pub fn random_unif_task<R: Rng>(rng: &mut R) -> UnifTask {
    let locs = [v("x", Sort::Loc), v("y", Sort::Loc)];
    let vals = [v("x", Sort::Loc), v("y", Sort::Loc), Expr::Int(0), v("k", Sort::Int)];
    let sets = [v("S", Sort::Set), v("T", Sort::Set)];
    let perms = [Perm::Mut, Perm::borrow("a"), Perm::borrow("b")];
    let n = rng.gen_range(1..=3);
    let target: Vec<Heaplet> = (0..n).map(|_| random_heaplet(rng, &locs, &vals, &sets, &perms)).collect();
    let m = rng.gen_range(1..=n);
    let pattern = (0..m)
        .map(|_| {
            if rng.gen_ratio(4, 5) {
                let h = pick(rng, &target);
                abstract_heaplet(rng, &h)
            } else {
                let ex_locs = [v("e1", Sort::Loc), v("x", Sort::Loc)];
                let ex_vals = [v("e1", Sort::Loc), v("n1", Sort::Int), Expr::Int(0)];
                let ex_sets = [v("s1", Sort::Set), v("S", Sort::Set)];
                let ex_perms = [Perm::Mut, Perm::borrow("p1"), Perm::borrow("a")];
                random_heaplet(rng, &ex_locs, &ex_vals, &ex_sets, &ex_perms)
            }
        })
        .collect();
    let ex = [
        Var::new("e1", Sort::Loc),
        Var::new("e2", Sort::Loc),
        Var::new("n1", Sort::Int),
        Var::new("s1", Sort::Set),
        Var::new("s2", Sort::Set),
        Var::new("p1", Sort::Perm),
        Var::new("p2", Sort::Perm),
    ]
    .into_iter()
    .collect();
    UnifTask { target, pattern, ex }
}

fn heaplet_terms(h: &Heaplet, out: &mut BTreeSet<Expr>) {
    match h {
        Heaplet::PointsTo { base, value, perm, .. } => {
            out.insert(base.clone());
            out.insert(value.clone());
            out.insert(perm.to_expr());
        }
        Heaplet::Block { base, perm, .. } => {
            out.insert(base.clone());
            out.insert(perm.to_expr());
        }
        Heaplet::Pred { args, perms, .. } => {
            out.extend(args.iter().cloned());
            out.extend(perms.iter().map(Perm::to_expr));
        }
    }
}

/// Whether `small` is a sub-multiset of `big` under syntactic equality.
fn sub_multiset(small: &[Heaplet], big: &[Heaplet]) -> bool {
    let mut counts: BTreeMap<String, i64> = BTreeMap::new();
    for h in big {
        *counts.entry(format!("{h:?}")).or_default() += 1;
    }
    for h in small {
        let c = counts.entry(format!("{h:?}")).or_default();
        *c -= 1;
        if *c < 0 {
            return false;
        }
    }
    true
}

/// Every substitution over the pattern's existentials, drawn from the terms
/// of the target, under which the pattern becomes a sub-multiset of the
/// target.
pub fn brute_force_unifiers(task: &UnifTask) -> BTreeSet<Subst> {
    let mut pat_vars = BTreeSet::new();
    task.pattern.iter().for_each(|h| h.collect_vars(&mut pat_vars));
    let vars: Vec<Var> = pat_vars.into_iter().filter(|x| task.ex.contains(x)).collect();
    let mut terms = BTreeSet::new();
    task.target.iter().for_each(|h| heaplet_terms(h, &mut terms));
    let terms: Vec<Expr> = terms.into_iter().collect();
    let mut out = BTreeSet::new();
    let mut idx = vec![0usize; vars.len()];
    loop {
        let pairs = vars.iter().cloned().zip(idx.iter().map(|i| terms[*i].clone()));
        if let Ok(s) = Subst::from_pairs(pairs) {
            let image: Vec<Heaplet> = task.pattern.iter().map(|h| s.apply_heaplet(h)).collect();
            if sub_multiset(&image, &task.target) {
                out.insert(s);
            }
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return out;
            }
            idx[k] += 1;
            if idx[k] < terms.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Compares `unify` with the brute-force oracle on `n` random tasks, cycling
/// through every unification order.
pub fn check_unifier(n: usize, seed: u64) -> OracleSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut summary = OracleSummary {
        tasks: n,
        ..Default::default()
    };
    for i in 0..n {
        let task = random_unif_task(&mut rng);
        let order = UnifOrder::ALL[i % UnifOrder::ALL.len()];
        let got: Vec<Subst> = unify(&task.target, &task.pattern, &task.ex, order).collect();
        let got_set: BTreeSet<Subst> = got.iter().cloned().collect();
        let want = brute_force_unifiers(&task);
        if got_set != want || got_set.len() != got.len() {
            summary.disagreements.push(format!(
                "target {:?}\npattern {:?}\nunify {:?}\noracle {:?}",
                task.target, task.pattern, got, want
            ));
        }
    }
    summary
}

/// Truth of `hyp ⇒ concl` for every valuation with integers in −4..4, sets
/// drawn from subsets of {0..3} and both permission constants.
pub fn bounded_valid(hyp: &Expr, concl: &Expr) -> bool {
    let implication = Expr::or_all([Expr::not(hyp.clone()), concl.clone()]);
    let vars: Vec<Var> = implication.vars().into_iter().collect();
    let domain = |s: Sort| -> Vec<Val> {
        match s {
            Sort::Int | Sort::Loc => (-4..=4).map(Val::Int).collect(),
            Sort::Bool => vec![Val::Bool(false), Val::Bool(true)],
            Sort::Perm => vec![Val::Mut, Val::Imm],
            Sort::Set => (0u8..16)
                .map(|m| Val::Set((0..4).filter(|i| m & (1 << i) != 0).collect()))
                .collect(),
        }
    };
    let domains: Vec<Vec<Val>> = vars.iter().map(|x| domain(x.sort())).collect();
    let mut idx = vec![0usize; vars.len()];
    loop {
        let env: Valuation = vars
            .iter()
            .cloned()
            .zip(idx.iter().zip(&domains).map(|(i, d)| d[*i].clone()))
            .collect();
        if holds(&implication, &env) != Some(true) {
            return false;
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return true;
            }
            idx[k] += 1;
            if idx[k] < domains[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Variables and the constants 0 and 1; every satisfiable ordering of three
/// such terms has a witness inside −4..4.
fn int_term<R: Rng>(rng: &mut R) -> Expr {
    match rng.gen_range(0..5) {
        0 => Expr::Int(rng.gen_range(0..=1)),
        _ => pick(rng, &[v("x", Sort::Int), v("y", Sort::Int), v("z", Sort::Int)]),
    }
}

fn elem<R: Rng>(rng: &mut R) -> Expr {
    if rng.gen_bool(0.3) {
        v("x", Sort::Int)
    } else {
        Expr::Int(rng.gen_range(0..=1))
    }
}

fn set_term<R: Rng>(rng: &mut R) -> Expr {
    let s = pick(rng, &[v("S", Sort::Set), v("T", Sort::Set)]);
    match rng.gen_range(0..5) {
        0 => Expr::SetLit(vec![]),
        1 => Expr::SetLit(vec![elem(rng)]),
        2 => Expr::union(Expr::SetLit(vec![elem(rng)]), s),
        3 => Expr::union(v("S", Sort::Set), v("T", Sort::Set)),
        _ => s,
    }
}

fn atom<R: Rng>(rng: &mut R) -> Expr {
    let a = match rng.gen_range(0..10) {
        0..=4 => {
            let (l, r) = (int_term(rng), int_term(rng));
            match rng.gen_range(0..4) {
                0 => Expr::eq(l, r),
                1 => Expr::lt(l, r),
                2 => Expr::eq(v("y", Sort::Int), Expr::ite(Expr::le(l.clone(), r.clone()), l, r)),
                _ => Expr::le(l, r),
            }
        }
        5..=7 => Expr::eq(set_term(rng), set_term(rng)),
        _ => {
            let a = v("a", Sort::Perm);
            let r = pick(rng, &[Expr::Mut, Expr::Imm, v("b", Sort::Perm)]);
            Expr::eq(a, r)
        }
    };
    if rng.gen_ratio(1, 4) {
        Expr::not(a)
    } else {
        a
    }
}

/// A random entailment in the bounded fragment. Integers used as set
/// elements are confined to {0, 1} by the hypothesis, leaving elements 2 and 3
/// free to witness fresh set members.
pub fn random_pure_query<R: Rng>(rng: &mut R) -> (Expr, Expr) {
    let mut hyp: Vec<Expr> = (0..rng.gen_range(0..=3)).map(|_| atom(rng)).collect();
    let concl = match rng.gen_range(0..4) {
        0 => Expr::or_all([atom(rng), atom(rng)]),
        1 => Expr::and_all([atom(rng), atom(rng)]),
        _ => atom(rng),
    };
    let x = Var::new("x", Sort::Int);
    let as_elem = |e: &Expr| {
        let mut found = false;
        visit_set_literals(e, &mut |lit| found |= lit.iter().any(|t| t.mentions(&x)));
        found
    };
    if hyp.iter().chain([&concl]).any(as_elem) {
        hyp.push(Expr::le(Expr::Int(0), v("x", Sort::Int)));
        hyp.push(Expr::le(v("x", Sort::Int), Expr::Int(1)));
    }
    hyp.shuffle(rng);
    (Expr::and_all(hyp), concl)
}

fn visit_set_literals(e: &Expr, f: &mut dyn FnMut(&[Expr])) {
    match e {
        Expr::SetLit(es) => f(es),
        Expr::Bin(_, l, r) => {
            visit_set_literals(l, f);
            visit_set_literals(r, f);
        }
        Expr::Not(x) => visit_set_literals(x, f),
        Expr::Ite(c, t, g) => {
            visit_set_literals(c, f);
            visit_set_literals(t, f);
            visit_set_literals(g, f);
        }
        _ => {}
    }
}

/// Compares the pure solver with bounded enumeration on `n` random queries.
pub fn check_solver(n: usize, seed: u64) -> OracleSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut solver = Solver::new();
    let mut summary = OracleSummary {
        tasks: n,
        ..Default::default()
    };
    for _ in 0..n {
        let (hyp, concl) = random_pure_query(&mut rng);
        let want = bounded_valid(&hyp, &concl);
        match solver.valid(&hyp, &concl) {
            Validity::Unknown => summary.unknown += 1,
            got => {
                if (got == Validity::Valid) != want {
                    summary
                        .disagreements
                        .push(format!("{hyp} => {concl}: solver {got}, enumeration {want}"));
                }
            }
        }
    }
    summary
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brute_force_finds_the_call_substitution() {
        let task = UnifTask {
            target: vec![
                Heaplet::points_to(v("x", Sort::Loc), 0, Expr::Int(239), Perm::Mut),
                Heaplet::points_to(v("y", Sort::Loc), 0, Expr::Int(30), Perm::borrow("a")),
            ],
            pattern: vec![Heaplet::points_to(v("x", Sort::Loc), 0, v("z", Sort::Int), Perm::Mut)],
            ex: [Var::new("z", Sort::Int)].into_iter().collect(),
        };
        let found = brute_force_unifiers(&task);
        assert_eq!(found.len(), 1);
        let s = found.into_iter().next().unwrap();
        assert_eq!(s.get(&Var::new("z", Sort::Int)), Some(&Expr::Int(239)));
    }

    #[test]
    fn mut_pattern_never_matches_a_borrow() {
        let task = UnifTask {
            target: vec![Heaplet::points_to(v("y", Sort::Loc), 0, Expr::Int(30), Perm::borrow("c"))],
            pattern: vec![Heaplet::points_to(v("y", Sort::Loc), 0, v("e", Sort::Int), Perm::Mut)],
            ex: [Var::new("e", Sort::Int)].into_iter().collect(),
        };
        assert!(brute_force_unifiers(&task).is_empty());
    }

    #[test]
    fn bounded_enumeration_on_known_entailments() {
        let s = v("S", Sort::Set);
        let s1 = v("S1", Sort::Set);
        let x = v("x", Sort::Int);
        let hyp = Expr::and_all([
            Expr::eq(s.clone(), Expr::union(Expr::SetLit(vec![x.clone()]), s1.clone())),
            Expr::eq(s1, Expr::SetLit(vec![])),
        ]);
        assert!(bounded_valid(&hyp, &Expr::eq(s, Expr::SetLit(vec![x]))));
        assert!(!bounded_valid(&Expr::Bool(true), &Expr::le(Expr::Int(239), Expr::Int(100))));
    }

    #[test]
    fn small_batches_agree() {
        let u = check_unifier(200, 11);
        assert!(u.agreed(), "{}", u.disagreements.join("\n\n"));
        let p = check_solver(200, 11);
        assert!(p.agreed(), "{}", p.disagreements.join("\n"));
    }
}
