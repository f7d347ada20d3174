//! Satisfaction of assertions by concrete heap fragments.
//!
//! Clause-local and existential variables are bound while matching: from heap
//! contents, from equations whose other side is already known, and as a last
//! resort by enumerating a bounded candidate domain.

use std::collections::BTreeSet;

use super::machine::{bl, Heap};
use crate::logic::eval::{eval, Val, Valuation};
use crate::logic::expr::{BinOp, Expr, Sort, Var};
use crate::logic::heap::{Assertion, Heaplet, Perm, UnfoldTag};
use crate::logic::spec::{Context, FreshNames};

/// Default unfolding bound: the longest generated list plus one.
pub const DEFAULT_DEPTH: u32 = 6;

const NODE_LIMIT: usize = 200_000;

/// `h, s ⊨_R a` with predicates unfolded at most `depth` times along any path.
pub fn satisfies(h: &Heap, s: &Valuation, ro: &BTreeSet<i64>, a: &Assertion, ctx: &Context, depth: u32) -> bool {
    witness(h, s, ro, a, ctx, depth).is_some()
}

/// Like [`satisfies`], returning an extension of `s` that justifies it.
pub fn witness(
    h: &Heap,
    s: &Valuation,
    ro: &BTreeSet<i64>,
    a: &Assertion,
    ctx: &Context,
    depth: u32,
) -> Option<Valuation> {
    let mut candidates: BTreeSet<i64> = (0..=9).collect();
    candidates.extend(h.values().copied());
    let mut names = FreshNames::from_vars(&a.vars());
    for v in s.keys() {
        names.reserve(v.name());
    }
    let state = State {
        val: s.clone(),
        heap: h.clone(),
        pending: a.spatial.iter().map(|x| (x.clone(), depth)).collect(),
        pure: a.pure.clone(),
        names,
    };
    let mut m = Matcher {
        ctx,
        ro,
        candidates: candidates.into_iter().collect(),
        nodes: 0,
    };
    m.solve(state)
}

#[derive(Clone)]
struct State {
    val: Valuation,
    heap: Heap,
    pending: Vec<(Heaplet, u32)>,
    pure: Vec<Expr>,
    names: FreshNames,
}

struct Matcher<'a> {
    ctx: &'a Context,
    ro: &'a BTreeSet<i64>,
    candidates: Vec<i64>,
    nodes: usize,
}

fn fits(v: &Var, x: &Val) -> bool {
    matches!(
        (v.sort(), x),
        (Sort::Int | Sort::Loc, Val::Int(_)) | (Sort::Bool, Val::Bool(_)) | (Sort::Set, Val::Set(_)) | (Sort::Perm, Val::Mut | Val::Imm)
    )
}

fn perm_val(p: &Perm, val: &Valuation) -> Option<Val> {
    match p {
        Perm::Mut => Some(Val::Mut),
        Perm::Imm => Some(Val::Imm),
        Perm::Borrow(v) => val.get(v).cloned(),
    }
}

fn int(e: &Expr, val: &Valuation) -> Option<i64> {
    eval(e, val)?.as_int()
}

impl State {
    /// Tries to bind an unbound variable from `l == r`.
    fn bind_from(&mut self, l: &Expr, r: &Expr) -> bool {
        for (a, b) in [(l, r), (r, l)] {
            if let Some(v) = a.as_var() {
                if !self.val.contains_key(v) {
                    if let Some(x) = eval(b, &self.val) {
                        if fits(v, &x) {
                            self.val.insert(v.clone(), x);
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    /// Checks a location against `ro`, binding an unbound borrow variable.
    fn check_perm(&mut self, p: &Perm, loc: i64, ro: &BTreeSet<i64>) -> bool {
        let imm = ro.contains(&loc);
        match perm_val(p, &self.val) {
            Some(Val::Imm) => imm,
            Some(Val::Mut) => !imm,
            Some(_) => false,
            None => {
                let v = p.var().expect("only borrow variables can be unbound");
                self.val.insert(v.clone(), if imm { Val::Imm } else { Val::Mut });
                true
            }
        }
    }

    /// Consumes heap cells for points-to and block heaplets with known bases
    /// and settles decidable pure constraints. `None` on contradiction.
    fn propagate(&mut self, ro: &BTreeSet<i64>) -> Option<()> {
        loop {
            let mut changed = false;
            let mut i = 0;
            while i < self.pure.len() {
                match eval(&self.pure[i], &self.val) {
                    Some(Val::Bool(true)) => {
                        self.pure.swap_remove(i);
                        changed = true;
                    }
                    Some(_) => return None,
                    None => {
                        let p = self.pure[i].clone();
                        if let Expr::Bin(BinOp::Eq, l, r) = &p {
                            changed |= self.bind_from(l, r);
                        }
                        i += 1;
                    }
                }
            }
            let mut i = 0;
            while i < self.pending.len() {
                let (h, _) = &self.pending[i];
                let done = match h {
                    Heaplet::PointsTo { base, offset, value, perm } => match int(base, &self.val) {
                        Some(b) => {
                            let l = b + *offset as i64;
                            let x = self.heap.remove(&l)?;
                            let (value, perm) = (value.clone(), perm.clone());
                            if !self.check_perm(&perm, l, ro) {
                                return None;
                            }
                            self.pure.push(Expr::eq(value, Expr::Int(x)));
                            true
                        }
                        None => false,
                    },
                    Heaplet::Block { base, size, perm } => match int(base, &self.val) {
                        Some(b) => {
                            let (size, perm) = (*size as i64, perm.clone());
                            if self.heap.remove(&bl(b))? != size || !self.check_perm(&perm, bl(b), ro) {
                                return None;
                            }
                            true
                        }
                        None => false,
                    },
                    Heaplet::Pred { .. } => false,
                };
                if done {
                    self.pending.swap_remove(i);
                    changed = true;
                } else {
                    i += 1;
                }
            }
            if !changed {
                return Some(());
            }
        }
    }

    fn unbound_in(&self, e: &Expr) -> Option<Var> {
        e.vars().into_iter().find(|v| !self.val.contains_key(v))
    }

    /// The next variable to enumerate: one blocking a heaplet base first.
    fn stuck_var(&self) -> Option<Var> {
        for (h, _) in &self.pending {
            if let Some(b) = h.base() {
                if let Some(v) = self.unbound_in(b) {
                    return Some(v);
                }
            }
        }
        self.pure.iter().find_map(|p| self.unbound_in(p))
    }
}

impl Matcher<'_> {
    fn solve(&mut self, mut st: State) -> Option<Valuation> {
        self.nodes += 1;
        if self.nodes > NODE_LIMIT {
            return None;
        }
        st.propagate(self.ro)?;
        let pred = st
            .pending
            .iter()
            .enumerate()
            .filter(|(_, (h, _))| matches!(h, Heaplet::Pred { .. }))
            .min_by_key(|(_, (h, _))| h.base().is_none_or(|b| int(b, &st.val).is_none()))
            .map(|(i, _)| i);
        if let Some(i) = pred {
            let (h, depth) = st.pending.swap_remove(i);
            let Heaplet::Pred { name, args, perms, .. } = h else { unreachable!() };
            if depth == 0 {
                return None;
            }
            let def = self.ctx.predicate(&name)?;
            let instances = def.instantiate(&args, &perms, &mut st.names, UnfoldTag::default());
            for inst in instances {
                let mut next = st.clone();
                next.pure.push(inst.selector);
                next.pure.extend(inst.pure);
                next.pending.extend(inst.spatial.into_iter().map(|x| (x, depth - 1)));
                if let Some(v) = self.solve(next) {
                    return Some(v);
                }
            }
            return None;
        }
        match st.stuck_var() {
            None if st.pending.is_empty() && st.heap.is_empty() && st.pure.is_empty() => Some(st.val),
            None => None,
            Some(v) => {
                for x in self.domain(&v, &st.val) {
                    let mut next = st.clone();
                    next.val.insert(v.clone(), x);
                    if let Some(r) = self.solve(next) {
                        return Some(r);
                    }
                }
                None
            }
        }
    }

    fn domain(&self, v: &Var, val: &Valuation) -> Vec<Val> {
        match v.sort() {
            Sort::Int | Sort::Loc => self.candidates.iter().map(|n| Val::Int(*n)).collect(),
            Sort::Bool => vec![Val::Bool(false), Val::Bool(true)],
            Sort::Perm => vec![Val::Mut, Val::Imm],
            Sort::Set => {
                let mut elems = BTreeSet::new();
                for x in val.values() {
                    if let Val::Set(s) = x {
                        elems.extend(s.iter().copied());
                    }
                }
                let elems: Vec<i64> = elems.into_iter().take(8).collect();
                (0u32..1 << elems.len())
                    .map(|mask| {
                        Val::Set(
                            elems
                                .iter()
                                .enumerate()
                                .filter(|(i, _)| mask & (1 << i) != 0)
                                .map(|(_, e)| *e)
                                .collect(),
                        )
                    })
                    .collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_spec;

    const LS: &str = "predicate ls(loc x, set S)<a, b, c> {
        x == 0 => { S == {} ; emp }
        | not (x == 0) => { S == {v} ++ S1 ; [x, 2]<a> ** x :-> v<b> ** (x + 1) :-> nxt<c> ** ls(nxt, S1)<a, b, c> }
    }
    { ls(x, S)<a, b, c> } void f(loc x) { ls(x, S)<a, b, c> }";

    fn ctx() -> (Context, Assertion) {
        let spec = parse_spec(LS).unwrap();
        (spec.context(), spec.goal.pre.clone())
    }

    fn loc(n: &str) -> Var {
        Var::new(n, Sort::Loc)
    }

    #[test]
    fn empty_heap_satisfies_emp() {
        let (c, _) = ctx();
        assert!(satisfies(&Heap::new(), &Valuation::new(), &BTreeSet::new(), &Assertion::emp(), &c, 1));
        assert!(!satisfies(&Heap::from([(1, 1)]), &Valuation::new(), &BTreeSet::new(), &Assertion::emp(), &c, 1));
    }

    #[test]
    fn points_to_requires_ro_membership_to_match() {
        let (c, _) = ctx();
        let a = Assertion::new(vec![], vec![Heaplet::points_to(Expr::var(&loc("x")), 0, Expr::Int(5), Perm::Imm)]);
        let s = Valuation::from([(loc("x"), Val::Int(3))]);
        let h = Heap::from([(3, 5)]);
        assert!(satisfies(&h, &s, &BTreeSet::from([3]), &a, &c, 1));
        assert!(!satisfies(&h, &s, &BTreeSet::new(), &a, &c, 1));
        assert!(!satisfies(&Heap::from([(3, 6)]), &s, &BTreeSet::from([3]), &a, &c, 1));
    }

    #[test]
    fn two_cell_list_at_depth_two() {
        let (c, pre) = ctx();
        let s = Valuation::from([
            (loc("x"), Val::Int(10)),
            (Var::new("S", Sort::Set), Val::Set(BTreeSet::from([4]))),
            (Var::new("a", Sort::Perm), Val::Mut),
            (Var::new("b", Sort::Perm), Val::Mut),
            (Var::new("c", Sort::Perm), Val::Mut),
        ]);
        let h = Heap::from([(9, 2), (10, 4), (11, 0)]);
        let none = BTreeSet::new();
        assert!(satisfies(&h, &s, &none, &pre, &c, 2));
        assert!(!satisfies(&h, &s, &none, &pre, &c, 1));
        let mut wrong = s.clone();
        wrong.insert(Var::new("S", Sort::Set), Val::Set(BTreeSet::from([5])));
        assert!(!satisfies(&h, &wrong, &none, &pre, &c, 2));
    }

    #[test]
    fn existential_set_is_recovered() {
        let (c, pre) = ctx();
        let s = Valuation::from([
            (loc("x"), Val::Int(10)),
            (Var::new("a", Sort::Perm), Val::Imm),
            (Var::new("b", Sort::Perm), Val::Imm),
            (Var::new("c", Sort::Perm), Val::Imm),
        ]);
        let h = Heap::from([(9, 2), (10, 4), (11, 20), (19, 2), (20, 7), (21, 0)]);
        let ro: BTreeSet<i64> = h.keys().copied().collect();
        let w = witness(&h, &s, &ro, &pre, &c, 3).unwrap();
        assert_eq!(w[&Var::new("S", Sort::Set)], Val::Set(BTreeSet::from([4, 7])));
    }
}
