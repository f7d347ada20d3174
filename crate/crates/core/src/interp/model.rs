//! Random concrete models of preconditions.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use super::machine::{bl, Heap};
use super::sat::{satisfies, DEFAULT_DEPTH};
use crate::logic::eval::{eval, Val, Valuation};
use crate::logic::expr::{BinOp, Expr, Sort, Var};
use crate::logic::heap::{Assertion, Heaplet, Perm, UnfoldTag};
use crate::logic::spec::{Context, FreshNames};

/// Most recursive unfoldings per top-level predicate instance.
pub const MAX_LEN: usize = 5;
/// Sampled integers lie in `0..=MAX_VAL`.
pub const MAX_VAL: i64 = 9;

const FIRST_ADDR: i64 = 100;
const NODE_LIMIT: usize = 20_000;
const ATTEMPTS: usize = 20;

/// A heap, a valuation of every variable of the assertion, and the read-only
/// locations `R`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model {
    pub heap: Heap,
    pub val: Valuation,
    pub ro: BTreeSet<i64>,
    /// Locations owned by each top-level heaplet, in assertion order.
    pub footprints: Vec<BTreeSet<i64>>,
}

impl Model {
    /// `addr: value` lines followed by `RO: {addrs}`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (l, v) in &self.heap {
            out.push_str(&format!("{l}: {v}\n"));
        }
        let ro: Vec<String> = self.ro.iter().map(|l| l.to_string()).collect();
        out.push_str(&format!("RO: {{{}}}\n", ro.join(", ")));
        out
    }
}

#[derive(Clone)]
struct Item {
    h: Heaplet,
    root: usize,
}

#[derive(Clone)]
struct Gen {
    val: Valuation,
    heap: Heap,
    ro: BTreeSet<i64>,
    pending: Vec<Item>,
    pure: Vec<Expr>,
    names: FreshNames,
    next: i64,
    /// Variables in order of introduction; deeper unfoldings come later.
    order: BTreeMap<Var, usize>,
    used: Vec<usize>,
    target: Vec<usize>,
    footprints: Vec<BTreeSet<i64>>,
}

/// Samples a model of `a`, or `None` if none was found within the bounds.
pub fn random_model<R: Rng>(a: &Assertion, ctx: &Context, rng: &mut R) -> Option<Model> {
    for _ in 0..ATTEMPTS {
        let mut val = Valuation::new();
        let mut order = BTreeMap::new();
        for v in a.vars() {
            if v.sort() == Sort::Perm {
                val.insert(v.clone(), if rng.gen() { Val::Imm } else { Val::Mut });
            }
            let n = order.len();
            order.insert(v, n);
        }
        let n = a.spatial.len();
        let st = Gen {
            val,
            heap: Heap::new(),
            ro: BTreeSet::new(),
            pending: a.spatial.iter().enumerate().map(|(root, h)| Item { h: h.clone(), root }).collect(),
            pure: a.pure.clone(),
            names: FreshNames::from_vars(&a.vars()),
            next: FIRST_ADDR,
            order,
            used: vec![0; n],
            target: (0..n).map(|_| rng.gen_range(0..=MAX_LEN)).collect(),
            footprints: vec![BTreeSet::new(); n],
        };
        let mut nodes = 0;
        let Some(mut done) = generate(st, ctx, rng, &mut nodes) else {
            continue;
        };
        for v in a.vars() {
            done.val.entry(v.clone()).or_insert_with(|| domain(&v, rng).swap_remove(0));
        }
        let top = a.vars();
        done.val.retain(|v, _| top.contains(v));
        if satisfies(&done.heap, &done.val, &done.ro, a, ctx, DEFAULT_DEPTH) {
            return Some(Model {
                heap: done.heap,
                val: done.val,
                ro: done.ro,
                footprints: done.footprints,
            });
        }
    }
    None
}

fn domain<R: Rng>(v: &Var, rng: &mut R) -> Vec<Val> {
    let mut out: Vec<Val> = match v.sort() {
        Sort::Int => (0..=MAX_VAL).map(Val::Int).collect(),
        Sort::Loc => vec![Val::Int(0)],
        Sort::Bool => vec![Val::Bool(false), Val::Bool(true)],
        Sort::Perm => vec![Val::Mut, Val::Imm],
        Sort::Set => {
            let mut sets = vec![Val::Set(BTreeSet::new())];
            for _ in 0..8 {
                let k = rng.gen_range(1..=MAX_LEN);
                sets.push(Val::Set((0..k).map(|_| rng.gen_range(0..=MAX_VAL)).collect()));
            }
            sets
        }
    };
    out.shuffle(rng);
    out
}

fn is_recursive(spatial: &[Heaplet]) -> bool {
    spatial.iter().any(|h| matches!(h, Heaplet::Pred { .. }))
}

impl Gen {
    fn bind_from(&mut self, l: &Expr, r: &Expr) -> bool {
        for (a, b) in [(l, r), (r, l)] {
            if let Some(v) = a.as_var() {
                if !self.val.contains_key(v) {
                    if let Some(x) = eval(b, &self.val) {
                        self.val.insert(v.clone(), x);
                        return true;
                    }
                }
            }
        }
        false
    }

    fn claim(&mut self, l: i64, x: i64, perm: &Perm, root: usize) -> Option<()> {
        if l <= 0 || self.heap.insert(l, x).is_some() {
            return None;
        }
        let imm = match perm {
            Perm::Mut => false,
            Perm::Imm => true,
            Perm::Borrow(v) => self.val.get(v)? == &Val::Imm,
        };
        if imm {
            self.ro.insert(l);
        }
        self.footprints[root].insert(l);
        Some(())
    }

    /// Settles pure constraints and writes every cell whose address and
    /// contents are known.
    fn propagate(&mut self) -> Option<()> {
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
                        if let Expr::Bin(BinOp::Eq, l, r) = self.pure[i].clone() {
                            changed |= self.bind_from(&l, &r);
                        }
                        i += 1;
                    }
                }
            }
            let mut i = 0;
            while i < self.pending.len() {
                let Item { h, root } = self.pending[i].clone();
                let written = match &h {
                    Heaplet::PointsTo { base, offset, value, perm } => {
                        match (eval(base, &self.val).and_then(|b| b.as_int()), eval(value, &self.val)) {
                            (Some(b), Some(x)) => {
                                self.claim(b + *offset as i64, x.as_int()?, perm, root)?;
                                true
                            }
                            _ => false,
                        }
                    }
                    Heaplet::Block { base, size, perm } => match eval(base, &self.val).and_then(|b| b.as_int()) {
                        Some(b) => {
                            self.claim(bl(b), *size as i64, perm, root)?;
                            true
                        }
                        None => false,
                    },
                    Heaplet::Pred { .. } => false,
                };
                if written {
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

    /// Reserves a fresh block for an unbound base variable, sized by the
    /// pending heaplets that share it.
    fn allocate(&mut self) -> bool {
        let Some(v) = self.pending.iter().find_map(|it| match &it.h {
            Heaplet::PointsTo { base, .. } | Heaplet::Block { base, .. } => {
                base.as_var().filter(|v| !self.val.contains_key(*v)).cloned()
            }
            Heaplet::Pred { .. } => None,
        }) else {
            return false;
        };
        let base = Expr::var(&v);
        let mut size = 0;
        for it in &self.pending {
            match &it.h {
                Heaplet::Block { base: b, size: n, .. } if *b == base => size = size.max(*n),
                Heaplet::PointsTo { base: b, offset, .. } if *b == base => size = size.max(offset + 1),
                _ => {}
            }
        }
        let l = self.next + 1;
        self.next = l + size as i64;
        self.val.insert(v, Val::Int(l));
        true
    }

    /// The most recently introduced variable still blocking a heaplet or a
    /// constraint.
    fn choice_var(&self) -> Option<Var> {
        let mut vars = BTreeSet::new();
        for it in &self.pending {
            it.h.collect_vars(&mut vars);
        }
        for p in &self.pure {
            p.collect_vars(&mut vars);
        }
        vars.into_iter()
            .filter(|v| !self.val.contains_key(v))
            .max_by_key(|v| self.order.get(v).copied().unwrap_or(0))
    }
}

fn generate<R: Rng>(mut st: Gen, ctx: &Context, rng: &mut R, nodes: &mut usize) -> Option<Gen> {
    *nodes += 1;
    if *nodes > NODE_LIMIT {
        return None;
    }
    st.propagate()?;
    if let Some(i) = st.pending.iter().position(|it| matches!(it.h, Heaplet::Pred { .. })) {
        let Item { h, root } = st.pending.remove(i);
        let Heaplet::Pred { name, args, perms, .. } = h else { unreachable!() };
        let def = ctx.predicate(&name)?;
        let mut insts = def.instantiate(&args, &perms, &mut st.names, UnfoldTag::default());
        insts.shuffle(rng);
        let grow = st.used[root] < st.target[root] && rng.gen_ratio(3, 4);
        insts.sort_by_key(|inst| is_recursive(&inst.spatial) != grow);
        for inst in insts {
            let mut next = st.clone();
            if is_recursive(&inst.spatial) {
                if next.used[root] >= MAX_LEN {
                    continue;
                }
                next.used[root] += 1;
            }
            for l in &inst.locals {
                let n = next.order.len();
                next.order.insert(l.clone(), n);
            }
            next.pure.push(inst.selector);
            next.pure.extend(inst.pure);
            next.pending.extend(inst.spatial.into_iter().map(|h| Item { h, root }));
            if let Some(done) = generate(next, ctx, rng, nodes) {
                return Some(done);
            }
        }
        return None;
    }
    if st.allocate() {
        return generate(st, ctx, rng, nodes);
    }
    match st.choice_var() {
        None => (st.pending.is_empty() && st.pure.is_empty()).then_some(st),
        Some(v) => {
            for x in domain(&v, rng) {
                let mut next = st.clone();
                next.val.insert(v.clone(), x);
                if let Some(done) = generate(next, ctx, rng, nodes) {
                    return Some(done);
                }
            }
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_spec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn corpus(name: &str) -> crate::parser::SpecFile {
        let path = format!("{}/../../corpus/{name}.bossl", env!("CARGO_MANIFEST_DIR"));
        parse_spec(&std::fs::read_to_string(path).unwrap()).unwrap()
    }

    #[test]
    fn pick_model_marks_borrowed_cell_read_only() {
        let spec = corpus("pick");
        let ctx = spec.context();
        let a = Var::new("a", Sort::Perm);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut seen_imm = false;
        for _ in 0..20 {
            let m = random_model(&spec.goal.pre, &ctx, &mut rng).unwrap();
            let lx = m.val[&Var::new("x", Sort::Loc)].as_int().unwrap();
            let ly = m.val[&Var::new("y", Sort::Loc)].as_int().unwrap();
            assert_eq!(m.heap, Heap::from([(lx, 239), (ly, 30)]));
            if m.val[&a] == Val::Imm {
                seen_imm = true;
                assert_eq!(m.ro, BTreeSet::from([ly]));
            } else {
                assert!(m.ro.is_empty());
            }
        }
        assert!(seen_imm);
    }

    #[test]
    fn emp_has_an_empty_model() {
        let m = random_model(&Assertion::emp(), &Context::default(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(m.heap.is_empty() && m.ro.is_empty());
    }

    #[test]
    fn read_only_list_lies_entirely_in_r() {
        let spec = corpus("listcopy");
        let ctx = spec.context();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut lengths = BTreeSet::new();
        for _ in 0..60 {
            let m = random_model(&spec.goal.pre, &ctx, &mut rng).unwrap();
            let list = &m.footprints[1];
            let Val::Set(s) = &m.val[&Var::new("S", Sort::Set)] else { panic!() };
            assert!(s.len() <= MAX_LEN);
            lengths.insert(list.len() / 3);
            let all_imm = ["a", "b", "c"].iter().all(|p| m.val[&Var::new(*p, Sort::Perm)] == Val::Imm);
            if all_imm {
                assert!(list.is_subset(&m.ro));
            }
        }
        assert!(lengths.len() >= 4, "lengths seen: {lengths:?}");
    }

    #[test]
    fn sorted_lists_are_generated() {
        let spec = corpus("sorted-insert");
        let ctx = spec.context();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            assert!(random_model(&spec.goal.pre, &ctx, &mut rng).is_some());
        }
    }
}
