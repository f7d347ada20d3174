//! Property tests for the interpreter, solver, unifier and harness.

use std::collections::BTreeSet;
use std::path::PathBuf;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bossl::bench::Benchmark;
use bossl::engine::Mode;
use bossl::interp::{bl, random_model, satisfies, Heap, Machine};
use bossl::logic::eval::{Val, Valuation};
use bossl::logic::{BinOp, Expr, Perm, Sort, Var};
use bossl::oracle::{random_pure_query, random_unif_task};
use bossl::parser::{parse_program, parse_spec};
use bossl::pure::{Solver, Validity};
use bossl::unify::{unify, UnifOrder};

fn corpus(name: &str) -> Benchmark {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../corpus/{name}.bossl"));
    Benchmark::load(&path).unwrap()
}

const LISTCOPY: &str = "void listcopy(loc r) {
    let x2 = *r;
    if (x2 == 0) { } else {
        let v = *x2;
        let nxt = *(x2 + 1);
        *r = nxt;
        listcopy(r);
        let y1 = *r;
        let y = malloc(2);
        *r = y;
        *y = v;
        *(y + 1) = y1;
    }
}";

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Cells outside the footprint survive execution unchanged.
    #[test]
    fn execution_preserves_the_frame(seed in any::<u64>(), extra in prop::collection::btree_map(5_000i64..6_000, -50i64..50, 0..8)) {
        let b = corpus("listcopy");
        let procs = parse_program(LISTCOPY).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_model(&b.spec.goal.pre, &b.spec.context(), &mut rng).unwrap();
        let r = m.val[&Var::new("r", Sort::Loc)].as_int().unwrap();

        let mut alone = Machine::new(&procs, m.heap.clone());
        alone.run("listcopy", &[r]).unwrap();
        let mut framed_heap = m.heap.clone();
        framed_heap.extend(extra.iter().map(|(k, v)| (*k, *v)));
        let mut framed = Machine::new(&procs, framed_heap);
        framed.run("listcopy", &[r]).unwrap();

        // fresh blocks may land elsewhere, so compare the frame and the heap size
        for (k, v) in &extra {
            prop_assert_eq!(framed.heap.get(k), Some(v));
        }
        prop_assert_eq!(framed.heap.len(), alone.heap.len() + extra.len());
    }

    /// Live blocks never overlap each other or each other's meta cells.
    #[test]
    fn allocation_is_fresh(ops in prop::collection::vec((1usize..4, any::<bool>()), 1..12)) {
        let mut body = String::new();
        for (i, (size, free)) in ops.iter().enumerate() {
            body.push_str(&format!("let p{i} = malloc({size}); *(out + {i}) = p{i};"));
            for k in 0..*size {
                body.push_str(&format!("*(p{i} + {k}) = {};", 1000 + i));
            }
            if *free && i % 2 == 1 {
                body.push_str(&format!("free(p{});", i - 1));
                body.push_str(&format!("*(out + {}) = 0;", i - 1));
            }
        }
        let procs = parse_program(&format!("void f(loc out) {{ {body} }}")).unwrap();
        let out = 10i64;
        let heap: Heap = (0..ops.len() as i64).map(|i| (out + i, 0)).chain([(bl(out), ops.len() as i64)]).collect();
        let mut m = Machine::new(&procs, heap);
        m.run("f", &[out]).unwrap();
        let mut seen = BTreeSet::new();
        for (i, (size, _)) in ops.iter().enumerate() {
            let p = m.heap[&(out + i as i64)];
            if p == 0 {
                continue;
            }
            prop_assert_eq!(m.heap[&bl(p)], *size as i64);
            prop_assert!(seen.insert(bl(p)));
            for k in 0..*size as i64 {
                prop_assert_eq!(m.heap[&(p + k)], 1000 + i as i64);
                prop_assert!(seen.insert(p + k));
            }
        }
    }

    /// With a ground annotation, moving the cell in or out of R flips the
    /// verdict on a single points-to.
    #[test]
    fn satisfaction_is_precise_on_read_only_set(addr in 1i64..100, val in -20i64..20, imm in any::<bool>()) {
        let spec = parse_spec("{ x :-> v<a> } void f(loc x) { x :-> v<a> }").unwrap();
        let ctx = spec.context();
        let mut s = Valuation::new();
        s.insert(Var::new("x", Sort::Loc), Val::Int(addr));
        s.insert(Var::new("v", Sort::Int), Val::Int(val));
        s.insert(Var::new("a", Sort::Perm), if imm { Val::Imm } else { Val::Mut });
        let h: Heap = [(addr, val)].into();
        let with: BTreeSet<i64> = [addr].into();
        let without = BTreeSet::new();
        let a = &spec.goal.pre;
        prop_assert_eq!(satisfies(&h, &s, &with, a, &ctx, 2), imm);
        prop_assert_eq!(satisfies(&h, &s, &without, a, &ctx, 2), !imm);
    }

    /// Strengthening the hypothesis never turns a valid entailment invalid.
    #[test]
    fn solver_is_monotone_in_the_hypothesis(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (hyp, concl) = random_pure_query(&mut rng);
        let (extra, _) = random_pure_query(&mut rng);
        let mut solver = Solver::new();
        if solver.valid(&hyp, &concl) == Validity::Valid {
            let stronger = Expr::bin(BinOp::And, hyp, extra);
            prop_assert_ne!(solver.valid(&stronger, &concl), Validity::Invalid);
        }
    }

    /// Each unifier binds only existentials and maps the pattern into the
    /// target.
    #[test]
    fn unifiers_are_sound(seed in any::<u64>(), order in 0usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let task = random_unif_task(&mut rng);
        let order = UnifOrder::from_id(order).unwrap();
        for s in unify(&task.target, &task.pattern, &task.ex, order) {
            prop_assert!(s.domain().is_subset(&task.ex));
            let mut rest = task.target.clone();
            for p in &task.pattern {
                let img = s.apply_heaplet(p);
                let at = rest.iter().position(|t| *t == img);
                prop_assert!(at.is_some(), "{:?} not in target", img);
                rest.remove(at.unwrap());
            }
        }
    }

    /// Applying a substitution twice is the same as applying it once.
    #[test]
    fn substitution_is_idempotent(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let task = random_unif_task(&mut rng);
        if let Some(s) = unify(&task.target, &task.pattern, &task.ex, UnifOrder::from_id(0).unwrap()).next() {
            for p in &task.pattern {
                let once = s.apply_heaplet(p);
                prop_assert_eq!(s.apply_heaplet(&once), once);
            }
        }
    }
}

#[test]
fn mut_mode_erases_every_borrow() {
    let b = corpus("tcopy");
    let f = b.spec.goal.all_mutable();
    for a in [&f.pre, &f.post] {
        for h in &a.spatial {
            assert!(h.perms().iter().all(|p| **p == Perm::Mut), "{h:?}");
        }
    }
}

#[test]
fn repeated_runs_agree_except_time() {
    for name in ["pick", "listcopy", "reset"] {
        let b = corpus(name);
        for mode in [Mode::Imm, Mode::Mut] {
            let (_, mut r1) = b.run(mode, 3, 120_000);
            let (_, mut r2) = b.run(mode, 3, 120_000);
            r1.time_ms = 0;
            r2.time_ms = 0;
            assert_eq!(r1, r2);
        }
    }
}

#[test]
fn every_emitted_statement_costs_a_rule() {
    use bossl::logic::Stmt;
    for name in ["listcopy", "sorted-insert"] {
        let b = corpus(name);
        let (syn, r) = b.run(Mode::Imm, 0, 120_000);
        let stmts = syn.goal().unwrap().body.count(|s| !matches!(s, Stmt::Seq(_) | Stmt::Skip)) as u64;
        assert!(r.rules >= stmts, "{name}: {} rules, {stmts} statements", r.rules);
    }
}
