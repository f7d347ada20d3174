//! Randomized validation of synthesized procedures against their
//! specifications.

use std::collections::BTreeSet;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::machine::{Fault, Heap, Machine};
use super::model::{random_model, Model};
use super::sat::{witness, DEFAULT_DEPTH};
use crate::logic::eval::Val;
use crate::logic::program::Procedure;
use crate::logic::spec::{Context, FunctionSpec};

/// Unfolding bound for a postcondition over `heap`: outputs may be longer than
/// any sampled input, and every non-empty unfolding consumes a cell.
pub fn post_depth(heap: &Heap) -> u32 {
    DEFAULT_DEPTH.max(heap.len() as u32 + 1)
}

/// The final state of one execution.
#[derive(Clone, Debug)]
pub struct Run {
    pub heap: Heap,
    pub stores: Vec<i64>,
    pub trace: Vec<String>,
}

/// Runs `name` from `model`, passing the model's values of `formals`.
pub fn execute(procs: &[Procedure], spec: &FunctionSpec, model: &Model) -> Result<Run, (Fault, Vec<String>)> {
    let args: Vec<i64> = spec
        .formals
        .iter()
        .map(|f| model.val.get(f).and_then(Val::as_int).unwrap_or(0))
        .collect();
    let mut m = Machine::new(procs, model.heap.clone());
    match m.run(&spec.name, &args) {
        Ok(()) => Ok(Run {
            heap: m.heap,
            stores: m.stores,
            trace: m.trace,
        }),
        Err(f) => Err((f, m.trace)),
    }
}

#[derive(Clone, Debug)]
pub struct Failure {
    pub sample: usize,
    pub reason: String,
    pub model: Model,
    pub trace: Vec<String>,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "sample {}: {}", self.sample, self.reason)?;
        f.write_str(&self.model.render())?;
        writeln!(f, "trace:")?;
        for t in &self.trace {
            writeln!(f, "  {t}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub samples: usize,
    pub failures: Vec<Failure>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return writeln!(f, "ok: {} samples", self.samples);
        }
        writeln!(f, "FAILED: {} of {} samples", self.failures.len(), self.samples)?;
        for fail in &self.failures {
            write!(f, "{fail}")?;
        }
        Ok(())
    }
}

/// Checks one execution: read-only cells survive unchanged and the final
/// state satisfies the postcondition for some existential valuation.
fn check_sample(procs: &[Procedure], spec: &FunctionSpec, ctx: &Context, sample: usize, model: Model) -> Option<Failure> {
    let fail = |reason: String, trace: Vec<String>, model: Model| {
        Some(Failure {
            sample,
            reason,
            model,
            trace,
        })
    };
    let run = match execute(procs, spec, &model) {
        Ok(run) => run,
        Err((fault, trace)) => return fail(format!("fault: {fault}"), trace, model),
    };
    let lost: BTreeSet<i64> = model.ro.iter().copied().filter(|l| !run.heap.contains_key(l)).collect();
    if !lost.is_empty() {
        return fail(format!("read-only locations deallocated: {lost:?}"), run.trace, model);
    }
    let changed: Vec<i64> = model.ro.iter().copied().filter(|l| run.heap[l] != model.heap[l]).collect();
    if !changed.is_empty() {
        return fail(format!("read-only locations modified: {changed:?}"), run.trace, model);
    }
    if witness(&run.heap, &model.val, &model.ro, &spec.post, ctx, post_depth(&run.heap)).is_none() {
        let mut reason = String::from("postcondition not satisfied by final heap\n");
        for (l, v) in &run.heap {
            reason.push_str(&format!("  {l}: {v}\n"));
        }
        return fail(reason, run.trace, model);
    }
    None
}

/// Runs `procs` (the procedure named by `spec` among them) from `n` random
/// models of `spec.pre`, seeded deterministically from `seed`.
pub fn check_ro_preservation(procs: &[Procedure], spec: &FunctionSpec, ctx: &Context, n: usize, seed: u64) -> Report {
    let mut failures: Vec<Failure> = (0..n)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003).wrapping_add(i as u64));
            match random_model(&spec.pre, ctx, &mut rng) {
                Some(model) => check_sample(procs, spec, ctx, i, model),
                None => Some(Failure {
                    sample: i,
                    reason: "no model of the precondition within bounds".into(),
                    model: Model {
                        heap: Heap::new(),
                        val: Default::default(),
                        ro: BTreeSet::new(),
                        footprints: Vec::new(),
                    },
                    trace: Vec::new(),
                }),
            }
        })
        .collect();
    failures.sort_by_key(|f| f.sample);
    Report { samples: n, failures }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_program, parse_spec, SpecFile};

    fn corpus(name: &str) -> SpecFile {
        let path = format!("{}/../../corpus/{name}.bossl", env!("CARGO_MANIFEST_DIR"));
        parse_spec(&std::fs::read_to_string(path).unwrap()).unwrap()
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

    #[test]
    fn listcopy_preserves_a_read_only_list() {
        let spec = corpus("listcopy");
        let procs = parse_program(LISTCOPY).unwrap();
        let report = check_ro_preservation(&procs, &spec.goal, &spec.context(), 50, 1);
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn skip_preserves_everything() {
        let spec = parse_spec("{ x :-> 1<a> } void f(loc x) { x :-> 1<a> }").unwrap();
        let procs = parse_program("void f(loc x) { }").unwrap();
        let report = check_ro_preservation(&procs, &spec.goal, &spec.context(), 20, 0);
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn tail_swap_mutant_is_caught() {
        let spec = corpus("listcopy");
        let mutant = LISTCOPY.replace("*(y + 1) = y1;", "*(y + 1) = nxt; *(x2 + 1) = y1;");
        let procs = parse_program(&mutant).unwrap();
        let report = check_ro_preservation(&procs, &spec.goal, &spec.context(), 50, 1);
        assert!(!report.passed());
        let text = report.to_string();
        assert!(text.contains("RO: {"), "{text}");
        assert!(text.contains("*(x2 + 1) = y1;"), "{text}");
    }
}
