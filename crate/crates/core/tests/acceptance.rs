//! End-to-end acceptance criteria. Prints one `PASS`/`FAIL` line per
//! criterion and exits nonzero if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bossl::bench::{self, BenchRecord, Benchmark};
use bossl::engine::{Mode, Outcome, Synthesis};
use bossl::interp::validate::execute;
use bossl::interp::{check_ro_preservation, random_model};
use bossl::oracle::{check_solver, check_unifier};
use bossl::parser::ast_size;
use bossl::parser::program::print_stmt_block;

const TIMEOUT_MS: u64 = 120_000;
const SAMPLES: usize = 50;
const SWEEP_BENCHES: [&str; 4] = ["lcopy", "sorted-insert", "tcopy", "tcopy-ptr"];
const IQR_BENCHES: [&str; 3] = ["lcopy", "tcopy", "tcopy-ptr"];

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn load(name: &str) -> Benchmark {
    Benchmark::load(&corpus_dir().join(format!("{name}.bossl"))).expect("corpus file")
}

struct Verdict {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        ok,
        detail: detail.into(),
    }
}

fn timed(f: impl FnOnce() -> (Synthesis, BenchRecord)) -> (Synthesis, BenchRecord, Duration) {
    let t = Instant::now();
    let (s, r) = f();
    (s, r, t.elapsed())
}

fn pick() -> Verdict {
    let b = load("pick");
    let (si, ri, ti) = timed(|| b.run(Mode::Imm, 0, TIMEOUT_MS));
    let (sm, rm, tm) = timed(|| b.run(Mode::Mut, 0, TIMEOUT_MS));
    let body = |s: &Synthesis| s.goal().map(|p| print_stmt_block(&p.body).trim().to_string());
    let (bi, bm) = (body(&si), body(&sm));
    let ok = bi.as_deref() == Some("*x = 30;")
        && bm == bi
        && rm.backtracks > ri.backtracks
        && ti < Duration::from_secs(5)
        && tm < Duration::from_secs(5);
    verdict(
        ok,
        format!(
            "imm {bi:?} ({} backtracks, {ti:?}); mut {bm:?} ({} backtracks, {tm:?})",
            ri.backtracks, rm.backtracks
        ),
    )
}

/// Number of sampled runs whose stores land in the input list's cells.
fn input_writes(b: &Benchmark, s: &Synthesis, samples: usize) -> usize {
    let ctx = b.spec.context();
    (0..samples)
        .filter(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(*i as u64);
            let m = random_model(&b.spec.goal.pre, &ctx, &mut rng).expect("model of the precondition");
            match execute(&s.procedures, &b.spec.goal, &m) {
                Ok(run) => run.stores.iter().any(|l| m.footprints[1].contains(l)),
                Err(_) => true,
            }
        })
        .count()
}

fn listcopy() -> (Verdict, Option<(Synthesis, Synthesis)>) {
    let b = load("listcopy");
    let (si, ri, ti) = timed(|| b.run(Mode::Imm, 0, TIMEOUT_MS));
    let (sm, rm, tm) = timed(|| b.run(Mode::Mut, 0, TIMEOUT_MS));
    if ri.outcome != Outcome::Synthesized {
        return (verdict(false, format!("imm: {}", ri.outcome)), None);
    }
    let writes = input_writes(&b, &si, SAMPLES);
    let report = check_ro_preservation(&si.procedures, &b.spec.goal, &b.spec.context(), SAMPLES, 0);
    let mut detail = format!(
        "imm: {writes}/{SAMPLES} runs write the input, RO check {} ({ti:?}); mut: {} ({tm:?})",
        if report.passed() { "ok" } else { "failed" },
        rm.outcome
    );
    if rm.outcome == Outcome::Synthesized {
        let mreport = check_ro_preservation(&sm.procedures, &b.spec.goal, &b.spec.context(), SAMPLES, 0);
        detail.push_str(&format!(
            ", {} writes, RO check {}",
            input_writes(&b, &sm, SAMPLES),
            if mreport.passed() { "ok" } else { "failed" }
        ));
    }
    let ok = writes == 0 && report.passed() && ti < Duration::from_secs(120) && tm < Duration::from_secs(120);
    let pair = (rm.outcome == Outcome::Synthesized).then_some((si, sm));
    (verdict(ok, detail), pair)
}

fn ast_sizes(pair: Option<(Synthesis, Synthesis)>) -> Verdict {
    let Some((si, sm)) = pair else {
        return verdict(false, "listcopy did not synthesize in both modes");
    };
    let b = load("listcopy");
    let (ai, am) = (ast_size(si.goal().unwrap()), ast_size(sm.goal().unwrap()));
    if input_writes(&b, &sm, SAMPLES) == 0 {
        return verdict(true, format!("vacuous: mut result does not tail-swap (ast imm {ai}, mut {am})"));
    }
    verdict(ai < am, format!("ast imm {ai}, mut {am}"))
}

fn rule_counts(benches: &[Benchmark], runs: &[(Synthesis, BenchRecord)]) -> Verdict {
    let mut bad = Vec::new();
    for (b, pair) in benches.iter().zip(runs.chunks(2)) {
        let (i, m) = (&pair[0].1, &pair[1].1);
        if i.rules > m.rules {
            bad.push(format!("{}-{}: {} > {}", b.name, b.variant, i.rules, m.rules));
        }
    }
    verdict(bad.is_empty(), if bad.is_empty() { format!("{} benchmarks", benches.len()) } else { bad.join("; ") })
}

fn validity(benches: &[Benchmark], runs: &[(Synthesis, BenchRecord)]) -> Verdict {
    let mut bad = Vec::new();
    let mut checked = 0;
    for (b, pair) in benches.iter().zip(runs.chunks(2)) {
        for (syn, rec) in pair {
            if rec.outcome != Outcome::Synthesized {
                continue;
            }
            let (goal, ctx) = match rec.mode {
                Mode::Imm => (b.spec.goal.clone(), b.spec.context()),
                Mode::Mut => (b.spec.goal.all_mutable(), b.spec.context().all_mutable()),
            };
            checked += 1;
            if !check_ro_preservation(&syn.procedures, &goal, &ctx, SAMPLES, 0).passed() {
                bad.push(format!("{}-{} {}", b.name, b.variant, rec.mode));
            }
        }
    }
    let detail = if bad.is_empty() { format!("{checked} programs") } else { format!("failed: {}", bad.join(", ")) };
    verdict(bad.is_empty(), detail)
}

type Group<'a> = BTreeMap<(&'a str, &'a str, Mode), Vec<&'a BenchRecord>>;

fn groups(records: &[BenchRecord]) -> Group<'_> {
    let mut g: Group<'_> = BTreeMap::new();
    for r in records {
        g.entry((&r.name, &r.variant, r.mode)).or_default().push(r);
    }
    g
}

fn timeouts(rs: &[&BenchRecord]) -> usize {
    rs.iter().filter(|r| r.outcome == Outcome::Timeout).count()
}

fn finished_rules(rs: &[&BenchRecord]) -> Vec<u64> {
    rs.iter().filter(|r| r.outcome != Outcome::Timeout).map(|r| r.rules).collect()
}

fn sweep_timeouts(records: &[BenchRecord]) -> Verdict {
    let g = groups(records);
    let mut parts = Vec::new();
    let mut ok = true;
    for ((name, variant, mode), rs) in &g {
        if *mode != Mode::Imm {
            continue;
        }
        let (ti, tm) = (timeouts(rs), timeouts(&g[&(*name, *variant, Mode::Mut)]));
        ok &= ti <= tm;
        parts.push(format!("{name}-{variant} {ti}/{tm}"));
    }
    verdict(ok, format!("timeouts imm/mut: {}", parts.join(", ")))
}

fn sweep_iqr(records: &[BenchRecord]) -> Verdict {
    let g = groups(records);
    let mut parts = Vec::new();
    let mut ok = true;
    for ((name, variant, mode), rs) in &g {
        if *mode != Mode::Imm || !IQR_BENCHES.contains(name) {
            continue;
        }
        let qi = bench::log2_iqr(&finished_rules(rs));
        let qm = bench::log2_iqr(&finished_rules(&g[&(*name, *variant, Mode::Mut)]));
        match (qi, qm) {
            (Some(a), Some(b)) => {
                ok &= a <= b + 1e-9;
                parts.push(format!("{name}-{variant} {a:.3}/{b:.3}"));
            }
            (Some(a), None) => parts.push(format!("{name}-{variant} {a:.3}/-")),
            _ => {
                ok = false;
                parts.push(format!("{name}-{variant} no finished imm runs"));
            }
        }
    }
    verdict(ok, format!("log2(rules) IQR imm/mut: {}", parts.join(", ")))
}

fn sweep_unique(records: &[BenchRecord]) -> Verdict {
    let g = groups(records);
    let mut parts = Vec::new();
    let mut ok = true;
    for ((name, variant, mode), rs) in &g {
        if *mode != Mode::Imm {
            continue;
        }
        let programs: BTreeSet<&str> = rs.iter().filter_map(|r| r.program.as_deref()).collect();
        ok &= programs.len() == 1;
        parts.push(format!("{name}-{variant} {}", programs.len()));
    }
    verdict(ok, format!("distinct imm programs: {}", parts.join(", ")))
}

fn sweep_soundness(records: &[BenchRecord]) -> Verdict {
    let nps: u64 = records.iter().map(|r| r.strengthening_violations).sum();
    let bar: u64 = records.iter().map(|r| r.borrow_return_violations).sum();
    verdict(nps == 0 && bar == 0, format!("{} runs, NPS {nps}, BAR {bar}", records.len()))
}

fn oracles() -> Verdict {
    let t = Instant::now();
    let u = check_unifier(1000, 1);
    let p = check_solver(1000, 1);
    let elapsed = t.elapsed();
    let ok = u.agreed() && p.agreed() && u.tasks == 1000 && p.tasks == 1000 && elapsed < Duration::from_secs(60);
    verdict(
        ok,
        format!(
            "unifier {} disagreements, solver {} disagreements ({} unknown), {elapsed:?}",
            u.disagreements.len(),
            p.disagreements.len(),
            p.unknown
        ),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(&str, Verdict)> = Vec::new();
    let mut report = |name: &'static str, v: Verdict| {
        println!("{} {name}: {}", if v.ok { "PASS" } else { "FAIL" }, v.detail);
        results.push((name, v));
    };

    report("1 pick", pick());
    let (v, pair) = listcopy();
    report("2 listcopy read-only", v);
    report("3 ast size", ast_sizes(pair));

    let benches = bench::load_corpus(&corpus_dir()).expect("corpus");
    let runs: Vec<(Synthesis, BenchRecord)> = benches
        .iter()
        .flat_map(|b| [b.run(Mode::Imm, 0, TIMEOUT_MS), b.run(Mode::Mut, 0, TIMEOUT_MS)])
        .collect();
    report("4 rule counts", rule_counts(&benches, &runs));

    let swept: Vec<Benchmark> = benches.iter().filter(|b| SWEEP_BENCHES.contains(&b.name.as_str())).cloned().collect();
    let t = Instant::now();
    let records = bench::sweep(&swept, &bench::all_perturbations(), 4, TIMEOUT_MS);
    let elapsed = t.elapsed();
    let a = sweep_timeouts(&records);
    report("5a sweep timeouts", verdict(a.ok && elapsed < Duration::from_secs(7200), format!("{} ({elapsed:?})", a.detail)));
    report("5b sweep rule IQR", sweep_iqr(&records));
    report("5c sweep unique imm program", sweep_unique(&records));
    report("6 NPS/BAR", sweep_soundness(&records));
    report("7 oracles", oracles());
    report("8 validity", validity(&benches, &runs));

    let failed = results.iter().filter(|(_, v)| !v.ok).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
