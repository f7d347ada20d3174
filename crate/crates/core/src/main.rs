use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bossl::bench::{self, Benchmark};
use bossl::emit::emit_c;
use bossl::engine::{Mode, Outcome};
use bossl::interp::check_ro_preservation;
use bossl::oracle::{check_solver, check_unifier, OracleSummary};
use bossl::parser::print_program;

#[derive(Parser)]
#[command(name = "bossl", about = "Synthesize heap-manipulating programs from specifications with read-only borrows")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthesize the goal of a specification file.
    Synth {
        file: PathBuf,
        #[arg(long, default_value = "imm", value_parser = parse_mode)]
        mode: Mode,
        #[arg(long, default_value_t = 0)]
        perturbation: usize,
        #[arg(long, default_value_t = 120_000)]
        timeout_ms: u64,
        /// Check the result on this many random models.
        #[arg(long)]
        validate: Option<usize>,
        #[arg(long)]
        emit_c: Option<PathBuf>,
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Run every benchmark in a corpus directory in both modes.
    Bench {
        dir: PathBuf,
        /// Run all perturbations instead of the default configuration only.
        #[arg(long)]
        sweep: bool,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value_t = 120_000)]
        timeout_ms: u64,
        /// Restrict to these benchmark names.
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the unifier and the pure solver with brute-force oracles.
    Oracle {
        #[arg(long, default_value_t = 1000)]
        tasks: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    Mode::parse(s).ok_or_else(|| format!("unknown mode {s}; expected imm or mut"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Synth {
            file,
            mode,
            perturbation,
            timeout_ms,
            validate,
            emit_c: c_out,
            stats,
        } => synth(file, mode, perturbation, timeout_ms, validate, c_out, stats),
        Cmd::Bench {
            dir,
            sweep,
            jobs,
            timeout_ms,
            only,
            out,
        } => run_bench(dir, sweep, jobs, timeout_ms, only, out),
        Cmd::Oracle { tasks, seed } => oracle(tasks, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("{msg}");
            ExitCode::FAILURE
        }
    }
}

fn synth(
    file: PathBuf,
    mode: Mode,
    perturbation: usize,
    timeout_ms: u64,
    validate: Option<usize>,
    c_out: Option<PathBuf>,
    stats: Option<PathBuf>,
) -> Result<(), String> {
    if perturbation >= bossl::engine::PERTURBATIONS {
        return Err(format!("perturbation must be below {}", bossl::engine::PERTURBATIONS));
    }
    if !file.is_file() {
        return Err(format!("no goal: cannot read {}", file.display()));
    }
    let b = Benchmark::load(&file)?;
    let (syn, record) = b.run(mode, perturbation, timeout_ms);
    if let Some(path) = stats {
        fs::write(&path, bench::to_csv(std::slice::from_ref(&record))).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    eprintln!(
        "{}: {} in {} ms, {} rules, {} backtracks",
        b.name, record.outcome, record.time_ms, record.rules, record.backtracks
    );
    if record.outcome != Outcome::Synthesized {
        return Err(format!("{}: {}", b.name, record.outcome));
    }
    for p in &syn.procedures {
        println!("{}", print_program(p));
    }
    if let Some(path) = c_out {
        fs::write(&path, emit_c(&syn.procedures)).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    if let Some(n) = validate {
        let (goal, ctx) = match mode {
            Mode::Imm => (b.spec.goal.clone(), b.spec.context()),
            Mode::Mut => (b.spec.goal.all_mutable(), b.spec.context().all_mutable()),
        };
        let report = check_ro_preservation(&syn.procedures, &goal, &ctx, n, 0);
        eprint!("validation {report}");
        if !report.passed() {
            return Err("validation failed".into());
        }
    }
    Ok(())
}

fn run_bench(
    dir: PathBuf,
    sweep: bool,
    jobs: usize,
    timeout_ms: u64,
    only: Vec<String>,
    out: Option<PathBuf>,
) -> Result<(), String> {
    let mut benches = bench::load_corpus(&dir)?;
    if !only.is_empty() {
        benches.retain(|b| only.contains(&b.name));
    }
    let perturbations = if sweep { bench::all_perturbations() } else { vec![0] };
    let records = bench::sweep(&benches, &perturbations, jobs, timeout_ms);
    let csv = bench::to_csv(&records);
    match out {
        Some(path) => fs::write(&path, csv).map_err(|e| format!("{}: {e}", path.display()))?,
        None => print!("{csv}"),
    }
    eprint!("{}", bench::summary(&records));
    let nps: u64 = records.iter().map(|r| r.strengthening_violations).sum();
    let bar: u64 = records.iter().map(|r| r.borrow_return_violations).sum();
    eprintln!("permission strengthening violations: {nps}; unreturned borrows: {bar}");
    Ok(())
}

fn report(what: &str, s: &OracleSummary) -> bool {
    println!(
        "{what}: {} tasks, {} unknown, {} disagreements",
        s.tasks,
        s.unknown,
        s.disagreements.len()
    );
    for d in &s.disagreements {
        println!("{d}\n");
    }
    s.agreed()
}

fn oracle(tasks: usize, seed: u64) -> Result<(), String> {
    let unif = report("unifier", &check_unifier(tasks, seed));
    let pure = report("pure solver", &check_solver(tasks, seed));
    if unif && pure {
        Ok(())
    } else {
        Err("oracle disagreement".into())
    }
}
