//! Benchmark corpus loading, perturbation sweeps and CSV statistics.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::engine::{synthesize, Mode, Outcome, SearchConfig, Synthesis, PERTURBATIONS};
use crate::parser::{parse_spec, print_program, SpecFile};

pub const CSV_HEADER: &str = "name,variant,mode,perturbation,time_ms,ast_size,rules,backtracks,outcome";

/// One corpus file.
#[derive(Clone, Debug)]
pub struct Benchmark {
    pub name: String,
    pub variant: String,
    pub path: PathBuf,
    pub source: String,
    pub spec: SpecFile,
}

/// The `# variant: X` header tag, `shape` when absent.
pub fn variant_of(source: &str) -> String {
    source
        .lines()
        .find_map(|l| l.trim().strip_prefix("# variant:").map(|v| v.trim().to_string()))
        .unwrap_or_else(|| "shape".to_string())
}

impl Benchmark {
    pub fn load(path: &Path) -> Result<Benchmark, String> {
        let source = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let spec = parse_spec(&source).map_err(|e| format!("{}: {e}", path.display()))?;
        let variant = variant_of(&source);
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("bench");
        let name = stem.strip_suffix(&format!("-{variant}")).unwrap_or(stem).to_string();
        Ok(Benchmark {
            name,
            variant,
            path: path.to_path_buf(),
            source,
            spec,
        })
    }

    /// Default configuration adjusted by the file's directives.
    pub fn config(&self, mode: Mode, perturbation: usize, timeout_ms: u64) -> SearchConfig {
        SearchConfig::perturbation(perturbation)
            .unwrap_or_default()
            .with_directives(&self.source)
            .with_mode(mode)
            .with_timeout_ms(timeout_ms)
    }

    pub fn run(&self, mode: Mode, perturbation: usize, timeout_ms: u64) -> (Synthesis, BenchRecord) {
        let syn = synthesize(&self.spec, &self.config(mode, perturbation, timeout_ms));
        let s = &syn.stats;
        let record = BenchRecord {
            name: self.name.clone(),
            variant: self.variant.clone(),
            mode,
            perturbation,
            time_ms: s.wall_time.as_millis(),
            ast_size: s.ast_size,
            rules: s.rules_fired,
            backtracks: s.backtracks,
            outcome: s.outcome,
            strengthening_violations: s.strengthening_violations,
            borrow_return_violations: s.borrow_return_violations,
            program: (s.outcome == Outcome::Synthesized)
                .then(|| syn.procedures.iter().map(print_program).collect::<Vec<_>>().join("\n")),
        };
        (syn, record)
    }
}

/// Every `.bossl` file directly inside `dir`, sorted by path.
pub fn load_corpus(dir: &Path) -> Result<Vec<Benchmark>, String> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "bossl"))
        .collect();
    paths.sort();
    paths.iter().map(|p| Benchmark::load(p)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchRecord {
    pub name: String,
    pub variant: String,
    pub mode: Mode,
    pub perturbation: usize,
    pub time_ms: u128,
    pub ast_size: Option<usize>,
    pub rules: u64,
    pub backtracks: u64,
    pub outcome: Outcome,
    pub strengthening_violations: u64,
    pub borrow_return_violations: u64,
    /// Printed procedures when synthesis succeeded.
    pub program: Option<String>,
}

impl BenchRecord {
    fn key(&self) -> (&str, &str, Mode, usize) {
        (&self.name, &self.variant, self.mode, self.perturbation)
    }

    /// One CSV row; timeouts leave the measurements blank.
    pub fn csv_row(&self) -> String {
        let head = format!("{},{},{},{}", self.name, self.variant, self.mode, self.perturbation);
        if self.outcome == Outcome::Timeout {
            return format!("{head},,,,,{}", self.outcome);
        }
        let ast = self.ast_size.map(|n| n.to_string()).unwrap_or_default();
        format!(
            "{head},{},{ast},{},{},{}",
            self.time_ms, self.rules, self.backtracks, self.outcome
        )
    }
}

pub fn to_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Runs every benchmark in both modes under each perturbation, using at most
/// `jobs` threads. Rows come back sorted by name, variant, mode and
/// perturbation.
pub fn sweep(benches: &[Benchmark], perturbations: &[usize], jobs: usize, timeout_ms: u64) -> Vec<BenchRecord> {
    let mut runs = Vec::new();
    for b in benches {
        for mode in [Mode::Imm, Mode::Mut] {
            for &p in perturbations {
                runs.push((b, mode, p));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool");
    let mut records: Vec<BenchRecord> =
        pool.install(|| runs.par_iter().map(|(b, mode, p)| b.run(*mode, *p, timeout_ms).1).collect());
    records.sort_by(|a, b| a.key().cmp(&b.key()));
    records
}

pub fn all_perturbations() -> Vec<usize> {
    (0..PERTURBATIONS).collect()
}

/// Lower median of a sorted, non-empty slice.
fn median(sorted: &[u64]) -> u64 {
    sorted[(sorted.len() - 1) / 2]
}

/// Per benchmark, variant and mode: min/median/max rules over finished runs
/// and the number of timeouts.
pub fn summary(records: &[BenchRecord]) -> String {
    let mut groups: BTreeMap<(&str, &str, Mode), (Vec<u64>, usize)> = BTreeMap::new();
    for r in records {
        let g = groups.entry((&r.name, &r.variant, r.mode)).or_default();
        if r.outcome == Outcome::Timeout {
            g.1 += 1;
        } else {
            g.0.push(r.rules);
        }
    }
    let mut out = String::from("name,variant,mode,runs,timeouts,rules_min,rules_median,rules_max\n");
    for ((name, variant, mode), (mut rules, timeouts)) in groups {
        rules.sort_unstable();
        let runs = rules.len() + timeouts;
        if rules.is_empty() {
            let _ = writeln!(out, "{name},{variant},{mode},{runs},{timeouts},,,");
        } else {
            let (lo, med, hi) = (rules[0], median(&rules), rules[rules.len() - 1]);
            let _ = writeln!(out, "{name},{variant},{mode},{runs},{timeouts},{lo},{med},{hi}");
        }
    }
    out
}

/// Interquartile range of `log2` of the values, by linear interpolation.
pub fn log2_iqr(values: &[u64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut logs: Vec<f64> = values.iter().map(|v| (*v.max(&1) as f64).log2()).collect();
    logs.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (logs.len() - 1) as f64;
        let (i, frac) = (pos.floor() as usize, pos.fract());
        let next = logs[(i + 1).min(logs.len() - 1)];
        logs[i] + frac * (next - logs[i])
    };
    Some(q(0.75) - q(0.25))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(mode: Mode, p: usize, rules: u64, outcome: Outcome) -> BenchRecord {
        BenchRecord {
            name: "pick".into(),
            variant: "shape".into(),
            mode,
            perturbation: p,
            time_ms: 3,
            ast_size: Some(2),
            rules,
            backtracks: 0,
            outcome,
            strengthening_violations: 0,
            borrow_return_violations: 0,
            program: None,
        }
    }

    #[test]
    fn timeouts_have_blank_measurements() {
        assert_eq!(record(Mode::Imm, 4, 9, Outcome::Timeout).csv_row(), "pick,shape,imm,4,,,,,Timeout");
        assert_eq!(record(Mode::Mut, 0, 9, Outcome::Synthesized).csv_row(), "pick,shape,mut,0,3,2,9,0,Synthesized");
    }

    #[test]
    fn summary_reports_min_median_max() {
        let rs = vec![
            record(Mode::Imm, 0, 5, Outcome::Synthesized),
            record(Mode::Imm, 1, 7, Outcome::Synthesized),
            record(Mode::Imm, 2, 100, Outcome::Synthesized),
            record(Mode::Imm, 3, 0, Outcome::Timeout),
        ];
        let s = summary(&rs);
        assert!(s.contains("pick,shape,imm,4,1,5,7,100"), "{s}");
    }

    #[test]
    fn iqr_of_constant_values_is_zero() {
        assert_eq!(log2_iqr(&[8, 8, 8, 8]), Some(0.0));
        let spread = log2_iqr(&[1, 2, 4, 8, 16]).unwrap();
        assert!((spread - 2.0).abs() < 1e-9);
    }

    #[test]
    fn variant_tag_and_name() {
        assert_eq!(variant_of("# variant: len\n{ emp } void f() { emp }"), "len");
        assert_eq!(variant_of("{ emp } void f() { emp }"), "shape");
    }
}
