//! Deductive synthesis: backtracking proof search over goals.

pub mod goal;
mod rules;
mod search;
pub mod trace;

use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::logic::program::Procedure;
use crate::logic::spec::{Context, FunctionSpec};
use crate::parser::{ast_size, SpecFile};
use crate::unify::UnifOrder;

pub use goal::Goal;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub enum Mode {
    #[default]
    Imm,
    Mut,
}

impl Mode {
    pub fn parse(s: &str) -> Option<Mode> {
        match s {
            "imm" => Some(Mode::Imm),
            "mut" => Some(Mode::Mut),
            _ => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Imm => "imm",
            Mode::Mut => "mut",
        })
    }
}

/// Groups of non-invertible rules whose relative priority the rule order
/// permutes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleGroup {
    Open,
    FramePred,
    Close,
    Unify,
    Write,
    Alloc,
    Free,
    Call,
}

pub const RULE_ORDERS: usize = 7;
pub const PERTURBATIONS: usize = 6 * RULE_ORDERS;

/// Group priorities for rule order `id` (0–6). Order 0 is the default;
/// 1–6 combine Write high/low with Open-first, Call-first or both first.
pub fn rule_groups(id: usize) -> Vec<RuleGroup> {
    use RuleGroup::*;
    if id == 0 {
        return vec![Open, FramePred, Close, Unify, Write, Alloc, Free, Call];
    }
    let k = (id - 1) % 6;
    let write_high = k < 3;
    let (head, tail): (Vec<RuleGroup>, Vec<RuleGroup>) = match k % 3 {
        0 => (vec![Open], vec![Call]),
        1 => (vec![Call], vec![Open]),
        _ => (vec![Open, Call], vec![]),
    };
    let mut out = Vec::new();
    if write_high {
        out.push(Write);
    }
    out.extend(head);
    out.extend([FramePred, Close, Unify, Alloc, Free]);
    out.extend(tail);
    if !write_high {
        out.push(Write);
    }
    out
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub unif_order: UnifOrder,
    pub rule_order: usize,
    pub timeout_ms: u64,
    /// Unfoldings of a precondition instance along one path.
    pub max_unfold_depth: u8,
    /// Unfoldings of a postcondition instance into a recursive clause; base
    /// clauses may always be used.
    pub max_close_depth: u8,
    pub max_depth: usize,
    pub mode: Mode,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            unif_order: UnifOrder::default(),
            rule_order: 0,
            timeout_ms: 120_000,
            max_unfold_depth: 1,
            max_close_depth: 1,
            max_depth: 200,
            mode: Mode::Imm,
        }
    }
}

impl SearchConfig {
    /// Perturbation `id` in 0..42 selects unification order `id / 7` and
    /// rule order `id % 7`; id 0 is the default configuration.
    pub fn perturbation(id: usize) -> Option<SearchConfig> {
        if id >= PERTURBATIONS {
            return None;
        }
        Some(SearchConfig {
            unif_order: UnifOrder::from_id(id / RULE_ORDERS)?,
            rule_order: id % RULE_ORDERS,
            ..SearchConfig::default()
        })
    }

    pub fn with_mode(mut self, mode: Mode) -> SearchConfig {
        self.mode = mode;
        self
    }

    pub fn with_timeout_ms(mut self, ms: u64) -> SearchConfig {
        self.timeout_ms = ms;
        self
    }

    /// Applies `#. key value` directives found in a spec file's text.
    /// Recognized keys: `unfold-depth`, `close-depth`.
    pub fn with_directives(mut self, text: &str) -> SearchConfig {
        for line in text.lines() {
            let Some(rest) = line.trim_start().strip_prefix("#.") else {
                continue;
            };
            let mut words = rest.split_whitespace();
            let (Some(key), Some(Ok(n))) = (words.next(), words.next().map(str::parse::<u8>)) else {
                continue;
            };
            match key {
                "unfold-depth" => self.max_unfold_depth = n,
                "close-depth" => self.max_close_depth = n,
                _ => {}
            }
        }
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Outcome {
    Synthesized,
    Timeout,
    #[default]
    NoSolution,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Synthesized => "Synthesized",
            Outcome::Timeout => "Timeout",
            Outcome::NoSolution => "NoSolution",
        })
    }
}

#[derive(Clone, Debug, Default)]
pub struct SearchStats {
    pub rules_fired: u64,
    pub backtracks: u64,
    pub wall_time: Duration,
    pub ast_size: Option<usize>,
    pub outcome: Outcome,
    /// Trace check failures; both stay zero for a sound engine.
    pub strengthening_violations: u64,
    pub borrow_return_violations: u64,
    pub solver_queries: usize,
}

impl SearchStats {
    fn absorb(&mut self, other: &SearchStats) {
        self.rules_fired += other.rules_fired;
        self.backtracks += other.backtracks;
        self.strengthening_violations += other.strengthening_violations;
        self.borrow_return_violations += other.borrow_return_violations;
        self.solver_queries += other.solver_queries;
    }
}

#[derive(Clone, Debug)]
pub struct Synthesis {
    /// Helpers first, goal last; empty unless synthesis succeeded.
    pub procedures: Vec<Procedure>,
    pub stats: SearchStats,
}

impl Synthesis {
    pub fn goal(&self) -> Option<&Procedure> {
        self.procedures.last()
    }
}

fn run_one(ctx: &Context, f: &FunctionSpec, config: &SearchConfig, deadline: Instant) -> (Option<Procedure>, SearchStats) {
    let mut s = search::Search::new(ctx, f.name.clone(), config, deadline);
    let goal = Goal::new(f.formals.iter().cloned().collect(), f.pre.clone(), f.post.clone());
    let res = s.solve(goal);
    let mut stats = s.finish();
    match res {
        Ok(Some(body)) => {
            stats.outcome = Outcome::Synthesized;
            (
                Some(Procedure {
                    name: f.name.clone(),
                    formals: f.formals.clone(),
                    body: body.without_dead_loads(),
                }),
                stats,
            )
        }
        Ok(None) => {
            stats.outcome = Outcome::NoSolution;
            (None, stats)
        }
        Err(search::Timeout) => {
            stats.outcome = Outcome::Timeout;
            (None, stats)
        }
    }
}

/// Synthesizes every function of `spec`: helpers in file order, each seeing
/// the predicates, earlier helpers and itself, then the goal.
pub fn synthesize(spec: &SpecFile, config: &SearchConfig) -> Synthesis {
    let start = Instant::now();
    let deadline = start + Duration::from_millis(config.timeout_ms);
    let mut functions: Vec<Arc<FunctionSpec>> = spec.helpers.clone();
    functions.push(Arc::new(spec.goal.clone()));
    if config.mode == Mode::Mut {
        functions = functions.iter().map(|f| Arc::new(f.all_mutable())).collect();
    }
    let mut ctx = Context::default();
    for p in &spec.predicates {
        ctx.predicates.insert(p.name.clone(), p.clone());
    }
    let mut total = SearchStats::default();
    let mut procedures = Vec::new();
    for f in &functions {
        ctx.functions.push(f.clone());
        let (proc, stats) = run_one(&ctx, f, config, deadline);
        total.absorb(&stats);
        total.outcome = stats.outcome;
        match proc {
            Some(p) => procedures.push(p),
            None => {
                procedures.clear();
                break;
            }
        }
    }
    total.wall_time = start.elapsed();
    if total.outcome == Outcome::Synthesized {
        total.ast_size = Some(procedures.iter().map(ast_size).sum());
    }
    Synthesis {
        procedures,
        stats: total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perturbation_ids_cover_every_combination() {
        let mut seen = std::collections::BTreeSet::new();
        for id in 0..PERTURBATIONS {
            let c = SearchConfig::perturbation(id).unwrap();
            seen.insert((c.unif_order.id(), c.rule_order));
        }
        assert_eq!(seen.len(), 42);
        assert!(SearchConfig::perturbation(42).is_none());
        let d = SearchConfig::perturbation(0).unwrap();
        assert_eq!((d.unif_order, d.rule_order), (UnifOrder::ReadOnlyFirst, 0));
    }

    #[test]
    fn rule_orders_are_permutations() {
        for id in 0..RULE_ORDERS {
            let g = rule_groups(id);
            assert_eq!(g.len(), 8, "order {id}");
            for (i, a) in g.iter().enumerate() {
                assert!(!g[i + 1..].contains(a), "order {id} repeats {a:?}");
            }
        }
        assert_eq!(rule_groups(1)[0], RuleGroup::Write);
        assert_eq!(*rule_groups(4).last().unwrap(), RuleGroup::Write);
        assert_eq!(rule_groups(2)[1], RuleGroup::Call);
    }

    #[test]
    fn directives_adjust_depths() {
        let c = SearchConfig::default().with_directives("#. close-depth 2\n# ordinary comment\n#. bogus 3");
        assert_eq!((c.max_unfold_depth, c.max_close_depth), (1, 2));
    }
}
