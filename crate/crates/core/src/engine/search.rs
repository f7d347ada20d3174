//! Depth-first backtracking over rule applications.

use std::collections::HashSet;
use std::sync::Arc;
use std::time::Instant;

use super::goal::Goal;
use super::rules::{Alt, Norm};
use super::trace;
use super::{rule_groups, SearchConfig, SearchStats};
use crate::logic::program::Stmt;
use crate::logic::spec::Context;
use crate::pure::Solver;

#[derive(Debug)]
pub(crate) struct Timeout;

pub(crate) struct Search<'a> {
    pub ctx: &'a Context,
    pub goal_name: Arc<str>,
    pub config: &'a SearchConfig,
    pub solver: Solver,
    pub stats: SearchStats,
    failed: HashSet<String>,
    deadline: Instant,
}

impl<'a> Search<'a> {
    pub fn new(ctx: &'a Context, goal_name: Arc<str>, config: &'a SearchConfig, deadline: Instant) -> Search<'a> {
        Search {
            ctx,
            goal_name,
            config,
            solver: Solver::new(),
            stats: SearchStats::default(),
            failed: HashSet::new(),
            deadline,
        }
    }

    pub fn finish(mut self) -> SearchStats {
        self.stats.solver_queries = self.solver.stats.queries;
        self.stats
    }

    pub fn check_time(&self) -> Result<(), Timeout> {
        if Instant::now() >= self.deadline {
            Err(Timeout)
        } else {
            Ok(())
        }
    }

    pub fn solve(&mut self, g: Goal) -> Result<Option<Stmt>, Timeout> {
        self.check_time()?;
        if g.depth > self.config.max_depth {
            return Ok(None);
        }
        let key = g.key();
        if self.failed.contains(&key) {
            return Ok(None);
        }
        let r = self.solve_uncached(g)?;
        if r.is_none() {
            self.failed.insert(key);
        }
        Ok(r)
    }

    fn solve_uncached(&mut self, input: Goal) -> Result<Option<Stmt>, Timeout> {
        let (g, prefix) = match self.normalize(input.clone())? {
            Norm::Done(s) => return Ok(Some(s)),
            Norm::Fail => return Ok(None),
            Norm::Goal(g, prefix) => (g, prefix),
        };
        self.stats.strengthening_violations += trace::strengthening(&input, &g);
        if g.pre.spatial.is_empty() && g.post.spatial.is_empty() {
            self.stats.rules_fired += 1;
            let ok = self.emp(&g);
            return Ok(ok.then(|| Stmt::seq(prefix)));
        }
        for group in rule_groups(self.config.rule_order) {
            let alts = self.alternatives(&g, group)?;
            for alt in alts {
                if let Some(s) = self.try_alt(&g, alt)? {
                    return Ok(Some(Stmt::seq(prefix.into_iter().chain([s]))));
                }
            }
        }
        Ok(None)
    }

    fn try_alt(&mut self, g: &Goal, alt: Alt) -> Result<Option<Stmt>, Timeout> {
        self.stats.rules_fired += 1;
        self.stats.borrow_return_violations += alt.borrow_violations;
        let mut children = Vec::new();
        for sg in alt.subgoals {
            self.stats.strengthening_violations += trace::strengthening(g, &sg);
            match self.solve(sg)? {
                Some(s) => children.push(s),
                None => {
                    self.stats.backtracks += 1;
                    return Ok(None);
                }
            }
        }
        Ok(Some(alt.kont.assemble(children)))
    }
}
