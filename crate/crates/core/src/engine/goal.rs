//! Synthesis goals and the helpers shared by the rules.

use std::collections::BTreeSet;
use std::fmt;

use crate::logic::expr::{BinOp, Expr, Var};
use crate::logic::heap::{fmt_spatial, Assertion, Heaplet};
use crate::logic::spec::FreshNames;

/// `Γ; {pre} ⇝ {post}` plus search bookkeeping.
#[derive(Clone, Debug)]
pub struct Goal {
    pub gamma: BTreeSet<Var>,
    pub pre: Assertion,
    pub post: Assertion,
    /// Program variables and every ghost seen so far; framing a heaplet away
    /// does not turn its ghosts into existentials.
    pub universal: BTreeSet<Var>,
    /// Set once the derivation starts working on the postcondition; Open and
    /// Call are then no longer tried.
    pub closing: bool,
    pub depth: usize,
}

impl Goal {
    pub fn new(gamma: BTreeSet<Var>, pre: Assertion, post: Assertion) -> Goal {
        let mut g = Goal {
            gamma,
            pre,
            post,
            universal: BTreeSet::new(),
            closing: false,
            depth: 0,
        };
        g.refresh();
        g
    }

    /// Records the current program variables and ghosts as universal.
    pub fn refresh(&mut self) {
        self.universal.extend(self.gamma.iter().cloned());
        self.pre.collect_vars(&mut self.universal);
    }

    pub fn all_vars(&self) -> BTreeSet<Var> {
        let mut out = self.universal.clone();
        self.pre.collect_vars(&mut out);
        self.post.collect_vars(&mut out);
        out
    }

    pub fn ghosts(&self) -> BTreeSet<Var> {
        self.pre.vars().into_iter().filter(|v| !self.gamma.contains(v)).collect()
    }

    pub fn existentials(&self) -> BTreeSet<Var> {
        self.post
            .vars()
            .into_iter()
            .filter(|v| !self.universal.contains(v))
            .collect()
    }

    pub fn fresh_names(&self) -> FreshNames {
        FreshNames::from_vars(&self.all_vars())
    }

    pub fn is_program_expr(&self, e: &Expr) -> bool {
        e.vars().iter().all(|v| self.gamma.contains(v))
    }

    pub fn program_var<'a>(&self, e: &'a Expr) -> Option<&'a Var> {
        e.as_var().filter(|v| self.gamma.contains(*v))
    }

    pub fn child(&self, pre: Assertion, post: Assertion) -> Goal {
        let mut g = Goal {
            gamma: self.gamma.clone(),
            pre,
            post,
            universal: self.universal.clone(),
            closing: self.closing,
            depth: self.depth + 1,
        };
        g.refresh();
        g
    }

    /// Memo key; includes unfolding tags, which equality ignores.
    pub fn key(&self) -> String {
        format!("{:?}|{:?}|{:?}|{}", self.gamma, self.pre, self.post, self.closing)
    }
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g: Vec<String> = self.gamma.iter().map(|v| v.to_string()).collect();
        write!(
            f,
            "{{{}}}; {{{} ; {}}} ~> {{{} ; {}}}",
            g.join(", "),
            self.pre.pure_formula(),
            fmt_spatial(&self.pre.spatial),
            self.post.pure_formula(),
            fmt_spatial(&self.post.spatial)
        )
    }
}

/// Pure facts implied by the spatial part of a precondition: every cell and
/// block sits at a positive address, and cells at the same offset from
/// distinct variables are distinct whenever both variables matter to `concl`.
pub fn spatial_facts(pre: &Assertion, concl: &Expr) -> Vec<Expr> {
    let mut out = Vec::new();
    let mut cells: Vec<(&Expr, usize)> = Vec::new();
    for h in &pre.spatial {
        match h {
            Heaplet::PointsTo { base, offset, .. } => {
                out.push(Expr::lt(Expr::Int(0), base.clone()));
                cells.push((base, *offset));
            }
            Heaplet::Block { base, .. } => out.push(Expr::lt(Expr::Int(0), base.clone())),
            Heaplet::Pred { .. } => {}
        }
    }
    let mentioned = concl.vars();
    for (i, (b1, o1)) in cells.iter().enumerate() {
        for (b2, o2) in &cells[i + 1..] {
            if o1 != o2 || b1 == b2 {
                continue;
            }
            let relevant = |b: &Expr| b.as_var().is_some_and(|v| mentioned.contains(v));
            if relevant(b1) && relevant(b2) {
                out.push(Expr::neq((*b1).clone(), (*b2).clone()));
            }
        }
    }
    out
}

/// The hypothesis used for pure reasoning about `pre`.
pub fn hypothesis(pre: &Assertion, concl: &Expr) -> Expr {
    let mut parts = pre.pure.clone();
    parts.extend(spatial_facts(pre, concl));
    Expr::and_all(parts)
}

pub fn conj(a: Expr, b: Expr) -> Expr {
    Expr::bin(BinOp::And, a, b)
}
