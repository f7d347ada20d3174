//! Predicate definitions, function specifications, contexts and goals.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::expr::{Expr, Sort, Var};
use super::heap::{Assertion, Heaplet, Perm, UnfoldTag};
use super::subst::Subst;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clause {
    pub selector: Expr,
    pub pure: Vec<Expr>,
    pub spatial: Vec<Heaplet>,
}

impl Clause {
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = self.selector.vars();
        self.pure.iter().for_each(|p| p.collect_vars(&mut out));
        self.spatial.iter().for_each(|h| h.collect_vars(&mut out));
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateDef {
    pub name: Arc<str>,
    pub params: Vec<Var>,
    pub perm_params: Vec<Var>,
    pub clauses: Vec<Clause>,
}

/// One clause of a predicate instantiated at concrete arguments, with its
/// clause-local variables renamed apart.
#[derive(Clone, Debug)]
pub struct ClauseInstance {
    pub selector: Expr,
    pub pure: Vec<Expr>,
    pub spatial: Vec<Heaplet>,
    pub locals: Vec<Var>,
}

impl PredicateDef {
    pub fn locals(&self, clause: &Clause) -> Vec<Var> {
        let bound: BTreeSet<&Var> = self.params.iter().chain(&self.perm_params).collect();
        clause
            .vars()
            .into_iter()
            .filter(|v| !bound.contains(v))
            .collect()
    }

    /// Instantiates every clause at `args`/`perms`; `fresh` supplies names for
    /// clause-local variables, and nested instances receive `child_tag`.
    pub fn instantiate(
        &self,
        args: &[Expr],
        perms: &[Perm],
        fresh: &mut FreshNames,
        child_tag: UnfoldTag,
    ) -> Vec<ClauseInstance> {
        let mut out = Vec::new();
        for clause in &self.clauses {
            let mut sub = Subst::new();
            for (p, a) in self.params.iter().zip(args) {
                sub.insert(p.clone(), a.clone())
                    .expect("predicate arity/sort checked at parse time");
            }
            for (p, a) in self.perm_params.iter().zip(perms) {
                sub.insert(p.clone(), a.to_expr())
                    .expect("permission parameters are permission-sorted");
            }
            let mut locals = Vec::new();
            for l in self.locals(clause) {
                let f = fresh.fresh(&l);
                sub.insert(l, Expr::Var(f.clone())).expect("same sort");
                locals.push(f);
            }
            out.push(ClauseInstance {
                selector: sub.apply_expr(&clause.selector),
                pure: clause.pure.iter().map(|p| sub.apply_expr(p)).collect(),
                spatial: clause
                    .spatial
                    .iter()
                    .map(|h| sub.apply_heaplet(h).with_tag(child_tag))
                    .collect(),
                locals,
            });
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionSpec {
    pub name: Arc<str>,
    pub formals: Vec<Var>,
    pub pre: Assertion,
    pub post: Assertion,
}

impl FunctionSpec {
    /// Logical variables of the precondition that are not formals.
    pub fn ghosts(&self) -> BTreeSet<Var> {
        let formals: BTreeSet<&Var> = self.formals.iter().collect();
        self.pre
            .vars()
            .into_iter()
            .filter(|v| !formals.contains(v))
            .collect()
    }

    pub fn existentials(&self) -> BTreeSet<Var> {
        existentials_of(&self.formals.iter().cloned().collect(), &self.pre, &self.post)
    }

    pub fn all_mutable(&self) -> FunctionSpec {
        FunctionSpec {
            name: self.name.clone(),
            formals: self.formals.clone(),
            pre: self.pre.all_mutable(),
            post: self.post.all_mutable(),
        }
    }
}

/// `vars(post) \ (gamma ∪ vars(pre))`.
pub fn existentials_of(gamma: &BTreeSet<Var>, pre: &Assertion, post: &Assertion) -> BTreeSet<Var> {
    let pre_vars = pre.vars();
    post.vars()
        .into_iter()
        .filter(|v| !gamma.contains(v) && !pre_vars.contains(v))
        .collect()
}

/// Σ: predicate definitions and callable function specifications.
#[derive(Clone, Debug, Default)]
pub struct Context {
    pub predicates: BTreeMap<Arc<str>, Arc<PredicateDef>>,
    pub functions: Vec<Arc<FunctionSpec>>,
}

impl Context {
    pub fn predicate(&self, name: &str) -> Option<&Arc<PredicateDef>> {
        self.predicates.get(name)
    }

    pub fn function(&self, name: &str) -> Option<&Arc<FunctionSpec>> {
        self.functions.iter().find(|f| &*f.name == name)
    }

    /// The same context with every borrow replaced by `Mut`; predicate
    /// permission parameters stay declared but are never consulted.
    pub fn all_mutable(&self) -> Context {
        let predicates = self
            .predicates
            .iter()
            .map(|(n, d)| {
                let clauses = d
                    .clauses
                    .iter()
                    .map(|c| {
                        let a = Assertion::new(c.pure.clone(), c.spatial.clone()).all_mutable();
                        Clause {
                            selector: c.selector.clone(),
                            pure: a.pure,
                            spatial: a.spatial,
                        }
                    })
                    .collect();
                let def = PredicateDef {
                    name: d.name.clone(),
                    params: d.params.clone(),
                    perm_params: d.perm_params.clone(),
                    clauses,
                };
                (n.clone(), Arc::new(def))
            })
            .collect();
        Context {
            predicates,
            functions: self
                .functions
                .iter()
                .map(|f| Arc::new(f.all_mutable()))
                .collect(),
        }
    }
}

/// Γ; {pre} ~> {post} under Σ.
#[derive(Clone, Debug)]
pub struct SynthGoal {
    pub gamma: BTreeSet<Var>,
    pub pre: Assertion,
    pub post: Assertion,
    pub sigma: Arc<Context>,
}

impl SynthGoal {
    pub fn ghosts(&self) -> BTreeSet<Var> {
        self.pre
            .vars()
            .into_iter()
            .filter(|v| !self.gamma.contains(v))
            .collect()
    }

    pub fn existentials(&self) -> BTreeSet<Var> {
        existentials_of(&self.gamma, &self.pre, &self.post)
    }
}

/// Generates variable names that avoid a growing set of taken names.
#[derive(Clone, Debug, Default)]
pub struct FreshNames {
    taken: BTreeSet<String>,
}

impl FreshNames {
    pub fn new(taken: impl IntoIterator<Item = String>) -> FreshNames {
        FreshNames {
            taken: taken.into_iter().collect(),
        }
    }

    pub fn from_vars<'a>(vars: impl IntoIterator<Item = &'a Var>) -> FreshNames {
        FreshNames::new(vars.into_iter().map(|v| v.name().to_string()))
    }

    pub fn reserve(&mut self, name: &str) {
        self.taken.insert(name.to_string());
    }

    pub fn is_taken(&self, name: &str) -> bool {
        self.taken.contains(name)
    }

    /// A variable of the same sort as `base` with an unused name derived from it.
    pub fn fresh(&mut self, base: &Var) -> Var {
        let stem = base.name().trim_end_matches(|c: char| c.is_ascii_digit());
        let stem = if stem.is_empty() { "v" } else { stem };
        let mut n = 1usize;
        loop {
            let cand = format!("{stem}{n}");
            if !self.taken.contains(&cand) {
                self.taken.insert(cand.clone());
                return Var::new(cand, base.sort());
            }
            n += 1;
        }
    }

    pub fn fresh_named(&mut self, stem: &str, sort: Sort) -> Var {
        self.fresh(&Var::new(stem, sort))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_names_skip_taken() {
        let mut f = FreshNames::new(["x1".to_string(), "x".to_string()]);
        let x = Var::new("x", Sort::Loc);
        assert_eq!(f.fresh(&x).name(), "x2");
        assert_eq!(f.fresh(&x).name(), "x3");
        assert_eq!(f.fresh(&Var::new("nxt12", Sort::Loc)).name(), "nxt1");
    }
}
