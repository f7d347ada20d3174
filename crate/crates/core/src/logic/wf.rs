//! Well-formedness of predicates and function specifications.
//!
//! Permission variables inside a predicate must be bound by its permission
//! parameters, and a specification may not introduce permission variables
//! that occur only in its postcondition.

use std::collections::BTreeSet;
use std::fmt;

use super::expr::{Sort, Var};
use super::heap::{Assertion, Heaplet};
use super::spec::{Context, FunctionSpec, PredicateDef};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    UnboundPredicatePerm {
        predicate: String,
        clause: usize,
        var: String,
    },
    ExistentialPerm {
        function: String,
        var: String,
    },
    UnknownPredicate {
        context: String,
        predicate: String,
    },
    ArityMismatch {
        context: String,
        predicate: String,
        expected: (usize, usize),
        found: (usize, usize),
    },
    IllFormedPredicate {
        function: String,
        predicate: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnboundPredicatePerm {
                predicate,
                clause,
                var,
            } => write!(
                f,
                "predicate `{predicate}`, clause {clause}: permission variable `{var}` is not a permission parameter"
            ),
            Violation::ExistentialPerm { function, var } => write!(
                f,
                "function `{function}`: permission variable `{var}` occurs only in the postcondition"
            ),
            Violation::UnknownPredicate { context, predicate } => {
                write!(f, "{context}: unknown predicate `{predicate}`")
            }
            Violation::ArityMismatch {
                context,
                predicate,
                expected,
                found,
            } => write!(
                f,
                "{context}: `{predicate}` expects {} argument(s) and {} permission(s), found {} and {}",
                expected.0, expected.1, found.0, found.1
            ),
            Violation::IllFormedPredicate {
                function,
                predicate,
            } => write!(
                f,
                "function `{function}` uses ill-formed predicate `{predicate}`"
            ),
        }
    }
}

fn perm_vars(vars: BTreeSet<Var>) -> impl Iterator<Item = Var> {
    vars.into_iter().filter(|v| v.sort() == Sort::Perm)
}

pub fn check_predicate(d: &PredicateDef) -> Result<(), Vec<Violation>> {
    let bound: BTreeSet<&Var> = d.perm_params.iter().collect();
    let mut out = Vec::new();
    for (i, clause) in d.clauses.iter().enumerate() {
        for v in perm_vars(clause.vars()) {
            if !bound.contains(&v) {
                out.push(Violation::UnboundPredicatePerm {
                    predicate: d.name.to_string(),
                    clause: i,
                    var: v.name().to_string(),
                });
            }
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

fn check_instances(context: &str, a: &Assertion, sigma: &Context, out: &mut Vec<Violation>) {
    for h in &a.spatial {
        if let Heaplet::Pred {
            name, args, perms, ..
        } = h
        {
            match sigma.predicate(name) {
                None => out.push(Violation::UnknownPredicate {
                    context: context.to_string(),
                    predicate: name.to_string(),
                }),
                Some(d) => {
                    if d.params.len() != args.len() || d.perm_params.len() != perms.len() {
                        out.push(Violation::ArityMismatch {
                            context: context.to_string(),
                            predicate: name.to_string(),
                            expected: (d.params.len(), d.perm_params.len()),
                            found: (args.len(), perms.len()),
                        });
                    }
                }
            }
        }
    }
}

/// Checks a specification against Σ: every predicate instance refers to a
/// known, well-formed predicate and no permission variable is existential.
pub fn check_function(f: &FunctionSpec, sigma: &Context) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    let ctx = format!("function `{}`", f.name);
    check_instances(&ctx, &f.pre, sigma, &mut out);
    check_instances(&ctx, &f.post, sigma, &mut out);
    let used: BTreeSet<&str> = f
        .pre
        .spatial
        .iter()
        .chain(&f.post.spatial)
        .filter_map(|h| match h {
            Heaplet::Pred { name, .. } => Some(&**name),
            _ => None,
        })
        .collect();
    for p in used {
        if let Some(d) = sigma.predicate(p) {
            if check_predicate(d).is_err() {
                out.push(Violation::IllFormedPredicate {
                    function: f.name.to_string(),
                    predicate: p.to_string(),
                });
            }
        }
    }
    for v in perm_vars(f.existentials()) {
        out.push(Violation::ExistentialPerm {
            function: f.name.to_string(),
            var: v.name().to_string(),
        });
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::expr::Expr;
    use crate::logic::heap::Perm;
    use crate::logic::spec::Clause;
    use std::sync::Arc;

    fn lv(n: &str) -> Expr {
        Expr::Var(Var::new(n, Sort::Loc))
    }

    fn ls_def(extra_perm: Option<&str>) -> PredicateDef {
        let pv = |n: &str| Var::new(n, Sort::Perm);
        let cell_perm = match extra_perm {
            Some(d) => Perm::borrow(d),
            None => Perm::borrow("b"),
        };
        PredicateDef {
            name: Arc::from("ls"),
            params: vec![Var::new("x", Sort::Loc)],
            perm_params: vec![pv("a"), pv("b"), pv("c")],
            clauses: vec![
                Clause {
                    selector: Expr::eq(lv("x"), Expr::Int(0)),
                    pure: vec![],
                    spatial: vec![],
                },
                Clause {
                    selector: Expr::neq(lv("x"), Expr::Int(0)),
                    pure: vec![],
                    spatial: vec![
                        Heaplet::block(lv("x"), 2, Perm::borrow("a")),
                        Heaplet::points_to(lv("x"), 0, lv("v"), cell_perm),
                        Heaplet::points_to(lv("x"), 1, lv("nxt"), Perm::borrow("c")),
                        Heaplet::pred(
                            "ls",
                            vec![lv("nxt")],
                            vec![Perm::borrow("a"), Perm::borrow("b"), Perm::borrow("c")],
                        ),
                    ],
                },
            ],
        }
    }

    #[test]
    fn borrow_polymorphic_list_is_well_formed() {
        assert!(check_predicate(&ls_def(None)).is_ok());
    }

    #[test]
    fn unbound_borrow_is_reported() {
        let errs = check_predicate(&ls_def(Some("d"))).unwrap_err();
        assert_eq!(
            errs,
            vec![Violation::UnboundPredicatePerm {
                predicate: "ls".into(),
                clause: 1,
                var: "d".into()
            }]
        );
    }

    #[test]
    fn all_mut_predicate_without_perm_params_is_ok() {
        let d = PredicateDef {
            name: Arc::from("cell"),
            params: vec![Var::new("x", Sort::Loc)],
            perm_params: vec![],
            clauses: vec![Clause {
                selector: Expr::Bool(true),
                pure: vec![],
                spatial: vec![Heaplet::points_to(lv("x"), 0, Expr::Int(0), Perm::Mut)],
            }],
        };
        assert!(check_predicate(&d).is_ok());
    }

    #[test]
    fn existential_borrow_in_post_is_rejected() {
        let x = Var::new("x", Sort::Loc);
        let f = FunctionSpec {
            name: Arc::from("bad"),
            formals: vec![x.clone()],
            pre: Assertion::new(vec![], vec![Heaplet::points_to(lv("x"), 0, lv("v"), Perm::Mut)]),
            post: Assertion::new(
                vec![],
                vec![Heaplet::points_to(lv("x"), 0, lv("v"), Perm::borrow("e"))],
            ),
        };
        let errs = check_function(&f, &Context::default()).unwrap_err();
        assert_eq!(
            errs,
            vec![Violation::ExistentialPerm {
                function: "bad".into(),
                var: "e".into()
            }]
        );
    }

    #[test]
    fn read_xy_is_well_formed() {
        let iv = |n: &str| Expr::Var(Var::new(n, Sort::Int));
        let f = FunctionSpec {
            name: Arc::from("read_xy"),
            formals: vec![
                Var::new("x", Sort::Loc),
                Var::new("y", Sort::Loc),
                Var::new("r", Sort::Loc),
            ],
            pre: Assertion::new(
                vec![],
                vec![
                    Heaplet::points_to(lv("x"), 0, iv("f"), Perm::borrow("a")),
                    Heaplet::points_to(lv("y"), 0, iv("g"), Perm::borrow("b")),
                    Heaplet::points_to(lv("r"), 0, iv("h"), Perm::Mut),
                ],
            ),
            post: Assertion::new(
                vec![],
                vec![
                    Heaplet::points_to(lv("x"), 0, iv("f"), Perm::borrow("a")),
                    Heaplet::points_to(lv("y"), 0, iv("g"), Perm::borrow("b")),
                    Heaplet::points_to(lv("r"), 0, Expr::add(iv("f"), iv("g")), Perm::Mut),
                ],
            ),
        };
        assert!(check_function(&f, &Context::default()).is_ok());
        assert!(check_function(&f.all_mutable(), &Context::default()).is_ok());
    }
}
