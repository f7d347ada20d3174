//! The imperative target language emitted by synthesis.

use std::collections::BTreeSet;
use std::sync::Arc;

use super::expr::{Expr, Var};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Stmt {
    Skip,
    Error,
    /// `let to = *(base + offset);`
    Load {
        to: Var,
        base: Var,
        offset: usize,
    },
    /// `*(base + offset) = value;`
    Store {
        base: Var,
        offset: usize,
        value: Expr,
    },
    Malloc {
        to: Var,
        size: usize,
    },
    Free(Var),
    Call {
        name: Arc<str>,
        args: Vec<Expr>,
    },
    If {
        cond: Expr,
        then: Box<Stmt>,
        els: Box<Stmt>,
    },
    Seq(Vec<Stmt>),
}

impl Stmt {
    /// Sequential composition that drops `Skip` and flattens nested sequences.
    pub fn seq(parts: impl IntoIterator<Item = Stmt>) -> Stmt {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Stmt::Skip => {}
                Stmt::Seq(inner) => out.extend(inner),
                s => out.push(s),
            }
        }
        match out.len() {
            0 => Stmt::Skip,
            1 => out.pop().unwrap(),
            _ => Stmt::Seq(out),
        }
    }

    pub fn then(self, next: Stmt) -> Stmt {
        Stmt::seq([self, next])
    }

    pub fn ite(cond: Expr, then: Stmt, els: Stmt) -> Stmt {
        Stmt::If {
            cond,
            then: Box::new(then),
            els: Box::new(els),
        }
    }

    /// Flattened view of the top-level statements.
    pub fn statements(&self) -> Vec<&Stmt> {
        match self {
            Stmt::Skip => vec![],
            Stmt::Seq(ss) => ss.iter().collect(),
            s => vec![s],
        }
    }

    /// Visits every statement node in pre-order.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Stmt)) {
        f(self);
        match self {
            Stmt::Seq(ss) => ss.iter().for_each(|s| s.walk(f)),
            Stmt::If { then, els, .. } => {
                then.walk(f);
                els.walk(f);
            }
            _ => {}
        }
    }

    /// Drops loads whose variable is never used afterwards.
    pub fn without_dead_loads(self) -> Stmt {
        self.prune(&mut BTreeSet::new())
    }

    /// Backward pass; `live` holds the variables read after `self` and is
    /// updated to those read from its start.
    fn prune(self, live: &mut BTreeSet<Var>) -> Stmt {
        match self {
            Stmt::Load { to, base, offset } => {
                if !live.remove(&to) {
                    return Stmt::Skip;
                }
                live.insert(base.clone());
                Stmt::Load { to, base, offset }
            }
            Stmt::Store { base, offset, value } => {
                live.insert(base.clone());
                live.extend(value.vars());
                Stmt::Store { base, offset, value }
            }
            Stmt::Malloc { to, size } => {
                live.remove(&to);
                Stmt::Malloc { to, size }
            }
            Stmt::Free(x) => {
                live.insert(x.clone());
                Stmt::Free(x)
            }
            Stmt::Call { name, args } => {
                args.iter().for_each(|a| live.extend(a.vars()));
                Stmt::Call { name, args }
            }
            Stmt::If { cond, then, els } => {
                let mut live_els = live.clone();
                let then = then.prune(live);
                let els = els.prune(&mut live_els);
                live.extend(live_els);
                live.extend(cond.vars());
                Stmt::ite(cond, then, els)
            }
            Stmt::Seq(parts) => {
                let mut kept: Vec<Stmt> = parts.into_iter().rev().map(|p| p.prune(live)).collect();
                kept.reverse();
                Stmt::seq(kept)
            }
            s @ (Stmt::Skip | Stmt::Error) => s,
        }
    }

    pub fn count(&self, pred: impl Fn(&Stmt) -> bool) -> usize {
        let mut n = 0;
        self.walk(&mut |s| {
            if pred(s) {
                n += 1
            }
        });
        n
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Procedure {
    pub name: Arc<str>,
    pub formals: Vec<Var>,
    pub body: Stmt,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::expr::Sort;
    use crate::parser::{parse_program, print_program};

    #[test]
    fn dead_loads_are_dropped() {
        let src = "void f(loc x, loc y) { let a = *x; let b = *(x + 1); if (b == 0) { let c = *y; } else { *y = a; } }";
        let mut p = parse_program(src).unwrap().pop().unwrap();
        p.body = p.body.without_dead_loads();
        let text = print_program(&p);
        assert!(text.contains("let a = *x;") && text.contains("let b = *(x + 1);"));
        assert!(!text.contains("let c"), "{text}");
    }

    #[test]
    fn seq_flattens_and_drops_skip() {
        let x = Var::new("x", Sort::Loc);
        let st = Stmt::Store {
            base: x.clone(),
            offset: 0,
            value: Expr::Int(1),
        };
        let s = Stmt::seq([
            Stmt::Skip,
            Stmt::seq([st.clone(), st.clone()]),
            Stmt::Skip,
            Stmt::Free(x),
        ]);
        assert_eq!(s.statements().len(), 3);
        assert_eq!(Stmt::seq([Stmt::Skip, st.clone()]), st);
        assert_eq!(Stmt::seq([]), Stmt::Skip);
    }
}
