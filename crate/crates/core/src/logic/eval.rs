//! Evaluation of pure terms under a concrete valuation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::expr::{BinOp, Expr, Var};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Val {
    Int(i64),
    Bool(bool),
    Set(BTreeSet<i64>),
    Mut,
    Imm,
}

impl Val {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Val::Int(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Val::Bool(b) => Some(*b),
            _ => None,
        }
    }
}

impl fmt::Display for Val {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Val::Int(n) => write!(f, "{n}"),
            Val::Bool(b) => write!(f, "{b}"),
            Val::Mut => f.write_str("Mut"),
            Val::Imm => f.write_str("Imm"),
            Val::Set(s) => {
                let parts: Vec<String> = s.iter().map(|n| n.to_string()).collect();
                write!(f, "{{{}}}", parts.join(", "))
            }
        }
    }
}

pub type Valuation = BTreeMap<Var, Val>;

/// Evaluates `e`; `None` if a variable is unbound or the term is ill-sorted.
pub fn eval(e: &Expr, env: &Valuation) -> Option<Val> {
    eval_with(e, &|v| env.get(v).cloned())
}

pub fn eval_with(e: &Expr, look: &dyn Fn(&Var) -> Option<Val>) -> Option<Val> {
    Some(match e {
        Expr::Int(n) => Val::Int(*n),
        Expr::Bool(b) => Val::Bool(*b),
        Expr::Mut => Val::Mut,
        Expr::Imm => Val::Imm,
        Expr::Var(v) => look(v)?,
        Expr::SetLit(es) => {
            let mut s = BTreeSet::new();
            for x in es {
                s.insert(eval_with(x, look)?.as_int()?);
            }
            Val::Set(s)
        }
        Expr::Not(x) => Val::Bool(!eval_with(x, look)?.as_bool()?),
        Expr::Ite(c, t, f) => {
            if eval_with(c, look)?.as_bool()? {
                eval_with(t, look)?
            } else {
                eval_with(f, look)?
            }
        }
        Expr::Bin(op, l, r) => {
            // short-circuit connectives so partially bound formulas still decide
            match op {
                BinOp::And => {
                    let a = eval_with(l, look).and_then(|v| v.as_bool());
                    if a == Some(false) {
                        return Some(Val::Bool(false));
                    }
                    let b = eval_with(r, look)?.as_bool()?;
                    return Some(Val::Bool(a? && b));
                }
                BinOp::Or => {
                    let a = eval_with(l, look).and_then(|v| v.as_bool());
                    if a == Some(true) {
                        return Some(Val::Bool(true));
                    }
                    let b = eval_with(r, look)?.as_bool()?;
                    return Some(Val::Bool(a? || b));
                }
                _ => {}
            }
            let a = eval_with(l, look)?;
            let b = eval_with(r, look)?;
            match op {
                BinOp::Add => Val::Int(a.as_int()?.checked_add(b.as_int()?)?),
                BinOp::Sub => Val::Int(a.as_int()?.checked_sub(b.as_int()?)?),
                BinOp::Le => Val::Bool(a.as_int()? <= b.as_int()?),
                BinOp::Lt => Val::Bool(a.as_int()? < b.as_int()?),
                BinOp::Eq => Val::Bool(a == b),
                BinOp::Union => match (a, b) {
                    (Val::Set(x), Val::Set(y)) => Val::Set(x.union(&y).copied().collect()),
                    _ => return None,
                },
                BinOp::And | BinOp::Or => unreachable!(),
            }
        }
    })
}

pub fn holds(e: &Expr, env: &Valuation) -> Option<bool> {
    eval(e, env)?.as_bool()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::expr::Sort;

    #[test]
    fn set_union_and_equality() {
        let s = Var::new("S", Sort::Set);
        let v = Var::new("v", Sort::Int);
        let mut env = Valuation::new();
        env.insert(s.clone(), Val::Set([1, 2].into()));
        env.insert(v.clone(), Val::Int(3));
        let e = Expr::eq(
            Expr::union(Expr::SetLit(vec![Expr::var(&v)]), Expr::var(&s)),
            Expr::SetLit(vec![Expr::Int(1), Expr::Int(2), Expr::Int(3)]),
        );
        assert_eq!(holds(&e, &env), Some(true));
    }

    #[test]
    fn perm_constants_compare() {
        let a = Var::new("a", Sort::Perm);
        let env: Valuation = [(a.clone(), Val::Imm)].into();
        assert_eq!(holds(&Expr::eq(Expr::var(&a), Expr::Mut), &env), Some(false));
    }
}
