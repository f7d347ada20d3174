//! Pure logic terms shared by assertions and emitted programs.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

/// Sorts of logical and program variables.
///
/// Locations are a subset of values, so `Loc` and `Int` are compatible with
/// each other everywhere a numeric term is expected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    Loc,
    Int,
    Bool,
    Set,
    Perm,
}

impl Sort {
    pub fn is_numeric(self) -> bool {
        matches!(self, Sort::Loc | Sort::Int)
    }

    pub fn compatible(self, other: Sort) -> bool {
        self == other || (self.is_numeric() && other.is_numeric())
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Sort::Loc => "loc",
            Sort::Int => "int",
            Sort::Bool => "bool",
            Sort::Set => "set",
            Sort::Perm => "perm",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Sort> {
        Some(match s {
            "loc" => Sort::Loc,
            "int" => Sort::Int,
            "bool" => Sort::Bool,
            "set" => Sort::Set,
            "perm" => Sort::Perm,
            _ => return None,
        })
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// A sorted variable. Two variables are the same iff name and sort agree.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    name: Arc<str>,
    sort: Sort,
}

impl Var {
    pub fn new(name: impl AsRef<str>, sort: Sort) -> Var {
        Var {
            name: Arc::from(name.as_ref()),
            sort,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sort(&self) -> Sort {
        self.sort
    }

    pub fn with_name(&self, name: impl AsRef<str>) -> Var {
        Var::new(name, self.sort)
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.name, self.sort)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Eq,
    Le,
    Lt,
    And,
    Or,
    Union,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Eq => "==",
            BinOp::Le => "<=",
            BinOp::Lt => "<",
            BinOp::And => "/\\",
            BinOp::Or => "\\/",
            BinOp::Union => "++",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Le | BinOp::Lt => 3,
            BinOp::Add | BinOp::Sub | BinOp::Union => 4,
        }
    }
}

/// Pure terms. Permission constants are embedded as `Mut` / `Imm`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Mut,
    Imm,
    Var(Var),
    SetLit(Vec<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    Ite(Box<Expr>, Box<Expr>, Box<Expr>),
}

pub const TRUE: Expr = Expr::Bool(true);
pub const FALSE: Expr = Expr::Bool(false);

impl Expr {
    pub fn var(v: &Var) -> Expr {
        Expr::Var(v.clone())
    }

    pub fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Bin(op, Box::new(l), Box::new(r))
    }

    pub fn eq(l: Expr, r: Expr) -> Expr {
        Expr::bin(BinOp::Eq, l, r)
    }

    pub fn le(l: Expr, r: Expr) -> Expr {
        Expr::bin(BinOp::Le, l, r)
    }

    pub fn lt(l: Expr, r: Expr) -> Expr {
        Expr::bin(BinOp::Lt, l, r)
    }

    pub fn add(l: Expr, r: Expr) -> Expr {
        Expr::bin(BinOp::Add, l, r)
    }

    pub fn union(l: Expr, r: Expr) -> Expr {
        Expr::bin(BinOp::Union, l, r)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Expr) -> Expr {
        match e {
            Expr::Not(inner) => *inner,
            Expr::Bool(b) => Expr::Bool(!b),
            e => Expr::Not(Box::new(e)),
        }
    }

    pub fn neq(l: Expr, r: Expr) -> Expr {
        Expr::not(Expr::eq(l, r))
    }

    pub fn ite(c: Expr, t: Expr, e: Expr) -> Expr {
        Expr::Ite(Box::new(c), Box::new(t), Box::new(e))
    }

    /// Conjunction of a list; `true` when empty.
    pub fn and_all(parts: impl IntoIterator<Item = Expr>) -> Expr {
        let mut acc: Option<Expr> = None;
        for p in parts {
            if p == TRUE {
                continue;
            }
            acc = Some(match acc {
                None => p,
                Some(a) => Expr::bin(BinOp::And, a, p),
            });
        }
        acc.unwrap_or(TRUE)
    }

    pub fn or_all(parts: impl IntoIterator<Item = Expr>) -> Expr {
        let mut acc: Option<Expr> = None;
        for p in parts {
            acc = Some(match acc {
                None => p,
                Some(a) => Expr::bin(BinOp::Or, a, p),
            });
        }
        acc.unwrap_or(FALSE)
    }

    /// Splits nested conjunctions into their conjuncts.
    pub fn conjuncts(&self) -> Vec<Expr> {
        let mut out = Vec::new();
        fn go(e: &Expr, out: &mut Vec<Expr>) {
            match e {
                Expr::Bin(BinOp::And, l, r) => {
                    go(l, out);
                    go(r, out);
                }
                Expr::Bool(true) => {}
                e => out.push(e.clone()),
            }
        }
        go(self, &mut out);
        out
    }

    /// Sort of the term, given that variables carry their sorts.
    pub fn sort(&self) -> Sort {
        match self {
            Expr::Int(_) => Sort::Int,
            Expr::Bool(_) => Sort::Bool,
            Expr::Mut | Expr::Imm => Sort::Perm,
            Expr::Var(v) => v.sort(),
            Expr::SetLit(_) => Sort::Set,
            Expr::Bin(op, l, _) => match op {
                BinOp::Add | BinOp::Sub => Sort::Int,
                BinOp::Union => Sort::Set,
                _ => {
                    let _ = l;
                    Sort::Bool
                }
            },
            Expr::Not(_) => Sort::Bool,
            Expr::Ite(_, t, _) => t.sort(),
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::SetLit(es) => es.iter().for_each(|e| e.collect_vars(out)),
            Expr::Bin(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            Expr::Not(e) => e.collect_vars(out),
            Expr::Ite(c, t, e) => {
                c.collect_vars(out);
                t.collect_vars(out);
                e.collect_vars(out);
            }
            Expr::Int(_) | Expr::Bool(_) | Expr::Mut | Expr::Imm => {}
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn mentions(&self, v: &Var) -> bool {
        match self {
            Expr::Var(w) => w == v,
            Expr::SetLit(es) => es.iter().any(|e| e.mentions(v)),
            Expr::Bin(_, l, r) => l.mentions(v) || r.mentions(v),
            Expr::Not(e) => e.mentions(v),
            Expr::Ite(c, t, e) => c.mentions(v) || t.mentions(v) || e.mentions(v),
            _ => false,
        }
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Expr::Var(v) => Some(v),
            _ => None,
        }
    }

    /// Node count used by the program size metric.
    pub fn size(&self) -> usize {
        match self {
            Expr::SetLit(es) => 1 + es.iter().map(Expr::size).sum::<usize>(),
            Expr::Bin(_, l, r) => 1 + l.size() + r.size(),
            Expr::Not(e) => 1 + e.size(),
            Expr::Ite(c, t, e) => 1 + c.size() + t.size() + e.size(),
            _ => 1,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, ctx: u8) -> fmt::Result {
        match self {
            Expr::Int(n) if *n < 0 => write!(f, "({n})"),
            Expr::Int(n) => write!(f, "{n}"),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Mut => f.write_str("Mut"),
            Expr::Imm => f.write_str("Imm"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::SetLit(es) => {
                f.write_str("{")?;
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    e.fmt_prec(f, 0)?;
                }
                f.write_str("}")
            }
            Expr::Bin(op, l, r) => {
                let p = op.precedence();
                if p <= ctx {
                    f.write_str("(")?;
                }
                l.fmt_prec(f, p - 1)?;
                write!(f, " {} ", op.symbol())?;
                // comparisons are non-associative; arithmetic is left-assoc
                r.fmt_prec(f, p)?;
                if p <= ctx {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Expr::Not(e) => {
                f.write_str("not ")?;
                e.fmt_prec(f, 5)
            }
            Expr::Ite(c, t, e) => {
                f.write_str("(")?;
                c.fmt_prec(f, 0)?;
                f.write_str(" ? ")?;
                t.fmt_prec(f, 0)?;
                f.write_str(" : ")?;
                e.fmt_prec(f, 0)?;
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::Int(n)
    }
}

impl From<&Var> for Expr {
    fn from(v: &Var) -> Expr {
        Expr::Var(v.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_respects_precedence() {
        let x = Var::new("x", Sort::Loc);
        let e = Expr::not(Expr::eq(Expr::var(&x), Expr::Int(0)));
        assert_eq!(e.to_string(), "not (x == 0)");
        let s = Expr::union(
            Expr::SetLit(vec![Expr::var(&Var::new("v", Sort::Int))]),
            Expr::var(&Var::new("S1", Sort::Set)),
        );
        assert_eq!(s.to_string(), "{v} ++ S1");
        let a = Expr::add(Expr::Int(1), Expr::add(Expr::Int(2), Expr::Int(3)));
        assert_eq!(a.to_string(), "1 + (2 + 3)");
    }

    #[test]
    fn loc_and_int_are_compatible() {
        assert!(Sort::Loc.compatible(Sort::Int));
        assert!(!Sort::Set.compatible(Sort::Int));
        assert!(!Sort::Perm.compatible(Sort::Bool));
    }
}
