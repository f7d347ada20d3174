//! Symbolic heaps, permission annotations and assertions.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use super::expr::{Expr, Sort, Var};

/// Access permission attached to every heaplet.
///
/// `Imm` is a semantic value only; the front end never accepts it in
/// user-written specifications.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Perm {
    Mut,
    Imm,
    Borrow(Var),
}

impl Perm {
    pub fn borrow(name: &str) -> Perm {
        Perm::Borrow(Var::new(name, Sort::Perm))
    }

    pub fn to_expr(&self) -> Expr {
        match self {
            Perm::Mut => Expr::Mut,
            Perm::Imm => Expr::Imm,
            Perm::Borrow(v) => Expr::Var(v.clone()),
        }
    }

    pub fn from_expr(e: &Expr) -> Option<Perm> {
        match e {
            Expr::Mut => Some(Perm::Mut),
            Expr::Imm => Some(Perm::Imm),
            Expr::Var(v) if v.sort() == Sort::Perm => Some(Perm::Borrow(v.clone())),
            _ => None,
        }
    }

    pub fn is_mut(&self) -> bool {
        matches!(self, Perm::Mut)
    }

    pub fn is_read_only(&self) -> bool {
        !self.is_mut()
    }

    pub fn var(&self) -> Option<&Var> {
        match self {
            Perm::Borrow(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Perm::Mut => f.write_str("Mut"),
            Perm::Imm => f.write_str("Imm"),
            Perm::Borrow(v) => write!(f, "{v}"),
        }
    }
}

/// Search bookkeeping carried by predicate instances.
///
/// `level` counts unfoldings (Open in a precondition, Close in a
/// postcondition) along the current derivation path; `frozen` marks instances
/// produced by a call. Tags never take part in equality, ordering or hashing.
#[derive(Clone, Copy, Debug, Default)]
pub struct UnfoldTag {
    pub level: u8,
    pub frozen: bool,
}

impl PartialEq for UnfoldTag {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}
impl Eq for UnfoldTag {}
impl PartialOrd for UnfoldTag {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for UnfoldTag {
    fn cmp(&self, _: &Self) -> Ordering {
        Ordering::Equal
    }
}
impl Hash for UnfoldTag {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Heaplet {
    PointsTo {
        base: Expr,
        offset: usize,
        value: Expr,
        perm: Perm,
    },
    Block {
        base: Expr,
        size: usize,
        perm: Perm,
    },
    Pred {
        name: Arc<str>,
        args: Vec<Expr>,
        perms: Vec<Perm>,
        tag: UnfoldTag,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HeapletKind {
    Block,
    PointsTo,
    Pred,
}

impl Heaplet {
    pub fn points_to(base: Expr, offset: usize, value: Expr, perm: Perm) -> Heaplet {
        Heaplet::PointsTo {
            base,
            offset,
            value,
            perm,
        }
    }

    pub fn block(base: Expr, size: usize, perm: Perm) -> Heaplet {
        Heaplet::Block { base, size, perm }
    }

    pub fn pred(name: &str, args: Vec<Expr>, perms: Vec<Perm>) -> Heaplet {
        Heaplet::Pred {
            name: Arc::from(name),
            args,
            perms,
            tag: UnfoldTag::default(),
        }
    }

    pub fn kind(&self) -> HeapletKind {
        match self {
            Heaplet::PointsTo { .. } => HeapletKind::PointsTo,
            Heaplet::Block { .. } => HeapletKind::Block,
            Heaplet::Pred { .. } => HeapletKind::Pred,
        }
    }

    /// Base location, or the first argument of a predicate instance.
    pub fn base(&self) -> Option<&Expr> {
        match self {
            Heaplet::PointsTo { base, .. } | Heaplet::Block { base, .. } => Some(base),
            Heaplet::Pred { args, .. } => args.first(),
        }
    }

    pub fn perms(&self) -> Vec<&Perm> {
        match self {
            Heaplet::PointsTo { perm, .. } | Heaplet::Block { perm, .. } => vec![perm],
            Heaplet::Pred { perms, .. } => perms.iter().collect(),
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Heaplet::PointsTo {
                base, value, perm, ..
            } => {
                base.collect_vars(out);
                value.collect_vars(out);
                if let Perm::Borrow(v) = perm {
                    out.insert(v.clone());
                }
            }
            Heaplet::Block { base, perm, .. } => {
                base.collect_vars(out);
                if let Perm::Borrow(v) = perm {
                    out.insert(v.clone());
                }
            }
            Heaplet::Pred { args, perms, .. } => {
                args.iter().for_each(|a| a.collect_vars(out));
                for p in perms {
                    if let Perm::Borrow(v) = p {
                        out.insert(v.clone());
                    }
                }
            }
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn tag(&self) -> UnfoldTag {
        match self {
            Heaplet::Pred { tag, .. } => *tag,
            _ => UnfoldTag::default(),
        }
    }

    pub fn with_tag(mut self, new_tag: UnfoldTag) -> Heaplet {
        if let Heaplet::Pred { tag, .. } = &mut self {
            *tag = new_tag;
        }
        self
    }

    /// Structural size used by the smallest/largest-first unification orders.
    pub fn footprint_size(&self) -> usize {
        match self {
            Heaplet::PointsTo { .. } => 1,
            Heaplet::Block { size, .. } => *size + 1,
            Heaplet::Pred { args, perms, .. } => 2 + args.len() + perms.len(),
        }
    }

    fn sort_key(&self) -> (HeapletKind, String, usize) {
        let base = self
            .base()
            .map(|b| b.to_string())
            .unwrap_or_default();
        match self {
            Heaplet::PointsTo { offset, .. } => (HeapletKind::PointsTo, base, *offset),
            Heaplet::Block { size, .. } => (HeapletKind::Block, base, *size),
            Heaplet::Pred { name, .. } => (HeapletKind::Pred, format!("{name}/{base}"), 0),
        }
    }
}

impl PartialOrd for Heaplet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Canonical order: kind, then base, then offset; ties broken structurally.
impl Ord for Heaplet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key()
            .cmp(&other.sort_key())
            .then_with(|| format!("{self:?}").cmp(&format!("{other:?}")))
    }
}

fn fmt_perm_suffix(f: &mut fmt::Formatter<'_>, perm: &Perm) -> fmt::Result {
    if perm.is_mut() {
        Ok(())
    } else {
        write!(f, "<{perm}>")
    }
}

impl fmt::Display for Heaplet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Heaplet::PointsTo {
                base,
                offset,
                value,
                perm,
            } => {
                let base = match base {
                    Expr::Var(_) | Expr::Int(_) => base.to_string(),
                    other => format!("({other})"),
                };
                if *offset == 0 {
                    write!(f, "{base} :-> {value}")?;
                } else {
                    write!(f, "({base} + {offset}) :-> {value}")?;
                }
                fmt_perm_suffix(f, perm)
            }
            Heaplet::Block { base, size, perm } => {
                write!(f, "[{base}, {size}]")?;
                fmt_perm_suffix(f, perm)
            }
            Heaplet::Pred {
                name, args, perms, ..
            } => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")?;
                if !perms.is_empty() {
                    f.write_str("<")?;
                    for (i, p) in perms.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write!(f, "{p}")?;
                    }
                    f.write_str(">")?;
                }
                Ok(())
            }
        }
    }
}

/// `{ pure ; spatial }`. The pure part is kept as a conjunct list; the spatial
/// part is a multiset kept in canonical order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Assertion {
    pub pure: Vec<Expr>,
    pub spatial: Vec<Heaplet>,
}

impl Assertion {
    pub fn new(pure: Vec<Expr>, spatial: Vec<Heaplet>) -> Assertion {
        let mut a = Assertion { pure, spatial };
        a.canonicalize();
        a
    }

    pub fn emp() -> Assertion {
        Assertion::default()
    }

    pub fn canonicalize(&mut self) {
        let mut pure = Vec::new();
        for p in std::mem::take(&mut self.pure) {
            pure.extend(p.conjuncts());
        }
        pure.sort();
        pure.dedup();
        self.pure = pure;
        self.spatial.sort();
    }

    pub fn pure_formula(&self) -> Expr {
        Expr::and_all(self.pure.iter().cloned())
    }

    pub fn is_emp(&self) -> bool {
        self.spatial.is_empty()
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        self.pure.iter().for_each(|p| p.collect_vars(out));
        self.spatial.iter().for_each(|h| h.collect_vars(out));
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn spatial_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.spatial.iter().for_each(|h| h.collect_vars(&mut out));
        out
    }

    /// Replaces every borrow annotation by `Mut`.
    pub fn all_mutable(&self) -> Assertion {
        let fix = |p: &Perm| match p {
            Perm::Borrow(_) => Perm::Mut,
            other => other.clone(),
        };
        let spatial = self
            .spatial
            .iter()
            .map(|h| match h {
                Heaplet::PointsTo {
                    base,
                    offset,
                    value,
                    perm,
                } => Heaplet::points_to(base.clone(), *offset, value.clone(), fix(perm)),
                Heaplet::Block { base, size, perm } => {
                    Heaplet::block(base.clone(), *size, fix(perm))
                }
                Heaplet::Pred {
                    name,
                    args,
                    perms,
                    tag,
                } => Heaplet::Pred {
                    name: name.clone(),
                    args: args.clone(),
                    perms: perms.iter().map(fix).collect(),
                    tag: *tag,
                },
            })
            .collect();
        let pure = self
            .pure
            .iter()
            .map(replace_perm_vars_with_mut)
            .collect();
        Assertion::new(pure, spatial)
    }
}

fn replace_perm_vars_with_mut(e: &Expr) -> Expr {
    match e {
        Expr::Var(v) if v.sort() == Sort::Perm => Expr::Mut,
        Expr::SetLit(es) => Expr::SetLit(es.iter().map(replace_perm_vars_with_mut).collect()),
        Expr::Bin(op, l, r) => Expr::bin(
            *op,
            replace_perm_vars_with_mut(l),
            replace_perm_vars_with_mut(r),
        ),
        Expr::Not(x) => Expr::not(replace_perm_vars_with_mut(x)),
        Expr::Ite(c, t, f) => Expr::ite(
            replace_perm_vars_with_mut(c),
            replace_perm_vars_with_mut(t),
            replace_perm_vars_with_mut(f),
        ),
        other => other.clone(),
    }
}

pub fn fmt_spatial(spatial: &[Heaplet]) -> String {
    if spatial.is_empty() {
        "emp".to_string()
    } else {
        spatial
            .iter()
            .map(|h| h.to_string())
            .collect::<Vec<_>>()
            .join(" ** ")
    }
}

impl fmt::Display for Assertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pure.is_empty() {
            write!(f, "{{ {} }}", fmt_spatial(&self.spatial))
        } else {
            let pure = self
                .pure
                .iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(" /\\ ");
            write!(f, "{{ {pure} ; {} }}", fmt_spatial(&self.spatial))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_do_not_affect_equality() {
        let a = Heaplet::pred("ls", vec![Expr::Int(0)], vec![Perm::Mut]);
        let b = a.clone().with_tag(UnfoldTag {
            level: 3,
            frozen: true,
        });
        assert_eq!(a, b);
        assert_eq!(b.tag().level, 3);
    }

    #[test]
    fn canonical_order_is_kind_base_offset() {
        let x = Expr::Var(Var::new("x", Sort::Loc));
        let y = Expr::Var(Var::new("y", Sort::Loc));
        let a = Assertion::new(
            vec![],
            vec![
                Heaplet::pred("ls", vec![x.clone()], vec![]),
                Heaplet::points_to(y.clone(), 0, Expr::Int(1), Perm::Mut),
                Heaplet::points_to(x.clone(), 1, Expr::Int(1), Perm::Mut),
                Heaplet::block(x.clone(), 2, Perm::Mut),
                Heaplet::points_to(x.clone(), 0, Expr::Int(1), Perm::Mut),
            ],
        );
        let shown: Vec<String> = a.spatial.iter().map(|h| h.to_string()).collect();
        assert_eq!(
            shown,
            vec!["[x, 2]", "x :-> 1", "(x + 1) :-> 1", "y :-> 1", "ls(x)"]
        );
    }
}
