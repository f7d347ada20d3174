//! Simultaneous substitution of logical variables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use super::expr::{Expr, Var};
use super::heap::{Assertion, Heaplet, Perm};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SubstError {
    #[error("cannot map `{var}` of sort {expected} to `{image}` of sort {found}")]
    SortMismatch {
        var: String,
        expected: String,
        image: String,
        found: String,
    },
}

/// A finite map from variables to terms of a compatible sort. Permission
/// variables map to permission terms (`Mut`, `Imm` or another borrow).
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Subst {
    map: BTreeMap<Var, Expr>,
}

impl Subst {
    pub fn new() -> Subst {
        Subst::default()
    }

    pub fn single(v: Var, e: Expr) -> Result<Subst, SubstError> {
        let mut s = Subst::new();
        s.insert(v, e)?;
        Ok(s)
    }

    pub fn from_pairs(
        pairs: impl IntoIterator<Item = (Var, Expr)>,
    ) -> Result<Subst, SubstError> {
        let mut s = Subst::new();
        for (v, e) in pairs {
            s.insert(v, e)?;
        }
        Ok(s)
    }

    /// Adds a binding after checking that the image has a compatible sort.
    pub fn insert(&mut self, v: Var, e: Expr) -> Result<(), SubstError> {
        let found = e.sort();
        if !v.sort().compatible(found) {
            return Err(SubstError::SortMismatch {
                var: v.name().to_string(),
                expected: v.sort().to_string(),
                image: e.to_string(),
                found: found.to_string(),
            });
        }
        self.map.insert(v, e);
        Ok(())
    }

    pub fn get(&self, v: &Var) -> Option<&Expr> {
        self.map.get(v)
    }

    pub fn contains(&self, v: &Var) -> bool {
        self.map.contains_key(v)
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Expr)> {
        self.map.iter()
    }

    pub fn domain(&self) -> BTreeSet<Var> {
        self.map.keys().cloned().collect()
    }

    pub fn range_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.map.values().for_each(|e| e.collect_vars(&mut out));
        out
    }

    /// `self ∘ inner`: applying the result equals applying `inner` then `self`.
    pub fn compose(&self, inner: &Subst) -> Subst {
        let mut map: BTreeMap<Var, Expr> = inner
            .map
            .iter()
            .map(|(v, e)| (v.clone(), self.apply_expr(e)))
            .collect();
        for (v, e) in &self.map {
            map.entry(v.clone()).or_insert_with(|| e.clone());
        }
        Subst { map }
    }

    pub fn apply_expr(&self, e: &Expr) -> Expr {
        if self.map.is_empty() {
            return e.clone();
        }
        match e {
            Expr::Var(v) => self.map.get(v).cloned().unwrap_or_else(|| e.clone()),
            Expr::SetLit(es) => Expr::SetLit(es.iter().map(|x| self.apply_expr(x)).collect()),
            Expr::Bin(op, l, r) => Expr::bin(*op, self.apply_expr(l), self.apply_expr(r)),
            Expr::Not(x) => Expr::Not(Box::new(self.apply_expr(x))),
            Expr::Ite(c, t, f) => {
                Expr::ite(self.apply_expr(c), self.apply_expr(t), self.apply_expr(f))
            }
            Expr::Int(_) | Expr::Bool(_) | Expr::Mut | Expr::Imm => e.clone(),
        }
    }

    pub fn apply_perm(&self, p: &Perm) -> Perm {
        match p {
            Perm::Borrow(v) => match self.map.get(v) {
                Some(e) => Perm::from_expr(e).unwrap_or_else(|| p.clone()),
                None => p.clone(),
            },
            other => other.clone(),
        }
    }

    pub fn apply_heaplet(&self, h: &Heaplet) -> Heaplet {
        match h {
            Heaplet::PointsTo {
                base,
                offset,
                value,
                perm,
            } => Heaplet::PointsTo {
                base: self.apply_expr(base),
                offset: *offset,
                value: self.apply_expr(value),
                perm: self.apply_perm(perm),
            },
            Heaplet::Block { base, size, perm } => Heaplet::Block {
                base: self.apply_expr(base),
                size: *size,
                perm: self.apply_perm(perm),
            },
            Heaplet::Pred {
                name,
                args,
                perms,
                tag,
            } => Heaplet::Pred {
                name: name.clone(),
                args: args.iter().map(|a| self.apply_expr(a)).collect(),
                perms: perms.iter().map(|p| self.apply_perm(p)).collect(),
                tag: *tag,
            },
        }
    }

    pub fn apply_heap(&self, hs: &[Heaplet]) -> Vec<Heaplet> {
        hs.iter().map(|h| self.apply_heaplet(h)).collect()
    }

    pub fn apply(&self, a: &Assertion) -> Assertion {
        if self.map.is_empty() {
            return a.clone();
        }
        Assertion::new(
            a.pure.iter().map(|p| self.apply_expr(p)).collect(),
            self.apply_heap(&a.spatial),
        )
    }
}

impl fmt::Display for Subst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, (v, e)) in self.map.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{e}/{v}")?;
        }
        f.write_str("]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::expr::Sort;

    fn v(n: &str, s: Sort) -> Var {
        Var::new(n, s)
    }

    #[test]
    fn pick_substitution_instantiates_value() {
        // [30/z] on {z <= 100 ; x :-> z}
        let z = v("z", Sort::Int);
        let x = v("x", Sort::Loc);
        let a = Assertion::new(
            vec![Expr::le(Expr::var(&z), Expr::Int(100))],
            vec![Heaplet::points_to(Expr::var(&x), 0, Expr::var(&z), Perm::Mut)],
        );
        let s = Subst::single(z, Expr::Int(30)).unwrap();
        assert_eq!(s.apply(&a).to_string(), "{ 30 <= 100 ; x :-> 30 }");
    }

    #[test]
    fn borrow_replaced_by_mut() {
        let a = v("a", Sort::Perm);
        let y = v("y", Sort::Loc);
        let h = Heaplet::points_to(Expr::var(&y), 0, Expr::Int(30), Perm::Borrow(a.clone()));
        let s = Subst::single(a, Expr::Mut).unwrap();
        assert_eq!(
            s.apply_heaplet(&h),
            Heaplet::points_to(Expr::var(&y), 0, Expr::Int(30), Perm::Mut)
        );
    }

    #[test]
    fn identity_is_noop() {
        let x = v("x", Sort::Loc);
        let a = Assertion::new(
            vec![Expr::neq(Expr::var(&x), Expr::Int(0))],
            vec![Heaplet::block(Expr::var(&x), 2, Perm::borrow("a"))],
        );
        assert_eq!(Subst::new().apply(&a), a);
    }

    #[test]
    fn sort_mismatch_is_rejected() {
        let err = Subst::single(v("a", Sort::Perm), Expr::Int(3)).unwrap_err();
        assert!(matches!(err, SubstError::SortMismatch { .. }));
        assert!(Subst::single(v("S", Sort::Set), Expr::Mut).is_err());
        assert!(Subst::single(v("x", Sort::Loc), Expr::Int(0)).is_ok());
    }
}
