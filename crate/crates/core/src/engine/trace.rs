//! Permission checks over derivation steps.

use std::collections::BTreeMap;

use super::goal::Goal;
use crate::logic::expr::Expr;
use crate::logic::heap::{Heaplet, Perm};

/// Identifies the memory a heaplet describes, independently of its contents.
/// Predicate instances are identified by their root, so a callee may hand a
/// structure back under a different predicate.
pub fn location(h: &Heaplet) -> String {
    match h {
        Heaplet::PointsTo { base, offset, .. } => format!("{base}+{offset}"),
        Heaplet::Block { base, .. } => format!("[{base}]"),
        Heaplet::Pred { name, args, .. } => match args.first() {
            Some(a) => format!("@{a}"),
            None => name.to_string(),
        },
    }
}

fn perms_by_location(hs: &[Heaplet]) -> BTreeMap<String, Vec<Vec<Perm>>> {
    let mut out: BTreeMap<String, Vec<Vec<Perm>>> = BTreeMap::new();
    for h in hs {
        out.entry(location(h))
            .or_default()
            .push(h.perms().into_iter().cloned().collect());
    }
    out
}

/// Counts locations annotated with a borrow in `parent`'s precondition that
/// carry a literal `Mut` in `child`'s, unless the parent already knew the
/// borrow to be `Mut`.
pub fn strengthening(parent: &Goal, child: &Goal) -> u64 {
    let after = perms_by_location(&child.pre.spatial);
    let mut n = 0;
    for h in &parent.pre.spatial {
        let Some(children) = after.get(&location(h)) else {
            continue;
        };
        for (i, p) in h.perms().into_iter().enumerate() {
            let Perm::Borrow(a) = p else { continue };
            let known = Expr::eq(Expr::var(a), Expr::Mut);
            let known_rev = Expr::eq(Expr::Mut, Expr::var(a));
            if parent.pre.pure.contains(&known) || parent.pre.pure.contains(&known_rev) {
                continue;
            }
            if children.iter().any(|ps| ps.get(i) == Some(&Perm::Mut)) {
                n += 1;
            }
        }
    }
    n
}

/// Counts heaplets consumed by a call whose annotations do not come back in
/// the continuation's precondition. Fully mutable heaplets may be freed.
pub fn borrows_returned(consumed: &[Heaplet], after: &[Heaplet]) -> u64 {
    let after = perms_by_location(after);
    let mut n = 0;
    for h in consumed {
        let perms: Vec<Perm> = h.perms().into_iter().cloned().collect();
        let back = after.get(&location(h)).is_some_and(|ps| ps.contains(&perms));
        if !back && !perms.iter().all(Perm::is_mut) {
            n += 1;
        }
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::expr::{Sort, Var};
    use crate::logic::heap::Assertion;

    fn cell(perm: Perm) -> Heaplet {
        Heaplet::points_to(Expr::Var(Var::new("x", Sort::Loc)), 0, Expr::Int(5), perm)
    }

    fn goal(pure: Vec<Expr>, h: Heaplet) -> Goal {
        Goal::new(Default::default(), Assertion::new(pure, vec![h]), Assertion::emp())
    }

    #[test]
    fn borrow_turned_mut_is_reported() {
        let p = goal(vec![], cell(Perm::borrow("a")));
        let c = goal(vec![], cell(Perm::Mut));
        assert_eq!(strengthening(&p, &c), 1);
        assert_eq!(strengthening(&p, &p), 0);
    }

    #[test]
    fn known_mut_borrow_may_be_normalized() {
        let a = Expr::Var(Var::new("a", Sort::Perm));
        let p = goal(vec![Expr::eq(a, Expr::Mut)], cell(Perm::borrow("a")));
        let c = goal(vec![], cell(Perm::Mut));
        assert_eq!(strengthening(&p, &c), 0);
    }

    #[test]
    fn consumed_borrow_must_come_back() {
        let b = cell(Perm::borrow("b"));
        assert_eq!(borrows_returned(&[b.clone()], &[b.clone()]), 0);
        assert_eq!(borrows_returned(&[b], &[]), 1);
        assert_eq!(borrows_returned(&[cell(Perm::Mut)], &[]), 0);
    }
}
