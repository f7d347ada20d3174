//! Matching of pattern heaps against target heaps.
//!
//! Only existential pattern variables bind; everything else must match
//! syntactically. Permissions follow the same discipline, so a pattern
//! `Mut` never matches a borrowed target.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};
use std::fmt;

use crate::logic::expr::{Expr, Var};
use crate::logic::heap::{Heaplet, HeapletKind, Perm};
use crate::logic::subst::Subst;

/// Candidate orderings for heap unification, selected by id 0–5.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum UnifOrder {
    #[default]
    ReadOnlyFirst,
    SmallestFirst,
    LargestFirst,
    NameAscending,
    NameDescending,
    KindCost,
}

impl UnifOrder {
    pub const ALL: [UnifOrder; 6] = [
        UnifOrder::ReadOnlyFirst,
        UnifOrder::SmallestFirst,
        UnifOrder::LargestFirst,
        UnifOrder::NameAscending,
        UnifOrder::NameDescending,
        UnifOrder::KindCost,
    ];

    pub fn from_id(id: usize) -> Option<UnifOrder> {
        UnifOrder::ALL.get(id).copied()
    }

    pub fn id(self) -> usize {
        UnifOrder::ALL.iter().position(|o| *o == self).unwrap()
    }
}

impl fmt::Display for UnifOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnifOrder::ReadOnlyFirst => "read-only-first",
            UnifOrder::SmallestFirst => "smallest-first",
            UnifOrder::LargestFirst => "largest-first",
            UnifOrder::NameAscending => "name-ascending",
            UnifOrder::NameDescending => "name-descending",
            UnifOrder::KindCost => "kind-cost",
        })
    }
}

fn kind_cost(h: &Heaplet) -> u8 {
    match h.kind() {
        HeapletKind::Block => 0,
        HeapletKind::PointsTo => 1,
        HeapletKind::Pred => 2,
    }
}

fn is_read_only(h: &Heaplet) -> bool {
    h.perms().iter().any(|p| !p.is_mut())
}

fn pred_name(h: &Heaplet) -> &str {
    match h {
        Heaplet::Pred { name, .. } => name,
        _ => "",
    }
}

/// Compares two (target, pattern) pairs under `order`; ties fall back to the
/// canonical heaplet order so the result is total and deterministic.
pub fn compare_pairs(a: (&Heaplet, &Heaplet), b: (&Heaplet, &Heaplet), order: UnifOrder) -> Ordering {
    let (ta, tb) = (a.0, b.0);
    let primary = match order {
        UnifOrder::ReadOnlyFirst => (!is_read_only(ta))
            .cmp(&!is_read_only(tb))
            .then(kind_cost(ta).cmp(&kind_cost(tb))),
        UnifOrder::SmallestFirst => ta.footprint_size().cmp(&tb.footprint_size()),
        UnifOrder::LargestFirst => tb.footprint_size().cmp(&ta.footprint_size()),
        UnifOrder::NameAscending => pred_name(ta).cmp(pred_name(tb)),
        UnifOrder::NameDescending => pred_name(tb).cmp(pred_name(ta)),
        UnifOrder::KindCost => kind_cost(ta).cmp(&kind_cost(tb)),
    };
    primary.then_with(|| ta.cmp(tb)).then_with(|| a.1.cmp(b.1))
}

pub fn rank_candidates<'a>(
    pairs: &[(&'a Heaplet, &'a Heaplet)],
    order: UnifOrder,
) -> Vec<(&'a Heaplet, &'a Heaplet)> {
    let mut out = pairs.to_vec();
    out.sort_by(|a, b| compare_pairs(*a, *b, order));
    out
}

/// `Some(binding)` when `pattern` can stand for `target`; the binding is
/// present when an existential borrow gets instantiated.
pub fn perm_compatible(
    target: &Perm,
    pattern: &Perm,
    existentials: &BTreeSet<Var>,
) -> Option<Option<(Var, Expr)>> {
    match pattern {
        Perm::Borrow(v) if existentials.contains(v) => Some(Some((v.clone(), target.to_expr()))),
        p if p == target => Some(None),
        _ => None,
    }
}

fn bind(v: &Var, e: &Expr, sigma: &mut Subst) -> bool {
    match sigma.get(v) {
        Some(old) => old == e,
        None => sigma.insert(v.clone(), e.clone()).is_ok(),
    }
}

/// First-order matching of a pattern term against a target term.
pub fn match_expr(p: &Expr, t: &Expr, ex: &BTreeSet<Var>, sigma: &mut Subst) -> bool {
    match (p, t) {
        (Expr::Var(v), _) if ex.contains(v) => bind(v, t, sigma),
        (Expr::SetLit(ps), Expr::SetLit(ts)) => {
            ps.len() == ts.len() && ps.iter().zip(ts).all(|(a, b)| match_expr(a, b, ex, sigma))
        }
        (Expr::Bin(o1, l1, r1), Expr::Bin(o2, l2, r2)) => {
            o1 == o2 && match_expr(l1, l2, ex, sigma) && match_expr(r1, r2, ex, sigma)
        }
        (Expr::Not(a), Expr::Not(b)) => match_expr(a, b, ex, sigma),
        (Expr::Ite(c1, t1, e1), Expr::Ite(c2, t2, e2)) => {
            match_expr(c1, c2, ex, sigma) && match_expr(t1, t2, ex, sigma) && match_expr(e1, e2, ex, sigma)
        }
        _ => p == t,
    }
}

pub fn match_perm(p: &Perm, t: &Perm, ex: &BTreeSet<Var>, sigma: &mut Subst) -> bool {
    match perm_compatible(t, p, ex) {
        None => false,
        Some(None) => true,
        Some(Some((v, e))) => bind(&v, &e, sigma),
    }
}

/// Extends `sigma` so that `sigma(pattern) == target`, if possible.
pub fn match_heaplet(pattern: &Heaplet, target: &Heaplet, ex: &BTreeSet<Var>, sigma: &Subst) -> Option<Subst> {
    let mut s = sigma.clone();
    let ok = match (pattern, target) {
        (
            Heaplet::PointsTo {
                base: b1,
                offset: o1,
                value: v1,
                perm: p1,
            },
            Heaplet::PointsTo {
                base: b2,
                offset: o2,
                value: v2,
                perm: p2,
            },
        ) => {
            o1 == o2
                && match_expr(b1, b2, ex, &mut s)
                && match_expr(v1, v2, ex, &mut s)
                && match_perm(p1, p2, ex, &mut s)
        }
        (
            Heaplet::Block {
                base: b1,
                size: n1,
                perm: p1,
            },
            Heaplet::Block {
                base: b2,
                size: n2,
                perm: p2,
            },
        ) => n1 == n2 && match_expr(b1, b2, ex, &mut s) && match_perm(p1, p2, ex, &mut s),
        (
            Heaplet::Pred {
                name: n1,
                args: a1,
                perms: q1,
                ..
            },
            Heaplet::Pred {
                name: n2,
                args: a2,
                perms: q2,
                ..
            },
        ) => {
            n1 == n2
                && a1.len() == a2.len()
                && q1.len() == q2.len()
                && a1.iter().zip(a2).all(|(x, y)| match_expr(x, y, ex, &mut s))
                && q1.iter().zip(q2).all(|(x, y)| match_perm(x, y, ex, &mut s))
        }
        _ => false,
    };
    ok.then_some(s)
}

struct Frame {
    pi: usize,
    next: usize,
    sigma: Subst,
    used: Vec<bool>,
}

/// Lazy, duplicate-free stream of substitutions embedding a pattern heap
/// into a target heap.
pub struct Unifications<'a> {
    target: &'a [Heaplet],
    pattern: &'a [Heaplet],
    ex: &'a BTreeSet<Var>,
    /// Ranked target indices for each pattern heaplet.
    candidates: Vec<Vec<usize>>,
    stack: Vec<Frame>,
    seen: HashSet<Subst>,
}

impl Iterator for Unifications<'_> {
    type Item = Subst;

    fn next(&mut self) -> Option<Subst> {
        loop {
            let top = self.stack.last_mut()?;
            if top.pi == self.pattern.len() {
                let f = self.stack.pop().unwrap();
                if self.seen.insert(f.sigma.clone()) {
                    return Some(f.sigma);
                }
                continue;
            }
            let cands = &self.candidates[top.pi];
            let mut pushed = None;
            while top.next < cands.len() {
                let ti = cands[top.next];
                top.next += 1;
                if top.used[ti] {
                    continue;
                }
                if let Some(s) = match_heaplet(&self.pattern[top.pi], &self.target[ti], self.ex, &top.sigma) {
                    let mut used = top.used.clone();
                    used[ti] = true;
                    pushed = Some(Frame {
                        pi: top.pi + 1,
                        next: 0,
                        sigma: s,
                        used,
                    });
                    break;
                }
            }
            match pushed {
                Some(f) => self.stack.push(f),
                None => {
                    self.stack.pop();
                }
            }
        }
    }
}

/// All ways of embedding `pattern` into `target` binding only `ex`, in an
/// order determined by `order`.
pub fn unify<'a>(
    target: &'a [Heaplet],
    pattern: &'a [Heaplet],
    ex: &'a BTreeSet<Var>,
    order: UnifOrder,
) -> Unifications<'a> {
    let candidates = pattern
        .iter()
        .map(|p| {
            let mut idx: Vec<usize> = (0..target.len()).filter(|&i| target[i].kind() == p.kind()).collect();
            idx.sort_by(|&a, &b| compare_pairs((&target[a], p), (&target[b], p), order).then(a.cmp(&b)));
            idx
        })
        .collect();
    Unifications {
        target,
        pattern,
        ex,
        candidates,
        stack: vec![Frame {
            pi: 0,
            next: 0,
            sigma: Subst::new(),
            used: vec![false; target.len()],
        }],
        seen: HashSet::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::expr::Sort;

    fn lv(n: &str) -> Expr {
        Expr::Var(Var::new(n, Sort::Loc))
    }
    fn pv(n: &str) -> Var {
        Var::new(n, Sort::Perm)
    }

    #[test]
    fn permission_compatibility() {
        let ex: BTreeSet<Var> = [pv("a")].into();
        assert_eq!(perm_compatible(&Perm::borrow("b"), &Perm::Mut, &ex), None);
        assert_eq!(
            perm_compatible(&Perm::Mut, &Perm::borrow("a"), &ex),
            Some(Some((pv("a"), Expr::Mut)))
        );
        assert_eq!(
            perm_compatible(&Perm::borrow("c"), &Perm::borrow("a"), &ex),
            Some(Some((pv("a"), Expr::Var(pv("c")))))
        );
        assert_eq!(perm_compatible(&Perm::borrow("c"), &Perm::borrow("d"), &ex), None);
    }

    #[test]
    fn pick_value_binding() {
        let z = Var::new("z", Sort::Int);
        let target = vec![
            Heaplet::points_to(lv("x"), 0, Expr::Int(239), Perm::Mut),
            Heaplet::points_to(lv("y"), 0, Expr::Int(30), Perm::borrow("a")),
        ];
        let pattern = vec![Heaplet::points_to(lv("x"), 0, Expr::var(&z), Perm::Mut)];
        let ex = [z.clone()].into();
        let all: Vec<Subst> = unify(&target, &pattern, &ex, UnifOrder::default()).collect();
        assert_eq!(all, vec![Subst::single(z, Expr::Int(239)).unwrap()]);
    }

    #[test]
    fn list_instance_binds_values_and_permissions() {
        let target = vec![Heaplet::pred(
            "ls",
            vec![lv("y"), Expr::Var(Var::new("B", Sort::Set))],
            vec![Perm::Mut, Perm::Mut, Perm::Mut],
        )];
        let pattern = vec![Heaplet::pred(
            "ls",
            vec![lv("x"), Expr::Var(Var::new("S", Sort::Set))],
            vec![Perm::borrow("d"), Perm::Mut, Perm::borrow("e")],
        )];
        let ex: BTreeSet<Var> = [
            Var::new("x", Sort::Loc),
            Var::new("S", Sort::Set),
            pv("d"),
            pv("e"),
        ]
        .into();
        let all: Vec<Subst> = unify(&target, &pattern, &ex, UnifOrder::default()).collect();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].to_string(), "[B/S, Mut/d, Mut/e, y/x]");
    }

    #[test]
    fn mut_pattern_rejects_borrowed_cell() {
        let e = Var::new("e", Sort::Int);
        let target = vec![Heaplet::points_to(lv("y"), 0, Expr::Int(30), Perm::borrow("c"))];
        let pattern = vec![Heaplet::points_to(lv("y"), 0, Expr::var(&e), Perm::Mut)];
        let ex = [e].into();
        assert_eq!(unify(&target, &pattern, &ex, UnifOrder::default()).count(), 0);
    }

    #[test]
    fn read_only_heaplets_rank_first() {
        let a = Heaplet::points_to(lv("x"), 0, Expr::Int(239), Perm::Mut);
        let b = Heaplet::points_to(lv("y"), 0, Expr::Int(30), Perm::borrow("a"));
        let p = Heaplet::points_to(lv("y"), 0, Expr::Int(0), Perm::Mut);
        let ranked = rank_candidates(&[(&a, &p), (&b, &p)], UnifOrder::ReadOnlyFirst);
        assert_eq!(ranked[0].0, &b);
        let blk = Heaplet::block(lv("x"), 2, Perm::Mut);
        let pr = Heaplet::pred("ls", vec![lv("x")], vec![]);
        let ranked = rank_candidates(&[(&pr, &pr), (&blk, &blk)], UnifOrder::KindCost);
        assert_eq!(ranked[0].0, &blk);
        assert_eq!(rank_candidates(&[(&a, &p)], UnifOrder::LargestFirst).len(), 1);
    }
}
