//! Equivalence-preserving rewriting of pure formulas.

use std::collections::BTreeSet;

use crate::logic::expr::{BinOp, Expr, Var};

fn ground_int(e: &Expr) -> Option<i64> {
    match e {
        Expr::Int(n) => Some(*n),
        _ => None,
    }
}

fn ground_set(e: &Expr) -> Option<BTreeSet<i64>> {
    match e {
        Expr::SetLit(es) => es.iter().map(ground_int).collect(),
        _ => None,
    }
}

fn is_constant(e: &Expr) -> bool {
    matches!(e, Expr::Int(_) | Expr::Bool(_) | Expr::Mut | Expr::Imm)
}

fn and_flat(parts: Vec<Expr>) -> Expr {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for p in parts {
        for c in p.conjuncts() {
            if c == Expr::Bool(false) {
                return Expr::Bool(false);
            }
            if seen.insert(c.clone()) {
                out.push(c);
            }
        }
    }
    for c in &out {
        if seen.contains(&Expr::not(c.clone())) {
            return Expr::Bool(false);
        }
    }
    Expr::and_all(out)
}

fn disjuncts(e: &Expr, out: &mut Vec<Expr>) {
    match e {
        Expr::Bin(BinOp::Or, l, r) => {
            disjuncts(l, out);
            disjuncts(r, out);
        }
        Expr::Bool(false) => {}
        e => out.push(e.clone()),
    }
}

fn or_flat(parts: Vec<Expr>) -> Expr {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for p in parts {
        let mut ds = Vec::new();
        disjuncts(&p, &mut ds);
        for d in ds {
            if d == Expr::Bool(true) {
                return Expr::Bool(true);
            }
            if seen.insert(d.clone()) {
                out.push(d);
            }
        }
    }
    for d in &out {
        if seen.contains(&Expr::not(d.clone())) {
            return Expr::Bool(true);
        }
    }
    Expr::or_all(out)
}

/// Constant folding, identity removal and syntactic contradiction
/// detection. The result is logically equivalent to the input.
pub fn simplify(e: &Expr) -> Expr {
    match e {
        Expr::Not(x) => Expr::not(simplify(x)),
        Expr::Bin(BinOp::And, l, r) => and_flat(vec![simplify(l), simplify(r)]),
        Expr::Bin(BinOp::Or, l, r) => or_flat(vec![simplify(l), simplify(r)]),
        Expr::Bin(op, l, r) => {
            let (l, r) = (simplify(l), simplify(r));
            match op {
                BinOp::Eq => {
                    if l == r {
                        return Expr::Bool(true);
                    }
                    if is_constant(&l) && is_constant(&r) {
                        return Expr::Bool(false);
                    }
                    if let (Some(a), Some(b)) = (ground_set(&l), ground_set(&r)) {
                        return Expr::Bool(a == b);
                    }
                    Expr::eq(l, r)
                }
                BinOp::Le | BinOp::Lt => {
                    if let (Some(a), Some(b)) = (ground_int(&l), ground_int(&r)) {
                        return Expr::Bool(if *op == BinOp::Le { a <= b } else { a < b });
                    }
                    if l == r {
                        return Expr::Bool(*op == BinOp::Le);
                    }
                    Expr::bin(*op, l, r)
                }
                BinOp::Add | BinOp::Sub => {
                    if let (Some(a), Some(b)) = (ground_int(&l), ground_int(&r)) {
                        let v = if *op == BinOp::Add { a.checked_add(b) } else { a.checked_sub(b) };
                        if let Some(v) = v {
                            return Expr::Int(v);
                        }
                    }
                    if ground_int(&r) == Some(0) {
                        return l;
                    }
                    Expr::bin(*op, l, r)
                }
                BinOp::Union => {
                    if ground_set(&l).is_some_and(|s| s.is_empty()) {
                        return r;
                    }
                    if ground_set(&r).is_some_and(|s| s.is_empty()) {
                        return l;
                    }
                    if let Expr::Bin(BinOp::Union, a, b) = l {
                        return simplify(&Expr::union(*a, Expr::union(*b, r)));
                    }
                    Expr::union(l, r)
                }
                BinOp::And | BinOp::Or => unreachable!(),
            }
        }
        Expr::Ite(c, t, f) => {
            let c = simplify(c);
            match c {
                Expr::Bool(true) => simplify(t),
                Expr::Bool(false) => simplify(f),
                c => {
                    let (t, f) = (simplify(t), simplify(f));
                    if t == f {
                        t
                    } else {
                        Expr::ite(c, t, f)
                    }
                }
            }
        }
        Expr::SetLit(es) => {
            let mut seen = BTreeSet::new();
            let mut out = Vec::new();
            for x in es {
                let x = simplify(x);
                if seen.insert(x.clone()) {
                    out.push(x);
                }
            }
            Expr::SetLit(out)
        }
        other => other.clone(),
    }
}

/// Equalities `v == e` among `conjuncts` usable as substitutions `[e/v]`,
/// with `v` not occurring in `e`. Both orientations are offered when both
/// sides are variables.
pub fn oriented_equalities(conjuncts: &[Expr]) -> Vec<(Var, Expr)> {
    let mut out = Vec::new();
    for c in conjuncts {
        if let Expr::Bin(BinOp::Eq, l, r) = c {
            if let Some(v) = l.as_var() {
                if !r.mentions(v) {
                    out.push((v.clone(), (**r).clone()));
                }
            }
            if let Some(v) = r.as_var() {
                if !l.mentions(v) {
                    out.push((v.clone(), (**l).clone()));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::expr::Sort;

    #[test]
    fn drops_trivial_permission_equality() {
        let p = Expr::Var(Var::new("p", Sort::Bool));
        let e = Expr::and_all([Expr::eq(Expr::Mut, Expr::Mut), p.clone()]);
        assert_eq!(simplify(&e), p);
    }

    #[test]
    fn detects_contradiction() {
        let x = Expr::Var(Var::new("x", Sort::Loc));
        let c = Expr::eq(x, Expr::Int(0));
        let e = Expr::and_all([c.clone(), Expr::not(c)]);
        assert_eq!(simplify(&e), Expr::Bool(false));
    }

    #[test]
    fn extracts_permission_substitution() {
        let a = Var::new("a", Sort::Perm);
        let eqs = oriented_equalities(&[Expr::eq(Expr::var(&a), Expr::Mut)]);
        assert_eq!(eqs, vec![(a, Expr::Mut)]);
    }

    #[test]
    fn mut_differs_from_imm() {
        assert_eq!(simplify(&Expr::eq(Expr::Mut, Expr::Imm)), Expr::Bool(false));
    }
}
