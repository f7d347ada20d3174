//! Rule applications. Normalization rules are applied eagerly and never
//! undone; the remaining rules yield alternatives for the search to try.

use std::collections::BTreeSet;

use super::goal::{conj, hypothesis, Goal};
use super::search::{Search, Timeout};
use super::trace;
use super::RuleGroup;
use crate::logic::expr::{BinOp, Expr, Sort, Var};
use crate::logic::heap::{Assertion, Heaplet, HeapletKind, Perm, UnfoldTag};
use crate::logic::program::Stmt;
use crate::logic::spec::FunctionSpec;
use crate::logic::subst::Subst;
use crate::pure::{oriented_equalities, simplify, Validity};
use crate::unify::{match_expr, match_heaplet, match_perm, rank_candidates, unify};

/// Assembles the statement of a node from its children's statements.
pub(crate) enum Kont {
    /// Statements followed by the only child's program.
    Emit(Vec<Stmt>),
    /// `if (c1) {k1} else if ... else {kn}` with one condition fewer than
    /// children.
    Branch(Vec<Expr>),
    Done(Stmt),
}

impl Kont {
    pub fn assemble(self, mut children: Vec<Stmt>) -> Stmt {
        match self {
            Kont::Done(s) => s,
            Kont::Emit(stmts) => Stmt::seq(stmts.into_iter().chain(children)),
            Kont::Branch(conds) => {
                let mut acc = children.pop().unwrap_or(Stmt::Skip);
                for (c, s) in conds.into_iter().zip(children).rev() {
                    acc = Stmt::ite(c, s, acc);
                }
                acc
            }
        }
    }
}

pub(crate) struct Alt {
    pub subgoals: Vec<Goal>,
    pub kont: Kont,
    /// Borrows a call fails to hand back; nonzero only for a broken callee.
    pub borrow_violations: u64,
}

impl Alt {
    fn emit(stmts: Vec<Stmt>, child: Goal) -> Alt {
        Alt {
            subgoals: vec![child],
            kont: Kont::Emit(stmts),
            borrow_violations: 0,
        }
    }
}

pub(crate) enum Norm {
    Goal(Goal, Vec<Stmt>),
    Done(Stmt),
    Fail,
}

fn simplify_heaplet(h: &Heaplet) -> Heaplet {
    match h {
        Heaplet::PointsTo { base, offset, value, perm } => Heaplet::PointsTo {
            base: simplify(base),
            offset: *offset,
            value: simplify(value),
            perm: perm.clone(),
        },
        Heaplet::Block { base, size, perm } => Heaplet::Block {
            base: simplify(base),
            size: *size,
            perm: perm.clone(),
        },
        Heaplet::Pred { name, args, perms, tag } => Heaplet::Pred {
            name: name.clone(),
            args: args.iter().map(simplify).collect(),
            perms: perms.clone(),
            tag: *tag,
        },
    }
}

fn simplify_assertion(a: &Assertion) -> Assertion {
    let pure = a
        .pure
        .iter()
        .map(simplify)
        .filter(|e| *e != Expr::Bool(true))
        .collect();
    Assertion::new(pure, a.spatial.iter().map(simplify_heaplet).collect())
}

fn subst_left(g: &Goal) -> Option<Subst> {
    let eqs = oriented_equalities(&g.pre.pure);
    let ghost = eqs.iter().find(|(v, _)| !g.gamma.contains(v));
    let program = || {
        eqs.iter().find(|(v, e)| {
            g.gamma.contains(v) && g.is_program_expr(e) && (e.as_var().is_some() || e.vars().is_empty())
        })
    };
    let (v, e) = ghost.or_else(program)?;
    Subst::single(v.clone(), e.clone()).ok()
}

fn subst_right(g: &Goal) -> Option<Subst> {
    let ex = g.existentials();
    if ex.is_empty() {
        return None;
    }
    let eqs: Vec<(&Expr, &Expr)> = g
        .post
        .pure
        .iter()
        .filter_map(|c| match c {
            Expr::Bin(BinOp::Eq, l, r) => Some((&**l, &**r)),
            _ => None,
        })
        .collect();
    for (l, r) in &eqs {
        for (a, b) in [(l, r), (r, l)] {
            if let Some(v) = a.as_var() {
                if ex.contains(v) && !b.mentions(v) {
                    return Subst::single(v.clone(), (*b).clone()).ok();
                }
            }
        }
    }
    let has_ev = |e: &Expr| e.vars().iter().any(|v| ex.contains(v));
    for (l, r) in &eqs {
        for (pat, target) in [(l, r), (r, l)] {
            if has_ev(pat) && !has_ev(target) {
                let mut s = Subst::new();
                if match_expr(pat, target, &ex, &mut s) && !s.is_empty() {
                    return Some(s);
                }
            }
        }
    }
    None
}

/// A ghost value stored in a readable cell and needed elsewhere in the goal.
fn read(g: &Goal) -> Option<(Var, Var, usize)> {
    for (i, h) in g.pre.spatial.iter().enumerate() {
        let Heaplet::PointsTo {
            base,
            offset,
            value: Expr::Var(a),
            ..
        } = h
        else {
            continue;
        };
        if g.gamma.contains(a) {
            continue;
        }
        let Some(b) = g.program_var(base) else {
            continue;
        };
        let elsewhere = g.post.vars().contains(a)
            || g.pre.pure.iter().any(|p| p.mentions(a))
            || g.pre.spatial.iter().enumerate().any(|(j, o)| j != i && o.vars().contains(a));
        if elsewhere {
            return Some((a.clone(), b.clone(), *offset));
        }
    }
    None
}

/// A cheap necessary condition once closing: heaplets of the precondition
/// that can be neither written nor freed must find a counterpart in the
/// postcondition. Postcondition instances that may still be closed could
/// produce any counterpart, so the check is skipped while they exist.
fn closing_spatial_feasible(ctx: &crate::logic::spec::Context, g: &Goal, close_limit: u8) -> bool {
    let closable = g.post.spatial.iter().any(|q| {
        matches!(q, Heaplet::Pred { name, tag, .. } if tag.level < close_limit && ctx.predicate(name).is_some())
    });
    if closable {
        return true;
    }
    let ex = g.existentials();
    let may_match = |p: &Heaplet, q: &Heaplet| {
        if p.kind() != q.kind() {
            return false;
        }
        match (p, q) {
            (Heaplet::Pred { name: a, .. }, Heaplet::Pred { name: b, .. }) => a == b,
            (Heaplet::PointsTo { base: pb, offset: po, .. }, Heaplet::PointsTo { base: qb, offset: qo, .. })
            | (Heaplet::Block { base: pb, size: po, .. }, Heaplet::Block { base: qb, size: qo, .. }) => {
                po == qo && (pb == qb || !qb.vars().is_disjoint(&ex))
            }
            _ => false,
        }
    };
    g.pre.spatial.iter().all(|p| {
        let stuck = p.kind() == HeapletKind::Pred || !p.perms().into_iter().all(Perm::is_mut);
        !stuck || g.post.spatial.iter().any(|q| may_match(p, q))
    })
}

/// Records that the memory of `pre.spatial[i]` sits at a positive address
/// before the heaplet leaves the precondition.
fn keep_address_fact(pre: &mut Assertion, i: usize) {
    let base = match &pre.spatial[i] {
        Heaplet::PointsTo { base, .. } | Heaplet::Block { base, .. } => base.clone(),
        Heaplet::Pred { .. } => return,
    };
    if base.as_var().is_none() {
        return;
    }
    let fact = Expr::lt(Expr::Int(0), base);
    if !pre.pure.contains(&fact) {
        pre.pure.push(fact);
    }
}

/// Identical heaplets on both sides. Predicate instances are framed eagerly
/// only when nothing else could consume them.
fn frame(g: &Goal) -> Option<(usize, usize)> {
    let ex = g.existentials();
    for (j, q) in g.post.spatial.iter().enumerate() {
        if !q.vars().is_disjoint(&ex) {
            continue;
        }
        for (i, p) in g.pre.spatial.iter().enumerate() {
            if p != q {
                continue;
            }
            if p.kind() == HeapletKind::Pred && !(p.tag().frozen || g.closing) {
                continue;
            }
            return Some((i, j));
        }
    }
    None
}

impl Search<'_> {
    pub(super) fn normalize(&mut self, mut g: Goal) -> Result<Norm, Timeout> {
        let mut prefix = Vec::new();
        loop {
            self.check_time()?;
            g.pre = simplify_assertion(&g.pre);
            g.post = simplify_assertion(&g.post);
            if g.pre.pure.contains(&Expr::Bool(false)) {
                self.stats.rules_fired += 1;
                prefix.push(Stmt::Error);
                return Ok(Norm::Done(Stmt::seq(prefix)));
            }
            if g.post.pure.contains(&Expr::Bool(false)) {
                self.stats.rules_fired += 1;
                return Ok(Norm::Fail);
            }
            if let Some(s) = subst_left(&g) {
                self.stats.rules_fired += 1;
                g.pre = s.apply(&g.pre);
                g.post = s.apply(&g.post);
                continue;
            }
            if let Some(s) = subst_right(&g) {
                self.stats.rules_fired += 1;
                g.post = s.apply(&g.post);
                continue;
            }
            if let Some((to, base, offset)) = read(&g) {
                self.stats.rules_fired += 1;
                g.gamma.insert(to.clone());
                prefix.push(Stmt::Load { to, base, offset });
                continue;
            }
            if let Some((i, j)) = frame(&g) {
                self.stats.rules_fired += 1;
                keep_address_fact(&mut g.pre, i);
                g.pre.spatial.remove(i);
                g.post.spatial.remove(j);
                continue;
            }
            break;
        }
        let truth = Expr::Bool(true);
        if !g.pre.pure.is_empty() || !g.pre.spatial.is_empty() {
            let hyp = hypothesis(&g.pre, &truth);
            if hyp != truth && self.solver.unsat(&hyp) {
                self.stats.rules_fired += 1;
                prefix.push(Stmt::Error);
                return Ok(Norm::Done(Stmt::seq(prefix)));
            }
        }
        if !g.post.pure.is_empty() {
            let want = g.post.pure_formula();
            let hyp = conj(hypothesis(&g.pre, &want), want);
            if self.solver.unsat(&hyp) {
                self.stats.rules_fired += 1;
                return Ok(Norm::Fail);
            }
        }
        if g.closing && (!closing_spatial_feasible(self.ctx, &g, self.config.max_close_depth) || !self.settled_pure_holds(&g)) {
            self.stats.rules_fired += 1;
            return Ok(Norm::Fail);
        }
        Ok(Norm::Goal(g, prefix))
    }

    /// Once closing, the precondition only loses facts, so a postcondition
    /// conjunct without existentials must already follow from it.
    fn settled_pure_holds(&mut self, g: &Goal) -> bool {
        let ex = g.existentials();
        let settled: Vec<Expr> = g.post.pure.iter().filter(|c| c.vars().is_disjoint(&ex)).cloned().collect();
        if settled.is_empty() {
            return true;
        }
        let concl = Expr::and_all(settled);
        self.solver.valid(&hypothesis(&g.pre, &concl), &concl) == Validity::Valid
    }

    pub(super) fn emp(&mut self, g: &Goal) -> bool {
        if !g.existentials().is_empty() {
            return false;
        }
        let concl = g.post.pure_formula();
        self.solver.valid(&hypothesis(&g.pre, &concl), &concl) == Validity::Valid
    }

    pub(super) fn alternatives(&mut self, g: &Goal, group: RuleGroup) -> Result<Vec<Alt>, Timeout> {
        self.check_time()?;
        Ok(match group {
            RuleGroup::Open if !g.closing => {
                let mut alts = self.guard_alts(g);
                alts.extend(self.open_alts(g));
                alts
            }
            RuleGroup::Call if !g.closing => self.call_alts(g)?,
            RuleGroup::Open | RuleGroup::Call => Vec::new(),
            RuleGroup::FramePred => frame_pred_alts(g),
            RuleGroup::Close => self.close_alts(g),
            RuleGroup::Unify => unify_alts(g, self.config.unif_order),
            RuleGroup::Write => write_alts(g),
            RuleGroup::Alloc => alloc_alts(g),
            RuleGroup::Free => free_alts(g),
        })
    }

    fn open_alts(&mut self, g: &Goal) -> Vec<Alt> {
        let mut out = Vec::new();
        let truth = Expr::Bool(true);
        for (i, h) in g.pre.spatial.iter().enumerate() {
            let Heaplet::Pred {
                name,
                args,
                perms,
                tag,
            } = h
            else {
                continue;
            };
            if tag.frozen || tag.level >= self.config.max_unfold_depth {
                continue;
            }
            let Some(def) = self.ctx.predicate(name) else {
                continue;
            };
            let mut fresh = g.fresh_names();
            let child_tag = UnfoldTag {
                level: tag.level + 1,
                frozen: false,
            };
            let instances = def.instantiate(args, perms, &mut fresh, child_tag);
            let mut rest = g.pre.clone();
            rest.spatial.remove(i);
            let hyp = hypothesis(&rest, &truth);
            let mut feasible = Vec::new();
            for ci in instances {
                let sel = simplify(&ci.selector);
                if !self.solver.unsat(&conj(hyp.clone(), sel.clone())) {
                    feasible.push((sel, ci));
                }
            }
            if feasible.is_empty() {
                out.push(Alt {
                    subgoals: Vec::new(),
                    kont: Kont::Done(Stmt::Error),
                    borrow_violations: 0,
                });
                continue;
            }
            let n = feasible.len();
            let conds: Vec<Expr> = feasible[..n - 1].iter().map(|(s, _)| s.clone()).collect();
            if !conds.iter().all(|c| g.is_program_expr(c)) {
                continue;
            }
            let mut subgoals = Vec::new();
            for (k, (sel, ci)) in feasible.into_iter().enumerate() {
                let mut pure = rest.pure.clone();
                pure.extend(conds[..k].iter().map(|c| Expr::not(c.clone())));
                pure.push(sel);
                pure.extend(ci.pure);
                let mut spatial = rest.spatial.clone();
                spatial.extend(ci.spatial);
                subgoals.push(g.child(Assertion::new(pure, spatial), g.post.clone()));
            }
            out.push(Alt {
                subgoals,
                kont: if n == 1 { Kont::Emit(Vec::new()) } else { Kont::Branch(conds) },
                borrow_violations: 0,
            });
        }
        out
    }

    /// Case splits on `p <= q` for integer program variables whose order the
    /// precondition leaves open.
    fn guard_alts(&mut self, g: &Goal) -> Vec<Alt> {
        let ints: Vec<&Var> = g.gamma.iter().filter(|v| v.sort() == Sort::Int).collect();
        let mut out = Vec::new();
        for (i, p) in ints.iter().enumerate() {
            for q in &ints[i + 1..] {
                let guard = Expr::le(Expr::var(p), Expr::var(q));
                let hyp = hypothesis(&g.pre, &guard);
                if self.solver.unsat(&conj(hyp.clone(), guard.clone()))
                    || self.solver.unsat(&conj(hyp, Expr::not(guard.clone())))
                {
                    continue;
                }
                let branch = |c: Expr| {
                    let mut pre = g.pre.clone();
                    pre.pure.push(c);
                    g.child(Assertion::new(pre.pure, pre.spatial), g.post.clone())
                };
                out.push(Alt {
                    subgoals: vec![branch(guard.clone()), branch(Expr::not(guard.clone()))],
                    kont: Kont::Branch(vec![guard]),
                    borrow_violations: 0,
                });
            }
        }
        out
    }

    fn close_alts(&mut self, g: &Goal) -> Vec<Alt> {
        let mut out = Vec::new();
        let limit = self.config.max_close_depth;
        for (j, h) in g.post.spatial.iter().enumerate() {
            let Heaplet::Pred {
                name,
                args,
                perms,
                tag,
            } = h
            else {
                continue;
            };
            let Some(def) = self.ctx.predicate(name) else {
                continue;
            };
            let mut fresh = g.fresh_names();
            let child_tag = UnfoldTag {
                level: tag.level + 1,
                frozen: false,
            };
            for ci in def.instantiate(args, perms, &mut fresh, child_tag) {
                let recursive = ci.spatial.iter().any(|h| h.kind() == HeapletKind::Pred);
                if recursive && tag.level >= limit {
                    continue;
                }
                let mut rest = g.post.clone();
                rest.spatial.remove(j);
                let mut pure = rest.pure;
                pure.push(ci.selector);
                pure.extend(ci.pure);
                let mut spatial = rest.spatial;
                spatial.extend(ci.spatial);
                let mut child = g.child(g.pre.clone(), Assertion::new(pure, spatial));
                child.closing = true;
                out.push(Alt::emit(Vec::new(), child));
            }
        }
        out
    }

    fn call_alts(&mut self, g: &Goal) -> Result<Vec<Alt>, Timeout> {
        let mut out = Vec::new();
        let functions = self.ctx.functions.clone();
        for f in &functions {
            self.check_time()?;
            self.call_alts_for(g, f, &mut out);
        }
        Ok(out)
    }

    fn call_alts_for(&mut self, g: &Goal, f: &FunctionSpec, out: &mut Vec<Alt>) {
        let is_self = f.name == self.goal_name;
        let mut fresh = g.fresh_names();
        let mut callee_vars: BTreeSet<Var> = f.formals.iter().cloned().collect();
        f.pre.collect_vars(&mut callee_vars);
        f.post.collect_vars(&mut callee_vars);
        let mut ren = Subst::new();
        for v in &callee_vars {
            ren.insert(v.clone(), Expr::Var(fresh.fresh(v))).expect("same sort");
        }
        let formals: Vec<Expr> = f.formals.iter().map(|v| ren.apply_expr(&Expr::var(v))).collect();
        let callee = CalleeInstance {
            name: f.name.clone(),
            pre: ren.apply(&f.pre),
            post: ren.apply(&f.post),
            formals,
        };
        let mut ex = callee.pre.vars();
        callee.formals.iter().for_each(|e| e.collect_vars(&mut ex));
        let (pat_preds, pat_flat): (Vec<Heaplet>, Vec<Heaplet>) = callee
            .pre
            .spatial
            .iter()
            .cloned()
            .partition(|h| h.kind() == HeapletKind::Pred);
        if is_self && pat_preds.is_empty() {
            return;
        }
        let eligible = |h: &Heaplet| h.kind() == HeapletKind::Pred && !h.tag().frozen;
        let targets: Vec<Heaplet> = g.pre.spatial.iter().filter(|h| eligible(h)).cloned().collect();
        let sigmas: Vec<Subst> = unify(&targets, &pat_preds, &ex, self.config.unif_order).collect();
        for sigma in sigmas {
            let mut used = vec![false; g.pre.spatial.len()];
            let mut complete = true;
            for p in &pat_preds {
                let inst = sigma.apply_heaplet(p);
                let hit = (0..used.len()).find(|&i| !used[i] && eligible(&g.pre.spatial[i]) && g.pre.spatial[i] == inst);
                match hit {
                    Some(i) => used[i] = true,
                    None => complete = false,
                }
            }
            // a recursive call must consume at least one unfolded instance
            let shrinks = (0..used.len()).any(|i| used[i] && g.pre.spatial[i].tag().level >= 1);
            if !complete || (is_self && !shrinks) {
                continue;
            }
            let mut matches = Vec::new();
            match_flat(g, &pat_flat, sigma, used, Vec::new(), &ex, &mut matches);
            for (s, used, writes) in matches {
                if let Some(alt) = self.finish_call(g, &callee, &ex, s, used, writes) {
                    out.push(alt);
                }
            }
        }
    }

    fn finish_call(
        &mut self,
        g: &Goal,
        callee: &CalleeInstance,
        ex: &BTreeSet<Var>,
        s: Subst,
        used: Vec<bool>,
        writes: Vec<(usize, Expr)>,
    ) -> Option<Alt> {
        if ex.iter().any(|v| !s.contains(v)) {
            return None;
        }
        let args: Vec<Expr> = callee.formals.iter().map(|e| s.apply_expr(e)).collect();
        if !args.iter().all(|a| g.is_program_expr(a)) {
            return None;
        }
        let mut pre = g.pre.clone();
        let mut stmts = Vec::new();
        for (i, e) in writes {
            if let Heaplet::PointsTo {
                base, offset, value, ..
            } = &mut pre.spatial[i]
            {
                let b = g.program_var(base)?.clone();
                stmts.push(Stmt::Store {
                    base: b,
                    offset: *offset,
                    value: e.clone(),
                });
                *value = e;
            }
        }
        let need = simplify(&s.apply_expr(&callee.pre.pure_formula()));
        if need != Expr::Bool(true) && self.solver.valid(&hypothesis(&pre, &need), &need) != Validity::Valid {
            return None;
        }
        let mut consumed = Vec::new();
        let mut spatial = Vec::new();
        for (h, u) in pre.spatial.iter().zip(&used) {
            if *u {
                consumed.push(h.clone());
            } else {
                spatial.push(h.clone());
            }
        }
        let level = consumed.iter().map(|h| h.tag().level).max().unwrap_or(0);
        for h in &callee.post.spatial {
            let h = s.apply_heaplet(h);
            spatial.push(match h.kind() {
                HeapletKind::Pred => h.with_tag(UnfoldTag { level, frozen: true }),
                _ => h,
            });
        }
        let mut pure = pre.pure.clone();
        pure.push(s.apply_expr(&callee.post.pure_formula()));
        let new_pre = Assertion::new(pure, spatial);
        let borrow_violations = trace::borrows_returned(&consumed, &new_pre.spatial);
        stmts.push(Stmt::Call {
            name: callee.name.clone(),
            args,
        });
        Some(Alt {
            subgoals: vec![g.child(new_pre, g.post.clone())],
            kont: Kont::Emit(stmts),
            borrow_violations,
        })
    }
}

struct CalleeInstance {
    name: std::sync::Arc<str>,
    pre: Assertion,
    post: Assertion,
    formals: Vec<Expr>,
}

type FlatMatch = (Subst, Vec<bool>, Vec<(usize, Expr)>);

/// Matches the callee's cells and blocks against unused caller heaplets. A
/// cell whose required value is known but differs is set up by a write,
/// which needs a mutable caller cell.
fn match_flat(
    g: &Goal,
    pats: &[Heaplet],
    sigma: Subst,
    used: Vec<bool>,
    writes: Vec<(usize, Expr)>,
    ex: &BTreeSet<Var>,
    out: &mut Vec<FlatMatch>,
) {
    let Some((p, rest)) = pats.split_first() else {
        out.push((sigma, used, writes));
        return;
    };
    for (i, t) in g.pre.spatial.iter().enumerate() {
        if used[i] || t.kind() != p.kind() {
            continue;
        }
        let mut used2 = used.clone();
        used2[i] = true;
        match (p, t) {
            (Heaplet::Block { .. }, Heaplet::Block { .. }) => {
                if let Some(s) = match_heaplet(p, t, ex, &sigma) {
                    match_flat(g, rest, s, used2, writes.clone(), ex, out);
                }
            }
            (
                Heaplet::PointsTo {
                    base: pb,
                    offset: po,
                    value: pv,
                    perm: pp,
                },
                Heaplet::PointsTo {
                    base: tb,
                    offset: to,
                    value: tv,
                    perm: tp,
                },
            ) => {
                if po != to {
                    continue;
                }
                let mut s = sigma.clone();
                if !match_expr(pb, tb, ex, &mut s) || !match_perm(pp, tp, ex, &mut s) {
                    continue;
                }
                let mut exact = s.clone();
                if match_expr(pv, tv, ex, &mut exact) {
                    match_flat(g, rest, exact, used2, writes.clone(), ex, out);
                    continue;
                }
                let want = s.apply_expr(pv);
                let determined = want.vars().is_disjoint(ex);
                if determined && *tp == Perm::Mut && g.program_var(tb).is_some() && g.is_program_expr(&want) {
                    let mut w = writes.clone();
                    w.push((i, want));
                    match_flat(g, rest, s, used2, w, ex, out);
                }
            }
            _ => {}
        }
    }
}

fn frame_pred_alts(g: &Goal) -> Vec<Alt> {
    let mut out = Vec::new();
    if g.closing {
        return out;
    }
    let ex = g.existentials();
    for (j, q) in g.post.spatial.iter().enumerate() {
        if q.kind() != HeapletKind::Pred || !q.vars().is_disjoint(&ex) {
            continue;
        }
        if let Some(i) = g.pre.spatial.iter().position(|p| p == q) {
            let mut pre = g.pre.clone();
            let mut post = g.post.clone();
            pre.spatial.remove(i);
            post.spatial.remove(j);
            let mut child = g.child(pre, post);
            child.closing = true;
            out.push(Alt::emit(Vec::new(), child));
        }
    }
    out
}

fn unify_alts(g: &Goal, order: crate::unify::UnifOrder) -> Vec<Alt> {
    let ex = g.existentials();
    let mut out = Vec::new();
    if ex.is_empty() {
        return out;
    }
    let mut pairs = Vec::new();
    for q in &g.post.spatial {
        if q.vars().is_disjoint(&ex) {
            continue;
        }
        for p in &g.pre.spatial {
            if p.kind() == q.kind() {
                pairs.push((p, q));
            }
        }
    }
    let mut seen: Vec<Subst> = Vec::new();
    for (p, q) in rank_candidates(&pairs, order) {
        let Some(s) = match_heaplet(q, p, &ex, &Subst::new()) else {
            continue;
        };
        if s.is_empty() || seen.contains(&s) {
            continue;
        }
        let mut child = g.child(g.pre.clone(), s.apply(&g.post));
        child.closing = true;
        seen.push(s);
        out.push(Alt::emit(Vec::new(), child));
    }
    out
}

fn write_alts(g: &Goal) -> Vec<Alt> {
    for q in &g.post.spatial {
        let Heaplet::PointsTo {
            base,
            offset,
            value: e,
            perm: Perm::Mut,
        } = q
        else {
            continue;
        };
        if !g.is_program_expr(e) {
            continue;
        }
        let Some(b) = g.program_var(base) else {
            continue;
        };
        for (i, p) in g.pre.spatial.iter().enumerate() {
            let Heaplet::PointsTo {
                base: pb,
                offset: po,
                value: pv,
                perm: Perm::Mut,
            } = p
            else {
                continue;
            };
            if pb != base || po != offset || pv == e {
                continue;
            }
            let mut pre = g.pre.clone();
            pre.spatial[i] = Heaplet::points_to(base.clone(), *offset, e.clone(), Perm::Mut);
            let pre = Assertion::new(pre.pure, pre.spatial);
            let mut child = g.child(pre, g.post.clone());
            child.closing = true;
            let store = Stmt::Store {
                base: b.clone(),
                offset: *offset,
                value: e.clone(),
            };
            return vec![Alt::emit(vec![store], child)];
        }
    }
    Vec::new()
}

fn alloc_alts(g: &Goal) -> Vec<Alt> {
    let ex = g.existentials();
    for q in &g.post.spatial {
        let Heaplet::Block {
            base: Expr::Var(z),
            size,
            ..
        } = q
        else {
            continue;
        };
        if !ex.contains(z) {
            continue;
        }
        let mut fresh = g.fresh_names();
        let mut spatial = g.pre.spatial.clone();
        spatial.push(Heaplet::block(Expr::var(z), *size, Perm::Mut));
        for i in 0..*size {
            let t = fresh.fresh_named("t", Sort::Int);
            spatial.push(Heaplet::points_to(Expr::var(z), i, Expr::Var(t), Perm::Mut));
        }
        let mut child = g.child(Assertion::new(g.pre.pure.clone(), spatial), g.post.clone());
        child.gamma.insert(z.clone());
        child.refresh();
        child.closing = true;
        let stmt = Stmt::Malloc {
            to: z.clone(),
            size: *size,
        };
        return vec![Alt::emit(vec![stmt], child)];
    }
    Vec::new()
}

fn free_alts(g: &Goal) -> Vec<Alt> {
    for (bi, p) in g.pre.spatial.iter().enumerate() {
        let Heaplet::Block {
            base,
            size,
            perm: Perm::Mut,
        } = p
        else {
            continue;
        };
        let Some(x) = g.program_var(base) else {
            continue;
        };
        if g.post.spatial.iter().any(|q| q.base() == Some(base)) {
            continue;
        }
        let mut drop = vec![bi];
        for i in 0..*size {
            let cell = g.pre.spatial.iter().position(|h| {
                matches!(h, Heaplet::PointsTo { base: b, offset, perm: Perm::Mut, .. } if b == base && *offset == i)
            });
            match cell {
                Some(c) => drop.push(c),
                None => break,
            }
        }
        if drop.len() != size + 1 {
            continue;
        }
        let spatial = g
            .pre
            .spatial
            .iter()
            .enumerate()
            .filter(|(i, _)| !drop.contains(i))
            .map(|(_, h)| h.clone())
            .collect();
        let mut child = g.child(Assertion::new(g.pre.pure.clone(), spatial), g.post.clone());
        child.closing = true;
        return vec![Alt::emit(vec![Stmt::Free(x.clone())], child)];
    }
    Vec::new()
}
