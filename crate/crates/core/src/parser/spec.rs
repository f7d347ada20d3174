//! `.bossl` specification files.
//!
//! ```text
//! predicate ls(loc x, set S)<a, b, c> {
//!   x == 0 => { S == {} ; emp }
//! | not (x == 0) => { S == {v} ++ S1 ; [x, 2]<a> ** x :-> v<b> ** (x + 1) :-> nxt<c> ** ls(nxt, S1)<a, b, c> }
//! }
//!
//! { r :-> x ** ls(x, S)<a, b, c> }
//! void listcopy(loc r)
//! { r :-> y ** ls(x, S)<a, b, c> ** ls(y, S)<Mut, Mut, Mut> }
//! ```
//!
//! Parameters and formals carry declared sorts. Sorts of clause-local,
//! ghost and existential variables are inferred from their uses; anything
//! left undetermined is an `int`. The last function specification in a file
//! is the synthesis goal and earlier ones are available to it as callees.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use super::lexer::{tokenize, Cursor, Pos, Tok};
use super::ParseError;
use crate::logic::expr::{BinOp, Expr, Sort, Var};
use crate::logic::heap::{fmt_spatial, Assertion, Heaplet, Perm};
use crate::logic::spec::{Clause, Context, FunctionSpec, PredicateDef};
use crate::logic::wf;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpecFile {
    pub predicates: Vec<Arc<PredicateDef>>,
    /// Specifications preceding the goal, in file order.
    pub helpers: Vec<Arc<FunctionSpec>>,
    pub goal: FunctionSpec,
}

impl SpecFile {
    /// Σ for synthesizing the goal: all predicates, the helpers, and the
    /// goal's own specification for recursive calls.
    pub fn context(&self) -> Context {
        let mut ctx = self.helper_context();
        ctx.functions.push(Arc::new(self.goal.clone()));
        ctx
    }

    /// Σ without the goal, used when synthesizing helper `i`.
    pub fn helper_context(&self) -> Context {
        Context {
            predicates: self
                .predicates
                .iter()
                .map(|p| (p.name.clone(), p.clone()))
                .collect(),
            functions: self.helpers.clone(),
        }
    }
}

// ---------------------------------------------------------------------------
// Raw syntax

#[derive(Clone, Debug)]
enum Raw {
    Int(i64),
    Bool(bool),
    Mut,
    Imm,
    Name(String),
    SetLit(Vec<Raw>),
    Bin(BinOp, Box<Raw>, Box<Raw>),
    Not(Box<Raw>),
    Ite(Box<Raw>, Box<Raw>, Box<Raw>),
}

#[derive(Clone, Debug)]
enum RawPerm {
    Mut,
    Name(String),
}

#[derive(Clone, Debug)]
enum RawHeaplet {
    PointsTo(Raw, usize, Raw, RawPerm),
    Block(Raw, usize, RawPerm),
    Pred(String, Vec<Raw>, Vec<RawPerm>, Pos),
}

#[derive(Clone, Debug)]
struct RawAssertion {
    pure: Vec<Raw>,
    spatial: Vec<RawHeaplet>,
}

struct RawPred {
    pos: Pos,
    name: String,
    params: Vec<(Sort, String)>,
    perm_params: Vec<String>,
    clauses: Vec<(Raw, RawAssertion)>,
}

struct RawFun {
    pos: Pos,
    name: String,
    formals: Vec<(Sort, String)>,
    pre: RawAssertion,
    post: RawAssertion,
}

fn bin(op: BinOp, l: Raw, r: Raw) -> Raw {
    Raw::Bin(op, Box::new(l), Box::new(r))
}

// ---------------------------------------------------------------------------
// Expressions

/// Full pure formula: disjunction level.
fn p_formula(c: &mut Cursor) -> Result<Raw, ParseError> {
    let mut l = p_conj(c)?;
    while c.eat(&Tok::Or) {
        let r = p_conj(c)?;
        l = bin(BinOp::Or, l, r);
    }
    Ok(l)
}

fn p_conj(c: &mut Cursor) -> Result<Raw, ParseError> {
    let mut l = p_cmp(c)?;
    while c.eat(&Tok::And) {
        let r = p_cmp(c)?;
        l = bin(BinOp::And, l, r);
    }
    Ok(l)
}

fn p_cmp(c: &mut Cursor) -> Result<Raw, ParseError> {
    let l = p_term(c)?;
    let op = c.peek().clone();
    let mk = |c: &mut Cursor, f: fn(Raw, Raw) -> Raw| -> Result<Raw, ParseError> {
        c.bump();
        let r = p_term(c)?;
        Ok(f(l.clone(), r))
    };
    match op {
        Tok::EqEq => mk(c, |l, r| bin(BinOp::Eq, l, r)),
        Tok::Neq => mk(c, |l, r| Raw::Not(Box::new(bin(BinOp::Eq, l, r)))),
        Tok::Le => mk(c, |l, r| bin(BinOp::Le, l, r)),
        Tok::Lt => mk(c, |l, r| bin(BinOp::Lt, l, r)),
        Tok::Ge => mk(c, |l, r| bin(BinOp::Le, r, l)),
        Tok::Gt => mk(c, |l, r| bin(BinOp::Lt, r, l)),
        _ => Ok(l),
    }
}

/// Additive level: `+`, `-`, `++`. Does not consume `<`, so it is safe in
/// front of a permission annotation.
fn p_term(c: &mut Cursor) -> Result<Raw, ParseError> {
    let mut l = p_atom(c)?;
    loop {
        let op = match c.peek() {
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::PlusPlus => BinOp::Union,
            _ => return Ok(l),
        };
        c.bump();
        let r = p_atom(c)?;
        l = bin(op, l, r);
    }
}

fn p_atom(c: &mut Cursor) -> Result<Raw, ParseError> {
    match c.peek().clone() {
        Tok::Int(n) => {
            c.bump();
            Ok(Raw::Int(n))
        }
        Tok::Minus => {
            c.bump();
            let n = c.int()?;
            Ok(Raw::Int(-n))
        }
        Tok::Ident(s) => {
            c.bump();
            Ok(match s.as_str() {
                "true" => Raw::Bool(true),
                "false" => Raw::Bool(false),
                "Mut" => Raw::Mut,
                "Imm" => Raw::Imm,
                "not" => Raw::Not(Box::new(p_atom(c)?)),
                _ => Raw::Name(s),
            })
        }
        Tok::LBrace => {
            c.bump();
            let mut es = Vec::new();
            if !c.eat(&Tok::RBrace) {
                loop {
                    es.push(p_term(c)?);
                    if c.eat(&Tok::RBrace) {
                        break;
                    }
                    c.expect(&Tok::Comma)?;
                }
            }
            Ok(Raw::SetLit(es))
        }
        Tok::LParen => {
            c.bump();
            let e = p_formula(c)?;
            if c.eat(&Tok::Question) {
                let t = p_formula(c)?;
                c.expect(&Tok::Colon)?;
                let f = p_formula(c)?;
                c.expect(&Tok::RParen)?;
                Ok(Raw::Ite(Box::new(e), Box::new(t), Box::new(f)))
            } else {
                c.expect(&Tok::RParen)?;
                Ok(e)
            }
        }
        _ => Err(c.unexpected("expression")),
    }
}

// ---------------------------------------------------------------------------
// Heaps and assertions

fn p_perm(c: &mut Cursor) -> Result<RawPerm, ParseError> {
    let pos = c.pos();
    let s = c.ident()?;
    match s.as_str() {
        "Mut" => Ok(RawPerm::Mut),
        "Imm" => Err(ParseError::at(
            pos,
            "`Imm` cannot appear in a specification; use a borrow variable",
        )),
        _ => Ok(RawPerm::Name(s)),
    }
}

fn p_opt_perm(c: &mut Cursor) -> Result<RawPerm, ParseError> {
    if c.eat(&Tok::Lt) {
        let p = p_perm(c)?;
        c.expect(&Tok::Gt)?;
        Ok(p)
    } else {
        Ok(RawPerm::Mut)
    }
}

fn split_offset(e: Raw) -> (Raw, usize) {
    match e {
        Raw::Bin(BinOp::Add, b, k) => match *k {
            Raw::Int(n) if n >= 0 => (*b, n as usize),
            k => (Raw::Bin(BinOp::Add, b, Box::new(k)), 0),
        },
        e => (e, 0),
    }
}

fn p_heaplet(c: &mut Cursor) -> Result<RawHeaplet, ParseError> {
    let pos = c.pos();
    match c.peek().clone() {
        Tok::LBrack => {
            c.bump();
            let base = p_term(c)?;
            c.expect(&Tok::Comma)?;
            let n = c.int()?;
            if n <= 0 {
                return Err(ParseError::at(pos, "block size must be positive"));
            }
            c.expect(&Tok::RBrack)?;
            let perm = p_opt_perm(c)?;
            Ok(RawHeaplet::Block(base, n as usize, perm))
        }
        Tok::Ident(name) if c.peek_at(1) == &Tok::LParen => {
            c.bump();
            c.bump();
            let mut args = Vec::new();
            if !c.eat(&Tok::RParen) {
                loop {
                    args.push(p_formula(c)?);
                    if c.eat(&Tok::RParen) {
                        break;
                    }
                    c.expect(&Tok::Comma)?;
                }
            }
            let mut perms = Vec::new();
            if c.eat(&Tok::Lt) {
                loop {
                    perms.push(p_perm(c)?);
                    if c.eat(&Tok::Gt) {
                        break;
                    }
                    c.expect(&Tok::Comma)?;
                }
            }
            Ok(RawHeaplet::Pred(name, args, perms, pos))
        }
        _ => {
            let loc = p_atom(c)?;
            let (base, offset) = split_offset(loc);
            c.expect(&Tok::PointsTo)?;
            let value = p_term(c)?;
            let perm = p_opt_perm(c)?;
            Ok(RawHeaplet::PointsTo(base, offset, value, perm))
        }
    }
}

fn p_spatial(c: &mut Cursor) -> Result<Vec<RawHeaplet>, ParseError> {
    if c.eat_keyword("emp") {
        return Ok(vec![]);
    }
    let mut out = vec![p_heaplet(c)?];
    while c.eat(&Tok::StarStar) {
        out.push(p_heaplet(c)?);
    }
    Ok(out)
}

/// Whether the brace-delimited assertion starting at the cursor has a pure
/// part, i.e. a `;` at nesting depth zero before its closing brace.
fn has_pure_part(c: &Cursor) -> bool {
    let mut depth = 0i32;
    let mut i = c.index() + 1;
    loop {
        match c.token_at(i) {
            Tok::LBrace | Tok::LParen | Tok::LBrack => depth += 1,
            Tok::RBrace | Tok::RParen | Tok::RBrack => {
                if depth == 0 {
                    return false;
                }
                depth -= 1;
            }
            Tok::Semi if depth == 0 => return true,
            Tok::Eof => return false,
            _ => {}
        }
        i += 1;
    }
}

fn split_conj(e: Raw, out: &mut Vec<Raw>) {
    match e {
        Raw::Bin(BinOp::And, l, r) => {
            split_conj(*l, out);
            split_conj(*r, out);
        }
        Raw::Bool(true) => {}
        e => out.push(e),
    }
}

fn p_assertion(c: &mut Cursor) -> Result<RawAssertion, ParseError> {
    let with_pure = c.peek() == &Tok::LBrace && has_pure_part(c);
    c.expect(&Tok::LBrace)?;
    let mut pure = Vec::new();
    if with_pure {
        split_conj(p_formula(c)?, &mut pure);
        c.expect(&Tok::Semi)?;
    }
    let spatial = p_spatial(c)?;
    c.expect(&Tok::RBrace)?;
    Ok(RawAssertion { pure, spatial })
}

fn p_sorted_params(c: &mut Cursor) -> Result<Vec<(Sort, String)>, ParseError> {
    c.expect(&Tok::LParen)?;
    let mut out = Vec::new();
    if c.eat(&Tok::RParen) {
        return Ok(out);
    }
    loop {
        let pos = c.pos();
        let kw = c.ident()?;
        let sort = Sort::from_keyword(&kw)
            .filter(|s| *s != Sort::Perm)
            .ok_or_else(|| ParseError::at(pos, format!("unknown sort `{kw}`")))?;
        out.push((sort, c.ident()?));
        if c.eat(&Tok::RParen) {
            return Ok(out);
        }
        c.expect(&Tok::Comma)?;
    }
}

fn p_predicate(c: &mut Cursor) -> Result<RawPred, ParseError> {
    let pos = c.pos();
    c.expect_keyword("predicate")?;
    let name = c.ident()?;
    let params = p_sorted_params(c)?;
    let mut perm_params = Vec::new();
    if c.eat(&Tok::Lt) {
        loop {
            perm_params.push(c.ident()?);
            if c.eat(&Tok::Gt) {
                break;
            }
            c.expect(&Tok::Comma)?;
        }
    }
    c.expect(&Tok::LBrace)?;
    c.eat(&Tok::Bar);
    let mut clauses = Vec::new();
    loop {
        let sel = p_formula(c)?;
        c.expect(&Tok::Arrow)?;
        let body = p_assertion(c)?;
        clauses.push((sel, body));
        if !c.eat(&Tok::Bar) {
            break;
        }
    }
    c.expect(&Tok::RBrace)?;
    Ok(RawPred {
        pos,
        name,
        params,
        perm_params,
        clauses,
    })
}

fn p_function(c: &mut Cursor) -> Result<RawFun, ParseError> {
    let pos = c.pos();
    let pre = p_assertion(c)?;
    c.expect_keyword("void")?;
    let name = c.ident()?;
    let formals = p_sorted_params(c)?;
    let post = p_assertion(c)?;
    Ok(RawFun {
        pos,
        name,
        formals,
        pre,
        post,
    })
}

// ---------------------------------------------------------------------------
// Sort inference and elaboration

struct Elab<'a> {
    pos: Pos,
    env: HashMap<String, Sort>,
    /// Names whose sort is declared and must not be refined.
    fixed: HashMap<String, Sort>,
    preds: &'a HashMap<String, (Vec<Sort>, usize)>,
}

impl<'a> Elab<'a> {
    fn new(pos: Pos, preds: &'a HashMap<String, (Vec<Sort>, usize)>) -> Elab<'a> {
        Elab {
            pos,
            env: HashMap::new(),
            fixed: HashMap::new(),
            preds,
        }
    }

    fn declare(&mut self, name: &str, s: Sort) -> Result<(), ParseError> {
        if self.fixed.insert(name.to_string(), s).is_some() {
            return Err(self.err(format!("`{name}` declared twice")));
        }
        self.env.insert(name.to_string(), s);
        Ok(())
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::at(self.pos, msg)
    }

    fn hint_name(&mut self, n: &str, s: Sort) {
        if self.fixed.contains_key(n) {
            return;
        }
        match self.env.get(n) {
            None => {
                self.env.insert(n.to_string(), s);
            }
            Some(Sort::Int) if s == Sort::Loc => {
                self.env.insert(n.to_string(), Sort::Loc);
            }
            _ => {}
        }
    }

    fn known_sort(&self, e: &Raw) -> Option<Sort> {
        match e {
            Raw::Int(_) => Some(Sort::Int),
            Raw::Bool(_) => Some(Sort::Bool),
            Raw::Mut | Raw::Imm => Some(Sort::Perm),
            Raw::Name(n) => self.env.get(n).copied(),
            Raw::SetLit(_) => Some(Sort::Set),
            Raw::Bin(op, ..) => Some(match op {
                BinOp::Add | BinOp::Sub => Sort::Int,
                BinOp::Union => Sort::Set,
                _ => Sort::Bool,
            }),
            Raw::Not(_) => Some(Sort::Bool),
            Raw::Ite(_, t, f) => self.known_sort(t).or_else(|| self.known_sort(f)),
        }
    }

    fn hint(&mut self, e: &Raw, s: Option<Sort>) {
        match e {
            Raw::Name(n) => {
                if let Some(s) = s {
                    self.hint_name(n, s)
                }
            }
            Raw::SetLit(es) => es.iter().for_each(|x| self.hint(x, Some(Sort::Int))),
            Raw::Bin(op, l, r) => match op {
                BinOp::Add | BinOp::Sub | BinOp::Le | BinOp::Lt => {
                    self.hint(l, Some(Sort::Int));
                    self.hint(r, Some(Sort::Int));
                }
                BinOp::Union => {
                    self.hint(l, Some(Sort::Set));
                    self.hint(r, Some(Sort::Set));
                }
                BinOp::And | BinOp::Or => {
                    self.hint(l, Some(Sort::Bool));
                    self.hint(r, Some(Sort::Bool));
                }
                BinOp::Eq => {
                    let ls = self.known_sort(l);
                    let rs = self.known_sort(r);
                    self.hint(l, rs);
                    self.hint(r, ls);
                }
            },
            Raw::Not(x) => self.hint(x, Some(Sort::Bool)),
            Raw::Ite(c, t, f) => {
                self.hint(c, Some(Sort::Bool));
                let s = s.or_else(|| self.known_sort(t)).or_else(|| self.known_sort(f));
                self.hint(t, s);
                self.hint(f, s);
            }
            _ => {}
        }
    }

    fn hint_perm(&mut self, p: &RawPerm) {
        if let RawPerm::Name(n) = p {
            self.hint_name(n, Sort::Perm);
        }
    }

    fn hint_assertion(&mut self, a: &RawAssertion) {
        a.pure.iter().for_each(|p| self.hint(p, Some(Sort::Bool)));
        for h in &a.spatial {
            match h {
                RawHeaplet::PointsTo(b, _, v, p) => {
                    self.hint(b, Some(Sort::Loc));
                    self.hint(v, None);
                    self.hint_perm(p);
                }
                RawHeaplet::Block(b, _, p) => {
                    self.hint(b, Some(Sort::Loc));
                    self.hint_perm(p);
                }
                RawHeaplet::Pred(name, args, perms, _) => {
                    let sorts = self.preds.get(name).map(|(s, _)| s.clone());
                    for (i, a) in args.iter().enumerate() {
                        let s = sorts.as_ref().and_then(|s| s.get(i).copied());
                        self.hint(a, s);
                    }
                    perms.iter().for_each(|p| self.hint_perm(p));
                }
            }
        }
    }

    fn var(&self, n: &str) -> Var {
        Var::new(n, self.env.get(n).copied().unwrap_or(Sort::Int))
    }

    fn expr(&self, e: &Raw) -> Result<Expr, ParseError> {
        Ok(match e {
            Raw::Int(n) => Expr::Int(*n),
            Raw::Bool(b) => Expr::Bool(*b),
            Raw::Mut => Expr::Mut,
            Raw::Imm => {
                return Err(self.err("`Imm` cannot appear in a specification"));
            }
            Raw::Name(n) => Expr::Var(self.var(n)),
            Raw::SetLit(es) => {
                let es = es.iter().map(|x| self.expr(x)).collect::<Result<Vec<_>, _>>()?;
                for x in &es {
                    self.want(x, |s| s.is_numeric(), "a number")?;
                }
                Expr::SetLit(es)
            }
            Raw::Bin(op, l, r) => {
                let l = self.expr(l)?;
                let r = self.expr(r)?;
                match op {
                    BinOp::Add | BinOp::Sub | BinOp::Le | BinOp::Lt => {
                        self.want(&l, Sort::is_numeric, "a number")?;
                        self.want(&r, Sort::is_numeric, "a number")?;
                    }
                    BinOp::Union => {
                        self.want(&l, |s| s == Sort::Set, "a set")?;
                        self.want(&r, |s| s == Sort::Set, "a set")?;
                    }
                    BinOp::And | BinOp::Or => {
                        self.want(&l, |s| s == Sort::Bool, "a boolean")?;
                        self.want(&r, |s| s == Sort::Bool, "a boolean")?;
                    }
                    BinOp::Eq => {
                        if !l.sort().compatible(r.sort()) {
                            return Err(self.err(format!(
                                "sort mismatch in `{l} == {r}`: {} vs {}",
                                l.sort(),
                                r.sort()
                            )));
                        }
                    }
                }
                Expr::bin(*op, l, r)
            }
            Raw::Not(x) => {
                let x = self.expr(x)?;
                self.want(&x, |s| s == Sort::Bool, "a boolean")?;
                Expr::Not(Box::new(x))
            }
            Raw::Ite(c, t, f) => {
                let c = self.expr(c)?;
                self.want(&c, |s| s == Sort::Bool, "a boolean")?;
                let t = self.expr(t)?;
                let f = self.expr(f)?;
                if !t.sort().compatible(f.sort()) {
                    return Err(self.err(format!("branches of `({c} ? {t} : {f})` differ in sort")));
                }
                Expr::ite(c, t, f)
            }
        })
    }

    fn want(&self, e: &Expr, ok: impl Fn(Sort) -> bool, what: &str) -> Result<(), ParseError> {
        if ok(e.sort()) {
            Ok(())
        } else {
            Err(self.err(format!("`{e}` has sort {}, expected {what}", e.sort())))
        }
    }

    fn perm(&self, p: &RawPerm) -> Result<Perm, ParseError> {
        match p {
            RawPerm::Mut => Ok(Perm::Mut),
            RawPerm::Name(n) => {
                let v = self.var(n);
                if v.sort() != Sort::Perm {
                    return Err(self.err(format!("`{n}` is used both as a permission and as a {}", v.sort())));
                }
                Ok(Perm::Borrow(v))
            }
        }
    }

    fn heaplet(&self, h: &RawHeaplet) -> Result<Heaplet, ParseError> {
        Ok(match h {
            RawHeaplet::PointsTo(b, off, v, p) => {
                let b = self.expr(b)?;
                self.want(&b, Sort::is_numeric, "a location")?;
                let v = self.expr(v)?;
                self.want(&v, Sort::is_numeric, "a value")?;
                Heaplet::points_to(b, *off, v, self.perm(p)?)
            }
            RawHeaplet::Block(b, n, p) => {
                let b = self.expr(b)?;
                self.want(&b, Sort::is_numeric, "a location")?;
                Heaplet::block(b, *n, self.perm(p)?)
            }
            RawHeaplet::Pred(name, args, perms, pos) => {
                let Some((sorts, nperms)) = self.preds.get(name) else {
                    return Err(ParseError::at(*pos, format!("unknown predicate `{name}`")));
                };
                if sorts.len() != args.len() || *nperms != perms.len() {
                    return Err(ParseError::at(
                        *pos,
                        format!(
                            "`{name}` expects {} argument(s) and {} permission(s), found {} and {}",
                            sorts.len(),
                            nperms,
                            args.len(),
                            perms.len()
                        ),
                    ));
                }
                let mut out = Vec::new();
                for (a, s) in args.iter().zip(sorts) {
                    let e = self.expr(a)?;
                    if !e.sort().compatible(*s) {
                        return Err(ParseError::at(
                            *pos,
                            format!("argument `{e}` of `{name}` should be a {s}"),
                        ));
                    }
                    out.push(e);
                }
                let perms = perms.iter().map(|p| self.perm(p)).collect::<Result<_, _>>()?;
                Heaplet::pred(name, out, perms)
            }
        })
    }

    fn assertion(&self, a: &RawAssertion) -> Result<(Vec<Expr>, Vec<Heaplet>), ParseError> {
        let mut pure = Vec::new();
        for p in &a.pure {
            let e = self.expr(p)?;
            self.want(&e, |s| s == Sort::Bool, "a boolean")?;
            pure.push(e);
        }
        let spatial = a.spatial.iter().map(|h| self.heaplet(h)).collect::<Result<_, _>>()?;
        Ok((pure, spatial))
    }
}

const INFERENCE_ROUNDS: usize = 3;

fn elab_predicate(
    raw: &RawPred,
    preds: &HashMap<String, (Vec<Sort>, usize)>,
) -> Result<PredicateDef, ParseError> {
    let mut clauses = Vec::new();
    for (sel, body) in &raw.clauses {
        // locals are scoped per clause
        let mut el = Elab::new(raw.pos, preds);
        for (s, n) in &raw.params {
            el.declare(n, *s)?;
        }
        for n in &raw.perm_params {
            el.declare(n, Sort::Perm)?;
        }
        for _ in 0..INFERENCE_ROUNDS {
            el.hint(sel, Some(Sort::Bool));
            el.hint_assertion(body);
        }
        let selector = el.expr(sel)?;
        el.want(&selector, |s| s == Sort::Bool, "a boolean selector")?;
        let (pure, spatial) = el.assertion(body)?;
        clauses.push(Clause {
            selector,
            pure,
            spatial,
        });
    }
    Ok(PredicateDef {
        name: Arc::from(raw.name.as_str()),
        params: raw.params.iter().map(|(s, n)| Var::new(n, *s)).collect(),
        perm_params: raw.perm_params.iter().map(|n| Var::new(n, Sort::Perm)).collect(),
        clauses,
    })
}

fn elab_function(
    raw: &RawFun,
    preds: &HashMap<String, (Vec<Sort>, usize)>,
) -> Result<FunctionSpec, ParseError> {
    let mut el = Elab::new(raw.pos, preds);
    for (s, n) in &raw.formals {
        el.declare(n, *s)?;
    }
    for _ in 0..INFERENCE_ROUNDS {
        el.hint_assertion(&raw.pre);
        el.hint_assertion(&raw.post);
    }
    let (pp, ps) = el.assertion(&raw.pre)?;
    let (qp, qs) = el.assertion(&raw.post)?;
    Ok(FunctionSpec {
        name: Arc::from(raw.name.as_str()),
        formals: raw.formals.iter().map(|(s, n)| Var::new(n, *s)).collect(),
        pre: Assertion::new(pp, ps),
        post: Assertion::new(qp, qs),
    })
}

/// Parses, sort-checks and well-formedness-checks a specification file.
pub fn parse_spec(text: &str) -> Result<SpecFile, ParseError> {
    let mut c = Cursor::new(tokenize(text)?);
    let mut raw_preds = Vec::new();
    let mut raw_funs = Vec::new();
    while c.peek() != &Tok::Eof {
        if c.is_keyword("predicate") {
            raw_preds.push(p_predicate(&mut c)?);
        } else if c.peek() == &Tok::LBrace {
            raw_funs.push(p_function(&mut c)?);
        } else {
            return Err(c.unexpected("`predicate` or a function specification"));
        }
    }
    let mut headers = HashMap::new();
    for p in &raw_preds {
        let sig = (p.params.iter().map(|(s, _)| *s).collect(), p.perm_params.len());
        if headers.insert(p.name.clone(), sig).is_some() {
            return Err(ParseError::at(p.pos, format!("predicate `{}` defined twice", p.name)));
        }
    }
    let predicates = raw_preds
        .iter()
        .map(|p| elab_predicate(p, &headers).map(Arc::new))
        .collect::<Result<Vec<_>, _>>()?;
    let mut functions = Vec::new();
    let mut seen = BTreeMap::new();
    for f in &raw_funs {
        if seen.insert(f.name.clone(), ()).is_some() {
            return Err(ParseError::at(f.pos, format!("function `{}` specified twice", f.name)));
        }
        functions.push(elab_function(f, &headers)?);
    }
    let Some(goal) = functions.pop() else {
        return Err(ParseError::NoGoal);
    };
    let file = SpecFile {
        predicates,
        helpers: functions.into_iter().map(Arc::new).collect(),
        goal,
    };
    let mut violations = Vec::new();
    for p in &file.predicates {
        if let Err(vs) = wf::check_predicate(p) {
            violations.extend(vs);
        }
    }
    let ctx = file.context();
    for f in file.helpers.iter().map(|f| &**f).chain([&file.goal]) {
        if let Err(vs) = wf::check_function(f, &ctx) {
            violations.extend(vs.into_iter().filter(|v| {
                !matches!(v, wf::Violation::IllFormedPredicate { .. })
            }));
        }
    }
    if violations.is_empty() {
        Ok(file)
    } else {
        Err(ParseError::WellFormed(violations))
    }
}

// ---------------------------------------------------------------------------
// Printing

fn fmt_clause_body(pure: &[Expr], spatial: &[Heaplet]) -> String {
    if pure.is_empty() {
        format!("{{ {} }}", fmt_spatial(spatial))
    } else {
        let p = pure.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(" /\\ ");
        format!("{{ {p} ; {} }}", fmt_spatial(spatial))
    }
}

fn fmt_params(ps: &[Var]) -> String {
    ps.iter()
        .map(|v| format!("{} {}", v.sort(), v.name()))
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn print_predicate(d: &PredicateDef) -> String {
    let mut s = format!("predicate {}({})", d.name, fmt_params(&d.params));
    if !d.perm_params.is_empty() {
        let ps: Vec<&str> = d.perm_params.iter().map(|v| v.name()).collect();
        let _ = write!(s, "<{}>", ps.join(", "));
    }
    s.push_str(" {\n");
    for (i, c) in d.clauses.iter().enumerate() {
        let lead = if i == 0 { "  " } else { "| " };
        let _ = writeln!(s, "{lead}{} => {}", c.selector, fmt_clause_body(&c.pure, &c.spatial));
    }
    s.push('}');
    s
}

pub fn print_function(f: &FunctionSpec) -> String {
    format!(
        "{}\nvoid {}({})\n{}",
        f.pre,
        f.name,
        fmt_params(&f.formals),
        f.post
    )
}

/// Prints a specification file in the syntax accepted by [`parse_spec`].
pub fn print_spec(file: &SpecFile) -> String {
    let mut parts: Vec<String> = file.predicates.iter().map(|p| print_predicate(p)).collect();
    parts.extend(file.helpers.iter().map(|f| print_function(f)));
    parts.push(print_function(&file.goal));
    parts.join("\n\n") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const LS: &str = "
predicate ls(loc x, set S)<a, b, c> {
  x == 0 => { S == {} ; emp }
| not (x == 0) => { S == {v} ++ S1 ; [x, 2]<a> ** x :-> v<b> ** (x + 1) :-> nxt<c> ** ls(nxt, S1)<a, b, c> }
}
";

    #[test]
    fn pick_goal_has_single_existential() {
        let f = parse_spec(
            "{ x :-> 239 ** y :-> 30<a> } void pick(loc x, loc y) { z <= 100 ; x :-> z ** y :-> z<a> }",
        )
        .unwrap();
        let ev: Vec<String> = f.goal.existentials().iter().map(|v| v.to_string()).collect();
        assert_eq!(ev, vec!["z"]);
        assert_eq!(f.goal.pre.spatial[1].perms()[0], &Perm::borrow("a"));
    }

    #[test]
    fn empty_file_has_no_goal() {
        assert_eq!(parse_spec("# nothing here\n"), Err(ParseError::NoGoal));
        assert!(parse_spec("").unwrap_err().to_string().contains("no goal"));
    }

    #[test]
    fn ls_predicate_shape() {
        let src = format!("{LS}\n{{ ls(x, S)<a, b, c> }} void f(loc x) {{ ls(x, S)<a, b, c> }}");
        let f = parse_spec(&src).unwrap();
        let ls = &f.predicates[0];
        assert_eq!(ls.clauses.len(), 2);
        assert_eq!(ls.perm_params.len(), 3);
        let locals: Vec<String> = ls.locals(&ls.clauses[1]).iter().map(|v| format!("{v:?}")).collect();
        assert_eq!(locals, vec!["S1:set", "nxt:loc", "v:int"]);
    }

    #[test]
    fn imm_is_rejected() {
        let err = parse_spec("{ x :-> 1<Imm> } void f(loc x) { x :-> 1<Imm> }").unwrap_err();
        assert!(err.to_string().contains("Imm"), "{err}");
    }

    #[test]
    fn existential_borrow_is_rejected() {
        let err = parse_spec("{ x :-> 1 } void f(loc x) { x :-> 1<e> }").unwrap_err();
        assert!(matches!(err, ParseError::WellFormed(_)));
    }

    #[test]
    fn errors_carry_positions() {
        match parse_spec("{ x :-> 1 }\nvoid f(loc x) { x :-> }") {
            Err(ParseError::Syntax { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn round_trip_listcopy() {
        let src = format!(
            "{LS}\n{{ r :-> x ** ls(x, S)<a, b, c> }} void listcopy(loc r) {{ r :-> y ** ls(x, S)<a, b, c> ** ls(y, S)<Mut, Mut, Mut> }}"
        );
        let f = parse_spec(&src).unwrap();
        let printed = print_spec(&f);
        assert_eq!(parse_spec(&printed).unwrap(), f, "{printed}");
    }

    #[test]
    fn comparisons_desugar() {
        let f = parse_spec("{ x > 1 /\\ y != 2 ; emp } void f(int x, int y) { emp }").unwrap();
        let shown: Vec<String> = f.goal.pre.pure.iter().map(|e| e.to_string()).collect();
        assert_eq!(shown, vec!["1 < x", "not (y == 2)"]);
    }
}
