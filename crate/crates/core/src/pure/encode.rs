//! Translation of pure formulas into clauses over theory atoms.
//!
//! Numbers, locations and permissions become integer variables (`Mut` is 1,
//! `Imm` is 0, permission variables range over {0, 1}). Set equalities are
//! reduced to membership of finitely many points: every element term of a
//! set literal, plus one witness per negated set equality. Congruence
//! clauses keep memberships of equal points in agreement.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::lia::Lin;
use crate::logic::expr::{BinOp, Expr, Sort, Var};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Atom {
    Bool(Var),
    /// `lin ≤ 0`
    Le(Lin),
    /// point index ∈ set variable
    Mem(usize, Var),
}

#[derive(Clone, Debug)]
pub enum F {
    Const(bool),
    Lit(usize, bool),
    And(Vec<F>),
    Or(Vec<F>),
    /// Set equality placeholder, expanded once all points are known.
    SetEq(Expr, Expr, Option<usize>),
}

#[derive(Debug)]
pub struct Unsupported;

pub struct Encoder {
    pub atoms: Vec<Atom>,
    index: HashMap<Atom, usize>,
    /// Integer variable index of every numeric or permission variable.
    pub ints: BTreeMap<Var, usize>,
    next_int: usize,
    side: Vec<F>,
    points: Vec<Lin>,
    point_index: HashMap<Lin, usize>,
    set_vars: BTreeSet<Var>,
    pub bool_vars: BTreeSet<Var>,
    ites: HashMap<Expr, Lin>,
}

fn lin_eq(a: &Lin, b: &Lin) -> Result<(Lin, Lin), Unsupported> {
    Ok((a.sub(b).ok_or(Unsupported)?, b.sub(a).ok_or(Unsupported)?))
}

impl Default for Encoder {
    fn default() -> Self {
        Encoder::new()
    }
}

impl Encoder {
    pub fn new() -> Encoder {
        Encoder {
            atoms: Vec::new(),
            index: HashMap::new(),
            ints: BTreeMap::new(),
            next_int: 0,
            side: Vec::new(),
            points: Vec::new(),
            point_index: HashMap::new(),
            set_vars: BTreeSet::new(),
            bool_vars: BTreeSet::new(),
            ites: HashMap::new(),
        }
    }

    pub fn points(&self) -> &[Lin] {
        &self.points
    }

    pub fn set_vars(&self) -> &BTreeSet<Var> {
        &self.set_vars
    }

    fn atom(&mut self, a: Atom) -> usize {
        if let Some(i) = self.index.get(&a) {
            return *i;
        }
        let i = self.atoms.len();
        self.atoms.push(a.clone());
        self.index.insert(a, i);
        i
    }

    fn le(&mut self, l: Lin, pos: bool) -> F {
        if l.is_constant() {
            return F::Const((l.constant <= 0) == pos);
        }
        F::Lit(self.atom(Atom::Le(l)), pos)
    }

    fn eq_lin(&mut self, a: &Lin, b: &Lin, pos: bool) -> Result<F, Unsupported> {
        let (x, y) = lin_eq(a, b)?;
        let (p, q) = (self.le(x, pos), self.le(y, pos));
        Ok(if pos { F::And(vec![p, q]) } else { F::Or(vec![p, q]) })
    }

    fn fresh_int(&mut self) -> usize {
        let i = self.next_int;
        self.next_int += 1;
        i
    }

    fn int_var(&mut self, v: &Var) -> usize {
        if let Some(i) = self.ints.get(v) {
            return *i;
        }
        let i = self.fresh_int();
        self.ints.insert(v.clone(), i);
        if v.sort() == Sort::Perm {
            // 0 ≤ p ≤ 1
            let lo = self.le(Lin::var(i).scale(-1).unwrap(), true);
            let hi = self.le(Lin::var(i).add(&Lin::constant(-1)).unwrap(), true);
            self.side.push(lo);
            self.side.push(hi);
        }
        i
    }

    pub fn int_count(&self) -> usize {
        self.next_int
    }

    fn lin(&mut self, e: &Expr) -> Result<Lin, Unsupported> {
        Ok(match e {
            Expr::Int(n) => Lin::constant(*n),
            Expr::Mut => Lin::constant(1),
            Expr::Imm => Lin::constant(0),
            Expr::Var(v) if v.sort().is_numeric() || v.sort() == Sort::Perm => {
                Lin::var(self.int_var(v))
            }
            Expr::Bin(BinOp::Add, l, r) => self.lin(l)?.add(&self.lin(r)?).ok_or(Unsupported)?,
            Expr::Bin(BinOp::Sub, l, r) => self.lin(l)?.sub(&self.lin(r)?).ok_or(Unsupported)?,
            Expr::Ite(..) if self.ites.contains_key(e) => self.ites[e].clone(),
            Expr::Ite(c, t, f) => {
                let k = Lin::var(self.fresh_int());
                self.ites.insert(e.clone(), k.clone());
                let (tl, fl) = (self.lin(t)?, self.lin(f)?);
                let c_pos = self.formula(c, true)?;
                let c_neg = self.formula(c, false)?;
                let kt = self.eq_lin(&k, &tl, true)?;
                let kf = self.eq_lin(&k, &fl, true)?;
                self.side.push(F::Or(vec![c_neg, kt]));
                self.side.push(F::Or(vec![c_pos, kf]));
                k
            }
            _ => return Err(Unsupported),
        })
    }

    fn collect_points(&mut self, e: &Expr) -> Result<(), Unsupported> {
        match e {
            Expr::Var(v) if v.sort() == Sort::Set => {
                self.set_vars.insert(v.clone());
            }
            Expr::SetLit(es) => {
                for x in es {
                    let l = self.lin(x)?;
                    self.add_point(l);
                }
            }
            Expr::Bin(BinOp::Union, l, r) => {
                self.collect_points(l)?;
                self.collect_points(r)?;
            }
            Expr::Ite(_, t, f) => {
                self.collect_points(t)?;
                self.collect_points(f)?;
            }
            _ => return Err(Unsupported),
        }
        Ok(())
    }

    fn add_point(&mut self, l: Lin) -> usize {
        if let Some(i) = self.point_index.get(&l) {
            return *i;
        }
        let i = self.points.len();
        self.points.push(l.clone());
        self.point_index.insert(l, i);
        i
    }

    /// NNF translation of a boolean term at polarity `pos`.
    pub fn formula(&mut self, e: &Expr, pos: bool) -> Result<F, Unsupported> {
        Ok(match e {
            Expr::Bool(b) => F::Const(*b == pos),
            Expr::Var(v) if v.sort() == Sort::Bool => {
                self.bool_vars.insert(v.clone());
                F::Lit(self.atom(Atom::Bool(v.clone())), pos)
            }
            Expr::Not(x) => self.formula(x, !pos)?,
            Expr::Bin(BinOp::And, l, r) => {
                let parts = vec![self.formula(l, pos)?, self.formula(r, pos)?];
                if pos { F::And(parts) } else { F::Or(parts) }
            }
            Expr::Bin(BinOp::Or, l, r) => {
                let parts = vec![self.formula(l, pos)?, self.formula(r, pos)?];
                if pos { F::Or(parts) } else { F::And(parts) }
            }
            Expr::Ite(c, t, f) => {
                let a = F::And(vec![self.formula(c, true)?, self.formula(t, pos)?]);
                let b = F::And(vec![self.formula(c, false)?, self.formula(f, pos)?]);
                F::Or(vec![a, b])
            }
            Expr::Bin(BinOp::Le, l, r) => {
                let d = self.lin(l)?.sub(&self.lin(r)?).ok_or(Unsupported)?;
                self.le(d, pos)
            }
            Expr::Bin(BinOp::Lt, l, r) => {
                let d = self.lin(l)?.sub(&self.lin(r)?).ok_or(Unsupported)?;
                self.le(d.add(&Lin::constant(1)).ok_or(Unsupported)?, pos)
            }
            Expr::Bin(BinOp::Eq, l, r) => match l.sort() {
                Sort::Bool => {
                    let (lt, lf) = (self.formula(l, true)?, self.formula(l, false)?);
                    let (rt, rf) = (self.formula(r, true)?, self.formula(r, false)?);
                    if pos {
                        F::Or(vec![F::And(vec![lt, rt]), F::And(vec![lf, rf])])
                    } else {
                        F::Or(vec![F::And(vec![lt, rf]), F::And(vec![lf, rt])])
                    }
                }
                Sort::Set => {
                    self.collect_points(l)?;
                    self.collect_points(r)?;
                    let witness = if pos {
                        None
                    } else {
                        let w = self.fresh_int();
                        Some(self.add_point(Lin::var(w)))
                    };
                    F::SetEq((**l).clone(), (**r).clone(), witness)
                }
                _ => {
                    let (a, b) = (self.lin(l)?, self.lin(r)?);
                    self.eq_lin(&a, &b, pos)?
                }
            },
            _ => return Err(Unsupported),
        })
    }

    /// Membership of point `p` in set term `t`, at polarity `pos`.
    fn mem(&mut self, p: usize, t: &Expr, pos: bool) -> Result<F, Unsupported> {
        Ok(match t {
            Expr::Var(v) => F::Lit(self.atom(Atom::Mem(p, v.clone())), pos),
            Expr::SetLit(es) => {
                let pl = self.points[p].clone();
                let mut parts = Vec::new();
                for x in es {
                    let xl = self.lin(x)?;
                    parts.push(self.eq_lin(&pl, &xl, pos)?);
                }
                if pos { F::Or(parts) } else { F::And(parts) }
            }
            Expr::Bin(BinOp::Union, l, r) => {
                let parts = vec![self.mem(p, l, pos)?, self.mem(p, r, pos)?];
                if pos { F::Or(parts) } else { F::And(parts) }
            }
            Expr::Ite(c, a, b) => {
                let x = F::And(vec![self.formula(c, true)?, self.mem(p, a, pos)?]);
                let y = F::And(vec![self.formula(c, false)?, self.mem(p, b, pos)?]);
                F::Or(vec![x, y])
            }
            _ => return Err(Unsupported),
        })
    }

    fn expand(&mut self, f: F) -> Result<F, Unsupported> {
        Ok(match f {
            F::And(fs) => F::And(fs.into_iter().map(|x| self.expand(x)).collect::<Result<_, _>>()?),
            F::Or(fs) => F::Or(fs.into_iter().map(|x| self.expand(x)).collect::<Result<_, _>>()?),
            F::SetEq(l, r, None) => {
                let mut parts = Vec::new();
                for p in 0..self.points.len() {
                    let a = F::Or(vec![self.mem(p, &l, false)?, self.mem(p, &r, true)?]);
                    let b = F::Or(vec![self.mem(p, &l, true)?, self.mem(p, &r, false)?]);
                    parts.push(a);
                    parts.push(b);
                }
                F::And(parts)
            }
            F::SetEq(l, r, Some(w)) => {
                let a = F::And(vec![self.mem(w, &l, true)?, self.mem(w, &r, false)?]);
                let b = F::And(vec![self.mem(w, &l, false)?, self.mem(w, &r, true)?]);
                F::Or(vec![a, b])
            }
            other => other,
        })
    }

    /// Encodes `e` (asserted true) with all side conditions; returns the
    /// root formula ready for clausification.
    pub fn encode(&mut self, e: &Expr) -> Result<F, Unsupported> {
        let root = self.formula(e, true)?;
        let root = self.expand(root)?;
        let mut parts = vec![root];
        // side constraints may themselves mention set equalities
        while !self.side.is_empty() {
            for s in std::mem::take(&mut self.side) {
                let s = self.expand(s)?;
                parts.push(s);
            }
        }
        let sets: Vec<Var> = self.set_vars.iter().cloned().collect();
        let n = self.points.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let (pi, pj) = (self.points[i].clone(), self.points[j].clone());
                for x in &sets {
                    let ne = self.eq_lin(&pi, &pj, false)?;
                    let mi = self.atom(Atom::Mem(i, x.clone()));
                    let mj = self.atom(Atom::Mem(j, x.clone()));
                    parts.push(F::Or(vec![ne.clone(), F::Lit(mi, false), F::Lit(mj, true)]));
                    parts.push(F::Or(vec![ne, F::Lit(mi, true), F::Lit(mj, false)]));
                }
            }
        }
        parts.extend(std::mem::take(&mut self.side));
        Ok(F::And(parts))
    }
}

/// Clausal form with Tseitin variables numbered after the atoms.
/// Literals are `±(var + 1)`.
pub struct Cnf {
    pub nvars: usize,
    pub clauses: Vec<Vec<i32>>,
}

pub fn clausify(root: &F, natoms: usize) -> Cnf {
    let mut cnf = Cnf {
        nvars: natoms,
        clauses: Vec::new(),
    };
    match tseitin(root, &mut cnf) {
        Ok(l) => cnf.clauses.push(vec![l]),
        Err(true) => {}
        Err(false) => cnf.clauses.push(vec![]),
    }
    cnf
}

fn lit(var: usize, pos: bool) -> i32 {
    let l = var as i32 + 1;
    if pos {
        l
    } else {
        -l
    }
}

/// Returns the literal standing for `f`, or `Err(b)` when `f` is constant.
fn tseitin(f: &F, cnf: &mut Cnf) -> Result<i32, bool> {
    match f {
        F::Const(b) => Err(*b),
        F::Lit(a, pos) => Ok(lit(*a, *pos)),
        F::And(fs) | F::Or(fs) => {
            let is_and = matches!(f, F::And(_));
            let mut kids = Vec::new();
            for x in fs {
                match tseitin(x, cnf) {
                    Ok(l) => kids.push(l),
                    Err(b) if b == is_and => {}
                    Err(b) => return Err(b),
                }
            }
            match kids.len() {
                0 => Err(is_and),
                1 => Ok(kids[0]),
                _ => {
                    let t = lit(cnf.nvars, true);
                    cnf.nvars += 1;
                    if is_and {
                        // t -> k_i ; (and k_i) -> t
                        for k in &kids {
                            cnf.clauses.push(vec![-t, *k]);
                        }
                        let mut big: Vec<i32> = kids.iter().map(|k| -k).collect();
                        big.push(t);
                        cnf.clauses.push(big);
                    } else {
                        for k in &kids {
                            cnf.clauses.push(vec![t, -k]);
                        }
                        let mut big = kids.clone();
                        big.push(-t);
                        cnf.clauses.push(big);
                    }
                    Ok(t)
                }
            }
        }
        F::SetEq(..) => unreachable!("set equalities are expanded before clausification"),
    }
}
