//! Linear integer constraints `Σ aᵢxᵢ + c ≤ 0`, decided by Fourier–Motzkin
//! elimination with integer tightening and model reconstruction.

use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lin {
    pub coeffs: BTreeMap<usize, i64>,
    pub constant: i64,
}

impl Lin {
    pub fn constant(c: i64) -> Lin {
        Lin {
            coeffs: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn var(i: usize) -> Lin {
        Lin {
            coeffs: [(i, 1)].into(),
            constant: 0,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, other: &Lin) -> Option<Lin> {
        let mut out = self.clone();
        for (v, a) in &other.coeffs {
            let e = out.coeffs.entry(*v).or_insert(0);
            *e = e.checked_add(*a)?;
            if *e == 0 {
                out.coeffs.remove(v);
            }
        }
        out.constant = out.constant.checked_add(other.constant)?;
        Some(out)
    }

    pub fn scale(&self, k: i64) -> Option<Lin> {
        if k == 0 {
            return Some(Lin::default());
        }
        let mut coeffs = BTreeMap::new();
        for (v, a) in &self.coeffs {
            coeffs.insert(*v, a.checked_mul(k)?);
        }
        Some(Lin {
            coeffs,
            constant: self.constant.checked_mul(k)?,
        })
    }

    pub fn sub(&self, other: &Lin) -> Option<Lin> {
        self.add(&other.scale(-1)?)
    }

    pub fn coeff(&self, v: usize) -> i64 {
        self.coeffs.get(&v).copied().unwrap_or(0)
    }

    pub fn eval(&self, model: &BTreeMap<usize, i64>) -> Option<i64> {
        let mut acc = self.constant as i128;
        for (v, a) in &self.coeffs {
            acc += (*a as i128) * (*model.get(v).unwrap_or(&0) as i128);
        }
        i64::try_from(acc).ok()
    }

    /// Divides by the gcd of the coefficients, rounding the constant so the
    /// integer solutions are unchanged.
    fn tighten(mut self) -> Lin {
        let g = self.coeffs.values().fold(0i64, |g, a| gcd(g, a.abs()));
        if g > 1 {
            for a in self.coeffs.values_mut() {
                *a /= g;
            }
            self.constant = div_ceil(self.constant, g);
        }
        self
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn div_floor(a: i64, b: i64) -> i64 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn div_ceil(a: i64, b: i64) -> i64 {
    -div_floor(-a, b)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LiaResult {
    Unsat,
    Sat(BTreeMap<usize, i64>),
    Unknown,
}

const ROW_LIMIT: usize = 4000;

/// Normalizes a row set; `Err(())` on a ground contradiction.
fn normalize(rows: Vec<Lin>) -> Result<Vec<Lin>, ()> {
    let mut set = BTreeSet::new();
    for r in rows {
        let r = r.tighten();
        if r.is_constant() {
            if r.constant > 0 {
                return Err(());
            }
            continue;
        }
        set.insert(r);
    }
    Ok(set.into_iter().collect())
}

/// Decides satisfiability of `rows` (each `row ≤ 0`) over the integers.
/// `Unsat` is exact for the rationals and hence sound for integers; `Sat`
/// always carries a verified integer model.
pub fn check(rows: &[Lin]) -> LiaResult {
    let mut cur = match normalize(rows.to_vec()) {
        Ok(r) => r,
        Err(()) => return LiaResult::Unsat,
    };
    let mut stages: Vec<(usize, Vec<Lin>)> = Vec::new();
    loop {
        let vars: BTreeSet<usize> = cur.iter().flat_map(|r| r.coeffs.keys().copied()).collect();
        let Some(x) = vars
            .iter()
            .copied()
            .min_by_key(|v| {
                let p = cur.iter().filter(|r| r.coeff(*v) > 0).count();
                let n = cur.iter().filter(|r| r.coeff(*v) < 0).count();
                (p * n, *v)
            })
        else {
            break;
        };
        let (with, rest): (Vec<Lin>, Vec<Lin>) = cur.into_iter().partition(|r| r.coeff(x) != 0);
        let mut next = rest;
        for p in with.iter().filter(|r| r.coeff(x) > 0) {
            for n in with.iter().filter(|r| r.coeff(x) < 0) {
                let (ap, an) = (p.coeff(x), -n.coeff(x));
                let combined = match (p.scale(an), n.scale(ap)) {
                    (Some(a), Some(b)) => a.add(&b),
                    _ => None,
                };
                match combined {
                    Some(c) => next.push(c),
                    None => return LiaResult::Unknown,
                }
            }
        }
        stages.push((x, with));
        cur = match normalize(next) {
            Ok(r) => r,
            Err(()) => return LiaResult::Unsat,
        };
        if cur.len() > ROW_LIMIT {
            return LiaResult::Unknown;
        }
    }
    let mut model = BTreeMap::new();
    for (x, rows) in stages.iter().rev() {
        let (mut lo, mut hi) = (i64::MIN, i64::MAX);
        for r in rows {
            let a = r.coeff(*x);
            let mut rest = r.clone();
            rest.coeffs.remove(x);
            let Some(rv) = rest.eval(&model) else {
                return LiaResult::Unknown;
            };
            if a > 0 {
                hi = hi.min(div_floor(-rv, a));
            } else {
                lo = lo.max(div_ceil(rv, -a));
            }
        }
        if lo > hi {
            return LiaResult::Unknown;
        }
        model.insert(*x, 0i64.clamp(lo, hi));
    }
    if rows.iter().all(|r| r.eval(&model).is_some_and(|v| v <= 0)) {
        LiaResult::Sat(model)
    } else {
        LiaResult::Unknown
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(cs: &[(usize, i64)], c: i64) -> Lin {
        Lin {
            coeffs: cs.iter().copied().filter(|(_, a)| *a != 0).collect(),
            constant: c,
        }
    }

    #[test]
    fn simple_bounds() {
        // x <= 3, x >= 1
        let r = check(&[row(&[(0, 1)], -3), row(&[(0, -1)], 1)]);
        match r {
            LiaResult::Sat(m) => assert!((1..=3).contains(&m[&0])),
            other => panic!("{other:?}"),
        }
        // x <= 0, x >= 1
        assert_eq!(check(&[row(&[(0, 1)], 0), row(&[(0, -1)], 1)]), LiaResult::Unsat);
    }

    #[test]
    fn tightening_catches_parity_gap() {
        // 2x = 1 has no integer solution
        let r = check(&[row(&[(0, 2)], -1), row(&[(0, -2)], 1)]);
        assert_eq!(r, LiaResult::Unsat);
    }

    #[test]
    fn chained_equalities() {
        // x = y, y = z + 1, x <= z
        let rows = [
            row(&[(0, 1), (1, -1)], 0),
            row(&[(0, -1), (1, 1)], 0),
            row(&[(1, 1), (2, -1)], -1),
            row(&[(1, -1), (2, 1)], 1),
            row(&[(0, 1), (2, -1)], 0),
        ];
        assert_eq!(check(&rows), LiaResult::Unsat);
    }
}
