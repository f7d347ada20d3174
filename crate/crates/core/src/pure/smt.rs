//! Optional external prover speaking SMT-LIB2 over stdin/stdout.
//!
//! `BOSSL_SMT` holds the command line, e.g. `z3 -in`. Queries mentioning
//! sets are not sent; the built-in procedure handles them alone.

use std::io::Write;
use std::process::{Command, Stdio};

use crate::logic::expr::{BinOp, Expr, Sort, Var};

#[derive(Clone, Debug)]
pub struct SmtBackend {
    program: String,
    args: Vec<String>,
}

fn smt_name(v: &Var) -> String {
    format!("|{}|", v.name())
}

fn term(e: &Expr) -> Option<String> {
    Some(match e {
        Expr::Int(n) if *n < 0 => format!("(- {})", -(*n as i128)),
        Expr::Int(n) => n.to_string(),
        Expr::Bool(b) => b.to_string(),
        Expr::Mut => "1".into(),
        Expr::Imm => "0".into(),
        Expr::Var(v) if v.sort() == Sort::Set => return None,
        Expr::Var(v) => smt_name(v),
        Expr::SetLit(_) => return None,
        Expr::Not(x) => format!("(not {})", term(x)?),
        Expr::Ite(c, t, f) => format!("(ite {} {} {})", term(c)?, term(t)?, term(f)?),
        Expr::Bin(op, l, r) => {
            let o = match op {
                BinOp::Add => "+",
                BinOp::Sub => "-",
                BinOp::Eq => "=",
                BinOp::Le => "<=",
                BinOp::Lt => "<",
                BinOp::And => "and",
                BinOp::Or => "or",
                BinOp::Union => return None,
            };
            format!("({o} {} {})", term(l)?, term(r)?)
        }
    })
}

/// SMT-LIB2 script asserting `e`, or `None` outside the supported fragment.
pub fn script(e: &Expr) -> Option<String> {
    let body = term(e)?;
    let mut s = String::from("(set-logic QF_LIA)\n");
    for v in e.vars() {
        match v.sort() {
            Sort::Bool => s.push_str(&format!("(declare-const {} Bool)\n", smt_name(&v))),
            Sort::Perm => {
                let n = smt_name(&v);
                s.push_str(&format!("(declare-const {n} Int)\n(assert (and (<= 0 {n}) (<= {n} 1)))\n"));
            }
            Sort::Set => return None,
            _ => s.push_str(&format!("(declare-const {} Int)\n", smt_name(&v))),
        }
    }
    s.push_str(&format!("(assert {body})\n(check-sat)\n(exit)\n"));
    Some(s)
}

impl SmtBackend {
    pub fn new(cmdline: &str) -> Option<SmtBackend> {
        let mut parts = cmdline.split_whitespace().map(String::from);
        let program = parts.next()?;
        Some(SmtBackend {
            program,
            args: parts.collect(),
        })
    }

    pub fn from_env() -> Option<SmtBackend> {
        std::env::var("BOSSL_SMT").ok().and_then(|s| SmtBackend::new(&s))
    }

    /// `Some(true)` for sat, `Some(false)` for unsat, `None` when the query
    /// is unsupported or the subprocess does not answer.
    pub fn check_sat(&self, e: &Expr) -> Option<bool> {
        let input = script(e)?;
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .ok()?;
        child.stdin.take()?.write_all(input.as_bytes()).ok()?;
        let out = child.wait_with_output().ok()?;
        let text = String::from_utf8_lossy(&out.stdout);
        match text.lines().map(str::trim).find(|l| !l.is_empty())? {
            "sat" => Some(true),
            "unsat" => Some(false),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn script_declares_and_bounds_permissions() {
        let a = Expr::Var(Var::new("a", Sort::Perm));
        let s = script(&Expr::eq(a, Expr::Mut)).unwrap();
        assert!(s.contains("(declare-const |a| Int)"));
        assert!(s.contains("(assert (= |a| 1))"));
    }

    #[test]
    fn sets_are_not_sent() {
        let s = Expr::Var(Var::new("S", Sort::Set));
        assert!(script(&Expr::eq(s, Expr::SetLit(vec![]))).is_none());
    }
}
