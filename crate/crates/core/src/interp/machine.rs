//! Small-step execution of procedures over a concrete heap.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::logic::eval::{eval, Val, Valuation};
use crate::logic::expr::{Expr, Var};
use crate::logic::program::{Procedure, Stmt};
use crate::parser::program::print_stmt_block;

/// Locations and the integers stored at them.
pub type Heap = BTreeMap<i64, i64>;

/// Address of the meta-data cell holding the size of the block at `l`.
pub fn bl(l: i64) -> i64 {
    l - 1
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Fault {
    OutOfDomain(i64),
    NotABlock(i64),
    UnknownProcedure(String),
    Error,
    /// An expression could not be evaluated (unbound or ill-sorted).
    Stuck(String),
    StepLimit,
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fault::OutOfDomain(l) => write!(f, "access outside the heap at {l}"),
            Fault::NotABlock(l) => write!(f, "free of {l}, which is not a block"),
            Fault::UnknownProcedure(p) => write!(f, "call to unknown procedure {p}"),
            Fault::Error => f.write_str("reached error"),
            Fault::Stuck(e) => write!(f, "cannot evaluate {e}"),
            Fault::StepLimit => f.write_str("step limit exhausted"),
        }
    }
}

impl std::error::Error for Fault {}

struct Frame {
    stack: Valuation,
    /// Remaining statements, next one last.
    pending: Vec<Stmt>,
}

pub struct Machine<'a> {
    procs: HashMap<Arc<str>, &'a Procedure>,
    pub heap: Heap,
    next: i64,
    frames: Vec<Frame>,
    /// Executed statements, most recent last.
    pub trace: Vec<String>,
    /// Addresses written by stores, in execution order.
    pub stores: Vec<i64>,
    pub steps: usize,
    pub max_steps: usize,
}

impl<'a> Machine<'a> {
    pub fn new(procs: &'a [Procedure], heap: Heap) -> Machine<'a> {
        let next = heap.keys().next_back().map_or(1, |m| m + 2).max(1);
        Machine {
            procs: procs.iter().map(|p| (p.name.clone(), p)).collect(),
            heap,
            next,
            frames: Vec::new(),
            trace: Vec::new(),
            stores: Vec::new(),
            steps: 0,
            max_steps: 1_000_000,
        }
    }

    /// Runs `name` on `args` to completion.
    pub fn run(&mut self, name: &str, args: &[i64]) -> Result<(), Fault> {
        let call = Stmt::Call {
            name: name.into(),
            args: args.iter().map(|a| Expr::Int(*a)).collect(),
        };
        self.frames.push(Frame {
            stack: Valuation::new(),
            pending: vec![call],
        });
        while !self.frames.is_empty() {
            self.step()?;
        }
        Ok(())
    }

    fn value(&self, e: &Expr) -> Result<Val, Fault> {
        let frame = self.frames.last().expect("a frame is active");
        eval(e, &frame.stack).ok_or_else(|| Fault::Stuck(e.to_string()))
    }

    fn int(&self, e: &Expr) -> Result<i64, Fault> {
        self.value(e)?.as_int().ok_or_else(|| Fault::Stuck(e.to_string()))
    }

    fn addr(&self, base: &Var, offset: usize) -> Result<i64, Fault> {
        Ok(self.int(&Expr::var(base))? + offset as i64)
    }

    fn bind(&mut self, v: &Var, x: i64) {
        let frame = self.frames.last_mut().expect("a frame is active");
        frame.stack.insert(v.clone(), Val::Int(x));
    }

    /// Performs one transition; pops the frame once it has no work left.
    pub fn step(&mut self) -> Result<(), Fault> {
        self.steps += 1;
        if self.steps > self.max_steps {
            return Err(Fault::StepLimit);
        }
        let Some(frame) = self.frames.last_mut() else {
            return Ok(());
        };
        let Some(stmt) = frame.pending.pop() else {
            self.frames.pop();
            return Ok(());
        };
        match &stmt {
            Stmt::Seq(_) | Stmt::Skip => {}
            Stmt::If { cond, .. } => self.trace.push(format!("if ({cond})")),
            s => self.trace.push(print_stmt_block(s).trim().to_string()),
        }
        match stmt {
            Stmt::Skip => {}
            Stmt::Error => return Err(Fault::Error),
            Stmt::Seq(parts) => {
                let frame = self.frames.last_mut().expect("a frame is active");
                frame.pending.extend(parts.into_iter().rev());
            }
            Stmt::If { cond, then, els } => {
                let c = self.value(&cond)?.as_bool().ok_or_else(|| Fault::Stuck(cond.to_string()))?;
                let frame = self.frames.last_mut().expect("a frame is active");
                frame.pending.push(if c { *then } else { *els });
            }
            Stmt::Load { to, base, offset } => {
                let l = self.addr(&base, offset)?;
                let x = *self.heap.get(&l).ok_or(Fault::OutOfDomain(l))?;
                self.bind(&to, x);
            }
            Stmt::Store { base, offset, value } => {
                let l = self.addr(&base, offset)?;
                let x = self.int(&value)?;
                match self.heap.get_mut(&l) {
                    Some(cell) => {
                        *cell = x;
                        self.stores.push(l);
                    }
                    None => return Err(Fault::OutOfDomain(l)),
                }
            }
            Stmt::Malloc { to, size } => {
                let l = self.next + 1;
                self.heap.insert(bl(l), size as i64);
                for i in 0..size as i64 {
                    self.heap.insert(l + i, 0);
                }
                self.next = l + size as i64;
                self.bind(&to, l);
            }
            Stmt::Free(x) => {
                let l = self.int(&Expr::var(&x))?;
                let n = *self.heap.get(&bl(l)).ok_or(Fault::NotABlock(l))?;
                for a in l..l + n {
                    if self.heap.remove(&a).is_none() {
                        return Err(Fault::OutOfDomain(a));
                    }
                }
                self.heap.remove(&bl(l));
            }
            Stmt::Call { name, args } => {
                let callee = *self
                    .procs
                    .get(&name)
                    .ok_or_else(|| Fault::UnknownProcedure(name.to_string()))?;
                let mut stack = Valuation::new();
                for (f, a) in callee.formals.iter().zip(&args) {
                    stack.insert(f.clone(), self.value(a)?);
                }
                self.frames.push(Frame {
                    stack,
                    pending: vec![callee.body.clone()],
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;

    fn run(src: &str, name: &str, heap: Heap, args: &[i64]) -> Result<Heap, Fault> {
        let procs = parse_program(src).unwrap();
        let mut m = Machine::new(&procs, heap);
        m.run(name, args)?;
        Ok(m.heap)
    }

    #[test]
    fn write_updates_an_allocated_cell() {
        let h = run("void f(loc x) { *x = 7; }", "f", Heap::from([(5, 1)]), &[5]).unwrap();
        assert_eq!(h, Heap::from([(5, 7)]));
    }

    #[test]
    fn free_removes_meta_and_cells() {
        let heap = Heap::from([(9, 2), (10, 1), (11, 2), (20, 4)]);
        let h = run("void f(loc x) { free(x); }", "f", heap, &[10]).unwrap();
        assert_eq!(h, Heap::from([(20, 4)]));
    }

    #[test]
    fn faults() {
        let read = run("void f(loc x) { let y = *x; }", "f", Heap::new(), &[3]);
        assert_eq!(read, Err(Fault::OutOfDomain(3)));
        let free = run("void f(loc x) { free(x); }", "f", Heap::from([(3, 0)]), &[3]);
        assert_eq!(free, Err(Fault::NotABlock(3)));
        let call = run("void f(loc x) { g(x); }", "f", Heap::new(), &[3]);
        assert_eq!(call, Err(Fault::UnknownProcedure("g".into())));
        let err = run("void f(loc x) { error; }", "f", Heap::new(), &[3]);
        assert_eq!(err, Err(Fault::Error));
    }

    #[test]
    fn malloc_records_size_before_the_block() {
        let h = run("void f(loc r) { let y = malloc(2); *r = y; }", "f", Heap::from([(1, 0)]), &[1]).unwrap();
        let y = h[&1];
        assert_eq!(h[&bl(y)], 2);
        assert!(h.contains_key(&y) && h.contains_key(&(y + 1)));
        assert!(y - 1 > 1, "block must not overlap existing cells");
    }

    #[test]
    fn recursion_through_calls() {
        let src = "void len(loc x, loc r) { if (x == 0) { } else { let n = *(x + 1); let c = *r; *r = c + 1; len(n, r); } }";
        let heap = Heap::from([(1, 0), (10, 5), (11, 20), (20, 6), (21, 0)]);
        let h = run(src, "len", heap, &[10, 1]).unwrap();
        assert_eq!(h[&1], 2);
    }
}
