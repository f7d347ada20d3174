//! Terms, assertions, specifications and programs.

pub mod eval;
pub mod expr;
pub mod heap;
pub mod program;
pub mod spec;
pub mod subst;
pub mod wf;

pub use expr::{BinOp, Expr, Sort, Var};
pub use heap::{Assertion, Heaplet, HeapletKind, Perm, UnfoldTag};
pub use program::{Procedure, Stmt};
pub use spec::{Clause, Context, FreshNames, FunctionSpec, PredicateDef, SynthGoal};
pub use subst::{Subst, SubstError};
