//! Concrete execution, assertion satisfaction and randomized validation.

pub mod machine;
pub mod model;
pub mod sat;
pub mod validate;

pub use machine::{bl, Fault, Heap, Machine};
pub use model::{random_model, Model};
pub use sat::{satisfies, witness, DEFAULT_DEPTH};
pub use validate::{check_ro_preservation, Report};
