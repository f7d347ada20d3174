pub mod bench;
pub mod emit;
pub mod engine;
pub mod interp;
pub mod logic;
pub mod oracle;
pub mod parser;
pub mod pure;
pub mod unify;
