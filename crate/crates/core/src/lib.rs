//! Symbolic analysis of strong secrecy for cryptographic protocols in the
//! applied pi calculus: terms and rewriting, frames, deduction and static
//! equivalence, a bounded process semantics, and a syntactic secrecy checker
//! whose verdict transfers to strong secrecy.

pub mod deduce;
pub mod equiv;
pub mod explore;
pub mod frame;
pub mod passive;
pub mod process;
pub mod rewrite;
pub mod secrecy;
pub mod syntax;
pub mod term;
pub mod wellformed;
