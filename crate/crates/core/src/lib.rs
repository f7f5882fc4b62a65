//! Executable rely/guarantee specifications for shared-state concurrent
//! processes, with layered fault-tolerant conditions and error injectors.

pub mod checker;
pub mod cli;
pub mod corpus;
pub mod diagram;
pub mod domain;
pub mod dsl;
pub mod eval;
pub mod expr;
pub mod implies;
pub mod model;
pub mod program;
pub mod runtime;
pub mod span;
pub mod typecheck;
