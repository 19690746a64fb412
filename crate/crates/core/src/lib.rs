//! Session-typed process calculus toolkit: abstract syntax, type checker,
//! two reference rewriters (plain and buffered), and the session abstract
//! machine in sequential and concurrent form.

pub mod cll;
pub mod cllb;
pub mod congruence;
pub mod frontend;
pub mod sam;
pub mod syntax;
pub mod trace;
pub mod typecheck;

pub use syntax::{IntExpr, Label, Name, NameGen, Polarity, Process, Queue, QueueValue, SessionType, Side};
