//! The policy shell: a line-oriented command language over the RBAC engine,
//! a batch script runner with audit logging, and a REPL.

pub mod command;
pub mod repl;
pub mod runner;

pub use command::{parse_line, parse_script, Command, ScriptLine};
pub use runner::{render_outcome, Outcome, Runner, RunnerOptions, ScriptOutput};
