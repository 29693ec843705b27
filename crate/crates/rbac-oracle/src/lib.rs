//! Definition-first reference implementations for cross-checking the engine:
//! closure by Floyd-Warshall, access decisions by direct unfolding,
//! constraints by full rescans, optimization and planning by exhaustive
//! enumeration, and snapshot replay by folding commit deltas.
//!
//! Everything here favors obviousness over speed and shares no algorithmic
//! code with the engine's maintained indexes or searches; only the plain data
//! types (states, tuples, actions) are common vocabulary. Oracles are meant
//! for tests and the CLI's hidden verification flag, not production use, and
//! several are exponential by design.

pub mod access;
pub mod closure;
pub mod constraints;
pub mod decompose;
pub mod plan;
pub mod replay;

pub use access::{oracle_accessible_permissions, oracle_check_access, oracle_user_permissions};
pub use closure::{oracle_closure, oracle_closure_of, state_edges, state_roles};
pub use constraints::{oracle_constraint_violations, Violation};
pub use decompose::{oracle_flat_best, oracle_hier_best, oracle_min_role_count};
pub use plan::{oracle_shortest_plan, PlanQuery, PlanSearch};
pub use replay::oracle_replay_snapshot;
