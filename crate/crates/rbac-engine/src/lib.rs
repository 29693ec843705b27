//! A transactional role-based access control engine.
//!
//! The crate is layered: a versioned fact store of thirteen relations at the
//! bottom ([`store`]), the ANSI-style engine operations and constraint
//! checks above it ([`engine`]), a maintained hierarchy closure ([`closure`]),
//! a positive Datalog evaluator over the same relations ([`rules`]), and
//! exact administrative optimizers and planners on top ([`admin`]).
//!
//! Every mutation is a transaction: it commits as one new immutable state
//! version or leaves the store untouched. All derived structures (closure
//! index, rule fixpoints, plans) are functions of committed versions.

pub mod admin;
pub mod closure;
pub mod engine;
pub mod error;
pub mod rules;
pub mod store;

pub use admin::{
    minimize_roles, minimize_with_hierarchy, AccessMatrix, ActionKind, AdminAction, AdminPlan,
    MinimizeObjective, PlannerOptions, RoleDecomposition,
};
pub use closure::ClosureIndex;
pub use engine::{Components, Engine, Permission, SodFlavor};
pub use error::{RbacError, Witness};
pub use store::{
    CommitCheck, CommitDelta, EntityKind, FactStore, FieldValue, Rel, State, StateVersion,
    Transaction, Tuple,
};
