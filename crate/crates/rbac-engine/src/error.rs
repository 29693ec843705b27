//! Error type shared by the store, the engine operations, the rule
//! evaluator, and the administrative search routines.
//!
//! Every variant carries a stable machine-readable code (see [`RbacError::code`])
//! so that script runners and audit logs can render failures uniformly.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::store::{EntityKind, Tuple};

/// Witness tuples accompanying a constraint violation. Always drawn from the
/// candidate post-state that was rejected, so a verifier can re-check them.
pub type Witness = BTreeSet<Tuple>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RbacError {
    #[error("a transaction is already open")]
    NestedTransaction,

    #[error("unknown relation {name}")]
    UnknownRelation { name: String },

    #[error("tuple for {relation} does not match its declared schema: {detail}")]
    ArityMismatch { relation: String, detail: String },

    #[error("tuple {tuple} references a {kind} named {name} that does not exist")]
    DanglingReference {
        tuple: String,
        kind: EntityKind,
        name: String,
    },

    #[error("constraint {constraint} violated; witness {}", render_witness(witness))]
    ConstraintViolation {
        constraint: String,
        witness: Witness,
    },

    #[error("{kind} {name} already exists")]
    DuplicateEntity { kind: EntityKind, name: String },

    #[error("no {kind} named {name}")]
    UnknownEntity { kind: EntityKind, name: String },

    #[error("assignment already present: {detail}")]
    DuplicateAssignment { detail: String },

    #[error("assignment not present: {detail}")]
    MissingAssignment { detail: String },

    #[error("session {session} belongs to {owner}, not {claimed}")]
    SessionOwnerMismatch {
        session: String,
        owner: String,
        claimed: String,
    },

    #[error("user {user} is not authorized for role {role}")]
    NotAuthorized { user: String, role: String },

    #[error("no session named {name}")]
    UnknownSession { name: String },

    #[error("adding the edge would close the cycle {}", path.join(" -> "))]
    CycleDetected { path: Vec<String> },

    #[error("inheritance edge {ascendant} -> {descendant} already present")]
    DuplicateEdge {
        ascendant: String,
        descendant: String,
    },

    #[error("inheritance edge {ascendant} -> {descendant} not present")]
    MissingEdge {
        ascendant: String,
        descendant: String,
    },

    #[error("cardinality {cardinality} out of range for a role set of size {set_size}")]
    BadCardinality { cardinality: u32, set_size: usize },

    #[error("head variable {variable} of rule {rule} does not occur in the body")]
    UnboundHeadVariable { rule: String, variable: String },

    #[error("rule {rule} has an empty body; facts may only come from the EDB")]
    EmptyRuleBody { rule: String },

    #[error("no plan exists over the configured action alphabet")]
    NoPlan,

    #[error("search exhausted the depth bound {bound} without proving absence")]
    DepthExceeded { bound: usize },

    #[error("no exact decomposition within the role cap {cap}")]
    CapExceeded { cap: usize },

    #[error("parse error at line {line}, column {column}: expected {expected}")]
    Parse {
        line: usize,
        column: usize,
        expected: String,
    },

    #[error("no committed version {version}")]
    UnknownVersion { version: u64 },

    #[error("operation {operation} requires the {component} component, which is disabled")]
    ComponentDisabled {
        operation: String,
        component: String,
    },
}

fn render_witness(witness: &Witness) -> String {
    let parts: Vec<String> = witness.iter().map(|t| t.render()).collect();
    format!("{{{}}}", parts.join(","))
}

impl RbacError {
    /// Stable identifier for the error class, independent of the message text.
    pub fn code(&self) -> &'static str {
        match self {
            RbacError::NestedTransaction => "NESTED_TRANSACTION",
            RbacError::UnknownRelation { .. } => "UNKNOWN_RELATION",
            RbacError::ArityMismatch { .. } => "ARITY_MISMATCH",
            RbacError::DanglingReference { .. } => "DANGLING_REFERENCE",
            RbacError::ConstraintViolation { .. } => "CONSTRAINT_VIOLATION",
            RbacError::DuplicateEntity { .. } => "DUPLICATE_ENTITY",
            RbacError::UnknownEntity { .. } => "UNKNOWN_ENTITY",
            RbacError::DuplicateAssignment { .. } => "DUPLICATE_ASSIGNMENT",
            RbacError::MissingAssignment { .. } => "MISSING_ASSIGNMENT",
            RbacError::SessionOwnerMismatch { .. } => "SESSION_OWNER_MISMATCH",
            RbacError::NotAuthorized { .. } => "NOT_AUTHORIZED",
            RbacError::UnknownSession { .. } => "UNKNOWN_SESSION",
            RbacError::CycleDetected { .. } => "CYCLE_DETECTED",
            RbacError::DuplicateEdge { .. } => "DUPLICATE_EDGE",
            RbacError::MissingEdge { .. } => "MISSING_EDGE",
            RbacError::BadCardinality { .. } => "BAD_CARDINALITY",
            RbacError::UnboundHeadVariable { .. } => "UNBOUND_HEAD_VARIABLE",
            RbacError::EmptyRuleBody { .. } => "EMPTY_RULE_BODY",
            RbacError::NoPlan => "NO_PLAN",
            RbacError::DepthExceeded { .. } => "DEPTH_EXCEEDED",
            RbacError::CapExceeded { .. } => "CAP_EXCEEDED",
            RbacError::Parse { .. } => "PARSE_ERROR",
            RbacError::UnknownVersion { .. } => "UNKNOWN_VERSION",
            RbacError::ComponentDisabled { .. } => "UNKNOWN_VERB",
        }
    }
}
