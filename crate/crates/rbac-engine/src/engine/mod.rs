//! The RBAC engine: ANSI-style operations layered over the fact store.
//!
//! Every mutating operation runs as exactly one store transaction. The
//! engine derives the hypothetical post-state closure for commit-time
//! checks, keeps the committed closure history alongside the store versions,
//! and dispatches access-decision semantics on the enabled component set.

mod constraints;
mod core;
mod hierarchy;

pub use constraints::SodFlavor;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::closure::ClosureIndex;
use crate::error::{RbacError, Witness};
use crate::store::{
    CommitCheck, FactStore, FieldValue, Rel, State, StateVersion, Transaction, Tuple,
};

/// Which optional component stacks are enforced. Core RBAC is always on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Components {
    pub hierarchy: bool,
    pub ssd: bool,
    pub dsd: bool,
}

impl Default for Components {
    fn default() -> Self {
        Components {
            hierarchy: true,
            ssd: true,
            dsd: true,
        }
    }
}

impl Components {
    pub fn core_only() -> Components {
        Components {
            hierarchy: false,
            ssd: false,
            dsd: false,
        }
    }

    /// Parses a `PRAGMA components` token list. `core` is accepted and
    /// implied; unknown tokens are rejected.
    pub fn from_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Result<Components, String> {
        let mut c = Components::core_only();
        for tok in tokens {
            match tok {
                "core" => {}
                "hierarchy" => c.hierarchy = true,
                "ssd" => c.ssd = true,
                "dsd" => c.dsd = true,
                other => return Err(other.to_string()),
            }
        }
        Ok(c)
    }
}

/// An operation-object pair.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Permission {
    pub operation: String,
    pub object: String,
}

impl Permission {
    pub fn new(operation: impl Into<String>, object: impl Into<String>) -> Permission {
        Permission {
            operation: operation.into(),
            object: object.into(),
        }
    }
}

impl fmt::Display for Permission {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.operation, self.object)
    }
}

impl FromStr for Permission {
    type Err = ();

    /// Parses the `operation:object` surface form.
    fn from_str(s: &str) -> Result<Permission, ()> {
        let (op, ob) = s.split_once(':').ok_or(())?;
        if op.is_empty() || ob.is_empty() || ob.contains(':') {
            return Err(());
        }
        Ok(Permission::new(op, ob))
    }
}

/// The transactional RBAC engine.
#[derive(Debug, Clone)]
pub struct Engine {
    store: FactStore,
    components: Components,
    closures: Vec<Arc<ClosureIndex>>,
}

impl Default for Engine {
    fn default() -> Self {
        Engine::new()
    }
}

impl Engine {
    /// An empty engine with every component enabled.
    pub fn new() -> Engine {
        Engine::with_components(Components::default())
    }

    pub fn with_components(components: Components) -> Engine {
        Engine {
            store: FactStore::new(),
            components,
            closures: vec![Arc::new(ClosureIndex::default())],
        }
    }

    pub fn components(&self) -> Components {
        self.components
    }

    /// Reconfigures enabled components. Existing state is untouched; the new
    /// semantics apply from the next operation on.
    pub fn set_components(&mut self, components: Components) {
        self.components = components;
    }

    pub fn version(&self) -> StateVersion {
        self.store.head_version()
    }

    pub fn state(&self) -> &State {
        self.store.head()
    }

    pub fn state_at(&self, version: StateVersion) -> Result<&State, RbacError> {
        self.store.state_at(version)
    }

    pub fn store(&self) -> &FactStore {
        &self.store
    }

    /// The maintained reflexive-transitive closure at a committed version
    /// (default: head). Always equal to a from-scratch recomputation.
    pub fn closure_at(&self, version: Option<StateVersion>) -> Result<&ClosureIndex, RbacError> {
        let v = version.unwrap_or_else(|| self.version());
        self.closures
            .get(v as usize)
            .map(|a| a.as_ref())
            .ok_or(RbacError::UnknownVersion { version: v })
    }

    pub fn closure(&self) -> &ClosureIndex {
        self.closures.last().expect("closure history matches versions")
    }

    /// A new engine whose version 0 is this engine's state at `version`
    /// (default: head). Component configuration carries over; history does
    /// not.
    pub fn fork_at(&self, version: Option<StateVersion>) -> Result<Engine, RbacError> {
        let v = version.unwrap_or_else(|| self.version());
        let state = self.state_at(v)?.clone();
        let closure = self.closure_at(Some(v))?.clone();
        Ok(Engine {
            store: FactStore::from_state(state),
            components: self.components,
            closures: vec![Arc::new(closure)],
        })
    }

    /// Renders the head state in snapshot format.
    pub fn snapshot_text(&self) -> String {
        self.state().snapshot_text()
    }

    /// Replaces all state with a parsed snapshot, which must satisfy every
    /// check the engine would enforce at commit time. On error the engine is
    /// left unchanged. The loaded state becomes version 0.
    pub fn load_snapshot_text(&mut self, text: &str) -> Result<(), RbacError> {
        let state = State::parse_snapshot(text)?;
        let closure = closure_of_state(&state);
        self.validate_full_state(&state, &closure)?;
        self.store = FactStore::from_state(state);
        self.closures = vec![Arc::new(closure)];
        Ok(())
    }

    fn validate_full_state(&self, state: &State, closure: &ClosureIndex) -> Result<(), RbacError> {
        let checks = self.build_checks(closure, TriggerSet::all());
        for check in &checks {
            if let Err((constraint, witness)) = check.check(state) {
                return Err(RbacError::ConstraintViolation { constraint, witness });
            }
        }
        Ok(())
    }

    // --- component gating ---

    pub(crate) fn require_hierarchy(&self, operation: &str) -> Result<(), RbacError> {
        if self.components.hierarchy {
            Ok(())
        } else {
            Err(RbacError::ComponentDisabled {
                operation: operation.to_string(),
                component: "hierarchy".to_string(),
            })
        }
    }

    pub(crate) fn require_sod(&self, flavor: SodFlavor, operation: &str) -> Result<(), RbacError> {
        let (on, name) = match flavor {
            SodFlavor::Ssd => (self.components.ssd, "ssd"),
            SodFlavor::Dsd => (self.components.dsd, "dsd"),
        };
        if on {
            Ok(())
        } else {
            Err(RbacError::ComponentDisabled {
                operation: operation.to_string(),
                component: name.to_string(),
            })
        }
    }

    // --- transaction plumbing ---

    /// Runs one mutating operation as a transaction: stage deltas in `f`,
    /// then validate and commit. Any error, staged or commit-time, leaves
    /// the committed state untouched.
    pub(crate) fn run_tx(
        &mut self,
        f: impl FnOnce(&Engine, &mut Transaction) -> Result<(), RbacError>,
    ) -> Result<StateVersion, RbacError> {
        let mut tx = self.store.begin()?;
        match f(self, &mut tx) {
            Err(e) => {
                self.store.rollback(tx);
                Err(e)
            }
            Ok(()) => self.commit_tx(tx),
        }
    }

    fn commit_tx(&mut self, tx: Transaction) -> Result<StateVersion, RbacError> {
        let candidate = self.store.candidate_state(&tx);
        let closure = self.candidate_closure(&tx, &candidate);
        let triggers = TriggerSet::of(&tx);
        let version = {
            let checks = self.build_checks(&closure, triggers);
            let check_refs: Vec<&dyn CommitCheck> = checks.iter().map(|c| c.as_ref()).collect();
            self.store.commit(tx, &check_refs)?
        };
        self.closures.push(Arc::new(closure));
        debug_assert_eq!(self.closures.len() as u64, version + 1);
        Ok(version)
    }

    /// The closure of the hypothetical post-state. Pure edge/role insertions
    /// extend the head closure incrementally; any deletion touching the
    /// hierarchy falls back to a full recompute.
    fn candidate_closure(&self, tx: &Transaction, candidate: &State) -> ClosureIndex {
        let deletes_hierarchy = tx
            .deletes()
            .iter()
            .any(|t| matches!(t.relation, Rel::Rh | Rel::Role));
        if deletes_hierarchy {
            return closure_of_state(candidate);
        }
        let mut closure = self.closure().clone();
        for t in tx.inserts() {
            if t.relation == Rel::Role {
                closure = closure.with_role(t.fields[0].as_name().expect("role name"));
            }
        }
        for t in tx.inserts() {
            if t.relation == Rel::Rh {
                let asc = t.fields[0].as_name().expect("role name");
                let desc = t.fields[1].as_name().expect("role name");
                closure = closure.with_edge(asc, desc);
            }
        }
        closure
    }

    fn build_checks<'a>(
        &self,
        closure: &'a ClosureIndex,
        triggers: TriggerSet,
    ) -> Vec<Box<dyn CommitCheck + 'a>> {
        let hier_closure = self.components.hierarchy.then_some(closure);
        let mut checks: Vec<Box<dyn CommitCheck>> = Vec::new();
        if triggers.sod_shape {
            checks.push(Box::new(constraints::SodWellformedCheck));
        }
        if self.components.ssd && triggers.ssd {
            checks.push(Box::new(constraints::SsdCheck {
                closure: hier_closure,
            }));
        }
        if self.components.dsd && triggers.dsd {
            checks.push(Box::new(constraints::DsdCheck));
        }
        if triggers.sessions {
            checks.push(Box::new(constraints::SessionSoundnessCheck {
                closure: hier_closure,
            }));
        }
        checks
    }

    // --- shared helpers for the operation modules ---

    pub(crate) fn entity_exists(&self, kind: crate::store::EntityKind, name: &str) -> bool {
        self.store.head().entity_exists(kind, name)
    }

    /// Activation eligibility of `role` for `user` in a given state: direct
    /// assignment under core semantics, any assigned senior under hierarchy.
    pub(crate) fn eligible_in(
        &self,
        state: &State,
        closure: &ClosureIndex,
        user: &str,
        role: &str,
    ) -> bool {
        state.relation(Rel::Ua).any(|t| {
            t.fields[0].as_name() == Some(user) && {
                let assigned = t.fields[1].as_name().expect("role name");
                if self.components.hierarchy {
                    closure.geq(assigned, role)
                } else {
                    assigned == role
                }
            }
        })
    }

    /// Drops any staged-state session role that its session's owner is no
    /// longer eligible to activate. Called by operations that can shrink
    /// eligibility, so session soundness survives every cascade.
    pub(crate) fn prune_ineligible_session_roles(
        &self,
        tx: &mut Transaction,
    ) -> Result<(), RbacError> {
        let store = &self.store;
        let candidate = store.candidate_state(tx);
        let closure = self.candidate_closure(tx, &candidate);
        let mut doomed = Vec::new();
        for sr in candidate.relation(Rel::SessionRole) {
            let session = sr.fields[0].as_name().expect("session name");
            let role = sr.fields[1].as_name().expect("role name");
            let owner = candidate
                .relation(Rel::Session)
                .find(|t| t.fields[0].as_name() == Some(session))
                .and_then(|t| t.fields[1].as_name().map(str::to_string));
            let Some(owner) = owner else { continue };
            if !self.eligible_in(&candidate, &closure, &owner, role) {
                doomed.push(sr.clone());
            }
        }
        for t in doomed {
            store.delete(tx, t)?;
        }
        Ok(())
    }
}

/// Which commit checks a transaction's touched relations can affect.
struct TriggerSet {
    ssd: bool,
    dsd: bool,
    sod_shape: bool,
    sessions: bool,
}

impl TriggerSet {
    fn all() -> TriggerSet {
        TriggerSet {
            ssd: true,
            dsd: true,
            sod_shape: true,
            sessions: true,
        }
    }

    fn of(tx: &Transaction) -> TriggerSet {
        let t = |rel| tx.touches(rel);
        let hierarchy = t(Rel::Rh) || t(Rel::Role);
        TriggerSet {
            ssd: t(Rel::Ua) || t(Rel::SsdSet) || t(Rel::SsdRole) || hierarchy,
            dsd: t(Rel::SessionRole) || t(Rel::DsdSet) || t(Rel::DsdRole),
            sod_shape: t(Rel::SsdSet) || t(Rel::SsdRole) || t(Rel::DsdSet) || t(Rel::DsdRole),
            sessions: t(Rel::SessionRole) || t(Rel::Session) || t(Rel::Ua) || hierarchy,
        }
    }
}

/// Full closure recomputation from a state's role and edge relations.
pub(crate) fn closure_of_state(state: &State) -> ClosureIndex {
    let roles: Vec<&str> = state
        .relation(Rel::Role)
        .map(|t| t.fields[0].as_name().expect("role name"))
        .collect();
    let edges: Vec<(&str, &str)> = state
        .relation(Rel::Rh)
        .map(|t| {
            (
                t.fields[0].as_name().expect("role name"),
                t.fields[1].as_name().expect("role name"),
            )
        })
        .collect();
    ClosureIndex::from_edges(roles, edges)
}

// Small tuple constructors shared by the operation modules.
pub(crate) fn t1(rel: Rel, a: &str) -> Tuple {
    Tuple::new(rel, vec![FieldValue::name(a)])
}

pub(crate) fn t2(rel: Rel, a: &str, b: &str) -> Tuple {
    Tuple::new(rel, vec![FieldValue::name(a), FieldValue::name(b)])
}

pub(crate) fn t3(rel: Rel, a: &str, b: &str, c: &str) -> Tuple {
    Tuple::new(
        rel,
        vec![
            FieldValue::name(a),
            FieldValue::name(b),
            FieldValue::name(c),
        ],
    )
}

pub(crate) fn set_tuple(rel: Rel, name: &str, n: u32) -> Tuple {
    Tuple::new(rel, vec![FieldValue::name(name), FieldValue::Num(n)])
}

pub(crate) fn witness_of(tuples: impl IntoIterator<Item = Tuple>) -> Witness {
    tuples.into_iter().collect::<BTreeSet<_>>()
}
