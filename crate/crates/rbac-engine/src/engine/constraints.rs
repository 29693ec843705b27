//! Separation-of-duty constraints.
//!
//! A SoD set is a named role set with a cardinality `n`. Static sets (SSD)
//! bound how many member roles one user may hold; with the hierarchy
//! component enabled, "hold" means authorized-for, otherwise assigned-to.
//! Dynamic sets (DSD) bound how many member roles one session may have
//! active at once. All enforcement happens as commit checks over the
//! hypothetical post-state, so a violating command is rejected whole.

use std::collections::{BTreeMap, BTreeSet};

use super::core::{active_roles, assigned_roles_of};
use super::{set_tuple, t1, t2, witness_of, Engine};
use crate::closure::ClosureIndex;
use crate::error::{RbacError, Witness};
use crate::store::{CommitCheck, EntityKind, Rel, State, StateVersion};

/// Static versus dynamic separation of duty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SodFlavor {
    Ssd,
    Dsd,
}

impl SodFlavor {
    pub(crate) fn set_rel(self) -> Rel {
        match self {
            SodFlavor::Ssd => Rel::SsdSet,
            SodFlavor::Dsd => Rel::DsdSet,
        }
    }

    pub(crate) fn role_rel(self) -> Rel {
        match self {
            SodFlavor::Ssd => Rel::SsdRole,
            SodFlavor::Dsd => Rel::DsdRole,
        }
    }
}

impl Engine {
    /// Registers a static SoD set. The current state must already satisfy
    /// the new constraint or the creation is rejected with a witness.
    pub fn create_ssd_set(
        &mut self,
        name: &str,
        roles: &[&str],
        cardinality: u32,
    ) -> Result<StateVersion, RbacError> {
        self.create_sod_set(SodFlavor::Ssd, "CreateSsdSet", name, roles, cardinality)
    }

    /// Registers a dynamic SoD set; existing sessions are checked.
    pub fn create_dsd_set(
        &mut self,
        name: &str,
        roles: &[&str],
        cardinality: u32,
    ) -> Result<StateVersion, RbacError> {
        self.create_sod_set(SodFlavor::Dsd, "CreateDsdSet", name, roles, cardinality)
    }

    fn create_sod_set(
        &mut self,
        flavor: SodFlavor,
        operation: &str,
        name: &str,
        roles: &[&str],
        cardinality: u32,
    ) -> Result<StateVersion, RbacError> {
        self.require_sod(flavor, operation)?;
        if self.entity_exists(EntityKind::SodSet, name) {
            return Err(RbacError::DuplicateEntity {
                kind: EntityKind::SodSet,
                name: name.to_string(),
            });
        }
        let role_set: BTreeSet<&str> = roles.iter().copied().collect();
        for role in &role_set {
            self.expect_entity(EntityKind::Role, role)?;
        }
        if cardinality < 2 || cardinality as usize > role_set.len() {
            return Err(RbacError::BadCardinality {
                cardinality,
                set_size: role_set.len(),
            });
        }
        self.run_tx(|eng, tx| {
            let store = eng.store();
            store.insert(tx, set_tuple(flavor.set_rel(), name, cardinality))?;
            for role in &role_set {
                store.insert(tx, t2(flavor.role_rel(), name, role))?;
            }
            Ok(())
        })
    }

    /// Adds a role to an existing SoD set; may newly violate the set.
    pub fn add_sod_role_member(&mut self, name: &str, role: &str) -> Result<StateVersion, RbacError> {
        let (flavor, _) = self.expect_sod_set(name)?;
        self.require_sod(flavor, "AddSodRoleMember")?;
        self.expect_entity(EntityKind::Role, role)?;
        let row = t2(flavor.role_rel(), name, role);
        if self.state().contains(&row) {
            return Err(RbacError::DuplicateAssignment {
                detail: format!("role {role} is already a member of {name}"),
            });
        }
        self.run_tx(|eng, tx| eng.store().insert(tx, row))
    }

    /// Removes a member role. The set must stay well-formed: at least two
    /// members, and no fewer members than its cardinality.
    pub fn delete_sod_role_member(
        &mut self,
        name: &str,
        role: &str,
    ) -> Result<StateVersion, RbacError> {
        let (flavor, cardinality) = self.expect_sod_set(name)?;
        self.require_sod(flavor, "DeleteSodRoleMember")?;
        self.expect_entity(EntityKind::Role, role)?;
        let row = t2(flavor.role_rel(), name, role);
        if !self.state().contains(&row) {
            return Err(RbacError::MissingAssignment {
                detail: format!("role {role} is not a member of {name}"),
            });
        }
        let remaining = self.sod_set_roles(name)?.len() - 1;
        if remaining < 2 || remaining < cardinality as usize {
            return Err(RbacError::BadCardinality {
                cardinality,
                set_size: remaining,
            });
        }
        self.run_tx(|eng, tx| eng.store().delete(tx, row))
    }

    /// Changes a set's cardinality. Lowering it can make existing
    /// assignments or sessions violate, which rejects the change.
    pub fn set_sod_cardinality(&mut self, name: &str, cardinality: u32) -> Result<StateVersion, RbacError> {
        let (flavor, old) = self.expect_sod_set(name)?;
        self.require_sod(flavor, "SetSodCardinality")?;
        let size = self.sod_set_roles(name)?.len();
        if cardinality < 2 || cardinality as usize > size {
            return Err(RbacError::BadCardinality {
                cardinality,
                set_size: size,
            });
        }
        self.run_tx(|eng, tx| {
            let store = eng.store();
            store.delete(tx, set_tuple(flavor.set_rel(), name, old))?;
            store.insert(tx, set_tuple(flavor.set_rel(), name, cardinality))
        })
    }

    /// Names of all sets of one flavor.
    pub fn sod_sets(&self, flavor: SodFlavor) -> BTreeSet<String> {
        self.state()
            .relation(flavor.set_rel())
            .map(|t| t.fields[0].as_name().expect("set name").to_string())
            .collect()
    }

    pub fn sod_set_roles(&self, name: &str) -> Result<BTreeSet<String>, RbacError> {
        let (flavor, _) = self.expect_sod_set(name)?;
        Ok(self
            .state()
            .relation(flavor.role_rel())
            .filter(|t| t.fields[0].as_name() == Some(name))
            .map(|t| t.fields[1].as_name().expect("role name").to_string())
            .collect())
    }

    pub fn sod_set_cardinality(&self, name: &str) -> Result<u32, RbacError> {
        self.expect_sod_set(name).map(|(_, n)| n)
    }

    fn expect_sod_set(&self, name: &str) -> Result<(SodFlavor, u32), RbacError> {
        for flavor in [SodFlavor::Ssd, SodFlavor::Dsd] {
            if let Some(t) = self
                .state()
                .relation(flavor.set_rel())
                .find(|t| t.fields[0].as_name() == Some(name))
            {
                return Ok((flavor, t.fields[1].as_num().expect("cardinality")));
            }
        }
        Err(RbacError::UnknownEntity {
            kind: EntityKind::SodSet,
            name: name.to_string(),
        })
    }
}

// --- commit checks ----------------------------------------------------------

fn sod_sets_of(state: &State, flavor: SodFlavor) -> Vec<(String, u32, BTreeSet<String>)> {
    let mut members: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for t in state.relation(flavor.role_rel()) {
        members
            .entry(t.fields[0].as_name().expect("set name").to_string())
            .or_default()
            .insert(t.fields[1].as_name().expect("role name").to_string());
    }
    state
        .relation(flavor.set_rel())
        .map(|t| {
            let name = t.fields[0].as_name().expect("set name").to_string();
            let n = t.fields[1].as_num().expect("cardinality");
            let roles = members.remove(&name).unwrap_or_default();
            (name, n, roles)
        })
        .collect()
}

/// Static SoD over the candidate state. With a closure the authorized
/// reading applies; without one the assigned reading.
pub(super) struct SsdCheck<'a> {
    pub closure: Option<&'a ClosureIndex>,
}

impl CommitCheck for SsdCheck<'_> {
    fn name(&self) -> &str {
        "ssd"
    }

    fn check(&self, candidate: &State) -> Result<(), (String, Witness)> {
        for (name, n, roles) in sod_sets_of(candidate, SodFlavor::Ssd) {
            for user_t in candidate.relation(Rel::User) {
                let user = user_t.fields[0].as_name().expect("user name");
                let assigned = assigned_roles_of(candidate, user);
                let held: Vec<&String> = roles
                    .iter()
                    .filter(|r| match self.closure {
                        Some(c) => assigned.iter().any(|a| c.geq(a, r)),
                        None => assigned.contains(*r),
                    })
                    .collect();
                if held.len() >= n as usize {
                    let mut witness = witness_of([t1(Rel::User, user)]);
                    witness.extend(held.iter().map(|r| t2(Rel::SsdRole, &name, r)));
                    return Err((name, witness));
                }
            }
        }
        Ok(())
    }
}

/// Dynamic SoD: counts explicitly active member roles per session.
pub(super) struct DsdCheck;

impl CommitCheck for DsdCheck {
    fn name(&self) -> &str {
        "dsd"
    }

    fn check(&self, candidate: &State) -> Result<(), (String, Witness)> {
        for (name, n, roles) in sod_sets_of(candidate, SodFlavor::Dsd) {
            for session_t in candidate.relation(Rel::Session) {
                let session = session_t.fields[0].as_name().expect("session name");
                let active = active_roles(candidate, session);
                let held: Vec<&String> = roles.iter().filter(|r| active.contains(*r)).collect();
                if held.len() >= n as usize {
                    let mut witness = witness_of([session_t.clone()]);
                    witness.extend(held.iter().map(|r| t2(Rel::SessionRole, session, r)));
                    return Err((name, witness));
                }
            }
        }
        Ok(())
    }
}

/// Structural bound on every SoD set: `2 <= n <= |roles|`. Guards against
/// cascades (role deletion) hollowing a set out.
pub(super) struct SodWellformedCheck;

impl CommitCheck for SodWellformedCheck {
    fn name(&self) -> &str {
        "sod_wellformed"
    }

    fn check(&self, candidate: &State) -> Result<(), (String, Witness)> {
        for flavor in [SodFlavor::Ssd, SodFlavor::Dsd] {
            for (name, n, roles) in sod_sets_of(candidate, flavor) {
                if n < 2 || n as usize > roles.len() {
                    let witness = witness_of([set_tuple(flavor.set_rel(), &name, n)]);
                    return Err(("sod_wellformed".to_string(), witness));
                }
            }
        }
        Ok(())
    }
}

/// Every active session role must be activation-eligible for the session's
/// owner. Operations maintain this by cascade; the check also keeps
/// snapshot loads honest.
pub(super) struct SessionSoundnessCheck<'a> {
    pub closure: Option<&'a ClosureIndex>,
}

impl CommitCheck for SessionSoundnessCheck<'_> {
    fn name(&self) -> &str {
        "session_soundness"
    }

    fn check(&self, candidate: &State) -> Result<(), (String, Witness)> {
        let owners: BTreeMap<&str, &str> = candidate
            .relation(Rel::Session)
            .map(|t| {
                (
                    t.fields[0].as_name().expect("session name"),
                    t.fields[1].as_name().expect("user name"),
                )
            })
            .collect();
        for sr in candidate.relation(Rel::SessionRole) {
            let session = sr.fields[0].as_name().expect("session name");
            let role = sr.fields[1].as_name().expect("role name");
            // Missing owner rows are referential errors, reported elsewhere.
            let Some(owner) = owners.get(session) else { continue };
            let assigned = assigned_roles_of(candidate, owner);
            let eligible = match self.closure {
                Some(c) => assigned.iter().any(|a| c.geq(a, role)),
                None => assigned.contains(role),
            };
            if !eligible {
                let witness = witness_of([t2(Rel::Session, session, owner), sr.clone()]);
                return Err(("session_soundness".to_string(), witness));
            }
        }
        Ok(())
    }
}
