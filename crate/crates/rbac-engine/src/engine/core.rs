//! Core RBAC: entity administration, user-role assignment,
//! permission-role assignment, sessions, access decisions, and the
//! review functions.

use std::collections::{BTreeMap, BTreeSet};

use super::{t1, t2, t3, Engine, Permission};
use crate::error::RbacError;
use crate::store::{EntityKind, Rel, State, StateVersion};

impl Engine {
    // --- entity administration ---

    pub fn add_user(&mut self, user: &str) -> Result<StateVersion, RbacError> {
        self.add_entity(EntityKind::User, Rel::User, user)
    }

    pub fn add_role(&mut self, role: &str) -> Result<StateVersion, RbacError> {
        self.add_entity(EntityKind::Role, Rel::Role, role)
    }

    pub fn add_operation(&mut self, operation: &str) -> Result<StateVersion, RbacError> {
        self.add_entity(EntityKind::Operation, Rel::Operation, operation)
    }

    pub fn add_object(&mut self, object: &str) -> Result<StateVersion, RbacError> {
        self.add_entity(EntityKind::Object, Rel::Object, object)
    }

    fn add_entity(
        &mut self,
        kind: EntityKind,
        rel: Rel,
        name: &str,
    ) -> Result<StateVersion, RbacError> {
        if self.entity_exists(kind, name) {
            return Err(RbacError::DuplicateEntity {
                kind,
                name: name.to_string(),
            });
        }
        self.run_tx(|eng, tx| eng.store().insert(tx, t1(rel, name)))
    }

    /// Deletes a user together with their assignments and sessions.
    pub fn delete_user(&mut self, user: &str) -> Result<StateVersion, RbacError> {
        self.expect_entity(EntityKind::User, user)?;
        self.run_tx(|eng, tx| {
            let store = eng.store();
            let head = store.head();
            for t in head.relation(Rel::Ua) {
                if t.fields[0].as_name() == Some(user) {
                    store.delete(tx, t.clone())?;
                }
            }
            let sessions: Vec<String> = head
                .relation(Rel::Session)
                .filter(|t| t.fields[1].as_name() == Some(user))
                .map(|t| t.fields[0].as_name().expect("session name").to_string())
                .collect();
            for s in &sessions {
                for t in head.relation(Rel::SessionRole) {
                    if t.fields[0].as_name() == Some(s.as_str()) {
                        store.delete(tx, t.clone())?;
                    }
                }
                store.delete(tx, t2(Rel::Session, s, user))?;
            }
            store.delete(tx, t1(Rel::User, user))
        })
    }

    /// Deletes a role and cascades through every relation that mentions it:
    /// assignments, grants, active session roles, hierarchy edges, and SoD
    /// memberships. Commit re-validates SoD well-formedness, so a deletion
    /// that would shrink a set below its cardinality is rejected whole.
    pub fn delete_role(&mut self, role: &str) -> Result<StateVersion, RbacError> {
        self.expect_entity(EntityKind::Role, role)?;
        self.run_tx(|eng, tx| {
            let store = eng.store();
            let head = store.head();
            let mentions = |t: &crate::store::Tuple, cols: &[usize]| {
                cols.iter().any(|&i| t.fields[i].as_name() == Some(role))
            };
            for (rel, cols) in [
                (Rel::Ua, &[1usize][..]),
                (Rel::Pa, &[2][..]),
                (Rel::SessionRole, &[1][..]),
                (Rel::Rh, &[0, 1][..]),
                (Rel::SsdRole, &[1][..]),
                (Rel::DsdRole, &[1][..]),
            ] {
                for t in head.relation(rel) {
                    if mentions(t, cols) {
                        store.delete(tx, t.clone())?;
                    }
                }
            }
            store.delete(tx, t1(Rel::Role, role))?;
            eng.prune_ineligible_session_roles(tx)
        })
    }

    // --- assignments ---

    pub fn assign_user(&mut self, user: &str, role: &str) -> Result<StateVersion, RbacError> {
        self.expect_entity(EntityKind::User, user)?;
        self.expect_entity(EntityKind::Role, role)?;
        let row = t2(Rel::Ua, user, role);
        if self.state().contains(&row) {
            return Err(RbacError::DuplicateAssignment {
                detail: format!("user {user} already assigned role {role}"),
            });
        }
        self.run_tx(|eng, tx| eng.store().insert(tx, row))
    }

    pub fn deassign_user(&mut self, user: &str, role: &str) -> Result<StateVersion, RbacError> {
        self.expect_entity(EntityKind::User, user)?;
        self.expect_entity(EntityKind::Role, role)?;
        let row = t2(Rel::Ua, user, role);
        if !self.state().contains(&row) {
            return Err(RbacError::MissingAssignment {
                detail: format!("user {user} is not assigned role {role}"),
            });
        }
        self.run_tx(|eng, tx| {
            let store = eng.store();
            store.delete(tx, row)?;
            eng.prune_ineligible_session_roles(tx)
        })
    }

    pub fn grant_permission(
        &mut self,
        operation: &str,
        object: &str,
        role: &str,
    ) -> Result<StateVersion, RbacError> {
        self.expect_entity(EntityKind::Operation, operation)?;
        self.expect_entity(EntityKind::Object, object)?;
        self.expect_entity(EntityKind::Role, role)?;
        let row = t3(Rel::Pa, operation, object, role);
        if self.state().contains(&row) {
            return Err(RbacError::DuplicateAssignment {
                detail: format!("permission {operation}:{object} already granted to {role}"),
            });
        }
        self.run_tx(|eng, tx| eng.store().insert(tx, row))
    }

    pub fn revoke_permission(
        &mut self,
        operation: &str,
        object: &str,
        role: &str,
    ) -> Result<StateVersion, RbacError> {
        self.expect_entity(EntityKind::Operation, operation)?;
        self.expect_entity(EntityKind::Object, object)?;
        self.expect_entity(EntityKind::Role, role)?;
        let row = t3(Rel::Pa, operation, object, role);
        if !self.state().contains(&row) {
            return Err(RbacError::MissingAssignment {
                detail: format!("permission {operation}:{object} is not granted to {role}"),
            });
        }
        self.run_tx(|eng, tx| eng.store().delete(tx, row))
    }

    // --- sessions ---

    /// Creates a session owned by `user` with the given initial active
    /// roles. Every initial role must be activation-eligible, and dynamic
    /// SoD is checked at commit against the whole initial set.
    pub fn create_session(
        &mut self,
        user: &str,
        session: &str,
        initial_roles: &[&str],
    ) -> Result<StateVersion, RbacError> {
        self.expect_entity(EntityKind::User, user)?;
        if self.entity_exists(EntityKind::Session, session) {
            return Err(RbacError::DuplicateEntity {
                kind: EntityKind::Session,
                name: session.to_string(),
            });
        }
        for role in initial_roles {
            self.expect_entity(EntityKind::Role, role)?;
            self.expect_eligible(user, role)?;
        }
        self.run_tx(|eng, tx| {
            let store = eng.store();
            store.insert(tx, t2(Rel::Session, session, user))?;
            for role in initial_roles {
                store.insert(tx, t2(Rel::SessionRole, session, role))?;
            }
            Ok(())
        })
    }

    pub fn delete_session(&mut self, user: &str, session: &str) -> Result<StateVersion, RbacError> {
        let owner = self.session_owner(session)?;
        if owner != user {
            return Err(RbacError::SessionOwnerMismatch {
                session: session.to_string(),
                owner,
                claimed: user.to_string(),
            });
        }
        self.run_tx(|eng, tx| {
            let store = eng.store();
            for t in store.head().relation(Rel::SessionRole) {
                if t.fields[0].as_name() == Some(session) {
                    store.delete(tx, t.clone())?;
                }
            }
            store.delete(tx, t2(Rel::Session, session, user))
        })
    }

    /// Activates a role in a session. Activating an already-active role is a
    /// no-op commit. Dynamic SoD is checked at commit.
    pub fn add_active_role(
        &mut self,
        user: &str,
        session: &str,
        role: &str,
    ) -> Result<StateVersion, RbacError> {
        let owner = self.session_owner(session)?;
        if owner != user {
            return Err(RbacError::SessionOwnerMismatch {
                session: session.to_string(),
                owner,
                claimed: user.to_string(),
            });
        }
        self.expect_entity(EntityKind::Role, role)?;
        self.expect_eligible(user, role)?;
        self.run_tx(|eng, tx| eng.store().insert(tx, t2(Rel::SessionRole, session, role)))
    }

    /// Deactivates a role in a session; dropping an inactive role is a no-op.
    pub fn drop_active_role(
        &mut self,
        user: &str,
        session: &str,
        role: &str,
    ) -> Result<StateVersion, RbacError> {
        let owner = self.session_owner(session)?;
        if owner != user {
            return Err(RbacError::SessionOwnerMismatch {
                session: session.to_string(),
                owner,
                claimed: user.to_string(),
            });
        }
        self.expect_entity(EntityKind::Role, role)?;
        self.run_tx(|eng, tx| eng.store().delete(tx, t2(Rel::SessionRole, session, role)))
    }

    // --- access decisions ---

    /// Decides whether the session may perform `operation` on `object`.
    /// Under core semantics only directly granted permissions of active
    /// roles count; with the hierarchy component, permissions of inherited
    /// roles count too.
    pub fn check_access(
        &self,
        session: &str,
        operation: &str,
        object: &str,
    ) -> Result<bool, RbacError> {
        self.session_owner(session)?;
        self.expect_entity(EntityKind::Operation, operation)?;
        self.expect_entity(EntityKind::Object, object)?;
        let state = self.state();
        let active = active_roles(state, session);
        let ok = state.relation(Rel::Pa).any(|t| {
            t.fields[0].as_name() == Some(operation) && t.fields[1].as_name() == Some(object) && {
                let carrier = t.fields[2].as_name().expect("role name");
                active.iter().any(|r| {
                    if self.components().hierarchy {
                        self.closure().geq(r, carrier)
                    } else {
                        r == carrier
                    }
                })
            }
        });
        Ok(ok)
    }

    // --- review functions ---

    pub fn assigned_users(&self, role: &str) -> Result<BTreeSet<String>, RbacError> {
        self.expect_entity(EntityKind::Role, role)?;
        Ok(self
            .state()
            .relation(Rel::Ua)
            .filter(|t| t.fields[1].as_name() == Some(role))
            .map(|t| t.fields[0].as_name().expect("user name").to_string())
            .collect())
    }

    pub fn assigned_roles(&self, user: &str) -> Result<BTreeSet<String>, RbacError> {
        self.expect_entity(EntityKind::User, user)?;
        Ok(assigned_roles_of(self.state(), user))
    }

    /// Permissions granted directly to the role.
    pub fn role_permissions(&self, role: &str) -> Result<BTreeSet<Permission>, RbacError> {
        self.expect_entity(EntityKind::Role, role)?;
        Ok(direct_permissions(self.state(), role))
    }

    /// Union of the direct permissions of the user's assigned roles.
    pub fn user_permissions(&self, user: &str) -> Result<BTreeSet<Permission>, RbacError> {
        self.expect_entity(EntityKind::User, user)?;
        let state = self.state();
        let mut perms = BTreeSet::new();
        for role in assigned_roles_of(state, user) {
            perms.extend(direct_permissions(state, &role));
        }
        Ok(perms)
    }

    /// Permissions accessible to the user under the active semantics: the
    /// assigned roles' direct permissions, extended through the hierarchy
    /// closure when that component is enabled.
    pub fn accessible_permissions(&self, user: &str) -> Result<BTreeSet<Permission>, RbacError> {
        self.expect_entity(EntityKind::User, user)?;
        let state = self.state();
        let mut perms = BTreeSet::new();
        for role in assigned_roles_of(state, user) {
            if self.components().hierarchy {
                for junior in self.closure().juniors_of(&role) {
                    perms.extend(direct_permissions(state, junior));
                }
            } else {
                perms.extend(direct_permissions(state, &role));
            }
        }
        Ok(perms)
    }

    pub fn session_roles(&self, session: &str) -> Result<BTreeSet<String>, RbacError> {
        self.session_owner(session)?;
        Ok(active_roles(self.state(), session))
    }

    /// Permissions the session can currently exercise, under the same
    /// semantics as [`Engine::check_access`].
    pub fn session_permissions(&self, session: &str) -> Result<BTreeSet<Permission>, RbacError> {
        self.session_owner(session)?;
        let state = self.state();
        let mut perms = BTreeSet::new();
        for role in active_roles(state, session) {
            if self.components().hierarchy {
                for junior in self.closure().juniors_of(&role) {
                    perms.extend(direct_permissions(state, junior));
                }
            } else {
                perms.extend(direct_permissions(state, &role));
            }
        }
        Ok(perms)
    }

    /// Assigned-user count for every role, including zero-count roles.
    pub fn count_users_per_role(&self) -> BTreeMap<String, usize> {
        let state = self.state();
        let mut counts: BTreeMap<String, usize> = state
            .relation(Rel::Role)
            .map(|t| (t.fields[0].as_name().expect("role name").to_string(), 0))
            .collect();
        for t in state.relation(Rel::Ua) {
            let role = t.fields[1].as_name().expect("role name");
            if let Some(c) = counts.get_mut(role) {
                *c += 1;
            }
        }
        counts
    }

    /// Assigned-role count for every user, including zero-count users.
    pub fn count_roles_per_user(&self) -> BTreeMap<String, usize> {
        let state = self.state();
        let mut counts: BTreeMap<String, usize> = state
            .relation(Rel::User)
            .map(|t| (t.fields[0].as_name().expect("user name").to_string(), 0))
            .collect();
        for t in state.relation(Rel::Ua) {
            let user = t.fields[0].as_name().expect("user name");
            if let Some(c) = counts.get_mut(user) {
                *c += 1;
            }
        }
        counts
    }

    // --- shared preconditions ---

    pub(crate) fn expect_entity(&self, kind: EntityKind, name: &str) -> Result<(), RbacError> {
        if self.entity_exists(kind, name) {
            Ok(())
        } else {
            Err(RbacError::UnknownEntity {
                kind,
                name: name.to_string(),
            })
        }
    }

    pub(crate) fn session_owner(&self, session: &str) -> Result<String, RbacError> {
        self.state()
            .relation(Rel::Session)
            .find(|t| t.fields[0].as_name() == Some(session))
            .map(|t| t.fields[1].as_name().expect("user name").to_string())
            .ok_or_else(|| RbacError::UnknownSession {
                name: session.to_string(),
            })
    }

    fn expect_eligible(&self, user: &str, role: &str) -> Result<(), RbacError> {
        if self.eligible_in(self.state(), self.closure(), user, role) {
            Ok(())
        } else {
            Err(RbacError::NotAuthorized {
                user: user.to_string(),
                role: role.to_string(),
            })
        }
    }
}

pub(crate) fn active_roles(state: &State, session: &str) -> BTreeSet<String> {
    state
        .relation(Rel::SessionRole)
        .filter(|t| t.fields[0].as_name() == Some(session))
        .map(|t| t.fields[1].as_name().expect("role name").to_string())
        .collect()
}

pub(crate) fn assigned_roles_of(state: &State, user: &str) -> BTreeSet<String> {
    state
        .relation(Rel::Ua)
        .filter(|t| t.fields[0].as_name() == Some(user))
        .map(|t| t.fields[1].as_name().expect("role name").to_string())
        .collect()
}

pub(crate) fn direct_permissions(state: &State, role: &str) -> BTreeSet<Permission> {
    state
        .relation(Rel::Pa)
        .filter(|t| t.fields[2].as_name() == Some(role))
        .map(|t| {
            Permission::new(
                t.fields[0].as_name().expect("operation name"),
                t.fields[1].as_name().expect("object name"),
            )
        })
        .collect()
}
