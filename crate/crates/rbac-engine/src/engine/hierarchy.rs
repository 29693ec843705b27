//! Hierarchical RBAC: general role hierarchies (a DAG of immediate
//! inheritance edges) plus the authorized-view review functions.
//!
//! An edge `(asc, desc)` makes `asc` senior: `asc` inherits every permission
//! of `desc`, and membership in `asc` authorizes activating `desc`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::core::direct_permissions;
use super::{t1, t2, Engine, Permission};
use crate::error::RbacError;
use crate::store::{EntityKind, Rel, State, StateVersion};

impl Engine {
    /// Adds an immediate inheritance edge. Rejects self-edges and anything
    /// that would close a cycle, reporting the offending role path. Static
    /// SoD is re-checked at commit under the extended closure.
    pub fn add_inheritance(&mut self, asc: &str, desc: &str) -> Result<StateVersion, RbacError> {
        self.require_hierarchy("AddInheritance")?;
        self.expect_entity(EntityKind::Role, asc)?;
        self.expect_entity(EntityKind::Role, desc)?;
        let row = t2(Rel::Rh, asc, desc);
        if self.state().contains(&row) {
            return Err(RbacError::DuplicateEdge {
                ascendant: asc.to_string(),
                descendant: desc.to_string(),
            });
        }
        if let Some(path) = edge_path(self.state(), desc, asc) {
            // asc -> desc -> ... -> asc would be a cycle.
            let mut cycle = vec![asc.to_string()];
            cycle.extend(path);
            return Err(RbacError::CycleDetected { path: cycle });
        }
        self.run_tx(|eng, tx| eng.store().insert(tx, row))
    }

    /// Removes an immediate edge. Inherited permissions and activation
    /// eligibility shrink accordingly; active session roles that lose their
    /// eligibility are deactivated in the same transaction.
    pub fn delete_inheritance(&mut self, asc: &str, desc: &str) -> Result<StateVersion, RbacError> {
        self.require_hierarchy("DeleteInheritance")?;
        self.expect_entity(EntityKind::Role, asc)?;
        self.expect_entity(EntityKind::Role, desc)?;
        let row = t2(Rel::Rh, asc, desc);
        if !self.state().contains(&row) {
            return Err(RbacError::MissingEdge {
                ascendant: asc.to_string(),
                descendant: desc.to_string(),
            });
        }
        self.run_tx(|eng, tx| {
            let store = eng.store();
            store.delete(tx, row)?;
            eng.prune_ineligible_session_roles(tx)
        })
    }

    /// Creates a fresh role already senior to `desc`, atomically.
    pub fn add_ascendant(&mut self, new_role: &str, desc: &str) -> Result<StateVersion, RbacError> {
        self.require_hierarchy("AddAscendant")?;
        self.expect_entity(EntityKind::Role, desc)?;
        if self.entity_exists(EntityKind::Role, new_role) {
            return Err(RbacError::DuplicateEntity {
                kind: EntityKind::Role,
                name: new_role.to_string(),
            });
        }
        self.run_tx(|eng, tx| {
            let store = eng.store();
            store.insert(tx, t1(Rel::Role, new_role))?;
            store.insert(tx, t2(Rel::Rh, new_role, desc))
        })
    }

    /// Creates a fresh role already junior to `asc`, atomically.
    pub fn add_descendant(&mut self, asc: &str, new_role: &str) -> Result<StateVersion, RbacError> {
        self.require_hierarchy("AddDescendant")?;
        self.expect_entity(EntityKind::Role, asc)?;
        if self.entity_exists(EntityKind::Role, new_role) {
            return Err(RbacError::DuplicateEntity {
                kind: EntityKind::Role,
                name: new_role.to_string(),
            });
        }
        self.run_tx(|eng, tx| {
            let store = eng.store();
            store.insert(tx, t1(Rel::Role, new_role))?;
            store.insert(tx, t2(Rel::Rh, asc, new_role))
        })
    }

    /// Users assigned to `role` or to any of its seniors.
    pub fn authorized_users(&self, role: &str) -> Result<BTreeSet<String>, RbacError> {
        self.require_hierarchy("AuthorizedUsers")?;
        self.expect_entity(EntityKind::Role, role)?;
        Ok(self
            .state()
            .relation(Rel::Ua)
            .filter(|t| {
                let assigned = t.fields[1].as_name().expect("role name");
                self.closure().geq(assigned, role)
            })
            .map(|t| t.fields[0].as_name().expect("user name").to_string())
            .collect())
    }

    /// Roles the user may activate: every junior of every assigned role,
    /// including the assigned roles themselves.
    pub fn authorized_roles(&self, user: &str) -> Result<BTreeSet<String>, RbacError> {
        self.require_hierarchy("AuthorizedRoles")?;
        self.expect_entity(EntityKind::User, user)?;
        let mut roles = BTreeSet::new();
        for t in self.state().relation(Rel::Ua) {
            if t.fields[0].as_name() == Some(user) {
                let assigned = t.fields[1].as_name().expect("role name");
                roles.extend(self.closure().juniors_of(assigned).map(str::to_string));
            }
        }
        Ok(roles)
    }

    /// Permissions of `role` and of every role it inherits.
    pub fn authorized_permissions(&self, role: &str) -> Result<BTreeSet<Permission>, RbacError> {
        self.require_hierarchy("AuthorizedPermissions")?;
        self.expect_entity(EntityKind::Role, role)?;
        let state = self.state();
        let mut perms = BTreeSet::new();
        for junior in self.closure().juniors_of(role) {
            perms.extend(direct_permissions(state, junior));
        }
        Ok(perms)
    }
}

/// Shortest path from `from` to `to` along immediate edges, as a role list
/// including both endpoints. `None` when unreachable. A zero-length path
/// (`from == to`) yields `[from]`.
fn edge_path(state: &State, from: &str, to: &str) -> Option<Vec<String>> {
    let mut succ: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for t in state.relation(Rel::Rh) {
        succ.entry(t.fields[0].as_name().expect("role name"))
            .or_default()
            .push(t.fields[1].as_name().expect("role name"));
    }
    let mut prev: BTreeMap<&str, &str> = BTreeMap::new();
    let mut queue = VecDeque::from([from]);
    let mut seen: BTreeSet<&str> = BTreeSet::from([from]);
    while let Some(x) = queue.pop_front() {
        if x == to {
            let mut path = vec![x.to_string()];
            let mut cur = x;
            while let Some(&p) = prev.get(cur) {
                path.push(p.to_string());
                cur = p;
            }
            path.reverse();
            return Some(path);
        }
        for &y in succ.get(x).into_iter().flatten() {
            if seen.insert(y) {
                prev.insert(y, x);
                queue.push_back(y);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn engine_with_chain() -> Engine {
        let mut e = Engine::new();
        for r in ["senior", "mid", "junior"] {
            e.add_role(r).unwrap();
        }
        e.add_user("u").unwrap();
        e.add_operation("read").unwrap();
        e.add_object("doc").unwrap();
        e.add_inheritance("senior", "mid").unwrap();
        e.add_inheritance("mid", "junior").unwrap();
        e
    }

    #[test]
    fn closure_is_reflexive_and_transitive() {
        let e = engine_with_chain();
        let c = e.closure();
        assert!(c.geq("senior", "junior"));
        assert!(c.geq("mid", "mid"));
        assert!(!c.geq("junior", "senior"));
    }

    #[test]
    fn cycle_and_edge_errors() {
        let mut e = engine_with_chain();
        let err = e.add_inheritance("junior", "senior").unwrap_err();
        match &err {
            RbacError::CycleDetected { path } => {
                assert_eq!(path.first(), Some(&"junior".to_string()));
                assert_eq!(path.last(), Some(&"junior".to_string()));
                assert!(path.contains(&"senior".to_string()));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(
            e.add_inheritance("senior", "senior").unwrap_err().code(),
            "CYCLE_DETECTED"
        );
        assert_eq!(
            e.add_inheritance("senior", "mid").unwrap_err().code(),
            "DUPLICATE_EDGE"
        );
        assert_eq!(
            e.delete_inheritance("senior", "junior").unwrap_err().code(),
            "MISSING_EDGE"
        );
    }

    #[test]
    fn inherited_permissions_flow_upward() {
        let mut e = engine_with_chain();
        e.grant_permission("read", "doc", "junior").unwrap();
        e.assign_user("u", "senior").unwrap();

        let perms = e.authorized_permissions("senior").unwrap();
        assert!(perms.contains(&Permission::new("read", "doc")));
        assert!(e.role_permissions("senior").unwrap().is_empty());

        assert_eq!(
            e.authorized_users("junior").unwrap(),
            BTreeSet::from(["u".to_string()])
        );
        let roles = e.authorized_roles("u").unwrap();
        assert_eq!(roles.len(), 3);

        e.create_session("u", "s", &["senior"]).unwrap();
        assert!(e.check_access("s", "read", "doc").unwrap());
        // Juniors are not auto-activated.
        assert_eq!(e.session_roles("s").unwrap(), BTreeSet::from(["senior".to_string()]));
    }

    #[test]
    fn activation_eligibility_follows_the_hierarchy() {
        let mut e = engine_with_chain();
        e.assign_user("u", "senior").unwrap();
        e.create_session("u", "s", &["junior"]).unwrap();
        assert!(e.session_roles("s").unwrap().contains("junior"));
    }

    #[test]
    fn delete_inheritance_deactivates_orphaned_roles() {
        let mut e = engine_with_chain();
        e.assign_user("u", "senior").unwrap();
        e.create_session("u", "s", &["junior", "senior"]).unwrap();
        e.delete_inheritance("mid", "junior").unwrap();
        let active = e.session_roles("s").unwrap();
        assert!(!active.contains("junior"));
        assert!(active.contains("senior"));
    }

    #[test]
    fn add_ascendant_and_descendant_are_atomic() {
        let mut e = engine_with_chain();
        e.add_ascendant("chief", "senior").unwrap();
        assert!(e.closure().geq("chief", "junior"));
        e.add_descendant("junior", "intern").unwrap();
        assert!(e.closure().geq("chief", "intern"));
        assert_eq!(
            e.add_ascendant("chief", "senior").unwrap_err().code(),
            "DUPLICATE_ENTITY"
        );
        assert_eq!(
            e.add_descendant("ghost", "x").unwrap_err().code(),
            "UNKNOWN_ENTITY"
        );
    }

    #[test]
    fn redundant_edges_are_stored_as_given() {
        let mut e = engine_with_chain();
        // senior already reaches junior transitively; the direct edge is
        // still legal and stored.
        e.add_inheritance("senior", "junior").unwrap();
        let rh: Vec<_> = e.state().relation(Rel::Rh).cloned().collect();
        assert_eq!(rh.len(), 3);
        e.delete_inheritance("senior", "junior").unwrap();
        assert!(e.closure().geq("senior", "junior"));
    }
}
