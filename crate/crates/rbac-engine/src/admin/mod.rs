//! Administrative analysis: exact role-set minimization and shortest
//! administrative plans.
//!
//! Both optimizers and both planners are exact searches with total
//! tie-breaking, so identical inputs always produce identical answers. They
//! are exponential in the worst case and meant for the small administrative
//! instances they are specified for; the role cap and the plan depth bound
//! keep them honest.

mod minimize;
mod planner;

pub use minimize::{minimize_roles, minimize_with_hierarchy, MinimizeObjective};
pub use planner::{ActionKind, PlannerOptions};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::engine::{Engine, Permission};
use crate::error::RbacError;
use crate::store::Rel;

/// The exact user-permission relation an optimizer must realize.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AccessMatrix {
    rows: BTreeMap<String, BTreeSet<Permission>>,
}

impl AccessMatrix {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, Permission)>) -> AccessMatrix {
        let mut rows: BTreeMap<String, BTreeSet<Permission>> = BTreeMap::new();
        for (user, perm) in pairs {
            rows.entry(user).or_default().insert(perm);
        }
        AccessMatrix { rows }
    }

    /// Users mapped to their (nonempty) permission sets.
    pub fn rows(&self) -> &BTreeMap<String, BTreeSet<Permission>> {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.values().all(|r| r.is_empty())
    }

    pub fn distinct_rows(&self) -> BTreeSet<&BTreeSet<Permission>> {
        self.rows.values().filter(|r| !r.is_empty()).collect()
    }

    pub fn permissions(&self) -> BTreeSet<&Permission> {
        self.rows.values().flatten().collect()
    }
}

impl Engine {
    /// The authorized user-permission relation of the head state, as an
    /// optimization target. Users without permissions contribute nothing.
    pub fn access_matrix(&self) -> AccessMatrix {
        let mut pairs = Vec::new();
        for t in self.state().relation(Rel::User) {
            let user = t.fields[0].as_name().expect("user name");
            for perm in self.accessible_permissions(user).expect("registered user") {
                pairs.push((user.to_string(), perm));
            }
        }
        AccessMatrix::from_pairs(pairs)
    }
}

/// One administrative step. Rendered in command syntax, so a plan file is a
/// replayable script; the same rendering is the tie-breaking order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum AdminAction {
    AddInheritance { ascendant: String, descendant: String },
    AddRole { role: String },
    AssignUser { user: String, role: String },
    DeassignUser { user: String, role: String },
    DeleteInheritance { ascendant: String, descendant: String },
    DeleteRole { role: String },
    GrantPermission { permission: Permission, role: String },
    RevokePermission { permission: Permission, role: String },
}

impl AdminAction {
    pub fn kind(&self) -> ActionKind {
        match self {
            AdminAction::AddInheritance { .. } => ActionKind::AddInheritance,
            AdminAction::AddRole { .. } => ActionKind::AddRole,
            AdminAction::AssignUser { .. } => ActionKind::AssignUser,
            AdminAction::DeassignUser { .. } => ActionKind::DeassignUser,
            AdminAction::DeleteInheritance { .. } => ActionKind::DeleteInheritance,
            AdminAction::DeleteRole { .. } => ActionKind::DeleteRole,
            AdminAction::GrantPermission { .. } => ActionKind::GrantPermission,
            AdminAction::RevokePermission { .. } => ActionKind::RevokePermission,
        }
    }
}

impl fmt::Display for AdminAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdminAction::AddInheritance { ascendant, descendant } => {
                write!(f, "AddInheritance {ascendant} {descendant}")
            }
            AdminAction::AddRole { role } => write!(f, "AddRole {role}"),
            AdminAction::AssignUser { user, role } => write!(f, "AssignUser {user} {role}"),
            AdminAction::DeassignUser { user, role } => {
                write!(f, "DeassignUser {user} {role}")
            }
            AdminAction::DeleteInheritance { ascendant, descendant } => {
                write!(f, "DeleteInheritance {ascendant} {descendant}")
            }
            AdminAction::DeleteRole { role } => write!(f, "DeleteRole {role}"),
            AdminAction::GrantPermission { permission, role } => {
                write!(f, "GrantPermission {permission} {role}")
            }
            AdminAction::RevokePermission { permission, role } => {
                write!(f, "RevokePermission {permission} {role}")
            }
        }
    }
}

/// A shortest plan: replaying the steps in order from the source state
/// commits every step and reaches the goal.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AdminPlan {
    pub steps: Vec<AdminAction>,
}

impl AdminPlan {
    pub fn cost(&self) -> usize {
        self.steps.len()
    }

    /// One action per line, in command syntax.
    pub fn render(&self) -> String {
        self.steps.iter().map(|a| format!("{a}\n")).collect()
    }
}

impl Engine {
    /// Executes one plan step as a normal engine operation, constraints
    /// included.
    pub fn apply_admin_action(&mut self, action: &AdminAction) -> Result<(), RbacError> {
        match action {
            AdminAction::AddInheritance { ascendant, descendant } => {
                self.add_inheritance(ascendant, descendant)?
            }
            AdminAction::AddRole { role } => self.add_role(role)?,
            AdminAction::AssignUser { user, role } => self.assign_user(user, role)?,
            AdminAction::DeassignUser { user, role } => self.deassign_user(user, role)?,
            AdminAction::DeleteInheritance { ascendant, descendant } => {
                self.delete_inheritance(ascendant, descendant)?
            }
            AdminAction::DeleteRole { role } => self.delete_role(role)?,
            AdminAction::GrantPermission { permission, role } => {
                self.grant_permission(&permission.operation, &permission.object, role)?
            }
            AdminAction::RevokePermission { permission, role } => {
                self.revoke_permission(&permission.operation, &permission.object, role)?
            }
        };
        Ok(())
    }
}

/// An exact realization of an access matrix with fresh roles.
///
/// `rh` pairs are (ascendant, descendant); `pa` holds only direct grants.
/// The induced relation (through inheritance) must equal the target exactly.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RoleDecomposition {
    pub roles: BTreeSet<String>,
    pub ua: BTreeSet<(String, String)>,
    pub pa: BTreeSet<(Permission, String)>,
    pub rh: BTreeSet<(String, String)>,
}

impl RoleDecomposition {
    pub fn role_count(&self) -> usize {
        self.roles.len()
    }

    pub fn edge_count(&self) -> usize {
        self.ua.len() + self.pa.len() + self.rh.len()
    }

    /// The user-permission relation this decomposition grants, computed
    /// independently of the engine: a role carries its direct grants plus
    /// everything reachable through rh.
    pub fn induced_matrix(&self) -> AccessMatrix {
        let mut direct: BTreeMap<&str, BTreeSet<&Permission>> = BTreeMap::new();
        for (perm, role) in &self.pa {
            direct.entry(role).or_default().insert(perm);
        }
        let mut authorized: BTreeMap<&str, BTreeSet<&Permission>> = BTreeMap::new();
        for role in &self.roles {
            let mut seen = BTreeSet::from([role.as_str()]);
            let mut stack = vec![role.as_str()];
            let mut perms = BTreeSet::new();
            while let Some(r) = stack.pop() {
                perms.extend(direct.get(r).into_iter().flatten().copied());
                for (asc, desc) in &self.rh {
                    if asc == r && seen.insert(desc) {
                        stack.push(desc);
                    }
                }
            }
            authorized.insert(role, perms);
        }
        let mut pairs = Vec::new();
        for (user, role) in &self.ua {
            for perm in authorized.get(role.as_str()).into_iter().flatten() {
                pairs.push((user.clone(), (*perm).clone()));
            }
        }
        AccessMatrix::from_pairs(pairs)
    }
}
