//! Shortest administrative plans by breadth-first search over committed
//! states.
//!
//! States are keyed by snapshot text, actions are tried in rendered-text
//! order, and the first goal hit wins; together that makes the result the
//! lexicographically least among the shortest plans. Every expansion runs
//! through the real engine, so a step vetoed by a constraint is simply not
//! an edge. Actions are grounded against the planning user and the goal
//! permissions only: other users' assignments and unrelated grants can
//! neither reach nor unblock an authorization goal, and the same pruning is
//! part of the problem statement the oracle implements.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use super::{AdminAction, AdminPlan};
use crate::engine::{Engine, Permission};
use crate::error::RbacError;
use crate::store::{EntityKind, Rel, State, StateVersion};

/// The action vocabulary a planner may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ActionKind {
    AddInheritance,
    AddRole,
    AssignUser,
    DeassignUser,
    DeleteInheritance,
    DeleteRole,
    GrantPermission,
    RevokePermission,
}

impl ActionKind {
    pub fn all() -> BTreeSet<ActionKind> {
        BTreeSet::from([
            ActionKind::AddInheritance,
            ActionKind::AddRole,
            ActionKind::AssignUser,
            ActionKind::DeassignUser,
            ActionKind::DeleteInheritance,
            ActionKind::DeleteRole,
            ActionKind::GrantPermission,
            ActionKind::RevokePermission,
        ])
    }

    /// The default revocation vocabulary: only rights-removing actions.
    pub fn removals() -> BTreeSet<ActionKind> {
        BTreeSet::from([
            ActionKind::DeassignUser,
            ActionKind::DeleteInheritance,
            ActionKind::RevokePermission,
        ])
    }
}

#[derive(Debug, Clone)]
pub struct PlannerOptions {
    pub alphabet: BTreeSet<ActionKind>,
    /// How many canonical fresh role names AddRole may draw on.
    pub fresh_role_cap: usize,
    /// Maximum plan length the search will certify.
    pub depth_bound: usize,
}

impl Default for PlannerOptions {
    fn default() -> Self {
        PlannerOptions {
            alphabet: ActionKind::all(),
            fresh_role_cap: 2,
            depth_bound: 6,
        }
    }
}

impl PlannerOptions {
    pub fn revocation_default() -> PlannerOptions {
        PlannerOptions {
            alphabet: ActionKind::removals(),
            ..PlannerOptions::default()
        }
    }
}

impl Engine {
    /// Shortest plan making `user` authorized for every goal permission,
    /// searched from a committed version (default: head).
    pub fn get_roles_shortest_plan(
        &self,
        source: Option<StateVersion>,
        user: &str,
        goal: &BTreeSet<Permission>,
        opts: &PlannerOptions,
    ) -> Result<AdminPlan, RbacError> {
        let base = self.fork_at(source)?;
        base.validate_plan_inputs(user, goal)?;
        shortest_plan(base, user, goal, opts, |e| {
            e.accessible_permissions(user)
                .map(|perms| goal.iter().all(|p| perms.contains(p)))
                .unwrap_or(false)
        })
    }

    /// Shortest plan after which `user` is authorized for none of the
    /// forbidden permissions.
    pub fn get_revocation_shortest_plan(
        &self,
        source: Option<StateVersion>,
        user: &str,
        forbidden: &BTreeSet<Permission>,
        opts: &PlannerOptions,
    ) -> Result<AdminPlan, RbacError> {
        let base = self.fork_at(source)?;
        base.validate_plan_inputs(user, forbidden)?;
        shortest_plan(base, user, forbidden, opts, |e| {
            e.accessible_permissions(user)
                .map(|perms| forbidden.iter().all(|p| !perms.contains(p)))
                .unwrap_or(false)
        })
    }

    fn validate_plan_inputs(
        &self,
        user: &str,
        perms: &BTreeSet<Permission>,
    ) -> Result<(), RbacError> {
        self.expect_entity(EntityKind::User, user)?;
        for p in perms {
            self.expect_entity(EntityKind::Operation, &p.operation)?;
            self.expect_entity(EntityKind::Object, &p.object)?;
        }
        Ok(())
    }
}

fn shortest_plan(
    base: Engine,
    user: &str,
    perms: &BTreeSet<Permission>,
    opts: &PlannerOptions,
    goal: impl Fn(&Engine) -> bool,
) -> Result<AdminPlan, RbacError> {
    if goal(&base) {
        return Ok(AdminPlan::default());
    }
    let fresh = fresh_role_names(base.state(), opts.fresh_role_cap);
    let root = base.snapshot_text();
    let mut visited: HashSet<String> = HashSet::from([root.clone()]);
    let mut parents: HashMap<String, (String, AdminAction)> = HashMap::new();
    let mut queue = VecDeque::from([(0usize, root, base)]);
    let mut truncated = false;

    while let Some((depth, key, engine)) = queue.pop_front() {
        if depth == opts.depth_bound {
            truncated = true;
            continue;
        }
        for action in grounded_actions(&engine, user, perms, &fresh, &opts.alphabet) {
            let mut child = engine.clone();
            if child.apply_admin_action(&action).is_err() {
                continue;
            }
            let child_key = child.snapshot_text();
            if !visited.insert(child_key.clone()) {
                continue;
            }
            parents.insert(child_key.clone(), (key.clone(), action));
            if goal(&child) {
                return Ok(reconstruct(&parents, child_key));
            }
            queue.push_back((depth + 1, child_key, child));
        }
    }
    if truncated {
        Err(RbacError::DepthExceeded {
            bound: opts.depth_bound,
        })
    } else {
        Err(RbacError::NoPlan)
    }
}

fn reconstruct(parents: &HashMap<String, (String, AdminAction)>, leaf: String) -> AdminPlan {
    let mut steps = Vec::new();
    let mut key = leaf;
    while let Some((parent, action)) = parents.get(&key) {
        steps.push(action.clone());
        key = parent.clone();
    }
    steps.reverse();
    AdminPlan { steps }
}

/// The first `cap` canonical fresh names not already roles in the source
/// state. Fixed once per search so every node sees the same vocabulary.
fn fresh_role_names(state: &State, cap: usize) -> Vec<String> {
    let mut out = Vec::new();
    let mut i = 1u32;
    while out.len() < cap {
        let name = format!("role_{i}");
        if !state.entity_exists(EntityKind::Role, &name) {
            out.push(name);
        }
        i += 1;
    }
    out
}

/// All applicable-looking actions in one state, sorted by rendered text.
/// Commit-time vetoes are discovered on application, not here.
fn grounded_actions(
    engine: &Engine,
    user: &str,
    perms: &BTreeSet<Permission>,
    fresh: &[String],
    alphabet: &BTreeSet<ActionKind>,
) -> Vec<AdminAction> {
    let state = engine.state();
    let roles: Vec<&str> = state
        .relation(Rel::Role)
        .map(|t| t.fields[0].as_name().expect("role name"))
        .collect();
    let has_ua = |r: &str| {
        state
            .relation(Rel::Ua)
            .any(|t| t.fields[0].as_name() == Some(user) && t.fields[1].as_name() == Some(r))
    };
    let has_pa = |p: &Permission, r: &str| {
        state.relation(Rel::Pa).any(|t| {
            t.fields[0].as_name() == Some(p.operation.as_str())
                && t.fields[1].as_name() == Some(p.object.as_str())
                && t.fields[2].as_name() == Some(r)
        })
    };
    let edges: Vec<(&str, &str)> = state
        .relation(Rel::Rh)
        .map(|t| {
            (
                t.fields[0].as_name().expect("role name"),
                t.fields[1].as_name().expect("role name"),
            )
        })
        .collect();

    let mut out = Vec::new();
    for kind in alphabet {
        match kind {
            ActionKind::AssignUser => {
                for r in roles.iter().filter(|r| !has_ua(r)) {
                    out.push(AdminAction::AssignUser {
                        user: user.to_string(),
                        role: r.to_string(),
                    });
                }
            }
            ActionKind::DeassignUser => {
                for r in roles.iter().filter(|r| has_ua(r)) {
                    out.push(AdminAction::DeassignUser {
                        user: user.to_string(),
                        role: r.to_string(),
                    });
                }
            }
            ActionKind::GrantPermission => {
                for p in perms {
                    for r in roles.iter().filter(|r| !has_pa(p, r)) {
                        out.push(AdminAction::GrantPermission {
                            permission: p.clone(),
                            role: r.to_string(),
                        });
                    }
                }
            }
            ActionKind::RevokePermission => {
                for p in perms {
                    for r in roles.iter().filter(|r| has_pa(p, r)) {
                        out.push(AdminAction::RevokePermission {
                            permission: p.clone(),
                            role: r.to_string(),
                        });
                    }
                }
            }
            ActionKind::AddRole => {
                for name in fresh
                    .iter()
                    .filter(|n| !state.entity_exists(EntityKind::Role, n))
                {
                    out.push(AdminAction::AddRole { role: name.clone() });
                }
            }
            ActionKind::DeleteRole => {
                for r in &roles {
                    out.push(AdminAction::DeleteRole { role: r.to_string() });
                }
            }
            ActionKind::AddInheritance => {
                for a in &roles {
                    for d in &roles {
                        if a != d && !edges.contains(&(a, d)) {
                            out.push(AdminAction::AddInheritance {
                                ascendant: a.to_string(),
                                descendant: d.to_string(),
                            });
                        }
                    }
                }
            }
            ActionKind::DeleteInheritance => {
                for (a, d) in &edges {
                    out.push(AdminAction::DeleteInheritance {
                        ascendant: a.to_string(),
                        descendant: d.to_string(),
                    });
                }
            }
        }
    }
    out.sort_by_key(|a| a.to_string());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perm(s: &str) -> Permission {
        s.parse().unwrap()
    }

    fn goal(s: &str) -> BTreeSet<Permission> {
        s.split_whitespace().map(|p| perm(p)).collect()
    }

    /// user u, permission read:doc on role carrier, role spare without it.
    fn base_engine() -> Engine {
        let mut e = Engine::new();
        e.add_user("u").unwrap();
        e.add_operation("read").unwrap();
        e.add_object("doc").unwrap();
        e.add_role("carrier").unwrap();
        e.add_role("spare").unwrap();
        e.grant_permission("read", "doc", "carrier").unwrap();
        e
    }

    #[test]
    fn single_assignment_reaches_goal() {
        let e = base_engine();
        let plan = e
            .get_roles_shortest_plan(None, "u", &goal("read:doc"), &PlannerOptions::default())
            .unwrap();
        assert_eq!(plan.render(), "AssignUser u carrier\n");
    }

    #[test]
    fn satisfied_goal_needs_no_steps() {
        let mut e = base_engine();
        e.assign_user("u", "carrier").unwrap();
        let plan = e
            .get_roles_shortest_plan(None, "u", &goal("read:doc"), &PlannerOptions::default())
            .unwrap();
        assert!(plan.steps.is_empty());
    }

    #[test]
    fn no_roles_and_no_fresh_names_means_no_plan() {
        let mut e = Engine::new();
        e.add_user("u").unwrap();
        e.add_operation("read").unwrap();
        e.add_object("doc").unwrap();
        let opts = PlannerOptions {
            fresh_role_cap: 0,
            ..PlannerOptions::default()
        };
        let err = e
            .get_roles_shortest_plan(None, "u", &goal("read:doc"), &opts)
            .unwrap_err();
        assert_eq!(err.code(), "NO_PLAN");

        // With a fresh name allowed the goal needs three steps; the
        // lexicographically least ordering assigns before granting.
        let plan = e
            .get_roles_shortest_plan(None, "u", &goal("read:doc"), &PlannerOptions::default())
            .unwrap();
        assert_eq!(
            plan.render(),
            "AddRole role_1\nAssignUser u role_1\nGrantPermission read:doc role_1\n"
        );
    }

    #[test]
    fn exhausted_depth_is_distinguished_from_no_plan() {
        let mut e = Engine::new();
        e.add_user("u").unwrap();
        e.add_operation("read").unwrap();
        e.add_object("doc").unwrap();
        let opts = PlannerOptions {
            depth_bound: 2,
            ..PlannerOptions::default()
        };
        let err = e
            .get_roles_shortest_plan(None, "u", &goal("read:doc"), &opts)
            .unwrap_err();
        assert_eq!(err.code(), "DEPTH_EXCEEDED");
    }

    #[test]
    fn blocked_assignment_is_not_an_edge() {
        // An SSD pair makes the direct assignment uncommittable, so the
        // planner must route around it.
        let mut e = base_engine();
        e.add_role("held").unwrap();
        e.assign_user("u", "held").unwrap();
        e.create_ssd_set("no_pair", &["held", "carrier"], 2).unwrap();
        let opts = PlannerOptions {
            alphabet: BTreeSet::from([ActionKind::AssignUser]),
            ..PlannerOptions::default()
        };
        let err = e
            .get_roles_shortest_plan(None, "u", &goal("read:doc"), &opts)
            .unwrap_err();
        assert_eq!(err.code(), "NO_PLAN");

        // Granting onto an assignable role is the shortest way around.
        let plan = e
            .get_roles_shortest_plan(None, "u", &goal("read:doc"), &PlannerOptions::default())
            .unwrap();
        assert_eq!(plan.cost(), 1);
        assert_eq!(plan.render(), "GrantPermission read:doc held\n");
    }

    #[test]
    fn ties_break_on_rendered_action_text() {
        let mut e = base_engine();
        e.grant_permission("read", "doc", "spare").unwrap();
        let plan = e
            .get_roles_shortest_plan(None, "u", &goal("read:doc"), &PlannerOptions::default())
            .unwrap();
        assert_eq!(plan.render(), "AssignUser u carrier\n");
    }

    #[test]
    fn plans_replay_through_the_engine() {
        let mut e = Engine::new();
        e.add_user("u").unwrap();
        e.add_operation("read").unwrap();
        e.add_object("doc").unwrap();
        let plan = e
            .get_roles_shortest_plan(None, "u", &goal("read:doc"), &PlannerOptions::default())
            .unwrap();
        let mut replay = e.fork_at(None).unwrap();
        for step in &plan.steps {
            replay.apply_admin_action(step).unwrap();
        }
        assert!(replay.accessible_permissions("u").unwrap().contains(&perm("read:doc")));
    }

    #[test]
    fn revocation_cuts_single_assignment() {
        let mut e = base_engine();
        e.assign_user("u", "carrier").unwrap();
        let plan = e
            .get_revocation_shortest_plan(
                None,
                "u",
                &goal("read:doc"),
                &PlannerOptions::revocation_default(),
            )
            .unwrap();
        assert_eq!(plan.render(), "DeassignUser u carrier\n");
    }

    #[test]
    fn revocation_when_not_authorized_is_empty() {
        let e = base_engine();
        let plan = e
            .get_revocation_shortest_plan(
                None,
                "u",
                &goal("read:doc"),
                &PlannerOptions::revocation_default(),
            )
            .unwrap();
        assert!(plan.steps.is_empty());
    }

    #[test]
    fn two_grant_paths_need_two_cuts() {
        let mut e = base_engine();
        e.grant_permission("read", "doc", "spare").unwrap();
        e.assign_user("u", "carrier").unwrap();
        e.assign_user("u", "spare").unwrap();
        let plan = e
            .get_revocation_shortest_plan(
                None,
                "u",
                &goal("read:doc"),
                &PlannerOptions::revocation_default(),
            )
            .unwrap();
        assert_eq!(plan.cost(), 2);
    }

    #[test]
    fn shared_inheritance_edge_cuts_in_one() {
        // u holds two seniors that both reach the permission only through
        // one junior chain link; cutting that link revokes everything.
        let mut e = Engine::new();
        e.add_user("u").unwrap();
        e.add_operation("read").unwrap();
        e.add_object("doc").unwrap();
        for r in ["s1", "s2", "mid", "leaf"] {
            e.add_role(r).unwrap();
        }
        e.add_inheritance("s1", "mid").unwrap();
        e.add_inheritance("s2", "mid").unwrap();
        e.add_inheritance("mid", "leaf").unwrap();
        e.grant_permission("read", "doc", "leaf").unwrap();
        e.assign_user("u", "s1").unwrap();
        e.assign_user("u", "s2").unwrap();
        let plan = e
            .get_revocation_shortest_plan(
                None,
                "u",
                &goal("read:doc"),
                &PlannerOptions::revocation_default(),
            )
            .unwrap();
        assert_eq!(plan.cost(), 1);
        assert_eq!(plan.render(), "DeleteInheritance mid leaf\n");
    }

    #[test]
    fn unknown_inputs_are_rejected() {
        let e = base_engine();
        let err = e
            .get_roles_shortest_plan(None, "ghost", &goal("read:doc"), &PlannerOptions::default())
            .unwrap_err();
        assert_eq!(err.code(), "UNKNOWN_ENTITY");
        let err = e
            .get_roles_shortest_plan(None, "u", &goal("write:doc"), &PlannerOptions::default())
            .unwrap_err();
        assert_eq!(err.code(), "UNKNOWN_ENTITY");
    }
}
