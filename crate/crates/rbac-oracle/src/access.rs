//! Access decisions and permission reviews recomputed by unfolding the
//! definitions over raw relation scans, with no indexes.

use std::collections::BTreeSet;

use rbac_engine::{Components, Permission, Rel, State};

use crate::closure::oracle_closure_of;

fn assigned_roles(state: &State, user: &str) -> BTreeSet<String> {
    state
        .relation(Rel::Ua)
        .filter(|t| t.fields[0].as_name() == Some(user))
        .map(|t| t.fields[1].as_name().expect("role name").to_string())
        .collect()
}

fn active_roles(state: &State, session: &str) -> BTreeSet<String> {
    state
        .relation(Rel::SessionRole)
        .filter(|t| t.fields[0].as_name() == Some(session))
        .map(|t| t.fields[1].as_name().expect("role name").to_string())
        .collect()
}

/// Roles reachable from `seed` through the hierarchy when that component is
/// enabled; just `seed` itself otherwise.
fn reachable_roles(state: &State, comps: Components, seed: &BTreeSet<String>) -> BTreeSet<String> {
    if !comps.hierarchy {
        return seed.clone();
    }
    let geq = oracle_closure_of(state);
    geq.into_iter()
        .filter(|(senior, _)| seed.contains(senior))
        .map(|(_, junior)| junior)
        .collect()
}

fn grants_of(state: &State, carriers: &BTreeSet<String>) -> BTreeSet<Permission> {
    state
        .relation(Rel::Pa)
        .filter(|t| {
            let carrier = t.fields[2].as_name().expect("role name");
            carriers.contains(carrier)
        })
        .map(|t| {
            Permission::new(
                t.fields[0].as_name().expect("operation name"),
                t.fields[1].as_name().expect("object name"),
            )
        })
        .collect()
}

/// CheckAccess by direct unfolding: some permission grant must sit on a role
/// the session's active set reaches. `None` mirrors the engine's input
/// errors (unknown session, operation, or object).
pub fn oracle_check_access(
    state: &State,
    comps: Components,
    session: &str,
    operation: &str,
    object: &str,
) -> Option<bool> {
    state
        .relation(Rel::Session)
        .find(|t| t.fields[0].as_name() == Some(session))?;
    state
        .relation(Rel::Operation)
        .find(|t| t.fields[0].as_name() == Some(operation))?;
    state
        .relation(Rel::Object)
        .find(|t| t.fields[0].as_name() == Some(object))?;
    let carriers = reachable_roles(state, comps, &active_roles(state, session));
    let hit = state.relation(Rel::Pa).any(|t| {
        t.fields[0].as_name() == Some(operation)
            && t.fields[1].as_name() == Some(object)
            && carriers.contains(t.fields[2].as_name().expect("role name"))
    });
    Some(hit)
}

/// Core-semantics user review: the union of the direct grants of the user's
/// assigned roles. `None` for an unknown user.
pub fn oracle_user_permissions(state: &State, user: &str) -> Option<BTreeSet<Permission>> {
    state
        .relation(Rel::User)
        .find(|t| t.fields[0].as_name() == Some(user))?;
    Some(grants_of(state, &assigned_roles(state, user)))
}

/// Permissions the user can obtain through some session: assigned roles,
/// widened through the hierarchy when enabled. `None` for an unknown user.
pub fn oracle_accessible_permissions(
    state: &State,
    comps: Components,
    user: &str,
) -> Option<BTreeSet<Permission>> {
    state
        .relation(Rel::User)
        .find(|t| t.fields[0].as_name() == Some(user))?;
    let carriers = reachable_roles(state, comps, &assigned_roles(state, user));
    Some(grants_of(state, &carriers))
}
