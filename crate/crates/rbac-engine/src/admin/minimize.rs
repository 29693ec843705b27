//! Exact role-set minimization, flat and hierarchical.
//!
//! Both optimizers search families of candidate authorized-permission sets.
//! Any useful role's authorized set must be a subset of some target row (a
//! role granting anything outside every row could never be assigned or
//! inherited without over-granting), so the candidate universe is the set of
//! nonempty subsets of rows. A family realizes the target when every row is
//! exactly the union of the family members it contains; costs then decompose
//! independently per role and per user, which keeps the search exact.

use std::collections::BTreeSet;

use super::{AccessMatrix, RoleDecomposition};
use crate::engine::Permission;
use crate::error::RbacError;

/// What `minimize_with_hierarchy` optimizes. The default CLI objective is
/// `Edges`; `Roles` matches the flat optimizer's primary objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinimizeObjective {
    Roles,
    Edges,
}

/// Minimal number of roles realizing `target` exactly, without inheritance.
/// Ties go to fewer ua+pa edges, then to the lexicographically least family
/// of permission sets.
pub fn minimize_roles(target: &AccessMatrix) -> RoleDecomposition {
    let inst = Instance::of(target);
    // One role per distinct row always realizes the target, so the search
    // space within that cap always contains a solution.
    let cap = inst.rows.len();
    match run_search(&inst, cap, Mode::FlatRoles) {
        Some((_, family)) => build(&inst, &family, false),
        None => RoleDecomposition::default(),
    }
}

/// Minimal decomposition with inheritance allowed, searching families of up
/// to `role_cap` roles. Optimality is certified relative to the cap; if no
/// family within the cap realizes the target, the cap is the blocker.
pub fn minimize_with_hierarchy(
    target: &AccessMatrix,
    role_cap: usize,
    objective: MinimizeObjective,
) -> Result<RoleDecomposition, RbacError> {
    let inst = Instance::of(target);
    if inst.rows.is_empty() {
        return Ok(RoleDecomposition::default());
    }
    let mode = match objective {
        MinimizeObjective::Roles => Mode::HierRoles,
        MinimizeObjective::Edges => Mode::HierEdges,
    };
    match run_search(&inst, role_cap, mode) {
        Some((_, family)) => Ok(build(&inst, &family, true)),
        None => Err(RbacError::CapExceeded { cap: role_cap }),
    }
}

struct Instance {
    /// Users with nonempty rows, in user order.
    users: Vec<(String, BTreeSet<Permission>)>,
    /// Distinct nonempty rows.
    rows: Vec<BTreeSet<Permission>>,
    /// Candidate authorized sets: every nonempty subset of every row,
    /// deduplicated, in lexicographic order. Family indices point here.
    universe: Vec<BTreeSet<Permission>>,
    nperms: usize,
}

impl Instance {
    fn of(target: &AccessMatrix) -> Instance {
        let users: Vec<(String, BTreeSet<Permission>)> = target
            .rows()
            .iter()
            .filter(|(_, row)| !row.is_empty())
            .map(|(u, row)| (u.clone(), row.clone()))
            .collect();
        let rows: Vec<BTreeSet<Permission>> = users
            .iter()
            .map(|(_, row)| row.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut universe: BTreeSet<BTreeSet<Permission>> = BTreeSet::new();
        for row in &rows {
            let perms: Vec<&Permission> = row.iter().collect();
            for mask in 1u32..1 << perms.len() {
                universe.insert(
                    perms
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask >> i & 1 == 1)
                        .map(|(_, p)| (*p).clone())
                        .collect(),
                );
            }
        }
        let nperms = target.permissions().len();
        Instance {
            users,
            rows,
            universe: universe.into_iter().collect(),
            nperms,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    FlatRoles,
    HierRoles,
    HierEdges,
}

type Key = (usize, usize);

/// Exhausts ascending-index families of size <= cap in lexicographic order,
/// keeping the first family that attains the best (primary, secondary) key.
/// First-found means ties beyond the key resolve to the lexicographically
/// least family, i.e. the least role content.
fn run_search(inst: &Instance, cap: usize, mode: Mode) -> Option<(Key, Vec<usize>)> {
    let mut best: Option<(Key, Vec<usize>)> = None;
    let mut family = Vec::new();
    descend(inst, cap, mode, 0, &mut family, &mut best);
    best
}

fn descend(
    inst: &Instance,
    cap: usize,
    mode: Mode,
    from: usize,
    family: &mut Vec<usize>,
    best: &mut Option<(Key, Vec<usize>)>,
) {
    for i in from..inst.universe.len() {
        family.push(i);
        if let Some(key) = evaluate(inst, family, mode) {
            if best.as_ref().is_none_or(|(b, _)| key < *b) {
                *best = Some((key, family.clone()));
            }
        }
        if family.len() < cap && !prune(inst, family, best, mode) {
            descend(inst, cap, mode, i + 1, family, best);
        }
        family.pop();
    }
}

/// Whether no extension of `family` can beat the incumbent.
fn prune(inst: &Instance, family: &[usize], best: &Option<(Key, Vec<usize>)>, mode: Mode) -> bool {
    let Some(((primary, secondary), _)) = best else {
        return false;
    };
    let ext_roles = family.len() + 1;
    match mode {
        // Extensions only grow the primary objective.
        Mode::FlatRoles | Mode::HierRoles => ext_roles > *primary,
        // Admissible bound: one ua edge per user, one direct grant per
        // distinct permission, and at least one pa-or-rh edge per role.
        Mode::HierEdges => {
            let lb = inst.users.len() + inst.nperms.max(ext_roles);
            lb > *primary || (lb == *primary && ext_roles >= *secondary)
        }
    }
}

fn evaluate(inst: &Instance, family: &[usize], mode: Mode) -> Option<Key> {
    let sets: Vec<&BTreeSet<Permission>> = family.iter().map(|&i| &inst.universe[i]).collect();
    for row in &inst.rows {
        let mut union = BTreeSet::new();
        for s in &sets {
            if s.is_subset(row) {
                union.extend(s.iter());
            }
        }
        if union.len() != row.len() {
            return None;
        }
    }
    let ua: usize = inst
        .users
        .iter()
        .map(|(_, row)| exact_cover(&sets, row).expect("covered row").0)
        .sum();
    Some(match mode {
        Mode::FlatRoles => {
            let pa: usize = sets.iter().map(|s| s.len()).sum();
            (family.len(), ua + pa)
        }
        Mode::HierRoles | Mode::HierEdges => {
            let pa_rh: usize = (0..sets.len()).map(|i| role_cost(&sets, i).0).sum();
            let edges = ua + pa_rh;
            if mode == Mode::HierRoles {
                (family.len(), edges)
            } else {
                (edges, family.len())
            }
        }
    })
}

/// Fewest family members unioning exactly to `row`. Ties go to the
/// numerically least member mask, i.e. earlier candidates. Returns
/// (count, mask); None only if the family cannot cover the row.
fn exact_cover(sets: &[&BTreeSet<Permission>], row: &BTreeSet<Permission>) -> Option<(usize, u32)> {
    let usable: u32 = (0..sets.len())
        .filter(|&i| sets[i].is_subset(row))
        .fold(0, |m, i| m | 1 << i);
    let mut best: Option<(usize, u32)> = None;
    let mut mask = usable;
    loop {
        let union: BTreeSet<&Permission> = (0..sets.len())
            .filter(|&i| mask >> i & 1 == 1)
            .flat_map(|i| sets[i].iter())
            .collect();
        if union.len() == row.len() {
            let key = (mask.count_ones() as usize, mask);
            if best.is_none_or(|b| key < b) {
                best = Some(key);
            }
        }
        if mask == 0 {
            break;
        }
        mask = (mask - 1) & usable;
    }
    best
}

/// Cheapest realization of role `i` within its family: choose juniors among
/// the strict subsets and grant the remainder directly. Cost is the junior
/// edge count plus direct grants; ties prefer fewer juniors, then earlier
/// ones. Returns (cost, junior mask).
fn role_cost(sets: &[&BTreeSet<Permission>], i: usize) -> (usize, u32) {
    let candidates: u32 = (0..sets.len())
        .filter(|&j| j != i && sets[j].is_subset(sets[i]) && sets[j].len() < sets[i].len())
        .fold(0, |m, j| m | 1 << j);
    let mut best = (sets[i].len(), 0u32);
    let mut mask = candidates;
    while mask != 0 {
        let inherited: BTreeSet<&Permission> = (0..sets.len())
            .filter(|&j| mask >> j & 1 == 1)
            .flat_map(|j| sets[j].iter())
            .collect();
        let direct = sets[i].iter().filter(|p| !inherited.contains(p)).count();
        let cost = mask.count_ones() as usize + direct;
        let key = (cost, mask.count_ones() as usize, mask);
        if key < (best.0, best.1.count_ones() as usize, best.1) {
            best = (cost, mask);
        }
        mask = (mask - 1) & candidates;
    }
    best
}

/// Materializes the winning family as a decomposition with canonical role
/// names in family order.
fn build(inst: &Instance, family: &[usize], hierarchical: bool) -> RoleDecomposition {
    let sets: Vec<&BTreeSet<Permission>> = family.iter().map(|&i| &inst.universe[i]).collect();
    let names: Vec<String> = (1..=sets.len()).map(|i| format!("role_{i}")).collect();
    let mut d = RoleDecomposition {
        roles: names.iter().cloned().collect(),
        ..RoleDecomposition::default()
    };
    for (i, set) in sets.iter().enumerate() {
        if hierarchical {
            let (_, juniors) = role_cost(&sets, i);
            let mut inherited = BTreeSet::new();
            for j in (0..sets.len()).filter(|&j| juniors >> j & 1 == 1) {
                d.rh.insert((names[i].clone(), names[j].clone()));
                inherited.extend(sets[j].iter());
            }
            for p in set.iter().filter(|p| !inherited.contains(*p)) {
                d.pa.insert((p.clone(), names[i].clone()));
            }
        } else {
            for p in set.iter() {
                d.pa.insert((p.clone(), names[i].clone()));
            }
        }
    }
    for (user, row) in &inst.users {
        let (_, mask) = exact_cover(&sets, row).expect("covered row");
        for i in (0..sets.len()).filter(|&i| mask >> i & 1 == 1) {
            d.ua.insert((user.clone(), names[i].clone()));
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perm(s: &str) -> Permission {
        s.parse().unwrap()
    }

    fn matrix(pairs: &[(&str, &str)]) -> AccessMatrix {
        AccessMatrix::from_pairs(
            pairs
                .iter()
                .map(|(u, p)| (u.to_string(), perm(p))),
        )
    }

    #[test]
    fn identical_rows_share_one_role() {
        let t = matrix(&[("u1", "p:1"), ("u1", "p:2"), ("u2", "p:1"), ("u2", "p:2")]);
        let d = minimize_roles(&t);
        assert_eq!(d.role_count(), 1);
        assert_eq!(d.ua.len(), 2);
        assert_eq!(d.pa.len(), 2);
        assert!(d.rh.is_empty());
        assert_eq!(d.induced_matrix(), t);
    }

    #[test]
    fn single_pair_needs_one_role() {
        let t = matrix(&[("u1", "p:1")]);
        let d = minimize_roles(&t);
        assert_eq!(d.role_count(), 1);
        assert_eq!(d.induced_matrix(), t);
    }

    #[test]
    fn disjoint_rows_need_two_roles() {
        let t = matrix(&[("u1", "p:1"), ("u2", "p:2")]);
        let d = minimize_roles(&t);
        assert_eq!(d.role_count(), 2);
        assert_eq!(d.induced_matrix(), t);
    }

    #[test]
    fn hierarchy_cost_on_nested_rows() {
        // u1: {p1}, u2: {p1,p2}. Best edge count is 5, achievable either
        // with an inheritance edge or flat; either way no over-grant.
        let t = matrix(&[("u1", "p:1"), ("u2", "p:1"), ("u2", "p:2")]);
        let d = minimize_with_hierarchy(&t, 4, MinimizeObjective::Edges).unwrap();
        assert_eq!(d.edge_count(), 5);
        assert_eq!(d.induced_matrix(), t);

        let by_roles = minimize_with_hierarchy(&t, 4, MinimizeObjective::Roles).unwrap();
        assert_eq!(by_roles.role_count(), 2);
        assert_eq!(by_roles.induced_matrix(), t);
        assert_eq!(by_roles.role_count(), minimize_roles(&t).role_count());
    }

    #[test]
    fn single_pair_costs_two_edges() {
        let t = matrix(&[("u1", "p:1")]);
        let d = minimize_with_hierarchy(&t, 4, MinimizeObjective::Edges).unwrap();
        assert_eq!(d.edge_count(), 2);
        assert!(d.rh.is_empty());
    }

    #[test]
    fn inheritance_beats_every_flat_decomposition_on_chains() {
        // Nested rows {1} c {1,2} c {1,2,3}: a role chain costs 8 edges
        // (3 ua + 3 pa + 2 rh) while the best flat decomposition costs 9.
        let t = matrix(&[
            ("u1", "p:1"),
            ("u2", "p:1"), ("u2", "p:2"),
            ("u3", "p:1"), ("u3", "p:2"), ("u3", "p:3"),
        ]);
        let d = minimize_with_hierarchy(&t, 4, MinimizeObjective::Edges).unwrap();
        assert_eq!(d.induced_matrix(), t);
        assert!(!d.rh.is_empty(), "expected inheritance in {d:?}");
        assert_eq!(d.edge_count(), 8);
    }

    #[test]
    fn cap_too_small_is_reported() {
        let t = matrix(&[("u1", "p:1"), ("u2", "p:2")]);
        let err = minimize_with_hierarchy(&t, 1, MinimizeObjective::Edges).unwrap_err();
        assert_eq!(err.code(), "CAP_EXCEEDED");
    }

    #[test]
    fn empty_target_yields_empty_decomposition() {
        let d = minimize_roles(&AccessMatrix::default());
        assert_eq!(d, RoleDecomposition::default());
        let h =
            minimize_with_hierarchy(&AccessMatrix::default(), 2, MinimizeObjective::Edges)
                .unwrap();
        assert_eq!(h, RoleDecomposition::default());
    }

    #[test]
    fn results_are_deterministic() {
        let t = matrix(&[
            ("u1", "p:1"), ("u1", "p:2"),
            ("u2", "p:2"), ("u2", "p:3"),
            ("u3", "p:1"), ("u3", "p:3"),
        ]);
        let a = minimize_with_hierarchy(&t, 4, MinimizeObjective::Edges).unwrap();
        let b = minimize_with_hierarchy(&t, 4, MinimizeObjective::Edges).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.induced_matrix(), t);
    }
}
