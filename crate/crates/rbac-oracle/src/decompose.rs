//! Exhaustive search for minimal role decompositions. Families are drawn
//! from every nonempty subset of the full permission universe, so this also
//! double-checks the engine's restriction of candidates to row subsets.
//! Costs only; exponential in the permission count (capped at 16).

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use rbac_engine::{MinimizeObjective, Permission};

type Target = BTreeMap<String, BTreeSet<Permission>>;

struct Instance {
    /// One permission bitmask per user row.
    rows: Vec<u32>,
    /// Every nonempty subset of the permission universe.
    universe: Vec<u32>,
}

fn instance(target: &Target) -> Instance {
    let perms: Vec<&Permission> = target
        .values()
        .flatten()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    assert!(perms.len() <= 16, "oracle decomposition is capped at 16 permissions");
    let mask = |row: &BTreeSet<Permission>| {
        row.iter()
            .map(|p| 1u32 << perms.iter().position(|q| *q == p).unwrap())
            .fold(0, |m, b| m | b)
    };
    Instance {
        rows: target.values().map(mask).collect(),
        universe: (1u32..1 << perms.len()).collect(),
    }
}

/// Fewest roles whose exact unions realize `row`, if any.
fn cover_cost(family: &[u32], row: u32) -> Option<usize> {
    (0u32..1 << family.len())
        .filter(|pick| {
            let mut union = 0;
            for (i, set) in family.iter().enumerate() {
                if pick & (1 << i) != 0 {
                    if set & !row != 0 {
                        return false;
                    }
                    union |= set;
                }
            }
            union == row
        })
        .map(|pick| pick.count_ones() as usize)
        .min()
}

/// Cheapest realization of one role: direct grants for whatever its proper
/// subsets in the family do not already contribute via inheritance.
fn role_cost(family: &[u32], i: usize) -> usize {
    let juniors: Vec<u32> = family
        .iter()
        .enumerate()
        .filter(|(j, s)| *j != i && *s & !family[i] == 0 && **s != family[i])
        .map(|(_, s)| *s)
        .collect();
    (0u32..1 << juniors.len())
        .map(|pick| {
            let mut inherited = 0;
            for (j, s) in juniors.iter().enumerate() {
                if pick & (1 << j) != 0 {
                    inherited |= s;
                }
            }
            pick.count_ones() as usize + (family[i] & !inherited).count_ones() as usize
        })
        .min()
        .expect("the empty junior pick is always evaluated")
}

fn flat_edges(inst: &Instance, family: &[u32]) -> Option<usize> {
    let mut edges = family.iter().map(|s| s.count_ones() as usize).sum();
    for row in &inst.rows {
        edges += cover_cost(family, *row)?;
    }
    Some(edges)
}

fn hier_edges(inst: &Instance, family: &[u32]) -> Option<usize> {
    let mut edges = (0..family.len()).map(|i| role_cost(family, i)).sum();
    for row in &inst.rows {
        edges += cover_cost(family, *row)?;
    }
    Some(edges)
}

fn families(inst: &Instance, size: usize) -> impl Iterator<Item = Vec<u32>> + '_ {
    inst.universe.iter().copied().combinations(size)
}

/// The smallest feasible role count, checked family by family.
pub fn oracle_min_role_count(target: &Target) -> usize {
    oracle_flat_best(target).0
}

/// The flat optimum as the engine keys it: fewest roles first, then fewest
/// assignment plus grant edges among the minimal families.
pub fn oracle_flat_best(target: &Target) -> (usize, usize) {
    let inst = instance(target);
    for size in 0..=inst.universe.len() {
        let best = families(&inst, size)
            .filter_map(|f| flat_edges(&inst, &f))
            .min();
        if let Some(edges) = best {
            return (size, edges);
        }
    }
    unreachable!("the singleton family of every row is always feasible");
}

/// The hierarchical optimum under a role cap, keyed per objective:
/// `(roles, edges)` when minimizing roles, `(edges, roles)` when minimizing
/// edges. `None` when no family within the cap realizes the target.
pub fn oracle_hier_best(
    target: &Target,
    role_cap: usize,
    objective: MinimizeObjective,
) -> Option<(usize, usize)> {
    let inst = instance(target);
    let cap = role_cap.min(inst.universe.len());
    match objective {
        MinimizeObjective::Roles => {
            for size in 0..=cap {
                let best = families(&inst, size)
                    .filter_map(|f| hier_edges(&inst, &f))
                    .min();
                if let Some(edges) = best {
                    return Some((size, edges));
                }
            }
            None
        }
        MinimizeObjective::Edges => {
            let mut best: Option<(usize, usize)> = None;
            for size in 0..=cap {
                for family in families(&inst, size) {
                    if let Some(edges) = hier_edges(&inst, &family) {
                        let key = (edges, size);
                        if best.is_none_or(|b| key < b) {
                            best = Some(key);
                        }
                    }
                }
            }
            best
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn target(rows: &[(&str, &[&str])]) -> Target {
        rows.iter()
            .map(|(u, ps)| {
                (
                    u.to_string(),
                    ps.iter().map(|p| p.parse::<Permission>().unwrap()).collect(),
                )
            })
            .collect()
    }

    #[test]
    fn single_pair_costs_one_role_and_two_edges() {
        let t = target(&[("u", &["read:doc"])]);
        assert_eq!(oracle_min_role_count(&t), 1);
        assert_eq!(oracle_flat_best(&t), (1, 2));
        assert_eq!(oracle_hier_best(&t, 1, MinimizeObjective::Edges), Some((2, 1)));
    }

    #[test]
    fn empty_target_is_free() {
        let t = Target::new();
        assert_eq!(oracle_flat_best(&t), (0, 0));
        assert_eq!(oracle_hier_best(&t, 4, MinimizeObjective::Roles), Some((0, 0)));
    }

    #[test]
    fn identical_rows_share_one_role() {
        let t = target(&[("a", &["read:doc", "write:doc"]), ("b", &["read:doc", "write:doc"])]);
        assert_eq!(oracle_flat_best(&t), (1, 4));
    }

    #[test]
    fn nested_rows_profit_from_inheritance() {
        let t = target(&[
            ("u1", &["p1:o"]),
            ("u2", &["p1:o", "p2:o"]),
            ("u3", &["p1:o", "p2:o", "p3:o"]),
        ]);
        // Flat: {p1},{p1 p2},{p3} covers with 4 assignments + 4 grants.
        assert_eq!(oracle_flat_best(&t), (3, 8));
        // A chain turns each step into one inheritance edge + one grant.
        assert_eq!(oracle_hier_best(&t, 3, MinimizeObjective::Edges), Some((8, 3)));
    }

    #[test]
    fn cap_below_feasibility_is_none() {
        let t = target(&[("a", &["p1:o"]), ("b", &["p2:o"])]);
        assert_eq!(oracle_hier_best(&t, 1, MinimizeObjective::Edges), None);
        assert!(oracle_hier_best(&t, 2, MinimizeObjective::Edges).is_some());
    }

    #[test]
    fn objectives_order_the_key_differently() {
        let t = target(&[("u1", &["p1:o"]), ("u2", &["p1:o", "p2:o"])]);
        let roles = oracle_hier_best(&t, 4, MinimizeObjective::Roles).unwrap();
        let edges = oracle_hier_best(&t, 4, MinimizeObjective::Edges).unwrap();
        assert_eq!(roles.0, 2);
        assert_eq!(edges.0, roles.1);
    }
}
