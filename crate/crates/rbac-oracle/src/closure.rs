//! Role reachability recomputed by Floyd-Warshall over a dense matrix,
//! deliberately unlike the engine's incrementally maintained index.

use std::collections::BTreeSet;

use rbac_engine::{Rel, State};

/// Reflexive-transitive closure of the inheritance edges over `roles`:
/// every `(senior, junior)` pair connected by a directed path, including the
/// identity pair of each role. Edges mentioning unknown roles are ignored.
pub fn oracle_closure(
    roles: &BTreeSet<String>,
    edges: &BTreeSet<(String, String)>,
) -> BTreeSet<(String, String)> {
    let names: Vec<&String> = roles.iter().collect();
    let pos = |name: &str| names.iter().position(|r| r.as_str() == name);
    let n = names.len();
    let mut reach = vec![vec![false; n]; n];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    for (asc, desc) in edges {
        if let (Some(i), Some(j)) = (pos(asc), pos(desc)) {
            reach[i][j] = true;
        }
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let mut pairs = BTreeSet::new();
    for i in 0..n {
        for j in 0..n {
            if reach[i][j] {
                pairs.insert((names[i].clone(), names[j].clone()));
            }
        }
    }
    pairs
}

pub fn state_roles(state: &State) -> BTreeSet<String> {
    state
        .relation(Rel::Role)
        .map(|t| t.fields[0].as_name().expect("role name").to_string())
        .collect()
}

pub fn state_edges(state: &State) -> BTreeSet<(String, String)> {
    state
        .relation(Rel::Rh)
        .map(|t| {
            (
                t.fields[0].as_name().expect("role name").to_string(),
                t.fields[1].as_name().expect("role name").to_string(),
            )
        })
        .collect()
}

/// Closure of the hierarchy recorded in a state.
pub fn oracle_closure_of(state: &State) -> BTreeSet<(String, String)> {
    oracle_closure(&state_roles(state), &state_edges(state))
}
