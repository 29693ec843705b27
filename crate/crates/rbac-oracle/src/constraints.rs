//! Every constraint violation in a state, found by rescanning the relations
//! from scratch. The engine stops at the first violation per commit; this
//! oracle enumerates all of them so tests can check containment.

use std::collections::{BTreeMap, BTreeSet};

use rbac_engine::{Components, FieldValue, Rel, State, Tuple, Witness};

use crate::closure::oracle_closure_of;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Violation {
    /// The SoD set name for separation violations, or the check name for
    /// structural ones (`sod_wellformed`, `session_soundness`).
    pub constraint: String,
    pub witness: Witness,
}

fn name_tuple(rel: Rel, fields: &[&str]) -> Tuple {
    Tuple::new(rel, fields.iter().map(|f| FieldValue::name(*f)).collect())
}

/// `(name, cardinality, member roles)` for every SoD set of one flavor.
fn sod_sets(state: &State, set_rel: Rel, role_rel: Rel) -> Vec<(String, u32, BTreeSet<String>)> {
    state
        .relation(set_rel)
        .map(|t| {
            let name = t.fields[0].as_name().expect("set name").to_string();
            let n = t.fields[1].as_num().expect("cardinality");
            let members = state
                .relation(role_rel)
                .filter(|m| m.fields[0].as_name() == Some(&name))
                .map(|m| m.fields[1].as_name().expect("role name").to_string())
                .collect();
            (name, n, members)
        })
        .collect()
}

/// All violations in `state` under the given component configuration,
/// sorted and deduplicated. Matches the engine's commit checks: SSD and DSD
/// apply only when their component is enabled, SSD and session soundness
/// read through the hierarchy only when that component is enabled, and SoD
/// shape plus session soundness always apply.
pub fn oracle_constraint_violations(state: &State, comps: Components) -> Vec<Violation> {
    let mut out = Vec::new();
    let geq = comps.hierarchy.then(|| oracle_closure_of(state));
    let covers = |assigned: &BTreeSet<String>, role: &str| match &geq {
        Some(pairs) => assigned
            .iter()
            .any(|a| pairs.contains(&(a.clone(), role.to_string()))),
        None => assigned.contains(role),
    };

    for (set_rel, role_rel) in [(Rel::SsdSet, Rel::SsdRole), (Rel::DsdSet, Rel::DsdRole)] {
        for (name, n, members) in sod_sets(state, set_rel, role_rel) {
            if n < 2 || n as usize > members.len() {
                let mut witness = Witness::new();
                witness.insert(Tuple::new(
                    set_rel,
                    vec![FieldValue::name(&name), FieldValue::Num(n)],
                ));
                out.push(Violation {
                    constraint: "sod_wellformed".to_string(),
                    witness,
                });
            }
        }
    }

    if comps.ssd {
        for (name, n, members) in sod_sets(state, Rel::SsdSet, Rel::SsdRole) {
            for user_t in state.relation(Rel::User) {
                let user = user_t.fields[0].as_name().expect("user name");
                let assigned: BTreeSet<String> = state
                    .relation(Rel::Ua)
                    .filter(|t| t.fields[0].as_name() == Some(user))
                    .map(|t| t.fields[1].as_name().expect("role name").to_string())
                    .collect();
                let held: Vec<&String> =
                    members.iter().filter(|r| covers(&assigned, r)).collect();
                if held.len() >= n as usize {
                    let mut witness = Witness::from([user_t.clone()]);
                    witness.extend(held.iter().map(|r| name_tuple(Rel::SsdRole, &[&name, r])));
                    out.push(Violation {
                        constraint: name.clone(),
                        witness,
                    });
                }
            }
        }
    }

    if comps.dsd {
        for (name, n, members) in sod_sets(state, Rel::DsdSet, Rel::DsdRole) {
            for session_t in state.relation(Rel::Session) {
                let session = session_t.fields[0].as_name().expect("session name");
                let active: Vec<&String> = members
                    .iter()
                    .filter(|r| {
                        state.relation(Rel::SessionRole).any(|t| {
                            t.fields[0].as_name() == Some(session)
                                && t.fields[1].as_name() == Some(r.as_str())
                        })
                    })
                    .collect();
                if active.len() >= n as usize {
                    let mut witness = Witness::from([session_t.clone()]);
                    witness.extend(
                        active
                            .iter()
                            .map(|r| name_tuple(Rel::SessionRole, &[session, r])),
                    );
                    out.push(Violation {
                        constraint: name.clone(),
                        witness,
                    });
                }
            }
        }
    }

    let owners: BTreeMap<&str, &Tuple> = state
        .relation(Rel::Session)
        .map(|t| (t.fields[0].as_name().expect("session name"), t))
        .collect();
    for sr in state.relation(Rel::SessionRole) {
        let session = sr.fields[0].as_name().expect("session name");
        let role = sr.fields[1].as_name().expect("role name");
        let Some(session_t) = owners.get(session) else { continue };
        let owner = session_t.fields[1].as_name().expect("user name");
        let assigned: BTreeSet<String> = state
            .relation(Rel::Ua)
            .filter(|t| t.fields[0].as_name() == Some(owner))
            .map(|t| t.fields[1].as_name().expect("role name").to_string())
            .collect();
        if !covers(&assigned, role) {
            out.push(Violation {
                constraint: "session_soundness".to_string(),
                witness: Witness::from([(*session_t).clone(), sr.clone()]),
            });
        }
    }

    out.sort();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn comps() -> Components {
        Components {
            hierarchy: true,
            ssd: true,
            dsd: true,
        }
    }

    fn parse(lines: &[&str]) -> State {
        let text: String = lines.iter().map(|l| format!("{l}\n")).collect();
        State::parse_snapshot(&text).unwrap()
    }

    #[test]
    fn clean_state_has_no_violations() {
        let state = parse(&["user(u)", "role(r)", "ua(u,r)"]);
        assert!(oracle_constraint_violations(&state, comps()).is_empty());
    }

    #[test]
    fn ssd_conflict_is_reported_with_the_held_roles() {
        let state = parse(&[
            "user(u)",
            "role(a)",
            "role(b)",
            "ua(u,a)",
            "ua(u,b)",
            "ssd_set(pair,2)",
            "ssd_role(pair,a)",
            "ssd_role(pair,b)",
        ]);
        let got = oracle_constraint_violations(&state, comps());
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].constraint, "pair");
        let expect: Witness = Witness::from([
            name_tuple(Rel::User, &["u"]),
            name_tuple(Rel::SsdRole, &["pair", "a"]),
            name_tuple(Rel::SsdRole, &["pair", "b"]),
        ]);
        assert_eq!(got[0].witness, expect);
    }

    #[test]
    fn ssd_reads_through_the_hierarchy_only_when_enabled() {
        // u is assigned only the senior role; the conflicting pair sits
        // below it in the hierarchy.
        let state = parse(&[
            "user(u)",
            "role(top)",
            "role(a)",
            "role(b)",
            "rh(top,a)",
            "rh(top,b)",
            "ua(u,top)",
            "ssd_set(pair,2)",
            "ssd_role(pair,a)",
            "ssd_role(pair,b)",
        ]);
        assert_eq!(oracle_constraint_violations(&state, comps()).len(), 1);
        let core = Components {
            hierarchy: false,
            ..comps()
        };
        assert!(oracle_constraint_violations(&state, core).is_empty());
    }

    #[test]
    fn dsd_counts_only_explicitly_active_roles() {
        let state = parse(&[
            "user(u)",
            "role(a)",
            "role(b)",
            "ua(u,a)",
            "ua(u,b)",
            "session(s,u)",
            "session_role(s,a)",
            "session_role(s,b)",
            "dsd_set(pair,2)",
            "dsd_role(pair,a)",
            "dsd_role(pair,b)",
        ]);
        let got = oracle_constraint_violations(&state, comps());
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].constraint, "pair");
        assert!(got[0].witness.contains(&name_tuple(Rel::Session, &["s", "u"])));
    }

    #[test]
    fn hollow_sod_sets_violate_shape_even_with_components_off() {
        let state = parse(&["role(a)", "ssd_set(big,3)", "ssd_role(big,a)"]);
        let off = Components {
            hierarchy: false,
            ssd: false,
            dsd: false,
        };
        let got = oracle_constraint_violations(&state, off);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].constraint, "sod_wellformed");
    }

    #[test]
    fn unassigned_active_role_breaks_session_soundness() {
        let state = parse(&["user(u)", "role(r)", "session(s,u)", "session_role(s,r)"]);
        let got = oracle_constraint_violations(&state, comps());
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].constraint, "session_soundness");
        let expect = Witness::from([
            name_tuple(Rel::Session, &["s", "u"]),
            name_tuple(Rel::SessionRole, &["s", "r"]),
        ]);
        assert_eq!(got[0].witness, expect);
    }
}
