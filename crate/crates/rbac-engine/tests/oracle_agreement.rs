//! Randomized cross-checks of the optimized paths against the reference
//! oracles, at a scale small enough for every `cargo test` run. The
//! acceptance suite repeats the same equivalences at full size.

use std::collections::BTreeSet;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rbac_engine::rules::{builtin_library, Value};
use rbac_engine::{
    minimize_roles, minimize_with_hierarchy, AccessMatrix, Components, Engine, MinimizeObjective,
    Permission, PlannerOptions,
};
use rbac_oracle::{
    oracle_check_access, oracle_closure_of, oracle_constraint_violations, oracle_flat_best,
    oracle_hier_best, oracle_replay_snapshot, oracle_shortest_plan, PlanQuery, PlanSearch,
    Violation,
};

const USERS: [&str; 3] = ["u0", "u1", "u2"];
const ROLES: [&str; 5] = ["r0", "r1", "r2", "r3", "r4"];
const OPS: [&str; 2] = ["read", "write"];
const OBJS: [&str; 2] = ["doc", "img"];
const SESSIONS: [&str; 2] = ["s0", "s1"];
const SODS: [&str; 2] = ["sod0", "sod1"];

fn pick<'a>(rng: &mut ChaCha8Rng, pool: &[&'a str]) -> &'a str {
    pool[rng.gen_range(0..pool.len())]
}

/// Applies one random operation; errors are part of what the tests observe.
fn random_op(rng: &mut ChaCha8Rng, e: &mut Engine) -> Result<u64, rbac_engine::RbacError> {
    match rng.gen_range(0..20) {
        0 => e.add_user(pick(rng, &USERS)),
        1 => e.add_role(pick(rng, &ROLES)),
        2 => e.add_operation(pick(rng, &OPS)),
        3 => e.add_object(pick(rng, &OBJS)),
        4 | 5 => e.assign_user(pick(rng, &USERS), pick(rng, &ROLES)),
        6 => e.deassign_user(pick(rng, &USERS), pick(rng, &ROLES)),
        7 | 8 => e.grant_permission(pick(rng, &OPS), pick(rng, &OBJS), pick(rng, &ROLES)),
        9 => e.revoke_permission(pick(rng, &OPS), pick(rng, &OBJS), pick(rng, &ROLES)),
        10 => e.add_inheritance(pick(rng, &ROLES), pick(rng, &ROLES)),
        11 => e.delete_inheritance(pick(rng, &ROLES), pick(rng, &ROLES)),
        12 => e.create_session(pick(rng, &USERS), pick(rng, &SESSIONS), &[]),
        13 => e.delete_session(pick(rng, &USERS), pick(rng, &SESSIONS)),
        14 | 15 => e.add_active_role(pick(rng, &USERS), pick(rng, &SESSIONS), pick(rng, &ROLES)),
        16 => {
            let members = [pick(rng, &ROLES), pick(rng, &ROLES)];
            if rng.gen_bool(0.5) {
                e.create_ssd_set(pick(rng, &SODS), &members, 2)
            } else {
                e.create_dsd_set(pick(rng, &SODS), &members, 2)
            }
        }
        17 => e.add_sod_role_member(pick(rng, &SODS), pick(rng, &ROLES)),
        18 => e.drop_active_role(pick(rng, &USERS), pick(rng, &SESSIONS), pick(rng, &ROLES)),
        _ => match rng.gen_range(0..3) {
            0 => e.delete_role(pick(rng, &ROLES)),
            1 => e.delete_user(pick(rng, &USERS)),
            _ => e.delete_sod_role_member(pick(rng, &SODS), pick(rng, &ROLES)),
        },
    }
}

fn random_engine(rng: &mut ChaCha8Rng, comps: Components, ops: usize) -> Engine {
    let mut e = Engine::with_components(comps);
    for _ in 0..ops {
        let _ = random_op(rng, &mut e);
    }
    e
}

fn all_components() -> Components {
    Components {
        hierarchy: true,
        ssd: true,
        dsd: true,
    }
}

fn core_only() -> Components {
    Components {
        hierarchy: false,
        ssd: false,
        dsd: false,
    }
}

fn datalog_geq(e: &Engine) -> BTreeSet<(String, String)> {
    let fix = e.evaluate_rules(&builtin_library(), None).unwrap();
    fix.get("geq")
        .into_iter()
        .flatten()
        .map(|row| match (&row[0], &row[1]) {
            (Value::Sym(a), Value::Sym(b)) => (a.clone(), b.clone()),
            other => panic!("geq should bind role names, got {other:?}"),
        })
        .collect()
}

#[test]
fn closure_index_floyd_warshall_and_datalog_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let mut e = Engine::new();
        let n = rng.gen_range(2..10);
        let names: Vec<String> = (0..n).map(|i| format!("role{i}")).collect();
        for name in &names {
            e.add_role(name).unwrap();
        }
        for _ in 0..rng.gen_range(0..20) {
            // Edges always point from a lower index to a higher one, so
            // insertion order can never form a cycle.
            let i = rng.gen_range(0..n - 1);
            let j = rng.gen_range(i + 1..n);
            let _ = e.add_inheritance(&names[i], &names[j]);
            let maintained = e.closure().pairs().clone();
            assert_eq!(maintained, oracle_closure_of(e.state()));
            assert_eq!(maintained, datalog_geq(&e));
        }
        // Deletions force the recompute path.
        let edges: Vec<(String, String)> = e
            .state()
            .relation(rbac_engine::Rel::Rh)
            .map(|t| {
                (
                    t.fields[0].as_name().unwrap().to_string(),
                    t.fields[1].as_name().unwrap().to_string(),
                )
            })
            .collect();
        if let Some((a, d)) = edges.first() {
            e.delete_inheritance(a, d).unwrap();
            assert_eq!(*e.closure().pairs(), oracle_closure_of(e.state()));
            assert_eq!(*e.closure().pairs(), datalog_geq(&e));
        }
    }
}

#[test]
fn check_access_matches_the_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for comps in [all_components(), core_only()] {
        for _ in 0..30 {
            let e = random_engine(&mut rng, comps, 40);
            for _ in 0..40 {
                let session = if rng.gen_bool(0.8) {
                    pick(&mut rng, &SESSIONS)
                } else {
                    "ghost"
                };
                let op = pick(&mut rng, &[OPS[0], OPS[1], "nop"]);
                let ob = pick(&mut rng, &[OBJS[0], OBJS[1], "nob"]);
                let got = e.check_access(session, op, ob).ok();
                let want = oracle_check_access(e.state(), comps, session, op, ob);
                assert_eq!(got, want, "session={session} {op}:{ob} comps={comps:?}");
            }
        }
    }
}

#[test]
fn commits_are_constraint_free_and_rejections_roll_back() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    for round in 0..60 {
        let comps = if round % 3 == 0 {
            core_only()
        } else {
            all_components()
        };
        let mut e = Engine::with_components(comps);
        for _ in 0..30 {
            let before_text = e.snapshot_text();
            let before_version = e.version();
            match random_op(&mut rng, &mut e) {
                Ok(v) => {
                    assert_eq!(v, before_version + 1);
                    assert!(
                        oracle_constraint_violations(e.state(), comps).is_empty(),
                        "commit left a violation behind:\n{}",
                        e.snapshot_text()
                    );
                }
                Err(_) => {
                    assert_eq!(e.snapshot_text(), before_text);
                    assert_eq!(e.version(), before_version);
                }
            }
        }
        let deltas: Vec<_> = (1..=e.version())
            .map(|v| e.store().delta_for(v).unwrap())
            .collect();
        assert_eq!(oracle_replay_snapshot(deltas), e.snapshot_text());
    }
}

#[test]
fn rejection_witnesses_describe_real_violations() {
    // Build states one step short of a separation conflict, take the final
    // step, then re-verify the engine's witness by parsing the would-be
    // state (head snapshot plus the denied row) and asking the oracle.
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let comps = all_components();
    let mut checked = 0;
    for _ in 0..40 {
        let mut e = Engine::with_components(comps);
        for u in USERS {
            e.add_user(u).unwrap();
        }
        for r in ROLES {
            e.add_role(r).unwrap();
        }
        let conflict: Vec<&str> = ROLES.choose_multiple(&mut rng, 2).copied().collect();
        let (ra, rb) = (conflict[0], conflict[1]);
        let user = pick(&mut rng, &USERS);

        // SSD through a direct assignment.
        e.create_ssd_set("sod0", &[ra, rb], 2).unwrap();
        e.assign_user(user, ra).unwrap();
        let denied = e.assign_user(user, rb);
        verify_witness(&e, denied, &[format!("ua({user},{rb})")], comps);
        checked += 1;

        // SSD through an inheritance edge: a third role reaching rb.
        let top = ROLES.iter().find(|r| **r != ra && **r != rb).unwrap();
        e.assign_user(user, top).unwrap();
        let denied = e.add_inheritance(top, rb);
        verify_witness(&e, denied, &[format!("rh({top},{rb})")], comps);
        checked += 1;

        // DSD through role activation.
        e.deassign_user(user, ra).unwrap();
        e.create_dsd_set("sod1", &[ra, *top], 2).unwrap();
        e.assign_user(user, ra).unwrap();
        e.create_session(user, "s0", &[ra]).unwrap();
        let denied = e.add_active_role(user, "s0", top);
        verify_witness(&e, denied, &[format!("session_role(s0,{top})")], comps);
        checked += 1;
    }
    assert_eq!(checked, 120);
}

fn verify_witness(
    e: &Engine,
    denied: Result<u64, rbac_engine::RbacError>,
    denied_rows: &[String],
    comps: Components,
) {
    let Err(rbac_engine::RbacError::ConstraintViolation { constraint, witness }) = denied else {
        panic!("expected a constraint rejection, got {denied:?}");
    };
    let mut text = e.snapshot_text();
    for row in denied_rows {
        text.push_str(row);
        text.push('\n');
    }
    let candidate = rbac_engine::State::parse_snapshot(&text).unwrap();
    let violations = oracle_constraint_violations(&candidate, comps);
    assert!(
        violations.contains(&Violation {
            constraint: constraint.clone(),
            witness: witness.clone()
        }),
        "engine witness not among oracle violations: {constraint} {witness:?}\n{text}"
    );
}

fn random_target(rng: &mut ChaCha8Rng) -> AccessMatrix {
    let perms: Vec<Permission> = ["read:doc", "read:img", "write:doc"]
        .iter()
        .map(|p| p.parse().unwrap())
        .collect();
    let mut pairs = Vec::new();
    for user in USERS {
        for p in &perms {
            if rng.gen_bool(0.4) {
                pairs.push((user.to_string(), p.clone()));
            }
        }
    }
    AccessMatrix::from_pairs(pairs)
}

#[test]
fn minimizer_costs_match_the_exhaustive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    for _ in 0..60 {
        let target = random_target(&mut rng);
        let flat = minimize_roles(&target);
        assert_eq!(
            (flat.role_count(), flat.ua.len() + flat.pa.len()),
            oracle_flat_best(target.rows())
        );
        assert_eq!(flat.induced_matrix().rows(), target.rows());

        let cap = rng.gen_range(1..=4);
        for objective in [MinimizeObjective::Roles, MinimizeObjective::Edges] {
            let want = oracle_hier_best(target.rows(), cap, objective);
            match minimize_with_hierarchy(&target, cap, objective) {
                Ok(d) => {
                    let key = match objective {
                        MinimizeObjective::Roles => (d.role_count(), d.edge_count()),
                        MinimizeObjective::Edges => (d.edge_count(), d.role_count()),
                    };
                    assert_eq!(Some(key), want);
                    assert_eq!(d.induced_matrix().rows(), target.rows());
                }
                Err(err) => {
                    assert_eq!(err.code(), "CAP_EXCEEDED");
                    assert_eq!(want, None);
                }
            }
        }
    }
}

#[test]
fn planner_lengths_match_the_exhaustive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(67);
    let mut plans_found = 0;
    for round in 0..100 {
        let e = random_engine(&mut rng, all_components(), 30);
        if !e.state().entity_exists(rbac_engine::EntityKind::User, "u0") {
            continue;
        }
        let mut goal: BTreeSet<Permission> = BTreeSet::new();
        for _ in 0..rng.gen_range(1..=2) {
            let op = pick(&mut rng, &OPS);
            let ob = pick(&mut rng, &OBJS);
            if e.state().entity_exists(rbac_engine::EntityKind::Operation, op)
                && e.state().entity_exists(rbac_engine::EntityKind::Object, ob)
            {
                goal.insert(Permission::new(op, ob));
            }
        }
        if goal.is_empty() {
            continue;
        }
        let revoke = round % 2 == 1;
        let opts = if revoke {
            PlannerOptions {
                depth_bound: 3,
                ..PlannerOptions::revocation_default()
            }
        } else {
            PlannerOptions {
                depth_bound: 3,
                ..PlannerOptions::default()
            }
        };
        let query = PlanQuery {
            user: "u0".to_string(),
            goal: goal.clone(),
            revoke,
            alphabet: opts.alphabet.clone(),
            fresh_role_cap: opts.fresh_role_cap,
            depth_bound: opts.depth_bound,
            node_budget: 2_000_000,
        };
        let engine_result = if revoke {
            e.get_revocation_shortest_plan(None, "u0", &goal, &opts)
        } else {
            e.get_roles_shortest_plan(None, "u0", &goal, &opts)
        };
        match oracle_shortest_plan(&e, &query) {
            PlanSearch::Plan(steps) => {
                let plan = engine_result.expect("oracle found a plan, engine must too");
                assert_eq!(plan.cost(), steps.len());
                let mut replay = e.fork_at(None).unwrap();
                for step in &plan.steps {
                    replay.apply_admin_action(step).unwrap();
                }
                plans_found += 1;
            }
            PlanSearch::NoPlan | PlanSearch::DepthExceeded => {
                assert!(engine_result.is_err());
            }
            PlanSearch::BudgetExceeded => {}
        }
    }
    assert!(plans_found > 10, "too few solvable instances: {plans_found}");
}

#[test]
fn committed_versions_stay_byte_stable() {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let mut e = Engine::new();
    let mut history = vec![e.snapshot_text()];
    for _ in 0..250 {
        if random_op(&mut rng, &mut e).is_ok() {
            history.push(e.snapshot_text());
        }
    }
    assert!(history.len() > 40, "too few commits: {}", history.len());
    for (v, text) in history.iter().enumerate() {
        assert_eq!(e.state_at(v as u64).unwrap().snapshot_text(), *text);
    }
}
