//! Sequential command execution over one engine.
//!
//! Each command is one engine transaction (or one read). An error rolls
//! that command back and the script continues unless `halt_on_error` is
//! set. The runner also keeps the audit log: one line per state-changing
//! command, `version<TAB>command-text<TAB>ok|error:CODE`, so replaying the
//! command column from the initial snapshot reproduces the final state.

use std::collections::BTreeSet;
use std::fs;

use rbac_engine::rules::{RuleProgram, Value};
use rbac_engine::{
    minimize_roles, minimize_with_hierarchy, AccessMatrix, ActionKind, Engine,
    MinimizeObjective, Permission, PlannerOptions, RbacError, Rel, RoleDecomposition,
    StateVersion,
};
use rbac_oracle::{
    oracle_check_access, oracle_closure_of, oracle_constraint_violations, oracle_flat_best,
    oracle_hier_best, oracle_shortest_plan, PlanQuery, PlanSearch,
};

use crate::command::{parse_line, raw_text, Command};

#[derive(Debug, Clone)]
pub struct RunnerOptions {
    pub halt_on_error: bool,
    /// Fresh roles the planners may invent.
    pub fresh_role_cap: usize,
    /// Longest plan the planners will certify.
    pub plan_depth: usize,
    /// What MinimizeAssignmentsWithHierarchy minimizes first.
    pub objective: MinimizeObjective,
    /// Role cap for the hierarchical minimizer; default is one role per
    /// distinct user row, which is always feasible.
    pub role_cap: Option<usize>,
    /// Re-verify answers against the brute-force reference and report any
    /// divergence as a command error.
    pub oracle: bool,
}

impl Default for RunnerOptions {
    fn default() -> Self {
        RunnerOptions {
            halt_on_error: false,
            fresh_role_cap: 2,
            plan_depth: 6,
            objective: MinimizeObjective::Edges,
            role_cap: None,
            oracle: false,
        }
    }
}

/// One command's result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    /// A committed (or state-affecting) command; renders `ok <version>`.
    Ok(StateVersion),
    /// A query result: zero or more newline-terminated lines.
    Text(String),
    /// A rejected command; renders `! CODE message`.
    Failed { code: String, message: String },
    AssertPassed,
    AssertFailed { got: String, want: String },
}

impl Outcome {
    pub fn from_error(e: RbacError) -> Outcome {
        Outcome::Failed { code: e.code().to_string(), message: e.to_string() }
    }

    pub fn is_error(&self) -> bool {
        matches!(self, Outcome::Failed { .. } | Outcome::AssertFailed { .. })
    }
}

pub fn render_outcome(out: &Outcome) -> String {
    match out {
        Outcome::Ok(v) => format!("ok {v}\n"),
        Outcome::Text(t) => t.clone(),
        Outcome::Failed { code, message } => format!("! {code} {message}\n"),
        Outcome::AssertPassed => "assert ok\n".to_string(),
        Outcome::AssertFailed { got, want } => {
            format!("! ASSERT_FAILED got \"{got}\" want \"{want}\"\n")
        }
    }
}

pub struct ScriptOutput {
    pub rendered: String,
    pub exit_code: u8,
}

pub struct Runner {
    engine: Engine,
    rules: Option<RuleProgram>,
    opts: RunnerOptions,
    audit: Vec<String>,
    ok: usize,
    cmd_err: usize,
    io_err: usize,
    assert_err: usize,
    parse_err: usize,
}

impl Runner {
    pub fn new(engine: Engine, rules: Option<RuleProgram>, opts: RunnerOptions) -> Runner {
        Runner {
            engine,
            rules,
            opts,
            audit: Vec::new(),
            ok: 0,
            cmd_err: 0,
            io_err: 0,
            assert_err: 0,
            parse_err: 0,
        }
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    /// The audit log so far, newline-terminated.
    pub fn audit_text(&self) -> String {
        self.audit.iter().map(|l| format!("{l}\n")).collect()
    }

    /// Runs a whole script and renders every outcome: each command echoes as
    /// `> text`, then its result lines, then a final `# ok=N err=M` summary.
    /// A malformed line is that line's error outcome, not the script's.
    pub fn run_script(&mut self, text: &str) -> ScriptOutput {
        let mut rendered = String::new();
        for (i, line) in text.lines().enumerate() {
            match parse_line(i + 1, line) {
                Ok(None) => continue,
                Ok(Some(parsed)) => {
                    rendered.push_str(&format!("> {}\n", parsed.raw));
                    let outs = self.execute(&parsed.raw, &parsed.command);
                    let halt =
                        self.opts.halt_on_error && outs.iter().any(Outcome::is_error);
                    for out in &outs {
                        rendered.push_str(&render_outcome(out));
                    }
                    if halt {
                        break;
                    }
                }
                Err(e) => {
                    self.parse_err += 1;
                    rendered.push_str(&format!("> {}\n", raw_text(line)));
                    rendered.push_str(&render_outcome(&Outcome::from_error(e)));
                    if self.opts.halt_on_error {
                        break;
                    }
                }
            }
        }
        rendered.push_str(&format!("# ok={} err={}\n", self.ok, self.err_total()));
        ScriptOutput { rendered, exit_code: self.exit_code() }
    }

    fn err_total(&self) -> usize {
        self.cmd_err + self.io_err + self.assert_err + self.parse_err
    }

    /// Worst outcome wins: parse errors, then assertion failures, then I/O
    /// failures, then ordinary command errors.
    pub fn exit_code(&self) -> u8 {
        if self.parse_err > 0 {
            2
        } else if self.assert_err > 0 {
            3
        } else if self.io_err > 0 {
            4
        } else if self.cmd_err > 0 {
            1
        } else {
            0
        }
    }

    /// Executes one command: the outcome, plus a second divergence outcome
    /// when oracle verification is on and disagrees.
    pub fn execute(&mut self, raw: &str, command: &Command) -> Vec<Outcome> {
        let out = self.dispatch(command);
        self.count(&out);
        if command.is_state_command() {
            let status = match &out {
                Outcome::Failed { code, .. } => format!("error:{code}"),
                _ => "ok".to_string(),
            };
            self.audit.push(format!("{}\t{}\t{}", self.engine.version(), raw, status));
        }
        let mut outs = vec![out];
        if self.opts.oracle {
            if let Some(detail) = self.cross_check(command, &outs[0]) {
                let diverged = Outcome::Failed {
                    code: "ORACLE_DIVERGENCE".to_string(),
                    message: detail,
                };
                self.count(&diverged);
                outs.push(diverged);
            }
        }
        outs
    }

    fn count(&mut self, out: &Outcome) {
        match out {
            Outcome::Failed { code, .. } if code == "IO_ERROR" => self.io_err += 1,
            Outcome::Failed { .. } => self.cmd_err += 1,
            Outcome::AssertFailed { .. } => self.assert_err += 1,
            Outcome::Ok(_) | Outcome::Text(_) | Outcome::AssertPassed => self.ok += 1,
        }
    }

    fn dispatch(&mut self, command: &Command) -> Outcome {
        match command {
            Command::AddUser { user } => commit(self.engine.add_user(user)),
            Command::DeleteUser { user } => commit(self.engine.delete_user(user)),
            Command::AddRole { role } => commit(self.engine.add_role(role)),
            Command::DeleteRole { role } => commit(self.engine.delete_role(role)),
            Command::AddOperation { operation } => {
                commit(self.engine.add_operation(operation))
            }
            Command::AddObject { object } => commit(self.engine.add_object(object)),
            Command::AssignUser { user, role } => {
                commit(self.engine.assign_user(user, role))
            }
            Command::DeassignUser { user, role } => {
                commit(self.engine.deassign_user(user, role))
            }
            Command::GrantPermission { permission, role } => commit(
                self.engine
                    .grant_permission(&permission.operation, &permission.object, role),
            ),
            Command::RevokePermission { permission, role } => commit(
                self.engine
                    .revoke_permission(&permission.operation, &permission.object, role),
            ),
            Command::CreateSession { user, session, roles } => {
                let roles: Vec<&str> = roles.iter().map(String::as_str).collect();
                commit(self.engine.create_session(user, session, &roles))
            }
            Command::DeleteSession { user, session } => {
                commit(self.engine.delete_session(user, session))
            }
            Command::AddActiveRole { user, session, role } => {
                commit(self.engine.add_active_role(user, session, role))
            }
            Command::DropActiveRole { user, session, role } => {
                commit(self.engine.drop_active_role(user, session, role))
            }
            Command::CheckAccess { session, permission } => {
                match self.engine.check_access(
                    session,
                    &permission.operation,
                    &permission.object,
                ) {
                    Ok(allowed) => Outcome::Text(format!("{allowed}\n")),
                    Err(e) => Outcome::from_error(e),
                }
            }
            Command::AssignedUsers { role } => name_lines(self.engine.assigned_users(role)),
            Command::AssignedRoles { user } => name_lines(self.engine.assigned_roles(user)),
            Command::RolePermissions { role } => {
                perm_lines(self.engine.role_permissions(role))
            }
            Command::UserPermissions { user } => {
                perm_lines(self.engine.user_permissions(user))
            }
            Command::SessionRoles { session } => {
                name_lines(self.engine.session_roles(session))
            }
            Command::SessionPermissions { session } => {
                perm_lines(self.engine.session_permissions(session))
            }
            Command::CountUsersPerRole => {
                count_lines(self.engine.count_users_per_role())
            }
            Command::CountRolesPerUser => {
                count_lines(self.engine.count_roles_per_user())
            }
            Command::AddInheritance { ascendant, descendant } => {
                commit(self.engine.add_inheritance(ascendant, descendant))
            }
            Command::DeleteInheritance { ascendant, descendant } => {
                commit(self.engine.delete_inheritance(ascendant, descendant))
            }
            Command::AddAscendant { role, descendant } => {
                commit(self.engine.add_ascendant(role, descendant))
            }
            Command::AddDescendant { ascendant, role } => {
                commit(self.engine.add_descendant(ascendant, role))
            }
            Command::AuthorizedUsers { role } => {
                name_lines(self.engine.authorized_users(role))
            }
            Command::AuthorizedRoles { user } => {
                name_lines(self.engine.authorized_roles(user))
            }
            Command::AuthorizedPermissions { role } => {
                perm_lines(self.engine.authorized_permissions(role))
            }
            Command::CreateSsdSet { name, roles, cardinality } => {
                let roles: Vec<&str> = roles.iter().map(String::as_str).collect();
                commit(self.engine.create_ssd_set(name, &roles, *cardinality))
            }
            Command::CreateDsdSet { name, roles, cardinality } => {
                let roles: Vec<&str> = roles.iter().map(String::as_str).collect();
                commit(self.engine.create_dsd_set(name, &roles, *cardinality))
            }
            Command::AddSodRoleMember { name, role } => {
                commit(self.engine.add_sod_role_member(name, role))
            }
            Command::DeleteSodRoleMember { name, role } => {
                commit(self.engine.delete_sod_role_member(name, role))
            }
            Command::SetSodCardinality { name, cardinality } => {
                commit(self.engine.set_sod_cardinality(name, *cardinality))
            }
            Command::SodSets { flavor } => {
                text_lines(self.engine.sod_sets(*flavor).into_iter())
            }
            Command::SodSetRoles { name } => name_lines(self.engine.sod_set_roles(name)),
            Command::SodSetCardinality { name } => {
                match self.engine.sod_set_cardinality(name) {
                    Ok(n) => Outcome::Text(format!("{n}\n")),
                    Err(e) => Outcome::from_error(e),
                }
            }
            Command::MinimizeRoles => {
                decomposition_text(&minimize_roles(&self.engine.access_matrix()))
            }
            Command::MinimizeAssignmentsWithHierarchy => {
                let target = self.engine.access_matrix();
                let cap = self.role_cap(&target);
                match minimize_with_hierarchy(&target, cap, self.opts.objective) {
                    Ok(d) => decomposition_text(&d),
                    Err(e) => Outcome::from_error(e),
                }
            }
            Command::GetRolesShortestPlan { user, goal } => {
                let goal: BTreeSet<Permission> = goal.iter().cloned().collect();
                let opts = PlannerOptions {
                    alphabet: ActionKind::all(),
                    fresh_role_cap: self.opts.fresh_role_cap,
                    depth_bound: self.opts.plan_depth,
                };
                match self.engine.get_roles_shortest_plan(None, user, &goal, &opts) {
                    Ok(plan) => Outcome::Text(plan.render()),
                    Err(e) => Outcome::from_error(e),
                }
            }
            Command::GetRevocationShortestPlan { user, forbidden } => {
                let forbidden: BTreeSet<Permission> = forbidden.iter().cloned().collect();
                let opts = PlannerOptions {
                    alphabet: ActionKind::removals(),
                    fresh_role_cap: self.opts.fresh_role_cap,
                    depth_bound: self.opts.plan_depth,
                };
                match self
                    .engine
                    .get_revocation_shortest_plan(None, user, &forbidden, &opts)
                {
                    Ok(plan) => Outcome::Text(plan.render()),
                    Err(e) => Outcome::from_error(e),
                }
            }
            Command::Load { path } => match fs::read_to_string(path) {
                Ok(text) => match self.engine.load_snapshot_text(&text) {
                    Ok(()) => Outcome::Ok(self.engine.version()),
                    Err(e) => Outcome::from_error(e),
                },
                Err(e) => io_failed(path, &e),
            },
            Command::Dump { path } => {
                match fs::write(path, self.engine.snapshot_text()) {
                    Ok(()) => Outcome::Ok(self.engine.version()),
                    Err(e) => io_failed(path, &e),
                }
            }
            Command::Pragma { components } => {
                self.engine.set_components(*components);
                Outcome::Ok(self.engine.version())
            }
            Command::Rules { relation } => self.run_rules(relation),
            Command::Assert { query, expected } => {
                let got = match self.dispatch(query) {
                    Outcome::Text(t) => {
                        t.lines().collect::<Vec<_>>().join(" ")
                    }
                    Outcome::Failed { code, .. } => code,
                    other => unreachable!("ASSERT wraps queries only, got {other:?}"),
                };
                if got == *expected {
                    Outcome::AssertPassed
                } else {
                    Outcome::AssertFailed { got, want: expected.clone() }
                }
            }
        }
    }

    fn role_cap(&self, target: &AccessMatrix) -> usize {
        self.opts.role_cap.unwrap_or_else(|| target.distinct_rows().len())
    }

    fn run_rules(&self, relation: &str) -> Outcome {
        let Some(program) = &self.rules else {
            return Outcome::Failed {
                code: "NO_RULES".to_string(),
                message: "no rule program loaded; pass --rules".to_string(),
            };
        };
        if !program.idb.contains(relation) {
            return Outcome::from_error(RbacError::UnknownRelation {
                name: relation.to_string(),
            });
        }
        match self.engine.evaluate_rules_seminaive(program, None) {
            Ok(fixpoint) => text_lines(fixpoint[relation].iter().map(|tuple| {
                let terms: Vec<String> = tuple.iter().map(Value::to_string).collect();
                format!("{relation}({})", terms.join(","))
            })),
            Err(e) => Outcome::from_error(e),
        }
    }

    /// Recomputes the answer from definitions and reports how the optimized
    /// path disagrees, if it does. Exponential checks are skipped on inputs
    /// that are too large for them.
    fn cross_check(&self, command: &Command, out: &Outcome) -> Option<String> {
        let comps = self.engine.components();
        match command {
            cmd if cmd.is_state_command() => {
                if !matches!(out, Outcome::Ok(_)) {
                    return None;
                }
                let state = self.engine.state();
                let violations = oracle_constraint_violations(state, comps);
                if !violations.is_empty() {
                    return Some(format!(
                        "{} constraint violation(s) in a committed state",
                        violations.len()
                    ));
                }
                if *self.engine.closure().pairs() != oracle_closure_of(state) {
                    return Some(
                        "maintained role closure differs from recomputation".to_string(),
                    );
                }
                None
            }
            Command::CheckAccess { session, permission } => {
                let engine_res = self
                    .engine
                    .check_access(session, &permission.operation, &permission.object)
                    .ok();
                let oracle_res = oracle_check_access(
                    self.engine.state(),
                    comps,
                    session,
                    &permission.operation,
                    &permission.object,
                );
                (engine_res != oracle_res).then(|| {
                    format!("CheckAccess says {engine_res:?}, reference says {oracle_res:?}")
                })
            }
            Command::MinimizeRoles => {
                let target = self.engine.access_matrix();
                if target.permissions().len() > 10 {
                    return None;
                }
                let d = minimize_roles(&target);
                let got = (d.role_count(), d.edge_count());
                let want = oracle_flat_best(target.rows());
                if got != want {
                    return Some(format!(
                        "MinimizeRoles cost {got:?}, reference optimum {want:?}"
                    ));
                }
                (d.induced_matrix() != target)
                    .then(|| "MinimizeRoles result grants the wrong matrix".to_string())
            }
            Command::MinimizeAssignmentsWithHierarchy => {
                let target = self.engine.access_matrix();
                if target.permissions().len() > 10 {
                    return None;
                }
                let cap = self.role_cap(&target);
                let engine_res = minimize_with_hierarchy(&target, cap, self.opts.objective);
                let oracle_res = oracle_hier_best(target.rows(), cap, self.opts.objective);
                match (engine_res, oracle_res) {
                    (Ok(d), Some(want)) => {
                        let got = match self.opts.objective {
                            MinimizeObjective::Roles => (d.role_count(), d.edge_count()),
                            MinimizeObjective::Edges => (d.edge_count(), d.role_count()),
                        };
                        if got != want {
                            return Some(format!(
                                "hierarchical cost {got:?}, reference optimum {want:?}"
                            ));
                        }
                        (d.induced_matrix() != target).then(|| {
                            "hierarchical result grants the wrong matrix".to_string()
                        })
                    }
                    (Err(_), None) => None,
                    (Ok(_), None) => {
                        Some("engine decomposed a target the reference proves infeasible"
                            .to_string())
                    }
                    (Err(e), Some(_)) => Some(format!(
                        "engine failed ({}) where the reference found an optimum",
                        e.code()
                    )),
                }
            }
            Command::GetRolesShortestPlan { user, goal }
            | Command::GetRevocationShortestPlan { user, forbidden: goal } => {
                // The exhaustive search is only affordable on small spaces.
                let nroles = self.engine.state().relation(Rel::Role).count();
                if self.opts.plan_depth > 4 || nroles > 6 || goal.len() > 6 {
                    return None;
                }
                let revoke =
                    matches!(command, Command::GetRevocationShortestPlan { .. });
                let query = PlanQuery {
                    user: user.clone(),
                    goal: goal.iter().cloned().collect(),
                    revoke,
                    alphabet: if revoke { ActionKind::removals() } else { ActionKind::all() },
                    fresh_role_cap: self.opts.fresh_role_cap,
                    depth_bound: self.opts.plan_depth,
                    node_budget: 3_000_000,
                };
                let verdict = oracle_shortest_plan(&self.engine, &query);
                match (&verdict, out) {
                    (PlanSearch::BudgetExceeded, _) => None,
                    (PlanSearch::Plan(steps), Outcome::Text(t)) => {
                        (t.lines().count() != steps.len()).then(|| {
                            format!(
                                "plan length {}, reference optimum {}",
                                t.lines().count(),
                                steps.len()
                            )
                        })
                    }
                    (PlanSearch::Plan(steps), Outcome::Failed { code, .. }) => {
                        Some(format!(
                            "planner failed ({code}) where the reference found {} step(s)",
                            steps.len()
                        ))
                    }
                    (PlanSearch::NoPlan | PlanSearch::DepthExceeded, Outcome::Text(_)) => {
                        Some("planner returned a plan the reference rules out".to_string())
                    }
                    _ => None,
                }
            }
            Command::Rules { .. } => {
                let program = self.rules.as_ref()?;
                let naive = self.engine.evaluate_rules(program, None).ok();
                let semi = self.engine.evaluate_rules_seminaive(program, None).ok();
                (naive != semi)
                    .then(|| "naive and semi-naive fixpoints differ".to_string())
            }
            _ => None,
        }
    }
}

fn commit(result: Result<StateVersion, RbacError>) -> Outcome {
    match result {
        Ok(v) => Outcome::Ok(v),
        Err(e) => Outcome::from_error(e),
    }
}

fn io_failed(path: &str, e: &std::io::Error) -> Outcome {
    Outcome::Failed { code: "IO_ERROR".to_string(), message: format!("{path}: {e}") }
}

fn text_lines(items: impl Iterator<Item = String>) -> Outcome {
    let mut text = String::new();
    for item in items {
        text.push_str(&item);
        text.push('\n');
    }
    Outcome::Text(text)
}

fn name_lines(result: Result<BTreeSet<String>, RbacError>) -> Outcome {
    match result {
        Ok(set) => text_lines(set.into_iter()),
        Err(e) => Outcome::from_error(e),
    }
}

fn perm_lines(result: Result<BTreeSet<Permission>, RbacError>) -> Outcome {
    match result {
        Ok(set) => text_lines(set.into_iter().map(|p| p.to_string())),
        Err(e) => Outcome::from_error(e),
    }
}

fn count_lines(counts: std::collections::BTreeMap<String, usize>) -> Outcome {
    text_lines(counts.into_iter().map(|(name, n)| format!("{name} {n}")))
}

fn decomposition_text(d: &RoleDecomposition) -> Outcome {
    let mut text = String::new();
    for role in &d.roles {
        text.push_str(&format!("role {role}\n"));
    }
    for (user, role) in &d.ua {
        text.push_str(&format!("ua {user} {role}\n"));
    }
    for (perm, role) in &d.pa {
        text.push_str(&format!("pa {perm} {role}\n"));
    }
    for (asc, desc) in &d.rh {
        text.push_str(&format!("rh {asc} {desc}\n"));
    }
    text.push_str(&format!("cost roles={} edges={}\n", d.role_count(), d.edge_count()));
    Outcome::Text(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn runner() -> Runner {
        Runner::new(Engine::new(), None, RunnerOptions::default())
    }

    fn run(script: &str) -> (String, u8) {
        let mut r = runner();
        let out = r.run_script(script);
        (out.rendered, out.exit_code)
    }

    #[test]
    fn outcomes_render_per_line_with_a_summary() {
        let (rendered, exit) = run(
            "AddUser alice\nAddRole admin\nAssignUser alice admin\nAssignedRoles alice\n",
        );
        let expected = "> AddUser alice\nok 1\n\
             > AddRole admin\nok 2\n\
             > AssignUser alice admin\nok 3\n\
             > AssignedRoles alice\nadmin\n\
             # ok=4 err=0\n";
        assert_eq!(rendered, expected);
        assert_eq!(exit, 0);
    }

    #[test]
    fn command_errors_continue_and_set_exit_one() {
        let (rendered, exit) = run("AddUser a\nAddUser a\nAddRole r\n");
        assert!(rendered.contains("! DUPLICATE_ENTITY"));
        assert!(rendered.ends_with("# ok=2 err=1\n"));
        assert_eq!(exit, 1);
    }

    #[test]
    fn halt_on_error_stops_the_script() {
        let mut r = Runner::new(
            Engine::new(),
            None,
            RunnerOptions { halt_on_error: true, ..RunnerOptions::default() },
        );
        let out = r.run_script("AddUser a\nAddUser a\nAddRole r\n");
        assert!(!out.rendered.contains("AddRole"));
        assert!(out.rendered.ends_with("# ok=1 err=1\n"));
    }

    #[test]
    fn parse_errors_are_line_outcomes_and_set_exit_two() {
        let (rendered, exit) = run("AddUser a\nFrobnicate x\nAddRole r\n");
        assert!(rendered.contains("! PARSE_ERROR"));
        assert!(rendered.contains("> AddRole r\nok 2\n"));
        assert_eq!(exit, 2);
    }

    #[test]
    fn asserts_pass_and_fail_with_exit_three() {
        let (rendered, exit) = run(
            "AddUser u\nAddRole r\nAssignUser u r\n\
             ASSERT AssignedRoles u == r\nASSERT AssignedRoles u == r extra\n",
        );
        assert!(rendered.contains("assert ok\n"));
        assert!(rendered.contains("! ASSERT_FAILED got \"r\" want \"r extra\"\n"));
        assert_eq!(exit, 3);
    }

    #[test]
    fn asserts_can_expect_error_codes() {
        let (rendered, exit) = run("ASSERT SessionRoles ghost == UNKNOWN_SESSION\n");
        assert!(rendered.contains("assert ok\n"));
        assert_eq!(exit, 0);
    }

    #[test]
    fn missing_files_set_exit_four() {
        let (rendered, exit) = run("LOAD /nonexistent/snapshot.facts\n");
        assert!(rendered.contains("! IO_ERROR"));
        assert_eq!(exit, 4);
    }

    #[test]
    fn parse_beats_assert_beats_io_beats_command_errors() {
        let (_, exit) = run(
            "AddUser a\nAddUser a\nLOAD /nonexistent\nASSERT CountUsersPerRole == x\nBogus\n",
        );
        assert_eq!(exit, 2);
        let (_, exit) = run("AddUser a\nAddUser a\nLOAD /nonexistent\nASSERT CountUsersPerRole == x\n");
        assert_eq!(exit, 3);
        let (_, exit) = run("AddUser a\nAddUser a\nLOAD /nonexistent\n");
        assert_eq!(exit, 4);
    }

    #[test]
    fn audit_covers_state_commands_only() {
        let mut r = runner();
        r.run_script(
            "AddUser u\nAddRole r\nAssignedRoles u\nAssignUser u r\nAssignUser u r\n\
             DUMP /nonexistent/dir/out\nPRAGMA components core\n",
        );
        let audit = r.audit_text();
        let lines: Vec<&str> = audit.lines().collect();
        assert_eq!(
            lines,
            vec![
                "1\tAddUser u\tok",
                "2\tAddRole r\tok",
                "3\tAssignUser u r\tok",
                "3\tAssignUser u r\terror:DUPLICATE_ASSIGNMENT",
                "3\tPRAGMA components core\tok",
            ]
        );
    }

    #[test]
    fn pragma_core_rejects_hierarchy_verbs() {
        let (rendered, exit) = run(
            "PRAGMA components core\nAddRole a\nAddRole b\nAddInheritance a b\n",
        );
        assert!(rendered.contains("! UNKNOWN_VERB"));
        assert_eq!(exit, 1);
    }

    #[test]
    fn minimizers_and_planners_render_replayable_text() {
        let (rendered, exit) = run(
            "AddUser u\nAddOperation read\nAddObject doc\nAddRole r\n\
             GrantPermission read:doc r\nAssignUser u r\n\
             MinimizeRoles\nGetRolesShortestPlan u {read:doc}\n",
        );
        assert!(rendered.contains("cost roles=1 edges=2\n"));
        // u already holds read:doc, so the shortest plan is empty.
        assert!(rendered.contains("> GetRolesShortestPlan u {read:doc}\n# ok="));
        assert_eq!(exit, 0);
    }

    #[test]
    fn oracle_mode_verifies_clean_runs_silently() {
        let mut r = Runner::new(
            Engine::new(),
            None,
            RunnerOptions { oracle: true, plan_depth: 3, ..RunnerOptions::default() },
        );
        let out = r.run_script(
            "AddUser u\nAddRole senior\nAddRole junior\nAddInheritance senior junior\n\
             AddOperation read\nAddObject doc\nGrantPermission read:doc junior\n\
             AssignUser u senior\nCreateSession u s {senior}\nCheckAccess s read:doc\n\
             MinimizeRoles\nMinimizeAssignmentsWithHierarchy\n\
             GetRolesShortestPlan u {read:doc}\n",
        );
        assert!(!out.rendered.contains("ORACLE_DIVERGENCE"), "{}", out.rendered);
        assert_eq!(out.exit_code, 0);
    }
}
