//! Shortest administrative plans by exhaustive iterative-deepening search.
//! No duplicate detection: every action sequence up to the bound is tried,
//! pruned only where the engine refuses to commit a step. Grounding and the
//! goal test are reimplemented here from the problem statement; the engine
//! is used solely to apply actions.

use std::collections::BTreeSet;

use rbac_engine::{ActionKind, AdminAction, Engine, EntityKind, Permission, Rel, State};

use crate::access::oracle_accessible_permissions;

#[derive(Debug, Clone)]
pub struct PlanQuery {
    pub user: String,
    pub goal: BTreeSet<Permission>,
    /// Acquisition when false (all goal permissions accessible); revocation
    /// when true (none of them accessible).
    pub revoke: bool,
    pub alphabet: BTreeSet<ActionKind>,
    pub fresh_role_cap: usize,
    pub depth_bound: usize,
    /// Nodes visited before the search gives up.
    pub node_budget: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanSearch {
    Plan(Vec<AdminAction>),
    /// Exhaustively proven: no plan of any length exists.
    NoPlan,
    /// The bound cut off unexplored successors.
    DepthExceeded,
    BudgetExceeded,
}

pub fn oracle_shortest_plan(source: &Engine, query: &PlanQuery) -> PlanSearch {
    let fresh = fresh_names(source.state(), query.fresh_role_cap);
    let mut search = Search {
        query,
        fresh,
        nodes: 0,
        cutoff: false,
    };
    for limit in 0..=query.depth_bound {
        search.cutoff = false;
        match search.dfs(source, limit) {
            Err(Budget) => return PlanSearch::BudgetExceeded,
            Ok(Some(mut steps)) => {
                steps.reverse();
                return PlanSearch::Plan(steps);
            }
            Ok(None) if !search.cutoff => return PlanSearch::NoPlan,
            Ok(None) => {}
        }
    }
    PlanSearch::DepthExceeded
}

struct Budget;

struct Search<'q> {
    query: &'q PlanQuery,
    fresh: Vec<String>,
    nodes: u64,
    cutoff: bool,
}

impl Search<'_> {
    fn goal_met(&self, engine: &Engine) -> bool {
        let acc = oracle_accessible_permissions(engine.state(), engine.components(), &self.query.user)
            .unwrap_or_default();
        if self.query.revoke {
            self.query.goal.iter().all(|p| !acc.contains(p))
        } else {
            self.query.goal.iter().all(|p| acc.contains(p))
        }
    }

    /// Returns the plan in reverse step order, or None within this limit.
    fn dfs(&mut self, node: &Engine, limit: usize) -> Result<Option<Vec<AdminAction>>, Budget> {
        self.nodes += 1;
        if self.nodes > self.query.node_budget {
            return Err(Budget);
        }
        if self.goal_met(node) {
            return Ok(Some(Vec::new()));
        }
        if limit == 0 {
            if !self.cutoff && self.has_successor(node) {
                self.cutoff = true;
            }
            return Ok(None);
        }
        for action in self.grounded(node) {
            let mut child = node.clone();
            if child.apply_admin_action(&action).is_err() {
                continue;
            }
            if let Some(mut steps) = self.dfs(&child, limit - 1)? {
                steps.push(action);
                return Ok(Some(steps));
            }
        }
        Ok(None)
    }

    fn has_successor(&self, node: &Engine) -> bool {
        self.grounded(node).into_iter().any(|action| {
            let mut probe = node.clone();
            probe.apply_admin_action(&action).is_ok()
        })
    }

    /// The same action universe the planner searches: grounded over the
    /// planning user, the goal permissions, the node's roles, and the fixed
    /// fresh names; ordered by rendered text.
    fn grounded(&self, node: &Engine) -> Vec<AdminAction> {
        let state = node.state();
        let user = self.query.user.as_str();
        let roles: Vec<String> = state
            .relation(Rel::Role)
            .map(|t| t.fields[0].as_name().expect("role name").to_string())
            .collect();
        let assigned: BTreeSet<&str> = state
            .relation(Rel::Ua)
            .filter(|t| t.fields[0].as_name() == Some(user))
            .map(|t| t.fields[1].as_name().expect("role name"))
            .collect();
        let granted: BTreeSet<(String, String, String)> = state
            .relation(Rel::Pa)
            .map(|t| {
                (
                    t.fields[0].as_name().expect("operation name").to_string(),
                    t.fields[1].as_name().expect("object name").to_string(),
                    t.fields[2].as_name().expect("role name").to_string(),
                )
            })
            .collect();
        let edges: Vec<(String, String)> = state
            .relation(Rel::Rh)
            .map(|t| {
                (
                    t.fields[0].as_name().expect("role name").to_string(),
                    t.fields[1].as_name().expect("role name").to_string(),
                )
            })
            .collect();
        let has_grant = |p: &Permission, r: &str| {
            granted.contains(&(p.operation.clone(), p.object.clone(), r.to_string()))
        };

        let mut out = Vec::new();
        for kind in &self.query.alphabet {
            match kind {
                ActionKind::AssignUser => {
                    for r in roles.iter().filter(|r| !assigned.contains(r.as_str())) {
                        out.push(AdminAction::AssignUser {
                            user: user.to_string(),
                            role: r.clone(),
                        });
                    }
                }
                ActionKind::DeassignUser => {
                    for r in roles.iter().filter(|r| assigned.contains(r.as_str())) {
                        out.push(AdminAction::DeassignUser {
                            user: user.to_string(),
                            role: r.clone(),
                        });
                    }
                }
                ActionKind::GrantPermission => {
                    for p in &self.query.goal {
                        for r in roles.iter().filter(|r| !has_grant(p, r)) {
                            out.push(AdminAction::GrantPermission {
                                permission: p.clone(),
                                role: r.clone(),
                            });
                        }
                    }
                }
                ActionKind::RevokePermission => {
                    for p in &self.query.goal {
                        for r in roles.iter().filter(|r| has_grant(p, r)) {
                            out.push(AdminAction::RevokePermission {
                                permission: p.clone(),
                                role: r.clone(),
                            });
                        }
                    }
                }
                ActionKind::AddRole => {
                    for name in self
                        .fresh
                        .iter()
                        .filter(|n| !state.entity_exists(EntityKind::Role, n))
                    {
                        out.push(AdminAction::AddRole { role: name.clone() });
                    }
                }
                ActionKind::DeleteRole => {
                    for r in &roles {
                        out.push(AdminAction::DeleteRole { role: r.clone() });
                    }
                }
                ActionKind::AddInheritance => {
                    for a in &roles {
                        for d in &roles {
                            if a != d && !edges.contains(&(a.clone(), d.clone())) {
                                out.push(AdminAction::AddInheritance {
                                    ascendant: a.clone(),
                                    descendant: d.clone(),
                                });
                            }
                        }
                    }
                }
                ActionKind::DeleteInheritance => {
                    for (a, d) in &edges {
                        out.push(AdminAction::DeleteInheritance {
                            ascendant: a.clone(),
                            descendant: d.clone(),
                        });
                    }
                }
            }
        }
        out.sort_by_key(|a| a.to_string());
        out
    }
}

fn fresh_names(state: &State, cap: usize) -> Vec<String> {
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
