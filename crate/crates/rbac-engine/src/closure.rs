//! Reflexive-transitive closure of the role hierarchy.
//!
//! The index stores every `(senior, junior)` pair reachable through the
//! immediate-inheritance edges, including the identity pairs. It belongs to
//! a committed version and is immutable once built; edge insertion extends a
//! base index incrementally, while deletions fall back to a full recompute
//! (correctness bar: always equal to recomputation from scratch).

use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// All `senior >= junior` pairs of one state.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClosureIndex {
    pairs: BTreeSet<(String, String)>,
}

impl ClosureIndex {
    /// Builds the closure from scratch: identity pairs for every role, then
    /// reachability over the immediate edges.
    pub fn from_edges<'a>(
        roles: impl IntoIterator<Item = &'a str>,
        edges: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> ClosureIndex {
        let roles: BTreeSet<&str> = roles.into_iter().collect();
        let mut succ: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (asc, desc) in edges {
            succ.entry(asc).or_default().push(desc);
        }
        let mut pairs = BTreeSet::new();
        for &r in &roles {
            // Breadth-first reach from r; identity pair comes out for free.
            let mut seen: BTreeSet<&str> = BTreeSet::new();
            let mut queue = VecDeque::from([r]);
            seen.insert(r);
            while let Some(x) = queue.pop_front() {
                pairs.insert((r.to_string(), x.to_string()));
                for &y in succ.get(x).into_iter().flatten() {
                    if seen.insert(y) {
                        queue.push_back(y);
                    }
                }
            }
        }
        ClosureIndex { pairs }
    }

    /// True iff `senior >= junior` (reflexively).
    pub fn geq(&self, senior: &str, junior: &str) -> bool {
        senior == junior
            || self
                .pairs
                .contains(&(senior.to_string(), junior.to_string()))
    }

    /// Every role at or below `senior`.
    pub fn juniors_of<'a>(&'a self, senior: &'a str) -> impl Iterator<Item = &'a str> {
        let lo = (senior.to_string(), String::new());
        self.pairs
            .range(lo..)
            .take_while(move |(s, _)| s == senior)
            .map(|(_, j)| j.as_str())
    }

    /// Every role at or above `junior`.
    pub fn seniors_of<'a>(&'a self, junior: &'a str) -> impl Iterator<Item = &'a str> {
        self.pairs
            .iter()
            .filter(move |(_, j)| j == junior)
            .map(|(s, _)| s.as_str())
    }

    pub fn pairs(&self) -> &BTreeSet<(String, String)> {
        &self.pairs
    }

    /// Extends the index with a new role: just the identity pair, since a
    /// fresh role has no edges.
    pub fn with_role(&self, role: &str) -> ClosureIndex {
        let mut pairs = self.pairs.clone();
        pairs.insert((role.to_string(), role.to_string()));
        ClosureIndex { pairs }
    }

    /// Extends the index with one inserted edge `asc -> desc`. The delta is
    /// exactly `{(x, y) : x >= asc, desc >= y}` over the old index.
    pub fn with_edge(&self, asc: &str, desc: &str) -> ClosureIndex {
        let seniors: Vec<String> = self.seniors_of(asc).map(str::to_string).collect();
        let juniors: Vec<String> = self.juniors_of(desc).map(str::to_string).collect();
        let mut pairs = self.pairs.clone();
        for x in &seniors {
            for y in &juniors {
                pairs.insert((x.clone(), y.clone()));
            }
        }
        ClosureIndex { pairs }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_pairs_exist_for_isolated_roles() {
        let c = ClosureIndex::from_edges(["a", "b"], []);
        assert!(c.geq("a", "a"));
        assert!(!c.geq("a", "b"));
    }

    #[test]
    fn chain_is_transitively_closed() {
        let c = ClosureIndex::from_edges(["a", "b", "c"], [("a", "b"), ("b", "c")]);
        assert!(c.geq("a", "c"));
        assert!(c.geq("a", "b"));
        assert!(!c.geq("c", "a"));
        assert_eq!(c.juniors_of("a").count(), 3);
    }

    #[test]
    fn incremental_edge_matches_recompute() {
        let base = ClosureIndex::from_edges(["a", "b", "c", "d"], [("a", "b"), ("c", "d")]);
        let incr = base.with_edge("b", "c");
        let full = ClosureIndex::from_edges(
            ["a", "b", "c", "d"],
            [("a", "b"), ("c", "d"), ("b", "c")],
        );
        assert_eq!(incr, full);
        assert!(incr.geq("a", "d"));
    }

    #[test]
    fn with_role_adds_only_identity() {
        let base = ClosureIndex::from_edges(["a"], []);
        let ext = base.with_role("b");
        assert!(ext.geq("b", "b"));
        assert!(!ext.geq("a", "b"));
        assert_eq!(ext.pairs().len(), 2);
    }
}
