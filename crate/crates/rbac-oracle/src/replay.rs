//! Snapshot reconstruction by folding commit deltas at the text level: each
//! tuple becomes its rendered line, and the final snapshot is just the
//! sorted survivors. No store machinery is involved.

use std::collections::BTreeSet;

use rbac_engine::CommitDelta;

/// Folds the deltas of an accepted commit history, in order, into the
/// snapshot text of the resulting state. An empty history yields the empty
/// snapshot.
pub fn oracle_replay_snapshot<'a>(deltas: impl IntoIterator<Item = &'a CommitDelta>) -> String {
    let mut lines: BTreeSet<String> = BTreeSet::new();
    for delta in deltas {
        for t in &delta.deletes {
            lines.remove(&t.render());
        }
        for t in &delta.inserts {
            lines.insert(t.render());
        }
    }
    let mut out = String::new();
    for line in lines {
        out.push_str(&line);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use rbac_engine::Engine;

    use super::*;

    fn deltas_of(e: &Engine) -> Vec<&CommitDelta> {
        (1..=e.store().head_version())
            .map(|v| e.store().delta_for(v).unwrap())
            .collect()
    }

    #[test]
    fn empty_history_is_the_empty_snapshot() {
        assert_eq!(oracle_replay_snapshot([]), "");
    }

    #[test]
    fn history_folds_to_the_head_snapshot() {
        let mut e = Engine::new();
        e.add_user("u").unwrap();
        e.add_role("r").unwrap();
        e.assign_user("u", "r").unwrap();
        e.add_role("doomed").unwrap();
        e.delete_role("doomed").unwrap();
        assert_eq!(oracle_replay_snapshot(deltas_of(&e)), e.snapshot_text());
    }
}
