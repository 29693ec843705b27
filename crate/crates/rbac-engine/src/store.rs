//! Versioned, transactional, in-memory fact store.
//!
//! The store holds every base RBAC relation as a set of tuples under a fixed
//! schema. All mutation happens inside a transaction: deltas accumulate
//! against a base version and become visible only when `commit` succeeds.
//! Commit validates referential integrity plus any caller-supplied checks
//! against the hypothetical post-state and applies the delta atomically, or
//! applies nothing at all. Committed states are immutable; reads at old
//! versions stay stable forever.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{RbacError, Witness};

/// Monotonically increasing identifier of a committed state. A fresh store
/// is at version 0; every successful commit increments by exactly one.
pub type StateVersion = u64;

// --- entities -------------------------------------------------------------

/// The kinds of named entities tuples may reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityKind {
    User,
    Role,
    Operation,
    Object,
    Session,
    SodSet,
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EntityKind::User => "user",
            EntityKind::Role => "role",
            EntityKind::Operation => "operation",
            EntityKind::Object => "object",
            EntityKind::Session => "session",
            EntityKind::SodSet => "sod-set",
        };
        f.write_str(s)
    }
}

/// Checks the lexical rules for entity names: non-empty, no whitespace,
/// no `#`, no `,`. Names are case-sensitive and compared byte-wise.
pub fn valid_entity_name(name: &str) -> bool {
    !name.is_empty() && !name.chars().any(|c| c.is_whitespace() || c == '#' || c == ',')
}

// --- tuples ---------------------------------------------------------------

/// One field of a tuple: an entity name or a small natural number
/// (cardinalities). Which one is legal at a given position is fixed by the
/// relation schema.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FieldValue {
    Name(String),
    Num(u32),
}

impl FieldValue {
    pub fn name(s: impl Into<String>) -> FieldValue {
        FieldValue::Name(s.into())
    }

    pub fn as_name(&self) -> Option<&str> {
        match self {
            FieldValue::Name(s) => Some(s),
            FieldValue::Num(_) => None,
        }
    }

    pub fn as_num(&self) -> Option<u32> {
        match self {
            FieldValue::Name(_) => None,
            FieldValue::Num(n) => Some(*n),
        }
    }
}

impl fmt::Display for FieldValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldValue::Name(s) => f.write_str(s),
            FieldValue::Num(n) => write!(f, "{n}"),
        }
    }
}

/// A fact: a relation name plus fields conforming to the relation's schema.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tuple {
    pub relation: Rel,
    pub fields: Vec<FieldValue>,
}

impl Tuple {
    pub fn new(relation: Rel, fields: Vec<FieldValue>) -> Tuple {
        Tuple { relation, fields }
    }

    /// The canonical single-line form used by snapshots and witnesses,
    /// e.g. `ua(alice,eng)`.
    pub fn render(&self) -> String {
        let fields: Vec<String> = self.fields.iter().map(|f| f.to_string()).collect();
        format!("{}({})", self.relation.name(), fields.join(","))
    }
}

impl fmt::Display for Tuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

// --- schema ---------------------------------------------------------------

/// Declared type of one tuple position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Col {
    Entity(EntityKind),
    Count,
}

/// The base relations. The set is fixed: RBAC state is fully described by
/// these thirteen relations, and the snapshot format enumerates exactly them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    User,
    Role,
    Operation,
    Object,
    Ua,
    Pa,
    Session,
    SessionRole,
    Rh,
    SsdSet,
    SsdRole,
    DsdSet,
    DsdRole,
}

pub const ALL_RELS: [Rel; 13] = [
    Rel::User,
    Rel::Role,
    Rel::Operation,
    Rel::Object,
    Rel::Ua,
    Rel::Pa,
    Rel::Session,
    Rel::SessionRole,
    Rel::Rh,
    Rel::SsdSet,
    Rel::SsdRole,
    Rel::DsdSet,
    Rel::DsdRole,
];

impl Rel {
    pub fn name(self) -> &'static str {
        match self {
            Rel::User => "user",
            Rel::Role => "role",
            Rel::Operation => "operation",
            Rel::Object => "object",
            Rel::Ua => "ua",
            Rel::Pa => "pa",
            Rel::Session => "session",
            Rel::SessionRole => "session_role",
            Rel::Rh => "rh",
            Rel::SsdSet => "ssd_set",
            Rel::SsdRole => "ssd_role",
            Rel::DsdSet => "dsd_set",
            Rel::DsdRole => "dsd_role",
        }
    }

    pub fn from_name(name: &str) -> Result<Rel, RbacError> {
        ALL_RELS
            .iter()
            .copied()
            .find(|r| r.name() == name)
            .ok_or_else(|| RbacError::UnknownRelation {
                name: name.to_string(),
            })
    }

    pub fn schema(self) -> &'static [Col] {
        use Col::{Count, Entity};
        use EntityKind::*;
        match self {
            Rel::User => &[Entity(User)],
            Rel::Role => &[Entity(Role)],
            Rel::Operation => &[Entity(Operation)],
            Rel::Object => &[Entity(Object)],
            Rel::Ua => &[Entity(User), Entity(Role)],
            Rel::Pa => &[Entity(Operation), Entity(Object), Entity(Role)],
            Rel::Session => &[Entity(Session), Entity(User)],
            Rel::SessionRole => &[Entity(Session), Entity(Role)],
            Rel::Rh => &[Entity(Role), Entity(Role)],
            Rel::SsdSet => &[Entity(SodSet), Count],
            Rel::SsdRole => &[Entity(SodSet), Entity(Role)],
            Rel::DsdSet => &[Entity(SodSet), Count],
            Rel::DsdRole => &[Entity(SodSet), Entity(Role)],
        }
    }

    /// Relations whose first column introduces an entity rather than
    /// referencing one. Existence of an entity is defined as membership in
    /// its defining relation(s).
    fn defines(self) -> Option<EntityKind> {
        match self {
            Rel::User => Some(EntityKind::User),
            Rel::Role => Some(EntityKind::Role),
            Rel::Operation => Some(EntityKind::Operation),
            Rel::Object => Some(EntityKind::Object),
            Rel::Session => Some(EntityKind::Session),
            Rel::SsdSet | Rel::DsdSet => Some(EntityKind::SodSet),
            _ => None,
        }
    }
}

// --- state ----------------------------------------------------------------

/// One committed (or hypothetical) database state: a tuple set per relation.
/// Iteration over any relation is in lexicographic field order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct State {
    rels: BTreeMap<Rel, BTreeSet<Tuple>>,
}

impl State {
    pub fn relation(&self, rel: Rel) -> impl Iterator<Item = &Tuple> {
        self.rels.get(&rel).into_iter().flatten()
    }

    pub fn contains(&self, tuple: &Tuple) -> bool {
        self.rels
            .get(&tuple.relation)
            .is_some_and(|set| set.contains(tuple))
    }

    pub fn len(&self) -> usize {
        self.rels.values().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn insert(&mut self, tuple: Tuple) {
        self.rels.entry(tuple.relation).or_default().insert(tuple);
    }

    fn remove(&mut self, tuple: &Tuple) {
        if let Some(set) = self.rels.get_mut(&tuple.relation) {
            set.remove(tuple);
        }
    }

    /// True iff an entity of the given kind and name exists, i.e. appears in
    /// the first column of one of its defining relations.
    pub fn entity_exists(&self, kind: EntityKind, name: &str) -> bool {
        ALL_RELS
            .iter()
            .filter(|r| r.defines() == Some(kind))
            .any(|r| {
                self.relation(*r)
                    .any(|t| t.fields[0].as_name() == Some(name))
            })
    }

    /// All tuples whose fields reference an entity missing from this state.
    /// Defining positions (column 0 of a defining relation) are exempt.
    pub fn dangling_tuples(&self) -> BTreeSet<Tuple> {
        let mut bad = BTreeSet::new();
        for rel in ALL_RELS {
            let defines = rel.defines();
            for tuple in self.relation(rel) {
                for (i, (field, col)) in tuple.fields.iter().zip(rel.schema()).enumerate() {
                    let Col::Entity(kind) = col else { continue };
                    if i == 0 && defines == Some(*kind) {
                        continue;
                    }
                    let name = field.as_name().expect("schema-checked field");
                    if !self.entity_exists(*kind, name) {
                        bad.insert(tuple.clone());
                    }
                }
            }
        }
        bad
    }

    // --- snapshot text format ---

    /// Renders the state as snapshot text: one `relation(f1,f2,...)` line per
    /// tuple, lines sorted lexicographically as byte strings, each line
    /// terminated by a newline. The empty state renders as the empty string.
    pub fn snapshot_text(&self) -> String {
        let mut lines: Vec<String> = self
            .rels
            .values()
            .flatten()
            .map(|t| t.render())
            .collect();
        lines.sort();
        let mut out = String::new();
        for line in lines {
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    /// Parses snapshot text produced by [`State::snapshot_text`]. Blank lines
    /// and lines starting with `#` are ignored. The parsed state is checked
    /// for schema conformance and referential integrity.
    pub fn parse_snapshot(text: &str) -> Result<State, RbacError> {
        let mut state = State::default();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim_end_matches('\r');
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let tuple = parse_tuple_line(line, lineno)?;
            check_schema(&tuple)?;
            state.insert(tuple);
        }
        if let Some(t) = state.dangling_tuples().into_iter().next() {
            return Err(dangling_error(&state, &t));
        }
        Ok(state)
    }
}

fn parse_tuple_line(line: &str, lineno: usize) -> Result<Tuple, RbacError> {
    let parse_err = |column: usize, expected: &str| RbacError::Parse {
        line: lineno,
        column,
        expected: expected.to_string(),
    };
    let open = line
        .find('(')
        .ok_or_else(|| parse_err(line.len() + 1, "'('"))?;
    if !line.ends_with(')') {
        return Err(parse_err(line.len() + 1, "')'"));
    }
    let rel = Rel::from_name(&line[..open]).map_err(|_| parse_err(1, "relation name"))?;
    let inner = &line[open + 1..line.len() - 1];
    let mut fields = Vec::new();
    for (i, part) in inner.split(',').enumerate() {
        let col = rel.schema().get(i).copied();
        let field = match col {
            Some(Col::Count) => {
                let n: u32 = part
                    .parse()
                    .map_err(|_| parse_err(open + 2, "natural number"))?;
                FieldValue::Num(n)
            }
            _ => {
                if !valid_entity_name(part) {
                    return Err(parse_err(open + 2, "entity name"));
                }
                FieldValue::Name(part.to_string())
            }
        };
        fields.push(field);
    }
    Ok(Tuple::new(rel, fields))
}

fn check_schema(tuple: &Tuple) -> Result<(), RbacError> {
    let schema = tuple.relation.schema();
    let mismatch = |detail: String| RbacError::ArityMismatch {
        relation: tuple.relation.name().to_string(),
        detail,
    };
    if tuple.fields.len() != schema.len() {
        return Err(mismatch(format!(
            "expected {} fields, got {}",
            schema.len(),
            tuple.fields.len()
        )));
    }
    for (i, (field, col)) in tuple.fields.iter().zip(schema).enumerate() {
        match (col, field) {
            (Col::Entity(_), FieldValue::Name(name)) => {
                if !valid_entity_name(name) {
                    return Err(mismatch(format!("field {} is not a legal name", i + 1)));
                }
            }
            (Col::Count, FieldValue::Num(_)) => {}
            (Col::Entity(_), FieldValue::Num(_)) => {
                return Err(mismatch(format!("field {} must be an entity name", i + 1)));
            }
            (Col::Count, FieldValue::Name(_)) => {
                return Err(mismatch(format!("field {} must be a number", i + 1)));
            }
        }
    }
    Ok(())
}

fn dangling_error(state: &State, tuple: &Tuple) -> RbacError {
    // Recover which reference is missing for the error message.
    let defines = tuple.relation.defines();
    for (i, (field, col)) in tuple.fields.iter().zip(tuple.relation.schema()).enumerate() {
        if let Col::Entity(kind) = col {
            if i == 0 && defines == Some(*kind) {
                continue;
            }
            let name = field.as_name().expect("schema-checked field");
            if !state.entity_exists(*kind, name) {
                return RbacError::DanglingReference {
                    tuple: tuple.render(),
                    kind: *kind,
                    name: name.to_string(),
                };
            }
        }
    }
    unreachable!("tuple reported dangling but all references resolve")
}

// --- transactions ---------------------------------------------------------

/// Pending deltas against a base version. Insert and delete sets are kept
/// disjoint: the later call wins.
#[derive(Debug)]
pub struct Transaction {
    base: StateVersion,
    inserts: BTreeSet<Tuple>,
    deletes: BTreeSet<Tuple>,
}

impl Transaction {
    pub fn base_version(&self) -> StateVersion {
        self.base
    }

    pub fn inserts(&self) -> &BTreeSet<Tuple> {
        &self.inserts
    }

    pub fn deletes(&self) -> &BTreeSet<Tuple> {
        &self.deletes
    }

    /// True if the transaction touches the given relation at all.
    pub fn touches(&self, rel: Rel) -> bool {
        self.inserts.iter().any(|t| t.relation == rel)
            || self.deletes.iter().any(|t| t.relation == rel)
    }
}

/// Delta applied by one successful commit, kept for audit and replay.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitDelta {
    pub inserts: BTreeSet<Tuple>,
    pub deletes: BTreeSet<Tuple>,
}

/// A commit-time validation over the hypothetical post-state. Checks see the
/// full candidate state and veto the commit by returning a violation.
pub trait CommitCheck {
    fn name(&self) -> &str;
    fn check(&self, candidate: &State) -> Result<(), (String, Witness)>;
}

// --- the store ------------------------------------------------------------

/// The versioned store. Every committed version remains readable; the head
/// version only advances on successful commits.
#[derive(Debug, Clone)]
pub struct FactStore {
    versions: Vec<Arc<State>>,
    deltas: Vec<CommitDelta>,
    tx_open: bool,
}

impl Default for FactStore {
    fn default() -> Self {
        FactStore::new()
    }
}

impl FactStore {
    /// An empty store at version 0.
    pub fn new() -> FactStore {
        FactStore {
            versions: vec![Arc::new(State::default())],
            deltas: Vec::new(),
            tx_open: false,
        }
    }

    /// A store whose version 0 is the given state. Used by snapshot loads.
    pub fn from_state(state: State) -> FactStore {
        FactStore {
            versions: vec![Arc::new(state)],
            deltas: Vec::new(),
            tx_open: false,
        }
    }

    pub fn head_version(&self) -> StateVersion {
        (self.versions.len() - 1) as StateVersion
    }

    pub fn head(&self) -> &State {
        self.versions.last().expect("store always has version 0")
    }

    pub fn state_at(&self, version: StateVersion) -> Result<&State, RbacError> {
        self.versions
            .get(version as usize)
            .map(|a| a.as_ref())
            .ok_or(RbacError::UnknownVersion { version })
    }

    /// The delta that produced `version` from its predecessor.
    pub fn delta_for(&self, version: StateVersion) -> Result<&CommitDelta, RbacError> {
        if version == 0 || version > self.head_version() {
            return Err(RbacError::UnknownVersion { version });
        }
        Ok(&self.deltas[(version - 1) as usize])
    }

    /// Opens a transaction anchored at the head version. At most one
    /// transaction may be open at a time.
    pub fn begin(&mut self) -> Result<Transaction, RbacError> {
        if self.tx_open {
            return Err(RbacError::NestedTransaction);
        }
        self.tx_open = true;
        Ok(Transaction {
            base: self.head_version(),
            inserts: BTreeSet::new(),
            deletes: BTreeSet::new(),
        })
    }

    /// Abandons a transaction without touching committed state.
    pub fn rollback(&mut self, tx: Transaction) {
        drop(tx);
        self.tx_open = false;
    }

    /// The tuples a relation would hold if the transaction committed now.
    pub fn pending_relation(&self, tx: &Transaction, rel: Rel) -> BTreeSet<Tuple> {
        let mut set: BTreeSet<Tuple> = self.head().relation(rel).cloned().collect();
        for t in &tx.deletes {
            if t.relation == rel {
                set.remove(t);
            }
        }
        for t in &tx.inserts {
            if t.relation == rel {
                set.insert(t.clone());
            }
        }
        set
    }

    pub fn pending_contains(&self, tx: &Transaction, tuple: &Tuple) -> bool {
        if tx.deletes.contains(tuple) {
            return false;
        }
        tx.inserts.contains(tuple) || self.head().contains(tuple)
    }

    fn pending_entity_exists(&self, tx: &Transaction, kind: EntityKind, name: &str) -> bool {
        ALL_RELS
            .iter()
            .filter(|r| r.defines() == Some(kind))
            .any(|r| {
                self.pending_relation(tx, *r)
                    .iter()
                    .any(|t| t.fields[0].as_name() == Some(name))
            })
    }

    /// Stages an insert. The tuple must conform to the schema and every
    /// referenced entity must exist in the pending view (committed state plus
    /// earlier staged changes). Inserting an already-present tuple is a
    /// no-op at apply time but still staged.
    pub fn insert(&self, tx: &mut Transaction, tuple: Tuple) -> Result<(), RbacError> {
        check_schema(&tuple)?;
        let defines = tuple.relation.defines();
        for (i, (field, col)) in tuple.fields.iter().zip(tuple.relation.schema()).enumerate() {
            let Col::Entity(kind) = col else { continue };
            if i == 0 && defines == Some(*kind) {
                continue;
            }
            let name = field.as_name().expect("schema-checked field");
            if !self.pending_entity_exists(tx, *kind, name) {
                return Err(RbacError::DanglingReference {
                    tuple: tuple.render(),
                    kind: *kind,
                    name: name.to_string(),
                });
            }
        }
        tx.deletes.remove(&tuple);
        tx.inserts.insert(tuple);
        Ok(())
    }

    /// Stages a delete. Deleting an absent tuple is a no-op, never an error.
    pub fn delete(&self, tx: &mut Transaction, tuple: Tuple) -> Result<(), RbacError> {
        check_schema(&tuple)?;
        tx.inserts.remove(&tuple);
        tx.deletes.insert(tuple);
        Ok(())
    }

    /// The full hypothetical post-state of a transaction.
    pub fn candidate_state(&self, tx: &Transaction) -> State {
        let mut state = self.head().clone();
        for t in &tx.deletes {
            state.remove(t);
        }
        for t in &tx.inserts {
            state.insert(t.clone());
        }
        state
    }

    /// Validates the candidate post-state (referential integrity first, then
    /// the supplied checks in order) and commits. On success the version
    /// advances by one; on violation nothing is applied and the transaction
    /// is discarded.
    pub fn commit(
        &mut self,
        tx: Transaction,
        checks: &[&dyn CommitCheck],
    ) -> Result<StateVersion, RbacError> {
        let candidate = self.candidate_state(&tx);
        let result = Self::validate(&candidate, checks);
        match result {
            Err(e) => {
                self.rollback(tx);
                Err(e)
            }
            Ok(()) => {
                self.deltas.push(CommitDelta {
                    inserts: tx.inserts.clone(),
                    deletes: tx.deletes.clone(),
                });
                self.versions.push(Arc::new(candidate));
                self.tx_open = false;
                Ok(self.head_version())
            }
        }
    }

    fn validate(candidate: &State, checks: &[&dyn CommitCheck]) -> Result<(), RbacError> {
        let dangling = candidate.dangling_tuples();
        if !dangling.is_empty() {
            return Err(RbacError::ConstraintViolation {
                constraint: "referential".to_string(),
                witness: dangling,
            });
        }
        for check in checks {
            if let Err((constraint, witness)) = check.check(candidate) {
                return Err(RbacError::ConstraintViolation {
                    constraint,
                    witness,
                });
            }
        }
        Ok(())
    }

    /// Reads a relation at a version (default: head). The returned set is a
    /// stable snapshot; later commits never change it.
    pub fn scan(
        &self,
        rel: Rel,
        version: Option<StateVersion>,
    ) -> Result<impl Iterator<Item = &Tuple>, RbacError> {
        let state = match version {
            Some(v) => self.state_at(v)?,
            None => self.head(),
        };
        Ok(state.relation(rel))
    }

    pub fn contains(&self, tuple: &Tuple) -> bool {
        self.head().contains(tuple)
    }
}

// --- tests ------------------------------------------------------------------
