//! Positive Datalog over the base relations.
//!
//! Programs are range-restricted, negation-free rules. `evaluate` computes
//! the least fixpoint by naive iteration and serves as the oracle for
//! `evaluate_seminaive`, which only joins against the facts derived in the
//! previous round. The builtin library derives the role-closure and the
//! authorized views, giving an independent second implementation of the
//! hierarchy semantics.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use crate::engine::Engine;
use crate::error::RbacError;
use crate::store::{FieldValue, Rel, StateVersion};

/// A term in a rule: a variable (uppercase-initial identifier) or a ground
/// constant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(Value),
}

/// A ground value: an entity symbol or a natural number.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Sym(String),
    Num(u32),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Sym(s) => f.write_str(s),
            Value::Num(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub relation: String,
    pub terms: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<Atom>,
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .terms
            .iter()
            .map(|t| match t {
                Term::Var(v) => v.clone(),
                Term::Const(c) => c.to_string(),
            })
            .collect();
        write!(f, "{}({})", self.relation, terms.join(","))
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body: Vec<String> = self.body.iter().map(|a| a.to_string()).collect();
        write!(f, "{} :- {}.", self.head, body.join(", "))
    }
}

/// EDB facts: relation name to ground tuples.
pub type Facts = BTreeMap<String, BTreeSet<Vec<Value>>>;

/// Derived IDB facts, sorted deterministically.
pub type Fixpoint = BTreeMap<String, BTreeSet<Vec<Value>>>;

/// A validated program. Head relations form the IDB; body-only relations
/// form the EDB; the two never overlap.
#[derive(Debug, Clone)]
pub struct RuleProgram {
    pub rules: Vec<Rule>,
    pub edb: BTreeSet<String>,
    pub idb: BTreeSet<String>,
}

impl RuleProgram {
    /// Builds a program, inferring the EDB as the body-only relations.
    pub fn infer(rules: Vec<Rule>) -> Result<RuleProgram, RbacError> {
        let idb: BTreeSet<String> = rules.iter().map(|r| r.head.relation.clone()).collect();
        let edb: BTreeSet<String> = rules
            .iter()
            .flat_map(|r| r.body.iter())
            .map(|a| a.relation.clone())
            .filter(|rel| !idb.contains(rel))
            .collect();
        let program = RuleProgram { rules, edb, idb };
        program.validate()?;
        Ok(program)
    }

    /// Builds a program against a declared EDB. Rule heads may not name an
    /// EDB relation, and every body relation must be known.
    pub fn with_edb(rules: Vec<Rule>, edb: BTreeSet<String>) -> Result<RuleProgram, RbacError> {
        let idb: BTreeSet<String> = rules.iter().map(|r| r.head.relation.clone()).collect();
        for rule in &rules {
            if edb.contains(&rule.head.relation) {
                return Err(RbacError::ArityMismatch {
                    relation: rule.head.relation.clone(),
                    detail: format!("rule head of `{rule}` names an EDB relation"),
                });
            }
            for atom in &rule.body {
                if !edb.contains(&atom.relation) && !idb.contains(&atom.relation) {
                    return Err(RbacError::UnknownRelation {
                        name: atom.relation.clone(),
                    });
                }
            }
        }
        let program = RuleProgram { rules, edb, idb };
        program.validate()?;
        Ok(program)
    }

    fn validate(&self) -> Result<(), RbacError> {
        let mut arities: BTreeMap<&str, usize> = BTreeMap::new();
        for rule in &self.rules {
            if rule.body.is_empty() {
                return Err(RbacError::EmptyRuleBody {
                    rule: rule.to_string(),
                });
            }
            let mut body_vars: BTreeSet<&str> = BTreeSet::new();
            for atom in &rule.body {
                for term in &atom.terms {
                    if let Term::Var(v) = term {
                        body_vars.insert(v);
                    }
                }
            }
            for term in &rule.head.terms {
                if let Term::Var(v) = term {
                    if !body_vars.contains(v.as_str()) {
                        return Err(RbacError::UnboundHeadVariable {
                            rule: rule.to_string(),
                            variable: v.clone(),
                        });
                    }
                }
            }
            for atom in std::iter::once(&rule.head).chain(&rule.body) {
                let seen = arities.entry(&atom.relation).or_insert(atom.terms.len());
                if *seen != atom.terms.len() {
                    return Err(RbacError::ArityMismatch {
                        relation: atom.relation.clone(),
                        detail: format!(
                            "used with both {} and {} terms",
                            seen,
                            atom.terms.len()
                        ),
                    });
                }
            }
        }
        Ok(())
    }
}

// --- text format -------------------------------------------------------------

/// Parses rule text: one rule per line, `head :- atom1, atom2.`, with `%`
/// starting a comment. Variables are uppercase-initial identifiers.
pub fn parse_rules(text: &str) -> Result<Vec<Rule>, RbacError> {
    let mut rules = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('%') {
            Some(p) => &raw[..p],
            None => raw,
        };
        if line.trim().is_empty() {
            continue;
        }
        rules.push(parse_rule_line(line, line_no)?);
    }
    Ok(rules)
}

/// Parses and validates a full program from rule text.
pub fn parse_program(text: &str) -> Result<RuleProgram, RbacError> {
    RuleProgram::infer(parse_rules(text)?)
}

struct Cursor<'a> {
    line: &'a str,
    pos: usize,
    line_no: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, expected: &str) -> RbacError {
        RbacError::Parse {
            line: self.line_no,
            column: self.pos + 1,
            expected: expected.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.line[self.pos..].starts_with(|c: char| c.is_whitespace()) {
            self.pos += self.line[self.pos..].chars().next().unwrap().len_utf8();
        }
    }

    fn eat(&mut self, token: &str) -> Result<(), RbacError> {
        self.skip_ws();
        if self.line[self.pos..].starts_with(token) {
            self.pos += token.len();
            Ok(())
        } else {
            Err(self.err(&format!("'{token}'")))
        }
    }

    fn peek_is(&mut self, token: &str) -> bool {
        self.skip_ws();
        self.line[self.pos..].starts_with(token)
    }

    fn ident(&mut self) -> Result<&'a str, RbacError> {
        self.skip_ws();
        let start = self.pos;
        for c in self.line[start..].chars() {
            if c.is_whitespace() || "(),.:%".contains(c) {
                break;
            }
            self.pos += c.len_utf8();
        }
        if self.pos == start {
            Err(self.err("identifier"))
        } else {
            Ok(&self.line[start..self.pos])
        }
    }

    fn atom(&mut self) -> Result<Atom, RbacError> {
        let relation = self.ident()?.to_string();
        self.eat("(")?;
        let mut terms = Vec::new();
        loop {
            let ident = self.ident()?;
            let term = if ident.chars().next().is_some_and(|c| c.is_ascii_uppercase()) {
                Term::Var(ident.to_string())
            } else if ident.chars().all(|c| c.is_ascii_digit()) {
                Term::Const(Value::Num(ident.parse().map_err(|_| self.err("number"))?))
            } else {
                Term::Const(Value::Sym(ident.to_string()))
            };
            terms.push(term);
            if self.peek_is(",") {
                self.eat(",")?;
            } else {
                break;
            }
        }
        self.eat(")")?;
        Ok(Atom { relation, terms })
    }
}

fn parse_rule_line(line: &str, line_no: usize) -> Result<Rule, RbacError> {
    let mut cur = Cursor { line, pos: 0, line_no };
    let head = cur.atom()?;
    cur.eat(":-")?;
    let mut body = vec![cur.atom()?];
    while cur.peek_is(",") {
        cur.eat(",")?;
        body.push(cur.atom()?);
    }
    cur.eat(".")?;
    cur.skip_ws();
    if cur.pos != line.len() {
        return Err(cur.err("end of rule"));
    }
    Ok(Rule { head, body })
}

// --- the builtin library ------------------------------------------------------

/// Rules deriving the hierarchy closure and the authorized views from the
/// base relations. `geq` must agree with the maintained closure index at
/// every committed version.
pub fn builtin_library() -> RuleProgram {
    let text = "\
% reflexive-transitive closure of the immediate inheritance edges
geq(X,X) :- role(X).
geq(X,Y) :- rh(X,Z), geq(Z,Y).
% roles a user may activate
authorized_roles(U,R) :- ua(U,S), geq(S,R).
% permissions a role carries, directly or by inheritance
authorized_perms(R,Op,Ob) :- geq(R,S), pa(Op,Ob,S).
";
    let rules = parse_rules(text).expect("builtin rules parse");
    let edb = ["role", "rh", "ua", "pa"]
        .into_iter()
        .map(str::to_string)
        .collect();
    RuleProgram::with_edb(rules, edb).expect("builtin rules validate")
}

// --- evaluation ---------------------------------------------------------------

/// Interned ground value for fast joins.
type Sym = u32;

#[derive(Default)]
struct Interner {
    vals: Vec<Value>,
    ids: HashMap<Value, Sym>,
}

impl Interner {
    fn intern(&mut self, v: &Value) -> Sym {
        if let Some(&id) = self.ids.get(v) {
            return id;
        }
        let id = self.vals.len() as Sym;
        self.vals.push(v.clone());
        self.ids.insert(v.clone(), id);
        id
    }

    fn value(&self, id: Sym) -> &Value {
        &self.vals[id as usize]
    }
}

/// One relation's tuples with a first-column index for probing joins.
#[derive(Default)]
struct RelData {
    tuples: Vec<Vec<Sym>>,
    set: HashSet<Vec<Sym>>,
    by_first: HashMap<Sym, Vec<usize>>,
}

impl RelData {
    fn insert(&mut self, tuple: Vec<Sym>) -> bool {
        if self.set.contains(&tuple) {
            return false;
        }
        if let Some(&first) = tuple.first() {
            self.by_first.entry(first).or_default().push(self.tuples.len());
        }
        self.set.insert(tuple.clone());
        self.tuples.push(tuple);
        true
    }

    fn candidates(&self, first: Option<Sym>) -> Candidates<'_> {
        match first {
            Some(s) => Candidates::Probed(self, self.by_first.get(&s).map(|v| v.as_slice()).unwrap_or(&[]), 0),
            None => Candidates::All(self, 0),
        }
    }
}

enum Candidates<'a> {
    All(&'a RelData, usize),
    Probed(&'a RelData, &'a [usize], usize),
}

impl<'a> Iterator for Candidates<'a> {
    type Item = &'a [Sym];

    fn next(&mut self) -> Option<&'a [Sym]> {
        match self {
            Candidates::All(rel, i) => {
                let t = rel.tuples.get(*i)?;
                *i += 1;
                Some(t)
            }
            Candidates::Probed(rel, idxs, i) => {
                let idx = idxs.get(*i)?;
                *i += 1;
                Some(&rel.tuples[*idx])
            }
        }
    }
}

#[derive(Clone, Copy)]
enum CTerm {
    Const(Sym),
    Var(usize),
}

struct CompiledAtom {
    rel: usize,
    terms: Vec<CTerm>,
}

struct CompiledRule {
    head: CompiledAtom,
    body: Vec<CompiledAtom>,
    nvars: usize,
}

struct Evaluation {
    interner: Interner,
    rel_names: Vec<String>,
    rel_ids: HashMap<String, usize>,
    rels: Vec<RelData>,
    idb: Vec<bool>,
    rules: Vec<CompiledRule>,
}

impl Evaluation {
    fn prepare(program: &RuleProgram, edb: &Facts) -> Result<Evaluation, RbacError> {
        let mut ev = Evaluation {
            interner: Interner::default(),
            rel_names: Vec::new(),
            rel_ids: HashMap::new(),
            rels: Vec::new(),
            idb: Vec::new(),
            rules: Vec::new(),
        };
        let rel_id = |ev: &mut Evaluation, name: &str, is_idb: bool| {
            if let Some(&id) = ev.rel_ids.get(name) {
                return id;
            }
            let id = ev.rels.len();
            ev.rel_names.push(name.to_string());
            ev.rel_ids.insert(name.to_string(), id);
            ev.rels.push(RelData::default());
            ev.idb.push(is_idb);
            id
        };
        for name in &program.edb {
            rel_id(&mut ev, name, false);
        }
        for name in &program.idb {
            rel_id(&mut ev, name, true);
        }

        // Arity bookkeeping across rules and facts.
        let mut arities: HashMap<usize, usize> = HashMap::new();
        let mut check_arity = |rel: usize, len: usize, names: &[String]| {
            let seen = *arities.entry(rel).or_insert(len);
            if seen != len {
                return Err(RbacError::ArityMismatch {
                    relation: names[rel].clone(),
                    detail: format!("used with both {seen} and {len} fields"),
                });
            }
            Ok(())
        };

        for rule in &program.rules {
            let mut vars: HashMap<String, usize> = HashMap::new();
            let compile_atom =
                |ev: &mut Evaluation,
                 vars: &mut HashMap<String, usize>,
                 atom: &Atom|
                 -> CompiledAtom {
                    let rel = *ev.rel_ids.get(&atom.relation).expect("validated relation");
                    let terms = atom
                        .terms
                        .iter()
                        .map(|t| match t {
                            Term::Const(c) => CTerm::Const(ev.interner.intern(c)),
                            Term::Var(v) => {
                                let next = vars.len();
                                CTerm::Var(*vars.entry(v.clone()).or_insert(next))
                            }
                        })
                        .collect();
                    CompiledAtom { rel, terms }
                };
            let body: Vec<CompiledAtom> = rule
                .body
                .iter()
                .map(|a| compile_atom(&mut ev, &mut vars, a))
                .collect();
            let head = compile_atom(&mut ev, &mut vars, &rule.head);
            for (atom, src) in body.iter().zip(&rule.body).chain([(&head, &rule.head)]) {
                check_arity(atom.rel, atom.terms.len(), &ev.rel_names)
                    .map_err(|e| attach_rule(e, src))?;
            }
            let nvars = vars.len();
            ev.rules.push(CompiledRule { head, body, nvars });
        }

        for (name, tuples) in edb {
            let Some(&rel) = ev.rel_ids.get(name) else {
                // Facts for relations the program never mentions are ignored.
                continue;
            };
            for tuple in tuples {
                check_arity(rel, tuple.len(), &ev.rel_names)?;
                let interned: Vec<Sym> = tuple.iter().map(|v| ev.interner.intern(v)).collect();
                ev.rels[rel].insert(interned);
            }
        }
        Ok(ev)
    }

    /// Fires one rule, reading body atom `delta_at` (if any) from `delta`
    /// instead of the full relation. Derived head tuples are appended to
    /// `out`, duplicates included.
    fn fire(
        &self,
        rule: &CompiledRule,
        delta_at: Option<usize>,
        delta: Option<&RelData>,
        out: &mut Vec<(usize, Vec<Sym>)>,
    ) {
        fn descend(
            ev: &Evaluation,
            rule: &CompiledRule,
            delta_at: Option<usize>,
            delta: Option<&RelData>,
            depth: usize,
            binding: &mut Vec<Option<Sym>>,
            out: &mut Vec<(usize, Vec<Sym>)>,
        ) {
            if depth == rule.body.len() {
                let tuple: Vec<Sym> = rule
                    .head
                    .terms
                    .iter()
                    .map(|t| match t {
                        CTerm::Const(c) => *c,
                        CTerm::Var(v) => binding[*v].expect("range-restricted head"),
                    })
                    .collect();
                out.push((rule.head.rel, tuple));
                return;
            }
            let atom = &rule.body[depth];
            let data = if delta_at == Some(depth) {
                delta.expect("delta provided")
            } else {
                &ev.rels[atom.rel]
            };
            let first = atom.terms.first().and_then(|t| match t {
                CTerm::Const(c) => Some(*c),
                CTerm::Var(v) => binding[*v],
            });
            'tuples: for tuple in data.candidates(first) {
                if tuple.len() != atom.terms.len() {
                    continue;
                }
                let mut bound_here: Vec<usize> = Vec::new();
                for (term, &val) in atom.terms.iter().zip(tuple) {
                    match term {
                        CTerm::Const(c) => {
                            if *c != val {
                                for v in bound_here.drain(..) {
                                    binding[v] = None;
                                }
                                continue 'tuples;
                            }
                        }
                        CTerm::Var(v) => match binding[*v] {
                            Some(b) if b != val => {
                                for v in bound_here.drain(..) {
                                    binding[v] = None;
                                }
                                continue 'tuples;
                            }
                            Some(_) => {}
                            None => {
                                binding[*v] = Some(val);
                                bound_here.push(*v);
                            }
                        },
                    }
                }
                descend(ev, rule, delta_at, delta, depth + 1, binding, out);
                for v in bound_here.drain(..) {
                    binding[v] = None;
                }
            }
        }

        let mut binding = vec![None; rule.nvars];
        descend(self, rule, delta_at, delta, 0, &mut binding, out);
    }

    fn into_fixpoint(self, program: &RuleProgram) -> Fixpoint {
        let mut out = Fixpoint::new();
        for name in &program.idb {
            let rel = self.rel_ids[name];
            let tuples: BTreeSet<Vec<Value>> = self.rels[rel]
                .tuples
                .iter()
                .map(|t| t.iter().map(|&s| self.interner.value(s).clone()).collect())
                .collect();
            out.insert(name.clone(), tuples);
        }
        out
    }
}

fn attach_rule(err: RbacError, atom: &Atom) -> RbacError {
    match err {
        RbacError::ArityMismatch { relation, detail } => RbacError::ArityMismatch {
            relation,
            detail: format!("{detail} (at atom of {})", atom.relation),
        },
        other => other,
    }
}

/// Least fixpoint by naive iteration: every rule re-fires over the whole
/// database until a round derives nothing new.
pub fn evaluate(program: &RuleProgram, edb: &Facts) -> Result<Fixpoint, RbacError> {
    let mut ev = Evaluation::prepare(program, edb)?;
    loop {
        let mut derived = Vec::new();
        for rule in &ev.rules {
            ev.fire(rule, None, None, &mut derived);
        }
        let mut changed = false;
        for (rel, tuple) in derived {
            changed |= ev.rels[rel].insert(tuple);
        }
        if !changed {
            break;
        }
    }
    Ok(ev.into_fixpoint(program))
}

/// Least fixpoint by semi-naive iteration: after the seed round, a rule only
/// fires with one IDB body atom restricted to the previous round's delta.
pub fn evaluate_seminaive(program: &RuleProgram, edb: &Facts) -> Result<Fixpoint, RbacError> {
    let mut ev = Evaluation::prepare(program, edb)?;
    let nrels = ev.rels.len();

    // Seed round: IDB relations are empty, so only rules whose body is
    // entirely EDB can fire.
    let mut derived = Vec::new();
    for rule in &ev.rules {
        if rule.body.iter().all(|a| !ev.idb[a.rel]) {
            ev.fire(rule, None, None, &mut derived);
        }
    }
    let mut delta: Vec<RelData> = (0..nrels).map(|_| RelData::default()).collect();
    for (rel, tuple) in derived {
        if ev.rels[rel].insert(tuple.clone()) {
            delta[rel].insert(tuple);
        }
    }

    while delta.iter().any(|d| !d.tuples.is_empty()) {
        let mut derived = Vec::new();
        for rule in &ev.rules {
            for (i, atom) in rule.body.iter().enumerate() {
                if !ev.idb[atom.rel] || delta[atom.rel].tuples.is_empty() {
                    continue;
                }
                ev.fire(rule, Some(i), Some(&delta[atom.rel]), &mut derived);
            }
        }
        let mut next: Vec<RelData> = (0..nrels).map(|_| RelData::default()).collect();
        for (rel, tuple) in derived {
            if ev.rels[rel].insert(tuple.clone()) {
                next[rel].insert(tuple);
            }
        }
        delta = next;
    }
    Ok(ev.into_fixpoint(program))
}

// --- engine integration -------------------------------------------------------

impl Engine {
    /// Extracts the program's EDB from a committed version of the store.
    pub fn edb_facts(
        &self,
        program: &RuleProgram,
        version: Option<StateVersion>,
    ) -> Result<Facts, RbacError> {
        let state = match version {
            Some(v) => self.state_at(v)?,
            None => self.state(),
        };
        for idb in &program.idb {
            if Rel::from_name(idb).is_ok() {
                return Err(RbacError::ArityMismatch {
                    relation: idb.clone(),
                    detail: "rule head names a base relation".to_string(),
                });
            }
        }
        let mut facts = Facts::new();
        for name in &program.edb {
            let rel = Rel::from_name(name)?;
            let tuples: BTreeSet<Vec<Value>> = state
                .relation(rel)
                .map(|t| {
                    t.fields
                        .iter()
                        .map(|f| match f {
                            FieldValue::Name(s) => Value::Sym(s.clone()),
                            FieldValue::Num(n) => Value::Num(*n),
                        })
                        .collect()
                })
                .collect();
            facts.insert(name.clone(), tuples);
        }
        Ok(facts)
    }

    /// Naive evaluation over a committed version (default: head).
    pub fn evaluate_rules(
        &self,
        program: &RuleProgram,
        version: Option<StateVersion>,
    ) -> Result<Fixpoint, RbacError> {
        evaluate(program, &self.edb_facts(program, version)?)
    }

    /// Semi-naive evaluation over a committed version (default: head).
    pub fn evaluate_rules_seminaive(
        &self,
        program: &RuleProgram,
        version: Option<StateVersion>,
    ) -> Result<Fixpoint, RbacError> {
        evaluate_seminaive(program, &self.edb_facts(program, version)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(s: &str) -> Value {
        Value::Sym(s.to_string())
    }

    fn facts(entries: &[(&str, &[&[&str]])]) -> Facts {
        entries
            .iter()
            .map(|(rel, tuples)| {
                (
                    rel.to_string(),
                    tuples
                        .iter()
                        .map(|t| t.iter().map(|s| sym(s)).collect())
                        .collect(),
                )
            })
            .collect()
    }

    #[test]
    fn transitive_closure_fixpoint() {
        let program = parse_program(
            "path(X,Y) :- edge(X,Y).\n\
             path(X,Z) :- edge(X,Y), path(Y,Z).\n",
        )
        .unwrap();
        let edb = facts(&[("edge", &[&["a", "b"], &["b", "c"], &["c", "d"]])]);
        let fix = evaluate(&program, &edb).unwrap();
        let paths = &fix["path"];
        assert_eq!(paths.len(), 6);
        assert!(paths.contains(&vec![sym("a"), sym("d")]));
        assert_eq!(evaluate_seminaive(&program, &edb).unwrap(), fix);
    }

    #[test]
    fn constants_and_numbers_in_rules() {
        let program = parse_program("big(X) :- size(X,3).\n").unwrap();
        let edb: Facts = [(
            "size".to_string(),
            BTreeSet::from([
                vec![sym("a"), Value::Num(3)],
                vec![sym("b"), Value::Num(2)],
            ]),
        )]
        .into();
        let fix = evaluate(&program, &edb).unwrap();
        assert_eq!(fix["big"], BTreeSet::from([vec![sym("a")]]));
    }

    #[test]
    fn empty_edb_yields_empty_idb() {
        let program = parse_program("p(X) :- q(X).\np(X) :- r(X), p(X).\n").unwrap();
        let fix = evaluate(&program, &Facts::new()).unwrap();
        assert!(fix["p"].is_empty());
        let fix2 = evaluate_seminaive(&program, &Facts::new()).unwrap();
        assert_eq!(fix, fix2);
    }

    #[test]
    fn validation_errors() {
        assert_eq!(
            parse_program("p(X,Y) :- q(X).\n").unwrap_err().code(),
            "UNBOUND_HEAD_VARIABLE"
        );
        assert_eq!(
            parse_program("p(X) :- q(X), q(X,Y).\n").unwrap_err().code(),
            "ARITY_MISMATCH"
        );
        // Body-free facts are not part of the language.
        assert_eq!(
            parse_program("p(a).\n").unwrap_err().code(),
            "PARSE_ERROR"
        );
        let head_on_edb = RuleProgram::with_edb(
            parse_rules("q(X) :- q(X).\n").unwrap(),
            BTreeSet::from(["q".to_string()]),
        );
        assert_eq!(head_on_edb.unwrap_err().code(), "ARITY_MISMATCH");
        let unknown = RuleProgram::with_edb(
            parse_rules("p(X) :- mystery(X).\n").unwrap(),
            BTreeSet::from(["q".to_string()]),
        );
        assert_eq!(unknown.unwrap_err().code(), "UNKNOWN_RELATION");
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = parse_rules("p(X) :- q(X)\n").unwrap_err();
        match err {
            RbacError::Parse { line, expected, .. } => {
                assert_eq!(line, 1);
                assert_eq!(expected, "'.'");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_rules("% only a comment\n").unwrap().is_empty());
        let trailing = parse_rules("p(X) :- q(X). extra\n").unwrap_err();
        assert_eq!(trailing.code(), "PARSE_ERROR");
    }

    #[test]
    fn builtin_library_matches_engine_views() {
        let mut e = Engine::new();
        for r in ["top", "mid", "leaf"] {
            e.add_role(r).unwrap();
        }
        e.add_user("u").unwrap();
        e.add_operation("read").unwrap();
        e.add_object("doc").unwrap();
        e.add_inheritance("top", "mid").unwrap();
        e.add_inheritance("mid", "leaf").unwrap();
        e.assign_user("u", "top").unwrap();
        e.grant_permission("read", "doc", "leaf").unwrap();

        let program = builtin_library();
        let fix = e.evaluate_rules(&program, None).unwrap();
        let semi = e.evaluate_rules_seminaive(&program, None).unwrap();
        assert_eq!(fix, semi);

        let geq: BTreeSet<(String, String)> = fix["geq"]
            .iter()
            .map(|t| (t[0].to_string(), t[1].to_string()))
            .collect();
        assert_eq!(&geq, e.closure().pairs());

        let auth_roles: BTreeSet<String> = fix["authorized_roles"]
            .iter()
            .filter(|t| t[0] == sym("u"))
            .map(|t| t[1].to_string())
            .collect();
        assert_eq!(auth_roles, e.authorized_roles("u").unwrap());

        let auth_perms: BTreeSet<String> = fix["authorized_perms"]
            .iter()
            .filter(|t| t[0] == sym("top"))
            .map(|t| format!("{}:{}", t[1], t[2]))
            .collect();
        let expected: BTreeSet<String> = e
            .authorized_permissions("top")
            .unwrap()
            .into_iter()
            .map(|p| p.to_string())
            .collect();
        assert_eq!(auth_perms, expected);
    }

    #[test]
    fn rule_head_may_not_shadow_base_relations() {
        let e = Engine::new();
        let program = parse_program("ua(X,Y) :- helper(X,Y).\n").unwrap();
        assert_eq!(
            e.evaluate_rules(&program, None).unwrap_err().code(),
            "ARITY_MISMATCH"
        );
        let unknown = parse_program("p(X) :- widgets(X).\n").unwrap();
        assert_eq!(
            e.evaluate_rules(&unknown, None).unwrap_err().code(),
            "UNKNOWN_RELATION"
        );
    }

    #[test]
    fn programs_reject_empty_bodies_and_unbound_heads() {
        // The text grammar cannot express an empty body, so the check fires
        // only on programmatically built rules.
        let rule = Rule {
            head: Atom { relation: "p".to_string(), terms: vec![Term::Const(sym("a"))] },
            body: Vec::new(),
        };
        assert_eq!(RuleProgram::infer(vec![rule]).unwrap_err().code(), "EMPTY_RULE_BODY");
        assert_eq!(
            parse_program("p(X) :- q(Y).\n").unwrap_err().code(),
            "UNBOUND_HEAD_VARIABLE"
        );
    }
}
