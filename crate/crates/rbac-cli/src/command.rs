//! The line-oriented policy command language.
//!
//! One command per line: `Verb arg arg ...`. Permissions are written
//! `operation:object`, role and permission sets as `{a,b}` without spaces,
//! and everything from `#` to the end of the line is a comment. Parse errors
//! carry the 1-based line and column and what was expected there.

use rbac_engine::{Components, Permission, RbacError, SodFlavor};

/// A parsed non-blank script line: the command plus the text it came from
/// (comment stripped, trimmed). `raw` is what the runner echoes and audits,
/// so replaying an audit log re-parses to the same command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptLine {
    pub line_no: usize,
    pub raw: String,
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    AddUser { user: String },
    DeleteUser { user: String },
    AddRole { role: String },
    DeleteRole { role: String },
    AddOperation { operation: String },
    AddObject { object: String },
    AssignUser { user: String, role: String },
    DeassignUser { user: String, role: String },
    GrantPermission { permission: Permission, role: String },
    RevokePermission { permission: Permission, role: String },
    CreateSession { user: String, session: String, roles: Vec<String> },
    DeleteSession { user: String, session: String },
    AddActiveRole { user: String, session: String, role: String },
    DropActiveRole { user: String, session: String, role: String },
    CheckAccess { session: String, permission: Permission },
    AssignedUsers { role: String },
    AssignedRoles { user: String },
    RolePermissions { role: String },
    UserPermissions { user: String },
    SessionRoles { session: String },
    SessionPermissions { session: String },
    CountUsersPerRole,
    CountRolesPerUser,
    AddInheritance { ascendant: String, descendant: String },
    DeleteInheritance { ascendant: String, descendant: String },
    AddAscendant { role: String, descendant: String },
    AddDescendant { ascendant: String, role: String },
    AuthorizedUsers { role: String },
    AuthorizedRoles { user: String },
    AuthorizedPermissions { role: String },
    CreateSsdSet { name: String, roles: Vec<String>, cardinality: u32 },
    CreateDsdSet { name: String, roles: Vec<String>, cardinality: u32 },
    AddSodRoleMember { name: String, role: String },
    DeleteSodRoleMember { name: String, role: String },
    SetSodCardinality { name: String, cardinality: u32 },
    SodSets { flavor: SodFlavor },
    SodSetRoles { name: String },
    SodSetCardinality { name: String },
    MinimizeRoles,
    MinimizeAssignmentsWithHierarchy,
    GetRolesShortestPlan { user: String, goal: Vec<Permission> },
    GetRevocationShortestPlan { user: String, forbidden: Vec<Permission> },
    Load { path: String },
    Dump { path: String },
    Pragma { components: Components },
    Rules { relation: String },
    Assert { query: Box<Command>, expected: String },
}

impl Command {
    /// Read-only commands whose outcome is rendered text. These are the
    /// commands ASSERT may wrap.
    pub fn is_query(&self) -> bool {
        matches!(
            self,
            Command::CheckAccess { .. }
                | Command::AssignedUsers { .. }
                | Command::AssignedRoles { .. }
                | Command::RolePermissions { .. }
                | Command::UserPermissions { .. }
                | Command::SessionRoles { .. }
                | Command::SessionPermissions { .. }
                | Command::CountUsersPerRole
                | Command::CountRolesPerUser
                | Command::AuthorizedUsers { .. }
                | Command::AuthorizedRoles { .. }
                | Command::AuthorizedPermissions { .. }
                | Command::SodSets { .. }
                | Command::SodSetRoles { .. }
                | Command::SodSetCardinality { .. }
                | Command::MinimizeRoles
                | Command::MinimizeAssignmentsWithHierarchy
                | Command::GetRolesShortestPlan { .. }
                | Command::GetRevocationShortestPlan { .. }
                | Command::Rules { .. }
        )
    }

    /// Commands that can change what later commands observe: engine
    /// mutations plus LOAD and PRAGMA. These are the audited commands;
    /// replaying the audit column reproduces the final state.
    pub fn is_state_command(&self) -> bool {
        !self.is_query() && !matches!(self, Command::Dump { .. } | Command::Assert { .. })
    }
}

/// The echo and audit text of a line: comment stripped, ends trimmed.
pub fn raw_text(line: &str) -> String {
    let body = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    body.trim().to_string()
}

struct Tok<'a> {
    col: usize,
    text: &'a str,
}

/// Comment-stripped, whitespace-split tokens with 1-based byte columns.
fn tokenize(line: &str) -> Vec<Tok<'_>> {
    let body = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut toks = Vec::new();
    let mut start = None;
    for (i, c) in body.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                toks.push(Tok { col: s + 1, text: &body[s..i] });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        toks.push(Tok { col: s + 1, text: &body[s..] });
    }
    toks
}

struct Cursor<'a> {
    line_no: usize,
    toks: &'a [Tok<'a>],
    idx: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, column: usize, expected: &str) -> RbacError {
        RbacError::Parse { line: self.line_no, column, expected: expected.to_string() }
    }

    /// Column just past the last token, where a missing argument would be.
    fn end_col(&self) -> usize {
        self.toks.last().map_or(1, |t| t.col + t.text.len())
    }

    fn next(&mut self, expected: &str) -> Result<&'a Tok<'a>, RbacError> {
        match self.toks.get(self.idx) {
            Some(t) => {
                self.idx += 1;
                Ok(t)
            }
            None => Err(self.err(self.end_col(), expected)),
        }
    }

    fn name(&mut self, expected: &str) -> Result<String, RbacError> {
        let t = self.next(expected)?;
        if t.text.starts_with('{') {
            return Err(self.err(t.col, expected));
        }
        Ok(t.text.to_string())
    }

    fn number(&mut self, expected: &str) -> Result<u32, RbacError> {
        let t = self.next(expected)?;
        t.text.parse().map_err(|_| self.err(t.col, expected))
    }

    fn permission(&mut self) -> Result<Permission, RbacError> {
        let t = self.next("a permission like operation:object")?;
        parse_permission(self, t)
    }

    fn set_items(&mut self, expected: &str) -> Result<Vec<&'a str>, RbacError> {
        let t = self.next(expected)?;
        let inner = t
            .text
            .strip_prefix('{')
            .and_then(|r| r.strip_suffix('}'))
            .ok_or_else(|| self.err(t.col, expected))?;
        if inner.is_empty() {
            return Ok(Vec::new());
        }
        let items: Vec<&str> = inner.split(',').collect();
        if items.iter().any(|i| i.is_empty()) {
            return Err(self.err(t.col, expected));
        }
        Ok(items)
    }

    fn role_set(&mut self) -> Result<Vec<String>, RbacError> {
        let items = self.set_items("a role set like {r1,r2}")?;
        Ok(items.into_iter().map(str::to_string).collect())
    }

    fn permission_set(&mut self) -> Result<Vec<Permission>, RbacError> {
        let col = self.toks.get(self.idx).map_or_else(|| self.end_col(), |t| t.col);
        let items = self.set_items("a permission set like {read:a,write:b}")?;
        items
            .iter()
            .map(|i| {
                i.parse()
                    .map_err(|()| self.err(col, "a permission like operation:object"))
            })
            .collect()
    }

    fn finish(&self, command: Command) -> Result<Command, RbacError> {
        match self.toks.get(self.idx) {
            Some(t) => Err(self.err(t.col, "end of line")),
            None => Ok(command),
        }
    }
}

fn parse_permission(c: &Cursor<'_>, t: &Tok<'_>) -> Result<Permission, RbacError> {
    t.text
        .parse()
        .map_err(|()| c.err(t.col, "a permission like operation:object"))
}

/// Parses one line. Blank and comment-only lines yield `None`.
pub fn parse_line(line_no: usize, line: &str) -> Result<Option<ScriptLine>, RbacError> {
    let toks = tokenize(line);
    if toks.is_empty() {
        return Ok(None);
    }
    let raw = raw_text(line);
    let mut cursor = Cursor { line_no, toks: &toks, idx: 0 };
    let command = parse_command(&mut cursor)?;
    Ok(Some(ScriptLine { line_no, raw, command }))
}

/// Parses a whole script, failing on the first bad line. The runner prefers
/// `parse_line` so a parse error is one line's outcome, not the script's.
pub fn parse_script(text: &str) -> Result<Vec<ScriptLine>, RbacError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(parsed) = parse_line(i + 1, line)? {
            out.push(parsed);
        }
    }
    Ok(out)
}

fn parse_command(c: &mut Cursor<'_>) -> Result<Command, RbacError> {
    let verb = c.next("a command verb")?;
    let cmd = match verb.text {
        "AddUser" => Command::AddUser { user: c.name("a user name")? },
        "DeleteUser" => Command::DeleteUser { user: c.name("a user name")? },
        "AddRole" => Command::AddRole { role: c.name("a role name")? },
        "DeleteRole" => Command::DeleteRole { role: c.name("a role name")? },
        "AddOperation" => Command::AddOperation { operation: c.name("an operation name")? },
        "AddObject" => Command::AddObject { object: c.name("an object name")? },
        "AssignUser" => Command::AssignUser {
            user: c.name("a user name")?,
            role: c.name("a role name")?,
        },
        "DeassignUser" => Command::DeassignUser {
            user: c.name("a user name")?,
            role: c.name("a role name")?,
        },
        "GrantPermission" => Command::GrantPermission {
            permission: c.permission()?,
            role: c.name("a role name")?,
        },
        "RevokePermission" => Command::RevokePermission {
            permission: c.permission()?,
            role: c.name("a role name")?,
        },
        "CreateSession" => {
            let user = c.name("a user name")?;
            let session = c.name("a session name")?;
            // The initial role set may be omitted; that is an empty session.
            let roles = if c.toks.get(c.idx).is_some() { c.role_set()? } else { Vec::new() };
            Command::CreateSession { user, session, roles }
        }
        "DeleteSession" => Command::DeleteSession {
            user: c.name("a user name")?,
            session: c.name("a session name")?,
        },
        "AddActiveRole" => Command::AddActiveRole {
            user: c.name("a user name")?,
            session: c.name("a session name")?,
            role: c.name("a role name")?,
        },
        "DropActiveRole" => Command::DropActiveRole {
            user: c.name("a user name")?,
            session: c.name("a session name")?,
            role: c.name("a role name")?,
        },
        "CheckAccess" => Command::CheckAccess {
            session: c.name("a session name")?,
            permission: c.permission()?,
        },
        "AssignedUsers" => Command::AssignedUsers { role: c.name("a role name")? },
        "AssignedRoles" => Command::AssignedRoles { user: c.name("a user name")? },
        "RolePermissions" => Command::RolePermissions { role: c.name("a role name")? },
        "UserPermissions" => Command::UserPermissions { user: c.name("a user name")? },
        "SessionRoles" => Command::SessionRoles { session: c.name("a session name")? },
        "SessionPermissions" => {
            Command::SessionPermissions { session: c.name("a session name")? }
        }
        "CountUsersPerRole" => Command::CountUsersPerRole,
        "CountRolesPerUser" => Command::CountRolesPerUser,
        "AddInheritance" => Command::AddInheritance {
            ascendant: c.name("an ascendant role")?,
            descendant: c.name("a descendant role")?,
        },
        "DeleteInheritance" => Command::DeleteInheritance {
            ascendant: c.name("an ascendant role")?,
            descendant: c.name("a descendant role")?,
        },
        "AddAscendant" => Command::AddAscendant {
            role: c.name("a new role name")?,
            descendant: c.name("a descendant role")?,
        },
        "AddDescendant" => Command::AddDescendant {
            ascendant: c.name("an ascendant role")?,
            role: c.name("a new role name")?,
        },
        "AuthorizedUsers" => Command::AuthorizedUsers { role: c.name("a role name")? },
        "AuthorizedRoles" => Command::AuthorizedRoles { user: c.name("a user name")? },
        "AuthorizedPermissions" => {
            Command::AuthorizedPermissions { role: c.name("a role name")? }
        }
        "CreateSsdSet" => Command::CreateSsdSet {
            name: c.name("a constraint set name")?,
            roles: c.role_set()?,
            cardinality: c.number("a cardinality")?,
        },
        "CreateDsdSet" => Command::CreateDsdSet {
            name: c.name("a constraint set name")?,
            roles: c.role_set()?,
            cardinality: c.number("a cardinality")?,
        },
        "AddSodRoleMember" => Command::AddSodRoleMember {
            name: c.name("a constraint set name")?,
            role: c.name("a role name")?,
        },
        "DeleteSodRoleMember" => Command::DeleteSodRoleMember {
            name: c.name("a constraint set name")?,
            role: c.name("a role name")?,
        },
        "SetSodCardinality" => Command::SetSodCardinality {
            name: c.name("a constraint set name")?,
            cardinality: c.number("a cardinality")?,
        },
        "SodSets" => {
            let t = c.next("ssd or dsd")?;
            let flavor = match t.text {
                "ssd" => SodFlavor::Ssd,
                "dsd" => SodFlavor::Dsd,
                _ => return Err(c.err(t.col, "ssd or dsd")),
            };
            Command::SodSets { flavor }
        }
        "SodSetRoles" => Command::SodSetRoles { name: c.name("a constraint set name")? },
        "SodSetCardinality" => {
            Command::SodSetCardinality { name: c.name("a constraint set name")? }
        }
        "MinimizeRoles" => Command::MinimizeRoles,
        "MinimizeAssignmentsWithHierarchy" => Command::MinimizeAssignmentsWithHierarchy,
        "GetRolesShortestPlan" => Command::GetRolesShortestPlan {
            user: c.name("a user name")?,
            goal: c.permission_set()?,
        },
        "GetRevocationShortestPlan" => Command::GetRevocationShortestPlan {
            user: c.name("a user name")?,
            forbidden: c.permission_set()?,
        },
        "LOAD" => Command::Load { path: c.name("a snapshot path")? },
        "DUMP" => Command::Dump { path: c.name("a snapshot path")? },
        "PRAGMA" => {
            let t = c.next("components")?;
            if t.text != "components" {
                return Err(c.err(t.col, "components"));
            }
            let mut components =
                Components { hierarchy: false, ssd: false, dsd: false };
            let first = c.next("core, hierarchy, ssd, or dsd")?;
            let mut toks = vec![first];
            while let Some(t) = c.toks.get(c.idx) {
                c.idx += 1;
                toks.push(t);
            }
            for t in toks {
                match t.text {
                    // `core` is the baseline and enables nothing extra; it
                    // makes `PRAGMA components core` well-formed.
                    "core" => {}
                    "hierarchy" => components.hierarchy = true,
                    "ssd" => components.ssd = true,
                    "dsd" => components.dsd = true,
                    _ => return Err(c.err(t.col, "core, hierarchy, ssd, or dsd")),
                }
            }
            Command::Pragma { components }
        }
        "RULES" => Command::Rules { relation: c.name("a derived relation name")? },
        "ASSERT" => return parse_assert(c),
        _ => return Err(c.err(verb.col, "a known verb")),
    };
    c.finish(cmd)
}

/// `ASSERT <query> == <expected tokens...>`: the query's flattened output
/// (lines joined by single spaces) must equal the expected tokens joined by
/// single spaces. The expected side may be empty.
fn parse_assert(c: &mut Cursor<'_>) -> Result<Command, RbacError> {
    let rest = &c.toks[c.idx..];
    let eq = rest
        .iter()
        .position(|t| t.text == "==")
        .ok_or_else(|| c.err(c.end_col(), "=="))?;
    let mut inner = Cursor { line_no: c.line_no, toks: &rest[..eq], idx: 0 };
    let query = parse_command(&mut inner)?;
    if !query.is_query() {
        let col = rest.first().map_or_else(|| c.end_col(), |t| t.col);
        return Err(c.err(col, "a query verb"));
    }
    let expected =
        rest[eq + 1..].iter().map(|t| t.text).collect::<Vec<_>>().join(" ");
    c.idx = c.toks.len();
    Ok(Command::Assert { query: Box::new(query), expected })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(line: &str) -> Command {
        parse_line(1, line).expect("parses").expect("not blank").command
    }

    fn fails_at(line: &str) -> (usize, String) {
        match parse_line(1, line) {
            Err(RbacError::Parse { column, expected, .. }) => (column, expected),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn blank_and_comment_lines_vanish() {
        assert_eq!(parse_line(1, "").unwrap(), None);
        assert_eq!(parse_line(2, "   ").unwrap(), None);
        assert_eq!(parse_line(3, "# just a note").unwrap(), None);
    }

    #[test]
    fn trailing_comments_are_stripped_from_raw() {
        let parsed = parse_line(4, "  AddUser alice  # onboarding").unwrap().unwrap();
        assert_eq!(parsed.raw, "AddUser alice");
        assert_eq!(parsed.command, Command::AddUser { user: "alice".into() });
        assert_eq!(parsed.line_no, 4);
    }

    #[test]
    fn permissions_and_sets_parse() {
        assert_eq!(
            one("GrantPermission read:repo engineer"),
            Command::GrantPermission {
                permission: Permission::new("read", "repo"),
                role: "engineer".into(),
            }
        );
        assert_eq!(
            one("CreateSsdSet x {r1,r2} 2"),
            Command::CreateSsdSet {
                name: "x".into(),
                roles: vec!["r1".into(), "r2".into()],
                cardinality: 2,
            }
        );
        assert_eq!(
            one("GetRolesShortestPlan u {read:a,write:b}"),
            Command::GetRolesShortestPlan {
                user: "u".into(),
                goal: vec![Permission::new("read", "a"), Permission::new("write", "b")],
            }
        );
    }

    #[test]
    fn create_session_role_set_is_optional() {
        assert_eq!(
            one("CreateSession u s"),
            Command::CreateSession { user: "u".into(), session: "s".into(), roles: vec![] }
        );
        assert_eq!(
            one("CreateSession u s {}"),
            Command::CreateSession { user: "u".into(), session: "s".into(), roles: vec![] }
        );
        assert_eq!(
            one("CreateSession u s {a}"),
            Command::CreateSession {
                user: "u".into(),
                session: "s".into(),
                roles: vec!["a".into()],
            }
        );
    }

    #[test]
    fn parse_errors_point_at_the_offending_column() {
        let (col, expected) = fails_at("Frobnicate x");
        assert_eq!((col, expected.as_str()), (1, "a known verb"));

        let (col, expected) = fails_at("AddUser");
        assert_eq!((col, expected.as_str()), (8, "a user name"));

        let (col, expected) = fails_at("AddUser alice bob");
        assert_eq!((col, expected.as_str()), (15, "end of line"));

        let (col, _) = fails_at("GrantPermission readrepo engineer");
        assert_eq!(col, 17);

        let (col, _) = fails_at("CreateSsdSet x {r1, r2} 2");
        assert_eq!(col, 16);

        let (col, expected) = fails_at("SetSodCardinality x two");
        assert_eq!((col, expected.as_str()), (21, "a cardinality"));
    }

    #[test]
    fn pragma_accumulates_components() {
        assert_eq!(
            one("PRAGMA components core"),
            Command::Pragma {
                components: Components { hierarchy: false, ssd: false, dsd: false }
            }
        );
        assert_eq!(
            one("PRAGMA components hierarchy ssd dsd"),
            Command::Pragma {
                components: Components { hierarchy: true, ssd: true, dsd: true }
            }
        );
        let (col, expected) = fails_at("PRAGMA components everything");
        assert_eq!((col, expected.as_str()), (19, "core, hierarchy, ssd, or dsd"));
        let (_, expected) = fails_at("PRAGMA components");
        assert_eq!(expected, "core, hierarchy, ssd, or dsd");
    }

    #[test]
    fn assert_wraps_queries_only() {
        assert_eq!(
            one("ASSERT SessionRoles s == r1 r2"),
            Command::Assert {
                query: Box::new(Command::SessionRoles { session: "s".into() }),
                expected: "r1 r2".into(),
            }
        );
        assert_eq!(
            one("ASSERT AssignedRoles u =="),
            Command::Assert {
                query: Box::new(Command::AssignedRoles { user: "u".into() }),
                expected: String::new(),
            }
        );
        let (_, expected) = fails_at("ASSERT AddUser u == ok");
        assert_eq!(expected, "a query verb");
        let (_, expected) = fails_at("ASSERT SessionRoles s");
        assert_eq!(expected, "==");
    }

    #[test]
    fn script_parsing_keeps_line_numbers() {
        let script = "AddUser a\n\n# comment\nAddRole r\n";
        let lines = parse_script(script).unwrap();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].line_no, 1);
        assert_eq!(lines[1].line_no, 4);

        let err = parse_script("AddUser a\nBogus\n").unwrap_err();
        match err {
            RbacError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
