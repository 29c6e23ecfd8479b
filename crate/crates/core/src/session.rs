//! Interactive session: dispatches commands, SQL and Datalog input, renders
//! answers, and runs scripts.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use crate::datalog::{
    check_safety, display_rule_pretty, parse_clauses, Atom, Clause, DatalogError, Goal, Origin, Rule, RuleId,
    Substitutable, Substitution, Term,
};
use crate::engine::{Database, DbError, EngineError};
use crate::persist::{load_db_file, save_db_file, LoadError};
use crate::sql::{parse_sql, resolve_query, Schema, SqlError, SqlType, Statement};
use crate::translate::{relation_names, translate, Options};
use crate::value::Tuple;

/// Name of the predicate holding query answers.
pub const ANSWER: &str = "answer";

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Sql(#[from] SqlError),
    #[error(transparent)]
    Datalog(#[from] DatalogError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Db(#[from] DbError),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("unsupported feature: {0}")]
    UnsupportedFeature(String),
    #[error("`{ANSWER}` is reserved for query answers")]
    ReservedName,
    #[error("unknown command `{0}`")]
    UnknownCommand(String),
    #[error("{0}")]
    Usage(String),
    #[error("expected {expected}")]
    WrongStatement { expected: &'static str },
}

impl SessionError {
    /// Short machine readable name of the error, e.g. `UnknownRelation`.
    pub fn kind(&self) -> &'static str {
        match self {
            SessionError::Sql(e) => match e {
                SqlError::Syntax { .. } => "SyntaxError",
                SqlError::Unsupported { .. } | SqlError::UnsupportedSemantics(_) => "UnsupportedFeature",
                SqlError::UnknownRelation(_) => "UnknownRelation",
                SqlError::UnknownColumn(_) => "UnknownColumn",
                SqlError::AmbiguousColumn(_) => "AmbiguousColumn",
                SqlError::ArityMismatch { .. } => "ArityMismatch",
                SqlError::TypeMismatch { .. } => "TypeMismatch",
                SqlError::DuplicateRelation(_) => "DuplicateRelation",
                SqlError::DuplicateAlias(_) => "DuplicateAlias",
            },
            SessionError::Datalog(DatalogError::Syntax { .. }) => "SyntaxError",
            SessionError::Datalog(DatalogError::ArityMismatch { .. }) => "ArityMismatch",
            SessionError::Engine(e) => match e {
                EngineError::NotStratifiable { .. } => "NotStratifiable",
                EngineError::UnsafeRule(_) => "UnsafeRule",
                EngineError::ArityMismatch { .. } => "ArityMismatch",
                EngineError::TypeError { .. } => "TypeError",
            },
            SessionError::Db(e) => match e {
                DbError::RelationExists(_) => "DuplicateRelation",
                DbError::UnknownRelation(_) => "UnknownRelation",
                DbError::ArityMismatch { .. } => "ArityMismatch",
                DbError::TypeMismatch { .. } => "TypeMismatch",
            },
            SessionError::Load(LoadError::Version(_)) => "VersionError",
            SessionError::Load(LoadError::Io(_)) => "IoError",
            SessionError::Load(_) => "LoadError",
            SessionError::UnsupportedFeature(_) => "UnsupportedFeature",
            SessionError::ReservedName => "ReservedName",
            SessionError::UnknownCommand(_) => "UnknownCommand",
            SessionError::Usage(_) => "UsageError",
            SessionError::WrongStatement { .. } => "WrongStatement",
        }
    }
}

/// Compilation of a SQL query, before evaluation.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub schema: Schema,
    pub rules: Vec<Rule>,
}

impl Compiled {
    /// Compiled rules in listing layout, one string per rule.
    pub fn listing(&self) -> Vec<String> {
        self.rules.iter().map(display_rule_pretty).collect()
    }
}

/// Answer to a query: the compiled program and the answer multiset, sorted.
#[derive(Debug, Clone)]
pub struct Answer {
    pub schema: Schema,
    pub compiled: Vec<Rule>,
    pub rows: Vec<Tuple>,
}

impl Answer {
    /// Distinct tuples with their multiplicities, in display order.
    pub fn grouped(&self) -> Vec<(Tuple, usize)> {
        let mut out: Vec<(Tuple, usize)> = Vec::new();
        for t in &self.rows {
            match out.last_mut() {
                Some((last, n)) if last == t => *n += 1,
                _ => out.push((t.clone(), 1)),
            }
        }
        out
    }
}

pub fn tuples_info(n: usize) -> String {
    format!("Info: {n} {} computed.", if n == 1 { "tuple" } else { "tuples" })
}

fn render_set(pred: &str, rows: &[Tuple]) -> String {
    if rows.is_empty() {
        return "{}".into();
    }
    let items: Vec<String> = rows
        .iter()
        .map(|t| Atom::new(pred, t.iter().cloned().map(Term::Const).collect()).to_string())
        .collect();
    format!("{{ {} }}", items.join(", "))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum InputKind {
    Command,
    Sql,
    Datalog,
}

fn classify(input: &str) -> InputKind {
    let t = input.trim_start();
    if t.starts_with('/') {
        return InputKind::Command;
    }
    if t.starts_with('(') {
        return InputKind::Sql;
    }
    let word: String = t.chars().take_while(|c| c.is_ascii_alphabetic()).collect();
    match word.to_ascii_lowercase().as_str() {
        "select" | "with" | "assume" | "create" | "insert" | "drop" => InputKind::Sql,
        _ => InputKind::Datalog,
    }
}

#[derive(Debug, Clone, Default)]
pub struct Session {
    db: Database,
    show_compilations: bool,
    history: Vec<String>,
}

impl Session {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_database(db: Database) -> Self {
        Session {
            db,
            ..Self::default()
        }
    }

    pub fn database(&self) -> &Database {
        &self.db
    }

    pub fn show_compilations(&self) -> bool {
        self.show_compilations
    }

    pub fn set_show_compilations(&mut self, on: bool) {
        self.show_compilations = on;
    }

    pub fn history(&self) -> &[String] {
        &self.history
    }

    /// Evaluates one input and returns the text to display.
    pub fn eval(&mut self, input: &str) -> Result<String, SessionError> {
        let input = input.trim();
        if input.is_empty() {
            return Ok(String::new());
        }
        self.history.push(input.to_string());
        match classify(input) {
            InputKind::Command => self.command(input),
            InputKind::Sql => self.sql(input),
            InputKind::Datalog => self.datalog(input),
        }
    }

    fn command(&mut self, input: &str) -> Result<String, SessionError> {
        let mut parts = input[1..].split_whitespace();
        let name = parts.next().unwrap_or("");
        let args: Vec<&str> = parts.collect();
        match (name, args.as_slice()) {
            ("show_compilations", []) => Ok(format!(
                "Info: show_compilations is {}.",
                if self.show_compilations { "on" } else { "off" }
            )),
            ("show_compilations", [flag]) => {
                self.show_compilations = match *flag {
                    "on" => true,
                    "off" => false,
                    _ => return Err(SessionError::Usage("usage: /show_compilations on|off".into())),
                };
                Ok(format!("Info: show_compilations is {flag}."))
            }
            ("open_db", _) => Err(SessionError::UnsupportedFeature(
                "external database connections are not available".into(),
            )),
            ("save", [path]) => {
                save_db_file(&self.db, path)?;
                Ok(format!("Info: database saved to {path}."))
            }
            ("load", [path]) => {
                self.db = load_db_file(path)?;
                Ok(format!("Info: database loaded from {path}."))
            }
            ("dbschema", []) => Ok(self
                .db
                .catalog()
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join("\n")),
            ("listing", []) => {
                let mut lines = Vec::new();
                for (pred, rows) in self.db.facts() {
                    for t in rows {
                        lines.push(format!("{}.", Atom::new(pred.clone(), t.iter().cloned().map(Term::Const).collect())));
                    }
                }
                lines.extend(self.db.rules().iter().map(|r| r.to_string()));
                Ok(lines.join("\n"))
            }
            ("help", []) => Ok(HELP.trim_end().to_string()),
            ("save" | "load", _) => Err(SessionError::Usage(format!("usage: /{name} <file>"))),
            _ => Err(SessionError::UnknownCommand(format!("/{name}"))),
        }
    }

    fn sql(&mut self, input: &str) -> Result<String, SessionError> {
        let stmt = parse_sql(input.trim_end_matches(';'))?;
        match stmt {
            Statement::Query(_) => {
                let answer = self.query_statement(&stmt)?;
                let mut out = Vec::new();
                if self.show_compilations {
                    out.push("Info: SQL statement compiled to:".to_string());
                    for r in &answer.compiled {
                        for line in display_rule_pretty(r).lines() {
                            out.push(format!("  {line}"));
                        }
                    }
                }
                out.push(format!("{} ->", answer.schema));
                out.push(render_set(ANSWER, &answer.rows));
                out.push(tuples_info(answer.rows.len()));
                Ok(out.join("\n"))
            }
            other => self.ddl_statement(other),
        }
    }

    /// Runs a `CREATE TABLE`, `INSERT` or `DROP TABLE` statement given as
    /// text.
    pub fn ddl(&mut self, text: &str) -> Result<String, SessionError> {
        let stmt = parse_sql(text.trim().trim_end_matches(';'))?;
        if matches!(stmt, Statement::Query(_)) {
            return Err(SessionError::WrongStatement {
                expected: "CREATE TABLE, INSERT or DROP TABLE",
            });
        }
        self.history.push(text.trim().to_string());
        self.ddl_statement(stmt)
    }

    fn ddl_statement(&mut self, stmt: Statement) -> Result<String, SessionError> {
        // work on a copy so a failing statement leaves the database untouched
        let mut db = self.db.clone();
        let msg = match stmt {
            Statement::CreateTable { name, columns } => {
                if name == ANSWER {
                    return Err(SessionError::ReservedName);
                }
                db.create_table(Schema::new(name, columns.into_iter().map(|c| (c.name, c.ty)).collect()))?;
                String::new()
            }
            Statement::Insert { table, rows } => {
                if !db.catalog().contains(&table) {
                    return Err(DbError::UnknownRelation(table).into());
                }
                let n = rows.len();
                for r in rows {
                    db.insert(&table, r)?;
                }
                format!("Info: {n} {} inserted.", if n == 1 { "tuple" } else { "tuples" })
            }
            Statement::DropTable(name) => {
                db.drop_table(&name)?;
                String::new()
            }
            Statement::Query(_) => unreachable!("handled by the caller"),
        };
        self.db = db;
        Ok(msg)
    }

    /// Compiles a SQL query without evaluating it.
    pub fn compile(&self, sql: &str) -> Result<Compiled, SessionError> {
        let stmt = parse_sql(sql.trim().trim_end_matches(';'))?;
        self.compile_statement(&stmt)
    }

    fn compile_statement(&self, stmt: &Statement) -> Result<Compiled, SessionError> {
        let Statement::Query(q) = stmt else {
            return Err(SessionError::WrongStatement { expected: "a query" });
        };
        let resolved = resolve_query(q, self.db.catalog())?;
        if relation_names(&resolved).contains(ANSWER) {
            return Err(SessionError::ReservedName);
        }
        let mut reserved = self.db.predicates();
        reserved.insert(ANSWER.to_string());
        let t = translate(&resolved, ANSWER, &reserved, Options::default());
        for r in &t.rules {
            check_safety(r).map_err(EngineError::from)?;
        }
        Ok(Compiled {
            schema: t.schema,
            rules: t.rules,
        })
    }

    /// Compiles and evaluates a SQL query. Never changes the database.
    pub fn query(&self, sql: &str) -> Result<Answer, SessionError> {
        let stmt = parse_sql(sql.trim().trim_end_matches(';'))?;
        self.query_statement(&stmt)
    }

    fn query_statement(&self, stmt: &Statement) -> Result<Answer, SessionError> {
        let compiled = self.compile_statement(stmt)?;
        let mut engine = self.db.engine(compiled.rules.clone())?;
        let root = engine.root();
        let mut rows = engine.meaning(root, ANSWER)?;
        rows.sort();
        Ok(Answer {
            schema: compiled.schema,
            compiled: compiled.rules,
            rows,
        })
    }

    fn datalog(&mut self, input: &str) -> Result<String, SessionError> {
        let clauses = parse_clauses(input)?;
        let mut out = Vec::new();
        let mut db = self.db.clone();
        for c in clauses {
            match c {
                Clause::Rule(r) => {
                    if r.head.predicate == ANSWER {
                        return Err(SessionError::ReservedName);
                    }
                    check_safety(&r).map_err(EngineError::from)?;
                    db.assert_rule(r)?;
                }
                Clause::Type(decl) => {
                    let mut columns = Vec::new();
                    for (name, ty) in decl.columns {
                        let t = SqlType::parse(&ty)
                            .ok_or_else(|| SessionError::Usage(format!("unknown type `{ty}`")))?;
                        columns.push((name, t));
                    }
                    db.declare_type(Schema::new(decl.predicate, columns))?;
                }
                Clause::Query(goals) => out.push(Self::solve_goals(&db, &goals)?),
            }
        }
        // reject programs the engine cannot evaluate before committing them
        db.engine(Vec::new())?;
        self.db = db;
        Ok(out.join("\n"))
    }

    /// Answers a Datalog query against the current database.
    pub fn datalog_query(&self, goals: &[Goal]) -> Result<Vec<String>, SessionError> {
        let (_, rendered) = Self::solutions(&self.db, goals)?;
        Ok(rendered)
    }

    fn solutions(db: &Database, goals: &[Goal]) -> Result<(usize, Vec<String>), SessionError> {
        let mut vars = BTreeSet::new();
        for g in goals {
            g.outer_vars(&mut vars);
        }
        vars.retain(|v| !v.is_underscored());
        // a rule over the goals lets the safety check cover the query
        let probe = Rule::new(
            RuleId::new(Origin::User, u32::MAX),
            Atom::new("?", vars.iter().cloned().map(Term::Var).collect()),
            goals.to_vec(),
        );
        check_safety(&probe).map_err(EngineError::from)?;
        let mut engine = db.engine(Vec::new())?;
        let root = engine.root();
        let mut rendered: Vec<String> = engine
            .solve(root, goals)?
            .into_iter()
            .map(|b| {
                let theta: Substitution = b.into_iter().map(|(v, x)| (v, Term::Const(x))).collect();
                let shown: Vec<String> = goals.iter().map(|g| g.substitute(&theta).to_string()).collect();
                match shown.as_slice() {
                    [one] => one.clone(),
                    _ => format!("({})", shown.join(", ")),
                }
            })
            .collect();
        rendered.sort();
        Ok((rendered.len(), rendered))
    }

    fn solve_goals(db: &Database, goals: &[Goal]) -> Result<String, SessionError> {
        let (n, rendered) = Self::solutions(db, goals)?;
        let set = if rendered.is_empty() {
            "{}".to_string()
        } else {
            format!("{{ {} }}", rendered.join(", "))
        };
        Ok(format!("{set}\n{}", tuples_info(n)))
    }

    /// Asserts Datalog clauses and answers queries among them, as a unit.
    pub fn datalog_program(&mut self, text: &str) -> Result<String, SessionError> {
        self.history.push(text.trim().to_string());
        self.datalog(text)
    }
}

const HELP: &str = "\
Statements:
  SQL queries (SELECT, WITH, ASSUME, UNION ALL), CREATE TABLE, INSERT, DROP TABLE
  Datalog facts and rules, `:- type(p(a:string))`, queries `?- goals.`
Commands:
  /show_compilations on|off   display compiled Datalog for SQL queries
  /dbschema                   list relation schemas
  /listing                    list stored facts and rules
  /save <file>  /load <file>  persist or restore the database
  /help
";

/// Groups input lines into statements. Commands take one line; other
/// statements end at a line ending in `;` or `.`, or at a blank line.
#[derive(Debug, Default)]
pub struct StatementReader {
    buf: Vec<String>,
}

impl StatementReader {
    pub fn new() -> Self {
        Self::default()
    }

    /// True while a statement is partially read.
    pub fn pending(&self) -> bool {
        !self.buf.is_empty()
    }

    pub fn push(&mut self, line: &str) -> Option<String> {
        let t = line.trim();
        if self.buf.is_empty() {
            if t.is_empty() || t.starts_with("--") || t.starts_with('%') {
                return None;
            }
            if t.starts_with('/') {
                return Some(t.to_string());
            }
        } else if t.is_empty() {
            return self.finish();
        }
        self.buf.push(line.trim_end().to_string());
        if t.ends_with(';') || t.ends_with('.') {
            return self.finish();
        }
        None
    }

    pub fn finish(&mut self) -> Option<String> {
        if self.buf.is_empty() {
            return None;
        }
        Some(std::mem::take(&mut self.buf).join("\n"))
    }
}

/// Splits script text into statements.
pub fn split_script(text: &str) -> Vec<String> {
    let mut reader = StatementReader::new();
    let mut out: Vec<String> = text.lines().filter_map(|l| reader.push(l)).collect();
    out.extend(reader.finish());
    out
}

pub const PROMPT: &str = "hypoteq> ";

/// Runs a script, echoing each statement after the prompt. Stops at the
/// first error unless `keep_going`. Returns the number of failed
/// statements.
pub fn run_script(session: &mut Session, text: &str, keep_going: bool, out: &mut dyn Write) -> io::Result<usize> {
    let mut errors = 0;
    for stmt in split_script(text) {
        writeln!(out, "{PROMPT}{stmt}")?;
        match session.eval(&stmt) {
            Ok(s) if s.is_empty() => {}
            Ok(s) => writeln!(out, "{s}")?,
            Err(e) => {
                writeln!(out, "Error: {e}")?;
                errors += 1;
                if !keep_going {
                    break;
                }
            }
        }
    }
    Ok(errors)
}

pub fn run_script_file(
    session: &mut Session,
    path: impl AsRef<Path>,
    keep_going: bool,
    out: &mut dyn Write,
) -> io::Result<usize> {
    let text = std::fs::read_to_string(path)?;
    run_script(session, &text, keep_going, out)
}

/// Relation schemas keyed by name, for catalog listings.
pub fn catalog_listing(db: &Database) -> BTreeMap<String, Schema> {
    db.catalog().iter().map(|s| (s.relation.clone(), s.clone())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const DEMO_DB: &str = "\
create table student(name string);
create table take(name varchar(30), title varchar(30));
insert into student values ('adam'), ('bob'), ('pete'), ('scott');
insert into take values ('adam','db'), ('pete','db'), ('pete','lp'), ('scott','lp');
";

    fn demo() -> Session {
        let mut s = Session::new();
        let mut sink = Vec::new();
        assert_eq!(run_script(&mut s, DEMO_DB, false, &mut sink).unwrap(), 0);
        s
    }

    #[test]
    fn not_in_transcript() {
        let mut s = demo();
        s.eval("/show_compilations on").unwrap();
        assert_eq!(
            s.eval("select * from student where name not in \n(select name from take)").unwrap(),
            "Info: SQL statement compiled to:\n  answer(A) :- student(A), not take(A,_B).\n\
             answer(student.name:string) ->\n{ answer(bob) }\nInfo: 1 tuple computed."
        );
    }

    #[test]
    fn compilations_hidden_by_default() {
        let mut s = demo();
        assert_eq!(
            s.eval("select * from take where title = 'lp'").unwrap(),
            "answer(take.name:varchar(30),take.title:varchar(30)) ->\n\
             { answer(pete,lp), answer(scott,lp) }\nInfo: 2 tuples computed."
        );
    }

    #[test]
    fn empty_table_gives_zero_tuples() {
        let mut s = Session::new();
        s.eval("create table t(a int)").unwrap();
        assert_eq!(s.eval("select * from t").unwrap(), "answer(t.a:int) ->\n{}\nInfo: 0 tuples computed.");
    }

    #[test]
    fn failed_statements_leave_the_database_alone() {
        let mut s = demo();
        let before = s.database().clone();
        assert!(s.eval("insert into student values ('zoe'), (3)").is_err());
        assert!(s.eval("p(X) :- not p(X), student(X).").is_err());
        assert!(s.eval("q(X) :- not student(X).").is_err());
        assert!(s.eval("select * from nosuch").is_err());
        assert_eq!(s.database(), &before);
    }

    #[test]
    fn answer_is_reserved() {
        let mut s = demo();
        assert!(matches!(s.eval("answer(X) :- student(X)."), Err(SessionError::ReservedName)));
        assert!(matches!(
            s.eval("with answer as (select * from student) select * from answer"),
            Err(SessionError::ReservedName)
        ));
    }

    #[test]
    fn datalog_rules_and_queries() {
        let mut s = demo();
        s.eval("both(X) :- take(X,db), take(X,lp).").unwrap();
        assert_eq!(s.eval("?- both(X).").unwrap(), "{ both(pete) }\nInfo: 1 tuple computed.");
        assert_eq!(
            s.eval("?- student(X), not take(X,_Y).").unwrap(),
            "{ (student(bob), not take(bob,_Y)) }\nInfo: 1 tuple computed."
        );
        assert!(matches!(s.eval("?- not student(X)."), Err(SessionError::Engine(EngineError::UnsafeRule(_)))));
    }

    #[test]
    fn sql_sees_typed_datalog_predicates() {
        let mut s = demo();
        s.eval(":- type(both(name:string)).").unwrap();
        s.eval("both(X) :- take(X,db), take(X,lp).").unwrap();
        assert_eq!(
            s.eval("select * from both").unwrap(),
            "answer(both.name:string) ->\n{ answer(pete) }\nInfo: 1 tuple computed."
        );
    }

    #[test]
    fn commands() {
        let mut s = Session::new();
        assert_eq!(s.eval("/show_compilations on").unwrap(), "Info: show_compilations is on.");
        assert!(s.show_compilations());
        assert!(matches!(s.eval("/open_db postgresql"), Err(SessionError::UnsupportedFeature(_))));
        assert!(matches!(s.eval("/frobnicate"), Err(SessionError::UnknownCommand(_))));
        assert!(matches!(s.eval("/show_compilations maybe"), Err(SessionError::Usage(_))));
    }

    #[test]
    fn save_and_load_commands() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("demo.hdb");
        let mut s = demo();
        s.eval(&format!("/save {}", path.display())).unwrap();
        let mut t = Session::new();
        t.eval(&format!("/load {}", path.display())).unwrap();
        assert_eq!(t.database(), s.database());
    }

    #[test]
    fn statement_splitting() {
        let script = "-- comment\n/show_compilations on\nselect *\nfrom t;\n\np(1).\nselect 1\n\nq(X) :-\n  p(X).\n";
        assert_eq!(
            split_script(script),
            vec!["/show_compilations on", "select *\nfrom t;", "p(1).", "select 1", "q(X) :-\n  p(X)."]
        );
        assert!(split_script("").is_empty());
    }

    #[test]
    fn scripts_stop_at_first_error_unless_asked() {
        let script = "select * from nosuch;\ncreate table t(a int);\n";
        let mut s = Session::new();
        let mut out = Vec::new();
        assert_eq!(run_script(&mut s, script, false, &mut out).unwrap(), 1);
        assert!(s.database().catalog().get("t").is_none());
        let mut s = Session::new();
        assert_eq!(run_script(&mut s, script, true, &mut Vec::new()).unwrap(), 1);
        assert!(s.database().catalog().get("t").is_some());
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("Error: unknown relation `nosuch`"), "{text}");
    }

    #[test]
    fn answers_keep_duplicates() {
        let mut s = demo();
        let a = s.query("select name from take").unwrap();
        assert_eq!(a.rows.len(), 4);
        assert_eq!(a.grouped()[1], (vec![crate::value::Value::str("pete")], 2));
        assert_eq!(
            s.eval("select 1 union all select 1").unwrap(),
            "answer(expr1:int) ->\n{ answer(1), answer(1) }\nInfo: 2 tuples computed."
        );
    }
}
