//! On-disk database format: a `hypoteq-db v1` header, `CREATE TABLE`
//! statements, then Datalog facts and rules, one per line.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::datalog::{parse_clauses, Atom, Clause, Origin, Rule, RuleId, Term};
use crate::engine::{Database, DbError};
use crate::sql::{parse_sql, ColumnDef, Statement};

pub const HEADER: &str = "hypoteq-db v1";

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("unsupported database format `{0}`, expected `{HEADER}`")]
    Version(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    Db { line: usize, source: DbError },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Serializes a database. Facts keep their insertion order, so stored
/// occurrences come back in the same sequence.
pub fn save_db(db: &Database) -> String {
    let mut out = format!("{HEADER}\n");
    for schema in db.catalog().iter() {
        let stmt = Statement::CreateTable {
            name: schema.relation.clone(),
            columns: schema
                .columns
                .iter()
                .map(|c| ColumnDef {
                    name: c.name.clone(),
                    ty: c.ty.clone(),
                })
                .collect(),
        };
        writeln!(out, "{stmt};").unwrap();
    }
    for (pred, tuples) in db.facts() {
        for t in tuples {
            let atom = Atom::new(pred.clone(), t.iter().cloned().map(Term::Const).collect());
            writeln!(out, "{}", Rule::fact(RuleId::new(Origin::User, 0), atom)).unwrap();
        }
    }
    for r in db.rules() {
        writeln!(out, "{r}").unwrap();
    }
    out
}

pub fn load_db(text: &str) -> Result<Database, LoadError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == HEADER => {}
        Some((_, h)) => return Err(LoadError::Version(h.trim().to_string())),
        None => return Err(LoadError::Version(String::new())),
    }
    let mut db = Database::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| LoadError::Parse { line: line_no, message };
        let db_err = |source| LoadError::Db { line: line_no, source };
        if line.len() >= 6 && line[..6].eq_ignore_ascii_case("create") {
            let stmt = parse_sql(line.trim_end_matches(';')).map_err(|e| parse_err(e.to_string()))?;
            let Statement::CreateTable { name, columns } = stmt else {
                return Err(parse_err("expected CREATE TABLE".into()));
            };
            let schema = crate::sql::Schema::new(name, columns.into_iter().map(|c| (c.name, c.ty)).collect());
            db.create_table(schema).map_err(db_err)?;
            continue;
        }
        for clause in parse_clauses(line).map_err(|e| parse_err(e.to_string()))? {
            match clause {
                Clause::Rule(r) => db.assert_rule(r).map_err(db_err)?,
                _ => return Err(parse_err("expected a fact or rule".into())),
            }
        }
    }
    Ok(db)
}

pub fn save_db_file(db: &Database, path: impl AsRef<Path>) -> Result<(), LoadError> {
    std::fs::write(path, save_db(db))?;
    Ok(())
}

pub fn load_db_file(path: impl AsRef<Path>) -> Result<Database, LoadError> {
    load_db(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::parse_rule;
    use crate::sql::{Schema, SqlType};
    use crate::value::Value;

    fn sample() -> Database {
        let mut db = Database::new();
        db.create_table(Schema::new("student", vec![("name".into(), SqlType::string())]))
            .unwrap();
        db.create_table(Schema::new(
            "m",
            vec![("a".into(), SqlType::parse("varchar(30)").unwrap()), ("b".into(), SqlType::float())],
        ))
        .unwrap();
        for s in ["adam", "bob", "adam", "Mary Ann", "it's"] {
            db.insert("student", vec![Value::str(s)]).unwrap();
        }
        db.insert("m", vec![Value::str("x"), Value::Int(2)]).unwrap();
        db.insert("m", vec![Value::str("y"), Value::float(2.5)]).unwrap();
        db.assert_rule(parse_rule("edge(1,2).").unwrap()).unwrap();
        db.assert_rule(parse_rule("path(X,Y) :- edge(X,Y).").unwrap()).unwrap();
        db.assert_rule(parse_rule("path(X,Y) :- edge(X,Z), path(Z,Y).").unwrap()).unwrap();
        db.assert_rule(parse_rule("q(X) :- p(1) /\\ (r(Y) :- p(Y)) => r(X).").unwrap())
            .unwrap();
        db.assert_rule(parse_rule("-path(1,1).").unwrap()).unwrap();
        db
    }

    #[test]
    fn save_then_load_is_identity() {
        let db = sample();
        let text = save_db(&db);
        assert!(text.starts_with("hypoteq-db v1\n"));
        assert_eq!(load_db(&text).unwrap(), db);
    }

    #[test]
    fn empty_database_round_trips() {
        let db = Database::new();
        assert_eq!(load_db(&save_db(&db)).unwrap(), db);
    }

    #[test]
    fn unknown_version_is_rejected() {
        assert!(matches!(load_db("hypoteq-db v9\n"), Err(LoadError::Version(v)) if v == "hypoteq-db v9"));
        assert!(matches!(load_db(""), Err(LoadError::Version(_))));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = load_db("hypoteq-db v1\nstudent(adam).\nstudent(\n").unwrap_err();
        assert!(matches!(err, LoadError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("db.hdb");
        let db = sample();
        save_db_file(&db, &path).unwrap();
        assert_eq!(load_db_file(&path).unwrap(), db);
        assert!(matches!(load_db_file(dir.path().join("missing")), Err(LoadError::Io(_))));
    }
}
