use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::value::{Value, ValueKind};

/// A column type. `spelling` keeps the declared name (`string`,
/// `varchar(30)`, `integer`, ...) for display; only `kind` matters for
/// type checking.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SqlType {
    pub kind: ValueKind,
    pub spelling: String,
}

impl SqlType {
    pub fn int() -> Self {
        SqlType {
            kind: ValueKind::Int,
            spelling: "int".into(),
        }
    }

    pub fn float() -> Self {
        SqlType {
            kind: ValueKind::Float,
            spelling: "float".into(),
        }
    }

    pub fn string() -> Self {
        SqlType {
            kind: ValueKind::Str,
            spelling: "string".into(),
        }
    }

    pub fn of_value(v: &Value) -> Self {
        match v.kind() {
            ValueKind::Int => SqlType::int(),
            ValueKind::Float => SqlType::float(),
            ValueKind::Str => SqlType::string(),
        }
    }

    /// Maps a declared type name to a type, or `None` if unknown.
    /// `base` is the lowercased name without length, e.g. `varchar`.
    pub fn from_declared(base: &str, length: Option<u32>) -> Option<Self> {
        let kind = match base {
            "int" | "integer" | "smallint" | "bigint" => ValueKind::Int,
            "float" | "real" | "double" | "numeric" | "decimal" => ValueKind::Float,
            "string" | "varchar" | "char" | "text" | "character" | "varchar2" => ValueKind::Str,
            _ => return None,
        };
        let spelling = match length {
            Some(n) => format!("{base}({n})"),
            None => base.to_string(),
        };
        Some(SqlType { kind, spelling })
    }

    /// Parses a spelling such as `varchar(30)`.
    pub fn parse(spelling: &str) -> Option<Self> {
        let s = spelling.trim().to_ascii_lowercase();
        match s.split_once('(') {
            Some((base, rest)) => {
                let n = rest.strip_suffix(')')?.trim().parse().ok()?;
                SqlType::from_declared(base.trim(), Some(n))
            }
            None => SqlType::from_declared(&s, None),
        }
    }
}

impl fmt::Display for SqlType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spelling)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: SqlType,
    /// Source of the column, e.g. `student.name`.
    pub provenance: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub relation: String,
    pub columns: Vec<Column>,
}

impl Schema {
    pub fn new(relation: impl Into<String>, columns: Vec<(String, SqlType)>) -> Self {
        Schema {
            relation: relation.into(),
            columns: columns
                .into_iter()
                .map(|(name, ty)| Column {
                    name,
                    ty,
                    provenance: None,
                })
                .collect(),
        }
    }

    pub fn arity(&self) -> usize {
        self.columns.len()
    }

    pub fn renamed(mut self, relation: impl Into<String>) -> Self {
        self.relation = relation.into();
        self
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn kinds(&self) -> Vec<ValueKind> {
        self.columns.iter().map(|c| c.ty.kind).collect()
    }
}

/// `answer(student.name:string)`
impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.relation)?;
        for (i, c) in self.columns.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            let label = c.provenance.as_deref().unwrap_or(&c.name);
            write!(f, "{label}:{}", c.ty)?;
        }
        f.write_str(")")
    }
}

/// Schemas of the relations a query may reference.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Catalog {
    relations: BTreeMap<String, Schema>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, schema: Schema) {
        self.relations.insert(schema.relation.clone(), schema);
    }

    pub fn remove(&mut self, name: &str) -> Option<Schema> {
        self.relations.remove(name)
    }

    pub fn get(&self, name: &str) -> Option<&Schema> {
        self.relations.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.relations.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Schema> {
        self.relations.values()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.relations.keys().map(String::as_str)
    }
}

impl FromIterator<Schema> for Catalog {
    fn from_iter<I: IntoIterator<Item = Schema>>(iter: I) -> Self {
        let mut c = Catalog::new();
        for s in iter {
            c.insert(s);
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_uses_provenance() {
        let mut s = Schema::new("answer", vec![("name".into(), SqlType::string())]);
        s.columns[0].provenance = Some("student.name".into());
        assert_eq!(s.to_string(), "answer(student.name:string)");
    }

    #[test]
    fn varchar_spelling_is_preserved() {
        let t = SqlType::parse("VARCHAR(30)").unwrap();
        assert_eq!(t.kind, ValueKind::Str);
        assert_eq!(t.to_string(), "varchar(30)");
        assert!(SqlType::parse("blob").is_none());
    }
}
