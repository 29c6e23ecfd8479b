use crate::datalog::CompareOp;
use crate::value::Value;

use super::schema::SqlType;

#[derive(Debug, Clone, PartialEq)]
pub enum Statement {
    Query(Query),
    CreateTable { name: String, columns: Vec<ColumnDef> },
    Insert { table: String, rows: Vec<Vec<Value>> },
    DropTable(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnDef {
    pub name: String,
    pub ty: SqlType,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiteralItem {
    pub value: Value,
    pub alias: Option<String>,
}

impl From<Value> for LiteralItem {
    fn from(value: Value) -> Self {
        LiteralItem { value, alias: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Query {
    Select(Select),
    /// `SELECT 'adam', 'lp' AS title`: a single row, no FROM clause.
    SelectNoFrom(Vec<LiteralItem>),
    UnionAll(Box<Query>, Box<Query>),
    With { defs: Vec<ViewDef>, body: Box<Query> },
    Assume { assumptions: Vec<Assumption>, body: Box<Query> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Select {
    pub items: Vec<SelectItem>,
    pub from: Vec<FromItem>,
    pub filter: Option<Condition>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SelectItem {
    Wildcard,
    QualifiedWildcard(String),
    Expr { operand: Operand, alias: Option<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Column(ColumnRef),
    Literal(Value),
}

impl Operand {
    pub fn column(qualifier: Option<&str>, name: &str) -> Self {
        Operand::Column(ColumnRef {
            qualifier: qualifier.map(str::to_string),
            name: name.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnRef {
    pub qualifier: Option<String>,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FromItem {
    Table { name: String, alias: Option<String> },
    Subquery { query: Box<Query>, alias: String },
}

impl FromItem {
    pub fn alias(&self) -> &str {
        match self {
            FromItem::Table { name, alias } => alias.as_deref().unwrap_or(name),
            FromItem::Subquery { alias, .. } => alias,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    Compare { lhs: Operand, op: CompareOp, rhs: Operand },
    And(Box<Condition>, Box<Condition>),
    Or(Box<Condition>, Box<Condition>),
    Not(Box<Condition>),
    In { operands: Vec<Operand>, query: Box<Query>, negated: bool },
}

/// `name [(cols)] AS (query)` inside WITH.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewDef {
    pub name: String,
    pub columns: Option<Vec<String>>,
    pub query: Query,
}

/// `query [NOT] IN target [(cols)]` inside ASSUME.
#[derive(Debug, Clone, PartialEq)]
pub struct Assumption {
    pub query: Query,
    pub negated: bool,
    pub target: String,
    pub columns: Option<Vec<String>>,
}
