//! Name resolution and type checking. Produces a tree where every column
//! reference is a (FROM item, column index) pair and every query carries its
//! output schema.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::schema::{Catalog, Column, Schema, SqlType};
use super::SqlError;
use crate::datalog::CompareOp;
use crate::value::{Value, ValueKind};

/// Relation name given to the schema of a query result before the caller
/// renames it.
pub const DEFAULT_RESULT: &str = "answer";

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedQuery {
    pub kind: RQuery,
    pub schema: Schema,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RQuery {
    Select(RSelect),
    Values(Vec<Value>),
    UnionAll(Box<ResolvedQuery>, Box<ResolvedQuery>),
    With { defs: Vec<RView>, body: Box<ResolvedQuery> },
    Assume { assumptions: Vec<RAssumption>, body: Box<ResolvedQuery> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RSelect {
    pub from: Vec<RFrom>,
    pub items: Vec<ROperand>,
    pub filter: Option<RCondition>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RFrom {
    Relation { name: String, alias: String, schema: Schema },
    Subquery { alias: String, query: Box<ResolvedQuery> },
}

impl RFrom {
    pub fn arity(&self) -> usize {
        match self {
            RFrom::Relation { schema, .. } => schema.arity(),
            RFrom::Subquery { query, .. } => query.schema.arity(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ROperand {
    Column { from: usize, index: usize, kind: ValueKind },
    Literal(Value),
}

impl ROperand {
    pub fn kind(&self) -> ValueKind {
        match self {
            ROperand::Column { kind, .. } => *kind,
            ROperand::Literal(v) => v.kind(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RCondition {
    Compare { lhs: ROperand, op: CompareOp, rhs: ROperand },
    And(Box<RCondition>, Box<RCondition>),
    Or(Box<RCondition>, Box<RCondition>),
    Not(Box<RCondition>),
    In { operands: Vec<ROperand>, query: Box<ResolvedQuery>, negated: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RView {
    pub name: String,
    pub schema: Schema,
    pub query: ResolvedQuery,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RAssumption {
    pub target: String,
    pub negated: bool,
    /// Schema of the target relation.
    pub schema: Schema,
    pub query: ResolvedQuery,
}

impl ResolvedQuery {
    /// Relation names referenced anywhere inside the query, including names
    /// bound locally by WITH or ASSUME.
    pub fn referenced_relations(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_relations(&mut out);
        out
    }

    fn collect_relations(&self, out: &mut BTreeSet<String>) {
        match &self.kind {
            RQuery::Select(s) => {
                for f in &s.from {
                    match f {
                        RFrom::Relation { name, .. } => {
                            out.insert(name.clone());
                        }
                        RFrom::Subquery { query, .. } => query.collect_relations(out),
                    }
                }
                if let Some(c) = &s.filter {
                    c.collect_relations(out);
                }
            }
            RQuery::Values(_) => {}
            RQuery::UnionAll(l, r) => {
                l.collect_relations(out);
                r.collect_relations(out);
            }
            RQuery::With { defs, body } => {
                for d in defs {
                    d.query.collect_relations(out);
                }
                body.collect_relations(out);
            }
            RQuery::Assume { assumptions, body } => {
                for a in assumptions {
                    out.insert(a.target.clone());
                    a.query.collect_relations(out);
                }
                body.collect_relations(out);
            }
        }
    }
}

impl RCondition {
    fn collect_relations(&self, out: &mut BTreeSet<String>) {
        match self {
            RCondition::Compare { .. } => {}
            RCondition::And(l, r) | RCondition::Or(l, r) => {
                l.collect_relations(out);
                r.collect_relations(out);
            }
            RCondition::Not(c) => c.collect_relations(out),
            RCondition::In { query, .. } => query.collect_relations(out),
        }
    }
}

struct Scope {
    alias: String,
    columns: Vec<Column>,
}

struct Resolver<'a> {
    catalog: &'a Catalog,
    /// Relations introduced by enclosing WITH and ASSUME clauses.
    locals: Vec<Schema>,
    /// Relations each local relation reads, transitively. Views and assumed
    /// relations are evaluated where they are used, so an assumption that
    /// reads a view also reads whatever the view reads.
    deps: Vec<(String, BTreeSet<String>)>,
    /// FROM scopes of enclosing SELECTs, used to report correlated references.
    outer: Vec<Vec<Scope>>,
}

fn unsupported(feature: impl Into<String>) -> SqlError {
    SqlError::UnsupportedSemantics(feature.into())
}

fn check_kinds(context: &str, left: &[ValueKind], right: &[ValueKind], relation: &str) -> Result<(), SqlError> {
    if left.len() != right.len() {
        return Err(SqlError::ArityMismatch {
            relation: relation.to_string(),
            expected: left.len(),
            found: right.len(),
        });
    }
    for (l, r) in left.iter().zip(right) {
        if l != r {
            return Err(SqlError::TypeMismatch {
                context: context.to_string(),
                left: *l,
                right: *r,
            });
        }
    }
    Ok(())
}

impl<'a> Resolver<'a> {
    fn closure(&self, names: BTreeSet<String>) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<String> = names.into_iter().collect();
        while let Some(n) = stack.pop() {
            if !out.insert(n.clone()) {
                continue;
            }
            if let Some((_, reads)) = self.deps.iter().rev().find(|(name, _)| *name == n) {
                stack.extend(reads.iter().cloned());
            }
        }
        out
    }

    fn lookup(&self, name: &str) -> Option<&Schema> {
        self.locals
            .iter()
            .rev()
            .find(|s| s.relation == name)
            .or_else(|| self.catalog.get(name))
    }

    fn query(&mut self, q: &Query) -> Result<ResolvedQuery, SqlError> {
        match q {
            Query::Select(s) => self.select(s),
            Query::SelectNoFrom(values) => {
                let columns = values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| Column {
                        name: v.alias.clone().unwrap_or_else(|| format!("expr{}", i + 1)),
                        ty: SqlType::of_value(&v.value),
                        provenance: None,
                    })
                    .collect();
                Ok(ResolvedQuery {
                    kind: RQuery::Values(values.iter().map(|v| v.value.clone()).collect()),
                    schema: Schema {
                        relation: DEFAULT_RESULT.into(),
                        columns,
                    },
                })
            }
            Query::UnionAll(l, r) => {
                let l = self.query(l)?;
                let r = self.query(r)?;
                check_kinds("UNION ALL", &l.schema.kinds(), &r.schema.kinds(), "UNION ALL")?;
                let schema = l.schema.clone();
                Ok(ResolvedQuery {
                    kind: RQuery::UnionAll(Box::new(l), Box::new(r)),
                    schema,
                })
            }
            Query::With { defs, body } => {
                let (depth, dep_depth) = (self.locals.len(), self.deps.len());
                let result = self.with(defs, body);
                self.locals.truncate(depth);
                self.deps.truncate(dep_depth);
                result
            }
            Query::Assume { assumptions, body } => {
                let (depth, dep_depth) = (self.locals.len(), self.deps.len());
                let result = self.assume(assumptions, body);
                self.locals.truncate(depth);
                self.deps.truncate(dep_depth);
                result
            }
        }
    }

    fn named_schema(&self, name: &str, columns: &Option<Vec<String>>, from: &Schema) -> Result<Schema, SqlError> {
        let mut schema = Schema {
            relation: name.to_string(),
            columns: from
                .columns
                .iter()
                .map(|c| Column {
                    name: c.name.clone(),
                    ty: c.ty.clone(),
                    provenance: None,
                })
                .collect(),
        };
        if let Some(cols) = columns {
            if cols.len() != schema.arity() {
                return Err(SqlError::ArityMismatch {
                    relation: name.to_string(),
                    expected: cols.len(),
                    found: schema.arity(),
                });
            }
            for (c, n) in schema.columns.iter_mut().zip(cols) {
                c.name = n.clone();
            }
        }
        Ok(schema)
    }

    fn with(&mut self, defs: &[ViewDef], body: &Query) -> Result<ResolvedQuery, SqlError> {
        let mut rdefs = Vec::new();
        for d in defs {
            if self.lookup(&d.name).is_some() {
                return Err(SqlError::DuplicateRelation(d.name.clone()));
            }
            let query = self.query(&d.query)?;
            let schema = self.named_schema(&d.name, &d.columns, &query.schema)?;
            self.locals.push(schema.clone());
            let reads = self.closure(query.referenced_relations());
            self.deps.push((d.name.clone(), reads));
            rdefs.push(RView {
                name: d.name.clone(),
                schema,
                query,
            });
        }
        let body = self.query(body)?;
        let schema = body.schema.clone();
        Ok(ResolvedQuery {
            kind: RQuery::With {
                defs: rdefs,
                body: Box::new(body),
            },
            schema,
        })
    }

    fn assume(&mut self, assumptions: &[Assumption], body: &Query) -> Result<ResolvedQuery, SqlError> {
        let mut resolved = Vec::new();
        for a in assumptions {
            let query = self.query(&a.query)?;
            let schema = match self.lookup(&a.target) {
                Some(existing) => {
                    let existing = existing.clone();
                    if let Some(cols) = &a.columns {
                        if cols.len() != existing.arity() {
                            return Err(SqlError::ArityMismatch {
                                relation: a.target.clone(),
                                expected: existing.arity(),
                                found: cols.len(),
                            });
                        }
                    }
                    check_kinds(
                        &format!("assumption into {}", a.target),
                        &existing.kinds(),
                        &query.schema.kinds(),
                        &a.target,
                    )?;
                    existing
                }
                None => {
                    let schema = self.named_schema(&a.target, &a.columns, &query.schema)?;
                    self.locals.push(schema.clone());
                    schema
                }
            };
            resolved.push(RAssumption {
                target: a.target.clone(),
                negated: a.negated,
                schema,
                query,
            });
        }
        let reads: Vec<(String, BTreeSet<String>)> = resolved
            .iter()
            .map(|a| (a.target.clone(), self.closure(a.query.referenced_relations())))
            .collect();
        check_assumption_cycles(&reads)?;
        let targets: BTreeSet<&String> = resolved.iter().map(|a| &a.target).collect();
        for t in targets {
            let mut all = self.closure(BTreeSet::from([t.clone()]));
            all.remove(t);
            for (target, r) in &reads {
                if target == t {
                    all.extend(r.iter().cloned());
                }
            }
            self.deps.push((t.clone(), all));
        }
        let body = self.query(body)?;
        let schema = body.schema.clone();
        Ok(ResolvedQuery {
            kind: RQuery::Assume {
                assumptions: resolved,
                body: Box::new(body),
            },
            schema,
        })
    }

    fn select(&mut self, s: &Select) -> Result<ResolvedQuery, SqlError> {
        let mut from = Vec::new();
        let mut scopes: Vec<Scope> = Vec::new();
        for item in &s.from {
            let alias = item.alias().to_string();
            if scopes.iter().any(|sc| sc.alias == alias) {
                return Err(SqlError::DuplicateAlias(alias));
            }
            match item {
                FromItem::Table { name, .. } => {
                    let schema = self
                        .lookup(name)
                        .cloned()
                        .ok_or_else(|| SqlError::UnknownRelation(name.clone()))?;
                    let columns = schema
                        .columns
                        .iter()
                        .map(|c| Column {
                            name: c.name.clone(),
                            ty: c.ty.clone(),
                            provenance: Some(format!("{name}.{}", c.name)),
                        })
                        .collect();
                    scopes.push(Scope {
                        alias: alias.clone(),
                        columns,
                    });
                    from.push(RFrom::Relation {
                        name: name.clone(),
                        alias,
                        schema,
                    });
                }
                FromItem::Subquery { query, .. } => {
                    let query = self.query(query)?;
                    let columns = query
                        .schema
                        .columns
                        .iter()
                        .map(|c| Column {
                            name: c.name.clone(),
                            ty: c.ty.clone(),
                            provenance: Some(format!("{alias}.{}", c.name)),
                        })
                        .collect();
                    scopes.push(Scope {
                        alias: alias.clone(),
                        columns,
                    });
                    from.push(RFrom::Subquery {
                        alias,
                        query: Box::new(query),
                    });
                }
            }
        }

        let mut items = Vec::new();
        let mut columns = Vec::new();
        for item in &s.items {
            match item {
                SelectItem::Wildcard => {
                    for (fi, sc) in scopes.iter().enumerate() {
                        for (ci, c) in sc.columns.iter().enumerate() {
                            items.push(ROperand::Column {
                                from: fi,
                                index: ci,
                                kind: c.ty.kind,
                            });
                            columns.push(c.clone());
                        }
                    }
                }
                SelectItem::QualifiedWildcard(q) => {
                    let fi = scopes
                        .iter()
                        .position(|sc| &sc.alias == q)
                        .ok_or_else(|| SqlError::UnknownRelation(q.clone()))?;
                    for (ci, c) in scopes[fi].columns.iter().enumerate() {
                        items.push(ROperand::Column {
                            from: fi,
                            index: ci,
                            kind: c.ty.kind,
                        });
                        columns.push(c.clone());
                    }
                }
                SelectItem::Expr { operand, alias } => {
                    let pos = columns.len() + 1;
                    let op = self.operand(operand, &scopes)?;
                    let mut column = match &op {
                        ROperand::Column { from, index, .. } => scopes[*from].columns[*index].clone(),
                        ROperand::Literal(v) => Column {
                            name: format!("expr{pos}"),
                            ty: SqlType::of_value(v),
                            provenance: None,
                        },
                    };
                    if let Some(a) = alias {
                        column.name = a.clone();
                        column.provenance = None;
                    }
                    items.push(op);
                    columns.push(column);
                }
            }
        }

        let filter = match &s.filter {
            Some(c) => Some(self.condition(c, &scopes)?),
            None => None,
        };
        if let Some(f) = &filter {
            refine_types(f, &scopes, &items, &mut columns);
        }

        Ok(ResolvedQuery {
            kind: RQuery::Select(RSelect { from, items, filter }),
            schema: Schema {
                relation: DEFAULT_RESULT.into(),
                columns,
            },
        })
    }

    fn operand(&self, op: &Operand, scopes: &[Scope]) -> Result<ROperand, SqlError> {
        match op {
            Operand::Literal(v) => Ok(ROperand::Literal(v.clone())),
            Operand::Column(c) => match find_column(scopes, c)? {
                Some((from, index, kind)) => Ok(ROperand::Column { from, index, kind }),
                None => {
                    for outer in self.outer.iter().rev() {
                        if let Ok(Some(_)) = find_column(outer, c) {
                            return Err(unsupported(format!("correlated reference to `{c}`")));
                        }
                    }
                    match &c.qualifier {
                        Some(q) if !scopes.iter().any(|s| &s.alias == q) => {
                            Err(SqlError::UnknownRelation(q.clone()))
                        }
                        _ => Err(SqlError::UnknownColumn(c.to_string())),
                    }
                }
            },
        }
    }

    fn condition(&mut self, c: &Condition, scopes: &[Scope]) -> Result<RCondition, SqlError> {
        match c {
            Condition::Compare { lhs, op, rhs } => {
                let lhs = self.operand(lhs, scopes)?;
                let rhs = self.operand(rhs, scopes)?;
                if !lhs.kind().comparable_with(rhs.kind()) {
                    return Err(SqlError::TypeMismatch {
                        context: "comparison".into(),
                        left: lhs.kind(),
                        right: rhs.kind(),
                    });
                }
                Ok(RCondition::Compare { lhs, op: *op, rhs })
            }
            Condition::And(l, r) => Ok(RCondition::And(
                Box::new(self.condition(l, scopes)?),
                Box::new(self.condition(r, scopes)?),
            )),
            Condition::Or(l, r) => Ok(RCondition::Or(
                Box::new(self.condition(l, scopes)?),
                Box::new(self.condition(r, scopes)?),
            )),
            Condition::Not(inner) => Ok(RCondition::Not(Box::new(self.condition(inner, scopes)?))),
            Condition::In { operands, query, negated } => {
                let operands = operands
                    .iter()
                    .map(|o| self.operand(o, scopes))
                    .collect::<Result<Vec<_>, _>>()?;
                // enclosing scopes are kept only to report correlated references
                self.outer.push(Scope::copy_all(scopes));
                let query = self.query(query);
                self.outer.pop();
                let query = query?;
                let kinds: Vec<ValueKind> = operands.iter().map(ROperand::kind).collect();
                check_kinds("IN", &kinds, &query.schema.kinds(), "IN subquery")?;
                Ok(RCondition::In {
                    operands,
                    query: Box::new(query),
                    negated: *negated,
                })
            }
        }
    }
}

impl Scope {
    fn copy_all(scopes: &[Scope]) -> Vec<Scope> {
        scopes
            .iter()
            .map(|s| Scope {
                alias: s.alias.clone(),
                columns: s.columns.clone(),
            })
            .collect()
    }
}

fn find_column(scopes: &[Scope], c: &ColumnRef) -> Result<Option<(usize, usize, ValueKind)>, SqlError> {
    let mut found = None;
    for (fi, sc) in scopes.iter().enumerate() {
        if let Some(q) = &c.qualifier {
            if &sc.alias != q {
                continue;
            }
        }
        for (ci, col) in sc.columns.iter().enumerate() {
            if col.name == c.name {
                if found.is_some() {
                    return Err(SqlError::AmbiguousColumn(c.to_string()));
                }
                found = Some((fi, ci, col.ty.kind));
            }
        }
    }
    Ok(found)
}

/// Rejects an ASSUME whose assumption queries depend on their own targets,
/// directly or through other targets of the same clause.
fn check_assumption_cycles(reads: &[(String, BTreeSet<String>)]) -> Result<(), SqlError> {
    let targets: BTreeSet<&str> = reads.iter().map(|(t, _)| t.as_str()).collect();
    let mut deps: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    for (target, refs) in reads {
        deps.entry(target.as_str())
            .or_default()
            .extend(refs.iter().filter(|r| targets.contains(r.as_str())).cloned());
    }
    fn visit<'a>(
        node: &'a str,
        deps: &'a BTreeMap<&'a str, BTreeSet<String>>,
        stack: &mut Vec<&'a str>,
        done: &mut BTreeSet<&'a str>,
    ) -> Result<(), SqlError> {
        if done.contains(node) {
            return Ok(());
        }
        if stack.contains(&node) {
            return Err(unsupported(format!(
                "assumption into `{node}` depends on its own target"
            )));
        }
        stack.push(node);
        if let Some(ds) = deps.get(node) {
            for d in ds {
                visit(d.as_str(), deps, stack, done)?;
            }
        }
        stack.pop();
        done.insert(node);
        Ok(())
    }
    let mut done = BTreeSet::new();
    for t in &targets {
        visit(t, &deps, &mut Vec::new(), &mut done)?;
    }
    Ok(())
}

/// Resolves a query against a catalog.
pub fn resolve_query(q: &Query, catalog: &Catalog) -> Result<ResolvedQuery, SqlError> {
    Resolver {
        catalog,
        locals: Vec::new(),
        deps: Vec::new(),
        outer: Vec::new(),
    }
    .query(q)
}

/// Columns equated in the top-level conjunction share a type; a length
/// qualified spelling such as `varchar(30)` is preferred over a bare one.
/// This only affects displayed schemas.
fn refine_types(filter: &RCondition, scopes: &[Scope], items: &[ROperand], columns: &mut [Column]) {
    type Col = (usize, usize);
    fn spine(c: &RCondition, out: &mut Vec<(Col, Col)>) {
        match c {
            RCondition::And(l, r) => {
                spine(l, out);
                spine(r, out);
            }
            RCondition::Compare {
                lhs: ROperand::Column { from: f1, index: i1, .. },
                op: CompareOp::Eq,
                rhs: ROperand::Column { from: f2, index: i2, .. },
            } => out.push(((*f1, *i1), (*f2, *i2))),
            _ => {}
        }
    }
    let mut pairs = Vec::new();
    spine(filter, &mut pairs);
    if pairs.is_empty() {
        return;
    }
    let mut types: BTreeMap<(usize, usize), SqlType> = BTreeMap::new();
    let ty = |types: &BTreeMap<(usize, usize), SqlType>, k: (usize, usize)| {
        types.get(&k).cloned().unwrap_or_else(|| scopes[k.0].columns[k.1].ty.clone())
    };
    let mut changed = true;
    while changed {
        changed = false;
        for &(a, b) in &pairs {
            let (ta, tb) = (ty(&types, a), ty(&types, b));
            if ta.kind != tb.kind || ta == tb {
                continue;
            }
            let (from, to) = match (ta.spelling.contains('('), tb.spelling.contains('(')) {
                (true, false) => (ta, b),
                (false, true) => (tb, a),
                _ => continue,
            };
            types.insert(to, from);
            changed = true;
        }
    }
    for (item, column) in items.iter().zip(columns.iter_mut()) {
        if let ROperand::Column { from, index, .. } = item {
            if let Some(t) = types.get(&(*from, *index)) {
                column.ty = t.clone();
            }
        }
    }
}

/// Output schema of a query.
pub fn infer_schema(q: &Query, catalog: &Catalog) -> Result<Schema, SqlError> {
    resolve_query(q, catalog).map(|r| r.schema)
}


#[cfg(test)]
mod dependency_tests {
    use super::super::parse_query;
    use super::*;

    #[test]
    fn cycles_through_views_and_outer_targets_rejected() {
        let catalog: Catalog = [Schema::new("n", vec![("a".into(), SqlType::int())])].into_iter().collect();
        let r = |t: &str| resolve_query(&parse_query(t).unwrap(), &catalog);
        assert!(r("with v as (select * from n) assume (select * from v) in n select * from n").is_err());
        assert!(r("assume (select * from n) in t(a) select * from (assume (select * from t) in n select * from n) x").is_err());
        assert!(r("with v as (select * from n) assume (select * from v) in t(a) select * from t").is_ok());
    }
}
