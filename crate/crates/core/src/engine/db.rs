use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::{Engine, EngineError};
use crate::datalog::{Goal, Origin, Rule, RuleId};
use crate::sql::{Catalog, Schema};
use crate::value::{Tuple, Value, ValueKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DbError {
    #[error("relation `{0}` already exists")]
    RelationExists(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("arity mismatch for `{relation}`: expected {expected}, found {found}")]
    ArityMismatch { relation: String, expected: usize, found: usize },
    #[error("type mismatch for `{relation}.{column}`: expected {expected}, found {value}")]
    TypeMismatch { relation: String, column: String, expected: String, value: String },
}

/// Stored relations with their schemas, plus user Datalog rules.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Database {
    catalog: Catalog,
    facts: BTreeMap<String, Vec<Tuple>>,
    rules: Vec<Rule>,
    next_rule: u32,
}

fn renumber(rule: &mut Rule, next: &mut u32) {
    rule.id = RuleId::new(Origin::User, *next);
    *next += 1;
    for g in &mut rule.body {
        renumber_goal(g, next);
    }
}

fn renumber_goal(g: &mut Goal, next: &mut u32) {
    match g {
        Goal::Not(inner) => renumber_goal(inner, next),
        Goal::Implies {
            antecedent,
            consequent,
        } => {
            for r in antecedent {
                renumber(r, next);
            }
            renumber_goal(consequent, next);
        }
        _ => {}
    }
}

impl Database {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn facts(&self) -> &BTreeMap<String, Vec<Tuple>> {
        &self.facts
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn create_table(&mut self, schema: Schema) -> Result<(), DbError> {
        if self.catalog.contains(&schema.relation) || self.facts.contains_key(&schema.relation) {
            return Err(DbError::RelationExists(schema.relation));
        }
        self.facts.insert(schema.relation.clone(), Vec::new());
        self.catalog.insert(schema);
        Ok(())
    }

    /// Declares the schema of a predicate, replacing any previous one.
    /// Existing facts must conform.
    pub fn declare_type(&mut self, schema: Schema) -> Result<(), DbError> {
        let existing = self.facts.get(&schema.relation).cloned().unwrap_or_default();
        let mut converted = Vec::with_capacity(existing.len());
        for t in existing {
            converted.push(conform(&schema, t)?);
        }
        self.facts.insert(schema.relation.clone(), converted);
        self.catalog.insert(schema);
        Ok(())
    }

    pub fn drop_table(&mut self, name: &str) -> Result<(), DbError> {
        if self.catalog.remove(name).is_none() {
            return Err(DbError::UnknownRelation(name.to_string()));
        }
        self.facts.remove(name);
        Ok(())
    }

    /// Inserts a tuple, converting integers stored in float columns.
    pub fn insert(&mut self, relation: &str, tuple: Tuple) -> Result<(), DbError> {
        let tuple = match self.catalog.get(relation) {
            Some(schema) => conform(schema, tuple)?,
            None => {
                if let Some(existing) = self.facts.get(relation).and_then(|f| f.first()) {
                    if existing.len() != tuple.len() {
                        return Err(DbError::ArityMismatch {
                            relation: relation.to_string(),
                            expected: existing.len(),
                            found: tuple.len(),
                        });
                    }
                }
                tuple
            }
        };
        self.facts.entry(relation.to_string()).or_default().push(tuple);
        Ok(())
    }

    /// Adds a user rule. Ground facts are stored as tuples.
    pub fn assert_rule(&mut self, mut rule: Rule) -> Result<(), DbError> {
        if rule.is_fact() && !rule.is_restricting() {
            if let Some(values) = rule.head.ground_values() {
                return self.insert(&rule.head.predicate.clone(), values);
            }
        }
        renumber(&mut rule, &mut self.next_rule);
        self.rules.push(rule);
        Ok(())
    }

    /// Every predicate name known to the database.
    pub fn predicates(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.catalog.names().map(str::to_string).collect();
        out.extend(self.facts.keys().cloned());
        for r in &self.rules {
            r.for_each_atom(&mut |a| {
                out.insert(a.predicate.clone());
            });
        }
        out
    }

    /// An engine over the stored facts, the user rules and `extra` rules.
    pub fn engine(&self, extra: Vec<Rule>) -> Result<Engine, EngineError> {
        let mut rules = self.rules.clone();
        rules.extend(extra);
        Engine::new(&self.facts, rules)
    }
}

fn conform(schema: &Schema, tuple: Tuple) -> Result<Tuple, DbError> {
    if schema.arity() != tuple.len() {
        return Err(DbError::ArityMismatch {
            relation: schema.relation.clone(),
            expected: schema.arity(),
            found: tuple.len(),
        });
    }
    tuple
        .into_iter()
        .zip(&schema.columns)
        .map(|(v, c)| match (c.ty.kind, v) {
            (ValueKind::Float, Value::Int(i)) => Ok(Value::float(i as f64)),
            (k, v) if k == v.kind() => Ok(v),
            (_, v) => Err(DbError::TypeMismatch {
                relation: schema.relation.clone(),
                column: c.name.clone(),
                expected: c.ty.to_string(),
                value: v.to_sql(),
            }),
        })
        .collect()
}
