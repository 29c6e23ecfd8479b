//! Reference evaluator working directly on resolved SQL with bag semantics.
//! It shares no code with the translator or the Datalog engine and serves
//! as an oracle for them.
//!
//! WITH views and ASSUME targets are evaluated where they are referenced,
//! so a view over an assumed relation sees the assumption. A target's rows
//! are the rows it had below the ASSUME plus every `IN` row, without any
//! tuple removed by a `NOT IN` assumption here or further out.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::rc::Rc;

use thiserror::Error;

use crate::sql::resolve::{RAssumption, RCondition, RFrom, ROperand, RQuery, ResolvedQuery};
use crate::value::{Tuple, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EraError {
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("relation `{0}` is defined in terms of itself")]
    Cycle(String),
    #[error("type error: cannot compare {0} with {1}")]
    TypeError(Value, Value),
}

enum Binding<'q> {
    View(&'q ResolvedQuery),
    Target(Vec<&'q RAssumption>),
}

type Frame<'q> = Vec<(String, Binding<'q>)>;

struct Evaluator<'q, 'd> {
    base: &'d BTreeMap<String, Vec<Tuple>>,
    frames: Vec<Frame<'q>>,
    in_progress: Vec<(usize, String)>,
}

impl<'q> Evaluator<'q, '_> {
    /// Rows of `name` using bindings from frames below `below`, plus the
    /// tuples removed by restrictions at those levels.
    fn relation(&mut self, name: &str, below: usize) -> Result<(Vec<Tuple>, HashSet<Tuple>), EraError> {
        let found = (0..below)
            .rev()
            .find_map(|k| self.frames[k].iter().position(|(n, _)| n == name).map(|i| (k, i)));
        let Some((k, i)) = found else {
            return match self.base.get(name) {
                Some(rows) => Ok((rows.clone(), HashSet::new())),
                None => Err(EraError::UnknownRelation(name.to_string())),
            };
        };
        let key = (k, name.to_string());
        if self.in_progress.contains(&key) {
            return Err(EraError::Cycle(name.to_string()));
        }
        self.in_progress.push(key);
        let result = match &self.frames[k][i].1 {
            Binding::View(q) => {
                let q = *q;
                self.query(q).map(|rows| (rows, HashSet::new()))
            }
            Binding::Target(assumptions) => {
                let assumptions = assumptions.clone();
                self.target(name, k, &assumptions)
            }
        };
        self.in_progress.pop();
        result
    }

    fn target(
        &mut self,
        name: &str,
        frame: usize,
        assumptions: &[&'q RAssumption],
    ) -> Result<(Vec<Tuple>, HashSet<Tuple>), EraError> {
        let (mut rows, mut removed) = match self.relation(name, frame) {
            Ok(r) => r,
            Err(EraError::UnknownRelation(_)) => (Vec::new(), HashSet::new()),
            Err(e) => return Err(e),
        };
        for a in assumptions {
            let produced = self.query(&a.query)?;
            if a.negated {
                removed.extend(produced);
            } else {
                rows.extend(produced);
            }
        }
        Ok((rows, removed))
    }

    fn lookup(&mut self, name: &str) -> Result<Vec<Tuple>, EraError> {
        let (rows, removed) = self.relation(name, self.frames.len())?;
        Ok(if removed.is_empty() {
            rows
        } else {
            rows.into_iter().filter(|t| !removed.contains(t)).collect()
        })
    }

    fn query(&mut self, q: &'q ResolvedQuery) -> Result<Vec<Tuple>, EraError> {
        match &q.kind {
            RQuery::Values(values) => Ok(vec![values.clone()]),
            RQuery::UnionAll(l, r) => {
                let mut rows = self.query(l)?;
                rows.extend(self.query(r)?);
                Ok(rows)
            }
            RQuery::With { defs, body } => {
                self.frames
                    .push(defs.iter().map(|d| (d.name.clone(), Binding::View(&d.query))).collect());
                let result = self.query(body);
                self.frames.pop();
                result
            }
            RQuery::Assume { assumptions, body } => {
                let mut frame: Frame<'q> = Vec::new();
                for a in assumptions {
                    match frame.iter_mut().find(|(n, _)| *n == a.target) {
                        Some((_, Binding::Target(list))) => list.push(a),
                        _ => frame.push((a.target.clone(), Binding::Target(vec![a]))),
                    }
                }
                self.frames.push(frame);
                let result = self.query(body);
                self.frames.pop();
                result
            }
            RQuery::Select(s) => {
                let mut inputs = Vec::with_capacity(s.from.len());
                for f in &s.from {
                    inputs.push(match f {
                        RFrom::Relation { name, .. } => self.lookup(name)?,
                        RFrom::Subquery { query, .. } => self.query(query)?,
                    });
                }
                let mut sets: HashMap<*const ResolvedQuery, Rc<HashSet<Tuple>>> = HashMap::new();
                if let Some(c) = &s.filter {
                    self.collect_in_sets(c, &mut sets)?;
                }
                let mut out = Vec::new();
                let mut current: Vec<&Tuple> = Vec::with_capacity(inputs.len());
                product(&inputs, &mut current, &mut |row| {
                    if let Some(c) = &s.filter {
                        if !condition(c, row, &sets)? {
                            return Ok(());
                        }
                    }
                    out.push(s.items.iter().map(|o| operand(o, row)).collect());
                    Ok(())
                })?;
                Ok(out)
            }
        }
    }

    fn collect_in_sets(
        &mut self,
        c: &'q RCondition,
        sets: &mut HashMap<*const ResolvedQuery, Rc<HashSet<Tuple>>>,
    ) -> Result<(), EraError> {
        match c {
            RCondition::Compare { .. } => Ok(()),
            RCondition::And(l, r) | RCondition::Or(l, r) => {
                self.collect_in_sets(l, sets)?;
                self.collect_in_sets(r, sets)
            }
            RCondition::Not(inner) => self.collect_in_sets(inner, sets),
            RCondition::In { query, .. } => {
                let rows = self.query(query)?;
                sets.insert(&**query as *const _, Rc::new(rows.into_iter().collect()));
                Ok(())
            }
        }
    }
}

fn product<'t>(
    inputs: &'t [Vec<Tuple>],
    current: &mut Vec<&'t Tuple>,
    f: &mut dyn FnMut(&[&'t Tuple]) -> Result<(), EraError>,
) -> Result<(), EraError> {
    if current.len() == inputs.len() {
        return f(current);
    }
    for t in &inputs[current.len()] {
        current.push(t);
        product(inputs, current, f)?;
        current.pop();
    }
    Ok(())
}

fn operand(o: &ROperand, row: &[&Tuple]) -> Value {
    match o {
        ROperand::Column { from, index, .. } => row[*from][*index].clone(),
        ROperand::Literal(v) => v.clone(),
    }
}

fn condition(
    c: &RCondition,
    row: &[&Tuple],
    sets: &HashMap<*const ResolvedQuery, Rc<HashSet<Tuple>>>,
) -> Result<bool, EraError> {
    match c {
        RCondition::Compare { lhs, op, rhs } => {
            let (l, r) = (operand(lhs, row), operand(rhs, row));
            let ord = l.try_cmp(&r).ok_or_else(|| EraError::TypeError(l.clone(), r.clone()))?;
            Ok(op.holds(ord))
        }
        RCondition::And(l, r) => Ok(condition(l, row, sets)? && condition(r, row, sets)?),
        RCondition::Or(l, r) => Ok(condition(l, row, sets)? || condition(r, row, sets)?),
        RCondition::Not(inner) => Ok(!condition(inner, row, sets)?),
        RCondition::In {
            operands,
            query,
            negated,
        } => {
            let t: Tuple = operands.iter().map(|o| operand(o, row)).collect();
            let member = sets[&(&**query as *const _)].contains(&t);
            Ok(member != *negated)
        }
    }
}

/// Evaluates a resolved query over stored relations.
pub fn eval_era(q: &ResolvedQuery, base: &BTreeMap<String, Vec<Tuple>>) -> Result<Vec<Tuple>, EraError> {
    Evaluator {
        base,
        frames: Vec::new(),
        in_progress: Vec::new(),
    }
    .query(q)
}

/// Outcome of comparing two bags of tuples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Comparison {
    Equal,
    /// Tuples whose multiplicities differ, as (tuple, left count, right count).
    Differ(Vec<(Tuple, usize, usize)>),
}

/// Compares two bags as multisets.
pub fn compare_answers(left: &[Tuple], right: &[Tuple]) -> Comparison {
    let mut counts: BTreeMap<&Tuple, (usize, usize)> = BTreeMap::new();
    for t in left {
        counts.entry(t).or_default().0 += 1;
    }
    for t in right {
        counts.entry(t).or_default().1 += 1;
    }
    let diff: Vec<(Tuple, usize, usize)> = counts
        .into_iter()
        .filter(|(_, (l, r))| l != r)
        .map(|(t, (l, r))| (t.clone(), l, r))
        .collect();
    if diff.is_empty() {
        Comparison::Equal
    } else {
        Comparison::Differ(diff)
    }
}
