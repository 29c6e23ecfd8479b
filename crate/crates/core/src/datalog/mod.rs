//! Hypothetical Datalog: function-free rules whose bodies may contain
//! negated goals and embedded implications, plus restricting rules
//! (`-p(...)`) that subtract facts from a predicate's meaning.

mod parser;
mod printer;
mod safety;
mod subst;
mod wellformed;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::value::Value;

pub use parser::{parse_clauses, parse_datalog, parse_goal_list, parse_rule, Clause, TypeDecl};
pub use printer::{display_rule_pretty, normalize_variables};
pub use safety::{check_safety, UnsafeRule};
pub use subst::{apply_substitution, compose, Substitutable, Substitution};
pub use wellformed::{check_wellformed, Violation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DatalogError {
    #[error("syntax error at line {line}, column {col}: expected {expected}")]
    Syntax {
        line: usize,
        col: usize,
        expected: String,
    },
    #[error("predicate {predicate} used with arity {seen}, expected {expected}")]
    ArityMismatch {
        predicate: String,
        seen: usize,
        expected: usize,
    },
}

/// A logic variable. Names starting with `_` are underscored: they mark
/// variables that are existential inside the single negated atom where
/// they occur.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Variable(String);

impl Variable {
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        assert!(!name.is_empty(), "variable names are nonempty");
        Variable(name)
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    pub fn is_underscored(&self) -> bool {
        self.0.starts_with('_')
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Term {
    Var(Variable),
    Const(Value),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(Variable::new(name))
    }

    pub fn constant(v: impl Into<Value>) -> Self {
        Term::Const(v.into())
    }

    pub fn as_var(&self) -> Option<&Variable> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }

    pub fn is_ground(&self) -> bool {
        matches!(self, Term::Const(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: Vec<Term>) -> Self {
        Atom {
            predicate: predicate.into(),
            args,
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    /// The argument values when every argument is a constant.
    pub fn ground_values(&self) -> Option<Vec<Value>> {
        self.args
            .iter()
            .map(|t| match t {
                Term::Const(v) => Some(v.clone()),
                Term::Var(_) => None,
            })
            .collect()
    }
}

/// Comparison operators usable as body goals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CompareOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CompareOp {
    /// The operator whose truth value is the complement of this one.
    pub fn negate(self) -> Self {
        match self {
            CompareOp::Eq => CompareOp::Ne,
            CompareOp::Ne => CompareOp::Eq,
            CompareOp::Lt => CompareOp::Ge,
            CompareOp::Le => CompareOp::Gt,
            CompareOp::Gt => CompareOp::Le,
            CompareOp::Ge => CompareOp::Lt,
        }
    }

    /// The operator obtained by swapping the operands.
    pub fn swap(self) -> Self {
        match self {
            CompareOp::Lt => CompareOp::Gt,
            CompareOp::Le => CompareOp::Ge,
            CompareOp::Gt => CompareOp::Lt,
            CompareOp::Ge => CompareOp::Le,
            other => other,
        }
    }

    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CompareOp::Eq => ord == Equal,
            CompareOp::Ne => ord != Equal,
            CompareOp::Lt => ord == Less,
            CompareOp::Le => ord != Greater,
            CompareOp::Gt => ord == Greater,
            CompareOp::Ge => ord != Less,
        }
    }

    pub fn datalog_symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::Ne => "\\=",
            CompareOp::Lt => "<",
            CompareOp::Le => "=<",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
        }
    }

    pub fn sql_symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::Ne => "<>",
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Goal {
    Atom(Atom),
    Not(Box<Goal>),
    /// `R1 /\ ... /\ Rn => G`: prove the consequent with the antecedent
    /// rules added to the current database.
    Implies {
        antecedent: Vec<Rule>,
        consequent: Box<Goal>,
    },
    Compare {
        lhs: Term,
        op: CompareOp,
        rhs: Term,
    },
}

impl Goal {
    pub fn negation(inner: Goal) -> Self {
        Goal::Not(Box::new(inner))
    }

    pub fn implies(antecedent: Vec<Rule>, consequent: Goal) -> Self {
        assert!(!antecedent.is_empty(), "an implication needs an antecedent");
        Goal::Implies {
            antecedent,
            consequent: Box::new(consequent),
        }
    }

    pub fn compare(lhs: Term, op: CompareOp, rhs: Term) -> Self {
        Goal::Compare { lhs, op, rhs }
    }

    pub fn as_atom(&self) -> Option<&Atom> {
        match self {
            Goal::Atom(a) => Some(a),
            _ => None,
        }
    }

    /// Visits every atom in the goal, including antecedent rule heads and
    /// bodies.
    pub fn for_each_atom<'a>(&'a self, f: &mut dyn FnMut(&'a Atom)) {
        match self {
            Goal::Atom(a) => f(a),
            Goal::Not(g) => g.for_each_atom(f),
            Goal::Implies {
                antecedent,
                consequent,
            } => {
                for r in antecedent {
                    r.for_each_atom(f);
                }
                consequent.for_each_atom(f);
            }
            Goal::Compare { .. } => {}
        }
    }

    /// Predicates mentioned anywhere inside the goal.
    pub fn predicates(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.for_each_atom(&mut |a| {
            out.insert(a.predicate.clone());
        });
        out
    }

    /// Variables of the goal, leaving out the variables of embedded
    /// antecedent rules (those are local to each assumed rule).
    pub fn outer_vars(&self, out: &mut BTreeSet<Variable>) {
        match self {
            Goal::Atom(a) => collect_atom_vars(a, out),
            Goal::Not(g) => g.outer_vars(out),
            Goal::Implies { consequent, .. } => consequent.outer_vars(out),
            Goal::Compare { lhs, rhs, .. } => {
                for t in [lhs, rhs] {
                    if let Term::Var(v) = t {
                        out.insert(v.clone());
                    }
                }
            }
        }
    }
}

pub(crate) fn collect_atom_vars(a: &Atom, out: &mut BTreeSet<Variable>) {
    for t in &a.args {
        if let Term::Var(v) = t {
            out.insert(v.clone());
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum HeadSign {
    Regular,
    /// `-p(...)`: facts derived by this rule are removed from `p`.
    Restricting,
}

/// Where a rule came from. Labels of derived facts embed the rule id, so
/// ids must be unique across everything evaluated together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Origin {
    User,
    Translated,
    Assumed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RuleId {
    pub origin: Origin,
    pub seq: u32,
}

impl RuleId {
    pub fn new(origin: Origin, seq: u32) -> Self {
        RuleId { origin, seq }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Rule {
    pub id: RuleId,
    pub sign: HeadSign,
    pub head: Atom,
    pub body: Vec<Goal>,
}

impl Rule {
    pub fn new(id: RuleId, head: Atom, body: Vec<Goal>) -> Self {
        Rule {
            id,
            sign: HeadSign::Regular,
            head,
            body,
        }
    }

    pub fn fact(id: RuleId, head: Atom) -> Self {
        Rule::new(id, head, Vec::new())
    }

    pub fn restricting(mut self) -> Self {
        self.sign = HeadSign::Restricting;
        self
    }

    pub fn is_fact(&self) -> bool {
        self.body.is_empty()
    }

    pub fn is_restricting(&self) -> bool {
        self.sign == HeadSign::Restricting
    }

    pub fn for_each_atom<'a>(&'a self, f: &mut dyn FnMut(&'a Atom)) {
        f(&self.head);
        for g in &self.body {
            g.for_each_atom(f);
        }
    }

    /// Variables of the rule outside its embedded antecedents.
    pub fn outer_vars(&self) -> BTreeSet<Variable> {
        let mut out = BTreeSet::new();
        collect_atom_vars(&self.head, &mut out);
        for g in &self.body {
            g.outer_vars(&mut out);
        }
        out
    }

    /// Every variable occurring in the rule, antecedents included.
    pub fn all_vars(&self) -> BTreeSet<Variable> {
        let mut out = BTreeSet::new();
        self.for_each_atom(&mut |a| collect_atom_vars(a, &mut out));
        fn compares(g: &Goal, out: &mut BTreeSet<Variable>) {
            match g {
                Goal::Compare { lhs, rhs, .. } => {
                    for t in [lhs, rhs] {
                        if let Term::Var(v) = t {
                            out.insert(v.clone());
                        }
                    }
                }
                Goal::Not(g) => compares(g, out),
                Goal::Implies {
                    antecedent,
                    consequent,
                } => {
                    for r in antecedent {
                        for g in &r.body {
                            compares(g, out);
                        }
                    }
                    compares(consequent, out);
                }
                Goal::Atom(_) => {}
            }
        }
        for g in &self.body {
            compares(g, &mut out);
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Program {
    pub rules: Vec<Rule>,
}

impl Program {
    pub fn new(rules: Vec<Rule>) -> Self {
        Program { rules }
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Predicate arities, or the first inconsistency found.
    pub fn arities(&self) -> Result<BTreeMap<String, usize>, DatalogError> {
        check_arities(self.rules.iter())
    }
}

pub(crate) fn check_arities<'a>(
    rules: impl Iterator<Item = &'a Rule>,
) -> Result<BTreeMap<String, usize>, DatalogError> {
    let mut arities: BTreeMap<String, usize> = BTreeMap::new();
    let mut err = None;
    for r in rules {
        r.for_each_atom(&mut |a| {
            if err.is_some() {
                return;
            }
            match arities.get(&a.predicate) {
                Some(&n) if n != a.arity() => {
                    err = Some(DatalogError::ArityMismatch {
                        predicate: a.predicate.clone(),
                        seen: a.arity(),
                        expected: n,
                    })
                }
                Some(_) => {}
                None => {
                    arities.insert(a.predicate.clone(), a.arity());
                }
            }
        });
    }
    match err {
        Some(e) => Err(e),
        None => Ok(arities),
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}
