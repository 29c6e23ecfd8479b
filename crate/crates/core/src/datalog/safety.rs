use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::{collect_atom_vars, Goal, Rule, Term, Variable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unsafe rule `{rule}`: variable {variable} {reason}")]
pub struct UnsafeRule {
    pub rule: String,
    pub variable: String,
    pub reason: String,
}

fn bind_positive(g: &Goal, bound: &mut BTreeSet<Variable>) {
    match g {
        Goal::Atom(a) => collect_atom_vars(a, bound),
        Goal::Implies { consequent, .. } => bind_positive(consequent, bound),
        Goal::Not(_) | Goal::Compare { .. } => {}
    }
}

fn count_negated(g: &Goal, counts: &mut BTreeMap<Variable, usize>) {
    match g {
        Goal::Not(inner) => {
            let mut vs = BTreeSet::new();
            inner.outer_vars(&mut vs);
            for v in vs {
                *counts.entry(v).or_default() += 1;
            }
        }
        Goal::Implies { consequent, .. } => count_negated(consequent, counts),
        _ => {}
    }
}

/// Checks range restriction. Head variables and comparison variables must
/// occur in a positive body atom. A variable inside a negated goal must
/// also be bound, unless it is underscored and occurs in no other goal of
/// the rule: such a variable is existential within that negation.
/// Assumed rules are checked on their own.
pub fn check_safety(rule: &Rule) -> Result<(), UnsafeRule> {
    let fail = |v: &Variable, reason: &str| UnsafeRule {
        rule: rule.to_string(),
        variable: v.to_string(),
        reason: reason.to_string(),
    };
    let mut bound = BTreeSet::new();
    for g in &rule.body {
        bind_positive(g, &mut bound);
    }
    let mut head = BTreeSet::new();
    collect_atom_vars(&rule.head, &mut head);
    if let Some(v) = head.difference(&bound).next() {
        return Err(fail(v, "in the head does not occur in a positive body goal"));
    }
    let mut negated = BTreeMap::new();
    for g in &rule.body {
        count_negated(g, &mut negated);
    }
    let mut goals: Vec<&Goal> = Vec::new();
    for g in &rule.body {
        goals.push(g);
        let mut cur = g;
        while let Goal::Implies {
            antecedent,
            consequent,
        } = cur
        {
            for r in antecedent {
                check_safety(r)?;
            }
            goals.push(consequent);
            cur = consequent;
        }
    }
    for g in goals {
        match g {
            Goal::Compare { lhs, rhs, .. } => {
                for t in [lhs, rhs] {
                    if let Term::Var(v) = t {
                        if !bound.contains(v) {
                            return Err(fail(v, "in a comparison is not bound"));
                        }
                    }
                }
            }
            Goal::Not(inner) => {
                let mut vs = BTreeSet::new();
                inner.outer_vars(&mut vs);
                for v in vs.difference(&bound) {
                    if !v.is_underscored() || negated.get(v).copied().unwrap_or(0) > 1 {
                        return Err(fail(v, "in a negated goal is not bound"));
                    }
                }
                if let Goal::Implies { .. } = **inner {
                    // embedded implications under negation carry their own rules
                    let mut cur = &**inner;
                    while let Goal::Implies {
                        antecedent,
                        consequent,
                    } = cur
                    {
                        for r in antecedent {
                            check_safety(r)?;
                        }
                        cur = consequent;
                    }
                }
            }
            _ => {}
        }
    }
    Ok(())
}
