use std::collections::BTreeSet;
use std::fmt;

use super::{check_arities, DatalogError, Goal, Program, Rule};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// An assumed rule shares variables with the rule (or consequent) that
    /// embeds it.
    SharedVariables { rule: String, variables: Vec<String> },
    ArityMismatch {
        predicate: String,
        seen: usize,
        expected: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SharedVariables { rule, variables } => write!(
                f,
                "assumed rules share variables {} with their context in {rule}",
                variables.join(", ")
            ),
            Violation::ArityMismatch {
                predicate,
                seen,
                expected,
            } => write!(f, "predicate {predicate} used with arity {seen}, expected {expected}"),
        }
    }
}

/// Returns every disjointness and arity violation in the program. An empty
/// list means the program is well formed.
pub fn check_wellformed(program: &Program) -> Vec<Violation> {
    let mut out = Vec::new();
    for r in &program.rules {
        check_rule(r, &mut out);
    }
    if let Err(DatalogError::ArityMismatch {
        predicate,
        seen,
        expected,
    }) = check_arities(program.rules.iter())
    {
        out.push(Violation::ArityMismatch {
            predicate,
            seen,
            expected,
        });
    }
    out
}

fn check_rule(rule: &Rule, out: &mut Vec<Violation>) {
    let outer = rule.outer_vars();
    for g in &rule.body {
        check_goal(rule, g, &outer, out);
    }
}

fn check_goal(rule: &Rule, goal: &Goal, outer: &BTreeSet<super::Variable>, out: &mut Vec<Violation>) {
    match goal {
        Goal::Atom(_) | Goal::Compare { .. } => {}
        Goal::Not(g) => check_goal(rule, g, outer, out),
        Goal::Implies {
            antecedent,
            consequent,
        } => {
            let mut shared = BTreeSet::new();
            for r in antecedent {
                for v in r.all_vars() {
                    if outer.contains(&v) {
                        shared.insert(v.name().to_string());
                    }
                }
                check_rule(r, out);
            }
            if !shared.is_empty() {
                out.push(Violation::SharedVariables {
                    rule: rule.to_string(),
                    variables: shared.into_iter().collect(),
                });
            }
            check_goal(rule, consequent, outer, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_datalog;
    use super::*;

    #[test]
    fn shared_variable_is_reported() {
        let p = parse_datalog("q(A) :- r(A) => s(A).").unwrap();
        let v = check_wellformed(&p);
        assert_eq!(v.len(), 1);
        assert!(matches!(&v[0], Violation::SharedVariables { variables, .. } if variables == &["A"]));
    }

    #[test]
    fn disjoint_is_ok() {
        let p = parse_datalog("q(A) :- r(B) => s(A).").unwrap();
        assert!(check_wellformed(&p).is_empty());
    }

    #[test]
    fn compiled_with_rule_is_ok() {
        let p = parse_datalog(
            "answer(A) :- (grad(B) :- student(B), take(B,db), take(B,lp)) => grad(A).",
        )
        .unwrap();
        assert!(check_wellformed(&p).is_empty());
    }

    #[test]
    fn nested_antecedent_checked_against_its_own_rule() {
        let p = parse_datalog("q(A) :- (s(B) :- (r(B) :- t(B)) => u(B)) => s(A).").unwrap();
        let v = check_wellformed(&p);
        assert_eq!(v.len(), 1, "{v:?}");
    }

    #[test]
    fn arity_inconsistency_is_reported() {
        let p = crate::datalog::Program::new(vec![
            crate::datalog::parse_rule("p(1).").unwrap(),
            crate::datalog::parse_rule("p(1,2).").unwrap(),
        ]);
        assert!(check_wellformed(&p)
            .iter()
            .any(|v| matches!(v, Violation::ArityMismatch { .. })));
    }
}
