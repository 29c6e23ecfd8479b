//! Unfolding of single-rule auxiliary predicates.

use std::collections::{BTreeMap, BTreeSet};

use crate::datalog::{Atom, Goal, Rule, Substitutable, Substitution, Term, Variable};

struct Unfolder<'a> {
    defs: &'a BTreeMap<String, Rule>,
    next: usize,
}

impl Unfolder<'_> {
    /// A copy of `def` with variables renamed apart and head variables
    /// replaced by the call arguments. `None` if the head is not a list of
    /// distinct variables.
    fn instantiate(&mut self, def: &Rule, call: &Atom) -> Option<(Vec<Goal>, BTreeSet<Variable>)> {
        let mut head_vars = BTreeSet::new();
        for t in &def.head.args {
            match t {
                Term::Var(v) if head_vars.insert(v.clone()) => {}
                _ => return None,
            }
        }
        let mut theta = Substitution::new();
        for v in def.all_vars() {
            self.next += 1;
            theta.insert(v, Term::var(format!("U{}", self.next)));
        }
        let mut locals = BTreeSet::new();
        for (v, t) in &theta {
            if !head_vars.contains(v) {
                locals.insert(t.as_var().expect("renamed").clone());
            }
        }
        for (h, arg) in def.head.args.iter().zip(&call.args) {
            theta.insert(h.as_var().expect("checked").clone(), arg.clone());
        }
        let body = def.body.iter().map(|g| g.substitute(&theta)).collect();
        Some((body, locals))
    }

    fn lookup<'g>(&self, g: &'g Goal) -> Option<(&Rule, &'g Atom)> {
        let a = g.as_atom()?;
        self.defs.get(&a.predicate).map(|r| (r, a))
    }

    /// Inlines into a negated position: only a single atom whose local
    /// variables each occur once.
    fn negated_atom(&mut self, g: &Goal) -> Option<Goal> {
        let (def, call) = self.lookup(g)?;
        let def = def.clone();
        let call = call.clone();
        let (body, locals) = self.instantiate(&def, &call)?;
        let [Goal::Atom(a)] = body.as_slice() else {
            return None;
        };
        for v in &locals {
            let n = a.args.iter().filter(|t| t.as_var() == Some(v)).count();
            if n > 1 {
                return None;
            }
        }
        Some(Goal::Atom(a.clone()))
    }

    fn goal(&mut self, g: &Goal, changed: &mut bool) -> Vec<Goal> {
        match g {
            Goal::Atom(_) => {
                if let Some((def, call)) = self.lookup(g) {
                    let (def, call) = (def.clone(), call.clone());
                    if let Some((body, _)) = self.instantiate(&def, &call) {
                        *changed = true;
                        return body;
                    }
                }
                vec![g.clone()]
            }
            Goal::Not(inner) => {
                if let Some(a) = self.negated_atom(inner) {
                    *changed = true;
                    return vec![Goal::negation(a)];
                }
                if let Goal::Not(inner2) = &**inner {
                    if let Some(a) = self.negated_atom(inner2) {
                        *changed = true;
                        return vec![Goal::negation(Goal::negation(a))];
                    }
                }
                vec![g.clone()]
            }
            Goal::Compare { .. } => vec![g.clone()],
            Goal::Implies {
                antecedent,
                consequent,
            } => {
                let antecedent = antecedent.iter().map(|r| self.rule(r, changed)).collect();
                let mut consequent = (**consequent).clone();
                if let Some((def, call)) = self.lookup(&consequent) {
                    let (def, call) = (def.clone(), call.clone());
                    if let Some((body, _)) = self.instantiate(&def, &call) {
                        if let [single] = body.as_slice() {
                            consequent = single.clone();
                            *changed = true;
                        }
                    }
                }
                let mut inner_changed = false;
                let mut rewritten = self.goal(&consequent, &mut inner_changed);
                if inner_changed && rewritten.len() == 1 {
                    consequent = rewritten.remove(0);
                    *changed = true;
                }
                vec![Goal::implies(antecedent, consequent)]
            }
        }
    }

    fn rule(&mut self, r: &Rule, changed: &mut bool) -> Rule {
        let mut out = r.clone();
        out.body = r.body.iter().flat_map(|g| self.goal(g, changed)).collect();
        out
    }
}

fn referenced(rules: &[Rule], skip: Option<usize>) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for (i, r) in rules.iter().enumerate() {
        if Some(i) == skip {
            continue;
        }
        for g in &r.body {
            out.extend(g.predicates());
        }
    }
    out
}

/// Inlines every auxiliary predicate in `candidates` that is defined by a
/// single non-recursive rule, then drops auxiliary rules no longer used.
/// Multiplicities of every other predicate are preserved.
pub fn fold_unfold(mut rules: Vec<Rule>, candidates: &BTreeSet<String>) -> Vec<Rule> {
    let mut next = 0;
    loop {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for r in &rules {
            if candidates.contains(&r.head.predicate) {
                *counts.entry(r.head.predicate.as_str()).or_default() += 1;
            }
        }
        let defs: BTreeMap<String, Rule> = rules
            .iter()
            .filter(|r| {
                counts.get(r.head.predicate.as_str()) == Some(&1)
                    && !r.is_restricting()
                    && !r.body.iter().any(|g| g.predicates().contains(&r.head.predicate))
            })
            .map(|r| (r.head.predicate.clone(), r.clone()))
            .collect();
        let mut changed = false;
        let mut unfolder = Unfolder { defs: &defs, next };
        rules = rules.iter().map(|r| unfolder.rule(r, &mut changed)).collect();
        next = unfolder.next;

        // drop auxiliary rules that nothing references any more
        let used = referenced(&rules, None);
        let before = rules.len();
        rules.retain(|r| !candidates.contains(&r.head.predicate) || used.contains(&r.head.predicate));
        if !changed && rules.len() == before {
            return rules;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::{normalize_variables, parse_datalog};

    fn run(text: &str, cands: &[&str]) -> String {
        let p = parse_datalog(text).unwrap();
        let cands = cands.iter().map(|s| s.to_string()).collect();
        fold_unfold(p.rules, &cands)
            .iter()
            .map(|r| normalize_variables(r).to_string())
            .collect::<Vec<_>>()
            .join("\n")
    }

    #[test]
    fn negated_single_atom_is_inlined() {
        assert_eq!(
            run("answer(X) :- student(X), not goal1(X). goal1(Y) :- take(Y,Z).", &["goal1"]),
            "answer(A) :- student(A), not take(A,_B)."
        );
    }

    #[test]
    fn consequent_is_inlined() {
        assert_eq!(
            run("answer(X) :- (grad(Y) :- student(Y)) => goal1(X). goal1(Z) :- grad(Z).", &["goal1"]),
            "answer(A) :- (grad(B) :- student(B)) => grad(A)."
        );
    }

    #[test]
    fn multi_rule_predicates_are_kept() {
        let out = run("answer(X) :- goal1(X). goal1(1). goal1(2).", &["goal1"]);
        assert_eq!(out, "answer(A) :- goal1(A).\ngoal1(1).\ngoal1(2).");
    }

    #[test]
    fn negation_of_conjunction_is_kept() {
        let out = run("answer(X) :- s(X), not goal1(X). goal1(Y) :- t(Y), u(Y).", &["goal1"]);
        assert_eq!(out, "answer(A) :- s(A), not goal1(A).\ngoal1(A) :- t(A), u(A).");
    }

    #[test]
    fn positive_conjunction_is_spliced() {
        let out = run("answer(X) :- s(X), goal1(X), v(X). goal1(Y) :- t(Y,W), u(W).", &["goal1"]);
        assert_eq!(out, "answer(A) :- s(A), t(A,B), u(B), v(A).");
    }
}
