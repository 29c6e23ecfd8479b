//! Compiles resolved SQL queries into Hypothetical Datalog rules.
//!
//! A query is translated into rules defining a head predicate. FROM items
//! become body atoms, subqueries get fresh `goalN` predicates, WITH and
//! ASSUME become embedded implications whose antecedents hold the rules of
//! the local definitions (restricting rules for `NOT IN` assumptions).

mod unfold;

use std::collections::{BTreeMap, BTreeSet};

use crate::datalog::{
    normalize_variables, Atom, CompareOp, Goal, Origin, Rule, RuleId, Substitutable, Substitution, Term, Variable,
};
use crate::sql::resolve::{RCondition, RFrom, ROperand, RQuery, ResolvedQuery};
use crate::sql::Schema;
use crate::value::Value;

pub use unfold::fold_unfold;

/// Result of compiling one query.
#[derive(Debug, Clone, PartialEq)]
pub struct Translation {
    /// Rules defining the answer predicate first, then auxiliary rules.
    pub rules: Vec<Rule>,
    pub answer: String,
    pub arity: usize,
    /// Query schema, renamed to the answer predicate.
    pub schema: Schema,
    /// Auxiliary predicates introduced by the translation.
    pub generated: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy)]
pub struct Options {
    /// Inline single-rule auxiliary predicates and drop unused ones.
    pub fold_unfold: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options { fold_unfold: true }
    }
}

/// Translates `query` into rules for `answer`. `reserved` lists predicate
/// names already in use; fresh names avoid them.
pub fn translate(query: &ResolvedQuery, answer: &str, reserved: &BTreeSet<String>, options: Options) -> Translation {
    let mut taken = reserved.clone();
    taken.extend(relation_names(query));
    taken.insert(answer.to_string());
    let mut t = Translator {
        taken,
        generated: BTreeSet::new(),
        next_goal: 1,
        next_var: 0,
        next_rule: 0,
        aux: Vec::new(),
    };
    let mut rules = t.query_rules(query, answer);
    rules.append(&mut t.aux);
    if options.fold_unfold {
        rules = fold_unfold(rules, &t.generated);
    }
    let rules = rules.iter().map(normalize_variables).collect();
    Translation {
        rules,
        answer: answer.to_string(),
        arity: query.schema.arity(),
        schema: query.schema.clone().renamed(answer),
        generated: t.generated,
    }
}

/// Every relation name a query reads or defines.
pub fn relation_names(q: &ResolvedQuery) -> BTreeSet<String> {
    let mut out = q.referenced_relations();
    collect_defs(q, &mut out);
    out
}

fn collect_defs(q: &ResolvedQuery, out: &mut BTreeSet<String>) {
    fn defs(q: &ResolvedQuery, out: &mut BTreeSet<String>) {
        match &q.kind {
            RQuery::Select(s) => {
                for f in &s.from {
                    if let RFrom::Subquery { query, .. } = f {
                        defs(query, out);
                    }
                }
                if let Some(c) = &s.filter {
                    cond(c, out);
                }
            }
            RQuery::Values(_) => {}
            RQuery::UnionAll(l, r) => {
                defs(l, out);
                defs(r, out);
            }
            RQuery::With { defs: ds, body } => {
                for d in ds {
                    out.insert(d.name.clone());
                    defs(&d.query, out);
                }
                defs(body, out);
            }
            RQuery::Assume { assumptions, body } => {
                for a in assumptions {
                    defs(&a.query, out);
                }
                defs(body, out);
            }
        }
    }
    fn cond(c: &RCondition, out: &mut BTreeSet<String>) {
        match c {
            RCondition::Compare { .. } => {}
            RCondition::And(l, r) | RCondition::Or(l, r) => {
                cond(l, out);
                cond(r, out);
            }
            RCondition::Not(c) => cond(c, out),
            RCondition::In { query, .. } => defs(query, out),
        }
    }
    defs(q, out);
}

/// Pushes negations down to comparisons and IN tests.
fn nnf(c: &RCondition, negate: bool) -> RCondition {
    match (c, negate) {
        (RCondition::Compare { lhs, op, rhs }, neg) => RCondition::Compare {
            lhs: lhs.clone(),
            op: if neg { op.negate() } else { *op },
            rhs: rhs.clone(),
        },
        (RCondition::And(l, r), false) => RCondition::And(Box::new(nnf(l, false)), Box::new(nnf(r, false))),
        (RCondition::And(l, r), true) => RCondition::Or(Box::new(nnf(l, true)), Box::new(nnf(r, true))),
        (RCondition::Or(l, r), false) => RCondition::Or(Box::new(nnf(l, false)), Box::new(nnf(r, false))),
        (RCondition::Or(l, r), true) => RCondition::And(Box::new(nnf(l, true)), Box::new(nnf(r, true))),
        (RCondition::Not(inner), neg) => nnf(inner, !neg),
        (RCondition::In { operands, query, negated }, neg) => RCondition::In {
            operands: operands.clone(),
            query: query.clone(),
            negated: *negated != neg,
        },
    }
}

fn conjuncts(c: RCondition, out: &mut Vec<RCondition>) {
    match c {
        RCondition::And(l, r) => {
            conjuncts(*l, out);
            conjuncts(*r, out);
        }
        other => out.push(other),
    }
}

/// Union-find over variables where a class may be bound to a constant.
#[derive(Default)]
struct Equalities {
    parent: BTreeMap<Variable, Variable>,
    constant: BTreeMap<Variable, Value>,
    order: BTreeMap<Variable, usize>,
}

impl Equalities {
    fn find(&self, v: &Variable) -> Variable {
        let mut cur = v.clone();
        while let Some(p) = self.parent.get(&cur) {
            cur = p.clone();
        }
        cur
    }

    fn rank(&self, v: &Variable) -> usize {
        self.order.get(v).copied().unwrap_or(usize::MAX)
    }

    /// Merges two classes; returns false when they hold different constants.
    fn union(&mut self, a: &Variable, b: &Variable) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return true;
        }
        if let (Some(x), Some(y)) = (self.constant.get(&ra), self.constant.get(&rb)) {
            if x != y {
                return false;
            }
        }
        let (root, child) = if self.rank(&ra) <= self.rank(&rb) { (ra, rb) } else { (rb, ra) };
        if let Some(c) = self.constant.remove(&child) {
            self.constant.insert(root.clone(), c);
        }
        self.parent.insert(child, root);
        true
    }

    fn bind(&mut self, v: &Variable, value: &Value) -> bool {
        let r = self.find(v);
        match self.constant.get(&r) {
            Some(c) => c == value,
            None => {
                self.constant.insert(r, value.clone());
                true
            }
        }
    }

    fn substitution(&self) -> Substitution {
        let mut theta = Substitution::new();
        for v in self.order.keys() {
            let r = self.find(v);
            let t = match self.constant.get(&r) {
                Some(c) => Term::Const(c.clone()),
                None => Term::Var(r),
            };
            if t != Term::Var(v.clone()) {
                theta.insert(v.clone(), t);
            }
        }
        theta
    }
}

struct Translator {
    taken: BTreeSet<String>,
    generated: BTreeSet<String>,
    next_goal: usize,
    next_var: usize,
    next_rule: u32,
    aux: Vec<Rule>,
}

struct SelectScope {
    terms: Vec<Vec<Term>>,
    atoms: Vec<Goal>,
}

impl Translator {
    fn fresh_goal(&mut self) -> String {
        loop {
            let name = format!("goal{}", self.next_goal);
            self.next_goal += 1;
            if !self.taken.contains(&name) {
                self.taken.insert(name.clone());
                self.generated.insert(name.clone());
                return name;
            }
        }
    }

    fn fresh_var(&mut self) -> Variable {
        self.next_var += 1;
        Variable::new(format!("V{}", self.next_var))
    }

    fn fresh_vars(&mut self, n: usize) -> Vec<Term> {
        (0..n).map(|_| Term::Var(self.fresh_var())).collect()
    }

    fn rule(&mut self, head: Atom, body: Vec<Goal>) -> Rule {
        let id = RuleId::new(Origin::Translated, self.next_rule);
        self.next_rule += 1;
        Rule::new(id, head, body)
    }

    /// Translates `q` into rules with head predicate `head`, and defines
    /// it as an auxiliary predicate.
    fn aux_query(&mut self, q: &ResolvedQuery) -> String {
        let name = self.fresh_goal();
        let mut rules = self.query_rules(q, &name);
        self.aux.append(&mut rules);
        name
    }

    fn query_rules(&mut self, q: &ResolvedQuery, head: &str) -> Vec<Rule> {
        match &q.kind {
            RQuery::Values(values) => {
                let args = values.iter().cloned().map(Term::Const).collect();
                vec![self.rule(Atom::new(head, args), Vec::new())]
            }
            RQuery::UnionAll(l, r) => {
                let mut rules = self.query_rules(l, head);
                rules.extend(self.query_rules(r, head));
                rules
            }
            RQuery::Select(s) => {
                let mut scope = SelectScope {
                    terms: Vec::new(),
                    atoms: Vec::new(),
                };
                let mut eqs = Equalities::default();
                for f in &s.from {
                    let terms = self.fresh_vars(f.arity());
                    for t in &terms {
                        let v = t.as_var().expect("fresh").clone();
                        let n = eqs.order.len();
                        eqs.order.insert(v, n);
                    }
                    let pred = match f {
                        RFrom::Relation { name, .. } => name.clone(),
                        RFrom::Subquery { query, .. } => self.aux_query(query),
                    };
                    scope.atoms.push(Goal::Atom(Atom::new(pred, terms.clone())));
                    scope.terms.push(terms);
                }
                let mut body = scope.atoms.clone();
                let mut rest = Vec::new();
                if let Some(c) = &s.filter {
                    let mut cs = Vec::new();
                    conjuncts(nnf(c, false), &mut cs);
                    for c in cs {
                        if !self.absorb_equality(&c, &scope, &mut eqs) {
                            rest.push(c);
                        }
                    }
                }
                for c in &rest {
                    body.extend(self.condition_goals(c, &scope));
                }
                let args = s.items.iter().map(|o| operand_term(o, &scope)).collect();
                let rule = self.rule(Atom::new(head, args), body);
                let theta = eqs.substitution();
                // auxiliary rules created for this SELECT share its variables
                for r in self.aux.iter_mut() {
                    if rule_mentions_any(r, &theta) {
                        *r = r.substitute(&theta);
                    }
                }
                vec![rule.substitute(&theta)]
            }
            RQuery::With { defs, body } => {
                let mut antecedent = Vec::new();
                for d in defs {
                    antecedent.extend(self.query_rules(&d.query, &d.name));
                }
                self.implication(head, q.schema.arity(), antecedent, body)
            }
            RQuery::Assume { assumptions, body } => {
                let mut antecedent = Vec::new();
                for a in assumptions {
                    let rules = self.query_rules(&a.query, &a.target);
                    if a.negated {
                        antecedent.extend(rules.into_iter().map(Rule::restricting));
                    } else {
                        antecedent.extend(rules);
                    }
                }
                self.implication(head, q.schema.arity(), antecedent, body)
            }
        }
    }

    fn implication(&mut self, head: &str, arity: usize, antecedent: Vec<Rule>, body: &ResolvedQuery) -> Vec<Rule> {
        let goal = self.aux_query(body);
        let args = self.fresh_vars(arity);
        let consequent = Goal::Atom(Atom::new(goal, args.clone()));
        vec![self.rule(Atom::new(head, args), vec![Goal::implies(antecedent, consequent)])]
    }

    /// Turns a top-level equality into variable unification when both sides
    /// have the same type.
    fn absorb_equality(&self, c: &RCondition, scope: &SelectScope, eqs: &mut Equalities) -> bool {
        let RCondition::Compare {
            lhs,
            op: CompareOp::Eq,
            rhs,
        } = c
        else {
            return false;
        };
        if lhs.kind() != rhs.kind() {
            return false;
        }
        match (operand_term(lhs, scope), operand_term(rhs, scope)) {
            (Term::Var(a), Term::Var(b)) => eqs.union(&a, &b),
            (Term::Var(a), Term::Const(v)) | (Term::Const(v), Term::Var(a)) => eqs.bind(&a, &v),
            _ => false,
        }
    }

    fn condition_goals(&mut self, c: &RCondition, scope: &SelectScope) -> Vec<Goal> {
        match c {
            RCondition::Compare { lhs, op, rhs } => {
                vec![Goal::compare(operand_term(lhs, scope), *op, operand_term(rhs, scope))]
            }
            RCondition::And(l, r) => {
                let mut goals = self.condition_goals(l, scope);
                goals.extend(self.condition_goals(r, scope));
                goals
            }
            RCondition::Not(_) => unreachable!("conditions are in negation normal form"),
            RCondition::In { operands, query, negated } => {
                let pred = self.aux_query(query);
                let args = operands.iter().map(|o| operand_term(o, scope)).collect();
                let test = Goal::negation(Goal::Atom(Atom::new(pred, args)));
                vec![if *negated { test } else { Goal::negation(test) }]
            }
            RCondition::Or(..) => {
                // one rule per disjunct over the same rows, tested for existence
                let mut disjuncts = Vec::new();
                flatten_or(c, &mut disjuncts);
                let mut vars = BTreeSet::new();
                let mut ordered = Vec::new();
                for d in &disjuncts {
                    for t in condition_terms(d, scope) {
                        if let Term::Var(v) = t {
                            if vars.insert(v.clone()) {
                                ordered.push(Term::Var(v));
                            }
                        }
                    }
                }
                let pred = self.fresh_goal();
                for d in disjuncts {
                    let mut body = scope.atoms.clone();
                    body.extend(self.condition_goals(d, scope));
                    let rule = self.rule(Atom::new(pred.clone(), ordered.clone()), body);
                    self.aux.push(rule);
                }
                vec![Goal::negation(Goal::negation(Goal::Atom(Atom::new(pred, ordered))))]
            }
        }
    }
}

fn rule_mentions_any(r: &Rule, theta: &Substitution) -> bool {
    r.all_vars().iter().any(|v| theta.contains_key(v))
}

fn flatten_or<'a>(c: &'a RCondition, out: &mut Vec<&'a RCondition>) {
    match c {
        RCondition::Or(l, r) => {
            flatten_or(l, out);
            flatten_or(r, out);
        }
        other => out.push(other),
    }
}

fn condition_terms(c: &RCondition, scope: &SelectScope) -> Vec<Term> {
    match c {
        RCondition::Compare { lhs, rhs, .. } => vec![operand_term(lhs, scope), operand_term(rhs, scope)],
        RCondition::And(l, r) | RCondition::Or(l, r) => {
            let mut v = condition_terms(l, scope);
            v.extend(condition_terms(r, scope));
            v
        }
        RCondition::Not(c) => condition_terms(c, scope),
        RCondition::In { operands, .. } => operands.iter().map(|o| operand_term(o, scope)).collect(),
    }
}

fn operand_term(o: &ROperand, scope: &SelectScope) -> Term {
    match o {
        ROperand::Column { from, index, .. } => scope.terms[*from][*index].clone(),
        ROperand::Literal(v) => Term::Const(v.clone()),
    }
}
