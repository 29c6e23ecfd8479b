//! Bottom-up evaluation of hypothetical Datalog with bag semantics.
//!
//! Each embedded implication opens a context: the enclosing context plus the
//! assumed rules. A predicate is computed once per context that can change
//! its meaning, on demand. Non-recursive predicates keep one tuple per
//! distinct derivation label; recursive ones use set semantics.

mod db;
mod labels;
mod stratify;

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::rc::Rc;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use thiserror::Error;

use crate::datalog::{check_arities, check_safety, Atom, Goal, Rule, RuleId, Term, UnsafeRule, Variable};
use crate::value::{Tuple, Value};

pub use db::{Database, DbError};
pub use labels::LabelId;
use labels::LabelArena;
pub use stratify::{check_stratified, stratify};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("program is not stratifiable: cycle through negation or assumption among {}", predicates.join(", "))]
    NotStratifiable { predicates: Vec<String> },
    #[error(transparent)]
    UnsafeRule(#[from] UnsafeRule),
    #[error("predicate {predicate} used with arity {seen}, expected {expected}")]
    ArityMismatch { predicate: String, seen: usize, expected: usize },
    #[error("type error: cannot compare {lhs} with {rhs}")]
    TypeError { lhs: Value, rhs: Value },
}

impl From<crate::datalog::DatalogError> for EngineError {
    fn from(e: crate::datalog::DatalogError) -> Self {
        match e {
            crate::datalog::DatalogError::ArityMismatch {
                predicate,
                seen,
                expected,
            } => EngineError::ArityMismatch {
                predicate,
                seen,
                expected,
            },
            other => unreachable!("only arity errors are converted: {other}"),
        }
    }
}

pub type CtxId = usize;

/// Variable bindings of one derivation.
pub type Bindings = BTreeMap<Variable, Value>;

#[derive(Debug, Clone)]
struct Row {
    bindings: Bindings,
    labels: Vec<LabelId>,
}

type Index = HashMap<Vec<Value>, Vec<usize>>;

#[derive(Debug, Default)]
struct Relation {
    facts: Vec<(Tuple, LabelId)>,
    /// Derived facts removed by restricting rules.
    removed: Vec<(Tuple, LabelId)>,
    /// Hash indexes over `facts`, keyed by the argument positions they
    /// cover. Built on first use.
    indexes: RefCell<HashMap<Vec<usize>, Rc<Index>>>,
}

impl Relation {
    fn index(&self, positions: &[usize]) -> Rc<Index> {
        if let Some(i) = self.indexes.borrow().get(positions) {
            return i.clone();
        }
        let mut index = Index::new();
        for (i, (t, _)) in self.facts.iter().enumerate() {
            if positions.iter().all(|&p| p < t.len()) {
                index.entry(positions.iter().map(|&p| t[p].clone()).collect()).or_default().push(i);
            }
        }
        let index = Rc::new(index);
        self.indexes.borrow_mut().insert(positions.to_vec(), index.clone());
        index
    }
}

#[derive(Debug, Clone, Default)]
struct Ctx {
    parent: Option<CtxId>,
    /// Heads of the rules this context added.
    assumed: BTreeSet<String>,
    visible: HashSet<RuleId>,
    regular: HashMap<String, Vec<Rc<Rule>>>,
    restricting: HashMap<String, Vec<Rc<Rule>>>,
    relations: HashMap<String, Rc<Relation>>,
    deps: HashMap<String, Rc<BTreeSet<String>>>,
}

impl Ctx {
    fn add(&mut self, rule: Rule) -> bool {
        if !self.visible.insert(rule.id) {
            return false;
        }
        let map = if rule.is_restricting() {
            &mut self.restricting
        } else {
            &mut self.regular
        };
        map.entry(rule.head.predicate.clone()).or_default().push(Rc::new(rule));
        true
    }

    fn child(&self, parent: CtxId) -> Ctx {
        Ctx {
            parent: Some(parent),
            assumed: BTreeSet::new(),
            visible: self.visible.clone(),
            regular: self.regular.clone(),
            restricting: self.restricting.clone(),
            relations: HashMap::new(),
            deps: HashMap::new(),
        }
    }
}

pub struct Engine {
    base: HashMap<String, Vec<Tuple>>,
    ctxs: Vec<Ctx>,
    children: HashMap<CtxId, HashMap<Vec<Rule>, CtxId>>,
    labels: LabelArena,
}

const ROOT: CtxId = 0;

fn check_rules(rules: &[Rule]) -> Result<(), EngineError> {
    for r in rules {
        check_safety(r)?;
    }
    Ok(())
}

impl Engine {
    /// Builds an engine over stored facts and rules. Rules are checked for
    /// safety, consistent arities and stratification.
    pub fn new(facts: &BTreeMap<String, Vec<Tuple>>, rules: Vec<Rule>) -> Result<Self, EngineError> {
        check_rules(&rules)?;
        let mut arities = check_arities(rules.iter())?;
        for (pred, tuples) in facts {
            for t in tuples {
                match arities.get(pred) {
                    Some(&n) if n != t.len() => {
                        return Err(EngineError::ArityMismatch {
                            predicate: pred.clone(),
                            seen: t.len(),
                            expected: n,
                        })
                    }
                    Some(_) => {}
                    None => {
                        arities.insert(pred.clone(), t.len());
                    }
                }
            }
        }
        check_stratified(&rules)?;
        let mut root = Ctx::default();
        for r in rules {
            root.add(r);
        }
        Ok(Engine {
            base: facts.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
            ctxs: vec![root],
            children: HashMap::new(),
            labels: LabelArena::default(),
        })
    }

    pub fn root(&self) -> CtxId {
        ROOT
    }

    /// The context obtained by assuming `rules` in `ctx`.
    pub fn extend(&mut self, ctx: CtxId, rules: Vec<Rule>) -> Result<CtxId, EngineError> {
        self.extend_with(ctx, &rules)
    }

    fn extend_with(&mut self, ctx: CtxId, rules: &[Rule]) -> Result<CtxId, EngineError> {
        if let Some(&c) = self.children.get(&ctx).and_then(|m| m.get(rules)) {
            return Ok(c);
        }
        check_rules(rules)?;
        let mut child = self.ctxs[ctx].child(ctx);
        for r in rules.iter().cloned() {
            let head = r.head.predicate.clone();
            if child.add(r) {
                child.assumed.insert(head);
            }
        }
        let all: Vec<Rule> = child
            .regular
            .values()
            .chain(child.restricting.values())
            .flatten()
            .map(|r| (**r).clone())
            .collect();
        stratify(&all)?;
        let id = self.ctxs.len();
        self.ctxs.push(child);
        self.children.entry(ctx).or_default().insert(rules.to_vec(), id);
        Ok(id)
    }

    fn deps(&mut self, ctx: CtxId, pred: &str) -> Rc<BTreeSet<String>> {
        if let Some(d) = self.ctxs[ctx].deps.get(pred) {
            return d.clone();
        }
        let c = &self.ctxs[ctx];
        let mut seen = BTreeSet::new();
        let mut stack = vec![pred.to_string()];
        while let Some(p) = stack.pop() {
            if !seen.insert(p.clone()) {
                continue;
            }
            for r in c.regular.get(&p).into_iter().chain(c.restricting.get(&p)).flatten() {
                for g in &r.body {
                    for q in g.predicates() {
                        if !seen.contains(&q) {
                            stack.push(q);
                        }
                    }
                }
            }
        }
        let d = Rc::new(seen);
        self.ctxs[ctx].deps.insert(pred.to_string(), d.clone());
        d
    }

    /// The outermost context in which `pred` has the same meaning as in `ctx`.
    fn resolve_ctx(&mut self, ctx: CtxId, pred: &str) -> CtxId {
        let deps = self.deps(ctx, pred);
        let mut cur = ctx;
        loop {
            let c = &self.ctxs[cur];
            if c.assumed.iter().any(|a| deps.contains(a)) {
                return cur;
            }
            match c.parent {
                Some(p) => cur = p,
                None => return cur,
            }
        }
    }

    fn ensure(&mut self, ctx: CtxId, pred: &str) -> Result<Rc<Relation>, EngineError> {
        let rc = self.resolve_ctx(ctx, pred);
        if let Some(r) = self.ctxs[rc].relations.get(pred) {
            return Ok(r.clone());
        }
        self.compute(rc, pred)?;
        Ok(self.ctxs[rc].relations[pred].clone())
    }

    /// Members of the recursive component of `pred` in `ctx`, or `None`
    /// when `pred` is not recursive.
    fn recursive_component(&self, ctx: CtxId, pred: &str) -> Option<Vec<String>> {
        let c = &self.ctxs[ctx];
        let mut graph: DiGraph<String, ()> = DiGraph::new();
        let mut index = HashMap::new();
        let mut stack = vec![pred.to_string()];
        index.insert(pred.to_string(), graph.add_node(pred.to_string()));
        let mut self_loop = false;
        while let Some(p) = stack.pop() {
            for r in c.regular.get(&p).into_iter().flatten() {
                for g in &r.body {
                    if let Goal::Atom(a) = g {
                        let q = &a.predicate;
                        if q == pred && p == pred {
                            self_loop = true;
                        }
                        let target = match index.get(q) {
                            Some(&n) => n,
                            None => {
                                let n = graph.add_node(q.clone());
                                index.insert(q.clone(), n);
                                stack.push(q.clone());
                                n
                            }
                        };
                        graph.update_edge(index[&p], target, ());
                    }
                }
            }
        }
        let start = index[pred];
        let scc = tarjan_scc(&graph).into_iter().find(|s| s.contains(&start))?;
        if scc.len() == 1 && !self_loop {
            return None;
        }
        let mut members: Vec<String> = scc.into_iter().map(|n| graph[n].clone()).collect();
        members.sort();
        Some(members)
    }

    fn restricted(&mut self, ctx: CtxId, pred: &str) -> Result<HashSet<Tuple>, EngineError> {
        let rules = self.ctxs[ctx].restricting.get(pred).cloned().unwrap_or_default();
        let mut out = HashSet::new();
        for r in rules {
            for row in self.eval_body(ctx, &r)? {
                out.insert(instantiate(&r, &row.bindings)?);
            }
        }
        Ok(out)
    }

    fn stored(&mut self, pred: &str) -> Vec<(Tuple, LabelId)> {
        let tuples = self.base.get(pred).cloned().unwrap_or_default();
        tuples
            .into_iter()
            .enumerate()
            .map(|(i, t)| (t, self.labels.stored(pred, i)))
            .collect()
    }

    fn compute(&mut self, ctx: CtxId, pred: &str) -> Result<(), EngineError> {
        match self.recursive_component(ctx, pred) {
            None => {
                let restricted = self.restricted(ctx, pred)?;
                let mut rel = Relation::default();
                let mut seen = HashSet::new();
                let mut derived = self.stored(pred);
                let rules = self.ctxs[ctx].regular.get(pred).cloned().unwrap_or_default();
                for r in rules {
                    for row in self.eval_body(ctx, &r)? {
                        let t = instantiate(&r, &row.bindings)?;
                        let l = self.labels.derived(r.id, row.labels);
                        derived.push((t, l));
                    }
                }
                for (t, l) in derived {
                    if !seen.insert((t.clone(), l)) {
                        continue;
                    }
                    if restricted.contains(&t) {
                        rel.removed.push((t, l));
                    } else {
                        rel.facts.push((t, l));
                    }
                }
                self.ctxs[ctx].relations.insert(pred.to_string(), Rc::new(rel));
            }
            Some(members) => {
                let mut restricted = HashMap::new();
                let mut sets: HashMap<String, HashSet<Tuple>> = HashMap::new();
                let mut rels: HashMap<String, Relation> = HashMap::new();
                for m in &members {
                    restricted.insert(m.clone(), self.restricted(ctx, m)?);
                    let mut rel = Relation::default();
                    let mut set = HashSet::new();
                    for (t, l) in self.stored(m) {
                        if restricted[m].contains(&t) {
                            rel.removed.push((t, l));
                        } else if set.insert(t.clone()) {
                            rel.facts.push((t, l));
                        }
                    }
                    sets.insert(m.clone(), set);
                    rels.insert(m.clone(), rel);
                }
                loop {
                    for m in &members {
                        let snapshot = Relation {
                            facts: rels[m].facts.clone(),
                            ..Relation::default()
                        };
                        self.ctxs[ctx].relations.insert(m.clone(), Rc::new(snapshot));
                    }
                    let mut changed = false;
                    for m in &members {
                        let rules = self.ctxs[ctx].regular.get(m).cloned().unwrap_or_default();
                        for r in rules {
                            for row in self.eval_body(ctx, &r)? {
                                let t = instantiate(&r, &row.bindings)?;
                                if sets[m].contains(&t) {
                                    continue;
                                }
                                let l = self.labels.derived(r.id, row.labels);
                                let rel = rels.get_mut(m).expect("member");
                                if restricted[m].contains(&t) {
                                    if !rel.removed.iter().any(|(u, _)| *u == t) {
                                        rel.removed.push((t, l));
                                    }
                                } else {
                                    sets.get_mut(m).expect("member").insert(t.clone());
                                    rel.facts.push((t, l));
                                    changed = true;
                                }
                            }
                        }
                    }
                    if !changed {
                        break;
                    }
                }
                for (m, rel) in rels {
                    self.ctxs[ctx].relations.insert(m, Rc::new(rel));
                }
            }
        }
        Ok(())
    }

    fn eval_body(&mut self, ctx: CtxId, rule: &Rule) -> Result<Vec<Row>, EngineError> {
        let order = plan(rule)?;
        let mut rows = vec![Row {
            bindings: Bindings::new(),
            labels: Vec::new(),
        }];
        for i in order {
            if rows.is_empty() {
                break;
            }
            rows = self.eval_goal(ctx, &rule.body[i], rows)?;
        }
        Ok(rows)
    }

    fn eval_goal(&mut self, ctx: CtxId, goal: &Goal, rows: Vec<Row>) -> Result<Vec<Row>, EngineError> {
        if rows.is_empty() {
            return Ok(rows);
        }
        match goal {
            Goal::Atom(a) => {
                let rel = self.ensure(ctx, &a.predicate)?;
                let mut out = Vec::new();
                if rel.facts.is_empty() {
                    return Ok(out);
                }
                let mut emit = |row: &Row, (t, l): &(Tuple, LabelId)| {
                    if let Some(b) = match_atom(a, t, &row.bindings) {
                        let mut labels = row.labels.clone();
                        labels.push(*l);
                        out.push(Row { bindings: b, labels });
                    }
                };
                for row in &rows {
                    let mut positions = Vec::new();
                    let mut key = Vec::new();
                    for (i, arg) in a.args.iter().enumerate() {
                        let v = match arg {
                            Term::Const(c) => Some(c),
                            Term::Var(x) => row.bindings.get(x),
                        };
                        if let Some(v) = v {
                            positions.push(i);
                            key.push(v.clone());
                        }
                    }
                    if positions.is_empty() {
                        rel.facts.iter().for_each(|f| emit(row, f));
                    } else if let Some(ids) = rel.index(&positions).get(&key) {
                        ids.iter().for_each(|&i| emit(row, &rel.facts[i]));
                    }
                }
                Ok(out)
            }
            Goal::Not(inner) => {
                // Rows often agree on the variables the test reads, so each
                // distinct key is decided once.
                let vars: Vec<Variable> = goal_vars(inner).into_iter().collect();
                let mut seen: HashMap<Vec<Option<Value>>, bool> = HashMap::new();
                let mut out = Vec::new();
                for row in rows {
                    let key: Vec<Option<Value>> = vars.iter().map(|v| row.bindings.get(v).cloned()).collect();
                    let holds = match seen.get(&key) {
                        Some(&h) => h,
                        None => {
                            let h = self.holds(ctx, inner, &row.bindings)?;
                            seen.insert(key, h);
                            h
                        }
                    };
                    if !holds {
                        out.push(row);
                    }
                }
                Ok(out)
            }
            Goal::Compare { lhs, op, rhs } => {
                let mut out = Vec::new();
                for row in rows {
                    let l = term_value(lhs, &row.bindings)?;
                    let r = term_value(rhs, &row.bindings)?;
                    let ord = l.try_cmp(&r).ok_or_else(|| EngineError::TypeError {
                        lhs: l.clone(),
                        rhs: r.clone(),
                    })?;
                    if op.holds(ord) {
                        out.push(row);
                    }
                }
                Ok(out)
            }
            Goal::Implies {
                antecedent,
                consequent,
            } => {
                let child = self.extend_with(ctx, antecedent)?;
                self.eval_goal(child, consequent, rows)
            }
        }
    }

    /// Whether `goal` has at least one solution extending `b`.
    fn holds(&mut self, ctx: CtxId, goal: &Goal, b: &Bindings) -> Result<bool, EngineError> {
        match goal {
            Goal::Atom(a) => {
                let rel = self.ensure(ctx, &a.predicate)?;
                let mut positions = Vec::new();
                let mut key = Vec::new();
                for (i, arg) in a.args.iter().enumerate() {
                    let v = match arg {
                        Term::Const(c) => Some(c),
                        Term::Var(x) => b.get(x),
                    };
                    if let Some(v) = v {
                        positions.push(i);
                        key.push(v.clone());
                    }
                }
                let mut candidates: Box<dyn Iterator<Item = &Tuple>> = if positions.is_empty() {
                    Box::new(rel.facts.iter().map(|(t, _)| t))
                } else {
                    let index = rel.index(&positions);
                    let ids = index.get(&key).cloned().unwrap_or_default();
                    Box::new(ids.into_iter().map(|i| &rel.facts[i].0))
                };
                Ok(candidates.any(|t| match_atom(a, t, b).is_some()))
            }
            Goal::Not(inner) => Ok(!self.holds(ctx, inner, b)?),
            Goal::Compare { .. } => {
                let row = Row {
                    bindings: b.clone(),
                    labels: Vec::new(),
                };
                Ok(!self.eval_goal(ctx, goal, vec![row])?.is_empty())
            }
            Goal::Implies {
                antecedent,
                consequent,
            } => {
                let child = self.extend_with(ctx, antecedent)?;
                self.holds(child, consequent, b)
            }
        }
    }

    /// Bag of tuples of `pred` in `ctx`, restricting rules applied.
    pub fn meaning(&mut self, ctx: CtxId, pred: &str) -> Result<Vec<Tuple>, EngineError> {
        let rel = self.ensure(ctx, pred)?;
        Ok(rel.facts.iter().map(|(t, _)| t.clone()).collect())
    }

    /// Bag of tuples of `pred` in `ctx` before restricting rules remove any.
    pub fn regular_meaning(&mut self, ctx: CtxId, pred: &str) -> Result<Vec<Tuple>, EngineError> {
        let rel = self.ensure(ctx, pred)?;
        Ok(rel.facts.iter().chain(&rel.removed).map(|(t, _)| t.clone()).collect())
    }

    /// Solves a conjunction of goals in `ctx`. Returns one binding per
    /// derivation.
    pub fn solve(&mut self, ctx: CtxId, goals: &[Goal]) -> Result<Vec<Bindings>, EngineError> {
        let probe = Rule::new(
            RuleId::new(crate::datalog::Origin::User, u32::MAX),
            Atom::new("$query", Vec::new()),
            goals.to_vec(),
        );
        if let Some(r) = goals.iter().find_map(|g| match g {
            Goal::Implies { antecedent, .. } => Some(antecedent),
            _ => None,
        }) {
            check_rules(r)?;
        }
        let rows = self.eval_body(ctx, &probe)?;
        Ok(rows.into_iter().map(|r| r.bindings).collect())
    }

    /// Number of distinct derivation labels created so far.
    pub fn label_count(&self) -> usize {
        self.labels.len()
    }
}

fn term_value(t: &Term, b: &Bindings) -> Result<Value, EngineError> {
    match t {
        Term::Const(v) => Ok(v.clone()),
        Term::Var(v) => b.get(v).cloned().ok_or_else(|| {
            EngineError::UnsafeRule(UnsafeRule {
                rule: String::new(),
                variable: v.to_string(),
                reason: "is not bound when evaluated".into(),
            })
        }),
    }
}

fn instantiate(rule: &Rule, b: &Bindings) -> Result<Tuple, EngineError> {
    rule.head
        .args
        .iter()
        .map(|t| {
            term_value(t, b).map_err(|_| {
                EngineError::UnsafeRule(UnsafeRule {
                    rule: rule.to_string(),
                    variable: t.to_string(),
                    reason: "in the head is not bound".into(),
                })
            })
        })
        .collect()
}

fn match_atom(a: &Atom, t: &Tuple, b: &Bindings) -> Option<Bindings> {
    if a.args.len() != t.len() {
        return None;
    }
    let mut out: Option<Bindings> = None;
    for (arg, v) in a.args.iter().zip(t) {
        match arg {
            Term::Const(c) => {
                if c != v {
                    return None;
                }
            }
            Term::Var(x) => {
                let cur = out.as_ref().unwrap_or(b);
                match cur.get(x) {
                    Some(bound) if bound != v => return None,
                    Some(_) => {}
                    None => {
                        out.get_or_insert_with(|| b.clone()).insert(x.clone(), v.clone());
                    }
                }
            }
        }
    }
    Some(out.unwrap_or_else(|| b.clone()))
}

fn goal_vars(g: &Goal) -> BTreeSet<Variable> {
    let mut vs = BTreeSet::new();
    g.outer_vars(&mut vs);
    vs
}

/// Whether a goal can produce bindings, and which variables it binds.
fn binds(g: &Goal) -> Option<BTreeSet<Variable>> {
    match g {
        Goal::Atom(_) => Some(goal_vars(g)),
        Goal::Implies { consequent, .. } => binds(consequent),
        _ => None,
    }
}

/// Evaluation order of a rule body: generators left to right, each test
/// as soon as the variables it shares with the rest of the rule are bound.
fn plan(rule: &Rule) -> Result<Vec<usize>, EngineError> {
    let vars: Vec<BTreeSet<Variable>> = rule.body.iter().map(goal_vars).collect();
    let mut head = BTreeSet::new();
    crate::datalog::collect_atom_vars(&rule.head, &mut head);
    let needed = |i: usize| -> BTreeSet<Variable> {
        vars[i]
            .iter()
            .filter(|v| {
                head.contains(*v) || vars.iter().enumerate().any(|(j, other)| j != i && other.contains(*v))
            })
            .cloned()
            .collect()
    };
    let mut bound = BTreeSet::new();
    let mut remaining: Vec<usize> = (0..rule.body.len()).collect();
    let mut order = Vec::new();
    while !remaining.is_empty() {
        let ready_test = remaining.iter().position(|&i| {
            let g = &rule.body[i];
            binds(g).is_none() && {
                let need = if matches!(g, Goal::Compare { .. }) {
                    vars[i].clone()
                } else {
                    needed(i)
                };
                need.is_subset(&bound)
            }
        });
        let pick = match ready_test {
            Some(p) => p,
            None => match remaining.iter().position(|&i| binds(&rule.body[i]).is_some()) {
                Some(p) => p,
                None => {
                    let i = remaining[0];
                    let missing = vars[i].difference(&bound).next().cloned();
                    return Err(EngineError::UnsafeRule(UnsafeRule {
                        rule: rule.to_string(),
                        variable: missing.map(|v| v.to_string()).unwrap_or_default(),
                        reason: "is never bound by a positive goal".into(),
                    }));
                }
            },
        };
        let i = remaining.remove(pick);
        if let Some(bs) = binds(&rule.body[i]) {
            bound.extend(bs);
        }
        order.push(i);
    }
    Ok(order)
}

#[cfg(test)]
mod tests;
