use std::collections::{BTreeMap, BTreeSet, HashMap};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use super::EngineError;
use crate::datalog::{Goal, Rule};

/// Dependency edges of a rule. Negation, embedded implications and
/// restricting rules give strict edges. Rules inside an antecedent only
/// exist in the context the implication opens, so they are not followed.
fn collect_edges(rule: &Rule, out: &mut Vec<(String, String, bool)>) {
    let head = &rule.head.predicate;
    for g in &rule.body {
        match g {
            Goal::Atom(a) => out.push((head.clone(), a.predicate.clone(), rule.is_restricting())),
            Goal::Compare { .. } => {}
            Goal::Not(_) | Goal::Implies { .. } => {
                for p in g.predicates() {
                    out.push((head.clone(), p, true));
                }
            }
        }
    }
}

/// Checks `rules` and, for every embedded implication, the program of the
/// context it opens: `rules` plus the antecedents enclosing it.
pub fn check_stratified(rules: &[Rule]) -> Result<(), EngineError> {
    stratify(rules)?;
    let goals: Vec<&Goal> = rules.iter().flat_map(|r| &r.body).collect();
    check_implications(rules, &goals)
}

fn check_implications(program: &[Rule], goals: &[&Goal]) -> Result<(), EngineError> {
    for g in goals {
        match g {
            Goal::Not(inner) => check_implications(program, &[&**inner])?,
            Goal::Implies {
                antecedent,
                consequent,
            } => {
                let mut extended = program.to_vec();
                extended.extend(antecedent.iter().cloned());
                stratify(&extended)?;
                let mut inner: Vec<&Goal> = antecedent.iter().flat_map(|r| &r.body).collect();
                inner.push(consequent);
                check_implications(&extended, &inner)?;
            }
            _ => {}
        }
    }
    Ok(())
}

/// Assigns a stratum to every predicate, or reports the predicates of a
/// cycle that goes through a strict edge.
pub fn stratify(rules: &[Rule]) -> Result<BTreeMap<String, usize>, EngineError> {
    let mut edges = Vec::new();
    let mut preds = BTreeSet::new();
    for r in rules {
        collect_edges(r, &mut edges);
        r.for_each_atom(&mut |a| {
            preds.insert(a.predicate.clone());
        });
    }
    let mut graph: DiGraph<String, bool> = DiGraph::new();
    let mut nodes: HashMap<String, NodeIndex> = HashMap::new();
    for p in &preds {
        nodes.insert(p.clone(), graph.add_node(p.clone()));
    }
    for (from, to, strict) in &edges {
        graph.add_edge(nodes[from], nodes[to], *strict);
    }
    let sccs = tarjan_scc(&graph);
    let mut component = vec![0usize; graph.node_count()];
    for (i, scc) in sccs.iter().enumerate() {
        for n in scc {
            component[n.index()] = i;
        }
    }
    for e in graph.edge_indices() {
        let (a, b) = graph.edge_endpoints(e).expect("edge exists");
        if graph[e] && component[a.index()] == component[b.index()] {
            let mut members: Vec<String> = sccs[component[a.index()]].iter().map(|n| graph[*n].clone()).collect();
            members.sort();
            return Err(EngineError::NotStratifiable { predicates: members });
        }
    }
    // components come out dependencies first
    let mut level = vec![1usize; sccs.len()];
    for (i, scc) in sccs.iter().enumerate() {
        let mut l = 1;
        for n in scc {
            for e in graph.edges(*n) {
                use petgraph::visit::EdgeRef;
                let c = component[e.target().index()];
                if c != i {
                    l = l.max(level[c] + usize::from(*e.weight()));
                }
            }
        }
        level[i] = l;
    }
    Ok(graph
        .node_indices()
        .map(|n| (graph[n].clone(), level[component[n.index()]]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::parse_datalog;

    fn strata(text: &str) -> Result<BTreeMap<String, usize>, EngineError> {
        stratify(&parse_datalog(text).unwrap().rules)
    }

    fn check(text: &str) -> Result<(), EngineError> {
        check_stratified(&parse_datalog(text).unwrap().rules)
    }

    #[test]
    fn negation_raises_level() {
        let s = strata("p(X) :- q(X), not r(X). r(X) :- s(X).").unwrap();
        assert_eq!(s["r"], 1);
        assert_eq!(s["p"], 2);
    }

    #[test]
    fn self_negation_rejected() {
        assert!(matches!(strata("p :- not p."), Err(EngineError::NotStratifiable { .. })));
    }

    #[test]
    fn positive_recursion_allowed() {
        let s = strata("anc(X,Y) :- par(X,Y). anc(X,Y) :- par(X,Z), anc(Z,Y).").unwrap();
        assert_eq!(s["anc"], 1);
    }

    #[test]
    fn implication_and_restricting_edges_are_strict() {
        assert!(strata("p(X) :- (q(1) => p(X)).").is_err());
        assert!(check("p(X) :- (-q(Y) :- q(Y)) => r(X).").is_err());
        assert!(check("p(X) :- (q(Y) :- s(Y)) => q(X).").is_ok());
    }

    #[test]
    fn antecedents_are_checked_in_their_own_context() {
        // each context is stratified on its own; the union of both is not
        let two_contexts = "a(X) :- (r(Y) :- s(Y)) => r(X).
                            b(X) :- (s(Y) :- t(Y), not g(Y)) => s(X).
                            g(Y) :- r(Y).";
        assert!(check(two_contexts).is_ok());
        // a cycle that only appears once the antecedent is added
        let nested = "a(X) :- (r(Y) :- t(Y), not g(Y)) => r(X). g(Y) :- r(Y).";
        assert!(matches!(check(nested), Err(EngineError::NotStratifiable { .. })));
        // nested antecedents accumulate
        let deep = "a(X) :- (r(Y) :- t(Y), not g(Y)) => ((g(Z) :- r(Z)) => r(X)).";
        assert!(check(deep).is_err());
    }
}
