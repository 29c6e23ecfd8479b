use super::*;
use crate::datalog::{parse_datalog, parse_goal_list, parse_rule};

fn demo_facts() -> BTreeMap<String, Vec<Tuple>> {
    let mut f = BTreeMap::new();
    f.insert(
        "student".to_string(),
        ["adam", "bob", "pete", "scott"].iter().map(|s| vec![Value::str(*s)]).collect(),
    );
    f.insert(
        "take".to_string(),
        [("adam", "db"), ("pete", "db"), ("pete", "lp"), ("scott", "lp")]
            .iter()
            .map(|(a, b)| vec![Value::str(*a), Value::str(*b)])
            .collect(),
    );
    f
}

fn answers(rules: &str, facts: BTreeMap<String, Vec<Tuple>>) -> Vec<String> {
    let mut e = Engine::new(&facts, parse_datalog(rules).unwrap().rules).unwrap();
    let root = e.root();
    let mut out: Vec<String> = e
        .meaning(root, "answer")
        .unwrap()
        .iter()
        .map(|t| t.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","))
        .collect();
    out.sort();
    out
}

#[test]
fn negation_with_underscore() {
    assert_eq!(answers("answer(A) :- student(A), not take(A,_B).", demo_facts()), vec!["bob"]);
}

#[test]
fn embedded_implication() {
    assert_eq!(
        answers(
            "answer(A) :- (grad(B) :- student(B), take(B,db), take(B,lp)) => grad(A).",
            demo_facts()
        ),
        vec!["pete"]
    );
}

#[test]
fn assumed_facts_and_restricting_fact() {
    assert_eq!(
        answers(
            "answer(A) :- -student(adam) /\\ take(adam,lp) /\\ take(scott,db) /\\ \
             (grad(B) :- student(B), take(B,lp), take(B,db)) => grad(A).",
            demo_facts()
        ),
        vec!["pete", "scott"]
    );
}

#[test]
fn nested_contexts() {
    let rules = "answer(A,B) :- r(1) /\\ (s(C) :- (r(2) => r(C))) => goal(A,B).
                 goal(A,B) :- r(A), s(B).";
    assert_eq!(answers(rules, BTreeMap::new()), vec!["1,1", "1,2"]);
}

#[test]
fn bag_semantics_counts_derivations() {
    let rules = "answer(A) :- take(A,_B). answer(A) :- student(A), A = bob.";
    assert_eq!(
        answers(rules, demo_facts()),
        vec!["adam", "bob", "pete", "pete", "scott"]
    );
}

#[test]
fn assumed_duplicate_adds_occurrence() {
    let rules = "answer(A) :- student(bob) => student(A).";
    assert_eq!(answers(rules, demo_facts()), vec!["adam", "bob", "bob", "pete", "scott"]);
}

#[test]
fn restricting_removes_every_occurrence() {
    let rules = "answer(A) :- student(bob) /\\ -student(bob) => student(A).";
    assert_eq!(answers(rules, demo_facts()), vec!["adam", "pete", "scott"]);
}

#[test]
fn recursion_uses_set_semantics() {
    let rules = "anc(X,Y) :- par(X,Y). anc(X,Y) :- par(X,Z), anc(Z,Y). answer(X,Y) :- anc(X,Y).";
    let mut f = BTreeMap::new();
    f.insert(
        "par".to_string(),
        vec![
            vec![Value::Int(1), Value::Int(2)],
            vec![Value::Int(2), Value::Int(3)],
            vec![Value::Int(1), Value::Int(3)],
        ],
    );
    assert_eq!(answers(rules, f), vec!["1,2", "1,3", "2,3"]);
}

#[test]
fn recursion_inside_context() {
    let rules = "anc(X,Y) :- par(X,Y). anc(X,Y) :- par(X,Z), anc(Z,Y). answer(Y) :- par(3,4) => anc(1,Y).";
    let mut f = BTreeMap::new();
    f.insert(
        "par".to_string(),
        vec![vec![Value::Int(1), Value::Int(2)], vec![Value::Int(2), Value::Int(3)]],
    );
    assert_eq!(answers(rules, f), vec!["2", "3", "4"]);
}

#[test]
fn context_isolation() {
    let mut e = Engine::new(&demo_facts(), Vec::new()).unwrap();
    let root = e.root();
    let before = e.meaning(root, "student").unwrap();
    let goals = parse_goal_list("student(zoe) /\\ -student(adam) => student(X)").unwrap();
    assert_eq!(e.solve(root, &goals).unwrap().len(), 4);
    assert_eq!(e.meaning(root, "student").unwrap(), before);
}

#[test]
fn restricted_is_subset_of_regular() {
    let mut e = Engine::new(&demo_facts(), Vec::new()).unwrap();
    let ctx = e
        .extend(e.root(), vec![parse_rule("-student(X) :- take(X,lp).").unwrap()])
        .unwrap();
    let restricted = e.meaning(ctx, "student").unwrap();
    let regular = e.regular_meaning(ctx, "student").unwrap();
    assert_eq!(restricted.len(), 2);
    assert_eq!(regular.len(), 4);
    assert!(restricted.iter().all(|t| regular.contains(t)));
}

#[test]
fn comparison_type_error() {
    let mut e = Engine::new(&demo_facts(), Vec::new()).unwrap();
    let goals = parse_goal_list("student(X), X < 3").unwrap();
    assert!(matches!(e.solve(0, &goals), Err(EngineError::TypeError { .. })));
}

#[test]
fn unsafe_and_unstratifiable_programs_rejected() {
    let facts = BTreeMap::new();
    assert!(matches!(
        Engine::new(&facts, parse_datalog("p(X) :- not q(X).").unwrap().rules),
        Err(EngineError::UnsafeRule(_))
    ));
    assert!(matches!(
        Engine::new(&facts, parse_datalog("p :- not p.").unwrap().rules),
        Err(EngineError::NotStratifiable { .. })
    ));
}

#[test]
fn database_conversions() {
    let mut db = Database::new();
    db.create_table(crate::sql::Schema::new(
        "m",
        vec![("x".into(), crate::sql::SqlType::float())],
    ))
    .unwrap();
    db.insert("m", vec![Value::Int(2)]).unwrap();
    assert_eq!(db.facts()["m"], vec![vec![Value::float(2.0)]]);
    assert!(db.insert("m", vec![Value::str("a")]).is_err());
    db.assert_rule(parse_rule("p(X) :- m(X).").unwrap()).unwrap();
    let mut e = db.engine(Vec::new()).unwrap();
    assert_eq!(e.meaning(0, "p").unwrap(), vec![vec![Value::float(2.0)]]);
}
