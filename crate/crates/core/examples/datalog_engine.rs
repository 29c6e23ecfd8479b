//! The Datalog engine on its own: recursion, stratified negation,
//! embedded implications and restricting rules.

use std::collections::BTreeMap;
use std::error::Error;

use hypoteq::datalog::parse_datalog;
use hypoteq::engine::{Engine, EngineError};
use hypoteq::value::{Tuple, Value};

fn show(rows: &[Tuple]) -> Vec<String> {
    let mut v: Vec<String> = rows
        .iter()
        .map(|t| t.iter().map(Value::to_string).collect::<Vec<_>>().join(","))
        .collect();
    v.sort();
    v
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mut facts = BTreeMap::new();
    facts.insert(
        "edge".to_string(),
        vec![vec![Value::Int(1), Value::Int(2)], vec![Value::Int(2), Value::Int(3)]],
    );
    let program = parse_datalog(
        "path(X,Y) :- edge(X,Y).
         path(X,Y) :- edge(X,Z), path(Z,Y).
         unreachable(X) :- edge(X,_), not path(_Y,X).
         % would 3 reach 1 if we added the edge 3-1?
         cycle(X) :- edge(3,1) => path(X,X).
         % paths that avoid the edge 1-2
         -avoid(1,2).
         avoid(X,Y) :- path(X,Y).",
    )?;
    let mut e = Engine::new(&facts, program.rules)?;
    let root = e.root();
    for pred in ["path", "unreachable", "cycle", "avoid"] {
        println!("{pred}: {:?}", show(&e.meaning(root, pred)?));
    }
    assert_eq!(show(&e.meaning(root, "cycle")?), ["1", "2", "3"]);
    assert!(!show(&e.meaning(root, "avoid")?).contains(&"1,2".to_string()));

    // evaluation in a context never leaks into the base
    assert!(!show(&e.meaning(root, "path")?).contains(&"3,1".to_string()));

    let bad = parse_datalog("p :- not p.")?;
    match Engine::new(&facts, bad.rules) {
        Err(EngineError::NotStratifiable { predicates }) => println!("rejected: {predicates:?}"),
        Err(e) => panic!("expected a stratification error, got {e}"),
        Ok(_) => panic!("`p :- not p` was accepted"),
    }
    let unsafe_rule = parse_datalog("q(X) :- not edge(X,Y).")?;
    assert!(matches!(Engine::new(&facts, unsafe_rule.rules), Err(EngineError::UnsafeRule(_))));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
