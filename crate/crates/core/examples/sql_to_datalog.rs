//! Compiles SQL queries to Hypothetical Datalog without evaluating them.

use std::error::Error;

use hypoteq::session::Session;

const DEMO: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/students.sql"));

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mut s = Session::new();
    for stmt in hypoteq::session::split_script(DEMO) {
        s.eval(&stmt)?;
    }
    let queries = [
        "select * from student where name not in (select name from take)",
        "select name from take where title = 'db' or title = 'lp'",
        "select * from student union all select name from take",
        "with grad(name) as (select t1.name from take t1, take t2 \
         where t1.name = t2.name and t1.title = 'db' and t2.title = 'lp') select * from grad",
    ];
    for q in queries {
        let c = s.compile(q)?;
        println!("{q}\n  schema: {}", c.schema);
        for rule in c.listing() {
            for line in rule.lines() {
                println!("  {line}");
            }
        }
    }
    let c = s.compile(queries[0])?;
    assert_eq!(c.listing(), vec!["answer(A) :- student(A), not take(A,_B)."]);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
