//! Checks the compiled Datalog against a direct evaluation of the SQL.

use std::error::Error;

use hypoteq::era::{compare_answers, eval_era, Comparison};
use hypoteq::session::Session;
use hypoteq::sql::{parse_query, resolve_query};

const DEMO: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/students.sql"));

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mut s = Session::new();
    for stmt in hypoteq::session::split_script(DEMO) {
        s.eval(&stmt)?;
    }
    let queries = [
        "select * from student where name not in (select name from take)",
        "select s.name, t.title from student s, take t where s.name = t.name or t.title = 'lp'",
        "assume select 'bob','db' in take select name from take where title = 'db'",
        "with db(n) as (select name from take where title = 'db') \
         assume select 'pete' not in student select * from student where name in (select n from db)",
    ];
    for sql in queries {
        let q = resolve_query(&parse_query(sql)?, s.database().catalog())?;
        let oracle = eval_era(&q, s.database().facts())?;
        let engine = s.query(sql)?.rows;
        let verdict = compare_answers(&engine, &oracle);
        println!("{:>3} tuples  {:?}  {sql}", engine.len(), verdict);
        assert_eq!(verdict, Comparison::Equal);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
