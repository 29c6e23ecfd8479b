//! Hypothetical queries: ASSUME adds or removes tuples for one query only.

use std::error::Error;

use hypoteq::session::Session;

const DEMO: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/students.sql"));

fn names(s: &Session, sql: &str) -> Result<Vec<String>, Box<dyn Error>> {
    let a = s.query(sql)?;
    Ok(a.rows.iter().map(|t| t[0].to_string()).collect())
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mut s = Session::new();
    for stmt in hypoteq::session::split_script(DEMO) {
        s.eval(&stmt)?;
    }
    let grad = "select t1.name from take t1, take t2 \
                where t1.name = t2.name and t1.title = 'db' and t2.title = 'lp'";

    let now = names(&s, grad)?;
    println!("graduating today: {now:?}");

    // what if scott also passed db?
    let scott = names(&s, &format!("assume select 'scott','db' in take {grad}"))?;
    println!("if scott took db: {scott:?}");

    // and what if pete dropped lp?
    let both = names(
        &s,
        &format!("assume select 'scott','db' in take, select 'pete','lp' not in take {grad}"),
    )?;
    println!("if pete also dropped lp: {both:?}");

    // assumptions nest, and each level sees the ones around it
    let nested = s.query(
        "ASSUME SELECT 1 IN r(a), (ASSUME SELECT 2 IN r(a) SELECT * FROM r) IN s SELECT * FROM r,s",
    )?;
    let pairs: Vec<String> = nested.rows.iter().map(|t| format!("({},{})", t[0], t[1])).collect();
    println!("nested: {}", pairs.join(" "));

    assert_eq!(now, ["pete"]);
    assert_eq!(scott, ["pete", "scott"]);
    assert_eq!(both, ["scott"]);
    assert_eq!(pairs, ["(1,1)", "(1,2)"]);
    assert_eq!(names(&s, grad)?, now, "the database is unchanged");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
