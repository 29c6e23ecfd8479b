//! The translator introduces auxiliary `goalN` predicates; fold/unfold
//! inlines the ones that are defined by a single rule.

use std::collections::BTreeSet;
use std::error::Error;

use hypoteq::sql::{parse_query, resolve_query, Catalog, Schema, SqlType};
use hypoteq::translate::{translate, Options};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let catalog: Catalog = [
        Schema::new("student", vec![("name".into(), SqlType::string())]),
        Schema::new(
            "take",
            vec![("name".into(), SqlType::string()), ("title".into(), SqlType::string())],
        ),
    ]
    .into_iter()
    .collect();
    let q = resolve_query(
        &parse_query("select * from student where name not in (select name from take)")?,
        &catalog,
    )?;
    let reserved = BTreeSet::new();
    for fold_unfold in [false, true] {
        let t = translate(&q, "answer", &reserved, Options { fold_unfold });
        println!("fold_unfold = {fold_unfold}");
        for r in &t.rules {
            println!("  {r}");
        }
        assert_eq!(t.rules.len(), if fold_unfold { 1 } else { 2 });
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
