//! Answers are multisets: duplicates from joins, UNION ALL and assumptions
//! are kept and counted.

use std::error::Error;

use hypoteq::session::Session;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mut s = Session::new();
    s.eval("create table sale(item string, qty int)")?;
    s.eval("insert into sale values ('pen', 1), ('pen', 1), ('ink', 2)")?;

    let a = s.query("select item from sale")?;
    for (t, n) in a.grouped() {
        println!("{} x{n}", t[0]);
    }

    let u = s.query("select item from sale union all select item from sale where qty = 2")?;
    println!("{}", hypoteq::session::tuples_info(u.rows.len()));

    // an assumed tuple equal to a stored one is one more occurrence
    let more = s.query("assume select 'ink', 2 in sale select * from sale where item = 'ink'")?;
    // NOT IN removes every occurrence
    let fewer = s.query("assume select 'pen', 1 not in sale select * from sale")?;

    assert_eq!(a.grouped().len(), 2);
    assert_eq!(u.rows.len(), 4);
    assert_eq!(more.rows.len(), 2);
    assert_eq!(fewer.rows.len(), 1);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
