//! Saving a database to the text format and loading it back.

use std::error::Error;

use hypoteq::persist::{load_db, save_db};
use hypoteq::session::Session;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mut s = Session::new();
    s.eval("create table emp(name string, salary float)")?;
    s.eval("insert into emp values ('ann', 1200), ('bo', 950.5)")?;
    s.eval("rich(X) :- emp(X,S), S > 1000.")?;
    let text = save_db(s.database());
    print!("{text}");
    let back = load_db(&text)?;
    assert_eq!(&back, s.database());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
