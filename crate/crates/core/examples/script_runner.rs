//! Runs the sample script the way `hypoteq --script` does.

use std::error::Error;

use hypoteq::session::{run_script, Session};

const SCRIPT: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/sessions.hq"));

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mut s = Session::new();
    let mut out = Vec::new();
    let errors = run_script(&mut s, SCRIPT, false, &mut out)?;
    let text = String::from_utf8(out)?;
    print!("{text}");
    assert_eq!(errors, 0);
    assert!(text.contains("{ answer(pete), answer(scott) }"));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
