//! A deductive database that answers SQL queries with hypothetical
//! reasoning. SQL (with `WITH`, `ASSUME`, `UNION ALL` and `[NOT] IN`
//! subqueries) is compiled to Hypothetical Datalog with embedded
//! implications and evaluated under stratified bag semantics.
//!
//! ```
//! use hypoteq::session::Session;
//!
//! let mut s = Session::new();
//! s.eval("create table student(name string)").unwrap();
//! s.eval("insert into student values ('adam'), ('bob')").unwrap();
//! let a = s.query("assume select 'eve' in student select * from student").unwrap();
//! assert_eq!(a.rows.len(), 3);
//! ```

pub mod datalog;
pub mod engine;
pub mod era;
pub mod http;
pub mod persist;
pub mod session;
pub mod sql;
pub mod translate;
pub mod value;
