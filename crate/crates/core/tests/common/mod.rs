//! Random databases and queries for differential testing.
#![allow(dead_code)]

pub mod checks;

use std::collections::BTreeMap;

use hypoteq::engine::Database;
use hypoteq::session::Session;
use hypoteq::sql::{Schema, SqlType};
use hypoteq::value::{Tuple, Value};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub const DEMO: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/students.sql"));

pub fn demo_session() -> Session {
    let mut s = Session::new();
    for stmt in hypoteq::session::split_script(DEMO) {
        s.eval(&stmt).unwrap();
    }
    s
}

/// Which constructs a generated query uses.
#[derive(Debug, Default, Clone, Copy)]
pub struct Features {
    pub with: bool,
    pub assume: bool,
    pub assume_not_in: bool,
    pub union_all: bool,
    pub not_in: bool,
    pub depth: usize,
}

#[derive(Debug, Clone)]
pub struct Case {
    pub db: Database,
    pub sql: String,
    pub features: Features,
}

pub struct Gen {
    rng: StdRng,
    fresh: usize,
    pub features: Features,
}

#[derive(Clone)]
struct Rel {
    name: String,
    arity: usize,
}

fn cols(prefix: &str, n: usize) -> String {
    (1..=n).map(|i| format!("{prefix}c{i}")).collect::<Vec<_>>().join(", ")
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen {
            rng: StdRng::seed_from_u64(seed),
            fresh: 0,
            features: Features::default(),
        }
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.random_bool(p)
    }

    fn lit(&mut self) -> i64 {
        self.rng.random_range(0..4)
    }

    fn fresh(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        format!("{prefix}{}", self.fresh)
    }

    /// Up to four relations `r0..r3` of arity 1 or 2 with up to eight rows
    /// over a small domain, so joins and memberships hit often.
    pub fn database(&mut self) -> (Database, Vec<(String, usize)>) {
        let mut db = Database::new();
        let n = self.rng.random_range(1..=4);
        let mut rels = Vec::new();
        for i in 0..n {
            let name = format!("r{i}");
            let arity = self.rng.random_range(1..=2);
            let columns = (1..=arity).map(|c| (format!("c{c}"), SqlType::int())).collect();
            db.create_table(Schema::new(name.clone(), columns)).unwrap();
            for _ in 0..self.rng.random_range(0..=8) {
                let t: Tuple = (0..arity).map(|_| Value::Int(self.lit())).collect();
                db.insert(&name, t).unwrap();
            }
            rels.push((name, arity));
        }
        (db, rels)
    }

    pub fn case(&mut self) -> Case {
        self.features = Features::default();
        let (db, rels) = self.database();
        let env: Vec<Rel> = rels
            .into_iter()
            .map(|(name, arity)| Rel { name, arity })
            .collect();
        let arity = self.rng.random_range(1..=2);
        let sql = self.query(3, arity, &env);
        Case {
            db,
            sql,
            features: self.features,
        }
    }

    /// `n` queries of one arity over one database.
    pub fn queries(&mut self, n: usize) -> (Database, Vec<String>) {
        let (db, rels) = self.database();
        let env: Vec<Rel> = rels.into_iter().map(|(name, arity)| Rel { name, arity }).collect();
        let arity = self.rng.random_range(1..=2);
        let qs = (0..n).map(|_| self.query(3, arity, &env)).collect();
        (db, qs)
    }

    /// A query with `arity` columns named `c1..`, nested at most `depth`
    /// levels.
    fn query(&mut self, depth: usize, arity: usize, env: &[Rel]) -> String {
        self.features.depth = self.features.depth.max(3 - depth);
        let choice = if depth == 0 { 0 } else { self.rng.random_range(0..10) };
        match choice {
            0..=3 => self.select(depth, arity, env),
            4 => {
                let vals: Vec<String> = (0..arity).map(|i| format!("{} AS c{}", self.lit(), i + 1)).collect();
                format!("SELECT {}", vals.join(", "))
            }
            5 | 6 => {
                self.features.union_all = true;
                let l = self.query(depth - 1, arity, env);
                let r = self.query(depth - 1, arity, env);
                format!("({l}) UNION ALL ({r})")
            }
            7 => {
                self.features.with = true;
                let name = self.fresh("v");
                let va = self.rng.random_range(1..=2);
                let def = self.query(depth - 1, va, env);
                let mut inner = env.to_vec();
                inner.push(Rel { name: name.clone(), arity: va });
                let body = self.query(depth - 1, arity, &inner);
                format!("WITH {name}({}) AS ({def}) {body}", cols("", va))
            }
            _ => {
                self.features.assume = true;
                let existing = self.chance(0.6);
                let (target, ta, cols_decl) = if existing {
                    let r = env[self.rng.random_range(0..env.len())].clone();
                    (r.name, r.arity, String::new())
                } else {
                    let name = self.fresh("a");
                    let ta = self.rng.random_range(1..=2);
                    (name, ta, format!("({})", cols("", ta)))
                };
                let negated = self.chance(0.35);
                if negated {
                    self.features.assume_not_in = true;
                }
                let mut parts = vec![];
                let n = self.rng.random_range(1..=2);
                for _ in 0..n {
                    let q = self.query(depth - 1, ta, env);
                    parts.push(format!(
                        "({q}) {} {target}{cols_decl}",
                        if negated { "NOT IN" } else { "IN" }
                    ));
                }
                let mut inner = env.to_vec();
                if !existing {
                    inner.push(Rel { name: target, arity: ta });
                }
                let body = self.query(depth - 1, arity, &inner);
                format!("ASSUME {} {body}", parts.join(", "))
            }
        }
    }

    fn select(&mut self, depth: usize, arity: usize, env: &[Rel]) -> String {
        let nfrom = self.rng.random_range(1..=2);
        let mut from = Vec::new();
        let mut columns: Vec<String> = Vec::new();
        for i in 0..nfrom {
            let alias = format!("t{}_{}", depth, i);
            if depth > 0 && self.chance(0.2) {
                let a = self.rng.random_range(1..=2);
                let q = self.query(depth - 1, a, env);
                from.push(format!("({q}) {alias}"));
                columns.extend((1..=a).map(|c| format!("{alias}.c{c}")));
            } else {
                let r = env[self.rng.random_range(0..env.len())].clone();
                from.push(format!("{} {alias}", r.name));
                columns.extend((1..=r.arity).map(|c| format!("{alias}.c{c}")));
            }
        }
        let items: Vec<String> = (0..arity)
            .map(|i| {
                let src = if self.chance(0.1) {
                    self.lit().to_string()
                } else {
                    columns[self.rng.random_range(0..columns.len())].clone()
                };
                format!("{src} AS c{}", i + 1)
            })
            .collect();
        let mut sql = format!("SELECT {} FROM {}", items.join(", "), from.join(", "));
        if self.chance(0.7) {
            let c = self.condition(depth, &columns, env, 2);
            sql.push_str(&format!(" WHERE {c}"));
        }
        sql
    }

    fn operand(&mut self, columns: &[String]) -> String {
        if self.chance(0.3) {
            self.lit().to_string()
        } else {
            columns[self.rng.random_range(0..columns.len())].clone()
        }
    }

    fn condition(&mut self, depth: usize, columns: &[String], env: &[Rel], budget: usize) -> String {
        let pick = if budget == 0 { self.rng.random_range(0..2) } else { self.rng.random_range(0..6) };
        match pick {
            0 | 1 if depth > 0 && self.chance(0.5) => {
                let a = self.rng.random_range(1..=2);
                let ops: Vec<String> = (0..a).map(|_| self.operand(columns)).collect();
                let negated = self.chance(0.5);
                if negated {
                    self.features.not_in = true;
                }
                let q = self.query(depth - 1, a, env);
                let lhs = if a == 1 { ops[0].clone() } else { format!("({})", ops.join(", ")) };
                format!("{lhs} {}IN ({q})", if negated { "NOT " } else { "" })
            }
            0 | 1 => {
                let l = self.operand(columns);
                let r = self.operand(columns);
                let op = ["=", "<>", "<", ">=", "="][self.rng.random_range(0..5)];
                format!("{l} {op} {r}")
            }
            2 | 3 => format!(
                "({} AND {})",
                self.condition(depth, columns, env, budget - 1),
                self.condition(depth, columns, env, budget - 1)
            ),
            4 => format!(
                "({} OR {})",
                self.condition(depth, columns, env, budget - 1),
                self.condition(depth, columns, env, budget - 1)
            ),
            _ => format!("NOT ({})", self.condition(depth, columns, env, budget - 1)),
        }
    }
}

/// Per-tuple counts, for comparing bags.
pub fn counts(rows: &[Tuple]) -> BTreeMap<Tuple, usize> {
    let mut m = BTreeMap::new();
    for t in rows {
        *m.entry(t.clone()).or_insert(0) += 1;
    }
    m
}
