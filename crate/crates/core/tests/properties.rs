//! Invariants of the engine and the translation, over random programs and
//! queries, plus parser/printer round-trips.

mod common;

use common::checks::{self, Check};
use hypoteq::engine::Database;
use hypoteq::sql::{Schema, SqlType};
use hypoteq::value::Value;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn holds(c: Check) -> Result<(), TestCaseError> {
    c.map_err(TestCaseError::fail)
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn assumptions_do_not_leak(seed in any::<u64>()) {
        holds(checks::assumptions_do_not_leak(seed))?;
    }

    #[test]
    fn restricted_meaning_is_within_regular(
        seed in any::<u64>(),
        cuts in proptest::collection::vec((0usize..4, 0usize..4, 0i64..4), 1..4),
    ) {
        holds(checks::restricted_within_regular(seed, &cuts))?;
    }

    #[test]
    fn union_all_adds_bags(seed in any::<u64>()) {
        holds(checks::union_all_adds_bags(seed))?;
    }

    #[test]
    fn cycles_through_negation_are_rejected(len in 1usize..5, neg in 0usize..5) {
        holds(checks::negative_cycle_rejected(len, neg))?;
    }

    #[test]
    fn underscored_variables_under_negation_are_safe(n in 0u32..1000) {
        holds(checks::safety(n))?;
    }
}

proptest! {
    #![proptest_config(config(200))]

    #[test]
    fn fold_unfold_preserves_answers(seed in any::<u64>()) {
        holds(checks::fold_unfold_preserves_answers(seed))?;
    }

    #[test]
    fn printers_round_trip(seed in any::<u64>()) {
        holds(checks::printers_round_trip(seed))?;
    }
}

fn text() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-z]{1,6}",
        "[A-Za-z' ]{0,8}",
        Just("it's".to_string()),
        Just(String::new()),
    ]
}

fn value_of(kind: usize) -> BoxedStrategy<Value> {
    match kind {
        0 => (-1000i64..1000).prop_map(Value::Int).boxed(),
        1 => (-1.0e6f64..1.0e6).prop_map(Value::float).boxed(),
        _ => text().prop_map(|s| Value::str(&s)).boxed(),
    }
}

fn database() -> impl Strategy<Value = Database> {
    proptest::collection::vec(proptest::collection::vec(0usize..3, 1..4), 0..4)
        .prop_flat_map(|tables| {
            let rows: Vec<_> = tables
                .iter()
                .map(|kinds| {
                    let row: Vec<_> = kinds.iter().map(|&k| value_of(k)).collect();
                    proptest::collection::vec(row, 0..6)
                })
                .collect();
            (Just(tables), rows)
        })
        .prop_map(|(tables, rows)| {
            let mut db = Database::new();
            for (i, (kinds, rows)) in tables.iter().zip(rows).enumerate() {
                let name = format!("t{i}");
                let columns = kinds
                    .iter()
                    .enumerate()
                    .map(|(c, &k)| {
                        let ty = [SqlType::int(), SqlType::float(), SqlType::parse("varchar(12)").unwrap()][k].clone();
                        (format!("c{c}"), ty)
                    })
                    .collect();
                db.create_table(Schema::new(name.clone(), columns)).unwrap();
                for r in rows {
                    db.insert(&name, r).unwrap();
                }
            }
            db
        })
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn save_then_load_is_identity(db in database(), seed in any::<u64>()) {
        holds(checks::save_load_identity(db, seed))?;
    }
}

#[test]
fn golden_round_trips() {
    checks::golden_round_trips().unwrap();
}
