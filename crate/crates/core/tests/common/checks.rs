//! Checks shared by the property suite and the acceptance run. Each returns
//! a description of the first violation.

use std::collections::{BTreeMap, BTreeSet};

use hypoteq::datalog::{check_safety, display_rule_pretty, parse_datalog, parse_rule, Rule};
use hypoteq::engine::{Database, Engine, EngineError};
use hypoteq::era::eval_era;
use hypoteq::persist::{load_db, save_db};
use hypoteq::session::Session;
use hypoteq::sql::{parse_query, resolve_query, ResolvedQuery};
use hypoteq::translate::{translate, Options};
use hypoteq::value::{Tuple, Value};

use super::{counts, demo_session, Case, Gen};

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

/// The first case from `seed` the resolver accepts.
pub fn accepted(seed: u64) -> (Case, ResolvedQuery) {
    let mut gen = Gen::new(seed);
    loop {
        let case = gen.case();
        let q = parse_query(&case.sql).unwrap();
        if let Ok(r) = resolve_query(&q, case.db.catalog()) {
            return (case, r);
        }
    }
}

/// Engine against the reference evaluator; `None` if the resolver rejects
/// the query.
pub fn against_oracle(case: &Case) -> Option<Check> {
    let q = parse_query(&case.sql).unwrap_or_else(|e| panic!("{e}\n{}", case.sql));
    let resolved = resolve_query(&q, case.db.catalog()).ok()?;
    let oracle = eval_era(&resolved, case.db.facts());
    let session = Session::with_database(case.db.clone());
    let engine = session.query(&case.sql);
    Some(match (engine, oracle) {
        (Ok(a), Ok(b)) if counts(&a.rows) == counts(&b) => Ok(()),
        (Ok(a), Ok(b)) => Err(format!(
            "{}\nengine {:?}\noracle {:?}",
            case.sql,
            counts(&a.rows),
            counts(&b)
        )),
        (Err(e), Ok(_)) => Err(format!("{}\nengine failed: {e}", case.sql)),
        (Ok(_), Err(e)) => Err(format!("{}\noracle failed: {e}", case.sql)),
        (Err(a), Err(b)) => Err(format!("{}\nboth failed: {a} / {b}", case.sql)),
    })
}

fn bag(db: &Database, sql: &str) -> Option<BTreeMap<Tuple, usize>> {
    resolve_query(&parse_query(sql).unwrap(), db.catalog()).ok()?;
    let a = Session::with_database(db.clone()).query(sql).unwrap();
    Some(counts(&a.rows))
}

fn is_sub_bag(small: &[Tuple], big: &[Tuple]) -> bool {
    let big = counts(big);
    counts(small).iter().all(|(t, n)| big.get(t).is_some_and(|m| n <= m))
}

fn vars(n: usize) -> String {
    (1..=n).map(|i| format!("X{i}")).collect::<Vec<_>>().join(",")
}

/// A tuple assumed for one subquery is invisible to its siblings, to later
/// queries and to the stored database.
pub fn assumptions_do_not_leak(seed: u64) -> Check {
    let (case, _) = accepted(seed);
    let schema = case.db.catalog().iter().next().unwrap().clone();
    let name = &schema.relation;
    let sentinel: Tuple = vec![Value::Int(99); schema.arity()];
    let lits = (1..=schema.arity()).map(|i| format!("99 AS c{i}")).collect::<Vec<_>>().join(", ");
    let inside = format!("ASSUME (SELECT {lits}) IN {name} SELECT * FROM {name}");
    let siblings = format!("({inside}) UNION ALL (SELECT * FROM {name})");
    let seen = |rows: &[Tuple]| rows.iter().filter(|t| **t == sentinel).count();

    let mut session = Session::with_database(case.db.clone());
    let before = session.query(&case.sql).unwrap().rows;
    ensure!(seen(&session.query(&inside).unwrap().rows) == 1, "sentinel missing inside: {inside}");
    ensure!(seen(&session.query(&siblings).unwrap().rows) == 1, "sentinel leaked to a sibling: {siblings}");
    session.eval(&format!("{inside};")).unwrap();
    ensure!(
        seen(&session.query(&format!("SELECT * FROM {name}")).unwrap().rows) == 0,
        "sentinel outlived its query"
    );
    ensure!(session.query(&case.sql).unwrap().rows == before, "answer changed: {}", case.sql);
    ensure!(session.database() == &case.db, "stored database changed");
    Ok(())
}

/// Restricting rules only ever remove occurrences, in the base context and
/// in contexts that assume them. `cuts` picks which relations restrict
/// which, and at what threshold.
pub fn restricted_within_regular(seed: u64, cuts: &[(usize, usize, i64)]) -> Check {
    let (db, rels) = Gen::new(seed).database();
    let head = |arity: usize, from: usize, c: i64| {
        (1..=arity)
            .map(|k| if k <= from { format!("X{k}") } else { c.to_string() })
            .collect::<Vec<_>>()
            .join(",")
    };
    // a relation is only restricted by ones before it, so no cycle runs
    // through a restriction
    let mut rules = vec![format!("d({}) :- {}({}).", vars(rels[0].1), rels[0].0, vars(rels[0].1))];
    for &(i, j, c) in cuts {
        let (ri, ai) = &rels[i % rels.len()];
        let (rj, aj) = &rels[j % rels.len()];
        if j % rels.len() < i % rels.len() {
            rules.push(format!("-{ri}({}) :- {rj}({}), X1 >= {c}.", head(*ai, *aj, c), vars(*aj)));
        }
        rules.push(format!("-d({}) :- {rj}({}), X1 < {c}.", head(rels[0].1, *aj, c), vars(*aj)));
    }
    let rules: Vec<Rule> = rules.iter().map(|r| parse_rule(r).unwrap()).collect();
    let preds: BTreeSet<String> = rels.iter().map(|(r, _)| r.clone()).chain(["d".to_string()]).collect();

    let mut engine = db.engine(rules.clone()).map_err(|e| e.to_string())?;
    let root = engine.root();
    for p in &preds {
        let m = engine.meaning(root, p).unwrap();
        let r = engine.regular_meaning(root, p).unwrap();
        ensure!(is_sub_bag(&m, &r), "{p}: {m:?} not within {r:?}");
    }

    let (restricting, regular): (Vec<Rule>, Vec<Rule>) = rules.into_iter().partition(Rule::is_restricting);
    let mut engine = db.engine(regular).map_err(|e| e.to_string())?;
    let root = engine.root();
    let child = engine.extend(root, restricting).map_err(|e| e.to_string())?;
    for p in &preds {
        let m = engine.meaning(child, p).unwrap();
        let r = engine.regular_meaning(child, p).unwrap();
        ensure!(is_sub_bag(&m, &r), "{p} in context: {m:?} not within {r:?}");
        ensure!(is_sub_bag(&m, &engine.meaning(root, p).unwrap()), "{p} grew under restriction");
    }
    Ok(())
}

/// The bag of `a UNION ALL b` is the sum of the bags of `a` and `b`.
pub fn union_all_adds_bags(seed: u64) -> Check {
    let (db, qs) = Gen::new(seed).queries(2);
    let (Some(a), Some(b)) = (bag(&db, &qs[0]), bag(&db, &qs[1])) else {
        return Ok(());
    };
    let sql = format!("({}) UNION ALL ({})", qs[0], qs[1]);
    let both = bag(&db, &sql).unwrap();
    let mut sum = a;
    for (t, n) in b {
        *sum.entry(t).or_insert(0) += n;
    }
    ensure!(both == sum, "{sql}\n{both:?} != {sum:?}");
    Ok(())
}

/// A cycle of `len` predicates with one negative edge is refused; the same
/// cycle without negation is plain recursion and evaluates.
pub fn negative_cycle_rejected(len: usize, neg: usize) -> Check {
    let neg = neg % len;
    let mut rules = vec!["p0(1).".to_string()];
    let mut positive = rules.clone();
    for i in 0..len {
        let next = (i + 1) % len;
        let lit = if i == neg { format!("not p{next}(X)") } else { format!("p{next}(X)") };
        rules.push(format!("p{i}(X) :- p0(X), {lit}."));
        positive.push(format!("p{i}(X) :- p{next}(X)."));
    }
    let program = parse_datalog(&rules.join("\n")).unwrap();
    ensure!(
        matches!(Engine::new(&BTreeMap::new(), program.rules), Err(EngineError::NotStratifiable { .. })),
        "accepted {rules:?}"
    );
    let program = parse_datalog(&positive.join("\n")).unwrap();
    ensure!(Engine::new(&BTreeMap::new(), program.rules).is_ok(), "rejected {positive:?}");
    ensure!(demo_session().eval("p :- not p.").is_err(), "accepted p :- not p");
    Ok(())
}

/// Underscored variables may occur only under negation; other variables
/// must be bound by a positive goal.
pub fn safety(n: u32) -> Check {
    for v in [format!("_V{n}"), format!("_v{n}"), "_".to_string()] {
        let text = format!("p(X) :- q(X), not r(X,{v}).");
        ensure!(check_safety(&parse_rule(&text).unwrap()).is_ok(), "rejected {text}");
    }
    for text in [
        format!("p(X) :- q(X), not r(X,V{n})."),
        format!("p(V{n}) :- not q(V{n})."),
        format!("p(X,V{n}) :- q(X)."),
        format!("p(X) :- q(X), X < V{n}."),
    ] {
        ensure!(check_safety(&parse_rule(&text).unwrap()).is_err(), "accepted {text}");
    }
    ensure!(
        demo_session().eval("lazy(A) :- student(A), not take(A,_B).").is_ok(),
        "rejected the underscore pattern"
    );
    ensure!(demo_session().eval("p(X) :- not student(X).").is_err(), "accepted an unsafe rule");
    Ok(())
}

/// Inlining auxiliary predicates changes the program, not its answer.
pub fn fold_unfold_preserves_answers(seed: u64) -> Check {
    let (case, q) = accepted(seed);
    let reserved = case.db.predicates();
    let mut answers = Vec::new();
    for fold_unfold in [false, true] {
        let t = translate(&q, "answer", &reserved, Options { fold_unfold });
        let mut engine = case.db.engine(t.rules).map_err(|e| e.to_string())?;
        let root = engine.root();
        answers.push(counts(&engine.meaning(root, "answer").unwrap()));
    }
    ensure!(answers[0] == answers[1], "{}\n{:?} != {:?}", case.sql, answers[0], answers[1]);
    Ok(())
}

pub fn sql_round_trip(sql: &str) -> Check {
    let q = parse_query(sql).map_err(|e| e.to_string())?;
    let printed = q.to_string();
    let again = parse_query(&printed).map_err(|e| format!("{printed}: {e}"))?;
    ensure!(again == q, "{sql} printed as {printed}");
    ensure!(again.to_string() == printed, "printing {printed} is not stable");
    Ok(())
}

pub fn rule_round_trip(r: &Rule) -> Check {
    let flat = r.to_string();
    let reparsed = parse_rule(&flat).map_err(|e| format!("{flat}: {e}"))?;
    ensure!(reparsed.to_string() == flat, "{flat} reprinted as {reparsed}");
    ensure!(reparsed.head == r.head && reparsed.sign == r.sign, "{flat} head changed");
    let pretty = display_rule_pretty(r);
    let reparsed = parse_rule(&pretty).map_err(|e| format!("{pretty}: {e}"))?;
    ensure!(reparsed.to_string() == flat, "{pretty} reprinted as {reparsed}");
    Ok(())
}

/// Printing and reparsing a random query and its compilation.
pub fn printers_round_trip(seed: u64) -> Check {
    let (case, q) = accepted(seed);
    sql_round_trip(&case.sql)?;
    let t = translate(&q, "answer", &case.db.predicates(), Options::default());
    t.rules.iter().try_for_each(rule_round_trip)
}

/// `db` plus the compilation of a random query survives save and load.
pub fn save_load_identity(mut db: Database, seed: u64) -> Check {
    let (case, q) = accepted(seed);
    let t = translate(&q, "derived", &case.db.predicates(), Options::default());
    for r in t.rules {
        db.assert_rule(r).map_err(|e| e.to_string())?;
    }
    let text = save_db(&db);
    let loaded = load_db(&text).map_err(|e| e.to_string())?;
    ensure!(loaded == db, "loaded database differs:\n{text}");
    ensure!(save_db(&loaded) == text, "saving again changed the text");
    Ok(())
}

pub const GOLDEN_SQL: [&str; 4] = [
    "select * from student where name not in (select name from take)",
    "with grad(name) as (select student.name from student, take t1, take t2 where student.name=t1.name \
     and t1.name=t2.name and t1.title='db' and t2.title='lp') select * from grad",
    "assume (select 'adam') not in student, (select 'adam','lp' union all select 'scott','db') in take, \
     (select student.name from student, take t1, take t2 where student.name=t1.name and t1.name=t2.name \
     and t1.title='lp' and t2.title='db') in grad(name) select * from grad",
    "assume select 1 in r(a), (assume select 2 in r(a) select * from r) in s select * from r, s",
];

pub const GOLDEN_DATALOG: [&str; 3] = [
    "answer(A) :- student(A), not take(A,_B).",
    "answer(A) :- (grad(B) :- student(B), take(B,db), take(B,lp)) => grad(A).",
    "answer(A) :- -student(adam) /\\ take(adam,lp) /\\ take(scott,db) /\\ \
     (grad(B) :- student(B), take(B,lp), take(B,db)) => grad(A).",
];

/// The demo queries and their compilations print and parse back unchanged,
/// and the demo database survives save and load.
pub fn golden_round_trips() -> Check {
    GOLDEN_SQL.iter().try_for_each(|q| sql_round_trip(q))?;
    let s = demo_session();
    for (sql, expected) in GOLDEN_SQL.iter().zip(GOLDEN_DATALOG) {
        let c = s.compile(sql).map_err(|e| e.to_string())?;
        ensure!(c.rules.len() == 1, "{sql} compiled to {} rules", c.rules.len());
        ensure!(c.rules[0].to_string() == expected, "{sql} compiled to {}", c.rules[0]);
        let parsed = parse_rule(expected).map_err(|e| e.to_string())?;
        ensure!(parsed.to_string() == expected, "{expected} reprinted as {parsed}");
        rule_round_trip(&c.rules[0])?;
    }
    let db = s.database();
    ensure!(load_db(&save_db(db)).map_err(|e| e.to_string())? == *db, "demo database changed on reload");
    Ok(())
}
