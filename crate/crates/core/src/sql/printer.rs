//! Canonical single-line SQL rendering. Parsing the output yields the same AST.

use std::fmt::{self, Display, Formatter, Write};

use super::ast::*;

fn comma_list<T>(f: &mut Formatter<'_>, items: &[T], mut each: impl FnMut(&mut Formatter<'_>, &T) -> fmt::Result) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        each(f, item)?;
    }
    Ok(())
}

impl Display for Statement {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Statement::Query(q) => write!(f, "{q}"),
            Statement::CreateTable { name, columns } => {
                write!(f, "CREATE TABLE {name}(")?;
                comma_list(f, columns, |f, c| write!(f, "{} {}", c.name, c.ty))?;
                f.write_str(")")
            }
            Statement::Insert { table, rows } => {
                write!(f, "INSERT INTO {table} VALUES ")?;
                comma_list(f, rows, |f, row| {
                    f.write_char('(')?;
                    comma_list(f, row, |f, v| f.write_str(&v.to_sql()))?;
                    f.write_char(')')
                })
            }
            Statement::DropTable(name) => write!(f, "DROP TABLE {name}"),
        }
    }
}

/// Queries that must be parenthesized when they appear as a UNION ALL branch
/// or as an assumption.
fn needs_parens_in_union(q: &Query) -> bool {
    matches!(q, Query::With { .. } | Query::Assume { .. })
}

fn columns_suffix(f: &mut Formatter<'_>, columns: &Option<Vec<String>>) -> fmt::Result {
    if let Some(cols) = columns {
        write!(f, "({})", cols.join(", "))?;
    }
    Ok(())
}

impl Display for Query {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Query::Select(s) => write!(f, "{s}"),
            Query::SelectNoFrom(values) => {
                f.write_str("SELECT ")?;
                comma_list(f, values, |f, v| match &v.alias {
                    Some(a) => write!(f, "{} AS {a}", v.value.to_sql()),
                    None => f.write_str(&v.value.to_sql()),
                })
            }
            Query::UnionAll(l, r) => {
                if needs_parens_in_union(l) {
                    write!(f, "({l})")?;
                } else {
                    write!(f, "{l}")?;
                }
                if needs_parens_in_union(r) || matches!(**r, Query::UnionAll(..)) {
                    write!(f, " UNION ALL ({r})")
                } else {
                    write!(f, " UNION ALL {r}")
                }
            }
            Query::With { defs, body } => {
                f.write_str("WITH ")?;
                comma_list(f, defs, |f, d| {
                    f.write_str(&d.name)?;
                    columns_suffix(f, &d.columns)?;
                    write!(f, " AS ({})", d.query)
                })?;
                write!(f, " {body}")
            }
            Query::Assume { assumptions, body } => {
                f.write_str("ASSUME ")?;
                comma_list(f, assumptions, |f, a| {
                    if needs_parens_in_union(&a.query) {
                        write!(f, "({})", a.query)?;
                    } else {
                        write!(f, "{}", a.query)?;
                    }
                    let kw = if a.negated { "NOT IN" } else { "IN" };
                    write!(f, " {kw} {}", a.target)?;
                    columns_suffix(f, &a.columns)
                })?;
                write!(f, " {body}")
            }
        }
    }
}

impl Display for Select {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str("SELECT ")?;
        comma_list(f, &self.items, |f, item| write!(f, "{item}"))?;
        f.write_str(" FROM ")?;
        comma_list(f, &self.from, |f, item| write!(f, "{item}"))?;
        if let Some(c) = &self.filter {
            write!(f, " WHERE {c}")?;
        }
        Ok(())
    }
}

impl Display for SelectItem {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            SelectItem::Wildcard => f.write_str("*"),
            SelectItem::QualifiedWildcard(q) => write!(f, "{q}.*"),
            SelectItem::Expr { operand, alias } => {
                write!(f, "{operand}")?;
                if let Some(a) = alias {
                    write!(f, " AS {a}")?;
                }
                Ok(())
            }
        }
    }
}

impl Display for Operand {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Column(c) => write!(f, "{c}"),
            Operand::Literal(v) => f.write_str(&v.to_sql()),
        }
    }
}

impl Display for ColumnRef {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match &self.qualifier {
            Some(q) => write!(f, "{q}.{}", self.name),
            None => f.write_str(&self.name),
        }
    }
}

impl Display for FromItem {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            FromItem::Table { name, alias: Some(a) } => write!(f, "{name} {a}"),
            FromItem::Table { name, alias: None } => f.write_str(name),
            FromItem::Subquery { query, alias } => write!(f, "({query}) {alias}"),
        }
    }
}

fn precedence(c: &Condition) -> u8 {
    match c {
        Condition::Or(..) => 0,
        Condition::And(..) => 1,
        _ => 2,
    }
}

fn write_child(f: &mut Formatter<'_>, c: &Condition, min: u8) -> fmt::Result {
    if precedence(c) < min {
        write!(f, "({c})")
    } else {
        write!(f, "{c}")
    }
}

impl Display for Condition {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Compare { lhs, op, rhs } => write!(f, "{lhs} {} {rhs}", op.sql_symbol()),
            Condition::Or(l, r) => {
                write_child(f, l, 0)?;
                f.write_str(" OR ")?;
                write_child(f, r, 1)
            }
            Condition::And(l, r) => {
                write_child(f, l, 1)?;
                f.write_str(" AND ")?;
                write_child(f, r, 2)
            }
            Condition::Not(c) => {
                f.write_str("NOT ")?;
                write_child(f, c, 2)
            }
            Condition::In { operands, query, negated } => {
                if let [single] = operands.as_slice() {
                    write!(f, "{single}")?;
                } else {
                    f.write_char('(')?;
                    comma_list(f, operands, |f, o| write!(f, "{o}"))?;
                    f.write_char(')')?;
                }
                let kw = if *negated { "NOT IN" } else { "IN" };
                write!(f, " {kw} ({query})")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_sql;

    fn round_trip(text: &str) {
        let ast = parse_sql(text).unwrap();
        let printed = ast.to_string();
        assert_eq!(parse_sql(&printed).unwrap(), ast, "{printed}");
    }

    #[test]
    fn canonical_forms_reparse() {
        round_trip("select * from student where name not in (select name from take)");
        round_trip("with a as (select 1), b(x) as (select * from a union all select 2) select * from b");
        round_trip("assume (with v as (select 1) select * from v) in r(a), select 2 not in s select * from r, s");
        round_trip("select 1 union all (select 2 union all select 3)");
        round_trip("select 1 as a, 'x' as b");
        round_trip("assume select 1 in r (select * from r) union all (select 2)");
        round_trip("select t.* , x.a as b from t, (select 1) x where not (a = 1 or b <> 2) and (c < 1.5 or d >= -3)");
        round_trip("select * from t where (a, b) not in (select x, y from u)");
        round_trip("insert into t values ('it''s', 2.0)");
        round_trip("create table t(a varchar(30), b int)");
    }

    #[test]
    fn not_in_prints_keyword_once() {
        let ast = parse_sql("select * from student where name not in (select name from take)").unwrap();
        assert_eq!(
            ast.to_string(),
            "SELECT * FROM student WHERE name NOT IN (SELECT name FROM take)"
        );
    }
}
