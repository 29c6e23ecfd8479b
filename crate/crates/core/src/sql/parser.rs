//! Recursive-descent parser for the supported SQL subset.

use super::ast::*;
use super::lexer::{lex, Spanned, Tok};
use super::schema::SqlType;
use super::SqlError;
use crate::datalog::CompareOp;
use crate::value::Value;

const RESERVED: &[&str] = &[
    "select", "from", "where", "and", "or", "not", "in", "union", "all", "with", "as", "assume",
    "create", "table", "insert", "into", "values", "drop", "group", "order", "by", "having",
    "distinct", "join", "on", "limit", "exists", "except", "intersect", "inner", "left", "right",
    "outer", "natural", "cross", "null", "is", "like", "between", "case",
];

const UNSUPPORTED: &[&str] = &[
    "group", "order", "having", "distinct", "join", "limit", "exists", "except", "intersect",
    "inner", "left", "right", "outer", "natural", "cross", "null", "is", "like", "between", "case",
];

const AGGREGATES: &[&str] = &["count", "sum", "avg", "min", "max"];

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

type PResult<T> = Result<T, SqlError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Word(w) if w == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error(&self, expected: &str) -> SqlError {
        let s = &self.toks[self.pos];
        if let Tok::Word(w) = &s.tok {
            if UNSUPPORTED.contains(&w.as_str()) {
                return SqlError::Unsupported {
                    feature: w.to_uppercase(),
                    line: s.line,
                    col: s.col,
                };
            }
        }
        SqlError::Syntax {
            line: s.line,
            col: s.col,
            expected: format!("{expected}, found {}", s.tok.describe()),
        }
    }

    fn unsupported(&self, feature: &str) -> SqlError {
        let s = &self.toks[self.pos];
        SqlError::Unsupported {
            feature: feature.to_string(),
            line: s.line,
            col: s.col,
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error(&format!("`{}`", kw.to_uppercase())))
        }
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&tok.describe()))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Tok::Word(w) if !RESERVED.contains(&w.as_str()) => {
                let w = w.clone();
                self.bump();
                Ok(w)
            }
            _ => Err(self.error("an identifier")),
        }
    }

    fn is_ident(&self) -> bool {
        matches!(self.peek(), Tok::Word(w) if !RESERVED.contains(&w.as_str()))
    }

    fn statement(&mut self) -> PResult<Statement> {
        let stmt = if self.eat_kw("create") {
            self.create_table()?
        } else if self.eat_kw("insert") {
            self.insert()?
        } else if self.eat_kw("drop") {
            self.expect_kw("table")?;
            Statement::DropTable(self.ident()?)
        } else {
            Statement::Query(self.query()?)
        };
        if *self.peek() == Tok::Semi {
            self.bump();
        }
        if *self.peek() != Tok::Eof {
            return Err(self.error("end of statement"));
        }
        Ok(stmt)
    }

    fn create_table(&mut self) -> PResult<Statement> {
        self.expect_kw("table")?;
        let name = self.ident()?;
        self.expect(Tok::LParen)?;
        let mut columns = Vec::new();
        loop {
            let col = self.ident()?;
            let (line, colno) = (self.toks[self.pos].line, self.toks[self.pos].col);
            let base = match self.bump() {
                Tok::Word(w) => w,
                _ => {
                    self.pos -= 1;
                    return Err(self.error("a type name"));
                }
            };
            let length = if *self.peek() == Tok::LParen {
                self.bump();
                let n = match self.bump() {
                    Tok::Int(n) if n >= 0 => n as u32,
                    _ => {
                        self.pos -= 1;
                        return Err(self.error("a type length"));
                    }
                };
                self.expect(Tok::RParen)?;
                Some(n)
            } else {
                None
            };
            let ty = SqlType::from_declared(&base, length).ok_or(SqlError::Unsupported {
                feature: format!("type {base}"),
                line,
                col: colno,
            })?;
            columns.push(ColumnDef { name: col, ty });
            match self.bump() {
                Tok::Comma => continue,
                Tok::RParen => break,
                _ => {
                    self.pos -= 1;
                    return Err(self.error("`,` or `)`"));
                }
            }
        }
        Ok(Statement::CreateTable { name, columns })
    }

    fn insert(&mut self) -> PResult<Statement> {
        self.expect_kw("into")?;
        let table = self.ident()?;
        self.expect_kw("values")?;
        let mut rows = Vec::new();
        loop {
            self.expect(Tok::LParen)?;
            let mut row = vec![self.literal()?];
            while *self.peek() == Tok::Comma {
                self.bump();
                row.push(self.literal()?);
            }
            self.expect(Tok::RParen)?;
            rows.push(row);
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                break;
            }
        }
        Ok(Statement::Insert { table, rows })
    }

    fn literal(&mut self) -> PResult<Value> {
        match self.bump() {
            Tok::Str(s) => Ok(Value::Str(s)),
            Tok::Int(i) => Ok(Value::Int(i)),
            Tok::Float(x) => Ok(Value::float(x)),
            Tok::Minus => match self.bump() {
                Tok::Int(i) => Ok(Value::Int(-i)),
                Tok::Float(x) => Ok(Value::float(-x)),
                _ => {
                    self.pos -= 1;
                    Err(self.error("a number"))
                }
            },
            _ => {
                self.pos -= 1;
                Err(self.error("a literal"))
            }
        }
    }

    fn is_literal_start(&self) -> bool {
        matches!(self.peek(), Tok::Str(_) | Tok::Int(_) | Tok::Float(_) | Tok::Minus)
    }

    fn query(&mut self) -> PResult<Query> {
        if self.eat_kw("with") {
            let mut defs = vec![self.view_def()?];
            while *self.peek() == Tok::Comma {
                self.bump();
                defs.push(self.view_def()?);
            }
            let body = self.query()?;
            return Ok(Query::With {
                defs,
                body: Box::new(body),
            });
        }
        if self.eat_kw("assume") {
            let mut assumptions = vec![self.assumption()?];
            while *self.peek() == Tok::Comma {
                self.bump();
                assumptions.push(self.assumption()?);
            }
            let body = self.query()?;
            return Ok(Query::Assume {
                assumptions,
                body: Box::new(body),
            });
        }
        self.union()
    }

    fn view_def(&mut self) -> PResult<ViewDef> {
        let name = self.ident()?;
        let columns = self.opt_column_list()?;
        self.expect_kw("as")?;
        self.expect(Tok::LParen)?;
        let query = self.query()?;
        self.expect(Tok::RParen)?;
        Ok(ViewDef { name, columns, query })
    }

    fn opt_column_list(&mut self) -> PResult<Option<Vec<String>>> {
        if *self.peek() != Tok::LParen {
            return Ok(None);
        }
        // `IN r (SELECT ...)`: the parenthesis opens the query body
        match self.peek_at(1) {
            Tok::LParen => return Ok(None),
            Tok::Word(w) if matches!(w.as_str(), "select" | "with" | "assume") => return Ok(None),
            _ => {}
        }
        self.bump();
        let mut cols = vec![self.ident()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            cols.push(self.ident()?);
        }
        self.expect(Tok::RParen)?;
        Ok(Some(cols))
    }

    fn assumption(&mut self) -> PResult<Assumption> {
        let query = self.union()?;
        let negated = self.eat_kw("not");
        self.expect_kw("in")?;
        let target = self.ident()?;
        let columns = self.opt_column_list()?;
        Ok(Assumption {
            query,
            negated,
            target,
            columns,
        })
    }

    fn union(&mut self) -> PResult<Query> {
        let mut left = self.query_primary()?;
        while self.is_kw("union") {
            self.bump();
            if !self.eat_kw("all") {
                return Err(self.unsupported("UNION without ALL"));
            }
            let right = self.query_primary()?;
            left = Query::UnionAll(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn query_primary(&mut self) -> PResult<Query> {
        if *self.peek() == Tok::LParen {
            self.bump();
            let q = self.query()?;
            self.expect(Tok::RParen)?;
            return Ok(q);
        }
        self.expect_kw("select")?;
        if self.is_kw("distinct") {
            return Err(self.unsupported("DISTINCT"));
        }
        self.eat_kw("all");
        let items = self.select_items()?;
        if !self.eat_kw("from") {
            if self.is_kw("where") {
                return Err(self.unsupported("WHERE without FROM"));
            }
            let mut values = Vec::with_capacity(items.len());
            for item in items {
                match item {
                    SelectItem::Expr {
                        operand: Operand::Literal(value),
                        alias,
                    } => values.push(LiteralItem { value, alias }),
                    _ => return Err(self.error("literal values in a SELECT without FROM")),
                }
            }
            return Ok(Query::SelectNoFrom(values));
        }
        let mut from = vec![self.table_ref()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            from.push(self.table_ref()?);
        }
        let filter = if self.eat_kw("where") {
            Some(self.condition()?)
        } else {
            None
        };
        Ok(Query::Select(Select { items, from, filter }))
    }

    fn select_items(&mut self) -> PResult<Vec<SelectItem>> {
        let mut items = vec![self.select_item()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            items.push(self.select_item()?);
        }
        Ok(items)
    }

    fn select_item(&mut self) -> PResult<SelectItem> {
        if *self.peek() == Tok::Star {
            self.bump();
            return Ok(SelectItem::Wildcard);
        }
        if self.is_ident() && *self.peek_at(1) == Tok::Dot && *self.peek_at(2) == Tok::Star {
            let q = self.ident()?;
            self.bump();
            self.bump();
            return Ok(SelectItem::QualifiedWildcard(q));
        }
        let operand = self.operand()?;
        let alias = if self.eat_kw("as") {
            Some(self.ident()?)
        } else {
            None
        };
        Ok(SelectItem::Expr { operand, alias })
    }

    fn operand(&mut self) -> PResult<Operand> {
        if self.is_literal_start() {
            return Ok(Operand::Literal(self.literal()?));
        }
        if let Tok::Word(w) = self.peek() {
            if *self.peek_at(1) == Tok::LParen {
                let feature = if AGGREGATES.contains(&w.as_str()) {
                    "aggregate functions"
                } else {
                    "function calls"
                };
                return Err(self.unsupported(feature));
            }
        }
        if *self.peek() == Tok::LParen
            && matches!(self.peek_at(1), Tok::Word(w) if w == "select" || w == "with" || w == "assume")
        {
            return Err(self.unsupported("scalar subqueries"));
        }
        let first = self.ident()?;
        if *self.peek() == Tok::Dot {
            self.bump();
            let name = self.ident()?;
            Ok(Operand::Column(ColumnRef {
                qualifier: Some(first),
                name,
            }))
        } else {
            Ok(Operand::Column(ColumnRef {
                qualifier: None,
                name: first,
            }))
        }
    }

    fn table_ref(&mut self) -> PResult<FromItem> {
        if *self.peek() == Tok::LParen {
            self.bump();
            let query = self.query()?;
            self.expect(Tok::RParen)?;
            self.eat_kw("as");
            let alias = self.ident()?;
            return Ok(FromItem::Subquery {
                query: Box::new(query),
                alias,
            });
        }
        let name = self.ident()?;
        let alias = if self.eat_kw("as") || self.is_ident() {
            Some(self.ident()?)
        } else {
            None
        };
        Ok(FromItem::Table { name, alias })
    }

    fn condition(&mut self) -> PResult<Condition> {
        let mut left = self.and_condition()?;
        while self.eat_kw("or") {
            let right = self.and_condition()?;
            left = Condition::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn and_condition(&mut self) -> PResult<Condition> {
        let mut left = self.not_condition()?;
        while self.eat_kw("and") {
            let right = self.not_condition()?;
            left = Condition::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn not_condition(&mut self) -> PResult<Condition> {
        if self.eat_kw("not") {
            return Ok(Condition::Not(Box::new(self.not_condition()?)));
        }
        if self.is_kw("exists") {
            return Err(self.unsupported("EXISTS"));
        }
        if *self.peek() == Tok::LParen {
            // either a row of operands before IN, or a parenthesized condition
            let save = self.pos;
            if let Ok(operands) = self.operand_row() {
                if self.is_kw("in") || (self.is_kw("not") && matches!(self.peek_at(1), Tok::Word(w) if w == "in")) {
                    return self.in_tail(operands);
                }
            }
            self.pos = save;
            self.bump();
            let c = self.condition()?;
            self.expect(Tok::RParen)?;
            return Ok(c);
        }
        let lhs = self.operand()?;
        if self.is_kw("in") || (self.is_kw("not") && matches!(self.peek_at(1), Tok::Word(w) if w == "in")) {
            return self.in_tail(vec![lhs]);
        }
        let op = match self.bump() {
            Tok::Eq => CompareOp::Eq,
            Tok::Ne => CompareOp::Ne,
            Tok::Lt => CompareOp::Lt,
            Tok::Le => CompareOp::Le,
            Tok::Gt => CompareOp::Gt,
            Tok::Ge => CompareOp::Ge,
            _ => {
                self.pos -= 1;
                return Err(self.error("a comparison operator or IN"));
            }
        };
        let rhs = self.operand()?;
        Ok(Condition::Compare { lhs, op, rhs })
    }

    fn operand_row(&mut self) -> PResult<Vec<Operand>> {
        self.expect(Tok::LParen)?;
        let mut ops = vec![self.operand()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            ops.push(self.operand()?);
        }
        self.expect(Tok::RParen)?;
        Ok(ops)
    }

    fn in_tail(&mut self, operands: Vec<Operand>) -> PResult<Condition> {
        let negated = self.eat_kw("not");
        self.expect_kw("in")?;
        self.expect(Tok::LParen)?;
        let query = self.query()?;
        self.expect(Tok::RParen)?;
        Ok(Condition::In {
            operands,
            query: Box::new(query),
            negated,
        })
    }
}

/// Parses one SQL statement, optionally terminated by `;`.
pub fn parse_sql(text: &str) -> Result<Statement, SqlError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    p.statement()
}

/// Parses one statement that must be a query.
pub fn parse_query(text: &str) -> Result<Query, SqlError> {
    match parse_sql(text)? {
        Statement::Query(q) => Ok(q),
        _ => Err(SqlError::Syntax {
            line: 1,
            col: 1,
            expected: "a query".into(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(text: &str) -> Query {
        parse_query(text).unwrap()
    }

    #[test]
    fn not_in_subquery() {
        let query = q("select * from student where name not in (select name from take)");
        let Query::Select(s) = query else { panic!() };
        assert_eq!(s.items, vec![SelectItem::Wildcard]);
        assert!(matches!(s.filter, Some(Condition::In { negated: true, .. })));
    }

    #[test]
    fn select_without_from() {
        assert_eq!(q("select 'adam'"), Query::SelectNoFrom(vec![Value::str("adam").into()]));
    }

    #[test]
    fn with_column_list() {
        let query = q("with grad(name) as (select student.name from student) select * from grad;");
        let Query::With { defs, .. } = query else { panic!() };
        assert_eq!(defs.len(), 1);
        assert_eq!(defs[0].columns.as_deref(), Some(&["name".to_string()][..]));
    }

    #[test]
    fn assume_session_statement() {
        let query = q("assume
               (select 'adam') not in student,
               (select 'adam','lp' union all select 'scott','db')
                 in take,
               (select student.name from student, take t1, take t2
                 where student.name=t1.name and t1.name=t2.name and
                       t1.title='lp' and t2.title='db') in grad(name)
             select * from grad;");
        let Query::Assume { assumptions, .. } = query else { panic!() };
        let shape: Vec<(bool, &str)> = assumptions.iter().map(|a| (a.negated, a.target.as_str())).collect();
        assert_eq!(shape, vec![(true, "student"), (false, "take"), (false, "grad")]);
        assert!(matches!(assumptions[1].query, Query::UnionAll(..)));
    }

    #[test]
    fn unparenthesized_assumptions() {
        let query = q("ASSUME SELECT 1 IN r(a), (ASSUME SELECT 2 IN r(a) SELECT * FROM r) IN s SELECT * FROM r,s;");
        let Query::Assume { assumptions, .. } = query else { panic!() };
        assert_eq!(assumptions[0].query, Query::SelectNoFrom(vec![Value::Int(1).into()]));
        assert!(matches!(assumptions[1].query, Query::Assume { .. }));
    }

    #[test]
    fn unsupported_features() {
        for text in [
            "select distinct a from t",
            "select a from t group by a",
            "select count(a) from t",
            "select a from t union select a from t",
            "select a from t order by a",
        ] {
            assert!(matches!(parse_sql(text), Err(SqlError::Unsupported { .. })), "{text}");
        }
    }

    #[test]
    fn syntax_error_has_position() {
        match parse_sql("select a\nfrom t where") {
            Err(SqlError::Syntax { line, col, .. }) => assert_eq!((line, col), (2, 13)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ddl_statements() {
        assert_eq!(
            parse_sql("create table take(name string, title varchar(30))").unwrap(),
            Statement::CreateTable {
                name: "take".into(),
                columns: vec![
                    ColumnDef { name: "name".into(), ty: SqlType::string() },
                    ColumnDef { name: "title".into(), ty: SqlType::parse("varchar(30)").unwrap() },
                ]
            }
        );
        assert_eq!(
            parse_sql("insert into t values (1, 'a'), (-2, 'b');").unwrap(),
            Statement::Insert {
                table: "t".into(),
                rows: vec![
                    vec![Value::Int(1), Value::str("a")],
                    vec![Value::Int(-2), Value::str("b")]
                ]
            }
        );
        assert_eq!(parse_sql("DROP TABLE t").unwrap(), Statement::DropTable("t".into()));
    }

    #[test]
    fn row_in_and_parenthesized_condition() {
        let Query::Select(s) = q("select * from t where (a, b) in (select x, y from u) and (a = 1 or b = 2)") else {
            panic!()
        };
        let Some(Condition::And(l, r)) = s.filter else { panic!() };
        assert!(matches!(*l, Condition::In { ref operands, .. } if operands.len() == 2));
        assert!(matches!(*r, Condition::Or(..)));
    }
}
