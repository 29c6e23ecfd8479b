//! Prolog-style surface syntax.
//!
//! ```text
//! clause  := rule '.' | '?-' body '.' | ':-' 'type' '(' atomdecl ')' '.'
//! rule    := ['-'] atom [':-' body]
//! body    := goal (',' goal)*
//! goal    := items '=>' goal | 'not' primary | term cmp term | atom | '(' goal ')'
//! items   := item ('/\' item)*
//! item    := ['-'] atom | '(' rule ('/\' rule)* ')'
//! ```

use super::{check_arities, Atom, CompareOp, DatalogError, Goal, HeadSign, Origin, Program, Rule, RuleId, Term};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Var(String),
    Int(i64),
    Float(f64),
    Str(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Neck,
    QueryNeck,
    Implies,
    And,
    Minus,
    Colon,
    Cmp(CompareOp),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Var(s) => format!("variable `{s}`"),
            Tok::Int(i) => format!("number `{i}`"),
            Tok::Float(x) => format!("number `{x}`"),
            Tok::Str(s) => format!("string '{s}'"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Neck => "`:-`".into(),
            Tok::QueryNeck => "`?-`".into(),
            Tok::Implies => "`=>`".into(),
            Tok::And => "`/\\`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Cmp(op) => format!("`{}`", op.datalog_symbol()),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, DatalogError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, expected: &str| DatalogError::Syntax {
        line,
        col,
        expected: expected.to_string(),
    };
    while i < chars.len() {
        let c = chars[i];
        let (sl, sc) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i, &mut col);
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let peek = chars.get(i + 1).copied();
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            let word: String = chars[start..i].iter().collect();
            out.push(Spanned {
                tok: if c.is_ascii_lowercase() {
                    Tok::Ident(word)
                } else {
                    Tok::Var(word)
                },
                line: sl,
                col: sc,
            });
            continue;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let mut is_float = false;
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                is_float = true;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    is_float = true;
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            col += i - start;
            let lit: String = chars[start..i].iter().collect();
            let tok = if is_float {
                Tok::Float(lit.parse().map_err(|_| err(sl, sc, "a number"))?)
            } else {
                Tok::Int(lit.parse().map_err(|_| err(sl, sc, "a 64-bit integer"))?)
            };
            out.push(Spanned { tok, line: sl, col: sc });
            continue;
        } else if c == '\'' {
            let mut s = String::new();
            i += 1;
            col += 1;
            loop {
                match chars.get(i) {
                    None => return Err(err(sl, sc, "closing quote")),
                    Some('\'') if chars.get(i + 1) == Some(&'\'') => {
                        s.push('\'');
                        i += 2;
                        col += 2;
                    }
                    Some('\'') => {
                        i += 1;
                        col += 1;
                        break;
                    }
                    Some('\n') => {
                        s.push('\n');
                        i += 1;
                        line += 1;
                        col = 1;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                        col += 1;
                    }
                }
            }
            out.push(Spanned {
                tok: Tok::Str(s),
                line: sl,
                col: sc,
            });
            continue;
        } else {
            match (c, peek) {
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                (',', _) => (Tok::Comma, 1),
                ('.', _) => (Tok::Dot, 1),
                (':', Some('-')) => (Tok::Neck, 2),
                (':', _) => (Tok::Colon, 1),
                ('?', Some('-')) => (Tok::QueryNeck, 2),
                ('=', Some('>')) => (Tok::Implies, 2),
                ('=', Some('<')) => (Tok::Cmp(CompareOp::Le), 2),
                ('=', _) => (Tok::Cmp(CompareOp::Eq), 1),
                ('\\', Some('=')) => (Tok::Cmp(CompareOp::Ne), 2),
                ('/', Some('\\')) => (Tok::And, 2),
                ('<', Some('>')) => (Tok::Cmp(CompareOp::Ne), 2),
                ('<', Some('=')) => (Tok::Cmp(CompareOp::Le), 2),
                ('<', _) => (Tok::Cmp(CompareOp::Lt), 1),
                ('>', Some('=')) => (Tok::Cmp(CompareOp::Ge), 2),
                ('>', _) => (Tok::Cmp(CompareOp::Gt), 1),
                ('-', _) => (Tok::Minus, 1),
                _ => return Err(err(sl, sc, "a Datalog token")),
            }
        };
        advance(tok.1, &mut i, &mut col);
        out.push(Spanned {
            tok: tok.0,
            line: sl,
            col: sc,
        });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

/// A `:- type(p(a:string, b:int))` declaration. Type names are kept as
/// written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDecl {
    pub predicate: String,
    pub columns: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Clause {
    Rule(Rule),
    Query(Vec<Goal>),
    Type(TypeDecl),
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    next_id: u32,
    anon: u32,
}

/// Either a single goal or a run of antecedent rules awaiting `=>`.
enum Element {
    Goal(Goal),
    Items(Vec<Rule>),
}

impl Parser {
    fn new(text: &str) -> Result<Self, DatalogError> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
            next_id: 0,
            anon: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> DatalogError {
        let s = &self.toks[self.pos];
        DatalogError::Syntax {
            line: s.line,
            col: s.col,
            expected: format!("{expected}, found {}", s.tok.describe()),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), DatalogError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(what))
        }
    }

    fn fresh_id(&mut self) -> RuleId {
        let id = RuleId::new(Origin::User, self.next_id);
        self.next_id += 1;
        id
    }

    fn clause(&mut self) -> Result<Clause, DatalogError> {
        let clause = match self.peek() {
            Tok::QueryNeck => {
                self.bump();
                Clause::Query(self.body()?)
            }
            Tok::Neck => {
                self.bump();
                Clause::Type(self.type_decl()?)
            }
            _ => Clause::Rule(self.rule()?),
        };
        self.expect(Tok::Dot, "`.`")?;
        Ok(clause)
    }

    fn type_decl(&mut self) -> Result<TypeDecl, DatalogError> {
        match self.bump() {
            Tok::Ident(s) if s == "type" => {}
            _ => {
                self.pos -= 1;
                return Err(self.error("`type`"));
            }
        }
        self.expect(Tok::LParen, "`(`")?;
        let predicate = match self.bump() {
            Tok::Ident(s) => s,
            _ => {
                self.pos -= 1;
                return Err(self.error("a predicate name"));
            }
        };
        self.expect(Tok::LParen, "`(`")?;
        let mut columns = Vec::new();
        loop {
            let name = match self.bump() {
                Tok::Ident(s) => s,
                _ => {
                    self.pos -= 1;
                    return Err(self.error("a column name"));
                }
            };
            self.expect(Tok::Colon, "`:`")?;
            let mut ty = match self.bump() {
                Tok::Ident(s) => s,
                _ => {
                    self.pos -= 1;
                    return Err(self.error("a type name"));
                }
            };
            if *self.peek() == Tok::LParen {
                self.bump();
                match self.bump() {
                    Tok::Int(n) => ty.push_str(&format!("({n})")),
                    _ => {
                        self.pos -= 1;
                        return Err(self.error("a type length"));
                    }
                }
                self.expect(Tok::RParen, "`)`")?;
            }
            columns.push((name, ty));
            match self.bump() {
                Tok::Comma => continue,
                Tok::RParen => break,
                _ => {
                    self.pos -= 1;
                    return Err(self.error("`,` or `)`"));
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(TypeDecl { predicate, columns })
    }

    fn rule(&mut self) -> Result<Rule, DatalogError> {
        let id = self.fresh_id();
        let sign = if *self.peek() == Tok::Minus {
            self.bump();
            HeadSign::Restricting
        } else {
            HeadSign::Regular
        };
        let head = self.atom()?;
        let body = if *self.peek() == Tok::Neck {
            self.bump();
            self.body()?
        } else {
            Vec::new()
        };
        Ok(Rule { id, sign, head, body })
    }

    fn body(&mut self) -> Result<Vec<Goal>, DatalogError> {
        let mut goals = vec![self.goal()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            goals.push(self.goal()?);
        }
        Ok(goals)
    }

    fn goal(&mut self) -> Result<Goal, DatalogError> {
        match self.element()? {
            Element::Goal(g) => Ok(g),
            Element::Items(items) => self.finish_implication(items),
        }
    }

    /// Continues an antecedent list until `=>` and parses the consequent.
    fn finish_implication(&mut self, mut items: Vec<Rule>) -> Result<Goal, DatalogError> {
        loop {
            match self.peek() {
                Tok::And => {
                    self.bump();
                    match self.element()? {
                        Element::Items(more) => items.extend(more),
                        Element::Goal(Goal::Atom(a)) => items.push(Rule::fact(self.fresh_id(), a)),
                        Element::Goal(_) => return Err(self.error("an assumed rule")),
                    }
                }
                Tok::Implies => {
                    self.bump();
                    let consequent = self.goal()?;
                    return Ok(Goal::implies(items, consequent));
                }
                _ => return Err(self.error("`/\\` or `=>`")),
            }
        }
    }

    fn element(&mut self) -> Result<Element, DatalogError> {
        match self.peek().clone() {
            Tok::Ident(w) if w == "not" && !matches!(self.peek_at(1), Tok::Cmp(_)) => {
                self.bump();
                let inner = self.primary()?;
                Ok(Element::Goal(Goal::negation(inner)))
            }
            Tok::Minus if matches!(self.peek_at(1), Tok::Ident(_)) => {
                let id = self.fresh_id();
                self.bump();
                let head = self.atom()?;
                Ok(Element::Items(vec![Rule::fact(id, head).restricting()]))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.paren_content()?;
                self.expect(Tok::RParen, "`)`")?;
                match inner {
                    Element::Goal(Goal::Atom(a)) if self.continues_antecedent() => {
                        Ok(Element::Items(vec![Rule::fact(self.fresh_id(), a)]))
                    }
                    Element::Items(_) if !self.continues_antecedent() => {
                        Err(self.error("`=>` after assumed rules"))
                    }
                    other => Ok(other),
                }
            }
            Tok::Ident(_) if !matches!(self.peek_at(1), Tok::Cmp(_)) => {
                let id = self.fresh_id();
                let a = self.atom()?;
                if self.continues_antecedent() {
                    Ok(Element::Items(vec![Rule::fact(id, a)]))
                } else {
                    // the id was speculative
                    self.next_id -= 1;
                    Ok(Element::Goal(Goal::Atom(a)))
                }
            }
            _ => Ok(Element::Goal(self.comparison()?)),
        }
    }

    fn continues_antecedent(&self) -> bool {
        matches!(self.peek(), Tok::And | Tok::Implies)
    }

    /// Content of a parenthesized element: a goal, or one or more rules.
    fn paren_content(&mut self) -> Result<Element, DatalogError> {
        let mut items = if self.starts_rule() {
            vec![self.rule()?]
        } else {
            match self.element()? {
                Element::Items(items) => items,
                Element::Goal(Goal::Atom(a)) if matches!(self.peek(), Tok::Comma | Tok::And) => {
                    vec![Rule::fact(self.fresh_id(), a)]
                }
                Element::Goal(g) => return Ok(Element::Goal(g)),
            }
        };
        loop {
            match self.peek() {
                // a `,` after a rule with a body was consumed by that body
                Tok::And | Tok::Comma => {
                    self.bump();
                    if self.starts_rule() {
                        items.push(self.rule()?);
                    } else {
                        match self.element()? {
                            Element::Items(more) => items.extend(more),
                            Element::Goal(Goal::Atom(a)) => items.push(Rule::fact(self.fresh_id(), a)),
                            Element::Goal(_) => return Err(self.error("an assumed rule")),
                        }
                    }
                }
                Tok::Implies => return self.finish_implication(items).map(Element::Goal),
                _ => return Ok(Element::Items(items)),
            }
        }
    }

    fn starts_rule(&self) -> bool {
        match self.peek() {
            Tok::Ident(w) if w != "not" => self.atom_followed_by_neck(self.pos),
            Tok::Minus if matches!(self.peek_at(1), Tok::Ident(_)) => self.atom_followed_by_neck(self.pos + 1),
            _ => false,
        }
    }

    fn atom_followed_by_neck(&self, start: usize) -> bool {
        let mut i = start + 1;
        if self.toks[i].tok == Tok::LParen {
            let mut depth = 0usize;
            while i < self.toks.len() {
                match self.toks[i].tok {
                    Tok::LParen => depth += 1,
                    Tok::RParen => {
                        depth -= 1;
                        if depth == 0 {
                            break;
                        }
                    }
                    Tok::Eof => return false,
                    _ => {}
                }
                i += 1;
            }
            i += 1;
        }
        matches!(self.toks.get(i).map(|s| &s.tok), Some(Tok::Neck))
    }

    fn primary(&mut self) -> Result<Goal, DatalogError> {
        match self.peek().clone() {
            Tok::Ident(w) if w == "not" && !matches!(self.peek_at(1), Tok::Cmp(_)) => {
                self.bump();
                Ok(Goal::negation(self.primary()?))
            }
            Tok::LParen => {
                self.bump();
                let g = self.goal()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(g)
            }
            Tok::Ident(_) if !matches!(self.peek_at(1), Tok::Cmp(_)) => Ok(Goal::Atom(self.atom()?)),
            _ => self.comparison(),
        }
    }

    fn comparison(&mut self) -> Result<Goal, DatalogError> {
        let lhs = self.term()?;
        let op = match self.bump() {
            Tok::Cmp(op) => op,
            _ => {
                self.pos -= 1;
                return Err(self.error("a comparison operator"));
            }
        };
        let rhs = self.term()?;
        Ok(Goal::compare(lhs, op, rhs))
    }

    fn atom(&mut self) -> Result<Atom, DatalogError> {
        let predicate = match self.bump() {
            Tok::Ident(s) => s,
            _ => {
                self.pos -= 1;
                return Err(self.error("a predicate name"));
            }
        };
        let mut args = Vec::new();
        if *self.peek() == Tok::LParen {
            self.bump();
            loop {
                args.push(self.term()?);
                match self.bump() {
                    Tok::Comma => continue,
                    Tok::RParen => break,
                    _ => {
                        self.pos -= 1;
                        return Err(self.error("`,` or `)`"));
                    }
                }
            }
        }
        Ok(Atom { predicate, args })
    }

    fn term(&mut self) -> Result<Term, DatalogError> {
        match self.bump() {
            Tok::Var(v) if v == "_" => {
                self.anon += 1;
                Ok(Term::var(format!("_Anon{}", self.anon)))
            }
            Tok::Var(v) => Ok(Term::var(v)),
            Tok::Ident(s) => Ok(Term::Const(Value::Str(s))),
            Tok::Str(s) => Ok(Term::Const(Value::Str(s))),
            Tok::Int(i) => Ok(Term::Const(Value::Int(i))),
            Tok::Float(x) => Ok(Term::Const(Value::float(x))),
            Tok::Minus => match self.bump() {
                Tok::Int(i) => Ok(Term::Const(Value::Int(-i))),
                Tok::Float(x) => Ok(Term::Const(Value::float(-x))),
                _ => {
                    self.pos -= 1;
                    Err(self.error("a number"))
                }
            },
            _ => {
                self.pos -= 1;
                Err(self.error("a term"))
            }
        }
    }

    fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }
}

/// Parses any sequence of clauses: rules, `?-` queries and type declarations.
pub fn parse_clauses(text: &str) -> Result<Vec<Clause>, DatalogError> {
    let mut p = Parser::new(text)?;
    let mut out = Vec::new();
    while !p.at_eof() {
        out.push(p.clause()?);
    }
    Ok(out)
}

/// Parses a program made only of rules and facts, checking arities.
pub fn parse_datalog(text: &str) -> Result<Program, DatalogError> {
    let mut p = Parser::new(text)?;
    let mut rules = Vec::new();
    while !p.at_eof() {
        if matches!(p.peek(), Tok::QueryNeck | Tok::Neck) {
            return Err(p.error("a rule"));
        }
        rules.push(p.rule()?);
        p.expect(Tok::Dot, "`.`")?;
    }
    check_arities(rules.iter())?;
    Ok(Program::new(rules))
}

/// Parses a single rule; the trailing `.` is optional.
pub fn parse_rule(text: &str) -> Result<Rule, DatalogError> {
    let mut p = Parser::new(text)?;
    let r = p.rule()?;
    if *p.peek() == Tok::Dot {
        p.bump();
    }
    if !p.at_eof() {
        return Err(p.error("end of input"));
    }
    Ok(r)
}

/// Parses a comma-separated goal list, e.g. a query body; a trailing `.` is
/// optional.
pub fn parse_goal_list(text: &str) -> Result<Vec<Goal>, DatalogError> {
    let mut p = Parser::new(text)?;
    if *p.peek() == Tok::QueryNeck {
        p.bump();
    }
    let goals = p.body()?;
    if *p.peek() == Tok::Dot {
        p.bump();
    }
    if !p.at_eof() {
        return Err(p.error("end of input"));
    }
    Ok(goals)
}
