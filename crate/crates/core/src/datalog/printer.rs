use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{Atom, Goal, HeadSign, Rule, Substitutable, Substitution, Term, Variable};

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(c) => write!(f, "{c}"),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, t) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{t}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

fn write_primary(f: &mut fmt::Formatter<'_>, g: &Goal) -> fmt::Result {
    match g {
        Goal::Atom(_) | Goal::Not(_) => write!(f, "{g}"),
        _ => write!(f, "({g})"),
    }
}

fn write_antecedent_item(f: &mut fmt::Formatter<'_>, r: &Rule) -> fmt::Result {
    if r.is_fact() {
        write_head(f, r)
    } else {
        f.write_str("(")?;
        write_rule_body(f, r)?;
        f.write_str(")")
    }
}

fn write_head(f: &mut fmt::Formatter<'_>, r: &Rule) -> fmt::Result {
    if r.sign == HeadSign::Restricting {
        f.write_str("-")?;
    }
    write!(f, "{}", r.head)
}

fn write_rule_body(f: &mut fmt::Formatter<'_>, r: &Rule) -> fmt::Result {
    write_head(f, r)?;
    if !r.body.is_empty() {
        f.write_str(" :- ")?;
        for (i, g) in r.body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{g}")?;
        }
    }
    Ok(())
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Goal::Atom(a) => write!(f, "{a}"),
            Goal::Not(g) => {
                f.write_str("not ")?;
                write_primary(f, g)
            }
            Goal::Compare { lhs, op, rhs } => write!(f, "{lhs}{}{rhs}", op.datalog_symbol()),
            Goal::Implies {
                antecedent,
                consequent,
            } => {
                for (i, r) in antecedent.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" /\\ ")?;
                    }
                    write_antecedent_item(f, r)?;
                }
                write!(f, " => {consequent}")
            }
        }
    }
}

/// Single-line rendering, e.g. `answer(A) :- student(A), not take(A,_B).`
impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_rule_body(f, self)?;
        f.write_str(".")
    }
}

struct Item<'a>(&'a Rule);

impl fmt::Display for Item<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_antecedent_item(f, self.0)
    }
}

/// Multi-line rendering used in compilation listings. A rule whose body is
/// a single embedded implication is laid out with assumed facts on one
/// line, each assumed rule on its own line, then `=>` and the consequent.
/// Anything else falls back to the single-line form.
pub fn display_rule_pretty(rule: &Rule) -> String {
    let [Goal::Implies {
        antecedent,
        consequent,
    }] = rule.body.as_slice()
    else {
        return rule.to_string();
    };
    let mut head = String::new();
    if rule.sign == HeadSign::Restricting {
        head.push('-');
    }
    head.push_str(&rule.head.to_string());

    let mut lines: Vec<String> = Vec::new();
    let mut facts: Vec<String> = Vec::new();
    for r in antecedent {
        if r.is_fact() {
            facts.push(Item(r).to_string());
        } else {
            if !facts.is_empty() {
                lines.push(facts.join(" /\\ "));
                facts.clear();
            }
            lines.push(Item(r).to_string());
        }
    }
    if !facts.is_empty() {
        lines.push(facts.join(" /\\ "));
    }
    let last = lines.len() - 1;
    let mut out = format!("{head} :-\n");
    for (i, l) in lines.iter().enumerate() {
        out.push_str(l);
        if i < last {
            out.push_str(" /\\");
        }
        out.push('\n');
    }
    out.push_str("=>\n");
    out.push_str(&format!("{consequent}."));
    out
}

fn letter_name(i: usize) -> String {
    let letter = (b'A' + (i % 26) as u8) as char;
    match i / 26 {
        0 => letter.to_string(),
        n => format!("{letter}{n}"),
    }
}

fn visit_terms<'a>(rule: &'a Rule, f: &mut dyn FnMut(&'a Term)) {
    fn goal<'a>(g: &'a Goal, f: &mut dyn FnMut(&'a Term)) {
        match g {
            Goal::Atom(a) => a.args.iter().for_each(&mut *f),
            Goal::Not(g) => goal(g, f),
            Goal::Compare { lhs, rhs, .. } => {
                f(lhs);
                f(rhs);
            }
            Goal::Implies {
                antecedent,
                consequent,
            } => {
                for r in antecedent {
                    visit_terms(r, f);
                }
                goal(consequent, f);
            }
        }
    }
    rule.head.args.iter().for_each(&mut *f);
    for g in &rule.body {
        goal(g, f);
    }
}

/// Renames variables to `A`, `B`, `C`, ... in order of first occurrence and
/// underscores body variables that occur exactly once.
pub fn normalize_variables(rule: &Rule) -> Rule {
    let mut order: Vec<Variable> = Vec::new();
    let mut counts: BTreeMap<Variable, usize> = BTreeMap::new();
    visit_terms(rule, &mut |t| {
        if let Term::Var(v) = t {
            let c = counts.entry(v.clone()).or_insert(0);
            if *c == 0 {
                order.push(v.clone());
            }
            *c += 1;
        }
    });
    let mut head_vars = BTreeSet::new();
    super::collect_atom_vars(&rule.head, &mut head_vars);
    let mut theta = Substitution::new();
    for (i, v) in order.iter().enumerate() {
        let mut name = letter_name(i);
        if counts[v] == 1 && !head_vars.contains(v) {
            name.insert(0, '_');
        }
        theta.insert(v.clone(), Term::var(name));
    }
    rule.substitute(&theta)
}

#[cfg(test)]
mod tests {
    use super::super::parse_rule;
    use super::*;

    #[test]
    fn pretty_layout_groups_facts() {
        let r = parse_rule(
            "answer(A) :- -student(adam) /\\ take(adam,lp) /\\ take(scott,db) /\\ \
             (grad(B) :- student(B), take(B,lp), take(B,db)) => grad(A).",
        )
        .unwrap();
        assert_eq!(
            display_rule_pretty(&r),
            "answer(A) :-\n-student(adam) /\\ take(adam,lp) /\\ take(scott,db) /\\\n\
             (grad(B) :- student(B), take(B,lp), take(B,db))\n=>\ngrad(A)."
        );
    }

    #[test]
    fn plain_rule_is_single_line() {
        let r = parse_rule("answer(A) :- student(A), not take(A,_B).").unwrap();
        assert_eq!(display_rule_pretty(&r), "answer(A) :- student(A), not take(A,_B).");
    }

    #[test]
    fn normalization_letters_and_underscores() {
        let r = parse_rule("ans(X9) :- s(X9), not t(X9,Y3), (g(Z) :- s(Z)) => g(X9).").unwrap();
        assert_eq!(
            normalize_variables(&r).to_string(),
            "ans(A) :- s(A), not t(A,_B), (g(C) :- s(C)) => g(A)."
        );
    }

    #[test]
    fn letters_wrap_with_suffix() {
        assert_eq!(letter_name(0), "A");
        assert_eq!(letter_name(25), "Z");
        assert_eq!(letter_name(26), "A1");
    }
}
