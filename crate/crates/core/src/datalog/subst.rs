use std::collections::BTreeMap;

use super::{Atom, Goal, Rule, Term, Variable};

/// A finite map from variables to terms.
pub type Substitution = BTreeMap<Variable, Term>;

/// Simultaneous replacement of variables. Antecedent rules of embedded
/// implications are traversed as well; their variables are disjoint from
/// the enclosing rule in well-formed programs, so a substitution built for
/// the enclosing rule leaves them untouched.
pub trait Substitutable: Sized {
    fn substitute(&self, theta: &Substitution) -> Self;
}

impl Substitutable for Term {
    fn substitute(&self, theta: &Substitution) -> Self {
        match self {
            Term::Var(v) => theta.get(v).cloned().unwrap_or_else(|| self.clone()),
            Term::Const(_) => self.clone(),
        }
    }
}

impl Substitutable for Atom {
    fn substitute(&self, theta: &Substitution) -> Self {
        Atom {
            predicate: self.predicate.clone(),
            args: self.args.iter().map(|t| t.substitute(theta)).collect(),
        }
    }
}

impl Substitutable for Goal {
    fn substitute(&self, theta: &Substitution) -> Self {
        match self {
            Goal::Atom(a) => Goal::Atom(a.substitute(theta)),
            Goal::Not(g) => Goal::Not(Box::new(g.substitute(theta))),
            Goal::Implies {
                antecedent,
                consequent,
            } => Goal::Implies {
                antecedent: antecedent.iter().map(|r| r.substitute(theta)).collect(),
                consequent: Box::new(consequent.substitute(theta)),
            },
            Goal::Compare { lhs, op, rhs } => Goal::Compare {
                lhs: lhs.substitute(theta),
                op: *op,
                rhs: rhs.substitute(theta),
            },
        }
    }
}

impl Substitutable for Rule {
    fn substitute(&self, theta: &Substitution) -> Self {
        Rule {
            id: self.id,
            sign: self.sign,
            head: self.head.substitute(theta),
            body: self.body.iter().map(|g| g.substitute(theta)).collect(),
        }
    }
}

pub fn apply_substitution<T: Substitutable>(x: &T, theta: &Substitution) -> T {
    x.substitute(theta)
}

/// `compose(a, b)` behaves like applying `a` and then `b`.
pub fn compose(first: &Substitution, then: &Substitution) -> Substitution {
    let mut out: Substitution = first
        .iter()
        .map(|(v, t)| (v.clone(), t.substitute(then)))
        .collect();
    for (v, t) in then {
        out.entry(v.clone()).or_insert_with(|| t.clone());
    }
    out
}
