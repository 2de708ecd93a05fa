use std::fmt;

use super::{PathFormula, ProbBound, Query, StateFormula};

// Binding strength: | < & < ! and atoms.
const OR: u8 = 0;
const AND: u8 = 1;
const UNARY: u8 = 2;

struct Prec<'a>(&'a StateFormula, u8);

impl fmt::Display for Prec<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Prec(formula, min) = *self;
        let level = if formula.as_or().is_some() {
            OR
        } else if matches!(formula, StateFormula::And(..)) {
            AND
        } else {
            UNARY
        };
        if level < min {
            return write!(f, "({})", Prec(formula, OR));
        }
        if let Some((a, b)) = formula.as_or() {
            return write!(f, "{} | {}", Prec(a, OR), Prec(b, AND));
        }
        match formula {
            StateFormula::True => f.write_str("true"),
            StateFormula::False => f.write_str("false"),
            StateFormula::Atom(a) => write!(f, "\"{a}\""),
            StateFormula::Not(x) => write!(f, "!{}", Prec(x, UNARY)),
            StateFormula::And(a, b) => write!(f, "{} & {}", Prec(a, AND), Prec(b, UNARY)),
            StateFormula::Prob(bound, path) => write!(f, "P{bound}[{path}]"),
        }
    }
}

impl fmt::Display for ProbBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbBound::Query => f.write_str("=?"),
            ProbBound::Threshold(op, p) => write!(f, "{}{}", op.symbol(), p),
        }
    }
}

impl fmt::Display for StateFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Prec(self, OR).fmt(f)
    }
}

impl fmt::Display for PathFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathFormula::Next(x) => write!(f, "X {x}"),
            PathFormula::Until(a, b) if **a == StateFormula::True => write!(f, "F {b}"),
            PathFormula::Until(a, b) => write!(f, "{a} U {b}"),
            PathFormula::BoundedUntil(a, b, k) if **a == StateFormula::True => {
                write!(f, "F<={k} {b}")
            }
            PathFormula::BoundedUntil(a, b, k) => write!(f, "{a} U<={k} {b}"),
        }
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.filter_state {
            Some(s) => write!(f, "filter(state, {}, \"{s}\")", self.formula),
            None => self.formula.fmt(f),
        }
    }
}

/// Canonical text of a query.
pub fn format(query: &Query) -> String {
    query.to_string()
}
