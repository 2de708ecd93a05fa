//! PCTL formulas over situation models.
//!
//! The AST keeps only core operators. Disjunction is stored as
//! `!(!a & !b)` and `F g` as `true U g`; the printer folds both back into
//! their sugared form, so `parse(format(q)) == q` for every query.

mod format;
mod parser;
mod requirements;

use std::fmt;

pub use self::format::format;
pub use parser::{parse, ParseError};
pub use requirements::{parse_requirements, RequirementsError, SafetyRequirement};

use crate::dtmc::Dtmc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Comparison {
    Lt,
    Le,
    Gt,
    Ge,
}

impl Comparison {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::Lt => "<",
            Comparison::Le => "<=",
            Comparison::Gt => ">",
            Comparison::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbBound {
    /// `=?`, the quantitative form.
    Query,
    Threshold(Comparison, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateFormula {
    True,
    False,
    Atom(String),
    Not(Box<StateFormula>),
    And(Box<StateFormula>, Box<StateFormula>),
    Prob(ProbBound, Box<PathFormula>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PathFormula {
    Next(Box<StateFormula>),
    Until(Box<StateFormula>, Box<StateFormula>),
    BoundedUntil(Box<StateFormula>, Box<StateFormula>, u64),
}

impl StateFormula {
    pub fn atom(label: impl Into<String>) -> Self {
        StateFormula::Atom(label.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: StateFormula) -> Self {
        StateFormula::Not(Box::new(f))
    }

    pub fn and(a: StateFormula, b: StateFormula) -> Self {
        StateFormula::And(Box::new(a), Box::new(b))
    }

    /// `a | b`, stored as `!(!a & !b)`.
    pub fn or(a: StateFormula, b: StateFormula) -> Self {
        Self::not(Self::and(Self::not(a), Self::not(b)))
    }

    pub fn prob(bound: ProbBound, path: PathFormula) -> Self {
        StateFormula::Prob(bound, Box::new(path))
    }

    /// Recognizes the stored shape of a disjunction.
    pub fn as_or(&self) -> Option<(&StateFormula, &StateFormula)> {
        match self {
            StateFormula::Not(inner) => match inner.as_ref() {
                StateFormula::And(l, r) => match (l.as_ref(), r.as_ref()) {
                    (StateFormula::Not(a), StateFormula::Not(b)) => Some((a, b)),
                    _ => None,
                },
                _ => None,
            },
            _ => None,
        }
    }

    /// Calls `f` on every atom label in the formula.
    pub fn visit_atoms<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            StateFormula::True | StateFormula::False => {}
            StateFormula::Atom(a) => f(a),
            StateFormula::Not(x) => x.visit_atoms(f),
            StateFormula::And(a, b) => {
                a.visit_atoms(f);
                b.visit_atoms(f);
            }
            StateFormula::Prob(_, path) => match path.as_ref() {
                PathFormula::Next(x) => x.visit_atoms(f),
                PathFormula::Until(a, b) | PathFormula::BoundedUntil(a, b, _) => {
                    a.visit_atoms(f);
                    b.visit_atoms(f);
                }
            },
        }
    }

    /// True if a `P=?` occurs anywhere except as this formula itself.
    pub fn has_nested_query(&self) -> bool {
        fn below(f: &StateFormula) -> bool {
            match f {
                StateFormula::True | StateFormula::False | StateFormula::Atom(_) => false,
                StateFormula::Not(x) => anywhere(x),
                StateFormula::And(a, b) => anywhere(a) || anywhere(b),
                StateFormula::Prob(_, path) => path.operands().into_iter().any(anywhere),
            }
        }
        fn anywhere(f: &StateFormula) -> bool {
            matches!(f, StateFormula::Prob(ProbBound::Query, _)) || below(f)
        }
        below(self)
    }
}

impl PathFormula {
    pub fn next(f: StateFormula) -> Self {
        PathFormula::Next(Box::new(f))
    }

    pub fn until(a: StateFormula, b: StateFormula) -> Self {
        PathFormula::Until(Box::new(a), Box::new(b))
    }

    pub fn bounded_until(a: StateFormula, b: StateFormula, k: u64) -> Self {
        PathFormula::BoundedUntil(Box::new(a), Box::new(b), k)
    }

    /// `F g`, stored as `true U g`.
    pub fn eventually(g: StateFormula) -> Self {
        Self::until(StateFormula::True, g)
    }

    /// `F<=k g`, stored as `true U<=k g`.
    pub fn bounded_eventually(g: StateFormula, k: u64) -> Self {
        Self::bounded_until(StateFormula::True, g, k)
    }

    pub fn operands(&self) -> Vec<&StateFormula> {
        match self {
            PathFormula::Next(x) => vec![x],
            PathFormula::Until(a, b) | PathFormula::BoundedUntil(a, b, _) => vec![a, b],
        }
    }
}

/// A formula, optionally evaluated from a chosen state: `filter(state, f, "s")`.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub formula: StateFormula,
    pub filter_state: Option<String>,
}

impl Query {
    pub fn new(formula: StateFormula) -> Self {
        Self {
            formula,
            filter_state: None,
        }
    }

    pub fn filtered(formula: StateFormula, state: impl Into<String>) -> Self {
        Self {
            formula,
            filter_state: Some(state.into()),
        }
    }
}

impl std::str::FromStr for Query {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FormulaDiagnostic {
    UnknownProposition(String),
    UnknownState(String),
    NestedQuantitative,
}

impl fmt::Display for FormulaDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormulaDiagnostic::UnknownProposition(p) => {
                write!(f, "proposition \"{p}\" labels no state of the model")
            }
            FormulaDiagnostic::UnknownState(s) => {
                write!(f, "filter state \"{s}\" is not a state of the model")
            }
            FormulaDiagnostic::NestedQuantitative => {
                f.write_str("P=? may only appear at the root of a query")
            }
        }
    }
}

/// Checks a query against a model's propositions and states.
pub fn validate_formula(query: &Query, dtmc: &Dtmc) -> Vec<FormulaDiagnostic> {
    let mut out = Vec::new();
    let mut atoms = Vec::new();
    query.formula.visit_atoms(&mut |a| atoms.push(a));
    atoms.sort_unstable();
    atoms.dedup();
    for a in atoms {
        if !dtmc.has_proposition(a) {
            out.push(FormulaDiagnostic::UnknownProposition(a.to_string()));
        }
    }
    if let Some(state) = &query.filter_state {
        if dtmc.index_of(state).is_none() {
            out.push(FormulaDiagnostic::UnknownState(state.clone()));
        }
    }
    if query.formula.has_nested_query() {
        out.push(FormulaDiagnostic::NestedQuantitative);
    }
    out
}
