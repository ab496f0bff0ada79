//! STL and PSTL formulas: abstract syntax, concrete syntax, templates with
//! declared parameters, and an empirical polarity check.

mod parse;
mod polarity;
mod template;

pub use parse::parse_formula;
pub use polarity::{validate_polarity, Counterexample, PolarityReport};
pub use template::{ParamKind, ParameterDecl, Polarity, PstlTemplate};

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormulaError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("reversed interval bounds [{lo}, {hi}]")]
    ReversedInterval { lo: f64, hi: f64 },
    #[error("empty interval: bounds equal ({0}) with an open end")]
    EmptyInterval(f64),
    #[error("no parameters declared")]
    NoParameters,
    #[error("undeclared parameter `{0}`")]
    UndeclaredParameter(String),
    #[error("parameter `{0}` is declared but never referenced")]
    UnreferencedParameter(String),
    #[error("parameter `{0}` declared more than once")]
    DuplicateParameter(String),
    #[error("parameter `{name}` is used as a {used} bound but declared as {declared}")]
    KindMismatch {
        name: String,
        used: &'static str,
        declared: &'static str,
    },
    #[error("template line {line}: {msg}")]
    BadDeclaration { line: usize, msg: String },
    #[error("formula is not ground; unresolved parameters: {0:?}")]
    NotGround(Vec<String>),
    #[error("no value assigned to parameter `{0}`")]
    MissingAssignment(String),
    #[error("value {value} for parameter `{name}` outside its domain [{lo}, {hi}]")]
    OutOfDomain {
        name: String,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("cannot instantiate with the {0} sentinel")]
    Sentinel(&'static str),
    #[error("polarity check needs at least one sample")]
    NoSamples,
    #[error("cannot read template {path}: {msg}")]
    Io { path: String, msg: String },
    #[error("evaluation failed: {0}")]
    Evaluation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cmp {
    Ge,
    Le,
    Gt,
    Lt,
    Eq,
}

impl Cmp {
    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Cmp::Ge => lhs >= rhs,
            Cmp::Le => lhs <= rhs,
            Cmp::Gt => lhs > rhs,
            Cmp::Lt => lhs < rhs,
            Cmp::Eq => lhs == rhs,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Cmp::Ge => ">=",
            Cmp::Le => "<=",
            Cmp::Gt => ">",
            Cmp::Lt => "<",
            Cmp::Eq => "=",
        }
    }
}

/// `Σ coef·channel + constant`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearExpr {
    pub terms: Vec<(f64, String)>,
    pub constant: f64,
}

impl LinearExpr {
    pub fn channel(name: impl Into<String>) -> Self {
        Self {
            terms: vec![(1.0, name.into())],
            constant: 0.0,
        }
    }

    pub fn channels(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(|(_, c)| c.as_str())
    }
}

/// Right-hand side of an atom.
#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Const(f64),
    Param(String),
    /// `-p`
    NegParam(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub expr: LinearExpr,
    pub cmp: Cmp,
    pub rhs: Operand,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TimeBound {
    /// Seconds; the upper bound may be `f64::INFINITY`.
    Const(f64),
    Param(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub lo: TimeBound,
    pub hi: TimeBound,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Self {
            lo: TimeBound::Const(lo),
            hi: TimeBound::Const(hi),
            lo_open: false,
            hi_open: false,
        }
    }

    /// `[0, ∞)`, the implicit interval of `F(φ)` / `G(φ)`.
    pub fn unbounded() -> Self {
        Self {
            lo: TimeBound::Const(0.0),
            hi: TimeBound::Const(f64::INFINITY),
            lo_open: false,
            hi_open: true,
        }
    }

    fn is_unbounded(&self) -> bool {
        *self == Self::unbounded()
    }

    /// Constant bounds, when both are constant.
    pub fn constant_bounds(&self) -> Option<(f64, f64)> {
        match (&self.lo, &self.hi) {
            (TimeBound::Const(a), TimeBound::Const(b)) => Some((*a, *b)),
            _ => None,
        }
    }

    pub(crate) fn check_constant(&self) -> Result<(), FormulaError> {
        if let Some((lo, hi)) = self.constant_bounds() {
            if lo > hi {
                return Err(FormulaError::ReversedInterval { lo, hi });
            }
            if lo == hi && (self.lo_open || self.hi_open) {
                return Err(FormulaError::EmptyInterval(lo));
            }
        }
        Ok(())
    }
}

/// STL formula; a PSTL formula when any operand or bound is a parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    True,
    Atom(Atom),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Eventually(Interval, Box<Formula>),
    Always(Interval, Box<Formula>),
    Until(Interval, Box<Formula>, Box<Formula>),
}

/// Where a parameter occurs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Occurrence {
    Value,
    Time,
}

impl Formula {
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    /// Left-associated conjunction; `None` for an empty iterator.
    pub fn conjunction(parts: impl IntoIterator<Item = Formula>) -> Option<Self> {
        parts.into_iter().reduce(Formula::and)
    }

    /// Number of operator and atom symbols (every AST node counts once).
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::True | Formula::Atom(_) => vec![],
            Formula::Not(a) | Formula::Eventually(_, a) | Formula::Always(_, a) => vec![a],
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(_, a, b) => vec![a, b],
        }
    }

    /// All subtrees in pre-order, the formula itself first.
    pub fn subformulas(&self) -> Vec<&Formula> {
        let mut out = vec![self];
        let mut i = 0;
        while i < out.len() {
            let kids = out[i].children();
            out.extend(kids);
            i += 1;
        }
        out
    }

    pub(crate) fn visit_params(&self, f: &mut impl FnMut(&str, Occurrence)) {
        match self {
            Formula::True => {}
            Formula::Atom(a) => match &a.rhs {
                Operand::Param(p) | Operand::NegParam(p) => f(p, Occurrence::Value),
                Operand::Const(_) => {}
            },
            Formula::Not(a) => a.visit_params(f),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.visit_params(f);
                b.visit_params(f);
            }
            Formula::Eventually(i, a) | Formula::Always(i, a) => {
                visit_interval(i, f);
                a.visit_params(f);
            }
            Formula::Until(i, a, b) => {
                visit_interval(i, f);
                a.visit_params(f);
                b.visit_params(f);
            }
        }
    }

    /// Names of every referenced parameter.
    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_params(&mut |p, _| {
            out.insert(p.to_string());
        });
        out
    }

    pub fn is_ground(&self) -> bool {
        self.params().is_empty()
    }

    /// Channels referenced by atoms.
    pub fn channels(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for f in self.subformulas() {
            if let Formula::Atom(a) = f {
                out.extend(a.expr.channels().map(str::to_string));
            }
        }
        out
    }

    /// Atoms using `=`.
    pub fn equality_atoms(&self) -> Vec<&Atom> {
        self.subformulas()
            .into_iter()
            .filter_map(|f| match f {
                Formula::Atom(a) if a.cmp == Cmp::Eq => Some(a),
                _ => None,
            })
            .collect()
    }

    /// Replaces parameter references using `lookup`; references it does not
    /// resolve are kept.
    pub fn substitute(&self, lookup: &impl Fn(&str) -> Option<f64>) -> Formula {
        let bound = |b: &TimeBound| match b {
            TimeBound::Param(p) => lookup(p).map_or_else(|| b.clone(), TimeBound::Const),
            c => c.clone(),
        };
        let interval = |i: &Interval| Interval {
            lo: bound(&i.lo),
            hi: bound(&i.hi),
            lo_open: i.lo_open,
            hi_open: i.hi_open,
        };
        match self {
            Formula::True => Formula::True,
            Formula::Atom(a) => {
                let rhs = match &a.rhs {
                    Operand::Param(p) => lookup(p).map_or_else(|| a.rhs.clone(), Operand::Const),
                    Operand::NegParam(p) => {
                        lookup(p).map_or_else(|| a.rhs.clone(), |v| Operand::Const(-v))
                    }
                    c => c.clone(),
                };
                Formula::Atom(Atom {
                    expr: a.expr.clone(),
                    cmp: a.cmp,
                    rhs,
                })
            }
            Formula::Not(a) => Formula::not(a.substitute(lookup)),
            Formula::And(a, b) => Formula::and(a.substitute(lookup), b.substitute(lookup)),
            Formula::Or(a, b) => Formula::or(a.substitute(lookup), b.substitute(lookup)),
            Formula::Eventually(i, a) => {
                Formula::Eventually(interval(i), Box::new(a.substitute(lookup)))
            }
            Formula::Always(i, a) => Formula::Always(interval(i), Box::new(a.substitute(lookup))),
            Formula::Until(i, a, b) => Formula::Until(
                interval(i),
                Box::new(a.substitute(lookup)),
                Box::new(b.substitute(lookup)),
            ),
        }
    }

    /// Parses a formula that must not contain parameters.
    pub fn parse_ground(text: &str) -> Result<Formula, FormulaError> {
        let f = parse_formula(text)?;
        let params = f.params();
        if params.is_empty() {
            Ok(f)
        } else {
            Err(FormulaError::NotGround(params.into_iter().collect()))
        }
    }
}

fn visit_interval(i: &Interval, f: &mut impl FnMut(&str, Occurrence)) {
    for b in [&i.lo, &i.hi] {
        if let TimeBound::Param(p) = b {
            f(p, Occurrence::Time);
        }
    }
}

impl fmt::Display for LinearExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (c, name)) in self.terms.iter().enumerate() {
            let (neg, mag) = (*c < 0.0 || (*c == 0.0 && c.is_sign_negative()), c.abs());
            match (i, neg) {
                (0, false) => {}
                (0, true) => f.write_str("-")?,
                (_, false) => f.write_str(" + ")?,
                (_, true) => f.write_str(" - ")?,
            }
            if mag == 1.0 {
                f.write_str(name)?;
            } else {
                write!(f, "{mag}*{name}")?;
            }
        }
        if self.terms.is_empty() {
            write!(f, "{}", self.constant)?;
        } else if self.constant != 0.0 {
            let sign = if self.constant < 0.0 { '-' } else { '+' };
            write!(f, " {sign} {}", self.constant.abs())?;
        }
        Ok(())
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Const(c) => write!(f, "{c}"),
            Operand::Param(p) => f.write_str(p),
            Operand::NegParam(p) => write!(f, "-{p}"),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.expr, self.cmp.symbol(), self.rhs)
    }
}

impl fmt::Display for TimeBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeBound::Const(c) => write!(f, "{c}"),
            TimeBound::Param(p) => f.write_str(p),
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{},{}{}",
            if self.lo_open { '(' } else { '[' },
            self.lo,
            self.hi,
            if self.hi_open { ')' } else { ']' }
        )
    }
}

// Binding strength: `|` = 1, `&` = 2, everything else = 3.
fn precedence(f: &Formula) -> u8 {
    match f {
        Formula::Or(..) => 1,
        Formula::And(..) => 2,
        _ => 3,
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, child: &Formula, min: u8) -> fmt::Result {
    if precedence(child) < min {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

fn write_interval(f: &mut fmt::Formatter<'_>, i: &Interval) -> fmt::Result {
    if i.is_unbounded() {
        Ok(())
    } else {
        write!(f, "{i}")
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(a) => match **a {
                Formula::True
                | Formula::Not(_)
                | Formula::Eventually(..)
                | Formula::Always(..)
                | Formula::Until(..) => write!(f, "!{a}"),
                _ => write!(f, "!({a})"),
            },
            // left-associative: a same-precedence right child needs parens
            Formula::And(a, b) => {
                write_operand(f, a, 2)?;
                f.write_str(" & ")?;
                write_operand(f, b, 3)
            }
            Formula::Or(a, b) => {
                write_operand(f, a, 1)?;
                f.write_str(" | ")?;
                write_operand(f, b, 2)
            }
            Formula::Eventually(i, a) => {
                f.write_str("F")?;
                write_interval(f, i)?;
                write!(f, "({a})")
            }
            Formula::Always(i, a) => {
                f.write_str("G")?;
                write_interval(f, i)?;
                write!(f, "({a})")
            }
            Formula::Until(i, a, b) => {
                f.write_str("U")?;
                write_interval(f, i)?;
                write!(f, "({a}, {b})")
            }
        }
    }
}
