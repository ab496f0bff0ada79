//! Orders on parameter space and projection of traces onto the validity
//! boundary of a template.

mod search;
mod table;

pub use search::{
    project_all, project_all_sequential, project_lex, project_scalar, query_bound, Projection,
    Projector,
};
pub use table::ProjectionTable;

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{ParameterDecl, Polarity};
use crate::semantics::SemanticsError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProjectionError {
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error("valuation parameters {found:?} do not match {expected:?}")]
    MismatchedParameters {
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("sentinel valuation where a point is required")]
    Sentinel,
    #[error("{what} needs one entry per parameter ({expected}), got {found}")]
    Arity {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid {what}: {msg}")]
    Invalid { what: &'static str, msg: String },
    #[error("projection table: {0}")]
    Table(String),
}

/// A parameter valuation, or one of the sentinels adjoined to the space.
/// `Top` marks an empty validity domain, `Bottom` a full one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Valuation {
    Top,
    Bottom,
    Point(BTreeMap<String, f64>),
}

impl Valuation {
    pub fn point<S: Into<String>>(pairs: impl IntoIterator<Item = (S, f64)>) -> Self {
        Valuation::Point(pairs.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn is_sentinel(&self) -> bool {
        !matches!(self, Valuation::Point(_))
    }

    pub fn as_map(&self) -> Option<&BTreeMap<String, f64>> {
        match self {
            Valuation::Point(m) => Some(m),
            _ => None,
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.as_map().and_then(|m| m.get(name).copied())
    }

    pub fn sentinel_name(&self) -> &'static str {
        match self {
            Valuation::Top => "top",
            Valuation::Bottom => "bot",
            Valuation::Point(_) => "none",
        }
    }
}

/// The parameter domains of a template, in priority order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSpace {
    decls: Vec<ParameterDecl>,
}

impl ParameterSpace {
    pub fn new(decls: Vec<ParameterDecl>) -> Self {
        Self { decls }
    }

    pub fn decls(&self) -> &[ParameterDecl] {
        &self.decls
    }

    pub fn len(&self) -> usize {
        self.decls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decls.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.decls.iter().map(|d| d.name.clone()).collect()
    }

    /// The ⊴-infimum of the domain.
    pub fn strongest(&self) -> Vec<f64> {
        self.decls.iter().map(ParameterDecl::strongest).collect()
    }

    /// The ⊴-supremum of the domain.
    pub fn weakest(&self) -> Vec<f64> {
        self.decls.iter().map(ParameterDecl::weakest).collect()
    }

    /// `a ⊴_i b`: `a` is at least as strong as `b` in coordinate `i`.
    pub fn leq_i(&self, i: usize, a: f64, b: f64) -> bool {
        match self.decls[i].polarity {
            Polarity::Plus => a <= b,
            Polarity::Minus => a >= b,
        }
    }

    /// Moves `v` by `delta >= 0` towards the stronger end of coordinate `i`.
    pub fn strengthen(&self, i: usize, v: f64, delta: f64) -> f64 {
        match self.decls[i].polarity {
            Polarity::Plus => v - delta,
            Polarity::Minus => v + delta,
        }
    }

    /// Moves `v` by `delta >= 0` towards the weaker end of coordinate `i`.
    pub fn weaken(&self, i: usize, v: f64, delta: f64) -> f64 {
        self.strengthen(i, v, -delta)
    }

    /// The ⊴-weaker of two values in coordinate `i`.
    pub fn weaker_of(&self, i: usize, a: f64, b: f64) -> f64 {
        if self.leq_i(i, a, b) {
            b
        } else {
            a
        }
    }

    /// The ⊴-stronger of two values in coordinate `i`.
    pub fn stronger_of(&self, i: usize, a: f64, b: f64) -> f64 {
        if self.leq_i(i, a, b) {
            a
        } else {
            b
        }
    }

    /// Coordinates of a point valuation in priority order.
    pub fn to_vec(&self, v: &Valuation) -> Result<Vec<f64>, ProjectionError> {
        let map = v.as_map().ok_or(ProjectionError::Sentinel)?;
        let mismatch = || ProjectionError::MismatchedParameters {
            expected: self.names(),
            found: map.keys().cloned().collect(),
        };
        if map.len() != self.decls.len() {
            return Err(mismatch());
        }
        self.decls
            .iter()
            .map(|d| map.get(&d.name).copied().ok_or_else(mismatch))
            .collect()
    }

    pub fn valuation(&self, coords: &[f64]) -> Valuation {
        Valuation::Point(
            self.decls
                .iter()
                .zip(coords)
                .map(|(d, &v)| (d.name.clone(), v))
                .collect(),
        )
    }

    pub fn contains(&self, coords: &[f64]) -> bool {
        coords.len() == self.decls.len()
            && self.decls.iter().zip(coords).all(|(d, &v)| d.contains(v))
    }

    /// Componentwise `ν₁ ⊴ ν₂`, with `Bottom ⊴ ν ⊴ Top` for every `ν`.
    pub fn param_leq(&self, v1: &Valuation, v2: &Valuation) -> Result<bool, ProjectionError> {
        match (v1, v2) {
            (Valuation::Bottom, _) | (_, Valuation::Top) => Ok(true),
            (_, Valuation::Bottom) | (Valuation::Top, _) => Ok(false),
            _ => {
                let (a, b) = (self.to_vec(v1)?, self.to_vec(v2)?);
                Ok(self.coords_leq(&a, &b))
            }
        }
    }

    pub fn coords_leq(&self, a: &[f64], b: &[f64]) -> bool {
        (0..self.decls.len()).all(|i| self.leq_i(i, a[i], b[i]))
    }

    /// Lexicographic order along the priority list, stronger first.
    pub fn lex_cmp(&self, v1: &Valuation, v2: &Valuation) -> Result<Ordering, ProjectionError> {
        let rank = |v: &Valuation| match v {
            Valuation::Bottom => 0,
            Valuation::Point(_) => 1,
            Valuation::Top => 2,
        };
        match (v1, v2) {
            (Valuation::Point(_), Valuation::Point(_)) => {
                let (a, b) = (self.to_vec(v1)?, self.to_vec(v2)?);
                Ok(self.lex_cmp_coords(&a, &b))
            }
            _ => Ok(rank(v1).cmp(&rank(v2))),
        }
    }

    pub fn lex_cmp_coords(&self, a: &[f64], b: &[f64]) -> Ordering {
        for i in 0..self.decls.len() {
            if a[i] != b[i] {
                return if self.leq_i(i, a[i], b[i]) {
                    Ordering::Less
                } else {
                    Ordering::Greater
                };
            }
        }
        Ordering::Equal
    }
}
