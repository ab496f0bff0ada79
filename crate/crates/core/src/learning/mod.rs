//! Hyperbox enclosures of clusters, formulas describing them, and their
//! representatives.

mod convexity;
mod representatives;
mod synthesis;

pub use convexity::{check_comparable_convexity, ConvexityReport, Shape};
pub use representatives::{representatives, suggest_open_dims, LearnedCluster, Representatives};
pub use synthesis::{formula_size, synthesize_formula, SynthesizedFormula};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::clustering::sentinel_label;
use crate::formula::FormulaError;
use crate::projection::{ParameterSpace, ProjectionError, Valuation};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnError {
    #[error("no points to enclose")]
    Empty,
    #[error("sentinel projection cannot be enclosed")]
    Sentinel,
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error("bad corner `{0}`")]
    BadCorner(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("{what} needs {expected} entries, got {found}")]
    Arity {
        what: &'static str,
        expected: usize,
        found: usize,
    },
}

/// Axis-aligned box between a strong corner `nu_s` and a weak corner
/// `nu_w` (`nu_s ⊴ nu_w`). Faces through `nu_s` are closed; faces through
/// `nu_w` are open unless flagged closed because they lie on the weakest
/// end of the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperbox {
    space: ParameterSpace,
    nu_s: Vec<f64>,
    nu_w: Vec<f64>,
    closed_at_sup: Vec<bool>,
}

impl Hyperbox {
    /// Box with the weak faces closed exactly where `nu_w` meets the
    /// weakest end of the domain.
    pub fn new(space: ParameterSpace, nu_s: Vec<f64>, nu_w: Vec<f64>) -> Result<Self, LearnError> {
        let n = space.len();
        for (what, v) in [("nu_s", &nu_s), ("nu_w", &nu_w)] {
            if v.len() != n {
                return Err(LearnError::Arity {
                    what,
                    expected: n,
                    found: v.len(),
                });
            }
        }
        let closed_at_sup = space
            .decls()
            .iter()
            .zip(&nu_w)
            .map(|(d, &w)| w == d.weakest())
            .collect();
        Ok(Self {
            space,
            nu_s,
            nu_w,
            closed_at_sup,
        })
    }

    pub fn space(&self) -> &ParameterSpace {
        &self.space
    }

    pub fn nu_s(&self) -> &[f64] {
        &self.nu_s
    }

    pub fn nu_w(&self) -> &[f64] {
        &self.nu_w
    }

    pub fn closed_at_sup(&self) -> &[bool] {
        &self.closed_at_sup
    }

    pub fn strong_valuation(&self) -> Valuation {
        self.space.valuation(&self.nu_s)
    }

    pub fn weak_valuation(&self) -> Valuation {
        self.space.valuation(&self.nu_w)
    }

    pub fn dims(&self) -> usize {
        self.space.len()
    }

    /// Membership honoring face openness.
    pub fn contains(&self, p: &[f64]) -> bool {
        (0..self.dims()).all(|i| {
            let ps = &self.space;
            ps.leq_i(i, self.nu_s[i], p[i])
                && if self.closed_at_sup[i] {
                    ps.leq_i(i, p[i], self.nu_w[i])
                } else {
                    ps.leq_i(i, p[i], self.nu_w[i]) && p[i] != self.nu_w[i]
                }
        })
    }

    pub fn contains_valuation(&self, v: &Valuation) -> bool {
        self.space.to_vec(v).is_ok_and(|p| self.contains(&p))
    }

    /// The corner whose coordinate `i` is at `nu_w` when `bits[i]` is set
    /// and at `nu_s` otherwise.
    pub fn corner(&self, bits: &[bool]) -> Vec<f64> {
        bits.iter()
            .enumerate()
            .map(|(i, &b)| if b { self.nu_w[i] } else { self.nu_s[i] })
            .collect()
    }
}

/// The smallest box of the required openness enclosing `points`: the
/// componentwise ⊴-infimum and supremum, with each weak face pushed out by
/// `eps` (clamped to the domain). Dimensions in `open_dims` extend to the
/// weakest end of the domain.
pub fn bounding_hyperbox(
    space: &ParameterSpace,
    points: &[Valuation],
    eps: &[f64],
    open_dims: &BTreeSet<String>,
) -> Result<Hyperbox, LearnError> {
    let n = space.len();
    if eps.len() != n {
        return Err(LearnError::Arity {
            what: "eps",
            expected: n,
            found: eps.len(),
        });
    }
    let names = space.names();
    if let Some(d) = open_dims.iter().find(|d| !names.contains(d)) {
        return Err(LearnError::UnknownParameter(d.clone()));
    }
    let coords: Vec<Vec<f64>> = points
        .iter()
        .map(|p| match p {
            Valuation::Point(_) => Ok(space.to_vec(p)?),
            _ => Err(LearnError::Sentinel),
        })
        .collect::<Result<_, _>>()?;
    let first = coords.first().ok_or(LearnError::Empty)?;
    let mut nu_s = first.clone();
    let mut nu_w = first.clone();
    for p in &coords[1..] {
        for i in 0..n {
            nu_s[i] = space.stronger_of(i, nu_s[i], p[i]);
            nu_w[i] = space.weaker_of(i, nu_w[i], p[i]);
        }
    }
    for (i, d) in space.decls().iter().enumerate() {
        let relaxed = space.weaken(i, nu_w[i], eps[i]);
        nu_w[i] = if open_dims.contains(&d.name) || space.leq_i(i, d.weakest(), relaxed) {
            d.weakest()
        } else {
            relaxed
        };
    }
    Hyperbox::new(space.clone(), nu_s, nu_w)
}

/// A set of box corners as bit-vectors, excluding the all-ones corner.
/// Kept sorted by descending bit string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CornerSubset {
    dims: usize,
    corners: Vec<Vec<bool>>,
}

fn bit_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

impl CornerSubset {
    pub fn none(dims: usize) -> Self {
        Self {
            dims,
            corners: Vec::new(),
        }
    }

    /// Corners with exactly one coordinate at `nu_s`.
    pub fn essential(dims: usize) -> Self {
        let mut corners: Vec<Vec<bool>> = (0..dims)
            .map(|i| (0..dims).map(|j| j != i).collect())
            .collect();
        corners.sort_by(|a, b| b.cmp(a));
        Self { dims, corners }
    }

    pub fn from_bits<S: AsRef<str>>(dims: usize, bits: &[S]) -> Result<Self, LearnError> {
        let mut corners: Vec<Vec<bool>> = bits
            .iter()
            .map(|s| {
                let s = s.as_ref();
                let v: Option<Vec<bool>> = s
                    .chars()
                    .map(|c| match c {
                        '0' => Some(false),
                        '1' => Some(true),
                        _ => None,
                    })
                    .collect();
                match v {
                    Some(v) if v.len() == dims && !v.iter().all(|&b| b) => Ok(v),
                    _ => Err(LearnError::BadCorner(s.to_string())),
                }
            })
            .collect::<Result<_, _>>()?;
        corners.sort_by(|a, b| b.cmp(a));
        corners.dedup();
        Ok(Self { dims, corners })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn corners(&self) -> &[Vec<bool>] {
        &self.corners
    }

    pub fn bit_strings(&self) -> Vec<String> {
        self.corners.iter().map(|c| bit_string(c)).collect()
    }

    pub fn len(&self) -> usize {
        self.corners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corners.is_empty()
    }
}

impl fmt::Display for CornerSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.bit_strings().join(", "))
    }
}

/// Valuations of the essential corners of `b`, in descending bit order.
pub fn essential_corners(b: &Hyperbox) -> Vec<Valuation> {
    CornerSubset::essential(b.dims())
        .corners()
        .iter()
        .map(|bits| b.space().valuation(&b.corner(bits)))
        .collect()
}

/// Labels of every box containing the projection; sentinels get only
/// their reserved label.
pub fn label_by_hyperbox(
    projection: &Valuation,
    boxes: &BTreeMap<String, Hyperbox>,
) -> BTreeSet<String> {
    if projection.is_sentinel() {
        return BTreeSet::from([sentinel_label(projection).to_string()]);
    }
    boxes
        .iter()
        .filter(|(_, b)| b.contains_valuation(projection))
        .map(|(l, _)| l.clone())
        .collect()
}
