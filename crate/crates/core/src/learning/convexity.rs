use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CornerSubset, Hyperbox};
use crate::projection::ParameterSpace;

const LAMBDAS: usize = 11;
// Rejection attempts per sampled point.
const MAX_TRIES: usize = 1000;

/// A region of parameter space to test for comparable convexity.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Box(Hyperbox),
    /// `D(upper)` within the domain, minus the downward closures of
    /// `corners`.
    Region {
        space: ParameterSpace,
        upper: Vec<f64>,
        corners: Vec<Vec<f64>>,
    },
    Union(Vec<Shape>),
}

impl Shape {
    /// The region a synthesized formula describes for the given corners.
    pub fn from_corners(b: &Hyperbox, corners: &CornerSubset) -> Self {
        Shape::Region {
            space: b.space().clone(),
            upper: b.nu_w().to_vec(),
            corners: corners.corners().iter().map(|bits| b.corner(bits)).collect(),
        }
    }

    pub fn space(&self) -> &ParameterSpace {
        match self {
            Shape::Box(b) => b.space(),
            Shape::Region { space, .. } => space,
            Shape::Union(parts) => parts[0].space(),
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        match self {
            Shape::Box(b) => b.contains(p),
            Shape::Region {
                space,
                upper,
                corners,
            } => {
                space.contains(p)
                    && space.coords_leq(p, upper)
                    && !corners.iter().any(|c| space.coords_leq(p, c))
            }
            Shape::Union(parts) => parts.iter().any(|s| s.contains(p)),
        }
    }

    /// Strongest and weakest corners of a rectangle covering the shape.
    fn hull(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Shape::Box(b) => (b.nu_s().to_vec(), b.nu_w().to_vec()),
            Shape::Region { space, upper, .. } => (space.strongest(), upper.clone()),
            Shape::Union(parts) => {
                let space = self.space();
                let mut hulls = parts.iter().map(Shape::hull);
                let (mut lo, mut hi) = hulls.next().expect("non-empty union");
                for (l, h) in hulls {
                    for i in 0..space.len() {
                        lo[i] = space.stronger_of(i, lo[i], l[i]);
                        hi[i] = space.weaker_of(i, hi[i], h[i]);
                    }
                }
                (lo, hi)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityReport {
    pub pairs_checked: usize,
    /// `(ν, ν′, λ)` with `λν + (1−λ)ν′` outside the shape.
    pub counterexample: Option<(Vec<f64>, Vec<f64>, f64)>,
}

impl ConvexityReport {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

fn between(rng: &mut ChaCha8Rng, a: f64, b: f64) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    if lo < hi {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

fn sample_in(
    rng: &mut ChaCha8Rng,
    shape: &Shape,
    lo: &[f64],
    hi: &[f64],
) -> Option<Vec<f64>> {
    (0..MAX_TRIES).find_map(|_| {
        let p: Vec<f64> = lo.iter().zip(hi).map(|(&a, &b)| between(rng, a, b)).collect();
        shape.contains(&p).then_some(p)
    })
}

/// Samples comparable pairs `ν ⊴ ν′` inside the shape and checks that
/// 11 evenly spaced convex combinations of each pair stay inside.
pub fn check_comparable_convexity(shape: &Shape, n_samples: usize, seed: u64) -> ConvexityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = shape.hull();
    let mut pairs_checked = 0;
    for _ in 0..n_samples {
        let Some(nu) = sample_in(&mut rng, shape, &lo, &hi) else {
            continue;
        };
        let Some(nu_prime) = sample_in(&mut rng, shape, &nu, &hi) else {
            continue;
        };
        pairs_checked += 1;
        for k in 0..LAMBDAS {
            let lambda = k as f64 / (LAMBDAS - 1) as f64;
            let mix: Vec<f64> = nu
                .iter()
                .zip(&nu_prime)
                .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
                .collect();
            if !shape.contains(&mix) {
                return ConvexityReport {
                    pairs_checked,
                    counterexample: Some((nu, nu_prime, lambda)),
                };
            }
        }
    }
    ConvexityReport {
        pairs_checked,
        counterexample: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{ParamKind, ParameterDecl, Polarity};

    fn unit_space() -> ParameterSpace {
        ParameterSpace::new(vec![
            ParameterDecl::new("p", ParamKind::Value, Polarity::Plus, 0.0, 1.0, 0.01),
            ParameterDecl::new("q", ParamKind::Value, Polarity::Minus, 0.0, 1.0, 0.01),
        ])
    }

    #[test]
    fn plain_box_passes() {
        let b = Hyperbox::new(unit_space(), vec![0.2, 0.8], vec![0.6, 0.3]).unwrap();
        let r = check_comparable_convexity(&Shape::Box(b), 300, 1);
        assert!(r.passed());
        assert!(r.pairs_checked > 250);
    }

    #[test]
    fn every_corner_subset_passes() {
        let b = Hyperbox::new(unit_space(), vec![0.2, 0.8], vec![0.6, 0.3]).unwrap();
        let all = ["10", "01", "00"];
        for mask in 0..8u32 {
            let bits: Vec<&str> = (0..3).filter(|k| mask >> k & 1 == 1).map(|k| all[k]).collect();
            let shape = Shape::from_corners(&b, &CornerSubset::from_bits(2, &bits).unwrap());
            let r = check_comparable_convexity(&shape, 200, mask as u64);
            assert!(r.passed(), "{bits:?}: {:?}", r.counterexample);
        }
    }

    #[test]
    fn disjoint_union_fails() {
        let ps = unit_space();
        let low = Hyperbox::new(ps.clone(), vec![0.0, 1.0], vec![0.3, 0.7]).unwrap();
        let high = Hyperbox::new(ps, vec![0.7, 0.3], vec![1.0, 0.0]).unwrap();
        let shape = Shape::Union(vec![Shape::Box(low), Shape::Box(high)]);
        // analytic witness: (0.2, 0.8) ⊴ (0.8, 0.2) with midpoint (0.5, 0.5) in the gap
        assert!(shape.contains(&[0.2, 0.8]) && shape.contains(&[0.8, 0.2]));
        assert!(!shape.contains(&[0.5, 0.5]));
        let r = check_comparable_convexity(&shape, 300, 4);
        assert!(!r.passed());
    }
}
