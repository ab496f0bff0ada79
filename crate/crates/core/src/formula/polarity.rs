use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{FormulaError, Operand, PstlTemplate};
use crate::projection::{ParameterSpace, Projector};
use crate::trace::TraceSet;

// Evenly spaced lattice points per domain used alongside uniform draws.
const LATTICE: usize = 9;

/// A pair `ν ⊴ ν′` where the trace satisfies `φ(ν)` but not `φ(ν′)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub trace_id: String,
    pub nu: BTreeMap<String, f64>,
    pub nu_prime: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolarityReport {
    pub pairs_checked: usize,
    pub counterexamples: Vec<Counterexample>,
    pub warnings: Vec<String>,
}

impl PolarityReport {
    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

impl fmt::Display for PolarityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        if self.passed() {
            return writeln!(f, "no violation found ({} pairs checked)", self.pairs_checked);
        }
        writeln!(
            f,
            "polarity violated: {} counterexamples in {} pairs",
            self.counterexamples.len(),
            self.pairs_checked
        )?;
        for c in &self.counterexamples {
            writeln!(
                f,
                "  trace {}: satisfied at {:?} but not at weaker {:?}",
                c.trace_id, c.nu, c.nu_prime
            )?;
        }
        Ok(())
    }
}

fn lattice(lo: f64, hi: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = (0..LATTICE)
        .map(|k| lo + (hi - lo) * k as f64 / (LATTICE - 1) as f64)
        .collect();
    if lo < 0.0 && hi > 0.0 {
        pts.push(0.0);
    }
    pts
}

// Lattice point or uniform draw within [lo, hi].
fn draw(rng: &mut ChaCha8Rng, lo: f64, hi: f64, grid: &[f64]) -> f64 {
    let inside: Vec<f64> = grid.iter().copied().filter(|&g| g >= lo && g <= hi).collect();
    if !inside.is_empty() && rng.random_bool(0.5) {
        inside[rng.random_range(0..inside.len())]
    } else if lo < hi {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

fn warnings(tpl: &PstlTemplate) -> Vec<String> {
    let mut out = Vec::new();
    for a in tpl.formula().equality_atoms() {
        if matches!(a.rhs, Operand::Param(_) | Operand::NegParam(_)) {
            out.push(format!(
                "equality atom `{a}` compares against a parameter and is generally not monotone"
            ));
        }
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    tpl.formula().visit_params(&mut |p, _| *counts.entry(p.to_string()).or_default() += 1);
    for (p, n) in counts {
        if n > 1 {
            out.push(format!(
                "parameter `{p}` occurs {n} times; repeated occurrences can break monotonicity"
            ));
        }
    }
    out
}

/// Samples pairs `ν ⊴ ν′` for every trace and reports any pair where
/// satisfaction is lost when moving to the weaker valuation. Passing is
/// evidence, not proof.
pub fn validate_polarity(
    tpl: &PstlTemplate,
    ts: &TraceSet,
    n_samples: usize,
    seed: u64,
) -> Result<PolarityReport, FormulaError> {
    if n_samples == 0 {
        return Err(FormulaError::NoSamples);
    }
    let eval_err = |e: crate::projection::ProjectionError| FormulaError::Evaluation(e.to_string());
    let projector = Projector::new(tpl, ts.channels()).map_err(eval_err)?;
    let ps: &ParameterSpace = projector.space();
    let grids: Vec<Vec<f64>> = ps.decls().iter().map(|d| lattice(d.lo, d.hi)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = PolarityReport {
        warnings: warnings(tpl),
        ..Default::default()
    };
    for (id, x) in ts.iter() {
        for _ in 0..n_samples {
            let mut nu = Vec::with_capacity(ps.len());
            let mut nu_prime = Vec::with_capacity(ps.len());
            for (i, d) in ps.decls().iter().enumerate() {
                let v = draw(&mut rng, d.lo, d.hi, &grids[i]);
                let weak_end = d.weakest();
                let (lo, hi) = if v <= weak_end { (v, weak_end) } else { (weak_end, v) };
                nu.push(v);
                nu_prime.push(draw(&mut rng, lo, hi, &grids[i]));
            }
            debug_assert!(ps.coords_leq(&nu, &nu_prime));
            report.pairs_checked += 1;
            let a = projector.sat(x, &nu).map_err(eval_err)?;
            if a && !projector.sat(x, &nu_prime).map_err(eval_err)? {
                let names = ps.names();
                report.counterexamples.push(Counterexample {
                    trace_id: id.clone(),
                    nu: names.iter().cloned().zip(nu).collect(),
                    nu_prime: names.into_iter().zip(nu_prime).collect(),
                });
            }
        }
    }
    Ok(report)
}
