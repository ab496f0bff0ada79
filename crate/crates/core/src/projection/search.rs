use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{ParameterSpace, ProjectionError, ProjectionTable, Valuation};
use crate::formula::PstlTemplate;
use crate::semantics::Monitor;
use crate::trace::{TimedTrace, TraceSet};

/// A projected valuation and the number of satisfaction queries spent.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub valuation: Valuation,
    pub queries: usize,
}

/// Satisfaction queries of one template against traces sharing a channel
/// layout.
#[derive(Debug, Clone)]
pub struct Projector {
    space: ParameterSpace,
    monitor: Monitor,
}

impl Projector {
    pub fn new(tpl: &PstlTemplate, channels: &[String]) -> Result<Self, ProjectionError> {
        let monitor = Monitor::compile(tpl.formula(), channels, &tpl.param_names())?;
        Ok(Self {
            space: tpl.space(),
            monitor,
        })
    }

    pub fn space(&self) -> &ParameterSpace {
        &self.space
    }

    /// `x ⊨ φ(ν)` with `ν` given in priority order.
    pub fn sat(&self, x: &TimedTrace, coords: &[f64]) -> Result<bool, ProjectionError> {
        Ok(self.monitor.eval(x, coords)?)
    }

    pub fn sat_valuation(&self, x: &TimedTrace, v: &Valuation) -> Result<bool, ProjectionError> {
        self.sat(x, &self.space.to_vec(v)?)
    }

    /// Iterated bisection along the priority order.
    pub fn project_lex(&self, x: &TimedTrace) -> Result<Projection, ProjectionError> {
        let ps = &self.space;
        let mut queries = 0;
        let mut sat = |v: &[f64]| {
            queries += 1;
            self.sat(x, v)
        };
        let mut nu = ps.weakest();
        if !sat(&nu)? {
            return Ok(Projection {
                valuation: Valuation::Top,
                queries,
            });
        }
        if sat(&ps.strongest())? {
            return Ok(Projection {
                valuation: Valuation::Bottom,
                queries,
            });
        }
        for (i, d) in ps.decls().iter().enumerate() {
            let mut weak = nu[i];
            nu[i] = d.strongest();
            if sat(&nu)? {
                continue;
            }
            // `weak` always satisfies; `strong` never does
            let mut strong = d.strongest();
            while (weak - strong).abs() > d.epsilon {
                let mid = 0.5 * (strong + weak);
                nu[i] = mid;
                if sat(&nu)? {
                    weak = mid;
                } else {
                    strong = mid;
                }
            }
            nu[i] = weak;
        }
        Ok(Projection {
            valuation: ps.valuation(&nu),
            queries,
        })
    }

    /// Grid scan of the validity boundary minimizing `Σ weights_i ν_i`.
    pub fn project_scalar(
        &self,
        x: &TimedTrace,
        weights: &[f64],
        grid_step: &[f64],
    ) -> Result<Projection, ProjectionError> {
        let ps = &self.space;
        let n = ps.len();
        for (what, v) in [("weights", weights), ("grid_step", grid_step)] {
            if v.len() != n {
                return Err(ProjectionError::Arity {
                    what,
                    expected: n,
                    found: v.len(),
                });
            }
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite()) {
            return Err(ProjectionError::Invalid {
                what: "weights",
                msg: format!("{w} is not finite"),
            });
        }
        if let Some(s) = grid_step.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(ProjectionError::Invalid {
                what: "grid_step",
                msg: format!("{s} is not positive"),
            });
        }
        let mut queries = 0;
        if !self.sat(x, &ps.weakest())? {
            return Ok(Projection {
                valuation: Valuation::Top,
                queries: 1,
            });
        }
        if self.sat(x, &ps.strongest())? {
            return Ok(Projection {
                valuation: Valuation::Bottom,
                queries: 2,
            });
        }
        queries += 2;

        // grid axes ordered from strongest to weakest
        let axes: Vec<Vec<f64>> = ps
            .decls()
            .iter()
            .zip(grid_step)
            .map(|(d, &step)| {
                let count = ((d.hi - d.lo) / step + 1e-9).floor() as usize;
                let mut axis: Vec<f64> = (0..=count).map(|k| d.lo + k as f64 * step).collect();
                if d.hi - axis[count] > 1e-9 * step {
                    axis.push(d.hi);
                } else {
                    axis[count] = d.hi;
                }
                if d.strongest() == d.hi {
                    axis.reverse();
                }
                axis
            })
            .collect();
        let dims: Vec<usize> = axes.iter().map(Vec::len).collect();
        let total: usize = dims.iter().product();
        let coords_of = |mut flat: usize| -> Vec<usize> {
            let mut idx = vec![0; n];
            for i in (0..n).rev() {
                idx[i] = flat % dims[i];
                flat /= dims[i];
            }
            idx
        };
        let flat_of = |idx: &[usize]| idx.iter().zip(&dims).fold(0, |acc, (&k, &d)| acc * d + k);
        let point = |idx: &[usize]| -> Vec<f64> { (0..n).map(|i| axes[i][idx[i]]).collect() };

        let sat_grid: Vec<bool> = (0..total)
            .map(|f| self.sat(x, &point(&coords_of(f))))
            .collect::<Result<_, _>>()?;
        queries += total;

        let mut best: Option<(f64, Vec<f64>)> = None;
        for f in 0..total {
            if !sat_grid[f] {
                continue;
            }
            let idx = coords_of(f);
            let stronger: Vec<usize> = idx.iter().map(|&k| k.saturating_sub(1)).collect();
            if sat_grid[flat_of(&stronger)] {
                continue;
            }
            let p = point(&idx);
            let j: f64 = p.iter().zip(weights).map(|(v, w)| v * w).sum();
            let better = match &best {
                None => true,
                Some((bj, bp)) => {
                    j < *bj || (j == *bj && ps.lex_cmp_coords(&p, bp) == Ordering::Less)
                }
            };
            if better {
                best = Some((j, p));
            }
        }
        Ok(Projection {
            valuation: best.map_or(Valuation::Top, |(_, p)| ps.valuation(&p)),
            queries,
        })
    }
}

/// Lexicographic projection of one trace.
pub fn project_lex(x: &TimedTrace, tpl: &PstlTemplate) -> Result<Projection, ProjectionError> {
    Projector::new(tpl, x.channels())?.project_lex(x)
}

/// Scalarized projection of one trace over a grid with the given steps.
pub fn project_scalar(
    x: &TimedTrace,
    tpl: &PstlTemplate,
    weights: &[f64],
    grid_step: &[f64],
) -> Result<Projection, ProjectionError> {
    Projector::new(tpl, x.channels())?.project_scalar(x, weights, grid_step)
}

/// Worst-case number of queries of [`project_lex`] on this space.
pub fn query_bound(ps: &ParameterSpace) -> usize {
    2 + ps
        .decls()
        .iter()
        .map(|d| ((d.hi - d.lo) / d.epsilon).log2().ceil() as usize + 1)
        .sum::<usize>()
}

fn collect_table(
    tpl: &PstlTemplate,
    results: Vec<(String, Result<Projection, ProjectionError>)>,
) -> ProjectionTable {
    let mut rows = BTreeMap::new();
    let mut errors = BTreeMap::new();
    for (id, r) in results {
        match r {
            Ok(p) => {
                rows.insert(id, p);
            }
            Err(e) => {
                errors.insert(id, e);
            }
        }
    }
    ProjectionTable::new(tpl.param_names(), rows, errors)
}

/// Projects every trace in parallel; per-trace errors are collected.
pub fn project_all(ts: &TraceSet, tpl: &PstlTemplate) -> ProjectionTable {
    let projector = Projector::new(tpl, ts.channels());
    let items: Vec<(&String, &TimedTrace)> = ts.iter().collect();
    let results = items
        .par_iter()
        .map(|(id, x)| {
            let r = match &projector {
                Ok(p) => p.project_lex(x),
                Err(e) => Err(e.clone()),
            };
            ((*id).clone(), r)
        })
        .collect();
    collect_table(tpl, results)
}

/// Same as [`project_all`] on the calling thread.
pub fn project_all_sequential(ts: &TraceSet, tpl: &PstlTemplate) -> ProjectionTable {
    let projector = Projector::new(tpl, ts.channels());
    let results = ts
        .iter()
        .map(|(id, x)| {
            let r = match &projector {
                Ok(p) => p.project_lex(x),
                Err(e) => Err(e.clone()),
            };
            (id.clone(), r)
        })
        .collect();
    collect_table(tpl, results)
}
