use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Hyperbox, LearnError, SynthesizedFormula};
use crate::clustering::{sq_dist, Labeling, ProjectionMatrix, BOTTOM_LABEL, TOP_LABEL};
use crate::projection::ParameterSpace;

/// Trace ids standing for a cluster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Representatives {
    /// Nearest to the members' ⊴-infimum.
    pub strong: String,
    /// Nearest to the members' ⊴-supremum.
    pub weak: String,
    /// Nearest to the members' mean.
    pub center: String,
}

fn member_rows<'a>(
    pm: &'a ProjectionMatrix,
    labeling: &Labeling,
    label: &str,
) -> Vec<(String, &'a [f64])> {
    labeling
        .members(label)
        .into_iter()
        .filter_map(|id| pm.index_of(&id).map(|i| (id, pm.row(i))))
        .collect()
}

fn nearest(rows: &[(String, &[f64])], target: &[f64]) -> String {
    let mut best: Option<(&str, f64)> = None;
    for (id, r) in rows {
        let d = sq_dist(r, target);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((id, d));
        }
    }
    best.expect("non-empty rows").0.to_string()
}

/// Strong, weak and central members of `label`. Distances are Euclidean
/// in the coordinates of `pm`, which should already be normalized.
pub fn representatives(
    pm: &ProjectionMatrix,
    labeling: &Labeling,
    label: &str,
    space: &ParameterSpace,
) -> Result<Representatives, LearnError> {
    let rows = member_rows(pm, labeling, label);
    if rows.is_empty() {
        return Err(LearnError::UnknownLabel(label.to_string()));
    }
    let n = space.len();
    if pm.columns().len() != n {
        return Err(LearnError::Arity {
            what: "projection columns",
            expected: n,
            found: pm.columns().len(),
        });
    }
    let mut inf = rows[0].1.to_vec();
    let mut sup = rows[0].1.to_vec();
    let mut mean = vec![0.0; n];
    for (_, r) in &rows {
        for i in 0..n {
            inf[i] = space.stronger_of(i, inf[i], r[i]);
            sup[i] = space.weaker_of(i, sup[i], r[i]);
            mean[i] += r[i] / rows.len() as f64;
        }
    }
    Ok(Representatives {
        strong: nearest(&rows, &inf),
        weak: nearest(&rows, &sup),
        center: nearest(&rows, &mean),
    })
}

/// Dimensions in which no point of another cluster is strictly weaker
/// than the weakest member of `label`.
pub fn suggest_open_dims(
    pm: &ProjectionMatrix,
    labeling: &Labeling,
    label: &str,
    space: &ParameterSpace,
) -> Result<BTreeSet<String>, LearnError> {
    let rows = member_rows(pm, labeling, label);
    if rows.is_empty() {
        return Err(LearnError::UnknownLabel(label.to_string()));
    }
    let mut sup = rows[0].1.to_vec();
    for (_, r) in &rows {
        for (i, s) in sup.iter_mut().enumerate() {
            *s = space.weaker_of(i, *s, r[i]);
        }
    }
    let others: Vec<&[f64]> = labeling
        .iter()
        .filter(|(_, ls)| {
            !ls.contains(label) && ls.iter().any(|l| l != TOP_LABEL && l != BOTTOM_LABEL)
        })
        .filter_map(|(id, _)| pm.index_of(id).map(|i| pm.row(i)))
        .collect();
    Ok(space
        .decls()
        .iter()
        .enumerate()
        .filter(|&(i, _)| {
            !others
                .iter()
                .any(|r| space.leq_i(i, sup[i], r[i]) && r[i] != sup[i])
        })
        .map(|(_, d)| d.name.clone())
        .collect())
}

/// Serializable summary of one learned cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnedCluster {
    pub label: String,
    pub nu_s: BTreeMap<String, f64>,
    pub nu_w: BTreeMap<String, f64>,
    pub closed_at_sup: BTreeMap<String, bool>,
    pub open_dims: Vec<String>,
    pub corners: Vec<String>,
    pub formula: String,
    pub size: usize,
    pub representatives: Representatives,
    pub members: usize,
}

impl LearnedCluster {
    pub fn new(
        label: impl Into<String>,
        psi: &SynthesizedFormula,
        open_dims: &BTreeSet<String>,
        representatives: Representatives,
        members: usize,
    ) -> Self {
        let b = &psi.hyperbox;
        let names = b.space().names();
        let zip = |v: &[f64]| names.iter().cloned().zip(v.iter().copied()).collect();
        Self {
            label: label.into(),
            nu_s: zip(b.nu_s()),
            nu_w: zip(b.nu_w()),
            closed_at_sup: names
                .iter()
                .cloned()
                .zip(b.closed_at_sup().iter().copied())
                .collect(),
            open_dims: open_dims.iter().cloned().collect(),
            corners: psi.corners.bit_strings(),
            formula: psi.formula.to_string(),
            size: psi.size,
            representatives,
            members,
        }
    }

    /// Rebuilds the box over `space`.
    pub fn hyperbox(&self, space: &ParameterSpace) -> Result<Hyperbox, LearnError> {
        let pick = |m: &BTreeMap<String, f64>| {
            space
                .names()
                .into_iter()
                .map(|n| m.get(&n).copied().ok_or(LearnError::UnknownParameter(n)))
                .collect::<Result<Vec<_>, _>>()
        };
        Hyperbox::new(space.clone(), pick(&self.nu_s)?, pick(&self.nu_w)?)
    }
}
