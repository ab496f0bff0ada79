use std::collections::BTreeMap;

use stlcluster::clustering::{
    dtw_matrix, fit_kmeans, k_medoids, normalize, sq_dist, DistanceMatrix, Labeling,
    ProjectionMatrix,
};
use stlcluster::formula::PstlTemplate;
use stlcluster::trace::{synth_traces, TraceSet};

use crate::pipeline::project_stage;
use crate::{stage, CliError};

/// Group sizes of the pitfall corpus.
pub const PITFALL_GROUP: usize = 4;

/// Three groups of overshoot traces: a brief small overshoot, a long large
/// overshoot with the same step shape, and flat traces that never move.
/// Ids are `small_<i>`, `large_<i>` and `flat_<i>`.
pub fn pitfall_corpus(seed: u64) -> Result<TraceSet, CliError> {
    let groups: [(&str, &[(&str, f64)]); 3] = [
        ("small", &[("amplitude", 0.15), ("settle", 0.3)]),
        ("large", &[("amplitude", 0.8), ("settle", 1.5)]),
        ("flat", &[("amplitude", 0.0), ("step", 0.0)]),
    ];
    let mut out: Option<TraceSet> = None;
    for (g, (name, params)) in groups.iter().enumerate() {
        let params: BTreeMap<String, f64> =
            params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let ts = synth_traces("overshoot", &params, PITFALL_GROUP, seed.wrapping_add(g as u64))
            .map_err(stage("traces"))?;
        let mut renamed = TraceSet::new(ts.channels().to_vec());
        for (i, (_, tr)) in ts.iter().enumerate() {
            renamed
                .insert(format!("{name}_{i}"), tr.clone())
                .map_err(stage("traces"))?;
        }
        match &mut out {
            None => out = Some(renamed),
            Some(acc) => acc.extend(renamed).map_err(stage("traces"))?,
        }
    }
    Ok(out.expect("three groups"))
}

/// Both labelings of one corpus, with the distance matrices behind them.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub dtw: DistanceMatrix,
    pub dtw_labeling: Labeling,
    /// Euclidean distances between normalized projections.
    pub projection: DistanceMatrix,
    pub projection_labeling: Labeling,
}

fn euclidean_matrix(pm: &ProjectionMatrix) -> Result<DistanceMatrix, CliError> {
    let data = pm
        .rows()
        .iter()
        .map(|a| pm.rows().iter().map(|b| sq_dist(a, b).sqrt()).collect())
        .collect();
    DistanceMatrix::new(pm.ids().to_vec(), data).map_err(stage("dtw-compare"))
}

/// DTW with k-medoids on `channel` against k-means on the projections.
pub fn dtw_compare(
    ts: &TraceSet,
    tpl: &PstlTemplate,
    channel: &str,
    k: usize,
    seed: u64,
) -> Result<Comparison, CliError> {
    let dtw = dtw_matrix(ts, channel).map_err(stage("dtw"))?;
    let dtw_labeling = k_medoids(&dtw, k, seed).map_err(stage("dtw"))?.labeling;
    let table = project_stage(ts, tpl)?;
    let (pm, _) = normalize(&ProjectionMatrix::from_table(&table));
    let (_, projection_labeling) = fit_kmeans(&pm, k, seed, 200, 1e-9).map_err(stage("cluster"))?;
    Ok(Comparison {
        dtw,
        dtw_labeling,
        projection: euclidean_matrix(&pm)?,
        projection_labeling,
    })
}

/// The partition a labeling induces: groups of ids, each sorted, ordered by
/// their first id.
pub fn partition(l: &Labeling) -> Vec<Vec<String>> {
    let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (id, labels) in l.iter() {
        let key = labels.iter().cloned().collect::<Vec<_>>().join(";");
        groups.entry(key).or_default().push(id.clone());
    }
    let mut out: Vec<Vec<String>> = groups.into_values().collect();
    out.sort();
    out
}
