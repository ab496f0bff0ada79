//! Normalization and clustering of projections, plus the DTW baseline.

mod dtw;
mod gmm;
mod kmeans;

pub use dtw::{dtw_distance, dtw_matrix, k_medoids, DistanceMatrix, Medoids};
pub use gmm::fit_gmm;
pub use kmeans::fit_kmeans;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::hash::Hash;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::projection::{ProjectionTable, Valuation};

/// Reserved label for traces whose projection is the top sentinel.
pub const TOP_LABEL: &str = "__top__";
/// Reserved label for traces whose projection is the bottom sentinel.
pub const BOTTOM_LABEL: &str = "__bot__";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClusterError {
    #[error("no rows to cluster")]
    Empty,
    #[error("k must be at least 1")]
    ZeroClusters,
    #[error("k = {k} exceeds the {n} available rows")]
    TooManyClusters { k: usize, n: usize },
    #[error("distance matrix is not square")]
    NonSquare,
    #[error("unknown channel `{0}`")]
    UnknownChannel(String),
    #[error("row {row} has {found} values, expected {expected}")]
    RowLength {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value in row {0}")]
    NonFinite(usize),
    #[error("csv: {0}")]
    Csv(String),
}

fn csv_err(e: impl std::fmt::Display) -> ClusterError {
    ClusterError::Csv(e.to_string())
}

/// Non-sentinel projections as a real matrix; sentinel rows are kept
/// aside.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix {
    ids: Vec<String>,
    columns: Vec<String>,
    data: Vec<Vec<f64>>,
    sentinels: BTreeMap<String, Valuation>,
}

impl ProjectionMatrix {
    pub fn new(
        ids: Vec<String>,
        columns: Vec<String>,
        data: Vec<Vec<f64>>,
    ) -> Result<Self, ClusterError> {
        if ids.len() != data.len() {
            return Err(ClusterError::RowLength {
                row: ids.len().min(data.len()),
                expected: ids.len(),
                found: data.len(),
            });
        }
        for (i, row) in data.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(ClusterError::RowLength {
                    row: i,
                    expected: columns.len(),
                    found: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(ClusterError::NonFinite(i));
            }
        }
        Ok(Self {
            ids,
            columns,
            data,
            sentinels: BTreeMap::new(),
        })
    }

    pub fn from_table(table: &ProjectionTable) -> Self {
        let mut ids = Vec::new();
        let mut data = Vec::new();
        let mut sentinels = BTreeMap::new();
        for (id, p) in table.rows() {
            match &p.valuation {
                Valuation::Point(m) => {
                    ids.push(id.clone());
                    data.push(table.params().iter().map(|c| m[c]).collect());
                }
                s => {
                    sentinels.insert(id.clone(), s.clone());
                }
            }
        }
        Self {
            ids,
            columns: table.params().to_vec(),
            data,
            sentinels,
        }
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn sentinels(&self) -> &BTreeMap<String, Valuation> {
        &self.sentinels
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|i| i == id)
    }

    fn with_data(&self, data: Vec<Vec<f64>>) -> Self {
        Self {
            ids: self.ids.clone(),
            columns: self.columns.clone(),
            data,
            sentinels: self.sentinels.clone(),
        }
    }

    /// Rows reordered by `order` (a permutation of row indices).
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            ids: order.iter().map(|&i| self.ids[i].clone()).collect(),
            columns: self.columns.clone(),
            data: order.iter().map(|&i| self.data[i].clone()).collect(),
            sentinels: self.sentinels.clone(),
        }
    }
}

/// Per-column min-max scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Normalization {
    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, &v)| {
                let range = self.max[j] - self.min[j];
                if range > 0.0 {
                    (v - self.min[j]) / range
                } else {
                    0.5
                }
            })
            .collect()
    }

    /// Inverse of [`apply`](Self::apply); constant columns map back to their
    /// single value.
    pub fn invert(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, &u)| {
                let range = self.max[j] - self.min[j];
                if range > 0.0 {
                    self.min[j] + u * range
                } else {
                    self.min[j]
                }
            })
            .collect()
    }
}

/// Scales every column to `[0, 1]`; constant columns become 0.5.
pub fn normalize(pm: &ProjectionMatrix) -> (ProjectionMatrix, Normalization) {
    let cols = pm.columns.len();
    let mut min = vec![f64::INFINITY; cols];
    let mut max = vec![f64::NEG_INFINITY; cols];
    for row in &pm.data {
        for (j, &v) in row.iter().enumerate() {
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
        }
    }
    if pm.data.is_empty() {
        min = vec![0.0; cols];
        max = vec![0.0; cols];
    }
    let t = Normalization { min, max };
    let data = pm.data.iter().map(|r| t.apply(r)).collect();
    (pm.with_data(data), t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterKind {
    Kmeans,
    Gmm,
    Kmedoids,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Components {
    Kmeans {
        centroids: Vec<Vec<f64>>,
        inertia: f64,
    },
    Gmm {
        weights: Vec<f64>,
        means: Vec<Vec<f64>>,
        variances: Vec<Vec<f64>>,
        log_likelihood: Vec<f64>,
    },
    Kmedoids {
        medoids: Vec<usize>,
        cost: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub kind: ClusterKind,
    pub k: usize,
    pub seed: u64,
    pub components: Components,
    pub normalization: Option<Normalization>,
}

/// Trace id to label set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Labeling {
    labels: BTreeMap<String, BTreeSet<String>>,
}

impl Labeling {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: impl Into<String>, label: impl Into<String>) {
        self.labels.entry(id.into()).or_default().insert(label.into());
    }

    /// Ensures `id` is present, possibly with no label.
    pub fn touch(&mut self, id: impl Into<String>) {
        self.labels.entry(id.into()).or_default();
    }

    pub fn get(&self, id: &str) -> Option<&BTreeSet<String>> {
        self.labels.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &BTreeSet<String>)> {
        self.labels.iter()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Every label in use.
    pub fn label_set(&self) -> BTreeSet<String> {
        self.labels.values().flatten().cloned().collect()
    }

    /// Ids carrying `label`, in id order.
    pub fn members(&self, label: &str) -> Vec<String> {
        self.labels
            .iter()
            .filter(|(_, ls)| ls.contains(label))
            .map(|(id, _)| id.clone())
            .collect()
    }

    /// `trace_id,label`, one row per (id, label) pair; ids without any
    /// label get an empty label cell.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), ClusterError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["trace_id", "label"]).map_err(csv_err)?;
        for (id, ls) in &self.labels {
            if ls.is_empty() {
                out.write_record([id.as_str(), ""]).map_err(csv_err)?;
            }
            for l in ls {
                out.write_record([id.as_str(), l.as_str()]).map_err(csv_err)?;
            }
        }
        out.flush().map_err(csv_err)
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, ClusterError> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers().map_err(csv_err)?.clone();
        if header.len() != 2 || &header[0] != "trace_id" || &header[1] != "label" {
            return Err(ClusterError::Csv("header must be trace_id,label".into()));
        }
        let mut out = Labeling::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            if rec[1].is_empty() {
                out.touch(&rec[0]);
            } else {
                out.insert(&rec[0], &rec[1]);
            }
        }
        Ok(out)
    }
}

/// Labels for fitted rows plus reserved labels for sentinel rows.
pub(crate) fn labeling_from(pm: &ProjectionMatrix, assignment: &[usize]) -> Labeling {
    let mut out = Labeling::new();
    for (id, &c) in pm.ids.iter().zip(assignment) {
        out.insert(id.clone(), c.to_string());
    }
    for (id, v) in &pm.sentinels {
        out.insert(id.clone(), sentinel_label(v));
    }
    out
}

pub fn sentinel_label(v: &Valuation) -> &'static str {
    match v {
        Valuation::Bottom => BOTTOM_LABEL,
        _ => TOP_LABEL,
    }
}

pub(crate) fn check_k(n: usize, k: usize) -> Result<(), ClusterError> {
    if n == 0 {
        return Err(ClusterError::Empty);
    }
    if k == 0 {
        return Err(ClusterError::ZeroClusters);
    }
    if k > n {
        return Err(ClusterError::TooManyClusters { k, n });
    }
    Ok(())
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn choose2(n: u64) -> f64 {
    (n * n.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index between two partitions of the same items.
pub fn adjusted_rand_index<A, B>(a: &[A], b: &[B]) -> f64
where
    A: Eq + Hash,
    B: Eq + Hash,
{
    assert_eq!(a.len(), b.len(), "partitions must cover the same items");
    let n = a.len() as u64;
    let mut table: HashMap<(&A, &B), u64> = HashMap::new();
    let mut rows: HashMap<&A, u64> = HashMap::new();
    let mut cols: HashMap<&B, u64> = HashMap::new();
    for (x, y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| choose2(c)).sum();
    let sum_a: f64 = rows.values().map(|&c| choose2(c)).sum();
    let sum_b: f64 = cols.values().map(|&c| choose2(c)).sum();
    let total = choose2(n);
    if total == 0.0 {
        return 1.0;
    }
    let expected = sum_a * sum_b / total;
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}
