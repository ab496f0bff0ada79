use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{check_k, csv_err, ClusterError, Labeling};
use crate::trace::TraceSet;

/// Square symmetric matrix with row/column ids.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    ids: Vec<String>,
    data: Vec<Vec<f64>>,
}

impl DistanceMatrix {
    pub fn new(ids: Vec<String>, data: Vec<Vec<f64>>) -> Result<Self, ClusterError> {
        if data.len() != ids.len() || data.iter().any(|r| r.len() != ids.len()) {
            return Err(ClusterError::NonSquare);
        }
        Ok(Self { ids, data })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i][j]
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Header of ids, then one numeric row per id.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), ClusterError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.ids).map_err(csv_err)?;
        for row in &self.data {
            out.write_record(row.iter().map(|v| v.to_string()))
                .map_err(csv_err)?;
        }
        out.flush().map_err(csv_err)
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, ClusterError> {
        let mut rdr = csv::Reader::from_reader(r);
        let ids: Vec<String> = rdr
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(str::to_string)
            .collect();
        let mut data = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let row = rec
                .iter()
                .map(|c| c.parse::<f64>().map_err(csv_err))
                .collect::<Result<Vec<_>, _>>()?;
            data.push(row);
        }
        Self::new(ids, data)
    }
}

/// Classic DTW with unit steps, no window, and `|a - b|` point cost.
pub fn dtw_distance(a: &[f64], b: &[f64]) -> f64 {
    let m = b.len();
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut cur = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for &x in a {
        cur[0] = f64::INFINITY;
        for j in 1..=m {
            let best = prev[j].min(cur[j - 1]).min(prev[j - 1]);
            cur[j] = (x - b[j - 1]).abs() + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

/// Pairwise DTW distances on one channel, computed in parallel.
pub fn dtw_matrix(ts: &TraceSet, channel: &str) -> Result<DistanceMatrix, ClusterError> {
    if !ts.channels().iter().any(|c| c == channel) {
        return Err(ClusterError::UnknownChannel(channel.to_string()));
    }
    let (ids, series): (Vec<String>, Vec<Vec<f64>>) = ts
        .iter()
        .map(|(id, x)| {
            let col = x.column_by_name(channel).expect("channel checked above");
            (id.clone(), col)
        })
        .unzip();
    let n = ids.len();
    let upper: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(i, j)| (i, j, dtw_distance(&series[i], &series[j])))
        .collect();
    let mut data = vec![vec![0.0; n]; n];
    for (i, j, d) in upper {
        data[i][j] = d;
        data[j][i] = d;
    }
    DistanceMatrix::new(ids, data)
}

/// Result of partitioning around medoids.
#[derive(Debug, Clone, PartialEq)]
pub struct Medoids {
    /// Row indices of the medoids, ascending.
    pub medoids: Vec<usize>,
    /// Position in `medoids` of each row's medoid.
    pub assignment: Vec<usize>,
    pub cost: f64,
    pub labeling: Labeling,
}

fn assign(dist: &[Vec<f64>], medoids: &[usize]) -> (Vec<usize>, f64) {
    let mut cost = 0.0;
    let assignment = dist
        .iter()
        .map(|row| {
            let mut best = (0, f64::INFINITY);
            for (c, &m) in medoids.iter().enumerate() {
                if row[m] < best.1 {
                    best = (c, row[m]);
                }
            }
            cost += best.1;
            best.0
        })
        .collect();
    (assignment, cost)
}

/// PAM swap descent from seeded random medoids.
pub fn k_medoids(dist: &DistanceMatrix, k: usize, seed: u64) -> Result<Medoids, ClusterError> {
    let n = dist.len();
    check_k(n, k)?;
    let d = dist.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut medoids: Vec<usize> = rand::seq::index::sample(&mut rng, n, k).into_vec();
    medoids.sort_unstable();
    let (_, mut cost) = assign(d, &medoids);
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for slot in 0..k {
            for cand in 0..n {
                if medoids.contains(&cand) {
                    continue;
                }
                let mut trial = medoids.clone();
                trial[slot] = cand;
                let (_, c) = assign(d, &trial);
                if c < cost - 1e-12 && best.is_none_or(|(bc, _, _)| c < bc) {
                    best = Some((c, slot, cand));
                }
            }
        }
        match best {
            Some((c, slot, cand)) => {
                medoids[slot] = cand;
                medoids.sort_unstable();
                cost = c;
            }
            None => break,
        }
    }
    let (assignment, cost) = assign(d, &medoids);
    let mut labeling = Labeling::new();
    for (id, &a) in dist.ids().iter().zip(&assignment) {
        labeling.insert(id.clone(), a.to_string());
    }
    Ok(Medoids {
        medoids,
        assignment,
        cost,
        labeling,
    })
}
