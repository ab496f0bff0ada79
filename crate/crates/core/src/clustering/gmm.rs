use super::kmeans::lloyd;
use super::{
    check_k, labeling_from, ClusterError, ClusterKind, ClusterModel, Components, Labeling,
    ProjectionMatrix,
};

pub(crate) const VARIANCE_FLOOR: f64 = 1e-6;
// Keeps a starved component's weight positive.
const WEIGHT_FLOOR: f64 = 1e-12;

struct Mixture {
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    variances: Vec<Vec<f64>>,
}

impl Mixture {
    fn log_density(&self, c: usize, row: &[f64]) -> f64 {
        let mut s = self.weights[c].ln();
        for ((x, m), v) in row.iter().zip(&self.means[c]).zip(&self.variances[c]) {
            s -= 0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (x - m) * (x - m) / v);
        }
        s
    }

    /// Responsibilities and total log-likelihood.
    fn e_step(&self, rows: &[Vec<f64>]) -> (Vec<Vec<f64>>, f64) {
        let k = self.weights.len();
        let mut ll = 0.0;
        let resp = rows
            .iter()
            .map(|r| {
                let logs: Vec<f64> = (0..k).map(|c| self.log_density(c, r)).collect();
                let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln();
                ll += lse;
                logs.iter().map(|l| (l - lse).exp()).collect()
            })
            .collect();
        (resp, ll)
    }

    fn m_step(rows: &[Vec<f64>], resp: &[Vec<f64>], k: usize) -> Self {
        let n = rows.len() as f64;
        let dim = rows[0].len();
        let mut weights = Vec::with_capacity(k);
        let mut means = Vec::with_capacity(k);
        let mut variances = Vec::with_capacity(k);
        for c in 0..k {
            let nk: f64 = resp.iter().map(|r| r[c]).sum();
            let denom = nk.max(f64::MIN_POSITIVE);
            let mut mean = vec![0.0; dim];
            for (row, r) in rows.iter().zip(resp) {
                for (m, x) in mean.iter_mut().zip(row) {
                    *m += r[c] * x;
                }
            }
            mean.iter_mut().for_each(|m| *m /= denom);
            let mut var = vec![0.0; dim];
            for (row, r) in rows.iter().zip(resp) {
                for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
                    *v += r[c] * (x - m) * (x - m);
                }
            }
            var.iter_mut()
                .for_each(|v| *v = (*v / denom).max(VARIANCE_FLOOR));
            weights.push((nk + WEIGHT_FLOOR) / (n + k as f64 * WEIGHT_FLOOR));
            means.push(mean);
            variances.push(var);
        }
        Self {
            weights,
            means,
            variances,
        }
    }
}

/// Diagonal Gaussian mixture fitted by EM from a k-means start.
pub fn fit_gmm(
    pm: &ProjectionMatrix,
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<(ClusterModel, Labeling), ClusterError> {
    check_k(pm.len(), k)?;
    let rows = pm.rows();
    let init = lloyd(rows, k, seed, max_iter, 1e-12);
    let hard: Vec<Vec<f64>> = init
        .assignment
        .iter()
        .map(|&a| (0..k).map(|c| if c == a { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut mix = Mixture::m_step(rows, &hard, k);
    let (mut resp, mut ll) = mix.e_step(rows);
    let mut history = vec![ll];
    for _ in 0..max_iter {
        let next = Mixture::m_step(rows, &resp, k);
        let (next_resp, next_ll) = next.e_step(rows);
        mix = next;
        resp = next_resp;
        let gain = next_ll - ll;
        ll = next_ll;
        history.push(ll);
        if gain < tol {
            break;
        }
    }
    let assignment: Vec<usize> = resp
        .iter()
        .map(|r| {
            let mut best = 0;
            for c in 1..k {
                if r[c] > r[best] {
                    best = c;
                }
            }
            best
        })
        .collect();
    let labeling = labeling_from(pm, &assignment);
    Ok((
        ClusterModel {
            kind: ClusterKind::Gmm,
            k,
            seed,
            components: Components::Gmm {
                weights: mix.weights,
                means: mix.means,
                variances: mix.variances,
                log_likelihood: history,
            },
            normalization: None,
        },
        labeling,
    ))
}
