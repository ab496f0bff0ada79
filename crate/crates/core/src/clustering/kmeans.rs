use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    check_k, labeling_from, sq_dist, ClusterError, ClusterKind, ClusterModel, Components,
    Labeling, ProjectionMatrix,
};

/// Index of the nearest centroid; ties go to the lowest index.
pub(crate) fn nearest(row: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(row, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus(rows: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = rows.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = rows.iter().map(|r| sq_dist(r, &rows[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            if d2[pick] == 0.0 {
                // rounding ran past the last positive weight
                pick = d2.iter().rposition(|&d| d > 0.0).unwrap_or(pick);
            }
            pick
        } else {
            // all remaining rows coincide with a centroid
            (0..n).find(|i| !chosen.contains(i)).unwrap_or(0)
        };
        chosen.push(next);
        for (i, r) in rows.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(r, &rows[next]));
        }
    }
    chosen.into_iter().map(|i| rows[i].clone()).collect()
}

pub(crate) struct KmeansFit {
    pub centroids: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
    pub inertia: f64,
}

pub(crate) fn lloyd(
    rows: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> KmeansFit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = rows[0].len();
    let mut centroids = plus_plus(rows, k, &mut rng);
    let mut assignment = vec![0; rows.len()];
    for _ in 0..max_iter.max(1) {
        for (a, r) in assignment.iter_mut().zip(rows) {
            *a = nearest(r, &centroids).0;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (r, &a) in rows.iter().zip(&assignment) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(r) {
                *s += v;
            }
        }
        let mut shift: f64 = 0.0;
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            let mean: Vec<f64> = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            shift = shift.max(sq_dist(&mean, &centroids[c]).sqrt());
            centroids[c] = mean;
        }
        if shift <= tol {
            break;
        }
    }
    let mut inertia = 0.0;
    for (a, r) in assignment.iter_mut().zip(rows) {
        let (c, d) = nearest(r, &centroids);
        *a = c;
        inertia += d;
    }
    KmeansFit {
        centroids,
        assignment,
        inertia,
    }
}

/// Lloyd iterations from k-means++ seeding.
pub fn fit_kmeans(
    pm: &ProjectionMatrix,
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<(ClusterModel, Labeling), ClusterError> {
    check_k(pm.len(), k)?;
    let fit = lloyd(pm.rows(), k, seed, max_iter, tol);
    let labeling = labeling_from(pm, &fit.assignment);
    Ok((
        ClusterModel {
            kind: ClusterKind::Kmeans,
            k,
            seed,
            components: Components::Kmeans {
                centroids: fit.centroids,
                inertia: fit.inertia,
            },
            normalization: None,
        },
        labeling,
    ))
}
