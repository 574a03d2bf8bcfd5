//! Lloyd's k-means with k-means++ seeding.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{CoreError, Result};

#[derive(Debug, Clone)]
pub struct ClusterAssignment {
    /// Cluster id per row of the input, each in `[0, k)`.
    pub labels: Vec<usize>,
    pub k: usize,
    pub centroids: DMatrix<f64>,
    pub sizes: Vec<usize>,
    /// Final within-cluster sum of squares.
    pub wcss: f64,
    pub iterations: usize,
}

const SHIFT_TOL: f64 = 1e-6;
const MAX_ITERS: usize = 300;

/// Clusters the rows of `x` into `k` groups. Iterates until the largest
/// centroid shift falls below 1e-6 or 300 rounds pass; empty clusters are
/// re-seeded from the point farthest from its centroid.
pub fn kmeans(x: &DMatrix<f64>, k: usize, seed: u64) -> Result<ClusterAssignment> {
    let n = x.nrows();
    if k == 0 || k > n {
        return Err(CoreError::invalid(
            "cluster",
            format!("k = {k} out of range for {n} points"),
        ));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_seed(x, k, &mut rng)?;

    let mut labels = vec![0usize; n];
    let mut iterations = 0;
    let mut wcss = f64::INFINITY;
    loop {
        // Assignment step.
        let mut dist = vec![0.0f64; n];
        for i in 0..n {
            let (best, d) = nearest_centroid(x, i, &centroids);
            labels[i] = best;
            dist[i] = d;
        }

        // Update step; re-seed empty clusters from the farthest point.
        let mut sums = DMatrix::zeros(k, x.ncols());
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            for j in 0..x.ncols() {
                sums[(labels[i], j)] += x[(i, j)];
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                let farthest = (0..n)
                    .max_by(|&a, &b| dist[a].partial_cmp(&dist[b]).unwrap())
                    .unwrap();
                for j in 0..x.ncols() {
                    sums[(c, j)] = x[(farthest, j)];
                }
                counts[c] = 1;
                labels[farthest] = c;
                dist[farthest] = 0.0;
            }
        }
        let mut shift = 0.0f64;
        for c in 0..k {
            for j in 0..x.ncols() {
                let new = sums[(c, j)] / counts[c] as f64;
                shift = shift.max((new - centroids[(c, j)]).abs());
                centroids[(c, j)] = new;
            }
        }
        iterations += 1;
        let new_wcss: f64 = dist.iter().sum();
        debug_assert!(
            new_wcss <= wcss * (1.0 + 1e-12) + 1e-12,
            "wcss increased: {wcss} -> {new_wcss}"
        );
        wcss = new_wcss;
        if shift < SHIFT_TOL || iterations >= MAX_ITERS {
            break;
        }
    }

    // Final assignment against the settled centroids.
    let mut sizes = vec![0usize; k];
    let mut dist = vec![0.0f64; n];
    for i in 0..n {
        let (best, d) = nearest_centroid(x, i, &centroids);
        labels[i] = best;
        sizes[best] += 1;
        dist[i] = d;
    }
    // A cluster emptied by the last reassignment steals its farthest point.
    for c in 0..k {
        if sizes[c] == 0 {
            let farthest = (0..n)
                .filter(|&i| sizes[labels[i]] > 1)
                .max_by(|&a, &b| dist[a].partial_cmp(&dist[b]).unwrap())
                .expect("k <= n guarantees a donor point");
            sizes[labels[farthest]] -= 1;
            labels[farthest] = c;
            sizes[c] = 1;
            for j in 0..x.ncols() {
                centroids[(c, j)] = x[(farthest, j)];
            }
            dist[farthest] = 0.0;
        }
    }
    let final_wcss: f64 = dist.iter().sum();
    wcss = wcss.min(final_wcss);

    Ok(ClusterAssignment {
        labels,
        k,
        centroids,
        sizes,
        wcss,
        iterations,
    })
}

fn nearest_centroid(x: &DMatrix<f64>, i: usize, centroids: &DMatrix<f64>) -> (usize, f64) {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for c in 0..centroids.nrows() {
        let mut d = 0.0;
        for j in 0..x.ncols() {
            let diff = x[(i, j)] - centroids[(c, j)];
            d += diff * diff;
        }
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    (best, best_d)
}

/// k-means++: each new center is drawn with probability proportional to the
/// squared distance from the nearest existing center.
fn plus_plus_seed(x: &DMatrix<f64>, k: usize, rng: &mut ChaCha20Rng) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    let mut centroids = DMatrix::zeros(k, x.ncols());
    let first = rng.random_range(0..n);
    centroids.row_mut(0).copy_from(&x.row(first));

    let mut d2 = vec![0.0f64; n];
    for chosen in 1..k {
        let mut total = 0.0;
        for i in 0..n {
            let mut best = f64::INFINITY;
            for c in 0..chosen {
                let mut d = 0.0;
                for j in 0..x.ncols() {
                    let diff = x[(i, j)] - centroids[(c, j)];
                    d += diff * diff;
                }
                best = best.min(d);
            }
            d2[i] = best;
            total += best;
        }
        let pick = if total <= 0.0 {
            // All remaining points coincide with existing centers.
            rng.random_range(0..n)
        } else {
            let mut target = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    idx = i;
                    break;
                }
                target -= w;
            }
            idx
        };
        centroids.row_mut(chosen).copy_from(&x.row(pick));
    }
    Ok(centroids)
}
