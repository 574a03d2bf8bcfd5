//! Randomized truncated SVD over an abstract linear operator.
//!
//! Subspace iteration in the style of Halko, Martinsson & Tropp: a Gaussian
//! sketch is refined by alternating orthonormalized products with the
//! operator and its transpose. Iteration continues past the configured
//! minimum until the leading singular values stabilize, so flat spectra take
//! more rounds and structured matrices converge in a handful.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{CoreError, Result};
use crate::sparse::SparseDocTermMatrix;

/// Anything that can multiply dense blocks from the left and the right.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `self * rhs`, with `rhs.nrows() == self.ncols()`.
    fn mul_dense(&self, rhs: &DMatrix<f64>) -> DMatrix<f64>;
    /// `self^T * rhs`, with `rhs.nrows() == self.nrows()`.
    fn tr_mul_dense(&self, rhs: &DMatrix<f64>) -> DMatrix<f64>;
    /// Squared Frobenius norm.
    fn frob_sq(&self) -> f64;
}

impl LinearOperator for SparseDocTermMatrix {
    fn nrows(&self) -> usize {
        self.n_docs()
    }
    fn ncols(&self) -> usize {
        self.n_terms()
    }
    fn mul_dense(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        SparseDocTermMatrix::mul_dense(self, rhs)
    }
    fn tr_mul_dense(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        SparseDocTermMatrix::tr_mul_dense(self, rhs)
    }
    fn frob_sq(&self) -> f64 {
        SparseDocTermMatrix::frob_sq(self)
    }
}

impl LinearOperator for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }
    fn ncols(&self) -> usize {
        self.ncols()
    }
    fn mul_dense(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        self * rhs
    }
    fn tr_mul_dense(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        self.transpose() * rhs
    }
    fn frob_sq(&self) -> f64 {
        self.iter().map(|v| v * v).sum()
    }
}

#[derive(Debug, Clone)]
pub struct RsvdOptions {
    /// Extra sketch columns beyond the requested rank.
    pub oversample: usize,
    /// Minimum number of power iterations.
    pub min_power_iters: usize,
    /// Hard cap; exceeding it without stabilizing is an error.
    pub max_power_iters: usize,
    /// Relative change in the leading singular values that counts as settled.
    pub tol: f64,
}

impl Default for RsvdOptions {
    fn default() -> Self {
        RsvdOptions {
            oversample: 10,
            min_power_iters: 4,
            max_power_iters: 200,
            tol: 1e-11,
        }
    }
}

/// Rank-`m` factorization `A ~ left * diag(sigma) * right^T` with orthonormal
/// `left` (nrows x r) and `right` (ncols x r). `r` can fall below `m` when
/// the matrix has lower numerical rank; `warnings` records that.
#[derive(Debug, Clone)]
pub struct Rsvd {
    pub left: DMatrix<f64>,
    pub sigma: DVector<f64>,
    pub right: DMatrix<f64>,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha20Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn thin_q(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

/// Randomized truncated SVD of `op` with target rank `m`.
pub fn randomized_svd(op: &dyn LinearOperator, m: usize, seed: u64, opts: &RsvdOptions) -> Result<Rsvd> {
    let (n, v) = (op.nrows(), op.ncols());
    if m < 1 {
        return Err(CoreError::invalid("truncated_svd", "m must be >= 1"));
    }
    if m > n.min(v) {
        return Err(CoreError::invalid(
            "truncated_svd",
            format!("m = {m} exceeds min(n, v) = {}", n.min(v)),
        ));
    }

    let sketch = (m + opts.oversample).min(n.min(v));
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let omega = gaussian_matrix(v, sketch, &mut rng);
    let mut q = thin_q(op.mul_dense(&omega));

    let mut prev: Option<DVector<f64>> = None;
    let mut iterations = 0usize;
    let mut final_t: Option<DMatrix<f64>> = None;
    let mut last_change = f64::NAN;
    while iterations < opts.max_power_iters {
        // t = A^T Q carries the current Ritz singular values; reuse it for
        // both the convergence check and the next half-step.
        let t = op.tr_mul_dense(&q);
        iterations += 1;

        if iterations >= opts.min_power_iters {
            let sv = t.clone().svd(false, false).singular_values;
            let head = m.min(sv.len());
            let current = DVector::from_fn(head, |j, _| sv[j]);
            if let Some(p) = &prev {
                // Components at roundoff scale are noise; don't let them
                // stall the stopping rule.
                let floor = current[0] * 1e-12;
                last_change = (0..head)
                    .filter(|&j| current[j] > floor)
                    .map(|j| {
                        let denom = current[j].abs().max(1e-300);
                        (current[j] - p[j]).abs() / denom
                    })
                    .fold(0.0f64, f64::max);
                if last_change < opts.tol {
                    final_t = Some(t);
                    break;
                }
            }
            prev = Some(current);
        }

        q = thin_q(op.mul_dense(&thin_q(t)));
    }
    let t = final_t.ok_or(CoreError::NoConvergence {
        op: "truncated_svd",
        iterations,
        residual: last_change,
    })?;

    // A ~ Q (Q^T A) = Q T^T with T = A^T Q; the small SVD of T finishes it.
    let svd = t.svd(true, true);
    let p_right = svd.u.expect("svd.u requested");
    let w = svd.v_t.expect("svd.v_t requested").transpose();
    let sigma_full = svd.singular_values;
    let left_full = &q * &w;

    // Effective rank: drop singular values at roundoff scale.
    let cutoff = sigma_full[0] * (n.max(v) as f64) * f64::EPSILON;
    let mut r = 0;
    while r < m && sigma_full[r] > cutoff {
        r += 1;
    }
    let mut warnings = Vec::new();
    if r < m {
        warnings.push(format!(
            "requested {m} components but numerical rank is {r}; returning {r}"
        ));
    }

    let mut left = left_full.columns(0, r).into_owned();
    let mut right = p_right.columns(0, r).into_owned();
    let sigma = DVector::from_fn(r, |j, _| sigma_full[j]);
    fix_signs(&mut right, &mut left);

    Ok(Rsvd {
        left,
        sigma,
        right,
        iterations,
        warnings,
    })
}

/// Flips factor column pairs so that the max-|entry| element of each `primary`
/// column is nonnegative. SVD signs are arbitrary; reports must be stable.
pub fn fix_signs(primary: &mut DMatrix<f64>, secondary: &mut DMatrix<f64>) {
    for j in 0..primary.ncols() {
        let mut best = 0usize;
        let mut best_abs = -1.0f64;
        for i in 0..primary.nrows() {
            let a = primary[(i, j)].abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if primary[(best, j)] < 0.0 {
            for i in 0..primary.nrows() {
                primary[(i, j)] = -primary[(i, j)];
            }
            for i in 0..secondary.nrows() {
                secondary[(i, j)] = -secondary[(i, j)];
            }
        }
    }
}

/// Max-norm orthonormality residual `max |M^T M - I|`.
pub fn orthonormality_residual(m: &DMatrix<f64>) -> f64 {
    let gram = m.transpose() * m;
    let k = gram.nrows();
    let mut worst = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}
