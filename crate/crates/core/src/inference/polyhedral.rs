//! Truncation intervals from affine selection constraints.
//!
//! For `v ~ N(mu, cov)` observed inside the polyhedron `{A v <= b}`, the
//! coordinate `eta^T v` conditioned on the rest of `v` is a Gaussian
//! truncated to an interval `[lo, hi]` determined by the constraint geometry
//! (the polyhedral lemma of the selective-inference literature).

use nalgebra::{DMatrix, DVector};

/// The interval (and feasibility verdict) for one tested direction.
#[derive(Debug, Clone, Copy)]
pub struct TruncationInterval {
    pub lo: f64,
    pub hi: f64,
    /// Variance of `eta^T v` under the covariance used to build it.
    pub variance: f64,
    pub degenerate: bool,
}

/// Computes the truncation interval for `eta^T v` given constraints
/// `a_mat * v <= b` and covariance `cov`.
pub fn truncation_interval(
    a_mat: &DMatrix<f64>,
    b: &DVector<f64>,
    cov: &DMatrix<f64>,
    eta: &DVector<f64>,
    v: &DVector<f64>,
) -> TruncationInterval {
    let sigma_eta = cov * eta;
    let variance = eta.dot(&sigma_eta);
    let c = &sigma_eta / variance;
    let value = eta.dot(v);
    let z = v - &c * value;

    let ac = a_mat * &c;
    let az = a_mat * &z;

    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let mut degenerate = false;
    // Rows with a negligible eta-component only impose feasibility.
    let scale = ac.amax().max(1e-12);
    for k in 0..a_mat.nrows() {
        let rate = ac[k];
        let slack = b[k] - az[k];
        if rate.abs() <= 1e-12 * scale {
            if slack < -1e-9 {
                degenerate = true;
            }
            continue;
        }
        let bound = slack / rate;
        if rate > 0.0 {
            hi = hi.min(bound);
        } else {
            lo = lo.max(bound);
        }
    }
    if lo >= hi {
        degenerate = true;
    }
    TruncationInterval {
        lo,
        hi,
        variance,
        degenerate,
    }
}
