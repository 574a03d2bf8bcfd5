//! L1-penalized logistic regression with an unpenalized intercept.
//!
//! The objective is the sum-form penalized negative log-likelihood
//! `NLL(b0, b) + lambda * sum_{penalized j} |b_j|`, minimized by cyclic
//! coordinate descent on the iteratively reweighted quadratic approximation.
//! Unpenalized columns and the intercept are never thresholded.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Which report group a design column belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureGroup {
    Topic,
    Covariate,
}

/// Standardization record for one column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnScale {
    pub mean: f64,
    pub scale: f64,
}

/// An unstandardized input column.
#[derive(Debug, Clone)]
pub struct RawColumn {
    pub name: String,
    pub values: Vec<f64>,
    pub penalized: bool,
    pub group: FeatureGroup,
}

/// Column-standardized design matrix. Penalized columns are centered and
/// scaled to unit (population) variance so the penalty treats them
/// comparably; unpenalized columns stay on their raw scale. The scaling
/// record allows coefficients to be reported on both scales.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub x: DMatrix<f64>,
    pub names: Vec<String>,
    pub penalty: Vec<bool>,
    pub groups: Vec<FeatureGroup>,
    pub scaling: Vec<ColumnScale>,
    /// Constant penalized columns dropped during standardization.
    pub dropped: Vec<String>,
}

impl DesignMatrix {
    pub fn standardize(columns: Vec<RawColumn>) -> Result<Self> {
        let n = columns
            .first()
            .map(|c| c.values.len())
            .ok_or_else(|| CoreError::invalid("standardize", "no columns"))?;
        if n < 2 {
            return Err(CoreError::invalid("standardize", "need at least 2 rows"));
        }

        let mut kept: Vec<(RawColumn, ColumnScale)> = Vec::with_capacity(columns.len());
        let mut dropped = Vec::new();
        for col in columns {
            if col.values.len() != n {
                return Err(CoreError::invalid(
                    "standardize",
                    format!("column `{}` has inconsistent length", col.name),
                ));
            }
            if col.values.iter().any(|v| !v.is_finite()) {
                return Err(CoreError::invalid(
                    "standardize",
                    format!("column `{}` contains non-finite values", col.name),
                ));
            }
            if !col.penalized {
                kept.push((
                    col,
                    ColumnScale {
                        mean: 0.0,
                        scale: 1.0,
                    },
                ));
                continue;
            }
            let mean = col.values.iter().sum::<f64>() / n as f64;
            let var = col.values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            if var <= 0.0 {
                dropped.push(col.name);
                continue;
            }
            let scale = var.sqrt();
            kept.push((col, ColumnScale { mean, scale }));
        }
        if kept.is_empty() {
            return Err(CoreError::invalid(
                "standardize",
                "every column was constant and penalized",
            ));
        }

        let k = kept.len();
        let mut x = DMatrix::zeros(n, k);
        for (j, (col, sc)) in kept.iter().enumerate() {
            for i in 0..n {
                x[(i, j)] = (col.values[i] - sc.mean) / sc.scale;
            }
        }
        Ok(DesignMatrix {
            x,
            names: kept.iter().map(|(c, _)| c.name.clone()).collect(),
            penalty: kept.iter().map(|(c, _)| c.penalized).collect(),
            groups: kept.iter().map(|(c, _)| c.group).collect(),
            scaling: kept.iter().map(|&(_, sc)| sc).collect(),
            dropped,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.x.ncols()
    }

    /// De-standardizes a coefficient vector: returns (raw intercept, raw betas)
    /// such that raw-scale predictions match standardized-scale ones exactly.
    pub fn to_raw_scale(&self, intercept: f64, beta: &[f64]) -> (f64, Vec<f64>) {
        let mut raw_intercept = intercept;
        let mut raw = Vec::with_capacity(beta.len());
        for (j, &b) in beta.iter().enumerate() {
            let sc = self.scaling[j];
            raw.push(b / sc.scale);
            raw_intercept -= b * sc.mean / sc.scale;
        }
        (raw_intercept, raw)
    }
}

/// One point on the regularization path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub lambda: f64,
    pub deviance_ratio: f64,
}

/// A converged penalized fit on the standardized scale.
#[derive(Debug, Clone)]
pub struct LassoFit {
    pub beta: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
    /// Indices with |beta| above the active-set tolerance among penalized
    /// columns, plus every unpenalized column.
    pub active_set: Vec<usize>,
    pub path: Vec<PathPoint>,
    pub null_deviance: f64,
    pub deviance: f64,
    pub outer_iterations: usize,
    pub kkt_residual: f64,
}

impl LassoFit {
    pub fn deviance_ratio(&self) -> f64 {
        1.0 - self.deviance / self.null_deviance
    }
}

pub const ACTIVE_TOL: f64 = 1e-8;
const COEF_TOL: f64 = 1e-7;
const KKT_TOL: f64 = 1e-8;
const MAX_OUTER: usize = 200;
const MAX_INNER_PASSES: usize = 2000;
const INNER_TOL: f64 = 1e-10;
const PROB_CLIP: f64 = 1e-8;
const DIVERGENCE_BOUND: f64 = 1e3;

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

fn check_labels(y: &[f64]) -> Result<()> {
    let mut has0 = false;
    let mut has1 = false;
    for &v in y {
        if v == 0.0 {
            has0 = true;
        } else if v == 1.0 {
            has1 = true;
        } else {
            return Err(CoreError::invalid("fit_at", format!("label {v} is not 0/1")));
        }
    }
    if !(has0 && has1) {
        return Err(CoreError::invalid("fit_at", "both outcome classes required"));
    }
    Ok(())
}

/// -2 log-likelihood of binary labels under probabilities implied by `eta`.
fn deviance_of(eta: &[f64], y: &[f64]) -> f64 {
    let mut ll = 0.0;
    for (&e, &yi) in eta.iter().zip(y) {
        // log(1 + exp(e)) computed stably.
        let log1pe = if e > 0.0 {
            e + (-e).exp().ln_1p()
        } else {
            e.exp().ln_1p()
        };
        ll += yi * e - log1pe;
    }
    -2.0 * ll
}

/// Deviance of the intercept-only model.
pub fn null_deviance(y: &[f64]) -> f64 {
    let ybar = y.iter().sum::<f64>() / y.len() as f64;
    let eta = (ybar / (1.0 - ybar)).ln();
    deviance_of(&vec![eta; y.len()], y)
}

/// The smallest lambda at which every penalized coefficient is zero:
/// `max_j |x_j^T (y - p0)|` with `p0` from the unpenalized base model
/// (intercept plus unpenalized columns only).
pub fn lambda_max(design: &DesignMatrix, y: &[f64]) -> Result<f64> {
    check_labels(y)?;
    let base = fit_at(design, y, f64::INFINITY)?;
    let n = design.n_rows();
    let mut eta = vec![base.intercept; n];
    for (j, &b) in base.beta.iter().enumerate() {
        if b != 0.0 {
            for i in 0..n {
                eta[i] += design.x[(i, j)] * b;
            }
        }
    }
    let mut lmax = 0.0f64;
    for j in 0..design.n_cols() {
        if !design.penalty[j] {
            continue;
        }
        let mut g = 0.0;
        for i in 0..n {
            g += design.x[(i, j)] * (y[i] - sigmoid(eta[i]));
        }
        lmax = lmax.max(g.abs());
    }
    Ok(lmax)
}

/// Fits the penalized logit at a fixed lambda. `lambda = inf` is allowed and
/// produces the unpenalized base model (all penalized coefficients zero).
pub fn fit_at(design: &DesignMatrix, y: &[f64], lambda: f64) -> Result<LassoFit> {
    check_labels(y)?;
    if lambda < 0.0 {
        return Err(CoreError::invalid("fit_at", "lambda must be >= 0"));
    }
    let k = design.n_cols();
    let warm = vec![0.0; k];
    let ybar = y.iter().sum::<f64>() / y.len() as f64;
    let intercept0 = (ybar / (1.0 - ybar)).ln();
    fit_from(design, y, lambda, warm, intercept0)
}

fn fit_from(
    design: &DesignMatrix,
    y: &[f64],
    lambda: f64,
    mut beta: Vec<f64>,
    mut intercept: f64,
) -> Result<LassoFit> {
    let n = design.n_rows();
    let k = design.n_cols();
    let x = &design.x;

    let mut eta = vec![0.0f64; n];
    let recompute_eta = |beta: &[f64], intercept: f64, eta: &mut [f64]| {
        for i in 0..n {
            eta[i] = intercept;
        }
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                for i in 0..n {
                    eta[i] += x[(i, j)] * b;
                }
            }
        }
    };
    recompute_eta(&beta, intercept, &mut eta);

    let mut outer = 0;
    let mut kkt = f64::INFINITY;
    let mut w = vec![0.0f64; n];
    let mut r = vec![0.0f64; n];
    while outer < MAX_OUTER {
        outer += 1;
        let beta_before = beta.clone();
        let intercept_before = intercept;

        // Quadratic approximation at the current estimate.
        for i in 0..n {
            let p = sigmoid(eta[i]).clamp(PROB_CLIP, 1.0 - PROB_CLIP);
            w[i] = (p * (1.0 - p)).max(PROB_CLIP);
            // Working residual z_i - eta_i folded into r below.
            r[i] = y[i] - p;
        }
        // r holds w*(z - current linear predictor) = (y - p) at entry; we
        // keep it as the weighted residual w_i*(z_i - b0 - x_i b).
        let mut wx2 = vec![0.0f64; k];
        for j in 0..k {
            let mut s = 0.0;
            for i in 0..n {
                s += w[i] * x[(i, j)] * x[(i, j)];
            }
            wx2[j] = s;
        }
        let w_sum: f64 = w.iter().sum();

        // Cyclic coordinate descent on the weighted least-squares problem.
        let mut pass = 0;
        loop {
            pass += 1;
            let mut max_delta = 0.0f64;

            // Intercept (never penalized).
            let g0: f64 = r.iter().sum();
            let d0 = g0 / w_sum;
            if d0 != 0.0 {
                intercept += d0;
                for i in 0..n {
                    r[i] -= w[i] * d0;
                }
                max_delta = max_delta.max(d0.abs());
            }

            for j in 0..k {
                if wx2[j] <= 0.0 {
                    continue;
                }
                let mut g = 0.0;
                for i in 0..n {
                    g += x[(i, j)] * r[i];
                }
                let num = g + wx2[j] * beta[j];
                let new = if design.penalty[j] {
                    if lambda.is_infinite() {
                        0.0
                    } else {
                        soft_threshold(num, lambda) / wx2[j]
                    }
                } else {
                    num / wx2[j]
                };
                let delta = new - beta[j];
                if delta != 0.0 {
                    beta[j] = new;
                    for i in 0..n {
                        r[i] -= w[i] * x[(i, j)] * delta;
                    }
                    max_delta = max_delta.max(delta.abs());
                }
            }
            if max_delta < INNER_TOL || pass >= MAX_INNER_PASSES {
                break;
            }
        }

        recompute_eta(&beta, intercept, &mut eta);

        let diverged = beta.iter().any(|b| b.abs() > DIVERGENCE_BOUND)
            || intercept.abs() > DIVERGENCE_BOUND;
        if diverged {
            return Err(CoreError::PerfectSeparation {
                lambda: if lambda.is_finite() { lambda } else { -1.0 },
            });
        }

        kkt = kkt_residual(design, y, &eta, &beta, lambda);
        let coef_change = beta
            .iter()
            .zip(&beta_before)
            .map(|(a, b)| (a - b).abs())
            .fold((intercept - intercept_before).abs(), f64::max);
        if coef_change < COEF_TOL && kkt < KKT_TOL {
            break;
        }
    }

    let deviance = deviance_of(&eta, y);
    // A vanishing deviance without a penalty to pin the coefficients means
    // the data are separated and the optimum sits at infinity.
    if lambda == 0.0 && deviance < 1e-4 {
        return Err(CoreError::PerfectSeparation { lambda });
    }
    if kkt >= 1e-6 {
        return Err(CoreError::NoConvergence {
            op: "fit_at",
            iterations: outer,
            residual: kkt,
        });
    }

    let active_set = (0..k)
        .filter(|&j| !design.penalty[j] || beta[j].abs() > ACTIVE_TOL)
        .collect();
    Ok(LassoFit {
        beta,
        intercept,
        lambda,
        active_set,
        path: Vec::new(),
        null_deviance: null_deviance(y),
        deviance,
        outer_iterations: outer,
        kkt_residual: kkt,
    })
}

/// Max KKT violation of the true penalized objective at (intercept, beta).
pub fn kkt_residual(
    design: &DesignMatrix,
    y: &[f64],
    eta: &[f64],
    beta: &[f64],
    lambda: f64,
) -> f64 {
    let n = design.n_rows();
    let mut resid: Vec<f64> = Vec::with_capacity(n);
    for i in 0..n {
        resid.push(sigmoid(eta[i]) - y[i]);
    }
    let mut worst = resid.iter().sum::<f64>().abs(); // intercept gradient
    for j in 0..design.n_cols() {
        let mut g = 0.0;
        for i in 0..n {
            g += design.x[(i, j)] * resid[i];
        }
        let v = if !design.penalty[j] {
            g.abs()
        } else if lambda.is_infinite() {
            0.0
        } else if beta[j] != 0.0 {
            (g + lambda * beta[j].signum()).abs()
        } else {
            (g.abs() - lambda).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

/// Fits a warm-started log-spaced lambda path from `lambda_max` down to
/// `lambda_max * lambda_min_ratio` and returns the final fit carrying the
/// whole path. Each path point records `1 - deviance/null_deviance`.
pub fn fit_path(
    design: &DesignMatrix,
    y: &[f64],
    n_lambdas: usize,
    lambda_min_ratio: f64,
) -> Result<LassoFit> {
    if n_lambdas < 2 {
        return Err(CoreError::invalid("fit_path", "n_lambdas must be >= 2"));
    }
    if !(0.0 < lambda_min_ratio && lambda_min_ratio < 1.0) {
        return Err(CoreError::invalid(
            "fit_path",
            "lambda_min_ratio must lie in (0, 1)",
        ));
    }
    let lmax = lambda_max(design, y)?;
    if lmax <= 0.0 {
        return Err(CoreError::invalid(
            "fit_path",
            "lambda_max is zero: no penalized signal",
        ));
    }
    let grid: Vec<f64> = (0..n_lambdas)
        .map(|t| {
            let f = t as f64 / (n_lambdas - 1) as f64;
            lmax * lambda_min_ratio.powf(f)
        })
        .collect();

    let null_dev = null_deviance(y);
    let mut path = Vec::with_capacity(n_lambdas);
    let mut beta = vec![0.0; design.n_cols()];
    let ybar = y.iter().sum::<f64>() / y.len() as f64;
    let mut intercept = (ybar / (1.0 - ybar)).ln();
    let mut last = None;
    for &lam in &grid {
        // The small-lambda end can run into saturation or separation;
        // truncate the path there rather than failing the whole run.
        let fit = match fit_from(design, y, lam, beta.clone(), intercept) {
            Ok(f) => f,
            Err(CoreError::PerfectSeparation { .. }) | Err(CoreError::NoConvergence { .. })
                if last.is_some() =>
            {
                break;
            }
            Err(e) => return Err(e),
        };
        beta = fit.beta.clone();
        intercept = fit.intercept;
        let ratio = 1.0 - fit.deviance / null_dev;
        path.push(PathPoint {
            lambda: lam,
            deviance_ratio: ratio,
        });
        last = Some(fit);
        if ratio > 0.999 {
            break;
        }
    }
    let mut fit = last.expect("at least the first grid point succeeded");
    fit.path = path;
    Ok(fit)
}

/// Median of the path's deviance ratios. Even-length paths take the lower
/// middle so the statistic is always an actual path value.
pub fn median_deviance_ratio(fit: &LassoFit) -> Result<f64> {
    if fit.path.is_empty() {
        return Err(CoreError::invalid(
            "median_deviance_ratio",
            "fit carries no path",
        ));
    }
    let mut ratios: Vec<f64> = fit.path.iter().map(|p| p.deviance_ratio).collect();
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(ratios[(ratios.len() - 1) / 2])
}

/// The lambda heuristic `2 E[ max_j |x_j^T eps| ]` with `eps ~ N(0, s2)` and
/// `s2` the residual sum of squares from a linear regression of `y` on the
/// given design (minimum-norm solution when columns outnumber rows). Draws
/// are deterministic given the seed; the result is exactly linear in the
/// scale of `y`.
pub fn estimate_lambda_heuristic(
    x: &DMatrix<f64>,
    y: &[f64],
    n_draws: usize,
    seed: u64,
) -> Result<f64> {
    if n_draws < 50 {
        return Err(CoreError::invalid(
            "estimate_lambda_heuristic",
            "n_draws must be >= 50",
        ));
    }
    let n = x.nrows();
    if y.len() != n {
        return Err(CoreError::invalid(
            "estimate_lambda_heuristic",
            "y length mismatch",
        ));
    }
    let yv = DVector::from_column_slice(y);
    let svd = x.clone().svd(true, true);
    let beta = svd
        .solve(&yv, 1e-12)
        .map_err(|e| CoreError::invalid("estimate_lambda_heuristic", e.to_string()))?;
    let resid = &yv - x * beta;
    let rss: f64 = resid.iter().map(|v| v * v).sum();
    if rss <= f64::EPSILON * n as f64 {
        return Err(CoreError::ZeroResidualVariance);
    }
    let sigma = rss.sqrt();

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut acc = 0.0f64;
    for _ in 0..n_draws {
        let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let mut best = 0.0f64;
        for j in 0..x.ncols() {
            let mut dot = 0.0;
            for i in 0..n {
                dot += x[(i, j)] * z[i];
            }
            best = best.max(dot.abs());
        }
        acc += best;
    }
    Ok(2.0 * sigma * (acc / n_draws as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gaussian_matrix;

    fn design_from(x: DMatrix<f64>, penalized: bool) -> DesignMatrix {
        let cols = (0..x.ncols())
            .map(|j| RawColumn {
                name: format!("x{j}"),
                values: x.column(j).iter().copied().collect(),
                penalized,
                group: FeatureGroup::Topic,
            })
            .collect();
        DesignMatrix::standardize(cols).unwrap()
    }

    fn random_problem(n: usize, k: usize, seed: u64, signal: &[f64]) -> (DesignMatrix, Vec<f64>) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let x = gaussian_matrix(n, k, &mut rng);
        let design = design_from(x, true);
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let mut eta = 0.0;
                for (j, &b) in signal.iter().enumerate() {
                    eta += design.x[(i, j)] * b;
                }
                let p = sigmoid(eta);
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        (design, y)
    }

    #[test]
    fn standardize_two_point_column() {
        let d = design_from(DMatrix::from_column_slice(2, 1, &[0.0, 2.0]), true);
        assert_eq!(d.x[(0, 0)], -1.0);
        assert_eq!(d.x[(1, 0)], 1.0);
    }

    #[test]
    fn standardize_drops_constant_penalized_column() {
        let cols = vec![
            RawColumn {
                name: "const".into(),
                values: vec![3.0; 5],
                penalized: true,
                group: FeatureGroup::Covariate,
            },
            RawColumn {
                name: "ok".into(),
                values: vec![1.0, 2.0, 3.0, 4.0, 5.0],
                penalized: true,
                group: FeatureGroup::Covariate,
            },
        ];
        let d = DesignMatrix::standardize(cols).unwrap();
        assert_eq!(d.dropped, vec!["const".to_string()]);
        assert_eq!(d.names, vec!["ok".to_string()]);
    }

    #[test]
    fn raw_scale_round_trip() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let x = gaussian_matrix(30, 4, &mut rng);
        let mut shifted = x.clone();
        for i in 0..30 {
            shifted[(i, 1)] = 5.0 * shifted[(i, 1)] + 2.0;
        }
        let d = design_from(shifted.clone(), true);
        let beta = [0.5, -0.25, 0.0, 1.5];
        let intercept = 0.7;
        let (raw_i, raw_b) = d.to_raw_scale(intercept, &beta);
        for i in 0..30 {
            let eta_std: f64 =
                intercept + (0..4).map(|j| d.x[(i, j)] * beta[j]).sum::<f64>();
            let eta_raw: f64 =
                raw_i + (0..4).map(|j| shifted[(i, j)] * raw_b[j]).sum::<f64>();
            assert!((eta_std - eta_raw).abs() < 1e-12);
        }
    }

    #[test]
    fn lambda_above_max_gives_null_model() {
        let (design, y) = random_problem(50, 6, 11, &[1.0, -0.5, 0.0, 0.0, 0.0, 0.0]);
        let lmax = lambda_max(&design, &y).unwrap();
        let fit = fit_at(&design, &y, lmax * 1.0001).unwrap();
        assert!(fit.beta.iter().all(|&b| b == 0.0));
        let ybar = y.iter().sum::<f64>() / y.len() as f64;
        let expect = (ybar / (1.0 - ybar)).ln();
        assert!((fit.intercept - expect).abs() < 1e-6);
        assert!(fit.active_set.is_empty());

        // Just below lambda_max at least one coefficient activates.
        let fit2 = fit_at(&design, &y, lmax * 0.95).unwrap();
        assert!(!fit2.active_set.is_empty());
    }

    #[test]
    fn unpenalized_fit_matches_newton_oracle() {
        let (design, y) = random_problem(40, 5, 21, &[0.8, -0.6, 0.3, 0.0, 0.0]);
        let fit = fit_at(&design, &y, 0.0).unwrap();

        // Independent Newton-Raphson on the same likelihood.
        let n = 40;
        let k = 5;
        let mut full = DMatrix::zeros(n, k + 1);
        for i in 0..n {
            full[(i, 0)] = 1.0;
            for j in 0..k {
                full[(i, j + 1)] = design.x[(i, j)];
            }
        }
        let mut b = DVector::zeros(k + 1);
        for _ in 0..60 {
            let eta = &full * &b;
            let p: DVector<f64> = eta.map(sigmoid);
            let grad = full.transpose()
                * DVector::from_fn(n, |i, _| y[i] - p[i]);
            let mut h = DMatrix::zeros(k + 1, k + 1);
            for i in 0..n {
                let wi = p[i] * (1.0 - p[i]);
                for a in 0..=k {
                    for c in 0..=k {
                        h[(a, c)] += wi * full[(i, a)] * full[(i, c)];
                    }
                }
            }
            let step = h.lu().solve(&grad).unwrap();
            b += &step;
            if step.amax() < 1e-12 {
                break;
            }
        }
        assert!((fit.intercept - b[0]).abs() < 1e-6);
        for j in 0..k {
            assert!(
                (fit.beta[j] - b[j + 1]).abs() < 1e-6,
                "beta[{j}]: {} vs {}",
                fit.beta[j],
                b[j + 1]
            );
        }
    }

    #[test]
    fn kkt_conditions_hold_at_solution() {
        let (design, y) = random_problem(60, 10, 33, &[1.2, -0.8, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let lmax = lambda_max(&design, &y).unwrap();
        for frac in [0.5, 0.2, 0.05] {
            let fit = fit_at(&design, &y, lmax * frac).unwrap();
            assert!(
                fit.kkt_residual < 1e-6,
                "kkt {} at frac {frac}",
                fit.kkt_residual
            );
        }
    }

    #[test]
    fn unpenalized_columns_never_thresholded() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let x = gaussian_matrix(80, 4, &mut rng);
        let cols: Vec<RawColumn> = (0..4)
            .map(|j| RawColumn {
                name: format!("x{j}"),
                values: x.column(j).iter().copied().collect(),
                penalized: j != 0,
                group: if j == 0 {
                    FeatureGroup::Covariate
                } else {
                    FeatureGroup::Topic
                },
            })
            .collect();
        let design = DesignMatrix::standardize(cols).unwrap();
        let y: Vec<f64> = (0..80)
            .map(|i| {
                let p = sigmoid(0.9 * design.x[(i, 0)]);
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let lmax = lambda_max(&design, &y).unwrap();
        let fit = fit_at(&design, &y, lmax * 2.0).unwrap();
        // Penalized all zero, unpenalized column still fitted.
        assert!(fit.beta[0].abs() > 1e-3);
        for j in 1..4 {
            assert_eq!(fit.beta[j], 0.0);
        }
        assert_eq!(fit.active_set, vec![0]);
    }

    #[test]
    fn perfect_separation_reported_at_lambda_zero() {
        // One standardized column separates y perfectly.
        let values: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<f64> = (0..20).map(|i| if i < 10 { 0.0 } else { 1.0 }).collect();
        let design = DesignMatrix::standardize(vec![RawColumn {
            name: "sep".into(),
            values,
            penalized: true,
            group: FeatureGroup::Topic,
        }])
        .unwrap();
        let err = fit_at(&design, &y, 0.0).unwrap_err();
        assert!(matches!(err, CoreError::PerfectSeparation { .. }), "{err}");
        // A positive lambda regularizes the same data into a valid fit.
        assert!(fit_at(&design, &y, 1.0).is_ok());
    }

    #[test]
    fn path_starts_null_and_ratios_non_decreasing() {
        let (design, y) = random_problem(70, 8, 5, &[1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let fit = fit_path(&design, &y, 20, 1e-3).unwrap();
        assert!(fit.path.len() >= 2 && fit.path.len() <= 20);
        assert!(fit.path[0].deviance_ratio.abs() < 1e-9);
        for w in fit.path.windows(2) {
            assert!(
                w[1].deviance_ratio >= w[0].deviance_ratio - 1e-9,
                "ratios decreased: {w:?}"
            );
        }
    }

    #[test]
    fn warm_path_matches_cold_fits() {
        let (design, y) = random_problem(50, 6, 8, &[0.9, 0.0, -0.7, 0.0, 0.0, 0.0]);
        let fit = fit_path(&design, &y, 8, 0.01).unwrap();
        for p in &fit.path {
            let cold = fit_at(&design, &y, p.lambda).unwrap();
            let ratio = 1.0 - cold.deviance / cold.null_deviance;
            assert!((ratio - p.deviance_ratio).abs() < 1e-6);
        }
        // Coefficients at the last grid point agree with a cold fit there.
        let last_lambda = fit.path.last().unwrap().lambda;
        let cold = fit_at(&design, &y, last_lambda).unwrap();
        for (a, b) in fit.beta.iter().zip(&cold.beta) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn median_conventions() {
        let mk = |ratios: &[f64]| LassoFit {
            beta: vec![],
            intercept: 0.0,
            lambda: 1.0,
            active_set: vec![],
            path: ratios
                .iter()
                .map(|&r| PathPoint {
                    lambda: 1.0,
                    deviance_ratio: r,
                })
                .collect(),
            null_deviance: 1.0,
            deviance: 1.0,
            outer_iterations: 0,
            kkt_residual: 0.0,
        };
        assert_eq!(median_deviance_ratio(&mk(&[0.0, 0.2, 0.4])).unwrap(), 0.2);
        assert_eq!(median_deviance_ratio(&mk(&[0.3])).unwrap(), 0.3);
        // Even count: lower middle.
        assert_eq!(
            median_deviance_ratio(&mk(&[0.1, 0.2, 0.3, 0.4])).unwrap(),
            0.2
        );
        assert!(median_deviance_ratio(&mk(&[])).is_err());
    }

    #[test]
    fn lambda_heuristic_matches_half_normal_closed_form() {
        // Single all-ones column: x^T eps ~ N(0, n * s2), so the heuristic
        // tends to 2*sqrt(2/pi)*sqrt(n) when s2 = 1.
        let n = 100;
        let x = DMatrix::from_element(n, 1, 1.0);
        // y = c + r with r orthogonal to the ones column and |r|^2 = 1.
        let mut y = vec![0.5; n];
        let a = (0.5f64).sqrt();
        y[0] += a;
        y[1] -= a;
        let draws = 4000;
        let lam = estimate_lambda_heuristic(&x, &y, draws, 99).unwrap();
        let expect = 2.0 * (2.0 / std::f64::consts::PI).sqrt() * (n as f64).sqrt();
        // Half-normal sd of |sum z| is sqrt(n(1 - 2/pi)); 3 MC standard errors.
        let mc_se = (n as f64 * (1.0 - 2.0 / std::f64::consts::PI)).sqrt()
            / (draws as f64).sqrt();
        assert!(
            (lam - expect).abs() < 3.0 * 2.0 * mc_se,
            "lam {lam} vs {expect} (3se = {})",
            3.0 * 2.0 * mc_se
        );
    }

    #[test]
    fn lambda_heuristic_scale_equivariant_exactly() {
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        let x = gaussian_matrix(40, 3, &mut rng);
        let y: Vec<f64> = (0..40).map(|_| rng.random::<f64>()).collect();
        let y2: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
        let l1 = estimate_lambda_heuristic(&x, &y, 200, 7).unwrap();
        let l2 = estimate_lambda_heuristic(&x, &y2, 200, 7).unwrap();
        assert_eq!(l2, 2.0 * l1);
    }

    #[test]
    fn lambda_heuristic_rejects_perfect_fit() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let x = gaussian_matrix(10, 10, &mut rng);
        // k = n: exact interpolation, zero residual.
        let y: Vec<f64> = (0..10).map(|_| rng.random::<f64>()).collect();
        assert!(matches!(
            estimate_lambda_heuristic(&x, &y, 100, 0),
            Err(CoreError::ZeroResidualVariance)
        ));
    }
}
