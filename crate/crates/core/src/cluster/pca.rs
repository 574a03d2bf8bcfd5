//! Centered principal-component projection for chunk embeddings.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::linalg::{randomized_svd, RsvdOptions};

/// A fitted projection: column means plus the top-d principal axes.
#[derive(Debug, Clone)]
pub struct PcaModel {
    pub means: Vec<f64>,
    /// e x d, orthonormal columns, max-|entry|-nonnegative signs.
    pub axes: DMatrix<f64>,
    pub warnings: Vec<String>,
}

/// Projects `x` (rows are points) onto its top-d principal axes after
/// centering. When d exceeds the numerical rank, the surviving components
/// are returned with a warning.
pub fn reduce_dim(x: &DMatrix<f64>, d: usize, seed: u64) -> Result<(DMatrix<f64>, PcaModel)> {
    let e = x.ncols();
    let d = d.min(e);
    let means: Vec<f64> = (0..e)
        .map(|j| x.column(j).iter().sum::<f64>() / x.nrows() as f64)
        .collect();
    let mut centered = x.clone();
    for j in 0..e {
        for i in 0..centered.nrows() {
            centered[(i, j)] -= means[j];
        }
    }

    let target = d.min(centered.nrows().min(e));
    let f = randomized_svd(&centered, target, seed, &RsvdOptions::default())?;
    let axes = f.right;
    let scores = &centered * &axes;
    Ok((
        scores,
        PcaModel {
            means,
            axes,
            warnings: f.warnings,
        },
    ))
}
