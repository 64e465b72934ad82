//! IsoScore: how uniformly a point cloud spreads its variance over the
//! dimensions of its ambient space.
//!
//! Given the PCA variance diagonal `Σ_D` of an n-dimensional cloud:
//!
//! ```text
//! Σ̂   = √n · Σ_D / ‖Σ_D‖
//! δ   = ‖Σ̂ − 1‖ / √(2(n − √n))
//! φ   = (n − δ²(n − √n))² / n²          ∈ [1/n, 1]
//! Iso = (n·φ − 1) / (n − 1)              ∈ [0, 1]
//! ```
//!
//! φ is the fraction of dimensions used isotropically: k equally-loaded axes
//! out of n give φ = k/n, hence Iso = (k − 1)/(n − 1).

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{IsoError, Result};
use crate::geometry::{self, Denominator, VarianceDiagonal};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsoScoreResult {
    /// Rescaled score in [0, 1].
    pub score: f64,
    /// Fraction of dimensions isotropically utilized, in [1/n, 1].
    pub phi: f64,
    /// Normalized distance of the variance diagonal from the identity.
    pub delta: f64,
    /// Ambient dimension.
    pub dim: usize,
    /// Observation count.
    pub count: usize,
}

/// IsoScore of a cloud, using the sample (N − 1) covariance.
pub fn isoscore(cloud: &PointCloud) -> Result<IsoScoreResult> {
    isoscore_with(cloud, Denominator::Sample)
}

pub fn isoscore_with(cloud: &PointCloud, denominator: Denominator) -> Result<IsoScoreResult> {
    check_dim(cloud.dim())?;
    if cloud.len() < 2 {
        return Err(IsoError::DegenerateCloud(format!(
            "IsoScore needs at least 2 observations, got {}",
            cloud.len()
        )));
    }
    if geometry::is_constant(cloud, &geometry::center(cloud)) {
        return Err(IsoError::DegenerateCloud(
            "total variance is zero (all rows identical)".into(),
        ));
    }
    let (_, diagonal) = geometry::pca_reorient_with(cloud, denominator)?;
    let mut result = isoscore_from_variances(&diagonal)?;
    result.count = cloud.len();
    Ok(result)
}

/// Evaluates the score from a variance diagonal directly. `count` in the
/// result is left at 0.
pub fn isoscore_from_variances(diagonal: &VarianceDiagonal) -> Result<IsoScoreResult> {
    let n = diagonal.len();
    check_dim(n)?;
    if let Some(v) = diagonal.values.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(IsoError::InvalidCloud(format!(
            "variance diagonal contains {v}"
        )));
    }
    let norm = diagonal.values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(IsoError::DegenerateCloud("total variance is zero".into()));
    }

    let nf = n as f64;
    let root_n = nf.sqrt();
    let gap = diagonal
        .values
        .iter()
        .map(|v| root_n * v / norm - 1.0)
        .map(|d| d * d)
        .sum::<f64>()
        .sqrt();
    let delta = gap / (2.0 * (nf - root_n)).sqrt();
    let phi = ((nf - delta * delta * (nf - root_n)).powi(2) / (nf * nf)).clamp(1.0 / nf, 1.0);
    let score = ((nf * phi - 1.0) / (nf - 1.0)).clamp(0.0, 1.0);

    Ok(IsoScoreResult {
        score,
        phi,
        delta,
        dim: n,
        count: 0,
    })
}

/// Clouds with fewer than ten observations per dimension are flagged in
/// reports; the score is still computed.
pub fn is_low_sample(count: usize, dim: usize) -> bool {
    count < 10 * dim
}

fn check_dim(n: usize) -> Result<()> {
    if n < 2 {
        return Err(IsoError::InvalidDimension(format!(
            "IsoScore needs dimension ≥ 2, got {n}"
        )));
    }
    Ok(())
}
