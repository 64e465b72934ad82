//! Linear-algebra kernel shared by every metric: centering, covariance,
//! PCA reorientation and singular-value spectra.
//!
//! All work happens in `f64`. Eigen- and singular-value decompositions are
//! delegated to `nalgebra`; this module fixes the conventions around them
//! (ordering, sign, clamping, degeneracy).

use std::cmp::Ordering;

use nalgebra::{DMatrix, SymmetricEigen, SVD};
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{IsoError, Result};

/// Normalizer applied to the scatter matrix when forming a covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Denominator {
    /// Divide by N − 1.
    #[default]
    Sample,
    /// Divide by N.
    Population,
}

impl Denominator {
    fn value(self, n_obs: usize) -> f64 {
        match self {
            Denominator::Sample => n_obs as f64 - 1.0,
            Denominator::Population => n_obs as f64,
        }
    }
}

/// Per-principal-axis variances, sorted in descending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceDiagonal {
    pub values: Vec<f64>,
}

impl VarianceDiagonal {
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Singular values of a data matrix, largest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub singular_values: Vec<f64>,
    /// `singular_values` divided by the leading value.
    pub normalized: Vec<f64>,
}

impl Spectrum {
    fn from_values(mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
        let lead = values.first().copied().unwrap_or(0.0);
        let normalized = if lead > 0.0 {
            values.iter().map(|v| v / lead).collect()
        } else {
            vec![0.0; values.len()]
        };
        Self {
            singular_values: values,
            normalized,
        }
    }

    /// Smallest over largest singular value.
    pub fn min_max_ratio(&self) -> f64 {
        self.normalized.last().copied().unwrap_or(0.0)
    }

    /// Shannon entropy of the squared-singular-value distribution divided by
    /// `ln(len)`: 1 for a flat spectrum, 0 when one direction carries all
    /// the energy.
    pub fn spectral_entropy(&self) -> f64 {
        let k = self.singular_values.len();
        if k < 2 {
            return 0.0;
        }
        let energy: f64 = self.singular_values.iter().map(|s| s * s).sum();
        if energy <= 0.0 {
            return 0.0;
        }
        let h: f64 = self
            .singular_values
            .iter()
            .map(|s| s * s / energy)
            .filter(|&p| p > 0.0)
            .map(|p| -p * p.ln())
            .sum();
        h / (k as f64).ln()
    }
}

/// Subtracts the column means from every row.
pub fn center(cloud: &PointCloud) -> PointCloud {
    let means = cloud.column_means();
    let mut data = cloud.matrix().clone();
    for (j, mut col) in data.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[j]);
    }
    PointCloud::from_matrix_unchecked(data)
}

/// True when centering leaves nothing above rounding noise, i.e. every row
/// is (numerically) the same point.
pub(crate) fn is_constant(cloud: &PointCloud, centered: &PointCloud) -> bool {
    let scale = cloud.max_abs();
    centered.max_abs() <= 64.0 * f64::EPSILON * scale
}

/// Covariance matrix of the cloud with the given denominator.
pub fn covariance(cloud: &PointCloud, denominator: Denominator) -> Result<DMatrix<f64>> {
    if cloud.len() < 2 {
        return Err(IsoError::DegenerateCloud(format!(
            "covariance needs at least 2 observations, got {}",
            cloud.len()
        )));
    }
    let centered = center(cloud);
    let m = centered.matrix();
    let mut cov = m.tr_mul(m);
    cov /= denominator.value(cloud.len());
    // Enforce exact symmetry; the product is symmetric only up to rounding.
    let cov = (&cov + cov.transpose()) * 0.5;
    Ok(cov)
}

/// PCA reorientation with the default sample denominator.
pub fn pca_reorient(cloud: &PointCloud) -> Result<(PointCloud, VarianceDiagonal)> {
    pca_reorient_with(cloud, Denominator::Sample)
}

/// Projects the centered cloud onto all n principal axes (no reduction) and
/// returns the per-axis variances.
///
/// Axes are ordered by descending variance, ties by eigen-solver order.
/// Each axis is signed so that its largest-magnitude component is positive.
/// Negative eigenvalues produced by rounding are clamped to zero.
pub fn pca_reorient_with(
    cloud: &PointCloud,
    denominator: Denominator,
) -> Result<(PointCloud, VarianceDiagonal)> {
    let (axes, variances) = principal_axes(cloud, denominator)?;
    let projected = center(cloud).matrix() * &axes;
    Ok((PointCloud::from_matrix_unchecked(projected), variances))
}

/// Unit principal axes (as matrix columns) and their variances.
pub fn principal_axes(
    cloud: &PointCloud,
    denominator: Denominator,
) -> Result<(DMatrix<f64>, VarianceDiagonal)> {
    let cov = covariance(cloud, denominator)?;
    let n = cov.nrows();
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut axes = DMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(src).clone_owned();
        let pivot = v
            .iter()
            .enumerate()
            .fold((0, 0.0_f64), |best, (i, x)| {
                if x.abs() > best.1 {
                    (i, x.abs())
                } else {
                    best
                }
            })
            .0;
        if v[pivot] < 0.0 {
            v.neg_mut();
        }
        axes.set_column(dst, &v);
        values.push(eig.eigenvalues[src].max(0.0));
    }
    Ok((axes, VarianceDiagonal { values }))
}

/// Singular values of the data matrix, optionally centered first.
pub fn svd_spectrum(cloud: &PointCloud, centered: bool) -> Result<Spectrum> {
    let matrix = if centered {
        let c = center(cloud);
        if is_constant(cloud, &c) {
            return Err(IsoError::DegenerateCloud(
                "centered matrix is zero (all rows identical)".into(),
            ));
        }
        c.into_matrix()
    } else {
        if cloud.max_abs() == 0.0 {
            return Err(IsoError::DegenerateCloud("all-zero matrix".into()));
        }
        cloud.matrix().clone()
    };
    // Decompose the thinner orientation; singular values are shared.
    let matrix = if matrix.nrows() < matrix.ncols() {
        matrix.transpose()
    } else {
        matrix
    };
    let svd = SVD::new(matrix, false, false);
    Ok(Spectrum::from_values(
        svd.singular_values.iter().copied().collect(),
    ))
}
