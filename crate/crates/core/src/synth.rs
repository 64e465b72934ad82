//! Seeded synthetic point clouds for tests and fixtures.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{IsoError, Result};

/// Recipe for a Gaussian cloud: diagonal variances, then an optional seeded
/// rotation, then an optional offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudSpec {
    pub dim: usize,
    pub count: usize,
    pub variance_profile: Vec<f64>,
    #[serde(default)]
    pub rotation_seed: Option<u64>,
    #[serde(default)]
    pub offset: Option<Vec<f64>>,
    #[serde(default)]
    pub sample_seed: u64,
}

impl CloudSpec {
    /// Unit variance on every axis.
    pub fn isotropic(dim: usize, count: usize, sample_seed: u64) -> Self {
        Self {
            dim,
            count,
            variance_profile: vec![1.0; dim],
            rotation_seed: None,
            offset: None,
            sample_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.count == 0 {
            return Err(IsoError::InvalidCloud(format!(
                "cloud spec needs positive dim and count, got {}×{}",
                self.count, self.dim
            )));
        }
        if self.variance_profile.len() != self.dim {
            return Err(IsoError::InvalidDimension(format!(
                "variance profile has length {}, dim is {}",
                self.variance_profile.len(),
                self.dim
            )));
        }
        if self
            .variance_profile
            .iter()
            .any(|v| !v.is_finite() || *v < 0.0)
        {
            return Err(IsoError::InvalidCloud(
                "variance profile entries must be finite and nonnegative".into(),
            ));
        }
        if let Some(offset) = &self.offset {
            if offset.len() != self.dim {
                return Err(IsoError::InvalidDimension(format!(
                    "offset has length {}, dim is {}",
                    offset.len(),
                    self.dim
                )));
            }
        }
        Ok(())
    }
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    // Filled row by row so the draw order does not depend on storage layout.
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = StandardNormal.sample(rng);
        }
    }
    m
}

/// Random orthogonal matrix: QR of a seeded Gaussian matrix, with the signs
/// of Q's columns fixed so that R has a positive diagonal.
pub fn random_orthogonal(dim: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let qr = gaussian_matrix(dim, dim, &mut rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

pub fn generate_gaussian(spec: &CloudSpec) -> Result<PointCloud> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.sample_seed);
    let mut data = gaussian_matrix(spec.count, spec.dim, &mut rng);
    for (j, mut col) in data.column_iter_mut().enumerate() {
        col *= spec.variance_profile[j].sqrt();
    }
    if let Some(seed) = spec.rotation_seed {
        data *= random_orthogonal(spec.dim, seed);
    }
    let cloud = PointCloud::new(data)?;
    match &spec.offset {
        Some(offset) => cloud.translate(offset),
        None => Ok(cloud),
    }
}

/// Rows of several clusters stacked in cluster order, with each row's
/// cluster index.
#[derive(Debug, Clone)]
pub struct LabeledCloud {
    pub cloud: PointCloud,
    pub labels: Vec<usize>,
}

impl LabeledCloud {
    /// Rows belonging to one cluster.
    pub fn cluster(&self, label: usize) -> PointCloud {
        let idx: Vec<usize> = self
            .labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == label)
            .map(|(i, _)| i)
            .collect();
        self.cloud.select_rows(&idx)
    }
}

/// `clusters` unit-variance isotropic Gaussian clusters; cluster `j` is
/// centered at `separation · e_j`. All clusters draw from one seeded stream,
/// so with zero separation the result is a single Gaussian sample.
pub fn generate_language_clusters(
    clusters: usize,
    per_cluster: usize,
    dim: usize,
    separation: f64,
    seed: u64,
) -> Result<LabeledCloud> {
    if clusters < 2 {
        return Err(IsoError::InvalidCloud(format!(
            "need at least 2 clusters, got {clusters}"
        )));
    }
    if clusters > dim {
        return Err(IsoError::InvalidDimension(format!(
            "{clusters} clusters need {clusters} distinct axes, dim is {dim}"
        )));
    }
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(IsoError::InvalidCloud(format!(
            "separation must be finite and ≥ 0, got {separation}"
        )));
    }
    if per_cluster == 0 {
        return Err(IsoError::InvalidCloud("per_cluster must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = gaussian_matrix(clusters * per_cluster, dim, &mut rng);
    let mut labels = Vec::with_capacity(clusters * per_cluster);
    for c in 0..clusters {
        for i in 0..per_cluster {
            data[(c * per_cluster + i, c)] += separation;
            labels.push(c);
        }
    }
    Ok(LabeledCloud {
        cloud: PointCloud::new(data)?,
        labels,
    })
}

/// Rows `±s_i · e_i` (plus `center`): zero-mean about `center`, exactly
/// diagonal covariance. Axis `i` has population variance `variances[i]`.
pub fn scaled_cross_polytope(variances: &[f64], center: Option<&[f64]>) -> Result<PointCloud> {
    let n = variances.len();
    let mut rows = Vec::with_capacity(2 * n);
    for (i, v) in variances.iter().enumerate() {
        if !(v.is_finite() && *v >= 0.0) {
            return Err(IsoError::InvalidCloud(format!("bad variance {v}")));
        }
        let s = (v * n as f64).sqrt();
        for sign in [1.0, -1.0] {
            let mut r = vec![0.0; n];
            r[i] = sign * s;
            rows.push(r);
        }
    }
    let cloud = PointCloud::from_rows(&rows)?;
    match center {
        Some(c) => cloud.translate(c),
        None => Ok(cloud),
    }
}
