//! Older anisotropy measures, reported next to IsoScore for context.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{IsoError, Result};
use crate::geometry::{self, Denominator};

pub const DEFAULT_SAMPLE_PAIRS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub avg_cosine: f64,
    pub partition_score: f64,
}

/// Both baselines with the given cosine sampling parameters.
pub fn baselines(cloud: &PointCloud, sample_pairs: usize, seed: u64) -> Result<BaselineResult> {
    Ok(BaselineResult {
        avg_cosine: avg_cosine_similarity(cloud, sample_pairs, seed)?,
        partition_score: partition_isotropy(cloud)?,
    })
}

/// Mean cosine similarity over `sample_pairs` random unordered pairs of
/// distinct rows. Pairs touching a zero-norm row are redrawn.
pub fn avg_cosine_similarity(cloud: &PointCloud, sample_pairs: usize, seed: u64) -> Result<f64> {
    let count = cloud.len();
    if count < 2 {
        return Err(IsoError::DegenerateCloud(format!(
            "cosine similarity needs at least 2 rows, got {count}"
        )));
    }
    if sample_pairs == 0 {
        return Err(IsoError::InvalidCloud("sample_pairs must be positive".into()));
    }
    let m = cloud.matrix();
    let norms: Vec<f64> = m.row_iter().map(|r| r.norm()).collect();
    let nonzero = norms.iter().filter(|v| **v > 0.0).count();
    if 2 * (count - nonzero) > count || nonzero < 2 {
        return Err(IsoError::DegenerateCloud(format!(
            "{} of {count} rows have zero norm",
            count - nonzero
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    let mut drawn = 0;
    while drawn < sample_pairs {
        let i = rng.random_range(0..count);
        let j = rng.random_range(0..count - 1);
        let j = if j >= i { j + 1 } else { j };
        if norms[i] == 0.0 || norms[j] == 0.0 {
            continue;
        }
        total += m.row(i).dot(&m.row(j)) / (norms[i] * norms[j]);
        drawn += 1;
    }
    Ok(total / sample_pairs as f64)
}

/// Partition-function isotropy `min_c Z(c) / max_c Z(c)` with
/// `Z(c) = Σ_i exp(cᵀx_i)`, where `c` ranges over ± the unit eigenvectors of
/// the covariance matrix. Evaluated in log space to avoid overflow.
pub fn partition_isotropy(cloud: &PointCloud) -> Result<f64> {
    if cloud.len() < 2 {
        return Err(IsoError::DegenerateCloud(format!(
            "partition score needs at least 2 rows, got {}",
            cloud.len()
        )));
    }
    if geometry::is_constant(cloud, &geometry::center(cloud)) {
        return Err(IsoError::DegenerateCloud("covariance is zero".into()));
    }
    let (axes, _) = geometry::principal_axes(cloud, Denominator::Sample)?;
    // Column k of X·V holds c_kᵀx_i for every row i.
    let proj = cloud.matrix() * &axes;

    let mut log_z = Vec::with_capacity(2 * proj.ncols());
    for col in proj.column_iter() {
        for sign in [1.0, -1.0] {
            let peak = col.iter().fold(f64::NEG_INFINITY, |m, v| m.max(sign * v));
            let sum: f64 = col.iter().map(|v| (sign * v - peak).exp()).sum();
            log_z.push(peak + sum.ln());
        }
    }
    let lo = log_z.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = log_z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // Ratios below the f64 range are reported as the smallest normal value
    // so the score stays strictly positive.
    Ok((lo - hi).exp().max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_rows_have_cosine_one() {
        let c = PointCloud::from_rows(&[[0.3, -1.2, 4.0]; 6]).unwrap();
        let v = avg_cosine_similarity(&c, 1000, 7).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn antipodal_rows_average_to_zero() {
        let mut rows = vec![[1.0, 0.0]; 50];
        rows.extend(vec![[-1.0, 0.0]; 50]);
        let c = PointCloud::from_rows(&rows).unwrap();
        let pairs = 40_000;
        let v = avg_cosine_similarity(&c, pairs, 11).unwrap();
        assert!(v.abs() <= 3.0 / (pairs as f64).sqrt(), "{v}");
    }

    #[test]
    fn cosine_is_deterministic_and_scale_free() {
        let rows: Vec<[f64; 3]> = (0..30)
            .map(|i| {
                let t = i as f64;
                [t.sin(), (1.3 * t).cos(), 0.2 * t - 2.0]
            })
            .collect();
        let c = PointCloud::from_rows(&rows).unwrap();
        let a = avg_cosine_similarity(&c, 5000, 3).unwrap();
        let b = avg_cosine_similarity(&c, 5000, 3).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        let scaled = avg_cosine_similarity(&c.scale(37.5).unwrap(), 5000, 3).unwrap();
        assert!((a - scaled).abs() < 1e-12);
    }

    #[test]
    fn zero_rows_are_skipped_or_rejected() {
        let mut rows = vec![[0.0, 0.0]; 2];
        rows.extend(vec![[1.0, 1.0]; 3]);
        let c = PointCloud::from_rows(&rows).unwrap();
        assert!((avg_cosine_similarity(&c, 500, 1).unwrap() - 1.0).abs() < 1e-12);

        let mut rows = vec![[0.0, 0.0]; 3];
        rows.extend(vec![[1.0, 1.0]; 2]);
        let c = PointCloud::from_rows(&rows).unwrap();
        assert!(matches!(
            avg_cosine_similarity(&c, 500, 1),
            Err(IsoError::DegenerateCloud(_))
        ));
    }

    #[test]
    fn cross_polytope_partition_is_one() {
        let n = 5;
        let mut rows = Vec::new();
        for i in 0..n {
            for s in [2.5, -2.5] {
                let mut r = vec![0.0; n];
                r[i] = s;
                rows.push(r);
            }
        }
        let c = PointCloud::from_rows(&rows).unwrap();
        assert!((partition_isotropy(&c).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn elongated_cloud_partition_is_small() {
        // Axis variance ratio 9.
        let c = PointCloud::from_rows(&[[3.0, 0.0], [-3.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
            .unwrap();
        let v = partition_isotropy(&c).unwrap();
        // Z(±e1) = 2cosh(3) + 2, Z(±e2) = 2cosh(1) + 2.
        let want = (2.0 * 1.0_f64.cosh() + 2.0) / (2.0 * 3.0_f64.cosh() + 2.0);
        assert!((v - want).abs() < 1e-12);
        assert!(v <= 0.5);
    }

    #[test]
    fn partition_survives_huge_coordinates() {
        let c = PointCloud::from_rows(&[[900.0, 0.0], [-900.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
            .unwrap();
        let v = partition_isotropy(&c).unwrap();
        assert!(v > 0.0 && v < 1e-300);
    }
}
