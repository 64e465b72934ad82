//! Brute-force IsoScore used to cross-check [`crate::isoscore`].
//!
//! Shares nothing with the main path beyond [`PointCloud`]: the covariance is
//! accumulated entry by entry with compensated (Neumaier) summation, the
//! eigenvalues come from a cyclic Jacobi sweep written here, and the score
//! formulas are evaluated term by term. Do not refactor this to call into
//! `geometry` or `isoscore`.

use crate::cloud::PointCloud;
use crate::error::{IsoError, Result};

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.carry
    }
}

fn compensated<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = CompensatedSum::default();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Sample covariance as a dense row-major n×n buffer.
fn covariance(rows: &[Vec<f64>], n: usize) -> Vec<f64> {
    let count = rows.len();
    let means: Vec<f64> = (0..n)
        .map(|j| compensated(rows.iter().map(|r| r[j])) / count as f64)
        .collect();
    let centered: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().zip(&means).map(|(x, m)| x - m).collect())
        .collect();
    let mut cov = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let s = compensated(centered.iter().map(|r| r[i] * r[j])) / (count as f64 - 1.0);
            cov[i * n + j] = s;
            cov[j * n + i] = s;
        }
    }
    cov
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
fn jacobi_eigenvalues(mut a: Vec<f64>, n: usize) -> Vec<f64> {
    let frob: f64 = a.iter().map(|x| x * x).sum::<f64>();
    if frob == 0.0 {
        return vec![0.0; n];
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        if off <= 1e-30 * frob {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 || apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

/// Recomputes the IsoScore of `cloud` independently of the main pipeline.
pub fn oracle_isoscore(cloud: &PointCloud) -> Result<f64> {
    let n = cloud.dim();
    if n < 2 {
        return Err(IsoError::InvalidDimension(format!(
            "IsoScore needs dimension ≥ 2, got {n}"
        )));
    }
    if cloud.len() < 2 {
        return Err(IsoError::DegenerateCloud(format!(
            "IsoScore needs at least 2 observations, got {}",
            cloud.len()
        )));
    }
    let rows: Vec<Vec<f64>> = cloud.rows().collect();
    let cov = covariance(&rows, n);

    let scale = cloud.max_abs();
    let trace = compensated((0..n).map(|i| cov[i * n + i]));
    if trace <= (64.0 * f64::EPSILON * scale).powi(2) {
        return Err(IsoError::DegenerateCloud(
            "total variance is zero (all rows identical)".into(),
        ));
    }

    let eigen: Vec<f64> = jacobi_eigenvalues(cov, n)
        .into_iter()
        .map(|v| v.max(0.0))
        .collect();

    let nf = n as f64;
    let norm = compensated(eigen.iter().map(|v| v * v)).sqrt();
    let dist2 = compensated(eigen.iter().map(|v| {
        let d = nf.sqrt() * v / norm - 1.0;
        d * d
    }));
    let delta2 = dist2 / (2.0 * (nf - nf.sqrt()));
    let used = nf - delta2 * (nf - nf.sqrt());
    let phi = (used * used / (nf * nf)).clamp(1.0 / nf, 1.0);
    Ok(((nf * phi - 1.0) / (nf - 1.0)).clamp(0.0, 1.0))
}
