use nalgebra::DMatrix;

use crate::error::{IsoError, Result};

/// An N×n matrix of observations: rows are vectors, columns are ambient
/// dimensions. Entries are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    data: DMatrix<f64>,
}

impl PointCloud {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(IsoError::InvalidCloud(format!(
                "empty cloud ({}×{})",
                data.nrows(),
                data.ncols()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            let (col, row) = (pos / data.nrows(), pos % data.nrows());
            return Err(IsoError::InvalidCloud(format!(
                "non-finite entry at row {row}, column {col}"
            )));
        }
        Ok(Self { data })
    }

    /// Builds a cloud from row vectors, which must all share one length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        if let Some(i) = rows.iter().position(|r| r.as_ref().len() != n) {
            return Err(IsoError::InvalidDimension(format!(
                "row {i} has length {}, expected {n}",
                rows[i].as_ref().len()
            )));
        }
        let data = DMatrix::from_fn(rows.len(), n, |i, j| rows[i].as_ref()[j]);
        Self::new(data)
    }

    /// Row-major flat buffer of `count` rows with `dim` columns.
    pub fn from_row_major(count: usize, dim: usize, values: &[f64]) -> Result<Self> {
        if values.len() != count * dim {
            return Err(IsoError::InvalidDimension(format!(
                "{} values cannot fill a {count}×{dim} matrix",
                values.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(count, dim, values))
    }

    pub(crate) fn from_matrix_unchecked(data: DMatrix<f64>) -> Self {
        Self { data }
    }

    /// Observation count N.
    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    /// Ambient dimension n.
    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.data.row(i).iter().copied().collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(|i| self.row(i))
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len() * self.dim());
        for i in 0..self.len() {
            out.extend(self.data.row(i).iter());
        }
        out
    }

    /// Largest absolute entry; used as the scale for degeneracy checks.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Stacks clouds of equal dimension vertically, in order.
    pub fn concat(clouds: &[&PointCloud]) -> Result<Self> {
        let Some(first) = clouds.first() else {
            return Err(IsoError::InvalidCloud("nothing to concatenate".into()));
        };
        let n = first.dim();
        if let Some(c) = clouds.iter().find(|c| c.dim() != n) {
            return Err(IsoError::InvalidDimension(format!(
                "cannot stack dimension {} onto dimension {n}",
                c.dim()
            )));
        }
        let total: usize = clouds.iter().map(|c| c.len()).sum();
        let mut data = DMatrix::zeros(total, n);
        let mut at = 0;
        for c in clouds {
            data.rows_mut(at, c.len()).copy_from(c.matrix());
            at += c.len();
        }
        Ok(Self { data })
    }

    /// Selects rows by index, in the order given.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        Self {
            data: self.data.select_rows(indices.iter()),
        }
    }

    /// Returns `X·Q` for a square `Q` of matching size.
    pub fn transform(&self, q: &DMatrix<f64>) -> Result<Self> {
        if q.nrows() != self.dim() || q.ncols() != self.dim() {
            return Err(IsoError::InvalidDimension(format!(
                "transform is {}×{}, cloud dimension is {}",
                q.nrows(),
                q.ncols(),
                self.dim()
            )));
        }
        Self::new(&self.data * q)
    }

    /// Adds `offset` to every row.
    pub fn translate(&self, offset: &[f64]) -> Result<Self> {
        if offset.len() != self.dim() {
            return Err(IsoError::InvalidDimension(format!(
                "offset has length {}, cloud dimension is {}",
                offset.len(),
                self.dim()
            )));
        }
        let mut data = self.data.clone();
        for (j, mut col) in data.column_iter_mut().enumerate() {
            col.add_scalar_mut(offset[j]);
        }
        Self::new(data)
    }

    pub fn scale(&self, factor: f64) -> Result<Self> {
        Self::new(&self.data * factor)
    }

    /// Per-column arithmetic mean.
    pub fn column_means(&self) -> Vec<f64> {
        let n_obs = self.len() as f64;
        self.data
            .column_iter()
            .map(|c| c.iter().sum::<f64>() / n_obs)
            .collect()
    }
}
