use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Finite multivariate sequence. Sample `k` is stored as column `k`, so the
/// backing matrix has shape `q x N`.
///
/// A zero-dimensional signal (`q = 0`) is allowed; it shows up as the state
/// trajectory of a static system.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    data: DMatrix<f64>,
}

impl Signal {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.ncols() == 0 {
            return Err(Error::InvalidArgument(
                "signal must contain at least one sample".into(),
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "signal entries must be finite".into(),
            ));
        }
        Ok(Self { data })
    }

    pub fn from_samples(samples: &[DVector<f64>]) -> Result<Self> {
        let first = samples.first().ok_or_else(|| {
            Error::InvalidArgument("signal must contain at least one sample".into())
        })?;
        let q = first.len();
        let mut data = DMatrix::zeros(q, samples.len());
        for (k, s) in samples.iter().enumerate() {
            if s.len() != q {
                return Err(Error::DimensionMismatch(format!(
                    "sample {k} has dimension {} but expected {q}",
                    s.len()
                )));
            }
            data.set_column(k, s);
        }
        Self::new(data)
    }

    pub fn scalar(values: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_row_slice(1, values.len(), values))
    }

    pub fn zeros(dim: usize, len: usize) -> Self {
        assert!(len >= 1, "signal length must be positive");
        Self {
            data: DMatrix::zeros(dim, len),
        }
    }

    /// Per-sample dimension `q`.
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    /// Number of samples `N`.
    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.data.ncols() == 0
    }

    pub fn sample(&self, k: usize) -> DVector<f64> {
        self.data.column(k).into_owned()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// Stacked window `x_{[a,b]} = [x_a; ...; x_b]`.
    pub fn window(&self, a: usize, b: usize) -> DVector<f64> {
        assert!(a <= b && b < self.len(), "window [{a},{b}] out of range");
        let q = self.dim();
        let mut w = DVector::zeros(q * (b - a + 1));
        for (i, k) in (a..=b).enumerate() {
            w.rows_mut(i * q, q).copy_from(&self.data.column(k));
        }
        w
    }

    /// First `len` samples.
    pub fn prefix(&self, len: usize) -> Result<Signal> {
        if len == 0 || len > self.len() {
            return Err(Error::InvalidArgument(format!(
                "prefix length {len} out of range for signal of length {}",
                self.len()
            )));
        }
        Ok(Self {
            data: self.data.columns(0, len).into_owned(),
        })
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
