//! Hankel matrices and the two excitation notions: the rank test and the
//! quantitative Gram-dominance test with an explicit margin.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, DEFAULT_PSD_TOL};
use crate::signal::Signal;

/// Depth-`L` Hankel matrix of a signal: column `j` is the stacked window
/// `u_{[j, j+L-1]}`, so the shape is `qL x (N-L+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelMatrix {
    data: DMatrix<f64>,
    depth: usize,
    dim: usize,
    source_len: usize,
}

impl HankelMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }

    pub fn gram(&self) -> DMatrix<f64> {
        &self.data * self.data.transpose()
    }
}

pub fn hankel(u: &Signal, depth: usize) -> Result<HankelMatrix> {
    if depth == 0 {
        return Err(Error::InvalidArgument("Hankel depth must be positive".into()));
    }
    let n = u.len();
    if n < depth {
        return Err(Error::InvalidArgument(format!(
            "signal length {n} is shorter than Hankel depth {depth}"
        )));
    }
    let q = u.dim();
    let cols = n - depth + 1;
    let mut data = DMatrix::zeros(q * depth, cols);
    for j in 0..cols {
        data.set_column(j, &u.window(j, j + depth - 1));
    }
    Ok(HankelMatrix {
        data,
        depth,
        dim: q,
        source_len: n,
    })
}

/// Rank-based excitation test: full row rank of the depth-`L` Hankel matrix.
pub fn pe_order_check(u: &Signal, depth: usize, rank_rtol: f64) -> Result<bool> {
    let h = hankel(u, depth)?;
    Ok(linalg::numerical_rank(h.matrix(), rank_rtol) == u.dim() * depth)
}

/// Gram matrix `H_L(u) H_L(u)^T` (product form).
pub fn pe_gram(u: &Signal, depth: usize) -> Result<DMatrix<f64>> {
    Ok(hankel(u, depth)?.gram())
}

/// Gram matrix as the sum of window outer products. Algebraically equal to
/// [`pe_gram`]; kept separate so the two routes can be cross-checked.
pub fn pe_gram_window_sum(u: &Signal, depth: usize) -> Result<DMatrix<f64>> {
    let n = u.len();
    if n < depth {
        return Err(Error::InvalidArgument(format!(
            "signal length {n} is shorter than Hankel depth {depth}"
        )));
    }
    let q = u.dim();
    let mut g = DMatrix::zeros(q * depth, q * depth);
    for k in 0..=(n - depth) {
        let w = u.window(k, k + depth - 1);
        g += &w * w.transpose();
    }
    Ok(g)
}

/// Quantitative excitation certificate: the achieved Gram, the claimed lower
/// bound, and the eigenvalue margin of their difference.
#[derive(Debug, Clone)]
pub struct PeCertificate {
    pub order: usize,
    pub gram: DMatrix<f64>,
    pub bound: Option<DMatrix<f64>>,
    pub margin: f64,
}

impl PeCertificate {
    pub fn satisfied(&self, tol: f64) -> bool {
        self.margin >= -tol
    }
}

/// Checks whether the depth-`L` Gram of `u` dominates `k` in the PSD order.
/// The Gram is computed by both the product and the summation routes and the
/// two are cross-checked before the verdict is formed.
pub fn kpe_check(u: &Signal, depth: usize, k: &DMatrix<f64>, sym_tol: f64) -> Result<PeCertificate> {
    let q = u.dim();
    if k.nrows() != q * depth || k.ncols() != q * depth {
        return Err(Error::DimensionMismatch(format!(
            "K must be {0}x{0}, got {1}x{2}",
            q * depth,
            k.nrows(),
            k.ncols()
        )));
    }
    if !linalg::is_symmetric(k, sym_tol.max(1e-12)) {
        return Err(Error::InvalidArgument("K must be symmetric".into()));
    }
    let gram = pe_gram(u, depth)?;
    let gram_sum = pe_gram_window_sum(u, depth)?;
    let diff = (&gram - &gram_sum).norm();
    if diff > 1e-12 * (1.0 + gram.norm()) {
        return Err(Error::Numerical(format!(
            "Gram cross-check failed: product and summation forms differ by {diff:e}"
        )));
    }
    let margin = linalg::min_eig_sym(&(&gram - k));
    Ok(PeCertificate {
        order: depth,
        gram,
        bound: Some(k.clone()),
        margin,
    })
}

/// PSD dominance `A >= B` through the minimum eigenvalue of the symmetrized
/// difference. The base tolerance is scaled by `|tr A| + |tr B| + 1`.
pub fn psd_dominates(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> Result<(bool, f64)> {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() || a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "PSD comparison needs square matrices of equal size, got {}x{} vs {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let margin = linalg::min_eig_sym(&(a - b));
    let tol_eff = tol * (a.trace().abs() + b.trace().abs() + 1.0);
    Ok((margin >= -tol_eff, margin))
}

/// Effective PSD tolerance used by [`psd_dominates`] for a given pair.
pub fn psd_tol_for(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> f64 {
    tol * (a.trace().abs() + b.trace().abs() + 1.0)
}

/// Default PSD base tolerance re-exported for callers.
pub const PSD_TOL: f64 = DEFAULT_PSD_TOL;
