//! Shared numerical-rank and eigenvalue helpers.
//!
//! All rank decisions in this crate go through [`numerical_rank`] so that the
//! tolerance semantics are uniform: a singular value counts towards the rank
//! iff it exceeds `rtol * sigma_max * max(rows, cols)`.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

/// Default relative tolerance for numerical rank decisions.
pub const DEFAULT_RANK_RTOL: f64 = 1e-10;

/// Default base tolerance for positive-semidefinite ordering checks.
/// The effective tolerance is scaled by `|tr A| + |tr B| + 1`.
pub const DEFAULT_PSD_TOL: f64 = 1e-9;

pub fn singular_values(m: &DMatrix<f64>) -> DVector<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DVector::zeros(0);
    }
    m.singular_values()
}

/// Scale-aware numerical rank.
pub fn numerical_rank(m: &DMatrix<f64>, rtol: f64) -> usize {
    let sv = singular_values(m);
    if sv.is_empty() {
        return 0;
    }
    let smax = sv.max();
    if smax <= 0.0 {
        return 0;
    }
    let thresh = rtol * smax * m.nrows().max(m.ncols()) as f64;
    sv.iter().filter(|&&s| s > thresh).count()
}

pub fn sym_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()).scale(0.5)
}

/// Minimum eigenvalue of the symmetric part of `m`.
/// Empty matrices are vacuously dominated by anything, hence `+inf`.
pub fn min_eig_sym(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    SymmetricEigen::new(sym_part(m)).eigenvalues.min()
}

pub fn max_eig_sym(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::NEG_INFINITY;
    }
    SymmetricEigen::new(sym_part(m)).eigenvalues.max()
}

/// Largest singular value; 0 for empty matrices.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    let sv = singular_values(m);
    if sv.is_empty() {
        0.0
    } else {
        sv.max()
    }
}

pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let scale = 1.0 + m.amax();
    (m - m.transpose()).amax() <= tol * scale
}

/// Largest eigenvalue of `G^{-1/2} S G^{-1/2}` for symmetric `S` and SPD `G`,
/// computed through the Cholesky factor of `G`. Returns `None` when `G` is
/// not positive definite.
pub fn max_gen_eig(s: &DMatrix<f64>, g: &DMatrix<f64>) -> Option<f64> {
    let chol = Cholesky::new(g.clone())?;
    let l = chol.l();
    let x = l.solve_lower_triangular(s)?;
    let y = l.solve_lower_triangular(&x.transpose())?;
    Some(max_eig_sym(&y))
}
