//! Structured matrices derived from the annihilating polynomial and the
//! Markov parameters: the filtered-input map `M`, the coefficient matrices
//! `Dbar` and `T`, the block Toeplitz `Gammabar`, the block matrix `Z` for
//! the input-state system, and the relaxed variants used when the leading
//! Markov parameters vanish.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::DEFAULT_RANK_RTOL;
use crate::lti::{AnnihilatingPolynomial, LtiSystem, MarkovParameters};

/// `M = [M_n ... M_1 M_0]` with `M_j = sum_{q=0}^{j} d_{j-q} Gamma_q`,
/// shape `p x m(n+1)`.
pub fn build_m(sys: &LtiSystem) -> DMatrix<f64> {
    let d = sys.annihilating_polynomial();
    let markov = sys.markov_parameters();
    build_m_from_parts(&d, &markov)
}

pub fn build_m_from_parts(
    d: &AnnihilatingPolynomial,
    markov: &MarkovParameters,
) -> DMatrix<f64> {
    let n = d.order();
    let p = markov.blocks[0].nrows();
    let m = markov.blocks[0].ncols();
    let mut out = DMatrix::zeros(p, m * (n + 1));
    for j in 0..=n {
        let mut block = DMatrix::zeros(p, m);
        for q in 0..=j {
            block += markov.blocks[q].scale(d.coeff(j - q));
        }
        // column block order is [M_n ... M_0]
        out.view_mut((0, (n - j) * m), (p, m)).copy_from(&block);
    }
    out
}

/// Alternative construction `M = (d^T (x) I_p) Gammabar`.
pub fn build_m_via_gammabar(sys: &LtiSystem) -> DMatrix<f64> {
    let d = sys.annihilating_polynomial();
    let p = sys.p();
    let dt = DMatrix::from_row_slice(1, d.coeffs().len(), d.coeffs().as_slice());
    let lhs = dt.kronecker(&DMatrix::identity(p, p));
    lhs * build_gammabar(&sys.markov_parameters())
}

/// Alternative construction `M = Gamma (Dbar (x) I_m)`.
pub fn build_m_via_dbar(sys: &LtiSystem) -> DMatrix<f64> {
    let d = sys.annihilating_polynomial();
    let m = sys.m();
    let dbar = build_dbar(&d);
    sys.markov_parameters().stacked() * dbar.kronecker(&DMatrix::identity(m, m))
}

/// Anti-triangular coefficient matrix: entry `(i, j) = d_{n-i-j}` when
/// `i + j <= n`, zero elsewhere. Invertible whenever `d_0 != 0`.
pub fn build_dbar(d: &AnnihilatingPolynomial) -> DMatrix<f64> {
    let n = d.order();
    let mut out = DMatrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=n {
            if i + j <= n {
                // coeffs are stored as [d_n, ..., d_0]; index i+j holds d_{n-i-j}
                out[(i, j)] = d.coeffs()[i + j];
            }
        }
    }
    out
}

/// Block lower-triangular Toeplitz of the Markov parameters:
/// block `(i, j) = Gamma_{i-j}` for `i >= j`, shape `p(n+1) x m(n+1)`.
pub fn build_gammabar(markov: &MarkovParameters) -> DMatrix<f64> {
    build_gammabar_relaxed(markov, 0).expect("r = 0 is always valid")
}

/// Relaxed variant of block size `n + 1 - r`: block `(i, j) = Gamma_{r+i-j}`.
pub fn build_gammabar_relaxed(markov: &MarkovParameters, r: usize) -> Result<DMatrix<f64>> {
    let n = markov.order();
    if r > n {
        return Err(Error::InvalidArgument(format!(
            "relaxation index {r} exceeds system order {n}"
        )));
    }
    let p = markov.blocks[0].nrows();
    let m = markov.blocks[0].ncols();
    let size = n + 1 - r;
    let mut out = DMatrix::zeros(p * size, m * size);
    for i in 0..size {
        for j in 0..=i {
            out.view_mut((i * p, j * m), (p, m))
                .copy_from(&markov.blocks[r + i - j]);
        }
    }
    Ok(out)
}

/// Banded Toeplitz of the polynomial coefficients: row `i` carries
/// `[d_n ... d_0]` starting at column `i`, shape `(L-1) x (L+n-1)`.
/// For `L = 1` this is the empty `0 x n` matrix.
pub fn build_t(d: &AnnihilatingPolynomial, depth: usize) -> DMatrix<f64> {
    assert!(depth >= 1, "depth must be positive");
    let n = d.order();
    let rows = depth - 1;
    let mut out = DMatrix::zeros(rows, depth + n - 1);
    for i in 0..rows {
        for (k, c) in d.coeffs().iter().enumerate() {
            out[(i, i + k)] = *c;
        }
    }
    out
}

/// `Z` for the input-state form together with an optional rank warning.
#[derive(Debug, Clone)]
pub struct ZMatrix {
    pub matrix: DMatrix<f64>,
    /// Set when the generating system is not controllable, in which case the
    /// full-row-rank guarantee does not apply.
    pub rank_warning: Option<String>,
}

/// Block matrix `Z = [M 0; 0 T (x) I_m]` built for the state-output extension
/// of `sys`, shape `(n + m + m(L-1)) x m(L+n)`. For `L = 1` the lower block
/// vanishes and `Z` reduces to the extended-system `M`.
pub fn build_z(sys: &LtiSystem, depth: usize) -> Result<ZMatrix> {
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be positive".into()));
    }
    let (n, m) = (sys.n(), sys.m());
    let d = sys.annihilating_polynomial();
    let m_ext = if n == 0 {
        // Degenerate extension: the state block is empty and the output is u
        // itself, so M collapses to d_0 I_m with d = [1].
        DMatrix::identity(m, m).scale(d.d0())
    } else {
        build_m(&sys.extend_to_state_output()?)
    };
    let t = build_t(&d, depth);
    let t_kron = t.kronecker(&DMatrix::identity(m, m));
    let top_rows = n + m;
    let rows = top_rows + m * (depth - 1);
    let cols = m * (depth + n);
    let mut z = DMatrix::zeros(rows, cols);
    z.view_mut((0, 0), (top_rows, m * (n + 1))).copy_from(&m_ext);
    if depth > 1 {
        z.view_mut((top_rows, m), (m * (depth - 1), m * (depth + n - 1)))
            .copy_from(&t_kron);
    }
    let rank_warning = if sys.is_controllable(DEFAULT_RANK_RTOL) {
        None
    } else {
        Some("system is not controllable; Z is not guaranteed full row rank".into())
    };
    Ok(ZMatrix {
        matrix: z,
        rank_warning,
    })
}

/// Relaxed filtered-input map for a system whose first `r` Markov parameters
/// vanish: returns `(Mbar_r, dbar_r)` with
/// `Mbar_r = (dbar_r^T (x) I_p) Gammabar_r` and `dbar_r = [d_{n-r} ... d_0]`.
pub fn build_relaxed_m(
    sys: &LtiSystem,
    r: usize,
    tol: f64,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let markov = sys.markov_parameters();
    let n = markov.order();
    if r > n {
        return Err(Error::InvalidArgument(format!(
            "relaxation index {r} exceeds system order {n}"
        )));
    }
    for (i, block) in markov.blocks.iter().take(r).enumerate() {
        if block.norm() > tol {
            return Err(Error::InvalidArgument(format!(
                "Markov parameter {i} does not vanish (norm {:e}) but r = {r}",
                block.norm()
            )));
        }
    }
    let d = sys.annihilating_polynomial();
    let p = sys.p();
    // dbar_r is the trailing n+1-r coefficients [d_{n-r}, ..., d_0].
    let dbar = DVector::from_iterator(n + 1 - r, d.coeffs().iter().skip(r).cloned());
    let dt = DMatrix::from_row_slice(1, dbar.len(), dbar.as_slice());
    let m_r = dt.kronecker(&DMatrix::identity(p, p)) * build_gammabar_relaxed(&markov, r)?;
    Ok((m_r, dbar))
}

/// Everything derived from one system at one depth, bundled for export.
#[derive(Debug, Clone)]
pub struct StructuredSet {
    pub d: AnnihilatingPolynomial,
    pub m: DMatrix<f64>,
    pub dbar: DMatrix<f64>,
    pub gammabar: DMatrix<f64>,
    pub t: DMatrix<f64>,
    pub z: ZMatrix,
    pub depth: usize,
}

pub fn structured_set(sys: &LtiSystem, depth: usize) -> Result<StructuredSet> {
    let d = sys.annihilating_polynomial();
    Ok(StructuredSet {
        m: build_m(sys),
        dbar: build_dbar(&d),
        gammabar: build_gammabar(&sys.markov_parameters()),
        t: build_t(&d, depth),
        z: build_z(sys, depth)?,
        d,
        depth,
    })
}
