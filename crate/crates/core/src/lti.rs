//! Discrete-time LTI state-space systems and the model-side quantities
//! (Markov parameters, annihilating polynomial, controllability and output
//! reachability) consumed by the excitation bounds.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, DEFAULT_RANK_RTOL};
use crate::signal::Signal;

/// State-space quadruple `x_{k+1} = A x_k + B u_k`, `y_k = C x_k + D u_k`.
///
/// `n = 0` (static systems) is supported; `m` and `p` must be positive.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
}

impl LtiSystem {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let m = b.ncols();
        let p = c.nrows();
        if m == 0 || p == 0 {
            return Err(Error::InvalidArgument(
                "input and output dimensions must be positive".into(),
            ));
        }
        if b.nrows() != n || c.ncols() != n || d.nrows() != p || d.ncols() != m {
            return Err(Error::DimensionMismatch(format!(
                "inconsistent dimensions: A {}x{}, B {}x{}, C {}x{}, D {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols(),
                d.nrows(),
                d.ncols()
            )));
        }
        for mat in [&a, &b, &c, &d] {
            if mat.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(
                    "system matrices must have finite entries".into(),
                ));
            }
        }
        Ok(Self { a, b, c, d })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    /// Roll the recurrence forward over `u`, returning the state and output
    /// trajectories, both of the same length as `u`.
    pub fn simulate(&self, x0: &DVector<f64>, u: &Signal) -> Result<(Signal, Signal)> {
        if u.dim() != self.m() {
            return Err(Error::DimensionMismatch(format!(
                "input dimension {} does not match m = {}",
                u.dim(),
                self.m()
            )));
        }
        if x0.len() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "x0 dimension {} does not match n = {}",
                x0.len(),
                self.n()
            )));
        }
        let len = u.len();
        let mut xs = DMatrix::zeros(self.n(), len);
        let mut ys = DMatrix::zeros(self.p(), len);
        let mut x = x0.clone();
        for k in 0..len {
            xs.set_column(k, &x);
            let uk = u.matrix().column(k);
            let y = &self.c * &x + &self.d * uk;
            ys.set_column(k, &y);
            if k + 1 < len {
                x = &self.a * &x + &self.b * uk;
            }
        }
        Ok((Signal::new(xs)?, Signal::new(ys)?))
    }

    /// The first `n + 1` impulse-response blocks `D, CB, CAB, ..., CA^{n-1}B`.
    pub fn markov_parameters(&self) -> MarkovParameters {
        let mut blocks = Vec::with_capacity(self.n() + 1);
        blocks.push(self.d.clone());
        let mut ajb = self.b.clone();
        for _ in 1..=self.n() {
            blocks.push(&self.c * &ajb);
            ajb = &self.a * ajb;
        }
        MarkovParameters { blocks }
    }

    /// Characteristic polynomial of `A` (Faddeev-LeVerrier), normalized to
    /// unit l2 norm. The leading coefficient is nonzero by construction, so
    /// the Cayley-Hamilton residual vanishes.
    pub fn annihilating_polynomial(&self) -> AnnihilatingPolynomial {
        let n = self.n();
        if n == 0 {
            return AnnihilatingPolynomial {
                coeffs: DVector::from_vec(vec![1.0]),
            };
        }
        // c_k = -tr(A M_{k-1}') / k with M_k' = A M_{k-1}' + c_k I, M_0' = I.
        let mut m = DMatrix::<f64>::identity(n, n);
        let mut cs = Vec::with_capacity(n);
        for k in 1..=n {
            m = &self.a * m;
            let ck = -m.trace() / k as f64;
            cs.push(ck);
            for i in 0..n {
                m[(i, i)] += ck;
            }
        }
        // coeffs stored as [d_n, ..., d_1, d_0] with d_j the coefficient of
        // z^{n-j}; before normalization d_0 = 1 and d_j = c_j.
        let mut coeffs = DVector::zeros(n + 1);
        for (j, c) in cs.iter().enumerate() {
            // `+ 0.0` turns a negative zero from the trace into plain zero so
            // exact integer cases reproduce bit-for-bit.
            coeffs[n - 1 - j] = *c + 0.0;
        }
        coeffs[n] = 1.0;
        let norm = coeffs.norm();
        coeffs /= norm;
        AnnihilatingPolynomial { coeffs }
    }

    /// `[B AB ... A^{n-1}B]`, shape `n x nm`.
    pub fn controllability_matrix(&self) -> DMatrix<f64> {
        let (n, m) = (self.n(), self.m());
        let mut ctrb = DMatrix::zeros(n, n * m);
        let mut ajb = self.b.clone();
        for j in 0..n {
            ctrb.view_mut((0, j * m), (n, m)).copy_from(&ajb);
            ajb = &self.a * ajb;
        }
        ctrb
    }

    /// Kalman rank test. Static systems are vacuously controllable.
    pub fn is_controllable(&self, rtol: f64) -> bool {
        if self.n() == 0 {
            return true;
        }
        linalg::numerical_rank(&self.controllability_matrix(), rtol) == self.n()
    }

    /// Full row rank of the stacked Markov parameters.
    pub fn is_output_reachable(&self, rtol: f64) -> bool {
        linalg::numerical_rank(&self.markov_parameters().stacked(), rtol) == self.p()
    }

    /// Same dynamics with the state-input pair as output: `phi_k = [x_k; u_k]`.
    pub fn extend_to_state_output(&self) -> Result<LtiSystem> {
        let (n, m) = (self.n(), self.m());
        if n == 0 {
            return Err(Error::InvalidArgument(
                "state-output extension requires a nonempty state".into(),
            ));
        }
        let mut c = DMatrix::zeros(n + m, n);
        c.view_mut((0, 0), (n, n))
            .copy_from(&DMatrix::identity(n, n));
        let mut d = DMatrix::zeros(n + m, m);
        d.view_mut((n, 0), (m, m))
            .copy_from(&DMatrix::identity(m, m));
        LtiSystem::new(self.a.clone(), self.b.clone(), c, d)
    }

    /// Index of the first Markov parameter exceeding `tol` in Frobenius norm;
    /// `n + 1` when all of them vanish.
    pub fn relative_degree(&self, tol: f64) -> usize {
        let markov = self.markov_parameters();
        for (r, block) in markov.blocks.iter().enumerate() {
            if block.norm() > tol {
                return r;
            }
        }
        self.n() + 1
    }
}

/// Impulse-response blocks `Gamma_0 = D`, `Gamma_j = C A^{j-1} B`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovParameters {
    pub blocks: Vec<DMatrix<f64>>,
}

impl MarkovParameters {
    /// Horizontal concatenation `[Gamma_0 Gamma_1 ... Gamma_n]`, shape `p x m(n+1)`.
    pub fn stacked(&self) -> DMatrix<f64> {
        let p = self.blocks[0].nrows();
        let m = self.blocks[0].ncols();
        let mut out = DMatrix::zeros(p, m * self.blocks.len());
        for (j, block) in self.blocks.iter().enumerate() {
            out.view_mut((0, j * m), (p, m)).copy_from(block);
        }
        out
    }

    pub fn order(&self) -> usize {
        self.blocks.len() - 1
    }
}

/// Unit-norm coefficient vector `[d_n, ..., d_1, d_0]` of a degree-`n`
/// polynomial with `d(A) = 0` and `d_0 != 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnihilatingPolynomial {
    coeffs: DVector<f64>,
}

impl AnnihilatingPolynomial {
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient vector ordered `[d_n, ..., d_0]`.
    pub fn coeffs(&self) -> &DVector<f64> {
        &self.coeffs
    }

    /// `d_j`, the coefficient of `z^{n-j}`.
    pub fn coeff(&self, j: usize) -> f64 {
        self.coeffs[self.order() - j]
    }

    pub fn d0(&self) -> f64 {
        self.coeffs[self.order()]
    }

    /// Frobenius norm of `sum_j d_j A^{n-j}`.
    pub fn residual_norm(&self, a: &DMatrix<f64>) -> f64 {
        let n = self.order();
        if a.nrows() == 0 {
            return 0.0;
        }
        // Horner evaluation: ((d_0 A + d_1 I) A + d_2 I) A + ...
        let mut acc = DMatrix::identity(a.nrows(), a.nrows()).scale(self.d0());
        for j in 1..=n {
            acc = acc * a + DMatrix::identity(a.nrows(), a.nrows()).scale(self.coeff(j));
        }
        acc.norm()
    }

    pub fn from_coeffs(coeffs: DVector<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidArgument(
                "polynomial needs at least one coefficient".into(),
            ));
        }
        Ok(Self { coeffs })
    }
}

/// Convenience predicate with the default rank tolerance.
pub fn is_controllable(sys: &LtiSystem) -> bool {
    sys.is_controllable(DEFAULT_RANK_RTOL)
}
