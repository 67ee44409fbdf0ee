//! Machine verification of the quantitative excitation bounds: the filtered
//! input-output identity, the order-1 output bound, its output-reachable
//! corollary and the two directional relaxations, the relaxed-order
//! corollary, the input-state bound with the explicit `Z`-based right-hand
//! side, the robustified variant for an approximate `Z`, and input gain
//! design.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, DEFAULT_PSD_TOL, DEFAULT_RANK_RTOL};
use crate::lti::LtiSystem;
use crate::pe::{self, hankel, pe_gram};
use crate::signal::Signal;
use crate::structmat::{
    build_dbar, build_gammabar, build_m, build_relaxed_m, build_t, build_z,
};

/// Outcome of a single bound verification. `Inapplicable` flags unmet
/// hypotheses, keeping them distinct from actual bound violations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails,
    Inapplicable,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Inapplicable => "inapplicable",
        }
    }
}

/// One intermediate PSD step replayed from a derivation chain.
#[derive(Debug, Clone)]
pub struct ChainStep {
    pub label: String,
    pub margin: f64,
}

/// Achieved Gram, claimed lower bound, eigenvalue margin, and verdict.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub name: String,
    pub verdict: Verdict,
    /// `lambda_min(lhs - rhs)`.
    pub margin: f64,
    /// Effective absolute tolerance used for the verdict.
    pub tol: f64,
    pub lhs: DMatrix<f64>,
    pub rhs: DMatrix<f64>,
    pub chain: Vec<ChainStep>,
    /// Largest identity residual replayed alongside the bound, when any.
    pub residual: Option<f64>,
    pub notes: Vec<String>,
}

impl BoundReport {
    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }

    fn inapplicable(name: &str, note: String, size: usize) -> Self {
        BoundReport {
            name: name.into(),
            verdict: Verdict::Inapplicable,
            margin: f64::NAN,
            tol: 0.0,
            lhs: DMatrix::zeros(size, size),
            rhs: DMatrix::zeros(size, size),
            chain: Vec::new(),
            residual: None,
            notes: vec![note],
        }
    }
}

/// The filtered input sequence `{M u_{[k-n,k]}}_{k=n}^{N-1}`.
pub fn mu_signal(sys: &LtiSystem, u: &Signal) -> Result<Signal> {
    let n = sys.n();
    if u.len() < n + 1 {
        return Err(Error::InvalidArgument(format!(
            "need at least n + 1 = {} samples, got {}",
            n + 1,
            u.len()
        )));
    }
    let m_mat = build_m(sys);
    let samples: Vec<DVector<f64>> = (n..u.len())
        .map(|k| &m_mat * u.window(k - n, k))
        .collect();
    Signal::from_samples(&samples)
}

/// Max residual of `M u_{[k-n,k]} = [y_{k-n} ... y_k] d` along a simulated
/// trajectory.
pub fn verify_io_representation(sys: &LtiSystem, x0: &DVector<f64>, u: &Signal) -> Result<f64> {
    let n = sys.n();
    if u.len() < n + 1 {
        return Err(Error::InvalidArgument(format!(
            "trajectory too short: need at least {} samples, got {}",
            n + 1,
            u.len()
        )));
    }
    let (_, y) = sys.simulate(x0, u)?;
    let m_mat = build_m(sys);
    let d = sys.annihilating_polynomial();
    let mut max_res = 0.0f64;
    for k in n..u.len() {
        let lhs = &m_mat * u.window(k - n, k);
        let yk = y.matrix().columns(k - n, n + 1);
        let rhs = yk * d.coeffs();
        max_res = max_res.max((lhs - rhs).norm());
    }
    Ok(max_res)
}

fn default_ku(gram: &DMatrix<f64>) -> DMatrix<f64> {
    gram.scale(0.9)
}

fn check_ku(ku: &DMatrix<f64>, size: usize, name: &str) -> Result<()> {
    if ku.nrows() != size || ku.ncols() != size {
        return Err(Error::DimensionMismatch(format!(
            "{name}: K_u must be {size}x{size}, got {}x{}",
            ku.nrows(),
            ku.ncols()
        )));
    }
    if !linalg::is_symmetric(ku, 1e-10) {
        return Err(Error::InvalidArgument(format!("{name}: K_u must be symmetric")));
    }
    Ok(())
}

/// Output-Gram bound for order 1: if the filtered input is `K_u`-excited of
/// order 1, the output Gram dominates `K_u / (n+1)` for every initial state.
/// The derivation chain is replayed step by step.
pub fn theorem1_verify(
    sys: &LtiSystem,
    x0: &DVector<f64>,
    u: &Signal,
    ku: Option<&DMatrix<f64>>,
    psd_tol: f64,
) -> Result<BoundReport> {
    let name = "theorem1";
    let (n, p) = (sys.n(), sys.p());
    let (_, y) = sys.simulate(x0, u)?;
    let mu = mu_signal(sys, u)?;
    let mu_gram = pe_gram(&mu, 1)?;
    let ku = match ku {
        Some(k) => {
            check_ku(k, p, name)?;
            k.clone()
        }
        None => default_ku(&mu_gram),
    };

    let pe1 = pe::pe_order_check(&mu, 1, DEFAULT_RANK_RTOL)?;
    let (ku_ok, ku_margin) = pe::psd_dominates(&mu_gram, &ku, psd_tol)?;
    if !pe1 || !ku_ok {
        let mut rep = BoundReport::inapplicable(
            name,
            "filtered input sequence is not K_u-excited of order 1; bound is vacuous".into(),
            p,
        );
        rep.chain.push(ChainStep {
            label: "ku_below_filtered_gram".into(),
            margin: ku_margin,
        });
        return Ok(rep);
    }

    let lhs = pe_gram(&y, 1)?;
    let rhs = ku.scale(1.0 / (n + 1) as f64);
    let (ok, margin) = pe::psd_dominates(&lhs, &rhs, psd_tol)?;

    // Replay the derivation chain.
    let d = sys.annihilating_polynomial();
    let mut s2 = DMatrix::zeros(p, p);
    let mut s3 = DMatrix::zeros(p, p);
    for k in n..u.len() {
        let yk = y.matrix().columns(k - n, n + 1);
        let v = yk * d.coeffs();
        s2 += &v * v.transpose();
        for j in 0..=n {
            let col = y.matrix().column(k - j);
            s3 += col * col.transpose();
        }
    }
    let identity_res = (&mu_gram - &s2).norm() / (1.0 + mu_gram.norm());
    let s4 = lhs.scale((n + 1) as f64);
    let (_, m23) = pe::psd_dominates(&s3, &s2, psd_tol)?;
    let (_, m34) = pe::psd_dominates(&s4, &s3, psd_tol)?;

    Ok(BoundReport {
        name: name.into(),
        verdict: if ok { Verdict::Holds } else { Verdict::Fails },
        margin,
        tol: pe::psd_tol_for(&lhs, &rhs, psd_tol),
        lhs,
        rhs,
        chain: vec![
            ChainStep {
                label: "ku_below_filtered_gram".into(),
                margin: ku_margin,
            },
            ChainStep {
                label: "filtered_gram_below_window_sum".into(),
                margin: m23,
            },
            ChainStep {
                label: "window_sum_below_scaled_output_gram".into(),
                margin: m34,
            },
        ],
        residual: Some(identity_res),
        notes: Vec::new(),
    })
}

/// Output-Gram bound driven by the raw input: for output-reachable systems
/// and inputs `K_u`-excited of order `n+1`, the output Gram dominates
/// `M K_u M^T / (n+1)`.
pub fn corollary1_verify(
    sys: &LtiSystem,
    x0: &DVector<f64>,
    u: &Signal,
    ku: Option<&DMatrix<f64>>,
    psd_tol: f64,
) -> Result<BoundReport> {
    let name = "corollary1";
    let (n, m, p) = (sys.n(), sys.m(), sys.p());
    if !sys.is_output_reachable(DEFAULT_RANK_RTOL) {
        return Ok(BoundReport::inapplicable(
            name,
            "system is not output reachable".into(),
            p,
        ));
    }
    if u.len() < n + 1 {
        return Err(Error::InvalidArgument(format!(
            "need at least n + 1 = {} samples, got {}",
            n + 1,
            u.len()
        )));
    }
    let gram_u = pe_gram(u, n + 1)?;
    let ku = match ku {
        Some(k) => {
            check_ku(k, m * (n + 1), name)?;
            k.clone()
        }
        None => default_ku(&gram_u),
    };
    let (ku_ok, ku_margin) = pe::psd_dominates(&gram_u, &ku, psd_tol)?;
    if !ku_ok {
        let mut rep = BoundReport::inapplicable(
            name,
            "input is not K_u-excited of the required order".into(),
            p,
        );
        rep.chain.push(ChainStep {
            label: "ku_below_input_gram".into(),
            margin: ku_margin,
        });
        return Ok(rep);
    }
    let (_, y) = sys.simulate(x0, u)?;
    let m_mat = build_m(sys);
    let lhs = pe_gram(&y, 1)?;
    let rhs = (&m_mat * &ku * m_mat.transpose()).scale(1.0 / (n + 1) as f64);
    let (ok, margin) = pe::psd_dominates(&lhs, &rhs, psd_tol)?;
    Ok(BoundReport {
        name: name.into(),
        verdict: if ok { Verdict::Holds } else { Verdict::Fails },
        margin,
        tol: pe::psd_tol_for(&lhs, &rhs, psd_tol),
        lhs,
        rhs,
        chain: vec![ChainStep {
            label: "ku_below_input_gram".into(),
            margin: ku_margin,
        }],
        residual: None,
        notes: Vec::new(),
    })
}

/// Directional lower bound through the Markov parameters:
/// `lambda_min(K_u)/(n+1) * sigma_min(Dbar)^2 * Gamma Gamma^T`.
pub fn directional_bound_output(sys: &LtiSystem, ku: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = sys.n();
    check_ku(ku, sys.m() * (n + 1), "directional_bound_output")?;
    let d = sys.annihilating_polynomial();
    let dbar = build_dbar(&d);
    let smin = linalg::singular_values(&dbar).min();
    let gamma = sys.markov_parameters().stacked();
    let lam = linalg::min_eig_sym(ku);
    Ok((&gamma * gamma.transpose()).scale(lam / (n + 1) as f64 * smin * smin))
}

/// Isotropic lower bound through the input directions:
/// `lambda_min(Gammabar K_u Gammabar^T) / (n+1) * I_p`. The minimum
/// eigenvalue is evaluated as a squared singular value through the Cholesky
/// factor of `K_u` whenever `K_u` is positive definite, which keeps it exact
/// when the Toeplitz factor is row-rank deficient.
pub fn directional_bound_input(sys: &LtiSystem, ku: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, p) = (sys.n(), sys.p());
    check_ku(ku, sys.m() * (n + 1), "directional_bound_input")?;
    let gammabar = build_gammabar(&sys.markov_parameters());
    let lam = match nalgebra::Cholesky::new(ku.clone()) {
        Some(chol) => {
            let b = &gammabar * chol.l();
            if b.nrows() > b.ncols() {
                0.0
            } else {
                let smin = linalg::singular_values(&b).min();
                smin * smin
            }
        }
        None => linalg::min_eig_sym(&(&gammabar * ku * gammabar.transpose())),
    };
    Ok(DMatrix::identity(p, p).scale(lam / (n + 1) as f64))
}

/// Relaxed-order statement: when the first `r` Markov parameters vanish, an
/// input excited of order `n+1-r` on its first `N-r` samples already yields
/// an order-1 excited output. The window identity
/// `M u_{[k-n,k]} = Mbar_r u_{[k-n,k-r]}` is replayed along the trajectory.
pub fn corollary2_verify(
    sys: &LtiSystem,
    x0: &DVector<f64>,
    u: &Signal,
    psd_tol: f64,
) -> Result<BoundReport> {
    let name = "corollary2";
    let (n, p) = (sys.n(), sys.p());
    let markov_tol = 1e-9 * (1.0 + sys.markov_parameters().stacked().amax());
    let r = sys.relative_degree(markov_tol);
    if !sys.is_output_reachable(DEFAULT_RANK_RTOL) {
        return Ok(BoundReport::inapplicable(
            name,
            "system is not output reachable".into(),
            p,
        ));
    }
    if r > n {
        return Ok(BoundReport::inapplicable(
            name,
            "all Markov parameters vanish; no relaxation applies".into(),
            p,
        ));
    }
    if u.len() < n + 1 {
        return Err(Error::InvalidArgument(format!(
            "need at least n + 1 = {} samples, got {}",
            n + 1,
            u.len()
        )));
    }
    let u_prefix = u.prefix(u.len() - r)?;
    if !pe::pe_order_check(&u_prefix, n + 1 - r, DEFAULT_RANK_RTOL)? {
        return Ok(BoundReport::inapplicable(
            name,
            format!("input prefix is not excited of order {}", n + 1 - r),
            p,
        ));
    }
    let (_, y) = sys.simulate(x0, u)?;
    let lhs = pe_gram(&y, 1)?;
    let output_pe = pe::pe_order_check(&y, 1, DEFAULT_RANK_RTOL)?;
    let margin = linalg::min_eig_sym(&lhs);

    // Replay the relaxed window identity.
    let m_mat = build_m(sys);
    let (m_r, _) = build_relaxed_m(sys, r, markov_tol)?;
    let mut max_res = 0.0f64;
    for k in n..u.len() {
        let full = &m_mat * u.window(k - n, k);
        let relaxed = &m_r * u.window(k - n, k - r);
        max_res = max_res.max((full - relaxed).norm());
    }

    Ok(BoundReport {
        name: name.into(),
        verdict: if output_pe { Verdict::Holds } else { Verdict::Fails },
        margin,
        tol: psd_tol * (lhs.trace().abs() + 1.0),
        rhs: DMatrix::zeros(p, p),
        lhs,
        chain: Vec::new(),
        residual: Some(max_res),
        notes: vec![format!("relative degree r = {r}")],
    })
}

/// Gram of the stacked input-state data matrix `[H_1(x_{[0,N-L]}); H_L(u)]`.
pub fn input_state_gram(x: &Signal, u: &Signal, depth: usize) -> Result<DMatrix<f64>> {
    let stack = crate::fundamental::input_state_stack(x, u, depth)?;
    Ok(&stack * stack.transpose())
}

/// Input-state excitation bound: for controllable systems and inputs
/// `K_u`-excited of order `L+n`, the stacked data Gram dominates
/// `Z K_u Z^T / (n+1)`. The two window identities behind the derivation are
/// replayed on every window.
pub fn theorem3_verify(
    sys: &LtiSystem,
    x0: &DVector<f64>,
    u: &Signal,
    depth: usize,
    ku: Option<&DMatrix<f64>>,
    psd_tol: f64,
) -> Result<BoundReport> {
    let name = "theorem3";
    let (n, m) = (sys.n(), sys.m());
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be positive".into()));
    }
    let big_n = u.len();
    if big_n < depth + n {
        return Err(Error::InvalidArgument(format!(
            "need at least L + n = {} samples, got {big_n}",
            depth + n
        )));
    }
    let gram_u = pe_gram(u, depth + n)?;
    let ku = match ku {
        Some(k) => {
            check_ku(k, m * (depth + n), name)?;
            k.clone()
        }
        None => default_ku(&gram_u),
    };
    if !sys.is_controllable(DEFAULT_RANK_RTOL) {
        return Ok(BoundReport::inapplicable(
            name,
            "system is not controllable".into(),
            n + m * depth,
        ));
    }
    let (ku_ok, ku_margin) = pe::psd_dominates(&gram_u, &ku, psd_tol)?;
    if !ku_ok {
        let mut rep = BoundReport::inapplicable(
            name,
            format!("input is not K_u-excited of order {}", depth + n),
            n + m * depth,
        );
        rep.chain.push(ChainStep {
            label: "ku_below_input_gram".into(),
            margin: ku_margin,
        });
        return Ok(rep);
    }
    let (x, _) = sys.simulate(x0, u)?;
    let lhs = input_state_gram(&x, u, depth)?;
    let z = build_z(sys, depth)?;
    let rhs = (&z.matrix * &ku * z.matrix.transpose()).scale(1.0 / (n + 1) as f64);
    let (ok, margin) = pe::psd_dominates(&lhs, &rhs, psd_tol)?;

    // Replay the window identities behind the bound.
    let d = sys.annihilating_polynomial();
    let t_kron = build_t(&d, depth).kronecker(&DMatrix::identity(m, m));
    let mut max_res = 0.0f64;
    for k in n..=(big_n - depth) {
        // U_k: row block i in [1, L-1] holds [u_{k-n+i} ... u_{k+i}].
        let mut stacked = DMatrix::zeros(n + m + m * (depth - 1), n + 1);
        for j in 0..=n {
            stacked
                .view_mut((0, j), (n, 1))
                .copy_from(&x.matrix().column(k - n + j));
            stacked
                .view_mut((n, j), (m, 1))
                .copy_from(&u.matrix().column(k - n + j));
            for i in 1..depth {
                stacked
                    .view_mut((n + m + (i - 1) * m, j), (m, 1))
                    .copy_from(&u.matrix().column(k - n + j + i));
            }
        }
        let lhs_vec = &stacked * d.coeffs();
        let rhs_vec = &z.matrix * u.window(k - n, k + depth - 1);
        max_res = max_res.max((&lhs_vec - &rhs_vec).norm());
        if depth > 1 {
            let uk_part = stacked.rows(n + m, m * (depth - 1)).into_owned();
            let ukd = &uk_part * d.coeffs();
            let toep = &t_kron * u.window(k - n + 1, k + depth - 1);
            max_res = max_res.max((ukd - toep).norm());
        }
    }

    let mut notes = Vec::new();
    if let Some(w) = z.rank_warning {
        notes.push(w);
    }
    Ok(BoundReport {
        name: name.into(),
        verdict: if ok { Verdict::Holds } else { Verdict::Fails },
        margin,
        tol: pe::psd_tol_for(&lhs, &rhs, psd_tol),
        lhs,
        rhs,
        chain: vec![ChainStep {
            label: "ku_below_input_gram".into(),
            margin: ku_margin,
        }],
        residual: Some(max_res),
        notes,
    })
}

/// Robust variant of the input-state bound for an approximation `Zhat` with
/// `||Zhat - Z||_2 < eps`: the data Gram dominates
/// `Zhat K_u Zhat^T / (2(n+1)) - eps^2 sigma_max(K_u)/(n+1) I`.
#[allow(clippy::too_many_arguments)]
pub fn robust_bound_verify(
    sys: &LtiSystem,
    x0: &DVector<f64>,
    u: &Signal,
    depth: usize,
    ku: Option<&DMatrix<f64>>,
    zhat: &DMatrix<f64>,
    eps: f64,
    psd_tol: f64,
) -> Result<BoundReport> {
    let name = "robust_z";
    if eps <= 0.0 {
        return Err(Error::InvalidArgument("eps must be positive".into()));
    }
    let (n, m) = (sys.n(), sys.m());
    let z = build_z(sys, depth)?;
    if zhat.shape() != z.matrix.shape() {
        return Err(Error::DimensionMismatch(format!(
            "Zhat must be {}x{}, got {}x{}",
            z.matrix.nrows(),
            z.matrix.ncols(),
            zhat.nrows(),
            zhat.ncols()
        )));
    }
    let err = linalg::spectral_norm(&(zhat - &z.matrix));
    if err >= eps {
        return Ok(BoundReport::inapplicable(
            name,
            format!("||Zhat - Z||_2 = {err:e} is not below eps = {eps:e}"),
            n + m * depth,
        ));
    }
    let gram_u = pe_gram(u, depth + n)?;
    let ku = match ku {
        Some(k) => {
            check_ku(k, m * (depth + n), name)?;
            k.clone()
        }
        None => default_ku(&gram_u),
    };
    let (ku_ok, _) = pe::psd_dominates(&gram_u, &ku, psd_tol)?;
    if !ku_ok {
        return Ok(BoundReport::inapplicable(
            name,
            format!("input is not K_u-excited of order {}", depth + n),
            n + m * depth,
        ));
    }
    let (x, _) = sys.simulate(x0, u)?;
    let lhs = input_state_gram(&x, u, depth)?;
    let smax = linalg::max_eig_sym(&ku);
    let rhs = (zhat * &ku * zhat.transpose()).scale(0.5 / (n + 1) as f64)
        - DMatrix::identity(lhs.nrows(), lhs.nrows()).scale(eps * eps / (n + 1) as f64 * smax);
    let (ok, margin) = pe::psd_dominates(&lhs, &rhs, psd_tol)?;
    let mut notes = vec![format!("||Zhat - Z||_2 = {err:e}, eps = {eps:e}")];
    if linalg::max_eig_sym(&rhs) <= 0.0 {
        notes.push("right-hand side is negative semidefinite: weak certificate".into());
    }
    Ok(BoundReport {
        name: name.into(),
        verdict: if ok { Verdict::Holds } else { Verdict::Fails },
        margin,
        tol: pe::psd_tol_for(&lhs, &rhs, psd_tol),
        lhs,
        rhs,
        chain: Vec::new(),
        residual: None,
        notes,
    })
}

/// Smallest scalar `k_u` such that any input that is `(k_u I)`-excited of
/// order `n+1` guarantees an output Gram dominating `k_y_target`:
/// `k_u = (n+1) lambda_max((M M^T)^{-1/2} K_y (M M^T)^{-1/2})`.
pub fn design_input_gain(sys: &LtiSystem, ky_target: &DMatrix<f64>) -> Result<f64> {
    let p = sys.p();
    if ky_target.nrows() != p || ky_target.ncols() != p {
        return Err(Error::DimensionMismatch(format!(
            "K_y target must be {p}x{p}, got {}x{}",
            ky_target.nrows(),
            ky_target.ncols()
        )));
    }
    let m_mat = build_m(sys);
    if linalg::numerical_rank(&m_mat, DEFAULT_RANK_RTOL) < p {
        return Err(Error::InvalidArgument(
            "M is row-rank deficient (system not output reachable); no finite gain exists".into(),
        ));
    }
    let g = &m_mat * m_mat.transpose();
    let lam = linalg::max_gen_eig(ky_target, &g).ok_or_else(|| {
        Error::Numerical("M M^T is numerically singular despite the rank check".into())
    })?;
    Ok((sys.n() + 1) as f64 * lam.max(0.0))
}

/// Default PSD base tolerance used by the verifiers when the caller has no
/// preference.
pub const BOUND_PSD_TOL: f64 = DEFAULT_PSD_TOL;

/// Order-1 Hankel of a signal, exposed for report assembly.
pub fn order1_hankel(sig: &Signal) -> Result<DMatrix<f64>> {
    Ok(hankel(sig, 1)?.matrix().clone())
}
