//! Data-driven trajectory parametrization: the input-state rank condition,
//! the image-equality statement, least-squares trajectory reconstruction, and
//! the counterexample showing that order-1 excitation of the filtered input
//! is not necessary for an excited output.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, DEFAULT_RANK_RTOL};
use crate::lti::LtiSystem;
use crate::pe::hankel;
use crate::signal::Signal;
use crate::structmat::build_m;

/// `[H_1(x_{[0,N-L]}); H_L(u)]`, shape `(n + mL) x (N-L+1)`.
pub fn input_state_stack(x: &Signal, u: &Signal, depth: usize) -> Result<DMatrix<f64>> {
    if x.len() != u.len() {
        return Err(Error::DimensionMismatch(format!(
            "state and input lengths differ: {} vs {}",
            x.len(),
            u.len()
        )));
    }
    let big_n = u.len();
    if big_n < depth {
        return Err(Error::InvalidArgument(format!(
            "need at least L = {depth} samples, got {big_n}"
        )));
    }
    let cols = big_n - depth + 1;
    let xp = x.prefix(cols)?;
    let hx = hankel(&xp, 1)?;
    let hu = hankel(u, depth)?;
    let n = x.dim();
    let ml = u.dim() * depth;
    let mut stack = DMatrix::zeros(n + ml, cols);
    stack.view_mut((0, 0), (n, cols)).copy_from(hx.matrix());
    stack.view_mut((n, 0), (ml, cols)).copy_from(hu.matrix());
    Ok(stack)
}

/// `[H_L(u); H_L(y)]`, shape `(m + p)L x (N-L+1)`.
pub fn input_output_stack(u: &Signal, y: &Signal, depth: usize) -> Result<DMatrix<f64>> {
    if u.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "input and output lengths differ: {} vs {}",
            u.len(),
            y.len()
        )));
    }
    let hu = hankel(u, depth)?;
    let hy = hankel(y, depth)?;
    let (mu, my) = (hu.matrix().nrows(), hy.matrix().nrows());
    let cols = hu.matrix().ncols();
    let mut stack = DMatrix::zeros(mu + my, cols);
    stack.view_mut((0, 0), (mu, cols)).copy_from(hu.matrix());
    stack.view_mut((mu, 0), (my, cols)).copy_from(hy.matrix());
    Ok(stack)
}

/// Tests `rank([H_1(x); H_L(u)]) = mL + n` and reports the smallest required
/// singular value as the quantitative margin.
pub fn rank_condition_check(
    x: &Signal,
    u: &Signal,
    depth: usize,
    rank_rtol: f64,
) -> Result<(bool, f64)> {
    let stack = input_state_stack(x, u, depth)?;
    let target = u.dim() * depth + x.dim();
    let rank = linalg::numerical_rank(&stack, rank_rtol);
    let sv = linalg::singular_values(&stack);
    let sigma = if sv.len() >= target && target > 0 {
        sv[target - 1]
    } else {
        0.0
    };
    Ok((rank == target, sigma))
}

/// Explicit basis of the length-`L` trajectory set: columns of
/// `W = [[I_mL, 0], [T_L, O_L]]` are trajectories generated by unit inputs
/// and unit initial states, since `ybar = T_L ubar + O_L xbar0`.
#[derive(Debug, Clone)]
pub struct TrajectorySpaceBasis {
    pub w: DMatrix<f64>,
    pub depth: usize,
    pub input_dim: usize,
    pub output_dim: usize,
    pub state_dim: usize,
}

/// `O_L = [C; CA; ...; CA^{L-1}]`, shape `pL x n`.
pub fn observability_matrix(sys: &LtiSystem, depth: usize) -> DMatrix<f64> {
    let (n, p) = (sys.n(), sys.p());
    let mut o = DMatrix::zeros(p * depth, n);
    let mut ca = sys.c().clone();
    for i in 0..depth {
        o.view_mut((i * p, 0), (p, n)).copy_from(&ca);
        ca = &ca * sys.a();
    }
    o
}

/// Lower block-triangular Toeplitz of Markov parameters up to depth `L`:
/// block `(i, j)` is `D` for `i = j` and `C A^{i-j-1} B` for `i > j`.
pub fn markov_toeplitz(sys: &LtiSystem, depth: usize) -> DMatrix<f64> {
    let (m, p) = (sys.m(), sys.p());
    // Impulse blocks up to depth L (may exceed the n+1 blocks of Markov order).
    let mut blocks = Vec::with_capacity(depth);
    blocks.push(sys.d().clone());
    let mut ajb = sys.b().clone();
    for _ in 1..depth {
        blocks.push(sys.c() * &ajb);
        ajb = sys.a() * ajb;
    }
    let mut t = DMatrix::zeros(p * depth, m * depth);
    for i in 0..depth {
        for j in 0..=i {
            t.view_mut((i * p, j * m), (p, m)).copy_from(&blocks[i - j]);
        }
    }
    t
}

pub fn trajectory_space_basis(sys: &LtiSystem, depth: usize) -> TrajectorySpaceBasis {
    let (n, m, p) = (sys.n(), sys.m(), sys.p());
    let ml = m * depth;
    let pl = p * depth;
    let mut w = DMatrix::zeros(ml + pl, ml + n);
    w.view_mut((0, 0), (ml, ml))
        .copy_from(&DMatrix::identity(ml, ml));
    w.view_mut((ml, 0), (pl, ml))
        .copy_from(&markov_toeplitz(sys, depth));
    w.view_mut((ml, ml), (pl, n))
        .copy_from(&observability_matrix(sys, depth));
    TrajectorySpaceBasis {
        w,
        depth,
        input_dim: m,
        output_dim: p,
        state_dim: n,
    }
}

/// Column-space equality of the data matrix `[H_L(u); H_L(y)]` and the model
/// trajectory basis, by the rank-triple test
/// `rank A = rank B = rank [A | B]`.
pub fn image_equality_check(
    sys: &LtiSystem,
    x0: &DVector<f64>,
    u: &Signal,
    depth: usize,
    rank_rtol: f64,
) -> Result<bool> {
    let (_, y) = sys.simulate(x0, u)?;
    let h = input_output_stack(u, &y, depth)?;
    let w = trajectory_space_basis(sys, depth).w;
    let rank_h = linalg::numerical_rank(&h, rank_rtol);
    let rank_w = linalg::numerical_rank(&w, rank_rtol);
    let mut joint = DMatrix::zeros(h.nrows(), h.ncols() + w.ncols());
    joint.view_mut((0, 0), (h.nrows(), h.ncols())).copy_from(&h);
    joint
        .view_mut((0, h.ncols()), (w.nrows(), w.ncols()))
        .copy_from(&w);
    let rank_joint = linalg::numerical_rank(&joint, rank_rtol);
    Ok(rank_h == rank_w && rank_w == rank_joint)
}

/// Least-squares coefficients expressing a target length-`L` input-output
/// pair in terms of the data columns; the residual is the distance to the
/// column space.
pub fn parametrize(
    u_data: &Signal,
    y_data: &Signal,
    depth: usize,
    target_u: &DVector<f64>,
    target_y: &DVector<f64>,
) -> Result<(DVector<f64>, f64)> {
    let stack = input_output_stack(u_data, y_data, depth)?;
    let ml = u_data.dim() * depth;
    let pl = y_data.dim() * depth;
    if target_u.len() != ml || target_y.len() != pl {
        return Err(Error::DimensionMismatch(format!(
            "target must be ({ml}, {pl}), got ({}, {})",
            target_u.len(),
            target_y.len()
        )));
    }
    let mut t = DVector::zeros(ml + pl);
    t.rows_mut(0, ml).copy_from(target_u);
    t.rows_mut(ml, pl).copy_from(target_y);
    let svd = stack.clone().svd(true, true);
    let g = svd
        .solve(&t, DEFAULT_RANK_RTOL * linalg::spectral_norm(&stack))
        .map_err(|e| Error::Numerical(e.into()))?;
    let residual = (&stack * &g - &t).norm();
    Ok((g.column(0).into_owned(), residual))
}

/// The two-state shift system used to falsify the necessity claim:
/// `A = [[0,0],[1,0]]`, `B = [1;0]`, `C = I`, `D = 0`.
pub fn counterexample_system() -> LtiSystem {
    LtiSystem::new(
        DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]),
        DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
        DMatrix::identity(2, 2),
        DMatrix::zeros(2, 1),
    )
    .unwrap()
}

/// Default initial-state probe set for the counterexample run.
pub fn default_probe_set() -> Vec<DVector<f64>> {
    vec![
        DVector::from_vec(vec![0.0, 0.0]),
        DVector::from_vec(vec![1.0, 2.0]),
        DVector::from_vec(vec![-3.0, 5.0]),
    ]
}

#[derive(Debug, Clone)]
pub struct ProbeResult {
    pub x0: DVector<f64>,
    pub output_hankel: DMatrix<f64>,
    pub rank: usize,
}

/// Full record of the necessity counterexample run.
#[derive(Debug, Clone)]
pub struct CounterexampleReport {
    pub system: LtiSystem,
    pub d: DVector<f64>,
    pub m: DMatrix<f64>,
    pub n_samples: usize,
    pub probes: Vec<ProbeResult>,
    /// rank(H_1(y)) = 2 for every probed initial state.
    pub all_outputs_excited: bool,
    /// `M u_{[0,2]}`, which equals `[0; 1]`.
    pub mu_first: DVector<f64>,
    /// max norm of `M u_{[k-2,k]}` over `k >= 3` (zero).
    pub mu_tail_max_norm: f64,
    pub mu_gram: DMatrix<f64>,
    pub mu_gram_rank: usize,
    /// rank of `[a^T C; a^T C A]` for the deficiency direction `a = [1;0]`.
    pub reduced_observability_rank: usize,
    /// `(a^T y_0, a^T y_1)` with the initial state chosen to zero the first
    /// entry; the second entry is forced to 1 and cannot be zeroed.
    pub forced_output_pair: (f64, f64),
    /// True when every probe gives an excited output while the filtered input
    /// Gram is rank deficient, i.e. the necessity claim is falsified.
    pub claim_falsified: bool,
    pub open_questions: Vec<String>,
}

/// Runs the necessity counterexample: impulse input into the shift system.
/// Extra probes are checked on top of the default probe set.
pub fn counterexample_run(
    n_samples: usize,
    extra_probes: &[DVector<f64>],
) -> Result<CounterexampleReport> {
    if n_samples < 4 {
        return Err(Error::InvalidArgument(
            "counterexample needs at least 4 samples".into(),
        ));
    }
    let sys = counterexample_system();
    let d = sys.annihilating_polynomial();
    let m_mat = build_m(&sys);
    let mut u_vals = vec![0.0; n_samples];
    u_vals[0] = 1.0;
    let u = Signal::scalar(&u_vals)?;

    let mut probes = Vec::new();
    let mut all_excited = true;
    for x0 in default_probe_set().iter().chain(extra_probes.iter()) {
        let (_, y) = sys.simulate(x0, &u)?;
        let h = hankel(&y, 1)?.matrix().clone();
        let rank = linalg::numerical_rank(&h, DEFAULT_RANK_RTOL);
        all_excited &= rank == 2;
        probes.push(ProbeResult {
            x0: x0.clone(),
            output_hankel: h,
            rank,
        });
    }

    let mu_first = &m_mat * u.window(0, 2);
    let mut mu_tail_max_norm = 0.0f64;
    let mut mu_gram = DMatrix::zeros(2, 2);
    for k in 2..n_samples {
        let v = &m_mat * u.window(k - 2, k);
        if k >= 3 {
            mu_tail_max_norm = mu_tail_max_norm.max(v.norm());
        }
        mu_gram += &v * v.transpose();
    }
    let mu_gram_rank = linalg::numerical_rank(&mu_gram, DEFAULT_RANK_RTOL);

    // Deficiency direction a = [1; 0]: the pair (A, a^T C) loses one state.
    let a_dir = DVector::from_vec(vec![1.0, 0.0]);
    let ac = a_dir.transpose() * sys.c();
    let mut obs = DMatrix::zeros(2, 2);
    obs.view_mut((0, 0), (1, 2)).copy_from(&ac);
    obs.view_mut((1, 0), (1, 2)).copy_from(&(&ac * sys.a()));
    let reduced_observability_rank = linalg::numerical_rank(&obs, DEFAULT_RANK_RTOL);

    // An order-1 realization lets us zero a^T y_0 (pick x0 with first entry
    // zero), but a^T y_1 = 1 regardless.
    let x0_forced = DVector::from_vec(vec![0.0, 4.0]);
    let (_, y_forced) = sys.simulate(&x0_forced, &u)?;
    let forced_output_pair = (y_forced.sample(0)[0], y_forced.sample(1)[0]);

    let claim_falsified = all_excited && mu_gram_rank < 2;

    Ok(CounterexampleReport {
        system: sys,
        d: d.coeffs().clone(),
        m: m_mat,
        n_samples,
        probes,
        all_outputs_excited: all_excited,
        mu_first,
        mu_tail_max_norm,
        mu_gram,
        mu_gram_rank,
        reduced_observability_rank,
        forced_output_pair,
        claim_falsified,
        open_questions: vec![
            "For which system classes is (A, a^T C) observable for every direction a \
             annihilating the filtered input sequence?"
                .into(),
            "When the observable order of (A, a^T C) drops below n, does a lower input \
             excitation order already guarantee an excited output?"
                .into(),
            "What does the counterexample imply for necessity in the order-(n+1) input \
             condition and the order-(L+n) rank condition?"
                .into(),
        ],
    })
}
