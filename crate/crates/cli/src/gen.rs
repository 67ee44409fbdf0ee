//! Seeded random instance generation: well-conditioned systems by rejection
//! sampling and Gaussian excitation inputs scaled to a requested floor.

use anyhow::{bail, Context, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use hankel_pe::linalg::{self, DEFAULT_RANK_RTOL};
use hankel_pe::pe::{self, PeCertificate};
use hankel_pe::{LtiSystem, Signal};

/// Predicates a generated system must satisfy, re-checked after sampling.
#[derive(Debug, Clone, Copy)]
pub struct RandomModelSpec {
    /// A is rescaled so its spectral radius stays at or below this cap.
    pub spectral_radius_cap: f64,
    /// Lower bound on sigma_min of the controllability matrix.
    pub controllability_floor: f64,
    /// Reject systems whose stacked Markov parameters lose row rank.
    pub require_output_reachable: bool,
}

impl Default for RandomModelSpec {
    fn default() -> Self {
        RandomModelSpec {
            spectral_radius_cap: 0.95,
            controllability_floor: 1e-3,
            require_output_reachable: true,
        }
    }
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vector(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.sample(StandardNormal))
}

/// Draws a random system with the requested dimensions, resampling until the
/// spec's predicates hold. Gives up after 100 attempts so an infeasible spec
/// (say, an infinite floor) fails loudly instead of spinning.
pub fn generate_system(
    spec: &RandomModelSpec,
    n: usize,
    m: usize,
    p: usize,
    rng: &mut ChaCha8Rng,
) -> Result<LtiSystem> {
    for _ in 0..100 {
        let mut a = gaussian_matrix(rng, n, n);
        let rho = linalg::spectral_radius(&a);
        if rho > spec.spectral_radius_cap {
            a.scale_mut(spec.spectral_radius_cap / rho);
        }
        let b = gaussian_matrix(rng, n, m);
        let c = gaussian_matrix(rng, p, n);
        let d = gaussian_matrix(rng, p, m);
        let sys = LtiSystem::new(a, b, c, d).context("generated system was inconsistent")?;
        if n > 0 {
            let ctrb = sys.controllability_matrix();
            let sv = ctrb.singular_values();
            if sv.min() < spec.controllability_floor {
                continue;
            }
        }
        if spec.require_output_reachable && !sys.is_output_reachable(DEFAULT_RANK_RTOL) {
            continue;
        }
        return Ok(sys);
    }
    bail!(
        "no admissible system in 100 attempts (n={n}, m={m}, p={p}); \
         the model spec is likely infeasible"
    );
}

/// Draws an i.i.d. Gaussian input of length `n_samples` and, when a floor is
/// given, scales it by the smallest factor whose order-`order` Gram dominates
/// the floor. Returns the signal with its excitation certificate.
pub fn generate_pe_input(
    m: usize,
    n_samples: usize,
    order: usize,
    k_floor: Option<&DMatrix<f64>>,
    rng: &mut ChaCha8Rng,
) -> Result<(Signal, PeCertificate)> {
    if n_samples + 1 < (m + 1) * order {
        bail!(
            "{n_samples} samples cannot make a depth-{order} Hankel matrix of a \
             {m}-channel signal full row rank; need at least {}",
            (m + 1) * order - 1
        );
    }
    let mut data = gaussian_matrix(rng, m, n_samples);
    if let Some(k) = k_floor {
        if k.nrows() != m * order || !k.is_square() {
            bail!(
                "floor must be {s}x{s} for order {order}, got {}x{}",
                k.nrows(),
                k.ncols(),
                s = m * order
            );
        }
        if k.norm() > 0.0 {
            let g = pe::pe_gram(&Signal::new(data.clone())?, order)?;
            let ratio = linalg::max_gen_eig(k, &g)
                .context("raw Gaussian Gram was singular; draw a longer signal")?;
            if ratio > 0.0 {
                // A hair above the critical scale keeps the margin nonnegative.
                data.scale_mut(ratio.sqrt() * (1.0 + 1e-9));
            }
        }
    }
    let u = Signal::new(data)?;
    let cert = match k_floor {
        Some(k) if k.norm() > 0.0 => pe::kpe_check(&u, order, k, 1e-9)?,
        _ => {
            let gram = pe::pe_gram(&u, order)?;
            let margin = linalg::min_eig_sym(&gram);
            PeCertificate {
                order,
                gram,
                bound: None,
                margin,
            }
        }
    };
    Ok((u, cert))
}

/// Appends a one-step output delay: the new output is the old one a sample
/// late, pushing every Markov parameter down one index. Used to manufacture
/// systems of a prescribed relative degree.
pub fn with_output_delay(sys: &LtiSystem) -> LtiSystem {
    let (n, m, p) = (sys.n(), sys.m(), sys.p());
    let mut a = DMatrix::zeros(n + p, n + p);
    a.view_mut((0, 0), (n, n)).copy_from(sys.a());
    a.view_mut((n, 0), (p, n)).copy_from(sys.c());
    let mut b = DMatrix::zeros(n + p, m);
    b.view_mut((0, 0), (n, m)).copy_from(sys.b());
    b.view_mut((n, 0), (p, m)).copy_from(sys.d());
    let mut c = DMatrix::zeros(p, n + p);
    c.view_mut((0, n), (p, p)).fill_with_identity();
    let d = DMatrix::zeros(p, m);
    LtiSystem::new(a, b, c, d).expect("delay extension preserves consistency")
}
