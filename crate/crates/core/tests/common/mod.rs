//! Shared seeded generators for the integration tests. These are independent
//! of the CLI's generators on purpose: tests should not depend on the code
//! they exercise.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hankel_pe::{LtiSystem, Signal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        // Box-Muller keeps the dependency surface to `rand` alone.
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    })
}

pub fn gaussian_vector(rng: &mut ChaCha8Rng, len: usize) -> DVector<f64> {
    DVector::from_column_slice(gaussian_matrix(rng, len, 1).as_slice())
}

pub fn gaussian_signal(rng: &mut ChaCha8Rng, dim: usize, len: usize) -> Signal {
    Signal::new(gaussian_matrix(rng, dim, len)).unwrap()
}

/// Random system with spectral radius scaled below 0.95.
pub fn random_system(rng: &mut ChaCha8Rng, n: usize, m: usize, p: usize) -> LtiSystem {
    let mut a = gaussian_matrix(rng, n, n);
    if n > 0 {
        let rho = hankel_pe::linalg::spectral_radius(&a);
        if rho > 0.95 {
            a.scale_mut(0.95 / rho);
        }
    }
    let b = gaussian_matrix(rng, n, m);
    let c = gaussian_matrix(rng, p, n);
    let d = gaussian_matrix(rng, p, m);
    LtiSystem::new(a, b, c, d).unwrap()
}

/// Keeps drawing until the system is controllable and output reachable.
pub fn random_nice_system(rng: &mut ChaCha8Rng, n: usize, m: usize, p: usize) -> LtiSystem {
    loop {
        let sys = random_system(rng, n, m, p);
        if sys.is_controllable(1e-10) && sys.is_output_reachable(1e-10) {
            return sys;
        }
    }
}
