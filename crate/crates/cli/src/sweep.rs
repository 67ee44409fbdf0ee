//! Randomized verification sweeps: each trial draws a system and an exciting
//! input from a per-trial seed, runs the selected verifiers, and yields flat
//! report records. Trials are pure, so they run in parallel; aggregation is
//! ordered by trial index and therefore deterministic.

use std::time::Instant;

use anyhow::{bail, Context, Result};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use hankel_pe::bounds::{self, Verdict};
use hankel_pe::fundamental;
use hankel_pe::linalg;
use hankel_pe::pe;
use hankel_pe::structmat;
use hankel_pe::LtiSystem;

use crate::gen::{self, RandomModelSpec};
use crate::report::{ReportRecord, Summary};

/// Bound identifiers the sweep understands.
pub const KNOWN_CHECKS: &[&str] = &[
    "thm1",
    "cor1",
    "eq13",
    "eq14",
    "cor2",
    "thm3",
    "prop1",
    "robust",
    "counterexample",
];

fn default_seed() -> u64 {
    0
}
fn default_trials() -> usize {
    100
}
fn default_n_range() -> [usize; 2] {
    [1, 5]
}
fn default_mp_range() -> [usize; 2] {
    [1, 3]
}
fn default_depth() -> usize {
    2
}
fn default_tol_rank() -> f64 {
    hankel_pe::linalg::DEFAULT_RANK_RTOL
}
fn default_tol_psd() -> f64 {
    bounds::BOUND_PSD_TOL
}
fn default_which() -> Vec<String> {
    ["thm1", "cor1", "eq13", "eq14", "cor2", "thm3", "prop1"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Inclusive state-dimension range [lo, hi].
    #[serde(default = "default_n_range")]
    pub n_range: [usize; 2],
    #[serde(default = "default_mp_range")]
    pub m_range: [usize; 2],
    #[serde(default = "default_mp_range")]
    pub p_range: [usize; 2],
    /// Window depth L for the input-state checks.
    #[serde(default = "default_depth")]
    pub depth: usize,
    /// Data length; defaults to 20·(L + n) per trial when absent.
    #[serde(default)]
    pub n_samples: Option<usize>,
    #[serde(default = "default_tol_rank")]
    pub tol_rank: f64,
    #[serde(default = "default_tol_psd")]
    pub tol_psd: f64,
    #[serde(default = "default_which")]
    pub which: Vec<String>,
    /// Worker thread count; defaults to the rayon global pool.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            seed: default_seed(),
            trials: default_trials(),
            n_range: default_n_range(),
            m_range: default_mp_range(),
            p_range: default_mp_range(),
            depth: default_depth(),
            n_samples: None,
            tol_rank: default_tol_rank(),
            tol_psd: default_tol_psd(),
            which: default_which(),
            workers: None,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            bail!("trials must be at least 1");
        }
        for (name, r) in [
            ("n_range", self.n_range),
            ("m_range", self.m_range),
            ("p_range", self.p_range),
        ] {
            if r[0] > r[1] {
                bail!("{name} [{}, {}] is empty", r[0], r[1]);
            }
        }
        if self.m_range[0] == 0 || self.p_range[0] == 0 {
            bail!("input and output dimensions must be positive");
        }
        if self.depth == 0 {
            bail!("depth must be positive");
        }
        if self.p_range[0] > self.m_range[1] * (self.n_range[1] + 1) {
            bail!(
                "no output-reachable system exists with p >= {} and m(n+1) <= {}",
                self.p_range[0],
                self.m_range[1] * (self.n_range[1] + 1)
            );
        }
        if let Some(n) = self.n_samples {
            if n < self.depth + self.n_range[1] {
                bail!(
                    "n_samples = {n} is shorter than depth + n_max = {}",
                    self.depth + self.n_range[1]
                );
            }
        }
        if self.which.is_empty() {
            bail!("which must name at least one check");
        }
        for w in &self.which {
            if !KNOWN_CHECKS.contains(&w.as_str()) {
                bail!("unknown check {w:?}; known: {}", KNOWN_CHECKS.join(", "));
            }
        }
        Ok(())
    }
}

pub struct SweepOutcome {
    pub records: Vec<ReportRecord>,
    pub summary: Summary,
}

fn trial_seed(base: u64, trial: usize) -> u64 {
    base.wrapping_add((trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn sample_range(rng: &mut ChaCha8Rng, range: [usize; 2]) -> usize {
    rng.gen_range(range[0]..=range[1])
}

fn push_bound(
    records: &mut Vec<ReportRecord>,
    trial: usize,
    report: &bounds::BoundReport,
    dims: (usize, usize, usize),
    depth: usize,
    seed: u64,
    started: Instant,
) {
    records.push(ReportRecord::from_bound(
        trial,
        report,
        dims,
        depth,
        seed,
        started.elapsed().as_micros(),
    ));
}

#[allow(clippy::too_many_arguments)]
fn verdict_record(
    trial: usize,
    name: &str,
    verdict: Verdict,
    margin: f64,
    tol: f64,
    dims: (usize, usize, usize),
    depth: usize,
    seed: u64,
    started: Instant,
    notes: Vec<String>,
) -> ReportRecord {
    ReportRecord {
        trial,
        name: name.into(),
        verdict: verdict.as_str().into(),
        margin,
        tol,
        residual: None,
        n: dims.0,
        m: dims.1,
        p: dims.2,
        depth,
        seed,
        elapsed_us: started.elapsed().as_micros(),
        notes,
    }
}

/// One counterexample trial: deterministic, ignores the generation knobs.
fn counterexample_trial(trial: usize, seed: u64) -> Result<Vec<ReportRecord>> {
    let started = Instant::now();
    let report = fundamental::counterexample_run(8, &[])?;
    let verdict = if report.claim_falsified {
        Verdict::Holds
    } else {
        Verdict::Fails
    };
    Ok(vec![verdict_record(
        trial,
        "counterexample",
        verdict,
        report.mu_gram_rank as f64,
        0.0,
        (2, 1, 2),
        1,
        seed,
        started,
        vec![
            "every probed initial state gives a full-rank output Hankel matrix \
             while the filtered-input Gram stays rank deficient"
                .into(),
        ],
    )])
}

fn run_trial(config: &SweepConfig, trial: usize) -> Result<Vec<ReportRecord>> {
    if config.which.iter().all(|w| w == "counterexample") {
        return counterexample_trial(trial, trial_seed(config.seed, trial));
    }
    let seed = trial_seed(config.seed, trial);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Output reachability needs p <= m(n+1); redraw infeasible combinations.
    let (n, m, p) = loop {
        let n = sample_range(&mut rng, config.n_range);
        let m = sample_range(&mut rng, config.m_range);
        let p = sample_range(&mut rng, config.p_range);
        if p <= m * (n + 1) {
            break (n, m, p);
        }
    };
    let dims = (n, m, p);
    let depth = config.depth;
    let spec = RandomModelSpec::default();
    let sys = gen::generate_system(&spec, n, m, p, &mut rng)
        .with_context(|| format!("trial {trial}"))?;
    let n_samples = config.n_samples.unwrap_or(20 * (depth + n));
    let (u, _) = gen::generate_pe_input(m, n_samples, depth + n, None, &mut rng)?;
    let x0 = gen::gaussian_vector(&mut rng, n);

    let mut records = Vec::new();
    for which in &config.which {
        let started = Instant::now();
        match which.as_str() {
            "thm1" => {
                let rep = bounds::theorem1_verify(&sys, &x0, &u, None, config.tol_psd)?;
                push_bound(&mut records, trial, &rep, dims, 1, seed, started);
            }
            "cor1" => {
                let rep = bounds::corollary1_verify(&sys, &x0, &u, None, config.tol_psd)?;
                push_bound(&mut records, trial, &rep, dims, 1, seed, started);
            }
            "eq13" | "eq14" => {
                // Directional bounds must sit below the two-sided one.
                let ku = pe::pe_gram(&u, n + 1)?.scale(0.9);
                let m_mat = structmat::build_m(&sys);
                let two_sided =
                    (&m_mat * &ku * m_mat.transpose()).scale(1.0 / (n + 1) as f64);
                let directional = if which == "eq13" {
                    bounds::directional_bound_output(&sys, &ku)?
                } else {
                    bounds::directional_bound_input(&sys, &ku)?
                };
                let (ok, margin) =
                    pe::psd_dominates(&two_sided, &directional, config.tol_psd)?;
                records.push(verdict_record(
                    trial,
                    which,
                    if ok { Verdict::Holds } else { Verdict::Fails },
                    margin,
                    pe::psd_tol_for(&two_sided, &directional, config.tol_psd),
                    dims,
                    1,
                    seed,
                    started,
                    Vec::new(),
                ));
            }
            "cor2" => {
                // Force relative degree >= 1 by dropping the feedthrough.
                let relaxed = LtiSystem::new(
                    sys.a().clone(),
                    sys.b().clone(),
                    sys.c().clone(),
                    DMatrix::zeros(p, m),
                )?;
                let rep = bounds::corollary2_verify(&relaxed, &x0, &u, config.tol_psd)?;
                push_bound(&mut records, trial, &rep, dims, 1, seed, started);
            }
            "thm3" => {
                let rep =
                    bounds::theorem3_verify(&sys, &x0, &u, depth, None, config.tol_psd)?;
                push_bound(&mut records, trial, &rep, dims, depth, seed, started);
            }
            "prop1" => {
                let (x, _) = sys.simulate(&x0, &u)?;
                let (rank_ok, sigma) =
                    fundamental::rank_condition_check(&x, &u, depth, config.tol_rank)?;
                let record = if rank_ok {
                    let image_ok = fundamental::image_equality_check(
                        &sys,
                        &x0,
                        &u,
                        depth,
                        config.tol_rank,
                    )?;
                    verdict_record(
                        trial,
                        which,
                        if image_ok { Verdict::Holds } else { Verdict::Fails },
                        sigma,
                        config.tol_rank,
                        dims,
                        depth,
                        seed,
                        started,
                        Vec::new(),
                    )
                } else {
                    verdict_record(
                        trial,
                        which,
                        Verdict::Inapplicable,
                        sigma,
                        config.tol_rank,
                        dims,
                        depth,
                        seed,
                        started,
                        vec!["rank condition not met; implication is vacuous".into()],
                    )
                };
                records.push(record);
            }
            "robust" => {
                let z = structmat::build_z(&sys, depth)?;
                let eps = 1e-3;
                let mut e = gen::gaussian_matrix(
                    &mut rng,
                    z.matrix.nrows(),
                    z.matrix.ncols(),
                );
                let norm = linalg::spectral_norm(&e);
                if norm > 0.0 {
                    e.scale_mut(eps / 2.0 / norm);
                }
                let zhat = &z.matrix + e;
                let rep = bounds::robust_bound_verify(
                    &sys,
                    &x0,
                    &u,
                    depth,
                    None,
                    &zhat,
                    eps,
                    config.tol_psd,
                )?;
                push_bound(&mut records, trial, &rep, dims, depth, seed, started);
            }
            "counterexample" => {
                records.extend(counterexample_trial(trial, seed)?);
            }
            other => bail!("unknown check {other:?}"),
        }
    }
    Ok(records)
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutcome> {
    config.validate()?;
    let run = || -> Result<Vec<Vec<ReportRecord>>> {
        (0..config.trials)
            .into_par_iter()
            .map(|trial| run_trial(config, trial))
            .collect()
    };
    let per_trial = match config.workers {
        Some(workers) => rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .context("building worker pool")?
            .install(run),
        None => run(),
    }?;
    let records: Vec<ReportRecord> = per_trial.into_iter().flatten().collect();
    let summary = Summary::tally(config.trials, &records);
    Ok(SweepOutcome { records, summary })
}
