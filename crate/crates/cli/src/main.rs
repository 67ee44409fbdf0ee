use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use hankel_pe::bounds::{self, BoundReport, Verdict, BOUND_PSD_TOL};
use hankel_pe::fundamental;
use hankel_pe::linalg::DEFAULT_RANK_RTOL;
use hankel_pe::pe;

use hankel_pe_cli::gen;
use hankel_pe_cli::report::{self, OutputFormat, ReportRecord};
use hankel_pe_cli::sweep::{self, SweepConfig};
use hankel_pe_cli::sysio;

/// Excitation bounds and trajectory-space checks for discrete-time LTI data.
#[derive(Parser)]
#[command(name = "hankel-pe", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct FormatOpt {
    /// Report format for files and stdout records.
    #[arg(long, default_value = "json")]
    format: OutputFormat,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a system file against an input signal.
    Simulate {
        #[arg(long)]
        system: PathBuf,
        /// Input signal CSV (columns k,v0,...).
        #[arg(long)]
        input: PathBuf,
        /// Initial state as comma-separated values; defaults to zero.
        #[arg(long)]
        x0: Option<String>,
        /// Directory for x.csv and y.csv; prints y to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the depth-L Hankel matrix and its Gram from a signal.
    Hankel {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        depth: usize,
        /// Directory for hankel.csv, gram.csv, and metadata; stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check persistence of excitation, by rank or against a floor matrix.
    PeCheck {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        depth: usize,
        #[arg(long, default_value_t = DEFAULT_RANK_RTOL)]
        tol_rank: f64,
        /// Optional floor matrix CSV for the quantitative check.
        #[arg(long)]
        floor: Option<PathBuf>,
        #[arg(long, default_value_t = BOUND_PSD_TOL)]
        tol_psd: f64,
        #[command(flatten)]
        format: FormatOpt,
    },
    /// Verify the excitation-transfer bounds on one (system, input) pair.
    Bounds {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        x0: Option<String>,
        /// Window depth for the input-state bound.
        #[arg(long, default_value_t = 2)]
        depth: usize,
        /// Checks to run (thm1, cor1, cor2, thm3); defaults to all four.
        #[arg(long, value_delimiter = ',')]
        which: Option<Vec<String>>,
        /// Excitation floor K_u as a matrix CSV; defaults to 0.9x the
        /// achieved Gram of the matching order.
        #[arg(long)]
        ku: Option<PathBuf>,
        #[arg(long, default_value_t = BOUND_PSD_TOL)]
        tol_psd: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        format: FormatOpt,
    },
    /// Rank condition, image equality, and trajectory parametrization.
    Fundamental {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        x0: Option<String>,
        #[arg(long)]
        depth: usize,
        #[arg(long, default_value_t = DEFAULT_RANK_RTOL)]
        tol_rank: f64,
        /// Target input trajectory CSV of length `depth` to parametrize.
        #[arg(long, requires = "target_output")]
        target_input: Option<PathBuf>,
        /// Target output trajectory CSV of length `depth`.
        #[arg(long, requires = "target_input")]
        target_output: Option<PathBuf>,
        #[command(flatten)]
        format: FormatOpt,
    },
    /// Reproduce the necessity counterexample and print its summary.
    Counterexample {
        /// Input length (impulse followed by zeros).
        #[arg(long, default_value_t = 8)]
        samples: usize,
        /// Extra initial-state probes, each as "a,b"; may repeat.
        #[arg(long)]
        probe: Vec<String>,
        /// Directory for the structured report.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        format: FormatOpt,
    },
    /// Run a randomized verification sweep from a config file.
    Sweep {
        /// JSON config mirroring the sweep settings; defaults apply when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Directory for per-trial reports plus a summary file.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        format: FormatOpt,
    },
    /// Size an input excitation floor for a requested output floor.
    DesignInput {
        #[arg(long)]
        system: PathBuf,
        /// Output floor K_y as a matrix CSV.
        #[arg(long, conflicts_with = "ky_scale")]
        ky: Option<PathBuf>,
        /// Shortcut: K_y = scale * I.
        #[arg(long)]
        ky_scale: Option<f64>,
        /// Also draw a signal meeting the designed floor.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_x0(text: &Option<String>, n: usize) -> Result<DVector<f64>> {
    match text {
        Some(t) => sysio::parse_vector(t, n),
        None => Ok(DVector::zeros(n)),
    }
}

fn print_matrix_csv(mat: &DMatrix<f64>) {
    for i in 0..mat.nrows() {
        let row: Vec<String> = (0..mat.ncols()).map(|j| mat[(i, j)].to_string()).collect();
        println!("{}", row.join(","));
    }
}

fn emit_records(
    records: &[ReportRecord],
    out: &Option<PathBuf>,
    stem: &str,
    format: OutputFormat,
) -> Result<()> {
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{stem}.{}", format.extension()));
        report::write_records(&path, records, format)?;
    }
    for r in records {
        println!(
            "{name}: {verdict} (margin {margin:.3e}, tol {tol:.1e})",
            name = r.name,
            verdict = r.verdict,
            margin = r.margin,
            tol = r.tol,
        );
    }
    Ok(())
}

fn bound_to_record(rep: &BoundReport, dims: (usize, usize, usize), depth: usize) -> ReportRecord {
    ReportRecord::from_bound(0, rep, dims, depth, 0, 0)
}

#[derive(Serialize)]
struct PeCheckOutput {
    depth: usize,
    rank_pe: bool,
    gram_min_eig: f64,
    floor_margin: Option<f64>,
    satisfied: bool,
}

fn cmd_simulate(
    system: &Path,
    input: &Path,
    x0: &Option<String>,
    out: &Option<PathBuf>,
) -> Result<ExitCode> {
    let sys = sysio::load_system(system)?;
    let u = sysio::read_signal(input)?;
    if u.dim() != sys.m() {
        bail!("input has {} channels, system expects {}", u.dim(), sys.m());
    }
    let x0 = load_x0(x0, sys.n())?;
    let (x, y) = sys.simulate(&x0, &u)?;
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            sysio::write_signal(&dir.join("x.csv"), &x)?;
            sysio::write_signal(&dir.join("y.csv"), &y)?;
            println!("wrote {} samples to {}", y.len(), dir.display());
        }
        None => {
            let mut header = vec!["k".to_string()];
            header.extend((0..y.dim()).map(|j| format!("v{j}")));
            println!("{}", header.join(","));
            for k in 0..y.len() {
                let mut row = vec![k.to_string()];
                row.extend((0..y.dim()).map(|j| y.matrix()[(j, k)].to_string()));
                println!("{}", row.join(","));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_hankel(input: &Path, depth: usize, out: &Option<PathBuf>) -> Result<ExitCode> {
    let u = sysio::read_signal(input)?;
    let h = pe::hankel(&u, depth)?;
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            sysio::write_matrix_csv(&dir.join("hankel.csv"), h.matrix())?;
            sysio::write_matrix_csv(&dir.join("gram.csv"), &h.gram())?;
            sysio::write_metadata(
                &dir.join("hankel.meta.json"),
                &sysio::MatrixMetadata {
                    name: "hankel".into(),
                    rows: h.matrix().nrows(),
                    cols: h.matrix().ncols(),
                    n: 0,
                    m: h.dim(),
                    p: 0,
                    depth: Some(depth),
                    relaxation: None,
                },
            )?;
            println!(
                "wrote {}x{} Hankel matrix to {}",
                h.matrix().nrows(),
                h.matrix().ncols(),
                dir.display()
            );
        }
        None => print_matrix_csv(h.matrix()),
    }
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_pe_check(
    input: &Path,
    depth: usize,
    tol_rank: f64,
    floor: &Option<PathBuf>,
    tol_psd: f64,
    format: OutputFormat,
) -> Result<ExitCode> {
    let u = sysio::read_signal(input)?;
    let rank_pe = pe::pe_order_check(&u, depth, tol_rank)?;
    let gram = pe::pe_gram(&u, depth)?;
    let gram_min = hankel_pe::linalg::min_eig_sym(&gram);
    let (floor_margin, satisfied) = match floor {
        Some(path) => {
            let k = sysio::read_matrix_csv(path)?;
            let cert = pe::kpe_check(&u, depth, &k, 1e-9)?;
            let ok = cert.satisfied(pe::psd_tol_for(&gram, &k, tol_psd));
            (Some(cert.margin), ok)
        }
        None => (None, rank_pe),
    };
    let output = PeCheckOutput {
        depth,
        rank_pe,
        gram_min_eig: gram_min,
        floor_margin,
        satisfied,
    };
    match format {
        OutputFormat::Json => println!("{}", serde_json::to_string_pretty(&output)?),
        OutputFormat::Csv => {
            println!("depth,rank_pe,gram_min_eig,floor_margin,satisfied");
            println!(
                "{},{},{},{},{}",
                depth,
                rank_pe,
                gram_min,
                floor_margin.map(|v| v.to_string()).unwrap_or_default(),
                satisfied
            );
        }
    }
    Ok(if satisfied {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_bounds(
    system: &Path,
    input: &Path,
    x0: &Option<String>,
    depth: usize,
    which: &Option<Vec<String>>,
    ku: &Option<PathBuf>,
    tol_psd: f64,
    out: &Option<PathBuf>,
    format: OutputFormat,
) -> Result<ExitCode> {
    let sys = sysio::load_system(system)?;
    let u = sysio::read_signal(input)?;
    let x0 = load_x0(x0, sys.n())?;
    let ku_mat = match ku {
        Some(path) => Some(sysio::read_matrix_csv(path)?),
        None => None,
    };
    let default_which = ["thm1", "cor1", "cor2", "thm3"];
    let selected: Vec<String> = which
        .clone()
        .unwrap_or_else(|| default_which.iter().map(|s| s.to_string()).collect());
    let dims = (sys.n(), sys.m(), sys.p());
    let mut records = Vec::new();
    for name in &selected {
        let rep = match name.as_str() {
            "thm1" => bounds::theorem1_verify(&sys, &x0, &u, ku_mat.as_ref(), tol_psd)?,
            "cor1" => bounds::corollary1_verify(&sys, &x0, &u, ku_mat.as_ref(), tol_psd)?,
            "cor2" => bounds::corollary2_verify(&sys, &x0, &u, tol_psd)?,
            "thm3" => bounds::theorem3_verify(&sys, &x0, &u, depth, ku_mat.as_ref(), tol_psd)?,
            other => bail!("unknown bound {other:?}; expected thm1, cor1, cor2, or thm3"),
        };
        records.push(bound_to_record(&rep, dims, depth));
    }
    emit_records(&records, out, "bounds", format)?;
    let any_fail = records.iter().any(|r| r.verdict_of() == Verdict::Fails);
    Ok(if any_fail {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    })
}

#[derive(Serialize)]
struct FundamentalOutput {
    depth: usize,
    rank_condition: bool,
    rank_margin: f64,
    image_equality: bool,
    parametrization_residual: Option<f64>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_fundamental(
    system: &Path,
    input: &Path,
    x0: &Option<String>,
    depth: usize,
    tol_rank: f64,
    target_input: &Option<PathBuf>,
    target_output: &Option<PathBuf>,
    format: OutputFormat,
) -> Result<ExitCode> {
    let sys = sysio::load_system(system)?;
    let u = sysio::read_signal(input)?;
    let x0 = load_x0(x0, sys.n())?;
    let (x, y) = sys.simulate(&x0, &u)?;
    let (rank_ok, sigma) = fundamental::rank_condition_check(&x, &u, depth, tol_rank)?;
    let image_ok = fundamental::image_equality_check(&sys, &x0, &u, depth, tol_rank)?;
    let residual = match (target_input, target_output) {
        (Some(tu_path), Some(ty_path)) => {
            let tu = sysio::read_signal(tu_path)?;
            let ty = sysio::read_signal(ty_path)?;
            if tu.len() != depth || ty.len() != depth {
                bail!("target trajectories must have exactly {depth} samples");
            }
            let (_, res) = fundamental::parametrize(
                &u,
                &y,
                depth,
                &tu.window(0, depth - 1),
                &ty.window(0, depth - 1),
            )?;
            Some(res)
        }
        _ => None,
    };
    let output = FundamentalOutput {
        depth,
        rank_condition: rank_ok,
        rank_margin: sigma,
        image_equality: image_ok,
        parametrization_residual: residual,
    };
    match format {
        OutputFormat::Json => println!("{}", serde_json::to_string_pretty(&output)?),
        OutputFormat::Csv => {
            println!("depth,rank_condition,rank_margin,image_equality,parametrization_residual");
            println!(
                "{},{},{},{},{}",
                depth,
                rank_ok,
                sigma,
                image_ok,
                residual.map(|v| v.to_string()).unwrap_or_default()
            );
        }
    }
    Ok(if image_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

#[derive(Serialize)]
struct CounterexampleOutput {
    n_samples: usize,
    d: Vec<f64>,
    m: Vec<Vec<f64>>,
    probe_ranks: Vec<usize>,
    all_outputs_excited: bool,
    mu_first: Vec<f64>,
    mu_tail_max_norm: f64,
    mu_gram: Vec<Vec<f64>>,
    mu_gram_rank: usize,
    reduced_observability_rank: usize,
    claim_falsified: bool,
    open_questions: Vec<String>,
}

fn cmd_counterexample(
    samples: usize,
    probes: &[String],
    out: &Option<PathBuf>,
    format: OutputFormat,
) -> Result<ExitCode> {
    let extra: Vec<DVector<f64>> = probes
        .iter()
        .map(|p| sysio::parse_vector(p, 2))
        .collect::<Result<_>>()?;
    let rep = fundamental::counterexample_run(samples, &extra)?;

    println!("necessity counterexample (impulse input, {samples} samples)");
    println!("  d = [{}, {}, {}]", rep.d[0], rep.d[1], rep.d[2]);
    println!("  M:");
    for i in 0..rep.m.nrows() {
        let row: Vec<String> = (0..rep.m.ncols())
            .map(|j| format!("{:4}", rep.m[(i, j)]))
            .collect();
        println!("    [{}]", row.join(" "));
    }
    println!("  probe                rank(H_1(y))");
    for p in &rep.probes {
        println!("    x0 = [{:4}, {:4}]   {}", p.x0[0], p.x0[1], p.rank);
    }
    println!("  M u first window      = [{}, {}]", rep.mu_first[0], rep.mu_first[1]);
    println!("  M u later windows     = 0 (max norm {})", rep.mu_tail_max_norm);
    println!("  filtered-input Gram rank = {}", rep.mu_gram_rank);
    println!(
        "  verdict: output excitation does NOT require filtered-input \
         excitation — claim falsified = {}",
        rep.claim_falsified
    );

    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        let output = CounterexampleOutput {
            n_samples: rep.n_samples,
            d: rep.d.iter().copied().collect(),
            m: (0..rep.m.nrows())
                .map(|i| (0..rep.m.ncols()).map(|j| rep.m[(i, j)]).collect())
                .collect(),
            probe_ranks: rep.probes.iter().map(|p| p.rank).collect(),
            all_outputs_excited: rep.all_outputs_excited,
            mu_first: rep.mu_first.iter().copied().collect(),
            mu_tail_max_norm: rep.mu_tail_max_norm,
            mu_gram: (0..2)
                .map(|i| (0..2).map(|j| rep.mu_gram[(i, j)]).collect())
                .collect(),
            mu_gram_rank: rep.mu_gram_rank,
            reduced_observability_rank: rep.reduced_observability_rank,
            claim_falsified: rep.claim_falsified,
            open_questions: rep.open_questions.clone(),
        };
        match format {
            OutputFormat::Json => std::fs::write(
                dir.join("counterexample.json"),
                serde_json::to_string_pretty(&output)?,
            )?,
            OutputFormat::Csv => {
                // The nested report does not flatten usefully; emit the Gram
                // as CSV and the rest as JSON alongside.
                sysio::write_matrix_csv(&dir.join("mu_gram.csv"), &rep.mu_gram)?;
                std::fs::write(
                    dir.join("counterexample.json"),
                    serde_json::to_string_pretty(&output)?,
                )?;
            }
        }
    }
    Ok(if rep.claim_falsified {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn cmd_sweep(
    config_path: &Option<PathBuf>,
    seed: Option<u64>,
    trials: Option<usize>,
    out: &Option<PathBuf>,
    format: OutputFormat,
) -> Result<ExitCode> {
    let mut config = match config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<SweepConfig>(&text)
                .with_context(|| format!("parsing {}", path.display()))?
        }
        None => SweepConfig::default(),
    };
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(t) = trials {
        config.trials = t;
    }
    config.validate()?;

    let outcome = sweep::run_sweep(&config)?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        for trial in 0..config.trials {
            let batch: Vec<ReportRecord> = outcome
                .records
                .iter()
                .filter(|r| r.trial == trial)
                .cloned()
                .collect();
            let path = dir.join(format!("trial-{trial:05}.{}", format.extension()));
            report::write_records(&path, &batch, format)?;
        }
        report::write_summary(
            &dir.join(format!("summary.{}", format.extension())),
            &outcome.summary,
            format,
        )?;
    }
    let s = &outcome.summary;
    println!(
        "sweep: {} trials, {} records — holds {}, fails {}, inapplicable {}",
        s.trials, s.records, s.holds, s.fails, s.inapplicable
    );
    Ok(if s.fails == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_design_input(
    system: &Path,
    ky: &Option<PathBuf>,
    ky_scale: Option<f64>,
    samples: Option<usize>,
    seed: u64,
    out: &Option<PathBuf>,
) -> Result<ExitCode> {
    let sys = sysio::load_system(system)?;
    let ky_mat = match (ky, ky_scale) {
        (Some(path), _) => sysio::read_matrix_csv(path)?,
        (None, Some(s)) => DMatrix::identity(sys.p(), sys.p()).scale(s),
        (None, None) => bail!("specify an output floor via --ky or --ky-scale"),
    };
    let gain = bounds::design_input_gain(&sys, &ky_mat)?;
    println!("input excitation gain: {gain}");
    println!(
        "any input whose order-{} Gram dominates {gain} * I delivers the \
         requested output floor",
        sys.n() + 1
    );
    if let Some(n_samples) = samples {
        let order = sys.n() + 1;
        let floor = DMatrix::identity(sys.m() * order, sys.m() * order).scale(gain);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (u, cert) = gen::generate_pe_input(sys.m(), n_samples, order, Some(&floor), &mut rng)?;
        println!("generated {} samples with certificate margin {:.3e}", u.len(), cert.margin);
        if let Some(dir) = out {
            std::fs::create_dir_all(dir)?;
            sysio::write_signal(&dir.join("input.csv"), &u)?;
            sysio::write_matrix_csv(&dir.join("gram.csv"), &cert.gram)?;
        }
    } else if out.is_some() {
        bail!("--out needs --samples to have something to write");
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Simulate {
            system,
            input,
            x0,
            out,
        } => cmd_simulate(system, input, x0, out),
        Command::Hankel { input, depth, out } => cmd_hankel(input, *depth, out),
        Command::PeCheck {
            input,
            depth,
            tol_rank,
            floor,
            tol_psd,
            format,
        } => cmd_pe_check(input, *depth, *tol_rank, floor, *tol_psd, format.format),
        Command::Bounds {
            system,
            input,
            x0,
            depth,
            which,
            ku,
            tol_psd,
            out,
            format,
        } => cmd_bounds(
            system,
            input,
            x0,
            *depth,
            which,
            ku,
            *tol_psd,
            out,
            format.format,
        ),
        Command::Fundamental {
            system,
            input,
            x0,
            depth,
            tol_rank,
            target_input,
            target_output,
            format,
        } => cmd_fundamental(
            system,
            input,
            x0,
            *depth,
            *tol_rank,
            target_input,
            target_output,
            format.format,
        ),
        Command::Counterexample {
            samples,
            probe,
            out,
            format,
        } => cmd_counterexample(*samples, probe, out, format.format),
        Command::Sweep {
            config,
            seed,
            trials,
            out,
            format,
        } => cmd_sweep(config, *seed, *trials, out, format.format),
        Command::DesignInput {
            system,
            ky,
            ky_scale,
            samples,
            seed,
            out,
        } => cmd_design_input(system, ky, *ky_scale, *samples, *seed, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            // Usage, file, and config problems are distinct from bound
            // violations, which exit with 1 above.
            ExitCode::from(2)
        }
    }
}
