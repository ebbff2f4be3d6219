//! Command-line front end: simulate, reconstruct, sweep, analyze, verify.
//!
//! File-based workflow for batch use; every command writes its outputs plus
//! a run manifest (resolved config, input/output digests, seed, duration).
//! Exit codes: 0 success, 2 validation failure, 3 solver nonconvergence.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::analysis::{
    element_fidelities, noise_resilience_sweep, radial_grid, relative_error, smoothing_sweep,
    wigner_radial, SweepProtocol,
};
use crate::detectors::{self, povm_zoo, SplitterTree, ZooCase};
use crate::entangle::{self, fixtures, BoundConfig};
use crate::error::{Error, Result};
use crate::fock::{
    self, build_response, predict_statistics, sample_statistics, FockDiagonalPovm, GridSpacing,
    ProbeEnsemble, ProbeKind, StatisticsMatrix,
};
use crate::io::{self, RunManifest};
use crate::solver::{self, Regularizer, SolverConfig};

#[derive(Parser, Debug)]
#[command(
    name = "qdt",
    version,
    about = "Quantum detector tomography: simulate, reconstruct, sweep, analyze, verify"
)]
pub struct Cli {
    /// Cap the number of parallel workers.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate a detector: probe grid, outcome statistics and the
    /// generating POVM.
    Simulate(SimulateArgs),
    /// Reconstruct a POVM from statistics and a probe file.
    Reconstruct(ReconstructArgs),
    /// Smoothing-sensitivity or noise-resilience sweeps.
    Sweep(SweepArgs),
    /// Wigner profiles, fidelities, relative errors.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Certified negativity lower bound from joint click data.
    VerifyEntanglement(VerifyArgs),
    /// Emit desk-scale entanglement fixtures (exact Born-rule data).
    Fixture(FixtureArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum ModelArg {
    Apd,
    Tmd,
    LosslessTmd,
    LossyTmd52,
    PerfectNumber,
    SharpArtificial,
    SharpArtificialLoss20,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum SpacingArg {
    Linear,
    Log,
}

impl From<SpacingArg> for GridSpacing {
    fn from(s: SpacingArg) -> Self {
        match s {
            SpacingArg::Linear => GridSpacing::Linear,
            SpacingArg::Log => GridSpacing::Log,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum KindArg {
    Pure,
    Mixed,
}

impl From<KindArg> for ProbeKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Pure => ProbeKind::Pure,
            KindArg::Mixed => ProbeKind::Mixed,
        }
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Detector model.
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Efficiency for apd / tmd models.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Bin count (power of two) for the tmd model; must match the tree.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Per-stage reflectivities for the tmd model, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub reflectivities: Option<Vec<f64>>,
    /// Probe grid minimum intensity.
    #[arg(long, default_value_t = 0.05)]
    pub xmin: f64,
    /// Probe grid maximum intensity.
    #[arg(long, default_value_t = 30.0)]
    pub xmax: f64,
    /// Number of probe intensities.
    #[arg(long, default_value_t = 100)]
    pub probes: usize,
    #[arg(long, value_enum, default_value_t = SpacingArg::Log)]
    pub spacing: SpacingArg,
    /// Probe state family (pure coherent or Gaussian amplitude mixture).
    #[arg(long, value_enum, default_value_t = KindArg::Pure)]
    pub kind: KindArg,
    /// Relative amplitude-noise width of mixed probes.
    #[arg(long, default_value_t = fock::DEFAULT_SIGMA_REL)]
    pub sigma_rel: f64,
    /// Fock-space truncation M.
    #[arg(long, default_value_t = fock::DEFAULT_TRUNCATION)]
    pub truncation: usize,
    /// Reject probes leaving more Poisson mass than this beyond M.
    #[arg(long, default_value_t = fock::DEFAULT_TAIL_TOL)]
    pub tail_tol: f64,
    /// Multinomial shots per probe; omit for exact probabilities.
    #[arg(long)]
    pub shots: Option<u64>,
    /// Gaussian relative intensity jitter applied when generating the data.
    #[arg(long)]
    pub jitter: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, env = "QDT_OUT_DIR", default_value = "qdt-out")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReconstructArgs {
    /// Statistics file (.json statistics document or .csv).
    #[arg(long)]
    pub stats: PathBuf,
    /// Probe CSV (required when --stats is a CSV).
    #[arg(long)]
    pub probes: Option<PathBuf>,
    /// Solver configuration JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override the response model (pure | mixed).
    #[arg(long, value_enum)]
    pub response: Option<KindArg>,
    #[arg(long)]
    pub sigma_rel: Option<f64>,
    /// Fock-space truncation (defaults to the statistics document's value).
    #[arg(long)]
    pub truncation: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub tail_tol: f64,
    /// Report JSON path.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the reconstructed POVM as CSV.
    #[arg(long)]
    pub povm_csv: Option<PathBuf>,
    /// Exit 0 even when the solver did not converge.
    #[arg(long)]
    pub allow_nonconverged: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum SweepKind {
    Smoothing,
    Noise,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub kind: SweepKind,
    /// Benchmark case (lossless_tmd, lossy_tmd_52, perfect_number,
    /// sharp_artificial, sharp_artificial_loss_20).
    #[arg(long)]
    pub case: String,
    /// Smoothing weights, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub y_grid: Vec<f64>,
    /// Relative noise levels for the noise sweep, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub delta_grid: Vec<f64>,
    #[arg(long, default_value_t = 4)]
    pub repeats: u32,
    /// Multinomial shots per probe.
    #[arg(long, default_value_t = 38_084)]
    pub shots: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50_000)]
    pub max_iter: usize,
    #[arg(long, env = "QDT_OUT_DIR", default_value = "qdt-out")]
    pub out_dir: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum AnalyzeCommand {
    /// Radial Wigner profiles of POVM elements.
    Wigner(WignerArgs),
    /// Per-element fidelity between two POVM files.
    Fidelity(CompareArgs),
    /// Relative Frobenius error (percent) between two POVM files.
    Relerr(CompareArgs),
}

#[derive(Args, Debug)]
pub struct WignerArgs {
    /// POVM CSV file.
    #[arg(long)]
    pub povm: PathBuf,
    /// Elements to profile, comma separated (default: all).
    #[arg(long, value_delimiter = ',')]
    pub elements: Option<Vec<usize>>,
    #[arg(long, default_value_t = 6.0)]
    pub rmax: f64,
    #[arg(long, default_value_t = 400)]
    pub points: usize,
    #[arg(long, env = "QDT_OUT_DIR", default_value = "qdt-out")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[arg(long)]
    pub povm_a: PathBuf,
    #[arg(long)]
    pub povm_b: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Joint click-data JSON.
    #[arg(long)]
    pub data: PathBuf,
    /// Bound report JSON path.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    pub eps: f64,
    #[arg(long, default_value_t = 50_000)]
    pub max_iter: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum FixtureKind {
    Bell,
    Product,
    Werner,
}

#[derive(Args, Debug)]
pub struct FixtureArgs {
    #[arg(long, value_enum)]
    pub kind: FixtureKind,
    /// Werner visibility v.
    #[arg(long, default_value_t = 1.0)]
    pub visibility: f64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Entry point used by the binary: parses arguments, dispatches, maps
/// errors to the exit-code contract.
pub fn run() -> i32 {
    let cli = Cli::parse();
    run_cli(cli)
}

pub fn run_cli(cli: Cli) -> i32 {
    if let Some(jobs) = cli.jobs {
        // ignore failure: the pool can only be initialized once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global();
    }
    let outcome = match cli.command {
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Reconstruct(args) => cmd_reconstruct(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Analyze(args) => cmd_analyze(&args),
        Command::VerifyEntanglement(args) => cmd_verify_entanglement(&args),
        Command::Fixture(args) => cmd_fixture(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::NotConverged { .. } => 3,
                _ => 2,
            }
        }
    }
}

fn build_model(args: &SimulateArgs) -> Result<(FockDiagonalPovm, String)> {
    let m = args.truncation;
    match args.model {
        ModelArg::Apd => {
            let eta = args
                .eta
                .ok_or_else(|| Error::invalid("--eta is required for --model apd"))?;
            Ok((detectors::apd_povm(eta, m)?, format!("apd(eta={eta})")))
        }
        ModelArg::Tmd => {
            let refl = args.reflectivities.clone().or_else(|| {
                args.bins.map(|b| {
                    let depth = b.trailing_zeros() as usize;
                    vec![0.5; depth.max(1)]
                })
            });
            let refl = refl.ok_or_else(|| {
                Error::invalid("--model tmd needs --reflectivities or --bins")
            })?;
            let tree = SplitterTree::new(refl)?;
            if let Some(bins) = args.bins {
                if bins != tree.bins() {
                    return Err(Error::invalid(format!(
                        "--bins {bins} does not match a {}-stage tree ({} bins)",
                        tree.depth(),
                        tree.bins()
                    )));
                }
            }
            let eta = args.eta.unwrap_or(1.0);
            Ok((
                detectors::lossy_tmd_povm(&tree, eta, m)?,
                format!("tmd(stages={:?},eta={eta})", tree.reflectivities()),
            ))
        }
        zoo => {
            let case = match zoo {
                ModelArg::LosslessTmd => ZooCase::LosslessTmd,
                ModelArg::LossyTmd52 => ZooCase::LossyTmd52,
                ModelArg::PerfectNumber => ZooCase::PerfectNumber,
                ModelArg::SharpArtificial => ZooCase::SharpArtificial,
                ModelArg::SharpArtificialLoss20 => ZooCase::SharpArtificialLoss20,
                _ => unreachable!(),
            };
            if let Some(bins) = args.bins {
                let expected = match case {
                    ZooCase::LosslessTmd | ZooCase::LossyTmd52 => 8,
                    _ => {
                        return Err(Error::invalid("--bins only applies to TMD models"));
                    }
                };
                if bins != expected {
                    return Err(Error::invalid(format!(
                        "--bins {bins} conflicts with {case} ({expected} bins)"
                    )));
                }
            }
            let povm = povm_zoo(case);
            let povm = if args.truncation == detectors::ZOO_TRUNCATION {
                povm
            } else {
                povm.restrict(args.truncation + 1)?
            };
            Ok((povm, case.name().to_string()))
        }
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Result<i32> {
    let start = Instant::now();
    let (povm, model_name) = build_model(args)?;
    let probes = ProbeEnsemble::grid(
        args.xmin,
        args.xmax,
        args.probes,
        args.spacing.into(),
        args.kind.into(),
        args.sigma_rel,
    )?;

    let response = if let Some(jitter) = args.jitter {
        if !(jitter >= 0.0) {
            return Err(Error::invalid("--jitter must be nonnegative"));
        }
        use rand::SeedableRng;
        use rand_distr::Distribution;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(crate::math::derive_seed(
            args.seed, 0x6a69,
        ));
        let dist = rand_distr::Normal::new(0.0, jitter)
            .map_err(|e| Error::invalid(format!("jitter distribution: {e}")))?;
        let deltas: Vec<f64> = (0..probes.len()).map(|_| dist.sample(&mut rng)).collect();
        let jittered = probes.perturbed_raw(&deltas)?;
        fock::build_response_at(&probes, &jittered, args.truncation, args.tail_tol)?
    } else {
        build_response(&probes, args.truncation, args.tail_tol)?
    };

    let exact = predict_statistics(&povm, &response)?;
    let stats = match args.shots {
        Some(j) => sample_statistics(&exact, j, args.seed)?,
        None => exact,
    };

    let dir = &args.out_dir;
    let probes_path = dir.join("probes.csv");
    let stats_csv_path = dir.join("statistics.csv");
    let stats_json_path = dir.join("statistics.json");
    let povm_path = dir.join("povm.csv");

    io::write_file(&probes_path, &io::probes_to_csv(&probes))?;
    io::write_file(&stats_csv_path, &io::statistics_to_csv(&probes, &stats)?)?;
    let doc = io::StatisticsDocument::new(
        &probes,
        &stats,
        Some(args.truncation),
        args.shots.map(|_| args.seed),
    )?;
    io::write_file(&stats_json_path, &io::to_json_pretty(&doc)?)?;
    io::write_file(&povm_path, &io::povm_to_csv(&povm))?;

    let mut manifest = RunManifest::new(
        "simulate",
        Some(args.seed),
        json!({
            "model": model_name,
            "xmin": args.xmin,
            "xmax": args.xmax,
            "probes": args.probes,
            "spacing": format!("{:?}", args.spacing),
            "kind": format!("{:?}", args.kind),
            "sigma_rel": args.sigma_rel,
            "truncation": args.truncation,
            "tail_tol": args.tail_tol,
            "shots": args.shots,
            "jitter": args.jitter,
        }),
    );
    for p in [&probes_path, &stats_csv_path, &stats_json_path, &povm_path] {
        manifest.record_output(p)?;
    }
    manifest.duration_ms = start.elapsed().as_millis() as u64;
    io::write_file(&dir.join("manifest.json"), &io::to_json_pretty(&manifest)?)?;
    println!(
        "simulated {} probes of {} ({} outcomes) into {}",
        probes.len(),
        model_name,
        povm.outcomes(),
        dir.display()
    );
    Ok(0)
}

/// Solver configuration JSON: keys regularizer, y, damping_c, weights,
/// eps_primal, eps_dual, max_iter, noise_runs, noise_sigma_rel, seed.
#[derive(Debug, Default, serde::Deserialize)]
struct ConfigFile {
    regularizer: Option<String>,
    y: Option<f64>,
    damping_c: Option<f64>,
    weights: Option<Vec<f64>>,
    eps_primal: Option<f64>,
    eps_dual: Option<f64>,
    max_iter: Option<usize>,
    noise_runs: Option<usize>,
    noise_sigma_rel: Option<f64>,
    seed: Option<u64>,
}

fn solver_config_from_file(path: Option<&Path>) -> Result<SolverConfig> {
    let file: ConfigFile = match path {
        Some(p) => io::from_json(&io::read_file(p)?)?,
        None => ConfigFile::default(),
    };
    let mut cfg = SolverConfig::default();
    let reg_name = file.regularizer.as_deref().unwrap_or(if file.y.is_some() {
        "smoothing"
    } else {
        "none"
    });
    cfg.regularizer = match reg_name {
        "none" => Regularizer::None,
        "smoothing" => Regularizer::Smoothing { y: file.y.unwrap_or(0.1) },
        "damping" => Regularizer::Damping { c: file.damping_c.unwrap_or(0.03) },
        "weighting" => Regularizer::Weighting {
            weights: file
                .weights
                .clone()
                .ok_or_else(|| Error::invalid("weighting regularizer needs 'weights'"))?,
        },
        other => {
            return Err(Error::invalid(format!(
                "unknown regularizer '{other}' (none|smoothing|damping|weighting)"
            )))
        }
    };
    if let Some(v) = file.eps_primal {
        cfg.eps_primal = v;
    }
    if let Some(v) = file.eps_dual {
        cfg.eps_dual = v;
    }
    if let Some(v) = file.max_iter {
        cfg.max_iterations = v;
    }
    if let Some(v) = file.noise_runs {
        cfg.noise_runs = v;
    }
    if let Some(v) = file.noise_sigma_rel {
        cfg.noise_sigma_rel = v;
    }
    if let Some(v) = file.seed {
        cfg.seed = v;
    }
    Ok(cfg)
}

fn cmd_reconstruct(args: &ReconstructArgs) -> Result<i32> {
    let start = Instant::now();
    let cfg = solver_config_from_file(args.config.as_deref())?;

    let is_json = args.stats.extension().map(|e| e == "json").unwrap_or(false);
    let (probes, stats, doc_truncation) = if is_json {
        let doc: io::StatisticsDocument = io::from_json(&io::read_file(&args.stats)?)?;
        (doc.probes()?, doc.statistics()?, doc.truncation)
    } else {
        let (xs, probs) = io::statistics_from_csv(&io::read_file(&args.stats)?)?;
        let probes_path = args.probes.as_ref().ok_or_else(|| {
            Error::invalid("--probes is required when --stats is a CSV file")
        })?;
        let kind: ProbeKind = args.response.map(Into::into).unwrap_or(ProbeKind::Pure);
        let probes = io::probes_from_csv(
            &io::read_file(probes_path)?,
            kind,
            args.sigma_rel.unwrap_or(fock::DEFAULT_SIGMA_REL),
        )?;
        if probes.intensities() != xs.as_slice() {
            return Err(Error::invalid(
                "probe file intensities do not match the statistics x column",
            ));
        }
        (probes, StatisticsMatrix::new(probs, None)?, None)
    };

    let truncation = args
        .truncation
        .or(doc_truncation)
        .unwrap_or(fock::DEFAULT_TRUNCATION);

    // optional response-model override (pure vs mixed study)
    let probes = match args.response {
        Some(kind) => ProbeEnsemble::new(
            probes.intensities().to_vec(),
            kind.into(),
            args.sigma_rel.unwrap_or(probes.sigma_rel()),
        )?,
        None => probes,
    };

    let report = if cfg.noise_runs >= 2 {
        solver::noise_average_reconstruct(&stats, &probes, truncation, args.tail_tol, &cfg)?
    } else {
        let response = build_response(&probes, truncation, args.tail_tol)?;
        solver::reconstruct(&stats, &response, &cfg)?
    };

    let doc = io::ReconstructionDocument::new(&report);
    io::write_file(&args.out, &io::to_json_pretty(&doc)?)?;
    if let Some(csv_path) = &args.povm_csv {
        io::write_file(csv_path, &io::povm_to_csv(&report.povm))?;
    }

    let mut manifest = RunManifest::new(
        "reconstruct",
        Some(cfg.seed),
        serde_json::to_value(&cfg).map_err(|e| Error::Parse(e.to_string()))?,
    );
    manifest.record_input(&args.stats)?;
    if let Some(p) = &args.probes {
        manifest.record_input(p)?;
    }
    if let Some(p) = &args.config {
        manifest.record_input(p)?;
    }
    manifest.record_output(&args.out)?;
    if let Some(p) = &args.povm_csv {
        manifest.record_output(p)?;
    }
    manifest.duration_ms = start.elapsed().as_millis() as u64;
    manifest.write_beside(&args.out)?;

    println!(
        "reconstruction: residual {:.3e}, {} iterations, converged = {}",
        report.residual, report.iterations, report.converged
    );
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if !report.converged && !args.allow_nonconverged {
        eprintln!("error: solver did not converge (use --allow-nonconverged to accept)");
        return Ok(3);
    }
    Ok(0)
}

fn cmd_sweep(args: &SweepArgs) -> Result<i32> {
    let start = Instant::now();
    let case: ZooCase = args.case.parse()?;
    let protocol = SweepProtocol::zoo_default(Some(args.shots), args.seed);
    let base_cfg = SolverConfig {
        max_iterations: args.max_iter,
        seed: args.seed,
        ..SolverConfig::default()
    };

    let mut manifest = RunManifest::new(
        "sweep",
        Some(args.seed),
        json!({
            "kind": format!("{:?}", args.kind),
            "case": case.name(),
            "y_grid": args.y_grid,
            "delta_grid": args.delta_grid,
            "repeats": args.repeats,
            "shots": args.shots,
            "max_iter": args.max_iter,
        }),
    );

    match args.kind {
        SweepKind::Smoothing => {
            if args.y_grid.is_empty() {
                return Err(Error::invalid("--y-grid must not be empty"));
            }
            let table = smoothing_sweep(case, &args.y_grid, &protocol, &base_cfg)?;
            let csv_path = args.out_dir.join(format!("smoothing_{}.csv", case.name()));
            let json_path = args.out_dir.join(format!("smoothing_{}.json", case.name()));
            io::write_file(&csv_path, &io::sweep_to_csv(&table))?;
            io::write_file(&json_path, &io::to_json_pretty(&table)?)?;
            manifest.record_output(&csv_path)?;
            manifest.record_output(&json_path)?;
            println!("smoothing sweep over {} cells -> {}", table.cells.len(), csv_path.display());
        }
        SweepKind::Noise => {
            if args.y_grid.is_empty() || args.delta_grid.is_empty() {
                return Err(Error::invalid("--y-grid and --delta-grid must not be empty"));
            }
            let tables = noise_resilience_sweep(
                case,
                &args.delta_grid,
                &args.y_grid,
                args.repeats,
                &protocol,
                &base_cfg,
            )?;
            for (y, table) in args.y_grid.iter().zip(&tables) {
                let csv_path = args.out_dir.join(format!("noise_{}_y{}.csv", case.name(), y));
                let json_path = args.out_dir.join(format!("noise_{}_y{}.json", case.name(), y));
                io::write_file(&csv_path, &io::sweep_to_csv(table))?;
                io::write_file(&json_path, &io::to_json_pretty(table)?)?;
                manifest.record_output(&csv_path)?;
                manifest.record_output(&json_path)?;
            }
            println!("noise sweep over {} tables -> {}", tables.len(), args.out_dir.display());
        }
    }

    manifest.duration_ms = start.elapsed().as_millis() as u64;
    io::write_file(&args.out_dir.join("sweep_manifest.json"), &io::to_json_pretty(&manifest)?)?;
    Ok(0)
}

fn cmd_analyze(cmd: &AnalyzeCommand) -> Result<i32> {
    match cmd {
        AnalyzeCommand::Wigner(args) => {
            let start = Instant::now();
            let povm = io::povm_from_csv(&io::read_file(&args.povm)?)?;
            let elements: Vec<usize> = args
                .elements
                .clone()
                .unwrap_or_else(|| (0..povm.outcomes()).collect());
            let grid = radial_grid(args.rmax, args.points);
            let mut manifest = RunManifest::new(
                "analyze-wigner",
                None,
                json!({"rmax": args.rmax, "points": args.points, "elements": elements}),
            );
            manifest.record_input(&args.povm)?;
            for &n in &elements {
                let profile = wigner_radial(&povm, n, &grid)?;
                let path = args.out_dir.join(format!("wigner_{n}.csv"));
                io::write_file(&path, &io::profile_to_csv(&profile))?;
                manifest.record_output(&path)?;
            }
            manifest.duration_ms = start.elapsed().as_millis() as u64;
            io::write_file(
                &args.out_dir.join("wigner_manifest.json"),
                &io::to_json_pretty(&manifest)?,
            )?;
            println!("wrote {} wigner profiles to {}", elements.len(), args.out_dir.display());
            Ok(0)
        }
        AnalyzeCommand::Fidelity(args) => {
            let start = Instant::now();
            let a = io::povm_from_csv(&io::read_file(&args.povm_a)?)?;
            let b = io::povm_from_csv(&io::read_file(&args.povm_b)?)?;
            let fids = element_fidelities(&a, &b)?;
            let min = fids.iter().cloned().fold(f64::INFINITY, f64::min);
            let doc = json!({"elements": fids, "min": min});
            io::write_file(&args.out, &io::to_json_pretty(&doc)?)?;
            let mut manifest = RunManifest::new("analyze-fidelity", None, json!({}));
            manifest.record_input(&args.povm_a)?;
            manifest.record_input(&args.povm_b)?;
            manifest.record_output(&args.out)?;
            manifest.duration_ms = start.elapsed().as_millis() as u64;
            manifest.write_beside(&args.out)?;
            println!("minimum element fidelity: {min:.6}");
            Ok(0)
        }
        AnalyzeCommand::Relerr(args) => {
            let start = Instant::now();
            let a = io::povm_from_csv(&io::read_file(&args.povm_a)?)?;
            let b = io::povm_from_csv(&io::read_file(&args.povm_b)?)?;
            let percent = relative_error(a.coeffs(), b.coeffs())?;
            let doc = json!({"percent": percent});
            io::write_file(&args.out, &io::to_json_pretty(&doc)?)?;
            let mut manifest = RunManifest::new("analyze-relerr", None, json!({}));
            manifest.record_input(&args.povm_a)?;
            manifest.record_input(&args.povm_b)?;
            manifest.record_output(&args.out)?;
            manifest.duration_ms = start.elapsed().as_millis() as u64;
            manifest.write_beside(&args.out)?;
            println!("relative error: {percent:.4}%");
            Ok(0)
        }
    }
}

fn cmd_verify_entanglement(args: &VerifyArgs) -> Result<i32> {
    let start = Instant::now();
    let doc: io::JointDataDocument = io::from_json(&io::read_file(&args.data)?)?;
    let joint = doc.joint_data()?;
    let cfg = BoundConfig { eps: args.eps, max_iterations: args.max_iter };
    let bound = entangle::negativity_lower_bound(&joint, &cfg)?;
    io::write_file(&args.out, &io::to_json_pretty(&io::BoundDocument::new(&bound))?)?;

    let mut manifest = RunManifest::new(
        "verify-entanglement",
        None,
        json!({"eps": args.eps, "max_iter": args.max_iter}),
    );
    manifest.record_input(&args.data)?;
    manifest.record_output(&args.out)?;
    manifest.duration_ms = start.elapsed().as_millis() as u64;
    manifest.write_beside(&args.out)?;

    println!("certified negativity lower bound: {:.6}", bound.bound);
    Ok(0)
}

fn cmd_fixture(args: &FixtureArgs) -> Result<i32> {
    let state = match args.kind {
        FixtureKind::Bell => fixtures::bell_state(),
        FixtureKind::Product => fixtures::product_state(),
        FixtureKind::Werner => {
            if !(0.0..=1.0).contains(&args.visibility) {
                return Err(Error::invalid("--visibility must lie in [0,1]"));
            }
            fixtures::werner_state(args.visibility)
        }
    };
    let joint = fixtures::pauli_joint_data(&state);
    io::write_file(&args.out, &io::to_json_pretty(&io::JointDataDocument::new(&joint))?)?;
    println!("wrote {:?} fixture to {}", args.kind, args.out.display());
    Ok(0)
}
