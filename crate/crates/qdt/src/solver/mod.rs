//! The reconstruction engine: the constrained convex program
//!
//!   min ‖P − FΠ‖₂ + g(Π)   subject to  π_n ≥ 0,  Σ_n π_n = 1,
//!
//! with pluggable regularizers (none, smoothing, damping, column weighting)
//! and the noise-averaging protocol. The diagonal parametrization turns the
//! feasible set into a product of per-Fock-level probability simplices, so
//! projection is exact and cheap; the solver alternates a cached quadratic
//! prox step with that projection.

mod admm;
pub mod simplex;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    self, FockDiagonalPovm, ProbeEnsemble, ResponseMatrix, StatisticsMatrix,
};
use crate::math::derive_seed;

use admm::{AdmmSettings, SplitProblem};

/// Convex quadratic filter functions g(Π).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regularizer {
    /// Plain least squares.
    None,
    /// y · Σ_{k,n} (θ_k^(n) − θ_{k+1}^(n))², mildly penalizing non-smooth
    /// POVM elements.
    Smoothing { y: f64 },
    /// c · ‖MΠ‖₂² with M = diag(0, 1, 1/2, 1/3, ...), damping large
    /// high-level amplitudes. The vacuum level needs no damping, hence
    /// M₀₀ = 0 in place of the singular 1/0.
    Damping { c: f64 },
    /// min ‖(P − FΠ)D‖₂: right-multiplied positive diagonal column
    /// weighting, kept for the comparative study.
    Weighting { weights: Vec<f64> },
}

impl Regularizer {
    fn validate(&self, outcomes: usize) -> Result<()> {
        match self {
            Regularizer::None => Ok(()),
            Regularizer::Smoothing { y } => {
                if *y < 0.0 || !y.is_finite() {
                    Err(Error::invalid("smoothing weight y must be >= 0"))
                } else {
                    Ok(())
                }
            }
            Regularizer::Damping { c } => {
                if *c < 0.0 || !c.is_finite() {
                    Err(Error::invalid("damping coefficient must be >= 0"))
                } else {
                    Ok(())
                }
            }
            Regularizer::Weighting { weights } => {
                if weights.len() != outcomes {
                    return Err(Error::dim(format!(
                        "weighting diagonal has {} entries for {} outcomes",
                        weights.len(),
                        outcomes
                    )));
                }
                if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
                    return Err(Error::invalid("weighting diagonal must be positive"));
                }
                Ok(())
            }
        }
    }
}

/// Solver configuration. Defaults match the artifact-wide conventions:
/// primal tolerance 1e-8, dual/KKT tolerance 1e-6, 50k iterations,
/// noise-averaging disabled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub regularizer: Regularizer,
    pub eps_primal: f64,
    pub eps_dual: f64,
    pub max_iterations: usize,
    pub noise_runs: usize,
    pub noise_sigma_rel: f64,
    pub seed: u64,
    /// Record the combined splitting residual per iteration (diagnostics).
    #[serde(default)]
    pub record_residual_history: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            regularizer: Regularizer::None,
            eps_primal: 1e-8,
            eps_dual: 1e-6,
            max_iterations: 50_000,
            noise_runs: 0,
            noise_sigma_rel: 0.02,
            seed: 0,
            record_residual_history: false,
        }
    }
}

impl SolverConfig {
    pub fn with_regularizer(regularizer: Regularizer) -> Self {
        Self { regularizer, ..Self::default() }
    }

    pub fn smoothing(y: f64) -> Self {
        Self::with_regularizer(Regularizer::Smoothing { y })
    }

    fn validate(&self) -> Result<()> {
        if !(self.eps_primal > 0.0) || !(self.eps_dual > 0.0) {
            return Err(Error::invalid("tolerances must be positive"));
        }
        if self.max_iterations < 1 {
            return Err(Error::invalid("max_iterations must be >= 1"));
        }
        Ok(())
    }
}

/// Outcome of one reconstruction, always carrying a feasible POVM.
#[derive(Debug, Clone)]
pub struct ReconstructionReport {
    pub povm: FockDiagonalPovm,
    /// ‖P − FΠ‖₂ (unweighted data residual).
    pub residual: f64,
    /// Value of the configured penalty at the solution.
    pub penalty: f64,
    pub iterations: usize,
    /// max(primal, dual) scaled splitting residual at exit.
    pub kkt_residual: f64,
    pub converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Per-run POVMs when noise-averaging was requested.
    pub runs: Vec<FockDiagonalPovm>,
    /// Combined residual per iteration when recording was enabled.
    pub residual_history: Option<Vec<f64>>,
    /// Non-fatal diagnostics (e.g. underdetermined probe grid).
    pub warnings: Vec<String>,
}

/// Smoothing functional S = Σ_{k,n} (θ_k^(n) − θ_{k+1}^(n))².
pub fn smoothing_penalty(coeffs: &DMatrix<f64>) -> f64 {
    let mut s = 0.0;
    for n in 0..coeffs.ncols() {
        for k in 0..coeffs.nrows() - 1 {
            let d = coeffs[(k, n)] - coeffs[(k + 1, n)];
            s += d * d;
        }
    }
    s
}

/// Damping functional c·‖MΘ‖₂² with M = diag(0, 1, 1/2, ...).
pub fn damping_penalty(coeffs: &DMatrix<f64>, c: f64) -> f64 {
    let mut s = 0.0;
    for n in 0..coeffs.ncols() {
        for k in 1..coeffs.nrows() {
            let v = coeffs[(k, n)] / k as f64;
            s += v * v;
        }
    }
    c * s
}

/// Penalty quadratic R such that g(Θ) = Σ_n θ_nᵀ R θ_n.
fn regularizer_matrix(reg: &Regularizer, m1: usize) -> DMatrix<f64> {
    match reg {
        Regularizer::None | Regularizer::Weighting { .. } => DMatrix::zeros(m1, m1),
        Regularizer::Smoothing { y } => {
            // ΔᵀΔ for the first-difference operator, scaled by y.
            let mut r = DMatrix::zeros(m1, m1);
            for k in 0..m1 - 1 {
                r[(k, k)] += y;
                r[(k + 1, k + 1)] += y;
                r[(k, k + 1)] -= y;
                r[(k + 1, k)] -= y;
            }
            r
        }
        Regularizer::Damping { c } => {
            let mut r = DMatrix::zeros(m1, m1);
            for k in 1..m1 {
                r[(k, k)] = c / (k as f64 * k as f64);
            }
            r
        }
    }
}

fn penalty_value(reg: &Regularizer, coeffs: &DMatrix<f64>) -> f64 {
    match reg {
        Regularizer::None | Regularizer::Weighting { .. } => 0.0,
        Regularizer::Smoothing { y } => y * smoothing_penalty(coeffs),
        Regularizer::Damping { c } => damping_penalty(coeffs, *c),
    }
}

fn validate_inputs(stats: &StatisticsMatrix, response: &ResponseMatrix) -> Result<Vec<String>> {
    if stats.probes() != response.probes() {
        return Err(Error::dim(format!(
            "statistics have {} probe rows, response has {}",
            stats.probes(),
            response.probes()
        )));
    }
    for i in 0..stats.probes() {
        for n in 0..stats.outcomes() {
            let v = stats.probs()[(i, n)];
            if !v.is_finite() || v < -1e-9 || v > 1.0 + 1e-9 {
                return Err(Error::InfeasibleInput { row: i, col: n, value: v });
            }
        }
    }
    let mut warnings = Vec::new();
    if stats.probes() < response.truncation() + 1 {
        warnings.push(format!(
            "underdetermined reconstruction: {} probes for {} Fock levels",
            stats.probes(),
            response.truncation() + 1
        ));
    }
    Ok(warnings)
}

fn solve_instance(
    stats: &StatisticsMatrix,
    response: &ResponseMatrix,
    cfg: &SolverConfig,
) -> Result<ReconstructionReport> {
    cfg.validate()?;
    cfg.regularizer.validate(stats.outcomes())?;
    let warnings = validate_inputs(stats, response)?;

    let m1 = response.truncation() + 1;
    let weights = match &cfg.regularizer {
        Regularizer::Weighting { weights } => weights.clone(),
        _ => vec![1.0; stats.outcomes()],
    };
    let problem = SplitProblem::new(
        response.entries().clone(),
        stats.probs().clone(),
        regularizer_matrix(&cfg.regularizer, m1),
        weights,
    );
    let settings = AdmmSettings {
        eps_primal: cfg.eps_primal,
        eps_dual: cfg.eps_dual,
        max_iterations: cfg.max_iterations,
        record_history: cfg.record_residual_history,
    };
    let out = admm::solve(&problem, &settings);

    let residual = problem.data_residual(&out.solution);
    let penalty = penalty_value(&cfg.regularizer, &out.solution);
    let povm = FockDiagonalPovm::new(out.solution)?;
    Ok(ReconstructionReport {
        povm,
        residual,
        penalty,
        iterations: out.iterations,
        kkt_residual: out.primal_residual.max(out.dual_residual),
        converged: out.converged,
        primal_residual: out.primal_residual,
        dual_residual: out.dual_residual,
        runs: Vec::new(),
        residual_history: if cfg.record_residual_history { Some(out.history) } else { None },
        warnings,
    })
}

/// Reconstruct the POVM minimizing ‖P − FΠ‖₂² + g(Π) over the feasible set.
/// Nonconvergence is reported through `converged = false`, not an error.
pub fn reconstruct(
    stats: &StatisticsMatrix,
    response: &ResponseMatrix,
    cfg: &SolverConfig,
) -> Result<ReconstructionReport> {
    solve_instance(stats, response, cfg)
}

/// Reconstruction with an explicit right-multiplied weighting diagonal,
/// min ‖PD − FΠD‖₂²; provided for the comparative study, not the default
/// path.
pub fn weighted_reconstruct(
    stats: &StatisticsMatrix,
    response: &ResponseMatrix,
    weights: &[f64],
    cfg: &SolverConfig,
) -> Result<ReconstructionReport> {
    let cfg = SolverConfig {
        regularizer: Regularizer::Weighting { weights: weights.to_vec() },
        ..cfg.clone()
    };
    solve_instance(stats, response, &cfg)
}

/// Noise-averaging protocol: rerun the reconstruction with the probe
/// intensities jittered by i.i.d. Gaussian relative noise, then average the
/// coefficient matrices entrywise and re-project onto the feasible set.
///
/// Per-run seeds derive deterministically from (seed, run index), so the
/// parallel and serial schedules produce identical averages.
pub fn noise_average_reconstruct(
    stats: &StatisticsMatrix,
    probes: &ProbeEnsemble,
    truncation: usize,
    tail_tol: f64,
    cfg: &SolverConfig,
) -> Result<ReconstructionReport> {
    if cfg.noise_runs < 2 {
        return Err(Error::invalid("noise averaging needs noise_runs >= 2"));
    }
    if probes.len() != stats.probes() {
        return Err(Error::dim("probe count != statistics rows"));
    }
    let per_run_cfg = SolverConfig { noise_runs: 0, ..cfg.clone() };
    let noise = Normal::new(0.0, cfg.noise_sigma_rel)
        .map_err(|e| Error::invalid(format!("noise distribution: {e}")))?;

    let results: Vec<Result<ReconstructionReport>> = (0..cfg.noise_runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(cfg.seed, run as u64));
            let deltas: Vec<f64> = (0..probes.len()).map(|_| noise.sample(&mut rng)).collect();
            let jittered = probes.perturbed_raw(&deltas)?;
            let response = fock::build_response_at(probes, &jittered, truncation, tail_tol)?;
            solve_instance(stats, &response, &per_run_cfg)
        })
        .collect();

    let mut runs = Vec::with_capacity(cfg.noise_runs);
    let mut first_err = None;
    for r in results {
        match r {
            Ok(rep) => runs.push(rep),
            Err(e) => {
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    if runs.is_empty() {
        return Err(first_err.expect("no runs and no error is impossible"));
    }

    let m1 = truncation + 1;
    let n = stats.outcomes();
    let mut avg = DMatrix::<f64>::zeros(m1, n);
    for rep in &runs {
        avg += rep.povm.coeffs();
    }
    avg /= runs.len() as f64;
    simplex::project_rows(&mut avg);

    let nominal = fock::build_response(probes, truncation, tail_tol)?;
    let residual = (nominal.entries() * &avg - stats.probs()).norm();
    let penalty = penalty_value(&cfg.regularizer, &avg);
    let converged = runs.iter().all(|r| r.converged);
    let iterations = runs.iter().map(|r| r.iterations).max().unwrap_or(0);
    let kkt = runs.iter().map(|r| r.kkt_residual).fold(0.0, f64::max);
    let warnings = runs.first().map(|r| r.warnings.clone()).unwrap_or_default();

    Ok(ReconstructionReport {
        povm: FockDiagonalPovm::new(avg)?,
        residual,
        penalty,
        iterations,
        kkt_residual: kkt,
        converged,
        primal_residual: runs.iter().map(|r| r.primal_residual).fold(0.0, f64::max),
        dual_residual: runs.iter().map(|r| r.dual_residual).fold(0.0, f64::max),
        runs: runs.into_iter().map(|r| r.povm).collect(),
        residual_history: None,
        warnings,
    })
}
