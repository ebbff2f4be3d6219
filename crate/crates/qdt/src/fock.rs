//! Truncated-Fock-space primitives: probe ensembles, response matrices for
//! pure and mixed coherent probes, and the forward Born-rule model.
//!
//! Everything here is phase-free by construction: probes are parametrized
//! by intensity x = |α|² only, and POVMs are diagonal in the number basis.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;

/// Numerical slack below zero tolerated in POVM coefficients.
pub const POSITIVITY_SLACK: f64 = 1e-9;
/// Tolerance on per-Fock-level completeness sums.
pub const COMPLETENESS_TOL: f64 = 1e-6;
/// Default tolerance on the per-probe Poisson mass beyond the truncation.
pub const DEFAULT_TAIL_TOL: f64 = 1e-6;
/// Default relative amplitude-noise width of a mixed probe.
pub const DEFAULT_SIGMA_REL: f64 = 0.02;
/// Default Fock-space truncation.
pub const DEFAULT_TRUNCATION: usize = 60;

/// A POVM diagonal in the number basis, truncated at Fock level `M`.
///
/// Coefficients are stored as an (M+1) × N matrix: row k holds the weights
/// θ_k^(n) of |k⟩⟨k| in each outcome element π_n. Rows sum to one
/// (completeness restricted to the truncated space) and entries are
/// nonnegative up to [`POSITIVITY_SLACK`].
#[derive(Debug, Clone, PartialEq)]
pub struct FockDiagonalPovm {
    coeffs: DMatrix<f64>,
}

impl FockDiagonalPovm {
    pub fn new(coeffs: DMatrix<f64>) -> Result<Self> {
        if coeffs.nrows() < 2 || coeffs.ncols() < 1 {
            return Err(Error::invalid(
                "POVM needs at least 2 Fock levels and 1 outcome",
            ));
        }
        for (idx, &v) in coeffs.iter().enumerate() {
            if !v.is_finite() || v < -POSITIVITY_SLACK {
                let (k, n) = (idx % coeffs.nrows(), idx / coeffs.nrows());
                return Err(Error::invalid(format!(
                    "coefficient θ_{k}^({n}) = {v} violates positivity"
                )));
            }
        }
        for k in 0..coeffs.nrows() {
            let sum: f64 = coeffs.row(k).iter().sum();
            if (sum - 1.0).abs() > COMPLETENESS_TOL {
                return Err(Error::invalid(format!(
                    "completeness violated at Fock level {k}: row sums to {sum}"
                )));
            }
        }
        Ok(Self { coeffs })
    }

    /// Number of outcomes N.
    pub fn outcomes(&self) -> usize {
        self.coeffs.ncols()
    }

    /// Truncation level M.
    pub fn truncation(&self) -> usize {
        self.coeffs.nrows() - 1
    }

    /// θ_k^(n).
    pub fn coeff(&self, k: usize, n: usize) -> f64 {
        self.coeffs[(k, n)]
    }

    pub fn coeffs(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    /// Coefficient vector of element π_n over Fock levels.
    pub fn element(&self, n: usize) -> Vec<f64> {
        self.coeffs.column(n).iter().copied().collect()
    }

    /// Tr(π_n) on the truncated space.
    pub fn element_trace(&self, n: usize) -> f64 {
        self.coeffs.column(n).iter().sum()
    }

    /// Restrict the POVM to the first `dim` Fock levels (coefficients are
    /// copied verbatim; completeness per retained level is preserved).
    pub fn restrict(&self, dim: usize) -> Result<Self> {
        if dim < 2 || dim > self.coeffs.nrows() {
            return Err(Error::dim(format!(
                "cannot restrict a {}-level POVM to {dim} levels",
                self.coeffs.nrows()
            )));
        }
        Self::new(self.coeffs.rows(0, dim).into_owned())
    }
}

/// Pure coherent probes or phase-averaged Gaussian mixtures thereof.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeKind {
    Pure,
    Mixed,
}

/// Spacing rule for generated probe grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridSpacing {
    Linear,
    Log,
}

/// A set of probe intensities x_i = |α_i|², strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeEnsemble {
    intensities: Vec<f64>,
    kind: ProbeKind,
    sigma_rel: f64,
}

impl ProbeEnsemble {
    pub fn new(intensities: Vec<f64>, kind: ProbeKind, sigma_rel: f64) -> Result<Self> {
        if intensities.is_empty() {
            return Err(Error::invalid("probe ensemble is empty"));
        }
        for (i, &x) in intensities.iter().enumerate() {
            if !x.is_finite() || x < 0.0 {
                return Err(Error::invalid(format!(
                    "probe intensity {i} = {x} must be finite and nonnegative"
                )));
            }
            if i > 0 && x <= intensities[i - 1] {
                return Err(Error::invalid(format!(
                    "probe intensities must be strictly increasing (index {i})"
                )));
            }
        }
        if matches!(kind, ProbeKind::Mixed) && !(sigma_rel > 0.0) {
            return Err(Error::invalid("mixed probes require sigma_rel > 0"));
        }
        Ok(Self { intensities, kind, sigma_rel })
    }

    pub fn pure(intensities: Vec<f64>) -> Result<Self> {
        Self::new(intensities, ProbeKind::Pure, DEFAULT_SIGMA_REL)
    }

    pub fn mixed(intensities: Vec<f64>, sigma_rel: f64) -> Result<Self> {
        Self::new(intensities, ProbeKind::Mixed, sigma_rel)
    }

    /// Evenly spaced probe grid (linear or logarithmic in intensity).
    pub fn grid(
        min: f64,
        max: f64,
        count: usize,
        spacing: GridSpacing,
        kind: ProbeKind,
        sigma_rel: f64,
    ) -> Result<Self> {
        if count < 2 || !(max > min) {
            return Err(Error::invalid("probe grid needs count >= 2 and max > min"));
        }
        if matches!(spacing, GridSpacing::Log) && !(min > 0.0) {
            return Err(Error::invalid("log-spaced probe grid needs min > 0"));
        }
        let xs: Vec<f64> = match spacing {
            GridSpacing::Linear => (0..count)
                .map(|i| min + (max - min) * i as f64 / (count - 1) as f64)
                .collect(),
            GridSpacing::Log => {
                let (a, b) = (min.ln(), max.ln());
                (0..count)
                    .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
                    .collect()
            }
        };
        Self::new(xs, kind, sigma_rel)
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    pub fn len(&self) -> usize {
        self.intensities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intensities.is_empty()
    }

    pub fn kind(&self) -> ProbeKind {
        self.kind
    }

    pub fn sigma_rel(&self) -> f64 {
        self.sigma_rel
    }

    /// Same grid with each intensity multiplied by (1 + δ_i); used for
    /// jitter studies. Perturbed grids may lose strict monotonicity, so the
    /// values are re-sorted (response rows are order-independent anyway,
    /// but callers that pair rows with the nominal grid should use
    /// [`ProbeEnsemble::perturbed_raw`]).
    pub fn perturbed_raw(&self, deltas: &[f64]) -> Result<Vec<f64>> {
        if deltas.len() != self.intensities.len() {
            return Err(Error::dim("jitter vector length != probe count"));
        }
        Ok(self
            .intensities
            .iter()
            .zip(deltas)
            .map(|(&x, &d)| (x * (1.0 + d)).max(0.0))
            .collect())
    }
}

/// Gaussian amplitude mixture descriptor for one mixed probe: weight
/// g_α(β) ∝ exp(−(β−α)²/(2Γ²)) centered at α = √x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedProbeDescriptor {
    pub center_amplitude: f64,
    pub width: f64,
}

impl MixedProbeDescriptor {
    /// Width chosen so the induced intensity distribution has standard
    /// deviation sigma_rel·x: Γ = sigma_rel·√x / 2 from first-order error
    /// propagation through β².
    pub fn from_intensity(x: f64, sigma_rel: f64) -> Self {
        let alpha = x.sqrt();
        Self { center_amplitude: alpha, width: 0.5 * sigma_rel * alpha }
    }

    /// Integration domain [max(0, α−6Γ), α+6Γ].
    pub fn support(&self) -> (f64, f64) {
        let lo = (self.center_amplitude - 6.0 * self.width).max(0.0);
        let hi = self.center_amplitude + 6.0 * self.width;
        (lo, hi)
    }
}

/// D × (M+1) map from Fock coefficients to outcome probabilities, plus the
/// per-probe Poisson mass beyond level M.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMatrix {
    entries: DMatrix<f64>,
    tail_mass: Vec<f64>,
}

impl ResponseMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn tail_mass(&self) -> &[f64] {
        &self.tail_mass
    }

    pub fn probes(&self) -> usize {
        self.entries.nrows()
    }

    pub fn truncation(&self) -> usize {
        self.entries.ncols() - 1
    }

    fn from_rows(rows: Vec<Vec<f64>>, tail_tol: f64) -> Result<Self> {
        let d = rows.len();
        let cols = rows[0].len();
        let mut entries = DMatrix::zeros(d, cols);
        let mut tail_mass = Vec::with_capacity(d);
        for (i, row) in rows.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            let tail = (1.0 - sum).max(0.0);
            if tail > tail_tol {
                return Err(Error::TruncationInsufficient { probe: i, tail, tol: tail_tol });
            }
            for (k, &v) in row.iter().enumerate() {
                entries[(i, k)] = v;
            }
            tail_mass.push(tail);
        }
        Ok(Self { entries, tail_mass })
    }
}

/// D × N measured or simulated outcome probabilities (sampled Q-functions).
#[derive(Debug, Clone, PartialEq)]
pub struct StatisticsMatrix {
    probs: DMatrix<f64>,
    trials: Option<Vec<u64>>,
}

impl StatisticsMatrix {
    pub fn new(probs: DMatrix<f64>, trials: Option<Vec<u64>>) -> Result<Self> {
        if let Some(t) = &trials {
            if t.len() != probs.nrows() {
                return Err(Error::dim("trials length != probe count"));
            }
            if t.iter().any(|&j| j == 0) {
                return Err(Error::invalid("trial counts must be >= 1"));
            }
        }
        Ok(Self { probs, trials })
    }

    pub fn probs(&self) -> &DMatrix<f64> {
        &self.probs
    }

    pub fn trials(&self) -> Option<&[u64]> {
        self.trials.as_deref()
    }

    pub fn probes(&self) -> usize {
        self.probs.nrows()
    }

    pub fn outcomes(&self) -> usize {
        self.probs.ncols()
    }
}

/// Pure response: row i is the Poisson distribution of mean x_i truncated
/// at M, computed in log space.
pub fn build_pure_response(
    probes: &ProbeEnsemble,
    truncation: usize,
    tail_tol: f64,
) -> Result<ResponseMatrix> {
    if truncation < 1 {
        return Err(Error::invalid("truncation must be >= 1"));
    }
    let ln_fact = math::ln_factorials(truncation);
    let rows: Vec<Vec<f64>> = probes
        .intensities()
        .iter()
        .map(|&x| math::poisson_row(x, truncation, &ln_fact))
        .collect();
    ResponseMatrix::from_rows(rows, tail_tol)
}

/// Absolute tolerance the adaptive quadrature must reach per response entry.
const QUAD_TOL: f64 = 1e-9;
const QUAD_MAX_PANELS: usize = 16_384;

/// Diagonal coefficients R_{k,k} of the phase-averaged Gaussian amplitude
/// mixture for one probe, by adaptive composite Simpson quadrature.
fn mixed_row(
    probe_index: usize,
    x: f64,
    sigma_rel: f64,
    truncation: usize,
    ln_fact: &[f64],
) -> Result<Vec<f64>> {
    let desc = MixedProbeDescriptor::from_intensity(x, sigma_rel);
    if desc.width < 1e-12 {
        // Degenerate mixture: the weight collapses to a delta at α.
        return Ok(math::poisson_row(x, truncation, ln_fact));
    }
    let (lo, hi) = desc.support();
    let mut panels = 64;
    let mut prev: Option<Vec<f64>> = None;
    while panels <= QUAD_MAX_PANELS {
        let (nodes, weights) = math::simpson_rule(lo, hi, panels);
        let mut row = vec![0.0; truncation + 1];
        let mut norm = 0.0;
        for (&beta, &w) in nodes.iter().zip(&weights) {
            let arg = (beta - desc.center_amplitude) / desc.width;
            let g = w * (-0.5 * arg * arg).exp();
            norm += g;
            let pois = math::poisson_row(beta * beta, truncation, ln_fact);
            for (r, p) in row.iter_mut().zip(&pois) {
                *r += g * p;
            }
        }
        for r in row.iter_mut() {
            *r /= norm;
        }
        if let Some(p) = &prev {
            let delta = row
                .iter()
                .zip(p)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            if delta < QUAD_TOL {
                return Ok(row);
            }
        }
        prev = Some(row);
        panels *= 2;
    }
    Err(Error::QuadratureFailure { probe: probe_index, tol: QUAD_TOL, panels: QUAD_MAX_PANELS })
}

/// Mixed response: row i is the diagonal of the phase-averaged Gaussian
/// mixture centered at amplitude √x_i. Rows are never rescaled; missing
/// mass is reported as tail mass.
pub fn build_mixed_response(
    probes: &ProbeEnsemble,
    truncation: usize,
    tail_tol: f64,
) -> Result<ResponseMatrix> {
    if truncation < 1 {
        return Err(Error::invalid("truncation must be >= 1"));
    }
    if !(probes.sigma_rel() > 0.0) {
        return Err(Error::invalid("mixed response requires sigma_rel > 0"));
    }
    let ln_fact = math::ln_factorials(truncation);
    let rows: Result<Vec<Vec<f64>>> = probes
        .intensities()
        .iter()
        .enumerate()
        .map(|(i, &x)| mixed_row(i, x, probes.sigma_rel(), truncation, &ln_fact))
        .collect();
    ResponseMatrix::from_rows(rows?, tail_tol)
}

/// Dispatch on the ensemble kind.
pub fn build_response(
    probes: &ProbeEnsemble,
    truncation: usize,
    tail_tol: f64,
) -> Result<ResponseMatrix> {
    match probes.kind() {
        ProbeKind::Pure => build_pure_response(probes, truncation, tail_tol),
        ProbeKind::Mixed => build_mixed_response(probes, truncation, tail_tol),
    }
}

/// Response at explicitly given (possibly jittered, non-monotone)
/// intensities, same kind and sigma as `probes`.
pub fn build_response_at(
    probes: &ProbeEnsemble,
    intensities: &[f64],
    truncation: usize,
    tail_tol: f64,
) -> Result<ResponseMatrix> {
    let ln_fact = math::ln_factorials(truncation);
    let rows: Result<Vec<Vec<f64>>> = intensities
        .iter()
        .enumerate()
        .map(|(i, &x)| match probes.kind() {
            ProbeKind::Pure => Ok(math::poisson_row(x, truncation, &ln_fact)),
            ProbeKind::Mixed => mixed_row(i, x, probes.sigma_rel(), truncation, &ln_fact),
        })
        .collect();
    ResponseMatrix::from_rows(rows?, tail_tol)
}

/// Forward Born-rule model P = F·Θ. Used both to simulate detectors and to
/// evaluate reconstruction residuals.
pub fn predict_statistics(
    povm: &FockDiagonalPovm,
    response: &ResponseMatrix,
) -> Result<StatisticsMatrix> {
    if response.entries.ncols() != povm.truncation() + 1 {
        return Err(Error::dim(format!(
            "response has {} Fock columns but POVM has {}",
            response.entries.ncols(),
            povm.truncation() + 1
        )));
    }
    let probs = &response.entries * povm.coeffs();
    StatisticsMatrix::new(probs, None)
}

/// Replace each probability row by multinomial frequencies over `trials`
/// draws. Rows whose probabilities sum below one (truncation tail) keep the
/// deficit as an implicit, discarded overflow outcome, so sampled rows may
/// sum to slightly less than one. Deterministic given `seed`.
pub fn sample_statistics(stats: &StatisticsMatrix, trials: u64, seed: u64) -> Result<StatisticsMatrix> {
    if trials == 0 {
        return Err(Error::invalid("trials must be >= 1"));
    }
    let d = stats.probes();
    let n = stats.outcomes();
    let mut sampled = DMatrix::zeros(d, n);
    for i in 0..d {
        let mut rng = ChaCha12Rng::seed_from_u64(math::derive_seed(seed, i as u64));
        let mut remaining = trials;
        // Total mass includes the implicit overflow slot when the row sums
        // below one.
        let row_sum: f64 = stats.probs.row(i).iter().sum();
        let mut rest = row_sum.max(1.0);
        for j in 0..n {
            if remaining == 0 {
                break;
            }
            let p = stats.probs[(i, j)].max(0.0);
            let q = (p / rest).clamp(0.0, 1.0);
            let count = if q >= 1.0 {
                remaining
            } else {
                Binomial::new(remaining, q)
                    .map_err(|e| Error::invalid(format!("binomial sampling: {e}")))?
                    .sample(&mut rng)
            };
            sampled[(i, j)] = count as f64 / trials as f64;
            remaining -= count;
            rest -= p;
            if rest <= 0.0 {
                rest = f64::MIN_POSITIVE;
            }
        }
    }
    StatisticsMatrix::new(sampled, Some(vec![trials; d]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use statrs::function::gamma::gamma_lr;

    fn probes(xs: &[f64]) -> ProbeEnsemble {
        ProbeEnsemble::pure(xs.to_vec()).unwrap()
    }

    #[test]
    fn vacuum_probe_row() {
        let resp = build_pure_response(&probes(&[0.0, 1.0]), 10, DEFAULT_TAIL_TOL).unwrap();
        assert_eq!(resp.entries()[(0, 0)], 1.0);
        for k in 1..=10 {
            assert_eq!(resp.entries()[(0, k)], 0.0);
        }
    }

    #[test]
    fn poisson_term_direct_value() {
        let resp = build_pure_response(&probes(&[1.0]), 20, DEFAULT_TAIL_TOL).unwrap();
        assert_abs_diff_eq!(resp.entries()[(0, 1)], 0.36787944117144233, epsilon = 1e-15);
    }

    #[test]
    fn tail_matches_poisson_cdf_oracle() {
        // Independent oracle: tail = P(K > M) = regularized lower gamma
        // gamma_lr(M+1, x).
        let m = 60;
        let resp = build_pure_response(&probes(&[4.0, 9.0, 30.0]), m, 1e-3).unwrap();
        for (i, &x) in [4.0, 9.0, 30.0].iter().enumerate() {
            let oracle = gamma_lr((m + 1) as f64, x);
            assert_abs_diff_eq!(resp.tail_mass()[i], oracle, epsilon = 1e-12);
        }
        assert!(resp.tail_mass()[0] < 1e-6, "x=4 tail below tolerance at M=60");
    }

    #[test]
    fn truncation_insufficient_error() {
        let err = build_pure_response(&probes(&[50.0]), 10, DEFAULT_TAIL_TOL).unwrap_err();
        assert!(matches!(err, Error::TruncationInsufficient { .. }));
    }

    #[test]
    fn pure_row_normalization_is_exact() {
        let resp =
            build_pure_response(&probes(&[0.0, 0.5, 2.0, 17.3, 30.0]), 60, 1e-3).unwrap();
        for i in 0..resp.probes() {
            let sum: f64 = resp.entries().row(i).iter().sum();
            assert!((sum + resp.tail_mass()[i] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tail_mass_monotone_in_intensity() {
        let xs: Vec<f64> = (1..40).map(|i| i as f64 * 0.7).collect();
        let resp = build_pure_response(&probes(&xs), 60, 1.0).unwrap();
        for w in resp.tail_mass().windows(2) {
            // roundoff-level jitter is tolerated where the true tail
            // underflows the row-sum arithmetic
            assert!(w[1] >= w[0] - 1e-14);
        }
    }

    #[test]
    fn mixed_row_against_fine_grid_oracle() {
        // Oracle: non-adaptive Simpson on a fixed fine grid, written
        // independently of the adaptive builder.
        let x = 10.0;
        let sigma_rel = 0.02;
        let m = 40;
        let ens = ProbeEnsemble::mixed(vec![x], sigma_rel).unwrap();
        let resp = build_mixed_response(&ens, m, 1e-3).unwrap();

        let desc = MixedProbeDescriptor::from_intensity(x, sigma_rel);
        let (lo, hi) = desc.support();
        let (nodes, weights) = math::simpson_rule(lo, hi, 32_768);
        let ln_fact = math::ln_factorials(m);
        let mut oracle = vec![0.0; m + 1];
        let mut norm = 0.0;
        for (&b, &w) in nodes.iter().zip(&weights) {
            let arg = (b - desc.center_amplitude) / desc.width;
            let g = w * (-0.5 * arg * arg).exp();
            norm += g;
            let pois = math::poisson_row(b * b, m, &ln_fact);
            for (o, p) in oracle.iter_mut().zip(&pois) {
                *o += g * p;
            }
        }
        for k in 0..=m {
            assert_abs_diff_eq!(resp.entries()[(0, k)], oracle[k] / norm, epsilon = 1e-8);
        }

        // The smeared row differs from the pure Poisson row by a small
        // relative amount at sigma_rel = 2%.
        let pure = build_pure_response(&probes(&[x]), m, 1e-3).unwrap();
        let diff: f64 = (0..=m)
            .map(|k| (resp.entries()[(0, k)] - pure.entries()[(0, k)]).powi(2))
            .sum::<f64>()
            .sqrt();
        let norm2: f64 = (0..=m).map(|k| pure.entries()[(0, k)].powi(2)).sum::<f64>().sqrt();
        assert!(diff / norm2 < 0.02, "relative 2-norm {} >= 2%", diff / norm2);
        assert!(diff / norm2 > 1e-5, "mixture should differ measurably from pure");
    }

    #[test]
    fn mixed_degenerates_to_pure() {
        let xs = vec![0.5, 3.0, 12.0];
        let mixed = ProbeEnsemble::mixed(xs.clone(), 1e-6).unwrap();
        let rm = build_mixed_response(&mixed, 40, 1e-3).unwrap();
        let rp = build_pure_response(&probes(&xs), 40, 1e-3).unwrap();
        let max_diff = (rm.entries() - rp.entries()).abs().max();
        assert!(max_diff < 1e-6, "pure-limit deviation {max_diff}");
    }

    #[test]
    fn mixed_vacuum_center() {
        let ens = ProbeEnsemble::mixed(vec![0.0, 1.0], 0.02).unwrap();
        let resp = build_mixed_response(&ens, 20, 1e-3).unwrap();
        assert!(resp.entries()[(0, 0)] >= 0.999);
    }

    fn perfect_counter(m: usize, n: usize) -> FockDiagonalPovm {
        let coeffs = DMatrix::from_fn(m + 1, n, |k, j| {
            if j < n - 1 {
                if k == j {
                    1.0
                } else {
                    0.0
                }
            } else if k >= n - 1 {
                1.0
            } else {
                0.0
            }
        });
        FockDiagonalPovm::new(coeffs).unwrap()
    }

    #[test]
    fn predict_identity_povm_gives_poisson() {
        let povm = perfect_counter(30, 31);
        let resp = build_pure_response(&probes(&[1.0]), 30, 1e-6).unwrap();
        let stats = predict_statistics(&povm, &resp).unwrap();
        let ln_fact = math::ln_factorials(8);
        let expect = math::poisson_row(1.0, 8, &ln_fact);
        for n in 0..=8 {
            assert_abs_diff_eq!(stats.probs()[(0, n)], expect[n], epsilon = 1e-12);
        }
    }

    #[test]
    fn predict_apd_geometric_series() {
        // θ_k^(0) = (1-η)^k makes p_no-click = e^{-ηx}; the Poisson sum
        // collapses to a closed form.
        let eta: f64 = 0.568;
        let m = 60;
        let coeffs = DMatrix::from_fn(m + 1, 2, |k, n| {
            let q = (1.0 - eta).powi(k as i32);
            if n == 0 {
                q
            } else {
                1.0 - q
            }
        });
        let povm = FockDiagonalPovm::new(coeffs).unwrap();
        for &x in &[0.3, 1.0, 4.0, 11.0] {
            let resp = build_pure_response(&probes(&[x]), m, 1e-6).unwrap();
            let stats = predict_statistics(&povm, &resp).unwrap();
            let tail = resp.tail_mass()[0];
            assert_abs_diff_eq!(stats.probs()[(0, 1)], 1.0 - (-eta * x).exp(), epsilon = 1e-7 + tail);
        }
    }

    #[test]
    fn predict_complete_povm_row_sums() {
        let povm = perfect_counter(60, 9);
        let resp = build_pure_response(&probes(&[0.5, 3.0, 20.0]), 60, 1e-3).unwrap();
        let stats = predict_statistics(&povm, &resp).unwrap();
        for i in 0..3 {
            let sum: f64 = stats.probs().row(i).iter().sum();
            assert_abs_diff_eq!(sum, 1.0 - resp.tail_mass()[i], epsilon = 1e-9);
        }
    }

    #[test]
    fn predict_brute_force_oracle_small() {
        // Direct compensated summation Σ_k e^{-x} x^k/k! θ_k^(n) with exact
        // small factorials, independent of the matrix product path.
        let m = 8;
        let povm = perfect_counter(m, 4);
        let xs = [0.3, 0.9, 1.4, 2.0];
        let resp = build_pure_response(&probes(&xs), m, 1.0).unwrap();
        let stats = predict_statistics(&povm, &resp).unwrap();
        let fact: [f64; 9] = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0, 5040.0, 40320.0];
        for (i, &x) in xs.iter().enumerate() {
            for n in 0..4 {
                let mut sum = 0.0f64;
                let mut c = 0.0f64;
                for k in 0..=m {
                    let term = (-x).exp() * x.powi(k as i32) / fact[k] * povm.coeff(k, n);
                    let y = term - c;
                    let t = sum + y;
                    c = (t - sum) - y;
                    sum = t;
                }
                assert_abs_diff_eq!(stats.probs()[(i, n)], sum, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn sampling_deterministic_outcome() {
        let probs = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
        let stats = StatisticsMatrix::new(probs, None).unwrap();
        let s = sample_statistics(&stats, 1000, 7).unwrap();
        assert_eq!(s.probs()[(0, 0)], 1.0);
        assert_eq!(s.probs()[(0, 1)], 0.0);
        assert_eq!(s.probs()[(0, 2)], 0.0);
    }

    #[test]
    fn sampling_same_seed_identical() {
        let probs = DMatrix::from_row_slice(2, 3, &[0.2, 0.5, 0.3, 0.6, 0.1, 0.3]);
        let stats = StatisticsMatrix::new(probs, None).unwrap();
        let a = sample_statistics(&stats, 5000, 99).unwrap();
        let b = sample_statistics(&stats, 5000, 99).unwrap();
        assert_eq!(a.probs(), b.probs());
        let c = sample_statistics(&stats, 5000, 100).unwrap();
        assert_ne!(a.probs(), c.probs());
    }

    #[test]
    fn sampling_clt_bound_large_trials() {
        let p = [0.15, 0.35, 0.5];
        let probs = DMatrix::from_row_slice(1, 3, &p);
        let stats = StatisticsMatrix::new(probs, None).unwrap();
        let j = 10_000_000u64;
        let s = sample_statistics(&stats, j, 12345).unwrap();
        for n in 0..3 {
            let sigma = (p[n] * (1.0 - p[n]) / j as f64).sqrt();
            let dev = (s.probs()[(0, n)] - p[n]).abs();
            assert!(dev < 4.0 * sigma, "outcome {n}: dev {dev} vs 4σ {}", 4.0 * sigma);
        }
    }

    #[test]
    fn probe_validation() {
        assert!(ProbeEnsemble::pure(vec![]).is_err());
        assert!(ProbeEnsemble::pure(vec![-0.1, 1.0]).is_err());
        assert!(ProbeEnsemble::pure(vec![1.0, 1.0]).is_err());
        assert!(ProbeEnsemble::mixed(vec![1.0], 0.0).is_err());
    }

    #[test]
    fn povm_validation() {
        let bad_pos = DMatrix::from_row_slice(2, 2, &[1.1, -0.1, 0.5, 0.5]);
        assert!(FockDiagonalPovm::new(bad_pos).is_err());
        let bad_sum = DMatrix::from_row_slice(2, 2, &[0.6, 0.6, 0.5, 0.5]);
        assert!(FockDiagonalPovm::new(bad_sum).is_err());
        let ok = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.25, 0.75]);
        assert!(FockDiagonalPovm::new(ok).is_ok());
    }
}
