//! Forward models of physical photodetectors: APD click/no-click, the
//! time-multiplexed detector binning recursion, binomial loss composition,
//! and the benchmark POVMs used in the smoothing studies.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::FockDiagonalPovm;
use crate::math::binomial_column;

/// Reflectivities of the Oxford 8-bin device, one per splitter stage.
pub const MEASURED_REFLECTIVITIES: [f64; 3] = [0.5018, 0.5060, 0.4192];

/// Efficiency matching the measured 52.1% overall loss of that device.
pub const TMD_EFFICIENCY_52: f64 = 1.0 - 0.521;

/// Truncation used by every benchmark POVM.
pub const ZOO_TRUNCATION: usize = 60;

/// Binary splitter tree of a time-multiplexed detector.
///
/// `reflectivities[0]` is the splitter first hit by the pulse (the tree
/// root); deeper stages follow in order. A depth-S tree has 2^S bins.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitterTree {
    reflectivities: Vec<f64>,
}

impl SplitterTree {
    pub fn new(reflectivities: Vec<f64>) -> Result<Self> {
        if reflectivities.is_empty() {
            return Err(Error::invalid("splitter tree needs at least one stage"));
        }
        for (s, &r) in reflectivities.iter().enumerate() {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::invalid(format!(
                    "stage {s} reflectivity {r} must lie strictly inside (0,1)"
                )));
            }
        }
        Ok(Self { reflectivities })
    }

    /// All stages at R = 1/2.
    pub fn balanced(depth: usize) -> Result<Self> {
        Self::new(vec![0.5; depth.max(1)])
    }

    /// The measured 8-bin device.
    pub fn measured() -> Self {
        Self::new(MEASURED_REFLECTIVITIES.to_vec()).expect("constants are valid")
    }

    pub fn depth(&self) -> usize {
        self.reflectivities.len()
    }

    pub fn bins(&self) -> usize {
        1 << self.depth()
    }

    pub fn reflectivities(&self) -> &[f64] {
        &self.reflectivities
    }
}

/// Conditional click distribution p^N(j|k): probability of j clicks given
/// k incident photons on an N-bin multiplexer. Rows k = 0..=M.
#[derive(Debug, Clone, PartialEq)]
pub struct BinningMatrix {
    probs: DMatrix<f64>,
    bins: usize,
}

impl BinningMatrix {
    pub fn probs(&self) -> &DMatrix<f64> {
        &self.probs
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn outcomes(&self) -> usize {
        self.probs.ncols()
    }

    pub fn truncation(&self) -> usize {
        self.probs.nrows() - 1
    }
}

/// Binomial loss channel at efficiency η: L_{k',k} is the probability that
/// k incident photons leave k' survivors.
#[derive(Debug, Clone, PartialEq)]
pub struct LossMatrix {
    entries: DMatrix<f64>,
    efficiency: f64,
}

impl LossMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }
}

/// APD click/no-click POVM with a loss beamsplitter of transmittivity η:
/// θ_k^(0) = (1-η)^k, θ_k^(1) = 1 - (1-η)^k.
pub fn apd_povm(eta: f64, truncation: usize) -> Result<FockDiagonalPovm> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::invalid(format!("efficiency {eta} outside [0,1]")));
    }
    let coeffs = DMatrix::from_fn(truncation + 1, 2, |k, n| {
        let q = (1.0 - eta).powi(k as i32);
        if n == 0 {
            q
        } else {
            1.0 - q
        }
    });
    FockDiagonalPovm::new(coeffs)
}

/// Two-bin base case: p²(j|0) = δ_{j,0}; for k ≥ 1, p²(1|k) = T^k + R^k and
/// p²(2|k) = 1 - T^k - R^k. The k = 0 column rule takes precedence over the
/// one-click formula (T⁰ + R⁰ = 2 is not a probability).
fn two_bin_base(r: f64, truncation: usize) -> DMatrix<f64> {
    let t = 1.0 - r;
    let mut p = DMatrix::zeros(truncation + 1, 3);
    p[(0, 0)] = 1.0;
    for k in 1..=truncation {
        let one = t.powi(k as i32) + r.powi(k as i32);
        p[(k, 1)] = one;
        p[(k, 2)] = 1.0 - one;
    }
    p
}

/// Doubling step: couple two identical N-bin stages through a splitter of
/// reflectivity `r`, p^{2N}(j|k) = Σ_x Σ_{m+s=j} C(k,x) T^{k-x} R^x
/// p^N(s|x) p^N(m|k-x).
fn double_stage(inner: &DMatrix<f64>, r: f64, truncation: usize) -> DMatrix<f64> {
    let inner_out = inner.ncols();
    let out_cols = 2 * (inner_out - 1) + 1;
    let mut p = DMatrix::zeros(truncation + 1, out_cols);
    for k in 0..=truncation {
        let weights = binomial_column(k, r);
        for (x, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let upper = x; // photons reflected into the upper subtree
            let lower = k - x;
            for s in 0..inner_out.min(upper + 1) {
                let ps = inner[(upper, s)];
                if ps == 0.0 {
                    continue;
                }
                for m in 0..inner_out.min(lower + 1) {
                    let pm = inner[(lower, m)];
                    if pm != 0.0 {
                        p[(k, s + m)] += w * ps * pm;
                    }
                }
            }
        }
    }
    p
}

/// Click distribution of the full tree by repeated doubling, assigning the
/// stage-s reflectivity at recursion level s (the base two-bin stage uses
/// the deepest splitter, the final doubling the root).
pub fn binning_recursion(tree: &SplitterTree, truncation: usize) -> Result<BinningMatrix> {
    if truncation < 1 {
        return Err(Error::invalid("truncation must be >= 1"));
    }
    let depth = tree.depth();
    let mut probs = two_bin_base(tree.reflectivities[depth - 1], truncation);
    for level in 2..=depth {
        probs = double_stage(&probs, tree.reflectivities[depth - level], truncation);
    }
    Ok(BinningMatrix { probs, bins: tree.bins() })
}

/// Exact binomial loss matrix at efficiency η.
pub fn loss_matrix(eta: f64, truncation: usize) -> Result<LossMatrix> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::invalid(format!("efficiency {eta} outside [0,1]")));
    }
    let mut entries = DMatrix::zeros(truncation + 1, truncation + 1);
    for k in 0..=truncation {
        let col = binomial_column(k, eta);
        for (kp, &v) in col.iter().enumerate() {
            entries[(kp, k)] = v;
        }
    }
    Ok(LossMatrix { entries, efficiency: eta })
}

/// Compose a POVM with a loss channel in front of it:
/// θ'_k^(n) = Σ_{k'} L_{k',k} θ_{k'}^(n).
pub fn apply_loss(povm: &FockDiagonalPovm, loss: &LossMatrix) -> Result<FockDiagonalPovm> {
    if loss.entries.nrows() != povm.truncation() + 1 {
        return Err(Error::dim("loss matrix and POVM truncation differ"));
    }
    FockDiagonalPovm::new(loss.entries.transpose() * povm.coeffs())
}

/// Lossless TMD POVM: θ_k^(j) = p^N(j|k).
pub fn tmd_povm(tree: &SplitterTree, truncation: usize) -> Result<FockDiagonalPovm> {
    let binning = binning_recursion(tree, truncation)?;
    FockDiagonalPovm::new(binning.probs)
}

/// Lossy TMD POVM: θ_k^(j) = Σ_{k'} p^N(j|k') L_{k',k}.
pub fn lossy_tmd_povm(
    tree: &SplitterTree,
    eta: f64,
    truncation: usize,
) -> Result<FockDiagonalPovm> {
    let lossless = tmd_povm(tree, truncation)?;
    apply_loss(&lossless, &loss_matrix(eta, truncation)?)
}

/// Perfect photon counter with N outcomes: π_n = |n⟩⟨n| for n < N-1 and a
/// catch-all last element covering every remaining level.
pub fn perfect_number_povm(outcomes: usize, truncation: usize) -> Result<FockDiagonalPovm> {
    if outcomes < 2 || outcomes > truncation + 1 {
        return Err(Error::invalid("perfect counter needs 2 <= N <= M+1 outcomes"));
    }
    let coeffs = DMatrix::from_fn(truncation + 1, outcomes, |k, n| {
        if n < outcomes - 1 {
            if k == n {
                1.0
            } else {
                0.0
            }
        } else if k >= outcomes - 1 {
            1.0
        } else {
            0.0
        }
    });
    FockDiagonalPovm::new(coeffs)
}

/// Artificial 9-outcome POVM with sharp level-to-outcome assignments, used
/// to probe the over-smoothing limit.
///
/// The published element list double-counts level 7 (a full |7⟩⟨7| in π_3
/// plus half of it in π_7, which breaks completeness); both weights are set
/// to 1/2 here, mirroring the duplicated π_4 = π_5 pair.
pub fn sharp_artificial_povm(truncation: usize) -> Result<FockDiagonalPovm> {
    if truncation < 9 {
        return Err(Error::invalid("sharp artificial POVM needs truncation >= 9"));
    }
    let m = truncation;
    let mut coeffs = DMatrix::zeros(m + 1, 9);
    coeffs[(0, 0)] = 1.0;
    coeffs[(2, 0)] = 1.0;
    coeffs[(1, 1)] = 1.0;
    coeffs[(3, 1)] = 0.5;
    coeffs[(3, 2)] = 0.5;
    coeffs[(4, 2)] = 1.0;
    coeffs[(5, 2)] = 1.0;
    coeffs[(7, 3)] = 0.5;
    coeffs[(6, 4)] = 0.25;
    coeffs[(8, 4)] = 0.25;
    coeffs[(6, 5)] = 0.25;
    coeffs[(8, 5)] = 0.25;
    coeffs[(6, 6)] = 0.5;
    coeffs[(7, 7)] = 0.5;
    coeffs[(8, 8)] = 0.5;
    for k in 9..=m {
        coeffs[(k, 8)] = 1.0;
    }
    FockDiagonalPovm::new(coeffs)
}

/// Benchmark POVMs for the smoothing and sensitivity studies, all at
/// truncation [`ZOO_TRUNCATION`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZooCase {
    LosslessTmd,
    LossyTmd52,
    PerfectNumber,
    SharpArtificial,
    SharpArtificialLoss20,
}

impl ZooCase {
    pub const ALL: [ZooCase; 5] = [
        ZooCase::LosslessTmd,
        ZooCase::LossyTmd52,
        ZooCase::PerfectNumber,
        ZooCase::SharpArtificial,
        ZooCase::SharpArtificialLoss20,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ZooCase::LosslessTmd => "lossless_tmd",
            ZooCase::LossyTmd52 => "lossy_tmd_52",
            ZooCase::PerfectNumber => "perfect_number",
            ZooCase::SharpArtificial => "sharp_artificial",
            ZooCase::SharpArtificialLoss20 => "sharp_artificial_loss_20",
        }
    }
}

impl fmt::Display for ZooCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ZooCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lossless_tmd" => Ok(ZooCase::LosslessTmd),
            "lossy_tmd_52" => Ok(ZooCase::LossyTmd52),
            "perfect_number" => Ok(ZooCase::PerfectNumber),
            "sharp_artificial" => Ok(ZooCase::SharpArtificial),
            "sharp_artificial_loss_20" => Ok(ZooCase::SharpArtificialLoss20),
            other => Err(Error::invalid(format!(
                "unknown zoo case '{other}' (expected one of: lossless_tmd, lossy_tmd_52, \
                 perfect_number, sharp_artificial, sharp_artificial_loss_20)"
            ))),
        }
    }
}

/// Build one of the benchmark POVMs.
pub fn povm_zoo(case: ZooCase) -> FockDiagonalPovm {
    let m = ZOO_TRUNCATION;
    match case {
        ZooCase::LosslessTmd => tmd_povm(&SplitterTree::measured(), m),
        ZooCase::LossyTmd52 => lossy_tmd_povm(&SplitterTree::measured(), TMD_EFFICIENCY_52, m),
        ZooCase::PerfectNumber => perfect_number_povm(9, m),
        ZooCase::SharpArtificial => sharp_artificial_povm(m),
        ZooCase::SharpArtificialLoss20 => {
            let sharp = sharp_artificial_povm(m).expect("valid by construction");
            apply_loss(&sharp, &loss_matrix(0.8, m).expect("valid efficiency"))
        }
    }
    .expect("zoo POVMs are valid by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_bin_base_cases() {
        let tree = SplitterTree::balanced(1).unwrap();
        let b = binning_recursion(&tree, 10).unwrap();
        // no photons -> zero clicks
        assert_eq!(b.probs()[(0, 0)], 1.0);
        assert_eq!(b.probs()[(0, 1)], 0.0);
        // two photons, one click: both in the same bin
        assert_abs_diff_eq!(b.probs()[(2, 1)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(b.probs()[(2, 2)], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn eight_bin_two_photons_one_click() {
        let tree = SplitterTree::balanced(3).unwrap();
        let b = binning_recursion(&tree, 10).unwrap();
        // both photons land in the same of 8 equiprobable bins
        assert_abs_diff_eq!(b.probs()[(2, 1)], 0.125, epsilon = 1e-14);
    }

    /// Brute-force oracle: route every photon independently through the
    /// tree (stage 0 first), count occupied bins over all assignments.
    fn brute_force_click_dist(tree: &SplitterTree, photons: usize) -> Vec<f64> {
        let bins = tree.bins();
        let depth = tree.depth();
        let leaf_prob: Vec<f64> = (0..bins)
            .map(|bin| {
                let mut p = 1.0;
                for s in 0..depth {
                    // bit (depth-1-s) of the bin index selects the branch at
                    // stage s: 1 = reflected, 0 = transmitted
                    let bit = (bin >> (depth - 1 - s)) & 1;
                    let r = tree.reflectivities()[s];
                    p *= if bit == 1 { r } else { 1.0 - r };
                }
                p
            })
            .collect();
        let mut dist = vec![0.0; bins + 1];
        let assignments = bins.pow(photons as u32);
        for code in 0..assignments {
            let mut c = code;
            let mut occupied = vec![false; bins];
            let mut prob = 1.0;
            for _ in 0..photons {
                let bin = c % bins;
                c /= bins;
                occupied[bin] = true;
                prob *= leaf_prob[bin];
            }
            let clicks = occupied.iter().filter(|&&o| o).count();
            dist[clicks] += prob;
        }
        dist
    }

    #[test]
    fn recursion_matches_bin_assignment_enumeration() {
        let trees = [
            SplitterTree::balanced(1).unwrap(),
            SplitterTree::balanced(2).unwrap(),
            SplitterTree::balanced(3).unwrap(),
            SplitterTree::new(vec![0.3, 0.62]).unwrap(),
            SplitterTree::measured(),
        ];
        for tree in &trees {
            let b = binning_recursion(tree, 6).unwrap();
            for k in 0..=6usize {
                let oracle = brute_force_click_dist(tree, k);
                for j in 0..b.outcomes() {
                    let expect = if j < oracle.len() { oracle[j] } else { 0.0 };
                    assert_abs_diff_eq!(b.probs()[(k, j)], expect, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn binning_rows_normalized_and_zero_pattern() {
        for tree in [SplitterTree::measured(), SplitterTree::new(vec![0.7, 0.2, 0.55]).unwrap()] {
            let b = binning_recursion(&tree, 60).unwrap();
            for k in 0..=60usize {
                let sum: f64 = b.probs().row(k).iter().sum();
                assert!((sum - 1.0).abs() <= 1e-12, "row {k} sums to {sum}");
                for j in 0..b.outcomes() {
                    if j > k.min(b.bins()) {
                        assert_eq!(b.probs()[(k, j)], 0.0, "p({j}|{k}) must vanish");
                    }
                }
            }
        }
    }

    #[test]
    fn printed_matrix_qualitative_anchor() {
        // The published 6-outcome table is only a qualitative anchor (its
        // splitter parameters are not fully stated): for two photons the
        // two-click event dominates the one-click event, and no clicks
        // beyond the photon number appear.
        let b = binning_recursion(&SplitterTree::measured(), 10).unwrap();
        assert!(b.probs()[(2, 2)] > b.probs()[(2, 1)]);
        assert!(b.probs()[(2, 1)] > 0.0);
        assert_eq!(b.probs()[(2, 3)], 0.0);
    }

    #[test]
    fn loss_matrix_identity_at_unit_efficiency() {
        let l = loss_matrix(1.0, 20).unwrap();
        for k in 0..=20usize {
            for kp in 0..=20usize {
                let expect = if k == kp { 1.0 } else { 0.0 };
                assert_eq!(l.entries()[(kp, k)], expect);
            }
        }
    }

    #[test]
    fn loss_matrix_binomial_column() {
        let l = loss_matrix(0.5, 10).unwrap();
        assert_abs_diff_eq!(l.entries()[(0, 2)], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(l.entries()[(1, 2)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(l.entries()[(2, 2)], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn loss_matrix_columns_normalized_lower_triangular() {
        for &eta in &[0.1, 0.479, 0.8, 0.997] {
            let l = loss_matrix(eta, 60).unwrap();
            for k in 0..=60usize {
                let sum: f64 = l.entries().column(k).iter().sum();
                assert!((sum - 1.0).abs() <= 1e-12);
                for kp in k + 1..=60 {
                    assert_eq!(l.entries()[(kp, k)], 0.0);
                }
            }
        }
    }

    #[test]
    fn apd_povm_limits() {
        let ideal = apd_povm(1.0, 10).unwrap();
        assert_eq!(ideal.coeff(0, 0), 1.0);
        for k in 1..=10 {
            assert_eq!(ideal.coeff(k, 0), 0.0);
            assert_eq!(ideal.coeff(k, 1), 1.0);
        }
        let blind = apd_povm(0.0, 10).unwrap();
        for k in 0..=10 {
            assert_eq!(blind.coeff(k, 0), 1.0);
        }
        let lossy = apd_povm(0.568, 10).unwrap();
        assert_abs_diff_eq!(lossy.coeff(2, 0), 0.432 * 0.432, epsilon = 1e-15);
    }

    #[test]
    fn lossy_tmd_limits_and_dark_count_structure() {
        let tree = SplitterTree::measured();
        let lossless = tmd_povm(&tree, 30).unwrap();
        let unit = lossy_tmd_povm(&tree, 1.0, 30).unwrap();
        assert!((lossless.coeffs() - unit.coeffs()).abs().max() < 1e-12);

        let blind = lossy_tmd_povm(&tree, 0.0, 30).unwrap();
        for k in 0..=30 {
            assert_abs_diff_eq!(blind.coeff(k, 0), 1.0, epsilon = 1e-12);
        }

        let lossy = lossy_tmd_povm(&tree, TMD_EFFICIENCY_52, 60).unwrap();
        for j in 0..lossy.outcomes() {
            for k in 0..j.min(61) {
                assert_eq!(lossy.coeff(k, j), 0.0, "dark count at θ_{k}^({j})");
            }
        }
    }

    #[test]
    fn loss_smears_but_preserves_feasibility() {
        for &eta in &[0.2, TMD_EFFICIENCY_52, 0.8] {
            let povm = lossy_tmd_povm(&SplitterTree::measured(), eta, 60).unwrap();
            // feasibility re-checked explicitly
            for k in 0..=60usize {
                let sum: f64 = (0..povm.outcomes()).map(|n| povm.coeff(k, n)).sum();
                assert!((sum - 1.0).abs() < 1e-9);
            }
            // smoothing plausibility: once an element picks up weight at k,
            // it keeps weight at k+1
            for n in 0..povm.outcomes() {
                for k in 0..60usize {
                    if povm.coeff(k, n) > 0.0 {
                        assert!(
                            povm.coeff(k + 1, n) > 0.0,
                            "θ_{}^({n}) > 0 but θ_{}^({n}) = 0 at η={eta}",
                            k,
                            k + 1
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn perfect_number_zoo_case() {
        let povm = povm_zoo(ZooCase::PerfectNumber);
        assert_eq!(povm.outcomes(), 9);
        assert_eq!(povm.truncation(), ZOO_TRUNCATION);
        for n in 0..8 {
            for k in 0..=ZOO_TRUNCATION {
                let expect = if k == n { 1.0 } else { 0.0 };
                assert_eq!(povm.coeff(k, n), expect);
            }
        }
        for k in 8..=ZOO_TRUNCATION {
            assert_eq!(povm.coeff(k, 8), 1.0);
        }
    }

    #[test]
    fn sharp_artificial_is_complete() {
        let povm = povm_zoo(ZooCase::SharpArtificial);
        for k in 0..=ZOO_TRUNCATION {
            let sum: f64 = (0..9).map(|n| povm.coeff(k, n)).sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
        }
        assert_eq!(povm.coeff(0, 0), 1.0);
        assert_eq!(povm.coeff(2, 0), 1.0);
        assert_eq!(povm.coeff(3, 1), 0.5);
        assert_eq!(povm.coeff(8, 8), 0.5);
        assert_eq!(povm.coeff(9, 8), 1.0);
    }

    #[test]
    fn sharp_loss_spreads_weight_upward() {
        let sharp = povm_zoo(ZooCase::SharpArtificial);
        let lossy = povm_zoo(ZooCase::SharpArtificialLoss20);
        for n in 0..9 {
            for k in 0..ZOO_TRUNCATION {
                if sharp.coeff(k, n) > 0.0 {
                    assert!(
                        lossy.coeff(k + 1, n) > 0.0,
                        "loss should populate θ_{}^({n})",
                        k + 1
                    );
                }
            }
        }
    }

    #[test]
    fn zoo_case_round_trips_names() {
        for case in ZooCase::ALL {
            assert_eq!(case.name().parse::<ZooCase>().unwrap(), case);
        }
        assert!("bogus".parse::<ZooCase>().is_err());
    }
}
