//! File formats: CSV and JSON schemas for probes, statistics, POVMs, sweep
//! tables, Wigner profiles, joint click data and reports, plus the run
//! manifest that makes every command replayable.
//!
//! CSV payloads carry full round-trip precision (17 significant digits);
//! JSON round-trips f64 bit-exactly through serde_json.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::analysis::{SweepTable, WignerRadialProfile};
use crate::entangle::{JointData, NegativityBound};
use crate::error::{Error, Result};
use crate::fock::{FockDiagonalPovm, ProbeEnsemble, ProbeKind, StatisticsMatrix};
use crate::solver::ReconstructionReport;

/// Render an f64 with 17 significant digits (exact round trip).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(field: &str, row: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("row {row}: '{field}' is not a number")))
}

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent.display().to_string(), e))?;
        }
    }
    fs::write(path, content).map_err(|e| Error::io(path.display().to_string(), e))
}

/// SHA-256 digest of a file, hex-encoded.
pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hex_string(&hasher.finalize()))
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/* Probes ******************************************************************/

pub fn probes_to_csv(probes: &ProbeEnsemble) -> String {
    let mut out = String::from("x\n");
    for &x in probes.intensities() {
        out.push_str(&fmt_f64(x));
        out.push('\n');
    }
    out
}

/// Parse a probes CSV (header `x`). Kind and noise width are not part of
/// the CSV schema; the caller supplies them.
pub fn probes_from_csv(content: &str, kind: ProbeKind, sigma_rel: f64) -> Result<ProbeEnsemble> {
    let mut lines = content.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Parse("empty probes file".into()))?;
    if header.trim() != "x" {
        return Err(Error::Parse(format!("row 1: expected header 'x', got '{header}'")));
    }
    let mut xs = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        xs.push(parse_f64(line, i + 1)?);
    }
    ProbeEnsemble::new(xs, kind, sigma_rel)
}

/* Statistics **************************************************************/

pub fn statistics_to_csv(probes: &ProbeEnsemble, stats: &StatisticsMatrix) -> Result<String> {
    if probes.len() != stats.probes() {
        return Err(Error::dim("probe count != statistics rows"));
    }
    let n = stats.outcomes();
    let mut out = String::from("x");
    for j in 0..n {
        out.push_str(&format!(",p{j}"));
    }
    out.push('\n');
    for (i, &x) in probes.intensities().iter().enumerate() {
        out.push_str(&fmt_f64(x));
        for j in 0..n {
            out.push(',');
            out.push_str(&fmt_f64(stats.probs()[(i, j)]));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Parse a statistics CSV (header `x,p0,...`). Returns the intensity column
/// and the probability matrix.
pub fn statistics_from_csv(content: &str) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let mut lines = content.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Parse("empty statistics file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 2 || cols[0].trim() != "x" {
        return Err(Error::Parse(format!(
            "row 1: expected header 'x,p0,...', got '{header}'"
        )));
    }
    for (j, c) in cols[1..].iter().enumerate() {
        if c.trim() != format!("p{j}") {
            return Err(Error::Parse(format!("row 1: expected column 'p{j}', got '{c}'")));
        }
    }
    let n = cols.len() - 1;
    let mut xs = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n + 1 {
            return Err(Error::Parse(format!(
                "row {}: expected {} fields, found {}",
                i + 1,
                n + 1,
                fields.len()
            )));
        }
        xs.push(parse_f64(fields[0], i + 1)?);
        let row: Result<Vec<f64>> =
            fields[1..].iter().map(|f| parse_f64(f, i + 1)).collect();
        rows.push(row?);
    }
    if rows.is_empty() {
        return Err(Error::Parse("statistics file has no data rows".into()));
    }
    let probs = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    Ok((xs, probs))
}

/// Self-contained statistics document: metadata plus payload, bit-exact
/// through JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticsDocument {
    pub truncation: Option<usize>,
    pub outcomes: usize,
    pub kind: ProbeKind,
    pub sigma_rel: f64,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub intensities: Vec<f64>,
    pub probabilities: Vec<Vec<f64>>,
}

impl StatisticsDocument {
    pub fn new(
        probes: &ProbeEnsemble,
        stats: &StatisticsMatrix,
        truncation: Option<usize>,
        seed: Option<u64>,
    ) -> Result<Self> {
        if probes.len() != stats.probes() {
            return Err(Error::dim("probe count != statistics rows"));
        }
        let probabilities = (0..stats.probes())
            .map(|i| (0..stats.outcomes()).map(|j| stats.probs()[(i, j)]).collect())
            .collect();
        Ok(Self {
            truncation,
            outcomes: stats.outcomes(),
            kind: probes.kind(),
            sigma_rel: probes.sigma_rel(),
            trials: stats.trials().map(|t| t[0]),
            seed,
            intensities: probes.intensities().to_vec(),
            probabilities,
        })
    }

    pub fn probes(&self) -> Result<ProbeEnsemble> {
        ProbeEnsemble::new(self.intensities.clone(), self.kind, self.sigma_rel)
    }

    pub fn statistics(&self) -> Result<StatisticsMatrix> {
        let d = self.probabilities.len();
        if d == 0 {
            return Err(Error::Parse("statistics document has no rows".into()));
        }
        for (i, row) in self.probabilities.iter().enumerate() {
            if row.len() != self.outcomes {
                return Err(Error::Parse(format!(
                    "probability row {i} has {} entries, expected {}",
                    row.len(),
                    self.outcomes
                )));
            }
        }
        let probs = DMatrix::from_fn(d, self.outcomes, |i, j| self.probabilities[i][j]);
        let trials = self.trials.map(|j| vec![j; d]);
        StatisticsMatrix::new(probs, trials)
    }
}

/* POVMs *******************************************************************/

pub fn povm_to_csv(povm: &FockDiagonalPovm) -> String {
    let n = povm.outcomes();
    let mut out = String::from("k");
    for j in 0..n {
        out.push_str(&format!(",theta{j}"));
    }
    out.push('\n');
    for k in 0..=povm.truncation() {
        out.push_str(&k.to_string());
        for j in 0..n {
            out.push(',');
            out.push_str(&fmt_f64(povm.coeff(k, j)));
        }
        out.push('\n');
    }
    out
}

pub fn povm_from_csv(content: &str) -> Result<FockDiagonalPovm> {
    let mut lines = content.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Parse("empty POVM file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 2 || cols[0].trim() != "k" {
        return Err(Error::Parse(format!(
            "row 1: expected header 'k,theta0,...', got '{header}'"
        )));
    }
    for (j, c) in cols[1..].iter().enumerate() {
        if c.trim() != format!("theta{j}") {
            return Err(Error::Parse(format!("row 1: expected column 'theta{j}', got '{c}'")));
        }
    }
    let n = cols.len() - 1;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n + 1 {
            return Err(Error::Parse(format!(
                "row {}: expected {} fields, found {}",
                i + 1,
                n + 1,
                fields.len()
            )));
        }
        let k: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("row {}: bad Fock index '{}'", i + 1, fields[0])))?;
        if k != rows.len() {
            return Err(Error::Parse(format!(
                "row {}: Fock levels must be consecutive (expected {}, got {k})",
                i + 1,
                rows.len()
            )));
        }
        let row: Result<Vec<f64>> =
            fields[1..].iter().map(|f| parse_f64(f, i + 1)).collect();
        rows.push(row?);
    }
    if rows.len() < 2 {
        return Err(Error::Parse("POVM file needs at least 2 Fock levels".into()));
    }
    FockDiagonalPovm::new(DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PovmDocument {
    pub truncation: usize,
    pub outcomes: usize,
    /// Row-major coefficients: coeffs[k][n] = θ_k^(n).
    pub coeffs: Vec<Vec<f64>>,
}

impl PovmDocument {
    pub fn new(povm: &FockDiagonalPovm) -> Self {
        let coeffs = (0..=povm.truncation())
            .map(|k| (0..povm.outcomes()).map(|n| povm.coeff(k, n)).collect())
            .collect();
        Self { truncation: povm.truncation(), outcomes: povm.outcomes(), coeffs }
    }

    pub fn povm(&self) -> Result<FockDiagonalPovm> {
        if self.coeffs.len() != self.truncation + 1 {
            return Err(Error::Parse("POVM document row count != truncation + 1".into()));
        }
        for (k, row) in self.coeffs.iter().enumerate() {
            if row.len() != self.outcomes {
                return Err(Error::Parse(format!(
                    "POVM document row {k} has {} entries, expected {}",
                    row.len(),
                    self.outcomes
                )));
            }
        }
        FockDiagonalPovm::new(DMatrix::from_fn(self.truncation + 1, self.outcomes, |k, n| {
            self.coeffs[k][n]
        }))
    }
}

/* Reports *****************************************************************/

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionDocument {
    pub povm: PovmDocument,
    pub residual: f64,
    pub penalty: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub runs: Vec<PovmDocument>,
}

impl ReconstructionDocument {
    pub fn new(report: &ReconstructionReport) -> Self {
        Self {
            povm: PovmDocument::new(&report.povm),
            residual: report.residual,
            penalty: report.penalty,
            iterations: report.iterations,
            kkt_residual: report.kkt_residual,
            converged: report.converged,
            primal_residual: report.primal_residual,
            dual_residual: report.dual_residual,
            warnings: report.warnings.clone(),
            runs: report.runs.iter().map(PovmDocument::new).collect(),
        }
    }
}

/* Sweep tables ************************************************************/

pub fn sweep_to_csv(table: &SweepTable) -> String {
    let mut out = String::from("axis,repeat,metric,seed\n");
    for cell in &table.cells {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(cell.axis),
            cell.repeat,
            fmt_f64(cell.metric),
            cell.seed
        ));
    }
    out
}

/* Wigner profiles *********************************************************/

pub fn profile_to_csv(profile: &WignerRadialProfile) -> String {
    let mut out = String::from("r,W\n");
    for (r, w) in profile.radii().iter().zip(profile.values()) {
        out.push_str(&format!("{},{}\n", fmt_f64(*r), fmt_f64(*w)));
    }
    out
}

/* Joint click data ********************************************************/

type MatrixJson = Vec<Vec<[f64; 2]>>;

fn complex_to_json(m: &DMatrix<C64>) -> MatrixJson {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn complex_from_json(rows: &MatrixJson, what: &str) -> Result<DMatrix<C64>> {
    let nr = rows.len();
    if nr == 0 {
        return Err(Error::Parse(format!("{what}: empty matrix")));
    }
    let nc = rows[0].len();
    if rows.iter().any(|r| r.len() != nc) {
        return Err(Error::Parse(format!("{what}: ragged matrix rows")));
    }
    Ok(DMatrix::from_fn(nr, nc, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

/// JSON schema for [`JointData`]: dims, per-setting element lists (row-major
/// real/imaginary pairs) and per-setting-pair data blocks keyed "k,l".
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JointDataDocument {
    pub dims: [usize; 2],
    #[serde(rename = "settings_A")]
    pub settings_a: Vec<Vec<MatrixJson>>,
    #[serde(rename = "settings_B")]
    pub settings_b: Vec<Vec<MatrixJson>>,
    pub data: BTreeMap<String, Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub unbounded_quadrature: bool,
    /// Allowed deviation of each data block's total from one.
    #[serde(default = "default_stat_tol")]
    pub stat_tol: f64,
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn default_stat_tol() -> f64 {
    1e-6
}

impl JointDataDocument {
    pub fn new(joint: &JointData) -> Self {
        let settings_a =
            joint.settings_a().iter().map(|s| s.iter().map(complex_to_json).collect()).collect();
        let settings_b =
            joint.settings_b().iter().map(|s| s.iter().map(complex_to_json).collect()).collect();
        let data = joint
            .data()
            .iter()
            .map(|(&(k, l), block)| {
                let rows = (0..block.nrows())
                    .map(|i| (0..block.ncols()).map(|j| block[(i, j)]).collect())
                    .collect();
                (format!("{k},{l}"), rows)
            })
            .collect();
        Self {
            dims: [joint.dims().0, joint.dims().1],
            settings_a,
            settings_b,
            data,
            unbounded_quadrature: joint.unbounded_quadrature(),
            stat_tol: default_stat_tol(),
        }
    }

    pub fn joint_data(&self) -> Result<JointData> {
        let settings_a: Result<Vec<Vec<DMatrix<C64>>>> = self
            .settings_a
            .iter()
            .enumerate()
            .map(|(k, s)| {
                s.iter().map(|m| complex_from_json(m, &format!("settings_A[{k}]"))).collect()
            })
            .collect();
        let settings_b: Result<Vec<Vec<DMatrix<C64>>>> = self
            .settings_b
            .iter()
            .enumerate()
            .map(|(l, s)| {
                s.iter().map(|m| complex_from_json(m, &format!("settings_B[{l}]"))).collect()
            })
            .collect();
        let mut data = BTreeMap::new();
        for (key, rows) in &self.data {
            let parts: Vec<&str> = key.split(',').collect();
            if parts.len() != 2 {
                return Err(Error::Parse(format!("data key '{key}' is not of the form 'k,l'")));
            }
            let k: usize = parts[0]
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("data key '{key}': bad setting index")))?;
            let l: usize = parts[1]
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("data key '{key}': bad setting index")))?;
            let nr = rows.len();
            if nr == 0 || rows.iter().any(|r| r.len() != rows[0].len()) {
                return Err(Error::Parse(format!("data block '{key}' is empty or ragged")));
            }
            let block = DMatrix::from_fn(nr, rows[0].len(), |i, j| rows[i][j]);
            data.insert((k, l), block);
        }
        let joint = JointData::new(
            (self.dims[0], self.dims[1]),
            settings_a?,
            settings_b?,
            data,
            self.stat_tol,
        )?;
        Ok(joint.with_unbounded_flag(self.unbounded_quadrature))
    }
}

/// Bound report JSON: the certified value, dual variables, witness matrix
/// and its spectrum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundDocument {
    pub bound: f64,
    pub beta: f64,
    pub alpha: Vec<AlphaEntry>,
    pub witness: MatrixJson,
    pub eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphaEntry {
    pub setting_a: usize,
    pub setting_b: usize,
    pub outcome_a: usize,
    pub outcome_b: usize,
    pub value: f64,
}

impl BoundDocument {
    pub fn new(bound: &NegativityBound) -> Self {
        let alpha = bound
            .alpha
            .iter()
            .zip(&bound.alpha_index)
            .map(|(&value, &(k, l, n, m))| AlphaEntry {
                setting_a: k,
                setting_b: l,
                outcome_a: n,
                outcome_b: m,
                value,
            })
            .collect();
        Self {
            bound: bound.bound,
            beta: bound.beta,
            alpha,
            witness: complex_to_json(&bound.witness),
            eigenvalues: bound.eigenvalues.clone(),
        }
    }
}

/* Run manifest ************************************************************/

/// Record of one CLI invocation: resolved configuration, input and output
/// digests, seed and wall-clock duration. Identical manifests (their
/// digests in particular) imply bit-identical outputs; timestamps live only
/// here, never in payloads.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub config: Value,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub duration_ms: u64,
}

impl RunManifest {
    pub fn new(command: &str, seed: Option<u64>, config: Value) -> Self {
        Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            duration_ms: 0,
        }
    }

    pub fn record_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    pub fn record_output(&mut self, path: &Path) -> Result<()> {
        self.outputs.insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    /// Write the manifest next to `primary_output` as `<name>.manifest.json`.
    pub fn write_beside(&self, primary_output: &Path) -> Result<()> {
        let file = primary_output.with_extension(format!(
            "{}manifest.json",
            primary_output
                .extension()
                .map(|e| format!("{}.", e.to_string_lossy()))
                .unwrap_or_default()
        ));
        write_file(&file, &to_json_pretty(self)?)
    }
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::Parse(format!("json encode: {e}")))
}

pub fn from_json<T: for<'de> Deserialize<'de>>(content: &str) -> Result<T> {
    serde_json::from_str(content).map_err(|e| Error::Parse(format!("json decode: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detectors::{povm_zoo, ZooCase};
    use crate::fock::{build_pure_response, predict_statistics, sample_statistics};

    fn sample_setup() -> (ProbeEnsemble, StatisticsMatrix) {
        let probes = ProbeEnsemble::pure(vec![0.1, 0.7, 1.9, 4.2]).unwrap();
        let povm = crate::detectors::apd_povm(0.73, 25).unwrap();
        let resp = build_pure_response(&probes, 25, 1e-3).unwrap();
        let exact = predict_statistics(&povm, &resp).unwrap();
        let stats = sample_statistics(&exact, 10_000, 5).unwrap();
        (probes, stats)
    }

    #[test]
    fn statistics_csv_round_trip() {
        let (probes, stats) = sample_setup();
        let csv = statistics_to_csv(&probes, &stats).unwrap();
        let (xs, probs) = statistics_from_csv(&csv).unwrap();
        for (a, b) in xs.iter().zip(probes.intensities()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((probs - stats.probs()).abs().max() < 1e-12);
    }

    #[test]
    fn statistics_json_round_trip_is_bit_exact() {
        let (probes, stats) = sample_setup();
        let doc = StatisticsDocument::new(&probes, &stats, Some(25), Some(5)).unwrap();
        let json = to_json_pretty(&doc).unwrap();
        let back: StatisticsDocument = from_json(&json).unwrap();
        assert_eq!(doc, back);
        assert_eq!(back.statistics().unwrap().probs(), stats.probs());
        assert_eq!(back.probes().unwrap(), probes);
    }

    #[test]
    fn povm_csv_round_trip() {
        let povm = povm_zoo(ZooCase::SharpArtificial);
        let csv = povm_to_csv(&povm);
        let back = povm_from_csv(&csv).unwrap();
        assert!((back.coeffs() - povm.coeffs()).abs().max() < 1e-12);
    }

    #[test]
    fn corrupted_csv_reports_row_number() {
        let (probes, stats) = sample_setup();
        let mut csv = statistics_to_csv(&probes, &stats).unwrap();
        csv = csv.replace(&fmt_f64(probes.intensities()[2]), "not-a-number");
        let err = statistics_from_csv(&csv).unwrap_err();
        match err {
            Error::Parse(msg) => assert!(msg.contains("row 4"), "message: {msg}"),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn joint_data_json_round_trip() {
        let joint = crate::entangle::fixtures::pauli_joint_data(
            &crate::entangle::fixtures::werner_state(0.8),
        );
        let doc = JointDataDocument::new(&joint);
        let json = to_json_pretty(&doc).unwrap();
        let back: JointDataDocument = from_json(&json).unwrap();
        let joint_back = back.joint_data().unwrap();
        assert_eq!(joint, joint_back);
    }

    #[test]
    fn fmt_f64_exact_round_trip() {
        for &v in &[
            0.0,
            1.0,
            std::f64::consts::PI,
            2.2250738585072014e-308,
            0.36787944117144233,
            1.0 - 1e-16,
        ] {
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(v, back, "value {v} via '{s}'");
        }
    }
}
