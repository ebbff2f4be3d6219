//! Quantum detector tomography toolkit.
//!
//! Simulates photon-counting detectors in a truncated Fock space, generates
//! coherent-state probe statistics, reconstructs physical POVMs via
//! regularized constrained convex optimization, and analyzes the results
//! (Wigner functions, fidelity, sensitivity sweeps, entanglement lower
//! bounds).
//!
//! The crate is organized around the reconstruction pipeline:
//!
//! - [`fock`]: truncated-Fock-space primitives — probe ensembles, response
//!   matrices for pure and mixed coherent probes, the forward Born-rule
//!   model and finite-shot sampling.
//! - [`detectors`]: forward models of physical detectors — APD
//!   click/no-click, the time-multiplexed binning recursion, binomial loss,
//!   and the benchmark POVM zoo.
//! - [`solver`]: the reconstruction engine — a constrained quadratic
//!   program with pluggable regularizers and the noise-averaging protocol.
//! - [`analysis`]: detector Wigner functions, fidelity and relative-error
//!   metrics, smoothing-sensitivity and noise-resilience sweeps.
//! - [`entangle`]: certified lower bounds on negativity from joint click
//!   data with characterized detectors.
//! - [`io`]: CSV/JSON schemas for every artifact, plus run manifests.
//! - [`cli`]: the `qdt` command-line front end.
//!
//! See the `examples/` directory for one runnable example per capability.

pub mod analysis;
pub mod cli;
pub mod detectors;
pub mod entangle;
pub mod error;
pub mod fock;
pub mod io;
pub mod math;
pub mod solver;

pub use error::{Error, Result};
pub use fock::{
    build_mixed_response, build_pure_response, build_response, predict_statistics,
    sample_statistics, FockDiagonalPovm, GridSpacing, MixedProbeDescriptor, ProbeEnsemble,
    ProbeKind, ResponseMatrix, StatisticsMatrix,
};
pub use detectors::{
    apd_povm, apply_loss, binning_recursion, loss_matrix, lossy_tmd_povm, perfect_number_povm,
    povm_zoo, sharp_artificial_povm, tmd_povm, BinningMatrix, LossMatrix, SplitterTree, ZooCase,
};
pub use solver::{
    damping_penalty, noise_average_reconstruct, reconstruct, smoothing_penalty,
    weighted_reconstruct, ReconstructionReport, Regularizer, SolverConfig,
};
