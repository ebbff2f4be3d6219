//! Round trip: simulate the lossy 8-bin time-multiplexed detector, sample
//! finite statistics, reconstruct the POVM with smoothing regularization,
//! and compare against the generating model.
//!
//! Run with `cargo run --release -p qdt --example reconstruct_tmd`.

use std::path::Path;

use qdt::analysis::element_fidelities;
use qdt::detectors::{povm_zoo, ZooCase, ZOO_TRUNCATION};
use qdt::fock::{
    build_response, predict_statistics, sample_statistics, GridSpacing, ProbeEnsemble, ProbeKind,
};
use qdt::io;
use qdt::solver::{reconstruct, SolverConfig};

fn main() -> qdt::Result<()> {
    let out = Path::new("qdt-out/examples/reconstruct");
    let povm = povm_zoo(ZooCase::LossyTmd52);

    // mixed coherent probes across the measured intensity range
    let probes = ProbeEnsemble::grid(0.05, 70.0, 100, GridSpacing::Log, ProbeKind::Mixed, 0.02)?;
    let response = build_response(&probes, ZOO_TRUNCATION, 1.0)?;
    let exact = predict_statistics(&povm, &response)?;
    let stats = sample_statistics(&exact, 38_084, 42)?;

    let report = reconstruct(&stats, &response, &SolverConfig::smoothing(0.1))?;
    println!(
        "solved in {} iterations (converged = {}), data residual {:.3e}, penalty {:.3e}",
        report.iterations, report.converged, report.residual, report.penalty
    );

    let fids = element_fidelities(&povm, &report.povm)?;
    println!("per-element fidelity vs the generating model:");
    for (n, f) in fids.iter().enumerate() {
        println!("  {n} clicks: {f:.5}");
    }
    let min = fids.iter().cloned().fold(f64::INFINITY, f64::min);
    println!("minimum: {min:.5}");

    // the dark-count sector stays empty without being constrained to
    let mut worst = (0usize, 0usize, 0.0f64);
    for n in 0..report.povm.outcomes() {
        for k in 0..n {
            if report.povm.coeff(k, n) > worst.2 {
                worst = (k, n, report.povm.coeff(k, n));
            }
        }
    }
    println!("largest dark-count coefficient θ_{}^({}) = {:.2e}", worst.0, worst.1, worst.2);

    io::write_file(&out.join("povm_model.csv"), &io::povm_to_csv(&povm))?;
    io::write_file(&out.join("povm_reconstructed.csv"), &io::povm_to_csv(&report.povm))?;
    println!("wrote POVMs to {}", out.display());
    Ok(())
}
