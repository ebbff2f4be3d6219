//! Forward-model tour: build the detector zoo, probe each detector with
//! coherent states, and write probe/statistics/POVM files.
//!
//! Run with `cargo run -p qdt --example simulate_detectors`.

use std::path::Path;

use qdt::detectors::{apd_povm, povm_zoo, ZooCase, ZOO_TRUNCATION};
use qdt::fock::{
    build_response, predict_statistics, sample_statistics, GridSpacing, ProbeEnsemble, ProbeKind,
};
use qdt::io;

fn main() -> qdt::Result<()> {
    let out = Path::new("qdt-out/examples/simulate");

    // An APD's click probability follows 1 − e^{−ηx}; print a few points.
    let apd = apd_povm(0.568, 50)?;
    let probes = ProbeEnsemble::grid(0.1, 20.0, 40, GridSpacing::Log, ProbeKind::Pure, 0.02)?;
    let response = build_response(&probes, 50, 1e-6)?;
    let stats = predict_statistics(&apd, &response)?;
    println!("APD at 56.8% efficiency:");
    for i in [0, 10, 20, 30, 39] {
        let x = probes.intensities()[i];
        println!(
            "  x = {x:6.2}  p_no-click = {:.4}  p_click = {:.4}  (1 − e^-ηx = {:.4})",
            stats.probs()[(i, 0)],
            stats.probs()[(i, 1)],
            1.0 - (-0.568 * x).exp()
        );
    }

    // The full benchmark zoo at the standard truncation, with finite shots.
    let zoo_probes =
        ProbeEnsemble::grid(0.05, 30.0, 100, GridSpacing::Log, ProbeKind::Mixed, 0.02)?;
    let zoo_response = build_response(&zoo_probes, ZOO_TRUNCATION, 1e-6)?;
    println!("\nBenchmark POVMs (truncation {ZOO_TRUNCATION}):");
    for case in ZooCase::ALL {
        let povm = povm_zoo(case);
        let exact = predict_statistics(&povm, &zoo_response)?;
        let sampled = sample_statistics(&exact, 38_084, 42)?;
        let dir = out.join(case.name());
        io::write_file(&dir.join("probes.csv"), &io::probes_to_csv(&zoo_probes))?;
        io::write_file(
            &dir.join("statistics.csv"),
            &io::statistics_to_csv(&zoo_probes, &sampled)?,
        )?;
        io::write_file(&dir.join("povm.csv"), &io::povm_to_csv(&povm))?;
        println!(
            "  {:<26} {} outcomes, wrote {}",
            case.name(),
            povm.outcomes(),
            dir.display()
        );
    }
    Ok(())
}
