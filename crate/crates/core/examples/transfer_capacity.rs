//! Transfer capacity bounds against what a finite scan actually reaches.

use spinnet::dynamics::spectral_decompose;
use spinnet::itc::{attainability_report, AttainabilityOptions};
use spinnet::netmodel::NetworkSpec;

fn main() -> spinnet::Result<()> {
    let cases = [
        ("ring 3, 1 -> 2", NetworkSpec::ring(3, 1.0, 0.0)?, 1, 2),
        ("chain 5, 1 -> 5", NetworkSpec::chain(5, 1.0, 1.0)?, 1, 5),
        ("ring 7, 1 -> 4", NetworkSpec::ring(7, 1.0, 1.0)?, 1, 4),
        ("chain 6 XX, 1 -> 6", NetworkSpec::chain(6, 1.0, 0.0)?, 1, 6),
    ];
    println!("{:<20}{:>10}{:>12}{:>12}{:>10}", "transfer", "bound", "scan max", "at t", "flags");
    for (name, spec, from, to) in cases {
        let spectrum = spectral_decompose(&spec.hamiltonian(), None)?;
        let report = attainability_report(&spectrum, to, from, &AttainabilityOptions::new(1000.0))?;
        println!(
            "{name:<20}{:>10.6}{:>12.6}{:>12.2}{:>10}",
            report.p_star,
            report.p_max_scan,
            report.t_peak,
            report.rational_flags.len()
        );
    }
    Ok(())
}
