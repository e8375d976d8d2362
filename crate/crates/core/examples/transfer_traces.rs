//! Uncontrolled end-to-end transfer on chains and rings.
//!
//! Prints `p(t)` for the chain of 7 (1 -> 7) and the ring of 7 (1 -> 4) on a
//! coarse grid, then the largest value seen over a long window.

use spinnet::dynamics::{max_probability_scan, probability_trace, spectral_decompose};
use spinnet::netmodel::NetworkSpec;

fn main() -> spinnet::Result<()> {
    let cases = [
        ("chain", NetworkSpec::chain(7, 1.0, 1.0)?, 7),
        ("ring", NetworkSpec::ring(7, 1.0, 0.0)?, 4),
    ];
    for (name, spec, target) in cases {
        let spectrum = spectral_decompose(&spec.hamiltonian(), None)?;
        let times: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
        let probs = probability_trace(&spectrum, target, 1, &times)?;
        println!("{name} of 7, 1 -> {target}");
        for (t, p) in times.iter().zip(&probs) {
            println!("  t = {t:4.1}  p = {p:.4}  {}", "#".repeat((p * 50.0).round() as usize));
        }
        let peak = max_probability_scan(&spectrum, target, 1, 200.0, 0.01)?;
        println!("  best over [0, 200]: p = {:.4} at t = {:.2}\n", peak.p, peak.t);
    }
    Ok(())
}
