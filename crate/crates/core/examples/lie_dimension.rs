//! Dimension of the Lie algebra generated by the network Hamiltonian and a
//! detuning of spin 1, for rings and chains of increasing size.

use spinnet::control::detuning_control;
use spinnet::controllability::{lie_report, DEFAULT_RANK_TOL};
use spinnet::netmodel::{NetworkSpec, Topology};

fn main() -> spinnet::Result<()> {
    println!("{:<8}{:>4}{:>12}{:>12}{:>8}", "network", "N", "traceless", "as given", "N^2");
    for topology in [Topology::Ring, Topology::Chain] {
        for n in 3..=8 {
            let h0 = NetworkSpec::new(topology, n, 1.0, 1.0)?.hamiltonian();
            let generators = [h0.matrix().clone(), detuning_control(n, 1)?];
            let report = lie_report(&generators, format!("{topology:?} {n}"), DEFAULT_RANK_TOL)?;
            println!(
                "{:<8}{n:>4}{:>12}{:>12}{:>8}",
                format!("{topology:?}").to_lowercase(),
                report.dimension,
                report.dimension_with_identity,
                n * n
            );
        }
    }
    Ok(())
}
