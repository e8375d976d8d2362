//! The single-excitation model against the full 2^N-dimensional spin
//! Hamiltonian, evolved directly.

use nalgebra::DMatrix;
use spinnet::dynamics::{spectral_decompose, transfer_probability};
use spinnet::netmodel::{excitation_index, full_space_hamiltonian, NetworkSpec};
use spinnet::Complex64;

fn main() -> spinnet::Result<()> {
    let spec = NetworkSpec::chain(5, 0.8, 0.6)?;
    let full = full_space_hamiltonian(&spec)?;
    let spectrum = spectral_decompose(&spec.hamiltonian(), None)?;
    let (from, to) = (1, 5);
    println!("{:>6}{:>16}{:>16}", "t", "reduced", "full space");
    for i in 0..=8 {
        let t = i as f64 * 1.5;
        let generator: DMatrix<Complex64> = full.map(|x| x * Complex64::new(0.0, -t / 2.0));
        let u = generator.exp();
        let amp = u[(excitation_index(5, to), excitation_index(5, from))];
        let reduced = transfer_probability(&spectrum, to, from, t)?;
        println!("{t:>6.2}{reduced:>16.12}{:>16.12}", amp.norm_sqr());
    }
    Ok(())
}
