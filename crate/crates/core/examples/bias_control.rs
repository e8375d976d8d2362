//! Static on-site biases on a Heisenberg ring of 7 with the readout time
//! free in `[1, 10]`.

use spinnet::control::{optimize_bias, BiasConfig, ControlParameters, TargetTime};
use spinnet::netmodel::NetworkSpec;

fn main() -> spinnet::Result<()> {
    let h0 = NetworkSpec::ring(7, 1.0, 1.0)?.hamiltonian();
    for target in [4, 5] {
        let config = BiasConfig {
            seed: 3,
            ..BiasConfig::new(TargetTime::Range { lo: 1.0, hi: 10.0 })
        };
        let result = optimize_bias(&h0, target, 1, &config)?;
        let ControlParameters::Bias(b) = &result.parameters else {
            unreachable!()
        };
        println!("1 -> {target}: {:.6} (uncontrolled {:.6}) at T = {:.4}", result.fidelity, result.baseline_fidelity, b.target_time);
        let biases: Vec<String> = b.biases.iter().map(|c| format!("{c:+.3}")).collect();
        println!("  biases: {}", biases.join(" "));
    }
    Ok(())
}
