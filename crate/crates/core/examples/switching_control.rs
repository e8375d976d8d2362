//! Bang-bang detuning on the first spin of a Heisenberg chain of 7,
//! steering an excitation from one end to the other.

use spinnet::control::{optimize_switching, switching_trace, ControlParameters, SwitchingConfig};
use spinnet::netmodel::NetworkSpec;

fn main() -> spinnet::Result<()> {
    let h0 = NetworkSpec::chain(7, 1.0, 1.0)?.hamiltonian();
    let config = SwitchingConfig {
        seed: 7,
        ..SwitchingConfig::default()
    };
    let result = optimize_switching(&h0, 7, 1, &config)?;
    println!("uncontrolled best: {:.6}", result.baseline_fidelity);
    println!("controlled:        {:.6} after {} iterations", result.fidelity, result.iterations);
    let ControlParameters::Switching(schedule) = &result.parameters else {
        unreachable!()
    };
    println!("total time {:.3}, {} segments", schedule.total_time(), schedule.durations.len());
    let on: Vec<String> = schedule
        .durations
        .iter()
        .enumerate()
        .map(|(i, d)| format!("{}{d:.3}", if schedule.is_on(i) { "+" } else { "-" }))
        .collect();
    println!("durations (+ on, - off): {}", on.join(" "));

    let total = schedule.total_time();
    let times: Vec<f64> = (0..=10).map(|i| total * i as f64 / 10.0).collect();
    for (t, p) in times.iter().zip(switching_trace(&h0, 7, 1, schedule, &times)?) {
        println!("  t = {t:7.3}  p = {p:.4}");
    }
    Ok(())
}
