//! Named reproduction scenarios, one per headline result. Each scenario
//! runs end to end, checks its own tolerances and reports the measured
//! numbers.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::control::{
    bias_objective, detuning_control, optimize_bias, optimize_switching, piecewise_evolve, switching_objective, BiasConfig, BiasVector,
    SwitchSchedule, SwitchingConfig, TargetTime,
};
use crate::controllability::{lie_report, DEFAULT_RANK_TOL};
use crate::dynamics::{max_probability_scan, probability_trace, propagator, spectral_decompose, transfer_probability, Spectrum};
use crate::error::{Result, SpinError};
use crate::ident::{identify, simulate_experiment, theta, IdentConfig, NoiselessRing};
use crate::itc::itc_bound;
use crate::netmodel::{excitation_index, full_space_hamiltonian, EffectiveHamiltonian, NetworkSpec, Topology};
use crate::Complex64;

mod oracle;

#[derive(Clone, Copy, Debug)]
pub struct Scenario {
    pub id: &'static str,
    pub title: &'static str,
    pub time_limit_secs: f64,
    run: fn(u64, &mut Metrics) -> Result<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub id: String,
    pub title: String,
    pub passed: bool,
    pub checks_passed: bool,
    pub elapsed_secs: f64,
    pub time_limit_secs: f64,
    pub metrics: BTreeMap<String, f64>,
    pub seed: u64,
}

type Metrics = BTreeMap<String, f64>;

pub const SCENARIOS: [Scenario; 10] = [
    Scenario {
        id: "two-spin-swap",
        title: "two-spin chain swaps perfectly at t = pi/(2J)",
        time_limit_secs: 1.0,
        run: two_spin_swap,
    },
    Scenario {
        id: "ring3-capacity",
        title: "ring of 3 transfer capacity 4/9, attained by t = pi/(3J)",
        time_limit_secs: 1.0,
        run: ring3_capacity,
    },
    Scenario {
        id: "chain5-finite-horizon",
        title: "Heisenberg chain of 5: capacity 1, about 0.9 reached within t <= 1000/J",
        time_limit_secs: 30.0,
        run: chain5_finite_horizon,
    },
    Scenario {
        id: "ring7-bound",
        title: "ring of 7: p_14 bounded strictly below 1",
        time_limit_secs: 10.0,
        run: ring7_bound,
    },
    Scenario {
        id: "lie-dimensions",
        title: "Lie algebra dimensions with a site-1 detuning: ring 7 and chain 7",
        time_limit_secs: 10.0,
        run: lie_dimensions,
    },
    Scenario {
        id: "bias-ring7",
        title: "static biases reach 0.999 on the Heisenberg ring of 7, 1->4 and 1->5",
        time_limit_secs: 300.0,
        run: bias_ring7,
    },
    Scenario {
        id: "switch-chain7",
        title: "bang-bang detuning reaches 0.99 on the Heisenberg chain of 7, 1->7",
        time_limit_secs: 300.0,
        run: switch_chain7,
    },
    Scenario {
        id: "ring-identification",
        title: "ring size and coupling recovered from 1000 binary outcomes",
        time_limit_secs: 600.0,
        run: ring_identification,
    },
    Scenario {
        id: "numerical-properties",
        title: "unitarity, gradients, full-space oracle and two-path return probability",
        time_limit_secs: 120.0,
        run: numerical_properties,
    },
    Scenario {
        id: "ring-eps-invariance",
        title: "uniform-ring probabilities do not depend on the anisotropy",
        time_limit_secs: 10.0,
        run: ring_eps_invariance,
    },
];

pub fn scenario(id: &str) -> Option<&'static Scenario> {
    SCENARIOS.iter().find(|s| s.id == id)
}

pub fn run_scenario(id: &str, seed: u64) -> Result<ScenarioOutcome> {
    let sc = scenario(id).ok_or_else(|| {
        let known: Vec<_> = SCENARIOS.iter().map(|s| s.id).collect();
        SpinError::InvalidConfig(format!("unknown scenario '{id}', expected one of {}", known.join(", ")))
    })?;
    let mut metrics = Metrics::new();
    let start = Instant::now();
    let checks_passed = (sc.run)(seed, &mut metrics)?;
    let elapsed_secs = start.elapsed().as_secs_f64();
    Ok(ScenarioOutcome {
        id: sc.id.into(),
        title: sc.title.into(),
        passed: checks_passed && elapsed_secs < sc.time_limit_secs,
        checks_passed,
        elapsed_secs,
        time_limit_secs: sc.time_limit_secs,
        metrics,
        seed,
    })
}

fn spectrum(spec: Result<NetworkSpec>) -> Result<Spectrum> {
    spectral_decompose(&spec?.hamiltonian(), None)
}

fn two_spin_swap(_seed: u64, out: &mut Metrics) -> Result<bool> {
    let s = spectrum(NetworkSpec::chain(2, 1.0, 0.0))?;
    let peak = max_probability_scan(&s, 2, 1, 3.0, 0.01)?;
    out.insert("p_peak".into(), peak.p);
    out.insert("t_peak".into(), peak.t);
    Ok((peak.p - 1.0).abs() <= 1e-9 && (peak.t - PI / 2.0).abs() <= 1e-6)
}

fn ring3_capacity(_seed: u64, out: &mut Metrics) -> Result<bool> {
    let s = spectrum(NetworkSpec::ring(3, 1.0, 0.0))?;
    let bound = itc_bound(&s, 2, 1)?;
    let peak = max_probability_scan(&s, 2, 1, PI / 3.0, 1e-3)?;
    out.insert("p_star".into(), bound);
    out.insert("p_scan_by_pi_over_3".into(), peak.p);
    Ok((bound - 4.0 / 9.0).abs() <= 1e-10 && (peak.p - bound).abs() <= 1e-6)
}

fn chain5_finite_horizon(_seed: u64, out: &mut Metrics) -> Result<bool> {
    let s = spectrum(NetworkSpec::chain(5, 1.0, 1.0))?;
    let bound = itc_bound(&s, 5, 1)?;
    let step = 2.0 * PI / (64.0 * s.spectral_range());
    let peak = max_probability_scan(&s, 5, 1, 1000.0, step)?;
    out.insert("p_star".into(), bound);
    out.insert("p_max_scan".into(), peak.p);
    out.insert("t_peak".into(), peak.t);
    Ok((bound - 1.0).abs() <= 1e-6 && (peak.p - 0.90).abs() <= 0.05)
}

fn ring7_bound(_seed: u64, out: &mut Metrics) -> Result<bool> {
    let s = spectrum(NetworkSpec::ring(7, 1.0, 1.0))?;
    let bound = itc_bound(&s, 4, 1)?;
    let samples = 100_000;
    let horizon = 1000.0;
    let times: Vec<f64> = (0..samples).map(|i| horizon * i as f64 / (samples - 1) as f64).collect();
    let worst = probability_trace(&s, 4, 1, &times)?.into_iter().fold(0.0, f64::max);
    out.insert("p_star".into(), bound);
    out.insert("p_max_sampled".into(), worst);
    Ok(bound < 1.0 - 1e-3 && worst <= bound + 1e-9)
}

fn lie_dimensions(_seed: u64, out: &mut Metrics) -> Result<bool> {
    let ring = NetworkSpec::ring(7, 1.0, 1.0)?.hamiltonian();
    let chain = NetworkSpec::chain(7, 1.0, 1.0)?.hamiltonian();
    let hc = detuning_control(7, 1)?;
    let r = lie_report(&[ring.matrix().clone(), hc.clone()], "ring 7 + sigma_z(1)", DEFAULT_RANK_TOL)?;
    let c = lie_report(&[chain.matrix().clone(), hc], "chain 7 + sigma_z(1)", DEFAULT_RANK_TOL)?;
    out.insert("ring7_dimension".into(), r.dimension as f64);
    out.insert("ring7_dimension_with_identity".into(), r.dimension_with_identity as f64);
    out.insert("chain7_dimension".into(), c.dimension as f64);
    out.insert("chain7_dimension_with_identity".into(), c.dimension_with_identity as f64);
    Ok((r.dimension == 17 || r.dimension_with_identity == 17) && c.dimension >= 48)
}

fn bias_ring7(seed: u64, out: &mut Metrics) -> Result<bool> {
    let h0 = NetworkSpec::ring(7, 1.0, 1.0)?.hamiltonian();
    let config = BiasConfig {
        seed,
        ..BiasConfig::new(TargetTime::Range { lo: 1.0, hi: 10.0 })
    };
    let mut ok = config.restarts <= 20;
    for target in [4, 5] {
        let res = optimize_bias(&h0, target, 1, &config)?;
        out.insert(format!("fidelity_1_to_{target}"), res.fidelity);
        out.insert(format!("baseline_1_to_{target}"), res.baseline_fidelity);
        ok &= res.fidelity >= 0.999;
    }
    Ok(ok)
}

fn switch_chain7(seed: u64, out: &mut Metrics) -> Result<bool> {
    let h0 = NetworkSpec::chain(7, 1.0, 1.0)?.hamiltonian();
    let config = SwitchingConfig {
        seed,
        ..Default::default()
    };
    let res = optimize_switching(&h0, 7, 1, &config)?;
    out.insert("fidelity".into(), res.fidelity);
    out.insert("baseline".into(), res.baseline_fidelity);
    if let crate::control::ControlParameters::Switching(s) = &res.parameters {
        out.insert("total_time".into(), s.total_time());
    }
    Ok(res.fidelity >= 0.99)
}

fn ring_identification(seed: u64, out: &mut Metrics) -> Result<bool> {
    let (n_true, j_true) = (6, 0.666);
    let trials = 20;
    let mut hits = 0;
    let mut errors = Vec::with_capacity(trials);
    for trial in 0..trials as u64 {
        let config = IdentConfig {
            seed: seed.wrapping_add(trial),
            ..IdentConfig::default()
        };
        let mut device = simulate_experiment(n_true, j_true, config.horizon(), config.seed)?;
        let res = identify(&mut device, &config)?;
        hits += usize::from(res.n_hat == n_true);
        errors.push((res.j_hat - j_true).abs());
    }
    errors.sort_by(f64::total_cmp);
    let median = 0.5 * (errors[trials / 2 - 1] + errors[trials / 2]);

    let noiseless_config = IdentConfig {
        repetitions: 1000,
        seed,
        ..IdentConfig::default()
    };
    let mut device = NoiselessRing::new(n_true, j_true, noiseless_config.horizon())?;
    let exact = identify(&mut device, &noiseless_config)?;
    let noiseless_error = (exact.j_hat - j_true).abs();

    out.insert("trials".into(), trials as f64);
    out.insert("size_hits".into(), hits as f64);
    out.insert("median_coupling_error".into(), median);
    out.insert("noiseless_coupling_error".into(), noiseless_error);
    out.insert("noiseless_size".into(), exact.n_hat as f64);
    Ok(hits >= 18 && median <= 1e-2 && exact.n_hat == n_true && noiseless_error <= 1e-4)
}

fn random_spec(rng: &mut ChaCha8Rng, max_n: usize) -> Result<NetworkSpec> {
    let topology = if rng.random_bool(0.5) { Topology::Chain } else { Topology::Ring };
    let lo = if topology == Topology::Ring { 3 } else { 2 };
    NetworkSpec::new(topology, rng.random_range(lo..=max_n), rng.random_range(0.3..2.0), rng.random_range(0.0..1.5))
}

fn unitarity_error(u: &DMatrix<Complex64>) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - DMatrix::<Complex64>::identity(n, n))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

fn switching_gradient_error(h0: &EffectiveHamiltonian, m: usize, n: usize, s: &SwitchSchedule) -> Result<f64> {
    let obj = switching_objective(h0, m, n, s)?;
    let on = h0.matrix() + detuning_control(h0.size(), s.control_site)? * s.strength;
    let rows = |a: &DMatrix<f64>| -> Vec<Vec<f64>> { a.row_iter().map(|r| r.iter().copied().collect()).collect() };
    let (off, on) = (rows(h0.matrix()), rows(&on));
    let segments: Vec<(bool, f64)> = s.durations.iter().enumerate().map(|(i, &tau)| (s.is_on(i), tau)).collect();
    let mut worst: f64 = 0.0;
    for i in 0..segments.len() {
        let fd = oracle::switching_fd_derivative([&off, &on], &segments, m, n, i, 1e-6);
        let g = obj.gradient[i];
        if g.abs() >= 1e-8 {
            worst = worst.max((g - fd).abs() / g.abs());
        }
    }
    Ok(worst)
}

fn bias_gradient_error(h0: &EffectiveHamiltonian, m: usize, n: usize, b: &BiasVector) -> Result<f64> {
    let obj = bias_objective(h0, m, n, b)?;
    let h: Vec<Vec<f64>> = h0.matrix().row_iter().map(|r| r.iter().copied().collect()).collect();
    let mut worst: f64 = 0.0;
    for i in 0..b.biases.len() {
        let fd = oracle::bias_fd_derivative(&h, &b.biases, b.target_time, m, n, i, 1e-6);
        let g = obj.gradient[i];
        if g.abs() >= 1e-8 {
            worst = worst.max((g - fd).abs() / g.abs());
        }
    }
    Ok(worst)
}

/// Every chain and ring with at most 5 spins, at several couplings and
/// anisotropies, against the exponential of the full `2^N` Hamiltonian.
fn full_space_error(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for topology in [Topology::Chain, Topology::Ring] {
        let first = if topology == Topology::Ring { 3 } else { 2 };
        for n in first..=5 {
            for (coupling, eps) in [(1.0, 0.0), (1.0, 1.0), (0.6, 0.4), (1.7, 1.3)] {
                let spec = NetworkSpec::new(topology, n, coupling, eps)?;
                let s = spectral_decompose(&spec.hamiltonian(), None)?;
                let full = full_space_hamiltonian(&spec)?;
                for _ in 0..20 {
                    let t: f64 = rng.random_range(0.0..10.0);
                    // Pauli XX + YY hops at 2J, so the full-space clock runs at t/2
                    let u = (&full * Complex64::new(0.0, -t / 2.0)).exp();
                    for a in 1..=n {
                        for b in 1..=n {
                            let p_full = u[(excitation_index(n, a), excitation_index(n, b))].norm_sqr();
                            worst = worst.max((p_full - transfer_probability(&s, a, b, t)?).abs());
                        }
                    }
                }
            }
        }
    }
    Ok(worst)
}

fn numerical_properties(seed: u64, out: &mut Metrics) -> Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut unitarity: f64 = 0.0;
    for case in 0..1000 {
        let spec = random_spec(&mut rng, 9)?;
        let h0 = spec.hamiltonian();
        let u = if case % 2 == 0 {
            propagator(&spectral_decompose(&h0, None)?, rng.random_range(0.0..50.0))
        } else {
            let segments = rng.random_range(1..=12);
            let schedule = SwitchSchedule {
                durations: (0..segments).map(|_| rng.random_range(0.0..3.0)).collect(),
                start_on: rng.random_bool(0.5),
                strength: rng.random_range(-4.0..4.0),
                control_site: rng.random_range(1..=spec.size()),
            };
            piecewise_evolve(&h0, &schedule)?
        };
        unitarity = unitarity.max(unitarity_error(&u));
    }

    let mut switching: f64 = 0.0;
    for _ in 0..100 {
        let spec = random_spec(&mut rng, 7)?;
        let h0 = spec.hamiltonian();
        let n = spec.size();
        let segments = rng.random_range(1..=10);
        let schedule = SwitchSchedule {
            durations: (0..segments).map(|_| rng.random_range(0.05..2.0)).collect(),
            start_on: rng.random_bool(0.5),
            strength: 2.0 * spec.coupling(),
            control_site: 1,
        };
        let (m, k) = (rng.random_range(1..=n), rng.random_range(1..=n));
        switching = switching.max(switching_gradient_error(&h0, m, k, &schedule)?);
    }

    let mut bias: f64 = 0.0;
    for _ in 0..100 {
        let topology = if rng.random_bool(0.5) { Topology::Chain } else { Topology::Ring };
        let spec = NetworkSpec::new(topology, 5, 1.0, rng.random_range(0.0..1.5))?;
        let h0 = spec.hamiltonian();
        let b = BiasVector {
            biases: (0..5).map(|_| rng.random_range(-3.0..3.0)).collect(),
            target_time: rng.random_range(0.5..6.0),
        };
        let (m, k) = (rng.random_range(1..=5), rng.random_range(1..=5));
        bias = bias.max(bias_gradient_error(&h0, m, k, &b)?);
    }

    let full_space = full_space_error(&mut rng)?;

    let mut two_path: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(3..=15);
        let coupling = rng.random_range(0.3..2.0);
        let t = rng.random_range(0.0..50.0);
        let s = spectrum(NetworkSpec::ring(n, coupling, 0.0))?;
        two_path = two_path.max((theta(n, coupling, t)? - transfer_probability(&s, 1, 1, t)?).abs());
    }

    out.insert("max_unitarity_error".into(), unitarity);
    out.insert("max_switching_gradient_rel_error".into(), switching);
    out.insert("max_bias_gradient_rel_error".into(), bias);
    out.insert("max_full_space_error".into(), full_space);
    out.insert("max_return_probability_gap".into(), two_path);
    Ok(unitarity <= 1e-10 && switching <= 1e-5 && bias <= 1e-5 && full_space <= 1e-8 && two_path <= 1e-12)
}

fn ring_eps_invariance(_seed: u64, out: &mut Metrics) -> Result<bool> {
    let times: Vec<f64> = (0..400).map(|i| 0.05 * i as f64).collect();
    let mut worst: f64 = 0.0;
    for n in 3..=9 {
        let plain = spectrum(NetworkSpec::ring(n, 1.0, 0.0))?;
        let heis = spectrum(NetworkSpec::ring(n, 1.0, 1.0))?;
        for m in 1..=n {
            for k in 1..=n {
                let a = probability_trace(&plain, m, k, &times)?;
                let b = probability_trace(&heis, m, k, &times)?;
                worst = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(worst, f64::max);
            }
        }
    }
    out.insert("max_trace_difference".into(), worst);
    Ok(worst <= 1e-10)
}
