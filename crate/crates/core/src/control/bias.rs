use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::optim::{maximize, AscentOptions, Bounds};
use super::{check_nodes, restart_rng, ControlConfig, ControlParameters, ControlResult, ObjectiveValue};
use crate::dynamics::{eigh, golden_section_max, probability_trace, transfer_probability, Spectrum};
use crate::error::{Result, SpinError};
use crate::netmodel::EffectiveHamiltonian;
use crate::Complex64;

/// Static on-site biases `diag(c_1..c_N)` added to `H0`, read out at `target_time`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasVector {
    pub biases: Vec<f64>,
    pub target_time: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetTime {
    Fixed(f64),
    /// Readout time free within `[lo, hi]`.
    Range { lo: f64, hi: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasConfig {
    pub target: TargetTime,
    /// Starting readout times for a range target.
    pub grid_points: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Initial biases are drawn from `[-scale, scale]`; `None` uses `5J`.
    pub bias_scale: Option<f64>,
    /// Biases are kept inside `[-bound, bound]`; `None` uses `100J`.
    #[serde(default)]
    pub bias_bound: Option<f64>,
    pub max_iter: usize,
}

impl BiasConfig {
    pub fn new(target: TargetTime) -> Self {
        BiasConfig {
            target,
            grid_points: 32,
            restarts: 20,
            seed: 0,
            bias_scale: None,
            bias_bound: None,
            max_iter: 2000,
        }
    }
}

/// Amplitude `⟨m|exp(-iT(H0 + diag c))|n⟩` with derivatives over each bias
/// and over `T`.
fn amplitude_with_gradient(h0: &DMatrix<f64>, m: usize, n: usize, biases: &[f64], t: f64) -> Result<(Complex64, Vec<Complex64>, Complex64)> {
    let dim = h0.nrows();
    let mut h = h0.clone();
    for (i, c) in biases.iter().enumerate() {
        h[(i, i)] += c;
    }
    let (w, v) = eigh(&h)?;
    let (mi, ni) = (m - 1, n - 1);
    let phases: Vec<Complex64> = w.iter().map(|&l| Complex64::from_polar(1.0, -l * t)).collect();

    let mut amplitude = Complex64::new(0.0, 0.0);
    let mut d_time = Complex64::new(0.0, 0.0);
    for k in 0..dim {
        let weight = v[(mi, k)] * v[(ni, k)];
        amplitude += phases[k] * weight;
        d_time += phases[k] * Complex64::new(0.0, -w[k]) * weight;
    }

    // Fréchet derivative of exp(-iTH) along e_j e_j^T in the eigenbasis:
    // divided differences (f(w_k) - f(w_l)) / (w_k - w_l), written in a form
    // that stays accurate as w_k -> w_l.
    let mut a = DMatrix::<Complex64>::zeros(dim, dim);
    for k in 0..dim {
        for l in 0..dim {
            let x = 0.5 * (w[k] - w[l]) * t;
            let sinc = if x == 0.0 { 1.0 } else { x.sin() / x };
            let divided = Complex64::from_polar(1.0, -0.5 * (w[k] + w[l]) * t) * Complex64::new(0.0, -t * sinc);
            a[(k, l)] = divided * (v[(mi, k)] * v[(ni, l)]);
        }
    }
    let gradient = (0..dim)
        .map(|j| {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..dim {
                let vjk = v[(j, k)];
                for l in 0..dim {
                    acc += a[(k, l)] * (vjk * v[(j, l)]);
                }
            }
            acc
        })
        .collect();
    Ok((amplitude, gradient, d_time))
}

fn check_biases(h0: &EffectiveHamiltonian, biases: &BiasVector) -> Result<()> {
    if biases.biases.len() != h0.size() {
        return Err(SpinError::InvalidConfig(format!(
            "expected {} biases, got {}",
            h0.size(),
            biases.biases.len()
        )));
    }
    if biases.biases.iter().any(|c| !c.is_finite()) || !biases.target_time.is_finite() {
        return Err(SpinError::InvalidConfig("biases and target time must be finite".into()));
    }
    Ok(())
}

/// `|⟨m|exp(-iT(H0 + diag c))|n⟩|²` and its gradient over the biases.
pub fn bias_objective(h0: &EffectiveHamiltonian, m: usize, n: usize, biases: &BiasVector) -> Result<ObjectiveValue> {
    check_nodes(h0, m, n)?;
    check_biases(h0, biases)?;
    let (amp, grad, _) = amplitude_with_gradient(h0.matrix(), m, n, &biases.biases, biases.target_time)?;
    Ok(ObjectiveValue {
        value: amp.norm_sqr().min(1.0),
        gradient: grad.iter().map(|d| 2.0 * (amp.conj() * d).re).collect(),
    })
}

/// `p_mn(t)` under `H0 + diag(c)` at each of `times`.
pub fn bias_trace(h0: &EffectiveHamiltonian, m: usize, n: usize, biases: &BiasVector, times: &[f64]) -> Result<Vec<f64>> {
    check_nodes(h0, m, n)?;
    check_biases(h0, biases)?;
    let mut h = h0.matrix().clone();
    for (i, c) in biases.biases.iter().enumerate() {
        h[(i, i)] += c;
    }
    probability_trace(&Spectrum::from_symmetric(&h, None)?, m, n, times)
}

struct RestartOutcome {
    index: usize,
    x: Vec<f64>,
    value: f64,
    history: Vec<f64>,
    iterations: usize,
}

/// Maximizes the biased transfer fidelity by quasi-Newton ascent from
/// random biases. With a time range, each restart starts from one of
/// `grid_points` evenly spaced readout times and the ascent moves the
/// readout time along with the biases, kept inside the range.
pub fn optimize_bias(h0: &EffectiveHamiltonian, m: usize, n: usize, config: &BiasConfig) -> Result<ControlResult> {
    check_nodes(h0, m, n)?;
    let dim = h0.size();
    let coupling = h0.spec().coupling();
    let scale = config.bias_scale.unwrap_or(5.0 * coupling);
    let matrix = h0.matrix();
    let opts = AscentOptions {
        max_iter: config.max_iter,
        ..Default::default()
    };

    let (starts, free_time): (Vec<f64>, Option<(f64, f64)>) = match config.target {
        TargetTime::Fixed(t) => {
            if !(t.is_finite() && t > 0.0) {
                return Err(SpinError::InvalidHorizon(t));
            }
            (vec![t], None)
        }
        TargetTime::Range { lo, hi } => {
            if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > lo) {
                return Err(SpinError::InvalidConfig(format!("invalid time range [{lo}, {hi}]")));
            }
            if config.grid_points == 0 {
                return Err(SpinError::InvalidConfig("time grid needs at least one point".into()));
            }
            let g = config.grid_points;
            let grid = (0..g)
                .map(|i| if g == 1 { lo } else { lo + (hi - lo) * i as f64 / (g - 1) as f64 })
                .collect();
            (grid, Some((lo, hi)))
        }
    };

    let evaluate = |x: &[f64], fixed_t: f64| -> (f64, Vec<f64>) {
        let t = if free_time.is_some() { x[dim] } else { fixed_t };
        match amplitude_with_gradient(matrix, m, n, &x[..dim], t) {
            Ok((amp, grad, d_time)) => {
                let mut g: Vec<f64> = grad.iter().map(|d| 2.0 * (amp.conj() * d).re).collect();
                if free_time.is_some() {
                    g.push(2.0 * (amp.conj() * d_time).re);
                }
                (amp.norm_sqr(), g)
            }
            Err(_) => (f64::NEG_INFINITY, vec![0.0; x.len()]),
        }
    };

    let limit = config.bias_bound.unwrap_or(100.0 * coupling);
    if !(limit.is_finite() && limit > 0.0) {
        return Err(SpinError::InvalidConfig(format!("bias bound must be positive, got {limit}")));
    }
    let scale = scale.min(limit);
    let mut bounds = Bounds {
        lower: vec![Some(-limit); dim],
        upper: vec![Some(limit); dim],
    };
    if let Some((lo, hi)) = free_time {
        bounds.lower.push(Some(lo));
        bounds.upper.push(Some(hi));
    }

    let restarts = config.restarts;
    let outcomes: Vec<RestartOutcome> = (0..starts.len() * restarts)
        .into_par_iter()
        .map(|index| {
            let t0 = starts[index / restarts.max(1)];
            let mut rng = restart_rng(config.seed, index as u64);
            let mut x0: Vec<f64> = (0..dim).map(|_| rng.random_range(-scale..=scale)).collect();
            if free_time.is_some() {
                x0.push(t0);
            }
            let out = maximize(|x| evaluate(x, t0), x0, &bounds, &opts);
            RestartOutcome {
                index,
                x: out.x,
                value: out.value,
                history: out.history,
                iterations: out.iterations,
            }
        })
        .collect();

    // uncontrolled baseline: zero biases at the best readout time
    let spectrum = Spectrum::from_symmetric(matrix, None)?;
    let baseline_time = match free_time {
        None => starts[0],
        Some((lo, hi)) => {
            let samples = 4096;
            let p = |t: f64| transfer_probability(&spectrum, m, n, t).unwrap_or(0.0);
            let step = (hi - lo) / samples as f64;
            let best = (0..=samples)
                .map(|i| lo + step * i as f64)
                .max_by(|a, b| p(*a).total_cmp(&p(*b)))
                .unwrap_or(lo);
            let refined = golden_section_max(p, (best - step).max(lo), (best + step).min(hi), 1e-10);
            if refined.1 > p(best) {
                refined.0
            } else {
                best
            }
        }
    };
    let baseline = BiasVector {
        biases: vec![0.0; dim],
        target_time: baseline_time,
    };
    let baseline_value = bias_objective(h0, m, n, &baseline)?.value;

    let best = outcomes
        .into_iter()
        .filter(|o| o.value.is_finite())
        .max_by(|a, b| a.value.total_cmp(&b.value).then(b.index.cmp(&a.index)));
    let (biases, history, iterations, winner) = match best {
        Some(o) if o.value > baseline_value => {
            let t = if free_time.is_some() { o.x[dim] } else { starts[0] };
            // a uniform shift only changes the global phase
            let (lo, hi) = o.x[..dim].iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &c| (a.min(c), b.max(c)));
            let mid = 0.5 * (lo + hi);
            (
                BiasVector {
                    biases: o.x[..dim].iter().map(|c| c - mid).collect(),
                    target_time: t,
                },
                o.history,
                o.iterations,
                Some(o.index),
            )
        }
        _ => (baseline, vec![baseline_value], 0, None),
    };
    let fidelity = bias_objective(h0, m, n, &biases)?.value;
    Ok(ControlResult {
        network: *h0.spec(),
        from: n,
        to: m,
        parameters: ControlParameters::Bias(biases),
        fidelity,
        baseline_fidelity: baseline_value,
        objective_history: history,
        iterations,
        winning_restart: winner,
        flagged: winner.is_none(),
        seed: config.seed,
        config: ControlConfig::Bias(config.clone()),
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use proptest::prelude::*;

    use super::*;
    use crate::dynamics::spectral_decompose;
    use crate::netmodel::NetworkSpec;

    fn bias(biases: Vec<f64>, target_time: f64) -> BiasVector {
        BiasVector { biases, target_time }
    }

    #[test]
    fn zero_bias_is_uncontrolled() {
        let h0 = NetworkSpec::ring(7, 1.0, 1.0).unwrap().hamiltonian();
        let s = spectral_decompose(&h0, None).unwrap();
        for t in [0.3, 2.0, 7.7] {
            let v = bias_objective(&h0, 4, 1, &bias(vec![0.0; 7], t)).unwrap().value;
            assert!((v - transfer_probability(&s, 4, 1, t).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_shift_is_a_global_phase() {
        let h0 = NetworkSpec::chain(5, 0.8, 1.0).unwrap().hamiltonian();
        let c = vec![0.3, -1.2, 0.5, 2.0, -0.7];
        let shifted: Vec<f64> = c.iter().map(|x| x + 3.7).collect();
        let a = bias_objective(&h0, 5, 2, &bias(c, 4.1)).unwrap().value;
        let b = bias_objective(&h0, 5, 2, &bias(shifted, 4.1)).unwrap().value;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn two_spin_swap_needs_no_bias() {
        let h0 = NetworkSpec::chain(2, 1.0, 0.0).unwrap().hamiltonian();
        let obj = bias_objective(&h0, 2, 1, &bias(vec![0.0, 0.0], PI / 2.0)).unwrap();
        assert!((obj.value - 1.0).abs() < 1e-12);
        assert!(obj.gradient.iter().all(|g| g.abs() < 1e-10));
        let cfg = BiasConfig {
            restarts: 3,
            ..BiasConfig::new(TargetTime::Fixed(PI / 2.0))
        };
        let res = optimize_bias(&h0, 2, 1, &cfg).unwrap();
        assert!(res.fidelity >= 1.0 - 1e-9);
    }

    #[test]
    fn rejects_bad_input() {
        let h0 = NetworkSpec::chain(3, 1.0, 0.0).unwrap().hamiltonian();
        assert!(matches!(bias_objective(&h0, 1, 2, &bias(vec![0.0; 2], 1.0)), Err(SpinError::InvalidConfig(_))));
        assert!(matches!(
            bias_objective(&h0, 1, 2, &bias(vec![0.0, f64::NAN, 0.0], 1.0)),
            Err(SpinError::InvalidConfig(_))
        ));
        assert!(matches!(
            bias_objective(&h0, 1, 4, &bias(vec![0.0; 3], 1.0)),
            Err(SpinError::NodeOutOfRange { .. })
        ));
        let range = BiasConfig::new(TargetTime::Range { lo: 3.0, hi: 1.0 });
        assert!(optimize_bias(&h0, 1, 3, &range).is_err());
        assert!(optimize_bias(&h0, 1, 3, &BiasConfig::new(TargetTime::Fixed(-1.0))).is_err());
    }

    #[test]
    fn range_optimization_is_deterministic() {
        let h0 = NetworkSpec::chain(4, 1.0, 1.0).unwrap().hamiltonian();
        let cfg = BiasConfig {
            grid_points: 4,
            restarts: 2,
            seed: 5,
            ..BiasConfig::new(TargetTime::Range { lo: 1.0, hi: 6.0 })
        };
        let a = optimize_bias(&h0, 4, 1, &cfg).unwrap();
        assert_eq!(a, optimize_bias(&h0, 4, 1, &cfg).unwrap());
        assert!(a.fidelity >= a.baseline_fidelity);
        assert!((a.reevaluate().unwrap() - a.fidelity).abs() < 1e-12);
        let ControlParameters::Bias(b) = &a.parameters else {
            panic!("expected biases");
        };
        assert!((1.0..=6.0).contains(&b.target_time));
        let trace = bias_trace(&h0, 4, 1, b, &[0.0, b.target_time]).unwrap();
        assert!(trace[0].abs() < 1e-15);
        assert!((trace[1] - a.fidelity).abs() < 1e-12);
    }

    /// Derivative of `⟨m|exp(-iT(H + s E_jj))|n⟩` at `s = 0` from the
    /// upper-right block of the exponential of a block-triangular matrix.
    fn block_derivative(h: &DMatrix<f64>, m: usize, n: usize, j: usize, t: f64) -> (Complex64, Complex64) {
        let dim = h.nrows();
        let scale = Complex64::new(0.0, -t);
        let mut big = DMatrix::<Complex64>::zeros(2 * dim, 2 * dim);
        for r in 0..dim {
            for c in 0..dim {
                big[(r, c)] = scale * h[(r, c)];
                big[(r + dim, c + dim)] = scale * h[(r, c)];
            }
        }
        big[(j, j + dim)] = scale;
        let e = big.exp();
        (e[(m - 1, n - 1)], e[(m - 1, n - 1 + dim)])
    }

    #[test]
    fn gradient_matches_block_exponential() {
        let h0 = NetworkSpec::chain(5, 1.0, 0.7).unwrap().hamiltonian();
        let c = vec![0.4, -1.1, 0.0, 2.3, 0.9];
        for (m, n, t) in [(5, 1, 3.1), (3, 1, 0.2), (2, 2, 1.7)] {
            let obj = bias_objective(&h0, m, n, &bias(c.clone(), t)).unwrap();
            let mut h = h0.matrix().clone();
            for (i, ci) in c.iter().enumerate() {
                h[(i, i)] += ci;
            }
            for j in 0..5 {
                let (amp, d) = block_derivative(&h, m, n, j, t);
                assert!((amp.norm_sqr() - obj.value).abs() < 1e-12);
                let expected = 2.0 * (amp.conj() * d).re;
                assert!((obj.gradient[j] - expected).abs() <= 1e-9 * expected.abs().max(1e-3), "{j}: {} vs {expected}", obj.gradient[j]);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn gradient_matches_exact_derivative(
            c in prop::collection::vec(-3.0f64..3.0, 5),
            t in 0.2f64..6.0,
            eps in 0.0f64..1.5,
            ring in any::<bool>(),
            m in 1usize..=5,
            k in 1usize..=5,
        ) {
            let spec = if ring { NetworkSpec::ring(5, 1.0, eps) } else { NetworkSpec::chain(5, 1.0, eps) };
            let h0 = spec.unwrap().hamiltonian();
            let obj = bias_objective(&h0, m, k, &bias(c.clone(), t)).unwrap();
            prop_assert!((0.0..=1.0).contains(&obj.value));
            let mut h = h0.matrix().clone();
            for (i, ci) in c.iter().enumerate() {
                h[(i, i)] += ci;
            }
            for j in 0..5 {
                let (amp, d) = block_derivative(&h, m, k, j, t);
                let expected = 2.0 * (amp.conj() * d).re;
                prop_assert!((obj.gradient[j] - expected).abs() <= 1e-8 * expected.abs() + 1e-12, "bias {}: {} vs {}", j, obj.gradient[j], expected);
            }
        }
    }
}
