use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::optim::{maximize, AscentOptions, Bounds};
use super::{check_nodes, detuning_control, restart_rng, ControlConfig, ControlParameters, ControlResult, ObjectiveValue};
use crate::dynamics::{eigh, max_probability_scan, Spectrum};
use crate::error::{Result, SpinError};
use crate::netmodel::EffectiveHamiltonian;
use crate::Complex64;

/// Piecewise-constant schedule alternating between `H0` and
/// `H0 + strength × H_C`, with `H_C` the detuning on `control_site`.
///
/// Segment 1 acts first. With `start_on == false`, odd segments evolve under
/// `H0` and even segments under the perturbed Hamiltonian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchSchedule {
    pub durations: Vec<f64>,
    pub start_on: bool,
    pub strength: f64,
    pub control_site: usize,
}

impl SwitchSchedule {
    pub fn total_time(&self) -> f64 {
        self.durations.iter().sum()
    }

    /// Whether zero-based segment `i` has the control switched on.
    pub fn is_on(&self, i: usize) -> bool {
        (i % 2 == 1) != self.start_on
    }

    fn validate(&self) -> Result<()> {
        for (index, &value) in self.durations.iter().enumerate() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(SpinError::NegativeDuration { index, value });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchingConfig {
    pub segments: usize,
    /// Fixed total duration; `None` leaves the total free.
    pub total_time: Option<f64>,
    pub restarts: usize,
    pub seed: u64,
    /// Detuning strength; `None` uses `2J`.
    pub strength: Option<f64>,
    pub control_site: usize,
    pub start_on: bool,
    pub max_iter: usize,
}

impl Default for SwitchingConfig {
    fn default() -> Self {
        SwitchingConfig {
            segments: 40,
            total_time: None,
            restarts: 20,
            seed: 0,
            strength: None,
            control_site: 1,
            start_on: false,
            max_iter: 2000,
        }
    }
}

/// `H0` and the perturbed Hamiltonian, each with its eigendecomposition.
struct SwitchedSystem {
    hamiltonians: [DMatrix<f64>; 2],
    eigen: [(DVector<f64>, DMatrix<f64>); 2],
}

impl SwitchedSystem {
    fn new(h0: &EffectiveHamiltonian, strength: f64, control_site: usize) -> Result<Self> {
        let off = h0.matrix().clone();
        let on = &off + detuning_control(h0.size(), control_site)? * strength;
        let decompose = |m: &DMatrix<f64>| -> Result<(DVector<f64>, DMatrix<f64>)> {
            let (w, v) = eigh(m)?;
            Ok((DVector::from_vec(w), v))
        };
        Ok(SwitchedSystem {
            eigen: [decompose(&off)?, decompose(&on)?],
            hamiltonians: [off, on],
        })
    }

    fn segment_unitary(&self, on: bool, tau: f64) -> DMatrix<Complex64> {
        let (w, v) = &self.eigen[on as usize];
        let vc = v.map(|x| Complex64::new(x, 0.0));
        let phases = w.map(|l| Complex64::from_polar(1.0, -l * tau));
        let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |r, c| vc[(r, c)] * phases[c]);
        scaled * vc.transpose()
    }

    /// `exp(-i H τ) ψ` without forming the unitary.
    fn apply(&self, on: bool, tau: f64, psi: &DVector<Complex64>) -> DVector<Complex64> {
        if tau == 0.0 {
            return psi.clone();
        }
        let (w, v) = &self.eigen[on as usize];
        let mut coeffs = DVector::<Complex64>::zeros(w.len());
        for k in 0..w.len() {
            let c: Complex64 = v.column(k).iter().zip(psi.iter()).map(|(a, b)| b * *a).sum();
            coeffs[k] = c * Complex64::from_polar(1.0, -w[k] * tau);
        }
        let mut out = DVector::<Complex64>::zeros(w.len());
        for k in 0..w.len() {
            for r in 0..w.len() {
                out[r] += coeffs[k] * v[(r, k)];
            }
        }
        out
    }

    fn apply_hamiltonian(&self, on: bool, psi: &DVector<Complex64>) -> DVector<Complex64> {
        let h = &self.hamiltonians[on as usize];
        DVector::from_fn(psi.len(), |r, _| (0..psi.len()).map(|c| psi[c] * h[(r, c)]).sum())
    }

    /// Fidelity `|⟨m|U|n⟩|²` and its gradient with respect to each duration.
    fn objective(&self, schedule_on: impl Fn(usize) -> bool, durations: &[f64], m: usize, n: usize) -> ObjectiveValue {
        let dim = self.hamiltonians[0].nrows();
        let mut psi = DVector::<Complex64>::zeros(dim);
        psi[n - 1] = Complex64::new(1.0, 0.0);
        let mut forward = Vec::with_capacity(durations.len());
        for (i, &tau) in durations.iter().enumerate() {
            psi = self.apply(schedule_on(i), tau, &psi);
            forward.push(psi.clone());
        }
        let amplitude = psi[m - 1];

        // chi holds ⟨m| U_L ... U_{i+1}; the segment unitaries are complex
        // symmetric, so the row-vector product is another forward application.
        let mut chi = DVector::<Complex64>::zeros(dim);
        chi[m - 1] = Complex64::new(1.0, 0.0);
        let mut gradient = vec![0.0; durations.len()];
        for i in (0..durations.len()).rev() {
            let on = schedule_on(i);
            let h_psi = self.apply_hamiltonian(on, &forward[i]);
            let d_amp: Complex64 = chi.iter().zip(h_psi.iter()).map(|(a, b)| a * b).sum::<Complex64>() * Complex64::new(0.0, -1.0);
            gradient[i] = 2.0 * (amplitude.conj() * d_amp).re;
            chi = self.apply(on, durations[i], &chi);
        }
        ObjectiveValue {
            value: amplitude.norm_sqr().min(1.0),
            gradient,
        }
    }
}

/// `U = Π_i exp(-i H_i τ_i)` applied right to left, segment 1 first.
pub fn piecewise_evolve(h0: &EffectiveHamiltonian, schedule: &SwitchSchedule) -> Result<DMatrix<Complex64>> {
    schedule.validate()?;
    let system = SwitchedSystem::new(h0, schedule.strength, schedule.control_site)?;
    let n = h0.size();
    let mut u = DMatrix::<Complex64>::identity(n, n);
    for (i, &tau) in schedule.durations.iter().enumerate() {
        u = system.segment_unitary(schedule.is_on(i), tau) * u;
    }
    Ok(u)
}

/// Transfer fidelity `|⟨m|U|n⟩|²` with its analytic gradient over durations.
pub fn switching_objective(h0: &EffectiveHamiltonian, m: usize, n: usize, schedule: &SwitchSchedule) -> Result<ObjectiveValue> {
    check_nodes(h0, m, n)?;
    schedule.validate()?;
    let system = SwitchedSystem::new(h0, schedule.strength, schedule.control_site)?;
    Ok(system.objective(|i| schedule.is_on(i), &schedule.durations, m, n))
}

/// `p_mn(t)` along the controlled evolution at each of `times`; past the
/// end of the schedule the drift `H0` continues.
pub fn switching_trace(h0: &EffectiveHamiltonian, m: usize, n: usize, schedule: &SwitchSchedule, times: &[f64]) -> Result<Vec<f64>> {
    check_nodes(h0, m, n)?;
    schedule.validate()?;
    let system = SwitchedSystem::new(h0, schedule.strength, schedule.control_site)?;
    times
        .iter()
        .map(|&t| {
            if !(t.is_finite() && t >= 0.0) {
                return Err(SpinError::InvalidHorizon(t));
            }
            let mut psi = DVector::<Complex64>::zeros(h0.size());
            psi[n - 1] = Complex64::new(1.0, 0.0);
            let mut left = t;
            for (i, &tau) in schedule.durations.iter().enumerate() {
                if left <= 0.0 {
                    break;
                }
                psi = system.apply(schedule.is_on(i), tau.min(left), &psi);
                left -= tau;
            }
            if left > 0.0 {
                psi = system.apply(false, left, &psi);
            }
            Ok(psi[m - 1].norm_sqr().min(1.0))
        })
        .collect()
}

struct RestartOutcome {
    restart: usize,
    durations: Vec<f64>,
    value: f64,
    history: Vec<f64>,
    iterations: usize,
}

/// Durations `T x / Σx`, or `x` itself when the total is free.
fn scale_durations(x: &[f64], total: Option<f64>) -> Vec<f64> {
    match total {
        None => x.to_vec(),
        Some(t) => {
            let sum: f64 = x.iter().sum();
            if sum > 0.0 {
                x.iter().map(|v| t * v / sum).collect()
            } else {
                vec![t / x.len() as f64; x.len()]
            }
        }
    }
}

/// Optimizes segment durations by projected quasi-Newton ascent from
/// `config.restarts` random schedules and keeps the best, never doing worse
/// than waiting under `H0` alone.
pub fn optimize_switching(h0: &EffectiveHamiltonian, m: usize, n: usize, config: &SwitchingConfig) -> Result<ControlResult> {
    check_nodes(h0, m, n)?;
    if config.segments == 0 {
        return Err(SpinError::InvalidConfig("switching needs at least one segment".into()));
    }
    if let Some(t) = config.total_time {
        if !(t.is_finite() && t > 0.0) {
            return Err(SpinError::InvalidHorizon(t));
        }
    }
    let coupling = h0.spec().coupling();
    let strength = config.strength.unwrap_or(2.0 * coupling);
    let system = SwitchedSystem::new(h0, strength, config.control_site)?;
    let segments = config.segments;
    let start_on = config.start_on;
    let is_on = move |i: usize| (i % 2 == 1) != start_on;
    let total = config.total_time;

    let evaluate = |x: &[f64]| -> (f64, Vec<f64>) {
        let tau = scale_durations(x, total);
        let obj = system.objective(is_on, &tau, m, n);
        let gradient = match total {
            None => obj.gradient,
            Some(t) => {
                let sum: f64 = x.iter().sum();
                if sum <= 0.0 {
                    return (obj.value, vec![0.0; x.len()]);
                }
                let mean: f64 = obj.gradient.iter().zip(x).map(|(g, xi)| g * xi).sum::<f64>() / sum;
                obj.gradient.iter().map(|g| t / sum * (g - mean)).collect()
            }
        };
        (obj.value, gradient)
    };

    let opts = AscentOptions {
        max_iter: config.max_iter,
        ..Default::default()
    };
    let bounds = Bounds::non_negative(segments);
    let max_initial = 2.0 * PI / coupling;
    let outcomes: Vec<RestartOutcome> = (0..config.restarts)
        .into_par_iter()
        .map(|restart| {
            let mut rng = restart_rng(config.seed, restart as u64);
            let x0: Vec<f64> = (0..segments).map(|_| rng.random_range(0.0..max_initial)).collect();
            let out = maximize(evaluate, x0, &bounds, &opts);
            RestartOutcome {
                restart,
                durations: scale_durations(&out.x, total),
                value: out.value,
                history: out.history,
                iterations: out.iterations,
            }
        })
        .collect();

    // uncontrolled baseline: all time spent in the first H0 segment
    let horizon = total.unwrap_or(segments as f64 * PI / coupling);
    let mut baseline = vec![0.0; segments];
    if let Some(first_off) = (0..segments).find(|&i| !is_on(i)) {
        baseline[first_off] = match total {
            Some(t) => t,
            None => {
                let spectrum = Spectrum::from_symmetric(h0.matrix(), None)?;
                let step = (2.0 * PI / (64.0 * spectrum.spectral_range().max(1e-12))).min(horizon / 2.0);
                max_probability_scan(&spectrum, m, n, horizon, step)?.t
            }
        };
    }
    let baseline_value = system.objective(is_on, &baseline, m, n).value;

    let best = outcomes
        .into_iter()
        .filter(|o| o.value.is_finite())
        .max_by(|a, b| a.value.total_cmp(&b.value).then(b.restart.cmp(&a.restart)));
    let (durations, history, iterations, winner) = match best {
        Some(o) if o.value > baseline_value => (o.durations, o.history, o.iterations, Some(o.restart)),
        _ => (baseline, vec![baseline_value], 0, None),
    };
    let schedule = SwitchSchedule {
        durations,
        start_on,
        strength,
        control_site: config.control_site,
    };
    let fidelity = system.objective(is_on, &schedule.durations, m, n).value;
    Ok(ControlResult {
        network: *h0.spec(),
        from: n,
        to: m,
        parameters: ControlParameters::Switching(schedule),
        fidelity,
        baseline_fidelity: baseline_value,
        objective_history: history,
        iterations,
        winning_restart: winner,
        flagged: winner.is_none(),
        seed: config.seed,
        config: ControlConfig::Switching(config.clone()),
    })
}
