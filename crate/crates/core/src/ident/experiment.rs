use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use super::likelihood::RingModel;
use crate::error::{Result, SpinError};

/// A device prepared in `|1⟩` and measured in `|1⟩` after time `t`,
/// `repetitions` times; returns how many outcomes were 1.
pub trait Experiment {
    fn horizon(&self) -> f64;
    fn query(&mut self, t: f64, repetitions: u32) -> Result<u32>;
}

/// Simulated uniform ring with binomial shot noise from a seeded stream,
/// consumed in query order.
#[derive(Clone, Debug)]
pub struct SimulatedRing {
    model: RingModel,
    coupling: f64,
    horizon: f64,
    rng: ChaCha8Rng,
}

impl SimulatedRing {
    pub fn theta(&self, t: f64) -> f64 {
        self.model.theta(self.coupling, t)
    }
}

fn check(n: usize, coupling: f64, horizon: f64) -> Result<RingModel> {
    if !coupling.is_finite() || coupling <= 0.0 {
        return Err(SpinError::InvalidCoupling(coupling));
    }
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(SpinError::InvalidHorizon(horizon));
    }
    RingModel::new(n)
}

fn check_time(t: f64, horizon: f64) -> Result<()> {
    if !(t.is_finite() && (0.0..=horizon).contains(&t)) {
        return Err(SpinError::Experiment(format!("time {t} outside [0, {horizon}]")));
    }
    Ok(())
}

pub fn simulate_experiment(n: usize, coupling: f64, horizon: f64, seed: u64) -> Result<SimulatedRing> {
    Ok(SimulatedRing {
        model: check(n, coupling, horizon)?,
        coupling,
        horizon,
        rng: ChaCha8Rng::seed_from_u64(seed),
    })
}

impl Experiment for SimulatedRing {
    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn query(&mut self, t: f64, repetitions: u32) -> Result<u32> {
        check_time(t, self.horizon)?;
        let p = self.theta(t).clamp(0.0, 1.0);
        let draw = Binomial::new(u64::from(repetitions), p).map_err(|e| SpinError::Experiment(e.to_string()))?;
        Ok(draw.sample(&mut self.rng) as u32)
    }
}

/// Noise-free ring returning `round(R θ)`.
#[derive(Clone, Debug)]
pub struct NoiselessRing {
    model: RingModel,
    coupling: f64,
    horizon: f64,
}

impl NoiselessRing {
    pub fn new(n: usize, coupling: f64, horizon: f64) -> Result<Self> {
        Ok(NoiselessRing {
            model: check(n, coupling, horizon)?,
            coupling,
            horizon,
        })
    }
}

impl Experiment for NoiselessRing {
    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn query(&mut self, t: f64, repetitions: u32) -> Result<u32> {
        check_time(t, self.horizon)?;
        let p = self.model.theta(self.coupling, t);
        Ok((f64::from(repetitions) * p).round() as u32)
    }
}
