use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::error::{Result, SpinError};
use crate::netmodel::Topology;
use crate::Complex64;

/// Probabilities are clamped to `[THETA_FLOOR, 1 - THETA_FLOOR]` before taking logs.
pub const THETA_FLOOR: f64 = 1e-12;

/// One measurement time: `ones` of `repetitions` binary outcomes were 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub t: f64,
    #[serde(rename = "R")]
    pub repetitions: u32,
    #[serde(rename = "A")]
    pub ones: u32,
}

impl MeasurementRecord {
    pub fn new(t: f64, repetitions: u32, ones: u32) -> Result<Self> {
        let record = MeasurementRecord { t, repetitions, ones };
        record.validate()?;
        Ok(record)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t.is_finite() && self.t >= 0.0) {
            return Err(SpinError::DomainError(format!("measurement time {} must be finite and >= 0", self.t)));
        }
        if self.repetitions == 0 || self.ones > self.repetitions {
            return Err(SpinError::DomainError(format!(
                "need 0 <= A <= R with R >= 1, got A={} R={}",
                self.ones, self.repetitions
            )));
        }
        Ok(())
    }
}

/// Return-probability model of a uniform ring, via its circulant spectrum
/// `λ_k = 2J cos(2πk/N)`.
#[derive(Clone, Debug)]
pub struct RingModel {
    n: usize,
    cosines: Vec<f64>,
}

impl RingModel {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(SpinError::InvalidSize {
                topology: Topology::Ring,
                n,
            });
        }
        let cosines = (0..n).map(|k| 2.0 * (2.0 * PI * k as f64 / n as f64).cos()).collect();
        Ok(RingModel { n, cosines })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// `|⟨1| e^{-iH(N,J)t} |1⟩|² = |(1/N) Σ_k e^{-i λ_k t}|²`.
    pub fn theta(&self, coupling: f64, t: f64) -> f64 {
        let sum: Complex64 = self
            .cosines
            .iter()
            .map(|c| Complex64::from_polar(1.0, -coupling * c * t))
            .sum();
        (sum / self.n as f64).norm_sqr().min(1.0)
    }

    pub fn log_likelihood(&self, coupling: f64, data: &[MeasurementRecord]) -> f64 {
        data.iter()
            .map(|r| binomial_log_pmf(r.repetitions, r.ones, self.theta(coupling, r.t)))
            .sum()
    }
}

pub fn theta(n: usize, coupling: f64, t: f64) -> Result<f64> {
    if !coupling.is_finite() || coupling <= 0.0 {
        return Err(SpinError::InvalidCoupling(coupling));
    }
    Ok(RingModel::new(n)?.theta(coupling, t))
}

/// `log C(R, A) + A log θ + (R - A) log(1 - θ)` with clamped `θ`.
pub fn binomial_log_pmf(repetitions: u32, ones: u32, theta: f64) -> f64 {
    let th = theta.clamp(THETA_FLOOR, 1.0 - THETA_FLOOR);
    let (r, a) = (u64::from(repetitions), u64::from(ones));
    ln_binomial(r, a) + a as f64 * th.ln() + (r - a) as f64 * (1.0 - th).ln()
}

/// Binomial log-likelihood of a ring `(N, J)` given the records; larger is
/// more likely.
pub fn log_likelihood(n: usize, coupling: f64, data: &[MeasurementRecord]) -> Result<f64> {
    if !coupling.is_finite() || coupling <= 0.0 {
        return Err(SpinError::InvalidCoupling(coupling));
    }
    for r in data {
        r.validate()?;
    }
    Ok(RingModel::new(n)?.log_likelihood(coupling, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_closed_forms() {
        assert!((theta(3, 1.0, PI / 3.0).unwrap() - 1.0 / 9.0).abs() < 1e-14);
        assert!(theta(4, 1.0, PI / 2.0).unwrap().abs() < 1e-14);
        for n in 3..12 {
            assert!((theta(n, 0.7, 0.0).unwrap() - 1.0).abs() < 1e-15);
        }
        for t in [0.1f64, 0.9, 3.3] {
            let expected = (5.0 + 4.0 * (3.0 * t).cos()) / 9.0;
            assert!((theta(3, 1.0, t).unwrap() - expected).abs() < 1e-14);
            assert!((theta(4, 1.0, t).unwrap() - t.cos().powi(4)).abs() < 1e-14);
        }
        assert!(matches!(theta(2, 1.0, 0.0), Err(SpinError::InvalidSize { .. })));
        assert!(matches!(theta(5, -1.0, 0.0), Err(SpinError::InvalidCoupling(_))));
    }

    #[test]
    fn binomial_values() {
        assert!((binomial_log_pmf(10, 5, 0.5) - (252.0f64 / 1024.0).ln()).abs() < 1e-12);
        assert!((binomial_log_pmf(10, 5, 0.5) + 1.4020).abs() < 1e-4);
        assert!(binomial_log_pmf(10, 10, 1.0).abs() < 1e-9);
        assert!(binomial_log_pmf(10, 3, 0.0).is_finite());
    }

    #[test]
    fn likelihood_examples() {
        assert_eq!(log_likelihood(5, 1.0, &[]).unwrap(), 0.0);
        // theta(4, 1, t) = cos^4 t equals 1/2 where cos t = 2^{-1/4}
        let t = 2f64.powf(-0.25).acos();
        let rec = MeasurementRecord::new(t, 10, 5).unwrap();
        assert!((log_likelihood(4, 1.0, &[rec]).unwrap() - (252.0f64 / 1024.0).ln()).abs() < 1e-10);
        let certain = MeasurementRecord::new(0.0, 10, 10).unwrap();
        assert!(log_likelihood(6, 0.8, &[certain]).unwrap().abs() < 1e-9);
    }

    #[test]
    fn record_validation() {
        assert!(MeasurementRecord::new(1.0, 10, 11).is_err());
        assert!(MeasurementRecord::new(1.0, 0, 0).is_err());
        assert!(MeasurementRecord::new(-1.0, 3, 1).is_err());
        assert!(MeasurementRecord::new(f64::NAN, 3, 1).is_err());
    }
}
