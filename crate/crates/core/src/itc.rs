//! Information transfer capacity and attainability.
//!
//! The capacity `p*_mn = (Σ_k |⟨m|Π_k|n⟩|)²` bounds `p_mn(t)` for every `t`.
//! The bound is reached iff a time exists where every active eigenspace
//! phase `exp(-i λ_k t)` equals `s_k` times a common phase, with
//! `s_k = sgn⟨m|Π_k|n⟩`. Equivalently, for all active pairs,
//! `(λ_k - λ_l) t - π (s_k - s_l) / 2` is a multiple of `2π`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::{max_probability_scan, Spectrum};
use crate::error::{Result, SpinError};

pub const DEFAULT_ZERO_TOL: f64 = 1e-10;
pub const DEFAULT_RATIONAL_TOL: f64 = 1e-9;
/// Largest denominator tried when flagging rationally dependent frequencies.
pub const MAX_RATIONAL_DENOMINATOR: i64 = 64;

/// Signs of the eigenspace overlaps `⟨m|Π_k|n⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignPattern {
    pub signs: Vec<i8>,
    /// Indices of eigenspaces with nonzero sign.
    pub active: Vec<usize>,
    pub overlaps: Vec<f64>,
}

pub fn sign_pattern(spectrum: &Spectrum, m: usize, n: usize, zero_tol: f64) -> Result<SignPattern> {
    let overlaps = spectrum.overlaps(m, n)?;
    let signs: Vec<i8> = overlaps
        .iter()
        .map(|&w| {
            if w.abs() <= zero_tol {
                0
            } else if w > 0.0 {
                1
            } else {
                -1
            }
        })
        .collect();
    let active = signs.iter().enumerate().filter(|(_, &s)| s != 0).map(|(k, _)| k).collect();
    Ok(SignPattern {
        signs,
        active,
        overlaps,
    })
}

pub fn itc_bound(spectrum: &Spectrum, m: usize, n: usize) -> Result<f64> {
    let overlaps = spectrum.overlaps(m, n)?;
    let total: f64 = overlaps.iter().map(|w| w.abs()).sum();
    Ok((total * total).min(1.0))
}

/// A pair of transition frequencies whose ratio is (numerically) rational.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalFlag {
    /// Eigenspace indices defining the two frequencies `λ_k - λ_ref`.
    pub k: usize,
    pub l: usize,
    pub ratio: f64,
    pub numerator: i64,
    pub denominator: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttainabilityReport {
    pub p_star: f64,
    pub p_max_scan: f64,
    pub t_peak: f64,
    pub gap: f64,
    pub max_phase_residual: f64,
    pub rational_flags: Vec<RationalFlag>,
}

#[derive(Clone, Copy, Debug)]
pub struct AttainabilityOptions {
    pub horizon: f64,
    /// Scan spacing; `None` uses `2π / (64 × spectral range)`.
    pub step: Option<f64>,
    pub zero_tol: f64,
    pub rational_tol: f64,
}

impl AttainabilityOptions {
    pub fn new(horizon: f64) -> Self {
        AttainabilityOptions {
            horizon,
            step: None,
            zero_tol: DEFAULT_ZERO_TOL,
            rational_tol: DEFAULT_RATIONAL_TOL,
        }
    }
}

fn wrap_to_pi(x: f64) -> f64 {
    x - 2.0 * PI * (x / (2.0 * PI)).round()
}

/// Largest deviation from the phase-matching condition over all active
/// eigenspace pairs at time `t`.
pub fn phase_condition_residual(spectrum: &Spectrum, pattern: &SignPattern, t: f64) -> f64 {
    let lambda = spectrum.eigenvalues();
    let mut worst: f64 = 0.0;
    for (i, &k) in pattern.active.iter().enumerate() {
        for &l in &pattern.active[i + 1..] {
            let lhs = (lambda[k] - lambda[l]) * t - PI / 2.0 * f64::from(pattern.signs[k] - pattern.signs[l]);
            worst = worst.max(wrap_to_pi(lhs).abs());
        }
    }
    worst
}

fn rational_approximation(x: f64, tol: f64) -> Option<(i64, i64)> {
    (1..=MAX_RATIONAL_DENOMINATOR).find_map(|q| {
        let p = (x * q as f64).round();
        ((x - p / q as f64).abs() <= tol).then_some((p as i64, q))
    })
}

/// Flags pairs of transition frequencies `λ_k - λ_ref` (reference: first
/// active eigenspace) whose ratio lies within `tol` of a small fraction.
pub fn rational_flags(spectrum: &Spectrum, pattern: &SignPattern, tol: f64) -> Vec<RationalFlag> {
    let lambda = spectrum.eigenvalues();
    let Some((&reference, rest)) = pattern.active.split_first() else {
        return Vec::new();
    };
    let mut flags = Vec::new();
    for (i, &k) in rest.iter().enumerate() {
        for &l in &rest[i + 1..] {
            let ratio = (lambda[k] - lambda[reference]) / (lambda[l] - lambda[reference]);
            if let Some((numerator, denominator)) = rational_approximation(ratio, tol) {
                flags.push(RationalFlag {
                    k,
                    l,
                    ratio,
                    numerator,
                    denominator,
                });
            }
        }
    }
    flags
}

pub fn attainability_report(
    spectrum: &Spectrum,
    m: usize,
    n: usize,
    options: &AttainabilityOptions,
) -> Result<AttainabilityReport> {
    let horizon = options.horizon;
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(SpinError::InvalidHorizon(horizon));
    }
    let p_star = itc_bound(spectrum, m, n)?;
    let pattern = sign_pattern(spectrum, m, n, options.zero_tol)?;
    let step = options.step.unwrap_or_else(|| {
        let range = spectrum.spectral_range();
        if range > 0.0 {
            2.0 * PI / (64.0 * range)
        } else {
            horizon / 64.0
        }
    });
    let step = step.min(horizon / 2.0);
    let peak = max_probability_scan(spectrum, m, n, horizon, step)?;
    Ok(AttainabilityReport {
        p_star,
        p_max_scan: peak.p,
        t_peak: peak.t,
        gap: p_star - peak.p,
        max_phase_residual: phase_condition_residual(spectrum, &pattern, peak.t),
        rational_flags: rational_flags(spectrum, &pattern, options.rational_tol),
    })
}
