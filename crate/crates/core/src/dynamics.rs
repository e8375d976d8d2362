//! Spectral decomposition, unitary propagation and transfer probabilities.
//!
//! Evolution is computed from the eigenexpansion
//! `U(t) = Σ_k exp(-i λ_k t) Π_k`, so one [`Spectrum`] serves any number of
//! time evaluations as well as the capacity analysis in [`crate::itc`].

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Result, SpinError};
use crate::netmodel::{check_node, EffectiveHamiltonian};
use crate::Complex64;

/// Relative degeneracy tolerance, multiplied by the spectral range.
pub const DEFAULT_RELATIVE_DEGENERACY_TOL: f64 = 1e-9;

const GOLDEN_TIME_TOL: f64 = 1e-10;

/// Ascending eigenvalues and eigenvectors (as columns) of a real symmetric matrix.
pub(crate) fn eigh(matrix: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let eig = SymmetricEigen::try_new(matrix.clone(), f64::EPSILON, 100_000)
        .ok_or(SpinError::DecompositionFailure)?;
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(SpinError::DecompositionFailure);
    }
    let mut order: Vec<usize> = (0..matrix.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(matrix.nrows(), matrix.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Distinct eigenvalues with their orthogonal spectral projectors.
#[derive(Clone, Debug)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    projectors: Vec<DMatrix<f64>>,
    multiplicity: Vec<usize>,
    degeneracy_tol: f64,
}

impl Spectrum {
    /// Decomposes a real symmetric matrix. Eigenvalues closer than
    /// `degeneracy_tol` are merged into one eigenspace; `None` selects
    /// `1e-9 × spectral range`.
    pub fn from_symmetric(matrix: &DMatrix<f64>, degeneracy_tol: Option<f64>) -> Result<Self> {
        let (values, vectors) = eigh(matrix)?;
        let n = values.len();
        let range = values[n - 1] - values[0];
        let tol = degeneracy_tol.unwrap_or_else(|| {
            let scale = range.max(values[0].abs()).max(values[n - 1].abs());
            DEFAULT_RELATIVE_DEGENERACY_TOL * scale
        });

        let mut groups: Vec<Vec<usize>> = Vec::new();
        for i in 0..n {
            match groups.last_mut() {
                Some(group) if values[i] - values[*group.last().unwrap()] <= tol => group.push(i),
                _ => groups.push(vec![i]),
            }
        }

        let mut eigenvalues = Vec::with_capacity(groups.len());
        let mut projectors = Vec::with_capacity(groups.len());
        let mut multiplicity = Vec::with_capacity(groups.len());
        for group in &groups {
            let mean = group.iter().map(|&i| values[i]).sum::<f64>() / group.len() as f64;
            let mut proj = DMatrix::zeros(n, n);
            for r in 0..n {
                for c in r..n {
                    let v: f64 = group.iter().map(|&i| vectors[(r, i)] * vectors[(c, i)]).sum();
                    proj[(r, c)] = v;
                    proj[(c, r)] = v;
                }
            }
            eigenvalues.push(mean);
            projectors.push(proj);
            multiplicity.push(group.len());
        }
        Ok(Spectrum {
            eigenvalues,
            projectors,
            multiplicity,
            degeneracy_tol: tol,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn projectors(&self) -> &[DMatrix<f64>] {
        &self.projectors
    }

    pub fn multiplicity(&self) -> &[usize] {
        &self.multiplicity
    }

    pub fn degeneracy_tol(&self) -> f64 {
        self.degeneracy_tol
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].nrows()
    }

    pub fn spectral_range(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1] - self.eigenvalues[0]
    }

    /// `⟨m|Π_k|n⟩` for every eigenspace, with one-based nodes.
    pub fn overlaps(&self, m: usize, n: usize) -> Result<Vec<f64>> {
        check_node(m, self.dim())?;
        check_node(n, self.dim())?;
        Ok(self.projectors.iter().map(|p| p[(m - 1, n - 1)]).collect())
    }

    fn amplitude(&self, overlaps: &[f64], t: f64) -> Complex64 {
        overlaps
            .iter()
            .zip(&self.eigenvalues)
            .map(|(&w, &lambda)| Complex64::from_polar(w, -lambda * t))
            .sum()
    }

    /// `Σ_k λ_k Π_k`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.projectors
            .iter()
            .zip(&self.eigenvalues)
            .fold(DMatrix::zeros(self.dim(), self.dim()), |acc, (p, &l)| acc + p * l)
    }
}

pub fn spectral_decompose(h: &EffectiveHamiltonian, degeneracy_tol: Option<f64>) -> Result<Spectrum> {
    Spectrum::from_symmetric(h.matrix(), degeneracy_tol)
}

/// `U(t) = Σ_k exp(-i λ_k t) Π_k`.
pub fn propagator(spectrum: &Spectrum, t: f64) -> DMatrix<Complex64> {
    let n = spectrum.dim();
    let mut u = DMatrix::<Complex64>::zeros(n, n);
    for (p, &lambda) in spectrum.projectors.iter().zip(&spectrum.eigenvalues) {
        let phase = Complex64::from_polar(1.0, -lambda * t);
        u.zip_apply(p, |acc, x| *acc += phase * x);
    }
    u
}

/// `|⟨m| e^{-iHt} |n⟩|²` for one-based nodes `m`, `n`.
pub fn transfer_probability(spectrum: &Spectrum, m: usize, n: usize, t: f64) -> Result<f64> {
    let overlaps = spectrum.overlaps(m, n)?;
    Ok(spectrum.amplitude(&overlaps, t).norm_sqr().min(1.0))
}

pub fn probability_trace(spectrum: &Spectrum, m: usize, n: usize, times: &[f64]) -> Result<Vec<f64>> {
    let overlaps = spectrum.overlaps(m, n)?;
    Ok(times
        .par_iter()
        .map(|&t| spectrum.amplitude(&overlaps, t).norm_sqr().min(1.0))
        .collect())
}

/// Location and value of a transfer-probability maximum.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScanPeak {
    pub t: f64,
    pub p: f64,
}

/// Maximizes `p_mn(t)` over `[0, horizon]`: a grid scan at spacing `step`
/// followed by golden-section refinement around the best grid point.
pub fn max_probability_scan(spectrum: &Spectrum, m: usize, n: usize, horizon: f64, step: f64) -> Result<ScanPeak> {
    if !(horizon.is_finite() && step.is_finite() && step > 0.0 && step < horizon) {
        return Err(SpinError::InvalidGrid { step, horizon });
    }
    let overlaps = spectrum.overlaps(m, n)?;
    let prob = |t: f64| spectrum.amplitude(&overlaps, t).norm_sqr().min(1.0);

    let count = (horizon / step).floor() as usize;
    let (best_i, best_p) = (0..=count)
        .into_par_iter()
        .map(|i| (i, prob(i as f64 * step)))
        .reduce(|| (0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a });
    let mut best = ScanPeak {
        t: best_i as f64 * step,
        p: best_p,
    };
    let end_p = prob(horizon);
    if end_p > best.p {
        best = ScanPeak { t: horizon, p: end_p };
    }

    let lo = (best.t - step).max(0.0);
    let hi = (best.t + step).min(horizon);
    let (t, p) = golden_section_max(prob, lo, hi, GOLDEN_TIME_TOL);
    if p > best.p {
        best = ScanPeak { t, p };
    }
    Ok(best)
}

/// Golden-section search for a maximum of `f` on `[lo, hi]`.
pub(crate) fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Writes a probability trace as CSV with header `t,p`. Without a
/// precision, floats use the shortest representation that round-trips.
pub fn write_trace_csv<W: Write>(mut out: W, times: &[f64], probs: &[f64], precision: Option<usize>) -> Result<()> {
    writeln!(out, "t,p")?;
    for (t, p) in times.iter().zip(probs) {
        match precision {
            Some(digits) => writeln!(out, "{t:.digits$e},{p:.digits$e}")?,
            None => writeln!(out, "{t:?},{p:?}")?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::netmodel::NetworkSpec;

    fn spectrum(spec: NetworkSpec) -> Spectrum {
        spectral_decompose(&spec.hamiltonian(), None).unwrap()
    }

    #[test]
    fn ring_and_chain_spectra() {
        let s = spectrum(NetworkSpec::ring(3, 1.0, 0.0).unwrap());
        assert_eq!(s.eigenvalues().len(), 2);
        assert!((s.eigenvalues()[0] + 1.0).abs() < 1e-12);
        assert!((s.eigenvalues()[1] - 2.0).abs() < 1e-12);
        assert_eq!(s.multiplicity(), &[2, 1]);

        let s = spectrum(NetworkSpec::chain(2, 1.0, 0.0).unwrap());
        assert_eq!(s.multiplicity(), &[1, 1]);
        assert!((s.eigenvalues()[0] + 1.0).abs() < 1e-12 && (s.eigenvalues()[1] - 1.0).abs() < 1e-12);

        let s = spectrum(NetworkSpec::ring(4, 1.0, 0.0).unwrap());
        assert_eq!(s.multiplicity(), &[1, 2, 1]);
        for (got, want) in s.eigenvalues().iter().zip([-2.0, 0.0, 2.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn projectors_resolve_identity_and_reconstruct() {
        for spec in [
            NetworkSpec::ring(7, 1.0, 1.0).unwrap(),
            NetworkSpec::chain(6, 0.3, 1.0).unwrap(),
            NetworkSpec::ring(8, 2.0, 0.0).unwrap(),
        ] {
            let h = spec.hamiltonian();
            let s = spectral_decompose(&h, None).unwrap();
            let n = s.dim();
            let sum = s.projectors().iter().fold(DMatrix::zeros(n, n), |acc, p| acc + p);
            assert!((sum - DMatrix::<f64>::identity(n, n)).amax() < 1e-10);
            for (i, p) in s.projectors().iter().enumerate() {
                for (j, q) in s.projectors().iter().enumerate() {
                    let expected = if i == j { p.clone() } else { DMatrix::zeros(n, n) };
                    assert!((p * q - expected).amax() < 1e-10);
                }
                assert_eq!(p, &p.transpose());
            }
            let scale = h.matrix().amax();
            assert!((s.reconstruct() - h.matrix()).amax() <= 1e-9 * scale);
            for w in s.eigenvalues().windows(2) {
                assert!(w[1] - w[0] > s.degeneracy_tol());
            }
        }
    }

    #[test]
    fn propagator_examples() {
        let s = spectrum(NetworkSpec::chain(2, 1.0, 0.0).unwrap());
        let u0 = propagator(&s, 0.0);
        assert!((u0 - DMatrix::<Complex64>::identity(2, 2)).iter().all(|z| z.norm() < 1e-15));
        let u = propagator(&s, PI / 2.0);
        assert!((u[(1, 0)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_probabilities() {
        let s = spectrum(NetworkSpec::chain(2, 1.0, 0.0).unwrap());
        for t in [0.0, 0.3, 1.1, 2.7, 10.0] {
            assert!((transfer_probability(&s, 1, 2, t).unwrap() - t.sin().powi(2)).abs() < 1e-12);
        }
        let s = spectrum(NetworkSpec::ring(3, 1.0, 0.0).unwrap());
        for t in [0.0f64, 0.4, 1.7] {
            let expected = (5.0 + 4.0 * (3.0 * t).cos()) / 9.0;
            assert!((transfer_probability(&s, 1, 1, t).unwrap() - expected).abs() < 1e-12);
        }
        assert!((transfer_probability(&s, 1, 1, PI / 3.0).unwrap() - 1.0 / 9.0).abs() < 1e-12);
        assert!(matches!(
            transfer_probability(&s, 0, 1, 0.0),
            Err(SpinError::NodeOutOfRange { node: 0, n: 3 })
        ));
        assert!(matches!(
            transfer_probability(&s, 1, 4, 0.0),
            Err(SpinError::NodeOutOfRange { node: 4, n: 3 })
        ));
    }

    #[test]
    fn traces() {
        let s = spectrum(NetworkSpec::ring(4, 1.0, 0.0).unwrap());
        assert!((probability_trace(&s, 1, 1, &[0.0]).unwrap()[0] - 1.0).abs() < 1e-14);
        assert!(probability_trace(&s, 1, 2, &[0.0]).unwrap()[0].abs() < 1e-15);
        let p = probability_trace(&s, 1, 1, &[PI / 2.0]).unwrap();
        assert!(p[0].abs() < 1e-12);

        let times: Vec<f64> = (0..200).map(|i| i as f64 * 0.137).collect();
        let trace = probability_trace(&s, 2, 3, &times).unwrap();
        for (t, p) in times.iter().zip(&trace) {
            assert!((transfer_probability(&s, 2, 3, *t).unwrap() - p).abs() <= 1e-14);
        }
        for &t in &times {
            let total: f64 = (1..=4).map(|m| transfer_probability(&s, m, 3, t).unwrap()).sum();
            assert!((total - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn scan_examples() {
        let s = spectrum(NetworkSpec::chain(2, 1.0, 0.0).unwrap());
        let peak = max_probability_scan(&s, 1, 2, 2.0, 0.01).unwrap();
        assert!((peak.t - PI / 2.0).abs() < 1e-6);
        assert!((peak.p - 1.0).abs() < 1e-9);

        let s = spectrum(NetworkSpec::ring(3, 1.0, 0.0).unwrap());
        let peak = max_probability_scan(&s, 1, 2, 5.0, 0.01).unwrap();
        assert!((peak.p - 4.0 / 9.0).abs() < 1e-9);
        // peaks recur with period 2π/3
        let phase = (peak.t - PI / 3.0).rem_euclid(2.0 * PI / 3.0);
        assert!(phase.min(2.0 * PI / 3.0 - phase) < 1e-5);
        let early = max_probability_scan(&s, 1, 2, 1.1, 0.01).unwrap();
        assert!((early.t - PI / 3.0).abs() < 1e-5);
        assert!((early.p - 4.0 / 9.0).abs() < 1e-9);

        assert!(matches!(
            max_probability_scan(&s, 1, 2, 1.0, 2.0),
            Err(SpinError::InvalidGrid { .. })
        ));
        assert!(matches!(
            max_probability_scan(&s, 1, 2, 1.0, 0.0),
            Err(SpinError::InvalidGrid { .. })
        ));
    }

    #[test]
    fn csv_output() {
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &[0.0, 0.1], &[1.0, 0.009966711079379187], None).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "t,p\n0.0,1.0\n0.1,0.009966711079379187\n");
        let back: f64 = text.lines().nth(2).unwrap().split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(back, 0.009966711079379187);
    }
}
