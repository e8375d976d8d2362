//! Dimension of the dynamical Lie algebra generated by `{iH_0, iH_C, ...}`.
//!
//! The algebra is a real vector space of anti-Hermitian matrices with inner
//! product `Re tr(A† B)`. Closure repeatedly commutes new basis elements with
//! the whole basis and absorbs candidates by pivoted Gram–Schmidt: within a
//! batch the candidate with the largest residual is added first, which keeps
//! tiny round-off residuals from being promoted to basis elements.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpinError};
use crate::Complex64;

/// Relative rank tolerance, scaled by the largest candidate norm seen.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct LieBasis {
    /// Anti-Hermitian matrices, orthonormal under `Re tr(A† B)`.
    pub basis: Vec<DMatrix<Complex64>>,
    pub dimension: usize,
}

fn inner(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

fn norm(a: &DMatrix<Complex64>) -> f64 {
    inner(a, a).sqrt()
}

struct Closure {
    basis: Vec<DMatrix<Complex64>>,
    scale: f64,
    rank_tol: f64,
    max_dim: usize,
}

impl Closure {
    fn residual(&self, mut v: DMatrix<Complex64>, from: usize) -> DMatrix<Complex64> {
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for b in &self.basis[from..] {
                let c = inner(b, &v);
                v -= b * Complex64::new(c, 0.0);
            }
        }
        v
    }

    /// Adds the independent directions among `candidates`; returns the
    /// indices of new basis elements.
    fn absorb(&mut self, candidates: Vec<DMatrix<Complex64>>) -> Result<Vec<usize>> {
        for c in &candidates {
            self.scale = self.scale.max(norm(c));
        }
        let threshold = self.rank_tol * self.scale;
        let start = self.basis.len();
        let mut pending: Vec<DMatrix<Complex64>> = candidates.into_iter().map(|c| self.residual(c, 0)).collect();
        let mut added = Vec::new();
        loop {
            pending.retain(|c| norm(c) > threshold);
            let Some((pivot, _)) = pending
                .iter()
                .enumerate()
                .map(|(i, c)| (i, norm(c)))
                .max_by(|a, b| a.1.total_cmp(&b.1))
            else {
                break;
            };
            let chosen = pending.swap_remove(pivot);
            let chosen = self.residual(chosen, 0);
            let length = norm(&chosen);
            if length <= threshold {
                continue;
            }
            if self.basis.len() >= self.max_dim {
                return Err(SpinError::DimensionOverflow { max_dim: self.max_dim });
            }
            self.basis.push(chosen / Complex64::new(length, 0.0));
            added.push(self.basis.len() - 1);
            let newest = self.basis.len() - 1;
            pending = pending.into_iter().map(|c| self.residual(c, newest)).collect();
        }
        debug_assert!(added.iter().all(|&i| i >= start));
        Ok(added)
    }
}

/// Closure of `{i G : G in generators}` under commutators.
///
/// `rank_tol` is relative to the largest candidate norm encountered;
/// `max_dim` defaults to `N²`.
pub fn lie_closure(generators: &[DMatrix<Complex64>], rank_tol: f64, max_dim: Option<usize>) -> Result<LieBasis> {
    let Some(first) = generators.first() else {
        return Err(SpinError::InvalidConfig("at least one generator is required".into()));
    };
    let n = first.nrows();
    if generators.iter().any(|g| g.nrows() != n || g.ncols() != n) {
        return Err(SpinError::InvalidConfig("generators must be square and of equal size".into()));
    }
    let mut closure = Closure {
        basis: Vec::new(),
        scale: 0.0,
        rank_tol,
        max_dim: max_dim.unwrap_or(n * n),
    };
    let i = Complex64::new(0.0, 1.0);
    let mut fresh = closure.absorb(generators.iter().map(|g| g * i).collect())?;
    while !fresh.is_empty() {
        let mut candidates = Vec::with_capacity(fresh.len() * closure.basis.len());
        for &a in &fresh {
            for b in 0..closure.basis.len() {
                if a == b {
                    continue;
                }
                let (x, y) = (&closure.basis[a], &closure.basis[b]);
                candidates.push(x * y - y * x);
            }
        }
        fresh = closure.absorb(candidates)?;
    }
    let dimension = closure.basis.len();
    Ok(LieBasis {
        basis: closure.basis,
        dimension,
    })
}

pub fn lie_closure_real(generators: &[DMatrix<f64>], rank_tol: f64, max_dim: Option<usize>) -> Result<LieBasis> {
    let complex: Vec<_> = generators.iter().map(|g| g.map(|x| Complex64::new(x, 0.0))).collect();
    lie_closure(&complex, rank_tol, max_dim)
}

/// `G - tr(G)/N · I`.
pub fn traceless(g: &DMatrix<f64>) -> DMatrix<f64> {
    let n = g.nrows();
    g - DMatrix::identity(n, n) * (g.trace() / n as f64)
}

/// Lie dimensions under both trace conventions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LieReport {
    /// Closure of the traceless parts of the generators.
    pub dimension: usize,
    /// Closure of the generators as given, identity components included.
    pub dimension_with_identity: usize,
    pub generators: String,
    pub rank_tol: f64,
}

pub fn lie_report(generators: &[DMatrix<f64>], description: impl Into<String>, rank_tol: f64) -> Result<LieReport> {
    let stripped: Vec<_> = generators.iter().map(traceless).collect();
    Ok(LieReport {
        dimension: lie_closure_real(&stripped, rank_tol, None)?.dimension,
        dimension_with_identity: lie_closure_real(generators, rank_tol, None)?.dimension,
        generators: description.into(),
        rank_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::detuning_control;
    use crate::netmodel::NetworkSpec;

    fn real(rows: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, rows, data)
    }

    #[test]
    fn single_generator_is_abelian() {
        let h = NetworkSpec::chain(4, 1.0, 0.0).unwrap().hamiltonian();
        assert_eq!(lie_closure_real(&[h.matrix().clone()], DEFAULT_RANK_TOL, None).unwrap().dimension, 1);
    }

    #[test]
    fn two_level_generates_su2() {
        let h0 = real(2, &[0., 1., 1., 0.]);
        let hc = real(2, &[-1., 0., 0., 1.]);
        assert_eq!(lie_closure_real(&[h0, hc], DEFAULT_RANK_TOL, None).unwrap().dimension, 3);
    }

    #[test]
    fn basis_is_orthonormal_and_anti_hermitian() {
        let h0 = NetworkSpec::chain(4, 1.0, 1.0).unwrap().hamiltonian().matrix().clone();
        let hc = detuning_control(4, 1).unwrap();
        let lie = lie_closure_real(&[h0, hc], DEFAULT_RANK_TOL, None).unwrap();
        assert_eq!(lie.dimension, 16);
        for (i, a) in lie.basis.iter().enumerate() {
            assert!((a + a.adjoint()).iter().all(|z| z.norm() < 1e-12));
            for (j, b) in lie.basis.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((inner(a, b) - expected).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn ring_of_seven_is_not_controllable() {
        let h0 = NetworkSpec::ring(7, 1.0, 0.0).unwrap().hamiltonian().matrix().clone();
        let hc = detuning_control(7, 1).unwrap();
        let report = lie_report(&[h0, hc], "ring7", DEFAULT_RANK_TOL).unwrap();
        assert_eq!(report.dimension, 17);
        assert_eq!(report.dimension_with_identity, 17);
    }

    #[test]
    fn chain_of_seven_is_controllable() {
        let h0 = NetworkSpec::chain(7, 1.0, 1.0).unwrap().hamiltonian().matrix().clone();
        let hc = detuning_control(7, 1).unwrap();
        let report = lie_report(&[h0, hc], "chain7", DEFAULT_RANK_TOL).unwrap();
        assert_eq!(report.dimension, 48);
        assert_eq!(report.dimension_with_identity, 49);
    }

    #[test]
    fn overflow_and_bad_input() {
        let h0 = real(2, &[0., 1., 1., 0.]);
        let hc = real(2, &[-1., 0., 0., 1.]);
        assert!(matches!(
            lie_closure_real(&[h0.clone(), hc], DEFAULT_RANK_TOL, Some(2)),
            Err(SpinError::DimensionOverflow { max_dim: 2 })
        ));
        assert!(lie_closure_real(&[], DEFAULT_RANK_TOL, None).is_err());
        assert!(lie_closure_real(&[h0, DMatrix::zeros(3, 3)], DEFAULT_RANK_TOL, None).is_err());
    }
}
