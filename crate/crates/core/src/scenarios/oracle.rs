//! Double-double reference fidelities for the bias and switching controls,
//! finite differences are limited by truncation rather than round-off.

use std::ops::{Add, Mul, Neg, Sub};

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd { hi: s, lo: b - (s - a) }
}

impl Dd {
    pub(crate) fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub(crate) fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn abs(self) -> f64 {
        self.hi.abs()
    }

    fn div_f64(self, b: f64) -> Dd {
        let q1 = self.hi / b;
        let r = self - Dd::new(b) * Dd::new(q1);
        let q2 = r.hi / b;
        quick_two_sum(q1, q2)
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let d = quick_two_sum(s, e + t);
        quick_two_sum(d.hi, d.lo + f)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        quick_two_sum(p, e + (self.hi * o.lo + self.lo * o.hi))
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct Cdd {
    re: Dd,
    im: Dd,
}

impl Add for Cdd {
    type Output = Cdd;
    fn add(self, o: Cdd) -> Cdd {
        Cdd {
            re: self.re + o.re,
            im: self.im + o.im,
        }
    }
}

impl Mul for Cdd {
    type Output = Cdd;
    fn mul(self, o: Cdd) -> Cdd {
        Cdd {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }
}

type Mat = Vec<Vec<Cdd>>;

fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    (0..n)
        .map(|r| {
            (0..n)
                .map(|c| (0..n).fold(Cdd::default(), |acc, k| acc + a[r][k] * b[k][c]))
                .collect()
        })
        .collect()
}

fn identity(dim: usize) -> Mat {
    (0..dim)
        .map(|r| {
            (0..dim)
                .map(|c| Cdd {
                    re: Dd::new(if r == c { 1.0 } else { 0.0 }),
                    im: Dd::default(),
                })
                .collect()
        })
        .collect()
}

/// `exp(-i t G)` by scaled Taylor series and repeated squaring.
fn expm(generator: &[Vec<Dd>], t: Dd) -> Mat {
    let dim = generator.len();
    let norm = generator
        .iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        * t.abs();
    let squarings = if norm > 0.25 { (norm / 0.25).log2().ceil() as i32 } else { 0 };
    let scale = t * Dd::new(2f64.powi(-squarings));
    let a: Mat = generator
        .iter()
        .map(|row| {
            row.iter()
                .map(|&g| Cdd {
                    re: Dd::default(),
                    im: -(g * scale),
                })
                .collect()
        })
        .collect();
    let mut sum = identity(dim);
    let mut term = identity(dim);
    for k in 1..=60 {
        term = matmul(&term, &a);
        for row in term.iter_mut() {
            for z in row.iter_mut() {
                z.re = z.re.div_f64(k as f64);
                z.im = z.im.div_f64(k as f64);
            }
        }
        let size = term.iter().flatten().map(|z| z.re.abs().max(z.im.abs())).fold(0.0, f64::max);
        for (srow, trow) in sum.iter_mut().zip(&term) {
            for (s, x) in srow.iter_mut().zip(trow) {
                *s = *s + *x;
            }
        }
        if size < 1e-36 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = matmul(&sum, &sum);
    }
    sum
}

fn lift(h: &[Vec<f64>]) -> Vec<Vec<Dd>> {
    h.iter().map(|row| row.iter().map(|&x| Dd::new(x)).collect()).collect()
}

fn fidelity(u: &Mat, m: usize, n: usize) -> Dd {
    let z = u[m - 1][n - 1];
    z.re * z.re + z.im * z.im
}

/// `|⟨m| exp(-i t (h + diag(c))) |n⟩|²` with one-based nodes.
pub(crate) fn biased_fidelity(h: &[Vec<f64>], c: &[Dd], t: f64, m: usize, n: usize) -> Dd {
    let mut generator = lift(h);
    for (i, ci) in c.iter().enumerate() {
        generator[i][i] = generator[i][i] + *ci;
    }
    fidelity(&expm(&generator, Dd::new(t)), m, n)
}

/// `|⟨m| Π exp(-i τ_i H_i) |n⟩|²` with segment 0 acting first and
/// `hamiltonians[on]` selected per segment.
pub(crate) fn switched_fidelity(hamiltonians: [&[Vec<f64>]; 2], segments: &[(bool, Dd)], m: usize, n: usize) -> Dd {
    let lifted = [lift(hamiltonians[0]), lift(hamiltonians[1])];
    let mut u = identity(hamiltonians[0].len());
    for &(on, tau) in segments {
        u = matmul(&expm(&lifted[on as usize], tau), &u);
    }
    fidelity(&u, m, n)
}

/// Central difference of [`biased_fidelity`] along bias `j` with step `step`.
pub(crate) fn bias_fd_derivative(h: &[Vec<f64>], c: &[f64], t: f64, m: usize, n: usize, j: usize, step: f64) -> f64 {
    let shifted = |sign: f64| -> Vec<Dd> {
        c.iter()
            .enumerate()
            .map(|(i, &x)| if i == j { Dd::new(x) + Dd::new(sign * step) } else { Dd::new(x) })
            .collect()
    };
    let up = biased_fidelity(h, &shifted(1.0), t, m, n);
    let down = biased_fidelity(h, &shifted(-1.0), t, m, n);
    (up - down).to_f64() / (2.0 * step)
}

/// Central difference of [`switched_fidelity`] along duration `j`.
pub(crate) fn switching_fd_derivative(
    hamiltonians: [&[Vec<f64>]; 2],
    segments: &[(bool, f64)],
    m: usize,
    n: usize,
    j: usize,
    step: f64,
) -> f64 {
    let shifted = |sign: f64| -> Vec<(bool, Dd)> {
        segments
            .iter()
            .enumerate()
            .map(|(i, &(on, tau))| (on, if i == j { Dd::new(tau) + Dd::new(sign * step) } else { Dd::new(tau) }))
            .collect()
    };
    let up = switched_fidelity(hamiltonians, &shifted(1.0), m, n);
    let down = switched_fidelity(hamiltonians, &shifted(-1.0), m, n);
    (up - down).to_f64() / (2.0 * step)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn double_double_arithmetic() {
        let third = Dd::new(1.0).div_f64(3.0);
        let back = third * Dd::new(3.0) - Dd::new(1.0);
        assert!(back.to_f64().abs() < 1e-31);
        let tiny = Dd::new(1.0) + Dd::new(1e-20);
        assert_eq!((tiny - Dd::new(1.0)).to_f64(), 1e-20);
    }

    #[test]
    fn two_spin_fidelity_is_sin_squared() {
        let h = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        for t in [0.3f64, 1.0, 2.5, 7.0] {
            let p = biased_fidelity(&h, &[Dd::new(0.0), Dd::new(0.0)], t, 2, 1).to_f64();
            assert!((p - t.sin().powi(2)).abs() < 1e-15);
        }
        // detuned two-level Rabi formula
        let (d, t) = (0.8f64, 1.3f64);
        let omega = (1.0 + d * d / 4.0).sqrt();
        let expected = (omega * t).sin().powi(2) / (omega * omega);
        let p = biased_fidelity(&h, &[Dd::new(d), Dd::new(0.0)], t, 2, 1).to_f64();
        assert!((p - expected).abs() < 1e-15);
        let split = [(false, Dd::new(0.5)), (true, Dd::new(0.0)), (false, Dd::new(0.8))];
        let p = switched_fidelity([&h, &h], &split, 2, 1).to_f64();
        assert!((p - 1.3f64.sin().powi(2)).abs() < 1e-15);
    }
}
