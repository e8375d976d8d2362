//! Projected quasi-Newton ascent with box constraints.
//!
//! L-BFGS directions are projected onto the feasible box; steps use
//! backtracking along the projected path with an Armijo condition.

use std::collections::VecDeque;

#[derive(Clone, Copy, Debug)]
pub struct AscentOptions {
    pub max_iter: usize,
    /// Stop when the projected gradient infinity-norm falls below this.
    pub grad_tol: f64,
    /// Stop after `stall_limit` consecutive improvements below `value_tol`.
    pub value_tol: f64,
    pub stall_limit: usize,
    /// Stop as soon as the objective reaches this value.
    pub target: f64,
    pub memory: usize,
}

impl Default for AscentOptions {
    fn default() -> Self {
        AscentOptions {
            max_iter: 2000,
            grad_tol: 1e-10,
            value_tol: 1e-14,
            stall_limit: 5,
            target: 1.0 - 1e-14,
            memory: 10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AscentOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub history: Vec<f64>,
    pub iterations: usize,
}

/// Per-coordinate bounds; `None` means unbounded on that side.
#[derive(Clone, Debug, Default)]
pub struct Bounds {
    pub lower: Vec<Option<f64>>,
    pub upper: Vec<Option<f64>>,
}

impl Bounds {
    pub fn unbounded(n: usize) -> Self {
        Bounds {
            lower: vec![None; n],
            upper: vec![None; n],
        }
    }

    pub fn non_negative(n: usize) -> Self {
        Bounds {
            lower: vec![Some(0.0); n],
            upper: vec![None; n],
        }
    }

    fn project(&self, x: &mut [f64]) {
        for (i, xi) in x.iter_mut().enumerate() {
            if let Some(lo) = self.lower[i] {
                *xi = xi.max(lo);
            }
            if let Some(hi) = self.upper[i] {
                *xi = xi.min(hi);
            }
        }
    }

    /// Zeroes gradient components that point out of the box at active bounds.
    fn project_gradient(&self, x: &[f64], g: &mut [f64]) {
        for i in 0..x.len() {
            let at_lo = self.lower[i].is_some_and(|lo| x[i] <= lo);
            let at_hi = self.upper[i].is_some_and(|hi| x[i] >= hi);
            if (at_lo && g[i] < 0.0) || (at_hi && g[i] > 0.0) {
                g[i] = 0.0;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Maximizes `objective`, which returns the value and gradient at a point.
pub fn maximize<F>(mut objective: F, x0: Vec<f64>, bounds: &Bounds, opts: &AscentOptions) -> AscentOutcome
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0;
    bounds.project(&mut x);
    let (mut f, mut g) = objective(&x);
    let mut history = vec![f];
    // pairs (s, y) for the minimization of -f: y = -(g_new - g)
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut stalls = 0;
    let mut iterations = 0;

    while iterations < opts.max_iter && f < opts.target {
        let mut pg = g.clone();
        bounds.project_gradient(&x, &mut pg);
        if pg.iter().fold(0.0f64, |m, v| m.max(v.abs())) < opts.grad_tol {
            break;
        }
        iterations += 1;

        // two-loop recursion on the ascent gradient
        let mut d = pg.clone();
        let mut alphas = Vec::with_capacity(memory.len());
        for (s, y, rho) in memory.iter().rev() {
            let a = rho * dot(s, &d);
            for i in 0..n {
                d[i] -= a * y[i];
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = memory.back() {
            let gamma = dot(s, y) / dot(y, y);
            d.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), a) in memory.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &d);
            for i in 0..n {
                d[i] += (a - b) * s[i];
            }
        }
        bounds.project_gradient(&x, &mut d);
        if dot(&d, &pg) <= 0.0 {
            memory.clear();
            d = pg.clone();
        }

        let mut step = if memory.is_empty() {
            1.0 / d.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..60 {
            let mut trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            bounds.project(&mut trial);
            let moved: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            let (ft, gt) = objective(&trial);
            if ft.is_finite() && ft >= f + 1e-4 * dot(&g, &moved) && ft >= f {
                accepted = Some((trial, ft, gt, moved));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, ft, gt, s)) = accepted else {
            if memory.is_empty() {
                break;
            }
            memory.clear();
            continue;
        };
        let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| b - a).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if memory.len() == opts.memory {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        let improvement = ft - f;
        x = trial;
        f = ft;
        g = gt;
        history.push(f);
        if improvement < opts.value_tol {
            stalls += 1;
            if stalls >= opts.stall_limit {
                break;
            }
        } else {
            stalls = 0;
        }
    }

    AscentOutcome {
        x,
        value: f,
        history,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximizes_concave_quadratic() {
        // f = -(x-1)^2 - 10 (y+2)^2
        let out = maximize(
            |x| {
                let f = -(x[0] - 1.0).powi(2) - 10.0 * (x[1] + 2.0).powi(2);
                (f, vec![-2.0 * (x[0] - 1.0), -20.0 * (x[1] + 2.0)])
            },
            vec![5.0, 5.0],
            &Bounds::unbounded(2),
            &AscentOptions {
                target: f64::INFINITY,
                ..Default::default()
            },
        );
        assert!((out.x[0] - 1.0).abs() < 1e-6 && (out.x[1] + 2.0).abs() < 1e-6);
        assert!(out.history.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn respects_lower_bounds() {
        // unconstrained optimum at x = -3, feasible optimum at 0
        let out = maximize(
            |x| (-(x[0] + 3.0).powi(2), vec![-2.0 * (x[0] + 3.0)]),
            vec![2.0],
            &Bounds::non_negative(1),
            &AscentOptions {
                target: f64::INFINITY,
                ..Default::default()
            },
        );
        assert_eq!(out.x[0], 0.0);
    }

    #[test]
    fn rosenbrock() {
        let out = maximize(
            |x| {
                let (a, b) = (x[0], x[1]);
                let f = -((1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2));
                let ga = 2.0 * (1.0 - a) + 400.0 * a * (b - a * a);
                let gb = -200.0 * (b - a * a);
                (f, vec![ga, gb])
            },
            vec![-1.2, 1.0],
            &Bounds::unbounded(2),
            &AscentOptions {
                target: f64::INFINITY,
                ..Default::default()
            },
        );
        assert!((out.x[0] - 1.0).abs() < 1e-4 && (out.x[1] - 1.0).abs() < 1e-4, "{:?}", out.x);
    }
}
