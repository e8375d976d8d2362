use rand::Rng;

use crate::error::{Result, SpinError};

/// Base-2 radical inverse of `index`.
pub fn radical_inverse(mut index: u64) -> f64 {
    let mut value = 0.0;
    let mut weight = 0.5;
    while index > 0 {
        if index & 1 == 1 {
            value += weight;
        }
        index >>= 1;
        weight *= 0.5;
    }
    value
}

/// Measurement times `T × φ₂(i)` for `i = start .. start + count`: the
/// extensible one-dimensional component of the Hammersley construction, so
/// later batches continue the sequence.
pub fn vdc_times(start: u64, count: usize, horizon: f64) -> Result<Vec<f64>> {
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(SpinError::InvalidHorizon(horizon));
    }
    Ok((start..start + count as u64).map(|i| horizon * radical_inverse(i)).collect())
}

/// Draws a new set of `k` sample positions in `[lo, hi]` from the current
/// samples (`points`, sorted ascending) and their log-likelihoods.
///
/// Each sample `p_i` owns the cell between the midpoints to its neighbours
/// and carries density `½ (p_{i+1} - p_{i-1}) × exp(L_i - max L)`, with the
/// interval endpoints standing in for the missing neighbours. `k - 1` points
/// come from stratified inverse-CDF sampling of that piecewise-constant
/// density; the current best sample is always kept. If every weight
/// underflows the draw falls back to uniform sampling.
pub fn resample<R: Rng + ?Sized>(points: &[f64], log_likelihood: &[f64], lo: f64, hi: f64, k: usize, rng: &mut R) -> Result<Vec<f64>> {
    if k < 2 {
        return Err(SpinError::DomainError(format!("need at least 2 samples, got {k}")));
    }
    if points.is_empty() || points.len() != log_likelihood.len() {
        return Err(SpinError::DomainError("points and log-likelihoods must match and be non-empty".into()));
    }
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(SpinError::DomainError(format!("invalid interval [{lo}, {hi}]")));
    }
    let count = points.len();
    let best = log_likelihood
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let peak = log_likelihood[best];

    let neighbour = |i: isize| -> f64 {
        if i < 0 {
            lo
        } else if i as usize >= count {
            hi
        } else {
            points[i as usize]
        }
    };
    let mut edges = Vec::with_capacity(count + 1);
    edges.push(lo);
    edges.extend(points.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    edges.push(hi);

    let masses: Vec<f64> = (0..count)
        .map(|i| {
            let gap = 0.5 * (neighbour(i as isize + 1) - neighbour(i as isize - 1));
            let density = gap * (log_likelihood[i] - peak).exp();
            density * (edges[i + 1] - edges[i])
        })
        .collect();
    let total: f64 = masses.iter().sum();

    let draws = k - 1;
    let mut out = Vec::with_capacity(k);
    if !(total.is_finite() && total > 0.0) {
        out.extend((0..draws).map(|_| rng.random_range(lo..=hi)));
    } else {
        let mut cdf = Vec::with_capacity(count + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for m in &masses {
            acc += m / total;
            cdf.push(acc);
        }
        for s in 0..draws {
            let u = ((s as f64 + rng.random::<f64>()) / draws as f64).min(1.0);
            let cell = cdf.partition_point(|&c| c <= u).saturating_sub(1).min(count - 1);
            let width = cdf[cell + 1] - cdf[cell];
            let frac = if width > 0.0 { ((u - cdf[cell]) / width).clamp(0.0, 1.0) } else { 0.5 };
            out.push(edges[cell] + frac * (edges[cell + 1] - edges[cell]));
        }
    }
    out.push(points[best]);
    out.sort_by(f64::total_cmp);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn van_der_corput_values() {
        assert_eq!(vdc_times(1, 3, 1.0).unwrap(), vec![0.5, 0.25, 0.75]);
        assert_eq!(vdc_times(4, 2, 1.0).unwrap(), vec![0.125, 0.625]);
        let unit = vdc_times(3, 50, 1.0).unwrap();
        let scaled = vdc_times(3, 50, 7.5).unwrap();
        for (u, s) in unit.iter().zip(&scaled) {
            assert_eq!(*s, 7.5 * u);
            assert!((0.0..7.5).contains(s));
        }
        assert!(matches!(vdc_times(0, 3, 0.0), Err(SpinError::InvalidHorizon(_))));
        assert!(matches!(vdc_times(0, 3, f64::NAN), Err(SpinError::InvalidHorizon(_))));
    }

    fn ks_uniform(samples: &[f64], lo: f64, hi: f64) -> f64 {
        let n = samples.len() as f64;
        samples
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = (x - lo) / (hi - lo);
                (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn flat_likelihood_resamples_uniformly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let k = 50;
        let even: Vec<f64> = (0..k).map(|i| 0.5 + (i as f64 + 0.5) / k as f64).collect();
        let out = resample(&even, &vec![-3.0; k], 0.5, 1.5, k, &mut rng).unwrap();
        assert_eq!(out.len(), k);
        assert!(ks_uniform(&out, 0.5, 1.5) < 0.2);

        let mut random: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..1.5)).collect();
        random.sort_by(f64::total_cmp);
        let out = resample(&random, &vec![0.0; k], 0.5, 1.5, k, &mut rng).unwrap();
        assert!(ks_uniform(&out, 0.5, 1.5) < 0.2);
    }

    #[test]
    fn dominant_sample_attracts_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let k = 50;
        let points: Vec<f64> = (0..k).map(|i| 0.5 + (i as f64 + 0.5) / k as f64).collect();
        let mut ll = vec![-100.0; k];
        ll[20] = -50.0;
        let out = resample(&points, &ll, 0.5, 1.5, k, &mut rng).unwrap();
        let near = out.iter().filter(|&&x| x >= points[19] && x <= points[21]).count();
        assert!(near as f64 >= 0.8 * k as f64, "{near}");
        assert!(out.contains(&points[20]));
        assert!(out.windows(2).all(|w| w[0] <= w[1]));
        assert!(out.iter().all(|&x| (0.5..=1.5).contains(&x)));
    }

    #[test]
    fn underflow_falls_back_to_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let points = vec![0.6, 0.9, 1.2];
        let out = resample(&points, &[f64::NEG_INFINITY; 3], 0.5, 1.5, 20, &mut rng).unwrap();
        assert_eq!(out.len(), 20);
        assert!(out.iter().all(|&x| (0.5..=1.5).contains(&x)));
    }

    #[test]
    fn rejects_bad_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(resample(&[1.0], &[0.0], 0.5, 1.5, 1, &mut rng).is_err());
        assert!(resample(&[1.0], &[0.0, 1.0], 0.5, 1.5, 4, &mut rng).is_err());
        assert!(resample(&[1.0], &[0.0], 1.5, 0.5, 4, &mut rng).is_err());
    }
}
