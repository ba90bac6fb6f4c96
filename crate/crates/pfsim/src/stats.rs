//! Monte Carlo error analysis: batch means, integrated autocorrelation
//! times, ratio estimators and weighted least squares.

use serde::{Deserialize, Serialize};

/// Mean, standard error, sample count and integrated autocorrelation time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub tau: f64,
}

impl McEstimate {
    /// Batch-means error with `tau` from automatic windowing.
    pub fn from_series(xs: &[f64]) -> McEstimate {
        let n = xs.len();
        let mean = mean(xs);
        let tau = integrated_autocorr_time(xs);
        let stderr = batch_means_stderr(xs, default_batches(n));
        McEstimate {
            mean,
            stderr,
            n_samples: n,
            tau,
        }
    }

    pub fn from_bools(xs: &[bool]) -> McEstimate {
        let v: Vec<f64> = xs.iter().map(|&b| b as u8 as f64).collect();
        McEstimate::from_series(&v)
    }

    /// Effective sample size `n / (2 τ)`.
    pub fn n_eff(&self) -> f64 {
        self.n_samples as f64 / (2.0 * self.tau).max(1.0)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

fn default_batches(n: usize) -> usize {
    if n >= 640 {
        32
    } else {
        (n / 20).max(2).min(n.max(1))
    }
}

/// Standard error of the mean from `n_batches` contiguous batch averages.
pub fn batch_means_stderr(xs: &[f64], n_batches: usize) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let b = n_batches.clamp(2, n);
    let size = n / b;
    let means: Vec<f64> = (0..b).map(|k| mean(&xs[k * size..(k + 1) * size])).collect();
    (variance(&means) / b as f64).sqrt()
}

/// Integrated autocorrelation time `½ + Σ ρ(t)` with Sokal's window `W ≥ c τ(W)`, c = 6.
pub fn integrated_autocorr_time(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 4 {
        return 0.5;
    }
    let m = mean(xs);
    let c0 = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64;
    if c0 <= 0.0 {
        return 0.5;
    }
    let mut tau = 0.5;
    for t in 1..n / 2 {
        let ct = (0..n - t).map(|i| (xs[i] - m) * (xs[i + t] - m)).sum::<f64>() / n as f64;
        tau += ct / c0;
        if t as f64 >= 6.0 * tau {
            break;
        }
    }
    tau.max(0.5)
}

/// Ratio `Σ a / Σ b` with a delta-method batch-means standard error.
pub fn ratio_estimate(num: &[f64], den: &[f64]) -> (f64, f64) {
    assert_eq!(num.len(), den.len());
    let n = num.len();
    let (sa, sb): (f64, f64) = (num.iter().sum(), den.iter().sum());
    if sb == 0.0 {
        return (f64::NAN, f64::NAN);
    }
    let r = sa / sb;
    let b = default_batches(n).clamp(2, n.max(2));
    let size = (n / b).max(1);
    let b = n / size;
    if b < 2 {
        return (r, 0.0);
    }
    let mb = sb / n as f64;
    // linearised residuals a − r·b, batched
    let zs: Vec<f64> = (0..b)
        .map(|k| {
            let s = k * size;
            (s..s + size).map(|i| num[i] - r * den[i]).sum::<f64>() / size as f64
        })
        .collect();
    let var = zs.iter().map(|z| z * z).sum::<f64>() / (b - 1) as f64;
    (r, (var / b as f64).sqrt() / mb)
}

/// `−log p̂` with first-order bias correction and delta-method error.
pub fn neg_log(p: f64, se: f64) -> (f64, f64) {
    (-p.ln() + se * se / (2.0 * p * p), se / p)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
}

/// Weighted least squares `y ≈ a + b x` with weights `1/se²`; zero errors
/// fall back to unit weights.
pub fn weighted_least_squares(x: &[f64], y: &[f64], se: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n || se.len() != n {
        return None;
    }
    let unit = se.iter().any(|&s| !(s > 0.0 && s.is_finite()));
    let w: Vec<f64> = se.iter().map(|&s| if unit { 1.0 } else { 1.0 / (s * s) }).collect();
    let sw: f64 = w.iter().sum();
    let sx: f64 = w.iter().zip(x).map(|(w, x)| w * x).sum();
    let sy: f64 = w.iter().zip(y).map(|(w, y)| w * y).sum();
    let sxx: f64 = w.iter().zip(x).map(|(w, x)| w * x * x).sum();
    let sxy: f64 = (0..n).map(|i| w[i] * x[i] * y[i]).sum();
    let det = sw * sxx - sx * sx;
    if det.abs() < 1e-300 {
        return None;
    }
    let slope = (sw * sxy - sx * sy) / det;
    let intercept = (sxx * sy - sx * sxy) / det;
    let (slope_se, intercept_se) = if unit {
        if n > 2 {
            let rss: f64 = (0..n).map(|i| (y[i] - intercept - slope * x[i]).powi(2)).sum();
            let s2 = rss / (n - 2) as f64;
            ((s2 * sw / det).sqrt(), (s2 * sxx / det).sqrt())
        } else {
            (0.0, 0.0)
        }
    } else {
        ((sw / det).sqrt(), (sxx / det).sqrt())
    };
    Some(LinearFit {
        slope,
        intercept,
        slope_se,
        intercept_se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn iid_stderr_close_to_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let xs: Vec<f64> = (0..20000).map(|_| rng.gen::<f64>()).collect();
        let e = McEstimate::from_series(&xs);
        let naive = (variance(&xs) / xs.len() as f64).sqrt();
        assert!((e.stderr / naive - 1.0).abs() < 0.4);
        assert!(e.tau < 0.8);
        assert!((e.mean - 0.5).abs() < 4.0 * e.stderr);
    }

    #[test]
    fn ar1_tau() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = 0.8;
        let mut x = 0.0;
        let xs: Vec<f64> = (0..100000)
            .map(|_| {
                x = a * x + rng.gen::<f64>() - 0.5;
                x
            })
            .collect();
        let tau = integrated_autocorr_time(&xs);
        let exact = 0.5 * (1.0 + a) / (1.0 - a);
        assert!((tau / exact - 1.0).abs() < 0.15, "{tau} vs {exact}");
    }

    #[test]
    fn exact_fit() {
        let x = [1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|h| 2.0 * h + 0.3).collect();
        let f = weighted_least_squares(&x, &y, &[0.0; 3]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 0.3).abs() < 1e-12);
        assert!(f.slope_se < 1e-12);
        assert!(weighted_least_squares(&[1.0], &[1.0], &[1.0]).is_none());
    }

    #[test]
    fn ratio_of_constants() {
        let (r, se) = ratio_estimate(&[1.0; 100], &[4.0; 100]);
        assert_eq!(r, 0.25);
        assert!(se.abs() < 1e-12);
    }
}
