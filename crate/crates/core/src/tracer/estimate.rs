use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::series::DisplacementSeries;
use crate::error::TracerError;
use crate::rng::{self, Purpose};
use crate::stats::{quantile_sorted, ols_slope_weights};

pub const MIN_REPLICAS: usize = 8;
pub const MIN_RESAMPLES: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub t_lo: f64,
    pub t_hi: f64,
}

impl FitWindow {
    /// `[t_max / √10, t_max]`.
    pub fn last_half_decade(t_max: f64) -> Self {
        FitWindow {
            t_lo: t_max / 10f64.sqrt(),
            t_hi: t_max,
        }
    }
}

/// How the bootstrap distribution is turned into an interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interval {
    Percentile,
    /// Bias-corrected and accelerated percentiles; the acceleration comes
    /// from the replica jackknife. Per-replica slopes are skewed (squares of
    /// Gaussians), which plain percentiles under-cover at small replica counts.
    Bca,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorOptions {
    pub n_resamples: usize,
    pub confidence: f64,
    pub seed: u64,
    pub interval: Interval,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        EstimatorOptions {
            n_resamples: 2000,
            confidence: 0.95,
            seed: 0x5eed,
            interval: Interval::Bca,
        }
    }
}

/// Diffusion matrix estimate with bootstrap percentile intervals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffusionEstimate {
    pub d_hat: Vec<Vec<f64>>,
    pub ci_lo: Vec<Vec<f64>>,
    pub ci_hi: Vec<Vec<f64>>,
    /// Half the width of the percentile interval.
    pub half_width: Vec<Vec<f64>>,
    /// Standard deviation of the bootstrap distribution.
    pub std_err: Vec<Vec<f64>>,
    pub window: FitWindow,
    pub n_replicas: usize,
    pub n_times: usize,
    pub n_resamples: usize,
}

impl DiffusionEstimate {
    pub fn ci_excludes_zero(&self, a: usize, b: usize) -> bool {
        self.ci_lo[a][b] > 0.0 || self.ci_hi[a][b] < 0.0
    }

    pub fn covers(&self, a: usize, b: usize, value: f64) -> bool {
        self.ci_lo[a][b] <= value && value <= self.ci_hi[a][b]
    }
}

pub fn estimate_d(series: &DisplacementSeries, window: FitWindow) -> Result<DiffusionEstimate, TracerError> {
    estimate_d_with(series, window, &EstimatorOptions::default())
}

/// Fits `E[X_t ⊗ X_t] ≈ A + 2 D t` by least squares over the sample times in
/// `window`. The intercept absorbs the early-time transient.
///
/// The slope is a linear functional of the averaged curve, so it equals the
/// replica average of per-replica slopes; the bootstrap resamples those.
pub fn estimate_d_with(
    series: &DisplacementSeries,
    window: FitWindow,
    opts: &EstimatorOptions,
) -> Result<DiffusionEstimate, TracerError> {
    let n_rep = series.n_replicas();
    if n_rep < MIN_REPLICAS {
        return Err(TracerError::TooFewReplicas {
            got: n_rep,
            need: MIN_REPLICAS,
        });
    }
    if opts.n_resamples < MIN_RESAMPLES {
        return Err(TracerError::InvalidInput(format!(
            "at least {MIN_RESAMPLES} bootstrap resamples required"
        )));
    }
    if !(opts.confidence > 0.0 && opts.confidence < 1.0) {
        return Err(TracerError::InvalidInput("confidence must lie in (0,1)".into()));
    }
    let idx: Vec<usize> = series
        .times()
        .iter()
        .enumerate()
        .filter(|(_, &t)| t >= window.t_lo && t <= window.t_hi)
        .map(|(i, _)| i)
        .collect();
    let x: Vec<f64> = idx.iter().map(|&i| series.times()[i]).collect();
    let w = ols_slope_weights(&x).ok_or(TracerError::DegenerateWindow(idx.len()))?;

    let d = series.dim();
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|a| (a..d).map(move |b| (a, b))).collect();
    // per_rep[r][p]: that replica's fitted D entry for pair p.
    let per_rep: Vec<Vec<f64>> = (0..n_rep)
        .map(|r| {
            pairs
                .iter()
                .map(|&(a, b)| {
                    idx.iter()
                        .zip(&w)
                        .map(|(&t, wk)| wk * series.get(r, t, a) * series.get(r, t, b))
                        .sum::<f64>()
                        / 2.0
                })
                .collect()
        })
        .collect();
    let mean_of = |rows: &mut dyn Iterator<Item = usize>| -> Vec<f64> {
        let mut acc = vec![0.0; pairs.len()];
        for r in rows {
            for (p, v) in per_rep[r].iter().enumerate() {
                acc[p] += v;
            }
        }
        acc.iter().map(|v| v / n_rep as f64).collect()
    };
    let point = mean_of(&mut (0..n_rep));

    let boot: Vec<Vec<f64>> = (0..opts.n_resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng::stream(opts.seed, Purpose::Bootstrap, b as u64);
            let draws: Vec<usize> = (0..n_rep).map(|_| rng.random_range(0..n_rep)).collect();
            mean_of(&mut draws.into_iter())
        })
        .collect();

    let alpha = (1.0 - opts.confidence) / 2.0;
    let mut d_hat = vec![vec![0.0; d]; d];
    let mut ci_lo = d_hat.clone();
    let mut ci_hi = d_hat.clone();
    let mut half = d_hat.clone();
    let mut se = d_hat.clone();
    for (p, &(a, b)) in pairs.iter().enumerate() {
        let mut col: Vec<f64> = boot.iter().map(|v| v[p]).collect();
        col.sort_by(f64::total_cmp);
        let (q_lo, q_hi) = match opts.interval {
            Interval::Percentile => (alpha, 1.0 - alpha),
            Interval::Bca => {
                let jack: Vec<f64> = per_rep
                    .iter()
                    .map(|v| (n_rep as f64 * point[p] - v[p]) / (n_rep - 1) as f64)
                    .collect();
                bca_levels(&col, point[p], &jack, alpha)
            }
        };
        let lo = quantile_sorted(&col, q_lo);
        let hi = quantile_sorted(&col, q_hi);
        let m = col.iter().sum::<f64>() / col.len() as f64;
        let sd = (col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (col.len() - 1) as f64).sqrt();
        for (i, j) in [(a, b), (b, a)] {
            d_hat[i][j] = point[p];
            ci_lo[i][j] = lo;
            ci_hi[i][j] = hi;
            half[i][j] = (hi - lo) / 2.0;
            se[i][j] = sd;
        }
    }
    Ok(DiffusionEstimate {
        d_hat,
        ci_lo,
        ci_hi,
        half_width: half,
        std_err: se,
        window,
        n_replicas: n_rep,
        n_times: idx.len(),
        n_resamples: opts.n_resamples,
    })
}

/// BCa quantile levels for a sorted bootstrap sample `col`, the point
/// estimate and its leave-one-out values. Falls back to plain percentiles
/// when the jackknife has no spread.
fn bca_levels(col: &[f64], point: f64, jack: &[f64], alpha: f64) -> (f64, f64) {
    let normal = Normal::standard();
    let b = col.len() as f64;
    let below = col.iter().filter(|&&v| v < point).count() as f64;
    let ties = col.iter().filter(|&&v| v == point).count() as f64;
    let frac = ((below + ties / 2.0) / b).clamp(0.5 / b, 1.0 - 0.5 / b);
    let z0 = normal.inverse_cdf(frac);
    let jm = jack.iter().sum::<f64>() / jack.len() as f64;
    let (mut s2, mut s3) = (0.0, 0.0);
    for v in jack {
        let d = jm - v;
        s2 += d * d;
        s3 += d * d * d;
    }
    if s2 == 0.0 || !z0.is_finite() {
        return (alpha, 1.0 - alpha);
    }
    let acc = s3 / (6.0 * s2.powf(1.5));
    let level = |q: f64| {
        let z = normal.inverse_cdf(q);
        normal.cdf(z0 + (z0 + z) / (1.0 - acc * (z0 + z)))
    };
    (level(alpha), level(1.0 - alpha))
}

#[cfg(test)]
mod tests {
    use super::super::series::{linear_times, synthetic_brownian, SeriesParams};
    use super::*;

    #[test]
    fn zero_displacements_give_zero() {
        let times = linear_times(10.0, 10);
        let mut s = DisplacementSeries::new(
            times.clone(),
            2,
            SeriesParams {
                source: "zeros".into(),
                d: 2,
                s: None,
                rho: None,
                dims: vec![],
                seed: 0,
                streams: vec![],
            },
        )
        .unwrap();
        for _ in 0..8 {
            s.push_replica(&vec![0.0; times.len() * 2]).unwrap();
        }
        let e = estimate_d(&s, FitWindow::last_half_decade(10.0)).unwrap();
        assert!(e.d_hat.iter().flatten().all(|&v| v == 0.0));
        assert!(e.half_width.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = synthetic_brownian(1, 1.0, &linear_times(1.0, 4), 7, 1).unwrap();
        assert!(matches!(
            estimate_d(&s, FitWindow { t_lo: 0.0, t_hi: 1.0 }),
            Err(TracerError::TooFewReplicas { .. })
        ));
        let s = synthetic_brownian(1, 1.0, &linear_times(1.0, 4), 8, 1).unwrap();
        assert!(matches!(
            estimate_d(&s, FitWindow { t_lo: 0.9, t_hi: 1.0 }),
            Err(TracerError::DegenerateWindow(1))
        ));
    }

    #[test]
    fn recovers_known_constant() {
        let s = synthetic_brownian(2, 0.7, &linear_times(10.0, 20), 400, 3).unwrap();
        let e = estimate_d(&s, FitWindow::last_half_decade(10.0)).unwrap();
        assert!((e.d_hat[0][0] - 0.7).abs() < 4.0 * e.std_err[0][0]);
        assert_eq!(e.d_hat[0][1], e.d_hat[1][0]);
    }
}
