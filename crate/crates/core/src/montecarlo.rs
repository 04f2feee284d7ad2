//! Monte Carlo ensembles of trajectories.
//!
//! Sample `i` draws from its own ChaCha stream (seed, stream `i`), so the
//! sample set does not depend on how work is split across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::density::{heuristic_d, omega_approx_d};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, pairwise_sum, Execution};
use crate::map::{nearest_integer, LiftMap};

/// Trajectories whose cell label passes this are aborted.
pub const POSITION_LIMIT: i64 = 1_000_000_000;

/// Default iteration depth.
pub const DEFAULT_STEPS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleConfig {
    pub samples: usize,
    pub steps: usize,
    pub seed: u64,
    /// Perturb the in-cell coordinate by a random amount of the size of one
    /// rounding error after each expanding step.
    ///
    /// Without it, slopes such as 4 shift one exact bit pattern left every
    /// step and every orbit collapses onto a dyadic rational within ~26 steps.
    pub dither: bool,
    pub exec: Execution,
}

impl EnsembleConfig {
    pub fn new(samples: usize, steps: usize, seed: u64) -> Self {
        EnsembleConfig { samples, steps, seed, dither: true, exec: Execution::default() }
    }
}

/// Positions at step 0, at the midpoint `steps / 2`, and at `steps`.
/// Aborted samples are left out.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub steps: usize,
    pub midpoint: usize,
    pub initial: Vec<f64>,
    pub middle: Vec<f64>,
    pub last: Vec<f64>,
    pub aborted: usize,
}

const DITHER_ULP: f64 = 1.0 / 9_007_199_254_740_992.0; // 2^-53

fn run_sample(map: &LiftMap, cfg: &EnsembleConfig, index: usize) -> Option<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let x0 = rng.random::<f64>() - 0.5;
    let midpoint = cfg.steps / 2;
    // Position is k + y with y in I0, which keeps full precision in y.
    let mut k: i64 = 0;
    let mut y = x0;
    let mut middle = x0;
    for step in 1..=cfg.steps {
        let (fy, slope) = map.eval_cell(y);
        let jump = nearest_integer(fy).ok()?;
        k = k.checked_add(jump)?;
        y = fy - jump as f64;
        if cfg.dither && slope.abs() > 1.0 {
            let eps = slope.abs() * DITHER_ULP;
            y += eps * (2.0 * rng.random::<f64>() - 1.0);
            if y < -0.5 {
                y += 1.0;
                k -= 1;
            } else if y >= 0.5 {
                y -= 1.0;
                k += 1;
            }
        }
        if k.abs() > POSITION_LIMIT {
            return None;
        }
        if step == midpoint {
            middle = k as f64 + y;
        }
    }
    Some([x0, middle, k as f64 + y])
}

/// Iterate `samples` orbits with `x0` uniform on `I0`.
pub fn simulate_ensemble(map: &LiftMap, cfg: &EnsembleConfig) -> Result<Ensemble> {
    if cfg.samples == 0 || cfg.steps == 0 {
        return Err(Error::InvalidArgument("need at least one sample and one step".into()));
    }
    let raw = map_indexed(cfg.exec, cfg.samples, |i| run_sample(map, cfg, i));
    let mut e = Ensemble {
        steps: cfg.steps,
        midpoint: cfg.steps / 2,
        initial: Vec::with_capacity(cfg.samples),
        middle: Vec::with_capacity(cfg.samples),
        last: Vec::with_capacity(cfg.samples),
        aborted: 0,
    };
    for r in raw {
        match r {
            Some([a, b, c]) => {
                e.initial.push(a);
                e.middle.push(b);
                e.last.push(c);
            }
            None => e.aborted += 1,
        }
    }
    Ok(e)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub samples: usize,
    pub aborted: usize,
    pub steps: usize,
    pub mean: f64,
    /// Unbiased sample variance of the final positions.
    pub variance: f64,
    /// `(Var x_n - Var x_{n/2}) / (2(n - n/2))`.
    pub d_estimate: f64,
    pub stderr: f64,
    /// `Var x_n / (2n)`, biased by the initial spread and early transients.
    pub d_naive: f64,
    pub stderr_naive: f64,
    pub drift: f64,
    /// Kolmogorov-Smirnov distance to `Normal(mean, variance)`; absent when
    /// the variance is zero.
    pub ks: Option<f64>,
    pub warnings: Vec<String>,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    (mean, pairwise_sum(&sq) / (n - 1.0))
}

pub fn estimate_stats(ensemble: &Ensemble) -> Result<EnsembleStats> {
    let n = ensemble.last.len();
    if n < 2 {
        return Err(Error::InsufficientSamples(format!("{n} usable samples, need at least 2")));
    }
    let steps = ensemble.steps as f64;
    let (mean, variance) = mean_var(&ensemble.last);
    let (mid_mean, mid_var) = mean_var(ensemble.middle.as_slice());
    let span = 2.0 * (ensemble.steps - ensemble.midpoint) as f64;
    let d_estimate = (variance - mid_var) / span;
    // Delta method on the difference of the two sample variances.
    let u: Vec<f64> = ensemble
        .last
        .iter()
        .zip(&ensemble.middle)
        .map(|(a, b)| (a - mean).powi(2) - (b - mid_mean).powi(2))
        .collect();
    let (_, var_u) = mean_var(&u);
    let stderr = (var_u / n as f64).sqrt() / span;
    let d_naive = variance / (2.0 * steps);
    let stderr_naive = (2.0 * variance * variance / ((n as f64 - 1.0) * (2.0 * steps).powi(2))).sqrt();

    let mut warnings = Vec::new();
    if ensemble.aborted > 0 {
        warnings.push(format!("{} samples aborted on position overflow", ensemble.aborted));
    }
    let ks = if variance > 0.0 {
        let normal = Normal::new(mean, variance.sqrt()).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Some(ks_statistic(&ensemble.last, |x| normal.cdf(x)))
    } else {
        warnings.push("zero variance: normal reference is degenerate, KS skipped".into());
        None
    };
    Ok(EnsembleStats {
        samples: n,
        aborted: ensemble.aborted,
        steps: ensemble.steps,
        mean,
        variance,
        d_estimate,
        stderr,
        d_naive,
        stderr_naive,
        drift: mean / steps,
        ks,
        warnings,
    })
}

/// One-sample Kolmogorov-Smirnov statistic `sup |F_N - F|`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |d: f64, (i, &x)| {
        let f = cdf(x);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}

/// Critical value of the KS statistic at the 1% level.
pub fn ks_critical_1pct(samples: usize) -> f64 {
    1.63 / (samples as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub lambda: f64,
    pub d_mc: Option<f64>,
    pub stderr: Option<f64>,
    pub d_heuristic: f64,
    pub d_omega: f64,
    pub ks: Option<f64>,
    pub error: Option<String>,
}

/// Monte Carlo `D` for the linear map at each slope, next to the two
/// analytic approximations. Every point reuses `seed`, so neighbouring rows
/// share their random numbers. Failed points keep their row with `error` set.
pub fn scan_lambda(grid: &[f64], samples: usize, steps: usize, seed: u64, exec: Execution) -> Vec<ScanRow> {
    grid.iter()
        .map(|&lambda| {
            let mut row = ScanRow {
                lambda,
                d_mc: None,
                stderr: None,
                d_heuristic: heuristic_d(lambda),
                d_omega: omega_approx_d(lambda),
                ks: None,
                error: None,
            };
            let result = if lambda > 2.0 {
                LiftMap::linear(lambda).and_then(|map| {
                    let cfg = EnsembleConfig { exec, ..EnsembleConfig::new(samples, steps, seed) };
                    estimate_stats(&simulate_ensemble(&map, &cfg)?)
                })
            } else {
                Err(Error::InvalidArgument(format!("scan needs slopes above 2, got {lambda}")))
            };
            match result {
                Ok(s) => {
                    row.d_mc = Some(s.d_estimate);
                    row.stderr = Some(s.stderr);
                    row.ks = s.ks;
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect()
}
