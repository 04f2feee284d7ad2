//! Billiard channel: a ball bouncing between a flat wall and a corrugated
//! one, recorded by the abscissas of successive reflections.
//!
//! With `u = (x_n - x_{n-1}) / h` the incoming slope and `α(x)` the tilt of
//! the wall normal, reflection rotates the direction by `2α`:
//! `u' = (u + t) / (1 - t·u)` with `t = tan 2α(x_n)`. For large `h` this is
//! approximately `x_{n+1} - x_n = x_n - x_{n-1} + f(x_n)`, `f = h·tan 2α`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{map_indexed, pairwise_sum, Execution};
use crate::map::centered_fraction;

/// `|1 - t·u|` below this counts as a grazing reflection.
pub const GRAZING_TOL: f64 = 1e-12;

/// Positions beyond this are treated as escaped and discarded.
const POSITION_LIMIT: f64 = 1e15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilliardState {
    pub x_prev: f64,
    pub x_curr: f64,
}

impl BilliardState {
    pub fn new(x_prev: f64, x_curr: f64) -> Self {
        BilliardState { x_prev, x_curr }
    }

    pub fn slope(&self, h: f64) -> f64 {
        (self.x_curr - self.x_prev) / h
    }
}

/// Ideal reflection at `x_curr` off a wall whose normal is tilted by `alpha(x)`.
pub fn exact_step(state: BilliardState, h: f64, alpha: impl Fn(f64) -> f64) -> Result<BilliardState> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("channel width must be positive, got {h}")));
    }
    let a = alpha(state.x_curr);
    if !(a.abs() < std::f64::consts::FRAC_PI_4) {
        return Err(Error::InvalidArgument(format!("|2 alpha| must stay below pi/2, got alpha = {a}")));
    }
    let u = state.slope(h);
    if !u.is_finite() {
        return Err(Error::NonFinite(u));
    }
    if a == 0.0 {
        return Ok(BilliardState::new(state.x_curr, state.x_curr + (state.x_curr - state.x_prev)));
    }
    let t = (2.0 * a).tan();
    let denom = 1.0 - t * u;
    if denom.abs() < GRAZING_TOL {
        return Err(Error::Grazing(state.x_curr));
    }
    let next = state.x_curr + h * (u + t) / denom;
    Ok(BilliardState::new(state.x_curr, next))
}

/// `x_{n+1} = 2x_n - x_{n-1} + f(x_n)`.
pub fn approximate_step(state: BilliardState, f: impl Fn(f64) -> f64) -> BilliardState {
    let next = state.x_curr + (state.x_curr - state.x_prev) + f(state.x_curr);
    BilliardState::new(state.x_curr, next)
}

/// Periodic forcing used by the approximate model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Force {
    /// `f ≡ 0`: uniform motion.
    Zero,
    /// `f(x) = Λ·{x)` with `{x)` the centred fractional part.
    Sawtooth { lambda: f64 },
}

impl Force {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Force::Zero => 0.0,
            Force::Sawtooth { lambda } => lambda * centered_fraction(x),
        }
    }

    /// Slope entering the variance formula.
    pub fn lambda(&self) -> f64 {
        match *self {
            Force::Zero => 0.0,
            Force::Sawtooth { lambda } => lambda,
        }
    }
}

/// `x_0, x_1, …, x_n` under the approximate recurrence.
pub fn trajectory(x0: f64, x1: f64, n: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut xs = Vec::with_capacity(n + 1);
    xs.push(x0);
    if n == 0 {
        return xs;
    }
    xs.push(x1);
    let mut s = BilliardState::new(x0, x1);
    for _ in 1..n {
        s = approximate_step(s, &f);
        xs.push(s.x_curr);
    }
    xs
}

/// `x_{n+1} = x_0 + (n+1)(x_1 - x_0) + Σ_{k=1..n} (n+1-k)·f(x_k)`, evaluated
/// from the points `xs = [x_0, …, x_n]`.
pub fn sum_form(xs: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    assert!(xs.len() >= 2, "sum form needs x_0 and x_1");
    let n = xs.len() - 1;
    let terms: Vec<f64> = (1..=n).map(|k| (n + 1 - k) as f64 * f(xs[k])).collect();
    xs[0] + (n + 1) as f64 * (xs[1] - xs[0]) + pairwise_sum(&terms)
}

/// `n²/12 + (Λ²/12)·n(n+1)(2n+1)/6`, the variance predicted when the
/// fractional parts along an orbit are independent and uniform.
pub fn theoretical_variance(n: u64, lambda: f64) -> f64 {
    let n = n as f64;
    n * n / 12.0 + lambda * lambda / 12.0 * n * (n + 1.0) * (2.0 * n + 1.0) / 6.0
}

/// Wall profile for the exact model: `α(x) = amplitude·{x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Wall {
    pub h: f64,
    pub amplitude: f64,
}

impl Wall {
    pub fn alpha(&self, x: f64) -> f64 {
        self.amplitude * centered_fraction(x)
    }

    /// Slope of the small-angle force `h·tan 2α ≈ 2h·amplitude·{x)`.
    pub fn effective_lambda(&self) -> f64 {
        2.0 * self.h * self.amplitude
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum Channel {
    Approximate { force: Force },
    Exact { wall: Wall },
}

impl Channel {
    fn lambda(&self) -> f64 {
        match self {
            Channel::Approximate { force } => force.lambda(),
            Channel::Exact { wall } => wall.effective_lambda(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointRow {
    pub checkpoint: usize,
    pub variance: f64,
    pub theoretical_variance: f64,
    /// Least-squares growth exponent over this and all earlier checkpoints.
    pub exponent_so_far: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelReport {
    pub samples: usize,
    pub steps: usize,
    pub discarded: usize,
    pub mean: f64,
    pub variance: f64,
    pub exponent: f64,
    pub rows: Vec<CheckpointRow>,
    pub warnings: Vec<String>,
}

/// `n/8, n/4, n/2, n` without zeros or repeats.
pub fn default_checkpoints(n: usize) -> Vec<usize> {
    let mut c: Vec<usize> = [n / 8, n / 4, n / 2, n].into_iter().filter(|&c| c > 0).collect();
    c.dedup();
    c
}

/// Least-squares slope of `ln variance` against `ln step`.
pub fn growth_exponent(points: &[(usize, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(c, v)| *c > 0 && *v > 0.0)
        .map(|&(c, v)| ((c as f64).ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn run_channel(channel: &Channel, steps: usize, checkpoints: &[usize], seed: u64, index: usize) -> Option<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let x1 = rng.random::<f64>() - 0.5;
    let mut s = BilliardState::new(0.0, x1);
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = checkpoints.iter().peekable();
    // s.x_curr holds x_step
    for step in 1..=steps {
        while next.peek() == Some(&&step) {
            out.push(s.x_curr);
            next.next();
        }
        if step == steps {
            break;
        }
        s = match channel {
            Channel::Approximate { force } => approximate_step(s, |x| force.eval(x)),
            Channel::Exact { wall } => exact_step(s, wall.h, |x| wall.alpha(x)).ok()?,
        };
        if !(s.x_curr.abs() < POSITION_LIMIT) {
            return None;
        }
    }
    Some(out)
}

/// Ensemble with `x_0 = 0` and `x_1` uniform on `I0`; variance of `x_c` at
/// each checkpoint and the fitted growth exponent. Grazing or escaping
/// samples are discarded; more than 1% discarded raises a warning.
pub fn simulate_channel(
    channel: &Channel,
    samples: usize,
    steps: usize,
    seed: u64,
    checkpoints: Option<&[usize]>,
    exec: Execution,
) -> Result<ChannelReport> {
    if samples < 2 || steps == 0 {
        return Err(Error::InvalidArgument("need at least two samples and one step".into()));
    }
    let mut cps: Vec<usize> = match checkpoints {
        Some(c) => c.to_vec(),
        None => default_checkpoints(steps),
    };
    cps.sort_unstable();
    cps.dedup();
    if cps.is_empty() || cps[0] == 0 || *cps.last().unwrap() > steps {
        return Err(Error::InvalidArgument(format!("checkpoints must lie in 1..={steps}")));
    }
    let runs = map_indexed(exec, samples, |i| run_channel(channel, steps, &cps, seed, i));
    let kept: Vec<Vec<f64>> = runs.into_iter().flatten().collect();
    let discarded = samples - kept.len();
    if kept.len() < 2 {
        return Err(Error::InsufficientSamples(format!("only {} samples survived", kept.len())));
    }
    let lambda = channel.lambda();
    let mut rows = Vec::with_capacity(cps.len());
    let mut points = Vec::with_capacity(cps.len());
    let (mut mean, mut variance) = (0.0, 0.0);
    for (i, &c) in cps.iter().enumerate() {
        let xs: Vec<f64> = kept.iter().map(|r| r[i]).collect();
        let m = pairwise_sum(&xs) / xs.len() as f64;
        let sq: Vec<f64> = xs.iter().map(|x| (x - m).powi(2)).collect();
        let v = pairwise_sum(&sq) / (xs.len() - 1) as f64;
        points.push((c, v));
        rows.push(CheckpointRow {
            checkpoint: c,
            variance: v,
            theoretical_variance: theoretical_variance(c as u64, lambda),
            exponent_so_far: growth_exponent(&points),
        });
        (mean, variance) = (m, v);
    }
    let mut warnings = Vec::new();
    if discarded * 100 > samples {
        warnings.push(format!("{discarded} of {samples} samples discarded (grazing or escape)"));
    }
    Ok(ChannelReport {
        samples: kept.len(),
        steps,
        discarded,
        mean,
        variance,
        exponent: growth_exponent(&points).unwrap_or(f64::NAN),
        rows,
        warnings,
    })
}
