//! Lattice densities, their evolution under the transfer matrices, and the
//! closed-form and approximate diffusion coefficients.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{map_indexed, pairwise_sum, Execution};
use crate::map::{LiftMap, POSITION_TOL};
use crate::transfer::TransitionMatrixSet;

/// Values below this are dropped from Gaussian profiles.
pub const TRUNCATION: f64 = 1e-16;

/// Piecewise-constant density: `values[k - k_min][j]` is the density on cell
/// `j` of `I_k`. Mass on a cell is density times cell length.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeDensity {
    k_min: i64,
    values: Vec<Vec<f64>>,
    lengths: Vec<f64>,
    step: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityRow {
    pub k: i64,
    /// 1-based cell index.
    pub j: usize,
    pub density: f64,
    pub mass: f64,
}

impl LatticeDensity {
    pub fn new(k_min: i64, values: Vec<Vec<f64>>, lengths: Vec<f64>, step: usize) -> Result<Self> {
        if values.iter().any(|v| v.len() != lengths.len()) {
            return Err(Error::InvalidArgument("density rows must have one entry per cell".into()));
        }
        if values.iter().flatten().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidArgument("densities must be finite and nonnegative".into()));
        }
        Ok(LatticeDensity { k_min, values, lengths, step })
    }

    /// Uniform density on `I0`, i.e. `P_k(0) = δ_{k,0}`.
    pub fn delta(lengths: &[f64]) -> Self {
        LatticeDensity { k_min: 0, values: vec![vec![1.0; lengths.len()]], lengths: lengths.to_vec(), step: 0 }
    }

    /// Uniform density on `I_k`.
    pub fn delta_at(k: i64, lengths: &[f64]) -> Self {
        LatticeDensity { k_min: k, ..Self::delta(lengths) }
    }

    pub fn k_min(&self) -> i64 {
        self.k_min
    }

    pub fn k_max(&self) -> i64 {
        self.k_min + self.values.len() as i64 - 1
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn cell_count(&self) -> usize {
        self.lengths.len()
    }

    /// Density on cell `j` of `I_k` (0 outside the support).
    pub fn density(&self, k: i64, j: usize) -> f64 {
        usize::try_from(k - self.k_min)
            .ok()
            .and_then(|i| self.values.get(i))
            .map_or(0.0, |row| row[j])
    }

    pub fn row(&self, k: i64) -> Option<&[f64]> {
        usize::try_from(k - self.k_min).ok().and_then(|i| self.values.get(i)).map(Vec::as_slice)
    }

    /// Mass carried by the unit cell `I_k`.
    pub fn cell_mass(&self, k: i64) -> f64 {
        self.row(k).map_or(0.0, |r| r.iter().zip(&self.lengths).map(|(d, l)| d * l).sum())
    }

    pub fn total_mass(&self) -> f64 {
        let masses: Vec<f64> = (self.k_min..=self.k_max()).map(|k| self.cell_mass(k)).collect();
        pairwise_sum(&masses)
    }

    /// Mean of the integer label `k` under the lattice masses.
    pub fn lattice_mean(&self) -> f64 {
        let t: Vec<f64> = (self.k_min..=self.k_max()).map(|k| k as f64 * self.cell_mass(k)).collect();
        pairwise_sum(&t) / self.total_mass()
    }

    /// Variance of the integer label `k` under the lattice masses.
    pub fn lattice_variance(&self) -> f64 {
        let mean = self.lattice_mean();
        let t: Vec<f64> =
            (self.k_min..=self.k_max()).map(|k| (k as f64 - mean).powi(2) * self.cell_mass(k)).collect();
        pairwise_sum(&t) / self.total_mass()
    }

    pub fn rows(&self) -> Vec<DensityRow> {
        let mut out = Vec::with_capacity(self.values.len() * self.cell_count());
        for (i, row) in self.values.iter().enumerate() {
            for (j, (&d, &l)) in row.iter().zip(&self.lengths).enumerate() {
                out.push(DensityRow { k: self.k_min + i as i64, j: j + 1, density: d, mass: d * l });
            }
        }
        out
    }

    /// Drop all-zero rows at either end of the support.
    fn trim(&mut self) {
        let lead = self.values.iter().take_while(|r| r.iter().all(|&x| x == 0.0)).count();
        if lead == self.values.len() {
            return;
        }
        let trail = self.values.iter().rev().take_while(|r| r.iter().all(|&x| x == 0.0)).count();
        self.values.truncate(self.values.len() - trail);
        self.values.drain(..lead);
        self.k_min += lead as i64;
    }
}

/// One application of `P_k(n+1) = Σ_j p_j P_{k-j}(n)`.
pub fn evolve_step(set: &TransitionMatrixSet, density: &LatticeDensity, exec: Execution) -> LatticeDensity {
    let m = set.cell_count();
    let lo = *set.matrices().keys().next().unwrap_or(&0);
    let hi = *set.matrices().keys().next_back().unwrap_or(&0);
    let k_min = density.k_min + lo;
    let len = (density.k_max() + hi - k_min + 1) as usize;
    let values = map_indexed(exec, len, |idx| {
        let k = k_min + idx as i64;
        let mut out = vec![0.0; m];
        for (&j, p) in set.matrices() {
            if let Some(src) = density.row(k - j) {
                for (i, o) in out.iter_mut().enumerate() {
                    for (l, s) in src.iter().enumerate() {
                        *o += p[(i, l)] * s;
                    }
                }
            }
        }
        out
    });
    LatticeDensity { k_min, values, lengths: density.lengths.clone(), step: density.step + 1 }
}

/// `n` steps of the lattice convolution.
pub fn evolve(
    set: &TransitionMatrixSet,
    initial: &LatticeDensity,
    n: usize,
    exec: Execution,
) -> Result<LatticeDensity> {
    if initial.cell_count() != set.cell_count()
        || initial.lengths.iter().zip(set.lengths()).any(|(a, b)| (a - b).abs() > POSITION_TOL)
    {
        return Err(Error::InvalidArgument("density and transition set use different partitions".into()));
    }
    let mut d = initial.clone();
    for _ in 0..n {
        d = evolve_step(set, &d, exec);
    }
    Ok(d)
}

/// Limit profile `α_j / (2√(πDn)) · exp(-(k - drift·n)² / (4Dn))`, before truncation.
pub fn gaussian_density(d: f64, drift: f64, alpha_j: f64, n: usize, k: i64) -> f64 {
    let dn = d * n as f64;
    let x = k as f64 - drift * n as f64;
    alpha_j / (2.0 * (PI * dn).sqrt()) * (-x * x / (4.0 * dn)).exp()
}

/// The Gaussian profile on the lattice, truncated below [`TRUNCATION`] and
/// renormalised to unit mass.
pub fn gaussian_profile(d: f64, drift: f64, alpha: &[f64], lengths: &[f64], n: usize) -> Result<LatticeDensity> {
    if !(d > 0.0) || n == 0 {
        return Err(Error::InvalidArgument(format!("need D > 0 and n >= 1, got D = {d}, n = {n}")));
    }
    if alpha.len() != lengths.len() {
        return Err(Error::InvalidArgument("alpha needs one entry per cell".into()));
    }
    let dn = d * n as f64;
    let peak = alpha.iter().fold(0.0, |m: f64, a| m.max(*a)) / (2.0 * (PI * dn).sqrt());
    let radius = if peak > TRUNCATION { (4.0 * dn * (peak / TRUNCATION).ln()).sqrt() } else { 0.0 };
    let center = drift * n as f64;
    let k_min = (center - radius).floor() as i64;
    let k_max = (center + radius).ceil() as i64;
    let values: Vec<Vec<f64>> = (k_min..=k_max)
        .map(|k| {
            alpha
                .iter()
                .map(|&a| {
                    let v = gaussian_density(d, drift, a, n, k);
                    if v < TRUNCATION { 0.0 } else { v }
                })
                .collect()
        })
        .collect();
    let mut profile = LatticeDensity { k_min, values, lengths: lengths.to_vec(), step: n };
    profile.trim();
    let mass = profile.total_mass();
    if !(mass > 0.0) {
        return Err(Error::InvalidArgument("profile has no mass above the truncation threshold".into()));
    }
    profile.values.iter_mut().flatten().for_each(|v| *v /= mass);
    Ok(profile)
}

/// Sup distance between the two cumulative mass functions, accumulated cell
/// by cell in `(k, j)` order.
pub fn kolmogorov_distance(a: &LatticeDensity, b: &LatticeDensity) -> Result<f64> {
    if a.cell_count() != b.cell_count()
        || a.lengths.iter().zip(&b.lengths).any(|(x, y)| (x - y).abs() > POSITION_TOL)
    {
        return Err(Error::InvalidArgument("densities live on different partitions".into()));
    }
    let (mut ca, mut cb, mut sup) = (0.0, 0.0, 0.0f64);
    for k in a.k_min.min(b.k_min)..=a.k_max().max(b.k_max()) {
        for (j, &l) in a.lengths.iter().enumerate() {
            ca += a.density(k, j) * l;
            cb += b.density(k, j) * l;
            sup = sup.max((ca - cb).abs());
        }
    }
    Ok(sup)
}

/// `D = ½∫f² - 1/24` for maps whose piece endpoints are all half-integers.
pub fn closed_form_d(map: &LiftMap) -> Result<f64> {
    let mut integral = 0.0;
    for j in 0..map.piece_count() {
        let p = map.piece(j);
        for v in [p.left, p.right] {
            let twice = 2.0 * v;
            let r = twice.round();
            if (twice - r).abs() > 1e-9 || (r as i64).rem_euclid(2) != 1 {
                return Err(Error::HypothesisViolation(format!(
                    "piece {} takes the value {v}, not a half-integer",
                    j + 1
                )));
            }
        }
        integral += (p.end - p.start) * (p.left * p.left + p.left * p.right + p.right * p.right) / 3.0;
    }
    Ok(0.5 * integral - 1.0 / 24.0)
}

/// First and second moments `(Σ k p_k, Σ k² p_k)` of a one-cell jump law.
pub fn second_moment(set: &TransitionMatrixSet) -> Result<(f64, f64)> {
    if set.cell_count() != 1 {
        return Err(Error::Unsupported(format!(
            "moments need a one-cell partition, got {} cells",
            set.cell_count()
        )));
    }
    let (mut s1, mut s2) = (0.0, 0.0);
    for (&k, p) in set.matrices() {
        let k = k as f64;
        s1 += k * p[(0, 0)];
        s2 += k * k * p[(0, 0)];
    }
    Ok((s1, s2))
}

/// Rough estimate `(Λ-1)²/24`; off by up to about 50% (Λ = 4 gives 3/8
/// against the exact 1/4).
pub fn heuristic_d(lambda: f64) -> f64 {
    (lambda - 1.0).powi(2) / 24.0
}

/// 2-periodic sawtooth with `ω = 2 - 3|Λ - 4|` on `[3, 5)`: 2 at even and -1
/// at odd integers.
pub fn omega(lambda: f64) -> f64 {
    let t = (lambda - 3.0).rem_euclid(2.0) + 3.0;
    2.0 - 3.0 * (t - 4.0).abs()
}

/// `(Λ-1)(Λ-ω(Λ))/24`, exact at integer slopes.
pub fn omega_approx_d(lambda: f64) -> f64 {
    (lambda - 1.0) * (lambda - omega(lambda)) / 24.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::MarkovPartition;
    use crate::transfer::{build_transition_matrices, diffusion_spectral};

    fn set(lambda: f64) -> TransitionMatrixSet {
        build_transition_matrices(&LiftMap::linear(lambda).unwrap(), &MarkovPartition::unit()).unwrap()
    }

    #[test]
    fn one_step_of_slope_three() {
        let s = set(3.0);
        let d = evolve(&s, &LatticeDensity::delta(s.lengths()), 1, Execution::Sequential).unwrap();
        assert_eq!((d.k_min(), d.k_max()), (-1, 1));
        for k in -1..=1 {
            assert!((d.density(k, 0) - 1.0 / 3.0).abs() < 1e-15);
        }
        let d0 = evolve(&s, &LatticeDensity::delta(s.lengths()), 0, Execution::Sequential).unwrap();
        assert_eq!(d0, LatticeDensity::delta(s.lengths()));
    }

    #[test]
    fn variance_grows_linearly() {
        let s = set(3.0);
        let d = evolve(&s, &LatticeDensity::delta(s.lengths()), 40, Execution::Sequential).unwrap();
        assert!((d.lattice_variance() - 2.0 * 40.0 / 3.0).abs() < 1e-8);
        assert!((d.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parallel_evolution_is_identical() {
        let s = set(5.0);
        let a = evolve(&s, &LatticeDensity::delta(s.lengths()), 30, Execution::Sequential).unwrap();
        let b = evolve(&s, &LatticeDensity::delta(s.lengths()), 30, Execution::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gaussian_profile_properties() {
        let g = gaussian_profile(1.0 / 3.0, 0.0, &[1.0], &[1.0], 50).unwrap();
        assert!((g.total_mass() - 1.0).abs() < 1e-12);
        for k in 0..=g.k_max() {
            assert_eq!(g.density(k, 0), g.density(-k, 0));
        }
        let peak = gaussian_density(1.0 / 3.0, 0.0, 1.0, 50, 0);
        assert!((peak - 1.0 / (2.0 * (PI * 50.0 / 3.0).sqrt())).abs() < 1e-15);
        assert!(gaussian_profile(0.0, 0.0, &[1.0], &[1.0], 5).is_err());
    }

    #[test]
    fn kolmogorov_examples() {
        let a = LatticeDensity::delta(&[1.0]);
        assert_eq!(kolmogorov_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(kolmogorov_distance(&a, &LatticeDensity::delta_at(1, &[1.0])).unwrap(), 1.0);
        let s = set(3.0);
        let dist = |n| {
            let e = evolve(&s, &LatticeDensity::delta(s.lengths()), n, Execution::Sequential).unwrap();
            kolmogorov_distance(&e, &gaussian_profile(1.0 / 3.0, 0.0, &[1.0], &[1.0], n).unwrap()).unwrap()
        };
        assert!(dist(100) < dist(10));
    }

    #[test]
    fn closed_form_examples() {
        assert!((closed_form_d(&LiftMap::linear(3.0).unwrap()).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((closed_form_d(&LiftMap::linear(5.0).unwrap()).unwrap() - 1.0).abs() < 1e-15);
        assert!((closed_form_d(&LiftMap::zigzag(1, 0.3).unwrap()).unwrap() - 0.4).abs() < 1e-15);
        assert!(matches!(
            closed_form_d(&LiftMap::linear(4.0).unwrap()),
            Err(Error::HypothesisViolation(_))
        ));
    }

    #[test]
    fn closed_form_agrees_with_spectrum_for_zigzag() {
        let f = LiftMap::zigzag(1, 0.3).unwrap();
        let part = MarkovPartition::new(vec![-0.5, -0.3, 0.0, 0.3, 0.5]).unwrap();
        let r = diffusion_spectral(&build_transition_matrices(&f, &part).unwrap()).unwrap();
        assert!((r.d - 0.4).abs() < 1e-10);
    }

    #[test]
    fn moments() {
        let (s1, s2) = second_moment(&set(3.0)).unwrap();
        assert!(s1.abs() < 1e-15);
        assert!((s2 - 2.0 / 3.0).abs() < 1e-15);
        // Same number from ∫f² - 1/12 = 3/4 - 1/12.
        assert!((s2 - (0.75 - 1.0 / 12.0)).abs() < 1e-15);
        let halves = build_transition_matrices(
            &LiftMap::linear(4.0).unwrap(),
            &MarkovPartition::new(vec![-0.5, 0.0, 0.5]).unwrap(),
        )
        .unwrap();
        assert!(matches!(second_moment(&halves), Err(Error::Unsupported(_))));
    }

    #[test]
    fn approximations() {
        assert!((heuristic_d(3.0) - 1.0 / 6.0).abs() < 1e-15);
        assert!((heuristic_d(5.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((heuristic_d(4.0) - 0.375).abs() < 1e-15);
        assert_eq!(omega(4.0), 2.0);
        assert_eq!(omega(3.0), -1.0);
        assert_eq!(omega(3.5), 0.5);
        assert_eq!(omega(6.0), 2.0);
        assert!((omega_approx_d(4.0) - 0.25).abs() < 1e-15);
        assert!((omega_approx_d(3.0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((omega_approx_d(3.5) - 0.3125).abs() < 1e-15);
        for l in [3.0, 5.0, 7.0, 9.0] {
            assert!((omega_approx_d(l) - (l * l - 1.0) / 24.0).abs() < 1e-12);
        }
    }
}
