//! Transfer (Perron-Frobenius) matrices on a Markov partition and the
//! diffusion coefficient from the curvature of their leading eigenvalue.
//!
//! `p_j[i][l]` is the density delivered to cell `i` of `I_{k+j}` by unit
//! density on cell `l` of `I_k`. With `P(λ) = Σ_j p_j e^{ijλ}` and `z(λ)` its
//! leading eigenvalue, `ln z(λ) ≈ iλ·drift - λ²·D` near 0.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::eigen::{leading_eigenpair, Eigenpair};
use crate::error::{Error, Result};
use crate::map::{LiftMap, POSITION_TOL};
use crate::partition::{validate_consistency, MarkovPartition, CONSISTENCY_TOL};

/// Tolerance for mass conservation of a transition set.
pub const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrixSet {
    matrices: BTreeMap<i64, DMatrix<f64>>,
    lengths: Vec<f64>,
}

impl TransitionMatrixSet {
    /// Assemble a set from explicit matrices; checks shapes, signs and mass.
    pub fn new(matrices: BTreeMap<i64, DMatrix<f64>>, lengths: Vec<f64>) -> Result<Self> {
        let m = lengths.len();
        if m == 0 || lengths.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::InvalidPartition("cell lengths must be positive".into()));
        }
        if (lengths.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPartition("cell lengths must sum to 1".into()));
        }
        for (j, p) in &matrices {
            if p.nrows() != m || p.ncols() != m {
                return Err(Error::InvalidArgument(format!("matrix for shift {j} is not {m}x{m}")));
            }
            if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                return Err(Error::InvalidArgument(format!("matrix for shift {j} has a negative entry")));
            }
        }
        let set = TransitionMatrixSet { matrices, lengths };
        let defect = set.mass_defect();
        if defect > MASS_TOL {
            return Err(Error::InvalidArgument(format!("mass is not conserved (defect {defect:e})")));
        }
        Ok(set)
    }

    pub fn cell_count(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn matrices(&self) -> &BTreeMap<i64, DMatrix<f64>> {
        &self.matrices
    }

    pub fn matrix(&self, shift: i64) -> Option<&DMatrix<f64>> {
        self.matrices.get(&shift)
    }

    pub fn max_shift(&self) -> i64 {
        self.matrices.keys().map(|j| j.abs()).max().unwrap_or(0)
    }

    /// `max_l |Σ_{j,i} p_j[i][l]·len_i - len_l|`.
    pub fn mass_defect(&self) -> f64 {
        (0..self.cell_count())
            .map(|l| {
                let out: f64 = self
                    .matrices
                    .values()
                    .map(|p| (0..self.cell_count()).map(|i| p[(i, l)] * self.lengths[i]).sum::<f64>())
                    .sum();
                (out - self.lengths[l]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `E = Σ_j p_j`.
    pub fn total(&self) -> DMatrix<f64> {
        let m = self.cell_count();
        self.matrices.values().fold(DMatrix::zeros(m, m), |acc, p| acc + p)
    }

    /// `P(λ) = Σ_j p_j e^{ijλ}`.
    pub fn characteristic_matrix(&self, lambda: f64) -> DMatrix<Complex64> {
        let m = self.cell_count();
        let mut out = DMatrix::from_element(m, m, Complex64::new(0.0, 0.0));
        for (&j, p) in &self.matrices {
            let phase = Complex64::from_polar(1.0, j as f64 * lambda);
            out += p.map(|x| Complex64::new(x, 0.0)) * phase;
        }
        out
    }

    /// Row-major JSON: `{"lengths": [...], "matrices": {"-1": [[...], ...], ...}}`.
    pub fn to_json(&self) -> serde_json::Value {
        let matrices: serde_json::Map<String, serde_json::Value> = self
            .matrices
            .iter()
            .map(|(j, p)| {
                let rows: Vec<Vec<f64>> =
                    (0..p.nrows()).map(|i| (0..p.ncols()).map(|c| p[(i, c)]).collect()).collect();
                (j.to_string(), serde_json::json!(rows))
            })
            .collect();
        serde_json::json!({ "lengths": self.lengths, "matrices": matrices })
    }
}

/// Transition matrices of `map` over `partition`: every cell image must be an
/// exact union of translated cells, each receiving `1/|slope|`.
pub fn build_transition_matrices(map: &LiftMap, partition: &MarkovPartition) -> Result<TransitionMatrixSet> {
    let report = validate_consistency(map, partition);
    let b = partition.breakpoints();
    let m = partition.cell_count();
    let lengths = partition.lengths();
    let mut matrices: BTreeMap<i64, DMatrix<f64>> = BTreeMap::new();
    for l in 0..m {
        let piece = map.piece(map.piece_index(0.5 * (b[l] + b[l + 1])));
        if b[l] < piece.start - POSITION_TOL || b[l + 1] > piece.end + POSITION_TOL {
            return Err(Error::Inconsistent { cell: l + 1, detail: "map is not linear on the cell".into() });
        }
        let slope = piece.slope();
        let (v0, v1) = (piece.value(b[l]), piece.value(b[l + 1]));
        let (lo, hi) = (v0.min(v1), v0.max(v1));
        let mut covered = 0.0;
        let k0 = (lo - 1.0).floor() as i64;
        let k1 = (hi + 1.0).ceil() as i64;
        for k in k0..=k1 {
            for i in 0..m {
                let (c0, c1) = (k as f64 + b[i], k as f64 + b[i + 1]);
                if c0 >= lo - CONSISTENCY_TOL && c1 <= hi + CONSISTENCY_TOL {
                    matrices.entry(k).or_insert_with(|| DMatrix::zeros(m, m))[(i, l)] += 1.0 / slope.abs();
                    covered += c1 - c0;
                }
            }
        }
        if (covered - (hi - lo)).abs() > 1e-8 {
            return Err(Error::Inconsistent {
                cell: l + 1,
                detail: format!(
                    "image [{lo}, {hi}] is not a union of cells (covered {covered}); {}",
                    report.detail
                ),
            });
        }
    }
    TransitionMatrixSet::new(matrices, lengths)
}

/// Leading eigenvalue of `P(λ)` for each `λ`, warm-starting along the list.
pub fn eigenvalue_curve(set: &TransitionMatrixSet, lambdas: &[f64]) -> Result<Vec<Complex64>> {
    let mut warm: Option<DVector<Complex64>> = None;
    let mut out = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let pair = leading_eigenpair(&set.characteristic_matrix(l), warm.as_ref())?;
        out.push(pair.value);
        warm = Some(pair.vector);
    }
    Ok(out)
}

/// Which computation produced a [`DiffusionReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Spectral,
    ClosedForm,
    Heuristic,
    Omega,
    MonteCarlo,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Spectral => "spectral",
            Method::ClosedForm => "closed-form",
            Method::Heuristic => "heuristic",
            Method::Omega => "omega",
            Method::MonteCarlo => "monte-carlo",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffusionReport {
    pub method: Method,
    pub d: f64,
    /// Mean displacement per step.
    pub drift: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    pub diagnostics: BTreeMap<String, f64>,
}

impl DiffusionReport {
    pub fn new(method: Method, d: f64, drift: f64) -> Self {
        DiffusionReport { method, d, drift, alpha: None, diagnostics: BTreeMap::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralOptions {
    /// Largest finite-difference step on the ladder.
    pub step: f64,
    /// Ladder length: steps `step / 2^i` for `i` in `0..levels`.
    pub levels: u32,
    /// Fail if no two neighbouring extrapolations agree this well.
    pub fail_tol: f64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions { step: 0.16, levels: 8, fail_tol: 1e-7 }
    }
}

/// Doubly Richardson-extrapolated `(ln z)''(0)` and `(ln z)'(0)` from central
/// differences at `s, s/2, s/4`, one entry per start step `s` on the ladder.
fn extrapolations(set: &TransitionMatrixSet, zero: &Eigenpair, steps: &[f64]) -> Result<(Vec<[f64; 2]>, f64)> {
    let n = steps.len();
    let mut plus = vec![Complex64::new(0.0, 0.0); n];
    let mut minus = plus.clone();
    let mut max_residual = zero.residual;
    for (side, out) in [(1.0, &mut plus), (-1.0, &mut minus)] {
        // Smallest step first so each solve warm-starts from a close neighbour.
        let mut warm = zero.vector.clone();
        for i in (0..n).rev() {
            let pair = leading_eigenpair(&set.characteristic_matrix(side * steps[i]), Some(&warm))?;
            max_residual = max_residual.max(pair.residual);
            out[i] = pair.value.ln();
            warm = pair.vector;
        }
    }
    let g0 = zero.value.ln();
    let d2: Vec<f64> = (0..n).map(|i| ((plus[i] - 2.0 * g0 + minus[i]) / (steps[i] * steps[i])).re).collect();
    let d1: Vec<f64> = (0..n).map(|i| ((plus[i] - minus[i]) / (2.0 * steps[i])).im).collect();
    let richardson = |d: &[f64], i: usize| {
        let coarse = (4.0 * d[i + 1] - d[i]) / 3.0;
        let fine = (4.0 * d[i + 2] - d[i + 1]) / 3.0;
        (16.0 * fine - coarse) / 15.0
    };
    let out = (0..n.saturating_sub(2)).map(|i| [richardson(&d2, i), richardson(&d1, i)]).collect();
    Ok((out, max_residual))
}

/// Diffusion coefficient `D = -½ Re (ln z)''(0)` and drift `Im (ln z)'(0)`.
/// For zero drift this is `-½ z''(0)`.
///
/// Large steps carry truncation error and small ones rounding error, so the
/// estimate is taken where neighbouring extrapolations agree best, keeping
/// the larger step of the pair.
pub fn diffusion_spectral(set: &TransitionMatrixSet) -> Result<DiffusionReport> {
    diffusion_spectral_with(set, SpectralOptions::default())
}

pub fn diffusion_spectral_with(set: &TransitionMatrixSet, opts: SpectralOptions) -> Result<DiffusionReport> {
    if !(opts.step > 0.0) || opts.levels < 4 {
        return Err(Error::InvalidArgument("need a positive step and at least 4 ladder levels".into()));
    }
    let alpha = stationary_density(set)?;
    let zero = leading_eigenpair(&set.characteristic_matrix(0.0), None)?;
    let steps: Vec<f64> = (0..opts.levels).map(|i| opts.step / 2f64.powi(i as i32)).collect();
    let (est, max_residual) = extrapolations(set, &zero, &steps)?;
    let (best, disagreement) = (0..est.len() - 1)
        .map(|i| (i, (est[i][0] - est[i + 1][0]).abs().max((est[i][1] - est[i + 1][1]).abs())))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("ladder has at least two extrapolations");
    if !(disagreement <= opts.fail_tol) {
        return Err(Error::UnstableDerivative { disagreement });
    }
    let [second, first] = est[best];
    let mut report = DiffusionReport::new(Method::Spectral, -0.5 * second, first);
    report.alpha = Some(alpha);
    report.diagnostics.insert("z0_minus_one".into(), (zero.value - 1.0).norm());
    report.diagnostics.insert("eigen_residual".into(), max_residual);
    report.diagnostics.insert("fd_disagreement".into(), disagreement);
    report.diagnostics.insert("fd_step".into(), steps[best]);
    report.diagnostics.insert("mass_defect".into(), set.mass_defect());
    Ok(report)
}

/// Invariant density on the cells: the positive solution of `Eα = α`
/// normalised by `Σ α_j·len_j = 1`.
pub fn stationary_density(set: &TransitionMatrixSet) -> Result<Vec<f64>> {
    let m = set.cell_count();
    let a = set.total() - DMatrix::<f64>::identity(m, m);
    let svd = a.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested right singular vectors");
    let top = svd.singular_values.max().max(1.0);
    let null: Vec<usize> = (0..m).filter(|&i| svd.singular_values[i] <= 1e-10 * top).collect();
    if null.len() != 1 {
        return Err(Error::Reducible(format!("eigenvalue 1 has multiplicity {}", null.len())));
    }
    let mut alpha: Vec<f64> = v_t.row(null[0]).iter().copied().collect();
    if alpha.iter().sum::<f64>() < 0.0 {
        alpha.iter_mut().for_each(|x| *x = -*x);
    }
    if alpha.iter().any(|&x| x <= 0.0) {
        return Err(Error::Reducible("invariant vector is not strictly positive".into()));
    }
    let mass: f64 = alpha.iter().zip(set.lengths()).map(|(a, l)| a * l).sum();
    alpha.iter_mut().for_each(|x| *x /= mass);
    Ok(alpha)
}
