//! Dominant eigenpair of small dense complex matrices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative residual `‖Av - zv‖ / (‖A‖·‖v‖)` required of a returned pair.
pub const EIGEN_TOL: f64 = 1e-13;

const POWER_ITERATIONS: usize = 2000;
const POWER_TOL: f64 = 1e-6;
const POLISH_ITERATIONS: usize = 30;

#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: Complex64,
    /// Unit vector, phase fixed so that its component sum is real and positive.
    pub vector: DVector<Complex64>,
    pub residual: f64,
    pub iterations: usize,
}

fn relative_residual(a: &DMatrix<Complex64>, norm_a: f64, v: &DVector<Complex64>, z: Complex64) -> f64 {
    let r = a * v - v * z;
    r.norm() / (norm_a.max(f64::MIN_POSITIVE) * v.norm())
}

fn rayleigh(a: &DMatrix<Complex64>, v: &DVector<Complex64>) -> Complex64 {
    v.dotc(&(a * v)) / v.dotc(v)
}

fn fix_phase(v: &mut DVector<Complex64>) {
    let s: Complex64 = v.iter().sum();
    let scale = if s.norm() > 1e-300 {
        s.conj() / s.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    *v *= scale;
    let n = v.norm();
    *v /= Complex64::new(n, 0.0);
}

/// Eigenvalue of largest modulus with its eigenvector.
///
/// Power iteration (from `warm` when given) locates the dominant pair to
/// about `1e-6`; if it stalls, for instance on a near-tie in modulus, the
/// eigenvalues from a Schur decomposition supply the shift instead. Shifted
/// inverse iteration then polishes the pair to [`EIGEN_TOL`].
pub fn leading_eigenpair(a: &DMatrix<Complex64>, warm: Option<&DVector<Complex64>>) -> Result<Eigenpair> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::InvalidArgument("eigenproblem needs a nonempty square matrix".into()));
    }
    let norm_a = a.norm();
    if !norm_a.is_finite() {
        return Err(Error::NonFinite(norm_a));
    }
    if norm_a == 0.0 {
        let mut v = DVector::from_element(n, Complex64::new(1.0, 0.0));
        fix_phase(&mut v);
        return Ok(Eigenpair { value: Complex64::new(0.0, 0.0), vector: v, residual: 0.0, iterations: 0 });
    }

    let mut v = match warm {
        Some(w) if w.len() == n && w.norm() > 0.0 => w.clone(),
        _ => DVector::from_element(n, Complex64::new(1.0, 0.0)),
    };
    fix_phase(&mut v);
    let mut z = rayleigh(a, &v);
    let mut iterations = 0;
    let mut res = relative_residual(a, norm_a, &v, z);
    while res > POWER_TOL && iterations < POWER_ITERATIONS {
        let w = a * &v;
        let wn = w.norm();
        if wn == 0.0 {
            break;
        }
        v = w / Complex64::new(wn, 0.0);
        z = rayleigh(a, &v);
        res = relative_residual(a, norm_a, &v, z);
        iterations += 1;
    }
    if res > POWER_TOL {
        z = dominant_by_schur(a, z)?;
    }

    for _ in 0..POLISH_ITERATIONS {
        if res <= 1e-15 {
            break;
        }
        let shifted = a - DMatrix::<Complex64>::identity(n, n) * z;
        let Some(w) = shifted.lu().solve(&v) else {
            // Shift is an exact eigenvalue; v cannot be improved by this route.
            break;
        };
        let wn = w.norm();
        if !wn.is_finite() || wn == 0.0 {
            break;
        }
        let candidate = w / Complex64::new(wn, 0.0);
        let cz = rayleigh(a, &candidate);
        let cres = relative_residual(a, norm_a, &candidate, cz);
        iterations += 1;
        if cres >= res {
            break;
        }
        v = candidate;
        z = cz;
        res = cres;
    }
    if res > EIGEN_TOL {
        return Err(Error::NonConvergence { iterations, residual: res });
    }
    fix_phase(&mut v);
    Ok(Eigenpair { value: z, vector: v, residual: res, iterations })
}

fn dominant_by_schur(a: &DMatrix<Complex64>, hint: Complex64) -> Result<Complex64> {
    let eig = a
        .clone()
        .try_schur(1e-15, 10_000)
        .and_then(|s| s.eigenvalues())
        .ok_or(Error::NonConvergence { iterations: 10_000, residual: f64::NAN })?;
    let top = eig.iter().map(|e| e.norm()).fold(0.0, f64::max);
    // Among eigenvalues tied in modulus, stay on the branch closest to the hint.
    eig.iter()
        .copied()
        .filter(|e| e.norm() >= top * (1.0 - 1e-9))
        .min_by(|x, y| (x - hint).norm().total_cmp(&(y - hint).norm()))
        .ok_or(Error::NonConvergence { iterations: 0, residual: f64::NAN })
}
