//! Exact univariate polynomials over the rationals, plus real-root refinement.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Polynomial with rational coefficients, lowest degree first. No trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poly {
    coeffs: Vec<BigRational>,
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl Poly {
    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: BigRational) -> Self {
        Poly::new(vec![c])
    }

    /// The polynomial `x`.
    pub fn x() -> Self {
        Poly::new(vec![rat(0), rat(1)])
    }

    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Poly::new(coeffs.iter().map(|&c| rat(c)).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    fn lead(&self) -> &BigRational {
        self.coeffs.last().expect("nonzero polynomial")
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let z = BigRational::zero();
        Poly::new(
            (0..n)
                .map(|i| self.coeffs.get(i).unwrap_or(&z) + other.coeffs.get(i).unwrap_or(&z))
                .collect(),
        )
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(&rat(-1)))
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        Poly::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    /// Quotient and remainder of polynomial long division.
    pub fn div_rem(&self, divisor: &Poly) -> (Poly, Poly) {
        assert!(!divisor.is_zero(), "division by zero polynomial");
        let dd = divisor.coeffs.len() - 1;
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (Poly::zero(), self.clone());
        }
        let mut quot = vec![BigRational::zero(); rem.len() - dd];
        for i in (0..quot.len()).rev() {
            let c = &rem[i + dd] / divisor.lead();
            for (j, d) in divisor.coeffs.iter().enumerate() {
                rem[i + j] -= &c * d;
            }
            quot[i] = c;
        }
        rem.truncate(dd);
        (Poly::new(quot), Poly::new(rem))
    }

    /// Division that must be exact; used by fraction-free elimination.
    fn div_exact(&self, divisor: &Poly) -> Poly {
        let (q, r) = self.div_rem(divisor);
        debug_assert!(r.is_zero(), "inexact polynomial division");
        q
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * rat(i as i64))
                .collect(),
        )
    }

    /// Exact value at a rational point.
    pub fn eval_exact(&self, x: &BigRational) -> BigRational {
        self.coeffs.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    /// Horner evaluation in floating point.
    pub fn eval(&self, x: f64) -> f64 {
        let c = self.float_coeffs();
        c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
    }

    pub fn float_coeffs(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
    }

    /// Scale to a primitive integer polynomial with positive leading
    /// coefficient and strip factors of `x`.
    pub fn primitive_part(&self) -> IntPoly {
        if self.is_zero() {
            return IntPoly { coeffs: Vec::new() };
        }
        let lcm = self
            .coeffs
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let mut ints: Vec<BigInt> = self
            .coeffs
            .iter()
            .map(|c| (c * BigRational::from_integer(lcm.clone())).to_integer())
            .collect();
        let g = ints.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
        let sign = if ints.last().unwrap().is_negative() { -1 } else { 1 };
        let g = g * BigInt::from(sign);
        for c in &mut ints {
            *c = &*c / &g;
        }
        let zeros = ints.iter().take_while(|c| c.is_zero()).count();
        ints.drain(..zeros);
        IntPoly { coeffs: ints }
    }
}

/// Determinant of a square matrix of polynomials by Bareiss fraction-free elimination.
pub fn determinant(matrix: &[Vec<Poly>]) -> Poly {
    let n = matrix.len();
    if n == 0 {
        return Poly::constant(rat(1));
    }
    let mut a: Vec<Vec<Poly>> = matrix.to_vec();
    let mut sign = 1;
    let mut prev = Poly::constant(rat(1));
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return Poly::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = a[i][j].mul(&a[k][k]).sub(&a[i][k].mul(&a[k][j]));
                a[i][j] = num.div_exact(&prev);
            }
        }
        prev = a[k][k].clone();
    }
    let det = a[n - 1][n - 1].clone();
    if sign < 0 {
        det.scale(&rat(-1))
    } else {
        det
    }
}

/// Primitive polynomial with integer coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntPoly {
    coeffs: Vec<BigInt>,
}

impl IntPoly {
    pub fn from_i64(coeffs: &[i64]) -> Self {
        IntPoly { coeffs: coeffs.iter().map(|&c| BigInt::from(c)).collect() }
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Coefficients highest degree first, as small integers.
    pub fn to_i64_desc(&self) -> Option<Vec<i64>> {
        self.coeffs.iter().rev().map(ToPrimitive::to_i64).collect()
    }

    pub fn to_poly(&self) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| BigRational::from_integer(c.clone())).collect())
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c.to_f64().unwrap_or(f64::NAN))
    }

    /// Residual evaluated exactly at the double `x`, then rounded.
    pub fn residual_at(&self, x: f64) -> f64 {
        match BigRational::from_float(x) {
            Some(r) => self.to_poly().eval_exact(&r).to_f64().unwrap_or(f64::INFINITY),
            None => f64::NAN,
        }
    }

    /// Cauchy bound on the modulus of every root.
    pub fn root_bound(&self) -> f64 {
        let lead = self.coeffs.last().and_then(ToPrimitive::to_f64).unwrap_or(1.0).abs();
        let max = self.coeffs[..self.coeffs.len().saturating_sub(1)]
            .iter()
            .map(|c| c.to_f64().unwrap_or(f64::INFINITY).abs())
            .fold(0.0, f64::max);
        1.0 + max / lead
    }

    /// Largest real root in `(lower, bound]` with a sign change, refined to the
    /// double that minimises the exact residual.
    pub fn largest_root_above(&self, lower: f64) -> Result<f64> {
        let deg = self.degree().unwrap_or(0);
        if deg == 0 {
            return Err(Error::SolverFailure("constant polynomial has no roots".into()));
        }
        let hi = self.root_bound().max(lower + 1.0);
        let steps = 4096 * deg;
        let dx = (hi - lower) / steps as f64;
        let mut bracket = None;
        let mut b = hi;
        let mut fb = self.eval(b);
        for i in (0..steps).rev() {
            let a = lower + dx * i as f64;
            let fa = self.eval(a);
            if fa == 0.0 && a > lower {
                bracket = Some((a, a));
                break;
            }
            if fa.signum() != fb.signum() && fb != 0.0 {
                bracket = Some((a, b));
                break;
            }
            b = a;
            fb = fa;
        }
        let Some((mut a, mut b)) = bracket else {
            return Err(Error::SolverFailure(format!("no real root above {lower}")));
        };
        let fa_sign = self.eval(a).signum();
        while b - a > 1e-15 * b.abs().max(1.0) {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if self.eval(mid).signum() == fa_sign {
                a = mid;
            } else {
                b = mid;
            }
        }
        let mut x = 0.5 * (a + b);
        let dp = self.to_poly().derivative();
        for _ in 0..4 {
            let d = dp.eval(x);
            if d == 0.0 {
                break;
            }
            let next = x - self.eval(x) / d;
            if !(next.is_finite() && (next - x).abs() < 1e-9) {
                break;
            }
            x = next;
        }
        // Pick the best double among close neighbours using exact residuals.
        let mut best = x;
        let mut best_r = self.residual_at(x).abs();
        let mut cand = x;
        for _ in 0..4 {
            cand = next_down(cand);
            let r = self.residual_at(cand).abs();
            if r < best_r {
                best = cand;
                best_r = r;
            }
        }
        cand = x;
        for _ in 0..4 {
            cand = next_up(cand);
            let r = self.residual_at(cand).abs();
            if r < best_r {
                best = cand;
                best_r = r;
            }
        }
        Ok(best)
    }
}

fn next_up(x: f64) -> f64 {
    f64::from_bits(if x >= 0.0 { x.to_bits() + 1 } else { x.to_bits() - 1 })
}

fn next_down(x: f64) -> f64 {
    f64::from_bits(if x > 0.0 { x.to_bits() - 1 } else { x.to_bits() + 1 })
}

impl fmt::Display for IntPoly {
    /// Renders as e.g. `L^3 - 4L^2 - 4L + 3`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            first = false;
            let show_mag = !mag.is_one() || i == 0;
            if show_mag {
                write!(f, "{mag}")?;
            }
            match i {
                0 => {}
                1 => write!(f, "L")?,
                _ => write!(f, "L^{i}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl Serialize for IntPoly {
    /// Integer coefficients, highest degree first.
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<String> = self.coeffs.iter().rev().map(ToString::to_string).collect();
        v.serialize(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        let p = Poly::from_i64(&[1, 1]); // 1 + x
        let q = Poly::from_i64(&[-1, 1]); // -1 + x
        assert_eq!(p.mul(&q), Poly::from_i64(&[-1, 0, 1]));
        let (quot, rem) = Poly::from_i64(&[-1, 0, 1]).div_rem(&q);
        assert_eq!(quot, p);
        assert!(rem.is_zero());
        assert_eq!(Poly::from_i64(&[3, 2, 1]).derivative(), Poly::from_i64(&[2, 2]));
    }

    #[test]
    fn bareiss_matches_expansion() {
        let x = Poly::x();
        let c = |n| Poly::from_i64(&[n]);
        // [[x, -1, 0], [1, x, 0], [0, 2, x]] has det x^3 + x
        let m = vec![
            vec![x.clone(), c(-1), c(0)],
            vec![c(1), x.clone(), c(0)],
            vec![c(0), c(2), x.clone()],
        ];
        assert_eq!(determinant(&m), Poly::from_i64(&[0, 1, 0, 1]));
        // zero pivot needs a row swap
        let m = vec![vec![c(0), c(1)], vec![c(1), c(0)]];
        assert_eq!(determinant(&m), c(-1));
    }

    #[test]
    fn primitive_part_normalises() {
        let half = BigRational::new(1.into(), 2.into());
        let p = Poly::new(vec![
            BigRational::zero(),
            half.clone(),
            rat(-2),
            half,
        ]); // x/2 - 2x^2 + x^3/2
        assert_eq!(p.primitive_part(), IntPoly::from_i64(&[1, -4, 1]));
        assert_eq!(IntPoly::from_i64(&[3, -4, -4, 1]).to_string(), "L^3 - 4L^2 - 4L + 3");
    }

    #[test]
    fn largest_roots() {
        let p = IntPoly::from_i64(&[1, -4, 1]);
        let r = p.largest_root_above(1.0).unwrap();
        assert!((r - (2.0 + 3f64.sqrt())).abs() < 1e-15);
        assert!(p.residual_at(r).abs() < 1e-13);

        let q = IntPoly::from_i64(&[1, 0, 0, -4, 1]);
        let r = q.largest_root_above(1.0).unwrap();
        assert!(q.residual_at(r).abs() < 1e-13);
        assert!((r - 3.984188).abs() < 1e-6);

        assert!(IntPoly::from_i64(&[1, 0, 1]).largest_root_above(1.0).is_err());
    }
}
