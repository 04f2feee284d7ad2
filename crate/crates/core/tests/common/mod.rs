//! Worked examples with closed-form answers, computed here without using
//! the library so they can serve as oracles.
#![allow(dead_code)]

use std::path::PathBuf;

use detdiff::{build_transition_matrices, LiftMap, MarkovPartition, TransitionMatrixSet};

pub struct Golden {
    pub name: &'static str,
    pub lambda: f64,
    pub breakpoints: Vec<f64>,
    pub d: f64,
    pub alpha: Vec<f64>,
    /// Printed two- or three-decimal roundings of `alpha`, where given.
    pub alpha_printed: Option<Vec<&'static str>>,
    /// Ascending integer coefficients of the slope polynomial.
    pub polynomial: Option<Vec<i64>>,
    /// System file under `data/systems`.
    pub system: Option<&'static str>,
    /// Printed decimal of the slope, where given.
    pub lambda_printed: Option<&'static str>,
}

impl Golden {
    pub fn map(&self) -> LiftMap {
        LiftMap::linear(self.lambda).unwrap()
    }

    pub fn partition(&self) -> MarkovPartition {
        MarkovPartition::new(self.breakpoints.clone()).unwrap()
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.breakpoints.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn matrices(&self) -> TransitionMatrixSet {
        build_transition_matrices(&self.map(), &self.partition()).unwrap()
    }
}

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// Largest real root by bisection on `[lo, hi]`, where the sign changes.
pub fn bisect_root(coeffs_ascending: &[i64], mut lo: f64, mut hi: f64) -> f64 {
    let p = |x: f64| coeffs_ascending.iter().rev().fold(0.0, |acc, &c| acc * x + c as f64);
    let sign_lo = p(lo).signum();
    assert!(sign_lo != p(hi).signum(), "no sign change on [{lo}, {hi}]");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if p(mid).signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn mirror(positive: &[f64], zero: bool) -> Vec<f64> {
    let mut b: Vec<f64> = positive.iter().rev().map(|x| -x).collect();
    b.insert(0, -0.5);
    if zero {
        b.push(0.0);
    }
    b.extend_from_slice(positive);
    b.push(0.5);
    b
}

fn palindrome(half: &[f64], odd_middle: Option<f64>) -> Vec<f64> {
    let mut v = half.to_vec();
    v.extend(odd_middle);
    v.extend(half.iter().rev());
    v
}

/// The nine worked slopes.
pub fn golden_cases() -> Vec<Golden> {
    let s2 = 2f64.sqrt();
    let s3 = 3f64.sqrt();
    let s6 = 6f64.sqrt();
    let s7 = 7f64.sqrt();
    let mut out = Vec::new();

    let l = 2.0 + s3;
    let x = (2.0 - s3) / 2.0;
    out.push(Golden {
        name: "2+sqrt3",
        lambda: l,
        breakpoints: mirror(&[x], false),
        d: s3 / 6.0,
        alpha: palindrome(&[(2.0 * s3 + 3.0) / 6.0], Some((3.0 + s3) / 6.0)),
        alpha_printed: Some(vec!["1.08", "0.79", "1.08"]),
        polynomial: Some(vec![1, -4, 1]),
        system: Some("quadratic-2p3.json"),
        lambda_printed: Some("3.73"),
    });

    let l = 3.0 + s6;
    let x = (3.0 - s6) / 2.0;
    out.push(Golden {
        name: "3+sqrt6",
        lambda: l,
        breakpoints: mirror(&[x], false),
        d: (31.0 * l - 16.0) / (36.0 * l - 24.0),
        alpha: palindrome(&[(s6 + 2.0) / 2.0], Some((3.0 + s6) / 6.0)),
        alpha_printed: Some(vec!["2.22", "0.9", "2.22"]),
        polynomial: Some(vec![3, -6, 1]),
        system: Some("quadratic-3p6.json"),
        lambda_printed: None,
    });

    let l = 2.0 + s7;
    let x = (s7 - 2.0) / 2.0;
    out.push(Golden {
        name: "2+sqrt7",
        lambda: l,
        breakpoints: mirror(&[x], false),
        d: (479.0 + 107.0 * s7) / 894.0,
        alpha: palindrome(&[0.5 + 1.0 / s7], Some(0.5 + 1.0 / (2.0 * s7))),
        alpha_printed: None,
        polynomial: Some(vec![-3, -4, 1]),
        system: Some("quadratic-2p7.json"),
        lambda_printed: None,
    });

    let l = 1.0 + s3;
    let x = (s3 - 1.0) / 2.0;
    out.push(Golden {
        name: "1+sqrt3",
        lambda: l,
        breakpoints: mirror(&[x], true),
        d: (3.0 - s3) / 12.0,
        alpha: palindrome(&[(3.0 + s3) / 6.0, (3.0 + 2.0 * s3) / 6.0], None),
        alpha_printed: Some(vec!["0.79", "1.08", "1.08", "0.79"]),
        polynomial: Some(vec![-2, -2, 1]),
        system: Some("quadratic-1p3.json"),
        lambda_printed: None,
    });

    let l = 2.0 + s2;
    let x = (2.0 - s2) / 2.0;
    out.push(Golden {
        name: "2+sqrt2",
        lambda: l,
        breakpoints: mirror(&[x], true),
        d: 0.25,
        alpha: palindrome(&[(s2 - 1.0) / 2.0, (2.0 - s2) / 2.0], None),
        alpha_printed: Some(vec!["0.21", "0.29", "0.29", "0.21"]),
        polynomial: Some(vec![2, -4, 1]),
        system: Some("quadratic-2p2.json"),
        lambda_printed: None,
    });

    let l = bisect_root(&[3, -4, -4, 1], 4.0, 6.0);
    let (x1, x2) = (3.0 / (2.0 * l), (4.0 * l - 3.0) / (2.0 * l * l));
    let a1 = (l * l + 4.0 * l - 3.0) / (4.0 * l * (9.0 - l));
    let a2 = (l * l + 4.0 * l - 3.0) / (16.0 * (9.0 - l));
    let a3 = (5.0 * l * l - 11.0 * l + 6.0) / (16.0 * (9.0 - l));
    out.push(Golden {
        name: "cubic L^3-4L^2-4L+3",
        lambda: l,
        breakpoints: mirror(&[x1, x2], false),
        d: (81.0 * l * l + 69.0 * l - 55.0) / (131.0 * l * l + 99.0 * l - 93.0),
        alpha: palindrome(&[a1, a2], Some(a3)),
        alpha_printed: None,
        polynomial: Some(vec![3, -4, -4, 1]),
        system: Some("cubic-a.json"),
        lambda_printed: Some("4.75"),
    });

    let l = bisect_root(&[-8, 1, -4, 1], 4.0, 5.0);
    let (x1, x2) = (2.0 / (l * l + 1.0), 2.0 * l / (l * l + 1.0));
    let q = 3.0 * l * l - 8.0 * l + 1.0;
    out.push(Golden {
        name: "cubic L^3-4L^2+L-8",
        lambda: l,
        breakpoints: mirror(&[x1, x2], true),
        d: (5.0 * l * l + 26.0 * l + 22.0) / (18.0 * l * l + 18.0 * l + 56.0),
        alpha: palindrome(&[(l * l + 1.0) / q, (l * l + 2.0) / q, (l * l + l + 5.0) / q], None),
        alpha_printed: None,
        polynomial: Some(vec![-8, 1, -4, 1]),
        system: Some("cubic-b.json"),
        lambda_printed: Some("4.22"),
    });

    let l = bisect_root(&[1, 0, 0, -4, 1], 3.5, 4.5);
    let xs = [1.0 / (2.0 * l.powi(3)), 1.0 / (2.0 * l * l), 1.0 / (2.0 * l)];
    let b1 = l / (4.0 * (l - 3.0));
    let b2 = l / 4.0;
    let b3 = (l * l - 3.0 * l - 3.0) * l / (4.0 * (l - 3.0));
    let b4 = l * l / 4.0 - 0.75 - 5.0 / (2.0 * (l - 3.0));
    out.push(Golden {
        name: "quartic L^4-4L^3+1",
        lambda: l,
        breakpoints: mirror(&xs, false),
        d: 1.0 / (4.0 * (l - 3.0)),
        alpha: palindrome(&[b1, b2, b3], Some(b4)),
        alpha_printed: None,
        polynomial: Some(vec![1, 0, 0, -4, 1]),
        system: Some("quartic.json"),
        lambda_printed: Some("3.968"),
    });

    out.push(Golden {
        name: "4",
        lambda: 4.0,
        breakpoints: vec![-0.5, 0.0, 0.5],
        d: 0.25,
        alpha: vec![1.0, 1.0],
        alpha_printed: None,
        polynomial: None,
        system: None,
        lambda_printed: None,
    });
    out
}

/// `format!("{:.p$}")` with `p` taken from the printed string.
pub fn round_like(x: f64, printed: &str) -> String {
    let digits = printed.split('.').nth(1).map_or(0, str::len);
    format!("{x:.digits$}")
}
