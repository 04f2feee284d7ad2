//! Markov partitions of the unit cell and solvers for partition-consistent slopes.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{LiftMap, POSITION_TOL};
use crate::poly::{determinant, IntPoly, Poly};

/// Tolerance for image points landing on partition breakpoints.
pub const CONSISTENCY_TOL: f64 = 1e-9;

/// Partition `-1/2 = y0 < y1 < … < ym = 1/2` of `I0`, repeated in every unit cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkovPartition {
    breakpoints: Vec<f64>,
}

impl MarkovPartition {
    pub fn new(breakpoints: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidPartition("need at least two breakpoints".into()));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidPartition("non-finite breakpoint".into()));
        }
        let last = breakpoints.len() - 1;
        if (breakpoints[0] + 0.5).abs() > POSITION_TOL || (breakpoints[last] - 0.5).abs() > POSITION_TOL {
            return Err(Error::InvalidPartition("breakpoints must run from -1/2 to 1/2".into()));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPartition("breakpoints must be strictly increasing".into()));
        }
        let mut breakpoints = breakpoints;
        breakpoints[0] = -0.5;
        breakpoints[last] = 0.5;
        Ok(MarkovPartition { breakpoints })
    }

    /// The single cell `I0`.
    pub fn unit() -> Self {
        MarkovPartition { breakpoints: vec![-0.5, 0.5] }
    }

    /// Symmetric partition from positive inner breakpoints, optionally split at 0.
    pub fn symmetric(positive: &[f64], with_zero: bool) -> Result<Self> {
        let mut b = vec![-0.5];
        b.extend(positive.iter().rev().map(|x| -x));
        if with_zero {
            b.push(0.0);
        }
        b.extend(positive.iter().copied());
        b.push(0.5);
        Self::new(b)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn cell_count(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.breakpoints.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        let b = &self.breakpoints;
        (0..b.len()).all(|i| (b[i] + b[b.len() - 1 - i]).abs() <= POSITION_TOL)
    }

    /// Distance from `v` to the nearest point of `Z + {y_i}`.
    pub fn grid_distance(&self, v: f64) -> f64 {
        self.breakpoints
            .iter()
            .map(|y| {
                let d = v - y;
                (d - d.round()).abs()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Outcome of checking that a map is Markov with respect to a partition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub consistent: bool,
    pub worst_violation: f64,
    pub detail: String,
}

/// Check that `map` is linear on each cell and sends cell endpoints onto
/// `Z + breakpoints` (tolerance `1e-9`).
pub fn validate_consistency(map: &LiftMap, partition: &MarkovPartition) -> ConsistencyReport {
    let mut worst = 0.0;
    let mut detail = String::from("all cell endpoints map onto the partition grid");
    let pb = partition.breakpoints();
    for &b in &map.breakpoints()[1..map.breakpoints().len() - 1] {
        let d = pb.iter().map(|y| (y - b).abs()).fold(f64::INFINITY, f64::min);
        if d > worst {
            worst = d;
            detail = format!("map breakpoint {b} is not a partition breakpoint");
        }
    }
    for (l, w) in pb.windows(2).enumerate() {
        let piece = map.piece(map.piece_index(0.5 * (w[0] + w[1])));
        for (end, y) in [("left", w[0]), ("right", w[1])] {
            let v = piece.value(y);
            let d = partition.grid_distance(v);
            if d > worst {
                worst = d;
                detail = format!("{end} end of cell {} maps to {v}, off grid by {d:.3e}", l + 1);
            }
        }
    }
    ConsistencyReport { consistent: worst <= CONSISTENCY_TOL, worst_violation: worst, detail }
}

/// Closed-form three-cell partition `{[-1/2,-ξ), [-ξ,ξ), [ξ,1/2)}` for the
/// linear map, solving `Λξ = m + ε2·ξ` and `Λ/2 = n + ε1·ξ`.
pub fn solve_three_interval(m: i64, n: i64, eps1: i8, eps2: i8) -> Result<(f64, f64)> {
    if m < 1 || n <= m {
        return Err(Error::RejectedParameters(format!("need integers 0 < m < n, got m={m}, n={n}")));
    }
    if eps1.abs() != 1 || eps2.abs() != 1 {
        return Err(Error::RejectedParameters("signs must be +1 or -1".into()));
    }
    let (mf, nf, e1, e2) = (m as f64, n as f64, eps1 as f64, eps2 as f64);
    let disc = (2.0 * nf - e2).powi(2) + 8.0 * mf * e1;
    if disc <= 0.0 {
        return Err(Error::RejectedParameters(format!("discriminant {disc} is not positive")));
    }
    let root = disc.sqrt();
    let lambda = (2.0 * nf + e2 + root) / 2.0;
    let xi = 2.0 * mf / (2.0 * nf - e2 + root);
    if !(xi > POSITION_TOL && xi < 0.5 - POSITION_TOL) {
        return Err(Error::RejectedParameters(format!(
            "xi = {xi} is not inside (0, 1/2) for m={m}, n={n}, eps1={eps1}, eps2={eps2}"
        )));
    }
    if lambda <= 1.0 {
        return Err(Error::RejectedParameters(format!("slope {lambda} is not expanding")));
    }
    Ok((lambda, xi))
}

/// Right-hand side `const + coef·ref` of an equation `Λ·lhs = …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    #[serde(rename = "const", default)]
    pub constant: f64,
    #[serde(default)]
    pub coef: i64,
    #[serde(rename = "ref", default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equation {
    pub lhs: String,
    pub target: Target,
}

/// Linear system `Λ·s_u = a_u + c_u·s_{ref(u)}` for the positive breakpoints of
/// a symmetric partition, closed by one equation whose left side is `half`
/// (the cell end `1/2`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionEquationSystem {
    pub unknowns: Vec<String>,
    pub equations: Vec<Equation>,
    /// Split the central cell at 0. When absent, 0 is added only if needed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_breakpoint: Option<bool>,
}

pub const HALF: &str = "half";

/// Solved partition: slope, defining polynomial and breakpoints.
#[derive(Debug, Clone, Serialize)]
pub struct PartitionSolution {
    pub lambda: f64,
    pub polynomial: IntPoly,
    pub polynomial_text: String,
    pub residual: f64,
    pub unknowns: BTreeMap<String, f64>,
    pub partition: MarkovPartition,
}

fn half_integer(x: f64, what: &str) -> Result<BigRational> {
    let twice = 2.0 * x;
    if !x.is_finite() || (twice - twice.round()).abs() > 1e-12 || twice.abs() > 1e15 {
        return Err(Error::InvalidSystem(format!("{what}: constant {x} is not a multiple of 1/2")));
    }
    Ok(BigRational::new(BigInt::from(twice.round() as i64), BigInt::from(2)))
}

impl PartitionEquationSystem {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// The system for [`solve_three_interval`] parameters.
    pub fn three_interval(m: i64, n: i64, eps1: i8, eps2: i8) -> Self {
        PartitionEquationSystem {
            unknowns: vec!["xi".into()],
            equations: vec![
                Equation {
                    lhs: "xi".into(),
                    target: Target { constant: m as f64, coef: eps2 as i64, reference: Some("xi".into()) },
                },
                Equation {
                    lhs: HALF.into(),
                    target: Target { constant: n as f64, coef: eps1 as i64, reference: Some("xi".into()) },
                },
            ],
            zero_breakpoint: None,
        }
    }

    /// Exact slope polynomial `R(Λ)` and the Cramer numerators of each unknown,
    /// `s_u = num_u / den`.
    pub fn eliminate(&self) -> Result<(IntPoly, Vec<Poly>, Poly)> {
        let k = self.unknowns.len();
        if k == 0 {
            return Err(Error::InvalidSystem("no unknowns".into()));
        }
        let mut index = BTreeMap::new();
        for (i, u) in self.unknowns.iter().enumerate() {
            if u == HALF || index.insert(u.as_str(), i).is_some() {
                return Err(Error::InvalidSystem(format!("bad or repeated unknown {u:?}")));
            }
        }
        let lambda = Poly::x();
        let mut a = vec![vec![Poly::zero(); k]; k];
        let mut b = vec![Poly::zero(); k];
        let mut seen = vec![false; k];
        let mut closing = None;
        for eq in &self.equations {
            let t = &eq.target;
            if !(-1..=1).contains(&t.coef) {
                return Err(Error::InvalidSystem(format!("coefficient {} must be -1, 0 or 1", t.coef)));
            }
            let constant = half_integer(t.constant, &eq.lhs)?;
            let coef = BigRational::from_integer(BigInt::from(t.coef));
            // Reference resolved to an unknown index, `None` meaning the constant 1/2.
            let reference = match (&t.reference, t.coef) {
                (_, 0) => None,
                (None, _) => {
                    return Err(Error::InvalidSystem(format!("equation for {} has coef but no ref", eq.lhs)))
                }
                (Some(r), _) if r == HALF => Some(None),
                (Some(r), _) => Some(Some(*index.get(r.as_str()).ok_or_else(|| {
                    Error::InvalidSystem(format!("equation for {} references unknown {r:?}", eq.lhs))
                })?)),
            };
            if eq.lhs == HALF {
                if closing.is_some() {
                    return Err(Error::InvalidSystem("more than one equation for half".into()));
                }
                closing = Some((constant, coef, reference));
                continue;
            }
            let row = *index
                .get(eq.lhs.as_str())
                .ok_or_else(|| Error::InvalidSystem(format!("unknown left side {:?}", eq.lhs)))?;
            if std::mem::replace(&mut seen[row], true) {
                return Err(Error::InvalidSystem(format!("two equations for {}", eq.lhs)));
            }
            a[row][row] = a[row][row].add(&lambda);
            let mut rhs = Poly::constant(constant);
            match reference {
                Some(Some(col)) => a[row][col] = a[row][col].sub(&Poly::constant(coef)),
                Some(None) => rhs = rhs.add(&Poly::constant(coef / BigRational::from_integer(2.into()))),
                None => {}
            }
            b[row] = rhs;
        }
        if let Some(u) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidSystem(format!("no equation for {}", self.unknowns[u])));
        }
        let Some((ah, ch, href)) = closing else {
            return Err(Error::InvalidSystem("missing the closing equation for half".into()));
        };

        let den = determinant(&a);
        if den.is_zero() {
            return Err(Error::UnsupportedStructure("system matrix is singular for every slope".into()));
        }
        let numerators: Vec<Poly> = (0..k)
            .map(|col| {
                let mut m = a.clone();
                for (row, rhs) in b.iter().enumerate() {
                    m[row][col] = rhs.clone();
                }
                determinant(&m)
            })
            .collect();
        // (Λ/2 - a_h)·den = c_h·num_ref
        let half = BigRational::new(1.into(), 2.into());
        let lhs = lambda.scale(&half).sub(&Poly::constant(ah)).mul(&den);
        let rhs = match href {
            Some(Some(col)) => numerators[col].scale(&ch),
            Some(None) => den.scale(&(ch * half)),
            None => Poly::zero(),
        };
        let r = lhs.sub(&rhs);
        if r.is_zero() {
            return Err(Error::UnsupportedStructure("closing equation holds for every slope".into()));
        }
        Ok((r.primitive_part(), numerators, den))
    }
}

/// Solve a partition system: the largest real root of `R(Λ)` above 1, and the
/// breakpoints it induces.
pub fn solve_partition_system(system: &PartitionEquationSystem) -> Result<PartitionSolution> {
    let (poly, numerators, den) = system.eliminate()?;
    let lambda = poly.largest_root_above(1.0)?;
    let residual = poly.residual_at(lambda);
    let d = den.eval(lambda);
    if d.abs() < 1e-12 {
        return Err(Error::InconsistentSystem(format!("system is singular at slope {lambda}")));
    }
    let values: Vec<f64> = numerators.iter().map(|n| n.eval(lambda) / d).collect();
    for (name, &v) in system.unknowns.iter().zip(&values) {
        if !(v > POSITION_TOL && v < 0.5 - POSITION_TOL) {
            return Err(Error::InconsistentSystem(format!(
                "breakpoint {name} = {v} is not inside (0, 1/2) at slope {lambda}"
            )));
        }
    }
    if let Some(i) = values.windows(2).position(|w| w[1] <= w[0] + POSITION_TOL) {
        return Err(Error::InconsistentSystem(format!(
            "breakpoints {} = {} and {} = {} are not strictly increasing",
            system.unknowns[i],
            values[i],
            system.unknowns[i + 1],
            values[i + 1]
        )));
    }

    let map = LiftMap::linear(lambda)?;
    let partition = match system.zero_breakpoint {
        Some(z) => MarkovPartition::symmetric(&values, z)?,
        None => {
            let without = MarkovPartition::symmetric(&values, false)?;
            if validate_consistency(&map, &without).consistent {
                without
            } else {
                MarkovPartition::symmetric(&values, true)?
            }
        }
    };
    let report = validate_consistency(&map, &partition);
    if !report.consistent {
        return Err(Error::InconsistentSystem(format!(
            "solution is not a Markov partition for slope {lambda}: {}",
            report.detail
        )));
    }
    Ok(PartitionSolution {
        lambda,
        polynomial_text: poly.to_string(),
        polynomial: poly,
        residual,
        unknowns: system.unknowns.iter().cloned().zip(values).collect(),
        partition,
    })
}
