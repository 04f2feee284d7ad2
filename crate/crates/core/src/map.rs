//! Piecewise-linear lifting maps.
//!
//! A lifting map is fixed by its restriction `f0` to the unit cell
//! `I0 = [-1/2, 1/2)` and extended to the line by `f(k + x) = k + f0(x)`.
//! Integer cells are labelled by the nearest integer `[x)`, with half-integers
//! rounded up so that `I_k = [k - 1/2, k + 1/2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surd::Scalar;

/// Absolute tolerance for equality of positions and endpoint values.
pub const POSITION_TOL: f64 = 1e-12;

/// Largest interval label we hand out; beyond this `x - k` loses all precision.
const MAX_LABEL: f64 = 9_007_199_254_740_992.0; // 2^53

/// Nearest-integer label `[x)`: the unique `k` with `x ∈ [k - 1/2, k + 1/2)`.
pub fn nearest_integer(x: f64) -> Result<i64> {
    if !x.is_finite() {
        return Err(Error::NonFinite(x));
    }
    let mut k = (x + 0.5).floor();
    if k.abs() > MAX_LABEL {
        return Err(Error::IndexOverflow(x));
    }
    // x + 0.5 can round up across an integer (x = 0.49999999999999994);
    // k ± 0.5 is exact at these magnitudes.
    if x < k - 0.5 {
        k -= 1.0;
    } else if x >= k + 0.5 {
        k += 1.0;
    }
    Ok(k as i64)
}

/// Fractional part `{x) = x - [x)`, in `[-1/2, 1/2)`.
pub fn centered_fraction(x: f64) -> f64 {
    let mut k = (x + 0.5).floor();
    if x < k - 0.5 {
        k -= 1.0;
    } else if x >= k + 0.5 {
        k += 1.0;
    }
    x - k
}

/// One linear piece of `f0` on `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    /// `f0(start+)`
    pub left: f64,
    /// `f0(end-)`
    pub right: f64,
}

impl Piece {
    pub fn slope(&self) -> f64 {
        (self.right - self.left) / (self.end - self.start)
    }

    /// Value of the linear extension of this piece at `y`.
    #[inline]
    pub fn value(&self, y: f64) -> f64 {
        self.left + self.slope() * (y - self.start)
    }
}

/// A piecewise-linear map on `I0` together with its lift-1 extension.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftMap {
    breakpoints: Vec<f64>,
    values: Vec<[f64; 2]>,
    slopes: Vec<f64>,
}

impl LiftMap {
    /// Build a map from breakpoints `-1/2 = x0 < … < xm = 1/2` and, for each
    /// piece, the endpoint values `(f(x_{j-1}+), f(x_j-))`.
    pub fn from_pieces(breakpoints: Vec<f64>, values: Vec<[f64; 2]>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidMap("need at least two breakpoints".into()));
        }
        if values.len() + 1 != breakpoints.len() {
            return Err(Error::InvalidMap(format!(
                "{} breakpoints need {} pieces, got {}",
                breakpoints.len(),
                breakpoints.len() - 1,
                values.len()
            )));
        }
        if breakpoints.iter().chain(values.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidMap("non-finite breakpoint or value".into()));
        }
        if (breakpoints[0] + 0.5).abs() > POSITION_TOL
            || (breakpoints[breakpoints.len() - 1] - 0.5).abs() > POSITION_TOL
        {
            return Err(Error::InvalidMap("breakpoints must start at -1/2 and end at 1/2".into()));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidMap("breakpoints must be strictly increasing".into()));
        }
        let mut breakpoints = breakpoints;
        let last = breakpoints.len() - 1;
        breakpoints[0] = -0.5;
        breakpoints[last] = 0.5;

        let mut slopes = Vec::with_capacity(values.len());
        for (j, v) in values.iter().enumerate() {
            if (v[1] - v[0]).abs() <= POSITION_TOL {
                return Err(Error::InvalidMap(format!("piece {} has zero slope", j + 1)));
            }
            slopes.push((v[1] - v[0]) / (breakpoints[j + 1] - breakpoints[j]));
        }
        Ok(LiftMap { breakpoints, values, slopes })
    }

    /// `f(x) = Λx` on `I0`.
    pub fn linear(lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda == 0.0 {
            return Err(Error::InvalidMap(format!("linear slope must be finite and nonzero, got {lambda}")));
        }
        Self::from_pieces(vec![-0.5, 0.5], vec![[-0.5 * lambda, 0.5 * lambda]])
    }

    /// Odd zig-zag map: `f(0) = 0`, `f(ξ) = p + 1/2`, `f(1/2) = 1/2`, linear in between.
    pub fn zigzag(p: i64, xi: f64) -> Result<Self> {
        if p < 1 {
            return Err(Error::InvalidMap(format!("zig-zag needs p >= 1, got {p}")));
        }
        if !(xi > 0.0 && xi < 0.5) {
            return Err(Error::InvalidMap(format!("zig-zag needs 0 < xi < 1/2, got {xi}")));
        }
        let peak = p as f64 + 0.5;
        Self::from_pieces(
            vec![-0.5, -xi, xi, 0.5],
            vec![[-0.5, -peak], [-peak, peak], [peak, 0.5]],
        )
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn piece_values(&self) -> &[[f64; 2]] {
        &self.values
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn piece_count(&self) -> usize {
        self.values.len()
    }

    pub fn piece(&self, j: usize) -> Piece {
        Piece {
            start: self.breakpoints[j],
            end: self.breakpoints[j + 1],
            left: self.values[j][0],
            right: self.values[j][1],
        }
    }

    /// Index of the piece containing `y ∈ I0` (clamped at the ends).
    #[inline]
    pub fn piece_index(&self, y: f64) -> usize {
        let inner = &self.breakpoints[1..self.breakpoints.len() - 1];
        inner.partition_point(|&b| b <= y)
    }

    /// `f0(y)` for `y ∈ I0`, together with the slope of the piece used.
    #[inline]
    pub(crate) fn eval_cell(&self, y: f64) -> (f64, f64) {
        let j = self.piece_index(y);
        let slope = self.slopes[j];
        (self.values[j][0] + slope * (y - self.breakpoints[j]), slope)
    }

    /// Evaluate the lifted map anywhere on the line.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let k = nearest_integer(x)?;
        let kf = k as f64;
        Ok(kf + self.eval_cell(x - kf).0)
    }

    /// Shift function `s(x) = f(x) - x`, which is 1-periodic.
    pub fn shift(&self, x: f64) -> Result<f64> {
        let k = nearest_integer(x)?;
        let y = x - k as f64;
        Ok(self.eval_cell(y).0 - y)
    }

    /// Smallest `|slope|` over all pieces; the map is stretching when this exceeds 1.
    pub fn min_stretch(&self) -> f64 {
        self.slopes.iter().fold(f64::INFINITY, |m, s| m.min(s.abs()))
    }

    pub fn max_stretch(&self) -> f64 {
        self.slopes.iter().fold(0.0, |m: f64, s| m.max(s.abs()))
    }

    /// True when every piece is increasing and the pieces join continuously,
    /// i.e. the map is injective on each unit cell.
    pub fn is_monotone_continuous(&self) -> bool {
        self.slopes.iter().all(|&s| s > 0.0)
            && self.values.windows(2).all(|w| (w[0][1] - w[1][0]).abs() <= POSITION_TOL)
    }

    /// Whether the map commutes with `x -> -x` (up to tolerance).
    pub fn is_odd(&self) -> bool {
        let m = self.piece_count();
        (0..m).all(|j| {
            let a = self.piece(j);
            let b = self.piece(m - 1 - j);
            (a.start + b.end).abs() <= POSITION_TOL
                && (a.left + b.right).abs() <= POSITION_TOL
                && (a.right + b.left).abs() <= POSITION_TOL
        })
    }

    /// The route `([x0), [x1), …, [x_{n-1}))` of the orbit starting at `x0`.
    pub fn route(&self, x0: f64, n: usize) -> Result<Route> {
        if n == 0 {
            return Err(Error::InvalidArgument("route length must be at least 1".into()));
        }
        let mut labels = Vec::with_capacity(n);
        let mut x = x0;
        for i in 0..n {
            labels.push(nearest_integer(x)?);
            if i + 1 < n {
                x = self.eval(x)?;
            }
        }
        Ok(Route(labels))
    }

    /// All initial points whose route starts with `route`, as a union of
    /// closed intervals, built by pulling `cl(I_{m_n})` back through the
    /// cells `I_{m_{n-1}}, …, I_{m_1}`.
    ///
    /// For maps injective on each unit cell the result has one component.
    /// Otherwise there is one component per admissible branch sequence, and
    /// each has width at most `λ_min^{-(n-1)}`.
    pub fn reconstruct_initial(&self, route: &Route) -> Result<Cylinder> {
        let labels = route.labels();
        let Some(&last) = labels.last() else {
            return Err(Error::InvalidArgument("empty route".into()));
        };
        if self.min_stretch() <= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "route reconstruction needs a stretching map, min |slope| = {}",
                self.min_stretch()
            )));
        }
        // Intervals are kept relative to the current cell centre; absolute
        // coordinates lose the width to cancellation once labels grow.
        let mut set = vec![Interval::new(-0.5, 0.5)];
        let mut next = last;
        let injective = self.is_monotone_continuous();
        for (pos, &cell) in labels.iter().enumerate().rev().skip(1) {
            set = self.preimage_in_cell((next - cell) as f64, &set, injective);
            next = cell;
            if set.is_empty() {
                return Err(Error::InadmissibleRoute(format!(
                    "no point of I_{cell} (route position {}) maps into the next cylinder",
                    pos + 1
                )));
            }
        }
        let c = labels[0] as f64;
        Ok(Cylinder { components: set.into_iter().map(|iv| Interval::new(c + iv.lo, c + iv.hi)).collect() })
    }

    /// Points `y` of `I0` with `f0(y) - offset` in one of `targets`, where
    /// `offset` is the label jump to the targets' cell.
    fn preimage_in_cell(&self, offset: f64, targets: &[Interval], merge: bool) -> Vec<Interval> {
        let mut out = Vec::new();
        for j in 0..self.piece_count() {
            let piece = self.piece(j);
            let slope = self.slopes[j];
            let shift = offset - piece.left;
            for t in targets {
                let ya = piece.start + (shift + t.lo) / slope;
                let yb = piece.start + (shift + t.hi) / slope;
                let lo = ya.min(yb).max(piece.start);
                let hi = ya.max(yb).min(piece.end);
                if lo < hi {
                    out.push(Interval::new(lo, hi));
                }
            }
        }
        // Branches of an injective map glue into one interval; for folding
        // maps they stay separate so each keeps the contraction bound.
        if merge {
            merge_intervals(out)
        } else {
            out.sort_by(|a, b| a.lo.total_cmp(&b.lo));
            out
        }
    }
}

fn merge_intervals(mut v: Vec<Interval>) -> Vec<Interval> {
    v.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let mut merged: Vec<Interval> = Vec::with_capacity(v.len());
    for iv in v {
        match merged.last_mut() {
            Some(last) if iv.lo <= last.hi + 1e-15 => last.hi = last.hi.max(iv.hi),
            _ => merged.push(iv),
        }
    }
    merged
}

/// Sequence of nearest-integer labels visited by an orbit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Route(pub Vec<i64>);

impl Route {
    pub fn labels(&self) -> &[i64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }
}

/// Set of initial conditions sharing a finite route prefix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cylinder {
    pub components: Vec<Interval>,
}

impl Cylinder {
    pub fn contains(&self, x: f64, tol: f64) -> bool {
        self.components.iter().any(|c| c.contains(x, tol))
    }

    pub fn max_width(&self) -> f64 {
        self.components.iter().map(Interval::width).fold(0.0, f64::max)
    }

    /// The component containing `x`, if any.
    pub fn component_of(&self, x: f64, tol: f64) -> Option<Interval> {
        self.components.iter().copied().find(|c| c.contains(x, tol))
    }
}

/// JSON description of a map, as accepted by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum MapSpec {
    Linear { lambda: Scalar },
    Zigzag { p: i64, xi: Scalar },
    Pieces { breakpoints: Vec<Scalar>, values: Vec<[Scalar; 2]> },
}

impl MapSpec {
    pub fn build(&self) -> Result<LiftMap> {
        match self {
            MapSpec::Linear { lambda } => LiftMap::linear(lambda.value()?),
            MapSpec::Zigzag { p, xi } => LiftMap::zigzag(*p, xi.value()?),
            MapSpec::Pieces { breakpoints, values } => {
                let b = breakpoints.iter().map(Scalar::value).collect::<Result<Vec<_>>>()?;
                let v = values
                    .iter()
                    .map(|[l, r]| Ok([l.value()?, r.value()?]))
                    .collect::<Result<Vec<_>>>()?;
                LiftMap::from_pieces(b, v)
            }
        }
    }

    /// Slope of a linear map spec, if this is one.
    pub fn linear_slope(&self) -> Option<Result<f64>> {
        match self {
            MapSpec::Linear { lambda } => Some(lambda.value()),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn nearest_integer_convention() {
        assert_eq!(nearest_integer(0.4).unwrap(), 0);
        assert_eq!(nearest_integer(-0.5).unwrap(), 0);
        assert_eq!(nearest_integer(2.5).unwrap(), 3);
        assert_eq!(nearest_integer(0.49999999999999994).unwrap(), 0);
        assert_eq!(nearest_integer(-1.5).unwrap(), -1);
        assert!(matches!(nearest_integer(f64::NAN), Err(Error::NonFinite(_))));
        assert!(matches!(nearest_integer(f64::INFINITY), Err(Error::NonFinite(_))));
        assert!(matches!(nearest_integer(1e300), Err(Error::IndexOverflow(_))));
    }

    #[test]
    fn linear_evaluation() {
        let f = LiftMap::linear(3.0).unwrap();
        assert_eq!(f.eval(0.25).unwrap(), 0.75);
        assert_eq!(f.eval(1.25).unwrap(), 1.75);
        assert_eq!(f.shift(0.25).unwrap(), 0.5);
        assert_eq!(f.shift(0.0).unwrap(), 0.0);
        assert_eq!(f.shift(0.3).unwrap(), f.shift(1.3).unwrap());
    }

    #[test]
    fn zigzag_peak() {
        let f = LiftMap::zigzag(1, 0.25).unwrap();
        assert_eq!(f.eval(0.25).unwrap(), 1.5);
        assert_eq!(f.eval(0.0).unwrap(), 0.0);
        assert!(f.is_odd());
        assert!(!f.is_monotone_continuous());
        assert_eq!(f.slopes(), &[-4.0, 6.0, -4.0]);
        assert_eq!(f.min_stretch(), 4.0);
    }

    #[test]
    fn construction_errors() {
        assert!(LiftMap::from_pieces(vec![-0.5, 0.0, 0.5], vec![[0.0, 0.0], [0.0, 1.0]]).is_err());
        assert!(LiftMap::from_pieces(vec![-0.4, 0.5], vec![[0.0, 1.0]]).is_err());
        assert!(LiftMap::from_pieces(vec![-0.5, 0.2, 0.1, 0.5], vec![[0.0, 1.0]; 3]).is_err());
        assert!(LiftMap::from_pieces(vec![-0.5, 0.5], vec![[0.0, 1.0], [1.0, 2.0]]).is_err());
        assert!(LiftMap::linear(0.0).is_err());
        assert!(LiftMap::zigzag(0, 0.25).is_err());
        assert!(LiftMap::zigzag(1, 0.5).is_err());
    }

    #[test]
    fn routes() {
        let f = LiftMap::linear(3.0).unwrap();
        assert_eq!(f.route(0.25, 4).unwrap().0, vec![0, 1, 0, 1]);
        assert_eq!(f.route(0.0, 3).unwrap().0, vec![0, 0, 0]);
        let g = LiftMap::linear(5.0).unwrap();
        assert_eq!(g.route(0.1, 2).unwrap().0, vec![0, 1]);
        assert!(f.route(0.0, 0).is_err());
    }

    #[test]
    fn route_reconstruction_examples() {
        let f = LiftMap::linear(3.0).unwrap();
        let cyl = f.reconstruct_initial(&Route(vec![0, 1, 0, 1])).unwrap();
        assert_eq!(cyl.components.len(), 1);
        let c = cyl.components[0];
        assert!(c.contains(0.25, 1e-15));
        assert!(c.width() <= 3f64.powi(-3) + 1e-15);

        for n in 1..12 {
            let cyl = f.reconstruct_initial(&Route(vec![0; n])).unwrap();
            let c = cyl.components[0];
            assert!(c.contains(0.0, 0.0));
            assert!(c.width() <= 3f64.powi(-(n as i32 - 1)) + 1e-15);
        }
    }

    #[test]
    fn brute_force_cylinder_matches() {
        // Scan I0 on a fine grid, keep points with the wanted route and compare
        // with the reconstructed interval.
        let f = LiftMap::linear(3.0).unwrap();
        let want = vec![0, 1, 0, 1];
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let steps = 200_000;
        for i in 0..steps {
            let x = -0.5 + (i as f64 + 0.5) / steps as f64;
            if f.route(x, 4).unwrap().0 == want {
                lo = lo.min(x);
                hi = hi.max(x);
            }
        }
        let c = f.reconstruct_initial(&Route(want)).unwrap().components[0];
        assert!((c.lo - lo).abs() < 2.0 / steps as f64);
        assert!((c.hi - hi).abs() < 2.0 / steps as f64);
    }

    #[test]
    fn inadmissible_route_reported() {
        // Λ = 3 never jumps by two cells in one step.
        let f = LiftMap::linear(3.0).unwrap();
        assert!(matches!(
            f.reconstruct_initial(&Route(vec![0, 2])),
            Err(Error::InadmissibleRoute(_))
        ));
        // Non-stretching maps are refused.
        let g = LiftMap::linear(1.0).unwrap();
        assert!(g.reconstruct_initial(&Route(vec![0, 0])).is_err());
    }

    #[test]
    fn zigzag_cylinder_has_several_components() {
        let f = LiftMap::zigzag(2, 0.25).unwrap();
        let cyl = f.reconstruct_initial(&Route(vec![0, 1])).unwrap();
        assert_eq!(cyl.components.len(), 2);
        assert!(cyl.contains(0.15, 0.0) && cyl.contains(0.4, 0.0));
        assert!(!cyl.contains(0.3, 0.0));
        assert!(cyl.max_width() <= 1.0 / 8.0 + 1e-15);
    }

    #[test]
    fn map_spec_json() {
        let spec: MapSpec = serde_json::from_str(r#"{"type":"linear","lambda":3.0}"#).unwrap();
        assert_eq!(spec.build().unwrap(), LiftMap::linear(3.0).unwrap());
        let spec: MapSpec = serde_json::from_str(r#"{"type":"zigzag","p":1,"xi":0.25}"#).unwrap();
        assert_eq!(spec.build().unwrap(), LiftMap::zigzag(1, 0.25).unwrap());
        let spec: MapSpec = serde_json::from_str(
            r#"{"type":"pieces","breakpoints":[-0.5,-0.13397,0.13397,0.5],"values":[[-1.86603,-0.5],[-0.5,0.5],[0.5,1.86603]]}"#,
        )
        .unwrap();
        let f = spec.build().unwrap();
        assert_eq!(f.piece_count(), 3);
        let spec: MapSpec = serde_json::from_str(r#"{"type":"linear","lambda":"2+sqrt(3)"}"#).unwrap();
        assert_eq!(spec.linear_slope().unwrap().unwrap(), 2.0 + 3f64.sqrt());
        assert!(serde_json::from_str::<MapSpec>(r#"{"type":"cubic"}"#).is_err());
    }

    fn arb_map() -> impl Strategy<Value = LiftMap> {
        prop_oneof![
            (1.5f64..9.0).prop_map(|l| LiftMap::linear(l).unwrap()),
            (1i64..4, 0.05f64..0.45).prop_map(|(p, xi)| LiftMap::zigzag(p, xi).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn lift_identity(f in arb_map(), x in -10.0f64..10.0, k in -5i64..=5) {
            let lhs = f.eval(x + k as f64).unwrap();
            let rhs = f.eval(x).unwrap() + k as f64;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }

        #[test]
        fn shift_is_periodic(f in arb_map(), x in -10.0f64..10.0) {
            let a = f.shift(x).unwrap();
            let b = f.shift(x + 1.0).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
        }

        #[test]
        fn linear_rewrite(lambda in 1.5f64..9.0, x in -10.0f64..10.0) {
            let f = LiftMap::linear(lambda).unwrap();
            let direct = f.eval(x).unwrap();
            let rewrite = x + (lambda - 1.0) * centered_fraction(x);
            prop_assert!((direct - rewrite).abs() <= 1e-12 * (1.0 + x.abs()));
        }

        #[test]
        fn stretching_inequality(f in arb_map(), a in 0.0f64..1.0, b in 0.0f64..1.0, j in 0usize..3) {
            let j = j % f.piece_count();
            let p = f.piece(j);
            let x = p.start + a * (p.end - p.start) * 0.999;
            let y = p.start + b * (p.end - p.start) * 0.999;
            let fx = f.eval(x).unwrap();
            let fy = f.eval(y).unwrap();
            prop_assert!((fx - fy).abs() >= f.min_stretch() * (x - y).abs() - 1e-12);
        }

        #[test]
        fn route_round_trip(f in arb_map(), x0 in -0.5f64..0.5, n in 1usize..10) {
            let route = f.route(x0, n).unwrap();
            let cyl = f.reconstruct_initial(&route).unwrap();
            let bound = f.min_stretch().powi(-(n as i32 - 1));
            let c = cyl.component_of(x0, 1e-12).expect("x0 in cylinder");
            prop_assert!(c.width() <= bound + 1e-12);
            prop_assert!((x0 - c.midpoint()).abs() <= bound);
        }
    }
}
