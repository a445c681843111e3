//! Piecewise-monotone maps on the interval `[0,1]` or the circle `[0,2π)`:
//! segment geometry, validated branch representation, evaluation, branch
//! images and inverses, and the built-in example maps.
//!
//! Circle arcs are stored as `(start, length)` pairs so arcs crossing the
//! zero angle are first-class. Every branch keeps exact lift values at its
//! support endpoints; images of full branch supports therefore come out as
//! exact arithmetic on stored constants rather than re-evaluated floats,
//! which keeps piece intersections that should be single points degenerate
//! instead of noise-width intervals.

use std::f64::consts::TAU;
use std::fmt;

use crate::matrix::{spectral_radius, TransitionMatrix};

/// Tolerance for wrap-around snapping and junction agreement.
pub(crate) const EPS_WRAP: f64 = 1e-12;

/// Sample count used to validate monotonicity and derivative bounds of a
/// branch at construction time.
const MONOTONE_SAMPLES: usize = 33;

// ---------------------------------------------------------------------------
// errors
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub enum MapError {
    UnknownBuiltin { name: String },
    BadParams { reason: String },
    OutOfDomain { x: f64 },
    /// The point is a branch endpoint and the one-sided derivatives differ;
    /// both values are reported.
    AtBreakpoint { x: f64, left: f64, right: f64 },
    NotInSupport { branch: usize, reason: String },
    NotInImage { branch: usize, y: f64 },
    /// Branch list fails tiling, continuity, or monotonicity validation.
    InvalidMap { reason: String },
    BadPartition { reason: String },
}

impl fmt::Display for MapError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapError::UnknownBuiltin { name } => write!(f, "unknown builtin map {name:?}"),
            MapError::BadParams { reason } => write!(f, "bad builtin parameters: {reason}"),
            MapError::OutOfDomain { x } => write!(f, "point {x} is outside the domain"),
            MapError::AtBreakpoint { x, left, right } => write!(
                f,
                "{x} is a breakpoint with one-sided derivatives {left} and {right}"
            ),
            MapError::NotInSupport { branch, reason } => {
                write!(f, "argument not inside support of branch {branch}: {reason}")
            }
            MapError::NotInImage { branch, y } => {
                write!(f, "{y} is not in the image of branch {branch}")
            }
            MapError::InvalidMap { reason } => write!(f, "invalid piecewise-monotone map: {reason}"),
            MapError::BadPartition { reason } => write!(f, "invalid partition: {reason}"),
        }
    }
}

impl std::error::Error for MapError {}

// ---------------------------------------------------------------------------
// domain
// ---------------------------------------------------------------------------

/// The ambient space: the unit interval `[0,1]` or the circle `[0,2π)` with
/// the shorter-arc metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Interval,
    Circle,
}

impl Domain {
    pub fn length(self) -> f64 {
        match self {
            Domain::Interval => 1.0,
            Domain::Circle => TAU,
        }
    }

    pub fn contains(self, x: f64) -> bool {
        match self {
            Domain::Interval => (-EPS_WRAP..=1.0 + EPS_WRAP).contains(&x),
            Domain::Circle => x.is_finite(),
        }
    }

    /// Canonical representative: circle points reduce mod 2π into `[0,2π)`,
    /// interval points clamp away float dust at the ends.
    pub fn reduce(self, x: f64) -> f64 {
        match self {
            Domain::Interval => x.clamp(0.0, 1.0),
            Domain::Circle => {
                let r = x.rem_euclid(TAU);
                if r >= TAU - EPS_WRAP {
                    0.0
                } else {
                    r
                }
            }
        }
    }

    /// Distance: `|x−y|` on the interval, shorter arc on the circle.
    pub fn metric(self, x: f64, y: f64) -> f64 {
        match self {
            Domain::Interval => (x - y).abs(),
            Domain::Circle => {
                let d = (self.reduce(x) - self.reduce(y)).abs();
                d.min(TAU - d)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// segments
// ---------------------------------------------------------------------------

/// A closed subinterval or circular arc, stored as start plus length.
///
/// On the circle the start is reduced into `[0,2π)` and the length lies in
/// `(0, 2π]`, so arcs crossing zero (like `[5π/3, 2π] ∪ [0, π/3]`) are a
/// single value. The unwrapped coordinate range is `[start, start+len]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    start: f64,
    len: f64,
}

impl Segment {
    pub fn new(domain: Domain, start: f64, len: f64) -> Result<Self, MapError> {
        if !(len > 0.0) || len > domain.length() + EPS_WRAP {
            return Err(MapError::BadPartition {
                reason: format!("segment length {len} outside (0, {}]", domain.length()),
            });
        }
        let len = len.min(domain.length());
        let start = match domain {
            Domain::Interval => {
                if start < -EPS_WRAP || start + len > 1.0 + EPS_WRAP {
                    return Err(MapError::BadPartition {
                        reason: format!("[{start}, {}] is not inside [0,1]", start + len),
                    });
                }
                start.clamp(0.0, 1.0)
            }
            Domain::Circle => domain.reduce(start),
        };
        Ok(Segment { start, len })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    /// Unwrapped right endpoint (may exceed 2π for wrap-around arcs).
    pub fn end(&self) -> f64 {
        self.start + self.len
    }

    pub fn len(&self) -> f64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len <= 0.0
    }

    pub fn midpoint(&self, domain: Domain) -> f64 {
        domain.reduce(self.start + self.len / 2.0)
    }

    /// Local unwrapped coordinate of `x` in `[start, start+len]`, or None if
    /// the point is outside the segment (within `eps`).
    pub fn local(&self, domain: Domain, x: f64, eps: f64) -> Option<f64> {
        match domain {
            Domain::Interval => {
                (self.start - eps..=self.end() + eps).contains(&x).then(|| x)
            }
            Domain::Circle => {
                let rel = (x - self.start).rem_euclid(TAU);
                if rel <= self.len + eps {
                    Some(self.start + rel.min(self.len))
                } else if rel >= TAU - eps {
                    Some(self.start)
                } else {
                    None
                }
            }
        }
    }

    pub fn contains(&self, domain: Domain, x: f64, eps: f64) -> bool {
        self.local(domain, x, eps).is_some()
    }

    /// Intersection with another segment: up to two pieces on the circle.
    /// Degenerate (single-point) overlaps are returned with length 0 via
    /// `keep_degenerate`, otherwise dropped.
    pub fn intersect(&self, domain: Domain, other: &Segment, keep_degenerate: bool) -> Vec<Segment> {
        let mut out = Vec::new();
        let (a0, a1) = (self.start, self.end());
        // candidate translates of `other` overlapping [a0, a1]
        let shifts: &[f64] = match domain {
            Domain::Interval => &[0.0],
            Domain::Circle => &[-TAU, 0.0, TAU],
        };
        for &s in shifts {
            let (b0, b1) = (other.start + s, other.end() + s);
            let lo = a0.max(b0);
            let hi = a1.min(b1);
            if hi - lo > 0.0 || (keep_degenerate && hi - lo >= 0.0) {
                out.push(Segment { start: domain.reduce(lo), len: (hi - lo).max(0.0) });
            }
        }
        // a full-circle pair can produce duplicate translates; dedup by start
        out.dedup_by(|a, b| (a.start - b.start).abs() <= EPS_WRAP && (a.len - b.len).abs() <= EPS_WRAP);
        out
    }

    /// Distance between the two closed sets: 0 when they touch or overlap,
    /// otherwise the shortest gap in the domain metric.
    pub fn set_distance(&self, domain: Domain, other: &Segment) -> f64 {
        if !self.intersect(domain, other, true).is_empty() {
            return 0.0;
        }
        let ends_a = [self.start, domain.reduce(self.end())];
        let ends_b = [other.start, domain.reduce(other.end())];
        let mut best = f64::INFINITY;
        for a in ends_a {
            for b in ends_b {
                best = best.min(domain.metric(a, b));
            }
        }
        best
    }
}

/// True iff the union of `pieces` covers `target` with no gap wider than
/// `tol`. Pieces are clipped into the target's unwrapped frame and swept.
pub fn segments_cover(domain: Domain, target: &Segment, pieces: &[Segment], tol: f64) -> bool {
    let mut clipped: Vec<(f64, f64)> = Vec::new();
    for p in pieces {
        for piece in target.intersect(domain, p, true) {
            // express in target's unwrapped frame
            if let Some(local) = target.local(domain, piece.start, EPS_WRAP) {
                clipped.push((local, local + piece.len));
            }
        }
    }
    clipped.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut cursor = target.start;
    for (a, b) in clipped {
        if a > cursor + tol {
            return false;
        }
        cursor = cursor.max(b);
    }
    cursor >= target.end() - tol
}

// ---------------------------------------------------------------------------
// branches and maps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increasing,
    Decreasing,
}

type EvalFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// One monotone C¹ piece of a map, in unwrapped (lift) coordinates: `eval`
/// takes a point of `[support.start, support.end()]` and returns a real lift
/// value; on the circle the image point is that value mod 2π.
pub struct Branch {
    support: Segment,
    direction: Direction,
    eval: EvalFn,
    deriv: EvalFn,
    deriv_bounds: (f64, f64),
    value_start: f64,
    value_end: f64,
}

impl fmt::Debug for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Branch")
            .field("support", &self.support)
            .field("direction", &self.direction)
            .field("deriv_bounds", &self.deriv_bounds)
            .field("value_start", &self.value_start)
            .field("value_end", &self.value_end)
            .finish()
    }
}

impl Branch {
    /// `value_start`/`value_end` are the exact lift values at the support
    /// endpoints; `eval` must agree with them to high accuracy (validated).
    pub fn new(
        support: Segment,
        eval: EvalFn,
        deriv: EvalFn,
        deriv_bounds: (f64, f64),
        value_start: f64,
        value_end: f64,
    ) -> Result<Self, MapError> {
        if !(deriv_bounds.0 > 0.0) || deriv_bounds.1 < deriv_bounds.0 {
            return Err(MapError::InvalidMap {
                reason: format!("derivative bounds {deriv_bounds:?} must satisfy 0 < min ≤ max"),
            });
        }
        let direction = if value_end > value_start {
            Direction::Increasing
        } else if value_end < value_start {
            Direction::Decreasing
        } else {
            return Err(MapError::InvalidMap {
                reason: "branch endpoint values coincide; branch is not strictly monotone".into(),
            });
        };
        let b = Branch { support, direction, eval, deriv, deriv_bounds, value_start, value_end };
        b.validate()?;
        Ok(b)
    }

    fn validate(&self) -> Result<(), MapError> {
        let (s, e) = (self.support.start, self.support.end());
        for i in [0, MONOTONE_SAMPLES - 1] {
            let x = s + (e - s) * i as f64 / (MONOTONE_SAMPLES - 1) as f64;
            let v = (self.eval)(x);
            let stored = if i == 0 { self.value_start } else { self.value_end };
            if (v - stored).abs() > 1e-9 {
                return Err(MapError::InvalidMap {
                    reason: format!(
                        "stored endpoint value {stored} disagrees with eval({x}) = {v}"
                    ),
                });
            }
        }
        let sign = match self.direction {
            Direction::Increasing => 1.0,
            Direction::Decreasing => -1.0,
        };
        let mut prev = None;
        for i in 0..MONOTONE_SAMPLES {
            let x = s + (e - s) * i as f64 / (MONOTONE_SAMPLES - 1) as f64;
            let d = (self.deriv)(x);
            if d * sign <= 0.0 {
                return Err(MapError::InvalidMap {
                    reason: format!("derivative {d} at {x} contradicts branch direction"),
                });
            }
            let m = d.abs();
            if m < self.deriv_bounds.0 - 1e-9 || m > self.deriv_bounds.1 + 1e-9 {
                return Err(MapError::InvalidMap {
                    reason: format!(
                        "|derivative| = {m} at {x} escapes stated bounds {:?}",
                        self.deriv_bounds
                    ),
                });
            }
            let v = (self.eval)(x);
            if let Some(p) = prev {
                if (v - p) * sign <= 0.0 {
                    return Err(MapError::InvalidMap {
                        reason: format!("sampled values are not strictly monotone near {x}"),
                    });
                }
            }
            prev = Some(v);
        }
        Ok(())
    }

    pub fn support(&self) -> &Segment {
        &self.support
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn deriv_bounds(&self) -> (f64, f64) {
        self.deriv_bounds
    }

    /// Lift value at an unwrapped support coordinate, with stored exact
    /// values at the endpoints.
    pub(crate) fn lift_at(&self, x: f64) -> f64 {
        if x == self.support.start {
            self.value_start
        } else if x == self.support.end() {
            self.value_end
        } else {
            (self.eval)(x)
        }
    }

    /// Image of the full support as an ordered lift interval `(lo, hi)`.
    pub(crate) fn image_lift(&self) -> (f64, f64) {
        if self.value_start <= self.value_end {
            (self.value_start, self.value_end)
        } else {
            (self.value_end, self.value_start)
        }
    }

    /// Monotone bisection solve of `lift_at(x) = y_lift` on the support.
    /// `y_lift` must lie inside the image lift interval.
    pub(crate) fn inverse_lift(&self, y_lift: f64, tol: f64) -> f64 {
        if y_lift == self.value_start {
            return self.support.start;
        }
        if y_lift == self.value_end {
            return self.support.end();
        }
        let (mut lo, mut hi) = (self.support.start, self.support.end());
        let increasing = self.direction == Direction::Increasing;
        let target_err = tol * self.deriv_bounds.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let v = self.lift_at(mid);
            if (v - y_lift).abs() <= target_err && hi - lo <= tol {
                return mid;
            }
            if (v < y_lift) == increasing {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// A continuous map of the interval or circle given by monotone branches
/// whose supports tile the domain in order.
pub struct PiecewiseMonotoneMap {
    domain: Domain,
    branches: Vec<Branch>,
}

impl fmt::Debug for PiecewiseMonotoneMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PiecewiseMonotoneMap")
            .field("domain", &self.domain)
            .field("branches", &self.branches)
            .finish()
    }
}

impl PiecewiseMonotoneMap {
    pub fn new(domain: Domain, branches: Vec<Branch>) -> Result<Self, MapError> {
        if branches.is_empty() {
            return Err(MapError::InvalidMap { reason: "no branches".into() });
        }
        // supports tile the domain in listed order
        let total: f64 = branches.iter().map(|b| b.support.len).sum();
        if (total - domain.length()).abs() > 1e-9 {
            return Err(MapError::InvalidMap {
                reason: format!("branch supports total {total}, expected {}", domain.length()),
            });
        }
        if domain == Domain::Interval && branches[0].support.start.abs() > EPS_WRAP {
            return Err(MapError::InvalidMap {
                reason: "interval branches must start at 0".into(),
            });
        }
        for w in branches.windows(2) {
            let gap = (domain.reduce(w[0].support.end()) - w[1].support.start).abs();
            if gap > EPS_WRAP && (gap - domain.length()).abs() > EPS_WRAP {
                return Err(MapError::InvalidMap {
                    reason: format!(
                        "support gap between {:?} and {:?}",
                        w[0].support, w[1].support
                    ),
                });
            }
        }
        // continuity at interior junctions and (on the circle) the wrap seam
        let junction_ok = |left: f64, right: f64| match domain {
            Domain::Interval => (left - right).abs() <= 1e-9,
            Domain::Circle => {
                let d = (left - right).rem_euclid(TAU);
                d <= 1e-9 || d >= TAU - 1e-9
            }
        };
        for w in branches.windows(2) {
            if !junction_ok(w[0].value_end, w[1].value_start) {
                return Err(MapError::InvalidMap {
                    reason: format!(
                        "discontinuity at {}: values {} vs {}",
                        w[1].support.start, w[0].value_end, w[1].value_start
                    ),
                });
            }
        }
        if domain == Domain::Circle {
            let last = branches.last().unwrap();
            if !junction_ok(last.value_end, branches[0].value_start) {
                return Err(MapError::InvalidMap {
                    reason: format!(
                        "discontinuity at the wrap seam: values {} vs {}",
                        last.value_end, branches[0].value_start
                    ),
                });
            }
        }
        for b in &branches {
            let span = (b.value_end - b.value_start).abs();
            if span > domain.length() + 1e-9 {
                return Err(MapError::InvalidMap {
                    reason: format!("branch image spans {span}, longer than the domain"),
                });
            }
        }
        Ok(PiecewiseMonotoneMap { domain, branches })
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    /// Branches are indexed from 0 in support order.
    pub fn branch(&self, b: usize) -> &Branch {
        &self.branches[b]
    }

    /// Index of a branch whose support contains `x` (the lower-indexed one
    /// at shared endpoints, where continuity makes the choice irrelevant).
    pub fn branch_containing(&self, x: f64) -> Option<usize> {
        let x = self.domain.reduce(x);
        (0..self.branches.len()).find(|&b| self.branches[b].support.contains(self.domain, x, EPS_WRAP))
    }

    /// Map value at `x`, reduced back into the domain.
    pub fn evaluate(&self, x: f64) -> Result<f64, MapError> {
        if !self.domain.contains(x) {
            return Err(MapError::OutOfDomain { x });
        }
        let xr = self.domain.reduce(x);
        let b = self
            .branch_containing(xr)
            .ok_or(MapError::OutOfDomain { x })?;
        let branch = &self.branches[b];
        let local = branch
            .support
            .local(self.domain, xr, EPS_WRAP)
            .expect("branch_containing certified membership");
        Ok(self.domain.reduce(branch.lift_at(local)))
    }

    /// Derivative at `x`. At a junction the one-sided derivatives must
    /// agree (to 1e-9) or both are reported in the error.
    pub fn derivative(&self, x: f64) -> Result<f64, MapError> {
        if !self.domain.contains(x) {
            return Err(MapError::OutOfDomain { x });
        }
        let xr = self.domain.reduce(x);
        let mut values: Vec<f64> = Vec::new();
        for branch in &self.branches {
            if let Some(local) = branch.support.local(self.domain, xr, EPS_WRAP) {
                values.push((branch.deriv)(local));
            }
        }
        match values.as_slice() {
            [] => Err(MapError::OutOfDomain { x }),
            [d] => Ok(*d),
            [a, b, rest @ ..] => {
                let (a, b) = (*a, *b);
                debug_assert!(rest.is_empty(), "more than two branches meet at {x}");
                if (a - b).abs() <= 1e-9 {
                    Ok(0.5 * (a + b))
                } else {
                    Err(MapError::AtBreakpoint { x: xr, left: a, right: b })
                }
            }
        }
    }

    /// Exact image of `j ⊆ support(b)` by monotone endpoint evaluation.
    pub fn branch_image(&self, b: usize, j: &Segment) -> Result<Segment, MapError> {
        let branch = self.branches.get(b).ok_or_else(|| MapError::NotInSupport {
            branch: b,
            reason: "no such branch".into(),
        })?;
        let lo = branch.support.local(self.domain, j.start, EPS_WRAP);
        let Some(lo) = lo else {
            return Err(MapError::NotInSupport {
                branch: b,
                reason: format!("{j:?} is not inside {:?}", branch.support),
            });
        };
        if lo + j.len > branch.support.end() + EPS_WRAP {
            return Err(MapError::NotInSupport {
                branch: b,
                reason: format!("{j:?} overhangs {:?}", branch.support),
            });
        }
        let hi = (lo + j.len).min(branch.support.end());
        let (va, vb) = (branch.lift_at(lo), branch.lift_at(hi));
        let (lo_v, mut hi_v) = if va <= vb { (va, vb) } else { (vb, va) };
        if hi_v - lo_v > self.domain.length() {
            hi_v = lo_v + self.domain.length();
        }
        if hi_v - lo_v <= 0.0 {
            // a zero-length input can only arise from callers clipping to a
            // degenerate overlap; surface it as a degenerate segment at lo_v
            return Segment::new(self.domain, lo_v, EPS_WRAP).map(|mut s| {
                s.len = 0.0;
                s
            });
        }
        Segment::new(self.domain, lo_v, hi_v - lo_v)
    }

    /// Inverse of branch `b` at the domain point `y`: the unique support
    /// point mapping to `y` (for a length-2π image where both support
    /// endpoints map to the same circle point, the left one is returned).
    pub fn branch_inverse(&self, b: usize, y: f64, tol: f64) -> Result<f64, MapError> {
        let branch = self.branches.get(b).ok_or_else(|| MapError::NotInSupport {
            branch: b,
            reason: "no such branch".into(),
        })?;
        let (lo, hi) = branch.image_lift();
        let y_lift = match self.domain {
            Domain::Interval => {
                if y < lo - EPS_WRAP || y > hi + EPS_WRAP {
                    return Err(MapError::NotInImage { branch: b, y });
                }
                y.clamp(lo, hi)
            }
            Domain::Circle => {
                let yr = self.domain.reduce(y);
                let k = ((lo - yr) / TAU).ceil();
                let cand = yr + TAU * k;
                if cand > hi + EPS_WRAP {
                    return Err(MapError::NotInImage { branch: b, y });
                }
                cand.clamp(lo, hi)
            }
        };
        Ok(self.domain.reduce(branch.inverse_lift(y_lift, tol)))
    }
}

// ---------------------------------------------------------------------------
// partitions
// ---------------------------------------------------------------------------

/// An ordered list of closed, nondegenerate pieces with pairwise disjoint
/// interiors. Pieces need not cover the domain; covering is a separately
/// verified condition.
#[derive(Debug, Clone)]
pub struct Partition {
    domain: Domain,
    pieces: Vec<Segment>,
}

impl Partition {
    pub fn new(domain: Domain, pieces: Vec<Segment>) -> Result<Self, MapError> {
        if pieces.len() < 2 {
            return Err(MapError::BadPartition {
                reason: "a partition needs at least two pieces".into(),
            });
        }
        for (i, p) in pieces.iter().enumerate() {
            if p.len <= EPS_WRAP {
                return Err(MapError::BadPartition {
                    reason: format!("piece {} is degenerate (length {})", i + 1, p.len),
                });
            }
        }
        for i in 0..pieces.len() {
            for j in i + 1..pieces.len() {
                let overlap: f64 = pieces[i]
                    .intersect(domain, &pieces[j], false)
                    .iter()
                    .map(|s| s.len)
                    .sum();
                if overlap > EPS_WRAP {
                    return Err(MapError::BadPartition {
                        reason: format!(
                            "pieces {} and {} overlap on length {overlap}",
                            i + 1,
                            j + 1
                        ),
                    });
                }
            }
        }
        Ok(Partition { domain, pieces })
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn piece_count(&self) -> usize {
        self.pieces.len()
    }

    /// Piece for 1-based symbol `i` (matching the symbol convention used
    /// throughout the transition-matrix layer).
    pub fn piece(&self, symbol: usize) -> &Segment {
        assert!(
            (1..=self.pieces.len()).contains(&symbol),
            "symbol {symbol} outside 1..={}",
            self.pieces.len()
        );
        &self.pieces[symbol - 1]
    }

    pub fn pieces(&self) -> &[Segment] {
        &self.pieces
    }

    /// Symbols (1-based) of all pieces containing `x` within `eps`.
    pub fn symbols_at(&self, x: f64, eps: f64) -> Vec<usize> {
        (1..=self.pieces.len())
            .filter(|&i| self.pieces[i - 1].contains(self.domain, x, eps))
            .collect()
    }
}

// ---------------------------------------------------------------------------
// built-in maps
// ---------------------------------------------------------------------------

/// Parameters for [`make_builtin`]; only `linear_markov` takes one.
#[derive(Debug, Clone, Default)]
pub struct BuiltinParams {
    pub matrix: Option<TransitionMatrix>,
}

/// Constructs a named example map together with its canonical partition and
/// the transition matrix the pair realizes.
///
/// Names: `kasner`, `doubling`, `tent`, `linear_markov` (the latter requires
/// `params.matrix`, an irreducible matrix with contiguous row supports).
pub fn make_builtin(
    name: &str,
    params: &BuiltinParams,
) -> Result<(PiecewiseMonotoneMap, Partition, TransitionMatrix), MapError> {
    match name {
        "kasner" => {
            reject_matrix_param(name, params)?;
            crate::kasner::build_kasner()
        }
        "doubling" => {
            reject_matrix_param(name, params)?;
            build_doubling()
        }
        "tent" => {
            reject_matrix_param(name, params)?;
            build_tent()
        }
        "linear_markov" => {
            let a = params.matrix.as_ref().ok_or_else(|| MapError::BadParams {
                reason: "linear_markov requires a transition matrix parameter".into(),
            })?;
            build_linear_markov(a)
        }
        other => Err(MapError::UnknownBuiltin { name: other.to_string() }),
    }
}

fn reject_matrix_param(name: &str, params: &BuiltinParams) -> Result<(), MapError> {
    if params.matrix.is_some() {
        return Err(MapError::BadParams {
            reason: format!("builtin {name:?} takes no matrix parameter"),
        });
    }
    Ok(())
}

pub(crate) fn linear_branch(domain: Domain, x0: f64, x1: f64, v0: f64, v1: f64) -> Result<Branch, MapError> {
    let slope = (v1 - v0) / (x1 - x0);
    let m = slope.abs();
    Branch::new(
        Segment::new(domain, x0, x1 - x0)?,
        Box::new(move |x| v0 + slope * (x - x0)),
        Box::new(move |_| slope),
        (m, m),
        v0,
        v1,
    )
}

fn build_doubling() -> Result<(PiecewiseMonotoneMap, Partition, TransitionMatrix), MapError> {
    let d = Domain::Circle;
    let half = TAU / 2.0;
    let map = PiecewiseMonotoneMap::new(
        d,
        vec![
            linear_branch(d, 0.0, half, 0.0, TAU)?,
            linear_branch(d, half, TAU, TAU, 2.0 * TAU)?,
        ],
    )?;
    let partition = Partition::new(
        d,
        vec![Segment::new(d, 0.0, half)?, Segment::new(d, half, half)?],
    )?;
    let matrix = TransitionMatrix::new(&[vec![1, 1], vec![1, 1]])
        .expect("full 2x2 matrix is valid");
    Ok((map, partition, matrix))
}

fn build_tent() -> Result<(PiecewiseMonotoneMap, Partition, TransitionMatrix), MapError> {
    let d = Domain::Interval;
    let map = PiecewiseMonotoneMap::new(
        d,
        vec![
            linear_branch(d, 0.0, 0.5, 0.0, 1.0)?,
            linear_branch(d, 0.5, 1.0, 1.0, 0.0)?,
        ],
    )?;
    let partition = Partition::new(
        d,
        vec![Segment::new(d, 0.0, 0.5)?, Segment::new(d, 0.5, 0.5)?],
    )?;
    let matrix = TransitionMatrix::new(&[vec![1, 1], vec![1, 1]])
        .expect("full 2x2 matrix is valid");
    Ok((map, partition, matrix))
}

/// Canonical piecewise-linear Markov interval map realizing `a`: piece
/// widths proportional to the Perron eigenvector (so every branch has slope
/// magnitude λ_A), each piece mapped linearly onto the union of its allowed
/// successors, directions chosen to make the map globally continuous.
fn build_linear_markov(
    a: &TransitionMatrix,
) -> Result<(PiecewiseMonotoneMap, Partition, TransitionMatrix), MapError> {
    let p = a.dim();
    let spec = spectral_radius(a, 1e-12).map_err(|e| MapError::BadParams {
        reason: format!("spectral analysis of the matrix failed: {e}"),
    })?;
    let v = spec.eigvec.ok_or_else(|| MapError::BadParams {
        reason: "linear_markov requires an irreducible matrix (no positive eigenvector)".into(),
    })?;
    let total: f64 = v.iter().sum();
    // cut points 0 = c_0 < c_1 < … < c_p = 1, widths v_i / total
    let mut cuts = vec![0.0f64; p + 1];
    for i in 0..p {
        cuts[i + 1] = cuts[i] + v[i] / total;
    }
    cuts[p] = 1.0;
    // each row must allow a contiguous run of successors
    let mut runs = Vec::with_capacity(p);
    for i in 1..=p {
        let allowed: Vec<usize> = (1..=p).filter(|&j| a.entry(i, j) == 1).collect();
        let (lo, hi) = (allowed[0], *allowed.last().unwrap());
        if allowed.len() != hi - lo + 1 {
            return Err(MapError::BadParams {
                reason: format!(
                    "row {i} allows a non-contiguous successor set {allowed:?}; \
                     the linear Markov construction needs contiguous runs"
                ),
            });
        }
        runs.push((lo, hi));
    }
    // pick a direction per piece so junction values agree; feasibility is
    // computed right-to-left, then a greedy left-to-right pass commits
    let image = |i: usize| (cuts[runs[i].0 - 1], cuts[runs[i].1]); // (left, right) of target
    let out_value = |i: usize, increasing: bool| if increasing { image(i).1 } else { image(i).0 };
    let in_value = |i: usize, increasing: bool| if increasing { image(i).0 } else { image(i).1 };
    let mut feasible = vec![[true, true]; p];
    for i in (0..p - 1).rev() {
        for (di, inc) in [(0, true), (1, false)] {
            feasible[i][di] = [(0, true), (1, false)].iter().any(|&(dj, inc_next)| {
                feasible[i + 1][dj]
                    && (out_value(i, inc) - in_value(i + 1, inc_next)).abs() <= 1e-9
            });
        }
    }
    let mut directions = Vec::with_capacity(p);
    let mut prev: Option<(usize, bool)> = None;
    for i in 0..p {
        let choice = [(0usize, true), (1usize, false)]
            .into_iter()
            .find(|&(di, inc)| {
                feasible[i][di]
                    && prev.map_or(true, |(pi, pinc)| {
                        (out_value(pi, pinc) - in_value(i, inc)).abs() <= 1e-9
                    })
            });
        let Some((_, inc)) = choice else {
            return Err(MapError::BadParams {
                reason: format!(
                    "no direction assignment makes the Markov map continuous at cut {i}"
                ),
            });
        };
        directions.push(inc);
        prev = Some((i, inc));
    }
    let mut branches = Vec::with_capacity(p);
    for i in 0..p {
        let (l, r) = image(i);
        let (v0, v1) = if directions[i] { (l, r) } else { (r, l) };
        branches.push(linear_branch(Domain::Interval, cuts[i], cuts[i + 1], v0, v1)?);
    }
    let map = PiecewiseMonotoneMap::new(Domain::Interval, branches)?;
    let pieces = (0..p)
        .map(|i| Segment::new(Domain::Interval, cuts[i], cuts[i + 1] - cuts[i]))
        .collect::<Result<Vec<_>, _>>()?;
    let partition = Partition::new(Domain::Interval, pieces)?;
    Ok((map, partition, a.clone()))
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn doubling() -> (PiecewiseMonotoneMap, Partition, TransitionMatrix) {
        make_builtin("doubling", &BuiltinParams::default()).unwrap()
    }

    fn tent() -> (PiecewiseMonotoneMap, Partition, TransitionMatrix) {
        make_builtin("tent", &BuiltinParams::default()).unwrap()
    }

    #[test]
    fn circle_metric_properties() {
        let d = Domain::Circle;
        assert!((d.metric(0.1, TAU - 0.1) - 0.2).abs() <= 1e-12);
        assert!((d.metric(0.0, PI) - PI).abs() <= 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0020);
        for _ in 0..500 {
            let x = rng.gen_range(0.0..TAU);
            let y = rng.gen_range(0.0..TAU);
            let z = rng.gen_range(0.0..TAU);
            assert!((d.metric(x, y) - d.metric(y, x)).abs() <= 1e-12, "symmetry");
            assert!(d.metric(x, y) <= PI + 1e-12, "diameter π");
            assert!(
                d.metric(x, z) <= d.metric(x, y) + d.metric(y, z) + 1e-12,
                "triangle inequality"
            );
            assert!(d.metric(x, x) <= 1e-12);
        }
    }

    #[test]
    fn wrap_around_segments_contain_and_intersect() {
        let d = Domain::Circle;
        // the arc [5π/3, 2π] ∪ [0, π/3]
        let arc = Segment::new(d, 5.0 * PI / 3.0, TAU / 3.0).unwrap();
        assert!(arc.contains(d, 0.0, 1e-12));
        assert!(arc.contains(d, PI / 3.0, 1e-12));
        assert!(arc.contains(d, 5.0 * PI / 3.0, 1e-12));
        assert!(!arc.contains(d, PI, 1e-12));

        // intersecting with [0, π] gives exactly [0, π/3]
        let right = Segment::new(d, 0.0, PI).unwrap();
        let pieces = arc.intersect(d, &right, false);
        assert_eq!(pieces.len(), 1);
        assert!((pieces[0].start - 0.0).abs() <= 1e-12);
        assert!((pieces[0].len - PI / 3.0).abs() <= 1e-12);

        // intersecting with [3π/2, 2π] gives the wrap part [5π/3, 2π]
        let left = Segment::new(d, 1.5 * PI, 0.5 * PI).unwrap();
        let pieces = arc.intersect(d, &left, false);
        assert_eq!(pieces.len(), 1);
        assert!((pieces[0].start - 5.0 * PI / 3.0).abs() <= 1e-12);
        assert!((pieces[0].len - PI / 3.0).abs() <= 1e-12);
    }

    #[test]
    fn segment_distance_measures_the_gap() {
        let d = Domain::Interval;
        let a = Segment::new(d, 0.0, 0.2).unwrap();
        let b = Segment::new(d, 0.8, 0.2).unwrap();
        assert!((a.set_distance(d, &b) - 0.6).abs() <= 1e-12);
        let touching = Segment::new(d, 0.2, 0.3).unwrap();
        assert_eq!(a.set_distance(d, &touching), 0.0);

        let c = Domain::Circle;
        // gap across zero is shorter than the inner gap
        let p = Segment::new(c, 0.2, 0.3).unwrap();
        let q = Segment::new(c, TAU - 0.4, 0.3).unwrap();
        assert!((p.set_distance(c, &q) - 0.3).abs() <= 1e-12);
    }

    #[test]
    fn cover_checks_respect_wrap_and_gaps() {
        let d = Domain::Circle;
        let whole = Segment::new(d, 0.0, TAU).unwrap();
        let halves = [
            Segment::new(d, 0.0, PI).unwrap(),
            Segment::new(d, PI, PI).unwrap(),
        ];
        assert!(segments_cover(d, &whole, &halves, 1e-9));
        assert!(!segments_cover(d, &whole, &halves[..1], 1e-9));

        // a target crossing zero covered by two non-crossing pieces
        let target = Segment::new(d, 5.0 * PI / 3.0, TAU / 3.0).unwrap();
        let pieces = [
            Segment::new(d, 5.0 * PI / 3.0, PI / 3.0).unwrap(),
            Segment::new(d, 0.0, PI / 3.0).unwrap(),
        ];
        assert!(segments_cover(d, &target, &pieces, 1e-9));
        assert!(!segments_cover(d, &target, &pieces[..1], 1e-9));
    }

    #[test]
    fn doubling_evaluates_and_differentiates() {
        let (map, _, _) = doubling();
        assert!((map.evaluate(FRAC_PI_2).unwrap() - PI).abs() <= 1e-12);
        assert!(map.evaluate(PI).unwrap().abs() <= 1e-12); // 2π reduces to 0
        assert!((map.derivative(1.0).unwrap() - 2.0).abs() <= 1e-12);
        // junction: both one-sided derivatives are 2, so the value passes through
        assert!((map.derivative(PI).unwrap() - 2.0).abs() <= 1e-12);
        assert!(matches!(
            map.evaluate(f64::NAN),
            Err(MapError::OutOfDomain { .. })
        ));
    }

    #[test]
    fn tent_evaluates_and_reports_breakpoint() {
        let (map, _, _) = tent();
        assert!((map.evaluate(0.75).unwrap() - 0.5).abs() <= 1e-12);
        assert!((map.evaluate(0.5).unwrap() - 1.0).abs() <= 1e-12);
        assert!((map.derivative(0.25).unwrap() - 2.0).abs() <= 1e-12);
        match map.derivative(0.5) {
            Err(MapError::AtBreakpoint { left, right, .. }) => {
                let mut sides = [left, right];
                sides.sort_by(|a, b| a.partial_cmp(b).unwrap());
                assert_eq!(sides, [-2.0, 2.0]);
            }
            other => panic!("expected AtBreakpoint, got {other:?}"),
        }
        assert!(matches!(map.evaluate(1.5), Err(MapError::OutOfDomain { .. })));
    }

    #[test]
    fn branch_images_follow_endpoints() {
        let (map, _, _) = doubling();
        let full = map.branch(0).support().clone();
        let img = map.branch_image(0, &full).unwrap();
        assert!((img.len() - TAU).abs() <= 1e-12, "half circle doubles onto the whole");

        let (tent_map, _, _) = tent();
        let j = Segment::new(Domain::Interval, 0.0, 0.25).unwrap();
        let img = tent_map.branch_image(0, &j).unwrap();
        assert!((img.start() - 0.0).abs() <= 1e-12);
        assert!((img.len() - 0.5).abs() <= 1e-12);
        // decreasing branch: [0.5, 0.75] maps onto [0.5, 1.0]
        let j = Segment::new(Domain::Interval, 0.5, 0.25).unwrap();
        let img = tent_map.branch_image(1, &j).unwrap();
        assert!((img.start() - 0.5).abs() <= 1e-12);
        assert!((img.len() - 0.5).abs() <= 1e-12);

        assert!(matches!(
            tent_map.branch_image(0, &Segment::new(Domain::Interval, 0.4, 0.2).unwrap()),
            Err(MapError::NotInSupport { .. })
        ));
    }

    #[test]
    fn branch_inverse_examples() {
        let (map, _, _) = doubling();
        assert!((map.branch_inverse(0, PI, 1e-12).unwrap() - FRAC_PI_2).abs() <= 1e-12);
        let (tent_map, _, _) = tent();
        assert!((tent_map.branch_inverse(0, 0.5, 1e-12).unwrap() - 0.25).abs() <= 1e-12);
        assert!((tent_map.branch_inverse(1, 0.5, 1e-12).unwrap() - 0.75).abs() <= 1e-12);
        assert!(matches!(
            tent_map.branch_inverse(0, 1.5, 1e-9),
            Err(MapError::NotInImage { .. })
        ));
    }

    #[test]
    fn branch_inverse_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0021);
        let fib = TransitionMatrix::new(&[vec![1, 1], vec![1, 0]]).unwrap();
        let triples = vec![
            doubling(),
            tent(),
            make_builtin("linear_markov", &BuiltinParams { matrix: Some(fib) }).unwrap(),
        ];
        for (map, _, _) in &triples {
            for _ in 0..100 {
                let b = rng.gen_range(0..map.branch_count());
                let branch = map.branch(b);
                let (lo, hi) = branch.image_lift();
                let y_lift = rng.gen_range(lo..hi);
                let y = map.domain().reduce(y_lift);
                let x = map.branch_inverse(b, y, 1e-10).unwrap();
                let fx = map.evaluate(x).unwrap();
                let err = map.domain().metric(fx, y);
                assert!(err <= 2e-10 * branch.deriv_bounds().1, "err = {err}");
                assert!(branch.support().contains(map.domain(), x, 1e-9));
            }
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let triples = vec![doubling(), tent()];
        for (map, _, _) in &triples {
            let h = 1e-4;
            let len = map.domain().length();
            for i in 1..1000 {
                let x = len * i as f64 / 1000.0;
                let Ok(d) = map.derivative(x) else { continue };
                // skip stencils that straddle a breakpoint
                if map.branch_containing(x - h) != map.branch_containing(x + h) {
                    continue;
                }
                let fd = match map.domain() {
                    Domain::Interval => {
                        (map.evaluate(x + h).unwrap() - map.evaluate(x - h).unwrap()) / (2.0 * h)
                    }
                    Domain::Circle => {
                        // difference via lifts to dodge the mod-2π jump
                        let b = map.branch_containing(x).unwrap();
                        let br = map.branch(b);
                        let l = |z: f64| br.lift_at(br.support().local(Domain::Circle, z, 1e-9).unwrap());
                        (l(x + h) - l(x - h)) / (2.0 * h)
                    }
                };
                assert!((d - fd).abs() <= 1e-6, "x = {x}: {d} vs {fd}");
            }
        }
    }

    #[test]
    fn branch_image_is_monotone_in_the_argument() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0022);
        let (map, _, _) = doubling();
        for _ in 0..200 {
            let b = rng.gen_range(0..map.branch_count());
            let sup = map.branch(b).support();
            let a0 = rng.gen_range(0.0..sup.len());
            let a1 = rng.gen_range(0.0..sup.len());
            let (lo, hi) = (a0.min(a1), a0.max(a1) + 1e-6);
            let inner_start = sup.start() + lo + (hi - lo) * 0.25;
            let inner_len = (hi - lo) * 0.5;
            let outer = Segment::new(Domain::Circle, sup.start() + lo, (hi - lo).min(sup.len() - lo)).unwrap();
            let inner_len = inner_len.min(outer.len() * 0.5);
            let inner = Segment::new(Domain::Circle, inner_start, inner_len.max(1e-9)).unwrap();
            let img_outer = map.branch_image(b, &outer).unwrap();
            let Ok(img_inner) = map.branch_image(b, &inner) else { continue };
            assert!(
                segments_cover(Domain::Circle, &img_inner, &[img_outer.clone()], 1e-9),
                "inner {img_inner:?} escapes outer {img_outer:?}"
            );
        }
    }

    #[test]
    fn partition_construction_rejects_defects() {
        let d = Domain::Interval;
        let a = Segment::new(d, 0.0, 0.6).unwrap();
        let b = Segment::new(d, 0.5, 0.5).unwrap();
        assert!(matches!(
            Partition::new(d, vec![a.clone(), b]),
            Err(MapError::BadPartition { .. })
        ));
        // shared endpoints are fine
        let c = Segment::new(d, 0.6, 0.4).unwrap();
        let part = Partition::new(d, vec![a, c]).unwrap();
        assert_eq!(part.piece_count(), 2);
        assert_eq!(part.symbols_at(0.6, 1e-12), vec![1, 2]);
        assert_eq!(part.symbols_at(0.3, 1e-12), vec![1]);
        assert!(Segment::new(d, 0.0, 0.0).is_err());
    }

    #[test]
    fn map_construction_rejects_discontinuity_and_gaps() {
        let d = Domain::Interval;
        // gap between supports
        let r = PiecewiseMonotoneMap::new(
            d,
            vec![
                linear_branch(d, 0.0, 0.4, 0.0, 1.0).unwrap(),
                linear_branch(d, 0.5, 1.0, 1.0, 0.0).unwrap(),
            ],
        );
        assert!(matches!(r, Err(MapError::InvalidMap { .. })));
        // jump at the junction
        let r = PiecewiseMonotoneMap::new(
            d,
            vec![
                linear_branch(d, 0.0, 0.5, 0.0, 1.0).unwrap(),
                linear_branch(d, 0.5, 1.0, 0.5, 0.0).unwrap(),
            ],
        );
        assert!(matches!(r, Err(MapError::InvalidMap { .. })));
    }

    #[test]
    fn builtin_dispatch_errors() {
        assert!(matches!(
            make_builtin("squaring", &BuiltinParams::default()),
            Err(MapError::UnknownBuiltin { .. })
        ));
        assert!(matches!(
            make_builtin("linear_markov", &BuiltinParams::default()),
            Err(MapError::BadParams { .. })
        ));
        let id = TransitionMatrix::new(&[vec![1, 0], vec![0, 1]]).unwrap();
        assert!(matches!(
            make_builtin("linear_markov", &BuiltinParams { matrix: Some(id) }),
            Err(MapError::BadParams { .. })
        ));
    }

    #[test]
    fn golden_markov_map_has_expected_shape() {
        let fib = TransitionMatrix::new(&[vec![1, 1], vec![1, 0]]).unwrap();
        let (map, part, back) = make_builtin("linear_markov", &BuiltinParams { matrix: Some(fib.clone()) }).unwrap();
        assert_eq!(back.dim(), 2);
        let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
        // widths 1/φ and 1/φ²
        assert!((part.piece(1).len() - 1.0 / phi).abs() <= 1e-8);
        assert!((part.piece(2).len() - 1.0 / phi.powi(2)).abs() <= 1e-8);
        // uniform expansion at rate φ, first piece decreasing
        assert!((map.derivative(0.3).unwrap() + phi).abs() <= 1e-8);
        assert!((map.derivative(0.8).unwrap() - phi).abs() <= 1e-8);
        // piece 1 maps onto the whole interval, piece 2 onto piece 1
        let img1 = map.branch_image(0, part.piece(1)).unwrap();
        assert!(img1.start().abs() <= 1e-9 && (img1.len() - 1.0).abs() <= 1e-9);
        let img2 = map.branch_image(1, part.piece(2)).unwrap();
        assert!(img2.start().abs() <= 1e-9 && (img2.len() - 1.0 / phi).abs() <= 1e-8);
    }

    #[test]
    fn markov_construction_realizes_random_irreducible_contiguous_matrices() {
        // sample irreducible matrices with contiguous rows: each row's run
        // is forced to contain the next vertex of a full cycle, so the
        // graph is strongly connected by construction; full matrices are
        // mixed in because they are always direction-assignable
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0023);
        let mut built = 0;
        for trial in 0..300 {
            let p = rng.gen_range(2..=6);
            let mut rows = vec![vec![0u8; p]; p];
            if trial % 4 == 0 {
                rows = vec![vec![1u8; p]; p];
            } else {
                for i in 0..p {
                    let t = (i + 1) % p;
                    let lo = rng.gen_range(0..=t);
                    let hi = rng.gen_range(t..p);
                    for j in lo..=hi {
                        rows[i][j] = 1;
                    }
                }
            }
            let a = TransitionMatrix::new(&rows).expect("runs hit every column via the cycle");
            assert!(crate::matrix::is_irreducible(&a));
            let result = make_builtin("linear_markov", &BuiltinParams { matrix: Some(a.clone()) });
            let (map, part, _) = match result {
                Ok(triple) => triple,
                Err(e) => {
                    // a continuous direction assignment need not exist for
                    // every contiguous-run matrix; those must fail loudly
                    assert!(matches!(e, MapError::BadParams { .. }), "unexpected error {e}");
                    continue;
                }
            };
            built += 1;
            // every piece must map exactly onto the union of its allowed pieces
            for i in 1..=p {
                let img = map.branch_image(i - 1, part.piece(i)).unwrap();
                let allowed: Vec<Segment> = (1..=p)
                    .filter(|&j| a.entry(i, j) == 1)
                    .map(|j| part.piece(j).clone())
                    .collect();
                assert!(
                    segments_cover(Domain::Interval, &img, &allowed, 1e-8),
                    "image not within allowed pieces"
                );
                for piece in &allowed {
                    assert!(
                        segments_cover(Domain::Interval, piece, &[img.clone()], 1e-8),
                        "allowed piece not covered by the image"
                    );
                }
            }
        }
        // the full matrices alone guarantee 75 feasible constructions
        assert!(built >= 60, "only {built} random Markov maps were constructible");
    }
}
