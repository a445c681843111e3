//! The Kasner circle map: closed-form evaluation on the fundamental sector,
//! extension to the whole circle by its symmetries, the independent
//! chord-projection oracle, the derivative law, and chaos witnesses.
//!
//! The map is built from six decreasing branches on the sectors
//! `[kπ/3, (k+1)π/3]`. All branch and partition endpoints are stored as
//! exact multiples of `π/3`, so endpoint images and piece intersections
//! that are single points come out exactly degenerate instead of
//! float-noise intervals, and the three fixed points are fixed bitwise.

use std::f64::consts::{FRAC_PI_3, PI};
use std::fmt;

use crate::map1d::{Branch, Domain, MapError, Partition, PiecewiseMonotoneMap, Segment};
use crate::matrix::TransitionMatrix;

/// The three special (fixed) points of the map.
pub const T1: f64 = FRAC_PI_3;
pub const T2: f64 = 5.0 * FRAC_PI_3;
pub const T3: f64 = PI;

#[derive(Debug, Clone, PartialEq)]
pub enum KasnerError {
    /// The chord construction degenerates at the three special points.
    AtSpecialPoint { theta: f64 },
}

impl fmt::Display for KasnerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KasnerError::AtSpecialPoint { theta } => {
                write!(f, "chord projection degenerates at special point {theta}")
            }
        }
    }
}

impl std::error::Error for KasnerError {}

// ---------------------------------------------------------------------------
// closed form
// ---------------------------------------------------------------------------

/// The map on the fundamental sector `[0, π/3]`:
/// `F(t) = π − t − 2·arctan(sin t / (2 − cos t))`.
fn fundamental(t: f64) -> f64 {
    PI - t - 2.0 * (t.sin() / (2.0 - t.cos())).atan()
}

/// Derivative of the fundamental branch, `F′(t) = −3 / (5 − 4 cos t)`,
/// obtained by differentiating the closed form and validated against
/// central finite differences in the test suite.
fn fundamental_deriv(t: f64) -> f64 {
    -3.0 / (5.0 - 4.0 * t.cos())
}

/// Exact branch endpoint values in units of π/3: branch `b` covers
/// `[bπ/3, (b+1)π/3]` and maps its endpoints to these multiples of π/3.
const BRANCH_VALUES: [(f64, f64); 6] =
    [(3.0, 1.0), (1.0, -1.0), (5.0, 3.0), (3.0, 1.0), (7.0, 5.0), (5.0, 3.0)];

/// Sector index (0..6) of a reduced angle.
fn sector(r: f64) -> usize {
    (((r / FRAC_PI_3) as usize).min(5)).max(0)
}

/// Lift value of the map at reduced angle `r` inside sector `b`: even
/// sectors translate the fundamental branch, odd sectors reflect it.
fn sector_lift(b: usize, r: f64) -> f64 {
    let x0 = b as f64 * FRAC_PI_3;
    let x1 = (b + 1) as f64 * FRAC_PI_3;
    if r == x0 {
        return BRANCH_VALUES[b].0 * FRAC_PI_3;
    }
    if r == x1 {
        return BRANCH_VALUES[b].1 * FRAC_PI_3;
    }
    if b % 2 == 0 {
        x0 + fundamental(r - x0)
    } else {
        x1 - fundamental(x1 - r)
    }
}

/// The Kasner angle map `Φ` on `[0, 2π)`: the closed form on the
/// fundamental sector, extended to the whole circle by the equivariances
/// `Φ(θ + 2π/3) ≡ Φ(θ) + 2π/3` and `Φ(−θ) ≡ −Φ(θ)` (mod 2π). The three
/// special points are fixed exactly.
pub fn kasner_angle(theta: f64) -> f64 {
    let r = Domain::Circle.reduce(theta);
    if r == T1 || r == T2 || r == T3 || r == 3.0 * FRAC_PI_3 {
        return r;
    }
    Domain::Circle.reduce(sector_lift(sector(r), r))
}

/// Signed derivative `Φ′(θ)`: `−3/(5 − 4 cos t)` in the local fundamental
/// coordinate `t` of the sector containing `θ`. Always in `[−3, −1]`.
pub fn kasner_derivative(theta: f64) -> f64 {
    let r = Domain::Circle.reduce(theta);
    let b = sector(r);
    let t = if b % 2 == 0 {
        r - b as f64 * FRAC_PI_3
    } else {
        (b + 1) as f64 * FRAC_PI_3 - r
    };
    fundamental_deriv(t.clamp(0.0, FRAC_PI_3))
}

// ---------------------------------------------------------------------------
// geometric oracle
// ---------------------------------------------------------------------------

/// Chord-projection oracle for the same map, computed by entirely different
/// means: project the circle point through the projection point attached to
/// the arc containing it — `(2, 0)` for Λ1, `(−1, −√3)` for Λ2,
/// `(−1, √3)` for Λ3 — and return the second intersection of that line with
/// the unit circle.
pub fn kasner_geometric(theta: f64) -> Result<f64, KasnerError> {
    let r = Domain::Circle.reduce(theta);
    if r == T1 || r == T2 || r == T3 || r == 3.0 * FRAC_PI_3 {
        return Err(KasnerError::AtSpecialPoint { theta: r });
    }
    let s3 = 3.0f64.sqrt();
    // arc membership: Λ1 = [5π/3, 2π) ∪ [0, π/3), Λ3 = (π/3, π), Λ2 = (π, 5π/3)
    let (px, py) = if r < T1 || r > T2 {
        (2.0, 0.0)
    } else if r < T3 {
        (-1.0, s3)
    } else {
        (-1.0, -s3)
    };
    let (x, y) = (r.cos(), r.sin());
    let (dx, dy) = (px - x, py - y);
    // |X + s·D| = 1 has roots s = 0 and s* = −2·X·D/|D|²
    let s = -2.0 * (x * dx + y * dy) / (dx * dx + dy * dy);
    let (ix, iy) = (x + s * dx, y + s * dy);
    Ok(Domain::Circle.reduce(iy.atan2(ix)))
}

// ---------------------------------------------------------------------------
// built-in construction
// ---------------------------------------------------------------------------

/// The transition matrix `[[0,1,1],[1,0,1],[1,1,0]]` realized by the Kasner
/// map over its three arcs.
pub fn kasner_matrix() -> TransitionMatrix {
    TransitionMatrix::new(&[vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]])
        .expect("the 3x3 hollow matrix is a valid transition matrix")
}

/// The Kasner map as a `PiecewiseMonotoneMap` over six sector branches,
/// with its canonical three-arc partition
/// `Λ1 = [5π/3, 2π] ∪ [0, π/3]`, `Λ2 = [π, 5π/3]`, `Λ3 = [π/3, π]`
/// and the matrix those arcs realize.
pub fn build_kasner() -> Result<(PiecewiseMonotoneMap, Partition, TransitionMatrix), MapError> {
    let d = Domain::Circle;
    let mut branches = Vec::with_capacity(6);
    for b in 0..6usize {
        let x0 = b as f64 * FRAC_PI_3;
        let x1 = (b + 1) as f64 * FRAC_PI_3;
        let (v0, v1) = BRANCH_VALUES[b];
        let eval: Box<dyn Fn(f64) -> f64 + Send + Sync> = if b % 2 == 0 {
            Box::new(move |x| x0 + fundamental(x - x0))
        } else {
            Box::new(move |x| x1 - fundamental(x1 - x))
        };
        let deriv: Box<dyn Fn(f64) -> f64 + Send + Sync> = if b % 2 == 0 {
            Box::new(move |x| fundamental_deriv((x - x0).clamp(0.0, FRAC_PI_3)))
        } else {
            Box::new(move |x| fundamental_deriv((x1 - x).clamp(0.0, FRAC_PI_3)))
        };
        branches.push(Branch::new(
            Segment::new(d, x0, FRAC_PI_3)?,
            eval,
            deriv,
            (1.0, 3.0),
            v0 * FRAC_PI_3,
            v1 * FRAC_PI_3,
        )?);
    }
    let map = PiecewiseMonotoneMap::new(d, branches)?;
    let partition = Partition::new(
        d,
        vec![
            Segment::new(d, 5.0 * FRAC_PI_3, 2.0 * FRAC_PI_3)?,
            Segment::new(d, 3.0 * FRAC_PI_3, 2.0 * FRAC_PI_3)?,
            Segment::new(d, FRAC_PI_3, 2.0 * FRAC_PI_3)?,
        ],
    )?;
    Ok((map, partition, kasner_matrix()))
}

// ---------------------------------------------------------------------------
// scrambled pair witness
// ---------------------------------------------------------------------------

/// A pair of admissible sequences whose factor points come arbitrarily
/// close along the orbit yet stay far apart infinitely often within the
/// inspected horizon, together with the measured orbit distances.
///
/// Eventually periodic sequences cannot fail to be asymptotic forever, so
/// a pair of them can only *witness* scrambling over a finite horizon: the
/// evidence certifies the two inequalities up to `horizon` shifts and
/// nothing beyond it.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ScrambledWitness {
    pub alpha: crate::subshift::SymbolSequence,
    pub beta: crate::subshift::SymbolSequence,
    /// Number of shifts inspected.
    pub horizon: usize,
    pub min_distance: f64,
    /// Shift index attaining the minimum.
    pub min_at: usize,
    pub max_distance: f64,
    /// Shift index attaining the maximum.
    pub max_at: usize,
}

/// Interleaves a two-symbol marker block with geometrically growing runs
/// of the mixing cycle `(3,1,2)`.
fn witness_preperiod(marker: [usize; 2]) -> Vec<usize> {
    let mut out = Vec::new();
    for k in 1..=5u32 {
        out.extend_from_slice(&marker);
        for _ in 0..(1usize << k) {
            out.extend_from_slice(&[3, 1, 2]);
        }
    }
    out
}

/// Builds the witness pair for the Kasner map and measures the orbit
/// distances of their factor points over `horizon` shifts.
///
/// Both sequences share the tail `(3,1,2)^∞` but differ in five marker
/// blocks — `(1,2)` against `(3,1)` — spaced by doubling runs of the
/// cycle. Whenever a shift lands on a marker the two points sit in arcs
/// separated by a third of a sector, so the distance exceeds `π/3` minus
/// the cylinder widths; once the shifts pass the last marker the
/// sequences coincide and the distance is exactly zero. All positions are
/// evaluated through cylinder enclosures of the shifted sequences, never
/// by forward float iteration.
pub fn scrambled_pair_witness(
    horizon: usize,
    tol: f64,
) -> Result<ScrambledWitness, crate::cylinder::CylinderError> {
    use crate::cylinder::factor_point;
    use crate::subshift::{SymbolSequence, SymbolWord};

    assert!(horizon >= 1, "the witness needs at least one shift");
    assert!(tol > 0.0, "tolerance must be positive");
    let (map, partition, _) = build_kasner().expect("the built-in map constructs");
    let d = map.domain();

    let period = SymbolWord::new(vec![3, 1, 2]).expect("symbols are valid");
    let alpha = SymbolSequence::new(
        SymbolWord::new(witness_preperiod([1, 2])).expect("symbols are valid"),
        period.clone(),
    )
    .expect("period is nonempty");
    let beta = SymbolSequence::new(
        SymbolWord::new(witness_preperiod([3, 1])).expect("symbols are valid"),
        period,
    )
    .expect("period is nonempty");

    let mut a = alpha.clone();
    let mut b = beta.clone();
    let (mut min_distance, mut min_at) = (f64::INFINITY, 0);
    let (mut max_distance, mut max_at) = (f64::NEG_INFINITY, 0);
    for n in 0..horizon {
        let distance = if a == b {
            // identical tails project to the same point exactly
            0.0
        } else {
            let (x, _) = factor_point(&map, &partition, &a, tol)?;
            let (y, _) = factor_point(&map, &partition, &b, tol)?;
            d.metric(x, y)
        };
        if distance < min_distance {
            min_distance = distance;
            min_at = n;
        }
        if distance > max_distance {
            max_distance = distance;
            max_at = n;
        }
        a = a.shift();
        b = b.shift();
    }
    Ok(ScrambledWitness {
        alpha,
        beta,
        horizon,
        min_distance,
        min_at,
        max_distance,
        max_at,
    })
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------
