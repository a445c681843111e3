//! Cylinder intervals and the induced semi-conjugacy machinery: the factor
//! map from symbol sequences to points, singleton evidence, itineraries,
//! preimage multiplicity, and entropy estimation by cylinder counting.
//!
//! A cylinder `Λ_{a_0 ⋯ a_n} = Λ_{a_0} ∩ T^{-1}Λ_{a_1} ∩ ⋯ ∩ T^{-n}Λ_{a_n}`
//! is computed by backward induction: starting from the last piece, each
//! step pulls the current interval back through every branch that meets the
//! next piece out. Pieces are closed; pullbacks whose overlap with the
//! target degenerates to a point are discarded, which realizes the
//! closure-of-interior reading of cylinders for partitions whose pieces
//! share endpoints.
//!
//! Orbit positions for chaos evidence are always produced by projecting
//! shifted symbol sequences through the factor map, never by forward float
//! iteration, which loses all digits within a few dozen steps on an
//! expanding map.

use std::fmt;

use serde::Serialize;

use crate::map1d::{Domain, MapError, Partition, PiecewiseMonotoneMap, Segment};
use crate::matrix::TransitionMatrix;
use crate::subshift::{SubshiftError, SymbolSequence, SymbolWord};

/// Overlaps no longer than this count as empty (single shared endpoints of
/// closed pieces, not genuine intervals).
const DEGENERACY_EPS: f64 = 1e-12;

/// Geometric deepening schedule cap for the factor map.
const FACTOR_DEPTH_CAP: u32 = 4096;

/// Tolerance for deciding which pieces an orbit point lies in.
const BOUNDARY_EPS: f64 = 1e-9;

/// Most itineraries a single query returns.
const ITINERARY_CAP: usize = 8;

/// Default ceiling on enumerated cylinders.
pub const DEFAULT_ENUMERATION_CAP: usize = 1_000_000;

// ---------------------------------------------------------------------------
// errors
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub enum CylinderError {
    /// The nested intersection vanished: the covering condition fails for
    /// this word (or the word is inadmissible for the realized matrix).
    Empty { word: SymbolWord },
    /// The depth-wise enumeration outgrew the configured cap.
    EnumerationCapExceeded { cap: usize },
    /// The deepening loop hit its depth cap before reaching the requested
    /// tolerance; the best (non-certified) enclosure is reported.
    SlowConvergence { point: f64, radius: f64, depth: u32 },
    Map(MapError),
    Symbols(SubshiftError),
}

impl fmt::Display for CylinderError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CylinderError::Empty { word } => {
                write!(f, "cylinder of {:?} is empty", word.symbols())
            }
            CylinderError::EnumerationCapExceeded { cap } => {
                write!(f, "cylinder enumeration exceeded the cap of {cap}")
            }
            CylinderError::SlowConvergence { point, radius, depth } => write!(
                f,
                "factor map not certified at depth {depth}: best enclosure {point} ± {radius}"
            ),
            CylinderError::Map(e) => write!(f, "map evaluation failed: {e}"),
            CylinderError::Symbols(e) => write!(f, "bad symbols: {e}"),
        }
    }
}

impl std::error::Error for CylinderError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            CylinderError::Map(e) => Some(e),
            CylinderError::Symbols(e) => Some(e),
            _ => None,
        }
    }
}

impl From<MapError> for CylinderError {
    fn from(e: MapError) -> Self {
        CylinderError::Map(e)
    }
}

impl From<SubshiftError> for CylinderError {
    fn from(e: SubshiftError) -> Self {
        CylinderError::Symbols(e)
    }
}

// ---------------------------------------------------------------------------
// core pullback step
// ---------------------------------------------------------------------------

/// Positive-length intersections of `seg` with each branch support, as
/// `(branch index, sub-segment)` pairs.
fn branch_pieces(map: &PiecewiseMonotoneMap, seg: &Segment) -> Vec<(usize, Segment)> {
    let d = map.domain();
    let mut out = Vec::new();
    for b in 0..map.branch_count() {
        for sub in map.branch(b).support().intersect(d, seg, false) {
            if sub.len() > DEGENERACY_EPS {
                out.push((b, sub));
            }
        }
    }
    out
}

/// The forward image `T(seg)` as a list of segments (one per branch piece;
/// contiguous by continuity).
fn forward_image(map: &PiecewiseMonotoneMap, seg: &Segment) -> Result<Vec<Segment>, MapError> {
    branch_pieces(map, seg)
        .into_iter()
        .map(|(b, sub)| map.branch_image(b, &sub))
        .collect()
}

/// One backward-induction step: the part of `piece` that `T` carries into
/// `target`, i.e. `piece ∩ T^{-1}(target)`, expressed as a hull in the
/// piece's own frame. A `true` second component flags that more than one
/// branch contributed a positive preimage (the hull may then overestimate).
fn pull_back_into(
    map: &PiecewiseMonotoneMap,
    piece: &Segment,
    target: &Segment,
    tol: f64,
) -> Result<Option<(Segment, bool)>, MapError> {
    let d = map.domain();
    let mut offsets: Vec<(f64, f64)> = Vec::new(); // intervals in piece frame
    for (b, sub) in branch_pieces(map, piece) {
        let branch = map.branch(b);
        let x_lo = branch
            .support()
            .local(d, sub.start(), 1e-9)
            .expect("sub-segment start lies in the branch support");
        let x_hi = x_lo + sub.len();
        let (va, vb) = (branch.lift_at(x_lo), branch.lift_at(x_hi));
        let (ilo, ihi) = if va <= vb { (va, vb) } else { (vb, va) };
        // translate copies of the target into the image lift window
        let shifts: &[f64] = match d {
            Domain::Interval => &[0.0],
            Domain::Circle => &[
                -2.0 * std::f64::consts::TAU,
                -std::f64::consts::TAU,
                0.0,
                std::f64::consts::TAU,
                2.0 * std::f64::consts::TAU,
            ],
        };
        for &shift in shifts {
            let t0 = target.start() + shift;
            let t1 = t0 + target.len();
            let lo = ilo.max(t0);
            let hi = ihi.min(t1);
            if hi - lo <= DEGENERACY_EPS {
                continue;
            }
            let xa = branch.inverse_lift(lo, tol);
            let xb = branch.inverse_lift(hi, tol);
            let (plo, phi) = if xa <= xb { (xa, xb) } else { (xb, xa) };
            let (plo, phi) = (plo.max(x_lo), phi.min(x_hi));
            if phi - plo <= DEGENERACY_EPS {
                continue;
            }
            // express in the piece frame
            let off = piece
                .local(d, d.reduce(plo), 1e-9)
                .map(|l| l - piece.start());
            if let Some(off) = off {
                offsets.push((off, off + (phi - plo)));
            }
        }
    }
    if offsets.is_empty() {
        return Ok(None);
    }
    offsets.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    // merge touching pieces (branch junction seams); anything still distinct
    // afterwards is a genuine multi-interval preimage
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (a, b) in offsets {
        match merged.last_mut() {
            Some(last) if a <= last.1 + 1e-9 => last.1 = last.1.max(b),
            _ => merged.push((a, b)),
        }
    }
    let ambiguous = merged.len() > 1;
    let lo = merged.first().unwrap().0;
    let hi = merged.last().unwrap().1;
    let seg = Segment::new(d, piece.start() + lo, (hi - lo).min(piece.len()))?;
    Ok(Some((seg, ambiguous)))
}

// ---------------------------------------------------------------------------
// cylinders
// ---------------------------------------------------------------------------

/// A finite-depth cylinder interval.
#[derive(Debug, Clone)]
pub struct CylinderInterval {
    pub word: SymbolWord,
    pub interval: Segment,
    /// Length of the interval (arc length on the circle).
    pub diameter: f64,
    /// True when some pullback step saw more than one branch preimage, in
    /// which case `interval` is the enclosing hull of a union.
    pub ambiguous: bool,
}

/// Computes `Λ_{a_0} ∩ T^{-1}(Λ_{a_1}) ∩ ⋯ ∩ T^{-(k-1)}(Λ_{a_{k-1}})` for the
/// word `a_0 ⋯ a_{k-1}` by backward induction.
pub fn cylinder(
    map: &PiecewiseMonotoneMap,
    partition: &Partition,
    word: &SymbolWord,
    tol: f64,
) -> Result<CylinderInterval, CylinderError> {
    let symbols = word.symbols();
    if symbols.is_empty() {
        return Err(CylinderError::Symbols(SubshiftError::EmptyPeriod));
    }
    let p = partition.piece_count();
    for (position, &s) in symbols.iter().enumerate() {
        if s == 0 || s > p {
            return Err(CylinderError::Symbols(SubshiftError::SymbolOutOfRange {
                position,
                symbol: s,
                p,
            }));
        }
    }
    // Endpoint errors from the inverse bisection accumulate along the
    // induction without contracting near neutral fixed points, so the
    // root-finding tolerance must sit well below the requested interval
    // tolerance or diameters saturate around 20·tol instead of shrinking.
    let bisect_tol = (tol * 1e-3).clamp(1e-13, 1e-7);
    let mut current = partition.piece(symbols[symbols.len() - 1]).clone();
    let mut ambiguous = false;
    for &s in symbols[..symbols.len() - 1].iter().rev() {
        match pull_back_into(map, partition.piece(s), &current, bisect_tol)? {
            Some((seg, amb)) => {
                current = seg;
                ambiguous |= amb;
            }
            None => return Err(CylinderError::Empty { word: word.clone() }),
        }
    }
    Ok(CylinderInterval {
        word: word.clone(),
        diameter: current.len(),
        interval: current,
        ambiguous,
    })
}

// ---------------------------------------------------------------------------
// cylinder enumeration (forward states)
// ---------------------------------------------------------------------------

/// Per-depth counts of nonempty cylinders, up to `n_max`, by breadth-first
/// extension of forward states (`T^{n-1}` images of depth-`n` cylinders).
pub fn cylinder_counts(
    map: &PiecewiseMonotoneMap,
    partition: &Partition,
    n_max: u32,
    cap: usize,
) -> Result<Vec<(u32, u64)>, CylinderError> {
    assert!(n_max >= 1, "depth must be at least 1");
    let p = partition.piece_count();
    // state: the final interval T^{n-1}(cylinder) inside the last piece
    let mut states: Vec<Segment> = (1..=p).map(|i| partition.piece(i).clone()).collect();
    let mut out = vec![(1u32, states.len() as u64)];
    for n in 2..=n_max {
        let mut next = Vec::new();
        for state in &states {
            let images = forward_image(map, state)?;
            for s in 1..=p {
                let piece = partition.piece(s);
                // hull of the overlap of T(state) with the next piece
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for img in &images {
                    for ov in piece.intersect(map.domain(), img, false) {
                        if ov.len() <= DEGENERACY_EPS {
                            continue;
                        }
                        if let Some(local) = piece.local(map.domain(), ov.start(), 1e-9) {
                            let a = local - piece.start();
                            lo = lo.min(a);
                            hi = hi.max(a + ov.len());
                        }
                    }
                }
                if hi - lo > DEGENERACY_EPS {
                    next.push(Segment::new(
                        map.domain(),
                        piece.start() + lo,
                        (hi - lo).min(piece.len()),
                    )?);
                }
            }
            if next.len() > cap {
                return Err(CylinderError::EnumerationCapExceeded { cap });
            }
        }
        out.push((n, next.len() as u64));
        states = next;
    }
    Ok(out)
}

/// Entropy estimates `(n, (1/n)·ln N_n)` from nonempty-cylinder counts
/// `N_n`, for `n = 1..=n_max`.
pub fn entropy_by_cylinders(
    map: &PiecewiseMonotoneMap,
    partition: &Partition,
    n_max: u32,
    cap: usize,
) -> Result<Vec<(u32, f64)>, CylinderError> {
    assert!(n_max >= 2, "estimates need depth at least 2");
    Ok(cylinder_counts(map, partition, n_max, cap)?
        .into_iter()
        .map(|(n, count)| (n, (count as f64).ln() / n as f64))
        .collect())
}

// ---------------------------------------------------------------------------
// singleton evidence
// ---------------------------------------------------------------------------

/// Finite-depth evidence that all infinite cylinders are single points: the
/// maximal cylinder diameter per depth, and whether it strictly decreases.
#[derive(Debug, Clone, Serialize)]
pub struct SingletonEvidence {
    pub depth: u32,
    pub max_diameter: f64,
    /// `(n, max over admissible words of length n of the cylinder diameter)`
    pub diameter_table: Vec<(u32, f64)>,
    pub decreasing: bool,
}

/// Enumerates all words admissible under `a` up to `depth` (breadth-first
/// over the transition graph) and tabulates the worst cylinder diameter at
/// each depth.
pub fn singleton_check(
    map: &PiecewiseMonotoneMap,
    partition: &Partition,
    a: &TransitionMatrix,
    depth: u32,
    tol: f64,
    cap: usize,
) -> Result<SingletonEvidence, CylinderError> {
    assert!(depth >= 2, "singleton evidence needs depth at least 2");
    let p = partition.piece_count();
    assert_eq!(p, a.dim(), "partition and matrix disagree on the symbol count");
    let mut words: Vec<Vec<usize>> = (1..=p).map(|i| vec![i]).collect();
    let mut table = Vec::with_capacity(depth as usize);
    let mut record = |n: u32, words: &[Vec<usize>]| -> Result<f64, CylinderError> {
        let mut worst = 0.0f64;
        for w in words {
            let word = SymbolWord::new(w.clone())?;
            match cylinder(map, partition, &word, tol) {
                Ok(c) => worst = worst.max(c.diameter),
                Err(CylinderError::Empty { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        table.push((n, worst));
        Ok(worst)
    };
    record(1, &words)?;
    for n in 2..=depth {
        let mut next = Vec::new();
        for w in &words {
            let last = *w.last().unwrap();
            for s in 1..=p {
                if a.entry(last, s) == 1 {
                    let mut nw = w.clone();
                    nw.push(s);
                    next.push(nw);
                    if next.len() > cap {
                        return Err(CylinderError::EnumerationCapExceeded { cap });
                    }
                }
            }
        }
        words = next;
        record(n, &words)?;
    }
    let decreasing = table.windows(2).all(|w| w[1].1 < w[0].1);
    Ok(SingletonEvidence {
        depth,
        max_diameter: table.last().map(|&(_, d)| d).unwrap_or(0.0),
        diameter_table: table,
        decreasing,
    })
}

// ---------------------------------------------------------------------------
// the factor map
// ---------------------------------------------------------------------------

/// Projects an admissible sequence to its point: deepens the cylinder of
/// growing prefixes until the diameter is at most `tol`, then returns the
/// midpoint and half-diameter. Hitting the depth cap yields
/// [`CylinderError::SlowConvergence`] carrying the best enclosure.
pub fn factor_point(
    map: &PiecewiseMonotoneMap,
    partition: &Partition,
    s: &SymbolSequence,
    tol: f64,
) -> Result<(f64, f64), CylinderError> {
    let d = map.domain();
    let mut deepest = 0u32; // deepest prefix that produced an enclosure
    let mut best: Option<(f64, f64)> = None;
    let mut depth = 8u32;
    loop {
        match cylinder(map, partition, &s.prefix(depth as usize), tol) {
            Ok(c) => {
                let enclosure = (c.interval.midpoint(d), c.diameter / 2.0);
                if c.diameter <= tol {
                    return Ok(enclosure);
                }
                if depth >= FACTOR_DEPTH_CAP {
                    return Err(CylinderError::SlowConvergence {
                        point: enclosure.0,
                        radius: enclosure.1,
                        depth,
                    });
                }
                deepest = depth;
                best = Some(enclosure);
                depth = (depth + (depth / 2).max(8)).min(FACTOR_DEPTH_CAP);
            }
            // An empty pullback below an already-established enclosure means
            // the true cylinder has shrunk past the degeneracy threshold:
            // back off toward the deepest working depth instead of failing.
            Err(CylinderError::Empty { .. }) if best.is_some() => {
                if depth <= deepest + 1 {
                    let (point, radius) = best.unwrap();
                    return Err(CylinderError::SlowConvergence {
                        point,
                        radius,
                        depth: deepest,
                    });
                }
                depth = deepest + (depth - deepest) / 2;
            }
            Err(e) => return Err(e),
        }
    }
}

// ---------------------------------------------------------------------------
// itineraries and preimages
// ---------------------------------------------------------------------------

/// All admissible symbol words the forward orbit of `x` can trace through
/// the partition in `n` steps. Orbit points on shared piece boundaries give
/// a choice at that step; the choices are filtered by admissibility under
/// `a`, deduplicated, and returned lexicographically smallest first, capped
/// at 8 words.
pub fn itinerary(
    map: &PiecewiseMonotoneMap,
    partition: &Partition,
    a: &TransitionMatrix,
    x: f64,
    n: u32,
) -> Result<Vec<SymbolWord>, CylinderError> {
    assert!(n >= 1, "itineraries need at least one step");
    let mut choices: Vec<Vec<usize>> = Vec::with_capacity(n as usize);
    let mut point = x;
    for step in 0..n {
        choices.push(partition.symbols_at(point, BOUNDARY_EPS));
        if step + 1 < n {
            point = map.evaluate(point)?;
        }
    }
    let mut out: Vec<SymbolWord> = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    fn dfs(
        choices: &[Vec<usize>],
        a: &TransitionMatrix,
        stack: &mut Vec<usize>,
        out: &mut Vec<SymbolWord>,
    ) {
        if out.len() >= ITINERARY_CAP {
            return;
        }
        let k = stack.len();
        if k == choices.len() {
            out.push(SymbolWord::new(stack.clone()).expect("symbols are 1-based"));
            return;
        }
        for &s in &choices[k] {
            if let Some(&prev) = stack.last() {
                if a.entry(prev, s) == 0 {
                    continue;
                }
            }
            stack.push(s);
            dfs(choices, a, stack, out);
            stack.pop();
        }
    }
    dfs(&choices, a, &mut stack, &mut out);
    Ok(out)
}

/// Number of distinct admissible depth-`depth` words whose cylinder
/// contains `y` (within `tol`).
pub fn preimage_count(
    map: &PiecewiseMonotoneMap,
    partition: &Partition,
    a: &TransitionMatrix,
    y: f64,
    depth: u32,
    tol: f64,
    cap: usize,
) -> Result<usize, CylinderError> {
    assert!(depth >= 1);
    let p = partition.piece_count();
    let mut words: Vec<Vec<usize>> = (1..=p).map(|i| vec![i]).collect();
    for _ in 2..=depth {
        let mut next = Vec::new();
        for w in &words {
            let last = *w.last().unwrap();
            for s in 1..=p {
                if a.entry(last, s) == 1 {
                    let mut nw = w.clone();
                    nw.push(s);
                    next.push(nw);
                    if next.len() > cap {
                        return Err(CylinderError::EnumerationCapExceeded { cap });
                    }
                }
            }
        }
        words = next;
    }
    let mut count = 0;
    for w in words {
        let word = SymbolWord::new(w)?;
        match cylinder(map, partition, &word, tol) {
            Ok(c) => {
                if c.interval.contains(map.domain(), y, tol) {
                    count += 1;
                }
            }
            Err(CylinderError::Empty { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(count)
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------
