//! Transition matrices and their spectral data.
//!
//! A *transition matrix* is a square 0/1 matrix of dimension `p >= 2` in
//! which every row and every column contains at least one 1. Row `i` records
//! which symbols may follow symbol `i`, so the matrix doubles as the edge set
//! of a directed graph on `p` vertices (see [`crate::graph`]).
//!
//! The central quantity is the maximal eigenvalue `lambda_A`: its logarithm
//! is the topological entropy of the subshift the matrix defines. For an
//! irreducible matrix the maximal eigenvalue is simple, carries a strictly
//! positive eigenvector, and is bracketed by the Collatz-Wielandt ratios
//! `min_i (Ax)_i / x_i <= lambda_A <= max_i (Ax)_i / x_i` of any positive
//! vector `x`. [`spectral_radius`] exploits this: power iteration on the
//! averaged update `x -> (x + Ax) / 2` (averaging kills the rotating
//! peripheral spectrum of a periodic matrix, so a plain cycle converges too)
//! with the ratio bracket as a certified stopping rule. A reducible matrix is
//! split into strongly connected components first and the maximum of the
//! per-component roots is returned; the eigenvector is reported only in the
//! irreducible case, where it is meaningful and positive.

use std::fmt;

/// Hard ceiling on power-iteration steps, applied on top of the
/// tolerance-derived cap `10 * p * ceil(1/tol)`. Tolerances below float
/// resolution would otherwise never close the bracket.
const HARD_ITER_CAP: u64 = 10_000_000;

/// Largest accepted dimension. Reachability and primitivity pack one matrix
/// row into a single `u128`.
pub const MAX_DIM: usize = 128;

// ---------------------------------------------------------------------------
// errors
// ---------------------------------------------------------------------------

/// Rejection reasons for matrix construction and spectral analysis.
/// Coordinates in error values are 1-based, matching symbol labels.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixError {
    /// Input rows do not form a square array: `row` (1-based) has length
    /// `len` instead of `rows`.
    NotSquare { rows: usize, row: usize, len: usize },
    /// Dimension 0 or 1; transition matrices start at `p = 2`.
    DimensionTooSmall { p: usize },
    /// Dimension beyond [`MAX_DIM`].
    DimensionTooLarge { p: usize },
    /// An entry other than 0 or 1.
    NonBinaryEntry { row: usize, col: usize, value: u8 },
    /// A row with no 1: the symbol could never be followed.
    ZeroRow { row: usize },
    /// A column with no 1: the symbol could never be reached.
    ZeroColumn { col: usize },
    /// Power iteration hit its cap before the Collatz-Wielandt bracket
    /// closed to the requested tolerance; `residual` is the half-width of
    /// the bracket at the point of giving up.
    NoConvergence { iterations: u64, residual: f64 },
}

impl fmt::Display for MatrixError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            MatrixError::NotSquare { rows, row, len } => {
                write!(f, "matrix is not square: {rows} rows but row {row} has {len} entries")
            }
            MatrixError::DimensionTooSmall { p } => {
                write!(f, "transition matrices need dimension >= 2, got {p}")
            }
            MatrixError::DimensionTooLarge { p } => {
                write!(f, "dimension {p} exceeds the supported maximum {MAX_DIM}")
            }
            MatrixError::NonBinaryEntry { row, col, value } => {
                write!(f, "entry ({row},{col}) is {value}; transition matrices are 0/1")
            }
            MatrixError::ZeroRow { row } => write!(f, "row {row} is all zeros"),
            MatrixError::ZeroColumn { col } => write!(f, "column {col} is all zeros"),
            MatrixError::NoConvergence { iterations, residual } => write!(
                f,
                "power iteration did not converge after {iterations} steps (bracket half-width {residual:.3e})"
            ),
        }
    }
}

impl std::error::Error for MatrixError {}

// ---------------------------------------------------------------------------
// the matrix type
// ---------------------------------------------------------------------------

/// A validated 0/1 transition matrix. Construction enforces squareness,
/// `2 <= p <=` [`MAX_DIM`], binary entries, and the absence of zero rows and
/// zero columns; every value of this type satisfies those invariants.
#[derive(Clone, PartialEq, Eq)]
pub struct TransitionMatrix {
    p: usize,
    bits: Vec<u8>, // row-major, length p*p, entries 0 or 1
}

impl TransitionMatrix {
    /// Validate and build a transition matrix from nested rows.
    pub fn new(rows: &[Vec<u8>]) -> Result<Self, MatrixError> {
        let p = rows.len();
        if p < 2 {
            return Err(MatrixError::DimensionTooSmall { p });
        }
        if p > MAX_DIM {
            return Err(MatrixError::DimensionTooLarge { p });
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(MatrixError::NotSquare { rows: p, row: i + 1, len: row.len() });
            }
        }
        let mut bits = Vec::with_capacity(p * p);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v > 1 {
                    return Err(MatrixError::NonBinaryEntry { row: i + 1, col: j + 1, value: v });
                }
                bits.push(v);
            }
        }
        for i in 0..p {
            if (0..p).all(|j| bits[i * p + j] == 0) {
                return Err(MatrixError::ZeroRow { row: i + 1 });
            }
        }
        for j in 0..p {
            if (0..p).all(|i| bits[i * p + j] == 0) {
                return Err(MatrixError::ZeroColumn { col: j + 1 });
            }
        }
        Ok(TransitionMatrix { p, bits })
    }

    /// Dimension `p`.
    pub fn dim(&self) -> usize {
        self.p
    }

    /// Entry `a_{ij}` with 1-based indices `1 <= i, j <= p`, matching the
    /// symbol labels used throughout the crate.
    ///
    /// # Panics
    /// Panics if an index is outside `1..=p`.
    pub fn entry(&self, i: usize, j: usize) -> u8 {
        assert!(
            (1..=self.p).contains(&i) && (1..=self.p).contains(&j),
            "matrix index ({i},{j}) outside 1..={}",
            self.p
        );
        self.bits[(i - 1) * self.p + (j - 1)]
    }

    /// The matrix as nested rows, e.g. for report serialization.
    pub fn rows(&self) -> Vec<Vec<u8>> {
        (0..self.p).map(|i| self.bits[i * self.p..(i + 1) * self.p].to_vec()).collect()
    }

    /// Sum of row `i` (1-based): the out-degree of symbol `i`.
    pub fn row_sum(&self, i: usize) -> usize {
        assert!((1..=self.p).contains(&i));
        self.bits[(i - 1) * self.p..i * self.p].iter().map(|&b| b as usize).sum()
    }

    /// Largest row sum.
    pub fn max_row_sum(&self) -> usize {
        (1..=self.p).map(|i| self.row_sum(i)).max().unwrap()
    }

    /// True when every entry is 1 (the full shift on `p` symbols).
    pub fn is_full(&self) -> bool {
        self.bits.iter().all(|&b| b == 1)
    }

    /// Entrywise order: `self <= other`.
    pub fn dominated_by(&self, other: &TransitionMatrix) -> bool {
        self.p == other.p && self.bits.iter().zip(&other.bits).all(|(&a, &b)| a <= b)
    }

    pub(crate) fn at(&self, r: usize, c: usize) -> u8 {
        self.bits[r * self.p + c]
    }

    /// Rows packed as bit masks; bit `j` of word `i` is `a_{i+1,j+1}`.
    pub(crate) fn bit_rows(&self) -> Vec<u128> {
        (0..self.p)
            .map(|i| {
                (0..self.p).fold(0u128, |acc, j| acc | ((self.bits[i * self.p + j] as u128) << j))
            })
            .collect()
    }

    /// 0-based adjacency lists.
    pub(crate) fn adjacency(&self) -> Vec<Vec<usize>> {
        (0..self.p)
            .map(|i| (0..self.p).filter(|&j| self.bits[i * self.p + j] == 1).collect())
            .collect()
    }
}

impl fmt::Debug for TransitionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TransitionMatrix{:?}", self.rows())
    }
}

// ---------------------------------------------------------------------------
// spectral radius
// ---------------------------------------------------------------------------

/// Outcome of [`spectral_radius`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult {
    /// The maximal eigenvalue, accurate to the requested tolerance.
    pub lambda: f64,
    /// Strictly positive eigenvector normalized to max-norm 1; present
    /// exactly when the matrix is irreducible.
    pub eigvec: Option<Vec<f64>>,
    /// Total power-iteration steps across components.
    pub iterations: u64,
    /// When `eigvec` is present: `max-norm(A v - lambda v)`. Otherwise the
    /// eigenvalue bracket half-width of the winning component.
    pub residual: f64,
}

/// Maximal eigenvalue of a transition matrix, certified to absolute error
/// `<= tol` by the Collatz-Wielandt bracket on each strongly connected
/// component. Always `>= 1` for a transition matrix: following row-sums
/// `>= 1` from any vertex eventually closes a cycle, so some component
/// carries one.
pub fn spectral_radius(a: &TransitionMatrix, tol: f64) -> Result<SpectralResult, MatrixError> {
    assert!(tol > 0.0, "tolerance must be positive");
    let p = a.dim();
    let cap = iteration_cap(p, tol);
    let comps = crate::graph::scc_of_adjacency(p, &a.adjacency());
    let irreducible = comps.len() == 1;

    let mut lambda = 0.0f64;
    let mut iterations = 0u64;
    let mut best: Option<(Vec<usize>, Vec<f64>, f64)> = None; // (component, vector, bracket half-width)
    for comp in &comps {
        let (root, vec, iters, half) = component_root(a, comp, tol, cap)?;
        iterations += iters;
        if root > lambda || best.is_none() {
            lambda = root;
            best = Some((comp.clone(), vec, half));
        }
    }

    if irreducible {
        let (_, v, _) = best.expect("at least one component");
        // Certified residual on the full matrix.
        let av = mat_vec(a, &v);
        let residual =
            v.iter().zip(&av).map(|(x, y)| (y - lambda * x).abs()).fold(0.0f64, f64::max);
        Ok(SpectralResult { lambda, eigvec: Some(v), iterations, residual })
    } else {
        let (_, _, half) = best.expect("at least one component");
        Ok(SpectralResult { lambda, eigvec: None, iterations, residual: half })
    }
}

/// Irreducibility test, by definition: for every ordered pair `(i, j)` some
/// power `k >= 1` has `(A^k)_{ij} > 0`. Computed as the non-reflexive
/// transitive closure of the edge relation (bit-row Warshall), deliberately a
/// different algorithm from the Tarjan pass behind
/// [`crate::graph::TransitionGraph::has_full_cycle`], so the two can be
/// compared as an executable equivalence.
pub fn is_irreducible(a: &TransitionMatrix) -> bool {
    let p = a.dim();
    let mut reach = a.bit_rows();
    for k in 0..p {
        let row_k = reach[k];
        for i in 0..p {
            if reach[i] & (1u128 << k) != 0 {
                reach[i] |= row_k;
            }
        }
    }
    let full = if p == 128 { u128::MAX } else { (1u128 << p) - 1 };
    reach.iter().all(|&r| r == full)
}

/// Primitivity test: is some power of `A` entrywise positive, and if so what
/// is the smallest such exponent? The search runs to the Wielandt bound
/// `(p-1)^2 + 1`, after a cheap period check (a matrix with graph period
/// `> 1` can never have a positive power). Primitive matrices are also
/// called *eventually positive*; the two terms are synonyms here.
pub fn is_primitive(a: &TransitionMatrix) -> (bool, Option<u64>) {
    if !is_irreducible(a) {
        return (false, None);
    }
    if graph_period(a) > 1 {
        return (false, None);
    }
    let p = a.dim();
    let bound = ((p - 1) * (p - 1) + 1) as u64;
    let adj = a.bit_rows();
    let full = if p == 128 { u128::MAX } else { (1u128 << p) - 1 };
    let mut cur = adj.clone(); // positivity pattern of A^k
    for k in 1..=bound {
        if cur.iter().all(|&r| r == full) {
            return (true, Some(k));
        }
        cur = bool_mat_mul(&cur, &adj, p);
    }
    (false, None)
}

/// `(1/n) * ln ||A^n||` with `||.||` the entry sum, evaluated in floating
/// point with renormalization (each step past 50, and whenever entries grow
/// large) so the growth rate stays finite for any `n`. Converges to
/// `ln lambda_A` and is used to cross-check [`spectral_radius`].
pub fn norm_growth(a: &TransitionMatrix, n: u32) -> f64 {
    assert!(n >= 1);
    let p = a.dim();
    let mut m: Vec<f64> = a.bits.iter().map(|&b| b as f64).collect();
    let mut log_scale = 0.0f64;
    for step in 2..=n {
        m = float_mat_mul(&m, a, p);
        let max = m.iter().cloned().fold(0.0f64, f64::max);
        if step > 50 || max > 1e100 {
            log_scale += max.ln();
            for v in &mut m {
                *v /= max;
            }
        }
    }
    let sum: f64 = m.iter().sum();
    (log_scale + sum.ln()) / f64::from(n)
}

// ---------------------------------------------------------------------------
// internals
// ---------------------------------------------------------------------------

fn iteration_cap(p: usize, tol: f64) -> u64 {
    let per_unit = (1.0 / tol).ceil();
    let derived = if per_unit.is_finite() && per_unit < 1e15 {
        (10 * p as u64).saturating_mul(per_unit as u64)
    } else {
        u64::MAX
    };
    derived.min(HARD_ITER_CAP)
}

fn mat_vec(a: &TransitionMatrix, x: &[f64]) -> Vec<f64> {
    let p = a.dim();
    (0..p)
        .map(|i| (0..p).filter(|&j| a.at(i, j) == 1).map(|j| x[j]).sum())
        .collect()
}

/// Perron root of the submatrix on one strongly connected component,
/// together with the (sub)eigenvector, iteration count, and final bracket
/// half-width. Components are irreducible by construction, so the
/// Collatz-Wielandt bracket applies.
fn component_root(
    a: &TransitionMatrix,
    comp: &[usize],
    tol: f64,
    cap: u64,
) -> Result<(f64, Vec<f64>, u64, f64), MatrixError> {
    let p = a.dim();
    let m = comp.len();
    if m == 1 {
        let v = comp[0] - 1; // comp holds 1-based labels
        let root = f64::from(a.at(v, v));
        let mut vec = vec![0.0; p];
        vec[v] = 1.0;
        return Ok((root, vec, 0, 0.0));
    }
    // submatrix in local coordinates
    let idx: Vec<usize> = comp.iter().map(|&v| v - 1).collect();
    let sub: Vec<Vec<usize>> = idx
        .iter()
        .map(|&r| (0..m).filter(|&c| a.at(r, idx[c]) == 1).collect())
        .collect();

    let mut x = vec![1.0f64; m];
    let mut iterations = 0u64;
    loop {
        let y: Vec<f64> = sub.iter().map(|row| row.iter().map(|&c| x[c]).sum()).collect();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..m {
            let r = y[i] / x[i];
            lo = lo.min(r);
            hi = hi.max(r);
        }
        if hi - lo <= tol {
            let lambda = 0.5 * (lo + hi);
            // embed the local vector into global coordinates, max-norm 1
            let max = x.iter().cloned().fold(0.0f64, f64::max);
            let mut vec = vec![0.0; p];
            for (local, &global) in idx.iter().enumerate() {
                vec[global] = x[local] / max;
            }
            return Ok((lambda, vec, iterations, 0.5 * (hi - lo)));
        }
        if iterations >= cap {
            return Err(MatrixError::NoConvergence { iterations, residual: 0.5 * (hi - lo) });
        }
        // averaged update: damps the rotating spectrum of a periodic block
        let mut z: Vec<f64> = (0..m).map(|i| 0.5 * (x[i] + y[i])).collect();
        let max = z.iter().cloned().fold(0.0f64, f64::max);
        for v in &mut z {
            *v /= max;
        }
        x = z;
        iterations += 1;
    }
}

fn bool_mat_mul(a: &[u128], b: &[u128], p: usize) -> Vec<u128> {
    let mut out = vec![0u128; p];
    for i in 0..p {
        let mut row = 0u128;
        let mut bits = a[i];
        while bits != 0 {
            let k = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            row |= b[k];
        }
        out[i] = row;
    }
    out
}

fn float_mat_mul(m: &[f64], a: &TransitionMatrix, p: usize) -> Vec<f64> {
    let mut out = vec![0.0f64; p * p];
    for i in 0..p {
        for k in 0..p {
            let v = m[i * p + k];
            if v == 0.0 {
                continue;
            }
            for j in 0..p {
                if a.at(k, j) == 1 {
                    out[i * p + j] += v;
                }
            }
        }
    }
    out
}

/// Period of the (strongly connected) graph of `a`: gcd over all edges of
/// `level(u) + 1 - level(v)` for BFS levels from vertex 0.
fn graph_period(a: &TransitionMatrix) -> u64 {
    let p = a.dim();
    let adj = a.adjacency();
    let mut level = vec![i64::MIN; p];
    let mut queue = std::collections::VecDeque::new();
    level[0] = 0;
    queue.push_back(0usize);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if level[v] == i64::MIN {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut g: u64 = 0;
    for u in 0..p {
        for &v in &adj[u] {
            let diff = (level[u] + 1 - level[v]).unsigned_abs();
            g = gcd(g, diff);
        }
    }
    g.max(1)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------
