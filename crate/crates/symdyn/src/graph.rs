//! The directed graph of a transition matrix.
//!
//! Vertices are the symbols `1..=p`; there is an edge `i -> j` exactly when
//! `a_{ij} = 1`. Walks in this graph are the admissible words of the
//! subshift, which is why path counts and word counts agree (see
//! [`crate::subshift::count_words`]).
//!
//! A *full cycle* is a closed walk that visits every vertex. One exists if
//! and only if the graph is strongly connected: concatenating paths
//! `1 -> 2 -> ... -> p -> 1` builds the walk, and conversely the walk
//! contains a route between any ordered pair of vertices. Strong
//! connectivity of the graph is in turn equivalent to irreducibility of the
//! matrix, and the two sides are implemented independently (Tarjan here,
//! bit-row Warshall in [`crate::matrix::is_irreducible`]) so the equivalence
//! stays testable rather than true by definition.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::matrix::TransitionMatrix;

/// Directed graph on `1..=p` built from a transition matrix. Every vertex
/// has in-degree and out-degree at least 1, inherited from the matrix's
/// no-zero-row / no-zero-column invariants.
#[derive(Debug, Clone)]
pub struct TransitionGraph {
    p: usize,
    adj: Vec<Vec<usize>>, // 0-based internally
}

impl TransitionGraph {
    pub fn new(a: &TransitionMatrix) -> Self {
        TransitionGraph { p: a.dim(), adj: a.adjacency() }
    }

    /// Number of vertices.
    pub fn vertex_count(&self) -> usize {
        self.p
    }

    /// Edges as 1-based pairs `(i, j)`, row by row.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (u, nbrs) in self.adj.iter().enumerate() {
            for &v in nbrs {
                out.push((u + 1, v + 1));
            }
        }
        out
    }

    /// Strongly connected components, as sorted lists of 1-based vertices,
    /// listed in topological order of the condensation: if any edge runs
    /// from component `C` to component `D != C`, then `C` appears first.
    pub fn strongly_connected_components(&self) -> Vec<Vec<usize>> {
        scc_of_adjacency(self.p, &self.adj)
    }

    /// Is there a closed walk visiting every vertex? Equivalent to strong
    /// connectivity, hence to irreducibility of the source matrix.
    pub fn has_full_cycle(&self) -> bool {
        self.strongly_connected_components().len() == 1
    }
}

/// Number of length-`n` walks from `i` to `j` (1-based), i.e. `(A^n)_{ij}`,
/// in exact integer arithmetic. Counts grow like `lambda_A^n`, so the result
/// is an arbitrary-precision integer rather than a machine word.
pub fn count_paths(a: &TransitionMatrix, i: usize, j: usize, n: u32) -> BigUint {
    let p = a.dim();
    assert!(
        (1..=p).contains(&i) && (1..=p).contains(&j),
        "vertices ({i},{j}) outside 1..={p}"
    );
    let power = matrix_power(a, n);
    power[(i - 1) * p + (j - 1)].clone()
}

/// `A^n` as a row-major `BigUint` matrix (`A^0` is the identity). Shared
/// with the word-counting in [`crate::subshift`].
pub(crate) fn matrix_power(a: &TransitionMatrix, n: u32) -> Vec<BigUint> {
    let p = a.dim();
    let mut result: Vec<BigUint> = (0..p * p)
        .map(|k| if k / p == k % p { BigUint::one() } else { BigUint::zero() })
        .collect();
    let base: Vec<BigUint> = a
        .rows()
        .into_iter()
        .flatten()
        .map(|b| BigUint::from(u32::from(b)))
        .collect();
    let mut sq = base;
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            result = big_mat_mul(&result, &sq, p);
        }
        e >>= 1;
        if e > 0 {
            sq = big_mat_mul(&sq, &sq, p);
        }
    }
    result
}

fn big_mat_mul(a: &[BigUint], b: &[BigUint], p: usize) -> Vec<BigUint> {
    let mut out = vec![BigUint::zero(); p * p];
    for i in 0..p {
        for k in 0..p {
            let v = &a[i * p + k];
            if v.is_zero() {
                continue;
            }
            for j in 0..p {
                let w = &b[k * p + j];
                if !w.is_zero() {
                    out[i * p + j] += v * w;
                }
            }
        }
    }
    out
}

/// Iterative Tarjan on a 0-based adjacency list. Components come out in
/// reverse topological order (a component is finished only after everything
/// it reaches), so the result is reversed before returning and the vertices
/// are relabeled 1-based and sorted within each component.
pub(crate) fn scc_of_adjacency(p: usize, adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    const UNSET: usize = usize::MAX;
    let mut index = vec![UNSET; p];
    let mut low = vec![0usize; p];
    let mut on_stack = vec![false; p];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut comps: Vec<Vec<usize>> = Vec::new();

    // explicit DFS frames: (vertex, next adjacency position)
    let mut frames: Vec<(usize, usize)> = Vec::new();
    for start in 0..p {
        if index[start] != UNSET {
            continue;
        }
        frames.push((start, 0));
        index[start] = next_index;
        low[start] = next_index;
        next_index += 1;
        stack.push(start);
        on_stack[start] = true;

        while let Some(top) = frames.len().checked_sub(1) {
            let (v, pos) = frames[top];
            if pos < adj[v].len() {
                frames[top].1 += 1;
                let w = adj[v][pos];
                if index[w] == UNSET {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                frames.pop();
                if let Some(&(parent, _)) = frames.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        comp.push(w + 1);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
    }
    comps.reverse();
    comps
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------
