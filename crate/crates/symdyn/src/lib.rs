//! Symbolic dynamics for piecewise-monotone maps of the interval and the
//! circle.
//!
//! The crate connects three descriptions of one-dimensional dynamics and
//! checks them against each other:
//!
//! * **Combinatorics** — 0/1 transition matrices, their directed graphs,
//!   spectral radii, and the subshifts of finite type they define
//!   ([`matrix`], [`graph`], [`subshift`]).
//! * **Geometry** — piecewise-monotone maps on `[0, 1]` or the circle,
//!   partitions into closed pieces, and the covering relations
//!   `T(piece_i) ⊇ piece_j` that tie a map to a matrix
//!   ([`map1d`], [`coupled`]).
//! * **Symbolic coding** — cylinder intervals, the factor map from admissible
//!   symbol sequences to points, entropy estimates from cylinder counts, and
//!   finite-horizon chaos witnesses ([`cylinder`], [`kasner`]).
//!
//! The [`analysis`] module drives the whole pipeline from a declarative
//! config and emits a deterministic JSON report; the `symdyn` binary is a
//! thin CLI wrapper around it.
//!
//! # Example
//!
//! Verify that the built-in angle-doubling map is coupled-expanding for the
//! full 2x2 matrix and has entropy `log 2`:
//!
//! ```
//! use symdyn::coupled;
//! use symdyn::map1d::{make_builtin, BuiltinParams};
//!
//! let (map, partition, matrix) = make_builtin("doubling", &BuiltinParams::default()).unwrap();
//! let report = coupled::verify(&map, &partition, &matrix, 1e-9).unwrap();
//! assert!(report.covering && report.equality);
//!
//! let spectral = symdyn::matrix::spectral_radius(&matrix, 1e-9).unwrap();
//! assert!((spectral.lambda - 2.0).abs() < 1e-9);
//! ```

pub mod analysis;
pub mod coupled;
pub mod cylinder;
pub mod graph;
pub mod kasner;
pub mod map1d;
pub mod matrix;
pub mod subshift;

/// Compiles and runs every code block in the guide (`book/`) as a doctest,
/// keeping the prose in sync with the crate.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/maps-and-partitions.md")]
    mod maps_and_partitions {}
    #[doc = include_str!("../../../book/src/transition-matrices.md")]
    mod transition_matrices {}
    #[doc = include_str!("../../../book/src/graphs-and-words.md")]
    mod graphs_and_words {}
    #[doc = include_str!("../../../book/src/coupled-expansion.md")]
    mod coupled_expansion {}
    #[doc = include_str!("../../../book/src/cylinders.md")]
    mod cylinders {}
    #[doc = include_str!("../../../book/src/kasner-map.md")]
    mod kasner_map {}
    #[doc = include_str!("../../../book/src/pipeline-and-cli.md")]
    mod pipeline_and_cli {}
}
