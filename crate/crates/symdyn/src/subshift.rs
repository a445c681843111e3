//! One-sided subshifts of finite type: admissible words and sequences,
//! exact word counting, entropy, the shift map, and the sequence metric.
//!
//! Infinite sequences are represented in eventually periodic form
//! `preperiod · period · period · ⋯`. That representation is exact, closed
//! under the shift, and dense in the subshift, which is all the factor-map
//! machinery needs. Constructors canonicalize (primitive period, shortest
//! preperiod), so structural equality coincides with equality as infinite
//! sequences.

use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::graph::matrix_power;
use crate::matrix::{spectral_radius, MatrixError, TransitionMatrix};

// ---------------------------------------------------------------------------
// errors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubshiftError {
    /// Symbols are 1-based; 0 is never a valid symbol.
    ZeroSymbol { position: usize },
    /// A symbol exceeds the alphabet size of the matrix it is checked against.
    SymbolOutOfRange { position: usize, symbol: usize, p: usize },
    /// A sequence needs a nonempty period.
    EmptyPeriod,
}

impl fmt::Display for SubshiftError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubshiftError::ZeroSymbol { position } => {
                write!(f, "symbol at position {position} is 0; symbols are 1-based")
            }
            SubshiftError::SymbolOutOfRange { position, symbol, p } => write!(
                f,
                "symbol {symbol} at position {position} is outside the alphabet 1..={p}"
            ),
            SubshiftError::EmptyPeriod => write!(f, "sequence period must be nonempty"),
        }
    }
}

impl std::error::Error for SubshiftError {}

// ---------------------------------------------------------------------------
// words
// ---------------------------------------------------------------------------

/// A finite word over the 1-based alphabet `{1, …, p}`.
///
/// The word does not know `p`; range checking against a concrete alphabet
/// happens in [`SymbolWord::is_admissible`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SymbolWord {
    symbols: Vec<usize>,
}

impl SymbolWord {
    pub fn new(symbols: Vec<usize>) -> Result<Self, SubshiftError> {
        for (position, &s) in symbols.iter().enumerate() {
            if s == 0 {
                return Err(SubshiftError::ZeroSymbol { position });
            }
        }
        Ok(SymbolWord { symbols })
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// True iff every adjacent pair of symbols is an allowed transition.
    /// The empty word and single symbols are vacuously admissible.
    pub fn is_admissible(&self, a: &TransitionMatrix) -> Result<bool, SubshiftError> {
        check_range(a, &self.symbols)?;
        Ok(self
            .symbols
            .windows(2)
            .all(|w| a.entry(w[0], w[1]) == 1))
    }
}

fn check_range(a: &TransitionMatrix, symbols: &[usize]) -> Result<(), SubshiftError> {
    for (position, &symbol) in symbols.iter().enumerate() {
        if symbol == 0 || symbol > a.dim() {
            return Err(SubshiftError::SymbolOutOfRange { position, symbol, p: a.dim() });
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// eventually periodic sequences
// ---------------------------------------------------------------------------

/// The eventually periodic one-sided infinite sequence
/// `preperiod · period · period · ⋯`.
///
/// Stored in canonical form — the period is primitive (not a power of a
/// shorter word) and the preperiod is as short as possible — so two values
/// compare equal exactly when they denote the same infinite sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "SequenceRepr", into = "SequenceRepr")]
pub struct SymbolSequence {
    pre: Vec<usize>,
    per: Vec<usize>,
}

/// Wire form: `{ "pre": [...], "per": [...] }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SequenceRepr {
    #[serde(default)]
    pre: Vec<usize>,
    per: Vec<usize>,
}

impl TryFrom<SequenceRepr> for SymbolSequence {
    type Error = SubshiftError;
    fn try_from(r: SequenceRepr) -> Result<Self, SubshiftError> {
        SymbolSequence::new(SymbolWord::new(r.pre)?, SymbolWord::new(r.per)?)
    }
}

impl From<SymbolSequence> for SequenceRepr {
    fn from(s: SymbolSequence) -> SequenceRepr {
        SequenceRepr { pre: s.pre, per: s.per }
    }
}

impl SymbolSequence {
    pub fn new(preperiod: SymbolWord, period: SymbolWord) -> Result<Self, SubshiftError> {
        if period.is_empty() {
            return Err(SubshiftError::EmptyPeriod);
        }
        let mut pre = preperiod.symbols;
        let mut per = period.symbols;
        // reduce the period to its primitive root
        let root = primitive_root_len(&per);
        per.truncate(root);
        // absorb any preperiod tail that merely repeats the period
        while let (Some(&a), Some(&b)) = (pre.last(), per.last()) {
            if a != b {
                break;
            }
            per.rotate_right(1);
            pre.pop();
        }
        Ok(SymbolSequence { pre, per })
    }

    /// Purely periodic sequence `period · period · ⋯`.
    pub fn periodic(period: SymbolWord) -> Result<Self, SubshiftError> {
        SymbolSequence::new(SymbolWord::new(Vec::new()).unwrap(), period)
    }

    pub fn preperiod(&self) -> &[usize] {
        &self.pre
    }

    pub fn period(&self) -> &[usize] {
        &self.per
    }

    /// The symbol at 0-based position `n`.
    pub fn symbol_at(&self, n: usize) -> usize {
        if n < self.pre.len() {
            self.pre[n]
        } else {
            self.per[(n - self.pre.len()) % self.per.len()]
        }
    }

    /// The first `n` symbols as a finite word.
    pub fn prefix(&self, n: usize) -> SymbolWord {
        SymbolWord {
            symbols: (0..n).map(|i| self.symbol_at(i)).collect(),
        }
    }

    /// Drops the first symbol. The result stays canonical: the preperiod
    /// shortens, or — once it is empty — the period rotates.
    pub fn shift(&self) -> SymbolSequence {
        let out = if self.pre.is_empty() {
            let mut per = self.per.clone();
            per.rotate_left(1);
            SymbolSequence { pre: Vec::new(), per }
        } else {
            SymbolSequence { pre: self.pre[1..].to_vec(), per: self.per.clone() }
        };
        debug_assert!(out.is_canonical());
        out
    }

    /// True iff every adjacent pair — including the preperiod→period seam
    /// and the wrap-around inside the period — is an allowed transition.
    pub fn is_admissible(&self, a: &TransitionMatrix) -> Result<bool, SubshiftError> {
        check_range(a, &self.pre)?;
        check_range(a, &self.per)?;
        // enough symbols to see every adjacent pair the sequence contains
        let horizon = self.pre.len() + self.per.len() + 1;
        Ok((0..horizon.saturating_sub(1))
            .all(|n| a.entry(self.symbol_at(n), self.symbol_at(n + 1)) == 1))
    }

    fn is_canonical(&self) -> bool {
        primitive_root_len(&self.per) == self.per.len()
            && (self.pre.is_empty() || self.pre.last() != self.per.last())
    }
}

/// Length of the shortest word `w` with `per = w^k`.
fn primitive_root_len(per: &[usize]) -> usize {
    let n = per.len();
    (1..=n)
        .filter(|d| n % d == 0)
        .find(|&d| (d..n).all(|i| per[i] == per[i - d]))
        .unwrap_or(n)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// First index where the two sequences disagree, if any.
///
/// Eventually periodic sequences that agree on `max(preperiod lengths) +
/// lcm(period lengths)` symbols agree everywhere, so the search is finite.
pub fn first_disagreement(alpha: &SymbolSequence, beta: &SymbolSequence) -> Option<usize> {
    let pre = alpha.pre.len().max(beta.pre.len());
    let lcm = alpha.per.len() / gcd(alpha.per.len(), beta.per.len()) * beta.per.len();
    (0..pre + lcm).find(|&n| alpha.symbol_at(n) != beta.symbol_at(n))
}

/// First-disagreement metric: 0 for equal sequences, otherwise `2^{-k}`
/// where `k` is the first index at which they differ.
pub fn sequence_metric(alpha: &SymbolSequence, beta: &SymbolSequence) -> f64 {
    match first_disagreement(alpha, beta) {
        None => 0.0,
        Some(k) => (2.0f64).powi(-(k.min(1_000_000) as i32)),
    }
}

// ---------------------------------------------------------------------------
// counting and entropy
// ---------------------------------------------------------------------------

/// Exact number of admissible words of length `n ≥ 1`: the alphabet size for
/// `n = 1`, and the total of all entries of `A^{n-1}` otherwise.
pub fn count_words(a: &TransitionMatrix, n: u32) -> BigUint {
    assert!(n >= 1, "words have length at least 1");
    if n == 1 {
        return BigUint::from(a.dim());
    }
    matrix_power(a, n - 1).into_iter().sum()
}

/// Topological entropy of the subshift: the logarithm of the spectral
/// radius, certified to the given tolerance.
pub fn subshift_entropy(a: &TransitionMatrix, tol: f64) -> Result<f64, MatrixError> {
    Ok(spectral_radius(a, tol)?.lambda.ln())
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------
