//! Base-N Shannon entropy, residue distributions, and the method of types.
//!
//! Entropies are always taken with logarithm base N, so the uniform
//! distribution on the N residues has entropy exactly 1. Counting is exact:
//! type-class sizes are big-integer multinomials, and the identities they
//! satisfy (completeness, polynomial type counts, two-sided entropy bounds)
//! are what turn entropy deficits into position counts in the cover builder.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::digit_system::{DigitSystem, Word};
use crate::projection::{Direction, ProjectedAlphabet};
use crate::{Error, Result};

/// Shannon entropy of a probability vector, logarithm base `base`, with the
/// convention `0 * log 0 = 0`. Entries are assumed non-negative and summing
/// to 1; see [`validate_weights`] for input checking.
pub fn entropy(probs: &[f64], base: u32) -> f64 {
    let ln_base = (base as f64).ln();
    let mut h = 0.0;
    for &p in probs {
        if p > 0.0 {
            h -= p * p.ln();
        }
    }
    h / ln_base
}

/// Entropy of the normalized count vector, computed as
/// `(n ln n - sum c ln c) / (n ln base)` to avoid forming quotients.
pub fn entropy_of_counts(counts: &[u64], base: u32) -> f64 {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let mut acc = nf * nf.ln();
    for &c in counts {
        if c > 0 {
            let cf = c as f64;
            acc -= cf * cf.ln();
        }
    }
    acc / (nf * (base as f64).ln())
}

/// Precomputed `ln` values for `0..=n`, for entropy evaluation in hot loops.
#[derive(Debug, Clone)]
pub(crate) struct LnTable {
    ln: Vec<f64>,
}

impl LnTable {
    pub fn new(max: u64) -> Self {
        let ln = (0..=max).map(|k| if k == 0 { 0.0 } else { (k as f64).ln() }).collect();
        LnTable { ln }
    }

    /// `entropy_of_counts` with table lookups; `n` must be the sum of counts.
    pub fn entropy_of_counts(&self, counts: &[u64], n: u64, base: u32) -> f64 {
        let nf = n as f64;
        let mut acc = nf * self.ln[n as usize];
        for &c in counts {
            if c > 1 {
                acc -= c as f64 * self.ln[c as usize];
            }
        }
        acc / (nf * (base as f64).ln())
    }
}

/// Checks non-negativity and normalization of a weight vector against the
/// system's digit count.
pub fn validate_weights(system: &DigitSystem, weights: &[f64], tol: f64) -> Result<()> {
    if weights.len() != system.digit_count() {
        return Err(Error::WeightLengthMismatch {
            got: weights.len(),
            want: system.digit_count(),
        });
    }
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) || (sum - 1.0).abs() > tol {
        return Err(Error::BadWeights(sum - 1.0));
    }
    Ok(())
}

/// Pushes digit weights through `digit -> (digit.v) mod N`: entry `r` is the
/// total weight of digits with residue `r`.
pub fn residue_distribution(
    system: &DigitSystem,
    weights: &[f64],
    direction: &Direction,
) -> Result<Vec<f64>> {
    validate_weights(system, weights, 1e-9)?;
    let alphabet = ProjectedAlphabet::new(system, direction)?;
    let mut dist = vec![0.0; system.base() as usize];
    for (&w, &r) in weights.iter().zip(alphabet.residues()) {
        dist[r as usize] += w;
    }
    Ok(dist)
}

/// Occurrence counts of a word over some alphabet; the empirical measure of
/// the word scaled by its length.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EmpiricalType {
    counts: Vec<u64>,
}

impl EmpiricalType {
    pub fn new(counts: Vec<u64>) -> Self {
        EmpiricalType { counts }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Entropy (base `base`) of the normalized counts.
    pub fn entropy(&self, base: u32) -> f64 {
        entropy_of_counts(&self.counts, base)
    }
}

/// Counts of each digit (by digit index) in a word.
pub fn empirical_digit_type(system: &DigitSystem, word: &Word) -> EmpiricalType {
    let mut counts = vec![0u64; system.digit_count()];
    for &s in word.symbols() {
        counts[s] += 1;
    }
    EmpiricalType::new(counts)
}

/// Counts of each residue `(digit.v) mod N` in a word.
pub fn empirical_residue_type(
    system: &DigitSystem,
    word: &Word,
    direction: &Direction,
) -> Result<EmpiricalType> {
    let alphabet = ProjectedAlphabet::new(system, direction)?;
    let mut counts = vec![0u64; system.base() as usize];
    for &s in word.symbols() {
        counts[alphabet.residues()[s] as usize] += 1;
    }
    Ok(EmpiricalType::new(counts))
}

/// Pushes a digit type through the residue map of an alphabet: the residue
/// type of any word with that digit type.
pub fn push_type_through_residues(
    alphabet: &ProjectedAlphabet,
    digit_type: &EmpiricalType,
    base: u32,
) -> EmpiricalType {
    let mut counts = vec![0u64; base as usize];
    for (&c, &r) in digit_type.counts().iter().zip(alphabet.residues()) {
        counts[r as usize] += c;
    }
    EmpiricalType::new(counts)
}

/// Iterator over all weak compositions of `n` into `parts` parts, starting at
/// `(n, 0, .., 0)` and ending at `(0, .., 0, n)`.
pub struct Compositions {
    state: Option<Vec<u64>>,
    parts: usize,
}

impl Compositions {
    pub fn new(n: u64, parts: usize) -> Self {
        assert!(parts >= 1, "at least one part");
        let mut first = vec![0u64; parts];
        first[0] = n;
        Compositions { state: Some(first), parts }
    }
}

impl Iterator for Compositions {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        let current = self.state.take()?;
        // Advance: move one unit from the leftmost nonzero slot to its right
        // neighbor, resetting everything before it onto slot 0.
        if self.parts > 1 && current[self.parts - 1] != current.iter().sum::<u64>() {
            let mut next = current.clone();
            let j = next.iter().position(|&c| c > 0).expect("sum is positive");
            let t = next[j];
            next[j] = 0;
            next[0] = t - 1;
            next[j + 1] += 1;
            self.state = Some(next);
        }
        Some(current)
    }
}

/// `binomial(n + parts - 1, parts - 1)`: the number of weak compositions.
pub fn composition_count(n: u64, parts: usize) -> BigUint {
    binomial(n + parts as u64 - 1, parts as u64 - 1)
}

/// Exact binomial coefficient.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut result = BigUint::one();
    for i in 1..=k {
        result = result * BigUint::from(n - k + i) / BigUint::from(i);
    }
    result
}

/// Exact multinomial coefficient `(sum counts)! / prod counts!`, the size of
/// the type class with these counts.
pub fn type_class_size(counts: &[u64]) -> BigUint {
    let mut result = BigUint::one();
    let mut seen = 0u64;
    for &c in counts {
        seen += c;
        result *= binomial(seen, c);
    }
    result
}

/// All types of length `n` over `m` symbols, guarded by a cap on the type
/// count (default callers use 10^8).
pub fn enumerate_types(n: u64, m: usize, cap: u64) -> Result<Vec<EmpiricalType>> {
    let count = composition_count(n, m);
    if count > BigUint::from(cap) {
        return Err(Error::TypeCapExceeded { types: count.to_string(), cap });
    }
    Ok(Compositions::new(n, m).map(EmpiricalType::new).collect())
}
