//! Integer directions and the projected systems they induce.
//!
//! Projecting the attractor along `x -> x.v` for an integer vector `v` turns a
//! digit system into a one-dimensional system with integer digit values
//! `i.v`. Positions of projected cylinders are exact integers
//! `Q(w) = sum_k (i_k.v) N^(n-k)`, and every position has a canonical
//! representative whose trailing digits lie in `{0,..,N-1}` with a single
//! bounded leading absorber, which is what makes position counting by residue
//! types possible.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::digit_system::{DigitSystem, Word};
use crate::{Error, Result};

/// A primitive, sign-canonical integer direction.
///
/// Construction rejects non-primitive vectors (a scaled direction defines the
/// same slabs but a different position arithmetic, so it is refused rather
/// than silently divided) and normalizes sign so that `v` and `-v` compare
/// equal: the first nonzero coordinate is positive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Direction {
    components: Vec<i64>,
}

impl Direction {
    pub fn new(components: Vec<i64>) -> Result<Self> {
        if components.iter().all(|&c| c == 0) {
            return Err(Error::ZeroDirection);
        }
        let gcd = components
            .iter()
            .fold(0i64, |acc, &c| acc.gcd(&c.abs()));
        if gcd != 1 {
            return Err(Error::NotPrimitive(components));
        }
        let mut components = components;
        let first_nonzero = components
            .iter()
            .find(|&&c| c != 0)
            .copied()
            .expect("nonzero vector has a nonzero coordinate");
        if first_nonzero < 0 {
            for c in &mut components {
                *c = -*c;
            }
        }
        Ok(Direction { components })
    }

    pub fn components(&self) -> &[i64] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// `||v||_1`, never zero.
    pub fn l1_norm(&self) -> u64 {
        self.components.iter().map(|c| c.unsigned_abs()).sum()
    }

    /// `||v||_2` as a float (used only for reporting Euclidean widths).
    pub fn l2_norm(&self) -> f64 {
        self.components
            .iter()
            .map(|&c| (c as f64) * (c as f64))
            .sum::<f64>()
            .sqrt()
    }

    /// Dot product with a digit vector.
    pub fn dot(&self, digit: &[u32]) -> i64 {
        self.components
            .iter()
            .zip(digit)
            .map(|(&v, &c)| v * c as i64)
            .sum()
    }

    /// Compact display form, e.g. `1,-1`.
    pub fn label(&self) -> String {
        self.components
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// The projected digit values of a system along one direction, with the
/// geometric offsets needed for slab intervals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectedAlphabet {
    direction: Direction,
    /// `digit.v` per digit, indexed like `DigitSystem::digits`.
    values: Vec<i64>,
    /// `(digit.v) mod N`, Euclidean, per digit.
    residues: Vec<u32>,
    /// Sum of negative direction components: lower corner offset of a cube.
    min_offset: i64,
    /// Sum of positive direction components: upper corner offset of a cube.
    max_offset: i64,
}

impl ProjectedAlphabet {
    pub fn new(system: &DigitSystem, direction: &Direction) -> Result<Self> {
        if direction.dim() != system.dim() {
            return Err(Error::DirectionDimensionMismatch {
                got: direction.dim(),
                dim: system.dim(),
            });
        }
        let values: Vec<i64> = system.digits().iter().map(|d| direction.dot(d)).collect();
        let n = system.base() as i64;
        let residues = values.iter().map(|&v| v.rem_euclid(n) as u32).collect();
        let min_offset = direction.components().iter().map(|&c| c.min(0)).sum();
        let max_offset = direction.components().iter().map(|&c| c.max(0)).sum();
        Ok(ProjectedAlphabet {
            direction: direction.clone(),
            values,
            residues,
            min_offset,
            max_offset,
        })
    }

    pub fn direction(&self) -> &Direction {
        &self.direction
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn residues(&self) -> &[u32] {
        &self.residues
    }

    /// Largest absolute projected digit value, the scale constant of the
    /// canonical-representative bound.
    pub fn max_abs_value(&self) -> i64 {
        self.values.iter().map(|v| v.abs()).max().unwrap_or(0)
    }

    /// Leading-absorber bound `L = max|digit.v| * N`.
    pub fn absorber_bound(&self, base: u32) -> i64 {
        self.max_abs_value() * base as i64
    }

    pub fn min_value(&self) -> i64 {
        self.values.iter().copied().min().unwrap_or(0)
    }

    pub fn max_value(&self) -> i64 {
        self.values.iter().copied().max().unwrap_or(0)
    }

    /// `sum_i min(v_i, 0)`: a unit cube's lower extent in the `x.v` coordinate.
    pub fn min_offset(&self) -> i64 {
        self.min_offset
    }

    /// `sum_i max(v_i, 0)`: a unit cube's upper extent in the `x.v` coordinate.
    pub fn max_offset(&self) -> i64 {
        self.max_offset
    }

    /// Sorted distinct residues of the projected digit values; the alphabet of
    /// residue words along this direction.
    pub fn residue_alphabet(&self) -> Vec<u32> {
        let mut alphabet = self.residues.clone();
        alphabet.sort_unstable();
        alphabet.dedup();
        alphabet
    }

    /// Attainable position range `[min_value, max_value] * (N^n - 1)/(N - 1)`
    /// at level `n`, as big integers.
    pub fn position_range(&self, base: u32, n: u32) -> (BigInt, BigInt) {
        let repunit = (BigInt::from(base).pow(n) - 1) / BigInt::from(base - 1);
        (BigInt::from(self.min_value()) * &repunit, BigInt::from(self.max_value()) * repunit)
    }
}

/// `digit.v` for a single digit.
pub fn project_digit(digit: &[u32], direction: &Direction) -> i64 {
    direction.dot(digit)
}

/// `(digit.v) mod N` with Euclidean (always non-negative) remainder.
pub fn residue_of_digit(digit: &[u32], direction: &Direction, base: u32) -> u32 {
    direction.dot(digit).rem_euclid(base as i64) as u32
}

/// The integer position `Q(w) = sum_k (digit_k.v) N^(n-k)`.
///
/// The projected corner of the word's cylinder is exactly `Q(w) / N^n`.
pub fn projected_position(system: &DigitSystem, word: &Word, direction: &Direction) -> BigInt {
    let base = BigInt::from(system.base());
    let mut q = BigInt::zero();
    for k in 0..word.level() as usize {
        q = q * &base + BigInt::from(direction.dot(word.digit(system, k)));
    }
    q
}

/// A canonical representative of a projected position: the value
/// `absorber * N^(n-1) + sum_{k=2..n} digit_k N^(n-k)` with every trailing
/// digit in `{0,..,N-1}` and `|absorber| <= max|digit.v| * N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalRep {
    pub absorber: BigInt,
    /// `n - 1` trailing base-N digits, most significant first.
    pub digits: Vec<u32>,
}

impl CanonicalRep {
    /// Reconstructs the represented value.
    pub fn value(&self, base: u32) -> BigInt {
        let b = BigInt::from(base);
        let mut v = self.absorber.clone();
        for &d in &self.digits {
            v = v * &b + BigInt::from(d);
        }
        v
    }
}

/// Rewrites an attainable level-`n` position as its canonical representative.
///
/// The trailing `n-1` digits are the base-N digits of `q mod N^(n-1)`
/// (Euclidean), and the leading absorber `q div N^(n-1)` soaks up the rest.
/// On the attainable range the absorber is bounded by `L = max|digit.v| * N`
/// in absolute value, and the represented value is preserved exactly.
pub fn canonicalize(
    alphabet: &ProjectedAlphabet,
    base: u32,
    q: &BigInt,
    n: u32,
) -> Result<CanonicalRep> {
    let (min, max) = alphabet.position_range(base, n);
    if q < &min || q > &max {
        return Err(Error::ValueOutOfRange {
            value: q.to_string(),
            min: min.to_string(),
            max: max.to_string(),
            level: n,
        });
    }
    let modulus = BigInt::from(base).pow(n - 1);
    // Floor division against the positive modulus: remainder in [0, N^(n-1)).
    let (absorber, mut rem) = q.div_mod_floor(&modulus);
    let mut digits = vec![0u32; (n - 1) as usize];
    let b = BigInt::from(base);
    for slot in digits.iter_mut().rev() {
        let (next, digit) = rem.div_rem(&b);
        *slot = digit.to_u32().expect("base-N digit fits in u32");
        rem = next;
    }
    Ok(CanonicalRep { absorber, digits })
}
