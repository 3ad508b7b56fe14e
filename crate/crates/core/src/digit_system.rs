//! Digit-restricted self-similar systems, words, and cylinder geometry.
//!
//! A system is the data `(d, N, digits)` with `digits` a nonempty proper
//! subset of `{0,..,N-1}^d`. It generates the iterated function system
//! `x -> (x + i)/N`, `i` ranging over `digits`, whose attractor lives in the
//! unit cube. Words are finite digit sequences; the word `w = (i_1,..,i_n)`
//! names the level-n cylinder cube with corner `sum_k i_k N^(-k)` and side
//! `N^(-n)` (the first symbol is the most significant).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

use crate::{Error, Result};

/// A validated digit-restricted system.
///
/// Digits are stored sorted lexicographically with no duplicates, so equal
/// systems compare equal structurally and every derived artifact is
/// deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitSystem {
    dim: usize,
    base: u32,
    digits: Vec<Vec<u32>>,
}

impl DigitSystem {
    /// Validates and builds a system.
    ///
    /// Rejects dimension < 2, base < 2, empty digit sets, out-of-range or
    /// duplicated digits, and the full grid (whose attractor is the whole
    /// cube; no small-width cover exists, so it is refused distinctly).
    pub fn new(dim: usize, base: u32, digits: Vec<Vec<u32>>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        if base < 2 {
            return Err(Error::BaseTooSmall(base));
        }
        if digits.is_empty() {
            return Err(Error::EmptyDigits);
        }
        for digit in &digits {
            if digit.len() != dim {
                return Err(Error::DigitDimensionMismatch {
                    digit: digit.clone(),
                    got: digit.len(),
                    dim,
                });
            }
            if digit.iter().any(|&c| c >= base) {
                return Err(Error::DigitOutOfRange { digit: digit.clone(), base });
            }
        }
        let mut digits = digits;
        digits.sort();
        if let Some(pair) = digits.windows(2).find(|pair| pair[0] == pair[1]) {
            return Err(Error::DuplicateDigit(pair[0].clone()));
        }
        // |digits| = base^dim means the full grid. Compare without overflow:
        // the count can only reach base^dim if it survives repeated division.
        let mut full = 1u128;
        let mut is_full_possible = true;
        for _ in 0..dim {
            full = match full.checked_mul(base as u128) {
                Some(f) => f,
                None => {
                    is_full_possible = false;
                    break;
                }
            };
        }
        if is_full_possible && digits.len() as u128 == full {
            return Err(Error::FullGrid { base, dim });
        }
        Ok(DigitSystem { dim, base, digits })
    }

    /// The planar base-3 system with the center cell removed (8 digits).
    pub fn sierpinski_carpet() -> Self {
        let digits = (0..3u32)
            .flat_map(|i| (0..3u32).map(move |j| vec![i, j]))
            .filter(|d| d != &vec![1, 1])
            .collect();
        DigitSystem::new(2, 3, digits).expect("carpet system is valid")
    }

    /// The three-dimensional base-3 system keeping the 20 cells with at most
    /// one middle coordinate (face centers and the center removed).
    pub fn menger_sponge() -> Self {
        let mut digits = Vec::new();
        for i in 0..3u32 {
            for j in 0..3u32 {
                for k in 0..3u32 {
                    let middles = [i, j, k].iter().filter(|&&c| c == 1).count();
                    if middles < 2 {
                        digits.push(vec![i, j, k]);
                    }
                }
            }
        }
        DigitSystem::new(3, 3, digits).expect("sponge system is valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    /// Digits in sorted order; indices into this slice identify symbols.
    pub fn digits(&self) -> &[Vec<u32>] {
        &self.digits
    }

    pub fn digit_count(&self) -> usize {
        self.digits.len()
    }

    /// `base^n` as a big integer.
    pub fn scale(&self, n: u32) -> BigInt {
        BigInt::from(self.base).pow(n)
    }

    /// Number of level-n words, if it fits in `u128`.
    pub fn word_count(&self, n: u32) -> Option<u128> {
        let mut total = 1u128;
        for _ in 0..n {
            total = total.checked_mul(self.digits.len() as u128)?;
        }
        Some(total)
    }
}

/// A finite word over a system's digits, stored as indices into
/// [`DigitSystem::digits`]. Level = length, always at least 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    symbols: Vec<usize>,
}

impl Word {
    pub fn new(system: &DigitSystem, symbols: Vec<usize>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::EmptyWord);
        }
        if let Some(&bad) = symbols.iter().find(|&&s| s >= system.digit_count()) {
            return Err(Error::BadSymbolIndex(bad));
        }
        Ok(Word { symbols })
    }

    /// Builds a word from explicit digit vectors, which must all belong to
    /// the system.
    pub fn from_digits(system: &DigitSystem, digits: &[Vec<u32>]) -> Result<Self> {
        let symbols = digits
            .iter()
            .map(|d| {
                system
                    .digits()
                    .binary_search(d)
                    .map_err(|_| Error::DigitOutOfRange { digit: d.clone(), base: system.base() })
            })
            .collect::<Result<Vec<_>>>()?;
        Word::new(system, symbols)
    }

    pub fn level(&self) -> u32 {
        self.symbols.len() as u32
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn digit<'a>(&self, system: &'a DigitSystem, k: usize) -> &'a [u32] {
        &system.digits()[self.symbols[k]]
    }
}

/// An axis-aligned cube with corner on the `N^(-n)` grid and side `N^(-n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cube {
    pub corner: Vec<BigRational>,
    pub side: BigRational,
}

impl Cube {
    /// True when the cube lies inside the unit cube.
    pub fn inside_unit_cube(&self) -> bool {
        self.corner.iter().all(|c| {
            c >= &BigRational::zero() && c + &self.side <= BigRational::one()
        })
    }
}

/// The cylinder cube of a word: corner `sum_k digit_k N^(-k)`, side `N^(-n)`.
pub fn cylinder_cube(system: &DigitSystem, word: &Word) -> Cube {
    let n = word.level();
    let base = BigInt::from(system.base());
    // Horner evaluation of sum_k digit_k N^(n-k), one coordinate at a time,
    // then divide once by N^n.
    let mut numerators = vec![BigInt::zero(); system.dim()];
    for k in 0..n as usize {
        let digit = word.digit(system, k);
        for (num, &coord) in numerators.iter_mut().zip(digit) {
            *num = &*num * &base + BigInt::from(coord);
        }
    }
    let denom = system.scale(n);
    let corner = numerators
        .into_iter()
        .map(|num| BigRational::new(num, denom.clone()))
        .collect();
    let side = BigRational::new(BigInt::one(), denom);
    Cube { corner, side }
}

/// Extends `word` with uniformly random digits up to `depth` and returns the
/// corner of the deepened cylinder. The point lies inside `cylinder_cube(word)`
/// and within `sqrt(d) * N^(-depth)` of the attractor.
pub fn sample_point<R: Rng>(
    system: &DigitSystem,
    word: &Word,
    depth: u32,
    rng: &mut R,
) -> Result<Vec<BigRational>> {
    if depth < word.level() {
        return Err(Error::DepthBelowLevel { depth, level: word.level() });
    }
    let mut symbols = word.symbols().to_vec();
    while (symbols.len() as u32) < depth {
        symbols.push(rng.gen_range(0..system.digit_count()));
    }
    let extended = Word::new(system, symbols)?;
    Ok(cylinder_cube(system, &extended).corner)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rational(num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    #[test]
    fn carpet_has_eight_sorted_digits() {
        let carpet = DigitSystem::sierpinski_carpet();
        assert_eq!(carpet.digit_count(), 8);
        assert_eq!(carpet.dim(), 2);
        assert_eq!(carpet.base(), 3);
        assert!(!carpet.digits().contains(&vec![1, 1]));
        let mut sorted = carpet.digits().to_vec();
        sorted.sort();
        assert_eq!(sorted, carpet.digits());
    }

    #[test]
    fn full_grid_is_rejected_distinctly() {
        let all: Vec<Vec<u32>> = (0..3u32)
            .flat_map(|i| (0..3u32).map(move |j| vec![i, j]))
            .collect();
        match DigitSystem::new(2, 3, all) {
            Err(Error::FullGrid { base: 3, dim: 2 }) => {}
            other => panic!("expected FullGrid, got {other:?}"),
        }
    }

    #[test]
    fn menger_sponge_has_twenty_digits() {
        let sponge = DigitSystem::menger_sponge();
        assert_eq!(sponge.digit_count(), 20);
        // Independent re-derivation: remove the 6 face centers and the center
        // from the 27-cell grid.
        let removed: Vec<Vec<u32>> = vec![
            vec![1, 1, 0],
            vec![1, 1, 2],
            vec![1, 0, 1],
            vec![1, 2, 1],
            vec![0, 1, 1],
            vec![2, 1, 1],
            vec![1, 1, 1],
        ];
        for r in &removed {
            assert!(!sponge.digits().contains(r), "{r:?} should be removed");
        }
    }

    #[test]
    fn invalid_systems_are_rejected() {
        assert!(matches!(
            DigitSystem::new(1, 3, vec![vec![0]]),
            Err(Error::DimensionTooSmall(1))
        ));
        assert!(matches!(
            DigitSystem::new(2, 1, vec![vec![0, 0]]),
            Err(Error::BaseTooSmall(1))
        ));
        assert!(matches!(DigitSystem::new(2, 3, vec![]), Err(Error::EmptyDigits)));
        assert!(matches!(
            DigitSystem::new(2, 3, vec![vec![0, 3]]),
            Err(Error::DigitOutOfRange { .. })
        ));
        assert!(matches!(
            DigitSystem::new(2, 3, vec![vec![0, 0], vec![0, 0]]),
            Err(Error::DuplicateDigit(_))
        ));
        assert!(matches!(
            DigitSystem::new(2, 3, vec![vec![0, 0, 0]]),
            Err(Error::DigitDimensionMismatch { .. })
        ));
    }

    #[test]
    fn single_digit_systems_are_allowed() {
        let point = DigitSystem::new(2, 3, vec![vec![0, 0]]).unwrap();
        assert_eq!(point.digit_count(), 1);
    }

    #[test]
    fn corner_of_single_zero_digit() {
        let carpet = DigitSystem::sierpinski_carpet();
        let w = Word::from_digits(&carpet, &[vec![0, 0]]).unwrap();
        let cube = cylinder_cube(&carpet, &w);
        assert_eq!(cube.corner, vec![rational(0, 1), rational(0, 1)]);
        assert_eq!(cube.side, rational(1, 3));
    }

    #[test]
    fn corner_composition_is_most_significant_first() {
        let carpet = DigitSystem::sierpinski_carpet();
        let w = Word::from_digits(&carpet, &[vec![2, 2], vec![0, 1]]).unwrap();
        let cube = cylinder_cube(&carpet, &w);
        assert_eq!(cube.corner, vec![rational(6, 9), rational(7, 9)]);
        assert_eq!(cube.side, rational(1, 9));

        let w = Word::from_digits(&carpet, &[vec![1, 0], vec![1, 0]]).unwrap();
        let cube = cylinder_cube(&carpet, &w);
        assert_eq!(cube.corner, vec![rational(4, 9), rational(0, 1)]);
    }

    #[test]
    fn sample_point_respects_depth_and_containment() {
        let carpet = DigitSystem::sierpinski_carpet();
        let w = Word::from_digits(&carpet, &[vec![2, 2], vec![0, 1]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let point = sample_point(&carpet, &w, 12, &mut rng).unwrap();
        let cube = cylinder_cube(&carpet, &w);
        for (x, (c, s)) in point.iter().zip(cube.corner.iter().zip(std::iter::repeat(&cube.side)))
        {
            assert!(x >= c && x < &(c + s), "sampled point escapes its cylinder");
            // On the N^(-12) grid.
            let scaled = x * BigRational::from_integer(BigInt::from(3).pow(12));
            assert!(scaled.is_integer());
        }
        assert!(matches!(
            sample_point(&carpet, &w, 1, &mut rng),
            Err(Error::DepthBelowLevel { depth: 1, level: 2 })
        ));
    }

    #[test]
    fn sample_point_at_level_depth_is_the_corner() {
        let carpet = DigitSystem::sierpinski_carpet();
        let w = Word::from_digits(&carpet, &[vec![0, 0]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let point = sample_point(&carpet, &w, 1, &mut rng).unwrap();
        assert_eq!(point, vec![rational(0, 1), rational(0, 1)]);
    }

    #[test]
    fn level_two_cubes_partition_with_disjoint_interiors() {
        let carpet = DigitSystem::sierpinski_carpet();
        let mut corners = Vec::new();
        for a in 0..8 {
            for b in 0..8 {
                let w = Word::new(&carpet, vec![a, b]).unwrap();
                let cube = cylinder_cube(&carpet, &w);
                assert_eq!(cube.side, rational(1, 9));
                assert!(cube.inside_unit_cube());
                corners.push(cube.corner);
            }
        }
        let count = corners.len();
        corners.sort();
        corners.dedup();
        assert_eq!(corners.len(), count, "corners must be pairwise distinct");
    }

    proptest! {
        #[test]
        fn nesting_extension_stays_inside_parent(
            symbols in proptest::collection::vec(0usize..8, 1..6),
            extra in 0usize..8,
        ) {
            let carpet = DigitSystem::sierpinski_carpet();
            let w = Word::new(&carpet, symbols.clone()).unwrap();
            let mut longer = symbols;
            longer.push(extra);
            let w2 = Word::new(&carpet, longer).unwrap();
            let outer = cylinder_cube(&carpet, &w);
            let inner = cylinder_cube(&carpet, &w2);
            for (ci, co) in inner.corner.iter().zip(outer.corner.iter()) {
                prop_assert!(ci >= co);
                prop_assert!(ci + &inner.side <= co + &outer.side);
            }
        }

        #[test]
        fn corners_scale_to_integers(symbols in proptest::collection::vec(0usize..8, 1..7)) {
            let carpet = DigitSystem::sierpinski_carpet();
            let w = Word::new(&carpet, symbols).unwrap();
            let cube = cylinder_cube(&carpet, &w);
            let scale = BigRational::from_integer(carpet.scale(w.level()));
            for c in &cube.corner {
                prop_assert!((c * &scale).is_integer());
            }
            prop_assert!(cube.inside_unit_cube());
        }

        #[test]
        fn sampled_points_stay_near_the_attractor(
            symbols in proptest::collection::vec(0usize..8, 1..4),
            seed in 0u64..1000,
        ) {
            let carpet = DigitSystem::sierpinski_carpet();
            let w = Word::new(&carpet, symbols).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let depth = w.level() + 3;
            let point = sample_point(&carpet, &w, depth, &mut rng).unwrap();
            // The point is the corner of a depth-level cylinder, so it lies
            // within sqrt(d) * 3^(-depth) of the attractor; here we check the
            // cheap consequence that it stays in the word's cylinder.
            let cube = cylinder_cube(&carpet, &w);
            for (x, c) in point.iter().zip(cube.corner.iter()) {
                prop_assert!(x >= c && x < &(c + &cube.side));
            }
        }
    }
}
