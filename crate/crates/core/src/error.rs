use thiserror::Error;

/// Errors across the whole pipeline.
///
/// Variants are grouped by the stage that raises them; the CLI maps them to
/// exit codes (input/validation errors vs resource caps).
#[derive(Debug, Error)]
pub enum Error {
    // --- digit systems ---
    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("base must be at least 2, got {0}")]
    BaseTooSmall(u32),
    #[error("digit set is empty")]
    EmptyDigits,
    #[error("digit {digit:?} has a coordinate outside 0..{base}")]
    DigitOutOfRange { digit: Vec<u32>, base: u32 },
    #[error("digit {0:?} appears more than once")]
    DuplicateDigit(Vec<u32>),
    #[error(
        "digit set is the full {base}^{dim} grid; the attractor is the whole cube \
         and admits no small-width cover"
    )]
    FullGrid { base: u32, dim: usize },
    #[error("digit {digit:?} has {got} coordinates, system dimension is {dim}")]
    DigitDimensionMismatch { digit: Vec<u32>, got: usize, dim: usize },
    #[error("word is empty; level must be at least 1")]
    EmptyWord,
    #[error("symbol index {0} is not a digit index of this system")]
    BadSymbolIndex(usize),
    #[error("sample depth {depth} is below the word level {level}")]
    DepthBelowLevel { depth: u32, level: u32 },

    // --- directions / projections ---
    #[error("direction has {got} coordinates, system dimension is {dim}")]
    DirectionDimensionMismatch { got: usize, dim: usize },
    #[error("direction must be nonzero")]
    ZeroDirection,
    #[error("direction {0:?} is not primitive (coordinate gcd exceeds 1)")]
    NotPrimitive(Vec<i64>),
    #[error("value {value} is outside the attainable position range [{min}, {max}] at level {level}")]
    ValueOutOfRange { value: String, min: String, max: String, level: u32 },

    // --- certification ---
    #[error("direction set is empty")]
    EmptyDirectionSet,
    #[error("weight vector has {got} entries, system has {want} digits")]
    WeightLengthMismatch { got: usize, want: usize },
    #[error("weights must be non-negative and sum to 1 (sum deviates by {0:e})")]
    BadWeights(f64),
    #[error("direction search exhausted max-norm {0} without certifying a gap")]
    SearchExhausted(i64),

    // --- covers ---
    #[error("cover requires a certified direction set (delta_star > gap_tol)")]
    NotCertified,
    #[error(
        "no direction accepts word {word:?}: minimum residue entropy {entropy} exceeds \
         threshold {theta}; the certificate is internally inconsistent"
    )]
    NoDirection { word: Vec<usize>, entropy: f64, theta: f64 },
    #[error("level-{level} enumeration needs {words} words, over the cap {cap}; use the aggregated mode")]
    WordCapExceeded { level: u32, words: String, cap: u64 },
    #[error("type enumeration needs {types} classes, over the cap {cap}")]
    TypeCapExceeded { types: String, cap: u64 },
    #[error("width bound did not drop below {target} within {scanned} levels")]
    LevelScanExhausted { target: String, scanned: u32 },

    // --- reduction ---
    #[error("graph-directed system has no vertices")]
    NoVertices,
    #[error("vertex {0} has no outgoing edge")]
    NoOutgoingEdge(usize),
    #[error("edge references vertex {vertex}, but the system has {count} vertices")]
    BadVertex { vertex: usize, count: usize },
    #[error("isometry permutation {0:?} is not a permutation of the coordinates")]
    BadPermutation(Vec<usize>),
    #[error("the edge graph is not strongly connected (vertex {0} unreachable)")]
    NotStronglyConnected(usize),
    #[error("cell enumeration at level {level} exceeds the cap {cap}")]
    CellCapExceeded { level: u32, cap: u64 },
    #[error("base {base}^{q} overflows the digit coordinate type")]
    BaseOverflow { base: u32, q: u32 },

    // --- serialization ---
    #[error("invalid {what}: {detail}")]
    Parse { what: &'static str, detail: String },
}

impl Error {
    /// True for errors that mean "the computation would exceed a configured
    /// resource cap", as opposed to invalid input.
    pub fn is_resource_cap(&self) -> bool {
        matches!(
            self,
            Error::WordCapExceeded { .. }
                | Error::TypeCapExceeded { .. }
                | Error::CellCapExceeded { .. }
                | Error::LevelScanExhausted { .. }
        )
    }
}
