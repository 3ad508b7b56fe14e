//! Independent validation of cover certificates.
//!
//! Every function here re-derives its claims from the serialized certificate
//! and the digit system alone, through code paths separate from the builder:
//! word enumeration is an odometer rather than the builder's depth-first
//! walk, positions are recomputed from cylinder-cube corners in exact
//! rational arithmetic, and the width accounting is resummed from the slab
//! data. Failures are report entries rather than errors, so a tampered
//! certificate produces a failing report, not a crash.

use std::ops::RangeInclusive;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::certifier::DirectionCertificate;
use crate::cover::{build_cover, CoverCertificate, CoverConfig, CoverMode};
use crate::digit_system::DigitSystem;
use crate::entropy::entropy_of_counts;
use crate::projection::ProjectedAlphabet;
use crate::Result;

/// One named pass/fail entry of a report.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationCheck {
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
}

impl VerificationCheck {
    fn pass(name: &'static str, details: impl Into<String>) -> Self {
        VerificationCheck { name, passed: true, details: details.into() }
    }

    fn fail(name: &'static str, details: impl Into<String>) -> Self {
        VerificationCheck { name, passed: false, details: details.into() }
    }
}

/// Outcome of one verification pass.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub checks: Vec<VerificationCheck>,
    /// Words or sample points examined.
    pub points_tested: u64,
    /// How many of them failed their containment test.
    pub failures: u64,
    /// Seed of the sampling pass, when one ran.
    pub seed: Option<u64>,
    /// Independently recomputed width bound, when the pass recomputes one.
    pub recomputed_width: Option<BigRational>,
}

impl VerificationReport {
    fn new() -> Self {
        VerificationReport {
            checks: Vec::new(),
            points_tested: 0,
            failures: 0,
            seed: None,
            recomputed_width: None,
        }
    }

    /// True when every check passed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Geometry of one certificate direction needed by the word-level checks.
struct Checker {
    residues: Vec<Vec<usize>>,
    values: Vec<Vec<i64>>,
    min_offset: Vec<i64>,
    max_offset: Vec<i64>,
}

impl Checker {
    fn new(system: &DigitSystem, cover: &CoverCertificate) -> Result<Self> {
        let mut residues = Vec::new();
        let mut values = Vec::new();
        let mut min_offset = Vec::new();
        let mut max_offset = Vec::new();
        for entry in &cover.per_direction {
            let alphabet = ProjectedAlphabet::new(system, &entry.direction)?;
            residues.push(alphabet.residues().iter().map(|&r| r as usize).collect());
            values.push(alphabet.values().to_vec());
            min_offset.push(alphabet.min_offset());
            max_offset.push(alphabet.max_offset());
        }
        Ok(Checker { residues, values, min_offset, max_offset })
    }

    /// First direction whose residue type of `symbols` is deficient, with the
    /// minimum entropy seen when none is.
    fn assign(&self, base: u32, theta: f64, symbols: &[usize]) -> std::result::Result<usize, f64> {
        let mut min_entropy = f64::INFINITY;
        for (v, res) in self.residues.iter().enumerate() {
            let mut counts = vec![0u64; base as usize];
            for &s in symbols {
                counts[res[s]] += 1;
            }
            let h = entropy_of_counts(&counts, base);
            if h <= theta {
                return Ok(v);
            }
            min_entropy = min_entropy.min(h);
        }
        Err(min_entropy)
    }
}

/// Exhaustively re-enumerates the level-n words of an exact-mode certificate
/// and confirms each one is covered: its recomputed position is listed for
/// its recomputed direction, and both extreme corners of its cylinder cube
/// project into the slab interval. Also cross-checks the stored per-direction
/// word and slab counts.
pub fn verify_containment(cover: &CoverCertificate) -> VerificationReport {
    let mut report = VerificationReport::new();
    let system = &cover.system;

    if cover.mode != CoverMode::Exact {
        report.checks.push(VerificationCheck::fail(
            "certificate-mode",
            "containment verification requires an exact-mode certificate with position lists",
        ));
        return report;
    }
    let word_total = match system.word_count(cover.level) {
        Some(w) if w <= 100_000_000 => w,
        _ => {
            report.checks.push(VerificationCheck::fail(
                "exhaustive-cap",
                format!("level {} has too many words to re-enumerate", cover.level),
            ));
            return report;
        }
    };
    let checker = match Checker::new(system, cover) {
        Ok(c) => c,
        Err(e) => {
            report
                .checks
                .push(VerificationCheck::fail("directions", format!("invalid direction: {e}")));
            return report;
        }
    };
    for entry in &cover.per_direction {
        let listed = entry.positions.as_ref().map(|p| p.len()).unwrap_or(0);
        if entry.positions.is_none() {
            report.checks.push(VerificationCheck::fail(
                "position-lists",
                format!("direction {} has no position list", entry.direction.label()),
            ));
            return report;
        }
        if BigUint::from(listed) != entry.slab_count {
            report.checks.push(VerificationCheck::fail(
                "slab-count-consistency",
                format!(
                    "direction {}: {} positions listed, slab_count says {}",
                    entry.direction.label(),
                    listed,
                    entry.slab_count
                ),
            ));
        }
    }

    let n = cover.level as usize;
    let digit_count = system.digit_count();
    let base = system.base();
    let mut symbols = vec![0usize; n];
    let mut word_counts = vec![0u64; cover.per_direction.len()];
    let mut first_failure: Option<String> = None;

    loop {
        report.points_tested += 1;
        match checker.assign(base, cover.theta, &symbols) {
            Ok(v) => {
                word_counts[v] += 1;
                // Position from the cube corner: the corner's projection is
                // Q / N^n exactly, so scale and demand integrality.
                let cube = crate::digit_system::cylinder_cube(
                    system,
                    &crate::digit_system::Word::new(system, symbols.clone()).expect("valid word"),
                );
                let direction = &cover.per_direction[v].direction;
                let mut projected = BigRational::zero();
                for (c, &vi) in cube.corner.iter().zip(direction.components()) {
                    projected += c * BigRational::from(BigInt::from(vi));
                }
                let scaled = &projected * BigRational::from(system.scale(cover.level));
                let ok = if !scaled.is_integer() {
                    false
                } else {
                    let q = scaled.to_integer();
                    let listed = cover.per_direction[v]
                        .positions
                        .as_ref()
                        .map(|p| p.binary_search(&q).is_ok())
                        .unwrap_or(false);
                    // Slab interval from the listed position, and the two
                    // extreme cube corners, the minimizer and maximizer of
                    // the projection over the cube; all exact rationals.
                    let m = BigRational::from(BigInt::from(checker.min_offset[v]));
                    let mm = BigRational::from(BigInt::from(checker.max_offset[v]));
                    let scale = system.scale(cover.level);
                    let lo = BigRational::new(
                        &q + BigInt::from(checker.min_offset[v]),
                        scale.clone(),
                    );
                    let hi =
                        BigRational::new(&q + BigInt::from(checker.max_offset[v]), scale);
                    let proj_min = &projected + &cube.side * m;
                    let proj_max = &projected + &cube.side * mm;
                    listed && lo <= proj_min && proj_max <= hi
                };
                if !ok {
                    report.failures += 1;
                    if first_failure.is_none() {
                        first_failure = Some(format!(
                            "word {:?} (direction {}) is not covered",
                            symbols,
                            direction.label()
                        ));
                    }
                }
            }
            Err(min_entropy) => {
                report.failures += 1;
                if first_failure.is_none() {
                    first_failure = Some(format!(
                        "word {:?} has no deficient direction (min entropy {min_entropy}, \
                         threshold {})",
                        symbols, cover.theta
                    ));
                }
            }
        }
        if !increment(&mut symbols, digit_count) {
            break;
        }
    }

    debug_assert_eq!(report.points_tested as u128, word_total);
    report.checks.push(if report.failures == 0 {
        VerificationCheck::pass(
            "containment",
            format!("all {} words covered by listed slabs", report.points_tested),
        )
    } else {
        VerificationCheck::fail(
            "containment",
            first_failure.unwrap_or_else(|| "uncovered words found".into()),
        )
    });

    let mut counts_ok = true;
    for (entry, &counted) in cover.per_direction.iter().zip(&word_counts) {
        if entry.word_count != BigUint::from(counted) {
            counts_ok = false;
            report.checks.push(VerificationCheck::fail(
                "word-counts",
                format!(
                    "direction {}: certificate says {} words, re-enumeration found {}",
                    entry.direction.label(),
                    entry.word_count,
                    counted
                ),
            ));
        }
    }
    if counts_ok {
        report
            .checks
            .push(VerificationCheck::pass("word-counts", "per-direction word counts match"));
    }
    report
}

fn increment(symbols: &mut [usize], digit_count: usize) -> bool {
    for slot in symbols.iter_mut().rev() {
        *slot += 1;
        if *slot < digit_count {
            return true;
        }
        *slot = 0;
    }
    false
}

/// Draws `samples` uniform random level-`depth` words, maps each to the point
/// at its cylinder corner, and confirms the point lies in the slab of its
/// level-n prefix: the prefix's position must be listed and the projected
/// offset must fall in the direction's exact offset interval. Deterministic
/// under `seed`; `samples = 0` passes vacuously.
pub fn verify_sampling(
    cover: &CoverCertificate,
    samples: u64,
    depth: u32,
    seed: u64,
) -> VerificationReport {
    let mut report = VerificationReport::new();
    report.seed = Some(seed);
    let system = &cover.system;

    if cover.mode != CoverMode::Exact {
        report.checks.push(VerificationCheck::fail(
            "certificate-mode",
            "sampling verification requires an exact-mode certificate with position lists",
        ));
        return report;
    }
    if depth < cover.level + 2 {
        report.checks.push(VerificationCheck::fail(
            "sampling-depth",
            format!("depth {depth} must be at least level + 2 = {}", cover.level + 2),
        ));
        return report;
    }
    let checker = match Checker::new(system, cover) {
        Ok(c) => c,
        Err(e) => {
            report
                .checks
                .push(VerificationCheck::fail("directions", format!("invalid direction: {e}")));
            return report;
        }
    };

    let n = cover.level as usize;
    let digit_count = system.digit_count();
    let base = system.base();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut first_failure: Option<String> = None;

    for _ in 0..samples {
        report.points_tested += 1;
        let symbols: Vec<usize> =
            (0..depth).map(|_| rng.gen_range(0..digit_count)).collect();
        let prefix = &symbols[..n];
        let ok = match checker.assign(base, cover.theta, prefix) {
            Ok(v) => {
                let mut q = BigInt::zero();
                for &s in prefix {
                    q = q * base + checker.values[v][s];
                }
                let listed = cover.per_direction[v]
                    .positions
                    .as_ref()
                    .map(|p| p.binary_search(&q).is_ok())
                    .unwrap_or(false);
                // The point's projection minus Q/N^n, scaled by N^n, is the
                // suffix contribution: an exact rational that must fall in
                // the offset interval [m, M].
                let mut suffix = BigInt::zero();
                for &s in &symbols[n..] {
                    suffix = suffix * base + checker.values[v][s];
                }
                let denom = system.scale(depth - cover.level);
                let offset = BigRational::new(suffix, denom);
                let in_interval = BigRational::from(BigInt::from(checker.min_offset[v]))
                    <= offset
                    && offset <= BigRational::from(BigInt::from(checker.max_offset[v]));
                listed && in_interval
            }
            Err(_) => false,
        };
        if !ok {
            report.failures += 1;
            if first_failure.is_none() {
                first_failure = Some(format!("sampled word {:?} escapes its slab", symbols));
            }
        }
    }

    report.checks.push(if report.failures == 0 {
        VerificationCheck::pass(
            "sampling",
            format!("{} sampled points inside their slabs", report.points_tested),
        )
    } else {
        VerificationCheck::fail(
            "sampling",
            first_failure.unwrap_or_else(|| "escaping samples found".into()),
        )
    });
    report
}

/// Recomputes the tube subdivision and the width sum from the certificate's
/// slab data with separate big-rational code and compares both totals
/// bit-exactly against the stored values.
pub fn verify_width(cover: &CoverCertificate) -> VerificationReport {
    let mut report = VerificationReport::new();
    let system = &cover.system;
    let dim = system.dim() as u32;
    let scale = system.scale(cover.level).to_biguint().expect("positive scale");

    // Smallest integer whose square covers (d-1)^(d-1), recomputed by scan
    // from 1 rather than by integer square root.
    let target = BigUint::from(system.dim() - 1).pow(dim - 1);
    let mut multiplier = BigUint::one();
    while &multiplier * &multiplier < target {
        multiplier += BigUint::one();
    }

    let mut tube_count = BigUint::zero();
    let mut width = BigRational::zero();
    let mut consistent = true;
    for entry in &cover.per_direction {
        if let Some(positions) = &entry.positions {
            if BigUint::from(positions.len()) != entry.slab_count {
                consistent = false;
                report.checks.push(VerificationCheck::fail(
                    "slab-count-consistency",
                    format!(
                        "direction {}: {} positions listed, slab_count says {}",
                        entry.direction.label(),
                        positions.len(),
                        entry.slab_count
                    ),
                ));
            }
        }
        let l1 = BigUint::from(entry.direction.l1_norm());
        // ceil(N^n / l1) via (N^n - 1)/l1 + 1, valid since N^n >= 1.
        let per_axis = (&scale - BigUint::one()) / &l1 + BigUint::one();
        let tubes = &entry.slab_count * per_axis.pow(dim - 2);
        tube_count += &tubes;
        let numerator = BigInt::from(tubes * &multiplier * l1.pow(dim - 1));
        width += BigRational::new(numerator, BigInt::from(scale.pow(dim - 1)));
    }
    if consistent {
        report.checks.push(VerificationCheck::pass(
            "slab-count-consistency",
            "listed positions match slab counts",
        ));
    }

    report.checks.push(if tube_count == cover.tube_count {
        VerificationCheck::pass("tube-count", format!("{tube_count} tubes"))
    } else {
        VerificationCheck::fail(
            "tube-count",
            format!("certificate says {}, recomputation gives {tube_count}", cover.tube_count),
        )
    });
    report.checks.push(if width == cover.total_width_bound {
        VerificationCheck::pass("width-bound", format!("total {width}"))
    } else {
        VerificationCheck::fail(
            "width-bound",
            format!(
                "certificate says {}, recomputation gives {width}",
                cover.total_width_bound
            ),
        )
    });
    report.recomputed_width = Some(width);
    report
}

/// One level of a decay table.
#[derive(Debug, Clone)]
pub struct DecayRow {
    pub level: u32,
    pub width: BigRational,
    pub width_f64: f64,
    /// `width(n) / width(previous n)`; absent on the first row.
    pub ratio: Option<f64>,
    /// The envelope `C (n+1)^K N^(-n delta_star)`.
    pub envelope: f64,
    pub within_envelope: bool,
}

/// Aggregated-mode widths across a level range with successive ratios and
/// the decay-envelope comparison.
#[derive(Debug, Clone)]
pub struct DecayReport {
    pub rows: Vec<DecayRow>,
    pub passed: bool,
}

/// Builds aggregated covers over `levels` and tabulates their width bounds
/// against the decay envelope. Fails (in the report) if any width exceeds
/// its envelope value.
pub fn decay_report(
    system: &DigitSystem,
    certificate: &DirectionCertificate,
    levels: RangeInclusive<u32>,
    config: &CoverConfig,
) -> Result<DecayReport> {
    let mut rows: Vec<DecayRow> = Vec::new();
    let mut passed = true;
    for level in levels {
        let cover = build_cover(system, certificate, level, CoverMode::Aggregated, config)?;
        let width_f64 = cover.width_f64();
        let envelope = cover.decay_bound(level);
        let within = width_f64 <= envelope;
        passed &= within;
        let ratio = rows.last().map(|prev: &DecayRow| width_f64 / prev.width_f64);
        rows.push(DecayRow {
            level,
            width: cover.total_width_bound,
            width_f64,
            ratio,
            envelope,
            within_envelope: within,
        });
    }
    Ok(DecayReport { rows, passed })
}
