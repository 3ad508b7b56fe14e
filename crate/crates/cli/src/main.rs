//! Command-line pipeline: certify a direction set, build a cover from the
//! certificate, verify covers independently, reduce graph-directed systems
//! to digit systems, and scan projected Fourier coefficients.
//!
//! Exit codes, fixed for scripting:
//!   0  success
//!   1  semantic negative: not certified, verification failed, reduction
//!      inconclusive
//!   2  unreadable or invalid input
//!   3  a resource cap was exceeded (word, type, cell, or level-scan cap)

mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use tubecover::certifier::{
    candidate_directions, delta_star, direction_search, CertifyConfig,
};
use tubecover::cover::{build_cover, required_level, CoverConfig, CoverMode};
use tubecover::fourier::{check_scaling_invariance, nonvanishing_scan, TransferFactor};
use tubecover::json;
use tubecover::reduction::{reduce_to_digit_system, Reduction};
use tubecover::verify::{
    verify_containment, verify_sampling, verify_width, VerificationReport,
};
use tubecover::Error;

#[derive(Parser)]
#[command(
    name = "tubecover",
    version,
    about = "Builds, certifies, and checks tube covers of digit-restricted self-similar sets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    /// Enumerate every level-n word and record exact slab positions.
    Exact,
    /// Enumeration-free counting bound; smaller artifacts, no positions.
    Aggregated,
}

impl From<ModeArg> for CoverMode {
    fn from(m: ModeArg) -> CoverMode {
        match m {
            ModeArg::Exact => CoverMode::Exact,
            ModeArg::Aggregated => CoverMode::Aggregated,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Certify a direction set: maximize the worst residue entropy and
    /// bound the optimum from above; certified means a positive entropy gap.
    Certify {
        /// Digit system JSON: {"d", "N", "digits"}.
        #[arg(long)]
        system: PathBuf,
        /// Directions JSON: {"directions": [[...], ...]}. Omitted: greedy
        /// search over all primitive directions with max-norm at most RMAX.
        #[arg(long)]
        directions: Option<PathBuf>,
        /// Max-norm bound for the direction search.
        #[arg(long, default_value_t = 1)]
        rmax: i64,
        /// Seed for the ascent restarts.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Certificate output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a cover certificate at a level, or at the first level whose
    /// width bound drops below a target.
    #[command(group(
        clap::ArgGroup::new("target").required(true).args(["level", "epsilon"])
    ))]
    Cover {
        /// Digit system JSON.
        #[arg(long)]
        system: PathBuf,
        /// Certificate JSON produced by `certify`.
        #[arg(long)]
        certificate: PathBuf,
        /// Subdivision level of the cover.
        #[arg(long)]
        level: Option<u32>,
        /// Width target ("1/2", "0.25", ...); picks the first level whose
        /// aggregated bound is below it.
        #[arg(long)]
        epsilon: Option<String>,
        #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
        mode: ModeArg,
        /// Cover output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also render the cover to this SVG path (planar exact covers only).
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Re-check a cover certificate from scratch: word containment and the
    /// width total for exact covers, the width total for aggregated ones,
    /// plus optional Monte Carlo point sampling.
    Verify {
        /// Cover JSON produced by `cover`.
        cover: PathBuf,
        /// Monte Carlo samples; 0 skips sampling.
        #[arg(long, default_value_t = 0)]
        samples: u64,
        /// Sampling depth (default: cover level + 8).
        #[arg(long)]
        depth: Option<u32>,
        /// Sampling seed.
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Reduce a graph-directed system to a plain digit system by scanning
    /// occupied cells level by level.
    Reduce {
        /// Graph-directed system JSON: {"d", "N", "vertices", "edges"}.
        gds: PathBuf,
        /// Highest subdivision level to scan.
        #[arg(long, default_value_t = 3)]
        qmax: u32,
        /// Reduced digit system output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scan the Fourier transform of the natural measure along integer
    /// directions and check its scaling invariance.
    Fourier {
        /// Digit system JSON.
        #[arg(long)]
        system: PathBuf,
        /// "uniform" or comma-separated digit weights summing to 1.
        #[arg(long, default_value = "uniform")]
        weights: String,
        /// Largest multiple scanned per direction.
        #[arg(long, default_value_t = 5)]
        zmax: i64,
        /// Factors kept in the truncated product.
        #[arg(long, default_value_t = 40)]
        depth: u32,
        /// Max-norm bound for the scanned directions.
        #[arg(long, default_value_t = 1)]
        rmax: i64,
    },
}

/// A terminal failure: message for standard error plus the exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Failure {
        Failure { code: 2, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = if e.is_resource_cap() { 3 } else { 2 };
        Failure { code, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Certify { system, directions, rmax, seed, out } => {
            cmd_certify(&system, directions.as_deref(), rmax, seed, out.as_deref())
        }
        Command::Cover { system, certificate, level, epsilon, mode, out, svg } => cmd_cover(
            &system,
            &certificate,
            level,
            epsilon.as_deref(),
            mode,
            out.as_deref(),
            svg.as_deref(),
        ),
        Command::Verify { cover, samples, depth, seed } => {
            cmd_verify(&cover, samples, depth, seed)
        }
        Command::Reduce { gds, qmax, out } => cmd_reduce(&gds, qmax, out.as_deref()),
        Command::Fourier { system, weights, zmax, depth, rmax } => {
            cmd_fourier(&system, &weights, zmax, depth, rmax)
        }
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

/// Writes through a sibling temporary file and a rename, so a crash cannot
/// leave a half-written artifact behind.
fn write_atomic(path: &Path, text: &str) -> Result<(), Failure> {
    let name = path
        .file_name()
        .ok_or_else(|| Failure::input(format!("{} has no file name", path.display())))?;
    let tmp = path.with_file_name(format!("{}.tmp", name.to_string_lossy()));
    let write = |to: &Path| -> std::io::Result<()> {
        fs::write(to, text.as_bytes())?;
        fs::rename(to, path)
    };
    write(&tmp).map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
}

/// JSON artifact to `--out` (atomically) or to standard output.
fn emit(out: Option<&Path>, body: &str) -> Result<(), Failure> {
    match out {
        Some(path) => write_atomic(path, &format!("{body}\n")),
        None => {
            println!("{body}");
            Ok(())
        }
    }
}

fn cmd_certify(
    system: &Path,
    directions: Option<&Path>,
    rmax: i64,
    seed: u64,
    out: Option<&Path>,
) -> Result<u8, Failure> {
    let system = json::system_from_json(&read_input(system)?)?;
    let config = CertifyConfig { seed, ..CertifyConfig::default() };
    let cert = match directions {
        Some(path) => {
            let dirs = json::directions_from_json(&read_input(path)?)?;
            delta_star(&system, dirs, &config)?
        }
        None => direction_search(&system, rmax, &config)?,
    };
    emit(out, &json::certificate_to_json(&cert))?;
    eprintln!(
        "delta* = {:.12}, gap = {:.3e}, {} direction(s), {}",
        cert.delta_star,
        cert.optimality_gap,
        cert.directions.len(),
        if cert.certified { "CERTIFIED" } else { "not certified" },
    );
    Ok(if cert.certified { 0 } else { 1 })
}

/// Parses "p/q", integers, and plain decimals into exact rationals.
fn parse_rational_arg(text: &str) -> Result<BigRational, Failure> {
    let bad = || Failure::input(format!("cannot parse {text:?} as a rational number"));
    let text = text.trim();
    if let Some((p, q)) = text.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    if let Some((whole, frac)) = text.split_once('.') {
        let whole = if whole.is_empty() { "0" } else { whole };
        let sign = if whole.starts_with('-') { -1 } else { 1 };
        let w: BigInt = whole.parse().map_err(|_| bad())?;
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let f: BigInt = frac.parse().map_err(|_| bad())?;
        let denom = BigInt::from(10u32).pow(frac.len() as u32);
        return Ok(BigRational::new(w * &denom + sign * f, denom));
    }
    let w: BigInt = text.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(w))
}

fn cmd_cover(
    system: &Path,
    certificate: &Path,
    level: Option<u32>,
    epsilon: Option<&str>,
    mode: ModeArg,
    out: Option<&Path>,
    svg_out: Option<&Path>,
) -> Result<u8, Failure> {
    let system = json::system_from_json(&read_input(system)?)?;
    let cert = json::certificate_from_json(&read_input(certificate)?)?;
    let config = CoverConfig::default();

    let level = match (level, epsilon) {
        (Some(n), None) => n,
        (None, Some(text)) => {
            let target = parse_rational_arg(text)?;
            if target <= BigRational::zero() {
                return Err(Failure::input("epsilon must be positive"));
            }
            let (n, width) = required_level(&system, &cert, &target, &config)?;
            eprintln!("epsilon {text}: level {n} reaches width bound {width}");
            n
        }
        _ => unreachable!("clap enforces exactly one of --level/--epsilon"),
    };

    let cover = build_cover(&system, &cert, level, mode.into(), &config)?;
    emit(out, &json::cover_to_json(&cover)?)?;
    eprintln!(
        "level {}, {} slab(s), {} tube(s), width bound {:.6e}",
        cover.level,
        cover.per_direction.iter().map(|d| d.slab_count.clone()).sum::<num_bigint::BigUint>(),
        cover.tube_count,
        cover.width_f64(),
    );

    if let Some(path) = svg_out {
        if system.dim() != 2 {
            eprintln!("warning: SVG rendering is planar only; skipping for d = {}", system.dim());
        } else if cover.mode != CoverMode::Exact {
            eprintln!("warning: SVG rendering needs exact-mode position lists; skipping");
        } else {
            write_atomic(path, &svg::render(&cover, &svg::RenderSpec::default()))?;
        }
    }
    Ok(0)
}

fn cmd_verify(
    cover: &Path,
    samples: u64,
    depth: Option<u32>,
    seed: u64,
) -> Result<u8, Failure> {
    let cover = json::cover_from_json(&read_input(cover)?)?;
    let mut merged = VerificationReport {
        checks: Vec::new(),
        points_tested: 0,
        failures: 0,
        seed: None,
        recomputed_width: None,
    };
    let mut absorb = |r: VerificationReport| {
        merged.checks.extend(r.checks);
        merged.points_tested += r.points_tested;
        merged.failures += r.failures;
        merged.seed = merged.seed.or(r.seed);
        merged.recomputed_width = merged.recomputed_width.take().or(r.recomputed_width);
    };

    if cover.mode == CoverMode::Exact {
        absorb(verify_containment(&cover));
    }
    absorb(verify_width(&cover));
    if samples > 0 {
        let depth = depth.unwrap_or(cover.level + 8);
        absorb(verify_sampling(&cover, samples, depth, seed));
    }
    println!("{}", json::report_to_json(&merged));
    Ok(if merged.passed() { 0 } else { 1 })
}

fn cmd_reduce(gds: &Path, qmax: u32, out: Option<&Path>) -> Result<u8, Failure> {
    const CELL_CAP: u64 = 10_000_000;
    let gds = json::gds_from_json(&read_input(gds)?)?;
    match reduce_to_digit_system(&gds, qmax, CELL_CAP)? {
        Reduction::Reduced { level, system } => {
            emit(out, &json::system_to_json(&system))?;
            eprintln!(
                "reduced at q = {level}: base {}, {} digit(s)",
                system.base(),
                system.digit_count(),
            );
            Ok(0)
        }
        Reduction::Inconclusive { scanned } => {
            println!(
                "{}",
                serde_json::to_string_pretty(&serde_json::json!({
                    "inconclusive": true,
                    "scanned": scanned,
                }))
                .expect("literal serializes"),
            );
            eprintln!("inconclusive: every level up to q = {scanned} is fully occupied");
            Ok(1)
        }
    }
}

fn cmd_fourier(
    system: &Path,
    weights: &str,
    zmax: i64,
    depth: u32,
    rmax: i64,
) -> Result<u8, Failure> {
    let system = json::system_from_json(&read_input(system)?)?;
    let factor = if weights == "uniform" {
        TransferFactor::uniform(&system)
    } else {
        let parsed: Vec<f64> = weights
            .split(',')
            .map(|w| {
                w.trim()
                    .parse::<f64>()
                    .map_err(|_| Failure::input(format!("bad weight {w:?}")))
            })
            .collect::<Result<_, _>>()?;
        TransferFactor::new(&system, &parsed)?
    };

    let directions = candidate_directions(system.dim(), rmax);
    let scan = nonvanishing_scan(&factor, &directions, zmax, depth, 1e-6);
    let scan_value: serde_json::Value =
        serde_json::from_str(&json::scan_to_json(&scan)).expect("scan round trips");

    let mut invariance = Vec::new();
    let mut all_passed = true;
    for v in &directions {
        for z in 1..=zmax {
            let report = check_scaling_invariance(&factor, v, z, depth);
            all_passed &= report.passed();
            invariance.push(serde_json::json!({
                "frequency": report.frequency,
                "modulus": report.value.norm(),
                "difference": report.difference,
                "truncation_bound": report.truncation_bound,
                "passed": report.passed(),
            }));
        }
    }

    let doc = serde_json::json!({
        "scan": scan_value,
        "invariance": invariance,
    });
    println!("{}", serde_json::to_string_pretty(&doc).expect("document serializes"));
    eprintln!(
        "{} direction(s), {} surviving scan entr{}, invariance {}",
        directions.len(),
        scan.len(),
        if scan.len() == 1 { "y" } else { "ies" },
        if all_passed { "holds" } else { "FAILS" },
    );
    Ok(0)
}
