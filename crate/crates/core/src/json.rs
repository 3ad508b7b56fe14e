//! JSON wire formats for every artifact the pipeline reads or writes.
//!
//! Schemas are stable and minimal: systems as `{"d", "N", "digits"}`,
//! direction sets as `{"directions"}`, certificates with their witness and
//! dual data, covers with per-direction slab data, graph-directed systems
//! with explicit edge isometries. Big integers are serialized as decimal
//! strings and rationals as `"p/q"` strings, since JSON numbers cannot carry
//! them exactly. Parsing goes through the domain constructors, so semantic
//! validation (digit ranges, primitivity, strong connectivity) is never
//! bypassed; malformed JSON itself surfaces as [`Error::Parse`].

use std::collections::BTreeMap;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::certifier::DirectionCertificate;
use crate::cover::{CoverCertificate, CoverMode, DirectionCover};
use crate::digit_system::DigitSystem;
use crate::fourier::ScanEntry;
use crate::projection::Direction;
use crate::reduction::{CellIsometry, GdsEdge, GraphDirectedSystem};
use crate::verify::VerificationReport;
use crate::{Error, Result};

fn parse_err(what: &'static str, detail: impl ToString) -> Error {
    Error::Parse { what, detail: detail.to_string() }
}

fn parse_biguint(s: &str, what: &'static str) -> Result<BigUint> {
    BigUint::from_str(s).map_err(|e| parse_err(what, format!("{s:?}: {e}")))
}

fn parse_bigint(s: &str, what: &'static str) -> Result<BigInt> {
    BigInt::from_str(s).map_err(|e| parse_err(what, format!("{s:?}: {e}")))
}

fn rational_string(x: &BigRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

fn parse_rational(s: &str, what: &'static str) -> Result<BigRational> {
    BigRational::from_str(s).map_err(|e| parse_err(what, format!("{s:?}: {e}")))
}

// ---------------------------------------------------------------- systems

#[derive(Serialize, Deserialize)]
struct SystemWire {
    d: usize,
    #[serde(rename = "N")]
    base: u32,
    digits: Vec<Vec<u32>>,
}

fn system_wire(system: &DigitSystem) -> SystemWire {
    SystemWire { d: system.dim(), base: system.base(), digits: system.digits().to_vec() }
}

fn system_from_wire(wire: SystemWire) -> Result<DigitSystem> {
    DigitSystem::new(wire.d, wire.base, wire.digits)
}

pub fn system_to_json(system: &DigitSystem) -> String {
    serde_json::to_string_pretty(&system_wire(system)).expect("system serializes")
}

pub fn system_from_json(text: &str) -> Result<DigitSystem> {
    let wire: SystemWire =
        serde_json::from_str(text).map_err(|e| parse_err("system JSON", e))?;
    system_from_wire(wire)
}

// ------------------------------------------------------------- directions

#[derive(Serialize, Deserialize)]
struct DirectionsWire {
    directions: Vec<Vec<i64>>,
}

fn directions_from_components(raw: Vec<Vec<i64>>) -> Result<Vec<Direction>> {
    raw.into_iter().map(Direction::new).collect()
}

pub fn directions_to_json(directions: &[Direction]) -> String {
    let wire = DirectionsWire {
        directions: directions.iter().map(|v| v.components().to_vec()).collect(),
    };
    serde_json::to_string_pretty(&wire).expect("directions serialize")
}

pub fn directions_from_json(text: &str) -> Result<Vec<Direction>> {
    let wire: DirectionsWire =
        serde_json::from_str(text).map_err(|e| parse_err("directions JSON", e))?;
    directions_from_components(wire.directions)
}

// ------------------------------------------------------------ certificates

#[derive(Serialize, Deserialize)]
struct CertificateWire {
    #[serde(rename = "V")]
    directions: Vec<Vec<i64>>,
    delta_star: f64,
    witness: Vec<f64>,
    gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<f64>,
    dual_weights: Vec<f64>,
    entropies: Vec<f64>,
    certified: bool,
    gap_tol: f64,
}

pub fn certificate_to_json(cert: &DirectionCertificate) -> String {
    let wire = CertificateWire {
        directions: cert.directions.iter().map(|v| v.components().to_vec()).collect(),
        delta_star: cert.delta_star,
        witness: cert.witness.clone(),
        gap: cert.optimality_gap,
        oracle: cert.oracle_value,
        dual_weights: cert.dual_weights.clone(),
        entropies: cert.entropies.clone(),
        certified: cert.certified,
        gap_tol: cert.gap_tol,
    };
    serde_json::to_string_pretty(&wire).expect("certificate serializes")
}

pub fn certificate_from_json(text: &str) -> Result<DirectionCertificate> {
    let wire: CertificateWire =
        serde_json::from_str(text).map_err(|e| parse_err("certificate JSON", e))?;
    Ok(DirectionCertificate {
        directions: directions_from_components(wire.directions)?,
        witness: wire.witness,
        dual_weights: wire.dual_weights,
        entropies: wire.entropies,
        delta_star: wire.delta_star,
        optimality_gap: wire.gap,
        oracle_value: wire.oracle,
        certified: wire.certified,
        gap_tol: wire.gap_tol,
    })
}

// ----------------------------------------------------------------- covers

#[derive(Serialize, Deserialize)]
struct CoverWire {
    system: SystemWire,
    #[serde(rename = "V")]
    directions: Vec<Vec<i64>>,
    delta_star: f64,
    theta: f64,
    n: u32,
    mode: String,
    /// Exact mode: per-direction sorted position lists, keyed by direction
    /// label.
    #[serde(skip_serializing_if = "Option::is_none")]
    slabs: Option<BTreeMap<String, Vec<String>>>,
    /// Aggregated mode: per-direction slab-count bounds.
    #[serde(skip_serializing_if = "Option::is_none")]
    slab_counts: Option<BTreeMap<String, String>>,
    word_counts: BTreeMap<String, String>,
    kappas: BTreeMap<String, String>,
    range_sizes: BTreeMap<String, String>,
    tube_count: String,
    total_width_bound: String,
    decay_coefficient: String,
    decay_exponent: u32,
}

pub fn cover_to_json(cover: &CoverCertificate) -> Result<String> {
    let labels: Vec<String> =
        cover.per_direction.iter().map(|d| d.direction.label()).collect();
    for (i, label) in labels.iter().enumerate() {
        if labels[..i].contains(label) {
            return Err(parse_err("cover", format!("duplicate direction {label}")));
        }
    }
    let mut slabs = BTreeMap::new();
    let mut slab_counts = BTreeMap::new();
    let mut word_counts = BTreeMap::new();
    let mut kappas = BTreeMap::new();
    let mut range_sizes = BTreeMap::new();
    for (label, share) in labels.iter().zip(&cover.per_direction) {
        match &share.positions {
            Some(positions) => {
                let strings = positions.iter().map(BigInt::to_string).collect();
                slabs.insert(label.clone(), strings);
            }
            None => {
                slab_counts.insert(label.clone(), share.slab_count.to_string());
            }
        }
        word_counts.insert(label.clone(), share.word_count.to_string());
        kappas.insert(label.clone(), share.kappa.to_string());
        range_sizes.insert(label.clone(), share.range_size.to_string());
    }
    let wire = CoverWire {
        system: system_wire(&cover.system),
        directions: cover.directions().map(|v| v.components().to_vec()).collect(),
        delta_star: cover.delta_star,
        theta: cover.theta,
        n: cover.level,
        mode: cover.mode.label().to_string(),
        slabs: match cover.mode {
            CoverMode::Exact => Some(slabs),
            CoverMode::Aggregated => None,
        },
        slab_counts: match cover.mode {
            CoverMode::Exact => None,
            CoverMode::Aggregated => Some(slab_counts),
        },
        word_counts,
        kappas,
        range_sizes,
        tube_count: cover.tube_count.to_string(),
        total_width_bound: rational_string(&cover.total_width_bound),
        decay_coefficient: cover.decay_coefficient.to_string(),
        decay_exponent: cover.decay_exponent,
    };
    Ok(serde_json::to_string_pretty(&wire).expect("cover serializes"))
}

fn lookup<'m, T>(
    map: &'m BTreeMap<String, T>,
    label: &str,
    what: &'static str,
) -> Result<&'m T> {
    map.get(label).ok_or_else(|| parse_err(what, format!("missing direction {label}")))
}

pub fn cover_from_json(text: &str) -> Result<CoverCertificate> {
    let wire: CoverWire =
        serde_json::from_str(text).map_err(|e| parse_err("cover JSON", e))?;
    let system = system_from_wire(wire.system)?;
    let mode = CoverMode::from_label(&wire.mode)?;
    let directions = directions_from_components(wire.directions)?;
    if directions.is_empty() {
        return Err(parse_err("cover JSON", "direction set is empty"));
    }
    let mut per_direction = Vec::with_capacity(directions.len());
    for direction in directions {
        let label = direction.label();
        if per_direction.iter().any(|d: &DirectionCover| d.direction == direction) {
            return Err(parse_err("cover JSON", format!("duplicate direction {label}")));
        }
        let (positions, slab_count) = match mode {
            CoverMode::Exact => {
                let listed = match &wire.slabs {
                    Some(map) => lookup(map, &label, "cover slabs")?,
                    None => return Err(parse_err("cover JSON", "exact mode needs \"slabs\"")),
                };
                let positions = listed
                    .iter()
                    .map(|s| parse_bigint(s, "slab position"))
                    .collect::<Result<Vec<_>>>()?;
                let count = BigUint::from(positions.len());
                (Some(positions), count)
            }
            CoverMode::Aggregated => {
                let counts = wire.slab_counts.as_ref().ok_or_else(|| {
                    parse_err("cover JSON", "aggregated mode needs \"slab_counts\"")
                })?;
                let count = parse_biguint(lookup(counts, &label, "cover slab_counts")?, "slab count")?;
                (None, count)
            }
        };
        per_direction.push(DirectionCover {
            word_count: parse_biguint(
                lookup(&wire.word_counts, &label, "cover word_counts")?,
                "word count",
            )?,
            slab_count,
            positions,
            kappa: parse_biguint(lookup(&wire.kappas, &label, "cover kappas")?, "kappa")?,
            range_size: parse_biguint(
                lookup(&wire.range_sizes, &label, "cover range_sizes")?,
                "range size",
            )?,
            direction,
        });
    }
    Ok(CoverCertificate {
        system,
        delta_star: wire.delta_star,
        theta: wire.theta,
        level: wire.n,
        mode,
        per_direction,
        tube_count: parse_biguint(&wire.tube_count, "tube count")?,
        total_width_bound: parse_rational(&wire.total_width_bound, "width bound")?,
        decay_coefficient: parse_biguint(&wire.decay_coefficient, "decay coefficient")?,
        decay_exponent: wire.decay_exponent,
    })
}

// ------------------------------------------------- graph-directed systems

#[derive(Serialize, Deserialize)]
struct GdsEdgeWire {
    from: usize,
    to: usize,
    digit: Vec<u32>,
    perm: Vec<usize>,
    reflect: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct GdsWire {
    d: usize,
    #[serde(rename = "N")]
    base: u32,
    vertices: usize,
    edges: Vec<GdsEdgeWire>,
}

pub fn gds_to_json(system: &GraphDirectedSystem) -> String {
    let wire = GdsWire {
        d: system.dim(),
        base: system.base(),
        vertices: system.vertex_count(),
        edges: system
            .edges()
            .iter()
            .map(|e| GdsEdgeWire {
                from: e.from,
                to: e.to,
                digit: e.digit.clone(),
                perm: e.isometry.perm().to_vec(),
                reflect: e.isometry.reflect().to_vec(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&wire).expect("graph system serializes")
}

pub fn gds_from_json(text: &str) -> Result<GraphDirectedSystem> {
    let wire: GdsWire =
        serde_json::from_str(text).map_err(|e| parse_err("graph system JSON", e))?;
    let edges = wire
        .edges
        .into_iter()
        .map(|e| {
            Ok(GdsEdge {
                from: e.from,
                to: e.to,
                digit: e.digit,
                isometry: CellIsometry::new(e.perm, e.reflect)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    GraphDirectedSystem::new(wire.d, wire.base, wire.vertices, edges)
}

// ---------------------------------------------------------------- reports

#[derive(Serialize)]
struct CheckWire<'a> {
    name: &'a str,
    passed: bool,
    details: &'a str,
}

#[derive(Serialize)]
struct ReportWire<'a> {
    passed: bool,
    checks: Vec<CheckWire<'a>>,
    points_tested: u64,
    failures: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    recomputed_width: Option<String>,
}

pub fn report_to_json(report: &VerificationReport) -> String {
    let wire = ReportWire {
        passed: report.passed(),
        checks: report
            .checks
            .iter()
            .map(|c| CheckWire { name: c.name, passed: c.passed, details: &c.details })
            .collect(),
        points_tested: report.points_tested,
        failures: report.failures,
        seed: report.seed,
        recomputed_width: report.recomputed_width.as_ref().map(rational_string),
    };
    serde_json::to_string_pretty(&wire).expect("report serializes")
}

// ------------------------------------------------------------- scan tables

#[derive(Serialize)]
struct ScanEntryWire {
    v: Vec<i64>,
    z: i64,
    modulus: f64,
}

#[derive(Serialize)]
struct ScanWire {
    entries: Vec<ScanEntryWire>,
}

pub fn scan_to_json(entries: &[ScanEntry]) -> String {
    let wire = ScanWire {
        entries: entries
            .iter()
            .map(|e| ScanEntryWire {
                v: e.direction.components().to_vec(),
                z: e.multiple,
                modulus: e.modulus,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&wire).expect("scan serializes")
}
