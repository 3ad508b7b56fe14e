//! Cross-module flows: everything here exercises at least two modules
//! against each other, usually with a JSON round trip in the middle, the
//! way the CLI drives the library.

use num_rational::BigRational;
use proptest::prelude::*;

use tubecover::certifier::{
    delta_star, direction_search, grid_oracle, CertifyConfig, DirectionCertificate,
};
use tubecover::cover::{
    aggregated_width_bound, build_cover, required_level, CoverConfig, CoverMode,
};
use tubecover::digit_system::DigitSystem;
use tubecover::json;
use tubecover::projection::Direction;
use tubecover::reduction::{
    reduce_to_digit_system, CellIsometry, GdsEdge, GraphDirectedSystem, Reduction,
};
use tubecover::verify::{verify_containment, verify_sampling, verify_width};
use tubecover::Error;

fn v4() -> Vec<Direction> {
    [[1, 0], [0, 1], [1, 1], [1, -1]]
        .iter()
        .map(|c| Direction::new(c.to_vec()).unwrap())
        .collect()
}

fn certify(system: &DigitSystem) -> DirectionCertificate {
    delta_star(system, v4(), &CertifyConfig::default()).unwrap()
}

/// The full artifact chain with a serialization round trip between every
/// stage, as the CLI performs it: parsed artifacts must drive the next
/// stage to the same results as the in-memory originals.
#[test]
fn json_mediated_pipeline_matches_in_memory_pipeline() {
    let system = DigitSystem::sierpinski_carpet();
    let reparsed_system = json::system_from_json(&json::system_to_json(&system)).unwrap();
    assert_eq!(system, reparsed_system);

    let cert = certify(&system);
    let cert_text = json::certificate_to_json(&cert);
    let reparsed_cert = json::certificate_from_json(&cert_text).unwrap();
    assert_eq!(cert, reparsed_cert);

    let config = CoverConfig::default();
    let cover = build_cover(&system, &cert, 3, CoverMode::Exact, &config).unwrap();
    let cover_via_json =
        build_cover(&reparsed_system, &reparsed_cert, 3, CoverMode::Exact, &config).unwrap();
    assert_eq!(cover, cover_via_json);

    let cover_text = json::cover_to_json(&cover).unwrap();
    let reparsed_cover = json::cover_from_json(&cover_text).unwrap();
    assert_eq!(cover, reparsed_cover);
    assert_eq!(json::cover_to_json(&reparsed_cover).unwrap(), cover_text);

    assert!(verify_containment(&reparsed_cover).passed());
    assert!(verify_width(&reparsed_cover).passed());
    assert!(verify_sampling(&reparsed_cover, 2_000, 11, 7).passed());
}

/// The two-vertex reflection fixture, serialized and reparsed, reduces to a
/// digit system that survives the whole certify/cover/verify chain.
#[test]
fn reduced_system_from_serialized_gds_passes_the_pipeline() {
    let id = CellIsometry::identity(2);
    let flip_x = CellIsometry::new(vec![0, 1], vec![true, false]).unwrap();
    let gds = GraphDirectedSystem::new(
        2,
        3,
        2,
        vec![
            GdsEdge { from: 0, to: 1, digit: vec![0, 0], isometry: flip_x },
            GdsEdge { from: 1, to: 0, digit: vec![2, 2], isometry: id.clone() },
            GdsEdge { from: 0, to: 0, digit: vec![1, 1], isometry: id },
        ],
    )
    .unwrap();
    let reparsed = json::gds_from_json(&json::gds_to_json(&gds)).unwrap();
    assert_eq!(gds.edges(), reparsed.edges());

    let system = match reduce_to_digit_system(&reparsed, 3, 1_000_000).unwrap() {
        Reduction::Reduced { system, .. } => system,
        Reduction::Inconclusive { .. } => panic!("reflection fixture must reduce"),
    };
    let cert = certify(&system);
    assert!(cert.certified);

    let config = CoverConfig::default();
    let cover = build_cover(&system, &cert, 3, CoverMode::Exact, &config).unwrap();
    assert!(verify_containment(&cover).passed());
    assert!(verify_width(&cover).passed());
}

/// `required_level` returns the first level below epsilon: the bound at the
/// level before must still be at or above epsilon, and rebuilding a cover at
/// the returned level reproduces the same exact width.
#[test]
fn required_level_is_minimal_and_consistent_with_cover_builds() {
    let id = CellIsometry::identity(2);
    let flip_x = CellIsometry::new(vec![0, 1], vec![true, false]).unwrap();
    let gds = GraphDirectedSystem::new(
        2,
        3,
        2,
        vec![
            GdsEdge { from: 0, to: 1, digit: vec![0, 0], isometry: flip_x },
            GdsEdge { from: 1, to: 0, digit: vec![2, 2], isometry: id.clone() },
            GdsEdge { from: 0, to: 0, digit: vec![1, 1], isometry: id },
        ],
    )
    .unwrap();
    let system = match reduce_to_digit_system(&gds, 3, 1_000_000).unwrap() {
        Reduction::Reduced { system, .. } => system,
        Reduction::Inconclusive { .. } => panic!("reflection fixture must reduce"),
    };
    let cert = certify(&system);
    let config = CoverConfig::default();
    let half = BigRational::new(1.into(), 2.into());

    let (level, width) = required_level(&system, &cert, &half, &config).unwrap();
    assert!(width < half);
    let before = aggregated_width_bound(&system, &cert, level - 1, &config).unwrap();
    assert!(before >= half, "level {} already below epsilon", level - 1);

    let cover =
        build_cover(&system, &cert, level, CoverMode::Aggregated, &config).unwrap();
    assert_eq!(cover.total_width_bound, width);
}

/// Direction search without a user-provided set lands on a certified set for
/// both bundled systems, deterministically.
#[test]
fn direction_search_certifies_bundled_systems_deterministically() {
    for system in [DigitSystem::sierpinski_carpet(), DigitSystem::menger_sponge()] {
        let config = CertifyConfig::default();
        let a = direction_search(&system, 1, &config).unwrap();
        let b = direction_search(&system, 1, &config).unwrap();
        assert!(a.certified, "search must certify dim {}", system.dim());
        assert_eq!(a, b);
    }
}

/// Malformed documents come back as parse errors (the CLI's exit-2 class),
/// never panics, for every parser.
#[test]
fn malformed_documents_are_parse_errors() {
    let bad = [
        "",
        "42",
        "{\"d\": 2}",
        "{\"directions\": [[0, 0]]}",
        "{\"d\": \"two\", \"N\": 3, \"digits\": []}",
    ];
    for text in bad {
        assert!(matches!(json::system_from_json(text), Err(Error::Parse { .. })), "{text:?}");
        assert!(
            !matches!(json::directions_from_json(text), Ok(_)),
            "directions accepted {text:?}"
        );
        assert!(json::certificate_from_json(text).is_err());
        assert!(json::cover_from_json(text).is_err());
        assert!(json::gds_from_json(text).is_err());
    }
    // A cover whose width field is not a rational is a parse error, not a
    // verification failure.
    let system = DigitSystem::sierpinski_carpet();
    let cover =
        build_cover(&system, &certify(&system), 2, CoverMode::Exact, &CoverConfig::default())
            .unwrap();
    let text = json::cover_to_json(&cover).unwrap();
    let broken = text.replace(&cover.total_width_bound.to_string(), "not-a-ratio");
    assert!(matches!(json::cover_from_json(&broken), Err(Error::Parse { .. })));
}

fn arbitrary_proper_digit_set() -> impl Strategy<Value = DigitSystem> {
    // Proper nonempty subsets of the 3x3 grid with at least two digits, so
    // every system is a genuine restriction with a nontrivial attractor.
    (0u16..512)
        .prop_filter("at least two digits, at least one missing", |mask| {
            let ones = mask.count_ones();
            ones >= 2 && ones <= 8
        })
        .prop_map(|mask| {
            let digits: Vec<Vec<u32>> =
                (0..9).filter(|k| mask & (1 << k) != 0).map(|k| vec![k / 3, k % 3]).collect();
            DigitSystem::new(2, 3, digits).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, .. ProptestConfig::default() })]

    /// For any certified system, the certificate is honest (the grid oracle
    /// never beats it) and the exact cover it induces verifies cleanly.
    #[test]
    fn certified_random_systems_survive_oracle_and_verification(
        system in arbitrary_proper_digit_set()
    ) {
        let cert = certify(&system);
        if !cert.certified {
            return Ok(());
        }
        let oracle = grid_oracle(&system, &cert.directions, 6, 10_000, 1).unwrap();
        prop_assert!(oracle <= 1.0 - cert.delta_star + cert.optimality_gap + 1e-9);

        let cover = build_cover(
            &system, &cert, 3, CoverMode::Exact, &CoverConfig::default(),
        ).unwrap();
        prop_assert!(verify_containment(&cover).passed());
        prop_assert!(verify_width(&cover).passed());
    }

    /// Exact-mode slab counts can never exceed the aggregated bound, so the
    /// exact width total is dominated by the enumeration-free one.
    #[test]
    fn exact_width_never_exceeds_aggregated_bound(
        system in arbitrary_proper_digit_set(),
        level in 1u32..=4,
    ) {
        let cert = certify(&system);
        if !cert.certified {
            return Ok(());
        }
        let config = CoverConfig::default();
        let exact = build_cover(&system, &cert, level, CoverMode::Exact, &config).unwrap();
        let aggregated =
            build_cover(&system, &cert, level, CoverMode::Aggregated, &config).unwrap();
        for (e, a) in exact.per_direction.iter().zip(&aggregated.per_direction) {
            prop_assert!(e.slab_count <= a.slab_count, "direction {}", e.direction.label());
        }
        prop_assert!(exact.total_width_bound <= aggregated.total_width_bound);
        prop_assert!(exact.tube_count <= aggregated.tube_count);
    }
}
