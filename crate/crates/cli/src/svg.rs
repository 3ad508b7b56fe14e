//! Planar cover rendering: the unit square, the level-n cylinder cubes, and
//! one translucent rotated rectangle per slab, colored by direction.

use num_traits::ToPrimitive;

use tubecover::cover::{slab_interval, CoverCertificate, CoverMode};
use tubecover::digit_system::{cylinder_cube, Word};

/// Rendering knobs. The output contract is fixed: exactly
/// `2 + cylinder count + slab count` rectangle elements (2 is the chrome:
/// canvas background and unit-square frame), so tests can count shapes
/// against the certificate.
pub struct RenderSpec {
    /// Canvas side in pixels; values below 64 are clamped up to 64.
    pub canvas: u32,
    /// Draw the level-n cylinder outlines (skipped automatically when the
    /// system has more than `cylinder_cap` words at this level).
    pub show_cylinders: bool,
    /// Most cylinders worth drawing before the outlines become solid ink.
    pub cylinder_cap: u128,
    /// Cylinder outline width in pixels.
    pub stroke: f64,
    /// Slab fill opacity.
    pub slab_opacity: f64,
}

impl Default for RenderSpec {
    fn default() -> Self {
        RenderSpec {
            canvas: 800,
            show_cylinders: true,
            cylinder_cap: 20_000,
            stroke: 0.6,
            slab_opacity: 0.25,
        }
    }
}

const PALETTE: [&str; 8] = [
    "#e41a1c", "#377eb8", "#4daf4a", "#984ea3", "#ff7f00", "#a65628", "#f781bf", "#666666",
];

/// Renders an exact-mode planar cover. The caller guarantees `d = 2` and
/// exact mode; anything else is a programming error here, not a user error.
pub fn render(cover: &CoverCertificate, spec: &RenderSpec) -> String {
    assert_eq!(cover.system.dim(), 2, "rendering is planar only");
    assert_eq!(cover.mode, CoverMode::Exact, "rendering needs position lists");

    let c = f64::from(spec.canvas.max(64));
    let margin = c * 0.05;
    let side = c - 2.0 * margin;
    // Unit square coordinates to pixels, with the y axis flipped.
    let px = |x: f64| margin + x * side;
    let py = |y: f64| margin + (1.0 - y) * side;

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{c}\" height=\"{c}\" \
         viewBox=\"0 0 {c} {c}\">\n"
    ));
    out.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{c}\" height=\"{c}\" fill=\"#ffffff\"/>\n"
    ));
    out.push_str(&format!(
        "<rect x=\"{:.3}\" y=\"{:.3}\" width=\"{side:.3}\" height=\"{side:.3}\" \
         fill=\"none\" stroke=\"#222222\" stroke-width=\"1\"/>\n",
        px(0.0),
        py(1.0),
    ));

    let system = &cover.system;
    let words = system.word_count(cover.level);
    if spec.show_cylinders && words.is_some_and(|w| w <= spec.cylinder_cap) {
        let n = cover.level as usize;
        let m = system.digit_count();
        let mut symbols = vec![0usize; n];
        loop {
            let word = Word::new(system, symbols.clone()).expect("odometer stays in range");
            let cube = cylinder_cube(system, &word);
            let x = cube.corner[0].to_f64().expect("unit cube coordinate");
            let y = cube.corner[1].to_f64().expect("unit cube coordinate");
            let s = cube.side.to_f64().expect("unit cube side");
            out.push_str(&format!(
                "<rect x=\"{:.3}\" y=\"{:.3}\" width=\"{:.3}\" height=\"{:.3}\" \
                 fill=\"none\" stroke=\"#555555\" stroke-width=\"{}\"/>\n",
                px(x),
                py(y + s),
                s * side,
                s * side,
                spec.stroke,
            ));
            // Odometer increment over the digit alphabet.
            let mut k = n;
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                symbols[k] += 1;
                if symbols[k] < m {
                    break;
                }
                symbols[k] = 0;
            }
            if symbols.iter().all(|&s| s == 0) {
                break;
            }
        }
    }

    for (v, entry) in cover.per_direction.iter().enumerate() {
        let color = PALETTE[v % PALETTE.len()];
        let comps = entry.direction.components();
        let (a, b) = (comps[0] as f64, comps[1] as f64);
        let norm = entry.direction.l2_norm();
        // Line direction (perpendicular to v), in pixel coordinates.
        let (tx, ty) = (-b / norm, a / norm);
        let angle = (-ty).atan2(tx).to_degrees();
        let positions = entry.positions.as_ref().expect("exact mode has positions");
        for q in positions {
            let (lo, hi) = slab_interval(system, &entry.direction, cover.level, q)
                .expect("certificate directions are valid");
            let lo = lo.to_f64().expect("interval endpoint");
            let hi = hi.to_f64().expect("interval endpoint");
            let mid = 0.5 * (lo + hi);
            // Center of the strip: the point t * v/|v| with t = mid / |v|.
            let cx = px(a * mid / (norm * norm));
            let cy = py(b * mid / (norm * norm));
            let thickness = (hi - lo) / norm * side;
            let length = 4.5 * side;
            out.push_str(&format!(
                "<rect x=\"{:.3}\" y=\"{:.3}\" width=\"{length:.3}\" height=\"{:.3}\" \
                 fill=\"{color}\" fill-opacity=\"{}\" \
                 transform=\"rotate({angle:.4} {cx:.3} {cy:.3})\"/>\n",
                cx - length / 2.0,
                cy - thickness / 2.0,
                thickness,
                spec.slab_opacity,
            ));
        }
    }

    out.push_str("</svg>\n");
    out
}
