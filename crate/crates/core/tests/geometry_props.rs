use impact_core::contour::{detect_ellipses, fit_ellipse, BinaryImage, ContourParams, Ellipse};
use impact_core::geometry::{position_from_relative, relative_position, RelativePosition, TipSign};
use impact_core::Grid;
use proptest::prelude::*;
use std::f64::consts::PI;

fn arb_ellipse() -> impl Strategy<Value = Ellipse<f64>> {
    (-500.0..500.0f64, -500.0..500.0f64, 5.0..200.0f64, 0.2..1.0f64, 0.0..PI)
        .prop_map(|(cx, cy, a, ratio, theta)| Ellipse::new(cx, cy, a, a * ratio, theta))
}

fn arb_tip() -> impl Strategy<Value = TipSign> {
    prop_oneof![Just(TipSign::Plus), Just(TipSign::Minus)]
}

fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

/// Filled ellipse rasterized by center sampling.
fn raster(e: &Ellipse<f64>, w: usize, h: usize) -> BinaryImage {
    let mut img = Grid::filled(w, h, 0u8);
    for y in 0..h {
        for x in 0..w {
            if e.normalized_radius_sq(x as f64, y as f64) <= 1.0 {
                img.set(x, y, 1);
            }
        }
    }
    img
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn relative_position_round_trips(
        racket in arb_ellipse(),
        tip in arb_tip(),
        u in -150.0..150.0f64,
        v in -150.0..150.0f64,
    ) {
        let p = position_from_relative(RelativePosition { u_pct: u, v_pct: v }, &racket, tip);
        let rel = relative_position(p, &racket, tip);
        prop_assert!((rel.u_pct - u).abs() < 1e-9 && (rel.v_pct - v).abs() < 1e-9);
        let back = position_from_relative(rel, &racket, tip);
        prop_assert!((back.0 - p.0).abs() < 1e-9 && (back.1 - p.1).abs() < 1e-9);
    }

    #[test]
    fn relative_position_ignores_rigid_motion(
        racket in arb_ellipse(),
        tip in arb_tip(),
        ball in (-100.0..100.0f64, -100.0..100.0f64),
        shift in (-300.0..300.0f64, -300.0..300.0f64),
        turn in -PI..PI,
    ) {
        let ball = (racket.cx + ball.0, racket.cy + ball.1);
        let rel = relative_position(ball, &racket, tip);
        // Rotate ball and racket about the racket center, then translate both.
        let (s, c) = turn.sin_cos();
        let (dx, dy) = (ball.0 - racket.cx, ball.1 - racket.cy);
        let moved_ball = (
            racket.cx + c * dx - s * dy + shift.0,
            racket.cy + s * dx + c * dy + shift.1,
        );
        let mut moved = racket.translated(shift.0, shift.1);
        moved.theta += turn;
        // theta is left unwrapped so the tip turns with the racket.
        let rel2 = relative_position(moved_ball, &moved, tip);
        prop_assert!((rel.u_pct - rel2.u_pct).abs() < 1e-7);
        prop_assert!((rel.v_pct - rel2.v_pct).abs() < 1e-7);
    }

    #[test]
    fn boundary_maps_to_radius_hundred(racket in arb_ellipse(), tip in arb_tip(), phi in 0.0..(2.0 * PI)) {
        let rel = relative_position(racket.point_at(phi), &racket, tip);
        prop_assert!((rel.u_pct.powi(2) + rel.v_pct.powi(2) - 1e4).abs() < 1e-6);
    }

    #[test]
    fn fit_recovers_exact_samples(e in arb_ellipse(), n in 12usize..200, phase in 0.0..1.0f64) {
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|k| e.point_at(2.0 * PI * (k as f64 + phase) / n as f64))
            .collect();
        let (_, fit) = fit_ellipse(&pts).unwrap();
        prop_assert!((fit.cx - e.cx).abs() < 1e-6 && (fit.cy - e.cy).abs() < 1e-6);
        prop_assert!((fit.a - e.a).abs() < 1e-6 && (fit.b - e.b).abs() < 1e-6);
        if e.a / e.b > 1.01 {
            prop_assert!(angle_diff(fit.theta, e.theta) < 1e-6);
        }
    }

    #[test]
    fn detection_is_translation_equivariant(
        a in 10.0..30.0f64,
        ratio in 0.4..1.0f64,
        theta in 0.0..PI,
        dx in 0usize..20,
        dy in 0usize..20,
    ) {
        let e = Ellipse::new(35.0, 35.0, a, a * ratio, theta);
        let params = ContourParams { min_contour_points: 6, min_semi_minor: 1.0, ..ContourParams::default() };
        let base = detect_ellipses::<f64>(&raster(&e, 90, 90), &params);
        let shifted = detect_ellipses::<f64>(&raster(&e.translated(dx as f64, dy as f64), 90, 90), &params);
        // Rasterizing a shifted ellipse at integer offsets gives the same pixels shifted.
        prop_assert_eq!(base.len(), shifted.len());
        for (p, q) in base.iter().zip(&shifted) {
            prop_assert!((q.ellipse.cx - p.ellipse.cx - dx as f64).abs() < 1e-6);
            prop_assert!((q.ellipse.cy - p.ellipse.cy - dy as f64).abs() < 1e-6);
            prop_assert!((q.ellipse.a - p.ellipse.a).abs() < 1e-6);
        }
    }
}

#[test]
fn axis_aligned_samples_fit_within_tolerance() {
    let e = Ellipse::new(320.0, 240.0, 100.0, 40.0, 0.0);
    let pts: Vec<(f64, f64)> = (0..360)
        .map(|k| {
            let (x, y) = e.point_at((k as f64).to_radians());
            (x.round(), y.round())
        })
        .collect();
    let (_, fit) = fit_ellipse(&pts).unwrap();
    assert!((fit.cx - 320.0).abs() < 1.0 && (fit.cy - 240.0).abs() < 1.0);
    assert!((fit.a - 100.0).abs() < 1.0 && (fit.b - 40.0).abs() < 1.0);
    assert!(angle_diff(fit.theta, 0.0) < 0.02);
}

#[test]
fn filled_disk_boundary_fits_its_radius() {
    let e = Ellipse::new(50.0, 50.0, 30.0, 30.0, 0.0);
    let found = detect_ellipses::<f64>(&raster(&e, 100, 100), &ContourParams::default());
    assert_eq!(found.len(), 1);
    let fit = found[0].ellipse;
    assert!((fit.cx - 50.0).abs() < 0.1 && (fit.cy - 50.0).abs() < 0.1);
    // Border pixels sit half a pixel inside the continuous edge.
    assert!((fit.a - 29.5).abs() < 1.0);
}
