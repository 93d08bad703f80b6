//! SVG of impact positions on a normalized racket face.
//!
//! The face is drawn with semi-axes proportional to the mean racket ellipse
//! of the results; `+v` (tip) points up and `+u` points left, so the picture
//! looks like the racket seen with its tip at the top. Each impact is a
//! circle a quarter of the ball diameter across.

use std::fmt::Write;

use crate::locate::ImpactResult;

const HALF_HEIGHT: f64 = 200.0;
const MARGIN: f64 = 20.0;
// Used when no result carries a racket.
const DEFAULT_ASPECT: f64 = 63.0 / 98.0;
const DEFAULT_BALL_RATIO: f64 = 0.2;

pub fn render_svg(results: &[ImpactResult]) -> String {
    let rackets: Vec<_> = results.iter().filter_map(|r| r.racket).collect();
    let aspect = if rackets.is_empty() {
        DEFAULT_ASPECT
    } else {
        rackets.iter().map(|e| e.b / e.a).sum::<f64>() / rackets.len() as f64
    };
    let (ry, rx) = (HALF_HEIGHT, HALF_HEIGHT * aspect);
    let (w, h) = (2.0 * (rx + MARGIN), 2.0 * (ry + MARGIN));
    let (cx, cy) = (w / 2.0, h / 2.0);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.1}" height="{h:.1}" viewBox="0 0 {w:.1} {h:.1}">"#
    );
    let _ = writeln!(
        svg,
        r##"<ellipse cx="{cx:.3}" cy="{cy:.3}" rx="{rx:.3}" ry="{ry:.3}" fill="none" stroke="#888" stroke-width="2"/>"##
    );
    let _ = writeln!(
        svg,
        r##"<line x1="{cx:.3}" y1="{:.3}" x2="{cx:.3}" y2="{:.3}" stroke="#ccc"/>"##,
        cy - ry,
        cy + ry
    );
    let _ = writeln!(
        svg,
        r##"<line x1="{:.3}" y1="{cy:.3}" x2="{:.3}" y2="{cy:.3}" stroke="#ccc"/>"##,
        cx - rx,
        cx + rx
    );
    for r in results {
        let (Some(u), Some(v)) = (r.u_pct, r.v_pct) else {
            continue;
        };
        let ball_ratio = match (r.ball, r.racket) {
            (Some(ball), Some(racket)) => (ball.a + ball.b) / 2.0 / racket.a,
            _ => DEFAULT_BALL_RATIO,
        };
        let x = cx - u / 100.0 * rx;
        let y = cy - v / 100.0 * ry;
        let radius = ball_ratio * ry / 4.0;
        let _ = writeln!(
            svg,
            r#"<circle cx="{x:.3}" cy="{y:.3}" r="{radius:.3}" fill="black"/>"#
        );
    }
    svg.push_str("</svg>\n");
    svg
}
