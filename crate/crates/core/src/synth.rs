//! Synthetic event streams with known swings and impacts.
//!
//! The scene is rendered on a fixed time grid as a small set of brightness
//! levels (background, two racket texture levels, ball). Between two grid
//! steps every pixel whose level changed emits events with the sign of the
//! change, at uniform times inside the step. The racket is a textured band
//! between two concentric ellipses, so moving it makes the whole band fire
//! and a still racket is silent. On top of that the generator adds the
//! impact signature (each ball pixel fires `+` in the half contact before the
//! impact and `−` in the half after), optional flicker bursts, `+`/`−`
//! artifacts and uniform background noise. Every event carries a label.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contour::Ellipse;
use crate::event::{Event, EventStream, Polarity, SensorDims};
use crate::geometry::{position_from_relative, RelativePosition, TipSign};
use crate::ingest::{encode_binary, encode_csv, Format};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub width: u16,
    pub height: u16,
    /// Stream length, µs.
    pub duration: u64,
    /// Rendering time step, µs.
    #[serde(default = "default_step")]
    pub step: u64,
    #[serde(default)]
    pub racket: RacketShape,
    #[serde(default)]
    pub swings: Vec<SwingSpec>,
    #[serde(default)]
    pub flicker: Vec<FlickerSpec>,
    #[serde(default)]
    pub artifacts: Vec<ArtifactSpec>,
    /// Background noise, events/s over the whole sensor.
    #[serde(default)]
    pub noise_rate: f64,
    /// Events emitted per level change of a pixel.
    #[serde(default = "default_events_per_change")]
    pub events_per_change: u32,
    #[serde(default)]
    pub seed: u64,
}

fn default_step() -> u64 {
    25
}

fn default_events_per_change() -> u32 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RacketShape {
    /// Outer semi-axes of the frame, px.
    pub semi_major: f64,
    pub semi_minor: f64,
    /// Frame width, px. The string bed is the inner ellipse.
    pub thickness: f64,
    /// Stripe width of the texture painted on the frame, px.
    pub texture_cell: f64,
}

impl Default for RacketShape {
    fn default() -> Self {
        Self {
            semi_major: 110.0,
            semi_minor: 75.0,
            thickness: 12.0,
            texture_cell: 2.0,
        }
    }
}

/// Racket pose at one instant; poses between keyframes are interpolated
/// linearly and held constant outside them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Keyframe {
    pub t: u64,
    pub cx: f64,
    pub cy: f64,
    /// Major-axis rotation, rad. Not wrapped, so it interpolates smoothly.
    pub theta: f64,
    #[serde(default = "default_scale")]
    pub scale: f64,
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwingSpec {
    pub keyframes: Vec<Keyframe>,
    #[serde(default)]
    pub impact: Option<ImpactSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpactSpec {
    pub t: u64,
    pub u_pct: f64,
    pub v_pct: f64,
    #[serde(default)]
    pub ball: BallSpec,
    /// Defaults to the pipeline's convention for the racket pose at impact.
    #[serde(default)]
    pub tip_sign: Option<TipSign>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BallSpec {
    pub radius: f64,
    /// px/µs before contact.
    pub incoming_velocity: (f64, f64),
    /// px/µs after contact.
    pub outgoing_velocity: (f64, f64),
    /// Flight time drawn on each side of the contact, µs. 0 disables flight.
    pub travel_duration: u64,
    /// Contact time, µs, centered on the impact.
    pub contact_duration: u64,
}

impl Default for BallSpec {
    fn default() -> Self {
        Self {
            radius: 20.0,
            incoming_velocity: (-0.04, 0.01),
            outgoing_velocity: (0.03, -0.02),
            travel_duration: 0,
            contact_duration: 4000,
        }
    }
}

/// Alternating-polarity bursts inside a disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlickerSpec {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
    pub start: u64,
    pub duration: u64,
    #[serde(default = "default_flicker_period")]
    pub period: u64,
    pub events_per_cycle: u32,
}

fn default_flicker_period() -> u64 {
    100
}

/// A disk firing `+` during `half_duration` before `t` and `−` after it,
/// the same shape as an impact. Labeled as racket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArtifactSpec {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
    pub t: u64,
    pub half_duration: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Racket,
    Ball,
    Flicker,
    Noise,
}

impl Label {
    fn code(self) -> char {
        match self {
            Label::Racket => 'r',
            Label::Ball => 'b',
            Label::Flicker => 'f',
            Label::Noise => 'n',
        }
    }

    fn from_code(c: char) -> Option<Self> {
        match c {
            'r' => Some(Label::Racket),
            'b' => Some(Label::Ball),
            'f' => Some(Label::Flicker),
            'n' => Some(Label::Noise),
            _ => None,
        }
    }
}

/// Labels serialize as one character per event (`r`, `b`, `f`, `n`).
mod label_string {
    use super::Label;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(labels: &[Label], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&labels.iter().map(|l| l.code()).collect::<String>())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Label>, D::Error> {
        let s = String::deserialize(d)?;
        s.chars()
            .map(|c| Label::from_code(c).ok_or_else(|| D::Error::custom(format!("bad label {c:?}"))))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwingTruth {
    pub t_start: u64,
    pub t_end: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpactTruth {
    pub t_imp: u64,
    pub u_pct: f64,
    pub v_pct: f64,
    pub ball_center: (f64, f64),
    pub ball_radius: f64,
    /// String-bed ellipse at the impact time.
    pub racket: Ellipse<f64>,
    pub tip_sign: TipSign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub width: u16,
    pub height: u16,
    pub swings: Vec<SwingTruth>,
    pub impacts: Vec<ImpactTruth>,
    #[serde(with = "label_string")]
    pub labels: Vec<Label>,
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid scene: {0}")]
    InvalidSpec(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
}

fn invalid(msg: impl Into<String>) -> SynthError {
    SynthError::InvalidSpec(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Pose {
    cx: f64,
    cy: f64,
    theta: f64,
    scale: f64,
}

fn interpolate(keyframes: &[Keyframe], t: u64) -> Pose {
    let pose = |k: &Keyframe| Pose {
        cx: k.cx,
        cy: k.cy,
        theta: k.theta,
        scale: k.scale,
    };
    let first = &keyframes[0];
    if t <= first.t {
        return pose(first);
    }
    for w in keyframes.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if t <= b.t {
            if b.t == a.t {
                return pose(b);
            }
            let f = (t - a.t) as f64 / (b.t - a.t) as f64;
            let lerp = |x: f64, y: f64| x + (y - x) * f;
            return Pose {
                cx: lerp(a.cx, b.cx),
                cy: lerp(a.cy, b.cy),
                theta: lerp(a.theta, b.theta),
                scale: lerp(a.scale, b.scale),
            };
        }
    }
    pose(keyframes.last().expect("validated non-empty"))
}

impl SceneSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.width == 0 || self.height == 0 {
            return Err(invalid("sensor dimensions must be positive"));
        }
        if self.step == 0 {
            return Err(invalid("step must be positive"));
        }
        if self.events_per_change == 0 {
            return Err(invalid("events_per_change must be positive"));
        }
        if !(self.noise_rate >= 0.0) || !self.noise_rate.is_finite() {
            return Err(invalid("noise_rate must be a non-negative number"));
        }
        let r = &self.racket;
        if !(r.semi_minor > 0.0 && r.semi_major >= r.semi_minor) {
            return Err(invalid("racket needs semi_major >= semi_minor > 0"));
        }
        if !(r.thickness > 0.0 && r.thickness < r.semi_minor) {
            return Err(invalid("racket thickness must be in (0, semi_minor)"));
        }
        if !(r.texture_cell > 0.0) {
            return Err(invalid("texture_cell must be positive"));
        }
        let mut prev_start = None;
        for (i, s) in self.swings.iter().enumerate() {
            if s.keyframes.is_empty() {
                return Err(invalid(format!("swing {i} has no keyframes")));
            }
            if s.keyframes.windows(2).any(|w| w[1].t < w[0].t) {
                return Err(invalid(format!("swing {i} keyframes are not in time order")));
            }
            if s.keyframes.iter().any(|k| !(k.scale > 0.0)) {
                return Err(invalid(format!("swing {i} has a non-positive scale")));
            }
            let t0 = s.keyframes[0].t;
            if prev_start.is_some_and(|p| t0 < p) {
                return Err(invalid("swings must be listed in time order"));
            }
            prev_start = Some(t0);
            if let Some(imp) = &s.impact {
                let t1 = s.keyframes.last().expect("non-empty").t;
                if imp.t < t0 || imp.t > t1 {
                    return Err(invalid(format!(
                        "swing {i}: impact time {} outside swing interval [{t0}, {t1}]",
                        imp.t
                    )));
                }
                if imp.u_pct.abs() > 100.0 || imp.v_pct.abs() > 100.0 {
                    return Err(invalid(format!("swing {i}: |u|, |v| must not exceed 100")));
                }
                if !(imp.ball.radius > 0.0) {
                    return Err(invalid(format!("swing {i}: ball radius must be positive")));
                }
                if imp.ball.contact_duration < 2 {
                    return Err(invalid(format!("swing {i}: contact_duration must be at least 2")));
                }
            }
        }
        for f in &self.flicker {
            if f.period < 2 || !(f.radius > 0.0) {
                return Err(invalid("flicker needs period >= 2 and a positive radius"));
            }
        }
        for a in &self.artifacts {
            if a.half_duration == 0 || !(a.radius > 0.0) {
                return Err(invalid("artifacts need a positive radius and half_duration"));
            }
        }
        Ok(())
    }

    fn racket_pose(&self, t: u64) -> Option<Pose> {
        let idx = self
            .swings
            .iter()
            .rposition(|s| s.keyframes[0].t <= t)
            .unwrap_or(0);
        self.swings.get(idx).map(|s| interpolate(&s.keyframes, t))
    }

    fn outer_ellipse(&self, p: &Pose) -> Ellipse<f64> {
        let r = &self.racket;
        Ellipse::new(p.cx, p.cy, r.semi_major * p.scale, r.semi_minor * p.scale, p.theta)
    }

    fn inner_ellipse(&self, p: &Pose) -> Ellipse<f64> {
        let r = &self.racket;
        let th = r.thickness;
        Ellipse::new(
            p.cx,
            p.cy,
            (r.semi_major - th) * p.scale,
            (r.semi_minor - th) * p.scale,
            p.theta,
        )
    }
}

struct ResolvedImpact {
    truth: ImpactTruth,
    ball: BallSpec,
}

impl ResolvedImpact {
    fn half_contact(&self) -> (u64, u64) {
        let half = self.ball.contact_duration / 2;
        (self.truth.t_imp.saturating_sub(half), self.truth.t_imp + half)
    }

    /// Ball center while it is drawn: flying in, resting, flying out.
    fn ball_center(&self, t: u64) -> Option<(f64, f64)> {
        let travel = self.ball.travel_duration;
        if travel == 0 {
            return None;
        }
        let (arrive, depart) = self.half_contact();
        let (px, py) = self.truth.ball_center;
        if t + travel < arrive || t > depart + travel {
            return None;
        }
        if t < arrive {
            let dt = (arrive - t) as f64;
            let (vx, vy) = self.ball.incoming_velocity;
            Some((px - vx * dt, py - vy * dt))
        } else if t <= depart {
            Some((px, py))
        } else {
            let dt = (t - depart) as f64;
            let (vx, vy) = self.ball.outgoing_velocity;
            Some((px + vx * dt, py + vy * dt))
        }
    }
}

const LEVEL_DIM: u8 = 1;
// Stripe families at 60° steps, offset from the racket axes. A plain checker
// lines up with the pixel grid whenever the racket does, and then whole
// pixel columns switch in the same step.
const TEXTURE_DIRS: [(f64, f64); 3] = [
    (0.921_060_994, 0.389_418_342),
    (0.123_284_320, 0.992_371_390),
    (-0.797_776_674, 0.602_953_048),
];
const LEVEL_BRIGHT: u8 = 2;
const LEVEL_BALL: u8 = 3;

/// Brightness levels at the previous step and the one being drawn.
struct Canvas {
    width: usize,
    height: usize,
    level: Vec<u8>,
    lit: Vec<u32>,
    next: Vec<u8>,
    next_lit: Vec<u32>,
}

impl Canvas {
    fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            level: vec![0; width * height],
            lit: Vec::new(),
            next: vec![0; width * height],
            next_lit: Vec::new(),
        }
    }

    fn paint(&mut self, x: usize, y: usize, level: u8) {
        let p = y * self.width + x;
        if self.next[p] == 0 {
            self.next_lit.push(p as u32);
        }
        self.next[p] = self.next[p].max(level);
    }

    fn row_range(&self, e: &Ellipse<f64>) -> (usize, usize) {
        let (s, c) = e.theta.sin_cos();
        let half = (e.a * e.a * s * s + e.b * e.b * c * c).sqrt();
        let y0 = (e.cy - half).ceil().max(0.0);
        let y1 = (e.cy + half).floor().min(self.height as f64 - 1.0);
        if y1 < y0 {
            (1, 0)
        } else {
            (y0 as usize, y1 as usize)
        }
    }

    fn draw_racket(&mut self, outer: &Ellipse<f64>, inner: &Ellipse<f64>, cell: f64) {
        let oc = outer.to_conic();
        let ic = inner.to_conic();
        let (s, c) = outer.theta.sin_cos();
        let (y0, y1) = self.row_range(outer);
        for y in y0..=y1 {
            let Some((xa, xb)) = row_span(&oc, y as f64) else {
                continue;
            };
            let hole = row_span(&ic, y as f64);
            let xa = xa.ceil().max(0.0) as i64;
            let xb = xb.floor().min(self.width as f64 - 1.0) as i64;
            for x in xa..=xb {
                let xf = x as f64;
                if hole.is_some_and(|(ha, hb)| xf > ha && xf < hb) {
                    continue;
                }
                let (dx, dy) = (xf - outer.cx, y as f64 - outer.cy);
                let m = dx * c + dy * s;
                let n = -dx * s + dy * c;
                let parity = TEXTURE_DIRS
                    .iter()
                    .map(|&(dc, ds)| ((m * dc + n * ds) / cell).floor() as i64)
                    .sum::<i64>()
                    & 1;
                let level = if parity == 0 { LEVEL_DIM } else { LEVEL_BRIGHT };
                self.paint(x as usize, y, level);
            }
        }
    }

    fn draw_disk(&mut self, cx: f64, cy: f64, r: f64, level: u8) {
        for (x, y) in disk_pixels(cx, cy, r, self.width, self.height) {
            self.paint(x, y, level);
        }
    }

    /// Swaps in the drawn frame, emitting events for changes unless `silent`.
    fn commit(
        &mut self,
        t0: u64,
        t1: u64,
        per_change: u32,
        silent: bool,
        rng: &mut ChaCha8Rng,
        out: &mut Vec<(Event, Label)>,
    ) {
        let width = self.width;
        let mut emit = |p: usize, old: u8, new: u8, rng: &mut ChaCha8Rng| {
            if silent || old == new {
                return;
            }
            let polarity = if new > old {
                Polarity::Positive
            } else {
                Polarity::Negative
            };
            let label = if old == LEVEL_BALL || new == LEVEL_BALL {
                Label::Ball
            } else {
                Label::Racket
            };
            let (x, y) = ((p % width) as u16, (p / width) as u16);
            for _ in 0..per_change {
                let t = rng.gen_range(t0 + 1..=t1);
                out.push((Event::new(x, y, polarity, t), label));
            }
        };
        for &p in &self.next_lit {
            let p = p as usize;
            emit(p, self.level[p], self.next[p], rng);
        }
        for &p in &self.lit {
            let p = p as usize;
            if self.next[p] == 0 {
                emit(p, self.level[p], 0, rng);
            }
        }
        for &p in &self.lit {
            self.level[p as usize] = 0;
        }
        for &p in &self.next_lit {
            let p = p as usize;
            self.level[p] = self.next[p];
            self.next[p] = 0;
        }
        std::mem::swap(&mut self.lit, &mut self.next_lit);
        self.next_lit.clear();
    }
}

/// x-interval of the conic's interior on row `y`.
fn row_span(conic: &crate::contour::Conic<f64>, y: f64) -> Option<(f64, f64)> {
    let [a, b, c, d, e, f] = conic.0;
    let qb = b * y + d;
    let qc = c * y * y + e * y + f;
    let disc = qb * qb - 4.0 * a * qc;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let (x1, x2) = ((-qb - sq) / (2.0 * a), (-qb + sq) / (2.0 * a));
    Some((x1.min(x2), x1.max(x2)))
}

fn disk_pixels(cx: f64, cy: f64, r: f64, width: usize, height: usize) -> Vec<(usize, usize)> {
    let y0 = (cy - r).ceil().max(0.0) as i64;
    let y1 = (cy + r).floor().min(height as f64 - 1.0) as i64;
    let x0 = (cx - r).ceil().max(0.0) as i64;
    let x1 = (cx + r).floor().min(width as f64 - 1.0) as i64;
    let mut out = Vec::new();
    for y in y0..=y1 {
        for x in x0..=x1 {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            if dx * dx + dy * dy <= r * r {
                out.push((x as usize, y as usize));
            }
        }
    }
    out
}

/// One `+` before `t` and one `−` from `t` on, per disk pixel.
#[allow(clippy::too_many_arguments)]
fn signature(
    cx: f64,
    cy: f64,
    r: f64,
    t: u64,
    half: u64,
    dims: SensorDims,
    label: Label,
    rng: &mut ChaCha8Rng,
    out: &mut Vec<(Event, Label)>,
) {
    let start = t.saturating_sub(half);
    for (x, y) in disk_pixels(cx, cy, r, dims.width as usize, dims.height as usize) {
        let (x, y) = (x as u16, y as u16);
        if start < t {
            out.push((Event::new(x, y, Polarity::Positive, rng.gen_range(start..t)), label));
        }
        out.push((Event::new(x, y, Polarity::Negative, rng.gen_range(t..=t + half)), label));
    }
}

/// Renders `spec` into an ascending event stream and its ground truth.
pub fn generate(spec: &SceneSpec) -> Result<(EventStream, GroundTruth), SynthError> {
    spec.validate()?;
    let dims = SensorDims::new(spec.width, spec.height);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut events: Vec<(Event, Label)> = Vec::new();

    let mut impacts = Vec::new();
    for s in &spec.swings {
        if let Some(imp) = &s.impact {
            let pose = interpolate(&s.keyframes, imp.t);
            let racket = spec.inner_ellipse(&pose);
            let tip_sign = imp.tip_sign.unwrap_or_else(|| TipSign::default_for(&racket));
            let rel = RelativePosition {
                u_pct: imp.u_pct,
                v_pct: imp.v_pct,
            };
            impacts.push(ResolvedImpact {
                truth: ImpactTruth {
                    t_imp: imp.t,
                    u_pct: imp.u_pct,
                    v_pct: imp.v_pct,
                    ball_center: position_from_relative(rel, &racket, tip_sign),
                    ball_radius: imp.ball.radius,
                    racket,
                    tip_sign,
                },
                ball: imp.ball,
            });
        }
    }

    // Level-change rendering of racket and flying ball.
    let mut canvas = Canvas::new(spec.width as usize, spec.height as usize);
    let draw = |canvas: &mut Canvas, t: u64| {
        if let Some(pose) = spec.racket_pose(t) {
            canvas.draw_racket(
                &spec.outer_ellipse(&pose),
                &spec.inner_ellipse(&pose),
                spec.racket.texture_cell * pose.scale,
            );
        }
        for imp in &impacts {
            if let Some((bx, by)) = imp.ball_center(t) {
                canvas.draw_disk(bx, by, imp.truth.ball_radius, LEVEL_BALL);
            }
        }
    };
    let state = |t: u64| {
        (
            spec.racket_pose(t),
            impacts.iter().map(|imp| imp.ball_center(t)).collect::<Vec<_>>(),
        )
    };
    draw(&mut canvas, 0);
    canvas.commit(0, 0, 0, true, &mut rng, &mut events);
    let mut prev_state = state(0);
    let mut t0 = 0;
    while t0 < spec.duration {
        let t1 = (t0 + spec.step).min(spec.duration);
        let now = state(t1);
        if now != prev_state {
            draw(&mut canvas, t1);
            let from = events.len();
            canvas.commit(t0, t1, spec.events_per_change, false, &mut rng, &mut events);
            events[from..].sort_by_key(|(e, _)| e.t);
            prev_state = now;
        }
        t0 = t1;
    }

    for imp in &impacts {
        let half = imp.ball.contact_duration / 2;
        let (bx, by) = imp.truth.ball_center;
        signature(bx, by, imp.truth.ball_radius, imp.truth.t_imp, half, dims, Label::Ball, &mut rng, &mut events);
    }
    for a in &spec.artifacts {
        signature(a.cx, a.cy, a.radius, a.t, a.half_duration, dims, Label::Racket, &mut rng, &mut events);
    }
    for f in &spec.flicker {
        let pixels = disk_pixels(f.cx, f.cy, f.radius, dims.width as usize, dims.height as usize);
        if pixels.is_empty() {
            continue;
        }
        let half = f.period / 2;
        let mut c0 = f.start;
        while c0 < f.start + f.duration {
            for (polarity, from, to) in [
                (Polarity::Positive, c0, c0 + half),
                (Polarity::Negative, c0 + half, c0 + f.period),
            ] {
                for _ in 0..f.events_per_cycle / 2 {
                    let (x, y) = pixels[rng.gen_range(0..pixels.len())];
                    let t = rng.gen_range(from..to);
                    events.push((Event::new(x as u16, y as u16, polarity, t), Label::Flicker));
                }
            }
            c0 += f.period;
        }
    }
    if spec.noise_rate > 0.0 && spec.duration > 0 {
        let n = (spec.noise_rate * spec.duration as f64 * 1e-6).round() as u64;
        for _ in 0..n {
            let x = rng.gen_range(0..spec.width);
            let y = rng.gen_range(0..spec.height);
            let polarity = if rng.gen_bool(0.5) {
                Polarity::Positive
            } else {
                Polarity::Negative
            };
            let t = rng.gen_range(0..=spec.duration);
            events.push((Event::new(x, y, polarity, t), Label::Noise));
        }
    }

    events.sort_by_key(|(e, _)| e.t);
    let labels = events.iter().map(|(_, l)| *l).collect();
    let stream = EventStream::from_events(dims, events.into_iter().map(|(e, _)| e))
        .map_err(|e| invalid(format!("generated event rejected: {e}")))?;
    let truth = GroundTruth {
        width: spec.width,
        height: spec.height,
        swings: spec
            .swings
            .iter()
            .map(|s| SwingTruth {
                t_start: s.keyframes[0].t,
                t_end: s.keyframes.last().expect("non-empty").t,
            })
            .collect(),
        impacts: impacts.into_iter().map(|i| i.truth).collect(),
        labels,
    };
    Ok((stream, truth))
}

/// `<events path>.truth.json`.
pub fn truth_path(events_path: &Path) -> PathBuf {
    let mut name = events_path.as_os_str().to_owned();
    name.push(".truth.json");
    PathBuf::from(name)
}

/// Writes the events in `format` and the ground truth next to them.
pub fn write_scene(
    path: &Path,
    format: Format,
    stream: &EventStream,
    truth: &GroundTruth,
) -> Result<PathBuf, SynthError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| SynthError::Io { path, source }
    };
    let file = File::create(path).map_err(io(path))?;
    let mut w = BufWriter::new(file);
    match format {
        Format::Evts => encode_binary(stream, &mut w),
        Format::Csv => encode_csv(stream, &mut w),
    }
    .and_then(|_| w.flush())
    .map_err(io(path))?;

    let sidecar = truth_path(path);
    let file = File::create(&sidecar).map_err(io(&sidecar))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, truth).map_err(|source| SynthError::Json {
        path: sidecar.clone(),
        source,
    })?;
    w.flush().map_err(io(&sidecar))?;
    Ok(sidecar)
}

pub fn read_truth(path: &Path) -> Result<GroundTruth, SynthError> {
    let file = File::open(path).map_err(|source| SynthError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_reader(std::io::BufReader::new(file)).map_err(|source| SynthError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Ready-made scenes on a 640×480 sensor.
pub mod scenes {
    use super::*;

    pub const WIDTH: u16 = 640;
    pub const HEIGHT: u16 = 480;
    /// Rotation center of the swing arcs, below the frame.
    pub const PIVOT: (f64, f64) = (320.0, 580.0);
    pub const ARM: f64 = 320.0;

    /// Fraction of the swing path covered at time fraction `f`: speed rises
    /// linearly over the first `RAMP` of the swing, stays flat, then eases
    /// out over the last `EASE` with a half cosine.
    pub fn swing_progress(f: f64) -> f64 {
        const RAMP: f64 = 0.04;
        const EASE: f64 = 0.12;
        let f = f.clamp(0.0, 1.0);
        // Area under the unit-peak speed profile.
        let total = RAMP / 2.0 + (1.0 - RAMP - EASE) + EASE / 2.0;
        let covered = if f < RAMP {
            f * f / (2.0 * RAMP)
        } else if f < 1.0 - EASE {
            RAMP / 2.0 + (f - RAMP)
        } else {
            let x = (f - (1.0 - EASE)) / EASE;
            let tail = EASE * (x + (std::f64::consts::PI * x).sin() / std::f64::consts::PI) / 2.0;
            RAMP / 2.0 + (1.0 - RAMP - EASE) + tail
        };
        covered / total
    }

    /// Keyframes of a racket swept along a circle around `pivot`, major axis
    /// pointing away from it, angle going from `phi0` to `phi1` with the
    /// [`swing_progress`] speed profile.
    pub fn arc_keyframes(
        pivot: (f64, f64),
        arm: f64,
        phi0: f64,
        phi1: f64,
        t0: u64,
        t1: u64,
        segments: usize,
    ) -> Vec<Keyframe> {
        (0..=segments)
            .map(|i| {
                let f = i as f64 / segments as f64;
                let phi = phi0 + (phi1 - phi0) * swing_progress(f);
                Keyframe {
                    t: t0 + ((t1 - t0) as f64 * f).round() as u64,
                    cx: pivot.0 + arm * phi.sin(),
                    cy: pivot.1 - arm * phi.cos(),
                    theta: phi + std::f64::consts::FRAC_PI_2,
                    scale: 1.0,
                }
            })
            .collect()
    }

    fn base(duration: u64, seed: u64) -> SceneSpec {
        SceneSpec {
            width: WIDTH,
            height: HEIGHT,
            duration,
            step: default_step(),
            racket: RacketShape::default(),
            swings: Vec::new(),
            flicker: Vec::new(),
            artifacts: Vec::new(),
            noise_rate: 2e5,
            events_per_change: 1,
            seed,
        }
    }

    /// One swing from `phi0` to `phi1` over `[t0, t1]` with an impact.
    pub fn swing(phi0: f64, phi1: f64, t0: u64, t1: u64, t_imp: u64, u_pct: f64, v_pct: f64) -> SwingSpec {
        SwingSpec {
            keyframes: arc_keyframes(PIVOT, ARM, phi0, phi1, t0, t1, 240),
            impact: Some(ImpactSpec {
                t: t_imp,
                u_pct,
                v_pct,
                ball: BallSpec::default(),
                tip_sign: None,
            }),
        }
    }

    /// A single clean swing; the impact lands at `(u, v)` halfway through.
    pub fn single_swing(seed: u64, u_pct: f64, v_pct: f64) -> SceneSpec {
        let mut spec = base(200_000, seed);
        spec.swings.push(swing(-0.5, 0.5, 30_000, 160_000, 90_000, u_pct, v_pct));
        spec
    }

    /// A clean swing with the impact time, position and arc drawn from `seed`.
    pub fn random_clean(seed: u64) -> SceneSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed);
        let mut spec = base(200_000, seed);
        let span = rng.gen_range(0.8..1.1);
        let offset = rng.gen_range(-0.05..0.05);
        let (phi0, phi1) = if rng.gen_bool(0.5) {
            (offset - span / 2.0, offset + span / 2.0)
        } else {
            (offset + span / 2.0, offset - span / 2.0)
        };
        let t_imp = rng.gen_range(85_000..105_000);
        let u = rng.gen_range(-40.0..40.0);
        let v = rng.gen_range(-40.0..40.0);
        spec.swings.push(swing(phi0, phi1, 30_000, 160_000, t_imp, u, v));
        spec
    }

    /// Three swings alternating direction, about a second long.
    pub fn rally(seed: u64) -> SceneSpec {
        let mut spec = base(1_000_000, seed);
        spec.swings = vec![
            swing(-0.5, 0.5, 50_000, 170_000, 105_000, 20.0, 10.0),
            swing(0.5, -0.5, 400_000, 520_000, 468_000, -25.0, 30.0),
            swing(-0.5, 0.5, 750_000, 870_000, 812_000, 5.0, -20.0),
        ];
        spec
    }

    /// A single swing with a dense flicker burst on the string bed 12 ms
    /// before the impact.
    pub fn flicker(seed: u64) -> SceneSpec {
        let mut spec = single_swing(seed, 35.0, 35.0);
        let pose = interpolate(&spec.swings[0].keyframes, 78_000);
        spec.flicker.push(FlickerSpec {
            cx: pose.cx,
            cy: pose.cy,
            radius: 55.0,
            start: 78_050,
            duration: 3000,
            period: 100,
            events_per_cycle: 16_000,
        });
        spec
    }

    /// A single swing with a strong `+`/`−` blob in a frame corner early in
    /// the swing.
    pub fn corner_artifact(seed: u64) -> SceneSpec {
        let mut spec = single_swing(seed, 15.0, -10.0);
        spec.artifacts.push(ArtifactSpec {
            cx: 70.0,
            cy: 60.0,
            radius: 28.0,
            t: 45_000,
            half_duration: 2000,
        });
        spec
    }

    /// A single swing whose impact is buried in flicker covering the whole
    /// racket head.
    pub fn flicker_over_impact(seed: u64) -> SceneSpec {
        let mut spec = single_swing(seed, 20.0, 20.0);
        let pose = interpolate(&spec.swings[0].keyframes, 90_000);
        spec.flicker.push(FlickerSpec {
            cx: pose.cx,
            cy: pose.cy,
            radius: 140.0,
            start: 85_000,
            duration: 10_000,
            period: 100,
            events_per_cycle: 40_000,
        });
        spec
    }

    /// Background noise only.
    pub fn noise_only(seed: u64) -> SceneSpec {
        base(300_000, seed)
    }
}
