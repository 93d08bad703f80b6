//! The three-step pipeline: swings, impact time, then ball position.

use std::time::Instant;

use impact_core::contour::{find_contours, ContourResult, Ellipse};
use impact_core::geometry::{relative_position, TipSign};
use impact_core::pats::{find_impact, ImpactCandidate, ImpactDetection};
use impact_core::swing::{find_swings, SwingError, SwingRange};
use impact_core::EventStream;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Impact,
    Contour,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageError {
    pub stage: Stage,
    pub message: String,
}

/// Wall-clock milliseconds per stage. `swing` is shared by all swings of
/// one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub swing_ms: f64,
    pub impact_ms: f64,
    pub contour_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactResult {
    pub swing: SwingRange,
    pub t_imp: Option<u64>,
    pub ball: Option<Ellipse<f64>>,
    pub racket: Option<Ellipse<f64>>,
    pub u_pct: Option<f64>,
    pub v_pct: Option<f64>,
    /// `+1` or `−1`: which major-axis end was taken as the tip.
    pub tip_sign: Option<i8>,
    pub error: Option<StageError>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<StageTimings>,
}

impl ImpactResult {
    fn empty(swing: SwingRange) -> Self {
        Self {
            swing,
            t_imp: None,
            ball: None,
            racket: None,
            u_pct: None,
            v_pct: None,
            tip_sign: None,
            error: None,
            timings: None,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocateReport {
    pub results: Vec<ImpactResult>,
}

impl LocateReport {
    pub fn has_failures(&self) -> bool {
        self.results.iter().any(|r| !r.is_complete())
    }
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Impact time, contours and uv position for one swing. Failures are kept
/// in the result rather than returned.
pub fn locate_swing(stream: &EventStream, swing: SwingRange, cfg: &PipelineConfig) -> ImpactResult {
    let mut result = ImpactResult::empty(swing);
    let mut timings = StageTimings {
        swing_ms: 0.0,
        impact_ms: 0.0,
        contour_ms: 0.0,
    };

    let start = Instant::now();
    let detection = find_impact::<f64>(stream, &swing, &cfg.impact);
    timings.impact_ms = ms(start);
    let t_imp = match detection {
        Ok((d, _)) => d.t_imp,
        Err(e) => {
            log::warn!("swing {}..{}: {e}", swing.t_start, swing.t_end);
            result.error = Some(StageError {
                stage: Stage::Impact,
                message: e.to_string(),
            });
            result.timings = Some(timings);
            return result;
        }
    };
    result.t_imp = Some(t_imp);

    let start = Instant::now();
    let c = contour_stage(stream, t_imp, cfg);
    timings.contour_ms = ms(start);
    result.timings = Some(timings);
    result.racket = c.racket;
    result.ball = c.ball;
    result.u_pct = c.u_pct;
    result.v_pct = c.v_pct;
    result.tip_sign = c.tip_sign;
    if let Some(message) = c.error {
        log::warn!("t_imp {t_imp}: {message}");
        result.error = Some(StageError {
            stage: Stage::Contour,
            message,
        });
    }
    result
}

/// Runs every swing in parallel; results keep swing order.
pub fn locate(stream: &EventStream, cfg: &PipelineConfig) -> Result<LocateReport, SwingError> {
    let start = Instant::now();
    let swings = find_swings::<f64>(stream, &cfg.swing)?;
    let swing_ms = ms(start);
    log::info!("{} swing(s) in {swing_ms:.1} ms", swings.len());

    let mut results: Vec<ImpactResult> = swings
        .par_iter()
        .map(|&s| locate_swing(stream, s, cfg))
        .collect();
    for r in &mut results {
        if cfg.output.timings {
            if let Some(t) = r.timings.as_mut() {
                t.swing_ms = swing_ms;
            }
        } else {
            r.timings = None;
        }
    }
    Ok(LocateReport { results })
}

/// Output of the `impact` stage for one range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactStage {
    pub swing: SwingRange,
    pub t_imp: Option<u64>,
    pub candidates: Vec<ImpactCandidate<f64>>,
    pub error: Option<String>,
}

pub fn impact_stage(stream: &EventStream, swing: SwingRange, cfg: &PipelineConfig) -> ImpactStage {
    match find_impact::<f64>(stream, &swing, &cfg.impact) {
        Ok((ImpactDetection { t_imp, candidates, .. }, _)) => ImpactStage {
            swing,
            t_imp: Some(t_imp),
            candidates,
            error: None,
        },
        Err(e) => ImpactStage {
            swing,
            t_imp: None,
            candidates: Vec::new(),
            error: Some(e.to_string()),
        },
    }
}

/// Output of the `contours` stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourStage {
    pub t_imp: u64,
    pub racket: Option<Ellipse<f64>>,
    pub ball: Option<Ellipse<f64>>,
    pub u_pct: Option<f64>,
    pub v_pct: Option<f64>,
    pub tip_sign: Option<i8>,
    pub error: Option<String>,
}

pub fn contour_stage(stream: &EventStream, t_imp: u64, cfg: &PipelineConfig) -> ContourStage {
    let mut out = ContourStage {
        t_imp,
        racket: None,
        ball: None,
        u_pct: None,
        v_pct: None,
        tip_sign: None,
        error: None,
    };
    match find_contours::<f64>(stream, t_imp, &cfg.contour) {
        Ok(ContourResult { racket, ball }) => {
            let tip = cfg
                .tip()
                .ok()
                .flatten()
                .unwrap_or_else(|| TipSign::default_for(&racket.ellipse));
            let rel = relative_position((ball.ellipse.cx, ball.ellipse.cy), &racket.ellipse, tip);
            out.racket = Some(racket.ellipse);
            out.ball = Some(ball.ellipse);
            out.u_pct = Some(rel.u_pct);
            out.v_pct = Some(rel.v_pct);
            out.tip_sign = Some(tip.value::<f64>() as i8);
        }
        Err(e) => out.error = Some(e.to_string()),
    }
    out
}
