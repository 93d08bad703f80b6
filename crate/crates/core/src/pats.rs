//! Impact timing from polarity asymmetry in time symmetry (PATS).
//!
//! At impact a bright ball lands on the strings and leaves again, so the
//! pixels it covers switch from `+` to `−` around the contact instant. For a
//! reference time `t` the packet around `t` is split into the events before
//! and after `t`; the later half is reversed so both halves are read "away
//! from" `t`. Each half yields an event image and a time surface, the surface
//! is reshaped by a focal-time pattern, and the PATS image is the cell-wise
//! product
//!
//! ```text
//! |F_prev⁺ ⊙ G_prev| ⊙ |F_next⁻ ⊙ G_next|
//! ```
//!
//! whose sum `ρ_t` peaks at impact. The impact time is the most negative
//! second difference of the `ρ_t` series, optionally disambiguated among a
//! few candidates by how close their PATS-image centroid is to the frame
//! center.
//!
//! `*` between the two same-sized images is read as a cell-wise product.
//! Reading it as a spatial convolution is possible but not implemented.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::{
    normalized_time, packet_at, polarity_mask, EventStream, Polarity, SensorDims, TimeSurface,
};
use crate::grid::Grid;
use crate::scalar::Real;
use crate::swing::{reference_times, SwingRange};

/// Focal-time functions mapping a normalized surface value to a weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FocalPattern {
    /// Constant 1: behaves like a plain event image.
    Uniform,
    /// Identity: behaves like a time surface.
    Linear,
    /// Peaks at the middle of each half window, 0 at both ends.
    #[default]
    Triangular,
}

impl FocalPattern {
    #[inline]
    pub fn ratio<T: Real>(self, s: T) -> T {
        match self {
            FocalPattern::Uniform => T::one(),
            FocalPattern::Linear => s,
            FocalPattern::Triangular => {
                let two = T::lit(2.0);
                if s <= T::lit(0.5) {
                    two * s
                } else {
                    two * (T::one() - s)
                }
            }
        }
    }
}

impl std::str::FromStr for FocalPattern {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(FocalPattern::Uniform),
            "linear" => Ok(FocalPattern::Linear),
            "triangular" => Ok(FocalPattern::Triangular),
            other => Err(format!(
                "unknown focal pattern {other:?} (expected uniform, linear or triangular)"
            )),
        }
    }
}

/// Time surface reshaped by a focal pattern; empty cells become 0.
pub type FocalImage<T> = Grid<T>;

/// Per-pixel PATS contributions.
pub type PatsImage<T> = Grid<T>;

pub fn focal_time<T: Real>(surface: &TimeSurface<T>, pattern: FocalPattern) -> FocalImage<T> {
    surface.map(|cell| cell.map_or(T::zero(), |s| pattern.ratio(s)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Deserialize<'de>"))]
pub struct PatsPoint<T> {
    pub t: u64,
    pub rho: T,
    /// Intensity-weighted centroid `(x, y)` of the PATS image; `None` when
    /// the image is all zero.
    pub centroid: Option<(T, T)>,
    #[serde(skip)]
    pub image: Option<PatsImage<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct ImpactParams<T> {
    pub t_acc: u64,
    pub t_strd: u64,
    /// Number of Laplacian peaks considered as impact candidates.
    pub n_c: usize,
    pub pattern: FocalPattern,
    /// Point the candidate centroids are compared against; the sensor center
    /// when unset.
    pub center: Option<(T, T)>,
}

impl<T: Real> Default for ImpactParams<T> {
    fn default() -> Self {
        Self {
            t_acc: 4000,
            t_strd: 500,
            n_c: 3,
            pattern: FocalPattern::Triangular,
            center: None,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ImpactError {
    #[error("need at least 3 PATS points, got {0}")]
    TooFewPoints(usize),
    #[error("no impact: the PATS series carries no signal or the range is empty")]
    NoImpact,
    #[error("invalid impact parameter: {0}")]
    InvalidParams(&'static str),
}

impl<T: Real> ImpactParams<T> {
    pub fn validate(&self) -> Result<(), ImpactError> {
        if self.t_acc == 0 {
            return Err(ImpactError::InvalidParams("t_acc must be positive"));
        }
        if self.t_strd == 0 {
            return Err(ImpactError::InvalidParams("t_strd must be positive"));
        }
        if self.n_c == 0 {
            return Err(ImpactError::InvalidParams("n_c must be at least 1"));
        }
        Ok(())
    }
}

/// Dense PATS image at `t`, built step by step from the packet operations.
///
/// This is the reference path; [`PatsScratch`] computes the same values
/// touching only pixels that carry events.
pub fn pats_image<T: Real>(
    stream: &EventStream,
    t: u64,
    t_acc: u64,
    pattern: FocalPattern,
) -> (T, PatsImage<T>) {
    let packet = packet_at(stream, t, t_acc);
    let (prev, next) = packet.split_at(t);
    let next = next.reverse();

    let f_prev = polarity_mask(&prev.to_event_image(), Polarity::Positive);
    let f_next = polarity_mask(&next.to_event_image(), Polarity::Negative);
    let g_prev = focal_time(&prev.to_time_surface::<T>(), pattern);
    let g_next = focal_time(&next.to_time_surface::<T>(), pattern);

    let data: Vec<T> = f_prev
        .as_slice()
        .iter()
        .zip(g_prev.as_slice())
        .zip(f_next.as_slice().iter().zip(g_next.as_slice()))
        .map(|((&fp, &gp), (&fn_, &gn))| {
            let before = (if fp == 1 { gp } else { T::zero() }).abs();
            let after = (if fn_ == 1 { gn } else { T::zero() }).abs();
            before * after
        })
        .collect();
    let image = Grid::from_vec(f_prev.width(), f_prev.height(), data);
    let rho = image.as_slice().iter().copied().sum();
    (rho, image)
}

const NONE: u32 = u32::MAX;

/// Reusable per-pixel buffers for the sparse PATS evaluation.
#[derive(Debug, Clone)]
pub struct PatsScratch {
    dims: SensorDims,
    prev_last: Vec<u32>,
    next_first: Vec<u32>,
    touched: Vec<u32>,
}

impl PatsScratch {
    pub fn new(dims: SensorDims) -> Self {
        Self {
            dims,
            prev_last: vec![NONE; dims.area()],
            next_first: vec![NONE; dims.area()],
            touched: Vec::new(),
        }
    }

    /// PATS at reference time `t`. Cost is linear in the packet size.
    pub fn point<T: Real>(
        &mut self,
        stream: &EventStream,
        t: u64,
        t_acc: u64,
        pattern: FocalPattern,
        retain_image: bool,
    ) -> PatsPoint<T> {
        debug_assert_eq!(stream.dims(), self.dims);
        let range = stream.window_bounds(t, t_acc);
        let ts = &stream.timestamps()[range.clone()];
        let xs = &stream.xs()[range.clone()];
        let ys = &stream.ys()[range.clone()];
        let ps = &stream.polarities()[range];
        let width = self.dims.width as usize;
        let mid = ts.partition_point(|&tk| tk < t);

        // Latest event per pixel before t: the last write in ascending order.
        for k in 0..mid {
            let pix = ys[k] as usize * width + xs[k] as usize;
            if self.prev_last[pix] == NONE {
                self.touched.push(pix as u32);
            }
            self.prev_last[pix] = k as u32;
        }
        // Earliest event per pixel from t on: the last write of the reversed half.
        for k in mid..ts.len() {
            let pix = ys[k] as usize * width + xs[k] as usize;
            if self.next_first[pix] == NONE {
                if self.prev_last[pix] == NONE {
                    self.touched.push(pix as u32);
                }
                self.next_first[pix] = k as u32;
            }
        }

        let prev_span = (mid > 0).then(|| (ts[0], ts[mid - 1]));
        let next_span = (mid < ts.len()).then(|| (ts[mid], ts[ts.len() - 1]));
        let mut image = retain_image.then(|| Grid::filled(width, self.dims.height as usize, T::zero()));
        let mut rho = T::zero();
        let (mut sx, mut sy) = (T::zero(), T::zero());

        for &pix in &self.touched {
            let pix = pix as usize;
            let a = std::mem::replace(&mut self.prev_last[pix], NONE);
            let b = std::mem::replace(&mut self.next_first[pix], NONE);
            if a == NONE || b == NONE {
                continue;
            }
            let (a, b) = (a as usize, b as usize);
            if ps[a] != Polarity::Positive || ps[b] != Polarity::Negative {
                continue;
            }
            let (p0, p1) = prev_span.expect("prev half holds an event");
            let (n0, n1) = next_span.expect("next half holds an event");
            let before = pattern.ratio(normalized_time::<T>(ts[a], p0, p1));
            let after = pattern.ratio(normalized_time::<T>(ts[b], n0, n1));
            let v = before * after;
            if v > T::zero() {
                rho = rho + v;
                sx = sx + v * T::from_count(pix % width);
                sy = sy + v * T::from_count(pix / width);
                if let Some(img) = image.as_mut() {
                    img.as_mut_slice()[pix] = v;
                }
            }
        }
        self.touched.clear();

        let centroid = (rho > T::zero()).then(|| (sx / rho, sy / rho));
        PatsPoint {
            t,
            rho,
            centroid,
            image,
        }
    }
}

/// PATS points at `t_start, t_start + t_strd, … <= t_end`, evaluated in parallel.
pub fn rho_series<T: Real>(
    stream: &EventStream,
    range: &SwingRange,
    params: &ImpactParams<T>,
) -> Vec<PatsPoint<T>> {
    let times: Vec<u64> = if range.t_end >= range.t_start {
        reference_times(range.t_start, range.t_end, params.t_strd.max(1)).collect()
    } else {
        Vec::new()
    };
    let dims = stream.dims();
    times
        .par_iter()
        .map_init(
            || PatsScratch::new(dims),
            |scratch, &t| scratch.point(stream, t, params.t_acc, params.pattern, false),
        )
        .collect()
}

/// Second difference `x[i-1] − 2x[i] + x[i+1]` over interior points.
pub fn laplacian_filter<T: Real>(series: &[T]) -> Result<Vec<T>, ImpactError> {
    if series.len() < 3 {
        return Err(ImpactError::TooFewPoints(series.len()));
    }
    let two = T::lit(2.0);
    Ok(series
        .windows(3)
        .map(|w| w[0] - two * w[1] + w[2])
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactCandidate<T> {
    pub t: u64,
    /// Laplacian value at `t` (more negative = sharper peak).
    pub filtered: T,
    pub centroid: Option<(T, T)>,
    /// Distance from centroid to the target center, px.
    pub distance: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactDetection<T> {
    pub t_imp: u64,
    pub chosen: PatsPoint<T>,
    pub candidates: Vec<ImpactCandidate<T>>,
}

/// Picks the impact time from a PATS series.
///
/// Candidates are the local minima of the Laplacian-filtered `ρ` series in
/// ascending order of value; the first `n_c` are kept. With `n_c = 1` this is
/// the global minimum. Otherwise the candidate whose centroid lies nearest the
/// center wins, ties going to the sharper peak and then the earlier time.
pub fn detect_impact<T: Real>(
    points: &[PatsPoint<T>],
    params: &ImpactParams<T>,
    dims: SensorDims,
) -> Result<ImpactDetection<T>, ImpactError> {
    params.validate()?;
    let rhos: Vec<T> = points.iter().map(|p| p.rho).collect();
    let filtered = laplacian_filter(&rhos)?;
    let flat = rhos.iter().all(|&r| r == rhos[0]);
    if flat {
        return Err(ImpactError::NoImpact);
    }

    let last = filtered.len() - 1;
    let mut minima: Vec<usize> = (0..filtered.len())
        .filter(|&i| {
            (i == 0 || filtered[i] < filtered[i - 1]) && (i == last || filtered[i] <= filtered[i + 1])
        })
        .collect();
    minima.sort_by(|&a, &b| {
        filtered[a]
            .partial_cmp(&filtered[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    minima.truncate(params.n_c);

    let center = params.center.unwrap_or_else(|| dims.center());
    let candidates: Vec<ImpactCandidate<T>> = minima
        .iter()
        .map(|&i| {
            let p = &points[i + 1];
            let distance = p.centroid.map(|(cx, cy)| {
                let (dx, dy) = (cx - center.0, cy - center.1);
                (dx * dx + dy * dy).sqrt()
            });
            ImpactCandidate {
                t: p.t,
                filtered: filtered[i],
                centroid: p.centroid,
                distance,
            }
        })
        .collect();

    let chosen_t = if params.n_c == 1 {
        candidates.first().map(|c| c.t)
    } else {
        candidates
            .iter()
            .filter_map(|c| c.distance.map(|d| (d, c)))
            .min_by(|(da, a), (db, b)| {
                da.partial_cmp(db)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(
                        a.filtered
                            .partial_cmp(&b.filtered)
                            .unwrap_or(std::cmp::Ordering::Equal),
                    )
                    .then(a.t.cmp(&b.t))
            })
            .map(|(_, c)| c.t)
    }
    .ok_or(ImpactError::NoImpact)?;

    let chosen = points
        .iter()
        .find(|p| p.t == chosen_t)
        .cloned()
        .expect("candidate comes from the series");
    Ok(ImpactDetection {
        t_imp: chosen_t,
        chosen,
        candidates,
    })
}

/// Rho series over the swing range followed by [`detect_impact`].
pub fn find_impact<T: Real>(
    stream: &EventStream,
    range: &SwingRange,
    params: &ImpactParams<T>,
) -> Result<(ImpactDetection<T>, Vec<PatsPoint<T>>), ImpactError> {
    params.validate()?;
    if range.t_end < range.t_start {
        return Err(ImpactError::NoImpact);
    }
    let points = rho_series(stream, range, params);
    let detection = detect_impact(&points, params, stream.dims())?;
    Ok((detection, points))
}
