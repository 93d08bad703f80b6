//! Racket and ball ellipses from the packets around the impact time.
//!
//! Both objects go through the same chain: activity noise filter, event
//! image, binarization, morphological closing, optional region-of-interest
//! crop, border following and a least-squares ellipse per border. The racket
//! uses a short packet (it moves fast, a long one would smear the frame) and
//! the ball a long one (it is almost still around the impact).

mod border;
mod ellipse;

pub use border::{find_borders, Border, BorderKind};
pub use ellipse::{fit_ellipse, wrap_angle, Conic, Ellipse, FitError};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::{packet_at, EventPacket, EventStream};
use crate::grid::Grid;
use crate::scalar::Real;

/// Binary image, 1 for pixels that fired.
pub type BinaryImage = Grid<u8>;

const ROI_TILE: usize = 32;
const ROI_KEEP_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContourParams {
    /// Packet length for the ball image, µs.
    pub t_acc_ball: u64,
    /// Packet length for the racket image, µs.
    pub t_acc_racket: u64,
    /// Noise filter support window, µs.
    pub noise_window: u64,
    /// Noise filter neighborhood radius (Chebyshev), pixels.
    pub noise_radius: u16,
    /// Side of the square closing kernel, pixels.
    pub closing_kernel: usize,
    pub roi_enabled: bool,
    /// Borders with fewer points are not fitted.
    pub min_contour_points: usize,
    /// Fitted ellipses with a smaller semi-minor axis are dropped.
    pub min_semi_minor: f64,
}

impl Default for ContourParams {
    fn default() -> Self {
        Self {
            t_acc_ball: 2000,
            t_acc_racket: 500,
            noise_window: 10_000,
            noise_radius: 1,
            closing_kernel: 5,
            roi_enabled: false,
            min_contour_points: 20,
            min_semi_minor: 3.0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ContourError {
    #[error("racket not found: {found} ellipse(s) detected, need at least 2")]
    RacketNotFound { found: usize },
    #[error("ball not found inside the racket")]
    BallNotFound,
    #[error("invalid contour parameter: {0}")]
    InvalidParams(&'static str),
}

impl ContourParams {
    pub fn validate(&self) -> Result<(), ContourError> {
        if self.t_acc_ball == 0 || self.t_acc_racket == 0 {
            return Err(ContourError::InvalidParams("accumulation times must be positive"));
        }
        if self.closing_kernel == 0 {
            return Err(ContourError::InvalidParams("closing kernel must be at least 1"));
        }
        if !(self.min_semi_minor >= 0.0) {
            return Err(ContourError::InvalidParams("min_semi_minor must be non-negative"));
        }
        Ok(())
    }
}

/// Keeps events with another event in their neighborhood during the
/// preceding `window` µs. The event's own pixel counts as a neighbor.
///
/// The packet is read in stored order; the result is always ascending.
pub fn activity_noise_filter(packet: &EventPacket<'_>, window: u64, radius: u16) -> EventStream {
    let dims = packet.dims();
    let (w, h) = (dims.width as usize, dims.height as usize);
    let r = radius as usize;
    let mut last: Vec<Option<u64>> = vec![None; dims.area()];
    let mut kept = Vec::new();
    for e in packet.iter() {
        let (x, y) = (e.x as usize, e.y as usize);
        let supported = (y.saturating_sub(r)..(y + r + 1).min(h)).any(|ny| {
            (x.saturating_sub(r)..(x + r + 1).min(w)).any(|nx| {
                last[ny * w + nx].is_some_and(|lt| lt.abs_diff(e.t) <= window)
            })
        });
        if supported {
            kept.push(e);
        }
        last[y * w + x] = Some(e.t);
    }
    kept.sort_by_key(|e| e.t);
    EventStream::from_events(dims, kept).expect("filtered events come from a valid stream")
}

/// Pixels that received at least one event.
pub fn binarize(packet: &EventPacket<'_>) -> BinaryImage {
    let dims = packet.dims();
    let mut img = Grid::filled(dims.width as usize, dims.height as usize, 0u8);
    let w = dims.width as usize;
    let cells = img.as_mut_slice();
    for e in packet.iter() {
        cells[e.y as usize * w + e.x as usize] = 1;
    }
    img
}

fn morph(image: &BinaryImage, kernel: usize, dilate: bool) -> BinaryImage {
    let (w, h) = (image.width(), image.height());
    let lo = (kernel - 1) / 2;
    let hi = kernel - 1 - lo;
    // Separable: a square window is a row window followed by a column window.
    // Outside the image counts as 0 for both passes.
    let pass = |src: &[u8], horizontal: bool| -> Vec<u8> {
        let mut out = vec![0u8; w * h];
        for y in 0..h {
            for x in 0..w {
                let (pos, len) = if horizontal { (x, w) } else { (y, h) };
                let inside = pos >= lo && pos + hi < len;
                let from = pos.saturating_sub(lo);
                let to = (pos + hi).min(len - 1);
                let cell = |p: usize| {
                    if horizontal {
                        src[y * w + p]
                    } else {
                        src[p * w + x]
                    }
                };
                out[y * w + x] = if dilate {
                    u8::from((from..=to).any(|p| cell(p) != 0))
                } else {
                    u8::from(inside && (from..=to).all(|p| cell(p) != 0))
                };
            }
        }
        out
    };
    let rows = pass(image.as_slice(), true);
    Grid::from_vec(w, h, pass(&rows, false))
}

pub fn dilate(image: &BinaryImage, kernel: usize) -> BinaryImage {
    morph(image, kernel, true)
}

pub fn erode(image: &BinaryImage, kernel: usize) -> BinaryImage {
    morph(image, kernel, false)
}

/// Dilation followed by erosion with a `kernel × kernel` square.
pub fn morphological_closing(image: &BinaryImage, kernel: usize) -> BinaryImage {
    assert!(kernel > 0, "closing kernel must be at least 1");
    erode(&dilate(image, kernel), kernel)
}

/// Crops to the bounding box of the busiest 32×32 tiles plus one tile of
/// margin. Returns the crop and its `(x, y)` offset in the full frame.
pub fn roi_crop(image: &BinaryImage) -> (BinaryImage, (usize, usize)) {
    let (w, h) = (image.width(), image.height());
    let tiles_x = w.div_ceil(ROI_TILE);
    let tiles_y = h.div_ceil(ROI_TILE);
    let mut counts = vec![0usize; tiles_x * tiles_y];
    for (x, y, &v) in image.iter_cells() {
        if v != 0 {
            counts[(y / ROI_TILE) * tiles_x + x / ROI_TILE] += 1;
        }
    }
    let max = counts.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return (image.clone(), (0, 0));
    }
    let threshold = ROI_KEEP_FRACTION * max as f64;
    let mut bbox: Option<(usize, usize, usize, usize)> = None;
    for ty in 0..tiles_y {
        for tx in 0..tiles_x {
            if counts[ty * tiles_x + tx] as f64 >= threshold {
                bbox = Some(match bbox {
                    None => (tx, ty, tx, ty),
                    Some((x0, y0, x1, y1)) => (x0.min(tx), y0.min(ty), x1.max(tx), y1.max(ty)),
                });
            }
        }
    }
    let (tx0, ty0, tx1, ty1) = bbox.expect("the busiest tile passes the threshold");
    let x0 = tx0.saturating_sub(1) * ROI_TILE;
    let y0 = ty0.saturating_sub(1) * ROI_TILE;
    let x1 = ((tx1 + 2) * ROI_TILE).min(w);
    let y1 = ((ty1 + 2) * ROI_TILE).min(h);
    let mut data = Vec::with_capacity((x1 - x0) * (y1 - y0));
    for row in image.rows().skip(y0).take(y1 - y0) {
        data.extend_from_slice(&row[x0..x1]);
    }
    (Grid::from_vec(x1 - x0, y1 - y0, data), (x0, y0))
}

/// An ellipse fitted to one border.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedEllipse<T> {
    pub ellipse: Ellipse<T>,
    pub border: BorderKind,
    pub points: usize,
}

/// Fits an ellipse to every sufficiently long border, largest area first.
pub fn detect_ellipses<T: Real>(image: &BinaryImage, params: &ContourParams) -> Vec<FittedEllipse<T>> {
    let min_points = params.min_contour_points.max(6);
    let min_b = T::lit(params.min_semi_minor);
    let mut found: Vec<FittedEllipse<T>> = find_borders(image)
        .into_iter()
        .filter(|b| b.points.len() >= min_points)
        .filter_map(|b| {
            let pts: Vec<(T, T)> = b
                .points
                .iter()
                .map(|&(x, y)| (T::from_count(x as usize), T::from_count(y as usize)))
                .collect();
            let (_, ellipse) = fit_ellipse(&pts).ok()?;
            (ellipse.b >= min_b).then_some(FittedEllipse {
                ellipse,
                border: b.kind,
                points: pts.len(),
            })
        })
        .collect();
    found.sort_by(|a, b| {
        b.ellipse
            .area()
            .partial_cmp(&a.ellipse.area())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    found
}

/// The racket frame shows up as a thick ring whose inner border follows the
/// string-bed edge; that border gives the second largest ellipse.
pub fn select_racket<T: Real>(ellipses: &[FittedEllipse<T>]) -> Result<FittedEllipse<T>, ContourError> {
    let mut sorted = ellipses.to_vec();
    sorted.sort_by(|a, b| {
        b.ellipse
            .area()
            .partial_cmp(&a.ellipse.area())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    sorted.get(1).copied().ok_or(ContourError::RacketNotFound {
        found: ellipses.len(),
    })
}

/// Largest outer-border ellipse centered strictly inside the racket and
/// smaller than it.
pub fn select_ball<T: Real>(
    ellipses: &[FittedEllipse<T>],
    racket: &Ellipse<T>,
) -> Result<FittedEllipse<T>, ContourError> {
    ellipses
        .iter()
        .filter(|f| f.border == BorderKind::Outer)
        .filter(|f| racket.contains_strictly(f.ellipse.cx, f.ellipse.cy))
        .filter(|f| f.ellipse.area() < racket.area())
        .max_by(|a, b| {
            a.ellipse
                .area()
                .partial_cmp(&b.ellipse.area())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .copied()
        .ok_or(ContourError::BallNotFound)
}

/// Filter, binarize, close and (optionally) crop one packet, then fit
/// ellipses in full-frame coordinates.
pub fn packet_ellipses<T: Real>(packet: &EventPacket<'_>, params: &ContourParams) -> Vec<FittedEllipse<T>> {
    let filtered = activity_noise_filter(packet, params.noise_window, params.noise_radius);
    let closed = morphological_closing(&binarize(&filtered.as_packet()), params.closing_kernel);
    let (image, (ox, oy)) = if params.roi_enabled {
        roi_crop(&closed)
    } else {
        (closed, (0, 0))
    };
    let (dx, dy) = (T::from_count(ox), T::from_count(oy));
    detect_ellipses::<T>(&image, params)
        .into_iter()
        .map(|f| FittedEllipse {
            ellipse: f.ellipse.translated(dx, dy),
            ..f
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourResult<T> {
    pub racket: FittedEllipse<T>,
    pub ball: FittedEllipse<T>,
}

/// Racket and ball ellipses around `t_imp`.
pub fn find_contours<T: Real>(
    stream: &EventStream,
    t_imp: u64,
    params: &ContourParams,
) -> Result<ContourResult<T>, ContourError> {
    params.validate()?;
    let (racket_set, ball_set) = rayon::join(
        || packet_ellipses::<T>(&packet_at(stream, t_imp, params.t_acc_racket), params),
        || packet_ellipses::<T>(&packet_at(stream, t_imp, params.t_acc_ball), params),
    );
    let racket = select_racket(&racket_set)?;
    let ball = select_ball(&ball_set, &racket.ellipse)?;
    Ok(ContourResult { racket, ball })
}
