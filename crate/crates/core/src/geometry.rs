//! Ball position relative to the racket face.
//!
//! The racket ellipse is mapped to a circle of radius 100: `v` runs along the
//! major axis toward the tip, `u` along the minor axis. A point on the racket
//! outline has `u² + v² = 100²`.
//!
//! `+u` is the tip direction turned a quarter counterclockwise on screen. For
//! a racket lying horizontally, or leaning with its tip to the right, that is
//! the minor-axis end higher in the image. Tying `u` to the tip keeps the map
//! continuous in the racket angle; a fixed "up" flips sign as the racket
//! passes vertical.

use serde::{Deserialize, Serialize};

use crate::contour::Ellipse;
use crate::scalar::Real;

/// Which end of the major axis is the racket tip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TipSign {
    /// Tip at `center + a·(cos θ, sin θ)`.
    Plus,
    /// Tip at `center − a·(cos θ, sin θ)`.
    Minus,
}

impl TipSign {
    pub fn value<T: Real>(self) -> T {
        match self {
            TipSign::Plus => T::one(),
            TipSign::Minus => -T::one(),
        }
    }

    /// The end drawn higher in the image (smaller row) is the tip; a
    /// horizontal racket defaults to `Plus`.
    pub fn default_for<T: Real>(racket: &Ellipse<T>) -> Self {
        if racket.theta.sin() > T::zero() {
            TipSign::Minus
        } else {
            TipSign::Plus
        }
    }
}

impl std::str::FromStr for TipSign {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "+1" | "1" | "+" | "plus" => Ok(TipSign::Plus),
            "-1" | "-" | "minus" => Ok(TipSign::Minus),
            other => Err(format!("tip sign must be +1 or -1, got {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativePosition<T> {
    /// Lateral, positive a quarter turn counterclockwise from the tip.
    pub u_pct: T,
    /// Longitudinal, positive toward the tip.
    pub v_pct: T,
}

/// With tip direction `s·(cos θ, sin θ)`, `+u` is `s·(sin θ, −cos θ)`, i.e.
/// `−s` times the local minor-axis direction `(−sin θ, cos θ)`.
fn u_sign<T: Real>(tip: TipSign) -> T {
    -tip.value::<T>()
}

pub fn relative_position<T: Real>(
    ball_center: (T, T),
    racket: &Ellipse<T>,
    tip: TipSign,
) -> RelativePosition<T> {
    let (m, n) = racket.to_local(ball_center.0, ball_center.1);
    let hundred = T::lit(100.0);
    RelativePosition {
        u_pct: hundred * u_sign::<T>(tip) * n / racket.b,
        v_pct: hundred * tip.value::<T>() * m / racket.a,
    }
}

/// Inverse of [`relative_position`].
pub fn position_from_relative<T: Real>(
    rel: RelativePosition<T>,
    racket: &Ellipse<T>,
    tip: TipSign,
) -> (T, T) {
    let hundred = T::lit(100.0);
    let m = rel.v_pct * racket.a / (hundred * tip.value::<T>());
    let n = rel.u_pct * racket.b / (hundred * u_sign::<T>(tip));
    racket.from_local(m, n)
}
