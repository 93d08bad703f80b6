//! Locating ball impacts on a tennis racket from event-camera streams.
//!
//! The pipeline has three stages: swing ranges from the event rate
//! ([`swing`]), the impact time from polarity asymmetry around a reference
//! time ([`pats`]), and racket and ball ellipses around that time
//! ([`contour`]), combined into a racket-relative position ([`geometry`]).
//!
//! Numeric stages are generic over [`Real`]; the aliases below fix `f64`.

// `!(x > 0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contour;
pub mod event;
pub mod geometry;
pub mod grid;
pub mod ingest;
pub mod pats;
pub mod scalar;
pub mod swing;
pub mod synth;

pub use event::{Event, EventPacket, EventStream, Order, Polarity, SensorDims};
pub use grid::Grid;
pub use scalar::Real;

pub type Ellipse = contour::Ellipse<f64>;
pub type FittedEllipse = contour::FittedEllipse<f64>;
pub type RelativePosition = geometry::RelativePosition<f64>;
pub type SwingParams = swing::SwingParams<f64>;
pub type ImpactParams = pats::ImpactParams<f64>;
pub type ImpactDetection = pats::ImpactDetection<f64>;
pub type PatsPoint = pats::PatsPoint<f64>;
pub type TimeSurface = event::TimeSurface<f64>;
