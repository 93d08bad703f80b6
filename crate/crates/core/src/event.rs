//! Events, event streams and the packet views built on top of them.
//!
//! A stream stores the four event attributes as flat columns. Packets are
//! borrowed views into those columns: windowing, splitting and reversing a
//! packet never copies events, which keeps the per-reference-time work of
//! the pipeline proportional to the packet size.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Grid;
use crate::scalar::Real;

/// Sign of a brightness change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Polarity {
    Negative = 0,
    Positive = 1,
}

impl Polarity {
    /// Decodes the on-disk bit (`0 ↔ −`, `1 ↔ +`).
    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            0 => Some(Polarity::Negative),
            1 => Some(Polarity::Positive),
            _ => None,
        }
    }

    pub fn bit(self) -> u8 {
        self as u8
    }

    /// `+1` or `−1`, the value an event image stores.
    pub fn sign(self) -> i8 {
        match self {
            Polarity::Positive => 1,
            Polarity::Negative => -1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }
}

/// Sensor resolution in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorDims {
    pub width: u16,
    pub height: u16,
}

impl SensorDims {
    pub fn new(width: u16, height: u16) -> Self {
        Self { width, height }
    }

    #[inline]
    pub fn contains(&self, x: u16, y: u16) -> bool {
        x < self.width && y < self.height
    }

    #[inline]
    pub fn area(&self) -> usize {
        self.width as usize * self.height as usize
    }

    #[inline]
    pub fn pixel_index(&self, x: u16, y: u16) -> usize {
        y as usize * self.width as usize + x as usize
    }

    /// Geometric center `(width/2, height/2)`.
    pub fn center<T: Real>(&self) -> (T, T) {
        (
            T::lit(self.width as f64 / 2.0),
            T::lit(self.height as f64 / 2.0),
        )
    }
}

/// One sensor event: pixel, polarity and timestamp in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub x: u16,
    pub y: u16,
    pub polarity: Polarity,
    pub t: u64,
}

impl Event {
    pub fn new(x: u16, y: u16, polarity: Polarity, t: u64) -> Self {
        Self { x, y, polarity, t }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StreamError {
    #[error("event {index} at ({x}, {y}) lies outside the {width}x{height} sensor")]
    OutOfBounds {
        index: usize,
        x: u16,
        y: u16,
        width: u16,
        height: u16,
    },
    #[error("event {index} has timestamp {t} earlier than its predecessor ({prev})")]
    NonMonotonic { index: usize, prev: u64, t: u64 },
}

/// A validated, chronologically ascending event sequence.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EventStream {
    dims: Option<SensorDims>,
    xs: Vec<u16>,
    ys: Vec<u16>,
    ps: Vec<Polarity>,
    ts: Vec<u64>,
}

impl EventStream {
    pub fn new(dims: SensorDims) -> Self {
        Self {
            dims: Some(dims),
            ..Self::default()
        }
    }

    pub fn with_capacity(dims: SensorDims, capacity: usize) -> Self {
        Self {
            dims: Some(dims),
            xs: Vec::with_capacity(capacity),
            ys: Vec::with_capacity(capacity),
            ps: Vec::with_capacity(capacity),
            ts: Vec::with_capacity(capacity),
        }
    }

    pub fn from_events(
        dims: SensorDims,
        events: impl IntoIterator<Item = Event>,
    ) -> Result<Self, StreamError> {
        let mut stream = Self::new(dims);
        for e in events {
            stream.push(e)?;
        }
        Ok(stream)
    }

    /// Appends an event, enforcing bounds and non-decreasing timestamps.
    pub fn push(&mut self, e: Event) -> Result<(), StreamError> {
        let dims = self.dims();
        let index = self.ts.len();
        if !dims.contains(e.x, e.y) {
            return Err(StreamError::OutOfBounds {
                index,
                x: e.x,
                y: e.y,
                width: dims.width,
                height: dims.height,
            });
        }
        if let Some(&prev) = self.ts.last() {
            if e.t < prev {
                return Err(StreamError::NonMonotonic {
                    index,
                    prev,
                    t: e.t,
                });
            }
        }
        self.xs.push(e.x);
        self.ys.push(e.y);
        self.ps.push(e.polarity);
        self.ts.push(e.t);
        Ok(())
    }

    pub fn dims(&self) -> SensorDims {
        self.dims.unwrap_or(SensorDims::new(0, 0))
    }

    pub fn len(&self) -> usize {
        self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ts.is_empty()
    }

    pub fn get(&self, i: usize) -> Event {
        Event::new(self.xs[i], self.ys[i], self.ps[i], self.ts[i])
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = Event> + ExactSizeIterator + '_ {
        (0..self.len()).map(move |i| self.get(i))
    }

    pub fn timestamps(&self) -> &[u64] {
        &self.ts
    }

    pub fn xs(&self) -> &[u16] {
        &self.xs
    }

    pub fn ys(&self) -> &[u16] {
        &self.ys
    }

    pub fn polarities(&self) -> &[Polarity] {
        &self.ps
    }

    pub fn first_time(&self) -> Option<u64> {
        self.ts.first().copied()
    }

    pub fn last_time(&self) -> Option<u64> {
        self.ts.last().copied()
    }

    /// The whole stream as an ascending packet.
    pub fn as_packet(&self) -> EventPacket<'_> {
        self.slice(0..self.len())
    }

    /// Index range of the events in `(t − t_acc/2, t + t_acc/2]`.
    ///
    /// Bounds are compared in doubled integer units so odd accumulation
    /// times stay exact.
    pub fn window_bounds(&self, t: u64, t_acc: u64) -> Range<usize> {
        let t2 = 2 * t as u128;
        let acc = t_acc as u128;
        let lo = self.ts.partition_point(|&tk| 2 * tk as u128 + acc <= t2);
        let hi = self.ts.partition_point(|&tk| 2 * tk as u128 <= t2 + acc);
        lo..hi.max(lo)
    }

    /// Number of events in the packet at `t` without building the view.
    pub fn count_in_window(&self, t: u64, t_acc: u64) -> usize {
        self.window_bounds(t, t_acc).len()
    }

    /// Events with `start <= t_k < end`, ascending.
    pub fn time_slice(&self, start: u64, end: u64) -> EventPacket<'_> {
        let lo = self.ts.partition_point(|&tk| tk < start);
        let hi = self.ts.partition_point(|&tk| tk < end).max(lo);
        self.slice(lo..hi)
    }

    pub fn slice(&self, range: Range<usize>) -> EventPacket<'_> {
        EventPacket {
            dims: self.dims(),
            xs: &self.xs[range.clone()],
            ys: &self.ys[range.clone()],
            ps: &self.ps[range.clone()],
            ts: &self.ts[range],
            order: Order::Ascending,
        }
    }
}

/// Chronological direction in which a packet's events are stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Order {
    Ascending,
    Descending,
}

/// A borrowed, ordered window of events.
///
/// The underlying columns are always ascending; a descending packet simply
/// iterates them back to front.
#[derive(Debug, Clone, Copy)]
pub struct EventPacket<'a> {
    dims: SensorDims,
    xs: &'a [u16],
    ys: &'a [u16],
    ps: &'a [Polarity],
    ts: &'a [u64],
    order: Order,
}

impl<'a> EventPacket<'a> {
    pub fn dims(&self) -> SensorDims {
        self.dims
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn len(&self) -> usize {
        self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ts.is_empty()
    }

    /// `i`-th event in stored order.
    pub fn get(&self, i: usize) -> Event {
        let k = match self.order {
            Order::Ascending => i,
            Order::Descending => self.len() - 1 - i,
        };
        Event::new(self.xs[k], self.ys[k], self.ps[k], self.ts[k])
    }

    /// Events in stored order.
    pub fn iter(&self) -> impl Iterator<Item = Event> + 'a {
        let p = *self;
        (0..p.len()).map(move |i| p.get(i))
    }

    /// Ascending timestamps of the underlying window, regardless of order.
    pub fn timestamps(&self) -> &'a [u64] {
        self.ts
    }

    /// Smallest and largest timestamp, `None` when empty.
    pub fn time_span(&self) -> Option<(u64, u64)> {
        Some((*self.ts.first()?, *self.ts.last()?))
    }

    /// Splits into `t_k < t` and `t <= t_k`. Both halves keep this packet's order.
    pub fn split_at(&self, t: u64) -> (EventPacket<'a>, EventPacket<'a>) {
        let mid = self.ts.partition_point(|&tk| tk < t);
        let prev = EventPacket {
            xs: &self.xs[..mid],
            ys: &self.ys[..mid],
            ps: &self.ps[..mid],
            ts: &self.ts[..mid],
            ..*self
        };
        let next = EventPacket {
            xs: &self.xs[mid..],
            ys: &self.ys[mid..],
            ps: &self.ps[mid..],
            ts: &self.ts[mid..],
            ..*self
        };
        (prev, next)
    }

    /// Same events, opposite chronological order.
    pub fn reverse(&self) -> EventPacket<'a> {
        EventPacket {
            order: match self.order {
                Order::Ascending => Order::Descending,
                Order::Descending => Order::Ascending,
            },
            ..*self
        }
    }

    /// Polarity of the last stored event per pixel; `0` where none.
    pub fn to_event_image(&self) -> EventImage {
        let mut image = Grid::filled(self.dims.width as usize, self.dims.height as usize, 0i8);
        for e in self.iter() {
            image.set(e.x as usize, e.y as usize, e.polarity.sign());
        }
        image
    }

    /// Timestamp of the last stored event per pixel, normalized over the
    /// packet's timestamp span (oldest → 0, newest → 1).
    pub fn to_time_surface<T: Real>(&self) -> TimeSurface<T> {
        let mut surface = Grid::filled(self.dims.width as usize, self.dims.height as usize, None);
        let Some((t_min, t_max)) = self.time_span() else {
            return surface;
        };
        for e in self.iter() {
            surface.set(
                e.x as usize,
                e.y as usize,
                Some(normalized_time::<T>(e.t, t_min, t_max)),
            );
        }
        surface
    }
}

/// Linear map of `t` from `[t_min, t_max]` onto `[0, 1]`; a degenerate span maps to 1.
#[inline]
pub fn normalized_time<T: Real>(t: u64, t_min: u64, t_max: u64) -> T {
    if t_max == t_min {
        T::one()
    } else {
        T::from_micros(t - t_min) / T::from_micros(t_max - t_min)
    }
}

/// Cells in `{+1, −1, 0}`.
pub type EventImage = Grid<i8>;

/// Normalized timestamps in `[0, 1]`, `None` where no event landed.
pub type TimeSurface<T> = Grid<Option<T>>;

/// Packet at reference time `t`: every event with `t − t_acc/2 < t_k <= t + t_acc/2`.
pub fn packet_at(stream: &EventStream, t: u64, t_acc: u64) -> EventPacket<'_> {
    stream.slice(stream.window_bounds(t, t_acc))
}

/// `1` where the event image holds the selected polarity, else `0`.
pub fn polarity_mask(image: &EventImage, polarity: Polarity) -> Grid<u8> {
    let want = polarity.sign();
    image.map(|&c| u8::from(c == want))
}
