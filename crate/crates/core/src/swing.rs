//! Swing time ranges from the event-rate series.
//!
//! The racket is the fastest object in the scene, so the number of events per
//! packet climbs while a player swings. Rates are sampled every `t_strd`,
//! summarized by a trailing window of `n_eps` samples, and a swing opens when
//! both the window mean and variance exceed their thresholds. It closes at the
//! first sample at least `tau_t` later whose mean falls below `tau_mean`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::EventStream;
use crate::scalar::Real;

/// Events per second at one reference time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint<T> {
    pub t: u64,
    pub rate: T,
}

/// Trailing-window summary, stamped with the window's last reference time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowStats<T> {
    pub t: u64,
    pub mean: T,
    pub variance: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwingRange {
    pub t_start: u64,
    pub t_end: u64,
    /// The stream ended before the rate dropped back below threshold.
    #[serde(default)]
    pub truncated: bool,
}

impl SwingRange {
    pub fn contains(&self, t: u64) -> bool {
        self.t_start <= t && t <= self.t_end
    }

    pub fn duration(&self) -> u64 {
        self.t_end - self.t_start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct SwingParams<T> {
    /// Packet accumulation time, µs.
    pub t_acc: u64,
    /// Stride between reference times, µs.
    pub t_strd: u64,
    /// Rates per statistics window.
    pub n_eps: usize,
    /// Mean threshold, events/s.
    pub tau_mean: T,
    /// Variance threshold, (events/s)².
    pub tau_var: T,
    /// Minimum swing duration before the end condition is tested, µs.
    pub tau_t: u64,
}

impl<T: Real> Default for SwingParams<T> {
    fn default() -> Self {
        Self {
            t_acc: 500,
            t_strd: 500,
            n_eps: 10,
            tau_mean: T::lit(1e7),
            tau_var: T::lit(6e11),
            tau_t: 100_000,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SwingError {
    #[error("rate series has {len} points, the statistics window needs {window}")]
    SeriesTooShort { len: usize, window: usize },
    #[error("invalid swing parameter: {0}")]
    InvalidParams(&'static str),
}

impl<T: Real> SwingParams<T> {
    pub fn validate(&self) -> Result<(), SwingError> {
        if self.t_acc == 0 {
            return Err(SwingError::InvalidParams("t_acc must be positive"));
        }
        if self.t_strd == 0 {
            return Err(SwingError::InvalidParams("t_strd must be positive"));
        }
        if self.n_eps == 0 {
            return Err(SwingError::InvalidParams("n_eps must be positive"));
        }
        if !(self.tau_mean > T::zero()) || !(self.tau_var > T::zero()) {
            return Err(SwingError::InvalidParams("thresholds must be positive"));
        }
        if self.tau_t == 0 {
            return Err(SwingError::InvalidParams("tau_t must be positive"));
        }
        Ok(())
    }
}

/// Reference times `t_begin, t_begin + t_strd, … <= t_finish`.
pub fn reference_times(t_begin: u64, t_finish: u64, t_strd: u64) -> impl Iterator<Item = u64> {
    assert!(t_strd > 0, "stride must be positive");
    let n = if t_finish >= t_begin {
        (t_finish - t_begin) / t_strd + 1
    } else {
        0
    };
    (0..n).map(move |i| t_begin + i * t_strd)
}

/// `|ε_t| · 10⁶ / t_acc` at every reference time.
pub fn event_rate_series<T: Real>(
    stream: &EventStream,
    t_acc: u64,
    t_strd: u64,
    t_begin: u64,
    t_finish: u64,
) -> Vec<RatePoint<T>> {
    assert!(t_acc > 0, "accumulation time must be positive");
    let scale = T::lit(1e6) / T::from_micros(t_acc);
    reference_times(t_begin, t_finish, t_strd)
        .map(|t| RatePoint {
            t,
            rate: T::from_count(stream.count_in_window(t, t_acc)) * scale,
        })
        .collect()
}

/// Population mean and variance of every `n_eps`-long trailing window.
///
/// Each window is evaluated with a fresh two-pass sum taken relative to its
/// first rate, so a constant series has exactly zero variance.
pub fn rolling_stats<T: Real>(
    series: &[RatePoint<T>],
    n_eps: usize,
) -> Result<Vec<WindowStats<T>>, SwingError> {
    if n_eps == 0 || series.len() < n_eps {
        return Err(SwingError::SeriesTooShort {
            len: series.len(),
            window: n_eps,
        });
    }
    let n = T::from_count(n_eps);
    Ok(series
        .windows(n_eps)
        .map(|w| {
            let pivot = w[0].rate;
            let mean = pivot + w.iter().map(|p| p.rate - pivot).sum::<T>() / n;
            let variance = w
                .iter()
                .map(|p| {
                    let d = p.rate - mean;
                    d * d
                })
                .sum::<T>()
                / n;
            WindowStats {
                t: w[n_eps - 1].t,
                mean,
                variance,
            }
        })
        .collect())
}

/// Scans the statistics forward and emits every swing range.
pub fn detect_swings<T: Real>(stats: &[WindowStats<T>], params: &SwingParams<T>) -> Vec<SwingRange> {
    let mut swings = Vec::new();
    let mut open: Option<u64> = None;
    for s in stats {
        match open {
            None => {
                if s.mean > params.tau_mean && s.variance > params.tau_var {
                    open = Some(s.t);
                }
            }
            Some(t_start) => {
                if s.t >= t_start.saturating_add(params.tau_t) && s.mean < params.tau_mean {
                    swings.push(SwingRange {
                        t_start,
                        t_end: s.t,
                        truncated: false,
                    });
                    open = None;
                }
            }
        }
    }
    if let (Some(t_start), Some(last)) = (open, stats.last()) {
        if last.t > t_start {
            swings.push(SwingRange {
                t_start,
                t_end: last.t,
                truncated: true,
            });
        }
    }
    swings
}

/// Rate series, window statistics and swing ranges in one call.
pub fn find_swings<T: Real>(
    stream: &EventStream,
    params: &SwingParams<T>,
) -> Result<Vec<SwingRange>, SwingError> {
    params.validate()?;
    let (Some(first), Some(last)) = (stream.first_time(), stream.last_time()) else {
        return Ok(Vec::new());
    };
    let series = event_rate_series::<T>(stream, params.t_acc, params.t_strd, first, last);
    if series.len() < params.n_eps {
        return Ok(Vec::new());
    }
    let stats = rolling_stats(&series, params.n_eps)?;
    Ok(detect_swings(&stats, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{Event, Polarity, SensorDims};

    fn series(rates: &[f64]) -> Vec<RatePoint<f64>> {
        rates
            .iter()
            .enumerate()
            .map(|(i, &rate)| RatePoint {
                t: i as u64 * 500,
                rate,
            })
            .collect()
    }

    #[test]
    fn rate_of_dense_window() {
        let dims = SensorDims::new(100, 100);
        // 5000 events spread over (750, 1250]
        let events = (0..5000u64).map(|i| {
            Event::new((i % 100) as u16, (i / 100) as u16, Polarity::Positive, 751 + i / 10)
        });
        let stream = EventStream::from_events(dims, events).unwrap();
        let rates = event_rate_series::<f64>(&stream, 500, 500, 1000, 1000);
        assert_eq!(rates.len(), 1);
        assert_eq!(rates[0].rate, 1e7);
    }

    #[test]
    fn empty_stream_has_zero_rates() {
        let stream = EventStream::new(SensorDims::new(4, 4));
        let rates = event_rate_series::<f32>(&stream, 500, 500, 0, 5000);
        assert_eq!(rates.len(), 11);
        assert!(rates.iter().all(|r| r.rate == 0.0));
    }

    #[test]
    fn constant_series_has_zero_variance() {
        let stats = rolling_stats(&series(&[3.7e6; 25]), 10).unwrap();
        assert_eq!(stats.len(), 16);
        assert!(stats.iter().all(|s| s.variance == 0.0));
        assert_eq!(stats[0].t, 9 * 500);
        // Summing these does not round-trip through the mean.
        for n in 1..13 {
            let x = 1e6 / 7.0 * 3.0;
            let stats = rolling_stats(&series(&[x; 20]), n).unwrap();
            assert!(stats.iter().all(|s| s.variance == 0.0 && s.mean == x), "n = {n}");
        }
    }

    #[test]
    fn single_spike_window_closed_form() {
        let n = 10usize;
        let k = 7.0;
        let mut rates = vec![0.0; n - 1];
        rates.push(k);
        let stats = rolling_stats(&series(&rates), n).unwrap();
        let nf = n as f64;
        assert!((stats[0].mean - k / nf).abs() < 1e-15);
        assert!((stats[0].variance - k * k * (nf - 1.0) / (nf * nf)).abs() < 1e-14);
    }

    #[test]
    fn short_series_is_an_error() {
        assert_eq!(
            rolling_stats(&series(&[1.0, 2.0]), 3),
            Err(SwingError::SeriesTooShort { len: 2, window: 3 })
        );
    }

    fn stats_of(values: &[(f64, f64)]) -> Vec<WindowStats<f64>> {
        values
            .iter()
            .enumerate()
            .map(|(i, &(mean, variance))| WindowStats {
                t: i as u64 * 1000,
                mean,
                variance,
            })
            .collect()
    }

    #[test]
    fn below_threshold_detects_nothing() {
        let params = SwingParams::<f64>::default();
        let stats = stats_of(&[(5e6, 1e12); 400]);
        assert!(detect_swings(&stats, &params).is_empty());
    }

    #[test]
    fn swing_needs_minimum_duration_and_truncates_at_end() {
        let params = SwingParams::<f64> {
            tau_t: 5000,
            ..SwingParams::default()
        };
        let mut v = vec![(0.0, 0.0); 3];
        v.push((2e7, 1e12)); // t = 3000 opens
        v.extend([(5e6, 0.0); 3]); // 4000..6000 below mean but before tau_t
        v.push((5e6, 0.0)); // t = 7000 < 8000, still open
        v.push((5e6, 0.0)); // t = 8000 closes
        v.push((2e7, 1e12)); // t = 9000 opens again
        v.push((2e7, 1e12));
        let swings = detect_swings(&stats_of(&v), &params);
        assert_eq!(
            swings,
            vec![
                SwingRange {
                    t_start: 3000,
                    t_end: 8000,
                    truncated: false
                },
                SwingRange {
                    t_start: 9000,
                    t_end: 10000,
                    truncated: true
                }
            ]
        );
    }

    #[test]
    fn default_params() {
        let p = SwingParams::<f64>::default();
        assert_eq!((p.t_acc, p.t_strd, p.n_eps, p.tau_t), (500, 500, 10, 100_000));
        assert_eq!(p.tau_mean, 1e7);
        assert_eq!(p.tau_var, 6e11);
    }
}
