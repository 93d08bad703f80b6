//! Packets, rate series and window statistics against naive scans.

use impact_core::event::{packet_at, Event, EventStream, Order, Polarity, SensorDims};
use impact_core::swing::{event_rate_series, rolling_stats};
use proptest::prelude::*;

fn arb_stream(max_dim: u16, max_len: usize, max_gap: u64) -> impl Strategy<Value = EventStream> {
    (1..=max_dim, 1..=max_dim).prop_flat_map(move |(w, h)| {
        prop::collection::vec((0..w, 0..h, any::<bool>(), 0..=max_gap), 0..max_len).prop_map(
            move |raw| {
                let mut t = 0;
                let events = raw.into_iter().map(|(x, y, p, gap)| {
                    t += gap;
                    let pol = if p { Polarity::Positive } else { Polarity::Negative };
                    Event::new(x, y, pol, t)
                });
                EventStream::from_events(SensorDims::new(w, h), events).unwrap()
            },
        )
    })
}

fn in_window(tk: u64, t: u64, t_acc: u64) -> bool {
    let (tk, t, acc) = (tk as i128, t as i128, t_acc as i128);
    2 * tk > 2 * t - acc && 2 * tk <= 2 * t + acc
}

fn naive_packet(stream: &EventStream, t: u64, t_acc: u64) -> Vec<Event> {
    stream.iter().filter(|e| in_window(e.t, t, t_acc)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn packet_matches_scan(stream in arb_stream(16, 400, 20), t in 0u64..5000, t_acc in 1u64..600) {
        let packet = packet_at(&stream, t, t_acc);
        prop_assert_eq!(packet.iter().collect::<Vec<_>>(), naive_packet(&stream, t, t_acc));
        prop_assert_eq!(packet.order(), Order::Ascending);
    }

    #[test]
    fn split_partitions_packet(stream in arb_stream(16, 400, 20), t in 0u64..5000, t_acc in 1u64..600) {
        let packet = packet_at(&stream, t, t_acc);
        let (prev, next) = packet.split_at(t);
        prop_assert_eq!(prev.len() + next.len(), packet.len());
        prop_assert!(prev.iter().all(|e| e.t < t));
        prop_assert!(next.iter().all(|e| e.t >= t));
        let joined: Vec<Event> = prev.iter().chain(next.iter()).collect();
        prop_assert_eq!(joined, packet.iter().collect::<Vec<_>>());
    }

    #[test]
    fn reversed_packet_is_mirror(stream in arb_stream(8, 200, 5), t in 0u64..600, t_acc in 1u64..300) {
        let packet = packet_at(&stream, t, t_acc);
        let mut fwd: Vec<Event> = packet.iter().collect();
        fwd.reverse();
        prop_assert_eq!(packet.reverse().iter().collect::<Vec<_>>(), fwd);
        prop_assert_eq!(packet.reverse().order(), Order::Descending);
    }

    #[test]
    fn image_and_surface_invariants(stream in arb_stream(12, 300, 10)) {
        let packet = stream.as_packet();
        let image = packet.to_event_image();
        let surface = packet.to_time_surface::<f64>();
        for ((x, y, &c), s) in image.iter_cells().zip(surface.as_slice()) {
            prop_assert!(c == 0 || c == 1 || c == -1);
            prop_assert_eq!(c == 0, s.is_none());
            if let Some(s) = s {
                prop_assert!((0.0..=1.0).contains(s));
            }
            // The stored cell belongs to the last event at that pixel.
            let last = packet.iter().filter(|e| e.x as usize == x && e.y as usize == y).last();
            prop_assert_eq!(last.map_or(0, |e| e.polarity.sign()), c);
        }
    }

    #[test]
    fn rate_series_matches_scan(
        stream in arb_stream(16, 400, 20),
        t_acc in 1u64..800,
        t_strd in 1u64..300,
    ) {
        let end = stream.last_time().unwrap_or(0);
        let series = event_rate_series::<f64>(&stream, t_acc, t_strd, 0, end);
        let mut t = 0;
        for p in &series {
            prop_assert_eq!(p.t, t);
            let count = naive_packet(&stream, t, t_acc).len();
            let expect = count as f64 * 1e6 / t_acc as f64;
            prop_assert!((p.rate - expect).abs() <= 1e-12 * expect.max(1.0));
            t += t_strd;
        }
        prop_assert!(t > end);
    }

    #[test]
    fn rolling_stats_match_exact_moments(
        counts in prop::collection::vec(0u32..10_000, 1..80),
        n_eps in 1usize..20,
        t_acc in 1u64..1000,
    ) {
        prop_assume!(counts.len() >= n_eps);
        let scale = 1e6 / t_acc as f64;
        let series: Vec<_> = counts
            .iter()
            .enumerate()
            .map(|(i, &c)| impact_core::swing::RatePoint { t: i as u64 * 10, rate: c as f64 * scale })
            .collect();
        let stats = rolling_stats(&series, n_eps).unwrap();
        prop_assert_eq!(stats.len(), counts.len() - n_eps + 1);
        for (k, s) in stats.iter().enumerate() {
            let w = &counts[k..k + n_eps];
            let n = n_eps as i128;
            let sum: i128 = w.iter().map(|&c| c as i128).sum();
            let sum_sq: i128 = w.iter().map(|&c| (c as i128) * (c as i128)).sum();
            let mean = sum as f64 / n as f64 * scale;
            let var = (n * sum_sq - sum * sum) as f64 / (n * n) as f64 * scale * scale;
            // Relative to the second moment, which bounds both quantities.
            let m2 = var + mean * mean;
            prop_assert_eq!(s.t, (k + n_eps - 1) as u64 * 10);
            prop_assert!((s.mean - mean).abs() <= 1e-12 * mean.abs().max(scale));
            prop_assert!((s.variance - var).abs() <= 1e-12 * m2.max(scale * scale));
        }
    }
}

#[test]
fn odd_accumulation_window_is_half_open() {
    let dims = SensorDims::new(4, 4);
    let events = (0..10).map(|t| Event::new(0, 0, Polarity::Positive, t));
    let stream = EventStream::from_events(dims, events).unwrap();
    // (5 - 1.5, 5 + 1.5] = {4, 5, 6}
    let ts: Vec<u64> = packet_at(&stream, 5, 3).iter().map(|e| e.t).collect();
    assert_eq!(ts, vec![4, 5, 6]);
    // (5 - 2, 5 + 2] = {4, 5, 6, 7}
    let ts: Vec<u64> = packet_at(&stream, 5, 4).iter().map(|e| e.t).collect();
    assert_eq!(ts, vec![4, 5, 6, 7]);
}
