use impact_core::event::{Event, EventStream, Polarity, SensorDims};
use impact_core::ingest::{
    decode_binary, encode_binary, encode_csv, parse_csv, read_auto, write_binary, write_csv,
    StreamHeader,
};
use proptest::prelude::*;

fn arb_stream() -> impl Strategy<Value = EventStream> {
    (1u16..=2000, 1u16..=2000).prop_flat_map(|(w, h)| {
        prop::collection::vec((0..w, 0..h, any::<bool>(), 0u64..1_000_000), 0..300).prop_map(
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

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn binary_round_trips(stream in arb_stream()) {
        let mut bytes = Vec::new();
        encode_binary(&stream, &mut bytes).unwrap();
        prop_assert_eq!(bytes.len(), 16 + 13 * stream.len());
        let (header, back) = decode_binary(&bytes).unwrap();
        prop_assert_eq!(header, StreamHeader::for_stream(&stream));
        prop_assert_eq!(back, stream);
    }

    #[test]
    fn csv_matches_binary(stream in arb_stream()) {
        let mut bin = Vec::new();
        encode_binary(&stream, &mut bin).unwrap();
        let mut csv = Vec::new();
        encode_csv(&stream, &mut csv).unwrap();
        prop_assert_eq!(decode_binary(&bin).unwrap(), parse_csv(csv.as_slice()).unwrap());
    }
}

#[test]
fn files_round_trip_by_extension() {
    let dir = tempfile::tempdir().unwrap();
    let dims = SensorDims::new(32, 16);
    let events = vec![
        Event::new(0, 0, Polarity::Positive, 5),
        Event::new(31, 15, Polarity::Negative, 5),
        Event::new(7, 3, Polarity::Positive, 90),
    ];
    let stream = EventStream::from_events(dims, events.clone()).unwrap();
    let header = StreamHeader::for_stream(&stream);
    for name in ["a.evts", "a.csv"] {
        let path = dir.path().join(name);
        if name.ends_with(".csv") {
            write_csv(&path, &header, events.clone()).unwrap();
        } else {
            write_binary(&path, &header, events.clone()).unwrap();
        }
        let (h, s) = read_auto(&path).unwrap();
        assert_eq!(h, header);
        assert_eq!(s, stream);
    }
}

#[test]
fn truncated_binary_is_rejected() {
    let stream = EventStream::from_events(
        SensorDims::new(4, 4),
        [Event::new(1, 1, Polarity::Positive, 1)],
    )
    .unwrap();
    let mut bytes = Vec::new();
    encode_binary(&stream, &mut bytes).unwrap();
    bytes.pop();
    assert!(decode_binary(&bytes).is_err());
}
