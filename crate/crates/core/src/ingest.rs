//! Reading and writing event streams.
//!
//! Two formats are supported:
//!
//! * CSV: a `width,height` header line followed by `x,y,p,t` rows, with
//!   `p` in `{0, 1}` (`0 ↔ −`, `1 ↔ +`).
//! * `EVTS` binary: magic `EVTS`, little-endian `u16` width, `u16` height,
//!   `u64` count, then `count` records of `(u16 x, u16 y, u8 p, u64 t)`.
//!
//! Input must already be sorted by timestamp; a decreasing timestamp is an
//! error rather than something the reader silently repairs.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::{Event, EventStream, Polarity, SensorDims, StreamError};

pub const MAGIC: &[u8; 4] = b"EVTS";
const HEADER_LEN: usize = 4 + 2 + 2 + 8;
const RECORD_LEN: usize = 2 + 2 + 1 + 8;

/// Summary of a stream file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamHeader {
    pub width: u16,
    pub height: u16,
    /// First timestamp, `0` for an empty stream.
    pub t0: u64,
    pub count: u64,
}

impl StreamHeader {
    pub fn for_stream(stream: &EventStream) -> Self {
        let dims = stream.dims();
        Self {
            width: dims.width,
            height: dims.height,
            t0: stream.first_time().unwrap_or(0),
            count: stream.len() as u64,
        }
    }

    pub fn dims(&self) -> SensorDims {
        SensorDims::new(self.width, self.height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Evts,
}

impl Format {
    /// Guesses from the extension: `.csv` is CSV, anything else `EVTS`.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Evts,
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: {source}")]
    InvalidCsvEvent {
        line: usize,
        #[source]
        source: StreamError,
    },
    #[error("bad magic bytes, expected \"EVTS\"")]
    BadMagic,
    #[error("sensor dimensions must be positive, got {width}x{height}")]
    InvalidDims { width: u16, height: u16 },
    #[error("file truncated at byte offset {offset}: {what}")]
    Truncated { offset: u64, what: &'static str },
    #[error("record {index} at byte offset {offset}: invalid polarity {value}")]
    InvalidPolarity { index: u64, offset: u64, value: u8 },
    #[error("record {index} at byte offset {offset}: {source}")]
    InvalidRecord {
        index: u64,
        offset: u64,
        #[source]
        source: StreamError,
    },
    #[error("cannot write event {index}: {source}")]
    InvalidWrite {
        index: usize,
        #[source]
        source: StreamError,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> IngestError + '_ {
    move |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn check_dims(width: u16, height: u16) -> Result<SensorDims, IngestError> {
    if width == 0 || height == 0 {
        return Err(IngestError::InvalidDims { width, height });
    }
    Ok(SensorDims::new(width, height))
}

/// Reads a stream in the given format.
pub fn read(path: &Path, format: Format) -> Result<(StreamHeader, EventStream), IngestError> {
    match format {
        Format::Csv => read_csv(path),
        Format::Evts => read_binary(path),
    }
}

/// Reads a stream, picking the format from the magic bytes.
pub fn read_auto(path: &Path) -> Result<(StreamHeader, EventStream), IngestError> {
    let mut head = [0u8; 4];
    let mut f = File::open(path).map_err(io_err(path))?;
    let n = f.read(&mut head).map_err(io_err(path))?;
    if n == 4 && &head == MAGIC {
        read_binary(path)
    } else {
        read_csv(path)
    }
}

pub fn read_csv(path: &Path) -> Result<(StreamHeader, EventStream), IngestError> {
    let file = File::open(path).map_err(io_err(path))?;
    parse_csv(BufReader::new(file)).map_err(|e| match e {
        IngestError::Io { source, .. } => io_err(path)(source),
        other => other,
    })
}

/// CSV parser over any buffered reader; line numbers are 1-based.
pub fn parse_csv(reader: impl BufRead) -> Result<(StreamHeader, EventStream), IngestError> {
    let mut lines = reader.lines().enumerate();
    let (width, height) = loop {
        let Some((i, line)) = lines.next() else {
            return Err(IngestError::Malformed {
                line: 1,
                reason: "missing `width,height` header".into(),
            });
        };
        let line = line.map_err(io_err(Path::new("<csv>")))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        let parsed = match fields.as_slice() {
            [w, h] => w.parse::<u16>().ok().zip(h.parse::<u16>().ok()),
            _ => None,
        };
        break parsed.ok_or_else(|| IngestError::Malformed {
            line: i + 1,
            reason: format!("expected `width,height` header, got {trimmed:?}"),
        })?;
    };
    let dims = check_dims(width, height)?;
    let mut stream = EventStream::new(dims);
    for (i, line) in lines {
        let line = line.map_err(io_err(Path::new("<csv>")))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let event = parse_csv_event(trimmed).map_err(|reason| IngestError::Malformed {
            line: i + 1,
            reason,
        })?;
        stream
            .push(event)
            .map_err(|source| IngestError::InvalidCsvEvent {
                line: i + 1,
                source,
            })?;
    }
    Ok((StreamHeader::for_stream(&stream), stream))
}

fn parse_csv_event(line: &str) -> Result<Event, String> {
    let mut fields = line.split(',').map(str::trim);
    let mut next = |name: &str| {
        fields
            .next()
            .ok_or_else(|| format!("missing field `{name}` in {line:?}"))
    };
    let x = next("x")?;
    let y = next("y")?;
    let p = next("p")?;
    let t = next("t")?;
    if fields.next().is_some() {
        return Err(format!("too many fields in {line:?}"));
    }
    let x: u16 = x.parse().map_err(|_| format!("invalid x {x:?}"))?;
    let y: u16 = y.parse().map_err(|_| format!("invalid y {y:?}"))?;
    let polarity = p
        .parse::<u8>()
        .ok()
        .and_then(Polarity::from_bit)
        .ok_or_else(|| format!("invalid polarity {p:?}, expected 0 or 1"))?;
    let t: u64 = t.parse().map_err(|_| format!("invalid timestamp {t:?}"))?;
    Ok(Event::new(x, y, polarity, t))
}

pub fn read_binary(path: &Path) -> Result<(StreamHeader, EventStream), IngestError> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(io_err(path))?;
    decode_binary(&bytes)
}

/// Decodes an in-memory `EVTS` image.
pub fn decode_binary(bytes: &[u8]) -> Result<(StreamHeader, EventStream), IngestError> {
    if bytes.len() < 4 {
        return Err(IngestError::Truncated {
            offset: bytes.len() as u64,
            what: "magic",
        });
    }
    if &bytes[..4] != MAGIC {
        return Err(IngestError::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(IngestError::Truncated {
            offset: bytes.len() as u64,
            what: "header",
        });
    }
    let width = u16::from_le_bytes([bytes[4], bytes[5]]);
    let height = u16::from_le_bytes([bytes[6], bytes[7]]);
    let count = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    let dims = check_dims(width, height)?;

    let body = &bytes[HEADER_LEN..];
    let available = (body.len() / RECORD_LEN) as u64;
    if available < count {
        let offset = (HEADER_LEN as u64) + available * RECORD_LEN as u64;
        return Err(IngestError::Truncated {
            offset,
            what: "record",
        });
    }
    let mut stream = EventStream::with_capacity(dims, count as usize);
    for (index, rec) in body.chunks_exact(RECORD_LEN).take(count as usize).enumerate() {
        let index = index as u64;
        let offset = HEADER_LEN as u64 + index * RECORD_LEN as u64;
        let x = u16::from_le_bytes([rec[0], rec[1]]);
        let y = u16::from_le_bytes([rec[2], rec[3]]);
        let polarity = Polarity::from_bit(rec[4]).ok_or(IngestError::InvalidPolarity {
            index,
            offset,
            value: rec[4],
        })?;
        let t = u64::from_le_bytes(rec[5..13].try_into().expect("8 bytes"));
        stream
            .push(Event::new(x, y, polarity, t))
            .map_err(|source| IngestError::InvalidRecord {
                index,
                offset,
                source,
            })?;
    }
    Ok((StreamHeader::for_stream(&stream), stream))
}

/// Writes `events` under `header`'s dimensions. The header's count and t0
/// are recomputed from the events.
pub fn write_binary(
    path: &Path,
    header: &StreamHeader,
    events: impl IntoIterator<Item = Event>,
) -> Result<(), IngestError> {
    let dims = check_dims(header.width, header.height)?;
    let stream = collect_valid(dims, events)?;
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    encode_binary(&stream, &mut w).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn encode_binary(stream: &EventStream, w: &mut impl Write) -> io::Result<()> {
    let dims = stream.dims();
    w.write_all(MAGIC)?;
    w.write_all(&dims.width.to_le_bytes())?;
    w.write_all(&dims.height.to_le_bytes())?;
    w.write_all(&(stream.len() as u64).to_le_bytes())?;
    for e in stream.iter() {
        let mut rec = [0u8; RECORD_LEN];
        rec[0..2].copy_from_slice(&e.x.to_le_bytes());
        rec[2..4].copy_from_slice(&e.y.to_le_bytes());
        rec[4] = e.polarity.bit();
        rec[5..13].copy_from_slice(&e.t.to_le_bytes());
        w.write_all(&rec)?;
    }
    Ok(())
}

pub fn write_csv(
    path: &Path,
    header: &StreamHeader,
    events: impl IntoIterator<Item = Event>,
) -> Result<(), IngestError> {
    let dims = check_dims(header.width, header.height)?;
    let stream = collect_valid(dims, events)?;
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    encode_csv(&stream, &mut w).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn encode_csv(stream: &EventStream, w: &mut impl Write) -> io::Result<()> {
    let dims = stream.dims();
    writeln!(w, "{},{}", dims.width, dims.height)?;
    for e in stream.iter() {
        writeln!(w, "{},{},{},{}", e.x, e.y, e.polarity.bit(), e.t)?;
    }
    Ok(())
}

fn collect_valid(
    dims: SensorDims,
    events: impl IntoIterator<Item = Event>,
) -> Result<EventStream, IngestError> {
    let mut stream = EventStream::new(dims);
    for (index, e) in events.into_iter().enumerate() {
        stream
            .push(e)
            .map_err(|source| IngestError::InvalidWrite { index, source })?;
    }
    Ok(stream)
}
