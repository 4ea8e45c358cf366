//! Synthetic stream generators and transaction-file loading.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand_distr::{Distribution, Exp, Normal, Zipf};

use crate::domain::Item;
use crate::error::{invalid, Error, Result};
use crate::rng::{streams, RngHandle};

#[derive(Debug, Clone, PartialEq)]
pub enum StreamKind {
    /// Mean `d/2`, standard deviation `sigma`, rounded and clamped.
    Normal { sigma: f64 },
    /// Rate `1/sigma`, floored and clamped.
    Exponential { sigma: f64 },
    /// Zipf over ranks `1..=d` with exponent `s`, shifted to `0..d`.
    Zipf { s: f64 },
    /// Whitespace-separated transactions, one per line.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamSpec {
    pub kind: StreamKind,
    /// Domain size; ignored for files, whose domain is discovered.
    pub d: u32,
    /// Event count; for files, an upper limit.
    pub n: usize,
    pub seed: u64,
}

/// Events plus the domain they live in.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub events: Vec<Item>,
    pub d: u32,
}

fn clamp_to_domain(x: f64, d: u32) -> Item {
    if x.is_nan() || x <= 0.0 {
        0
    } else if x >= (d - 1) as f64 {
        d - 1
    } else {
        x as Item
    }
}

/// Draws `spec.n` synthetic events; deterministic in `spec.seed`.
pub fn generate_stream(spec: &StreamSpec) -> Result<Vec<Item>> {
    if spec.d == 0 {
        return Err(invalid("domain size must be > 0"));
    }
    let mut rng = RngHandle::new(spec.seed).fork(streams::DATA);
    let d = spec.d;
    let n = spec.n;
    let events = match &spec.kind {
        StreamKind::Normal { sigma } => {
            if !(sigma.is_finite() && *sigma > 0.0) {
                return Err(invalid(format!("normal sigma must be > 0, got {sigma}")));
            }
            let dist = Normal::new(d as f64 / 2.0, *sigma)
                .map_err(|e| invalid(format!("normal sigma {sigma}: {e}")))?;
            (0..n)
                .map(|_| clamp_to_domain(dist.sample(&mut rng).round(), d))
                .collect()
        }
        StreamKind::Exponential { sigma } => {
            if !(sigma.is_finite() && *sigma > 0.0) {
                return Err(invalid(format!("exponential sigma must be > 0, got {sigma}")));
            }
            let dist = Exp::new(1.0 / sigma)
                .map_err(|e| invalid(format!("exponential sigma {sigma}: {e}")))?;
            (0..n)
                .map(|_| clamp_to_domain(dist.sample(&mut rng).floor(), d))
                .collect()
        }
        StreamKind::Zipf { s } => {
            let dist = Zipf::new(d as f64, *s)
                .map_err(|e| invalid(format!("zipf exponent {s}: {e}")))?;
            (0..n)
                .map(|_| clamp_to_domain(dist.sample(&mut rng) - 1.0, d))
                .collect()
        }
        StreamKind::File { .. } => {
            return Err(invalid("file streams are loaded, not generated"))
        }
    };
    Ok(events)
}

/// Generates or loads the stream described by `spec`.
pub fn load_stream(spec: &StreamSpec) -> Result<Dataset> {
    match &spec.kind {
        StreamKind::File { path } => load_transactions(path, Some(spec.n)),
        _ => Ok(Dataset {
            events: generate_stream(spec)?,
            d: spec.d,
        }),
    }
}

/// Flattens a transaction file into one event stream in file order. The
/// reported domain is the largest id plus one.
pub fn load_transactions(path: &Path, limit: Option<usize>) -> Result<Dataset> {
    let reader = BufReader::new(File::open(path)?);
    let limit = limit.unwrap_or(usize::MAX);
    let mut events = Vec::new();
    'lines: for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        for token in line.split_whitespace() {
            if events.len() >= limit {
                break 'lines;
            }
            let id: Item = token.parse().map_err(|e| Error::Parse {
                line: idx + 1,
                message: format!("{token:?}: {e}"),
            })?;
            events.push(id);
        }
    }
    let max = events.iter().copied().max().ok_or(Error::EmptyDataset)?;
    let d = max
        .checked_add(1)
        .ok_or_else(|| invalid("item id overflows the domain"))?;
    Ok(Dataset { events, d })
}

/// Writes one id per line.
pub fn write_stream(path: &Path, events: &[Item]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for v in events {
        writeln!(out, "{v}")?;
    }
    out.flush()?;
    Ok(())
}
