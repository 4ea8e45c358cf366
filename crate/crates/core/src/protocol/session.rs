//! Synchronous simulation: warm-up, then per event a fresh bulletin, client
//! randomization, encode, decode, server insert; finally the response.

use crate::domain::Item;
use crate::error::{invalid, Result};
use crate::heavyguardian::HeavyGuardian;
use crate::rng::{streams, RngHandle};
use crate::schemes::{PerturbedReport, Scheme, TopKReport};

use super::wire::{decode_bulletin, decode_report, encode_bulletin, encode_report_into};

pub const DEFAULT_WARMUP_FRAC: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionConfig {
    /// Leading fraction of the stream inserted without randomization.
    pub warmup_frac: f64,
    pub seed: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            warmup_frac: DEFAULT_WARMUP_FRAC,
            seed: 0,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.warmup_frac) {
            return Err(invalid(format!(
                "warm-up fraction must lie in [0, 1], got {}",
                self.warmup_frac
            )));
        }
        Ok(())
    }

    pub fn warmup_len(&self, n: usize) -> usize {
        ((n as f64 * self.warmup_frac).round() as usize).min(n)
    }
}

/// Serialized payload bytes only; no transport framing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrafficStats {
    pub uplink_bytes: u64,
    pub downlink_bytes: u64,
    pub events: u64,
    pub bot_events: u64,
    pub warmup_events: u64,
}

#[derive(Debug, Clone)]
pub struct SessionOutcome {
    pub report: TopKReport,
    pub heavy: Option<HeavyGuardian>,
    pub traffic: TrafficStats,
    pub memory_bytes: usize,
}

pub fn run_session(
    stream: &[Item],
    scheme: &mut dyn Scheme,
    config: &SessionConfig,
) -> Result<SessionOutcome> {
    config.validate()?;
    let root = RngHandle::new(config.seed);
    let clients = root.fork(streams::CLIENTS);
    let mut server = root.fork(streams::SERVER);
    let mut warm_rng = root.fork(streams::WARMUP);
    let warmup = config.warmup_len(stream.len());
    let (head, tail) = stream.split_at(warmup);

    for &v in head {
        scheme.warmup_insert(v, &mut warm_rng)?;
    }
    scheme.finish_warmup(warmup)?;

    let domains = scheme.wire_domains();
    let mut traffic = TrafficStats {
        warmup_events: warmup as u64,
        ..TrafficStats::default()
    };
    let mut frame = Vec::with_capacity(16);
    for (t, &v) in tail.iter().enumerate() {
        let bulletin = match scheme.bulletin() {
            Some(b) => {
                let bytes = encode_bulletin(&b, domains.items)?;
                traffic.downlink_bytes += bytes.len() as u64;
                Some(decode_bulletin(&bytes, domains.items)?)
            }
            None => None,
        };
        let mut client = clients.fork(t as u64);
        let report = scheme.randomize(v, bulletin.as_ref(), &mut client)?;
        frame.clear();
        encode_report_into(&report, &domains, &mut frame)?;
        traffic.uplink_bytes += frame.len() as u64;
        let received = decode_report(&frame, &domains)?;
        if received == PerturbedReport::Bot {
            traffic.bot_events += 1;
        }
        scheme.insert(&received, &mut server)?;
        traffic.events += 1;
    }

    Ok(SessionOutcome {
        report: scheme.response()?,
        heavy: scheme.heavy_guardian().cloned(),
        traffic,
        memory_bytes: scheme.memory_bytes(),
    })
}
