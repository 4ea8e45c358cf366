//! Byte-level report/bulletin encoding and the simulated client/server loop.

pub mod session;
pub mod wire;

pub use session::{run_session, SessionConfig, SessionOutcome, TrafficStats, DEFAULT_WARMUP_FRAC};
pub use wire::{
    decode_bulletin, decode_report, encode_bulletin, encode_report, width, WireDomains,
};
