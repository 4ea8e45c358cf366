//! Logical byte accounting for server state.
//!
//! A heavy slot costs an id at `width(d)` plus an 8-byte count; a light slot
//! costs an id plus one counter byte. Per-slot warm-up shares cost 8 bytes
//! each. Full-domain aggregators cost 8 bytes per table cell. Fixed overheads
//! cover lengths, parameters and counters.

use crate::heavyguardian::HeavyGuardian;
use crate::protocol::width;
use crate::schemes::Scheme;

pub const STRUCTURE_OVERHEAD: usize = 32;
pub const SCHEME_OVERHEAD: usize = 64;
pub const AGGREGATOR_OVERHEAD: usize = 32;
pub const COUNT_BYTES: usize = 8;
pub const LIGHT_COUNT_BYTES: usize = 1;

pub fn heavy_part_bytes(slots: usize, d: u32) -> usize {
    slots * (width(d as u64) + COUNT_BYTES)
}

pub fn light_part_bytes(slots: usize, d: u32) -> usize {
    slots * (width(d as u64) + LIGHT_COUNT_BYTES)
}

pub fn heavy_guardian_bytes(hg: &HeavyGuardian, d: u32) -> usize {
    STRUCTURE_OVERHEAD
        + heavy_part_bytes(hg.heavy_slots().len(), d)
        + light_part_bytes(hg.light_slots().len(), d)
}

/// A bounded scheme: its structure, `warm_slots` warm-up shares, counters.
pub fn bounded_scheme_bytes(hg: &HeavyGuardian, d: u32, warm_slots: usize) -> usize {
    heavy_guardian_bytes(hg, d) + warm_slots * COUNT_BYTES + SCHEME_OVERHEAD
}

pub fn aggregator_bytes(cells: usize) -> usize {
    cells * COUNT_BYTES + AGGREGATOR_OVERHEAD
}

pub fn logical_memory_bytes(scheme: &dyn Scheme) -> usize {
    scheme.memory_bytes()
}
