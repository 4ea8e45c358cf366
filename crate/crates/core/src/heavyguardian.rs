//! HeavyGuardian: a bounded-memory top-k structure.
//!
//! Each bucket holds a heavy part of `heavy_len` `(id, count)` slots and an
//! optional light part of `light_len` small saturating counters. Insertion
//! follows the Exponential Decay (ED) strategy:
//!
//! 1. the item is already stored: its count grows by one;
//! 2. the item is absent and a slot is free: it is stored with count one;
//! 3. otherwise the weakest (minimum count `c`) slot loses one with
//!    probability `b^-c`; if that leaves it at or below zero it is replaced.
//!
//! Counts are `f64` because some schemes debias stored counts in place and
//! leave fractional or negative values behind. The decay probability clamps
//! `c` at zero, so a non-positive weakest count always decays.
//!
//! Ties are broken by lowest slot index for weakest/king lookups and by
//! lowest id for top-k ordering.

use rand::Rng;

use crate::domain::Item;
use crate::error::{invalid, Error, Result};
use crate::hash::hash_to_range;
use crate::sampling::sample_exp_neg;

pub const DEFAULT_DECAY_BASE: f64 = 1.08;
pub const DEFAULT_LIGHT_BITS: u8 = 4;

/// What fills a heavy slot whose count dropped to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReplacementPolicy {
    /// The arriving item takes the slot (the classic structure).
    #[default]
    Arrival,
    /// The highest-count light entry is promoted; the arriving item only
    /// feeds the light part.
    LightKing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HgConfig {
    pub heavy_len: usize,
    pub light_len: usize,
    pub decay_base: f64,
    pub buckets: usize,
    /// Semantic width of a light counter; counts saturate at `2^bits - 1`.
    pub light_bits: u8,
    pub policy: ReplacementPolicy,
    pub hash_seed: u64,
}

impl Default for HgConfig {
    fn default() -> Self {
        Self {
            heavy_len: 20,
            light_len: 0,
            decay_base: DEFAULT_DECAY_BASE,
            buckets: 1,
            light_bits: DEFAULT_LIGHT_BITS,
            policy: ReplacementPolicy::Arrival,
            hash_seed: 0,
        }
    }
}

impl HgConfig {
    pub fn with_heavy(heavy_len: usize) -> Self {
        Self {
            heavy_len,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.heavy_len == 0 {
            return Err(invalid("heavy part length must be > 0"));
        }
        if self.buckets == 0 {
            return Err(invalid("bucket count must be > 0"));
        }
        if !(self.decay_base.is_finite() && self.decay_base > 1.0) {
            return Err(invalid(format!(
                "decay base must be > 1, got {}",
                self.decay_base
            )));
        }
        if self.light_bits == 0 || self.light_bits > 8 {
            return Err(invalid("light counter width must be 1..=8 bits"));
        }
        if self.policy == ReplacementPolicy::LightKing && self.light_len == 0 {
            return Err(invalid("light-king replacement needs a light part"));
        }
        Ok(())
    }

    pub fn light_max(&self) -> u8 {
        ((1u16 << self.light_bits) - 1) as u8
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeavySlot {
    pub id: Option<Item>,
    pub count: f64,
}

impl HeavySlot {
    const EMPTY: HeavySlot = HeavySlot {
        id: None,
        count: 0.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LightSlot {
    pub id: Option<Item>,
    pub count: u8,
}

impl LightSlot {
    const EMPTY: LightSlot = LightSlot { id: None, count: 0 };
}

/// Result of one ED step. Slot indices are flattened across buckets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InsertOutcome {
    Hit { slot: usize },
    NewSlot { slot: usize },
    Decayed { slot: usize },
    Replaced { slot: usize, old: Item, new: Item },
    Rejected,
}

impl InsertOutcome {
    /// Whether the arriving item ended up stored in the part that was updated.
    pub fn accepted(&self, item: Item) -> bool {
        match *self {
            InsertOutcome::Hit { .. } | InsertOutcome::NewSlot { .. } => true,
            InsertOutcome::Replaced { new, .. } => new == item,
            _ => false,
        }
    }
}

/// Outcome of an insertion that may touch both parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Insertion {
    pub heavy: InsertOutcome,
    pub light: Option<InsertOutcome>,
}

impl From<InsertOutcome> for Insertion {
    fn from(heavy: InsertOutcome) -> Self {
        Insertion { heavy, light: None }
    }
}

/// Result of a bare decay attempt on the weakest heavy slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decay {
    pub slot: usize,
    pub fired: bool,
    pub count: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeavyGuardian {
    config: HgConfig,
    ln_base: f64,
    heavy: Vec<HeavySlot>,
    light: Vec<LightSlot>,
    total_inserted: u64,
}

impl HeavyGuardian {
    pub fn new(config: HgConfig) -> Result<Self> {
        config.validate()?;
        let heavy = vec![HeavySlot::EMPTY; config.heavy_len * config.buckets];
        let light = vec![LightSlot::EMPTY; config.light_len * config.buckets];
        Ok(Self {
            ln_base: config.decay_base.ln(),
            config,
            heavy,
            light,
            total_inserted: 0,
        })
    }

    pub fn config(&self) -> &HgConfig {
        &self.config
    }

    pub fn total_inserted(&self) -> u64 {
        self.total_inserted
    }

    pub fn heavy_slots(&self) -> &[HeavySlot] {
        &self.heavy
    }

    pub fn light_slots(&self) -> &[LightSlot] {
        &self.light
    }

    /// Number of occupied heavy slots.
    pub fn occupancy(&self) -> usize {
        self.heavy.iter().filter(|s| s.id.is_some()).count()
    }

    pub fn is_full(&self) -> bool {
        self.heavy.iter().all(|s| s.id.is_some())
    }

    pub fn bucket_of(&self, item: Item) -> usize {
        if self.config.buckets == 1 {
            0
        } else {
            hash_to_range(self.config.hash_seed, item, self.config.buckets as u32) as usize
        }
    }

    fn heavy_range(&self, bucket: usize) -> std::ops::Range<usize> {
        let len = self.config.heavy_len;
        bucket * len..(bucket + 1) * len
    }

    fn light_range(&self, bucket: usize) -> std::ops::Range<usize> {
        let len = self.config.light_len;
        bucket * len..(bucket + 1) * len
    }

    /// Flattened heavy slot holding `item`, if any.
    pub fn find(&self, item: Item) -> Option<usize> {
        let range = self.heavy_range(self.bucket_of(item));
        range
            .clone()
            .zip(&self.heavy[range])
            .find(|(_, s)| s.id == Some(item))
            .map(|(i, _)| i)
    }

    pub fn contains(&self, item: Item) -> bool {
        self.find(item).is_some()
    }

    pub fn count_of(&self, item: Item) -> Option<f64> {
        self.find(item).map(|i| self.heavy[i].count)
    }

    /// Minimum-count occupied heavy slot; ties go to the lowest index.
    pub fn weakest(&self) -> Result<(usize, f64)> {
        weakest_in(self.heavy.iter().enumerate()).ok_or(Error::EmptyStructure)
    }

    fn weakest_in_bucket(&self, bucket: usize) -> Option<(usize, f64)> {
        let range = self.heavy_range(bucket);
        weakest_in(range.clone().zip(&self.heavy[range]))
    }

    /// The "least count" used by the schemes' mode decisions: a free slot
    /// counts as zero.
    pub fn least_count(&self) -> f64 {
        if !self.is_full() {
            return 0.0;
        }
        self.weakest().map(|(_, c)| c).unwrap_or(0.0)
    }

    /// Stored heavy ids in slot order.
    pub fn hot_ids(&self) -> Vec<Item> {
        self.heavy.iter().filter_map(|s| s.id).collect()
    }

    /// Heavy entries sorted by count descending, ties by lowest id.
    pub fn topk(&self) -> Vec<(Item, f64)> {
        let mut out: Vec<(Item, f64)> = self
            .heavy
            .iter()
            .filter_map(|s| s.id.map(|id| (id, s.count)))
            .collect();
        sort_ranked(&mut out);
        out
    }

    /// Full ED insertion of a raw item.
    pub fn insert<R: Rng + ?Sized>(&mut self, item: Item, rng: &mut R) -> Insertion {
        self.total_inserted += 1;
        if let Some(slot) = self.find(item) {
            self.heavy[slot].count += 1.0;
            return InsertOutcome::Hit { slot }.into();
        }
        let bucket = self.bucket_of(item);
        if let Some(slot) = self.fill_empty(bucket, item, 1.0) {
            self.clear_light(item);
            return InsertOutcome::NewSlot { slot }.into();
        }
        let decay = self
            .decay_bucket(bucket, rng)
            .expect("full bucket has a weakest slot");
        match self.config.policy {
            ReplacementPolicy::Arrival => {
                if decay.count <= 0.0 {
                    let old = self.replace(decay.slot, item, 1.0);
                    self.clear_light(item);
                    return InsertOutcome::Replaced {
                        slot: decay.slot,
                        old,
                        new: item,
                    }
                    .into();
                }
                let heavy = if decay.fired {
                    InsertOutcome::Decayed { slot: decay.slot }
                } else {
                    InsertOutcome::Rejected
                };
                let light = (self.config.light_len > 0)
                    .then(|| self.light_insert_unchecked(item, rng));
                Insertion { heavy, light }
            }
            ReplacementPolicy::LightKing => {
                let light = Some(self.light_insert_unchecked(item, rng));
                let heavy = match self.promote_if_exhausted(bucket) {
                    Some(outcome) => outcome,
                    None if decay.fired => InsertOutcome::Decayed { slot: decay.slot },
                    None => InsertOutcome::Rejected,
                };
                Insertion { heavy, light }
            }
        }
    }

    /// Counts an event in `total_inserted` without touching the slots.
    pub fn note_event(&mut self) {
        self.total_inserted += 1;
    }

    /// Case 2 helper: stores `item` in the first free slot of `bucket`.
    pub fn fill_empty(&mut self, bucket: usize, item: Item, count: f64) -> Option<usize> {
        let range = self.heavy_range(bucket);
        let slot = range.clone().find(|&i| self.heavy[i].id.is_none())?;
        self.heavy[slot] = HeavySlot {
            id: Some(item),
            count,
        };
        Some(slot)
    }

    pub fn increment(&mut self, slot: usize, by: f64) {
        self.heavy[slot].count += by;
    }

    /// Case 3 helper: tries to decay the weakest slot of `bucket` by one.
    pub fn decay_bucket<R: Rng + ?Sized>(&mut self, bucket: usize, rng: &mut R) -> Option<Decay> {
        let (slot, count) = self.weakest_in_bucket(bucket)?;
        let fired = sample_exp_neg(count.max(0.0) * self.ln_base, rng);
        if fired {
            self.heavy[slot].count -= 1.0;
        }
        Some(Decay {
            slot,
            fired,
            count: self.heavy[slot].count,
        })
    }

    /// Overwrites a slot, returning the evicted id.
    pub fn replace(&mut self, slot: usize, item: Item, count: f64) -> Item {
        let old = self.heavy[slot].id.expect("replacing an occupied slot");
        self.heavy[slot] = HeavySlot {
            id: Some(item),
            count,
        };
        old
    }

    /// Applies `f(slot, count)` to every occupied heavy count.
    pub fn map_counts(&mut self, mut f: impl FnMut(usize, f64) -> f64) {
        for (i, slot) in self.heavy.iter_mut().enumerate() {
            if slot.id.is_some() {
                slot.count = f(i, slot.count);
            }
        }
    }

    /// Warm-up insertion: ED on the heavy part only, replacing with the
    /// arriving item regardless of the configured policy.
    pub fn insert_heavy<R: Rng + ?Sized>(&mut self, item: Item, rng: &mut R) -> InsertOutcome {
        self.total_inserted += 1;
        if let Some(slot) = self.find(item) {
            self.heavy[slot].count += 1.0;
            return InsertOutcome::Hit { slot };
        }
        let bucket = self.bucket_of(item);
        if let Some(slot) = self.fill_empty(bucket, item, 1.0) {
            return InsertOutcome::NewSlot { slot };
        }
        let decay = self
            .decay_bucket(bucket, rng)
            .expect("full bucket has a weakest slot");
        if decay.count <= 0.0 {
            let old = self.replace(decay.slot, item, 1.0);
            InsertOutcome::Replaced {
                slot: decay.slot,
                old,
                new: item,
            }
        } else if decay.fired {
            InsertOutcome::Decayed { slot: decay.slot }
        } else {
            InsertOutcome::Rejected
        }
    }

    /// ED insertion into the light part. The item must not be in the heavy part.
    pub fn light_insert<R: Rng + ?Sized>(&mut self, item: Item, rng: &mut R) -> Result<InsertOutcome> {
        if self.config.light_len == 0 {
            return Err(invalid("light part has zero length"));
        }
        if self.contains(item) {
            return Err(invalid(format!("item {item} is already in the heavy part")));
        }
        Ok(self.light_insert_unchecked(item, rng))
    }

    fn light_insert_unchecked<R: Rng + ?Sized>(&mut self, item: Item, rng: &mut R) -> InsertOutcome {
        let range = self.light_range(self.bucket_of(item));
        let max = self.config.light_max();
        if let Some(slot) = range.clone().find(|&i| self.light[i].id == Some(item)) {
            let c = &mut self.light[slot].count;
            *c = c.saturating_add(1).min(max);
            return InsertOutcome::Hit { slot };
        }
        if let Some(slot) = range.clone().find(|&i| self.light[i].id.is_none()) {
            self.light[slot] = LightSlot {
                id: Some(item),
                count: 1,
            };
            return InsertOutcome::NewSlot { slot };
        }
        let mut weakest = range.start;
        for i in range {
            if self.light[i].count < self.light[weakest].count {
                weakest = i;
            }
        }
        let count = self.light[weakest].count;
        if !sample_exp_neg(count as f64 * self.ln_base, rng) {
            return InsertOutcome::Rejected;
        }
        let slot = &mut self.light[weakest];
        slot.count = slot.count.saturating_sub(1);
        if slot.count == 0 {
            let old = slot.id.replace(item).expect("light slot occupied");
            slot.count = 1;
            InsertOutcome::Replaced {
                slot: weakest,
                old,
                new: item,
            }
        } else {
            InsertOutcome::Decayed { slot: weakest }
        }
    }

    /// Highest-count light id; ties go to the lowest slot index.
    pub fn light_king(&self) -> Result<Item> {
        self.light_king_in(0..self.light.len())
            .map(|i| self.light[i].id.expect("king slot occupied"))
            .ok_or(Error::NoCandidate)
    }

    fn light_king_in(&self, range: std::ops::Range<usize>) -> Option<usize> {
        let mut best: Option<usize> = None;
        for i in range {
            if self.light[i].id.is_none() {
                continue;
            }
            match best {
                Some(b) if self.light[b].count >= self.light[i].count => {}
                _ => best = Some(i),
            }
        }
        best
    }

    /// If the weakest heavy slot of `bucket` is at or below zero, replaces it
    /// with the bucket's light king (count one) and clears the king's light
    /// slot.
    pub fn promote_if_exhausted(&mut self, bucket: usize) -> Option<InsertOutcome> {
        let (slot, count) = self.weakest_in_bucket(bucket)?;
        if count > 0.0 {
            return None;
        }
        let king_slot = self.light_king_in(self.light_range(bucket))?;
        let king = self.light[king_slot].id.expect("king slot occupied");
        self.light[king_slot] = LightSlot::EMPTY;
        let old = self.replace(slot, king, 1.0);
        Some(InsertOutcome::Replaced {
            slot,
            old,
            new: king,
        })
    }

    fn clear_light(&mut self, item: Item) {
        if self.config.light_len == 0 {
            return;
        }
        let range = self.light_range(self.bucket_of(item));
        for slot in &mut self.light[range] {
            if slot.id == Some(item) {
                *slot = LightSlot::EMPTY;
            }
        }
    }
}

fn weakest_in<'a>(slots: impl Iterator<Item = (usize, &'a HeavySlot)>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in slots {
        if s.id.is_none() {
            continue;
        }
        match best {
            Some((_, c)) if c <= s.count => {}
            _ => best = Some((i, s.count)),
        }
    }
    best
}

/// Sorts `(id, count)` by count descending, then id ascending.
pub fn sort_ranked(entries: &mut [(Item, f64)]) {
    entries.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
}
