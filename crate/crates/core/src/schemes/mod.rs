//! The streaming schemes: each is a client randomizer, a server insert path
//! over a [`HeavyGuardian`], and a debiasing response.
//!
//! Warm-up events are inserted raw into the heavy part. Their counts are
//! remembered per slot at the end of warm-up and excluded from debiasing;
//! a slot's warm-up share is dropped once the slot changes hands.

use std::fmt;
use std::str::FromStr;

use crate::domain::{Item, ItemDomain, PrivacyBudget, PrivacyLevel};
use crate::error::{invalid, Error, Result};
use crate::heavyguardian::{HeavyGuardian, InsertOutcome, Insertion};
use crate::protocol::WireDomains;
use crate::rng::RngHandle;

pub mod baseline;
pub mod bdr;
pub mod bgr;
pub mod bulletin;
pub mod cnr;
pub mod dsr;
pub mod report;

pub use baseline::{Baseline, PlainHg};
pub use bdr::{bdr_m_cold, bdr_m_hot, bdr_m_judge, Bdr, BdrParams};
pub use bgr::Bgr;
pub use bulletin::Bulletin;
pub use cnr::Cnr;
pub use dsr::{Dsr, DsrMode, DsrVariant};
pub use report::{PerturbedReport, TopKReport};

pub const DEFAULT_SPLIT_RATIO: f64 = 0.5;
pub const DEFAULT_CNR_LIGHT_LEN: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeKind {
    Bgr,
    Dsr,
    Bdr,
    Cnr,
    Grr,
    Olh,
    Hr,
    /// Non-private HeavyGuardian.
    None,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 8] = [
        SchemeKind::Bgr,
        SchemeKind::Dsr,
        SchemeKind::Bdr,
        SchemeKind::Cnr,
        SchemeKind::Grr,
        SchemeKind::Olh,
        SchemeKind::Hr,
        SchemeKind::None,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Bgr => "bgr",
            SchemeKind::Dsr => "dsr",
            SchemeKind::Bdr => "bdr",
            SchemeKind::Cnr => "cnr",
            SchemeKind::Grr => "grr",
            SchemeKind::Olh => "olh",
            SchemeKind::Hr => "hr",
            SchemeKind::None => "none",
        }
    }

    /// Whether the server state is a bounded HeavyGuardian.
    pub fn is_bounded(self) -> bool {
        !matches!(self, SchemeKind::Grr | SchemeKind::Olh | SchemeKind::Hr)
    }

    /// Whether `epsilon` is divided into a judge and a value part.
    pub fn uses_split(self) -> bool {
        matches!(self, SchemeKind::Bdr | SchemeKind::Cnr)
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| invalid(format!("unknown scheme {s:?}")))
    }
}

/// Everything needed to build one scheme instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    pub domain: ItemDomain,
    /// Total per-event budget.
    pub level: PrivacyLevel,
    /// `epsilon1 / epsilon2` for BDR and CNR.
    pub split_ratio: f64,
    pub k: usize,
    /// Light part length; only CNR and the plain structure use it.
    pub light_len: usize,
    pub decay_base: f64,
    /// Explicit hot fraction; overrides the warm-up estimate.
    pub gamma_h: Option<f64>,
    pub dsr_variant: DsrVariant,
}

impl SchemeConfig {
    pub fn new(kind: SchemeKind, domain: ItemDomain, level: PrivacyLevel, k: usize) -> Self {
        Self {
            kind,
            domain,
            level,
            split_ratio: DEFAULT_SPLIT_RATIO,
            k,
            light_len: if kind == SchemeKind::Cnr {
                DEFAULT_CNR_LIGHT_LEN
            } else {
                0
            },
            decay_base: crate::heavyguardian::DEFAULT_DECAY_BASE,
            gamma_h: None,
            dsr_variant: DsrVariant::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.check_capacity(self.k)?;
        if let PrivacyLevel::Epsilon(eps) = self.level {
            PrivacyBudget::new(eps)?;
            if self.kind.uses_split() {
                PrivacyBudget::with_ratio(eps, self.split_ratio)?;
            }
        }
        if let Some(g) = self.gamma_h {
            if !(0.0..=1.0).contains(&g) {
                return Err(invalid(format!("gamma_h must lie in [0, 1], got {g}")));
            }
        }
        if self.kind == SchemeKind::Cnr && self.light_len == 0 {
            return Err(invalid("CNR needs a light part"));
        }
        Ok(())
    }

    /// `(level1, level2)` for the judge and value mechanisms.
    pub fn split_levels(&self) -> Result<(PrivacyLevel, PrivacyLevel)> {
        match self.level {
            PrivacyLevel::Noiseless => Ok((PrivacyLevel::Noiseless, PrivacyLevel::Noiseless)),
            PrivacyLevel::Epsilon(eps) => {
                let budget = PrivacyBudget::with_ratio(eps, self.split_ratio)?;
                let (e1, e2) = budget.split().expect("ratio budget is split");
                Ok((PrivacyLevel::Epsilon(e1), PrivacyLevel::Epsilon(e2)))
            }
        }
    }

    pub fn d(&self) -> u32 {
        self.domain.size()
    }
}

/// One scheme instance: client randomizer plus server state.
pub trait Scheme: Send {
    fn kind(&self) -> SchemeKind;

    fn wire_domains(&self) -> WireDomains;

    /// Current snapshot for clients; `None` when clients need no server state.
    fn bulletin(&self) -> Option<Bulletin>;

    /// Client side. Reads only the bulletin and the scheme's fixed parameters.
    fn randomize(
        &self,
        v: Item,
        bulletin: Option<&Bulletin>,
        rng: &mut RngHandle,
    ) -> Result<PerturbedReport>;

    /// Inserts a raw warm-up value.
    fn warmup_insert(&mut self, v: Item, rng: &mut RngHandle) -> Result<()>;

    /// Closes the warm-up stage after `len` values.
    fn finish_warmup(&mut self, len: usize) -> Result<()>;

    fn insert(&mut self, report: &PerturbedReport, rng: &mut RngHandle) -> Result<Insertion>;

    fn response(&self) -> Result<TopKReport>;

    /// The bounded server structure, if the scheme has one.
    fn heavy_guardian(&self) -> Option<&HeavyGuardian>;

    /// Logical server-state size in bytes.
    fn memory_bytes(&self) -> usize;

    /// Post-warm-up reports received.
    fn events(&self) -> u64;
}

pub fn build_scheme(config: &SchemeConfig) -> Result<Box<dyn Scheme>> {
    config.validate()?;
    Ok(match config.kind {
        SchemeKind::Bgr => Box::new(Bgr::new(config)?),
        SchemeKind::Dsr => Box::new(Dsr::new(config)?),
        SchemeKind::Bdr => Box::new(Bdr::new(config)?),
        SchemeKind::Cnr => Box::new(Cnr::new(config)?),
        SchemeKind::Grr | SchemeKind::Olh | SchemeKind::Hr => Box::new(Baseline::new(config)?),
        SchemeKind::None => Box::new(PlainHg::new(config)?),
    })
}

/// Sum of heavy counts after warm-up over the warm-up length, in `[0, 1]`.
pub fn estimate_gamma_h(warmup_hg: &HeavyGuardian, warmup_len: usize) -> Result<f64> {
    if warmup_len == 0 {
        return Err(invalid("gamma_h needs a non-empty warm-up"));
    }
    let held: f64 = warmup_hg.heavy_slots().iter().map(|s| s.count).sum();
    Ok((held / warmup_len as f64).clamp(0.0, 1.0))
}

/// Per-slot raw counts left over from warm-up.
#[derive(Debug, Clone, PartialEq, Default)]
pub(crate) struct WarmShare {
    counts: Vec<f64>,
}

impl WarmShare {
    pub(crate) fn new(slots: usize) -> Self {
        Self {
            counts: vec![0.0; slots],
        }
    }

    pub(crate) fn capture(&mut self, hg: &HeavyGuardian) {
        for (share, slot) in self.counts.iter_mut().zip(hg.heavy_slots()) {
            *share = if slot.id.is_some() { slot.count } else { 0.0 };
        }
    }

    pub(crate) fn get(&self, slot: usize) -> f64 {
        self.counts[slot]
    }

    /// Drops the share of any slot that changed owner.
    pub(crate) fn track(&mut self, insertion: &Insertion) {
        if let InsertOutcome::Replaced { slot, .. } | InsertOutcome::NewSlot { slot } =
            insertion.heavy
        {
            self.counts[slot] = 0.0;
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.counts.len()
    }
}

/// Builds a report from `estimate(slot, count)` over the occupied heavy slots.
pub(crate) fn report_from(
    hg: &HeavyGuardian,
    k: usize,
    timestamp: u64,
    mut estimate: impl FnMut(usize, f64) -> Result<f64>,
) -> Result<TopKReport> {
    let mut entries = Vec::with_capacity(hg.heavy_slots().len());
    for (i, slot) in hg.heavy_slots().iter().enumerate() {
        if let Some(id) = slot.id {
            entries.push((id, estimate(i, slot.count)?));
        }
    }
    crate::heavyguardian::sort_ranked(&mut entries);
    entries.truncate(k);
    Ok(TopKReport { entries, timestamp })
}

pub(crate) fn expect_item(report: &PerturbedReport, scheme: SchemeKind) -> Result<Item> {
    report.item().ok_or_else(|| {
        Error::ProtocolViolation(format!("{scheme} cannot accept report {report:?}"))
    })
}

pub(crate) fn check_item(domain: ItemDomain, item: Item) -> Result<()> {
    if !domain.contains(item) {
        return Err(Error::ProtocolViolation(format!(
            "item {item} outside domain of size {}",
            domain.size()
        )));
    }
    Ok(())
}
