//! Domain-shrinking randomization.
//!
//! While the heavy part is full and its weakest count exceeds one, clients
//! randomize over the `k` hot ids plus `⊥` (REDUCED mode); otherwise they use
//! full-domain GRR (ENTIRE mode). The server subtracts the per-event `q` from
//! every count on arrival and rescales all counts when the mode switches.
//!
//! Two debias variants exist. `Literal` applies the insert/final-debias
//! branches exactly as originally stated, with `p1, q1` the full-domain and
//! `p2, q2` the reduced-domain probabilities; read that way, steady REDUCED
//! subtracts `q1` and the replacement count is
//! `1 - p1 num_entire/(p1-q1) - p2 num_reduced/(p2-q2)`, which is `1 - num`
//! without noise. `Consistent` keeps every count in the units of the current
//! mode: subtract the current mode's `q`, rescale by new over old `p - q` on a
//! switch, divide by the current mode's `p - q` on query, and replace with
//! count one.

use crate::domain::{GrrParams, Item};
use crate::error::{Error, Result};
use crate::eval::memory::bounded_scheme_bytes;
use crate::heavyguardian::{HeavyGuardian, HgConfig, InsertOutcome, Insertion};
use crate::mechanisms::grr_randomize;
use crate::protocol::WireDomains;
use crate::rng::RngHandle;

use super::bulletin::weakest_is_low;
use super::{
    check_item, report_from, Bulletin, PerturbedReport, Scheme, SchemeConfig, SchemeKind,
    TopKReport, WarmShare,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DsrVariant {
    #[default]
    Literal,
    Consistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsrMode {
    Entire,
    Reduced,
}

/// Which of the four insert branches handled an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsrBranch {
    ToEntire,
    ToReduced,
    SteadyReduced,
    SteadyEntire,
}

impl DsrBranch {
    fn between(prev: DsrMode, cur: DsrMode) -> Self {
        match (prev, cur) {
            (DsrMode::Reduced, DsrMode::Entire) => DsrBranch::ToEntire,
            (DsrMode::Entire, DsrMode::Reduced) => DsrBranch::ToReduced,
            (_, DsrMode::Reduced) => DsrBranch::SteadyReduced,
            (_, DsrMode::Entire) => DsrBranch::SteadyEntire,
        }
    }

    pub fn mode(self) -> DsrMode {
        match self {
            DsrBranch::ToEntire | DsrBranch::SteadyEntire => DsrMode::Entire,
            DsrBranch::ToReduced | DsrBranch::SteadyReduced => DsrMode::Reduced,
        }
    }
}

/// Mode the server is in given its current structure.
pub fn dsr_mode(hg: &HeavyGuardian) -> DsrMode {
    if weakest_is_low(hg) {
        DsrMode::Entire
    } else {
        DsrMode::Reduced
    }
}

/// Client side: full-domain GRR when the bulletin says the weakest count is
/// low, otherwise GRR over the sorted hot ids plus `⊥` (symbol `k`).
pub fn dsr_randomize(
    v: Item,
    bulletin: &Bulletin,
    entire: &GrrParams,
    reduced: &GrrParams,
    rng: &mut RngHandle,
) -> Result<PerturbedReport> {
    if bulletin.weakest_low {
        return Ok(PerturbedReport::FullDomain(grr_randomize(v, entire, rng)));
    }
    let k = reduced.domain_size - 1;
    if bulletin.hot_len() != k {
        return Err(Error::StaleBulletin {
            expected: k,
            got: bulletin.hot_len(),
        });
    }
    let symbol = bulletin.rank(v).unwrap_or(k);
    let out = reduced.sample(symbol, rng);
    Ok(if out == k {
        PerturbedReport::Bot
    } else {
        PerturbedReport::HotSet(bulletin.sorted()[out])
    })
}

#[derive(Debug, Clone)]
pub struct Dsr {
    config: SchemeConfig,
    /// GRR over the whole domain.
    entire: GrrParams,
    /// GRR over the `k + 1` reduced symbols.
    reduced: GrrParams,
    hg: HeavyGuardian,
    warm: WarmShare,
    num_entire: u64,
    num_reduced: u64,
    last: Option<DsrBranch>,
}

impl Dsr {
    pub fn new(config: &SchemeConfig) -> Result<Self> {
        config.validate()?;
        let hg = HeavyGuardian::new(HgConfig {
            heavy_len: config.k,
            decay_base: config.decay_base,
            ..HgConfig::default()
        })?;
        Ok(Self {
            entire: GrrParams::for_level(config.level, config.d() as usize)?,
            reduced: GrrParams::for_level(config.level, config.k + 1)?,
            warm: WarmShare::new(config.k),
            config: config.clone(),
            hg,
            num_entire: 0,
            num_reduced: 0,
            last: None,
        })
    }

    pub fn entire_params(&self) -> &GrrParams {
        &self.entire
    }

    pub fn reduced_params(&self) -> &GrrParams {
        &self.reduced
    }

    pub fn variant(&self) -> DsrVariant {
        self.config.dsr_variant
    }

    pub fn counters(&self) -> (u64, u64) {
        (self.num_entire, self.num_reduced)
    }

    pub fn last_branch(&self) -> Option<DsrBranch> {
        self.last
    }

    pub fn mode(&self) -> DsrMode {
        dsr_mode(&self.hg)
    }

    /// Affine map applied to every count's post-warm-up part by `branch`.
    pub fn rescale_map(&self, branch: DsrBranch) -> Result<(f64, f64)> {
        let (e, r) = (&self.entire, &self.reduced);
        // count -> (count - shift) * factor
        Ok(match self.config.dsr_variant {
            DsrVariant::Literal => match branch {
                DsrBranch::ToEntire => (e.q, r.gap()? / e.gap()?),
                DsrBranch::ToReduced => (r.q, e.gap()? / r.gap()?),
                DsrBranch::SteadyReduced => (e.q, 1.0),
                DsrBranch::SteadyEntire => (r.q, 1.0),
            },
            DsrVariant::Consistent => match branch {
                DsrBranch::ToEntire => (r.q, e.gap()? / r.gap()?),
                DsrBranch::ToReduced => (e.q, r.gap()? / e.gap()?),
                DsrBranch::SteadyReduced => (r.q, 1.0),
                DsrBranch::SteadyEntire => (e.q, 1.0),
            },
        })
    }

    /// Count installed when an ENTIRE-mode arrival evicts the weakest slot.
    pub fn replacement_count(&self) -> Result<f64> {
        match self.config.dsr_variant {
            DsrVariant::Literal => {
                let (e, r) = (&self.entire, &self.reduced);
                Ok(1.0
                    - e.p * self.num_entire as f64 / e.gap()?
                    - r.p * self.num_reduced as f64 / r.gap()?)
            }
            DsrVariant::Consistent => Ok(1.0),
        }
    }

    /// Final-debias divisor chosen by the branch of the last event.
    pub fn final_divisor(&self) -> Result<f64> {
        let Some(branch) = self.last else {
            return Ok(1.0);
        };
        let (e, r) = (&self.entire, &self.reduced);
        match self.config.dsr_variant {
            DsrVariant::Literal => match branch.mode() {
                DsrMode::Entire => r.gap(),
                DsrMode::Reduced => e.gap(),
            },
            DsrVariant::Consistent => match branch.mode() {
                DsrMode::Entire => e.gap(),
                DsrMode::Reduced => r.gap(),
            },
        }
    }

    fn insert_entire(&mut self, r: Item, rng: &mut RngHandle) -> Result<InsertOutcome> {
        self.num_entire += 1;
        if let Some(slot) = self.hg.find(r) {
            self.hg.increment(slot, 1.0);
            return Ok(InsertOutcome::Hit { slot });
        }
        if let Some(slot) = self.hg.fill_empty(0, r, 1.0) {
            return Ok(InsertOutcome::NewSlot { slot });
        }
        let decay = self.hg.decay_bucket(0, rng).ok_or(Error::EmptyStructure)?;
        if decay.count <= 0.0 {
            let count = self.replacement_count()?;
            let old = self.hg.replace(decay.slot, r, count);
            Ok(InsertOutcome::Replaced {
                slot: decay.slot,
                old,
                new: r,
            })
        } else if decay.fired {
            Ok(InsertOutcome::Decayed { slot: decay.slot })
        } else {
            Ok(InsertOutcome::Rejected)
        }
    }

    fn insert_reduced(
        &mut self,
        report: &PerturbedReport,
        rng: &mut RngHandle,
    ) -> Result<InsertOutcome> {
        self.num_reduced += 1;
        match *report {
            PerturbedReport::HotSet(id) => {
                let slot = self.hg.find(id).ok_or_else(|| {
                    Error::ProtocolViolation(format!("hot-set report {id} is not stored"))
                })?;
                self.hg.increment(slot, 1.0);
                Ok(InsertOutcome::Hit { slot })
            }
            _ => {
                let decay = self.hg.decay_bucket(0, rng).ok_or(Error::EmptyStructure)?;
                Ok(if decay.fired {
                    InsertOutcome::Decayed { slot: decay.slot }
                } else {
                    InsertOutcome::Rejected
                })
            }
        }
    }
}

impl Scheme for Dsr {
    fn kind(&self) -> SchemeKind {
        SchemeKind::Dsr
    }

    fn wire_domains(&self) -> WireDomains {
        WireDomains::items(self.config.d())
    }

    fn bulletin(&self) -> Option<Bulletin> {
        Some(Bulletin::snapshot(&self.hg, self.events() as u32))
    }

    fn randomize(
        &self,
        v: Item,
        bulletin: Option<&Bulletin>,
        rng: &mut RngHandle,
    ) -> Result<PerturbedReport> {
        let bulletin = bulletin
            .ok_or_else(|| Error::ProtocolViolation("DSR clients need a bulletin".into()))?;
        dsr_randomize(v, bulletin, &self.entire, &self.reduced, rng)
    }

    fn warmup_insert(&mut self, v: Item, rng: &mut RngHandle) -> Result<()> {
        check_item(self.config.domain, v)?;
        self.hg.insert_heavy(v, rng);
        Ok(())
    }

    fn finish_warmup(&mut self, _len: usize) -> Result<()> {
        self.warm.capture(&self.hg);
        Ok(())
    }

    fn insert(&mut self, report: &PerturbedReport, rng: &mut RngHandle) -> Result<Insertion> {
        let cur = self.mode();
        match (cur, report) {
            (DsrMode::Entire, PerturbedReport::FullDomain(r)) => check_item(self.config.domain, *r)?,
            (DsrMode::Reduced, PerturbedReport::HotSet(r)) => check_item(self.config.domain, *r)?,
            (DsrMode::Reduced, PerturbedReport::Bot) => {}
            _ => {
                return Err(Error::ProtocolViolation(format!(
                    "DSR in {cur:?} mode cannot accept {report:?}"
                )))
            }
        }
        let prev = self.last.map(DsrBranch::mode).unwrap_or(cur);
        let branch = DsrBranch::between(prev, cur);
        let (shift, factor) = self.rescale_map(branch)?;
        let warm = &self.warm;
        self.hg
            .map_counts(|slot, c| warm.get(slot) + (c - warm.get(slot) - shift) * factor);
        let outcome = match (cur, report) {
            (DsrMode::Entire, &PerturbedReport::FullDomain(r)) => self.insert_entire(r, rng)?,
            _ => self.insert_reduced(report, rng)?,
        };
        self.hg.note_event();
        self.last = Some(branch);
        let out = Insertion::from(outcome);
        self.warm.track(&out);
        Ok(out)
    }

    fn response(&self) -> Result<TopKReport> {
        let divisor = self.final_divisor()?;
        report_from(&self.hg, self.config.k, self.events(), |slot, c| {
            let w = self.warm.get(slot);
            Ok(w + (c - w) / divisor)
        })
    }

    fn heavy_guardian(&self) -> Option<&HeavyGuardian> {
        Some(&self.hg)
    }

    fn memory_bytes(&self) -> usize {
        bounded_scheme_bytes(&self.hg, self.config.d(), self.warm.len())
    }

    fn events(&self) -> u64 {
        self.num_entire + self.num_reduced
    }
}
