//! Full-domain baselines (GRR, OLH, HR aggregators) and the non-private
//! HeavyGuardian, behind the same [`Scheme`] interface.
//!
//! Baselines keep a raw warm-up histogram and add it to their estimates.

use crate::domain::{GrrParams, Item};
use crate::error::{invalid, Error, Result};
use crate::eval::memory::{aggregator_bytes, bounded_scheme_bytes};
use crate::heavyguardian::{sort_ranked, HeavyGuardian, HgConfig, InsertOutcome, Insertion};
use crate::mechanisms::{
    grr_randomize, hr_randomize, olh_randomize, GrrAggregator, HrAggregator, HrParams,
    OlhAggregator, OlhParams,
};
use crate::protocol::WireDomains;
use crate::rng::RngHandle;

use super::{
    check_item, expect_item, Bulletin, PerturbedReport, Scheme, SchemeConfig, SchemeKind,
    TopKReport,
};

#[derive(Debug, Clone)]
enum Aggregator {
    Grr(GrrAggregator),
    Olh(OlhAggregator),
    Hr(HrAggregator),
}

#[derive(Debug, Clone)]
pub struct Baseline {
    kind: SchemeKind,
    config: SchemeConfig,
    agg: Aggregator,
    warm: Vec<u64>,
}

impl Baseline {
    pub fn new(config: &SchemeConfig) -> Result<Self> {
        config.validate()?;
        let d = config.d() as usize;
        let agg = match config.kind {
            SchemeKind::Grr => Aggregator::Grr(GrrAggregator::new(GrrParams::for_level(
                config.level,
                d,
            )?)),
            SchemeKind::Olh => Aggregator::Olh(OlhAggregator::new(OlhParams::new(config.level)?, d)),
            SchemeKind::Hr => Aggregator::Hr(HrAggregator::new(HrParams::new(config.level, d)?, d)),
            other => return Err(invalid(format!("{other} is not a full-domain baseline"))),
        };
        Ok(Self {
            kind: config.kind,
            config: config.clone(),
            agg,
            warm: vec![0; d],
        })
    }

    /// Debiased estimates for every item, warm-up counts included.
    pub fn estimates(&self) -> Result<Vec<f64>> {
        let mut est = match &self.agg {
            Aggregator::Grr(a) => a.estimates()?,
            Aggregator::Olh(a) => a.estimates()?,
            Aggregator::Hr(a) => a.estimates()?,
        };
        for (e, &w) in est.iter_mut().zip(&self.warm) {
            *e += w as f64;
        }
        Ok(est)
    }

    fn table_cells(&self) -> usize {
        match &self.agg {
            Aggregator::Grr(a) => a.raw_counts().len(),
            Aggregator::Olh(a) => a.support().len(),
            Aggregator::Hr(a) => a.params().order as usize,
        }
    }
}

impl Scheme for Baseline {
    fn kind(&self) -> SchemeKind {
        self.kind
    }

    fn wire_domains(&self) -> WireDomains {
        let mut dom = WireDomains::items(self.config.d());
        match &self.agg {
            Aggregator::Olh(a) => dom.olh_g = a.params().g,
            Aggregator::Hr(a) => dom.hr_order = a.params().order,
            Aggregator::Grr(_) => {}
        }
        dom
    }

    fn bulletin(&self) -> Option<Bulletin> {
        None
    }

    fn randomize(&self, v: Item, _: Option<&Bulletin>, rng: &mut RngHandle) -> Result<PerturbedReport> {
        Ok(match &self.agg {
            Aggregator::Grr(a) => PerturbedReport::FullDomain(grr_randomize(v, a.params(), rng)),
            Aggregator::Olh(a) => {
                let (seed, y) = olh_randomize(v, a.params(), rng);
                PerturbedReport::OlhPair { seed, y }
            }
            Aggregator::Hr(a) => PerturbedReport::HrIndex(hr_randomize(v, a.params(), rng)),
        })
    }

    fn warmup_insert(&mut self, v: Item, _: &mut RngHandle) -> Result<()> {
        check_item(self.config.domain, v)?;
        self.warm[v as usize] += 1;
        Ok(())
    }

    fn finish_warmup(&mut self, _len: usize) -> Result<()> {
        Ok(())
    }

    fn insert(&mut self, report: &PerturbedReport, _: &mut RngHandle) -> Result<Insertion> {
        match (&mut self.agg, *report) {
            (Aggregator::Grr(a), PerturbedReport::FullDomain(v)) => a.add(v)?,
            (Aggregator::Olh(a), PerturbedReport::OlhPair { seed, y }) => a.add(seed, y)?,
            (Aggregator::Hr(a), PerturbedReport::HrIndex(col)) => a.add(col)?,
            _ => {
                return Err(Error::ProtocolViolation(format!(
                    "{} cannot accept {report:?}",
                    self.kind
                )))
            }
        }
        Ok(InsertOutcome::Hit { slot: 0 }.into())
    }

    fn response(&self) -> Result<TopKReport> {
        let mut entries: Vec<(Item, f64)> = self
            .estimates()?
            .into_iter()
            .enumerate()
            .map(|(i, e)| (i as Item, e))
            .collect();
        sort_ranked(&mut entries);
        entries.truncate(self.config.k);
        Ok(TopKReport {
            entries,
            timestamp: self.events(),
        })
    }

    fn heavy_guardian(&self) -> Option<&HeavyGuardian> {
        None
    }

    /// Aggregation table plus the warm-up histogram.
    fn memory_bytes(&self) -> usize {
        aggregator_bytes(self.table_cells() + self.warm.len())
    }

    fn events(&self) -> u64 {
        match &self.agg {
            Aggregator::Grr(a) => a.reports(),
            Aggregator::Olh(a) => a.reports(),
            Aggregator::Hr(a) => a.reports(),
        }
    }
}

/// HeavyGuardian fed with raw values; the reference for differential tests.
#[derive(Debug, Clone)]
pub struct PlainHg {
    config: SchemeConfig,
    hg: HeavyGuardian,
    num: u64,
}

impl PlainHg {
    pub fn new(config: &SchemeConfig) -> Result<Self> {
        config.validate()?;
        let hg = HeavyGuardian::new(HgConfig {
            heavy_len: config.k,
            light_len: config.light_len,
            decay_base: config.decay_base,
            ..HgConfig::default()
        })?;
        Ok(Self {
            config: config.clone(),
            hg,
            num: 0,
        })
    }
}

impl Scheme for PlainHg {
    fn kind(&self) -> SchemeKind {
        SchemeKind::None
    }

    fn wire_domains(&self) -> WireDomains {
        WireDomains::items(self.config.d())
    }

    fn bulletin(&self) -> Option<Bulletin> {
        None
    }

    fn randomize(&self, v: Item, _: Option<&Bulletin>, _: &mut RngHandle) -> Result<PerturbedReport> {
        Ok(PerturbedReport::FullDomain(v))
    }

    fn warmup_insert(&mut self, v: Item, rng: &mut RngHandle) -> Result<()> {
        check_item(self.config.domain, v)?;
        self.hg.insert_heavy(v, rng);
        Ok(())
    }

    fn finish_warmup(&mut self, _len: usize) -> Result<()> {
        Ok(())
    }

    fn insert(&mut self, report: &PerturbedReport, rng: &mut RngHandle) -> Result<Insertion> {
        let v = expect_item(report, SchemeKind::None)?;
        check_item(self.config.domain, v)?;
        self.num += 1;
        Ok(self.hg.insert(v, rng))
    }

    fn response(&self) -> Result<TopKReport> {
        let mut entries = self.hg.topk();
        entries.truncate(self.config.k);
        Ok(TopKReport {
            entries,
            timestamp: self.num,
        })
    }

    fn heavy_guardian(&self) -> Option<&HeavyGuardian> {
        Some(&self.hg)
    }

    fn memory_bytes(&self) -> usize {
        bounded_scheme_bytes(&self.hg, self.config.d(), 0)
    }

    fn events(&self) -> u64 {
        self.num
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ItemDomain, PrivacyLevel};

    #[test]
    fn baselines_noiseless_topk() {
        let d = ItemDomain::new(16).unwrap();
        for kind in [SchemeKind::Grr, SchemeKind::Hr] {
            let mut s = Baseline::new(&SchemeConfig::new(kind, d, PrivacyLevel::Noiseless, 2)).unwrap();
            let mut rng = RngHandle::new(1);
            s.warmup_insert(5, &mut rng).unwrap();
            for v in std::iter::repeat_n(3u32, 3000).chain(std::iter::repeat_n(9, 1000)) {
                let r = s.randomize(v, None, &mut rng).unwrap();
                s.insert(&r, &mut rng).unwrap();
            }
            let rep = s.response().unwrap();
            assert_eq!(rep.ids(), vec![3, 9], "{kind}");
            assert_eq!(rep.timestamp, 4000);
        }
    }

    #[test]
    fn wrong_report_kind() {
        let d = ItemDomain::new(16).unwrap();
        let mut s = Baseline::new(&SchemeConfig::new(SchemeKind::Hr, d, PrivacyLevel::Epsilon(1.0), 2))
            .unwrap();
        let mut rng = RngHandle::new(0);
        assert!(s.insert(&PerturbedReport::FullDomain(1), &mut rng).is_err());
        assert_eq!(s.wire_domains().hr_order, 32);
    }

    #[test]
    fn memory_grows_with_domain() {
        let small = Baseline::new(&SchemeConfig::new(
            SchemeKind::Grr,
            ItemDomain::new(1000).unwrap(),
            PrivacyLevel::Epsilon(1.0),
            20,
        ))
        .unwrap();
        let large = Baseline::new(&SchemeConfig::new(
            SchemeKind::Grr,
            ItemDomain::new(16_000).unwrap(),
            PrivacyLevel::Epsilon(1.0),
            20,
        ))
        .unwrap();
        let ratio = large.memory_bytes() as f64 / small.memory_bytes() as f64;
        assert!((15.0..=16.0).contains(&ratio), "ratio {ratio}");
    }
}
