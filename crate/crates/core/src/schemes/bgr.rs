//! Baseline: full-domain GRR into a plain HeavyGuardian, debiased on query.

use crate::domain::{GrrParams, Item};
use crate::error::Result;
use crate::eval::memory::bounded_scheme_bytes;
use crate::heavyguardian::{HeavyGuardian, HgConfig, Insertion};
use crate::mechanisms::grr_randomize;
use crate::protocol::WireDomains;
use crate::rng::RngHandle;

use super::{
    check_item, expect_item, report_from, Bulletin, PerturbedReport, Scheme, SchemeConfig,
    SchemeKind, TopKReport, WarmShare,
};

#[derive(Debug, Clone)]
pub struct Bgr {
    config: SchemeConfig,
    grr: GrrParams,
    hg: HeavyGuardian,
    warm: WarmShare,
    num: u64,
}

impl Bgr {
    pub fn new(config: &SchemeConfig) -> Result<Self> {
        config.validate()?;
        let hg = HeavyGuardian::new(HgConfig {
            heavy_len: config.k,
            decay_base: config.decay_base,
            ..HgConfig::default()
        })?;
        Ok(Self {
            grr: GrrParams::for_level(config.level, config.d() as usize)?,
            warm: WarmShare::new(config.k),
            config: config.clone(),
            hg,
            num: 0,
        })
    }

    pub fn params(&self) -> &GrrParams {
        &self.grr
    }

    /// `(c - num q) / (p - q)`.
    pub fn debias(&self, count: f64) -> Result<f64> {
        Ok((count - self.num as f64 * self.grr.q) / self.grr.gap()?)
    }
}

impl Scheme for Bgr {
    fn kind(&self) -> SchemeKind {
        SchemeKind::Bgr
    }

    fn wire_domains(&self) -> WireDomains {
        WireDomains::items(self.config.d())
    }

    fn bulletin(&self) -> Option<Bulletin> {
        None
    }

    fn randomize(&self, v: Item, _: Option<&Bulletin>, rng: &mut RngHandle) -> Result<PerturbedReport> {
        Ok(PerturbedReport::FullDomain(grr_randomize(v, &self.grr, rng)))
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
        let r = expect_item(report, SchemeKind::Bgr)?;
        check_item(self.config.domain, r)?;
        self.num += 1;
        let out = self.hg.insert(r, rng);
        self.warm.track(&out);
        Ok(out)
    }

    fn response(&self) -> Result<TopKReport> {
        report_from(&self.hg, self.config.k, self.num, |slot, c| {
            let w = self.warm.get(slot);
            Ok(w + self.debias(c - w)?)
        })
    }

    fn heavy_guardian(&self) -> Option<&HeavyGuardian> {
        Some(&self.hg)
    }

    fn memory_bytes(&self) -> usize {
        bounded_scheme_bytes(&self.hg, self.config.d(), self.warm.len())
    }

    fn events(&self) -> u64 {
        self.num
    }
}
