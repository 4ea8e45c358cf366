//! Budget-divided randomization.
//!
//! A binary judge spends `epsilon1` on "is my value hot?". A HOT answer is
//! followed by GRR over the hot ids with `epsilon2` (a cold value maps to a
//! uniform hot id). A COLD answer sends `⊥`, unless the bulletin says the
//! weakest count is low, in which case the value is randomized over the cold
//! ids with `epsilon2` so the server has a concrete replacement candidate.
//! CNR reuses the same server type with the cold route always taken.

use rand::Rng;

use crate::domain::{GrrParams, Item, PrivacyLevel};
use crate::error::{invalid, Error, Result};
use crate::eval::memory::bounded_scheme_bytes;
use crate::heavyguardian::{HeavyGuardian, HgConfig, InsertOutcome, Insertion, ReplacementPolicy};
use crate::protocol::WireDomains;
use crate::rng::RngHandle;

use super::{
    check_item, estimate_gamma_h, report_from, Bulletin, PerturbedReport, Scheme, SchemeConfig,
    SchemeKind, TopKReport, WarmShare,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JudgeFlag {
    Hot,
    Cold,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BdrParams {
    pub level1: PrivacyLevel,
    pub level2: PrivacyLevel,
    /// Binary randomized response: `p1 = e^eps1/(e^eps1+1)`.
    pub judge: GrrParams,
    /// GRR over `k` hot ids: `p2 = e^eps2/(e^eps2+k-1)`.
    pub hot: GrrParams,
    pub k: usize,
    pub d: u32,
}

impl BdrParams {
    pub fn new(level1: PrivacyLevel, level2: PrivacyLevel, k: usize, d: u32) -> Result<Self> {
        if k == 0 || k as u64 >= d as u64 {
            return Err(invalid(format!("need 0 < k < d, got k={k}, d={d}")));
        }
        Ok(Self {
            level1,
            level2,
            judge: GrrParams::for_level(level1, 2)?,
            hot: GrrParams::for_level(level2, k)?,
            k,
            d,
        })
    }

    pub fn from_config(config: &SchemeConfig) -> Result<Self> {
        let (l1, l2) = config.split_levels()?;
        Self::new(l1, l2, config.k, config.d())
    }

    pub fn p1(&self) -> f64 {
        self.judge.p
    }

    pub fn q1(&self) -> f64 {
        self.judge.q
    }

    pub fn p2(&self) -> f64 {
        self.hot.p
    }

    pub fn q2(&self) -> f64 {
        self.hot.q
    }

    fn denominator(&self) -> Result<f64> {
        let den = self.p1() * (self.p2() - self.q2());
        if den == 0.0 || !den.is_finite() {
            return Err(Error::Degenerate("p1 (p2 - q2) is zero"));
        }
        Ok(den)
    }

    /// `(f - gamma num (p1 q2 - q1/k) - num q1/k) / (p1 (p2 - q2))`.
    pub fn debias(&self, noisy: f64, num: f64, gamma_h: f64) -> Result<f64> {
        let k = self.k as f64;
        let (p1, q1, q2) = (self.p1(), self.q1(), self.q2());
        Ok((noisy - gamma_h * num * (p1 * q2 - q1 / k) - num * q1 / k) / self.denominator()?)
    }

    /// `(f - num (gamma p1 q2 + (1 - gamma) q1/k)) / (p1 (p2 - q2))`.
    pub fn debias_response_form(&self, noisy: f64, num: f64, gamma_h: f64) -> Result<f64> {
        let k = self.k as f64;
        let (p1, q1, q2) = (self.p1(), self.q1(), self.q2());
        let offset = num * (gamma_h * p1 * q2 + (1.0 - gamma_h) * q1 / k);
        Ok((noisy - offset) / self.denominator()?)
    }
}

/// Binary randomized response on hot-set membership.
pub fn bdr_m_judge<R: Rng + ?Sized>(
    v: Item,
    bulletin: &Bulletin,
    judge: &GrrParams,
    rng: &mut R,
) -> JudgeFlag {
    let truth = bulletin.is_hot(v) as usize;
    if judge.sample(truth, rng) == 1 {
        JudgeFlag::Hot
    } else {
        JudgeFlag::Cold
    }
}

/// GRR over the `h` published hot ids; a cold value maps to a uniform hot id.
pub fn bdr_m_hot<R: Rng + ?Sized>(
    v: Item,
    bulletin: &Bulletin,
    level2: PrivacyLevel,
    rng: &mut R,
) -> Result<PerturbedReport> {
    let hot = bulletin.sorted();
    if hot.is_empty() {
        return Err(Error::EmptyStructure);
    }
    let out = match bulletin.rank(v) {
        Some(rank) => GrrParams::for_level(level2, hot.len())?.sample(rank, rng),
        None => rng.random_range(0..hot.len()),
    };
    Ok(PerturbedReport::HotSet(hot[out]))
}

/// GRR over the `d - h` cold ids; a hot value maps to a uniform cold id.
pub fn bdr_m_cold<R: Rng + ?Sized>(
    v: Item,
    bulletin: &Bulletin,
    level2: PrivacyLevel,
    d: u32,
    rng: &mut R,
) -> Result<PerturbedReport> {
    let hot = bulletin.sorted();
    let cold = (d as usize)
        .checked_sub(hot.len())
        .filter(|&c| c >= 2)
        .ok_or_else(|| invalid(format!("cold domain too small: d={d}, hot={}", hot.len())))?;
    let rank = match bulletin.rank(v) {
        Some(_) => rng.random_range(0..cold),
        None => {
            let below = hot.partition_point(|&h| h < v);
            let own = v as usize - below;
            GrrParams::for_level(level2, cold)?.sample(own, rng)
        }
    };
    Ok(PerturbedReport::FullDomain(cold_item(hot, rank)))
}

/// The `rank`-th id (0-based) of `0..d` not in the sorted `hot` list.
pub fn cold_item(hot: &[Item], rank: usize) -> Item {
    let mut x = rank as Item;
    for &h in hot {
        if h <= x {
            x += 1;
        } else {
            break;
        }
    }
    x
}

/// The per-event randomizer shared by BDR (`always_cold = false`) and CNR.
pub fn judge_randomize<R: Rng + ?Sized>(
    v: Item,
    bulletin: &Bulletin,
    params: &BdrParams,
    always_cold: bool,
    rng: &mut R,
) -> Result<PerturbedReport> {
    match bdr_m_judge(v, bulletin, &params.judge, rng) {
        JudgeFlag::Hot if bulletin.hot_len() == 0 && !always_cold => Ok(PerturbedReport::Bot),
        JudgeFlag::Hot if bulletin.hot_len() == 0 => {
            bdr_m_cold(v, bulletin, params.level2, params.d, rng)
        }
        JudgeFlag::Hot => bdr_m_hot(v, bulletin, params.level2, rng),
        JudgeFlag::Cold if always_cold || bulletin.weakest_low => {
            bdr_m_cold(v, bulletin, params.level2, params.d, rng)
        }
        JudgeFlag::Cold => Ok(PerturbedReport::Bot),
    }
}

pub fn bdr_randomize<R: Rng + ?Sized>(
    v: Item,
    bulletin: &Bulletin,
    params: &BdrParams,
    rng: &mut R,
) -> Result<PerturbedReport> {
    judge_randomize(v, bulletin, params, false, rng)
}

/// Server state for BDR and CNR.
#[derive(Debug, Clone)]
pub struct JudgeScheme {
    kind: SchemeKind,
    config: SchemeConfig,
    params: BdrParams,
    hg: HeavyGuardian,
    warm: WarmShare,
    num: u64,
    gamma_h: Option<f64>,
}

pub type Bdr = JudgeScheme;

impl JudgeScheme {
    /// Builds BDR or CNR according to `config.kind`.
    pub fn new(config: &SchemeConfig) -> Result<Self> {
        config.validate()?;
        let (light_len, policy) = match config.kind {
            SchemeKind::Bdr => (0, ReplacementPolicy::Arrival),
            SchemeKind::Cnr => (config.light_len, ReplacementPolicy::LightKing),
            other => return Err(invalid(format!("{other} is not a judge-based scheme"))),
        };
        let hg = HeavyGuardian::new(HgConfig {
            heavy_len: config.k,
            light_len,
            decay_base: config.decay_base,
            policy,
            ..HgConfig::default()
        })?;
        Ok(Self {
            kind: config.kind,
            params: BdrParams::from_config(config)?,
            warm: WarmShare::new(config.k),
            gamma_h: config.gamma_h,
            config: config.clone(),
            hg,
            num: 0,
        })
    }

    pub fn params(&self) -> &BdrParams {
        &self.params
    }

    /// Hot fraction used for debiasing, once known.
    pub fn gamma_h(&self) -> Option<f64> {
        self.gamma_h
    }

    pub fn set_gamma_h(&mut self, gamma_h: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&gamma_h) {
            return Err(invalid(format!("gamma_h must lie in [0, 1], got {gamma_h}")));
        }
        self.gamma_h = Some(gamma_h);
        Ok(())
    }

    fn always_cold(&self) -> bool {
        self.kind == SchemeKind::Cnr
    }

    fn effective_gamma(&self) -> Result<f64> {
        match (self.gamma_h, self.config.level) {
            (Some(g), _) => Ok(g),
            (None, PrivacyLevel::Noiseless) => Ok(0.0),
            (None, _) => Err(invalid(
                "gamma_h is unknown: set it explicitly or run a warm-up stage",
            )),
        }
    }

    fn decay_only(&mut self, rng: &mut RngHandle) -> InsertOutcome {
        self.hg.note_event();
        if !self.hg.is_full() {
            return InsertOutcome::Rejected;
        }
        match self.hg.decay_bucket(0, rng) {
            Some(d) if d.fired => InsertOutcome::Decayed { slot: d.slot },
            _ => InsertOutcome::Rejected,
        }
    }
}

impl Scheme for JudgeScheme {
    fn kind(&self) -> SchemeKind {
        self.kind
    }

    fn wire_domains(&self) -> WireDomains {
        WireDomains::items(self.config.d())
    }

    fn bulletin(&self) -> Option<Bulletin> {
        Some(Bulletin::snapshot(&self.hg, self.num as u32))
    }

    fn randomize(
        &self,
        v: Item,
        bulletin: Option<&Bulletin>,
        rng: &mut RngHandle,
    ) -> Result<PerturbedReport> {
        let bulletin = bulletin.ok_or_else(|| {
            Error::ProtocolViolation(format!("{} clients need a bulletin", self.kind))
        })?;
        judge_randomize(v, bulletin, &self.params, self.always_cold(), rng)
    }

    fn warmup_insert(&mut self, v: Item, rng: &mut RngHandle) -> Result<()> {
        check_item(self.config.domain, v)?;
        self.hg.insert_heavy(v, rng);
        Ok(())
    }

    fn finish_warmup(&mut self, len: usize) -> Result<()> {
        self.warm.capture(&self.hg);
        if self.gamma_h.is_none() && len > 0 {
            self.gamma_h = Some(estimate_gamma_h(&self.hg, len)?);
        }
        Ok(())
    }

    fn insert(&mut self, report: &PerturbedReport, rng: &mut RngHandle) -> Result<Insertion> {
        let out = match *report {
            PerturbedReport::FullDomain(r) | PerturbedReport::HotSet(r) => {
                check_item(self.config.domain, r)?;
                self.hg.insert(r, rng)
            }
            PerturbedReport::Bot if !self.always_cold() => self.decay_only(rng).into(),
            _ => {
                return Err(Error::ProtocolViolation(format!(
                    "{} cannot accept {report:?}",
                    self.kind
                )))
            }
        };
        self.num += 1;
        self.warm.track(&out);
        Ok(out)
    }

    fn response(&self) -> Result<TopKReport> {
        let gamma = self.effective_gamma()?;
        let num = self.num as f64;
        report_from(&self.hg, self.config.k, self.num, |slot, c| {
            let w = self.warm.get(slot);
            Ok(w + self.params.debias(c - w, num, gamma)?)
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ItemDomain;
    use proptest::prelude::*;

    fn bdr(level: PrivacyLevel) -> Bdr {
        let c = SchemeConfig::new(SchemeKind::Bdr, ItemDomain::new(20).unwrap(), level, 3);
        Bdr::new(&c).unwrap()
    }

    #[test]
    fn params_probabilities() {
        let p = BdrParams::new(
            PrivacyLevel::Epsilon(3f64.ln()),
            PrivacyLevel::Epsilon(1.0),
            4,
            100,
        )
        .unwrap();
        assert!((p.p1() - 0.75).abs() < 1e-12);
        assert!((p.p1() + p.q1() - 1.0).abs() < 1e-12);
        assert!((p.p2() + 3.0 * p.q2() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noiseless_routes() {
        let s = bdr(PrivacyLevel::Noiseless);
        let mut rng = RngHandle::new(0);
        let b = Bulletin::new(0, vec![4, 9, 2], false);
        assert_eq!(s.randomize(9, Some(&b), &mut rng).unwrap(), PerturbedReport::HotSet(9));
        assert_eq!(s.randomize(5, Some(&b), &mut rng).unwrap(), PerturbedReport::Bot);
        let low = Bulletin::new(0, vec![4, 9, 2], true);
        assert_eq!(
            s.randomize(5, Some(&low), &mut rng).unwrap(),
            PerturbedReport::FullDomain(5)
        );
    }

    #[test]
    fn m_hot_single_id() {
        let b = Bulletin::new(0, vec![6], false);
        let mut rng = RngHandle::new(0);
        for v in [6, 1] {
            let r = bdr_m_hot(v, &b, PrivacyLevel::Epsilon(1.0), &mut rng).unwrap();
            assert_eq!(r, PerturbedReport::HotSet(6));
        }
    }

    #[test]
    fn m_cold_maps_past_hot_ids() {
        let hot = [1, 3, 4];
        let cold: Vec<Item> = (0..6).map(|r| cold_item(&hot, r)).collect();
        assert_eq!(cold, vec![0, 2, 5, 6, 7, 8]);
        let b = Bulletin::new(0, hot.to_vec(), true);
        let mut rng = RngHandle::new(0);
        for v in [0, 2, 5, 8] {
            let r = bdr_m_cold(v, &b, PrivacyLevel::Noiseless, 9, &mut rng).unwrap();
            assert_eq!(r, PerturbedReport::FullDomain(v));
        }
        assert!(bdr_m_cold(0, &b, PrivacyLevel::Noiseless, 4, &mut rng).is_err());
    }

    #[test]
    fn m_cold_hot_input_uniform() {
        // d - k = 10; chi-square over 10^5 draws, 9 degrees of freedom.
        let b = Bulletin::new(0, vec![0, 5, 11], true);
        let mut rng = RngHandle::new(21);
        let mut hist = [0u32; 13];
        let n = 100_000;
        for _ in 0..n {
            let PerturbedReport::FullDomain(c) =
                bdr_m_cold(5, &b, PrivacyLevel::Epsilon(1.0), 13, &mut rng).unwrap()
            else {
                panic!()
            };
            hist[c as usize] += 1;
        }
        assert_eq!(hist[0] + hist[5] + hist[11], 0);
        let expected = n as f64 / 10.0;
        let chi2: f64 = hist
            .iter()
            .enumerate()
            .filter(|(i, _)| ![0, 5, 11].contains(i))
            .map(|(_, &o)| (o as f64 - expected).powi(2) / expected)
            .sum();
        // 99.9th percentile of chi-square with 9 dof.
        assert!(chi2 < 27.88, "chi2 = {chi2}");
    }

    #[test]
    fn debias_root_and_identity() {
        let s = bdr(PrivacyLevel::Epsilon(1.0));
        let p = s.params;
        let (num, g) = (1000.0, 0.9);
        let k = p.k as f64;
        let root = num * (g * p.p1() * p.q2() + (1.0 - g) * p.q1() / k);
        assert!(p.debias(root, num, g).unwrap().abs() < 1e-9);
        let n = bdr(PrivacyLevel::Noiseless).params;
        assert_eq!(n.debias(37.0, 1000.0, 0.4).unwrap(), 37.0);
    }

    #[test]
    fn bot_decays_only() {
        let mut s = bdr(PrivacyLevel::Noiseless);
        let mut rng = RngHandle::new(4);
        for v in [1, 2, 3] {
            s.insert(&PerturbedReport::FullDomain(v), &mut rng).unwrap();
        }
        let before: f64 = s.hg.heavy_slots().iter().map(|h| h.count).sum();
        for _ in 0..20 {
            let out = s.insert(&PerturbedReport::Bot, &mut rng).unwrap();
            assert!(!matches!(out.heavy, InsertOutcome::Replaced { .. }));
        }
        let after: f64 = s.hg.heavy_slots().iter().map(|h| h.count).sum();
        assert!(after < before);
        assert_eq!(s.hg.occupancy(), 3);
        assert_eq!(s.events(), 23);
    }

    #[test]
    fn gamma_required_when_noisy() {
        let s = bdr(PrivacyLevel::Epsilon(1.0));
        assert!(s.response().is_err());
        let mut s = bdr(PrivacyLevel::Epsilon(1.0));
        s.set_gamma_h(0.5).unwrap();
        assert!(s.response().is_ok());
    }

    proptest! {
        #[test]
        fn debias_forms_agree(
            e1 in 0.05f64..5.0,
            e2 in 0.05f64..5.0,
            k in 1usize..50,
            noisy in -1e5f64..1e6,
            num in 0f64..1e6,
            gamma in 0f64..=1.0,
        ) {
            let p = BdrParams::new(PrivacyLevel::Epsilon(e1), PrivacyLevel::Epsilon(e2), k, 1000)
                .unwrap();
            let a = p.debias(noisy, num, gamma).unwrap();
            let b = p.debias_response_form(noisy, num, gamma).unwrap();
            let scale = a.abs().max(b.abs()).max(1.0);
            prop_assert!((a - b).abs() <= 1e-9 * scale, "{} vs {}", a, b);
        }
    }
}
