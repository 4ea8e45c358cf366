//! Cold-nomination randomization: BDR's randomizer with the cold route always
//! taken, and a light part that nominates replacement candidates.
//!
//! Insert runs ED on the heavy part; an id the heavy part did not accept goes
//! through ED on the light part; if the heavy weakest count is then at or
//! below zero, the light king takes that slot with count one and its light
//! slot is cleared. The response is BDR's.

use rand::Rng;

use crate::domain::Item;
use crate::error::Result;

use super::bdr::{judge_randomize, BdrParams, JudgeScheme};
use super::{Bulletin, PerturbedReport};

pub type Cnr = JudgeScheme;

pub fn cnr_randomize<R: Rng + ?Sized>(
    v: Item,
    bulletin: &Bulletin,
    params: &BdrParams,
    rng: &mut R,
) -> Result<PerturbedReport> {
    judge_randomize(v, bulletin, params, true, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ItemDomain, PrivacyLevel};
    use crate::heavyguardian::InsertOutcome;
    use crate::rng::RngHandle;
    use crate::schemes::{Scheme, SchemeConfig, SchemeKind};

    fn cnr(level: PrivacyLevel) -> Cnr {
        let mut c = SchemeConfig::new(SchemeKind::Cnr, ItemDomain::new(30).unwrap(), level, 2);
        c.light_len = 2;
        Cnr::new(&c).unwrap()
    }

    #[test]
    fn never_emits_bot() {
        let s = cnr(PrivacyLevel::Epsilon(0.5));
        let b = Bulletin::new(0, vec![3, 8], false);
        let mut rng = RngHandle::new(0);
        for v in 0..30 {
            for _ in 0..50 {
                assert_ne!(s.randomize(v, Some(&b), &mut rng).unwrap(), PerturbedReport::Bot);
            }
        }
        let empty = Bulletin::new(0, vec![], true);
        for _ in 0..50 {
            assert_ne!(s.randomize(4, Some(&empty), &mut rng).unwrap(), PerturbedReport::Bot);
        }
    }

    #[test]
    fn noiseless_cold_goes_full_domain() {
        let s = cnr(PrivacyLevel::Noiseless);
        let b = Bulletin::new(0, vec![3, 8], false);
        let mut rng = RngHandle::new(0);
        assert_eq!(
            s.randomize(11, Some(&b), &mut rng).unwrap(),
            PerturbedReport::FullDomain(11)
        );
    }

    #[test]
    fn hit_leaves_light_untouched() {
        let mut s = cnr(PrivacyLevel::Noiseless);
        let mut rng = RngHandle::new(0);
        s.insert(&PerturbedReport::FullDomain(1), &mut rng).unwrap();
        let out = s.insert(&PerturbedReport::HotSet(1), &mut rng).unwrap();
        assert_eq!(out.heavy, InsertOutcome::Hit { slot: 0 });
        assert_eq!(out.light, None);
        assert!(s.heavy_guardian().unwrap().light_slots().iter().all(|l| l.id.is_none()));
    }

    #[test]
    fn king_promoted_on_exhaustion() {
        let mut s = cnr(PrivacyLevel::Noiseless);
        let mut rng = RngHandle::new(5);
        for v in [1, 1, 1, 2] {
            s.insert(&PerturbedReport::FullDomain(v), &mut rng).unwrap();
        }
        // Heavy {1:3, 2:1}; cold arrivals feed the light part until the
        // weakest heavy slot decays to zero.
        let mut promoted = None;
        for step in 0..200 {
            let v = if step % 3 == 0 { 7 } else { 9 };
            let out = s.insert(&PerturbedReport::FullDomain(v), &mut rng).unwrap();
            if let InsertOutcome::Replaced { old, new, .. } = out.heavy {
                promoted = Some((old, new));
                break;
            }
        }
        let (old, new) = promoted.expect("a promotion happens");
        assert_eq!(old, 2);
        assert!(new == 7 || new == 9);
        let hg = s.heavy_guardian().unwrap();
        assert_eq!(hg.count_of(new), Some(1.0));
        assert!(hg.light_slots().iter().all(|l| l.id != Some(new)));
    }

    #[test]
    fn rejects_bot() {
        let mut s = cnr(PrivacyLevel::Noiseless);
        let mut rng = RngHandle::new(0);
        assert!(s.insert(&PerturbedReport::Bot, &mut rng).is_err());
    }
}
