//! Self-checks behind `ldp-topk verify`: exhaustive privacy tables plus fast
//! invariant checks. Each check is named and reports pass/fail with detail.

use rand::Rng;

use crate::domain::{GrrParams, Item, ItemDomain, PrivacyLevel};
use crate::error::Result;
use crate::eval::metrics::ndcg;
use crate::eval::oracle::ExactOracle;
use crate::heavyguardian::{HeavyGuardian, HgConfig, InsertOutcome, ReplacementPolicy};
use crate::mechanisms::{optimal_g, HrParams, OlhParams};
use crate::privacy::{
    bdr_table, cnr_table, dsr_reduced_table, grr_table, hr_table, judge_table, m_cold_table,
    m_hot_table, olh_table, ProbabilityTable,
};
use crate::protocol::{
    decode_bulletin, decode_report, encode_bulletin, encode_report, run_session, SessionConfig,
    WireDomains,
};
use crate::rng::{streams, RngHandle};
use crate::sampling::bernoulli_exp_neg;
use crate::schemes::bdr::BdrParams;
use crate::schemes::{build_scheme, Bulletin, DsrVariant, PerturbedReport, SchemeConfig, SchemeKind, TopKReport};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

pub const PRIVACY_EPSILONS: [f64; 4] = [0.5, 1.0, 2.0, 5.0];
/// Budget splits `epsilon1 / epsilon2` exercised by the composite tables.
pub const PRIVACY_SPLITS: [f64; 3] = [1.0 / 9.0, 0.5, 2.0];
/// Largest OLH bucket count enumerated.
pub const OLH_TABLE_MAX_G: u32 = 8;
pub const OLH_TABLE_SEEDS: u32 = 16;

#[derive(Debug, Default)]
struct Worst {
    tables: usize,
    worst: f64,
    failures: Vec<String>,
}

impl Worst {
    fn add(&mut self, label: impl FnOnce() -> String, table: &ProbabilityTable, epsilon: f64) {
        self.tables += 1;
        let slack = table.max_ratio() / epsilon.exp();
        self.worst = self.worst.max(slack);
        if !table.satisfies(epsilon) {
            self.failures.push(format!(
                "{} ratio {:.6} > e^{epsilon}, row error {:.1e}",
                label(),
                table.max_ratio(),
                table.row_sum_error()
            ));
        }
    }

    fn result(self, name: &str) -> CheckResult {
        let passed = self.failures.is_empty() && self.tables > 0;
        let detail = if passed {
            format!("{} tables, worst ratio/e^eps = {:.9}", self.tables, self.worst)
        } else {
            format!("{} of {} tables fail: {}", self.failures.len(), self.tables, self.failures.join("; "))
        };
        CheckResult {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Hot sets used for bulletin-dependent tables: the lowest ids and a spread.
fn hot_sets(d: u32, k: usize) -> Vec<Vec<Item>> {
    let low: Vec<Item> = (0..k as Item).collect();
    let spread: Vec<Item> = (0..k as Item).map(|i| d - 1 - 2 * i).collect();
    let mut sets = vec![low, spread];
    if k > 1 {
        sets.push(low_prefix(k - 1));
    }
    sets
}

fn low_prefix(n: usize) -> Vec<Item> {
    (0..n as Item).collect()
}

fn map_err(name: &str, r: Result<CheckResult>) -> CheckResult {
    r.unwrap_or_else(|e| CheckResult {
        name: name.to_string(),
        passed: false,
        detail: format!("error: {e}"),
    })
}

/// Exhaustive `max ratio <= e^eps` over every randomizer, `d <= 8`,
/// `k <= 3`, both bulletin flag states and several splits.
pub fn privacy_checks(domains: &[u32], ks: &[usize]) -> Vec<CheckResult> {
    let mut grr = Worst::default();
    let mut olh = Worst::default();
    let mut hr = Worst::default();
    let mut dsr = Worst::default();
    let mut judge = Worst::default();
    let mut m_hot = Worst::default();
    let mut m_cold = Worst::default();
    let mut bdr = Worst::default();
    let mut cnr = Worst::default();
    let mut errors = Vec::new();

    let mut run = || -> Result<()> {
        for &eps in &PRIVACY_EPSILONS {
            let level = PrivacyLevel::Epsilon(eps);
            let g = optimal_g(eps)?.min(OLH_TABLE_MAX_G);
            let olh_params = OlhParams::with_g(level, g)?;
            for &d in domains {
                grr.add(|| format!("grr d={d} eps={eps}"), &grr_table(&GrrParams::new(eps, d as usize)?)?, eps);
                olh.add(
                    || format!("olh d={d} g={g} eps={eps}"),
                    &olh_table(&olh_params, d, OLH_TABLE_SEEDS)?,
                    eps,
                );
                hr.add(|| format!("hr d={d} eps={eps}"), &hr_table(&HrParams::new(level, d as usize)?, d)?, eps);
                for &k in ks.iter().filter(|&&k| (k as u32) + 2 <= d) {
                    let reduced = GrrParams::new(eps, k + 1)?;
                    for hot in hot_sets(d, k) {
                        let h = hot.len();
                        for low in [false, true] {
                            let b = Bulletin::new(0, hot.clone(), low);
                            let tag = || format!("d={d} k={k} h={h} eps={eps} low={low}");
                            if h == k {
                                dsr.add(|| format!("dsr {}", tag()), &dsr_reduced_table(&b, &reduced, d)?, eps);
                            }
                            judge.add(|| format!("judge {}", tag()), &judge_table(&b, &GrrParams::new(eps, 2)?, d)?, eps);
                            m_hot.add(|| format!("m_hot {}", tag()), &m_hot_table(&b, level, d)?, eps);
                            m_cold.add(|| format!("m_cold {}", tag()), &m_cold_table(&b, level, d)?, eps);
                            for &ratio in &PRIVACY_SPLITS {
                                let e1 = eps * ratio / (1.0 + ratio);
                                let e2 = eps - e1;
                                let params = BdrParams::new(
                                    PrivacyLevel::Epsilon(e1),
                                    PrivacyLevel::Epsilon(e2),
                                    k,
                                    d,
                                )?;
                                bdr.add(|| format!("bdr {} split={ratio:.3}", tag()), &bdr_table(&b, &params)?, eps);
                                cnr.add(|| format!("cnr {} split={ratio:.3}", tag()), &cnr_table(&b, &params)?, eps);
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    };
    if let Err(e) = run() {
        errors.push(e.to_string());
    }

    let mut out = vec![
        grr.result("privacy/grr"),
        olh.result("privacy/olh"),
        hr.result("privacy/hr"),
        dsr.result("privacy/dsr-reduced"),
        judge.result("privacy/m-judge"),
        m_hot.result("privacy/m-hot"),
        m_cold.result("privacy/m-cold"),
        bdr.result("privacy/bdr"),
        cnr.result("privacy/cnr"),
    ];
    if !errors.is_empty() {
        out.push(CheckResult {
            name: "privacy/enumeration".into(),
            passed: false,
            detail: errors.join("; "),
        });
    }
    out
}

/// Fraction of Case-3 arrivals that decay a weakest slot holding count `c`.
pub fn ed_acceptance_rate(c: u32, decay_base: f64, trials: usize, seed: u64) -> Result<f64> {
    let mut rng = RngHandle::new(seed);
    let mut base = HeavyGuardian::new(HgConfig {
        heavy_len: 1,
        decay_base,
        ..HgConfig::default()
    })?;
    for _ in 0..c {
        base.insert(0, &mut rng);
    }
    let mut fired = 0usize;
    for _ in 0..trials {
        let mut hg = base.clone();
        match hg.insert(1, &mut rng).heavy {
            InsertOutcome::Decayed { .. } | InsertOutcome::Replaced { .. } => fired += 1,
            _ => {}
        }
    }
    Ok(fired as f64 / trials as f64)
}

/// Empirical rate of the exact `Bernoulli(exp(-gamma))` sampler.
pub fn bernoulli_rate(gamma: f64, trials: usize, seed: u64) -> Result<f64> {
    let mut rng = RngHandle::new(seed);
    let mut hits = 0usize;
    for _ in 0..trials {
        hits += bernoulli_exp_neg(gamma, &mut rng)? as usize;
    }
    Ok(hits as f64 / trials as f64)
}

/// `|rate - p| <= 3 sqrt(p(1-p)/n)`.
pub fn within_binomial_3sigma(rate: f64, p: f64, n: usize) -> bool {
    (rate - p).abs() <= 3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

/// Non-private HeavyGuardian run over the raw stream with the same warm-up
/// split and random streams a session uses.
pub fn reference_heavy_guardian(
    stream: &[Item],
    config: HgConfig,
    session: &SessionConfig,
) -> Result<HeavyGuardian> {
    session.validate()?;
    let root = RngHandle::new(session.seed);
    let mut server = root.fork(streams::SERVER);
    let mut warm = root.fork(streams::WARMUP);
    let (head, tail) = stream.split_at(session.warmup_len(stream.len()));
    let mut hg = HeavyGuardian::new(config)?;
    for &v in head {
        hg.insert_heavy(v, &mut warm);
    }
    for &v in tail {
        hg.insert(v, &mut server);
    }
    Ok(hg)
}

/// First heavy slot whose id or count differs, if any.
pub fn first_slot_mismatch(a: &HeavyGuardian, b: &HeavyGuardian) -> Option<usize> {
    let (x, y) = (a.heavy_slots(), b.heavy_slots());
    if x.len() != y.len() {
        return Some(x.len().min(y.len()));
    }
    x.iter().zip(y).position(|(s, t)| s.id != t.id || (s.count - t.count).abs() > 1e-9)
}

/// Runs `kind` noiselessly over `stream` and compares its heavy part with
/// the non-private reference slot for slot. DSR uses the consistent debias
/// variant; CNR's reference uses light-part king promotion.
pub fn noiseless_mismatch(
    kind: SchemeKind,
    stream: &[Item],
    d: u32,
    k: usize,
    session: &SessionConfig,
) -> Result<Option<usize>> {
    let mut config = SchemeConfig::new(kind, ItemDomain::new(d)?, PrivacyLevel::Noiseless, k);
    config.dsr_variant = DsrVariant::Consistent;
    let mut scheme = build_scheme(&config)?;
    let out = run_session(stream, scheme.as_mut(), session)?;
    let hg = out.heavy.expect("bounded scheme has a heavy part");
    let (light_len, policy) = if kind == SchemeKind::Cnr {
        (config.light_len, ReplacementPolicy::LightKing)
    } else {
        (0, ReplacementPolicy::Arrival)
    };
    let reference = reference_heavy_guardian(
        stream,
        HgConfig {
            heavy_len: k,
            light_len,
            decay_base: config.decay_base,
            policy,
            ..HgConfig::default()
        },
        session,
    )?;
    Ok(first_slot_mismatch(&hg, &reference))
}

fn ed_check() -> Result<CheckResult> {
    let n = 100_000;
    let mut bad = Vec::new();
    for c in [1u32, 2, 5, 10] {
        let rate = ed_acceptance_rate(c, 1.08, n, 11 + c as u64)?;
        let p = 1.08f64.powi(-(c as i32));
        if !within_binomial_3sigma(rate, p, n) {
            bad.push(format!("c={c}: {rate:.5} vs {p:.5}"));
        }
    }
    for gamma in [0.1, 1.0, 3.0] {
        let rate = bernoulli_rate(gamma, n, 7)?;
        if !within_binomial_3sigma(rate, (-gamma).exp(), n) {
            bad.push(format!("gamma={gamma}: {rate:.5}"));
        }
    }
    Ok(CheckResult {
        name: "decay/calibration".into(),
        passed: bad.is_empty(),
        detail: if bad.is_empty() { "b^-c and exp(-gamma) within 3 sigma".into() } else { bad.join("; ") },
    })
}

fn wire_check() -> Result<CheckResult> {
    let mut rng = RngHandle::new(5);
    let domains = WireDomains {
        items: 41_270,
        olh_g: 9,
        hr_order: 1 << 16,
    };
    let mut bad = 0usize;
    for _ in 0..10_000 {
        let r = match rng.random_range(0..5u8) {
            0 => PerturbedReport::FullDomain(rng.random_range(0..domains.items)),
            1 => PerturbedReport::HotSet(rng.random_range(0..domains.items)),
            2 => PerturbedReport::Bot,
            3 => PerturbedReport::OlhPair {
                seed: rng.random(),
                y: rng.random_range(0..domains.olh_g),
            },
            _ => PerturbedReport::HrIndex(rng.random_range(0..domains.hr_order)),
        };
        if decode_report(&encode_report(&r, &domains)?, &domains)? != r {
            bad += 1;
        }
    }
    let b = Bulletin::new(9, vec![41_269, 3, 700], true);
    let back = decode_bulletin(&encode_bulletin(&b, domains.items)?, domains.items)?;
    let ok = bad == 0 && back == b;
    Ok(CheckResult {
        name: "wire/round-trip".into(),
        passed: ok,
        detail: format!("{bad} report mismatches; bulletin equal: {}", back == b),
    })
}

fn ndcg_check() -> CheckResult {
    let oracle = ExactOracle::from_counts(vec![3, 2, 1], 3);
    let report = TopKReport {
        entries: vec![(1, 2.0), (0, 3.0), (2, 1.0)],
        timestamp: 6,
    };
    let got = ndcg(&report, &oracle, 3);
    let l = 3f64.log2();
    let want = (2.0 + 2.0 + 3.0 / l) / (3.0 + 3.0 + 3.0 / l);
    CheckResult {
        name: "metrics/ndcg-swap".into(),
        passed: (got - want).abs() < 1e-12,
        detail: format!("{got:.6} (expected {want:.6})"),
    }
}

fn noiseless_check() -> Result<CheckResult> {
    let mut rng = RngHandle::new(21);
    let stream: Vec<Item> = (0..1000)
        .map(|_| {
            if rng.random::<f64>() < 0.7 {
                rng.random_range(0..8)
            } else {
                rng.random_range(0..60)
            }
        })
        .collect();
    let session = SessionConfig {
        warmup_frac: 0.01,
        seed: 4,
    };
    let mut bad = Vec::new();
    for kind in [SchemeKind::Bgr, SchemeKind::Dsr, SchemeKind::Bdr, SchemeKind::Cnr] {
        if let Some(slot) = noiseless_mismatch(kind, &stream, 60, 5, &session)? {
            bad.push(format!("{kind} differs at slot {slot}"));
        }
    }
    Ok(CheckResult {
        name: "schemes/noiseless-equivalence".into(),
        passed: bad.is_empty(),
        detail: if bad.is_empty() { "all schemes match the reference".into() } else { bad.join("; ") },
    })
}

/// The full suite run by the CLI.
pub fn run_all() -> Vec<CheckResult> {
    let mut out = privacy_checks(&[4, 6, 8], &[1, 2, 3]);
    out.push(map_err("decay/calibration", ed_check()));
    out.push(map_err("wire/round-trip", wire_check()));
    out.push(ndcg_check());
    out.push(map_err("schemes/noiseless-equivalence", noiseless_check()));
    out
}
