//! Exact output distributions of every per-event randomizer, for checking
//! `P[v][o] <= e^eps * P[v'][o]` exhaustively at small domain sizes.
//!
//! Composite tables are built from the component tables along the same
//! branches the randomizers take, so a sampling test against the real
//! randomizer covers both.

use std::collections::HashMap;

use crate::domain::{GrrParams, Item, PrivacyLevel};
use crate::error::{invalid, Error, Result};
use crate::hash::hash_to_range;
use crate::mechanisms::{HrParams, OlhParams};
use crate::schemes::bdr::{BdrParams, JudgeFlag};
use crate::schemes::{Bulletin, PerturbedReport};

/// Tables above this many cells are refused.
pub const MAX_TABLE_CELLS: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Output {
    Report(PerturbedReport),
    Judge(JudgeFlag),
}

/// `rows[v][j]` is the probability that input `v` yields `outputs[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTable {
    pub outputs: Vec<Output>,
    pub rows: Vec<Vec<f64>>,
}

impl ProbabilityTable {
    fn zeros(inputs: usize, outputs: Vec<Output>) -> Result<Self> {
        let cells = inputs.saturating_mul(outputs.len());
        if cells > MAX_TABLE_CELLS {
            return Err(Error::EnumerationTooLarge(cells));
        }
        Ok(Self {
            rows: vec![vec![0.0; outputs.len()]; inputs],
            outputs,
        })
    }

    pub fn inputs(&self) -> usize {
        self.rows.len()
    }

    pub fn prob(&self, v: usize, output: &Output) -> f64 {
        self.outputs
            .iter()
            .position(|o| o == output)
            .map_or(0.0, |j| self.rows[v][j])
    }

    /// Largest `|1 - sum(row)|`.
    pub fn row_sum_error(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (1.0 - r.iter().sum::<f64>()).abs())
            .fold(0.0, f64::max)
    }

    /// `max_{v,v',o} P[v][o] / P[v'][o]`, skipping outputs no input can
    /// produce. Infinite when some input can produce `o` and another cannot.
    pub fn max_ratio(&self) -> f64 {
        let mut worst: f64 = 1.0;
        for j in 0..self.outputs.len() {
            let (lo, hi) = self
                .rows
                .iter()
                .map(|r| r[j])
                .fold((f64::INFINITY, 0.0f64), |(lo, hi), x| (lo.min(x), hi.max(x)));
            if hi == 0.0 {
                continue;
            }
            if lo == 0.0 {
                return f64::INFINITY;
            }
            worst = worst.max(hi / lo);
        }
        worst
    }

    /// `true` when the table is a distribution per row (within `1e-12`) and
    /// its ratio bound holds for `epsilon` (within `1e-9`).
    pub fn satisfies(&self, epsilon: f64) -> bool {
        self.row_sum_error() <= 1e-12 && self.max_ratio() <= epsilon.exp() + 1e-9
    }
}

fn report_outputs(reports: impl IntoIterator<Item = PerturbedReport>) -> Vec<Output> {
    reports.into_iter().map(Output::Report).collect()
}

fn check_domain(d: u32) -> Result<usize> {
    if d < 2 {
        return Err(invalid(format!("domain size must be >= 2, got {d}")));
    }
    Ok(d as usize)
}

pub fn grr_table(params: &GrrParams) -> Result<ProbabilityTable> {
    let d = params.domain_size;
    let mut t = ProbabilityTable::zeros(
        d,
        report_outputs((0..d as Item).map(PerturbedReport::FullDomain)),
    )?;
    for (v, row) in t.rows.iter_mut().enumerate() {
        for (o, cell) in row.iter_mut().enumerate() {
            *cell = params.prob(v, o);
        }
    }
    Ok(t)
}

/// OLH with the seed drawn uniformly from `0..seeds` instead of all of
/// `u32`; each seed's conditional table is the exact one.
pub fn olh_table(params: &OlhParams, d: u32, seeds: u32) -> Result<ProbabilityTable> {
    let d = check_domain(d)?;
    if seeds == 0 {
        return Err(invalid("OLH table needs at least one seed"));
    }
    let outputs = report_outputs(
        (0..seeds).flat_map(|seed| (0..params.g).map(move |y| PerturbedReport::OlhPair { seed, y })),
    );
    let mut t = ProbabilityTable::zeros(d, outputs)?;
    let g = params.g as usize;
    let w = 1.0 / seeds as f64;
    for (v, row) in t.rows.iter_mut().enumerate() {
        for seed in 0..seeds {
            let h = hash_to_range(seed as u64, v as Item, params.g) as usize;
            for y in 0..g {
                row[seed as usize * g + y] = w * params.bucket.prob(h, y);
            }
        }
    }
    Ok(t)
}

pub fn hr_table(params: &HrParams, d: u32) -> Result<ProbabilityTable> {
    let d = check_domain(d)?;
    let mut t = ProbabilityTable::zeros(
        d,
        report_outputs((0..params.order).map(PerturbedReport::HrIndex)),
    )?;
    for (v, row) in t.rows.iter_mut().enumerate() {
        for (col, cell) in row.iter_mut().enumerate() {
            *cell = params.prob(v as Item, col as u32);
        }
    }
    Ok(t)
}

/// DSR's reduced-domain randomizer: GRR over the sorted hot ids plus `⊥`.
pub fn dsr_reduced_table(bulletin: &Bulletin, reduced: &GrrParams, d: u32) -> Result<ProbabilityTable> {
    let d = check_domain(d)?;
    let k = reduced.domain_size - 1;
    if bulletin.hot_len() != k {
        return Err(Error::StaleBulletin {
            expected: k,
            got: bulletin.hot_len(),
        });
    }
    let mut outputs: Vec<PerturbedReport> =
        bulletin.sorted().iter().map(|&h| PerturbedReport::HotSet(h)).collect();
    outputs.push(PerturbedReport::Bot);
    let mut t = ProbabilityTable::zeros(d, report_outputs(outputs))?;
    for (v, row) in t.rows.iter_mut().enumerate() {
        let symbol = bulletin.rank(v as Item).unwrap_or(k);
        for (o, cell) in row.iter_mut().enumerate() {
            *cell = reduced.prob(symbol, o);
        }
    }
    Ok(t)
}

pub fn judge_table(bulletin: &Bulletin, judge: &GrrParams, d: u32) -> Result<ProbabilityTable> {
    let d = check_domain(d)?;
    let mut t = ProbabilityTable::zeros(
        d,
        vec![Output::Judge(JudgeFlag::Hot), Output::Judge(JudgeFlag::Cold)],
    )?;
    for (v, row) in t.rows.iter_mut().enumerate() {
        let truth = bulletin.is_hot(v as Item) as usize;
        row[0] = judge.prob(truth, 1);
        row[1] = judge.prob(truth, 0);
    }
    Ok(t)
}

pub fn m_hot_table(bulletin: &Bulletin, level2: PrivacyLevel, d: u32) -> Result<ProbabilityTable> {
    let d = check_domain(d)?;
    let hot = bulletin.sorted();
    if hot.is_empty() {
        return Err(Error::EmptyStructure);
    }
    let grr = GrrParams::for_level(level2, hot.len())?;
    let mut t = ProbabilityTable::zeros(
        d,
        report_outputs(hot.iter().map(|&h| PerturbedReport::HotSet(h))),
    )?;
    let uniform = 1.0 / hot.len() as f64;
    for (v, row) in t.rows.iter_mut().enumerate() {
        match bulletin.rank(v as Item) {
            Some(r) => row.iter_mut().enumerate().for_each(|(o, c)| *c = grr.prob(r, o)),
            None => row.fill(uniform),
        }
    }
    Ok(t)
}

/// Outputs are the cold ids in ascending order.
pub fn m_cold_table(bulletin: &Bulletin, level2: PrivacyLevel, d: u32) -> Result<ProbabilityTable> {
    let dn = check_domain(d)?;
    let cold: Vec<Item> = (0..d).filter(|&v| !bulletin.is_hot(v)).collect();
    if cold.len() < 2 {
        return Err(invalid(format!("cold domain too small: d={d}, hot={}", bulletin.hot_len())));
    }
    let grr = GrrParams::for_level(level2, cold.len())?;
    let mut t = ProbabilityTable::zeros(
        dn,
        report_outputs(cold.iter().map(|&c| PerturbedReport::FullDomain(c))),
    )?;
    let uniform = 1.0 / cold.len() as f64;
    for (v, row) in t.rows.iter_mut().enumerate() {
        match cold.binary_search(&(v as Item)) {
            Ok(r) => row.iter_mut().enumerate().for_each(|(o, c)| *c = grr.prob(r, o)),
            Err(_) => row.fill(uniform),
        }
    }
    Ok(t)
}

/// Per-event BDR (`always_cold = false`) or CNR randomizer as one table over
/// hot ids, all ids and `⊥`.
pub fn judge_scheme_table(
    bulletin: &Bulletin,
    params: &BdrParams,
    always_cold: bool,
) -> Result<ProbabilityTable> {
    let d = params.d;
    let mut reports: Vec<PerturbedReport> =
        bulletin.sorted().iter().map(|&h| PerturbedReport::HotSet(h)).collect();
    reports.extend((0..d).map(PerturbedReport::FullDomain));
    reports.push(PerturbedReport::Bot);
    let mut t = ProbabilityTable::zeros(check_domain(d)?, report_outputs(reports))?;
    let index: HashMap<Output, usize> = t.outputs.iter().enumerate().map(|(j, o)| (*o, j)).collect();
    let bot = index[&Output::Report(PerturbedReport::Bot)];

    let judge = judge_table(bulletin, &params.judge, d)?;
    let hot_empty = bulletin.hot_len() == 0;
    let needs_cold = always_cold || bulletin.weakest_low;
    let hot = if hot_empty { None } else { Some(m_hot_table(bulletin, params.level2, d)?) };
    let cold = if needs_cold { Some(m_cold_table(bulletin, params.level2, d)?) } else { None };

    let spread = |row: &mut [f64], weight: f64, sub: &ProbabilityTable, v: usize| {
        for (o, &p) in sub.outputs.iter().zip(&sub.rows[v]) {
            row[index[o]] += weight * p;
        }
    };
    for v in 0..t.inputs() {
        let (p_hot, p_cold) = (judge.rows[v][0], judge.rows[v][1]);
        let row = &mut t.rows[v];
        match (&hot, always_cold) {
            (Some(h), _) => spread(row, p_hot, h, v),
            (None, false) => row[bot] += p_hot,
            (None, true) => spread(row, p_hot, cold.as_ref().expect("cold route"), v),
        }
        match &cold {
            Some(c) => spread(row, p_cold, c, v),
            None => row[bot] += p_cold,
        }
    }
    Ok(t)
}

pub fn bdr_table(bulletin: &Bulletin, params: &BdrParams) -> Result<ProbabilityTable> {
    judge_scheme_table(bulletin, params, false)
}

pub fn cnr_table(bulletin: &Bulletin, params: &BdrParams) -> Result<ProbabilityTable> {
    judge_scheme_table(bulletin, params, true)
}

/// Empirical distribution of `sample` over `trials` draws, aligned to
/// `table.outputs`. Draws outside the table's outputs land in the last slot
/// of the returned vector.
pub fn empirical_row(
    table: &ProbabilityTable,
    trials: usize,
    mut sample: impl FnMut() -> Output,
) -> Vec<f64> {
    let index: HashMap<Output, usize> =
        table.outputs.iter().enumerate().map(|(j, o)| (*o, j)).collect();
    let mut counts = vec![0u64; table.outputs.len() + 1];
    for _ in 0..trials {
        let o = sample();
        counts[index.get(&o).copied().unwrap_or(table.outputs.len())] += 1;
    }
    counts.iter().map(|&c| c as f64 / trials as f64).collect()
}
