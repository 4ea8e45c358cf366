//! Experiment matrix: schemes × budgets × splits × datasets × trials.
//!
//! Trial `t` of a dataset uses the same stream and the same session seed in
//! every cell, so schemes are compared on paired randomness.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{load_stream, Dataset, StreamKind, StreamSpec};
use crate::domain::{Item, ItemDomain, PrivacyLevel};
use crate::error::{invalid, Error, Result};
use crate::heavyguardian::DEFAULT_DECAY_BASE;
use crate::protocol::{run_session, SessionConfig, DEFAULT_WARMUP_FRAC};
use crate::rng::derive_seed;
use crate::schemes::{build_scheme, DsrVariant, SchemeConfig, SchemeKind, DEFAULT_SPLIT_RATIO};

use super::metrics::{aae, ndcg, precision};
use super::oracle::ExactOracle;

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    /// Name written to the `dataset` column.
    pub label: String,
    pub stream: StreamSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixConfig {
    pub schemes: Vec<SchemeKind>,
    pub epsilons: Vec<f64>,
    /// `epsilon1 / epsilon2`; only split schemes expand over this axis.
    pub splits: Vec<f64>,
    pub k: usize,
    pub datasets: Vec<DatasetSpec>,
    pub trials: usize,
    pub seed: u64,
    pub warmup_frac: f64,
    /// `None` keeps each scheme's default light part.
    pub light_len: Option<usize>,
    pub decay_base: f64,
    pub gamma_h: Option<f64>,
    pub dsr_variant: DsrVariant,
    /// Thread count; 0 means rayon's default.
    pub workers: usize,
    /// Off makes the CSV a pure function of the configuration.
    pub record_wall_time: bool,
}

impl Default for MatrixConfig {
    /// The four bounded schemes, five budgets, Normal(σ=5) over d=1000, 20 trials.
    fn default() -> Self {
        Self {
            schemes: vec![SchemeKind::Bgr, SchemeKind::Dsr, SchemeKind::Bdr, SchemeKind::Cnr],
            epsilons: vec![0.5, 1.0, 2.0, 3.0, 5.0],
            splits: vec![DEFAULT_SPLIT_RATIO],
            k: 20,
            datasets: vec![DatasetSpec {
                label: "normal".into(),
                stream: StreamSpec {
                    kind: StreamKind::Normal { sigma: 5.0 },
                    d: 1000,
                    n: 100_000,
                    seed: 0,
                },
            }],
            trials: 20,
            seed: 0,
            warmup_frac: DEFAULT_WARMUP_FRAC,
            light_len: None,
            decay_base: DEFAULT_DECAY_BASE,
            gamma_h: None,
            dsr_variant: DsrVariant::default(),
            workers: 0,
            record_wall_time: true,
        }
    }
}

impl MatrixConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() || self.epsilons.is_empty() || self.datasets.is_empty() {
            return Err(invalid("matrix needs at least one scheme, budget and dataset"));
        }
        if self.splits.is_empty() {
            return Err(invalid("matrix needs at least one split ratio"));
        }
        if self.trials == 0 {
            return Err(invalid("matrix needs at least one trial"));
        }
        SessionConfig {
            warmup_frac: self.warmup_frac,
            seed: 0,
        }
        .validate()
    }

    /// Per-trial seed shared by every cell.
    pub fn trial_seed(&self, trial: usize) -> u64 {
        derive_seed(self.seed, trial as u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RowKind {
    Trial,
    Mean,
}

/// One CSV line. Trial rows leave the `*_std` columns empty; mean rows leave
/// `trial` and `seed` empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub row: RowKind,
    pub scheme: String,
    pub epsilon: f64,
    pub split: Option<f64>,
    pub k: usize,
    pub dataset: String,
    pub trial: Option<usize>,
    pub seed: Option<u64>,
    pub precision: Option<f64>,
    pub ndcg: Option<f64>,
    pub aae: Option<f64>,
    pub uplink_bytes: Option<f64>,
    pub downlink_bytes: Option<f64>,
    pub state_bytes: Option<f64>,
    pub wall_ms: Option<f64>,
    pub precision_std: Option<f64>,
    pub ndcg_std: Option<f64>,
    pub aae_std: Option<f64>,
    pub error: Option<String>,
}

/// Metrics of one session.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialMetrics {
    pub precision: f64,
    pub ndcg: f64,
    pub aae: f64,
    pub uplink_bytes: u64,
    pub downlink_bytes: u64,
    pub state_bytes: usize,
    pub wall_ms: f64,
}

/// Runs one session on `stream` and scores it against `oracle`.
pub fn run_trial(
    config: &SchemeConfig,
    stream: &[Item],
    oracle: &ExactOracle,
    session: &SessionConfig,
) -> Result<TrialMetrics> {
    let start = Instant::now();
    let mut scheme = build_scheme(config)?;
    let out = run_session(stream, scheme.as_mut(), session)?;
    let k = config.k;
    Ok(TrialMetrics {
        precision: precision(&out.report, oracle, k),
        ndcg: ndcg(&out.report, oracle, k),
        aae: aae(&out.report, oracle, k),
        uplink_bytes: out.traffic.uplink_bytes,
        downlink_bytes: out.traffic.downlink_bytes,
        state_bytes: out.memory_bytes,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

#[derive(Debug, Clone)]
struct Cell {
    scheme: SchemeKind,
    epsilon: f64,
    split: Option<f64>,
    dataset: usize,
}

struct Prepared {
    data: Dataset,
    oracle: ExactOracle,
}

fn prepare(spec: &DatasetSpec, seed: u64, k: usize) -> Result<Prepared> {
    let stream = StreamSpec {
        seed,
        ..spec.stream.clone()
    };
    let data = load_stream(&stream)?;
    let oracle = ExactOracle::new(&data.events, data.d, k)?;
    Ok(Prepared { data, oracle })
}

fn scheme_config(cfg: &MatrixConfig, cell: &Cell, d: u32) -> Result<SchemeConfig> {
    let mut sc = SchemeConfig::new(
        cell.scheme,
        ItemDomain::new(d)?,
        PrivacyLevel::Epsilon(cell.epsilon),
        cfg.k,
    );
    if let Some(r) = cell.split {
        sc.split_ratio = r;
    }
    if let Some(l) = cfg.light_len {
        sc.light_len = l;
    }
    sc.decay_base = cfg.decay_base;
    sc.gamma_h = cfg.gamma_h;
    sc.dsr_variant = cfg.dsr_variant;
    Ok(sc)
}

fn mean_std(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = (xs.len() > 1)
        .then(|| (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    (mean, std)
}

fn aggregate(trials: &[MetricsRow]) -> MetricsRow {
    let first = &trials[0];
    let ok: Vec<&MetricsRow> = trials.iter().filter(|r| r.error.is_none()).collect();
    let mut row = MetricsRow {
        row: RowKind::Mean,
        trial: None,
        seed: None,
        precision: None,
        ndcg: None,
        aae: None,
        uplink_bytes: None,
        downlink_bytes: None,
        state_bytes: None,
        wall_ms: None,
        precision_std: None,
        ndcg_std: None,
        aae_std: None,
        error: None,
        ..first.clone()
    };
    if ok.is_empty() {
        row.error = Some("all trials failed".into());
        return row;
    }
    let col = |f: fn(&MetricsRow) -> Option<f64>| -> Vec<f64> { ok.iter().filter_map(|r| f(r)).collect() };
    let (p, ps) = mean_std(&col(|r| r.precision));
    let (n, ns) = mean_std(&col(|r| r.ndcg));
    let (a, as_) = mean_std(&col(|r| r.aae));
    row.precision = Some(p);
    row.precision_std = ps;
    row.ndcg = Some(n);
    row.ndcg_std = ns;
    row.aae = Some(a);
    row.aae_std = as_;
    row.uplink_bytes = Some(mean_std(&col(|r| r.uplink_bytes)).0);
    row.downlink_bytes = Some(mean_std(&col(|r| r.downlink_bytes)).0);
    row.state_bytes = Some(mean_std(&col(|r| r.state_bytes)).0);
    let walls = col(|r| r.wall_ms);
    row.wall_ms = (!walls.is_empty()).then(|| mean_std(&walls).0);
    if ok.len() < trials.len() {
        row.error = Some(format!("{} of {} trials failed", trials.len() - ok.len(), trials.len()));
    }
    row
}

/// Runs every cell and returns one row per (cell, trial) followed by the
/// cell's mean row. A failing trial is recorded in its `error` column.
pub fn run_experiment_matrix(cfg: &MatrixConfig) -> Result<Vec<MetricsRow>> {
    cfg.validate()?;
    let mut cells = Vec::new();
    for (di, _) in cfg.datasets.iter().enumerate() {
        for &scheme in &cfg.schemes {
            for &epsilon in &cfg.epsilons {
                if scheme.uses_split() {
                    for &r in &cfg.splits {
                        cells.push(Cell { scheme, epsilon, split: Some(r), dataset: di });
                    }
                } else {
                    cells.push(Cell { scheme, epsilon, split: None, dataset: di });
                }
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| invalid(format!("worker pool: {e}")))?;

    pool.install(|| {
        // One stream per (dataset, trial), shared by all cells.
        let jobs: Vec<(usize, usize)> = (0..cfg.datasets.len())
            .flat_map(|d| (0..cfg.trials).map(move |t| (d, t)))
            .collect();
        let prepared: Vec<std::result::Result<Prepared, Error>> = jobs
            .par_iter()
            .map(|&(d, t)| prepare(&cfg.datasets[d], cfg.trial_seed(t), cfg.k))
            .collect();

        let tasks: Vec<(usize, usize)> = (0..cells.len())
            .flat_map(|c| (0..cfg.trials).map(move |t| (c, t)))
            .collect();
        let trial_rows: Vec<MetricsRow> = tasks
            .par_iter()
            .map(|&(ci, t)| {
                let cell = &cells[ci];
                let seed = cfg.trial_seed(t);
                let mut row = MetricsRow {
                    row: RowKind::Trial,
                    scheme: cell.scheme.name().to_string(),
                    epsilon: cell.epsilon,
                    split: cell.split,
                    k: cfg.k,
                    dataset: cfg.datasets[cell.dataset].label.clone(),
                    trial: Some(t),
                    seed: Some(seed),
                    precision: None,
                    ndcg: None,
                    aae: None,
                    uplink_bytes: None,
                    downlink_bytes: None,
                    state_bytes: None,
                    wall_ms: None,
                    precision_std: None,
                    ndcg_std: None,
                    aae_std: None,
                    error: None,
                };
                let result = prepared[cell.dataset * cfg.trials + t]
                    .as_ref()
                    .map_err(Clone::clone)
                    .and_then(|p| {
                        let sc = scheme_config(cfg, cell, p.data.d)?;
                        let session = SessionConfig {
                            warmup_frac: cfg.warmup_frac,
                            seed,
                        };
                        run_trial(&sc, &p.data.events, &p.oracle, &session)
                    });
                match result {
                    Ok(m) => {
                        row.precision = Some(m.precision);
                        row.ndcg = Some(m.ndcg);
                        row.aae = Some(m.aae);
                        row.uplink_bytes = Some(m.uplink_bytes as f64);
                        row.downlink_bytes = Some(m.downlink_bytes as f64);
                        row.state_bytes = Some(m.state_bytes as f64);
                        row.wall_ms = cfg.record_wall_time.then_some(m.wall_ms);
                    }
                    Err(e) => row.error = Some(e.to_string()),
                }
                row
            })
            .collect();

        let mut rows = Vec::with_capacity(trial_rows.len() + cells.len());
        for chunk in trial_rows.chunks(cfg.trials) {
            rows.extend_from_slice(chunk);
            rows.push(aggregate(chunk));
        }
        Ok(rows)
    })
}

/// Writes rows with a header line.
pub fn write_csv<W: Write>(rows: &[MetricsRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| invalid(format!("csv: {e}")))?;
    }
    w.flush()?;
    Ok(())
}
