use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ldp_topk::data::{load_stream, write_stream, StreamKind, StreamSpec};
use ldp_topk::eval::matrix::{run_experiment_matrix, write_csv, DatasetSpec, MatrixConfig};
use ldp_topk::eval::{aae, ndcg, precision, ExactOracle};
use ldp_topk::heavyguardian::DEFAULT_DECAY_BASE;
use ldp_topk::protocol::{run_session, SessionConfig, DEFAULT_WARMUP_FRAC};
use ldp_topk::schemes::{DsrVariant, DEFAULT_SPLIT_RATIO};
use ldp_topk::{build_scheme, verify, ItemDomain, PrivacyLevel, SchemeConfig, SchemeKind};

#[derive(Parser)]
#[command(name = "ldp-topk", version, about = "Private streaming top-k simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment matrix and write one CSV row per trial plus means.
    Run(RunArgs),
    /// Run a single session and print the reported top-k.
    Topk(TopkArgs),
    /// Write a synthetic dataset, one id per line.
    Gen(GenArgs),
    /// Check privacy tables and core invariants; nonzero exit on failure.
    Verify,
}

#[derive(Clone, Debug)]
enum GammaArg {
    Auto,
    Fixed(f64),
}

impl FromStr for GammaArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(GammaArg::Auto);
        }
        s.parse()
            .map(GammaArg::Fixed)
            .map_err(|_| format!("expected `auto` or a number, got {s:?}"))
    }
}

impl GammaArg {
    fn value(&self) -> Option<f64> {
        match self {
            GammaArg::Auto => None,
            GammaArg::Fixed(g) => Some(*g),
        }
    }
}

#[derive(Args, Clone, Debug)]
struct DataArgs {
    /// `normal`, `exponential`, `zipf`, or a transaction file path.
    #[arg(long, default_value = "normal")]
    dataset: String,
    /// Domain size for synthetic datasets.
    #[arg(long, default_value_t = 1000)]
    domain: u32,
    /// Events to generate, or the maximum read from a file.
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    /// Standard deviation (normal) or mean scale (exponential).
    #[arg(long, default_value_t = 5.0)]
    sigma: f64,
    /// Zipf exponent.
    #[arg(long, default_value_t = 1.1)]
    zipf_s: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl DataArgs {
    fn spec(&self) -> StreamSpec {
        let kind = match self.dataset.to_ascii_lowercase().as_str() {
            "normal" => StreamKind::Normal { sigma: self.sigma },
            "exponential" => StreamKind::Exponential { sigma: self.sigma },
            "zipf" => StreamKind::Zipf { s: self.zipf_s },
            _ => StreamKind::File {
                path: PathBuf::from(&self.dataset),
            },
        };
        StreamSpec {
            kind,
            d: self.domain,
            n: self.n,
            seed: self.seed,
        }
    }

    fn label(&self) -> String {
        match self.spec().kind {
            StreamKind::File { path } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| self.dataset.clone()),
            _ => self.dataset.to_ascii_lowercase(),
        }
    }
}

#[derive(Args, Clone, Debug)]
struct SchemeArgs {
    #[arg(long, default_value_t = 20)]
    k: usize,
    /// Light-part length (CNR default 5).
    #[arg(long)]
    light_len: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_DECAY_BASE)]
    decay_base: f64,
    /// Fraction of the stream inserted without randomization.
    #[arg(long, default_value_t = DEFAULT_WARMUP_FRAC)]
    warmup_frac: f64,
    /// Hot-event fraction for BDR/CNR debiasing: `auto` estimates it from warm-up.
    #[arg(long, default_value = "auto")]
    gamma_h: GammaArg,
    /// Use the unit-consistent DSR debias instead of the literal one.
    #[arg(long)]
    dsr_consistent_debias: bool,
}

impl SchemeArgs {
    fn variant(&self) -> DsrVariant {
        if self.dsr_consistent_debias {
            DsrVariant::Consistent
        } else {
            DsrVariant::Literal
        }
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Comma-separated schemes.
    #[arg(long, value_delimiter = ',', default_value = "bgr,dsr,bdr,cnr")]
    scheme: Vec<SchemeKind>,
    /// Comma-separated total budgets.
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,3,5")]
    epsilon: Vec<f64>,
    /// Comma-separated epsilon1/epsilon2 ratios (BDR/CNR only).
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    eps_split: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Leave the wall-time column empty so output is reproducible.
    #[arg(long)]
    no_timing: bool,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    scheme_args: SchemeArgs,
}

#[derive(Args, Debug)]
struct TopkArgs {
    #[arg(long, default_value = "cnr")]
    scheme: SchemeKind,
    /// Total budget, or `noiseless`.
    #[arg(long, default_value = "1")]
    epsilon: String,
    #[arg(long, default_value_t = DEFAULT_SPLIT_RATIO)]
    eps_split: f64,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    scheme_args: SchemeArgs,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    out: PathBuf,
}

fn parse_level(s: &str) -> Result<PrivacyLevel> {
    if s.eq_ignore_ascii_case("noiseless") {
        return Ok(PrivacyLevel::Noiseless);
    }
    let eps: f64 = s.parse().with_context(|| format!("bad epsilon {s:?}"))?;
    Ok(PrivacyLevel::Epsilon(eps))
}

fn run(args: RunArgs) -> Result<()> {
    let s = &args.scheme_args;
    let cfg = MatrixConfig {
        schemes: args.scheme,
        epsilons: args.epsilon,
        splits: args.eps_split,
        k: s.k,
        datasets: vec![DatasetSpec {
            label: args.data.label(),
            stream: args.data.spec(),
        }],
        trials: args.trials,
        seed: args.data.seed,
        warmup_frac: s.warmup_frac,
        light_len: s.light_len,
        decay_base: s.decay_base,
        gamma_h: s.gamma_h.value(),
        dsr_variant: s.variant(),
        workers: args.workers,
        record_wall_time: !args.no_timing,
    };
    let rows = run_experiment_matrix(&cfg)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    match &args.out {
        Some(p) => {
            let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
            write_csv(&rows, f)?;
            eprintln!("wrote {} rows to {}", rows.len(), p.display());
        }
        None => write_csv(&rows, io::stdout().lock())?,
    }
    if failed > 0 {
        eprintln!("{failed} rows recorded errors");
    }
    Ok(())
}

fn topk(args: TopkArgs) -> Result<()> {
    let data = load_stream(&args.data.spec())?;
    let s = &args.scheme_args;
    let mut config = SchemeConfig::new(
        args.scheme,
        ItemDomain::new(data.d)?,
        parse_level(&args.epsilon)?,
        s.k,
    );
    config.split_ratio = args.eps_split;
    if let Some(l) = s.light_len {
        config.light_len = l;
    }
    config.decay_base = s.decay_base;
    config.gamma_h = s.gamma_h.value();
    config.dsr_variant = s.variant();

    let mut scheme = build_scheme(&config)?;
    let session = SessionConfig {
        warmup_frac: s.warmup_frac,
        seed: args.data.seed,
    };
    let out = run_session(&data.events, scheme.as_mut(), &session)?;
    let oracle = ExactOracle::new(&data.events, data.d, s.k)?;

    let mut w = io::stdout().lock();
    writeln!(w, "rank\tid\testimate\ttrue")?;
    for (i, &(id, est)) in out.report.entries.iter().enumerate() {
        writeln!(w, "{}\t{id}\t{est:.1}\t{}", i + 1, oracle.count(id))?;
    }
    writeln!(
        w,
        "precision {:.4}  ndcg {:.4}  aae {:.2}",
        precision(&out.report, &oracle, s.k),
        ndcg(&out.report, &oracle, s.k),
        aae(&out.report, &oracle, s.k)
    )?;
    writeln!(
        w,
        "events {}  warm-up {}  uplink {} B  downlink {} B  state {} B",
        out.traffic.events,
        out.traffic.warmup_events,
        out.traffic.uplink_bytes,
        out.traffic.downlink_bytes,
        out.memory_bytes
    )?;
    Ok(())
}

fn gen(args: GenArgs) -> Result<()> {
    let spec = args.data.spec();
    if matches!(spec.kind, StreamKind::File { .. }) {
        bail!("gen needs a synthetic dataset (normal, exponential, zipf)");
    }
    let data = load_stream(&spec)?;
    write_stream(&args.out, &data.events)?;
    eprintln!("wrote {} events to {}", data.events.len(), args.out.display());
    Ok(())
}

fn verify_all() -> Result<bool> {
    let mut w = io::stdout().lock();
    let mut ok = true;
    for r in verify::run_all() {
        ok &= r.passed;
        writeln!(w, "{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail)?;
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a).map(|_| true),
        Command::Topk(a) => topk(a).map(|_| true),
        Command::Gen(a) => gen(a).map(|_| true),
        Command::Verify => verify_all(),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
