mod config;

use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use grqsm_core::model::{Mode, MulticastDetector, SystemConfig};
use grqsm_core::sim::{
    emit_results, parse_snr_grid, run_ber_sweep, run_lambda_stats, run_runtime_bench, with_threads, OutputFormat,
    Record,
};

use config::FileConfig;

#[derive(Parser)]
#[command(name = "grqsm", version, about = "RIS-assisted GRQSM link-level simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo BER sweep over an SNR grid.
    Simulate(SimulateArgs),
    /// Mean and variance of the first optimal multiplier.
    StatsLambda(StatsArgs),
    /// Mean multicast solve time per surface size.
    BenchRuntime(BenchArgs),
}

#[derive(Args)]
struct Common {
    /// `key = value` file; flags take precedence over its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// grqsm-optimal, grqsm-suboptimal, benchmark-partitioned or multicast.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    n_ris: Option<usize>,
    #[arg(long)]
    n_rx: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// `a:b:step`, a comma list, or both; `inf` is a noiseless point.
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    /// Symbol energy.
    #[arg(long)]
    es: Option<f64>,
    /// Multicast detector: exact or approximate.
    #[arg(long)]
    detector: Option<String>,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n_ris_list: Option<SizeList>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    n_rx: Option<usize>,
    #[arg(long)]
    realizations: Option<u64>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n_ris_list: Option<SizeList>,
    #[arg(long)]
    n_rx: Option<usize>,
    #[arg(long)]
    realizations: Option<u64>,
}

/// Comma-separated surface sizes.
#[derive(Debug, Clone)]
struct SizeList(Vec<usize>);

impl FromStr for SizeList {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|e| format!("`{p}`: {e}")))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(SizeList)
    }
}

const COMMON_KEYS: [&str; 4] = ["out", "format", "seed", "threads"];

struct Resolved {
    out: PathBuf,
    format: OutputFormat,
    seed: u64,
    threads: usize,
}

fn load(common: &Common, keys: &[&str]) -> Result<(FileConfig, Resolved)> {
    let file = match &common.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let allowed: Vec<&str> = COMMON_KEYS.iter().chain(keys).copied().collect();
    file.check_keys(&allowed)?;
    let format = match file.pick(common.format.clone(), "format")? {
        Some(f) => f.parse()?,
        None => OutputFormat::default(),
    };
    let resolved = Resolved {
        out: file.require(common.out.clone(), "out")?,
        format,
        seed: file.pick(common.seed, "seed")?.unwrap_or(0),
        threads: file.pick(common.threads, "threads")?.unwrap_or(0),
    };
    Ok((file, resolved))
}

fn write<T: Record>(records: &[T], r: &Resolved) -> Result<()> {
    emit_results(records, &r.out, r.format)?;
    eprintln!("wrote {} records to {}", records.len(), r.out.display());
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let keys = ["mode", "n-ris", "n-rx", "k", "snr-db", "trials", "es", "detector"];
    let (file, r) = load(&args.common, &keys)?;
    let mode: Mode = file.require::<String>(args.mode, "mode")?.parse()?;
    let mut cfg = SystemConfig::new(
        mode,
        file.require(args.n_ris, "n-ris")?,
        file.require(args.n_rx, "n-rx")?,
        file.pick(args.k, "k")?.unwrap_or(1),
    );
    cfg.snr_db_grid = parse_snr_grid(&file.require::<String>(args.snr_db, "snr-db")?)?;
    cfg.trials = file.require(args.trials, "trials")?;
    cfg.seed = r.seed;
    if let Some(es) = file.pick(args.es, "es")? {
        cfg.es = es;
    }
    if let Some(d) = file.pick::<String>(args.detector, "detector")? {
        cfg.detector = d.parse::<MulticastDetector>()?;
        if mode != Mode::Multicast {
            bail!("--detector only applies to multicast mode");
        }
    }
    cfg.validate()?;
    let result = with_threads(r.threads, || run_ber_sweep(&cfg))??;
    if result.unconverged > 0 {
        eprintln!(
            "{} of {} phase designs stopped above the acceptance gap",
            result.unconverged, cfg.trials
        );
    }
    write(&result.records, &r)
}

fn stats_lambda(args: StatsArgs) -> Result<()> {
    let (file, r) = load(&args.common, &["n-ris-list", "k", "n-rx", "realizations"])?;
    let sizes: SizeList = file.require(args.n_ris_list, "n-ris-list")?;
    let k = file.require(args.k, "k")?;
    let n_rx = file.require(args.n_rx, "n-rx")?;
    let realizations = file.require(args.realizations, "realizations")?;
    let records = with_threads(r.threads, || run_lambda_stats(&sizes.0, k, n_rx, realizations, r.seed))??;
    write(&records, &r)
}

fn bench_runtime(args: BenchArgs) -> Result<()> {
    let (file, r) = load(&args.common, &["n-ris-list", "n-rx", "realizations"])?;
    let sizes: SizeList = file.require(args.n_ris_list, "n-ris-list")?;
    let n_rx = file.require(args.n_rx, "n-rx")?;
    let realizations = file.require(args.realizations, "realizations")?;
    let records = run_runtime_bench(&sizes.0, n_rx, realizations, r.seed)?;
    write(&records, &r)
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate(a) => simulate(a),
        Command::StatsLambda(a) => stats_lambda(a),
        Command::BenchRuntime(a) => bench_runtime(a),
    }
}
