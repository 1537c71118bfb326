//! Monte-Carlo harness: BER sweeps, multiplier statistics, runtime
//! benchmarks and result files.
//!
//! Every trial owns its random streams. The channel, payload bits and
//! phase design of trial `t` come from one stream shared by all SNR
//! points; the noise at SNR point `j` comes from a stream keyed by
//! `(j, t)`. Results therefore do not depend on the number of workers,
//! and one phase design serves the whole SNR grid.

mod output;
mod stats;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::RatePlan;
use crate::model::{effective_coefficients, gen_channel, stream_id, substream, Mode, MulticastDetector, SystemConfig};
use crate::optimizer::{multicast_optimize, SolverOptions};
use crate::transceiver::{
    benchmark_partitioned, grqsm_receive, grqsm_transmit, multicast_detect, Constellation, PhaseDesign,
};
use crate::Complex64;

pub use output::{emit_results, read_json, OutputFormat, Record};
pub use stats::{run_lambda_stats, run_runtime_bench, RuntimeRecord, StatRecord};

const DOMAIN_TRIAL: u8 = 1;
const DOMAIN_NOISE: u8 = 2;
pub(crate) const DOMAIN_LAMBDA: u8 = 3;
pub(crate) const DOMAIN_RUNTIME: u8 = 4;

/// Largest trial count a sweep accepts (one stream per trial index).
pub const MAX_TRIALS: u64 = 1 << 32;

/// Accumulated bit errors at one SNR point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    pub scheme: String,
    pub n_ris: usize,
    pub n_rx: usize,
    pub k: usize,
    #[serde(with = "output::extended_f64")]
    pub snr_db: f64,
    pub trials: u64,
    pub bit_errors: u64,
    pub total_bits: u64,
    pub ber: f64,
    pub seed: u64,
}

impl BerRecord {
    /// Wilson score interval for the error probability.
    pub fn wilson(&self, z: f64) -> (f64, f64) {
        wilson_interval(self.bit_errors, self.total_bits, z)
    }
}

/// Records of one sweep plus solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub records: Vec<BerRecord>,
    /// Trials whose phase design did not reach the acceptance gap. They are
    /// still simulated with the best design found.
    pub unconverged: u64,
}

/// Scheme label written to the `scheme` column.
pub fn scheme_tag(cfg: &SystemConfig) -> String {
    match (cfg.mode, cfg.detector) {
        (Mode::Multicast, MulticastDetector::Approximate) => "multicast-approximate".into(),
        (mode, _) => mode.as_str().into(),
    }
}

/// Bits carried per trial.
pub fn bits_per_trial(cfg: &SystemConfig) -> Result<u64> {
    if cfg.mode.is_spatial() {
        Ok(RatePlan::new(cfg.n_rx, cfg.k_active)?.total as u64)
    } else {
        Ok(Constellation::qam4(1.0).bits_per_symbol as u64)
    }
}

struct TrialOutcome {
    errors: Vec<u64>,
    unconverged: bool,
}

fn grqsm_trial(cfg: &SystemConfig, plan: &RatePlan, opts: &SolverOptions, n0: &[f64], t: u64) -> Result<TrialOutcome> {
    let mut rng = substream(cfg.seed, stream_id(DOMAIN_TRIAL, 0, t));
    let ch = gen_channel(&mut rng, cfg.n_rx, cfg.n_ris);
    let bits: Vec<bool> = (0..plan.total).map(|_| rng.random()).collect();
    let (omega, unconverged) = match cfg.mode {
        Mode::GrqsmOptimal | Mode::GrqsmSuboptimal => {
            let design = if cfg.mode == Mode::GrqsmOptimal {
                PhaseDesign::Optimal
            } else {
                PhaseDesign::Suboptimal
            };
            let tx = grqsm_transmit(&bits, &ch, plan, design, opts)?;
            (tx.solution.omega, !tx.solution.converged)
        }
        Mode::BenchmarkPartitioned => {
            let sym = crate::index::bits_to_symbol(&bits, plan)?;
            (benchmark_partitioned(&ch, &sym)?, false)
        }
        Mode::Multicast => unreachable!("spatial trial called for multicast"),
    };
    let g = effective_coefficients(&ch, &omega)?;
    let mut errors = Vec::with_capacity(n0.len());
    for (j, &noise) in n0.iter().enumerate() {
        let mut nrng = substream(cfg.seed, stream_id(DOMAIN_NOISE, j as u64, t));
        let y = g.receive(Complex64::new(1.0, 0.0), cfg.es, noise, &mut nrng);
        let det = grqsm_receive(&y, plan)?;
        errors.push(bits.iter().zip(&det.bits_hat).filter(|(a, b)| a != b).count() as u64);
    }
    Ok(TrialOutcome { errors, unconverged })
}

fn multicast_trial(cfg: &SystemConfig, opts: &SolverOptions, n0: &[f64], t: u64) -> Result<TrialOutcome> {
    let constellation = Constellation::qam4(1.0);
    let mut rng = substream(cfg.seed, stream_id(DOMAIN_TRIAL, 0, t));
    let ch = gen_channel(&mut rng, cfg.n_rx, cfg.n_ris);
    let index = rng.random_range(0..constellation.points.len());
    let sol = multicast_optimize(&ch, opts);
    let g = effective_coefficients(&ch, &sol.omega)?;
    let user = (t % cfg.n_rx as u64) as usize;
    let gain = g.g[user] * cfg.es.sqrt();
    let sent = constellation.index_bits(index);
    let approximate = cfg.detector == MulticastDetector::Approximate;
    let mut errors = Vec::with_capacity(n0.len());
    for (j, &noise) in n0.iter().enumerate() {
        let mut nrng = substream(cfg.seed, stream_id(DOMAIN_NOISE, j as u64, t));
        let y = g.receive(constellation.points[index], cfg.es, noise, &mut nrng);
        let got = multicast_detect(y[user], gain, &constellation, approximate);
        let bits = constellation.index_bits(got);
        errors.push(sent.iter().zip(&bits).filter(|(a, b)| a != b).count() as u64);
    }
    Ok(TrialOutcome {
        errors,
        unconverged: !sol.converged,
    })
}

/// Runs the BER sweep described by `cfg` with default solver options.
pub fn run_ber_sweep(cfg: &SystemConfig) -> Result<SweepResult> {
    run_ber_sweep_with(cfg, &SolverOptions::default())
}

pub fn run_ber_sweep_with(cfg: &SystemConfig, opts: &SolverOptions) -> Result<SweepResult> {
    cfg.validate()?;
    if cfg.trials > MAX_TRIALS {
        return Err(Error::InvalidConfig(format!("trials must not exceed {MAX_TRIALS}")));
    }
    if cfg.snr_db_grid.len() >= 1 << 24 {
        return Err(Error::InvalidConfig("snr grid is too long".into()));
    }
    let plan = if cfg.mode.is_spatial() {
        Some(RatePlan::new(cfg.n_rx, cfg.k_active)?)
    } else {
        None
    };
    let n0: Vec<f64> = cfg.snr_db_grid.iter().map(|&s| cfg.noise_power(s)).collect();
    let points = n0.len();

    let (errors, unconverged) = (0..cfg.trials)
        .into_par_iter()
        .map(|t| match &plan {
            Some(plan) => grqsm_trial(cfg, plan, opts, &n0, t),
            None => multicast_trial(cfg, opts, &n0, t),
        })
        .try_fold(
            || (vec![0u64; points], 0u64),
            |(mut acc, mut bad), outcome| {
                let outcome = outcome?;
                for (a, e) in acc.iter_mut().zip(&outcome.errors) {
                    *a += e;
                }
                bad += outcome.unconverged as u64;
                Ok::<_, Error>((acc, bad))
            },
        )
        .try_reduce(
            || (vec![0u64; points], 0u64),
            |(mut a, x), (b, y)| {
                for (u, v) in a.iter_mut().zip(&b) {
                    *u += v;
                }
                Ok((a, x + y))
            },
        )?;

    let per_trial = bits_per_trial(cfg)?;
    let total_bits = cfg.trials * per_trial;
    let scheme = scheme_tag(cfg);
    let records = cfg
        .snr_db_grid
        .iter()
        .zip(errors)
        .map(|(&snr_db, bit_errors)| BerRecord {
            scheme: scheme.clone(),
            n_ris: cfg.n_ris,
            n_rx: cfg.n_rx,
            k: cfg.k_active,
            snr_db,
            trials: cfg.trials,
            bit_errors,
            total_bits,
            ber: bit_errors as f64 / total_bits as f64,
            seed: cfg.seed,
        })
        .collect();
    Ok(SweepResult { records, unconverged })
}

/// Runs `f` on a dedicated pool of `threads` workers (`0` = rayon default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Parses an SNR grid: `a:b:step` (inclusive of `b` up to rounding), a
/// comma-separated list, or a mix of both. `inf` denotes a noiseless point.
pub fn parse_snr_grid(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let fields: Vec<&str> = part.split(':').map(str::trim).collect();
        match fields.as_slice() {
            [v] => out.push(parse_db(v)?),
            [a, b, step] => {
                let (a, b, step) = (parse_db(a)?, parse_db(b)?, parse_db(step)?);
                if ![a, b, step].iter().all(|v| v.is_finite()) || step <= 0.0 || b < a {
                    return Err(Error::InvalidConfig(format!(
                        "range `{part}` needs finite a <= b and step > 0"
                    )));
                }
                let count = ((b - a) / step + 1e-9).floor() as usize;
                if count >= 1 << 20 {
                    return Err(Error::InvalidConfig(format!("range `{part}` is too long")));
                }
                out.extend((0..=count).map(|i| a + i as f64 * step));
            }
            _ => return Err(Error::InvalidConfig(format!("malformed snr grid entry `{part}`"))),
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidConfig("snr grid is empty".into()));
    }
    Ok(out)
}

fn parse_db(s: &str) -> Result<f64> {
    let v = match s {
        "inf" | "+inf" => f64::INFINITY,
        _ => s
            .parse::<f64>()
            .map_err(|_| Error::InvalidConfig(format!("`{s}` is not a number")))?,
    };
    if v.is_nan() || v == f64::NEG_INFINITY {
        return Err(Error::InvalidConfig(format!("`{s}` is not a usable SNR")));
    }
    Ok(v)
}

/// Wilson score interval for `errors` successes in `n` Bernoulli trials.
pub fn wilson_interval(errors: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Pooled two-proportion z statistic of `p_a − p_b`.
pub fn two_proportion_z(errors_a: u64, n_a: u64, errors_b: u64, n_b: u64) -> f64 {
    let (na, nb) = (n_a as f64, n_b as f64);
    let (pa, pb) = (errors_a as f64 / na, errors_b as f64 / nb);
    let pooled = (errors_a + errors_b) as f64 / (na + nb);
    let se = (pooled * (1.0 - pooled) * (1.0 / na + 1.0 / nb)).sqrt();
    if se == 0.0 {
        return 0.0;
    }
    (pa - pb) / se
}

/// `true` unless the data reject `ber_a ≤ ber_b` by a one-sided test at
/// critical value `z_crit`.
pub fn not_worse(a: &BerRecord, b: &BerRecord, z_crit: f64) -> bool {
    two_proportion_z(a.bit_errors, a.total_bits, b.bit_errors, b.total_bits) <= z_crit
}

/// SNR (dB) where a BER curve crosses `target`, interpolating `log10(ber)`
/// linearly between the bracketing points. Records must share one scheme
/// and be sorted by SNR; `None` if the curve never brackets the target.
pub fn snr_at_ber(records: &[BerRecord], target: f64) -> Option<f64> {
    records.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        if !(a.snr_db.is_finite() && b.snr_db.is_finite()) {
            return None;
        }
        if a.ber >= target && b.ber <= target && a.ber > b.ber {
            if b.ber == 0.0 {
                return Some(b.snr_db);
            }
            let (la, lb, lt) = (a.ber.log10(), b.ber.log10(), target.log10());
            Some(a.snr_db + (la - lt) / (la - lb) * (b.snr_db - a.snr_db))
        } else {
            None
        }
    })
}
