use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DOMAIN_LAMBDA, DOMAIN_RUNTIME};
use crate::error::{Error, Result};
use crate::index::{bits_to_symbol, RatePlan};
use crate::model::{gen_channel, stream_id, substream};
use crate::optimizer::{build_workspace, multicast_optimize, multicast_values, solve_dual, SolverOptions};

/// Smallest number of realizations a statistics or runtime run accepts.
pub const MIN_REALIZATIONS: u64 = 1000;

/// Sample mean and (unbiased) variance of the first optimal multiplier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatRecord {
    pub n_ris: usize,
    pub k: usize,
    pub n_rx: usize,
    pub realizations: u64,
    pub mean_lambda1: f64,
    pub var_lambda1: f64,
    pub seed: u64,
}

/// Mean multicast solve time at one surface size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeRecord {
    pub n_ris: usize,
    pub n_rx: usize,
    pub realizations: u64,
    pub mean_solve_seconds: f64,
    /// Mean of `min_l Re(G_l)`; independent of timing.
    pub mean_min_gain: f64,
    pub unconverged: u64,
    pub seed: u64,
}

fn check_sizes(n_ris_list: &[usize], realizations: u64) -> Result<()> {
    if n_ris_list.is_empty() || n_ris_list.contains(&0) {
        return Err(Error::InvalidConfig("n_ris list must be non-empty and positive".into()));
    }
    if n_ris_list.len() >= 1 << 24 || realizations >= 1 << 32 {
        return Err(Error::InvalidConfig("too many sizes or realizations".into()));
    }
    if realizations < MIN_REALIZATIONS {
        return Err(Error::InvalidConfig(format!(
            "realizations must be at least {MIN_REALIZATIONS}"
        )));
    }
    Ok(())
}

fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Statistics of `λ_1` over random channels and uniformly random symbols.
pub fn run_lambda_stats(
    n_ris_list: &[usize],
    k: usize,
    n_rx: usize,
    realizations: u64,
    seed: u64,
) -> Result<Vec<StatRecord>> {
    check_sizes(n_ris_list, realizations)?;
    let plan = RatePlan::new(n_rx, k).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let opts = SolverOptions::default();
    n_ris_list
        .iter()
        .enumerate()
        .map(|(idx, &n)| {
            let lam: Vec<f64> = (0..realizations)
                .into_par_iter()
                .map(|r| {
                    let mut rng = substream(seed, stream_id(DOMAIN_LAMBDA, idx as u64, r));
                    let ch = gen_channel(&mut rng, n_rx, n);
                    let bits: Vec<bool> = (0..plan.total).map(|_| rng.random()).collect();
                    let ws = build_workspace(&ch, &bits_to_symbol(&bits, &plan)?)?;
                    Ok(solve_dual(&ws, &opts).lam[0])
                })
                .collect::<Result<_>>()?;
            let (mean, var) = mean_var(&lam);
            Ok(StatRecord {
                n_ris: n,
                k,
                n_rx,
                realizations,
                mean_lambda1: mean,
                var_lambda1: var,
                seed,
            })
        })
        .collect()
}

/// Times `multicast_optimize` per realization. Solves run serially, sizes
/// interleaved realization by realization. Records come back sorted by
/// `n_ris`.
pub fn run_runtime_bench(n_ris_list: &[usize], n_rx: usize, realizations: u64, seed: u64) -> Result<Vec<RuntimeRecord>> {
    check_sizes(n_ris_list, realizations)?;
    if n_rx == 0 || n_rx > crate::index::MAX_RX {
        return Err(Error::InvalidConfig(format!("n_rx must be in 1..={}", crate::index::MAX_RX)));
    }
    let opts = SolverOptions::default();
    let mut sizes: Vec<(usize, usize)> = n_ris_list.iter().copied().enumerate().collect();
    sizes.sort_by_key(|&(idx, n)| (n, idx));
    sizes.dedup_by_key(|&mut (_, n)| n);

    let mut seconds = vec![0.0; sizes.len()];
    let mut gain = vec![0.0; sizes.len()];
    let mut unconverged = vec![0u64; sizes.len()];
    for r in 0..realizations {
        for (slot, &(idx, n)) in sizes.iter().enumerate() {
            let mut rng = substream(seed, stream_id(DOMAIN_RUNTIME, idx as u64, r));
            let ch = gen_channel(&mut rng, n_rx, n);
            let start = Instant::now();
            let sol = multicast_optimize(&ch, &opts);
            seconds[slot] += start.elapsed().as_secs_f64();
            let values = multicast_values(&sol.omega, &ch)?;
            gain[slot] += values.iter().copied().fold(f64::INFINITY, f64::min);
            unconverged[slot] += (!sol.converged) as u64;
        }
    }
    let count = realizations as f64;
    Ok(sizes
        .iter()
        .enumerate()
        .map(|(slot, &(_, n))| RuntimeRecord {
            n_ris: n,
            n_rx,
            realizations,
            mean_solve_seconds: seconds[slot] / count,
            mean_min_gain: gain[slot] / count,
            unconverged: unconverged[slot],
            seed,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_stats_are_reproducible_and_sane() {
        let a = run_lambda_stats(&[16], 1, 4, 1000, 5).unwrap();
        let b = super::super::with_threads(2, || run_lambda_stats(&[16], 1, 4, 1000, 5))
            .unwrap()
            .unwrap();
        assert_eq!(a, b);
        let r = &a[0];
        assert!(r.var_lambda1 >= 0.0);
        assert!((r.mean_lambda1 - 0.5).abs() < 0.05, "{}", r.mean_lambda1);
    }

    #[test]
    fn runtime_records_are_sorted_and_positive() {
        let a = run_runtime_bench(&[32, 8], 2, 1000, 3).unwrap();
        assert_eq!(a.iter().map(|r| r.n_ris).collect::<Vec<_>>(), vec![8, 32]);
        assert!(a.iter().all(|r| r.mean_solve_seconds > 0.0 && r.mean_min_gain > 0.0));
        let b = run_runtime_bench(&[32, 8], 2, 1000, 3).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.mean_min_gain, y.mean_min_gain);
            assert_eq!(x.unconverged, y.unconverged);
        }
    }

    #[test]
    fn too_few_realizations_is_a_config_error() {
        assert!(matches!(run_lambda_stats(&[16], 1, 4, 10, 0), Err(Error::InvalidConfig(_))));
        assert!(run_runtime_bench(&[], 2, 1000, 0).is_err());
    }
}
