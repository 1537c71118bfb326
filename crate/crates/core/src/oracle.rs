//! Brute-force references.
//!
//! These evaluate everything directly from the channel and the bit
//! mapping, sharing no code with the optimizer or the greedy detector, and
//! are only meant for tiny problem sizes.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::index::{binomial, unrank_combination, RatePlan, SpatialSymbol};
use crate::model::ChannelRealization;

/// Largest RIS the phase-grid oracles accept.
pub const MAX_GRID_ELEMENTS: usize = 3;
/// Largest codebook the exhaustive detector accepts.
pub const MAX_CODEBOOK: u64 = 10_000;

/// Uniform per-element phase grid over `[0°, 360°)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub resolution_deg: f64,
}

impl GridSpec {
    pub fn new(resolution_deg: f64) -> Result<Self> {
        let g = GridSpec { resolution_deg };
        g.points()?;
        Ok(g)
    }

    /// Number of grid phases per element.
    pub fn points(&self) -> Result<usize> {
        let r = self.resolution_deg;
        if !(r > 0.0 && r <= 1.0) {
            return Err(invalid(format!("grid resolution must be in (0°, 1°], got {r}°")));
        }
        let n = (360.0 / r).round();
        if ((n * r) - 360.0).abs() > 1e-9 {
            return Err(invalid(format!("{r}° does not divide 360°")));
        }
        Ok(n as usize)
    }

    fn phases(&self) -> Result<Vec<Complex64>> {
        let n = self.points()?;
        Ok((0..n)
            .map(|t| Complex64::from_polar(1.0, (t as f64 * self.resolution_deg).to_radians()))
            .collect())
    }
}

/// Best grid point found by an oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOptimum {
    pub value: f64,
    pub omega: Vec<Complex64>,
}

/// Maximum over the phase grid of `min{X_k, Y_k}`.
pub fn grid_maxmin(ch: &ChannelRealization, sym: &SpatialSymbol, grid: GridSpec) -> Result<GridOptimum> {
    sym.validate(ch.n_rx())?;
    // each row is Re(c · Σ_i β_i h_{l,i} ω_i) for a row-specific sign/rotation c
    let mut rows: Vec<(usize, Complex64)> = Vec::new();
    for (&m, &p) in sym.set_i.iter().zip(&sym.pol_i) {
        rows.push((m, Complex64::new(p as f64, 0.0)));
    }
    for (&n, &p) in sym.set_q.iter().zip(&sym.pol_q) {
        // Im(z) = Re(−j z)
        rows.push((n, Complex64::new(0.0, -(p as f64))));
    }
    maximize(ch, &rows, grid)
}

/// Maximum over the phase grid of `min_l Re(G_l)`.
pub fn grid_maxmin_multicast(ch: &ChannelRealization, grid: GridSpec) -> Result<GridOptimum> {
    let rows: Vec<(usize, Complex64)> = (0..ch.n_rx()).map(|l| (l, Complex64::new(1.0, 0.0))).collect();
    maximize(ch, &rows, grid)
}

fn maximize(ch: &ChannelRealization, rows: &[(usize, Complex64)], grid: GridSpec) -> Result<GridOptimum> {
    let n = ch.n_ris();
    if n > MAX_GRID_ELEMENTS {
        return Err(Error::OracleScaleExceeded(format!(
            "phase grid over {n} elements (at most {MAX_GRID_ELEMENTS})"
        )));
    }
    if n == 0 {
        return Err(invalid("empty RIS"));
    }
    let phases = grid.phases()?;
    let g = phases.len();
    let m = rows.len();

    // table[i][t * m + j]: contribution of element i at phase t to row j
    let table: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut t = vec![0.0; g * m];
            for (ti, w) in phases.iter().enumerate() {
                for (j, &(l, c)) in rows.iter().enumerate() {
                    t[ti * m + j] = (c * ch.beta()[i] * ch.h(l, i) * w).re;
                }
            }
            t
        })
        .collect();
    let peak: Vec<Vec<f64>> = table
        .iter()
        .map(|t| {
            (0..m)
                .map(|j| (0..g).map(|ti| t[ti * m + j]).fold(f64::NEG_INFINITY, f64::max))
                .collect()
        })
        .collect();

    // a pass over every `stride`-th grid point gives an attained value that
    // bounds the search; pruning against it is strict, so ties survive
    let stride = (g / COARSE_POINTS).max(1);
    let floor = if n == 3 && stride > 1 {
        search(&table, &peak, n, g, m, stride, f64::NEG_INFINITY).0
    } else {
        f64::NEG_INFINITY
    };
    let best = search(&table, &peak, n, g, m, 1, floor);
    Ok(GridOptimum {
        value: best.0,
        omega: best.1.iter().map(|&t| phases[t]).collect(),
    })
}

const COARSE_POINTS: usize = 90;

/// Exact maximum of the lower envelope over the grid points whose indices
/// are multiples of `stride`. Every slice of the outermost phase is searched
/// on its own; ties resolve to the smallest grid index so the result does
/// not depend on the schedule.
fn search(
    table: &[Vec<f64>],
    peak: &[Vec<f64>],
    n: usize,
    g: usize,
    m: usize,
    stride: usize,
    floor: f64,
) -> (f64, Vec<usize>) {
    let min_row = |acc: &[f64]| acc.iter().copied().fold(f64::INFINITY, f64::min);
    (0..g)
        .step_by(stride)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|t0| {
            let mut best = (f64::NEG_INFINITY, vec![t0; n]);
            let base: Vec<f64> = table[0][t0 * m..(t0 + 1) * m].to_vec();
            if n == 1 {
                return (min_row(&base), vec![t0]);
            }
            if n == 3 {
                let bound = (0..m).map(|j| base[j] + peak[1][j] + peak[2][j]).fold(f64::INFINITY, f64::min);
                if bound < floor {
                    return best;
                }
            }
            let mut acc = vec![0.0; m];
            for t1 in (0..g).step_by(stride) {
                for j in 0..m {
                    acc[j] = base[j] + table[1][t1 * m + j];
                }
                if n == 2 {
                    let v = min_row(&acc);
                    if v > best.0 {
                        best = (v, vec![t0, t1]);
                    }
                    continue;
                }
                // row-wise upper bound over the last element
                let bound = (0..m).map(|j| acc[j] + peak[2][j]).fold(f64::INFINITY, f64::min);
                if bound <= best.0 || bound < floor {
                    continue;
                }
                'phase: for t2 in (0..g).step_by(stride) {
                    let row = &table[2][t2 * m..(t2 + 1) * m];
                    let mut v = f64::INFINITY;
                    for j in 0..m {
                        v = v.min(acc[j] + row[j]);
                        if v <= best.0 {
                            continue 'phase;
                        }
                    }
                    best = (v, vec![t0, t1, t2]);
                }
            }
            best
        })
        .reduce(
            || (f64::NEG_INFINITY, vec![usize::MAX; n]),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        )
}

/// Scores every codebook word by the summed `|Re y|` over its I set and
/// `|Im y|` over its Q set, keeps the best (lowest rank on ties) and reads
/// the polarity bits as the signs at the chosen antennas.
pub fn exhaustive_detect(y: &[Complex64], plan: &RatePlan) -> Result<Vec<bool>> {
    if y.len() != plan.n_rx {
        return Err(invalid(format!("received {} samples, plan expects {}", y.len(), plan.n_rx)));
    }
    if binomial(plan.n_rx, plan.k) > MAX_CODEBOOK {
        return Err(Error::OracleScaleExceeded(format!(
            "C({}, {}) exceeds {MAX_CODEBOOK} candidate sets",
            plan.n_rx, plan.k
        )));
    }
    let words = plan.codebook_size();
    let mut bits = Vec::with_capacity(plan.total);
    let mut polarities = Vec::with_capacity(2 * plan.k);
    for part in [|z: Complex64| z.re, |z: Complex64| z.im] {
        let mut best: Option<(f64, u64, Vec<usize>)> = None;
        for rank in 0..words {
            let set = unrank_combination(rank, plan.n_rx, plan.k)?;
            let score: f64 = set.iter().map(|&a| part(y[a]).abs()).sum();
            if best.as_ref().is_none_or(|b| score > b.0) {
                best = Some((score, rank, set));
            }
        }
        let (_, rank, set) = best.expect("codebook is non-empty");
        for s in (0..plan.bits_per_set).rev() {
            bits.push((rank >> s) & 1 == 1);
        }
        polarities.extend(set.iter().map(|&a| part(y[a]) < 0.0));
    }
    bits.extend(polarities);
    Ok(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gen_channel, substream};

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(0.25).is_ok());
        assert!(GridSpec::new(1.0).is_ok());
        assert!(GridSpec::new(2.0).is_err());
        assert!(GridSpec::new(0.7).is_err());
        assert!(GridSpec::new(0.0).is_err());
        assert_eq!(GridSpec::new(0.5).unwrap().points().unwrap(), 720);
    }

    #[test]
    fn flat_instance_value_is_one() {
        let ch = ChannelRealization::new(
            2,
            1,
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)],
            vec![Complex64::new(1.0, 0.0)],
        )
        .unwrap();
        let sym = SpatialSymbol {
            set_i: vec![0],
            set_q: vec![1],
            pol_i: vec![1],
            pol_q: vec![1],
        };
        let best = grid_maxmin(&ch, &sym, GridSpec::new(1.0).unwrap()).unwrap();
        assert!((best.value - 1.0).abs() < 1e-12);
        assert!((best.omega[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn refuses_large_surfaces() {
        let mut rng = substream(51, 0);
        let ch = gen_channel(&mut rng, 2, 4);
        let err = grid_maxmin_multicast(&ch, GridSpec::new(1.0).unwrap()).unwrap_err();
        assert!(matches!(err, Error::OracleScaleExceeded(_)));
    }

    #[test]
    fn pruned_search_matches_full_enumeration() {
        let mut rng = substream(51, 1);
        let grid = GridSpec::new(1.0).unwrap();
        let phases = grid.phases().unwrap();
        for _ in 0..3 {
            let ch = gen_channel(&mut rng, 3, 3);
            let best = grid_maxmin_multicast(&ch, grid).unwrap();
            let mut full = f64::NEG_INFINITY;
            for a in &phases {
                for b in &phases {
                    for c in &phases {
                        let w = [*a, *b, *c];
                        let v = (0..3)
                            .map(|l| (0..3).map(|i| ch.beta()[i] * (ch.h(l, i) * w[i]).re).sum::<f64>())
                            .fold(f64::INFINITY, f64::min);
                        full = full.max(v);
                    }
                }
            }
            assert!((best.value - full).abs() <= 1e-12 * full.abs());
        }
    }

    #[test]
    fn refinement_never_decreases() {
        let mut rng = substream(51, 2);
        for _ in 0..5 {
            let ch = gen_channel(&mut rng, 2, 2);
            let coarse = grid_maxmin_multicast(&ch, GridSpec::new(1.0).unwrap()).unwrap();
            let fine = grid_maxmin_multicast(&ch, GridSpec::new(0.5).unwrap()).unwrap();
            assert!(fine.value >= coarse.value);
        }
    }

    #[test]
    fn full_codebook_only_varies_polarities() {
        let plan = RatePlan::new(3, 3).unwrap();
        let y = [Complex64::new(-1.0, 2.0), Complex64::new(0.5, -0.1), Complex64::new(0.0, 0.0)];
        let bits = exhaustive_detect(&y, &plan).unwrap();
        assert_eq!(plan.bits_per_set, 0);
        assert_eq!(bits, vec![true, false, false, false, true, false]);
    }
}
