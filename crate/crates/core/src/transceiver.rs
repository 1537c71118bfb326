//! Transmit and detect chains.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::index::{bits_to_symbol, rank_combination, unrank_combination, RatePlan, SpatialSymbol};
use crate::model::ChannelRealization;
use crate::optimizer::{build_workspace, solve_dual, suboptimal_solution, PhaseSolution, SolverOptions};

/// Point constellation with Gray-labelled indices (index bits MSB first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constellation {
    pub points: Vec<Complex64>,
    pub bits_per_symbol: usize,
}

impl Constellation {
    /// 4-QAM `(±1 ± j)·√(E_s/2)`; the first label bit picks the real sign,
    /// the second the imaginary sign (0 ↦ +, 1 ↦ −).
    pub fn qam4(es: f64) -> Self {
        let a = (es / 2.0).sqrt();
        let points = (0..4)
            .map(|idx| {
                let re = if idx & 0b10 == 0 { a } else { -a };
                let im = if idx & 0b01 == 0 { a } else { -a };
                Complex64::new(re, im)
            })
            .collect();
        Constellation {
            points,
            bits_per_symbol: 2,
        }
    }

    pub fn average_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }

    pub fn index_bits(&self, index: usize) -> Vec<bool> {
        (0..self.bits_per_symbol)
            .rev()
            .map(|s| (index >> s) & 1 == 1)
            .collect()
    }
}

/// GRQSM phase-design variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseDesign {
    Optimal,
    Suboptimal,
}

/// Everything the transmitter decided for one symbol interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Transmission {
    pub symbol: SpatialSymbol,
    pub solution: PhaseSolution,
}

impl Transmission {
    pub fn omega(&self) -> &[Complex64] {
        &self.solution.omega
    }
}

/// Maps bits to a spatial symbol and designs the RIS phases for it.
pub fn grqsm_transmit(
    bits: &[bool],
    ch: &ChannelRealization,
    plan: &RatePlan,
    design: PhaseDesign,
    opts: &SolverOptions,
) -> Result<Transmission> {
    if plan.n_rx != ch.n_rx() {
        return Err(invalid("rate plan and channel disagree on N_r"));
    }
    let symbol = bits_to_symbol(bits, plan)?;
    let ws = build_workspace(ch, &symbol)?;
    let solution = match design {
        PhaseDesign::Optimal => solve_dual(&ws, opts),
        PhaseDesign::Suboptimal => suboptimal_solution(&ws),
    };
    Ok(Transmission { symbol, solution })
}

fn sign(v: f64) -> i8 {
    if v < 0.0 {
        -1
    } else {
        1
    }
}

/// Indices of the `k` largest magnitudes, ties toward the smaller index,
/// returned sorted.
fn top_k(values: impl Iterator<Item = f64>, k: usize) -> Vec<usize> {
    let mut idx: Vec<(usize, f64)> = values.map(f64::abs).enumerate().collect();
    idx.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut out: Vec<usize> = idx[..k].iter().map(|(i, _)| *i).collect();
    out.sort_unstable();
    out
}

/// Greedy detector: the `k` antennas with the largest `|Re y|` and,
/// independently, the `k` with the largest `|Im y|`, each with the sign of
/// its component as polarity (`sign(0) = +1`).
///
/// The returned sets may fall outside the codebook.
pub fn greedy_detect(y: &[Complex64], k: usize) -> Result<SpatialSymbol> {
    if k == 0 || k > y.len() {
        return Err(invalid(format!("k = {k} is not in 1..={}", y.len())));
    }
    let set_i = top_k(y.iter().map(|z| z.re), k);
    let set_q = top_k(y.iter().map(|z| z.im), k);
    let pol_i = set_i.iter().map(|&m| sign(y[m].re)).collect();
    let pol_q = set_q.iter().map(|&n| sign(y[n].im)).collect();
    Ok(SpatialSymbol {
        set_i,
        set_q,
        pol_i,
        pol_q,
    })
}

/// Output of the GRQSM receiver.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionResult {
    /// Sets after codebook clamping; polarities as read at the detected
    /// antennas.
    pub symbol: SpatialSymbol,
    pub bits_hat: Vec<bool>,
    /// Whether either detected set was outside the codebook.
    pub clamped: bool,
}

/// Greedy detection followed by the inverse codebook mapping. A detected
/// set whose rank is outside the codebook is replaced by the last codebook
/// word.
pub fn grqsm_receive(y: &[Complex64], plan: &RatePlan) -> Result<DetectionResult> {
    if y.len() != plan.n_rx {
        return Err(invalid(format!("received {} samples, plan expects {}", y.len(), plan.n_rx)));
    }
    let detected = greedy_detect(y, plan.k)?;
    decode_detected(detected, plan)
}

pub(crate) fn decode_detected(detected: SpatialSymbol, plan: &RatePlan) -> Result<DetectionResult> {
    let limit = plan.codebook_size() - 1;
    let mut bits = Vec::with_capacity(plan.total);
    let mut clamped = false;
    let mut sets = Vec::with_capacity(2);
    for set in [&detected.set_i, &detected.set_q] {
        let mut rank = rank_combination(set, plan.n_rx)?;
        if rank > limit {
            rank = limit;
            clamped = true;
        }
        for s in (0..plan.bits_per_set).rev() {
            bits.push((rank >> s) & 1 == 1);
        }
        sets.push(unrank_combination(rank, plan.n_rx, plan.k)?);
    }
    bits.extend(detected.pol_i.iter().chain(&detected.pol_q).map(|&p| p < 0));
    let set_q = sets.pop().expect("two sets");
    let set_i = sets.pop().expect("two sets");
    Ok(DetectionResult {
        symbol: SpatialSymbol {
            set_i,
            set_q,
            pol_i: detected.pol_i,
            pol_q: detected.pol_q,
        },
        bits_hat: bits,
        clamped,
    })
}

/// One-dimensional ML detection at one multicast user. The approximate
/// detector replaces `G_l` by its real part.
pub fn multicast_detect(y: Complex64, g: Complex64, c: &Constellation, approximate: bool) -> usize {
    let gain = if approximate { Complex64::new(g.re, 0.0) } else { g };
    c.points
        .iter()
        .enumerate()
        .map(|(idx, s)| (idx, (y - gain * s).norm_sqr()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(idx, _)| idx)
        .expect("constellation is non-empty")
}

/// RIS-partitioning benchmark: the RIS is cut into `2K` contiguous blocks
/// of `⌊N / 2K⌋` elements (the last block takes the remainder). Block `2k`
/// co-phases its elements onto the real part of antenna `m_k` with sign
/// `x^R_k`, block `2k + 1` onto the imaginary part of antenna `n_k` with
/// sign `x^I_k`.
pub fn benchmark_partitioned(ch: &ChannelRealization, sym: &SpatialSymbol) -> Result<Vec<Complex64>> {
    sym.validate(ch.n_rx())?;
    let k = sym.k();
    let n = ch.n_ris();
    let blocks = 2 * k;
    if n < blocks {
        return Err(invalid(format!("partitioning needs N >= 2K (N = {n}, K = {k})")));
    }
    let size = n / blocks;
    let mut omega = vec![Complex64::new(1.0, 0.0); n];
    for (i, w) in omega.iter_mut().enumerate() {
        let block = (i / size).min(blocks - 1);
        let kk = block / 2;
        let (antenna, rotation) = if block % 2 == 0 {
            (sym.set_i[kk], Complex64::new(sym.pol_i[kk] as f64, 0.0))
        } else {
            (sym.set_q[kk], Complex64::new(0.0, sym.pol_q[kk] as f64))
        };
        let h = ch.h(antenna, i);
        let mag = h.norm();
        if mag > 0.0 {
            *w = rotation * h.conj() / mag;
        }
    }
    Ok(omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::symbol_to_bits;
    use crate::model::{effective_coefficients, gen_channel, substream};
    use crate::optimizer::primal_values;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_bits<R: Rng>(rng: &mut R, n: usize) -> Vec<bool> {
        (0..n).map(|_| rng.random()).collect()
    }

    #[test]
    fn qam4_energy_and_labels() {
        let q = Constellation::qam4(1.0);
        assert!((q.average_energy() - 1.0).abs() < 1e-12);
        assert!((Constellation::qam4(3.0).average_energy() - 3.0).abs() < 1e-12);
        // Gray: neighbours differ in one bit
        for a in 0..4usize {
            for b in 0..4usize {
                let dist = (q.points[a] - q.points[b]).norm();
                if (dist - 2f64.sqrt()).abs() < 1e-12 {
                    assert_eq!((a ^ b).count_ones(), 1);
                }
            }
        }
    }

    #[test]
    fn greedy_magnitude_ranking() {
        let y = [c(3.1, 0.0), c(-0.2, 0.0), c(-4.0, 0.0), c(0.5, 0.0)];
        let d = greedy_detect(&y, 2).unwrap();
        assert_eq!(d.set_i, vec![0, 2]);
        assert_eq!(d.pol_i, vec![1, -1]);
    }

    #[test]
    fn greedy_tie_break() {
        let y = [c(0.5, 0.0), c(0.5, 0.0), c(0.1, 0.0)];
        assert_eq!(greedy_detect(&y, 1).unwrap().set_i, vec![0]);
        let y = [c(0.1, 0.0), c(-0.5, 0.0), c(0.5, 0.0)];
        assert_eq!(greedy_detect(&y, 1).unwrap().set_i, vec![1]);
    }

    #[test]
    fn greedy_is_permutation_equivariant_and_scale_invariant() {
        let mut rng = substream(51, 0);
        for _ in 0..200 {
            let y: Vec<Complex64> = (0..8).map(|_| crate::model::complex_gaussian(&mut rng, 1.0)).collect();
            let mut perm: Vec<usize> = (0..8).collect();
            for j in (1..8).rev() {
                perm.swap(j, rng.random_range(0..=j));
            }
            let permuted: Vec<Complex64> = perm.iter().map(|&p| y[p]).collect();
            let d = greedy_detect(&y, 3).unwrap();
            let dp = greedy_detect(&permuted, 3).unwrap();
            let mut mapped: Vec<usize> = dp.set_i.iter().map(|&j| perm[j]).collect();
            mapped.sort();
            assert_eq!(mapped, d.set_i);
            let scaled: Vec<Complex64> = y.iter().map(|z| z * 3.7).collect();
            assert_eq!(greedy_detect(&scaled, 3).unwrap(), d);
        }
    }

    #[test]
    fn clamp_out_of_codebook_set() {
        let plan = RatePlan::new(8, 2).unwrap();
        // real parts favour antennas {6, 7} (rank 27), imaginary parts {0, 1}
        let mut y = vec![c(0.0, 0.0); 8];
        y[6] = c(5.0, 0.0);
        y[7] = c(-4.0, 0.0);
        y[0].im = 3.0;
        y[1].im = 2.0;
        let r = grqsm_receive(&y, &plan).unwrap();
        assert!(r.clamped);
        assert_eq!(r.symbol.set_i, unrank_combination(15, 8, 2).unwrap());
        assert_eq!(&r.bits_hat[..4], &[true, true, true, true]);
        assert_eq!(r.bits_hat.len(), 12);
        // polarity bits read at the detected antennas: (+, −) then (+, +)
        assert_eq!(&r.bits_hat[8..], &[false, true, false, false]);
    }

    #[test]
    fn zero_word_and_positive_components() {
        let mut rng = substream(51, 1);
        let plan = RatePlan::new(8, 2).unwrap();
        let ch = gen_channel(&mut rng, 8, 64);
        let tx = grqsm_transmit(&[false; 12], &ch, &plan, PhaseDesign::Optimal, &SolverOptions::default()).unwrap();
        assert_eq!(tx.symbol.set_i, vec![0, 1]);
        assert_eq!(tx.symbol.set_q, vec![0, 1]);
        let g = effective_coefficients(&ch, tx.omega()).unwrap();
        assert!(g.g[0].re > 0.0 && g.g[1].re > 0.0 && g.g[0].im > 0.0 && g.g[1].im > 0.0);
    }

    #[test]
    fn noiseless_components_are_positive() {
        let mut rng = substream(51, 2);
        let plan = RatePlan::new(8, 2).unwrap();
        let opts = SolverOptions::default();
        for _ in 0..1000 {
            let ch = gen_channel(&mut rng, 8, 64);
            let bits = random_bits(&mut rng, plan.total);
            let tx = grqsm_transmit(&bits, &ch, &plan, PhaseDesign::Optimal, &opts).unwrap();
            let pv = primal_values(tx.omega(), &ch, &tx.symbol).unwrap();
            assert!(pv.min() > 0.0);
        }
    }

    #[test]
    fn polarity_flip_flips_one_component() {
        let mut rng = substream(51, 3);
        let plan = RatePlan::new(8, 2).unwrap();
        let opts = SolverOptions::default();
        for _ in 0..50 {
            let ch = gen_channel(&mut rng, 8, 64);
            let bits = random_bits(&mut rng, plan.total);
            let mut flipped = bits.clone();
            flipped[plan.bits_index] ^= true; // first I polarity bit
            let a = grqsm_transmit(&bits, &ch, &plan, PhaseDesign::Optimal, &opts).unwrap();
            let b = grqsm_transmit(&flipped, &ch, &plan, PhaseDesign::Optimal, &opts).unwrap();
            let ga = effective_coefficients(&ch, a.omega()).unwrap();
            let gb = effective_coefficients(&ch, b.omega()).unwrap();
            let m0 = a.symbol.set_i[0];
            assert!(ga.g[m0].re * gb.g[m0].re < 0.0);
            for k in 0..plan.k {
                assert_eq!(ga.g[a.symbol.set_q[k]].im.signum(), gb.g[b.symbol.set_q[k]].im.signum());
            }
        }
    }

    #[test]
    fn flipping_every_polarity_negates_the_design() {
        let mut rng = substream(51, 7);
        let plan = RatePlan::new(8, 2).unwrap();
        let opts = SolverOptions::default();
        for _ in 0..50 {
            let ch = gen_channel(&mut rng, 8, 64);
            let bits = random_bits(&mut rng, plan.total);
            let mut flipped = bits.clone();
            flipped[plan.bits_index..].iter_mut().for_each(|b| *b = !*b);
            let a = grqsm_transmit(&bits, &ch, &plan, PhaseDesign::Optimal, &opts).unwrap();
            let b = grqsm_transmit(&flipped, &ch, &plan, PhaseDesign::Optimal, &opts).unwrap();
            let rel = (a.solution.primal_min - b.solution.primal_min).abs() / a.solution.primal_min;
            assert!(rel <= 1e-6, "max-min value changed by {rel}");
            if a.solution.degenerate_elements == 0 {
                for (wa, wb) in a.omega().iter().zip(b.omega()) {
                    assert!((wa + wb).norm() <= 1e-8);
                }
            }
        }
    }

    #[test]
    fn noiseless_loopback_fails_only_through_interference() {
        let mut rng = substream(51, 4);
        let plan = RatePlan::new(8, 2).unwrap();
        let opts = SolverOptions::default();
        let mut errors = 0;
        for _ in 0..1000 {
            let ch = gen_channel(&mut rng, 8, 64);
            let bits = random_bits(&mut rng, plan.total);
            let tx = grqsm_transmit(&bits, &ch, &plan, PhaseDesign::Optimal, &opts).unwrap();
            let y = effective_coefficients(&ch, tx.omega()).unwrap().g;
            let rx = grqsm_receive(&y, &plan).unwrap();
            if rx.bits_hat == bits {
                assert_eq!(rx.symbol, tx.symbol);
                continue;
            }
            errors += 1;
            // some antenna outside a targeted set outshines a targeted one
            let weakest_i = tx.symbol.set_i.iter().map(|&m| y[m].re.abs()).fold(f64::INFINITY, f64::min);
            let weakest_q = tx.symbol.set_q.iter().map(|&n| y[n].im.abs()).fold(f64::INFINITY, f64::min);
            let leak_i = (0..8).filter(|a| !tx.symbol.set_i.contains(a)).any(|a| y[a].re.abs() >= weakest_i);
            let leak_q = (0..8).filter(|a| !tx.symbol.set_q.contains(a)).any(|a| y[a].im.abs() >= weakest_q);
            assert!(leak_i || leak_q);
        }
        assert!(errors <= 10, "{errors} loopback errors");
    }

    #[test]
    fn sign_flipped_component_flips_its_polarity_bit() {
        let mut rng = substream(51, 5);
        let plan = RatePlan::new(8, 2).unwrap();
        let ch = gen_channel(&mut rng, 8, 128);
        let bits = random_bits(&mut rng, plan.total);
        let tx = grqsm_transmit(&bits, &ch, &plan, PhaseDesign::Optimal, &SolverOptions::default()).unwrap();
        let mut y = effective_coefficients(&ch, tx.omega()).unwrap().g;
        let n1 = tx.symbol.set_q[1];
        y[n1].im = -y[n1].im;
        let rx = grqsm_receive(&y, &plan).unwrap();
        let diff: Vec<usize> = (0..plan.total).filter(|&j| rx.bits_hat[j] != bits[j]).collect();
        assert_eq!(diff, vec![plan.bits_index + plan.k + 1]);
        assert_eq!(symbol_to_bits(&tx.symbol, &plan).unwrap(), bits);
    }

    #[test]
    fn multicast_detectors() {
        let q = Constellation::qam4(1.0);
        let g = c(3.0, -1.0);
        for (idx, s) in q.points.iter().enumerate() {
            assert_eq!(multicast_detect(g * s, g, &q, false), idx);
        }
        let mut rng = substream(51, 6);
        let real_gain = c(2.5, 0.0);
        for _ in 0..500 {
            let y = crate::model::complex_gaussian(&mut rng, 4.0);
            assert_eq!(multicast_detect(y, real_gain, &q, false), multicast_detect(y, real_gain, &q, true));
        }
        // global phase applied to both y and g
        let rot = Complex64::from_polar(1.0, 1.1);
        for _ in 0..500 {
            let y = crate::model::complex_gaussian(&mut rng, 4.0);
            assert_eq!(multicast_detect(y, g, &q, false), multicast_detect(y * rot, g * rot, &q, false));
        }
    }

    #[test]
    fn partitioned_blocks() {
        let mut rng = substream(51, 7);
        let ch = gen_channel(&mut rng, 2, 2);
        let sym = SpatialSymbol {
            set_i: vec![0],
            set_q: vec![1],
            pol_i: vec![1],
            pol_q: vec![1],
        };
        let w = benchmark_partitioned(&ch, &sym).unwrap();
        let re = ch.beta()[0] * (ch.h(0, 0) * w[0]);
        let im = ch.beta()[1] * (ch.h(1, 1) * w[1]);
        assert!((re.re - ch.beta()[0] * ch.h(0, 0).norm()).abs() < 1e-12 && re.im.abs() < 1e-12);
        assert!((im.im - ch.beta()[1] * ch.h(1, 1).norm()).abs() < 1e-12 && im.re.abs() < 1e-12);

        let ch = gen_channel(&mut rng, 8, 67);
        let sym = SpatialSymbol {
            set_i: vec![1, 4],
            set_q: vec![0, 4],
            pol_i: vec![-1, 1],
            pol_q: vec![1, -1],
        };
        let w = benchmark_partitioned(&ch, &sym).unwrap();
        assert!(w.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        // last block (16 + remainder 3 elements) targets Im at antenna 4 with sign −1
        for i in 48..67 {
            let t = ch.h(4, i) * w[i];
            assert!(t.re.abs() < 1e-12 && t.im < 0.0);
        }
        assert!(benchmark_partitioned(&gen_channel(&mut rng, 8, 3), &sym).is_err());
    }
}
