//! Bits ↔ spatial-symbol mapping.
//!
//! A GRQSM symbol picks a K-subset of the N_r receive antennas for the
//! in-phase branch and, independently, one for the quadrature branch, then
//! stamps a ±1 polarity on each selected component. The codebook for each
//! branch is the first `2^⌊log₂ C(N_r, K)⌋` combinations in lexicographic
//! order; the remaining combinations are never transmitted.
//!
//! Antenna indices are zero-based throughout the crate.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Largest supported antenna count (keeps every binomial inside `u64`).
pub const MAX_RX: usize = 32;

/// `C(n, k)`, zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for j in 0..k {
        // exact at every step: acc * (n - j) is divisible by (j + 1)
        acc = acc * (n - j) as u64 / (j + 1) as u64;
    }
    acc
}

/// Lexicographic rank of a sorted k-subset of `0..n`.
pub fn rank_combination(set: &[usize], n: usize) -> Result<u64> {
    let k = set.len();
    if k > n {
        return Err(invalid(format!("subset of size {k} from {n} elements")));
    }
    let mut rank = 0u64;
    let mut next = 0usize;
    for (pos, &c) in set.iter().enumerate() {
        if c >= n || c < next {
            return Err(invalid(format!("{set:?} is not a sorted subset of 0..{n}")));
        }
        for skipped in next..c {
            rank += binomial(n - skipped - 1, k - pos - 1);
        }
        next = c + 1;
    }
    Ok(rank)
}

/// The `rank`-th sorted k-subset of `0..n` in lexicographic order.
pub fn unrank_combination(rank: u64, n: usize, k: usize) -> Result<Vec<usize>> {
    let total = binomial(n, k);
    if rank >= total {
        return Err(invalid(format!("rank {rank} out of range for C({n},{k}) = {total}")));
    }
    let mut rest = rank;
    let mut out = Vec::with_capacity(k);
    let mut c = 0usize;
    for pos in 0..k {
        loop {
            let count = binomial(n - c - 1, k - pos - 1);
            if rest < count {
                break;
            }
            rest -= count;
            c += 1;
        }
        out.push(c);
        c += 1;
    }
    Ok(out)
}

/// Bit budget of one GRQSM symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatePlan {
    pub n_rx: usize,
    pub k: usize,
    /// `⌊log₂ C(N_r, K)⌋`, bits carried by one branch's antenna set.
    pub bits_per_set: usize,
    pub bits_index: usize,
    pub bits_polarity: usize,
    pub total: usize,
}

impl RatePlan {
    pub fn new(n_rx: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n_rx || n_rx > MAX_RX {
            return Err(invalid(format!(
                "rate plan needs 1 <= k <= n_rx <= {MAX_RX} (k = {k}, n_rx = {n_rx})"
            )));
        }
        let combos = binomial(n_rx, k);
        let bits_per_set = (u64::BITS - 1 - combos.leading_zeros()) as usize;
        let bits_index = 2 * bits_per_set;
        let bits_polarity = 2 * k;
        Ok(RatePlan {
            n_rx,
            k,
            bits_per_set,
            bits_index,
            bits_polarity,
            total: bits_index + bits_polarity,
        })
    }

    /// Number of antenna sets in each branch's codebook.
    pub fn codebook_size(&self) -> u64 {
        1u64 << self.bits_per_set
    }
}

/// Transmitted spatial symbol.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpatialSymbol {
    /// Sorted antennas whose real part is targeted (the set M).
    pub set_i: Vec<usize>,
    /// Sorted antennas whose imaginary part is targeted (the set N).
    pub set_q: Vec<usize>,
    /// Polarity of the real part at each antenna of `set_i`.
    pub pol_i: Vec<i8>,
    /// Polarity of the imaginary part at each antenna of `set_q`.
    pub pol_q: Vec<i8>,
}

impl SpatialSymbol {
    pub fn k(&self) -> usize {
        self.set_i.len()
    }

    pub fn validate(&self, n_rx: usize) -> Result<()> {
        let k = self.set_i.len();
        if k == 0 || self.set_q.len() != k || self.pol_i.len() != k || self.pol_q.len() != k {
            return Err(invalid("symbol sets and polarities must all have length K >= 1"));
        }
        for set in [&self.set_i, &self.set_q] {
            if set.windows(2).any(|w| w[0] >= w[1]) || set.iter().any(|&m| m >= n_rx) {
                return Err(invalid(format!("{set:?} is not a sorted subset of 0..{n_rx}")));
            }
        }
        if self.pol_i.iter().chain(&self.pol_q).any(|p| *p != 1 && *p != -1) {
            return Err(invalid("polarities must be +1 or -1"));
        }
        Ok(())
    }
}

fn read_uint(bits: &[bool]) -> u64 {
    bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
}

fn write_uint(value: u64, width: usize, out: &mut Vec<bool>) {
    for shift in (0..width).rev() {
        out.push((value >> shift) & 1 == 1);
    }
}

fn polarity(bit: bool) -> i8 {
    if bit {
        -1
    } else {
        1
    }
}

/// Maps `plan.total` bits onto a symbol: set_i rank, set_q rank (both
/// MSB-first), then K polarity bits per branch with 0 ↦ +1 and 1 ↦ −1.
pub fn bits_to_symbol(bits: &[bool], plan: &RatePlan) -> Result<SpatialSymbol> {
    if bits.len() != plan.total {
        return Err(invalid(format!("expected {} bits, got {}", plan.total, bits.len())));
    }
    let b = plan.bits_per_set;
    let k = plan.k;
    let set_i = unrank_combination(read_uint(&bits[..b]), plan.n_rx, k)?;
    let set_q = unrank_combination(read_uint(&bits[b..2 * b]), plan.n_rx, k)?;
    let pol_i = bits[2 * b..2 * b + k].iter().map(|&x| polarity(x)).collect();
    let pol_q = bits[2 * b + k..].iter().map(|&x| polarity(x)).collect();
    Ok(SpatialSymbol {
        set_i,
        set_q,
        pol_i,
        pol_q,
    })
}

/// Inverse of [`bits_to_symbol`]; fails for sets outside the codebook.
pub fn symbol_to_bits(sym: &SpatialSymbol, plan: &RatePlan) -> Result<Vec<bool>> {
    if sym.k() != plan.k {
        return Err(invalid(format!("symbol has K = {}, plan has K = {}", sym.k(), plan.k)));
    }
    sym.validate(plan.n_rx)?;
    let mut out = Vec::with_capacity(plan.total);
    for set in [&sym.set_i, &sym.set_q] {
        let rank = rank_combination(set, plan.n_rx)?;
        if rank >= plan.codebook_size() {
            return Err(invalid(format!(
                "antenna set {set:?} has rank {rank}, outside the {}-word codebook",
                plan.codebook_size()
            )));
        }
        write_uint(rank, plan.bits_per_set, &mut out);
    }
    out.extend(sym.pol_i.iter().chain(&sym.pol_q).map(|&p| p < 0));
    Ok(out)
}
