//! Channel and signal primitives.
//!
//! Both the RIS→receiver matrix `H` (N_r × N) and the transmitter→RIS vector
//! `f` (length N) are i.i.d. CN(0, 1). Writing `f_i = β_i e^{jψ_i}` and
//! `ω_i = e^{j(ψ_i + φ_i)}`, the noise-free signal at antenna `l` is
//! `g_l = Σ_i β_i h_{l,i} ω_i`, which is what every other module works with.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Transmission scheme simulated by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    GrqsmOptimal,
    GrqsmSuboptimal,
    BenchmarkPartitioned,
    Multicast,
}

impl Mode {
    pub const ALL: [Mode; 4] = [
        Mode::GrqsmOptimal,
        Mode::GrqsmSuboptimal,
        Mode::BenchmarkPartitioned,
        Mode::Multicast,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::GrqsmOptimal => "grqsm-optimal",
            Mode::GrqsmSuboptimal => "grqsm-suboptimal",
            Mode::BenchmarkPartitioned => "benchmark-partitioned",
            Mode::Multicast => "multicast",
        }
    }

    /// Modes where information rides on the RIS phases (s′ = 1).
    pub fn is_spatial(self) -> bool {
        !matches!(self, Mode::Multicast)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown mode `{s}`")))
    }
}

/// Symbol detector used by the multicast receivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MulticastDetector {
    /// `argmin_s |y_l − G_l s|`.
    #[default]
    Exact,
    /// `argmin_s |y_l − Re(G_l) s|`.
    Approximate,
}

impl MulticastDetector {
    pub fn as_str(self) -> &'static str {
        match self {
            MulticastDetector::Exact => "exact",
            MulticastDetector::Approximate => "approximate",
        }
    }
}

impl FromStr for MulticastDetector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" | "ml" => Ok(MulticastDetector::Exact),
            "approximate" | "approx" => Ok(MulticastDetector::Approximate),
            _ => Err(Error::InvalidConfig(format!("unknown detector `{s}`"))),
        }
    }
}

/// All scenario parameters of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Number of RIS elements N.
    pub n_ris: usize,
    /// Receive antennas N_r.
    pub n_rx: usize,
    /// Antennas selected per branch K.
    pub k_active: usize,
    /// Symbol energy E_s.
    pub es: f64,
    /// E_s/N_0 points in dB. `+inf` is accepted and means a noiseless link.
    pub snr_db_grid: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub mode: Mode,
    /// Only consulted in [`Mode::Multicast`].
    #[serde(default)]
    pub detector: MulticastDetector,
}

impl SystemConfig {
    pub fn new(mode: Mode, n_ris: usize, n_rx: usize, k_active: usize) -> Self {
        SystemConfig {
            n_ris,
            n_rx,
            k_active,
            es: 1.0,
            snr_db_grid: Vec::new(),
            trials: 1,
            seed: 0,
            mode,
            detector: MulticastDetector::Exact,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_ris == 0 {
            return Err(Error::InvalidConfig("n_ris must be at least 1".into()));
        }
        if self.n_rx == 0 || self.n_rx > crate::index::MAX_RX {
            return Err(Error::InvalidConfig(format!(
                "n_rx must be in 1..={}",
                crate::index::MAX_RX
            )));
        }
        if self.mode.is_spatial() && (self.k_active == 0 || self.k_active > self.n_rx) {
            return Err(Error::InvalidConfig(format!(
                "k must satisfy 1 <= k <= n_rx (k = {}, n_rx = {})",
                self.k_active, self.n_rx
            )));
        }
        if self.mode == Mode::BenchmarkPartitioned && self.n_ris < 2 * self.k_active {
            return Err(Error::InvalidConfig(format!(
                "benchmark-partitioned needs n_ris >= 2k (n_ris = {}, k = {})",
                self.n_ris, self.k_active
            )));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if !(self.es > 0.0 && self.es.is_finite()) {
            return Err(Error::InvalidConfig("es must be positive and finite".into()));
        }
        if self.snr_db_grid.is_empty() {
            return Err(Error::InvalidConfig("snr grid is empty".into()));
        }
        if self.snr_db_grid.iter().any(|s| s.is_nan() || *s == f64::NEG_INFINITY) {
            return Err(Error::InvalidConfig("snr grid contains NaN or -inf".into()));
        }
        Ok(())
    }

    /// Noise power `N_0 = E_s · 10^{−SNR/10}`.
    pub fn noise_power(&self, snr_db: f64) -> f64 {
        noise_power(self.es, snr_db)
    }
}

pub fn noise_power(es: f64, snr_db: f64) -> f64 {
    es * 10f64.powf(-snr_db / 10.0)
}

/// Derives an independent random stream from the master seed.
///
/// Every unit of work (a trial at one SNR point, one channel realization, ...)
/// owns one stream, so serial and parallel runs draw identical numbers.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Packs `(domain, outer, inner)` into a stream id: 8 bits of domain tag,
/// 24 bits of outer index, 32 bits of inner index.
pub fn stream_id(domain: u8, outer: u64, inner: u64) -> u64 {
    debug_assert!(outer < (1 << 24) && inner < (1 << 32));
    ((domain as u64) << 56) | ((outer & 0xff_ffff) << 32) | (inner & 0xffff_ffff)
}

/// Draws one CN(0, σ²) sample.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * scale, im * scale)
}

/// One realization of the RIS-assisted channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    n_rx: usize,
    n_ris: usize,
    /// Row-major N_r × N.
    h: Vec<Complex64>,
    f: Vec<Complex64>,
    beta: Vec<f64>,
    psi: Vec<f64>,
}

impl ChannelRealization {
    /// Builds a realization from explicit `H` (row-major) and `f`.
    pub fn new(n_rx: usize, n_ris: usize, h: Vec<Complex64>, f: Vec<Complex64>) -> Result<Self> {
        if n_rx == 0 || n_ris == 0 {
            return Err(invalid("channel dimensions must be positive"));
        }
        if h.len() != n_rx * n_ris {
            return Err(invalid(format!(
                "H has {} entries, expected {n_rx}x{n_ris}",
                h.len()
            )));
        }
        if f.len() != n_ris {
            return Err(invalid(format!("f has {} entries, expected {n_ris}", f.len())));
        }
        if h.iter().chain(f.iter()).any(|z| !z.is_finite()) {
            return Err(invalid("channel entries must be finite"));
        }
        let beta = f.iter().map(|z| z.norm()).collect();
        let psi = f.iter().map(|z| z.arg()).collect();
        Ok(ChannelRealization {
            n_rx,
            n_ris,
            h,
            f,
            beta,
            psi,
        })
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn n_ris(&self) -> usize {
        self.n_ris
    }

    pub fn h(&self, l: usize, i: usize) -> Complex64 {
        self.h[l * self.n_ris + i]
    }

    /// Row `l` of `H` (channel from every RIS element to antenna `l`).
    pub fn h_row(&self, l: usize) -> &[Complex64] {
        &self.h[l * self.n_ris..(l + 1) * self.n_ris]
    }

    pub fn h_matrix(&self) -> &[Complex64] {
        &self.h
    }

    pub fn f(&self) -> &[Complex64] {
        &self.f
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    /// Copy with every `β_i` multiplied by `c > 0` (phases unchanged).
    pub fn scaled_beta(&self, c: f64) -> Self {
        let f = self.f.iter().map(|z| z * c).collect();
        ChannelRealization::new(self.n_rx, self.n_ris, self.h.clone(), f)
            .expect("scaling preserves validity")
    }
}

/// Draws `H` and `f` with i.i.d. CN(0, 1) entries: H row by row, then f.
pub fn gen_channel<R: Rng + ?Sized>(rng: &mut R, n_rx: usize, n_ris: usize) -> ChannelRealization {
    assert!(n_rx >= 1 && n_ris >= 1, "channel dimensions must be positive");
    let mut draw = || {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
    };
    let h: Vec<Complex64> = (0..n_rx * n_ris).map(|_| draw()).collect();
    let f: Vec<Complex64> = (0..n_ris).map(|_| draw()).collect();
    ChannelRealization::new(n_rx, n_ris, h, f).expect("gaussian draws are finite")
}

/// Noise-free per-antenna coefficients `g_l = Σ_i β_i h_{l,i} ω_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveChannel {
    pub g: Vec<Complex64>,
}

impl EffectiveChannel {
    /// `y = √E_s · g · s + n` with `n ~ CN(0, n0 I)`.
    pub fn receive<R: Rng + ?Sized>(
        &self,
        s: Complex64,
        es: f64,
        n0: f64,
        rng: &mut R,
    ) -> Vec<Complex64> {
        let amp = es.sqrt();
        self.g
            .iter()
            .map(|g| {
                let noise = if n0 > 0.0 {
                    complex_gaussian(rng, n0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                g * s * amp + noise
            })
            .collect()
    }
}

/// Computes `g = H (β ⊙ ω)`.
///
/// The unit-modulus precondition on `omega` is not enforced here; the map is
/// linear in `omega` for any input.
pub fn effective_coefficients(ch: &ChannelRealization, omega: &[Complex64]) -> Result<EffectiveChannel> {
    if omega.len() != ch.n_ris {
        return Err(invalid(format!(
            "omega has {} entries, channel has {} RIS elements",
            omega.len(),
            ch.n_ris
        )));
    }
    let weighted: Vec<Complex64> = ch.beta.iter().zip(omega).map(|(b, w)| w * *b).collect();
    let g = (0..ch.n_rx)
        .map(|l| {
            ch.h_row(l)
                .iter()
                .zip(&weighted)
                .map(|(h, w)| h * w)
                .sum()
        })
        .collect();
    Ok(EffectiveChannel { g })
}

/// Synthesises one received vector.
///
/// GRQSM modes pass `s = 1` (the source emits an unmodulated carrier);
/// multicast passes the data symbol.
pub fn received_signal<R: Rng + ?Sized>(
    ch: &ChannelRealization,
    omega: &[Complex64],
    s: Complex64,
    es: f64,
    n0: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    if !(n0 >= 0.0) {
        return Err(invalid("noise power must be non-negative"));
    }
    Ok(effective_coefficients(ch, omega)?.receive(s, es, n0, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    const S0: u64 = 0x5eed;

    #[test]
    fn channel_shape_and_amplitudes() {
        let mut rng = substream(S0, 0);
        let ch = gen_channel(&mut rng, 2, 4);
        assert_eq!(ch.h_matrix().len(), 8);
        assert_eq!(ch.f().len(), 4);
        for i in 0..4 {
            assert!(ch.beta()[i] >= 0.0);
            let rebuilt = Complex64::from_polar(ch.beta()[i], ch.psi()[i]);
            assert_abs_diff_eq!((rebuilt - ch.f()[i]).norm(), 0.0, epsilon = 1e-14);
            assert!(ch.psi()[i] > -std::f64::consts::PI && ch.psi()[i] <= std::f64::consts::PI);
        }
    }

    #[test]
    fn sampler_moments() {
        let mut rng = substream(S0, 1);
        let n = 100_000;
        let mut power = 0.0;
        let mut mean = Complex64::new(0.0, 0.0);
        for _ in 0..n / 4 {
            let ch = gen_channel(&mut rng, 2, 2);
            for z in ch.h_matrix() {
                power += z.norm_sqr();
                mean += z;
            }
        }
        power /= n as f64;
        mean /= n as f64;
        assert!((power - 1.0).abs() < 0.02, "power {power}");
        assert!(mean.re.abs() < 0.01 && mean.im.abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn identity_effective_channel() {
        let ch = ChannelRealization::new(1, 1, vec![Complex64::new(1.0, 0.0)], vec![Complex64::new(1.0, 0.0)])
            .unwrap();
        let g = effective_coefficients(&ch, &[Complex64::new(1.0, 0.0)]).unwrap();
        assert_abs_diff_eq!(g.g[0].re, 1.0);
        assert_abs_diff_eq!(g.g[0].im, 0.0);
    }

    #[test]
    fn global_rotation_rotates_every_coefficient() {
        let mut rng = substream(S0, 2);
        let ch = gen_channel(&mut rng, 3, 5);
        let omega: Vec<Complex64> = (0..5).map(|_| Complex64::from_polar(1.0, rng.random::<f64>() * 6.0)).collect();
        let rot = Complex64::from_polar(1.0, 0.7);
        let rotated: Vec<Complex64> = omega.iter().map(|w| w * rot).collect();
        let g = effective_coefficients(&ch, &omega).unwrap();
        let gr = effective_coefficients(&ch, &rotated).unwrap();
        for (a, b) in g.g.iter().zip(&gr.g) {
            assert!((a * rot - b).norm() < 1e-12);
        }
    }

    #[test]
    fn matches_direct_matrix_product() {
        // y = H (θ ⊙ f) with θ_i = ω_i e^{−jψ_i}
        let mut rng = substream(S0, 3);
        let ch = gen_channel(&mut rng, 4, 16);
        let omega: Vec<Complex64> = (0..16).map(|_| Complex64::from_polar(1.0, rng.random::<f64>() * 6.3)).collect();
        let g = effective_coefficients(&ch, &omega).unwrap();
        for l in 0..4 {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..16 {
                let theta = omega[i] * Complex64::from_polar(1.0, -ch.psi()[i]);
                acc += ch.h(l, i) * (theta * ch.f()[i]);
            }
            assert!((acc - g.g[l]).norm() <= 1e-12);
        }
    }

    #[test]
    fn linear_in_omega() {
        let mut rng = substream(S0, 4);
        let ch = gen_channel(&mut rng, 3, 6);
        let w1: Vec<Complex64> = (0..6).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let w2: Vec<Complex64> = (0..6).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let alpha = 0.3;
        let mix: Vec<Complex64> = w1.iter().zip(&w2).map(|(a, b)| a * alpha + b * (1.0 - alpha)).collect();
        let g1 = effective_coefficients(&ch, &w1).unwrap();
        let g2 = effective_coefficients(&ch, &w2).unwrap();
        let gm = effective_coefficients(&ch, &mix).unwrap();
        for l in 0..3 {
            let expect = g1.g[l] * alpha + g2.g[l] * (1.0 - alpha);
            assert!((expect - gm.g[l]).norm() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mut rng = substream(S0, 5);
        let ch = gen_channel(&mut rng, 2, 4);
        assert!(matches!(
            effective_coefficients(&ch, &[Complex64::new(1.0, 0.0); 3]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn noiseless_reception_is_exact() {
        let mut rng = substream(S0, 6);
        let ch = gen_channel(&mut rng, 4, 8);
        let omega = vec![Complex64::new(1.0, 0.0); 8];
        let s = Complex64::new(0.5, -0.5);
        let g = effective_coefficients(&ch, &omega).unwrap();
        let y = received_signal(&ch, &omega, s, 2.0, 0.0, &mut rng).unwrap();
        for l in 0..4 {
            assert_eq!(y[l], g.g[l] * s * 2f64.sqrt());
        }
    }

    #[test]
    fn noise_statistics() {
        let mut rng = substream(S0, 7);
        let ch = gen_channel(&mut rng, 2, 4);
        let omega = vec![Complex64::new(1.0, 0.0); 4];
        let eff = effective_coefficients(&ch, &omega).unwrap();
        let n0 = 0.37;
        let draws = 100_000;
        let (mut p0, mut p1, mut cross) = (0.0, 0.0, Complex64::new(0.0, 0.0));
        for _ in 0..draws {
            let y = eff.receive(Complex64::new(1.0, 0.0), 1.0, n0, &mut rng);
            let n_a = y[0] - eff.g[0];
            let n_b = y[1] - eff.g[1];
            p0 += n_a.norm_sqr();
            p1 += n_b.norm_sqr();
            cross += n_a * n_b.conj();
        }
        let d = draws as f64;
        assert!((p0 / d / n0 - 1.0).abs() < 0.02);
        assert!((p1 / d / n0 - 1.0).abs() < 0.02);
        let corr = cross / d / n0;
        assert!(corr.norm() <= 0.02, "cross correlation {corr}");
    }

    #[test]
    fn zero_energy_is_pure_noise() {
        let mut rng = substream(S0, 8);
        let ch = gen_channel(&mut rng, 1, 4);
        let omega = vec![Complex64::new(1.0, 0.0); 4];
        let draws = 100_000;
        let mut p = 0.0;
        for _ in 0..draws {
            let y = received_signal(&ch, &omega, Complex64::new(1.0, 0.0), 0.0, 1.0, &mut rng).unwrap();
            p += y[0].norm_sqr();
        }
        assert!((p / draws as f64 - 1.0).abs() < 0.02);
    }

    #[test]
    fn config_validation() {
        let mut cfg = SystemConfig::new(Mode::GrqsmOptimal, 16, 4, 2);
        cfg.snr_db_grid = vec![0.0];
        assert!(cfg.validate().is_ok());
        cfg.k_active = 5;
        assert!(cfg.validate().is_err());
        cfg.k_active = 0;
        assert!(cfg.validate().is_err());
        cfg.k_active = 2;
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
        cfg.trials = 1;
        cfg.es = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn substreams_are_reproducible_and_distinct() {
        let a: u64 = substream(1, 7).random();
        let b: u64 = substream(1, 7).random();
        let c: u64 = substream(1, 8).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
