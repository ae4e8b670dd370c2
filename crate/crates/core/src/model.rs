//! System constants, received pulse shapes and random code generation.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quadrature::GaussLegendre;

/// Default ratio between chip time and the doublet shape parameter.
pub const DOUBLET_TAU_RATIO: f64 = 2.5;

/// Scalar constants shared by every user of the link.
///
/// The total processing gain `N = n_frames * n_chips_per_frame` and the frame
/// time are derived on demand and never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    n_users: usize,
    n_frames: usize,
    n_chips_per_frame: usize,
    chip_time: f64,
    bit_energy: Vec<f64>,
    noise_psd: f64,
}

impl SystemParams {
    /// Builds a parameter set with unit chip time. `bit_energy[0]` is the
    /// energy of the user of interest.
    pub fn new(
        n_frames: usize,
        n_chips_per_frame: usize,
        bit_energy: Vec<f64>,
        noise_psd: f64,
    ) -> Result<Self> {
        Self::with_chip_time(n_frames, n_chips_per_frame, 1.0, bit_energy, noise_psd)
    }

    pub fn with_chip_time(
        n_frames: usize,
        n_chips_per_frame: usize,
        chip_time: f64,
        bit_energy: Vec<f64>,
        noise_psd: f64,
    ) -> Result<Self> {
        if n_frames == 0 {
            return Err(invalid("n_frames", "must be at least 1"));
        }
        if n_chips_per_frame == 0 {
            return Err(invalid("n_chips_per_frame", "must be at least 1"));
        }
        if bit_energy.is_empty() {
            return Err(invalid("bit_energy", "at least one user is required"));
        }
        if let Some(e) = bit_energy.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(invalid("bit_energy", format!("entry {e} is not > 0")));
        }
        if !(noise_psd.is_finite() && noise_psd >= 0.0) {
            return Err(invalid("noise_psd", format!("{noise_psd} is not >= 0")));
        }
        if !(chip_time.is_finite() && chip_time > 0.0) {
            return Err(invalid("chip_time", format!("{chip_time} is not > 0")));
        }
        Ok(Self {
            n_users: bit_energy.len(),
            n_frames,
            n_chips_per_frame,
            chip_time,
            bit_energy,
            noise_psd,
        })
    }

    /// User 1 with energy `e1` and `n_users - 1` interferers of energy `e`.
    pub fn uniform_interferers(
        n_users: usize,
        n_frames: usize,
        n_chips_per_frame: usize,
        e1: f64,
        e: f64,
        noise_psd: f64,
    ) -> Result<Self> {
        if n_users == 0 {
            return Err(invalid("n_users", "must be at least 1"));
        }
        let mut energy = vec![e; n_users];
        energy[0] = e1;
        Self::new(n_frames, n_chips_per_frame, energy, noise_psd)
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn n_chips_per_frame(&self) -> usize {
        self.n_chips_per_frame
    }

    pub fn chip_time(&self) -> f64 {
        self.chip_time
    }

    /// Total processing gain N.
    pub fn processing_gain(&self) -> usize {
        self.n_frames * self.n_chips_per_frame
    }

    pub fn frame_time(&self) -> f64 {
        self.n_chips_per_frame as f64 * self.chip_time
    }

    pub fn bit_energy(&self) -> &[f64] {
        &self.bit_energy
    }

    pub fn interferer_energies(&self) -> &[f64] {
        &self.bit_energy[1..]
    }

    /// The common interferer energy, if all interferers share one.
    pub fn equal_interferer_energy(&self) -> Option<f64> {
        let rest = self.interferer_energies();
        match rest.first() {
            None => Some(0.0),
            Some(&e) if rest.iter().all(|&x| x == e) => Some(e),
            Some(_) => None,
        }
    }

    pub fn noise_psd(&self) -> f64 {
        self.noise_psd
    }

    pub fn with_noise_psd(&self, noise_psd: f64) -> Result<Self> {
        Self::with_chip_time(
            self.n_frames,
            self.n_chips_per_frame,
            self.chip_time,
            self.bit_energy.clone(),
            noise_psd,
        )
    }

    pub fn with_bit_energy(&self, bit_energy: Vec<f64>) -> Result<Self> {
        Self::with_chip_time(
            self.n_frames,
            self.n_chips_per_frame,
            self.chip_time,
            bit_energy,
            self.noise_psd,
        )
    }
}

/// Anything with a pulse autocorrelation R(x) supported on `|x| < chip_time`.
pub trait Autocorrelation {
    fn chip_time(&self) -> f64;

    fn autocorrelation(&self, offset: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PulseKind {
    /// Second-derivative Gaussian pulse with shape parameter `tau`.
    GaussianDoublet { tau: f64 },
    /// Unit-energy rectangle of width one chip.
    Rectangular,
}

/// Unit-energy received pulse `w_rx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseShape {
    kind: PulseKind,
    chip_time: f64,
}

impl PulseShape {
    /// Gaussian doublet with `tau = chip_time / 2.5`.
    pub fn doublet(chip_time: f64) -> Self {
        Self {
            kind: PulseKind::GaussianDoublet {
                tau: chip_time / DOUBLET_TAU_RATIO,
            },
            chip_time,
        }
    }

    pub fn doublet_with_tau(chip_time: f64, tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(invalid("tau", format!("{tau} is not > 0")));
        }
        Ok(Self {
            kind: PulseKind::GaussianDoublet { tau },
            chip_time,
        })
    }

    pub fn rectangular(chip_time: f64) -> Self {
        Self {
            kind: PulseKind::Rectangular,
            chip_time,
        }
    }

    pub fn kind(&self) -> PulseKind {
        self.kind
    }

    /// Pulse amplitude at time `t`, centred on zero.
    ///
    /// The doublet is returned untruncated; its energy outside one chip is
    /// below 1e-8.
    pub fn waveform(&self, t: f64) -> f64 {
        match self.kind {
            PulseKind::GaussianDoublet { tau } => {
                let u = t / tau;
                let energy = 3.0 * tau / 8.0;
                (1.0 - 4.0 * PI * u * u) * (-2.0 * PI * u * u).exp() / energy.sqrt()
            }
            PulseKind::Rectangular => {
                let half = 0.5 * self.chip_time;
                if (-half..half).contains(&t) {
                    1.0 / self.chip_time.sqrt()
                } else {
                    0.0
                }
            }
        }
    }
}

impl Autocorrelation for PulseShape {
    fn chip_time(&self) -> f64 {
        self.chip_time
    }

    /// R(x), hard-truncated to zero for `|x| >= chip_time`.
    fn autocorrelation(&self, offset: f64) -> f64 {
        let x = offset.abs();
        if x >= self.chip_time {
            return 0.0;
        }
        match self.kind {
            PulseKind::GaussianDoublet { tau } => {
                let u2 = (x / tau) * (x / tau);
                (1.0 - 4.0 * PI * u2 + 4.0 * PI * PI / 3.0 * u2 * u2) * (-PI * u2).exp()
            }
            PulseKind::Rectangular => 1.0 - x / self.chip_time,
        }
    }
}

/// γ = (1/T_c) ∫_{-T_c}^{T_c} R²(ε) dε, the asynchronous-to-synchronous MAI
/// power ratio of a pulse.
pub fn gamma_factor<A: Autocorrelation + ?Sized>(pulse: &A) -> f64 {
    let tc = pulse.chip_time();
    let rule = GaussLegendre::new(64);
    2.0 / tc * rule.integrate(0.0, tc, |e| pulse.autocorrelation(e).powi(2))
}

/// Independent random stream `index` derived from `master_seed`.
///
/// Streams with different indices never overlap, so per-drop or per-user
/// work can be generated in any order or on any thread.
pub fn stream_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Time-hopping codes, one row per user, `n_symbols * n_frames` entries each.
pub fn gen_th_codes<R: Rng + ?Sized>(
    params: &SystemParams,
    n_symbols: usize,
    rng: &mut R,
) -> Vec<Vec<u32>> {
    let nc = params.n_chips_per_frame() as u32;
    let len = n_symbols * params.n_frames();
    (0..params.n_users())
        .map(|_| (0..len).map(|_| rng.random_range(0..nc)).collect())
        .collect()
}

/// Pulse polarity codes; all `+1` when randomization is disabled.
pub fn gen_polarity_codes<R: Rng + ?Sized>(
    params: &SystemParams,
    n_symbols: usize,
    enabled: bool,
    rng: &mut R,
) -> Vec<Vec<i8>> {
    let len = n_symbols * params.n_frames();
    (0..params.n_users())
        .map(|_| {
            if enabled {
                (0..len).map(|_| random_sign(rng)).collect()
            } else {
                vec![1; len]
            }
        })
        .collect()
}

/// Equiprobable information bits in `{-1, +1}`, one row per user.
pub fn gen_bits<R: Rng + ?Sized>(
    params: &SystemParams,
    n_symbols: usize,
    rng: &mut R,
) -> Vec<Vec<i8>> {
    (0..params.n_users())
        .map(|_| (0..n_symbols).map(|_| random_sign(rng)).collect())
        .collect()
}

fn random_sign<R: Rng + ?Sized>(rng: &mut R) -> i8 {
    if rng.random::<bool>() {
        1
    } else {
        -1
    }
}

/// Codes and data for every user over a block of symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSequences {
    pub th_codes: Vec<Vec<u32>>,
    pub polarity_codes: Vec<Vec<i8>>,
    pub bits: Vec<Vec<i8>>,
    pub polarity_enabled: bool,
}

impl SymbolSequences {
    pub fn generate<R: Rng + ?Sized>(
        params: &SystemParams,
        n_symbols: usize,
        polarity_enabled: bool,
        rng: &mut R,
    ) -> Self {
        let th_codes = gen_th_codes(params, n_symbols, rng);
        let polarity_codes = gen_polarity_codes(params, n_symbols, polarity_enabled, rng);
        let bits = gen_bits(params, n_symbols, rng);
        Self {
            th_codes,
            polarity_codes,
            bits,
            polarity_enabled,
        }
    }

    pub fn n_symbols(&self) -> usize {
        self.bits.first().map_or(0, Vec::len)
    }

    /// Spreading sequence s_j of one user on the chip grid: the polarity code
    /// at the hopped chip of each frame, zero elsewhere.
    pub fn spreading_sequence(&self, user: usize, n_chips_per_frame: usize) -> Vec<i8> {
        let th = &self.th_codes[user];
        let mut s = vec![0; th.len() * n_chips_per_frame];
        for (frame, (&c, &d)) in th.iter().zip(&self.polarity_codes[user]).enumerate() {
            s[frame * n_chips_per_frame + c as usize] = d;
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(nc: usize, nf: usize, users: usize) -> SystemParams {
        SystemParams::uniform_interferers(users, nf, nc, 1.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(SystemParams::new(0, 5, vec![1.0], 0.0).is_err());
        assert!(SystemParams::new(5, 0, vec![1.0], 0.0).is_err());
        assert!(SystemParams::new(5, 5, vec![], 0.0).is_err());
        assert!(SystemParams::new(5, 5, vec![1.0, 0.0], 0.0).is_err());
        assert!(SystemParams::new(5, 5, vec![1.0], -1.0).is_err());
        let p = SystemParams::new(15, 5, vec![0.5, 1.0], 0.1).unwrap();
        assert_eq!(p.processing_gain(), 75);
        assert_eq!(p.frame_time(), 5.0);
    }

    #[test]
    fn equal_interferer_energy_detection() {
        let p = SystemParams::new(1, 1, vec![0.5, 1.0, 1.0], 0.0).unwrap();
        assert_eq!(p.equal_interferer_energy(), Some(1.0));
        let p = SystemParams::new(1, 1, vec![0.5, 1.0, 2.0], 0.0).unwrap();
        assert_eq!(p.equal_interferer_energy(), None);
    }

    #[test]
    fn single_chip_frames_give_zero_codes() {
        let p = params(1, 8, 3);
        let codes = gen_th_codes(&p, 10, &mut stream_rng(1, 0));
        assert!(codes.iter().flatten().all(|&c| c == 0));
    }

    #[test]
    fn th_code_frequencies() {
        // 10^6 draws over {0..3}: each frequency within the binomial 3σ band.
        let p = SystemParams::new(1000, 4, vec![1.0], 0.0).unwrap();
        let codes = gen_th_codes(&p, 1000, &mut stream_rng(7, 0));
        let mut counts = [0usize; 4];
        for &c in &codes[0] {
            counts[c as usize] += 1;
        }
        let n = codes[0].len() as f64;
        assert_eq!(n, 1e6);
        for c in counts {
            let f = c as f64 / n;
            assert!((0.2475..=0.2525).contains(&f), "frequency {f}");
        }
    }

    #[test]
    fn generators_are_deterministic() {
        let p = params(5, 15, 4);
        let a = SymbolSequences::generate(&p, 20, true, &mut stream_rng(99, 3));
        let b = SymbolSequences::generate(&p, 20, true, &mut stream_rng(99, 3));
        assert_eq!(a, b);
        let c = SymbolSequences::generate(&p, 20, true, &mut stream_rng(99, 4));
        assert_ne!(a, c);
    }

    #[test]
    fn disabled_polarity_is_all_plus_one() {
        let p = params(5, 15, 3);
        let d = gen_polarity_codes(&p, 50, false, &mut stream_rng(1, 1));
        assert!(d.iter().flatten().all(|&x| x == 1));
    }

    #[test]
    fn polarity_mean_and_pair_independence() {
        let p = SystemParams::new(1000, 4, vec![1.0], 0.0).unwrap();
        let d = &gen_polarity_codes(&p, 1001, true, &mut stream_rng(11, 0))[0];
        let mean = d[..1_000_000].iter().map(|&x| x as f64).sum::<f64>() / 1e6;
        assert!(mean.abs() <= 0.003, "mean {mean}");
        let prod = d
            .windows(2)
            .take(1_000_000)
            .map(|w| (w[0] * w[1]) as f64)
            .sum::<f64>()
            / 1e6;
        assert!(prod.abs() <= 0.003, "pair product mean {prod}");
    }

    #[test]
    fn user_streams_are_uncorrelated() {
        let p = SystemParams::new(1000, 4, vec![1.0, 1.0], 0.0).unwrap();
        let d = gen_polarity_codes(&p, 500, true, &mut stream_rng(5, 0));
        let n = d[0].len() as f64;
        let corr = d[0]
            .iter()
            .zip(&d[1])
            .map(|(&a, &b)| (a * b) as f64)
            .sum::<f64>()
            / n;
        assert!(corr.abs() < 3.0 / n.sqrt(), "cross-user correlation {corr}");
    }

    #[test]
    fn spreading_sequence_places_pulses() {
        let p = SystemParams::new(6, 4, vec![1.0], 0.0).unwrap();
        let seq = SymbolSequences {
            th_codes: vec![vec![2, 1, 2, 3, 1, 0]],
            polarity_codes: vec![vec![1, 1, -1, 1, -1, 1]],
            bits: vec![vec![1]],
            polarity_enabled: true,
        };
        let s = seq.spreading_sequence(0, p.n_chips_per_frame());
        assert_eq!(s.len(), 24);
        let expect: Vec<(usize, i8)> = vec![(2, 1), (5, 1), (10, -1), (15, 1), (17, -1), (20, 1)];
        for (i, &v) in s.iter().enumerate() {
            let want = expect.iter().find(|(k, _)| *k == i).map_or(0, |&(_, v)| v);
            assert_eq!(v, want, "chip {i}");
        }
    }

    #[test]
    fn autocorrelation_reference_values() {
        for pulse in [PulseShape::doublet(1.0), PulseShape::rectangular(1.0)] {
            assert_eq!(pulse.autocorrelation(0.0), 1.0);
            assert_eq!(pulse.autocorrelation(1.0), 0.0);
            assert_eq!(pulse.autocorrelation(-1.0), 0.0);
            assert_eq!(pulse.autocorrelation(3.7), 0.0);
        }
        let rect = PulseShape::rectangular(1.0);
        assert!((rect.autocorrelation(0.5) - 0.5).abs() < 1e-15);
        // (1 - 4π + 4π²/3)·e^{-π}
        let doublet = PulseShape::doublet(1.0);
        let expected = (1.0 - 4.0 * PI + 4.0 * PI * PI / 3.0) * (-PI).exp();
        assert!((doublet.autocorrelation(0.4) - expected).abs() < 1e-15);
        assert!((expected - 0.068_844_176_175_175_36).abs() < 1e-15);
    }

    /// Trapezoid overlap integral of the rendered waveform, independent of the
    /// closed-form autocorrelation.
    fn overlap(pulse: &PulseShape, offset: f64, span: f64, n: usize) -> f64 {
        let h = 2.0 * span / n as f64;
        (0..=n)
            .map(|i| {
                let t = -span + i as f64 * h;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                w * pulse.waveform(t) * pulse.waveform(t - offset)
            })
            .sum::<f64>()
            * h
    }

    #[test]
    fn doublet_autocorrelation_matches_waveform_overlap() {
        let pulse = PulseShape::doublet(1.0);
        for &x in &[0.0, 0.1, 0.25, 0.4, 0.5, 0.77, 0.95] {
            let num = overlap(&pulse, x, 2.0, 40_000);
            assert!((num - pulse.autocorrelation(x)).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn rectangular_autocorrelation_matches_waveform_overlap() {
        let pulse = PulseShape::rectangular(1.0);
        let num = overlap(&pulse, 0.5, 1.0, 200_000);
        assert!((num - 0.5).abs() < 1e-4);
    }

    #[test]
    fn unit_energy() {
        let doublet = PulseShape::doublet(1.0);
        assert!((overlap(&doublet, 0.0, 1.0, 10_000) - 1.0).abs() < 1e-6);
        let rect = PulseShape::rectangular(1.0);
        assert!((overlap(&rect, 0.0, 1.0, 10_000) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn gamma_of_paper_pulses() {
        let rect = gamma_factor(&PulseShape::rectangular(1.0));
        assert!((rect - 2.0 / 3.0).abs() < 1e-12);
        let doublet = gamma_factor(&PulseShape::doublet(1.0));
        // High-precision reference from adaptive quadrature of R² on [0, 1].
        assert!((doublet - 0.206_239_477_846_029_08).abs() < 1e-9, "{doublet}");
        assert!((0.18..=0.22).contains(&doublet));
    }

    struct Spike;

    impl Autocorrelation for Spike {
        fn chip_time(&self) -> f64 {
            1.0
        }

        fn autocorrelation(&self, offset: f64) -> f64 {
            if offset == 0.0 {
                1.0
            } else {
                0.0
            }
        }
    }

    #[test]
    fn gamma_of_zero_width_spike_is_zero() {
        assert_eq!(gamma_factor(&Spike), 0.0);
    }

    #[test]
    fn gamma_scales_with_chip_time() {
        let g = gamma_factor(&PulseShape::rectangular(0.5));
        assert!((g - 2.0 / 3.0).abs() < 1e-12);
    }
}
