use rand::Rng;
use rand_distr::StandardNormal;

use super::{ChannelSource, JitterModel, TrialConfig};
use crate::channel::{decompose_delay, fixed_channel, gen_delays, gen_lognormal_channel, ChannelRealization};
use crate::error::Result;
use crate::model::{stream_rng, SymbolSequences, SystemParams};
use crate::rake::{dot, select_weights_with, PhiTable, RakeWeights};

/// The parts of one decision statistic y₁.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionComponents {
    pub desired: f64,
    pub ifi: f64,
    pub mai: f64,
    pub noise: f64,
    /// Σ over template chips of the squared combined coefficient.
    pub template_energy: f64,
    pub y1: f64,
    /// Transmitted bit of user 1.
    pub bit: i8,
}

impl DecisionComponents {
    /// A zero statistic counts as an error.
    pub fn is_error(&self) -> bool {
        f64::from(self.bit) * self.y1 <= 0.0
    }

    pub fn decision(&self) -> i8 {
        if self.y1 > 0.0 {
            1
        } else {
            -1
        }
    }
}

/// Everything drawn for one drop: channels, delays, codes, data and noise.
#[derive(Debug, Clone)]
pub struct DropState {
    pub params: SystemParams,
    pub channels: Vec<ChannelRealization>,
    pub weights: RakeWeights,
    /// Whole-chip delay of each user; zero for user 1.
    pub delay_chips: Vec<i64>,
    /// Fractional delay of each user in `[0, T_c)`; zero for user 1.
    pub jitters: Vec<f64>,
    pub sequences: SymbolSequences,
    /// φ between each user's channel and β at that user's jitter.
    pub tables: Vec<PhiTable>,
    /// Standard normal draw per decision symbol.
    pub noise_draws: Vec<f64>,
    /// Symbols of real data on either side of the decision window.
    pub guard: usize,
    pub symbols: usize,
}

impl DropState {
    pub fn new(config: &TrialConfig, drop_index: u64) -> Result<Self> {
        config.validate()?;
        let params = config.params.clone();
        let users = params.n_users();
        let tc = params.chip_time();
        let mut rng = stream_rng(config.master_seed, drop_index);

        let channels: Vec<ChannelRealization> = match &config.channel_source {
            ChannelSource::Awgn => vec![ChannelRealization::awgn(); users],
            ChannelSource::Fixed => vec![fixed_channel(); users],
            ChannelSource::Taps(t) => vec![ChannelRealization::new(t.clone(), 0.0)?; users],
            ChannelSource::Lognormal(m) => (0..users).map(|_| gen_lognormal_channel(m, &mut rng)).collect(),
            ChannelSource::SharedLognormal(m) => vec![gen_lognormal_channel(m, &mut rng); users],
        };
        let weights = select_weights_with(&channels[0], config.scheme, config.combining)?;

        let delays = gen_delays(&params, config.sync, &mut rng);
        let mut delay_chips = Vec::with_capacity(users);
        let mut jitters = Vec::with_capacity(users);
        for (k, &d) in delays.iter().enumerate() {
            let (chips, mut eps) = decompose_delay(d, tc)?;
            if k > 0 {
                match config.jitter {
                    JitterModel::None => {}
                    JitterModel::Uniform => eps = rng.random_range(0.0..tc),
                    JitterModel::Fixed(e) => eps = e,
                }
            }
            delay_chips.push(chips);
            jitters.push(eps);
        }

        let taps = channels[0].n_taps();
        let n = params.processing_gain();
        let guard = (taps - 1).div_ceil(n) + 1;
        let symbols = config.symbols_per_drop;
        let sequences =
            SymbolSequences::generate(&params, symbols + 2 * guard, config.polarity_enabled, &mut rng);
        let noise_draws = (0..symbols).map(|_| rng.sample(StandardNormal)).collect();

        let tables = channels
            .iter()
            .zip(&jitters)
            .map(|(c, &eps)| PhiTable::new(&c.taps, weights.beta(), eps, &config.pulse))
            .collect::<Result<Vec<_>>>()?;

        Ok(Self {
            params,
            channels,
            weights,
            delay_chips,
            jitters,
            sequences,
            tables,
            noise_draws,
            guard,
            symbols,
        })
    }

    /// Decision statistic for decision symbol `symbol` in `0..symbols`.
    pub fn components(&self, symbol: usize) -> DecisionComponents {
        let p = &self.params;
        let nf = p.n_frames();
        let nc = p.n_chips_per_frame() as i64;
        let taps = self.channels[0].n_taps() as i64;
        let total_frames = self.sequences.th_codes[0].len() as i64;
        let e = p.bit_energy();
        let beta = self.weights.beta();
        let i = self.guard + symbol;
        let bit = self.sequences.bits[0][i];

        let desired =
            f64::from(bit) * (e[0] * nf as f64).sqrt() * dot(&self.channels[0].taps, beta);

        let position = |user: usize, frame: i64| -> i64 {
            frame * nc + i64::from(self.sequences.th_codes[user][frame as usize]) + self.delay_chips[user]
        };

        let mut ifi = 0.0;
        let mut mai = 0.0;
        let frames = (i * nf) as i64..((i + 1) * nf) as i64;
        for m in frames.clone() {
            let pm = position(0, m);
            let dm = f64::from(self.sequences.polarity_codes[0][m as usize]);
            for (k, table) in self.tables.iter().enumerate() {
                let delta = self.delay_chips[k];
                // Interferer frames whose pulses can reach the template window.
                let lo = (pm - taps - delta - (nc - 1)).div_euclid(nc).max(0);
                let hi = (pm + taps - 1 - delta).div_euclid(nc).min(total_frames - 1);
                let mut acc = 0.0;
                for j in lo..=hi {
                    if k == 0 && j == m {
                        continue;
                    }
                    let phi = table.get(position(k, j) - pm);
                    if phi == 0.0 {
                        continue;
                    }
                    let b = self.sequences.bits[k][j as usize / nf];
                    let d = self.sequences.polarity_codes[k][j as usize];
                    acc += f64::from(b * d) * phi;
                }
                let scaled = dm * (e[k] / nf as f64).sqrt() * acc;
                if k == 0 {
                    ifi += scaled;
                } else {
                    mai += scaled;
                }
            }
        }

        let template_energy = self.template_energy(frames);
        let noise = (p.noise_psd() * template_energy).sqrt() * self.noise_draws[symbol];
        DecisionComponents {
            desired,
            ifi,
            mai,
            noise,
            template_energy,
            y1: desired + ifi + mai + noise,
            bit,
        }
    }

    /// Energy of the combined template over one symbol. Template pulses sit
    /// on the chip grid, so overlapping fingers add coherently.
    fn template_energy(&self, frames: std::ops::Range<i64>) -> f64 {
        let nc = self.params.n_chips_per_frame() as i64;
        let beta = self.weights.beta();
        let taps = beta.len() as i64;
        let rho = |d: i64| -> f64 {
            let d = d.unsigned_abs() as usize;
            beta.iter().zip(&beta[d..]).map(|(a, b)| a * b).sum()
        };
        let pos: Vec<(i64, f64)> = frames
            .map(|m| {
                let u = m as usize;
                (
                    m * nc + i64::from(self.sequences.th_codes[0][u]),
                    f64::from(self.sequences.polarity_codes[0][u]),
                )
            })
            .collect();
        let mut energy = pos.len() as f64 * rho(0);
        for (a, &(pa, da)) in pos.iter().enumerate() {
            for &(pb, db) in &pos[a + 1..] {
                if pb - pa >= taps {
                    break;
                }
                energy += 2.0 * da * db * rho(pb - pa);
            }
        }
        energy
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Synchronism;
    use crate::model::PulseShape;
    use crate::rake::{Combining, RakeScheme};

    fn config(params: SystemParams, source: ChannelSource) -> TrialConfig {
        TrialConfig {
            params,
            pulse: PulseShape::doublet(1.0),
            sync: Synchronism::ChipSync,
            jitter: JitterModel::None,
            scheme: RakeScheme::ARake,
            combining: Combining::Mrc,
            polarity_enabled: true,
            channel_source: source,
            n_drops: 1,
            symbols_per_drop: 50,
            master_seed: 3,
        }
    }

    #[test]
    fn single_user_single_path_noiseless_is_desired_term() {
        let p = SystemParams::new(15, 5, vec![0.7], 0.0).unwrap();
        let s = DropState::new(&config(p, ChannelSource::Awgn), 0).unwrap();
        for i in 0..s.symbols {
            let c = s.components(i);
            let expect = f64::from(c.bit) * (0.7f64 * 15.0).sqrt();
            assert_eq!(c.ifi, 0.0);
            assert_eq!(c.mai, 0.0);
            assert_eq!(c.noise, 0.0);
            assert!((c.y1 - expect).abs() < 1e-12);
            assert!(!c.is_error());
            assert_eq!(c.template_energy, 15.0);
        }
    }

    #[test]
    fn guard_covers_long_channels() {
        let p = SystemParams::new(2, 2, vec![1.0], 0.0).unwrap();
        let s = DropState::new(&config(p, ChannelSource::Fixed), 0).unwrap();
        assert_eq!(s.guard, 4);
        assert_eq!(s.sequences.n_symbols(), 58);
    }

    #[test]
    fn zero_statistic_is_an_error() {
        let c = DecisionComponents {
            desired: 0.0,
            ifi: 0.0,
            mai: 0.0,
            noise: 0.0,
            template_energy: 1.0,
            y1: 0.0,
            bit: 1,
        };
        assert!(c.is_error());
        assert_eq!(c.decision(), -1);
    }

    #[test]
    fn template_energy_matches_chip_map() {
        let p = SystemParams::new(6, 2, vec![1.0], 0.0).unwrap();
        let s = DropState::new(&config(p, ChannelSource::Fixed), 1).unwrap();
        let beta = s.weights.beta();
        for sym in 0..s.symbols {
            let i = s.guard + sym;
            let mut chips = vec![0.0; 6 * 2 + beta.len() + 2];
            for (f, m) in (i * 6..(i + 1) * 6).enumerate() {
                let start = f * 2 + s.sequences.th_codes[0][m] as usize;
                let d = f64::from(s.sequences.polarity_codes[0][m]);
                for (l, b) in beta.iter().enumerate() {
                    chips[start + l] += d * b;
                }
            }
            let direct: f64 = chips.iter().map(|c| c * c).sum();
            assert!((direct - s.components(sym).template_energy).abs() < 1e-12);
        }
    }

    #[test]
    fn interferer_jitter_follows_model() {
        let p = SystemParams::uniform_interferers(3, 4, 4, 1.0, 1.0, 0.0).unwrap();
        let mut c = config(p, ChannelSource::Awgn);
        c.jitter = JitterModel::Fixed(0.25);
        let s = DropState::new(&c, 0).unwrap();
        assert_eq!(s.jitters, vec![0.0, 0.25, 0.25]);
        assert_eq!(s.delay_chips[0], 0);
        c.sync = Synchronism::SymbolSync;
        c.jitter = JitterModel::None;
        let s = DropState::new(&c, 0).unwrap();
        assert_eq!(s.delay_chips, vec![0, 0, 0]);
        c.sync = Synchronism::Async;
        c.jitter = JitterModel::Uniform;
        assert!(DropState::new(&c, 0).is_err());
    }
}
