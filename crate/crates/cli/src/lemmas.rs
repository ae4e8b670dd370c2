//! Empirical checks of the interference variance lemmas.

use uwbsim::analytic::{
    expected_sigma_mai, ifi_sum_short_channel, ifi_variance_per_energy, sigma_mai_jitter,
    sigma_mai_sync,
};
use uwbsim::channel::{fixed_channel, Synchronism};
use uwbsim::model::{PulseShape, SystemParams};
use uwbsim::rake::{Combining, RakeScheme};
use uwbsim::simulator::{
    empirical_interference_variance, ChannelSource, InterferenceComponent, JitterModel, TrialConfig,
};

use crate::error::Result;

/// Relative tolerance applied to every lemma.
pub const TOLERANCE: f64 = 0.05;

pub const LEMMAS: [u8; 5] = [1, 2, 3, 4, 5];

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaCheck {
    pub lemma: u8,
    pub label: String,
    pub empirical: f64,
    pub closed_form: f64,
}

impl LemmaCheck {
    pub fn relative_error(&self) -> f64 {
        (self.empirical - self.closed_form).abs() / self.closed_form.abs()
    }

    pub fn passed(&self) -> bool {
        self.relative_error() <= TOLERANCE
    }
}

/// Taps used for the short-channel case: five decaying taps with mixed
/// signs, normalised to unit energy.
fn short_channel() -> Vec<f64> {
    let raw = [0.62, -0.48, 0.41, 0.3, -0.2];
    let norm = raw.iter().map(|a: &f64| a * a).sum::<f64>().sqrt();
    raw.iter().map(|a| a / norm).collect()
}

fn config(params: SystemParams, source: ChannelSource, symbols: usize, seed: u64) -> TrialConfig {
    let drops = 100;
    TrialConfig {
        params,
        pulse: PulseShape::doublet(1.0),
        sync: Synchronism::ChipSync,
        jitter: JitterModel::None,
        scheme: RakeScheme::ARake,
        combining: Combining::Mrc,
        polarity_enabled: true,
        channel_source: source,
        n_drops: drops,
        symbols_per_drop: symbols.div_ceil(drops).max(1),
        master_seed: seed,
    }
}

/// Runs the checks for one lemma with roughly `symbols` decision symbols.
pub fn check_lemma(lemma: u8, symbols: usize, seed: u64) -> Result<Vec<LemmaCheck>> {
    let ch = fixed_channel();
    let pulse = PulseShape::doublet(1.0);
    let mai_params = SystemParams::uniform_interferers(2, 100, 5, 1.0, 1.0, 0.0)?;
    let checks = match lemma {
        1 => {
            let taps = short_channel();
            let c = config(SystemParams::new(100, 8, vec![1.0], 0.0)?, ChannelSource::Taps(taps.clone()), symbols, seed);
            vec![LemmaCheck {
                lemma,
                label: "IFI, L=5, N_c=8".into(),
                empirical: empirical_interference_variance(&c, InterferenceComponent::Ifi)?.variance,
                closed_form: ifi_sum_short_channel(&taps, &taps)? / 64.0,
            }]
        }
        2 => {
            let c = config(SystemParams::new(100, 5, vec![1.0], 0.0)?, ChannelSource::Fixed, symbols, seed);
            vec![LemmaCheck {
                lemma,
                label: "IFI, L=10, N_c=5".into(),
                empirical: empirical_interference_variance(&c, InterferenceComponent::Ifi)?.variance,
                closed_form: ifi_variance_per_energy(&ch.taps, &ch.taps, 5)?,
            }]
        }
        3 => {
            let expect = sigma_mai_sync(&ch.taps, &ch.taps)?;
            [Synchronism::ChipSync, Synchronism::SymbolSync]
                .into_iter()
                .map(|sync| {
                    let mut c = config(mai_params.clone(), ChannelSource::Fixed, symbols, seed);
                    c.sync = sync;
                    Ok(LemmaCheck {
                        lemma,
                        label: format!("MAI, {sync:?}"),
                        empirical: empirical_interference_variance(&c, InterferenceComponent::Mai)?.variance,
                        closed_form: expect,
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
        4 => [0.0, 0.25, 0.5, 0.75]
            .into_iter()
            .map(|eps| {
                let c = config(mai_params.clone(), ChannelSource::Fixed, symbols, seed);
                Ok(LemmaCheck {
                    lemma,
                    label: format!("MAI given ε={eps}"),
                    empirical: empirical_interference_variance(&c, InterferenceComponent::MaiGivenJitter(eps))?
                        .variance,
                    closed_form: sigma_mai_jitter(&ch.taps, &ch.taps, eps, &pulse)?,
                })
            })
            .collect::<Result<Vec<_>>>()?,
        5 => {
            let mut c = config(mai_params, ChannelSource::Fixed, symbols, seed);
            c.sync = Synchronism::Async;
            // Averaging over jitter needs many drops.
            c.n_drops = symbols.div_ceil(100).max(1);
            c.symbols_per_drop = 100;
            vec![LemmaCheck {
                lemma,
                label: "MAI, asynchronous".into(),
                empirical: empirical_interference_variance(&c, InterferenceComponent::Mai)?.variance,
                closed_form: expected_sigma_mai(&ch.taps, &ch.taps, &pulse)?,
            }]
        }
        _ => {
            return Err(crate::error::CliError::Validation(format!(
                "no lemma {lemma}; choose one of 1-5"
            )))
        }
    };
    Ok(checks)
}
