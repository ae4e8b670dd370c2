//! Exact chip-grid Monte Carlo simulation of the Rake decision statistic.

mod drop_state;
mod estimate;

use serde::{Deserialize, Serialize};

pub use drop_state::{DecisionComponents, DropState};
pub use estimate::{
    dump_components, empirical_interference_variance, estimate_bep, template_energy_ratio,
    wilson_interval, BepEstimate, InterferenceComponent, VarianceEstimate,
};

use crate::channel::{FadingModel, Synchronism};
use crate::error::{invalid, Result};
use crate::model::{Autocorrelation as _, PulseShape, SystemParams};
use crate::rake::{Combining, RakeScheme};

/// Fractional chip jitter added on top of the delay drawn by the
/// synchronism mode.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum JitterModel {
    #[default]
    None,
    /// Independent `U[0, T_c)` jitter per interferer and drop.
    Uniform,
    /// The same jitter for every interferer.
    Fixed(f64),
}

/// Where per-drop channel realizations come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "model")]
pub enum ChannelSource {
    /// Single unit tap.
    Awgn,
    /// The fixed ten-tap channel for every user.
    Fixed,
    /// Caller-supplied taps shared by every user.
    Taps(Vec<f64>),
    /// Independent lognormal realization per user and drop.
    Lognormal(FadingModel),
    /// One lognormal realization per drop, shared by every user.
    SharedLognormal(FadingModel),
}

/// Complete description of a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub params: SystemParams,
    pub pulse: PulseShape,
    pub sync: Synchronism,
    pub jitter: JitterModel,
    pub scheme: RakeScheme,
    pub combining: Combining,
    pub polarity_enabled: bool,
    pub channel_source: ChannelSource,
    pub n_drops: usize,
    pub symbols_per_drop: usize,
    pub master_seed: u64,
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_drops == 0 {
            return Err(invalid("n_drops", "must be at least 1"));
        }
        if self.symbols_per_drop == 0 {
            return Err(invalid("symbols_per_drop", "must be at least 1"));
        }
        if (self.pulse.chip_time() - self.params.chip_time()).abs() > 1e-12 {
            return Err(invalid("pulse", "chip time differs from the system chip time"));
        }
        match self.jitter {
            JitterModel::None => {}
            _ if self.sync == Synchronism::Async => {
                return Err(invalid(
                    "jitter",
                    "asynchronous delays already carry a fractional part",
                ));
            }
            JitterModel::Fixed(e) if !(0.0..self.params.chip_time()).contains(&e) => {
                return Err(invalid("jitter", format!("{e} is outside [0, T_c)")));
            }
            _ => {}
        }
        if let ChannelSource::Taps(t) = &self.channel_source {
            crate::channel::ChannelRealization::new(t.clone(), 0.0)?;
        }
        Ok(())
    }

    /// Total decision symbols simulated.
    pub fn trials(&self) -> u64 {
        self.n_drops as u64 * self.symbols_per_drop as u64
    }
}
