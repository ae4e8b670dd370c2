//! Tapped-delay-line channels with chip-spaced taps, and user delays.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::SystemParams;

/// Tap vector of the fixed indoor channel used for the multipath examples.
pub const FIXED_CHANNEL_TAPS: [f64; 10] = [
    0.4653, 0.5817, 0.2327, -0.4536, 0.3490, 0.2217, -0.1163, 0.0233, -0.0116, -0.0023,
];

/// One user's channel: tap gains spaced one chip apart, plus the user's
/// delay relative to user 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub taps: Vec<f64>,
    pub delay: f64,
}

impl ChannelRealization {
    pub fn new(taps: Vec<f64>, delay: f64) -> Result<Self> {
        let c = Self { taps, delay };
        c.validate()?;
        Ok(c)
    }

    /// Single unit tap.
    pub fn awgn() -> Self {
        Self {
            taps: vec![1.0],
            delay: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.taps.is_empty() {
            return Err(invalid("taps", "channel needs at least one tap"));
        }
        if self.taps.iter().any(|t| !t.is_finite()) {
            return Err(invalid("taps", "taps must be finite"));
        }
        if !(self.delay.is_finite() && self.delay >= 0.0) {
            return Err(invalid("delay", format!("{} is not >= 0", self.delay)));
        }
        Ok(())
    }

    pub fn n_taps(&self) -> usize {
        self.taps.len()
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|a| a * a).sum()
    }

    pub fn with_delay(mut self, delay: f64) -> Self {
        self.delay = delay;
        self
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)
            .map_err(|e| invalid("channel", format!("malformed channel record: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("channel serializes")
    }
}

/// The fixed ten-tap channel, delay zero.
pub fn fixed_channel() -> ChannelRealization {
    ChannelRealization {
        taps: FIXED_CHANNEL_TAPS.to_vec(),
        delay: 0.0,
    }
}

/// Lognormal tap amplitudes with an exponentially decaying power profile
/// normalised to unit total mean energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingModel {
    n_taps: usize,
    decay: f64,
    log_variance: f64,
}

impl FadingModel {
    pub fn new(n_taps: usize, decay: f64, log_variance: f64) -> Result<Self> {
        if n_taps == 0 {
            return Err(invalid("n_taps", "must be at least 1"));
        }
        if !(decay.is_finite() && decay > 0.0) {
            return Err(invalid("decay", format!("{decay} is not > 0")));
        }
        if !(log_variance.is_finite() && log_variance > 0.0) {
            return Err(invalid("log_variance", format!("{log_variance} is not > 0")));
        }
        Ok(Self {
            n_taps,
            decay,
            log_variance,
        })
    }

    pub fn n_taps(&self) -> usize {
        self.n_taps
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn log_variance(&self) -> f64 {
        self.log_variance
    }

    /// Ω₀ = (1 - e^{-λ}) / (1 - e^{-λL}).
    pub fn omega0(&self) -> f64 {
        (-(-self.decay).exp_m1()) / (-(-self.decay * self.n_taps as f64).exp_m1())
    }

    /// Mean power E{|α_l|²} of tap `tap` (zero-based).
    pub fn tap_power(&self, tap: usize) -> f64 {
        self.omega0() * (-self.decay * tap as f64).exp()
    }

    /// Mean of ln|α_l| for tap `tap` (zero-based).
    pub fn log_mean(&self, tap: usize) -> f64 {
        0.5 * (self.omega0().ln() - self.decay * tap as f64 - 2.0 * self.log_variance)
    }
}

/// Draws a channel with random tap signs and lognormal tap magnitudes.
pub fn gen_lognormal_channel<R: Rng + ?Sized>(model: &FadingModel, rng: &mut R) -> ChannelRealization {
    let sd = model.log_variance.sqrt();
    let taps = (0..model.n_taps)
        .map(|l| {
            let normal = Normal::new(model.log_mean(l), sd).expect("sd validated positive");
            let magnitude = normal.sample(rng).exp();
            if rng.random::<bool>() {
                magnitude
            } else {
                -magnitude
            }
        })
        .collect();
    ChannelRealization { taps, delay: 0.0 }
}

/// How interfering users are timed relative to user 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Synchronism {
    /// All symbols aligned.
    SymbolSync,
    /// Delays are whole chips, uniform over one symbol.
    ChipSync,
    /// Delays uniform on `[0, N·T_c)`.
    Async,
}

/// Per-user delays; user 1 always gets zero.
pub fn gen_delays<R: Rng + ?Sized>(params: &SystemParams, mode: Synchronism, rng: &mut R) -> Vec<f64> {
    let n = params.processing_gain();
    let tc = params.chip_time();
    (0..params.n_users())
        .map(|k| match (k, mode) {
            (0, _) | (_, Synchronism::SymbolSync) => 0.0,
            (_, Synchronism::ChipSync) => rng.random_range(0..n) as f64 * tc,
            (_, Synchronism::Async) => rng.random_range(0.0..n as f64 * tc),
        })
        .collect()
}

/// Splits a delay into whole chips and a jitter in `[0, chip_time)`.
pub fn decompose_delay(delay: f64, chip_time: f64) -> Result<(i64, f64)> {
    if !(delay.is_finite() && delay >= 0.0) {
        return Err(invalid("delay", format!("{delay} is not >= 0")));
    }
    let mut chips = (delay / chip_time).floor();
    let mut jitter = delay - chips * chip_time;
    if jitter >= chip_time {
        chips += 1.0;
        jitter -= chip_time;
    }
    if jitter < 0.0 {
        jitter = 0.0;
    }
    Ok((chips as i64, jitter))
}
