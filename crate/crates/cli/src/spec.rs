//! JSON experiment descriptions.
//!
//! Defaults follow the reference system: 10 users, 15 frames per symbol and
//! 5 chips per frame over an AWGN channel with a doublet pulse.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use uwbsim::channel::{FadingModel, Synchronism};
use uwbsim::model::{PulseShape, SystemParams};
use uwbsim::rake::{Combining, RakeScheme};
use uwbsim::simulator::{ChannelSource, JitterModel};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseName {
    Doublet,
    Rectangular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    Arake,
    Srake,
    Prake,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum ChannelSpec {
    Awgn,
    Fixed,
    Taps {
        taps: Vec<f64>,
    },
    Lognormal {
        n_taps: usize,
        decay: f64,
        log_variance: f64,
    },
    SharedLognormal {
        n_taps: usize,
        decay: f64,
        log_variance: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum JitterSpec {
    None,
    Uniform,
    Fixed { value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyticMode {
    Sync,
    AsyncExact,
    AsyncSga,
    AwgnSync,
    AwgnAsync,
    AwgnNoPolaritySync,
}

impl AnalyticMode {
    pub fn name(self) -> &'static str {
        match self {
            AnalyticMode::Sync => "sync",
            AnalyticMode::AsyncExact => "async_exact",
            AnalyticMode::AsyncSga => "async_sga",
            AnalyticMode::AwgnSync => "awgn_sync",
            AnalyticMode::AwgnAsync => "awgn_async",
            AnalyticMode::AwgnNoPolaritySync => "awgn_no_polarity_sync",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    SinrDb,
    EbnoDb,
    Fingers,
    NUsers,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::SinrDb => "sinr_db",
            SweepVariable::EbnoDb => "ebno_db",
            SweepVariable::Fingers => "fingers",
            SweepVariable::NUsers => "n_users",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

fn default_users() -> usize {
    10
}
fn default_frames() -> usize {
    15
}
fn default_chips() -> usize {
    5
}
fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_drops() -> usize {
    100
}
fn default_symbols() -> usize {
    1000
}
fn default_realizations() -> usize {
    1000
}
fn default_output() -> PathBuf {
    PathBuf::from("results.csv")
}

/// A validated experiment: a base configuration plus one swept variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default = "default_users")]
    pub n_users: usize,
    #[serde(default = "default_frames")]
    pub n_frames: usize,
    #[serde(default = "default_chips")]
    pub n_chips_per_frame: usize,
    #[serde(default = "one")]
    pub chip_time: f64,
    /// E₁, the bit energy of the user of interest.
    #[serde(default = "one")]
    pub bit_energy: f64,
    /// Bit energy shared by every interferer.
    #[serde(default = "one")]
    pub interferer_energy: f64,
    /// σ_n², used when the sweep does not set it.
    #[serde(default)]
    pub noise_psd: f64,
    #[serde(default = "doublet")]
    pub pulse: PulseName,
    #[serde(default = "chip_sync")]
    pub mode: Synchronism,
    #[serde(default = "no_jitter")]
    pub jitter: JitterSpec,
    #[serde(default = "arake")]
    pub scheme: SchemeName,
    #[serde(default)]
    pub fingers: Option<usize>,
    #[serde(default)]
    pub combining: Combining,
    #[serde(default = "yes")]
    pub polarity_enabled: bool,
    #[serde(default = "awgn")]
    pub channel: ChannelSpec,
    #[serde(default = "default_drops")]
    pub n_drops: usize,
    #[serde(default = "default_symbols")]
    pub symbols_per_drop: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "yes")]
    pub simulate: bool,
    #[serde(default)]
    pub analytic_modes: Vec<AnalyticMode>,
    /// Channel draws averaged by analytic modes on random channels.
    #[serde(default = "default_realizations")]
    pub channel_realizations: usize,
    pub sweep: Sweep,
    #[serde(default = "default_output")]
    pub output_path: PathBuf,
}

fn doublet() -> PulseName {
    PulseName::Doublet
}
fn chip_sync() -> Synchronism {
    Synchronism::ChipSync
}
fn no_jitter() -> JitterSpec {
    JitterSpec::None
}
fn arake() -> SchemeName {
    SchemeName::Arake
}
fn awgn() -> ChannelSpec {
    ChannelSpec::Awgn
}

const KNOWN_KEYS: &[&str] = &[
    "n_users",
    "n_frames",
    "n_chips_per_frame",
    "chip_time",
    "bit_energy",
    "interferer_energy",
    "noise_psd",
    "pulse",
    "mode",
    "jitter",
    "scheme",
    "fingers",
    "combining",
    "polarity_enabled",
    "channel",
    "n_drops",
    "symbols_per_drop",
    "seed",
    "simulate",
    "analytic_modes",
    "channel_realizations",
    "sweep",
    "output_path",
];

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

/// Reads and validates a spec file.
pub fn parse_spec(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_spec_str(&text)
}

/// Parses and validates a spec held in memory.
pub fn parse_spec_str(text: &str) -> Result<ExperimentSpec> {
    let value: Value = serde_json::from_str(text).map_err(|e| invalid(format!("not valid JSON: {e}")))?;
    parse_spec_value(value)
}

pub fn parse_spec_value(value: Value) -> Result<ExperimentSpec> {
    let Value::Object(map) = &value else {
        return Err(invalid("spec must be a JSON object"));
    };
    let unknown: Vec<&str> = map
        .keys()
        .map(String::as_str)
        .filter(|k| !KNOWN_KEYS.contains(k))
        .collect();
    if !unknown.is_empty() {
        return Err(invalid(format!("unknown keys: {}", unknown.join(", "))));
    }
    let spec: ExperimentSpec = serde_json::from_value(value).map_err(|e| invalid(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

/// Settings of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub params: SystemParams,
    pub scheme: RakeScheme,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.simulate && self.analytic_modes.is_empty() {
            return Err(invalid("nothing to do: set simulate or list analytic_modes"));
        }
        if self.sweep.values.is_empty() {
            return Err(invalid("sweep.values must not be empty"));
        }
        if self.sweep.values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("sweep.values must be finite"));
        }
        if self.sweep.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("sweep values must be strictly increasing"));
        }
        if self.n_drops == 0 {
            return Err(invalid("n_drops must be at least 1"));
        }
        if self.symbols_per_drop == 0 {
            return Err(invalid("symbols_per_drop must be at least 1"));
        }
        if self.channel_realizations == 0 {
            return Err(invalid("channel_realizations must be at least 1"));
        }
        if self.scheme != SchemeName::Arake
            && self.fingers.is_none()
            && self.sweep.variable != SweepVariable::Fingers
        {
            return Err(invalid("fingers is required for srake and prake"));
        }
        if self.sweep.variable == SweepVariable::Fingers && self.scheme == SchemeName::Arake {
            return Err(invalid("sweep over fingers needs scheme srake or prake"));
        }
        if self.mode == Synchronism::Async && self.jitter != JitterSpec::None {
            return Err(invalid("jitter must be none in async mode"));
        }
        if self.analytic_modes.contains(&AnalyticMode::AwgnNoPolaritySync) && self.mode == Synchronism::Async {
            return Err(invalid("awgn_no_polarity_sync describes synchronous users; mode is async"));
        }
        self.fading_model()?;
        // Building every point surfaces range errors (for example an
        // unattainable SINR) before any work starts.
        self.points()?;
        Ok(())
    }

    fn fading_model(&self) -> Result<Option<FadingModel>> {
        match &self.channel {
            ChannelSpec::Lognormal {
                n_taps,
                decay,
                log_variance,
            }
            | ChannelSpec::SharedLognormal {
                n_taps,
                decay,
                log_variance,
            } => FadingModel::new(*n_taps, *decay, *log_variance)
                .map(Some)
                .map_err(|e| invalid(format!("channel: {e}"))),
            _ => Ok(None),
        }
    }

    pub fn channel_source(&self) -> ChannelSource {
        match (&self.channel, self.fading_model().ok().flatten()) {
            (ChannelSpec::Awgn, _) => ChannelSource::Awgn,
            (ChannelSpec::Fixed, _) => ChannelSource::Fixed,
            (ChannelSpec::Taps { taps }, _) => ChannelSource::Taps(taps.clone()),
            (ChannelSpec::SharedLognormal { .. }, Some(m)) => ChannelSource::SharedLognormal(m),
            (_, Some(m)) => ChannelSource::Lognormal(m),
            (_, None) => unreachable!("validated lognormal parameters"),
        }
    }

    pub fn pulse_shape(&self) -> PulseShape {
        match self.pulse {
            PulseName::Doublet => PulseShape::doublet(self.chip_time),
            PulseName::Rectangular => PulseShape::rectangular(self.chip_time),
        }
    }

    pub fn jitter_model(&self) -> JitterModel {
        match self.jitter {
            JitterSpec::None => JitterModel::None,
            JitterSpec::Uniform => JitterModel::Uniform,
            JitterSpec::Fixed { value } => JitterModel::Fixed(value),
        }
    }

    fn scheme_with(&self, fingers: Option<usize>) -> Result<RakeScheme> {
        let m = || fingers.ok_or_else(|| invalid("fingers is required for srake and prake"));
        let scheme = match self.scheme {
            SchemeName::Arake => RakeScheme::ARake,
            SchemeName::Srake => RakeScheme::SRake(m()?),
            SchemeName::Prake => RakeScheme::PRake(m()?),
        };
        let taps = match &self.channel {
            ChannelSpec::Awgn => 1,
            ChannelSpec::Fixed => uwbsim::channel::FIXED_CHANNEL_TAPS.len(),
            ChannelSpec::Taps { taps } => taps.len(),
            ChannelSpec::Lognormal { n_taps, .. } | ChannelSpec::SharedLognormal { n_taps, .. } => *n_taps,
        };
        if let RakeScheme::SRake(m) | RakeScheme::PRake(m) = scheme {
            if m == 0 || m > taps {
                return Err(invalid(format!("fingers must lie in 1..={taps}, got {m}")));
            }
        }
        Ok(scheme)
    }

    fn params(&self, n_users: usize, noise_psd: f64) -> Result<SystemParams> {
        let mut energies = vec![self.interferer_energy; n_users];
        if let Some(e) = energies.first_mut() {
            *e = self.bit_energy;
        }
        SystemParams::with_chip_time(self.n_frames, self.n_chips_per_frame, self.chip_time, energies, noise_psd)
            .map_err(|e| invalid(e.to_string()))
    }

    /// Resolves every sweep value into concrete system settings.
    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        self.sweep
            .values
            .iter()
            .map(|&value| {
                let integer = || -> Result<usize> {
                    if value.fract() != 0.0 || value < 1.0 {
                        return Err(invalid(format!(
                            "{} values must be positive integers, got {value}",
                            self.sweep.variable.name()
                        )));
                    }
                    Ok(value as usize)
                };
                let (params, scheme) = match self.sweep.variable {
                    SweepVariable::SinrDb => {
                        let base = self.params(self.n_users, 0.0)?;
                        (base.with_noise_psd(noise_for_sinr(&base, value)?).map_err(|e| invalid(e.to_string()))?, self.scheme_with(self.fingers)?)
                    }
                    SweepVariable::EbnoDb => {
                        let noise = self.bit_energy / (2.0 * 10f64.powf(value / 10.0));
                        (self.params(self.n_users, noise)?, self.scheme_with(self.fingers)?)
                    }
                    SweepVariable::Fingers => {
                        (self.params(self.n_users, self.noise_psd)?, self.scheme_with(Some(integer()?))?)
                    }
                    SweepVariable::NUsers => {
                        (self.params(integer()?, self.noise_psd)?, self.scheme_with(self.fingers)?)
                    }
                };
                Ok(SweepPoint { value, params, scheme })
            })
            .collect()
    }
}

/// σ_n² that gives `sinr_db` with the interference of `params`.
pub fn noise_for_sinr(params: &SystemParams, sinr_db: f64) -> Result<f64> {
    let floor = params.interferer_energies().iter().sum::<f64>() / params.processing_gain() as f64;
    let noise = params.bit_energy()[0] / 10f64.powf(sinr_db / 10.0) - floor;
    if noise < 0.0 {
        return Err(invalid(format!(
            "SINR unattainable: MAI floor exceeds target ({sinr_db} dB needs σ_n² = {noise:.4})"
        )));
    }
    Ok(noise)
}

/// SINR in dB of the given settings.
pub fn sinr_db(params: &SystemParams) -> f64 {
    let floor = params.interferer_energies().iter().sum::<f64>() / params.processing_gain() as f64;
    10.0 * (params.bit_energy()[0] / (floor + params.noise_psd())).log10()
}
