//! Gaussian-approximation bit error probabilities.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::variance::{
    expected_sigma_mai_with, q_function, sigma_ifi, sigma_mai_jitter, sigma_mai_sync,
    DEFAULT_JITTER_NODES,
};
use crate::channel::ChannelRealization;
use crate::error::{invalid, Error, Result};
use crate::model::{gamma_factor, stream_rng, Autocorrelation, PulseShape, SystemParams};
use crate::quadrature::GaussLegendre;
use crate::rake::{dot, RakeWeights};

/// Unscaled variance sums behind one BEP evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceBreakdown {
    pub ifi1: f64,
    pub ifi2: f64,
    /// σ²_MAI,k (or σ²_MAI,k(ε_k)) for users 2..N_u, in user order.
    pub mai_per_user: Vec<f64>,
    /// σ_n²·Σβ_l².
    pub noise: f64,
}

impl VarianceBreakdown {
    /// Decision-statistic variance normalised by N_f:
    /// E₁σ²_IFI,1/(N_cN) + E₁σ²_IFI,2/N + Σ_k E_kσ²_MAI,k/N + σ_n²Σβ².
    pub fn total(&self, params: &SystemParams) -> f64 {
        let e = params.bit_energy();
        let n = params.processing_gain() as f64;
        let nc = params.n_chips_per_frame() as f64;
        let mai: f64 = self
            .mai_per_user
            .iter()
            .zip(&e[1..])
            .map(|(s, ek)| ek * s)
            .sum();
        e[0] * self.ifi1 / (nc * n) + e[0] * self.ifi2 / n + mai / n + self.noise
    }
}

/// Controls how the jitter average over all interferers is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactOptions {
    /// Largest user count evaluated by tensor-product quadrature; larger
    /// systems fall back to Monte Carlo integration.
    pub max_tensor_users: usize,
    /// Gauss–Legendre nodes per jitter dimension.
    pub nodes: usize,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for ExactOptions {
    fn default() -> Self {
        Self {
            max_tensor_users: 4,
            nodes: DEFAULT_JITTER_NODES,
            mc_samples: 100_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BepMode {
    /// Chip- or symbol-synchronous interferers.
    Sync,
    /// Asynchronous, conditioned on one jitter per interferer (users 2..N_u).
    AsyncConditional(Vec<f64>),
    /// Asynchronous, conditional BEP averaged over all jitters.
    AsyncExact(ExactOptions),
    /// Asynchronous with the aggregate MAI treated as Gaussian; equal
    /// interferer energies.
    AsyncSga,
    /// Single-path matched filter, synchronous interferers.
    AwgnSync,
    /// Single-path matched filter, asynchronous interferers.
    AwgnAsync,
    /// Single-path matched filter without polarity randomization,
    /// symbol-synchronous interferers.
    AwgnNoPolaritySync,
}

/// Everything needed to evaluate one BEP.
#[derive(Debug, Clone)]
pub struct BepQuery {
    pub params: SystemParams,
    /// One channel per user, user 1 first. Ignored by the AWGN modes.
    pub channels: Vec<ChannelRealization>,
    pub weights: RakeWeights,
    pub pulse: PulseShape,
    pub mode: BepMode,
}

/// A BEP with the standard error of its numerical evaluation (zero unless
/// Monte Carlo integration was used).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BepValue {
    pub value: f64,
    pub std_error: f64,
}

impl BepValue {
    fn exact(value: f64) -> Self {
        Self {
            value,
            std_error: 0.0,
        }
    }
}

impl BepQuery {
    fn validate(&self) -> Result<()> {
        let awgn = matches!(
            self.mode,
            BepMode::AwgnSync | BepMode::AwgnAsync | BepMode::AwgnNoPolaritySync
        );
        if awgn {
            return Ok(());
        }
        let users = self.params.n_users();
        if self.channels.len() != users {
            return Err(Error::LengthMismatch {
                what: "channels",
                got: self.channels.len(),
                expected: users,
            });
        }
        let taps = self.channels[0].n_taps();
        if self.weights.beta().len() != taps {
            return Err(Error::LengthMismatch {
                what: "rake weights",
                got: self.weights.beta().len(),
                expected: taps,
            });
        }
        for c in &self.channels[1..] {
            if c.n_taps() != taps {
                return Err(Error::LengthMismatch {
                    what: "interferer taps",
                    got: c.n_taps(),
                    expected: taps,
                });
            }
        }
        if let BepMode::AsyncConditional(eps) = &self.mode {
            if eps.len() != users - 1 {
                return Err(Error::LengthMismatch {
                    what: "jitters",
                    got: eps.len(),
                    expected: users - 1,
                });
            }
        }
        Ok(())
    }

    fn beta(&self) -> &[f64] {
        self.weights.beta()
    }

    /// √E₁·Σα_lβ_l, the numerator of every multipath BEP.
    fn amplitude(&self) -> f64 {
        self.params.bit_energy()[0].sqrt() * dot(&self.channels[0].taps, self.beta())
    }

    /// Variance sums with the MAI evaluated at the given jitters, or on the
    /// chip grid when `jitters` is `None`.
    pub fn variance_breakdown(&self, jitters: Option<&[f64]>) -> Result<VarianceBreakdown> {
        let beta = self.beta();
        let (ifi1, ifi2) = sigma_ifi(
            &self.channels[0].taps,
            beta,
            self.params.n_chips_per_frame(),
        )?;
        let mai_per_user = self.channels[1..]
            .iter()
            .enumerate()
            .map(|(k, c)| match jitters {
                None => sigma_mai_sync(&c.taps, beta),
                Some(eps) => sigma_mai_jitter(&c.taps, beta, eps[k], &self.pulse),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(VarianceBreakdown {
            ifi1,
            ifi2,
            mai_per_user,
            noise: self.params.noise_psd() * self.weights.energy(),
        })
    }
}

fn gaussian_bep(amplitude: f64, variance: f64) -> f64 {
    if variance <= 0.0 {
        return match amplitude.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => 0.0,
            Some(std::cmp::Ordering::Less) => 1.0,
            _ => 0.5,
        };
    }
    q_function(amplitude / variance.sqrt())
}

fn require_equal_energy(params: &SystemParams, what: &'static str) -> Result<f64> {
    params
        .equal_interferer_energy()
        .ok_or(Error::UnequalInterfererEnergy(what))
}

/// Evaluates the BEP approximation selected by `query.mode`.
pub fn bep(query: &BepQuery) -> Result<BepValue> {
    query.validate()?;
    let p = &query.params;
    let n = p.processing_gain() as f64;
    let e1 = p.bit_energy()[0];
    let noise = p.noise_psd();
    let interferers = (p.n_users() - 1) as f64;
    match &query.mode {
        BepMode::Sync => {
            let v = query.variance_breakdown(None)?;
            Ok(BepValue::exact(gaussian_bep(query.amplitude(), v.total(p))))
        }
        BepMode::AsyncConditional(eps) => {
            let v = query.variance_breakdown(Some(eps))?;
            Ok(BepValue::exact(gaussian_bep(query.amplitude(), v.total(p))))
        }
        BepMode::AsyncExact(opts) => async_exact(query, opts),
        BepMode::AsyncSga => {
            let e = require_equal_energy(p, "the standard Gaussian approximation")?;
            let rule = GaussLegendre::new(DEFAULT_JITTER_NODES);
            let base = query.variance_breakdown(None)?;
            let mai = query.channels[1..]
                .iter()
                .map(|c| expected_sigma_mai_with(&c.taps, query.beta(), &query.pulse, &rule))
                .sum::<Result<f64>>()?;
            let nc = p.n_chips_per_frame() as f64;
            let variance = e1 * base.ifi1 / (nc * n) + e1 * base.ifi2 / n + e * mai / n + base.noise;
            Ok(BepValue::exact(gaussian_bep(query.amplitude(), variance)))
        }
        BepMode::AwgnSync => {
            let mai: f64 = p.interferer_energies().iter().sum::<f64>() / n;
            Ok(BepValue::exact(gaussian_bep(e1.sqrt(), mai + noise)))
        }
        BepMode::AwgnAsync => {
            let e = require_equal_energy(p, "the asynchronous AWGN approximation")?;
            let gamma = gamma_factor(&query.pulse);
            Ok(BepValue::exact(gaussian_bep(
                e1.sqrt(),
                interferers * gamma * e / n + noise,
            )))
        }
        BepMode::AwgnNoPolaritySync => {
            let e = require_equal_energy(p, "the no-polarity AWGN approximation")?;
            let nf = p.n_frames() as f64;
            let nc = p.n_chips_per_frame() as f64;
            let mai = interferers * e / n * (1.0 + (nf - 1.0) / nc);
            Ok(BepValue::exact(gaussian_bep(e1.sqrt(), mai + noise)))
        }
    }
}

/// Conditional BEP averaged over independent uniform jitters, one per
/// interferer.
fn async_exact(query: &BepQuery, opts: &ExactOptions) -> Result<BepValue> {
    let p = &query.params;
    let base = query.variance_breakdown(None)?;
    let amplitude = query.amplitude();
    let e = p.bit_energy();
    let n = p.processing_gain() as f64;
    let nc = p.n_chips_per_frame() as f64;
    let fixed = e[0] * base.ifi1 / (nc * n) + e[0] * base.ifi2 / n + base.noise;
    let interferers = p.n_users() - 1;
    if interferers == 0 {
        return Ok(BepValue::exact(gaussian_bep(amplitude, fixed)));
    }
    let tc = query.pulse.chip_time();
    let beta = query.beta();
    if p.n_users() <= opts.max_tensor_users {
        if opts.nodes == 0 {
            return Err(invalid("nodes", "quadrature needs at least one node"));
        }
        let rule = GaussLegendre::new(opts.nodes);
        let nodes: Vec<(f64, f64)> = rule.mapped(0.0, tc).map(|(x, w)| (x, w / tc)).collect();
        // Scaled MAI term of each interferer at each node.
        let table = query.channels[1..]
            .iter()
            .zip(&e[1..])
            .map(|(c, ek)| {
                nodes
                    .iter()
                    .map(|&(x, _)| Ok(ek * sigma_mai_jitter(&c.taps, beta, x, &query.pulse)? / n))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let mut index = vec![0usize; interferers];
        let mut total = 0.0;
        loop {
            let mut weight = 1.0;
            let mut variance = fixed;
            for (k, &i) in index.iter().enumerate() {
                weight *= nodes[i].1;
                variance += table[k][i];
            }
            total += weight * gaussian_bep(amplitude, variance);
            // Odometer increment over the tensor grid.
            let mut k = 0;
            loop {
                if k == interferers {
                    return Ok(BepValue::exact(total));
                }
                index[k] += 1;
                if index[k] < nodes.len() {
                    break;
                }
                index[k] = 0;
                k += 1;
            }
        }
    }
    if opts.mc_samples < 2 {
        return Err(invalid("mc_samples", "Monte Carlo integration needs at least 2 samples"));
    }
    let mut rng = stream_rng(opts.seed, 0);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..opts.mc_samples {
        let mut variance = fixed;
        for (c, ek) in query.channels[1..].iter().zip(&e[1..]) {
            let eps = rng.random_range(0.0..tc);
            variance += ek * sigma_mai_jitter(&c.taps, beta, eps, &query.pulse)? / n;
        }
        let v = gaussian_bep(amplitude, variance);
        sum += v;
        sum_sq += v * v;
    }
    let m = opts.mc_samples as f64;
    let mean = sum / m;
    let var = ((sum_sq - m * mean * mean) / (m - 1.0)).max(0.0);
    Ok(BepValue {
        value: mean,
        std_error: (var / m).sqrt(),
    })
}

/// Mean BEP over a channel ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedBep {
    pub mean: f64,
    /// Standard error of the mean across realizations.
    pub std_error: f64,
    pub realizations: usize,
}

/// Averages [`bep`] over channel realizations.
pub fn average_bep<I>(queries: I) -> Result<AveragedBep>
where
    I: IntoIterator<Item = BepQuery>,
{
    let values = queries
        .into_iter()
        .map(|q| bep(&q).map(|b| b.value))
        .collect::<Result<Vec<f64>>>()?;
    summarize(&values)
}

/// Mean and standard error of per-realization BEPs.
pub fn summarize(values: &[f64]) -> Result<AveragedBep> {
    if values.is_empty() {
        return Err(invalid("realizations", "at least one channel realization is required"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std_error = if values.len() > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(AveragedBep {
        mean,
        std_error,
        realizations: values.len(),
    })
}
