use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DecisionComponents, DropState, TrialConfig};
use crate::error::{invalid, Error, Result};

/// Simulated error rate with a 95% Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BepEstimate {
    pub errors: u64,
    pub trials: u64,
    pub bep: f64,
    pub ci95: (f64, f64),
}

const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(errors: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let low = if errors == 0 { 0.0 } else { (centre - half).max(0.0) };
    let high = if errors == trials { 1.0 } else { (centre + half).min(1.0) };
    (low, high)
}

fn for_each_drop<T, F>(config: &TrialConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&DropState) -> T + Sync,
{
    config.validate()?;
    (0..config.n_drops as u64)
        .into_par_iter()
        .map(|d| DropState::new(config, d).map(|s| f(&s)))
        .collect()
}

/// Runs `n_drops × symbols_per_drop` decisions and counts errors.
///
/// The result depends only on the configuration, not on the thread count.
pub fn estimate_bep(config: &TrialConfig) -> Result<BepEstimate> {
    let errors: u64 = for_each_drop(config, |s| {
        (0..s.symbols).filter(|&i| s.components(i).is_error()).count() as u64
    })?
    .into_iter()
    .sum();
    let trials = config.trials();
    Ok(BepEstimate {
        errors,
        trials,
        bep: errors as f64 / trials as f64,
        ci95: wilson_interval(errors, trials),
    })
}

/// Interference term isolated by [`empirical_interference_variance`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "jitter")]
pub enum InterferenceComponent {
    Ifi,
    Mai,
    /// MAI with every interferer jitter pinned to the given value.
    MaiGivenJitter(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub variance: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// Sample variance of one interference term, normalised to the bracketed
/// sums of the variance lemmas: IFI is divided by E₁, giving
/// σ²_IFI,1/N_c² + σ²_IFI,2/N_c; MAI is multiplied by N_c/E₂, giving σ²_MAI.
pub fn empirical_interference_variance(
    config: &TrialConfig,
    component: InterferenceComponent,
) -> Result<VarianceEstimate> {
    let e = config.params.bit_energy();
    let mut config = config.clone();
    let scale = match component {
        InterferenceComponent::Ifi => 1.0 / e[0],
        InterferenceComponent::Mai | InterferenceComponent::MaiGivenJitter(_) => {
            if config.params.n_users() != 2 {
                return Err(invalid("n_users", "MAI variance needs exactly one interferer"));
            }
            if let InterferenceComponent::MaiGivenJitter(eps) = component {
                if config.sync == crate::channel::Synchronism::Async {
                    return Err(Error::Unsupported(
                        "conditional MAI needs chip- or symbol-synchronous delays".into(),
                    ));
                }
                config.jitter = super::JitterModel::Fixed(eps);
            }
            config.params.n_chips_per_frame() as f64 / e[1]
        }
    };
    let pick = |c: DecisionComponents| match component {
        InterferenceComponent::Ifi => c.ifi,
        _ => c.mai,
    };
    // Per-drop sums of x and x².
    let sums = for_each_drop(&config, |s| {
        (0..s.symbols).fold((0.0, 0.0), |(a, b), i| {
            let x = pick(s.components(i));
            (a + x, b + x * x)
        })
    })?;
    let per_drop = config.symbols_per_drop as f64;
    let samples = config.trials();
    let n = samples as f64;
    let mean = sums.iter().map(|s| s.0).sum::<f64>() / n;
    let second = sums.iter().map(|s| s.1).sum::<f64>() / n;
    let variance = (second - mean * mean).max(0.0);
    let drops = sums.len() as f64;
    let std_error = if sums.len() >= 10 {
        // Batch means over drops absorb within-drop correlation.
        let batch: Vec<f64> = sums.iter().map(|s| s.1 / per_drop).collect();
        let sd2 = batch.iter().map(|b| (b - second).powi(2)).sum::<f64>() / (drops - 1.0);
        (sd2 / drops).sqrt()
    } else {
        // Gaussian iid fallback.
        variance * (2.0 / (n - 1.0).max(1.0)).sqrt()
    };
    Ok(VarianceEstimate {
        variance: variance * scale,
        std_error: std_error * scale,
        samples,
    })
}

/// Mean of the exact template energy divided by N_f·Σβ², over every
/// simulated symbol.
pub fn template_energy_ratio(config: &TrialConfig) -> Result<f64> {
    let nf = config.params.n_frames() as f64;
    let sums = for_each_drop(config, |s| {
        let norm = nf * s.weights.energy();
        (0..s.symbols)
            .map(|i| s.components(i).template_energy / norm)
            .sum::<f64>()
    })?;
    Ok(sums.iter().sum::<f64>() / config.trials() as f64)
}

#[derive(Serialize)]
struct ComponentRow {
    drop: u64,
    symbol: usize,
    desired: f64,
    ifi: f64,
    mai: f64,
    noise: f64,
    y1: f64,
    bit: i8,
    decision: i8,
}

/// Writes every decision statistic of the run as CSV, one row per symbol.
pub fn dump_components<W: Write>(config: &TrialConfig, writer: W) -> Result<()> {
    config.validate()?;
    let mut out = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Unsupported(format!("component dump failed: {e}"));
    for drop in 0..config.n_drops as u64 {
        let state = DropState::new(config, drop)?;
        for symbol in 0..state.symbols {
            let c = state.components(symbol);
            out.serialize(ComponentRow {
                drop,
                symbol,
                desired: c.desired,
                ifi: c.ifi,
                mai: c.mai,
                noise: c.noise,
                y1: c.y1,
                bit: c.bit,
                decision: c.decision(),
            })
            .map_err(io)?;
        }
    }
    out.flush()
        .map_err(|e| Error::Unsupported(format!("component dump failed: {e}")))?;
    Ok(())
}
