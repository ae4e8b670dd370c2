//! Sweep execution and report writing.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use uwbsim::analytic::{self, BepMode, BepQuery, ExactOptions};
use uwbsim::channel::{fixed_channel, gen_lognormal_channel, ChannelRealization};
use uwbsim::model::stream_rng;
use uwbsim::rake::select_weights_with;
use uwbsim::simulator::{estimate_bep, ChannelSource, TrialConfig};

use crate::error::{CliError, Result};
use crate::spec::{AnalyticMode, ExperimentSpec, SweepPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Analyze,
    Simulate,
    Compare,
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub sweep_var: &'static str,
    pub value: f64,
    pub mode: String,
    pub bep: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub trials: Option<u64>,
    pub seed: u64,
    /// Only written by `compare`: (simulated − analytic) / analytic.
    pub rel_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: Command,
    pub tool_version: String,
    pub wall_time_s: f64,
    pub csv: PathBuf,
    pub spec: ExperimentSpec,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rows: Vec<ReportRow>,
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
}

/// Path of the manifest written next to `csv`.
pub fn manifest_path(csv: &Path) -> PathBuf {
    csv.with_extension("manifest.json")
}

/// Channel realizations shared by every analytic mode at a point, one
/// vector per realization with user 1 first.
fn analytic_channels(spec: &ExperimentSpec, users: usize) -> Vec<Vec<ChannelRealization>> {
    // Keyed away from the simulation seeds so the two never share draws.
    let mut rng = stream_rng(spec.seed ^ 0xA5A5_5A5A_0000_0001, 0);
    match spec.channel_source() {
        ChannelSource::Awgn => vec![vec![ChannelRealization::awgn(); users]],
        ChannelSource::Fixed => vec![vec![fixed_channel(); users]],
        ChannelSource::Taps(t) => vec![vec![ChannelRealization { taps: t, delay: 0.0 }; users]],
        ChannelSource::Lognormal(m) => (0..spec.channel_realizations)
            .map(|_| (0..users).map(|_| gen_lognormal_channel(&m, &mut rng)).collect())
            .collect(),
        ChannelSource::SharedLognormal(m) => (0..spec.channel_realizations)
            .map(|_| vec![gen_lognormal_channel(&m, &mut rng); users])
            .collect(),
    }
}

fn analytic_row(spec: &ExperimentSpec, point: &SweepPoint, mode: AnalyticMode) -> Result<ReportRow> {
    let bep_mode = match mode {
        AnalyticMode::Sync => BepMode::Sync,
        AnalyticMode::AsyncExact => BepMode::AsyncExact(ExactOptions {
            seed: spec.seed,
            ..Default::default()
        }),
        AnalyticMode::AsyncSga => BepMode::AsyncSga,
        AnalyticMode::AwgnSync => BepMode::AwgnSync,
        AnalyticMode::AwgnAsync => BepMode::AwgnAsync,
        AnalyticMode::AwgnNoPolaritySync => BepMode::AwgnNoPolaritySync,
    };
    let channels = analytic_channels(spec, point.params.n_users());
    let pulse = spec.pulse_shape();
    let mut values = Vec::with_capacity(channels.len());
    let mut mc_error: f64 = 0.0;
    for chs in channels {
        let weights = select_weights_with(&chs[0], point.scheme, spec.combining)?;
        let b = analytic::bep(&BepQuery {
            params: point.params.clone(),
            channels: chs,
            weights,
            pulse,
            mode: bep_mode.clone(),
        })?;
        mc_error = mc_error.max(b.std_error);
        values.push(b.value);
    }
    let avg = analytic::summarize(&values)?;
    let se = avg.std_error.hypot(mc_error);
    let (ci_low, ci_high) = if se > 0.0 {
        (Some((avg.mean - 1.96 * se).max(0.0)), Some((avg.mean + 1.96 * se).min(1.0)))
    } else {
        (None, None)
    };
    Ok(ReportRow {
        sweep_var: spec.sweep.variable.name(),
        value: point.value,
        mode: mode.name().to_string(),
        bep: avg.mean,
        ci_low,
        ci_high,
        trials: None,
        seed: spec.seed,
        rel_error: None,
    })
}

fn simulated_row(spec: &ExperimentSpec, point: &SweepPoint, index: usize) -> Result<ReportRow> {
    let config = TrialConfig {
        params: point.params.clone(),
        pulse: spec.pulse_shape(),
        sync: spec.mode,
        jitter: spec.jitter_model(),
        scheme: point.scheme,
        combining: spec.combining,
        polarity_enabled: spec.polarity_enabled,
        channel_source: spec.channel_source(),
        n_drops: spec.n_drops,
        symbols_per_drop: spec.symbols_per_drop,
        // Distinct but reproducible streams per sweep point.
        master_seed: spec.seed.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
    };
    let est = estimate_bep(&config)?;
    Ok(ReportRow {
        sweep_var: spec.sweep.variable.name(),
        value: point.value,
        mode: "simulated".to_string(),
        bep: est.bep,
        ci_low: Some(est.ci95.0),
        ci_high: Some(est.ci95.1),
        trials: Some(est.trials),
        seed: spec.seed,
        rel_error: None,
    })
}

/// Computes every requested row, in sweep order.
pub fn compute_rows(spec: &ExperimentSpec, command: Command) -> Result<Vec<ReportRow>> {
    let points = spec.points()?;
    let analytic = command != Command::Simulate;
    let simulate = command != Command::Analyze;
    if analytic && spec.analytic_modes.is_empty() {
        return Err(CliError::Validation("analytic_modes is empty".into()));
    }
    let per_point: Vec<Result<Vec<ReportRow>>> = points
        .par_iter()
        .enumerate()
        .map(|(i, point)| {
            let mut rows = Vec::new();
            if analytic {
                for &mode in &spec.analytic_modes {
                    rows.push(analytic_row(spec, point, mode)?);
                }
            }
            if simulate {
                let sim = simulated_row(spec, point, i)?;
                if command == Command::Compare {
                    for r in &mut rows {
                        r.rel_error = Some((sim.bep - r.bep) / r.bep);
                    }
                }
                rows.push(sim);
            }
            Ok(rows)
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_point {
        rows.extend(r?);
    }
    Ok(rows)
}

fn field<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_csv(path: &Path, rows: &[ReportRow], command: Command) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = csv::Writer::from_writer(file);
    let compare = command == Command::Compare;
    let fail = |e: csv::Error| CliError::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut header = vec!["sweep_var", "value", "mode", "bep", "ci_low", "ci_high", "trials", "seed"];
    if compare {
        header.push("rel_error");
    }
    out.write_record(&header).map_err(fail)?;
    for row in rows {
        let mut record = vec![
            row.sweep_var.to_string(),
            row.value.to_string(),
            row.mode.clone(),
            row.bep.to_string(),
            field(row.ci_low),
            field(row.ci_high),
            field(row.trials),
            row.seed.to_string(),
        ];
        if compare {
            record.push(field(row.rel_error));
        }
        out.write_record(&record).map_err(fail)?;
    }
    out.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

/// Runs a validated spec and writes the CSV report and manifest.
pub fn run(spec: &ExperimentSpec, command: Command) -> Result<RunOutput> {
    let start = Instant::now();
    let rows = compute_rows(spec, command)?;
    let csv_path = spec.output_path.clone();
    if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    write_csv(&csv_path, &rows, command)?;
    let manifest = Manifest {
        command,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_s: start.elapsed().as_secs_f64(),
        csv: csv_path.clone(),
        spec: spec.clone(),
    };
    let manifest_path = manifest_path(&csv_path);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&manifest_path, json).map_err(|e| CliError::io(&manifest_path, e))?;
    Ok(RunOutput {
        rows,
        csv_path,
        manifest_path,
    })
}
