//! Waveform-level reference computations shared by the integration tests.

#![allow(dead_code)]

use uwbsim::model::PulseShape;
use uwbsim::simulator::DropState;

/// A pulse train: (centre time in chips, amplitude) pairs.
pub type Train = Vec<(f64, f64)>;

/// ∫ a(t)·b(t) dt for two rendered pulse trains, sampled at
/// `samples_per_chip` points per chip over the span of both trains.
pub fn render_correlation(a: &Train, b: &Train, pulse: &PulseShape, samples_per_chip: usize) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let lo = a.iter().chain(b).map(|p| p.0).fold(f64::INFINITY, f64::min) - 3.0;
    let hi = a.iter().chain(b).map(|p| p.0).fold(f64::NEG_INFINITY, f64::max) + 3.0;
    let h = 1.0 / samples_per_chip as f64;
    let steps = ((hi - lo) / h).ceil() as usize;
    let render = |train: &Train, t: f64| -> f64 {
        train
            .iter()
            .filter(|(c, _)| (t - c).abs() < 3.0)
            .map(|(c, amp)| amp * pulse.waveform(t - c))
            .sum()
    };
    (0..steps)
        .map(|s| {
            let t = lo + s as f64 * h;
            render(a, t) * render(b, t)
        })
        .sum::<f64>()
        * h
}

/// φ(j + ε) by rendering the received taps and the template fingers.
pub fn phi_by_rendering(
    alpha: &[f64],
    beta: &[f64],
    chip_offset: i64,
    jitter: f64,
    pulse: &PulseShape,
    samples_per_chip: usize,
) -> f64 {
    let received: Train = alpha
        .iter()
        .enumerate()
        .map(|(l, &a)| (chip_offset as f64 + jitter + l as f64, a))
        .collect();
    let template: Train = beta.iter().enumerate().map(|(l, &b)| (l as f64, b)).collect();
    render_correlation(&received, &template, pulse, samples_per_chip)
}

/// Noise-free correlator output of one decision symbol, obtained by
/// rendering every user's received waveform and the Rake template.
pub fn y1_by_rendering(state: &DropState, symbol: usize, pulse: &PulseShape, samples_per_chip: usize) -> f64 {
    let p = &state.params;
    let nf = p.n_frames();
    let nc = p.n_chips_per_frame() as f64;
    let seq = &state.sequences;
    let i = state.guard + symbol;
    let mut template = Train::new();
    for m in i * nf..(i + 1) * nf {
        let pm = m as f64 * nc + seq.th_codes[0][m] as f64;
        let d = f64::from(seq.polarity_codes[0][m]);
        for (l, &b) in state.weights.beta().iter().enumerate() {
            template.push((pm + l as f64, d * b));
        }
    }
    let start = template.first().unwrap().0 - 3.0;
    let end = template.last().unwrap().0 + 3.0;
    let mut received = Train::new();
    for k in 0..p.n_users() {
        let amp = (p.bit_energy()[k] / nf as f64).sqrt();
        let shift = state.delay_chips[k] as f64 + state.jitters[k];
        for j in 0..seq.th_codes[k].len() {
            let base = j as f64 * nc + seq.th_codes[k][j] as f64 + shift;
            let sign = f64::from(seq.bits[k][j / nf] * seq.polarity_codes[k][j]);
            for (l, &a) in state.channels[k].taps.iter().enumerate() {
                let c = base + l as f64;
                if c > start && c < end {
                    received.push((c, amp * sign * a));
                }
            }
        }
    }
    render_correlation(&received, &template, pulse, samples_per_chip)
}
