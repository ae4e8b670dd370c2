//! Interference variance sums.
//!
//! Every function here returns the bare bracketed sum; energy, frame and
//! chip-count scaling is applied by the BEP assembler in [`super::bep`].
//! Indices inside the sums are one-based so each loop reads like the tap
//! numbering `α_1 … α_L`.

use crate::error::{Error, Result};
use crate::model::Autocorrelation;
use crate::quadrature::GaussLegendre;

/// Default node count for averaging over the jitter.
pub const DEFAULT_JITTER_NODES: usize = 64;

/// Standard normal tail probability Q(x) = P(Z > x).
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

fn check(alpha: &[f64], beta: &[f64]) -> Result<()> {
    if alpha.len() != beta.len() {
        return Err(Error::LengthMismatch {
            what: "rake weights",
            got: beta.len(),
            expected: alpha.len(),
        });
    }
    Ok(())
}

/// Σ_{l=1}^{L-d} (β_l α_{l+d} + α_l β_{l+d}): the symmetric lag-`d` overlap
/// of a pulse pair `d` chips apart seen from both frames.
fn symmetric_lag(alpha: &[f64], beta: &[f64], d: usize) -> f64 {
    let len = alpha.len();
    (1..=len.saturating_sub(d))
        .map(|l| beta[l - 1] * alpha[l + d - 1] + alpha[l - 1] * beta[l + d - 1])
        .sum()
}

/// IFI sums `(σ²_IFI,1, σ²_IFI,2)` for user 1 with `n_chips` chips per frame.
///
/// The first collects lags below one frame (weighted by their collision
/// probability), the second lags of a frame or more; it vanishes when
/// `L <= n_chips`.
pub fn sigma_ifi(alpha: &[f64], beta: &[f64], n_chips: usize) -> Result<(f64, f64)> {
    check(alpha, beta)?;
    let len = alpha.len();
    let short: f64 = (1..n_chips.min(len))
        .map(|j| j as f64 * symmetric_lag(alpha, beta, j).powi(2))
        .sum();
    let long: f64 = if len > n_chips {
        (1..=len - n_chips)
            .map(|j| {
                (1..=j)
                    .map(|l| {
                        beta[l - 1] * alpha[l + len - j - 1] + alpha[l - 1] * beta[l + len - j - 1]
                    })
                    .sum::<f64>()
                    .powi(2)
            })
            .sum()
    } else {
        0.0
    };
    Ok((short, long))
}

/// Short-channel IFI sum Σ_{j=1}^{L-1} j·[Σ_l (β_l α_{l+j} + α_l β_{l+j})]²,
/// valid for `L <= n_chips + 1`; the IFI variance is `E₁/N_c²` times this.
pub fn ifi_sum_short_channel(alpha: &[f64], beta: &[f64]) -> Result<f64> {
    check(alpha, beta)?;
    Ok((1..alpha.len())
        .map(|j| j as f64 * symmetric_lag(alpha, beta, j).powi(2))
        .sum())
}

/// Asymptotic IFI variance divided by `E₁`:
/// `σ²_IFI,1 / N_c² + σ²_IFI,2 / N_c`.
pub fn ifi_variance_per_energy(alpha: &[f64], beta: &[f64], n_chips: usize) -> Result<f64> {
    let (short, long) = sigma_ifi(alpha, beta, n_chips)?;
    let nc = n_chips as f64;
    Ok(short / (nc * nc) + long / nc)
}

/// Chip-synchronous MAI sum σ²_MAI,k for an interferer with taps `alpha`.
pub fn sigma_mai_sync(alpha: &[f64], beta: &[f64]) -> Result<f64> {
    check(alpha, beta)?;
    let len = alpha.len();
    let first: f64 = (1..=len)
        .map(|j| {
            (1..=j)
                .map(|i| beta[i - 1] * alpha[i + len - j - 1])
                .sum::<f64>()
                .powi(2)
        })
        .sum();
    let second: f64 = (1..len)
        .map(|j| {
            (1..=j)
                .map(|i| alpha[i - 1] * beta[i + len - j - 1])
                .sum::<f64>()
                .powi(2)
        })
        .sum();
    Ok(first + second)
}

/// MAI sum σ²_MAI,k(ε) of an interferer whose pulses are offset by jitter
/// `ε ∈ [0, T_c)` from the chip grid.
pub fn sigma_mai_jitter<A: Autocorrelation + ?Sized>(
    alpha: &[f64],
    beta: &[f64],
    jitter: f64,
    pulse: &A,
) -> Result<f64> {
    check(alpha, beta)?;
    let tc = pulse.chip_time();
    if !(0.0..tc).contains(&jitter) {
        return Err(Error::JitterOutOfRange(jitter));
    }
    let near = pulse.autocorrelation(jitter);
    let far = pulse.autocorrelation(tc - jitter);
    Ok(jitter_sum(alpha, beta, near, far))
}

fn jitter_sum(alpha: &[f64], beta: &[f64], near: f64, far: f64) -> f64 {
    let len = alpha.len();
    let a = |i: usize| alpha[i - 1];
    let b = |i: usize| beta[i - 1];
    let first: f64 = (0..len)
        .map(|j| {
            let body: f64 = (1..=j)
                .map(|l| b(l) * (a(l + len - j - 1) * far + a(l + len - j) * near))
                .sum();
            (body + b(j + 1) * a(len) * far).powi(2)
        })
        .sum();
    let second: f64 = (0..len)
        .map(|j| {
            let body: f64 = (1..=j)
                .map(|l| a(l) * (b(l + len - j - 1) * near + b(l + len - j) * far))
                .sum();
            (body + a(j + 1) * b(len) * near).powi(2)
        })
        .sum();
    first + second
}

/// Mean of [`sigma_mai_jitter`] over a jitter uniform on `[0, T_c)`, by
/// 64-node Gauss–Legendre quadrature.
pub fn expected_sigma_mai<A: Autocorrelation + ?Sized>(
    alpha: &[f64],
    beta: &[f64],
    pulse: &A,
) -> Result<f64> {
    expected_sigma_mai_with(alpha, beta, pulse, &GaussLegendre::new(DEFAULT_JITTER_NODES))
}

pub fn expected_sigma_mai_with<A: Autocorrelation + ?Sized>(
    alpha: &[f64],
    beta: &[f64],
    pulse: &A,
    rule: &GaussLegendre,
) -> Result<f64> {
    check(alpha, beta)?;
    let tc = pulse.chip_time();
    let integral = rule.integrate(0.0, tc, |e| {
        jitter_sum(alpha, beta, pulse.autocorrelation(e), pulse.autocorrelation(tc - e))
    });
    Ok(integral / tc)
}
