//! Rake combining weights and the received-pulse/template cross-correlation.
//!
//! [`phi_uv`] is the single primitive both the closed-form analysis and the
//! chip-grid simulator evaluate, so any disagreement between the two comes
//! from statistics rather than from two implementations of the same sum.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::{invalid, Error, Result};
use crate::model::{Autocorrelation, SystemParams};

/// Which multipath components the receiver combines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "fingers")]
pub enum RakeScheme {
    /// Every path.
    ARake,
    /// The `M` paths with the largest magnitude.
    SRake(usize),
    /// The first `M` paths.
    PRake(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combining {
    /// Maximal ratio: weights equal the tap gains.
    #[default]
    Mrc,
    /// Equal gain: weights equal the tap signs.
    Egc,
}

/// Combining vector β for one receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct RakeWeights {
    beta: Vec<f64>,
    scheme: RakeScheme,
    combining: Combining,
}

impl RakeWeights {
    /// Wraps an explicit weight vector.
    pub fn from_vec(beta: Vec<f64>, scheme: RakeScheme) -> Result<Self> {
        if beta.is_empty() || beta.iter().any(|b| !b.is_finite()) {
            return Err(invalid("beta", "weights must be a non-empty finite vector"));
        }
        Ok(Self {
            beta,
            scheme,
            combining: Combining::Mrc,
        })
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn scheme(&self) -> RakeScheme {
        self.scheme
    }

    pub fn combining(&self) -> Combining {
        self.combining
    }

    pub fn energy(&self) -> f64 {
        self.beta.iter().map(|b| b * b).sum()
    }

    /// Number of nonzero weights.
    pub fn active_fingers(&self) -> usize {
        self.beta.iter().filter(|&&b| b != 0.0).count()
    }
}

/// MRC weights for the given scheme.
pub fn select_weights(channel: &ChannelRealization, scheme: RakeScheme) -> Result<RakeWeights> {
    select_weights_with(channel, scheme, Combining::Mrc)
}

pub fn select_weights_with(
    channel: &ChannelRealization,
    scheme: RakeScheme,
    combining: Combining,
) -> Result<RakeWeights> {
    let alpha = &channel.taps;
    let taps = alpha.len();
    let selected: Vec<bool> = match scheme {
        RakeScheme::ARake => vec![true; taps],
        RakeScheme::SRake(m) | RakeScheme::PRake(m) => {
            if m == 0 {
                return Err(invalid("fingers", "a Rake needs at least one finger"));
            }
            if m > taps {
                return Err(Error::TooManyFingers { fingers: m, taps });
            }
            let mut keep = vec![false; taps];
            if let RakeScheme::PRake(_) = scheme {
                keep[..m].iter_mut().for_each(|k| *k = true);
            } else {
                let mut order: Vec<usize> = (0..taps).collect();
                // Stable sort keeps the lower index first among equal magnitudes.
                order.sort_by(|&a, &b| alpha[b].abs().total_cmp(&alpha[a].abs()));
                for &i in &order[..m] {
                    keep[i] = true;
                }
            }
            keep
        }
    };
    let beta = alpha
        .iter()
        .zip(&selected)
        .map(|(&a, &keep)| match (keep, combining) {
            (false, _) => 0.0,
            (true, Combining::Mrc) => a,
            (true, Combining::Egc) if a == 0.0 => 0.0,
            (true, Combining::Egc) => a.signum(),
        })
        .collect();
    Ok(RakeWeights {
        beta,
        scheme,
        combining,
    })
}

/// Coefficient of user 1's bit in the Rake output: √(E₁N_f)·Σ α_l β_l.
pub fn desired_amplitude(
    channel: &ChannelRealization,
    weights: &RakeWeights,
    params: &SystemParams,
) -> Result<f64> {
    check_lengths(&channel.taps, weights.beta())?;
    let e1 = params.bit_energy()[0];
    Ok((e1 * params.n_frames() as f64).sqrt() * dot(&channel.taps, weights.beta()))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_lengths(alpha: &[f64], beta: &[f64]) -> Result<()> {
    if alpha.is_empty() {
        return Err(invalid("taps", "channel needs at least one tap"));
    }
    if alpha.len() != beta.len() {
        return Err(Error::LengthMismatch {
            what: "rake weights",
            got: beta.len(),
            expected: alpha.len(),
        });
    }
    Ok(())
}

/// Cross-correlation φ_uv(j·T_c + ε) between the received multipath pulse
/// `u` (taps `alpha`) and the Rake template `v` (weights `beta`).
///
/// Zero for `j >= L` and `j < -L`.
pub fn phi_uv<A: Autocorrelation + ?Sized>(
    alpha: &[f64],
    beta: &[f64],
    chip_offset: i64,
    jitter: f64,
    pulse: &A,
) -> Result<f64> {
    check_lengths(alpha, beta)?;
    let tc = pulse.chip_time();
    if !(0.0..tc).contains(&jitter) {
        return Err(Error::JitterOutOfRange(jitter));
    }
    let r_near = pulse.autocorrelation(jitter);
    let r_far = pulse.autocorrelation(tc - jitter);
    Ok(phi_closed_form(alpha, beta, chip_offset, r_near, r_far))
}

/// Closed form with `r_near = R(ε)` and `r_far = R(T_c - ε)`; indices below
/// are one-based to mirror the tap numbering.
fn phi_closed_form(alpha: &[f64], beta: &[f64], j: i64, r_near: f64, r_far: f64) -> f64 {
    let len = alpha.len() as i64;
    let a = |i: i64| alpha[(i - 1) as usize];
    let b = |i: i64| beta[(i - 1) as usize];
    if j >= 0 {
        if j >= len {
            return 0.0;
        }
        let body: f64 = (1..len - j)
            .map(|l| a(l) * (b(l + j) * r_near + b(l + j + 1) * r_far))
            .sum();
        body + a(len - j) * b(len) * r_near
    } else {
        let m = -j;
        if m > len {
            return 0.0;
        }
        let body: f64 = (1..=len - m)
            .map(|l| b(l) * (a(l + m) * r_near + a(l + m - 1) * r_far))
            .sum();
        body + b(len - m + 1) * a(len) * r_far
    }
}

/// φ_uv at a fixed jitter for every chip offset in `[-L, L-1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiTable {
    taps: i64,
    values: Vec<f64>,
}

impl PhiTable {
    pub fn new<A: Autocorrelation + ?Sized>(
        alpha: &[f64],
        beta: &[f64],
        jitter: f64,
        pulse: &A,
    ) -> Result<Self> {
        let taps = alpha.len() as i64;
        let values = (-taps..taps)
            .map(|j| phi_uv(alpha, beta, j, jitter, pulse))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { taps, values })
    }

    /// φ_uv(j·T_c + ε); zero outside the support.
    #[inline]
    pub fn get(&self, chip_offset: i64) -> f64 {
        if chip_offset < -self.taps || chip_offset >= self.taps {
            0.0
        } else {
            self.values[(chip_offset + self.taps) as usize]
        }
    }

    /// Smallest and largest chip offsets with a possibly nonzero value.
    pub fn support(&self) -> (i64, i64) {
        (-self.taps, self.taps - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::fixed_channel;
    use crate::model::{stream_rng, PulseShape};
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn fixed_channel_srake_and_prake() {
        let ch = fixed_channel();
        let s = select_weights(&ch, RakeScheme::SRake(3)).unwrap();
        assert_eq!(
            s.beta(),
            &[0.4653, 0.5817, 0.0, -0.4536, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        );
        let p = select_weights(&ch, RakeScheme::PRake(3)).unwrap();
        assert_eq!(
            p.beta(),
            &[0.4653, 0.5817, 0.2327, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        );
        let a = select_weights(&ch, RakeScheme::ARake).unwrap();
        assert_eq!(a.beta(), ch.taps.as_slice());
    }

    #[test]
    fn finger_count_errors() {
        let ch = fixed_channel();
        assert_eq!(
            select_weights(&ch, RakeScheme::SRake(11)).unwrap_err(),
            Error::TooManyFingers { fingers: 11, taps: 10 }
        );
        assert!(select_weights(&ch, RakeScheme::PRake(0)).is_err());
        assert_eq!(select_weights(&ch, RakeScheme::PRake(10)).unwrap().active_fingers(), 10);
    }

    #[test]
    fn srake_ties_prefer_lower_index() {
        let ch = ChannelRealization::new(vec![0.1, -0.5, 0.5, 0.5, 0.2], 0.0).unwrap();
        let w = select_weights(&ch, RakeScheme::SRake(2)).unwrap();
        assert_eq!(w.beta(), &[0.0, -0.5, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn egc_uses_signs() {
        let w = select_weights_with(&fixed_channel(), RakeScheme::PRake(4), Combining::Egc).unwrap();
        assert_eq!(&w.beta()[..5], &[1.0, 1.0, 1.0, -1.0, 0.0]);
    }

    #[test]
    fn desired_amplitude_examples() {
        let ch = fixed_channel();
        let p = SystemParams::new(1, 1, vec![1.0], 0.0).unwrap();
        let a = select_weights(&ch, RakeScheme::ARake).unwrap();
        assert!((desired_amplitude(&ch, &a, &p).unwrap() - 1.0).abs() < 5e-4);
        let zero = RakeWeights::from_vec(vec![0.0; 10], RakeScheme::ARake).unwrap();
        assert_eq!(desired_amplitude(&ch, &zero, &p).unwrap(), 0.0);
        let p = SystemParams::new(9, 1, vec![4.0], 0.0).unwrap();
        let one = select_weights(&ch, RakeScheme::PRake(1)).unwrap();
        let v = desired_amplitude(&ch, &one, &p).unwrap();
        assert!((v - 6.0 * 0.4653f64.powi(2)).abs() < 1e-12);
        assert!((v - 1.2991).abs() < 1e-4);
    }

    #[test]
    fn phi_full_correlation_at_zero() {
        let ch = fixed_channel();
        for pulse in [PulseShape::doublet(1.0), PulseShape::rectangular(1.0)] {
            let v = phi_uv(&ch.taps, &ch.taps, 0, 0.0, &pulse).unwrap();
            assert!((v - ch.energy()).abs() < 1e-15);
        }
    }

    /// Direct lag sum Σ_l α_l β_{l+j} on the chip grid.
    fn grid_correlation(alpha: &[f64], beta: &[f64], j: i64) -> f64 {
        (0..alpha.len() as i64)
            .filter_map(|l| {
                let m = l + j;
                (0..beta.len() as i64)
                    .contains(&m)
                    .then(|| alpha[l as usize] * beta[m as usize])
            })
            .sum()
    }

    #[test]
    fn phi_on_chip_grid_is_lag_sum() {
        let ch = fixed_channel();
        let beta = select_weights(&ch, RakeScheme::SRake(3)).unwrap();
        let pulse = PulseShape::doublet(1.0);
        for j in -12..12 {
            let v = phi_uv(&ch.taps, beta.beta(), j, 0.0, &pulse).unwrap();
            assert!((v - grid_correlation(&ch.taps, beta.beta(), j)).abs() < 1e-15, "j={j}");
        }
    }

    #[test]
    fn phi_rejects_bad_input() {
        let p = PulseShape::rectangular(1.0);
        assert_eq!(
            phi_uv(&[1.0], &[1.0], 0, 1.0, &p).unwrap_err(),
            Error::JitterOutOfRange(1.0)
        );
        assert!(phi_uv(&[1.0], &[1.0], 0, -0.1, &p).is_err());
        assert!(phi_uv(&[1.0, 0.5], &[1.0], 0, 0.0, &p).is_err());
    }

    #[test]
    fn phi_table_matches_primitive() {
        let ch = fixed_channel();
        let p = PulseShape::doublet(1.0);
        let t = PhiTable::new(&ch.taps, &ch.taps, 0.3, &p).unwrap();
        assert_eq!(t.support(), (-10, 9));
        for j in -13..13 {
            let want = phi_uv(&ch.taps, &ch.taps, j, 0.3, &p).unwrap();
            assert_eq!(t.get(j), want);
        }
    }

    fn random_vec(rng: &mut impl Rng, len: usize) -> Vec<f64> {
        (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn support_and_continuity_on_random_vectors() {
        let mut rng = stream_rng(17, 0);
        let pulse = PulseShape::doublet(1.0);
        let rect = PulseShape::rectangular(1.0);
        for _ in 0..200 {
            let len = rng.random_range(1..=10);
            let a = random_vec(&mut rng, len);
            let b = random_vec(&mut rng, len);
            let eps: f64 = rng.random_range(0.0..1.0);
            let l = len as i64;
            // The truncated doublet jumps by R₁(T_c⁻) ≈ 1.3e-6 at the chip
            // boundary; the rectangle is continuous there.
            let jump = pulse.autocorrelation(1.0 - 1e-12);
            let bound = |p: &PulseShape| match p.kind() {
                crate::model::PulseKind::Rectangular => 1e-9,
                _ => 1e-9 + jump * a.iter().chain(&b).map(|x| x.abs()).sum::<f64>().powi(2),
            };
            for p in [&pulse, &rect] {
                assert_eq!(phi_uv(&a, &b, l, eps, p).unwrap(), 0.0);
                assert_eq!(phi_uv(&a, &b, -l - 1, eps, p).unwrap(), 0.0);
                for j in -l - 1..l {
                    let left = phi_uv(&a, &b, j, 1.0 - 1e-12, p).unwrap();
                    let right = phi_uv(&a, &b, j + 1, 0.0, p).unwrap();
                    assert!((left - right).abs() < bound(p), "j={j}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn mirrored_roles(
            (a, b) in (1usize..=10).prop_flat_map(|n| (
                prop::collection::vec(-1.0f64..1.0, n),
                prop::collection::vec(-1.0f64..1.0, n),
            )),
            j in -11i64..11,
            eps in 0.001f64..0.999,
        ) {
            // φ_uv(x) = φ_vu(-x), and -(j + ε) = (-j - 1) + (1 - ε).
            let pulse = PulseShape::doublet(1.0);
            let lhs = phi_uv(&a, &b, j, eps, &pulse).unwrap();
            let rhs = phi_uv(&b, &a, -j - 1, 1.0 - eps, &pulse).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn srake_and_prake_keep_m_fingers(
            taps in prop::collection::vec(prop_oneof![-1.0f64..-0.01, 0.01f64..1.0], 1..20),
            m in 1usize..20,
        ) {
            let ch = ChannelRealization::new(taps.clone(), 0.0).unwrap();
            let m = m.min(taps.len());
            for scheme in [RakeScheme::SRake(m), RakeScheme::PRake(m)] {
                let w = select_weights(&ch, scheme).unwrap();
                prop_assert_eq!(w.active_fingers(), m);
                for (b, a) in w.beta().iter().zip(&taps) {
                    prop_assert!(*b == 0.0 || b == a);
                }
                if let RakeScheme::PRake(_) = scheme {
                    prop_assert!(w.beta()[m..].iter().all(|&b| b == 0.0));
                }
            }
            let s = select_weights(&ch, RakeScheme::SRake(m)).unwrap();
            let min_kept = s.beta().iter().filter(|b| **b != 0.0).map(|b| b.abs()).fold(f64::INFINITY, f64::min);
            let max_dropped = taps.iter().zip(s.beta()).filter(|(_, b)| **b == 0.0).map(|(a, _)| a.abs()).fold(0.0, f64::max);
            prop_assert!(min_kept >= max_dropped);
        }
    }
}
