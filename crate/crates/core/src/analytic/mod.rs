//! Closed-form interference variances and BEP approximations.

mod bep;
mod variance;

pub use bep::{
    average_bep, bep, summarize, AveragedBep, BepMode, BepQuery, BepValue, ExactOptions,
    VarianceBreakdown,
};
pub use variance::{
    expected_sigma_mai, expected_sigma_mai_with, ifi_sum_short_channel, ifi_variance_per_energy,
    q_function, sigma_ifi, sigma_mai_jitter, sigma_mai_sync, DEFAULT_JITTER_NODES,
};
