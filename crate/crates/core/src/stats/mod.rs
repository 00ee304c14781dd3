//! Statistics kernel: t-tests, Cohen's d, Wilcoxon rank-sum, Spearman,
//! least squares and seeded subsampling. All p-values are two-sided.

mod descriptive;
mod hypothesis;
mod ols;
mod rank;
mod sample;
pub mod special;

use serde::{Deserialize, Serialize};

pub use descriptive::{mean, median, sample_variance};
pub use hypothesis::{cohens_d, paired_t, welch_t, wilcoxon_rank_sum, DVariant, WilcoxonMode, EXACT_AUTO_MAX, EXACT_MAX};
pub use ols::{ols, ols2, Coefficient, OlsResult};
pub use rank::{midranks, spearman, Spearman};
pub use sample::{child_seed, seeded_rng, subsample, SeedRng};

/// p-values below this are flagged as floored.
pub const P_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PairedT,
    WelchT,
    WilcoxonExact,
    WilcoxonNormal,
    Spearman,
}

/// Outcome of a hypothesis test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatResult {
    pub method: Method,
    /// t for t-tests, Mann-Whitney U of the first sample for Wilcoxon, rho for Spearman.
    pub statistic: f64,
    pub df: Option<f64>,
    pub p_value: f64,
    /// Cohen's d where meaningful.
    pub effect_size: Option<f64>,
    pub n1: usize,
    pub n2: usize,
    /// Standardized statistic for the normal-approximation Wilcoxon.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    /// True when `p_value` is below [`P_FLOOR`].
    pub p_floored: bool,
}

impl StatResult {
    pub(crate) fn new(method: Method, statistic: f64, p_value: f64, n1: usize, n2: usize) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self {
            method,
            statistic,
            df: None,
            p_value,
            effect_size: None,
            n1,
            n2,
            z: None,
            p_floored: p_value < P_FLOOR,
        }
    }

    pub fn significant(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}
