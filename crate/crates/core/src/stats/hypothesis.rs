use serde::{Deserialize, Serialize};

use super::descriptive::{mean, sample_variance};
use super::rank::midranks;
use super::special::{normal_two_sided, student_two_sided};
use super::{Method, StatResult};
use crate::error::StatsError;

/// Pooled size up to which `WilcoxonMode::Auto` enumerates exactly.
pub const EXACT_AUTO_MAX: usize = 20;
/// Hard cap for an explicit exact request.
pub const EXACT_MAX: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMode {
    #[default]
    Auto,
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DVariant {
    /// mean(x - y) / sd(x - y)
    Paired,
    /// (mean x - mean y) / pooled sd
    Pooled,
}

fn check_finite(x: &[f64]) -> Result<(), StatsError> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}

/// A standard deviation this small relative to the data is rounding noise.
fn is_degenerate_sd(sd: f64, scale: f64) -> bool {
    !(sd > 16.0 * f64::EPSILON * scale)
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn paired_diffs(x: &[f64], y: &[f64]) -> Result<Vec<f64>, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(StatsError::InsufficientData {
            needed: 2,
            found: x.len(),
        });
    }
    check_finite(x)?;
    check_finite(y)?;
    Ok(x.iter().zip(y).map(|(a, b)| a - b).collect())
}

fn pooled_sd(x: &[f64], y: &[f64]) -> f64 {
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    (((n1 - 1.0) * sample_variance(x) + (n2 - 1.0) * sample_variance(y)) / (n1 + n2 - 2.0)).sqrt()
}

/// Cohen's d.
pub fn cohens_d(x: &[f64], y: &[f64], variant: DVariant) -> Result<f64, StatsError> {
    match variant {
        DVariant::Paired => {
            let d = paired_diffs(x, y)?;
            let sd = sample_variance(&d).sqrt();
            if is_degenerate_sd(sd, max_abs(&d)) {
                return Err(StatsError::DegenerateVariance("differences are constant"));
            }
            Ok(mean(&d) / sd)
        }
        DVariant::Pooled => {
            check_two_groups(x, y)?;
            let sd = pooled_sd(x, y);
            if is_degenerate_sd(sd, max_abs(x).max(max_abs(y))) {
                return Err(StatsError::DegenerateVariance("both groups are constant"));
            }
            Ok((mean(x) - mean(y)) / sd)
        }
    }
}

/// Paired Student t-test on `x - y`.
pub fn paired_t(x: &[f64], y: &[f64]) -> Result<StatResult, StatsError> {
    let d = paired_diffs(x, y)?;
    let n = d.len();
    let m = mean(&d);
    let sd = sample_variance(&d).sqrt();
    if is_degenerate_sd(sd, max_abs(&d)) {
        return Err(StatsError::DegenerateVariance("differences are constant"));
    }
    let t = m / (sd / (n as f64).sqrt());
    let df = (n - 1) as f64;
    let mut r = StatResult::new(Method::PairedT, t, student_two_sided(t, df), n, n);
    r.df = Some(df);
    r.effect_size = Some(m / sd);
    Ok(r)
}

fn check_two_groups(x: &[f64], y: &[f64]) -> Result<(), StatsError> {
    for (name, g) in [("first", x), ("second", y)] {
        if g.is_empty() {
            return Err(StatsError::EmptyGroup(name.into()));
        }
        if g.len() < 2 {
            return Err(StatsError::InsufficientData {
                needed: 2,
                found: g.len(),
            });
        }
        check_finite(g)?;
    }
    Ok(())
}

/// Welch's unequal-variance t-test; `effect_size` is the pooled Cohen's d.
pub fn welch_t(x: &[f64], y: &[f64]) -> Result<StatResult, StatsError> {
    check_two_groups(x, y)?;
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    let (v1, v2) = (sample_variance(x) / n1, sample_variance(y) / n2);
    let se = (v1 + v2).sqrt();
    let scale = max_abs(x).max(max_abs(y));
    if is_degenerate_sd(se, scale) {
        return Err(StatsError::DegenerateVariance("both groups are constant"));
    }
    let diff = mean(x) - mean(y);
    let t = diff / se;
    let df = (v1 + v2).powi(2) / (v1 * v1 / (n1 - 1.0) + v2 * v2 / (n2 - 1.0));
    let mut r = StatResult::new(Method::WelchT, t, student_two_sided(t, df), x.len(), y.len());
    r.df = Some(df);
    r.effect_size = Some(diff / pooled_sd(x, y));
    Ok(r)
}

/// Exact two-sided p for the rank sum of the first `n1` items, by dynamic
/// programming over doubled mid-ranks (always integers).
fn exact_rank_sum_p(doubled: &[u64], n1: usize, observed: u64) -> f64 {
    let n = doubled.len();
    let max_sum: u64 = doubled.iter().sum();
    let width = max_sum as usize + 1;
    // ways[k][s]: subsets of size k with doubled rank sum s
    let mut ways = vec![vec![0.0f64; width]; n1 + 1];
    ways[0][0] = 1.0;
    for (i, &r) in doubled.iter().enumerate() {
        let r = r as usize;
        let top = n1.min(i + 1);
        for k in (1..=top).rev() {
            let (lo, hi) = ways.split_at_mut(k);
            let prev = &lo[k - 1];
            let cur = &mut hi[0];
            for s in (r..width).rev() {
                if prev[s - r] != 0.0 {
                    cur[s] += prev[s - r];
                }
            }
        }
    }
    let total: f64 = ways[n1].iter().sum();
    // E[doubled sum] = n1 (n + 1)
    let expected = (n1 * (n + 1)) as i128;
    let dev = (observed as i128 - expected).abs();
    let tail: f64 = ways[n1]
        .iter()
        .enumerate()
        .filter(|(s, _)| (*s as i128 - expected).abs() >= dev)
        .map(|(_, w)| *w)
        .sum();
    (tail / total).min(1.0)
}

/// Wilcoxon rank-sum (Mann-Whitney) test with mid-ranks for ties.
///
/// `statistic` is U for `x`. Exact mode enumerates the permutation
/// distribution of the rank sum conditional on the observed ties; normal
/// mode uses tie-corrected variance and a 0.5 continuity correction.
pub fn wilcoxon_rank_sum(x: &[f64], y: &[f64], mode: WilcoxonMode) -> Result<StatResult, StatsError> {
    for (name, g) in [("first", x), ("second", y)] {
        if g.is_empty() {
            return Err(StatsError::EmptyGroup(name.into()));
        }
        check_finite(g)?;
    }
    let (n1, n2) = (x.len(), y.len());
    let n = n1 + n2;
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    if ties.first() == Some(&n) {
        return Err(StatsError::AllTied);
    }
    let w: f64 = ranks[..n1].iter().sum();
    let u = w - (n1 * (n1 + 1)) as f64 / 2.0;

    let exact = match mode {
        WilcoxonMode::Auto => n <= EXACT_AUTO_MAX,
        WilcoxonMode::Exact => {
            if n > EXACT_MAX {
                return Err(StatsError::ExactTooLarge { n, max: EXACT_MAX });
            }
            true
        }
        WilcoxonMode::Normal => false,
    };

    if exact {
        let doubled: Vec<u64> = ranks.iter().map(|r| (2.0 * r).round() as u64).collect();
        let observed: u64 = doubled[..n1].iter().sum();
        let p = exact_rank_sum_p(&doubled, n1, observed);
        return Ok(StatResult::new(Method::WilcoxonExact, u, p, n1, n2));
    }

    let (f1, f2, nf) = (n1 as f64, n2 as f64, n as f64);
    let tie_term: f64 = ties.iter().map(|&t| (t as f64).powi(3) - t as f64).sum();
    let var = f1 * f2 / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
    if !(var > 0.0) {
        return Err(StatsError::AllTied);
    }
    let centered = u - f1 * f2 / 2.0;
    let z = (centered.abs() - 0.5).max(0.0) / var.sqrt() * centered.signum();
    let mut r = StatResult::new(Method::WilcoxonNormal, u, normal_two_sided(z), n1, n2);
    r.z = Some(z);
    Ok(r)
}
