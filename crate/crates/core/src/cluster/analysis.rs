//! Tests run on top of a silhouette report: cohesion vs separation, the
//! frequency / polysemy regression and the monosemy contrast.

use serde::Serialize;

use super::silhouette::SilhouetteReport;
use crate::corpus::{Polysemy, Vocab};
use crate::error::StatsError;
use crate::stats::{ols, paired_t, welch_t, OlsResult, StatResult};

/// Paired t-test of per-token cohesion against separation. Negative d means
/// tokens sit closer to their own centroid than to the nearest other one.
pub fn cohesion_vs_separation_test(report: &SilhouetteReport) -> Result<StatResult, StatsError> {
    let coh: Vec<f64> = report.tokens.iter().map(|t| t.value.coh).collect();
    let sep: Vec<f64> = report.tokens.iter().map(|t| t.value.sep).collect();
    paired_t(&coh, &sep)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionRow {
    pub silhouette: f64,
    pub frequency: u64,
    pub definition_count: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DroppedPredictor {
    pub name: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SilhouetteRegression {
    pub fit: OlsResult,
    /// Predictors removed because the design was rank-deficient with them.
    pub dropped: Vec<DroppedPredictor>,
    pub rows_used: usize,
    pub rows_skipped: usize,
}

pub const LN_FREQUENCY: &str = "ln_frequency";
pub const LN_DEFINITIONS: &str = "ln_definition_count";

/// One row per scored type: its mean silhouette, corpus frequency and definition count.
pub fn per_type_rows(report: &SilhouetteReport, vocab: &Vocab) -> Vec<RegressionRow> {
    report
        .per_type
        .iter()
        .filter_map(|t| {
            vocab.get(t.type_id).map(|e| RegressionRow {
                silhouette: t.mean_silh,
                frequency: e.frequency,
                definition_count: e.definition_count,
            })
        })
        .collect()
}

/// Least squares of silhouette on ln(frequency) and ln(definition count).
///
/// Rows without a definition count or with zero frequency are skipped. When
/// one predictor makes the design rank-deficient it is dropped and the
/// model refit on the other; the drop is reported.
pub fn regress_silhouette(rows: &[RegressionRow]) -> Result<SilhouetteRegression, StatsError> {
    let usable: Vec<(f64, f64, f64)> = rows
        .iter()
        .filter_map(|r| match r.definition_count {
            Some(d) if r.frequency > 0 && r.silhouette.is_finite() => {
                Some((r.silhouette, (r.frequency as f64).ln(), (d as f64).ln()))
            }
            _ => None,
        })
        .collect();
    if usable.len() < 4 {
        return Err(StatsError::InsufficientData {
            needed: 4,
            found: usable.len(),
        });
    }
    let y: Vec<f64> = usable.iter().map(|r| r.0).collect();
    let lf: Vec<f64> = usable.iter().map(|r| r.1).collect();
    let ld: Vec<f64> = usable.iter().map(|r| r.2).collect();
    let rows_used = usable.len();
    let rows_skipped = rows.len() - rows_used;

    match ols(&y, &[(LN_FREQUENCY, &lf), (LN_DEFINITIONS, &ld)]) {
        Ok(fit) => Ok(SilhouetteRegression {
            fit,
            dropped: Vec::new(),
            rows_used,
            rows_skipped,
        }),
        Err(StatsError::RankDeficient { column, reason }) => {
            let keep: (&str, &[f64]) = if column == LN_FREQUENCY {
                (LN_DEFINITIONS, &ld)
            } else {
                (LN_FREQUENCY, &lf)
            };
            let fit = ols(&y, &[keep])?;
            Ok(SilhouetteRegression {
                fit,
                dropped: vec![DroppedPredictor {
                    name: column,
                    reason: reason.to_string(),
                }],
                rows_used,
                rows_skipped,
            })
        }
        Err(e) => Err(e),
    }
}

/// Welch t-test of token silhouettes, monosemous minus polysemous, with
/// pooled Cohen's d as the effect size. Tokens of unknown polysemy are ignored.
pub fn group_contrast<F>(report: &SilhouetteReport, partition: F) -> Result<StatResult, StatsError>
where
    F: Fn(u32) -> Option<Polysemy>,
{
    let mut mono = Vec::new();
    let mut poly = Vec::new();
    for t in &report.tokens {
        match partition(t.type_id) {
            Some(Polysemy::Monosemous) => mono.push(t.value.silh),
            Some(Polysemy::Polysemous) => poly.push(t.value.silh),
            None => {}
        }
    }
    if mono.is_empty() {
        return Err(StatsError::EmptyGroup("monosemous".into()));
    }
    if poly.is_empty() {
        return Err(StatsError::EmptyGroup("polysemous".into()));
    }
    welch_t(&mono, &poly)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::{SilhouetteValue, TokenScore};
    use crate::corpus::Segment;

    fn report_from(values: &[(u32, f64, f64)]) -> SilhouetteReport {
        let tokens = values
            .iter()
            .enumerate()
            .map(|(i, &(type_id, coh, sep))| TokenScore {
                ordinal: i as u64,
                type_id,
                segment: Segment::A,
                value: SilhouetteValue::from_distances(coh, sep),
            })
            .collect();
        SilhouetteReport::from_tokens(tokens, 0)
    }

    #[test]
    fn cohesion_test_closed_form() {
        // coh - sep = {-1, -2, -3}
        let r = report_from(&[(0, 1.0, 2.0), (0, 1.0, 3.0), (1, 1.0, 4.0)]);
        let t = cohesion_vs_separation_test(&r).unwrap();
        assert!((t.statistic + 2.0 * 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(t.df, Some(2.0));
        assert_eq!(t.effect_size, Some(-2.0));
        let flat = report_from(&[(0, 1.0, 1.0), (1, 2.0, 2.0)]);
        assert!(matches!(
            cohesion_vs_separation_test(&flat),
            Err(StatsError::DegenerateVariance(_))
        ));
    }

    #[test]
    fn regression_drops_constant_definition_counts() {
        let rows: Vec<RegressionRow> = [3u64, 10, 40, 150, 700, 2000]
            .iter()
            .map(|&f| RegressionRow {
                silhouette: -0.1 * (f as f64).ln() + 0.3,
                frequency: f,
                definition_count: Some(2),
            })
            .collect();
        let reg = regress_silhouette(&rows).unwrap();
        assert_eq!(reg.dropped.len(), 1);
        assert_eq!(reg.dropped[0].name, LN_DEFINITIONS);
        assert_eq!(reg.fit.names, vec![LN_FREQUENCY.to_string()]);
        assert!((reg.fit.slopes[0].estimate + 0.1).abs() < 1e-9);
        assert!((reg.fit.intercept.estimate - 0.3).abs() < 1e-9);
    }

    #[test]
    fn regression_skips_rows_without_counts() {
        let mut rows = vec![
            RegressionRow { silhouette: 0.1, frequency: 5, definition_count: None },
            RegressionRow { silhouette: 0.1, frequency: 0, definition_count: Some(1) },
        ];
        assert!(matches!(regress_silhouette(&rows), Err(StatsError::InsufficientData { .. })));
        for (i, (f, d)) in [(2u64, 1u32), (9, 3), (30, 2), (100, 7), (400, 4)].iter().enumerate() {
            rows.push(RegressionRow {
                silhouette: 0.5 - 0.02 * (*f as f64).ln() - 0.05 * (*d as f64).ln() + 0.001 * i as f64,
                frequency: *f,
                definition_count: Some(*d),
            });
        }
        let reg = regress_silhouette(&rows).unwrap();
        assert_eq!(reg.rows_used, 5);
        assert_eq!(reg.rows_skipped, 2);
        assert!(reg.dropped.is_empty());
    }

    #[test]
    fn contrast_groups() {
        let r = report_from(&[(0, 1.0, 2.0), (0, 1.0, 3.0), (1, 1.0, 2.0), (1, 1.0, 3.0)]);
        let part = |t: u32| Some(if t == 0 { Polysemy::Monosemous } else { Polysemy::Polysemous });
        let c = group_contrast(&r, part).unwrap();
        assert_eq!(c.effect_size, Some(0.0));
        assert!(matches!(
            group_contrast(&r, |_| Some(Polysemy::Monosemous)),
            Err(StatsError::EmptyGroup(g)) if g == "polysemous"
        ));
        // silh 1,1,1 vs 0,0,0: no variance
        let flat = report_from(&[(0, 0.0, 1.0), (0, 0.0, 1.0), (0, 0.0, 1.0), (1, 1.0, 1.0), (1, 1.0, 1.0), (1, 1.0, 1.0)]);
        assert!(matches!(group_contrast(&flat, part), Err(StatsError::DegenerateVariance(_))));
    }
}
