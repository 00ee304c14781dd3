//! Ordinary least squares with an intercept, via modified Gram-Schmidt on
//! centered predictors.

use serde::Serialize;

use super::special::student_two_sided;
use crate::error::StatsError;

/// A column whose residual norm after orthogonalization falls below this
/// fraction of its centered norm is treated as collinear.
const COLLINEAR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coefficient {
    pub estimate: f64,
    pub std_error: f64,
    pub t: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OlsResult {
    pub intercept: Coefficient,
    pub slopes: Vec<Coefficient>,
    pub names: Vec<String>,
    pub r_squared: f64,
    pub n: usize,
    pub df_residual: usize,
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

fn coef(estimate: f64, se: f64, df: f64) -> Coefficient {
    let t = estimate / se;
    let p_value = if t.is_nan() { 1.0 } else { student_two_sided(t, df) };
    Coefficient {
        estimate,
        std_error: se,
        t,
        p_value,
    }
}

fn centered(x: &[f64]) -> (f64, Vec<f64>) {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    (m, x.iter().map(|v| v - m).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fits `y ~ 1 + predictors`. Each predictor is `(name, values)`.
pub fn ols(y: &[f64], predictors: &[(&str, &[f64])]) -> Result<OlsResult, StatsError> {
    let n = y.len();
    let k = predictors.len();
    for (_, x) in predictors {
        if x.len() != n {
            return Err(StatsError::LengthMismatch { left: n, right: x.len() });
        }
    }
    if n < k + 2 {
        return Err(StatsError::InsufficientData { needed: k + 2, found: n });
    }
    if y.iter().chain(predictors.iter().flat_map(|(_, x)| x.iter())).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }

    let (y_mean, yc) = centered(y);
    let mut means = Vec::with_capacity(k);
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(k);
    for (_, x) in predictors {
        let (m, c) = centered(x);
        means.push(m);
        cols.push(c);
    }

    // Q columns orthonormal, R upper triangular: Xc = Q R
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut r = vec![vec![0.0; k]; k];
    for (j, col) in cols.iter().enumerate() {
        let scale = predictors[j].1.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let centered_norm = dot(col, col).sqrt();
        if !(centered_norm > 1e3 * f64::EPSILON * scale * (n as f64).sqrt()) {
            return Err(StatsError::RankDeficient {
                column: predictors[j].0.to_string(),
                reason: "constant",
            });
        }
        let mut v = col.clone();
        // two passes of MGS for orthogonality to working precision
        for _ in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let proj = dot(qi, &v);
                r[i][j] += proj;
                for (vt, qt) in v.iter_mut().zip(qi) {
                    *vt -= proj * qt;
                }
            }
        }
        let resid_norm = dot(&v, &v).sqrt();
        if resid_norm < COLLINEAR_TOL * centered_norm {
            return Err(StatsError::RankDeficient {
                column: predictors[j].0.to_string(),
                reason: "collinear with earlier predictors",
            });
        }
        r[j][j] = resid_norm;
        v.iter_mut().for_each(|t| *t /= resid_norm);
        q.push(v);
    }

    // R beta = Q^T yc
    let qty: Vec<f64> = q.iter().map(|qi| dot(qi, &yc)).collect();
    let mut beta = vec![0.0; k];
    for j in (0..k).rev() {
        let s: f64 = (j + 1..k).map(|m| r[j][m] * beta[m]).sum();
        beta[j] = (qty[j] - s) / r[j][j];
    }

    let residuals: Vec<f64> = (0..n)
        .map(|t| yc[t] - (0..k).map(|j| beta[j] * cols[j][t]).sum::<f64>())
        .collect();
    let sse = dot(&residuals, &residuals);
    let sst = dot(&yc, &yc);
    let df_residual = n - k - 1;
    let sigma2 = sse / df_residual as f64;
    let r_squared = if sst > 0.0 { (1.0 - sse / sst).clamp(0.0, 1.0) } else { 1.0 };

    // R^{-1} by back substitution; Cov(beta) = sigma^2 R^{-1} R^{-T}
    let mut rinv = vec![vec![0.0; k]; k];
    for c in 0..k {
        for i in (0..=c).rev() {
            let rhs = if i == c { 1.0 } else { 0.0 };
            let s: f64 = (i + 1..=c).map(|m| r[i][m] * rinv[m][c]).sum();
            rinv[i][c] = (rhs - s) / r[i][i];
        }
    }
    let cov = |a: usize, b: usize| -> f64 { sigma2 * (0..k).map(|m| rinv[a][m] * rinv[b][m]).sum::<f64>() };
    let df = df_residual as f64;
    let slopes: Vec<Coefficient> = (0..k).map(|j| coef(beta[j], cov(j, j).sqrt(), df)).collect();

    let intercept_est = y_mean - (0..k).map(|j| beta[j] * means[j]).sum::<f64>();
    let mut intercept_var = sigma2 / n as f64;
    for a in 0..k {
        for b in 0..k {
            intercept_var += means[a] * means[b] * cov(a, b);
        }
    }
    Ok(OlsResult {
        intercept: coef(intercept_est, intercept_var.max(0.0).sqrt(), df),
        slopes,
        names: predictors.iter().map(|(name, _)| name.to_string()).collect(),
        r_squared,
        n,
        df_residual,
        residuals,
    })
}

/// Two-predictor least squares `y ~ 1 + x1 + x2`.
pub fn ols2(y: &[f64], x1: &[f64], x2: &[f64]) -> Result<OlsResult, StatsError> {
    ols(y, &[("x1", x1), ("x2", x2)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_linear_fit() {
        let x1 = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let x2 = [0.5, -1.0, 2.0, 0.0, 3.0, 1.0];
        let y: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| 0.7 + 2.0 * a - 3.0 * b).collect();
        let fit = ols2(&y, &x1, &x2).unwrap();
        assert!((fit.intercept.estimate - 0.7).abs() < 1e-12);
        assert!((fit.slopes[0].estimate - 2.0).abs() < 1e-12);
        assert!((fit.slopes[1].estimate + 3.0).abs() < 1e-12);
        assert!(fit.residuals.iter().all(|e| e.abs() < 1e-9));
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn rank_deficiency_names_column() {
        let x1 = [1.0, 2.0, 3.0, 4.0, 5.0];
        let x2: Vec<f64> = x1.iter().map(|v| 2.0 * v).collect();
        let y = [1.0, 3.0, 2.0, 5.0, 4.0];
        match ols2(&y, &x1, &x2) {
            Err(StatsError::RankDeficient { column, .. }) => assert_eq!(column, "x2"),
            other => panic!("unexpected {other:?}"),
        }
        match ols2(&y, &[3.0; 5], &x1) {
            Err(StatsError::RankDeficient { column, reason }) => {
                assert_eq!(column, "x1");
                assert_eq!(reason, "constant");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            ols2(&y[..3], &x1[..3], &x1[..3]),
            Err(StatsError::InsufficientData { .. })
        ));
    }

    #[test]
    fn simple_regression_standard_error() {
        // textbook: se(slope) = sigma / sqrt(Sxx)
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [1.2, 1.9, 3.2, 3.8, 5.1];
        let fit = ols(&y, &[("x", &x)]).unwrap();
        let sxx: f64 = 10.0;
        let sse: f64 = fit.residuals.iter().map(|e| e * e).sum();
        let sigma = (sse / 3.0).sqrt();
        assert!((fit.slopes[0].std_error - sigma / sxx.sqrt()).abs() < 1e-12);
        assert!((fit.slopes[0].estimate - 0.97).abs() < 1e-12);
        // se(intercept) = sigma sqrt(1/n + xbar^2 / Sxx)
        assert!((fit.intercept.std_error - sigma * (0.2f64 + 9.0 / sxx).sqrt()).abs() < 1e-12);
    }
}
