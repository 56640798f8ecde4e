//! Sample-based linear and rank importance measures: Pearson correlation,
//! standardized regression coefficients (SRC), partial correlation (PCC),
//! their rank analogues (Spearman, SRRC, PRCC) and the R²/Q² validation
//! coefficients.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::sampling::SampleMatrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegressionError {
    #[error("correlation undefined: {0} has zero variance")]
    ZeroVariance(String),
    #[error("need more than d+1 = {required} rows, got {got}")]
    TooFewRows { required: usize, got: usize },
    #[error("design matrix is rank deficient; dependent columns: {columns:?}")]
    Collinearity { columns: Vec<String> },
    #[error("input index {0} out of range")]
    BadInputIndex(usize),
    #[error("Q² undefined: test output has zero variance")]
    ZeroTestVariance,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn centered_sq_sum(v: &[f64], m: f64) -> f64 {
    v.iter().map(|x| (x - m).powi(2)).sum()
}

/// Sample product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, RegressionError> {
    assert_eq!(x.len(), y.len());
    if x.len() < 3 {
        return Err(RegressionError::TooFewRows { required: 3, got: x.len() });
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx = centered_sq_sum(x, mx);
    let syy = centered_sq_sum(y, my);
    if sxx == 0.0 {
        return Err(RegressionError::ZeroVariance("x".to_string()));
    }
    if syy == 0.0 {
        return Err(RegressionError::ZeroVariance("y".to_string()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Ok(sxy / (sxx.sqrt() * syy.sqrt()))
}

/// Ordinary least-squares fit of `y` on the design columns plus an intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    pub fitted: Vec<f64>,
    pub r_squared: f64,
}

impl LinearFit {
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(row).map(|(c, x)| c * x).sum::<f64>()
    }
}

const RANK_EPS_FACTOR: f64 = 1e-10;

/// Least squares on raw columns `[1 | X]` via SVD; detects rank deficiency.
pub(crate) fn solve_least_squares(
    columns: &[Vec<f64>],
    names: &[String],
    y: &[f64],
) -> Result<(f64, Vec<f64>), RegressionError> {
    let n = y.len();
    let d = columns.len();
    if n <= d + 1 {
        return Err(RegressionError::TooFewRows { required: d + 2, got: n });
    }
    let mut x = DMatrix::zeros(n, d + 1);
    for i in 0..n {
        x[(i, 0)] = 1.0;
        for (j, col) in columns.iter().enumerate() {
            x[(i, j + 1)] = col[i];
        }
    }
    let svd = x.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let eps = max_sv * RANK_EPS_FACTOR;
    let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
    if rank < d + 1 {
        // Columns with large weight in the null space are the dependent ones.
        let v_t = svd.v_t.as_ref().expect("svd computed with v_t");
        let mut involved = Vec::new();
        for (k, &s) in svd.singular_values.iter().enumerate() {
            if s <= eps {
                for j in 1..=d {
                    if v_t[(k, j)].abs() > 1e-6 && !involved.contains(&names[j - 1]) {
                        involved.push(names[j - 1].clone());
                    }
                }
            }
        }
        return Err(RegressionError::Collinearity { columns: involved });
    }
    let b = DVector::from_column_slice(y);
    let beta = svd.solve(&b, eps).expect("svd solve after rank check");
    Ok((beta[0], beta.as_slice()[1..].to_vec()))
}

/// Fit a linear model `y ~ 1 + X` and report R² = 1 − SSres/SStot.
pub fn fit_linear(sample: &SampleMatrix, y: &[f64]) -> Result<LinearFit, RegressionError> {
    assert_eq!(sample.n_rows(), y.len());
    let columns: Vec<Vec<f64>> = (0..sample.n_cols()).map(|j| sample.column(j)).collect();
    let (intercept, coefficients) = solve_least_squares(&columns, sample.names(), y)?;
    let fitted: Vec<f64> = (0..y.len())
        .map(|i| {
            intercept
                + coefficients
                    .iter()
                    .enumerate()
                    .map(|(j, c)| c * columns[j][i])
                    .sum::<f64>()
        })
        .collect();
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(yi, fi)| yi - fi).collect();
    let my = mean(y);
    let ss_tot = centered_sq_sum(y, my);
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let r_squared = if ss_tot == 0.0 { 0.0 } else { 1.0 - ss_res / ss_tot };
    Ok(LinearFit { intercept, coefficients, residuals, fitted, r_squared })
}

fn sample_sd(v: &[f64]) -> f64 {
    let m = mean(v);
    (centered_sq_sum(v, m) / (v.len() as f64 - 1.0)).sqrt()
}

/// Standardized regression coefficients `SRC_j = β_j · sd(X_j)/sd(Y)` from
/// empirical standard deviations.
pub fn src(fit: &LinearFit, sample: &SampleMatrix, y: &[f64]) -> Result<Vec<f64>, RegressionError> {
    let sd_y = sample_sd(y);
    if sd_y == 0.0 {
        return Err(RegressionError::ZeroVariance("y".to_string()));
    }
    Ok(fit
        .coefficients
        .iter()
        .enumerate()
        .map(|(j, beta)| beta * sample_sd(&sample.column(j)) / sd_y)
        .collect())
}

/// Partial correlation of input `j` with the output: the correlation between
/// the residuals of `X_j ~ X_{−j}` and `Y ~ X_{−j}`.
pub fn pcc(sample: &SampleMatrix, y: &[f64], j: usize) -> Result<f64, RegressionError> {
    let d = sample.n_cols();
    if j >= d {
        return Err(RegressionError::BadInputIndex(j));
    }
    let others: Vec<usize> = (0..d).filter(|&k| k != j).collect();
    let columns: Vec<Vec<f64>> = others.iter().map(|&k| sample.column(k)).collect();
    let names: Vec<String> = others.iter().map(|&k| sample.names()[k].clone()).collect();
    let xj = sample.column(j);

    let resid = |target: &[f64]| -> Result<Vec<f64>, RegressionError> {
        if columns.is_empty() {
            let m = mean(target);
            return Ok(target.iter().map(|v| v - m).collect());
        }
        let (intercept, coeffs) = solve_least_squares(&columns, &names, target)?;
        Ok((0..target.len())
            .map(|i| {
                target[i]
                    - intercept
                    - coeffs.iter().enumerate().map(|(k, c)| c * columns[k][i]).sum::<f64>()
            })
            .collect())
    };
    let rx = resid(&xj)?;
    let ry = resid(y)?;
    pearson(&rx, &ry)
}

/// Column-wise average ranks in 1..n; ties share the mean of their positions.
pub fn rank_transform(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut k = i;
        while k + 1 < n && values[order[k + 1]] == values[order[i]] {
            k += 1;
        }
        let avg = (i + k) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=k] {
            ranks[idx] = avg;
        }
        i = k + 1;
    }
    ranks
}

fn rank_transform_matrix(sample: &SampleMatrix) -> SampleMatrix {
    let cols: Vec<Vec<f64>> = (0..sample.n_cols())
        .map(|j| rank_transform(&sample.column(j)))
        .collect();
    let rows: Vec<Vec<f64>> = (0..sample.n_rows())
        .map(|i| cols.iter().map(|c| c[i]).collect())
        .collect();
    SampleMatrix::from_rows(sample.names().to_vec(), rows, sample.design(), sample.seed())
        .expect("rank matrix has same shape")
}

/// Predictivity coefficient `Q² = 1 − Σ(y − ŷ)² / Σ(y − ȳ)²` on a test set;
/// may be negative for a predictor worse than the test mean.
pub fn q2(y_pred: &[f64], y_test: &[f64]) -> Result<f64, RegressionError> {
    assert_eq!(y_pred.len(), y_test.len());
    if y_test.len() < 2 {
        return Err(RegressionError::TooFewRows { required: 2, got: y_test.len() });
    }
    let m = mean(y_test);
    let ss_tot = centered_sq_sum(y_test, m);
    if ss_tot == 0.0 {
        return Err(RegressionError::ZeroTestVariance);
    }
    let ss_err: f64 = y_test.iter().zip(y_pred).map(|(y, p)| (y - p).powi(2)).sum();
    Ok(1.0 - ss_err / ss_tot)
}

/// Confidence interval for a correlation-type index via the Fisher
/// z-transform.
pub fn fisher_z_ci(r: f64, n: usize, level: f64) -> (f64, f64) {
    let r = r.clamp(-0.999999, 0.999999);
    let z = r.atanh();
    let se = 1.0 / ((n as f64 - 3.0).max(1.0)).sqrt();
    // Normal quantile via the erf inverse.
    let q = std::f64::consts::SQRT_2 * statrs::function::erf::erf_inv(level);
    ((z - q * se).tanh(), (z + q * se).tanh())
}

/// The full set of sample-based importance measures for one output.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionIndices {
    pub names: Vec<String>,
    pub pearson: Vec<f64>,
    pub src: Vec<f64>,
    pub pcc: Vec<f64>,
    pub spearman: Vec<f64>,
    pub srrc: Vec<f64>,
    pub prcc: Vec<f64>,
    pub r_squared: f64,
    pub r_squared_ranks: f64,
    pub n: usize,
}

/// Compute Pearson/SRC/PCC on the raw sample and their analogues on the
/// rank-transformed sample.
pub fn regression_indices(
    sample: &SampleMatrix,
    y: &[f64],
) -> Result<RegressionIndices, RegressionError> {
    let d = sample.n_cols();
    let fit = fit_linear(sample, y)?;
    let src_values = src(&fit, sample, y)?;
    let pearson_values: Vec<f64> = (0..d)
        .map(|j| pearson(&sample.column(j), y))
        .collect::<Result<_, _>>()?;
    let pcc_values: Vec<f64> = (0..d).map(|j| pcc(sample, y, j)).collect::<Result<_, _>>()?;

    let rank_sample = rank_transform_matrix(sample);
    let rank_y = rank_transform(y);
    let rank_fit = fit_linear(&rank_sample, &rank_y)?;
    let srrc_values = src(&rank_fit, &rank_sample, &rank_y)?;
    let spearman_values: Vec<f64> = (0..d)
        .map(|j| pearson(&rank_sample.column(j), &rank_y))
        .collect::<Result<_, _>>()?;
    let prcc_values: Vec<f64> = (0..d)
        .map(|j| pcc(&rank_sample, &rank_y, j))
        .collect::<Result<_, _>>()?;

    Ok(RegressionIndices {
        names: sample.names().to_vec(),
        pearson: pearson_values,
        src: src_values,
        pcc: pcc_values,
        spearman: spearman_values,
        srrc: srrc_values,
        prcc: prcc_values,
        r_squared: fit.r_squared,
        r_squared_ranks: rank_fit.r_squared,
        n: sample.n_rows(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{DistributionSpec, InputSpace};
    use crate::sampling::{monte_carlo, DesignKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform_space(bounds: &[(f64, f64)]) -> InputSpace {
        InputSpace::new(
            bounds
                .iter()
                .enumerate()
                .map(|(j, &(lo, hi))| {
                    (format!("x{}", j + 1), DistributionSpec::Uniform { lo, hi })
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn pearson_affine_and_independent() {
        let x: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 3.0).collect();
        assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        let y_neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &y_neg).unwrap() + 1.0).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a: Vec<f64> = (0..10_000).map(|_| rng.gen::<f64>()).collect();
        let b: Vec<f64> = (0..10_000).map(|_| rng.gen::<f64>()).collect();
        assert!(pearson(&a, &b).unwrap().abs() < 0.05);
    }

    #[test]
    fn pearson_zero_variance() {
        let x = vec![1.0; 10];
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!(matches!(pearson(&x, &y), Err(RegressionError::ZeroVariance(_))));
    }

    #[test]
    fn fit_linear_recovers_exact_affine() {
        let space = uniform_space(&[(0.0, 1.0), (0.0, 2.0), (-1.0, 1.0)]);
        let sample = monte_carlo(&space, 200, 7).unwrap();
        let y: Vec<f64> = sample.rows().map(|r| 1.5 + 2.0 * r[0] - 3.0 * r[1] + 0.25 * r[2]).collect();
        let fit = fit_linear(&sample, &y).unwrap();
        assert!((fit.intercept - 1.5).abs() < 1e-10);
        for (c, e) in fit.coefficients.iter().zip([2.0, -3.0, 0.25]) {
            assert!((c - e).abs() < 1e-10);
        }
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_linear_constant_output() {
        let space = uniform_space(&[(0.0, 1.0)]);
        let sample = monte_carlo(&space, 50, 1).unwrap();
        let y = vec![4.0; 50];
        let fit = fit_linear(&sample, &y).unwrap();
        assert_eq!(fit.r_squared, 0.0);
        assert!(fit.coefficients[0].abs() < 1e-8);
    }

    #[test]
    fn fit_linear_residuals_orthogonal_to_regressors() {
        let space = uniform_space(&[(0.0, 1.0), (0.0, 1.0)]);
        let sample = monte_carlo(&space, 300, 11).unwrap();
        let y: Vec<f64> = sample.rows().map(|r| r[0].sin() + r[1].powi(2)).collect();
        let fit = fit_linear(&sample, &y).unwrap();
        let scale: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        for j in 0..2 {
            let col = sample.column(j);
            let dot: f64 = fit.residuals.iter().zip(&col).map(|(r, x)| r * x).sum();
            assert!(dot.abs() / scale < 1e-8, "residuals not orthogonal to column {j}");
        }
        // R² equals the squared correlation between y and the fitted values.
        let rho = pearson(&y, &fit.fitted).unwrap();
        assert!((fit.r_squared - rho * rho).abs() < 1e-10);
    }

    #[test]
    fn fit_linear_collinearity_detected() {
        let names: Vec<String> = vec!["a".into(), "b".into()];
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let v = i as f64;
                vec![v, 2.0 * v]
            })
            .collect();
        let sample = SampleMatrix::from_rows(names, rows, DesignKind::External, 0).unwrap();
        let y: Vec<f64> = (0..20).map(|i| i as f64).collect();
        match fit_linear(&sample, &y) {
            Err(RegressionError::Collinearity { columns }) => assert!(!columns.is_empty()),
            other => panic!("expected collinearity error, got {other:?}"),
        }
    }

    #[test]
    fn src_single_input_is_signed_unity() {
        let space = uniform_space(&[(0.0, 1.0)]);
        let sample = monte_carlo(&space, 100, 3).unwrap();
        let y: Vec<f64> = sample.rows().map(|r| -5.0 * r[0]).collect();
        let fit = fit_linear(&sample, &y).unwrap();
        let s = src(&fit, &sample, &y).unwrap();
        assert!((s[0] + 1.0).abs() < 1e-10);
    }

    // Var(X2)/Var(X1) = 4, so the exact variance shares are 1/5 and 4/5.
    #[test]
    fn src_squared_matches_analytic_variance_shares() {
        let space = uniform_space(&[(0.0, 1.0), (0.0, 2.0)]);
        let sample = monte_carlo(&space, 100_000, 13).unwrap();
        let y: Vec<f64> = sample.rows().map(|r| r[0] + r[1]).collect();
        let fit = fit_linear(&sample, &y).unwrap();
        let s = src(&fit, &sample, &y).unwrap();
        assert!((s[0] * s[0] - 0.2).abs() < 0.01, "src1²={}", s[0] * s[0]);
        assert!((s[1] * s[1] - 0.8).abs() < 0.01, "src2²={}", s[1] * s[1]);
    }

    #[test]
    fn pcc_exact_additive_model() {
        let space = uniform_space(&[(0.0, 1.0), (0.0, 1.0), (0.0, 1.0)]);
        let sample = monte_carlo(&space, 500, 5).unwrap();
        let y: Vec<f64> = sample.rows().map(|r| r.iter().sum()).collect();
        for j in 0..3 {
            let p = pcc(&sample, &y, j).unwrap();
            assert!((p - 1.0).abs() < 1e-8, "pcc[{j}]={p}");
        }
    }

    #[test]
    fn pcc_irrelevant_input_near_zero() {
        let space = uniform_space(&[(0.0, 1.0), (0.0, 1.0)]);
        let sample = monte_carlo(&space, 10_000, 9).unwrap();
        let y: Vec<f64> = sample.rows().map(|r| r[1]).collect();
        assert!(pcc(&sample, &y, 0).unwrap().abs() < 0.05);
    }

    // For y = Σ x_i + ε with independent inputs,
    // PCC_j = 1/sqrt(1 + Var(ε)/Var(X_j)); with Var(X)=1/12 and sd(ε)=0.5
    // this is exactly 0.5.
    #[test]
    fn pcc_with_noise_matches_closed_form() {
        let space = uniform_space(&[(0.0, 1.0), (0.0, 1.0)]);
        let sample = monte_carlo(&space, 20_000, 17).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let y: Vec<f64> = sample
            .rows()
            .map(|r| {
                // Box-Muller normal noise with sd 0.5.
                let (u1, u2): (f64, f64) = (rng.gen(), rng.gen());
                let z = (-2.0 * u1.max(1e-300).ln()).sqrt()
                    * (2.0 * std::f64::consts::PI * u2).cos();
                r[0] + r[1] + 0.5 * z
            })
            .collect();
        let p = pcc(&sample, &y, 0).unwrap();
        assert!((p - 0.5).abs() < 0.03, "pcc={p}");
        // More noise, lower partial correlation.
        let y_noisier: Vec<f64> = sample
            .rows()
            .zip(&y)
            .map(|(r, yi)| yi + 2.0 * (yi - r[0] - r[1]))
            .collect();
        let p2 = pcc(&sample, &y_noisier, 0).unwrap();
        assert!(p2 < p);
    }

    #[test]
    fn rank_transform_basic_and_ties() {
        assert_eq!(rank_transform(&[3.2, 1.1, 7.7]), vec![2.0, 1.0, 3.0]);
        assert_eq!(rank_transform(&[1.0, 2.0, 2.0]), vec![1.0, 2.5, 2.5]);
        let x: Vec<f64> = vec![0.3, -1.2, 2.5, 0.9];
        let ex: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        assert_eq!(rank_transform(&x), rank_transform(&ex));
    }

    #[test]
    fn q2_perfect_and_mean_predictor() {
        let y = vec![1.0, 2.0, 3.0, 4.0];
        assert_eq!(q2(&y, &y).unwrap(), 1.0);
        let mean_pred = vec![2.5; 4];
        assert_eq!(q2(&mean_pred, &y).unwrap(), 0.0);
        assert!(matches!(q2(&[1.0, 1.0], &[5.0, 5.0]), Err(RegressionError::ZeroTestVariance)));
    }

    #[test]
    fn rank_indices_invariant_under_monotone_transforms() {
        let space = uniform_space(&[(0.1, 1.0), (0.1, 1.0)]);
        let sample = monte_carlo(&space, 400, 31).unwrap();
        let y: Vec<f64> = sample.rows().map(|r| r[0] * r[0] + 0.3 * r[1]).collect();
        let base = regression_indices(&sample, &y).unwrap();

        // Transform column 0 and the output monotonically.
        let rows: Vec<Vec<f64>> = sample.rows().map(|r| vec![r[0].exp(), r[1]]).collect();
        let warped =
            SampleMatrix::from_rows(sample.names().to_vec(), rows, sample.design(), 0).unwrap();
        let y_warped: Vec<f64> = y.iter().map(|v| (v + 10.0).ln()).collect();
        let after = regression_indices(&warped, &y_warped).unwrap();

        for (a, b) in base.spearman.iter().zip(&after.spearman) {
            assert!((a - b).abs() < 1e-10);
        }
        for (a, b) in base.srrc.iter().zip(&after.srrc) {
            assert!((a - b).abs() < 1e-10);
        }
        for (a, b) in base.prcc.iter().zip(&after.prcc) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn pcc_and_src_share_signs() {
        let space = uniform_space(&[(0.0, 1.0), (0.0, 1.0), (0.0, 1.0)]);
        let sample = monte_carlo(&space, 2000, 41).unwrap();
        let y: Vec<f64> = sample.rows().map(|r| 2.0 * r[0] - 1.5 * r[1] + 0.5 * r[2]).collect();
        let idx = regression_indices(&sample, &y).unwrap();
        for j in 0..3 {
            assert_eq!(idx.src[j].signum(), idx.pcc[j].signum(), "input {j}");
        }
    }

    #[test]
    fn fisher_ci_brackets_point_estimate() {
        let (lo, hi) = fisher_z_ci(0.6, 100, 0.95);
        assert!(lo < 0.6 && 0.6 < hi);
        assert!(lo > 0.0);
    }
}
