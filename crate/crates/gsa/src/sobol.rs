//! Variance-based sensitivity: first-order, second-order and total Sobol'
//! indices from pick-freeze designs, with bootstrap or repetition confidence
//! intervals.
//!
//! Estimation formulas, with `n` the base sample size and outputs centered by
//! the pooled mean of the A and B blocks:
//!
//! * first-order, Saltelli 2002 / Saltelli et al. 2010 form:
//!   `V_i = (1/n) Σ y_B (y_{AB(i)} − y_A)`;
//! * first-order, Janon–Monod (Janon et al. 2013), self-normalizing and
//!   preferable for large indices:
//!   `S_i = (⟨y_B y_{AB(i)}⟩ − m²) / (⟨(y_B² + y_{AB(i)}²)/2⟩ − m²)` with
//!   `m = ⟨(y_B + y_{AB(i)})/2⟩`;
//! * total, Jansen 1999: `V_Ti = (1/2n) Σ (y_A − y_{AB(i)})²`;
//! * total, Homma–Saltelli 1996: `V_Ti = Var(Y) − (1/n) Σ y_A y_{AB(i)}`;
//! * closed second-order from the extra B_A blocks:
//!   `V_{ij}^closed = (1/n) Σ y_{AB(i)} y_{BA(j)}`, then
//!   `S_ij = V_{ij}^closed/Var − S_i − S_j`.
//!
//! Negative estimates are reported as-is; truncation would bias CI coverage.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::models::EvaluationSet;
use crate::sampling::{PickFreezeBlock, PickFreezeDesign};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SobolError {
    #[error("evaluation set missing output `{0}`")]
    UnknownOutput(String),
    #[error("indices undefined: output variance is zero")]
    UndefinedIndices,
    #[error("incomplete design evaluation: expected {expected} rows, got {got}")]
    IncompleteDesign { expected: usize, got: usize },
    #[error("design was built without second-order blocks")]
    NoSecondOrderBlocks,
    #[error("invalid parameter: {0}")]
    BadParameter(String),
}

/// Estimator scheme selecting the first-order / total formula pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SobolEstimator {
    /// Saltelli first-order, Homma–Saltelli total.
    Saltelli,
    /// Saltelli first-order, Jansen total (the default pairing).
    Jansen,
    /// Janon–Monod first-order (for large indices), Jansen total.
    JanonMonod,
}

impl SobolEstimator {
    pub fn as_str(&self) -> &'static str {
        match self {
            SobolEstimator::Saltelli => "saltelli",
            SobolEstimator::Jansen => "jansen",
            SobolEstimator::JanonMonod => "janon_monod",
        }
    }

    /// Human-readable description of the formula pairing.
    pub fn describe(&self) -> &'static str {
        match self {
            SobolEstimator::Saltelli => "first-order: Saltelli; total: Homma-Saltelli",
            SobolEstimator::Jansen => "first-order: Saltelli; total: Jansen",
            SobolEstimator::JanonMonod => "first-order: Janon-Monod; total: Jansen",
        }
    }
}

/// Two-sided percentile interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ci {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
}

/// A point estimate with optional uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexEstimate {
    pub value: f64,
    pub std_error: Option<f64>,
    pub ci: Option<Ci>,
}

impl IndexEstimate {
    fn point(value: f64) -> Self {
        Self { value, std_error: None, ci: None }
    }
}

/// Per-input first-order and total indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SobolInput {
    pub name: String,
    pub first_order: IndexEstimate,
    pub total: IndexEstimate,
}

/// Result of a Sobol' estimation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SobolResult {
    pub inputs: Vec<SobolInput>,
    /// Second-order pair indices `(i, j) → S_ij`, when estimated.
    pub pairs: Vec<((usize, usize), IndexEstimate)>,
    pub estimator: SobolEstimator,
    pub base_n: usize,
    /// Pooled output variance estimate D(Y).
    pub output_variance: f64,
}

/// Output blocks of a pick-freeze evaluation, centered by the pooled A/B mean.
struct Blocks {
    y_a: Vec<f64>,
    y_b: Vec<f64>,
    y_ab: Vec<Vec<f64>>,
    y_ba: Option<Vec<Vec<f64>>>,
    /// Pooled A/B mean removed from every block; kept as the output scale for
    /// the degenerate-variance check.
    pooled_mean: f64,
}

/// Variance indistinguishable from roundoff at the output's own scale; ratio
/// indices are undefined there.
fn degenerate_variance(var: f64, mean: f64) -> bool {
    var <= 1e-20 * (var + mean * mean)
}

fn extract_blocks(
    design: &PickFreezeDesign,
    eval: &EvaluationSet,
    output: &str,
) -> Result<Blocks, SobolError> {
    let y = eval
        .output(output)
        .ok_or_else(|| SobolError::UnknownOutput(output.to_string()))?;
    let expected = design.sample().n_rows();
    if y.len() != expected {
        return Err(SobolError::IncompleteDesign { expected, got: y.len() });
    }
    let slice = |block: PickFreezeBlock| -> Vec<f64> {
        let r = design.block_rows(block);
        y[r].to_vec()
    };
    let mut y_a = slice(PickFreezeBlock::A);
    let mut y_b = slice(PickFreezeBlock::B);
    let d = design.dimension();
    let mut y_ab: Vec<Vec<f64>> =
        (0..d).map(|i| slice(PickFreezeBlock::ASwapped(i))).collect();
    let mut y_ba = if design.has_second_order() {
        Some((0..d).map(|i| slice(PickFreezeBlock::BSwapped(i))).collect::<Vec<_>>())
    } else {
        None
    };

    // Center everything by the pooled A/B mean; makes the ratio estimators
    // exactly invariant to affine output rescaling (up to roundoff).
    let n = design.base_n() as f64;
    let pooled_mean = (y_a.iter().sum::<f64>() + y_b.iter().sum::<f64>()) / (2.0 * n);
    let center = |v: &mut Vec<f64>| v.iter_mut().for_each(|x| *x -= pooled_mean);
    center(&mut y_a);
    center(&mut y_b);
    y_ab.iter_mut().for_each(center);
    if let Some(ba) = y_ba.as_mut() {
        ba.iter_mut().for_each(center);
    }
    Ok(Blocks { y_a, y_b, y_ab, y_ba, pooled_mean })
}

/// Index accessor: identity, or a bootstrap resample of the base rows.
#[derive(Clone, Copy)]
enum RowSet<'a> {
    All(usize),
    Resampled(&'a [usize]),
}

impl RowSet<'_> {
    fn len(&self) -> usize {
        match self {
            RowSet::All(n) => *n,
            RowSet::Resampled(idx) => idx.len(),
        }
    }

    fn map(&self, k: usize) -> usize {
        match self {
            RowSet::All(_) => k,
            RowSet::Resampled(idx) => idx[k],
        }
    }
}

fn mean_over(rows: RowSet, f: impl Fn(usize) -> f64) -> f64 {
    let n = rows.len();
    (0..n).map(|k| f(rows.map(k))).sum::<f64>() / n as f64
}

/// Pooled A/B variance over the selected rows (values already centered).
fn pooled_variance(blocks: &Blocks, rows: RowSet) -> f64 {
    let m = 0.5 * (mean_over(rows, |k| blocks.y_a[k]) + mean_over(rows, |k| blocks.y_b[k]));
    0.5 * (mean_over(rows, |k| (blocks.y_a[k] - m).powi(2))
        + mean_over(rows, |k| (blocks.y_b[k] - m).powi(2)))
}

fn first_order_at(blocks: &Blocks, rows: RowSet, i: usize, est: SobolEstimator, var: f64) -> f64 {
    let yb = &blocks.y_b;
    let yab = &blocks.y_ab[i];
    match est {
        SobolEstimator::Saltelli | SobolEstimator::Jansen => {
            mean_over(rows, |k| yb[k] * (yab[k] - blocks.y_a[k])) / var
        }
        SobolEstimator::JanonMonod => {
            let m = mean_over(rows, |k| 0.5 * (yb[k] + yab[k]));
            let num = mean_over(rows, |k| yb[k] * yab[k]) - m * m;
            let den = mean_over(rows, |k| 0.5 * (yb[k] * yb[k] + yab[k] * yab[k])) - m * m;
            num / den
        }
    }
}

fn total_at(blocks: &Blocks, rows: RowSet, i: usize, est: SobolEstimator, var: f64) -> f64 {
    let ya = &blocks.y_a;
    let yab = &blocks.y_ab[i];
    match est {
        SobolEstimator::Jansen | SobolEstimator::JanonMonod => {
            mean_over(rows, |k| 0.5 * (ya[k] - yab[k]).powi(2)) / var
        }
        SobolEstimator::Saltelli => 1.0 - mean_over(rows, |k| ya[k] * yab[k]) / var,
    }
}

fn pair_at(
    blocks: &Blocks,
    rows: RowSet,
    i: usize,
    j: usize,
    est: SobolEstimator,
    var: f64,
) -> f64 {
    let ba = blocks.y_ba.as_ref().expect("second-order blocks present");
    let closed = mean_over(rows, |k| blocks.y_ab[i][k] * ba[j][k]) / var;
    let si = first_order_at(blocks, rows, i, est, var);
    let sj = first_order_at(blocks, rows, j, est, var);
    closed - si - sj
}

/// Estimate first-order and total indices for every input.
pub fn estimate_sobol(
    design: &PickFreezeDesign,
    eval: &EvaluationSet,
    output: &str,
    estimator: SobolEstimator,
) -> Result<SobolResult, SobolError> {
    let blocks = extract_blocks(design, eval, output)?;
    let rows = RowSet::All(design.base_n());
    let var = pooled_variance(&blocks, rows);
    if degenerate_variance(var, blocks.pooled_mean) {
        return Err(SobolError::UndefinedIndices);
    }
    let names = design.sample().names();
    let inputs = (0..design.dimension())
        .map(|i| SobolInput {
            name: names[i].clone(),
            first_order: IndexEstimate::point(first_order_at(&blocks, rows, i, estimator, var)),
            total: IndexEstimate::point(total_at(&blocks, rows, i, estimator, var)),
        })
        .collect();
    Ok(SobolResult {
        inputs,
        pairs: Vec::new(),
        estimator,
        base_n: design.base_n(),
        output_variance: var,
    })
}

/// Estimate all second-order pair indices; requires a design built with
/// second-order blocks.
pub fn estimate_second_order(
    design: &PickFreezeDesign,
    eval: &EvaluationSet,
    output: &str,
    estimator: SobolEstimator,
) -> Result<Vec<((usize, usize), IndexEstimate)>, SobolError> {
    if !design.has_second_order() {
        return Err(SobolError::NoSecondOrderBlocks);
    }
    let blocks = extract_blocks(design, eval, output)?;
    let rows = RowSet::All(design.base_n());
    let var = pooled_variance(&blocks, rows);
    if degenerate_variance(var, blocks.pooled_mean) {
        return Err(SobolError::UndefinedIndices);
    }
    let d = design.dimension();
    let mut pairs = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            pairs.push((
                (i, j),
                IndexEstimate::point(pair_at(&blocks, rows, i, j, estimator, var)),
            ));
        }
    }
    Ok(pairs)
}

/// Bootstrap confidence intervals: the base row index set is resampled with
/// replacement and applied consistently across all blocks, preserving the
/// pick-freeze coupling.
pub fn bootstrap_confidence(
    design: &PickFreezeDesign,
    eval: &EvaluationSet,
    output: &str,
    estimator: SobolEstimator,
    replicates: usize,
    level: f64,
    seed: u64,
) -> Result<SobolResult, SobolError> {
    if replicates < 2 {
        return Err(SobolError::BadParameter(format!(
            "bootstrap needs at least 2 replicates, got {replicates}"
        )));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(SobolError::BadParameter(format!("level {level} outside (0, 1)")));
    }
    let mut result = estimate_sobol(design, eval, output, estimator)?;
    if design.has_second_order() {
        result.pairs = estimate_second_order(design, eval, output, estimator)?;
    }
    let blocks = extract_blocks(design, eval, output)?;
    let n = design.base_n();
    let d = design.dimension();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut first = vec![Vec::with_capacity(replicates); d];
    let mut total = vec![Vec::with_capacity(replicates); d];
    let mut pairs: Vec<Vec<f64>> = vec![Vec::with_capacity(replicates); result.pairs.len()];
    let mut idx = vec![0usize; n];
    for _ in 0..replicates {
        for slot in idx.iter_mut() {
            *slot = rng.gen_range(0..n);
        }
        let rows = RowSet::Resampled(&idx);
        let var = pooled_variance(&blocks, rows);
        if degenerate_variance(var, blocks.pooled_mean) {
            return Err(SobolError::UndefinedIndices);
        }
        for i in 0..d {
            first[i].push(first_order_at(&blocks, rows, i, estimator, var));
            total[i].push(total_at(&blocks, rows, i, estimator, var));
        }
        for (p, ((i, j), _)) in result.pairs.iter().enumerate() {
            pairs[p].push(pair_at(&blocks, rows, *i, *j, estimator, var));
        }
    }

    let attach = |est: &mut IndexEstimate, reps: &mut Vec<f64>| {
        let m = reps.iter().sum::<f64>() / reps.len() as f64;
        let se =
            (reps.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (reps.len() as f64 - 1.0)).sqrt();
        reps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let alpha = (1.0 - level) / 2.0;
        est.std_error = Some(se);
        est.ci = Some(Ci {
            lo: percentile(reps, alpha).min(est.value),
            hi: percentile(reps, 1.0 - alpha).max(est.value),
            level,
        });
    };
    for (i, input) in result.inputs.iter_mut().enumerate() {
        attach(&mut input.first_order, &mut first[i]);
        attach(&mut input.total, &mut total[i]);
    }
    for (p, (_, est)) in result.pairs.iter_mut().enumerate() {
        attach(est, &mut pairs[p]);
    }
    Ok(result)
}

/// Percentile intervals from repeated independent estimations (the caller
/// runs the full design/evaluate/estimate pipeline once per repetition).
pub fn repetition_confidence(
    repetitions: &[SobolResult],
    level: f64,
) -> Result<SobolResult, SobolError> {
    if repetitions.len() < 2 {
        return Err(SobolError::BadParameter(format!(
            "repetition intervals need at least 2 runs, got {}",
            repetitions.len()
        )));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(SobolError::BadParameter(format!("level {level} outside (0, 1)")));
    }
    let d = repetitions[0].inputs.len();
    if repetitions.iter().any(|r| r.inputs.len() != d) {
        return Err(SobolError::BadParameter(
            "repetitions have mismatched input counts".to_string(),
        ));
    }
    let alpha = (1.0 - level) / 2.0;
    let summarize = |values: Vec<f64>| -> IndexEstimate {
        let m = values.iter().sum::<f64>() / values.len() as f64;
        let se = (values.iter().map(|v| (v - m).powi(2)).sum::<f64>()
            / (values.len() as f64 - 1.0))
            .sqrt();
        let mut sorted = values;
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        IndexEstimate {
            value: m,
            std_error: Some(se),
            ci: Some(Ci { lo: percentile(&sorted, alpha), hi: percentile(&sorted, 1.0 - alpha), level }),
        }
    };
    let inputs = (0..d)
        .map(|i| SobolInput {
            name: repetitions[0].inputs[i].name.clone(),
            first_order: summarize(
                repetitions.iter().map(|r| r.inputs[i].first_order.value).collect(),
            ),
            total: summarize(repetitions.iter().map(|r| r.inputs[i].total.value).collect()),
        })
        .collect();
    Ok(SobolResult {
        inputs,
        pairs: Vec::new(),
        estimator: repetitions[0].estimator,
        base_n: repetitions[0].base_n,
        output_variance: repetitions.iter().map(|r| r.output_variance).sum::<f64>()
            / repetitions.len() as f64,
    })
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let pos = p * (n as f64 - 1.0);
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi.min(n - 1)] * frac
}
