//! Exploration datasets for human inspection: scatter data, binned
//! main-effect curves and cobweb (parallel-coordinates) datasets with
//! extreme-output highlighting. Rendering is left to external tools; this
//! module only produces the CSV-ready data.

use std::io::Write;

use thiserror::Error;

use crate::models::EvaluationSet;
use crate::regression::rank_transform;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReportError {
    #[error("evaluation set missing output `{0}`")]
    UnknownOutput(String),
    #[error("too few rows for {bins} bins ({rows} rows); use at most {max_bins} bins")]
    TooFewRowsPerBin { bins: usize, rows: usize, max_bins: usize },
    #[error("top fraction {0} outside (0, 1]")]
    BadFraction(f64),
}

/// One bin of a main-effect curve.
#[derive(Debug, Clone, PartialEq)]
pub struct MainEffectBin {
    /// Bin center in probability space, (k + 0.5)/bins.
    pub center_p: f64,
    /// Mean physical input value inside the bin.
    pub center_x: f64,
    /// Bin mean of the output minus the grand mean.
    pub effect: f64,
    pub count: usize,
}

/// Binned estimate of the centered conditional mean of the output given one
/// input.
#[derive(Debug, Clone, PartialEq)]
pub struct MainEffectCurve {
    pub input: String,
    pub bins: Vec<MainEffectBin>,
    /// Count-weighted variance of the bin means; a crude first-order
    /// variance-share numerator, not a supported Sobol' estimator.
    pub variance_of_bin_means: f64,
}

/// Equal-probability-bin main effects for every input column.
pub fn main_effects(
    eval: &EvaluationSet,
    output: &str,
    bins: usize,
) -> Result<Vec<MainEffectCurve>, ReportError> {
    let y = eval
        .output(output)
        .ok_or_else(|| ReportError::UnknownOutput(output.to_string()))?;
    let sample = eval.sample();
    let n = sample.n_rows();
    if bins == 0 || n < 5 * bins {
        return Err(ReportError::TooFewRowsPerBin { bins, rows: n, max_bins: n / 5 });
    }
    let grand_mean = y.iter().sum::<f64>() / n as f64;
    let mut curves = Vec::with_capacity(sample.n_cols());
    for j in 0..sample.n_cols() {
        let col = sample.column(j);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| col[a].partial_cmp(&col[b]).unwrap());
        let mut curve_bins = Vec::with_capacity(bins);
        let mut weighted_var = 0.0;
        for k in 0..bins {
            let start = k * n / bins;
            let end = (k + 1) * n / bins;
            let members = &order[start..end];
            let count = members.len();
            let mean_x = members.iter().map(|&i| col[i]).sum::<f64>() / count as f64;
            let mean_y = members.iter().map(|&i| y[i]).sum::<f64>() / count as f64;
            let effect = mean_y - grand_mean;
            weighted_var += count as f64 * effect * effect;
            curve_bins.push(MainEffectBin {
                center_p: (k as f64 + 0.5) / bins as f64,
                center_x: mean_x,
                effect,
                count,
            });
        }
        curves.push(MainEffectCurve {
            input: sample.names()[j].clone(),
            bins: curve_bins,
            variance_of_bin_means: weighted_var / n as f64,
        });
    }
    Ok(curves)
}

/// Parallel-coordinates dataset: all columns rank-normalized to (0, 1], with
/// the rows carrying the `top_fraction` largest outputs flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct CobwebDataset {
    /// Input names followed by the output name.
    pub columns: Vec<String>,
    /// One normalized row per simulation.
    pub rows: Vec<Vec<f64>>,
    pub highlight: Vec<bool>,
    pub top_fraction: f64,
    pub output: String,
}

pub fn cobweb(
    eval: &EvaluationSet,
    output: &str,
    top_fraction: f64,
) -> Result<CobwebDataset, ReportError> {
    if !(top_fraction > 0.0 && top_fraction <= 1.0) {
        return Err(ReportError::BadFraction(top_fraction));
    }
    let y = eval
        .output(output)
        .ok_or_else(|| ReportError::UnknownOutput(output.to_string()))?;
    let sample = eval.sample();
    let n = sample.n_rows();

    let mut columns: Vec<String> = sample.names().to_vec();
    columns.push(output.to_string());
    let mut normalized: Vec<Vec<f64>> = (0..sample.n_cols())
        .map(|j| rank_transform(&sample.column(j)))
        .collect();
    normalized.push(rank_transform(y));
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| normalized.iter().map(|c| c[i] / n as f64).collect())
        .collect();

    let k = ((top_fraction * n as f64).round() as usize).clamp(1, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| y[b].partial_cmp(&y[a]).unwrap());
    let mut highlight = vec![false; n];
    for &i in &order[..k] {
        highlight[i] = true;
    }
    Ok(CobwebDataset {
        columns,
        rows,
        highlight,
        top_fraction,
        output: output.to_string(),
    })
}

/// Long-format scatter export: `input,x,y` rows for every input column.
pub fn write_scatter_csv(
    eval: &EvaluationSet,
    output: &str,
    w: &mut impl Write,
) -> Result<(), std::io::Error> {
    let y = eval.output(output).expect("output exists");
    writeln!(w, "input,x,y")?;
    let sample = eval.sample();
    for j in 0..sample.n_cols() {
        let name = &sample.names()[j];
        for (i, &yi) in y.iter().enumerate() {
            writeln!(w, "{name},{},{yi}", sample.get(i, j))?;
        }
    }
    Ok(())
}

/// Main-effects export: `input,bin_center_p,bin_center_x,effect,count`.
pub fn write_main_effects_csv(
    curves: &[MainEffectCurve],
    w: &mut impl Write,
) -> Result<(), std::io::Error> {
    writeln!(w, "input,bin_center_p,bin_center_x,effect,count")?;
    for curve in curves {
        for bin in &curve.bins {
            writeln!(
                w,
                "{},{},{},{},{}",
                curve.input, bin.center_p, bin.center_x, bin.effect, bin.count
            )?;
        }
    }
    Ok(())
}

/// Cobweb export: one normalized column per variable plus a `highlight` 0/1
/// column.
pub fn write_cobweb_csv(dataset: &CobwebDataset, w: &mut impl Write) -> Result<(), std::io::Error> {
    writeln!(w, "{},highlight", dataset.columns.join(","))?;
    for (row, &flag) in dataset.rows.iter().zip(&dataset.highlight) {
        let values: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{},{}", values.join(","), if flag { 1 } else { 0 })?;
    }
    Ok(())
}
