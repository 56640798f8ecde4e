//! Artifact persistence: design/evaluation CSV files with provenance
//! comments and the design metadata sidecar.
//!
//! CSV convention: lines starting with `#` carry provenance (config hash,
//! seed) and are skipped on read; the first remaining line is the header.

use std::path::Path;

use serde::{Deserialize, Serialize};

use gsa::models::EvaluationSet;
use gsa::sampling::{DesignKind, SampleMatrix};

use crate::CliError;

/// Sidecar describing how a persisted design was generated, enough to
/// rebuild its structure for analysis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignMeta {
    pub config_hash: String,
    pub seed: u64,
    pub design: String,
    pub names: Vec<String>,
    pub n_rows: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub morris: Option<MorrisMeta>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pick_freeze: Option<PickFreezeMeta>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MorrisMeta {
    pub r: usize,
    pub levels: usize,
    pub delta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PickFreezeMeta {
    pub base_n: usize,
    pub second_order: bool,
}

pub fn write_meta(path: &Path, meta: &DesignMeta) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(meta)
        .map_err(|e| CliError::config(format!("cannot serialize metadata: {e}")))?;
    std::fs::write(path, text + "\n")
        .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))
}

pub fn read_meta(path: &Path) -> Result<DesignMeta, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("corrupt metadata {}: {e}", path.display())))
}

fn provenance_lines(config_hash: &str, seed: u64) -> String {
    format!("# config_hash={config_hash}\n# seed={seed}\n")
}

pub fn write_design_csv(
    path: &Path,
    sample: &SampleMatrix,
    config_hash: &str,
) -> Result<(), CliError> {
    let mut text = provenance_lines(config_hash, sample.seed());
    text.push_str(&sample.names().join(","));
    text.push('\n');
    for row in sample.rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        text.push_str(&line.join(","));
        text.push('\n');
    }
    std::fs::write(path, text)
        .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))
}

pub fn write_eval_csv(
    path: &Path,
    eval: &EvaluationSet,
    config_hash: &str,
) -> Result<(), CliError> {
    let sample = eval.sample();
    let mut text = provenance_lines(config_hash, sample.seed());
    let mut header: Vec<String> = sample.names().to_vec();
    header.extend(eval.output_names().iter().map(|s| s.to_string()));
    text.push_str(&header.join(","));
    text.push('\n');
    let outputs: Vec<&[f64]> = eval
        .output_names()
        .iter()
        .map(|n| eval.output(n).unwrap())
        .collect();
    for (i, row) in sample.rows().enumerate() {
        let mut line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        line.extend(outputs.iter().map(|col| col[i].to_string()));
        text.push_str(&line.join(","));
        text.push('\n');
    }
    std::fs::write(path, text)
        .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))
}

/// A parsed numeric CSV: header names and column-major values.
pub struct CsvTable {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }
}

pub fn read_csv(path: &Path) -> Result<CsvTable, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text
        .lines()
        .filter(|l| !l.trim_start().starts_with('#') && !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| CliError::config(format!("{}: empty file", path.display())))?;
    let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (k, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != names.len() {
            return Err(CliError::config(format!(
                "{}: row {} has {} fields, header has {}",
                path.display(),
                k + 1,
                fields.len(),
                names.len()
            )));
        }
        for (j, field) in fields.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                CliError::config(format!(
                    "{}: row {} column `{}`: cannot parse `{}`",
                    path.display(),
                    k + 1,
                    names[j],
                    field
                ))
            })?;
            columns[j].push(v);
        }
    }
    if columns[0].is_empty() {
        return Err(CliError::config(format!("{}: no data rows", path.display())));
    }
    Ok(CsvTable { names, columns })
}

/// Rebuild an evaluation set from a persisted eval.csv: the leading columns
/// must match the free input names exactly, the rest are outputs.
pub fn eval_from_csv(
    path: &Path,
    expected_inputs: &[String],
    design: DesignKind,
    seed: u64,
) -> Result<EvaluationSet, CliError> {
    let table = read_csv(path)?;
    if table.names.len() <= expected_inputs.len() {
        return Err(CliError::config(format!(
            "{}: expected input columns {:?} plus at least one output column, got {:?}",
            path.display(),
            expected_inputs,
            table.names
        )));
    }
    let (input_names, output_names) = table.names.split_at(expected_inputs.len());
    if input_names != expected_inputs {
        return Err(CliError::config(format!(
            "{}: input columns {:?} do not match the configured space {:?}",
            path.display(),
            input_names,
            expected_inputs
        )));
    }
    let d = expected_inputs.len();
    let n = table.n_rows();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..d).map(|j| table.columns[j][i]).collect())
        .collect();
    let sample = SampleMatrix::from_rows(expected_inputs.to_vec(), rows, design, seed)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let outputs: Vec<(String, Vec<f64>)> = output_names
        .iter()
        .enumerate()
        .map(|(k, name)| (name.clone(), table.columns[d + k].clone()))
        .collect();
    Ok(EvaluationSet::new(sample, outputs, format!("file:{}", path.display())))
}
