//! Batch runner for third-party simulators.
//!
//! Protocol: the design is written as `design.csv` (header = input names,
//! one row per sample), the command is invoked once with the design path and
//! an output path appended as its final two arguments, and the output file
//! must contain one value per design row in a single `y` column.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::Command;

use crate::sampling::SampleMatrix;

use super::{EvalError, EvaluationSet};

/// Description of an external batch model.
#[derive(Debug, Clone)]
pub struct ExternalModel {
    /// Program followed by its fixed arguments; the design and output paths
    /// are appended at invocation time.
    pub command: Vec<String>,
    /// Name given to the produced output column.
    pub output_name: String,
    /// Whether the output file starts with a `y` header line.
    pub output_has_header: bool,
    /// Working directory for the exchange files; a fresh temporary directory
    /// when absent.
    pub workdir: Option<PathBuf>,
}

impl ExternalModel {
    pub fn new(command: Vec<String>, output_name: impl Into<String>) -> Self {
        Self {
            command,
            output_name: output_name.into(),
            output_has_header: true,
            workdir: None,
        }
    }
}

/// Run the external command once over the whole design.
pub fn run_external(model: &ExternalModel, sample: &SampleMatrix) -> Result<EvaluationSet, EvalError> {
    if model.command.is_empty() {
        return Err(EvalError::External("empty command line".to_string()));
    }
    let tmp;
    let dir = match &model.workdir {
        Some(d) => d.clone(),
        None => {
            tmp = std::env::temp_dir().join(format!(
                "gsa-ext-{}-{}",
                std::process::id(),
                std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_nanos())
                    .unwrap_or(0)
            ));
            fs::create_dir_all(&tmp).map_err(|e| EvalError::Io(e.to_string()))?;
            tmp
        }
    };
    let design_path = dir.join("design.csv");
    let output_path = dir.join("output.csv");

    write_design_csv(&design_path, sample)?;

    let status_output = Command::new(&model.command[0])
        .args(&model.command[1..])
        .arg(&design_path)
        .arg(&output_path)
        .output()
        .map_err(|e| EvalError::External(format!("failed to launch `{}`: {e}", model.command[0])))?;

    if !status_output.status.success() {
        let stderr = String::from_utf8_lossy(&status_output.stderr);
        return Err(EvalError::External(format!(
            "`{}` exited with status {}: {}",
            model.command[0],
            status_output
                .status
                .code()
                .map(|c| c.to_string())
                .unwrap_or_else(|| "signal".to_string()),
            stderr.trim()
        )));
    }

    let values = read_output_csv(&output_path, model.output_has_header)?;
    if values.len() != sample.n_rows() {
        return Err(EvalError::Protocol(format!(
            "output row count mismatch: expected {}, got {}",
            sample.n_rows(),
            values.len()
        )));
    }
    Ok(EvaluationSet::new(
        sample.clone(),
        vec![(model.output_name.clone(), values)],
        format!("external:{}", model.command.join(" ")),
    ))
}

fn write_design_csv(path: &PathBuf, sample: &SampleMatrix) -> Result<(), EvalError> {
    let file = fs::File::create(path).map_err(|e| EvalError::Io(e.to_string()))?;
    let mut w = std::io::BufWriter::new(file);
    let io_err = |e: std::io::Error| EvalError::Io(e.to_string());
    writeln!(w, "{}", sample.names().join(",")).map_err(io_err)?;
    for row in sample.rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(",")).map_err(io_err)?;
    }
    Ok(())
}

fn read_output_csv(path: &PathBuf, has_header: bool) -> Result<Vec<f64>, EvalError> {
    let content = fs::read_to_string(path).map_err(|e| {
        EvalError::Protocol(format!("cannot read output file {}: {e}", path.display()))
    })?;
    let mut values = Vec::new();
    for (k, line) in content.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if k == 0 && has_header {
            if line != "y" {
                return Err(EvalError::Protocol(format!(
                    "expected header `y` in output file, got `{line}`"
                )));
            }
            continue;
        }
        let v: f64 = line.parse().map_err(|_| {
            EvalError::Protocol(format!("line {}: cannot parse `{line}` as a number", k + 1))
        })?;
        values.push(v);
    }
    Ok(values)
}
