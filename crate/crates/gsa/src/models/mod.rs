//! Evaluable models: the flood benchmark, analytic test functions, fixed-input
//! wrappers and the external-process runner, plus the row-wise evaluation
//! driver that joins a design with its outputs.

mod external;
mod flood;

pub use external::{run_external, ExternalModel};
pub use flood::{
    cost_from_overflow, flood_fixed_nominals, flood_overflow, flood_space, flood_space_reduced,
    FloodModel, FloodOutput, FLOOD_INPUT_NAMES,
};

use rayon::prelude::*;
use thiserror::Error;

use crate::sampling::SampleMatrix;

/// Errors from a single model evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("parameter outside model domain: {0}")]
    Domain(String),
    #[error("singular configuration: {0}")]
    Singularity(String),
    #[error("model expected {expected} inputs, got {got}")]
    Arity { expected: usize, got: usize },
}

/// Errors from evaluating a whole design.
#[derive(Debug, Error)]
pub enum EvalError {
    #[error("design is missing model input columns: {missing:?}")]
    Schema { missing: Vec<String> },
    #[error("{} row(s) failed evaluation; first: row {} ({})", failures.len(), failures[0].0, failures[0].1)]
    RowFailures { failures: Vec<(usize, ModelError)> },
    #[error("external model failed: {0}")]
    External(String),
    #[error("output protocol violation: {0}")]
    Protocol(String),
    #[error("i/o error: {0}")]
    Io(String),
}

/// A deterministic scalar-output model evaluable row by row.
pub trait Model: Sync {
    /// Name of the produced output column.
    fn output_name(&self) -> &str;

    /// Input column names, in the order `eval_row` expects them.
    fn required_inputs(&self) -> Vec<String>;

    /// Evaluate one input row (ordered as `required_inputs`).
    fn eval_row(&self, values: &[f64]) -> Result<f64, ModelError>;
}

/// A design matrix joined with one or more named output vectors.
///
/// Output vector `i` corresponds to sample row `i`; this pairing is preserved
/// under parallel evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationSet {
    sample: SampleMatrix,
    outputs: Vec<(String, Vec<f64>)>,
    provenance: String,
}

impl EvaluationSet {
    pub fn new(
        sample: SampleMatrix,
        outputs: Vec<(String, Vec<f64>)>,
        provenance: impl Into<String>,
    ) -> Self {
        for (name, values) in &outputs {
            assert_eq!(
                values.len(),
                sample.n_rows(),
                "output `{name}` length must match sample rows"
            );
        }
        Self { sample, outputs, provenance: provenance.into() }
    }

    pub fn sample(&self) -> &SampleMatrix {
        &self.sample
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn output_names(&self) -> Vec<&str> {
        self.outputs.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn output(&self, name: &str) -> Option<&[f64]> {
        self.outputs
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    /// The sole output vector, when exactly one exists.
    pub fn single_output(&self) -> Option<(&str, &[f64])> {
        match self.outputs.as_slice() {
            [(name, values)] => Some((name.as_str(), values.as_slice())),
            _ => None,
        }
    }

    pub fn add_output(&mut self, name: impl Into<String>, values: Vec<f64>) {
        assert_eq!(values.len(), self.sample.n_rows());
        self.outputs.push((name.into(), values));
    }
}

/// Analytic test functions, addressable by formula id from configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticModel {
    /// `Y = intercept + Σ coeffs[j] · X_j`.
    Linear { inputs: Vec<String>, intercept: f64, coeffs: Vec<f64> },
    /// `Y = Π X_j`.
    Product { inputs: Vec<String> },
}

impl Model for AnalyticModel {
    fn output_name(&self) -> &str {
        "y"
    }

    fn required_inputs(&self) -> Vec<String> {
        match self {
            AnalyticModel::Linear { inputs, .. } | AnalyticModel::Product { inputs } => {
                inputs.clone()
            }
        }
    }

    fn eval_row(&self, values: &[f64]) -> Result<f64, ModelError> {
        match self {
            AnalyticModel::Linear { intercept, coeffs, .. } => {
                if values.len() != coeffs.len() {
                    return Err(ModelError::Arity { expected: coeffs.len(), got: values.len() });
                }
                Ok(intercept + coeffs.iter().zip(values).map(|(c, x)| c * x).sum::<f64>())
            }
            AnalyticModel::Product { inputs } => {
                if values.len() != inputs.len() {
                    return Err(ModelError::Arity { expected: inputs.len(), got: values.len() });
                }
                Ok(values.iter().product())
            }
        }
    }
}

/// A model defined by a closure; used for metamodels and tests.
pub struct FnModel<F: Fn(&[f64]) -> Result<f64, ModelError> + Sync> {
    output_name: String,
    inputs: Vec<String>,
    f: F,
}

impl<F: Fn(&[f64]) -> Result<f64, ModelError> + Sync> FnModel<F> {
    pub fn new(output_name: impl Into<String>, inputs: Vec<String>, f: F) -> Self {
        Self { output_name: output_name.into(), inputs, f }
    }
}

impl<F: Fn(&[f64]) -> Result<f64, ModelError> + Sync> Model for FnModel<F> {
    fn output_name(&self) -> &str {
        &self.output_name
    }

    fn required_inputs(&self) -> Vec<String> {
        self.inputs.clone()
    }

    fn eval_row(&self, values: &[f64]) -> Result<f64, ModelError> {
        (self.f)(values)
    }
}

/// Wraps a model, holding some of its inputs at fixed values; the wrapped
/// model only requires the remaining columns.
pub struct FixedInputs<M: Model> {
    inner: M,
    fixed: Vec<(String, f64)>,
}

impl<M: Model> FixedInputs<M> {
    pub fn new(inner: M, fixed: Vec<(String, f64)>) -> Self {
        Self { inner, fixed }
    }
}

impl<M: Model> Model for FixedInputs<M> {
    fn output_name(&self) -> &str {
        self.inner.output_name()
    }

    fn required_inputs(&self) -> Vec<String> {
        self.inner
            .required_inputs()
            .into_iter()
            .filter(|name| !self.fixed.iter().any(|(f, _)| f == name))
            .collect()
    }

    fn eval_row(&self, values: &[f64]) -> Result<f64, ModelError> {
        let free = self.required_inputs();
        let mut full = Vec::with_capacity(self.inner.required_inputs().len());
        let mut it = values.iter();
        for name in self.inner.required_inputs() {
            if let Some((_, v)) = self.fixed.iter().find(|(f, _)| *f == name) {
                full.push(*v);
            } else {
                full.push(*it.next().ok_or(ModelError::Arity {
                    expected: free.len(),
                    got: values.len(),
                })?);
            }
        }
        self.inner.eval_row(&full)
    }
}

/// Evaluate a model over every row of a design.
///
/// Rows fan out over the current rayon pool; outputs are indexed by input row
/// so the result is identical to a serial pass. Per-row failures are all
/// collected before reporting.
pub fn evaluate(model: &dyn Model, sample: &SampleMatrix) -> Result<EvaluationSet, EvalError> {
    let required = model.required_inputs();
    let mut indices = Vec::with_capacity(required.len());
    let mut missing = Vec::new();
    for name in &required {
        match sample.column_index(name) {
            Some(j) => indices.push(j),
            None => missing.push(name.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(EvalError::Schema { missing });
    }

    let results: Vec<Result<f64, ModelError>> = (0..sample.n_rows())
        .into_par_iter()
        .map(|i| {
            let row = sample.row(i);
            let ordered: Vec<f64> = indices.iter().map(|&j| row[j]).collect();
            model.eval_row(&ordered)
        })
        .collect();

    let mut outputs = Vec::with_capacity(sample.n_rows());
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => outputs.push(v),
            Err(e) => failures.push((i, e)),
        }
    }
    if !failures.is_empty() {
        return Err(EvalError::RowFailures { failures });
    }
    Ok(EvaluationSet::new(
        sample.clone(),
        vec![(model.output_name().to_string(), outputs)],
        model.output_name().to_string(),
    ))
}
