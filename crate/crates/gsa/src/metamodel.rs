//! Polynomial regression surrogates: fit, validate by leave-one-out Q², and
//! estimate Sobol' indices through the surrogate at negligible cost.
//!
//! Inputs are standardized (empirical mean and sd) before the basis is built,
//! which keeps the normal equations well conditioned at quadratic degree.

use std::fmt::Write as _;

use thiserror::Error;

use crate::distributions::InputSpace;
use crate::models::{evaluate, EvalError, EvaluationSet, Model, ModelError};
use crate::regression::{self, q2, RegressionError};
use crate::sampling::saltelli_design;
use crate::sobol::{estimate_sobol, SobolError, SobolEstimator, SobolResult};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetamodelError {
    #[error("evaluation set missing output `{0}`")]
    UnknownOutput(String),
    #[error("underdetermined fit: {terms} basis terms need more than {terms} rows, got {rows}")]
    Underdetermined { terms: usize, rows: usize },
    #[error(transparent)]
    Regression(#[from] RegressionError),
    #[error("metamodel inputs {expected:?} do not match space inputs {got:?}")]
    NameMismatch { expected: Vec<String>, got: Vec<String> },
    #[error("cannot parse metamodel text: {0}")]
    Parse(String),
}

/// One polynomial basis term over standardized inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisTerm {
    Linear(usize),
    Square(usize),
    Interaction(usize, usize),
}

/// Fit configuration: polynomial degree (1 or 2) and pairwise interactions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolySpec {
    pub degree: usize,
    pub interactions: bool,
}

impl PolySpec {
    pub fn linear() -> Self {
        Self { degree: 1, interactions: false }
    }

    pub fn quadratic_with_interactions() -> Self {
        Self { degree: 2, interactions: true }
    }

    fn terms(&self, d: usize) -> Vec<BasisTerm> {
        let mut terms: Vec<BasisTerm> = (0..d).map(BasisTerm::Linear).collect();
        if self.degree >= 2 {
            terms.extend((0..d).map(BasisTerm::Square));
        }
        if self.interactions {
            for i in 0..d {
                for j in (i + 1)..d {
                    terms.push(BasisTerm::Interaction(i, j));
                }
            }
        }
        terms
    }
}

/// A fitted polynomial surrogate; prediction is a pure function of inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Metamodel {
    output_name: String,
    input_names: Vec<String>,
    terms: Vec<BasisTerm>,
    intercept: f64,
    coefficients: Vec<f64>,
    means: Vec<f64>,
    sds: Vec<f64>,
    pub training_n: usize,
    pub r_squared: f64,
    pub loo_q2: Option<f64>,
}

impl Metamodel {
    pub fn input_names(&self) -> &[String] {
        &self.input_names
    }

    pub fn terms(&self) -> &[BasisTerm] {
        &self.terms
    }

    /// Predict at a physical-space input row (ordered as `input_names`).
    pub fn predict(&self, row: &[f64]) -> f64 {
        let z: Vec<f64> = row
            .iter()
            .zip(self.means.iter().zip(&self.sds))
            .map(|(x, (m, s))| (x - m) / s)
            .collect();
        self.intercept
            + self
                .terms
                .iter()
                .zip(&self.coefficients)
                .map(|(t, c)| c * term_value(*t, &z))
                .sum::<f64>()
    }

    /// Self-describing text serialization for reuse across invocations.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "gsa-metamodel v1").unwrap();
        writeln!(s, "output {}", self.output_name).unwrap();
        writeln!(s, "inputs {}", self.input_names.join(",")).unwrap();
        for (name, (m, sd)) in self.input_names.iter().zip(self.means.iter().zip(&self.sds)) {
            writeln!(s, "standardize {name} {m} {sd}").unwrap();
        }
        writeln!(s, "training_n {}", self.training_n).unwrap();
        writeln!(s, "r_squared {}", self.r_squared).unwrap();
        match self.loo_q2 {
            Some(q) => writeln!(s, "loo_q2 {q}").unwrap(),
            None => writeln!(s, "loo_q2 na").unwrap(),
        }
        writeln!(s, "term intercept {}", self.intercept).unwrap();
        for (t, c) in self.terms.iter().zip(&self.coefficients) {
            match t {
                BasisTerm::Linear(j) => writeln!(s, "term linear {j} {c}").unwrap(),
                BasisTerm::Square(j) => writeln!(s, "term square {j} {c}").unwrap(),
                BasisTerm::Interaction(i, j) => {
                    writeln!(s, "term interaction {i} {j} {c}").unwrap()
                }
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, MetamodelError> {
        let parse_err = |msg: String| MetamodelError::Parse(msg);
        // `#` lines are provenance comments added by tooling.
        let mut lines = text.lines().filter(|l| !l.trim_start().starts_with('#'));
        if lines.next() != Some("gsa-metamodel v1") {
            return Err(parse_err("missing `gsa-metamodel v1` header".to_string()));
        }
        let mut output_name = String::new();
        let mut input_names = Vec::new();
        let mut means = Vec::new();
        let mut sds = Vec::new();
        let mut training_n = 0usize;
        let mut r_squared = 0.0;
        let mut loo_q2 = None;
        let mut intercept = 0.0;
        let mut terms = Vec::new();
        let mut coefficients = Vec::new();
        for line in lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                ["output", name] => output_name = name.to_string(),
                ["inputs", names] => {
                    input_names = names.split(',').map(str::to_string).collect();
                }
                ["standardize", _name, m, s] => {
                    means.push(m.parse().map_err(|_| parse_err(format!("bad mean `{m}`")))?);
                    sds.push(s.parse().map_err(|_| parse_err(format!("bad sd `{s}`")))?);
                }
                ["training_n", n] => {
                    training_n = n.parse().map_err(|_| parse_err(format!("bad n `{n}`")))?;
                }
                ["r_squared", v] => {
                    r_squared = v.parse().map_err(|_| parse_err(format!("bad r² `{v}`")))?;
                }
                ["loo_q2", "na"] => loo_q2 = None,
                ["loo_q2", v] => {
                    loo_q2 =
                        Some(v.parse().map_err(|_| parse_err(format!("bad q² `{v}`")))?);
                }
                ["term", "intercept", c] => {
                    intercept = c.parse().map_err(|_| parse_err(format!("bad coef `{c}`")))?;
                }
                ["term", "linear", j, c] => {
                    terms.push(BasisTerm::Linear(
                        j.parse().map_err(|_| parse_err(format!("bad index `{j}`")))?,
                    ));
                    coefficients
                        .push(c.parse().map_err(|_| parse_err(format!("bad coef `{c}`")))?);
                }
                ["term", "square", j, c] => {
                    terms.push(BasisTerm::Square(
                        j.parse().map_err(|_| parse_err(format!("bad index `{j}`")))?,
                    ));
                    coefficients
                        .push(c.parse().map_err(|_| parse_err(format!("bad coef `{c}`")))?);
                }
                ["term", "interaction", i, j, c] => {
                    terms.push(BasisTerm::Interaction(
                        i.parse().map_err(|_| parse_err(format!("bad index `{i}`")))?,
                        j.parse().map_err(|_| parse_err(format!("bad index `{j}`")))?,
                    ));
                    coefficients
                        .push(c.parse().map_err(|_| parse_err(format!("bad coef `{c}`")))?);
                }
                [] => {}
                other => return Err(parse_err(format!("unrecognized line {other:?}"))),
            }
        }
        if output_name.is_empty() || input_names.is_empty() || means.len() != input_names.len() {
            return Err(parse_err("incomplete metamodel description".to_string()));
        }
        Ok(Self {
            output_name,
            input_names,
            terms,
            intercept,
            coefficients,
            means,
            sds,
            training_n,
            r_squared,
            loo_q2,
        })
    }
}

impl Model for Metamodel {
    fn output_name(&self) -> &str {
        &self.output_name
    }

    fn required_inputs(&self) -> Vec<String> {
        self.input_names.clone()
    }

    fn eval_row(&self, values: &[f64]) -> Result<f64, ModelError> {
        if values.len() != self.input_names.len() {
            return Err(ModelError::Arity { expected: self.input_names.len(), got: values.len() });
        }
        Ok(self.predict(values))
    }
}

fn term_value(term: BasisTerm, z: &[f64]) -> f64 {
    match term {
        BasisTerm::Linear(j) => z[j],
        BasisTerm::Square(j) => z[j] * z[j],
        BasisTerm::Interaction(i, j) => z[i] * z[j],
    }
}

fn standardization(columns: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = columns[0].len() as f64;
    let means: Vec<f64> = columns.iter().map(|c| c.iter().sum::<f64>() / n).collect();
    let sds: Vec<f64> = columns
        .iter()
        .zip(&means)
        .map(|(c, m)| {
            let v = c.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
            let s = v.sqrt();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect();
    (means, sds)
}

fn fit_on(
    columns: &[Vec<f64>],
    names: &[String],
    y: &[f64],
    output_name: &str,
    spec: PolySpec,
) -> Result<Metamodel, MetamodelError> {
    let d = columns.len();
    let n = y.len();
    let terms = spec.terms(d);
    if n <= terms.len() + 1 {
        return Err(MetamodelError::Underdetermined { terms: terms.len() + 1, rows: n });
    }
    let (means, sds) = standardization(columns);
    let z: Vec<Vec<f64>> = columns
        .iter()
        .zip(means.iter().zip(&sds))
        .map(|(c, (m, s))| c.iter().map(|x| (x - m) / s).collect())
        .collect();
    let basis_columns: Vec<Vec<f64>> = terms
        .iter()
        .map(|&t| {
            (0..n)
                .map(|i| {
                    let zi: Vec<f64> = z.iter().map(|col| col[i]).collect();
                    term_value(t, &zi)
                })
                .collect()
        })
        .collect();
    let term_names: Vec<String> = terms
        .iter()
        .map(|t| match t {
            BasisTerm::Linear(j) => names[*j].clone(),
            BasisTerm::Square(j) => format!("{}^2", names[*j]),
            BasisTerm::Interaction(i, j) => format!("{}*{}", names[*i], names[*j]),
        })
        .collect();
    let (intercept, coefficients) =
        regression::solve_least_squares(&basis_columns, &term_names, y)?;

    let fitted: Vec<f64> = (0..n)
        .map(|i| {
            intercept
                + coefficients
                    .iter()
                    .zip(&basis_columns)
                    .map(|(c, col)| c * col[i])
                    .sum::<f64>()
        })
        .collect();
    let my = y.iter().sum::<f64>() / n as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = y.iter().zip(&fitted).map(|(v, f)| (v - f).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 0.0 } else { 1.0 - ss_res / ss_tot };

    Ok(Metamodel {
        output_name: output_name.to_string(),
        input_names: names.to_vec(),
        terms,
        intercept,
        coefficients,
        means,
        sds,
        training_n: n,
        r_squared,
        loo_q2: None,
    })
}

/// Fit a polynomial surrogate to one output of an evaluation set.
pub fn fit_polynomial(
    eval: &EvaluationSet,
    output: &str,
    spec: PolySpec,
) -> Result<Metamodel, MetamodelError> {
    let y = eval
        .output(output)
        .ok_or_else(|| MetamodelError::UnknownOutput(output.to_string()))?;
    let sample = eval.sample();
    let columns: Vec<Vec<f64>> = (0..sample.n_cols()).map(|j| sample.column(j)).collect();
    fit_on(&columns, sample.names(), y, output, spec)
}

/// Leave-one-out predictivity: refit without each row in turn, predict it,
/// and score the held-out predictions with Q².
pub fn loo_q2(eval: &EvaluationSet, output: &str, spec: PolySpec) -> Result<f64, MetamodelError> {
    let y = eval
        .output(output)
        .ok_or_else(|| MetamodelError::UnknownOutput(output.to_string()))?;
    let sample = eval.sample();
    let n = sample.n_rows();
    let columns: Vec<Vec<f64>> = (0..sample.n_cols()).map(|j| sample.column(j)).collect();
    let mut predictions = Vec::with_capacity(n);
    for hold in 0..n {
        let fold_columns: Vec<Vec<f64>> = columns
            .iter()
            .map(|c| {
                c.iter()
                    .enumerate()
                    .filter(|(i, _)| *i != hold)
                    .map(|(_, &v)| v)
                    .collect()
            })
            .collect();
        let fold_y: Vec<f64> = y
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != hold)
            .map(|(_, &v)| v)
            .collect();
        let mm = fit_on(&fold_columns, sample.names(), &fold_y, output, spec)?;
        predictions.push(mm.predict(sample.row(hold)));
    }
    Ok(q2(&predictions, y)?)
}

/// Convenience: fit and attach the leave-one-out Q².
pub fn fit_polynomial_validated(
    eval: &EvaluationSet,
    output: &str,
    spec: PolySpec,
) -> Result<Metamodel, MetamodelError> {
    let mut mm = fit_polynomial(eval, output, spec)?;
    mm.loo_q2 = Some(loo_q2(eval, output, spec)?);
    Ok(mm)
}

/// Sobol' estimation through the surrogate.
#[derive(Debug, Clone, PartialEq)]
pub struct MetamodelSobol {
    pub result: SobolResult,
    /// `1 − Q²`: the output variance share the surrogate does not explain,
    /// and hence missing from the sensitivity picture. Present when the
    /// surrogate carries a validation Q².
    pub unexplained_variance: Option<f64>,
}

#[derive(Debug, Error)]
pub enum MetamodelSobolError {
    #[error(transparent)]
    Metamodel(#[from] MetamodelError),
    #[error(transparent)]
    Sobol(#[from] SobolError),
    #[error(transparent)]
    Sampling(#[from] crate::sampling::SamplingError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Run the pick-freeze pipeline against the surrogate instead of the model.
pub fn sobol_via_metamodel(
    mm: &Metamodel,
    space: &InputSpace,
    base_n: usize,
    seed: u64,
    estimator: SobolEstimator,
) -> Result<MetamodelSobol, MetamodelSobolError> {
    if mm.input_names != space.names() {
        return Err(MetamodelError::NameMismatch {
            expected: mm.input_names.clone(),
            got: space.names(),
        }
        .into());
    }
    let design = saltelli_design(space, base_n, seed, false)?;
    let eval = evaluate(mm, design.sample())?;
    let result = estimate_sobol(&design, &eval, mm.output_name(), estimator)?;
    Ok(MetamodelSobol {
        result,
        unexplained_variance: mm.loo_q2.map(|q| 1.0 - q),
    })
}
