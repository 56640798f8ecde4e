//! Problem configuration: JSON schema, validation and resolution into the
//! library's input space, model and analysis settings.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use gsa::distributions::{DistributionSpec, InputSpace};
use gsa::models::{ExternalModel, FixedInputs, FloodModel, Model};
use gsa::sobol::SobolEstimator;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub inputs: Vec<InputConfig>,
    pub model: ModelConfig,
    pub analyses: AnalysesConfig,
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: String,
}

fn default_out_dir() -> String {
    "out".to_string()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    pub name: String,
    pub distribution: DistConfig,
    /// When present, the input is removed from the sampled space and held at
    /// this constant during evaluation.
    #[serde(default)]
    pub fixed: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistConfig {
    Uniform { lo: f64, hi: f64 },
    Triangular { min: f64, mode: f64, max: f64 },
    TruncNormal { mean: f64, sd: f64, #[serde(default = "neg_inf")] lo: f64, #[serde(default = "pos_inf")] hi: f64 },
    TruncGumbel { loc: f64, scale: f64, #[serde(default = "neg_inf")] lo: f64, #[serde(default = "pos_inf")] hi: f64 },
}

fn neg_inf() -> f64 {
    f64::NEG_INFINITY
}

fn pos_inf() -> f64 {
    f64::INFINITY
}

impl DistConfig {
    fn to_spec(&self) -> DistributionSpec {
        match *self {
            DistConfig::Uniform { lo, hi } => DistributionSpec::Uniform { lo, hi },
            DistConfig::Triangular { min, mode, max } => {
                DistributionSpec::Triangular { min, mode, max }
            }
            DistConfig::TruncNormal { mean, sd, lo, hi } => {
                DistributionSpec::TruncNormal { mean, sd, lo, hi }
            }
            DistConfig::TruncGumbel { loc, scale, lo, hi } => {
                DistributionSpec::TruncGumbel { loc, scale, lo, hi }
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Registered model name: `flood_S` or `flood_Cp`.
    #[serde(default)]
    pub builtin: Option<String>,
    #[serde(default)]
    pub external: Option<ExternalConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalConfig {
    /// Program and fixed arguments; design and output paths are appended.
    pub command: Vec<String>,
    #[serde(default = "default_output_name")]
    pub output: String,
    #[serde(default = "default_true")]
    pub output_has_header: bool,
}

fn default_output_name() -> String {
    "y".to_string()
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysesConfig {
    #[serde(default)]
    pub morris: Option<MorrisConfig>,
    #[serde(default)]
    pub regression: Option<RegressionConfig>,
    #[serde(default)]
    pub sobol: Option<SobolConfig>,
    #[serde(default)]
    pub metamodel: Option<MetamodelConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorrisConfig {
    pub r: usize,
    pub levels: usize,
    /// Unit-space step; the standard `levels/(2(levels-1))` when absent.
    #[serde(default)]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionConfig {
    pub n: usize,
    #[serde(default = "default_design")]
    pub design: String,
}

fn default_design() -> String {
    "monte_carlo".to_string()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SobolConfig {
    pub n: usize,
    #[serde(default = "default_estimator")]
    pub estimator: String,
    #[serde(default)]
    pub second_order: bool,
    #[serde(default)]
    pub ci: Option<CiConfig>,
}

fn default_estimator() -> String {
    "jansen".to_string()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CiConfig {
    pub replicates: usize,
    #[serde(default = "default_level")]
    pub level: f64,
}

fn default_level() -> f64 {
    0.95
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetamodelConfig {
    pub n: usize,
    pub degree: u8,
    #[serde(default)]
    pub interactions: bool,
    /// Base sample size of the surrogate-driven index estimation; skipped
    /// when absent.
    #[serde(default)]
    pub sobol_n: Option<usize>,
}

impl SobolConfig {
    pub fn estimator(&self) -> Result<SobolEstimator, CliError> {
        match self.estimator.as_str() {
            "saltelli" => Ok(SobolEstimator::Saltelli),
            "jansen" => Ok(SobolEstimator::Jansen),
            "janon_monod" => Ok(SobolEstimator::JanonMonod),
            other => Err(CliError::config(format!(
                "analyses.sobol.estimator: unknown estimator `{other}` \
                 (expected saltelli, jansen or janon_monod)"
            ))),
        }
    }
}

/// The kinds of evaluable models a config can name.
pub enum ResolvedModel {
    Builtin(FixedInputs<FloodModel>),
    External(ExternalModel),
}

impl ResolvedModel {
    pub fn output_name(&self) -> &str {
        match self {
            ResolvedModel::Builtin(m) => m.output_name(),
            ResolvedModel::External(e) => &e.output_name,
        }
    }
}

/// A validated configuration resolved against the library types.
pub struct Problem {
    pub space: InputSpace,
    pub fixed: Vec<(String, f64)>,
    pub model: ResolvedModel,
    pub analyses: AnalysesConfig,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// FNV-1a hash of the config file bytes, carried into every artifact.
    pub config_hash: String,
}

pub fn fnv1a(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

pub fn load(path: &Path) -> Result<Problem, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    let file: ConfigFile = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    resolve(file, fnv1a(&bytes))
}

fn resolve(file: ConfigFile, config_hash: String) -> Result<Problem, CliError> {
    if file.inputs.is_empty() {
        return Err(CliError::config("inputs: at least one input required"));
    }
    let mut free = Vec::new();
    let mut fixed = Vec::new();
    for input in &file.inputs {
        let spec = input.distribution.to_spec();
        spec.validate()
            .map_err(|e| CliError::config(format!("inputs.{}.distribution: {e}", input.name)))?;
        match input.fixed {
            Some(v) => fixed.push((input.name.clone(), v)),
            None => free.push((input.name.clone(), spec)),
        }
    }
    if free.is_empty() {
        return Err(CliError::config("inputs: every input is fixed; nothing to sample"));
    }
    let space = InputSpace::new(free).map_err(|e| CliError::config(format!("inputs: {e}")))?;

    let model = match (&file.model.builtin, &file.model.external) {
        (Some(name), None) => {
            let flood = match name.as_str() {
                "flood_S" => FloodModel::overflow(),
                "flood_Cp" => FloodModel::cost(),
                other => {
                    return Err(CliError::config(format!(
                        "model.builtin: unknown model `{other}` (expected flood_S or flood_Cp)"
                    )))
                }
            };
            let wrapped = FixedInputs::new(flood, fixed.clone());
            let known: Vec<String> = file.inputs.iter().map(|i| i.name.clone()).collect();
            for required in wrapped.required_inputs() {
                if !known.contains(&required) {
                    return Err(CliError::config(format!(
                        "model.builtin: `{name}` needs input `{required}` which the config \
                         neither samples nor fixes"
                    )));
                }
            }
            ResolvedModel::Builtin(wrapped)
        }
        (None, Some(ext)) => {
            if ext.command.is_empty() {
                return Err(CliError::config("model.external.command: empty command line"));
            }
            ResolvedModel::External(ExternalModel {
                command: ext.command.clone(),
                output_name: ext.output.clone(),
                output_has_header: ext.output_has_header,
                workdir: None,
            })
        }
        _ => {
            return Err(CliError::config(
                "model: exactly one of `builtin` or `external` required",
            ))
        }
    };

    let a = &file.analyses;
    if a.morris.is_none() && a.regression.is_none() && a.sobol.is_none() && a.metamodel.is_none()
    {
        return Err(CliError::config("analyses: at least one analysis block required"));
    }
    if let Some(r) = &a.regression {
        if r.design != "monte_carlo" && r.design != "lhs" {
            return Err(CliError::config(format!(
                "analyses.regression.design: unknown design `{}` (expected monte_carlo or lhs)",
                r.design
            )));
        }
    }
    if let Some(m) = &a.metamodel {
        if m.degree < 1 || m.degree > 2 {
            return Err(CliError::config(format!(
                "analyses.metamodel.degree: {} unsupported (expected 1 or 2)",
                m.degree
            )));
        }
    }
    if let Some(s) = &a.sobol {
        SobolConfig::estimator(s)?;
    }

    Ok(Problem {
        space,
        fixed,
        model,
        analyses: file.analyses,
        seed: file.seed,
        out_dir: PathBuf::from(file.out_dir),
        config_hash,
    })
}
