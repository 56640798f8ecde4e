//! Morris elementary-effects screening: per-input (μ, μ*, σ) and the
//! three-group classification (negligible / linear additive / nonlinear or
//! interacting).
//!
//! Effects are computed in unit space by default so μ* is comparable across
//! inputs with different physical scales; physical-space effects are
//! available separately.

use thiserror::Error;

use crate::models::EvaluationSet;
use crate::sampling::MorrisDesign;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScreeningError {
    #[error("evaluation set missing output `{0}`")]
    UnknownOutput(String),
    #[error("incomplete trajectory {trajectory}: expected {expected} evaluations, got {got}")]
    IncompleteTrajectory { trajectory: usize, expected: usize, got: usize },
    #[error("sigma requires at least 2 trajectories, got {0}")]
    InsufficientRepetitions(usize),
    #[error("effects matrix is empty")]
    EmptyEffects,
}

/// Screening group an input falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MorrisGroup {
    Negligible,
    LinearAdditive,
    NonlinearOrInteracting,
}

impl MorrisGroup {
    pub fn as_str(&self) -> &'static str {
        match self {
            MorrisGroup::Negligible => "negligible",
            MorrisGroup::LinearAdditive => "linear_additive",
            MorrisGroup::NonlinearOrInteracting => "nonlinear_or_interacting",
        }
    }
}

/// Classification thresholds; an input is negligible when its μ* falls below
/// `negligible_fraction` of the largest μ*, and linear-additive when
/// σ < `linear_sigma_ratio`·μ*.
#[derive(Debug, Clone, Copy)]
pub struct MorrisThresholds {
    pub negligible_fraction: f64,
    pub linear_sigma_ratio: f64,
}

impl Default for MorrisThresholds {
    fn default() -> Self {
        Self { negligible_fraction: 0.05, linear_sigma_ratio: 0.5 }
    }
}

/// Per-input Morris measures.
#[derive(Debug, Clone, PartialEq)]
pub struct MorrisInputMeasure {
    pub name: String,
    pub mu: f64,
    pub mu_star: f64,
    pub sigma: f64,
    pub group: MorrisGroup,
}

/// Screening result over all inputs of the design's space.
#[derive(Debug, Clone, PartialEq)]
pub struct MorrisResult {
    pub inputs: Vec<MorrisInputMeasure>,
    pub r: usize,
}

/// Elementary effects `E_j^(i) = (f(x + Δe_j) − f(x)) / Δ` in unit space,
/// sign-corrected for backward moves. Returns an r×d matrix, one row per
/// trajectory with the effects in input order.
pub fn elementary_effects(
    design: &MorrisDesign,
    eval: &EvaluationSet,
    output: &str,
) -> Result<Vec<Vec<f64>>, ScreeningError> {
    effects_impl(design, eval, output, false)
}

/// Elementary effects divided by the physical step instead of the unit Δ.
pub fn elementary_effects_physical(
    design: &MorrisDesign,
    eval: &EvaluationSet,
    output: &str,
) -> Result<Vec<Vec<f64>>, ScreeningError> {
    effects_impl(design, eval, output, true)
}

fn effects_impl(
    design: &MorrisDesign,
    eval: &EvaluationSet,
    output: &str,
    physical: bool,
) -> Result<Vec<Vec<f64>>, ScreeningError> {
    let y = eval
        .output(output)
        .ok_or_else(|| ScreeningError::UnknownOutput(output.to_string()))?;
    let d = design.dimension();
    let rows_per_traj = d + 1;
    let expected = design.r() * rows_per_traj;
    if y.len() != expected {
        return Err(ScreeningError::IncompleteTrajectory {
            trajectory: y.len() / rows_per_traj,
            expected,
            got: y.len(),
        });
    }
    let mut effects = Vec::with_capacity(design.r());
    for (t, steps) in design.steps().iter().enumerate() {
        let base = t * rows_per_traj;
        let mut row = vec![0.0; d];
        for (k, step) in steps.iter().enumerate() {
            let dy = y[base + k + 1] - y[base + k];
            let e = if physical {
                let dx = design.sample().get(base + k + 1, step.input)
                    - design.sample().get(base + k, step.input);
                dy / dx
            } else {
                step.direction * dy / design.delta()
            };
            row[step.input] = e;
        }
        effects.push(row);
    }
    Ok(effects)
}

/// Aggregate an effects matrix into (μ, μ*, σ) per input and classify.
///
/// σ uses divisor r (the population form), not r−1.
pub fn morris_measures(
    effects: &[Vec<f64>],
    names: &[String],
    thresholds: MorrisThresholds,
) -> Result<MorrisResult, ScreeningError> {
    let r = effects.len();
    if r == 0 {
        return Err(ScreeningError::EmptyEffects);
    }
    if r < 2 {
        return Err(ScreeningError::InsufficientRepetitions(r));
    }
    let d = effects[0].len();
    assert_eq!(names.len(), d, "one name per input column");
    let mut measures = Vec::with_capacity(d);
    for j in 0..d {
        let col: Vec<f64> = effects.iter().map(|row| row[j]).collect();
        let mu = col.iter().sum::<f64>() / r as f64;
        let mu_star = col.iter().map(|e| e.abs()).sum::<f64>() / r as f64;
        let sigma = (col.iter().map(|e| (e - mu).powi(2)).sum::<f64>() / r as f64).sqrt();
        measures.push((mu, mu_star, sigma));
    }
    let max_mu_star = measures.iter().map(|&(_, m, _)| m).fold(0.0, f64::max);
    let inputs = measures
        .into_iter()
        .zip(names)
        .map(|((mu, mu_star, sigma), name)| {
            let group = if max_mu_star == 0.0 || mu_star < thresholds.negligible_fraction * max_mu_star
            {
                MorrisGroup::Negligible
            } else if sigma < thresholds.linear_sigma_ratio * mu_star {
                MorrisGroup::LinearAdditive
            } else {
                MorrisGroup::NonlinearOrInteracting
            };
            MorrisInputMeasure { name: name.clone(), mu, mu_star, sigma, group }
        })
        .collect();
    Ok(MorrisResult { inputs, r })
}
