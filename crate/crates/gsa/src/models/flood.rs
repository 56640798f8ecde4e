//! The river-flood benchmark: maximal annual overflow of a dyke-protected
//! stretch and the associated cost, with the eight standard input marginals.

use crate::distributions::{DistributionError, DistributionSpec, InputSpace};

use super::{Model, ModelError};

/// Canonical input column order of the flood model.
pub const FLOOD_INPUT_NAMES: [&str; 8] = ["Q", "Ks", "Zv", "Zm", "Hd", "Cb", "L", "B"];

fn flood_marginal(name: &str) -> DistributionSpec {
    match name {
        "Q" => DistributionSpec::TruncGumbel { loc: 1013.0, scale: 558.0, lo: 500.0, hi: 3000.0 },
        "Ks" => DistributionSpec::TruncNormal { mean: 30.0, sd: 8.0, lo: 15.0, hi: f64::INFINITY },
        "Zv" => DistributionSpec::Triangular { min: 49.0, mode: 50.0, max: 51.0 },
        "Zm" => DistributionSpec::Triangular { min: 54.0, mode: 55.0, max: 56.0 },
        "Hd" => DistributionSpec::Uniform { lo: 7.0, hi: 9.0 },
        "Cb" => DistributionSpec::Triangular { min: 55.0, mode: 55.5, max: 56.0 },
        "L" => DistributionSpec::Triangular { min: 4990.0, mode: 5000.0, max: 5010.0 },
        "B" => DistributionSpec::Triangular { min: 295.0, mode: 300.0, max: 305.0 },
        other => panic!("unknown flood input `{other}`"),
    }
}

/// The full eight-input space of the flood benchmark.
pub fn flood_space() -> InputSpace {
    InputSpace::new(
        FLOOD_INPUT_NAMES
            .iter()
            .map(|&n| (n.to_string(), flood_marginal(n)))
            .collect(),
    )
    .expect("flood marginals are valid")
}

/// The five-input space after screening fixes Zm, L and B at their modes.
pub fn flood_space_reduced() -> InputSpace {
    InputSpace::new(
        ["Q", "Ks", "Zv", "Hd", "Cb"]
            .iter()
            .map(|&n| (n.to_string(), flood_marginal(n)))
            .collect(),
    )
    .expect("flood marginals are valid")
}

/// Nominal values of the three screened-out inputs (modes of their
/// triangular marginals).
pub fn flood_fixed_nominals() -> Result<Vec<(String, f64)>, DistributionError> {
    ["Zm", "L", "B"]
        .iter()
        .map(|&n| Ok((n.to_string(), flood_marginal(n).nominal_value()?)))
        .collect()
}

/// Overflow S and river height H from the simplified Saint-Venant relation:
/// `H = (Q / (B·Ks·sqrt((Zm−Zv)/L)))^0.6`, `S = Zv + H − Hd − Cb`.
#[allow(clippy::too_many_arguments)]
pub fn flood_overflow(
    q: f64,
    ks: f64,
    zv: f64,
    zm: f64,
    hd: f64,
    cb: f64,
    l: f64,
    b: f64,
) -> Result<(f64, f64), ModelError> {
    if !(ks > 0.0) {
        return Err(ModelError::Domain(format!("Ks must be positive, got {ks}")));
    }
    if !(b > 0.0) {
        return Err(ModelError::Domain(format!("B must be positive, got {b}")));
    }
    if !(l > 0.0) {
        return Err(ModelError::Domain(format!("L must be positive, got {l}")));
    }
    if !(q >= 0.0) {
        return Err(ModelError::Domain(format!("Q must be non-negative, got {q}")));
    }
    if !(zm > zv) {
        return Err(ModelError::Singularity(format!(
            "river slope requires Zm > Zv, got Zm={zm}, Zv={zv}"
        )));
    }
    let h = (q / (b * ks * ((zm - zv) / l).sqrt())).powf(0.6);
    let s = zv + h - hd - cb;
    Ok((s, h))
}

/// Dyke cost in million euros: 1 for a flooding (S > 0), a maintenance term
/// for S ≤ 0, plus an investment term growing with the dyke height above 8 m.
///
/// S = 0 falls on the maintenance branch; 1000/S⁴ overflows to +∞ there and
/// `exp(-∞) = 0` gives the continuous limit value 1.0 without producing NaN.
pub fn cost_from_overflow(s: f64, hd: f64) -> f64 {
    let damage = if s > 0.0 {
        1.0
    } else {
        let decay = if s == 0.0 { 0.0 } else { (-1000.0 / s.powi(4)).exp() };
        0.2 + 0.8 * (1.0 - decay)
    };
    let investment = if hd > 8.0 { hd } else { 8.0 } / 20.0;
    damage + investment
}

/// Which flood output a [`FloodModel`] produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FloodOutput {
    /// Maximal annual overflow S (meters).
    Overflow,
    /// Dyke cost Cp (million euros).
    Cost,
}

/// The flood benchmark as an evaluable model over the eight named inputs.
#[derive(Debug, Clone, Copy)]
pub struct FloodModel {
    output: FloodOutput,
}

impl FloodModel {
    pub fn overflow() -> Self {
        Self { output: FloodOutput::Overflow }
    }

    pub fn cost() -> Self {
        Self { output: FloodOutput::Cost }
    }
}

impl Model for FloodModel {
    fn output_name(&self) -> &str {
        match self.output {
            FloodOutput::Overflow => "S",
            FloodOutput::Cost => "Cp",
        }
    }

    fn required_inputs(&self) -> Vec<String> {
        FLOOD_INPUT_NAMES.iter().map(|s| s.to_string()).collect()
    }

    fn eval_row(&self, v: &[f64]) -> Result<f64, ModelError> {
        if v.len() != 8 {
            return Err(ModelError::Arity { expected: 8, got: v.len() });
        }
        let (s, _h) = flood_overflow(v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7])?;
        Ok(match self.output {
            FloodOutput::Overflow => s,
            FloodOutput::Cost => cost_from_overflow(s, v[4]),
        })
    }
}
