//! Marginal input distributions: uniform, triangular, truncated normal and
//! truncated Gumbel, with CDF, inverse-CDF and nominal-value evaluation.
//!
//! Truncation is implemented by inverse-CDF over the renormalized interval
//! (`u ↦ Q_parent(F(lo) + u·(F(hi) − F(lo)))`), never by rejection, so
//! stratified designs keep their structure after mapping to physical space.

use statrs::function::erf;
use thiserror::Error;

/// Errors raised by distribution construction and evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistributionError {
    #[error("invalid distribution parameters: {0}")]
    InvalidParameters(String),
    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("truncation interval [{lo}, {hi}] carries no probability mass under the parent")]
    EmptyTruncation { lo: f64, hi: f64 },
}

/// A marginal distribution with finite or half-infinite support.
///
/// The truncated families (`TruncNormal`, `TruncGumbel`) rescale the parent
/// CDF over `[lo, hi]`; `hi` may be `f64::INFINITY` for the normal.
#[derive(Debug, Clone, PartialEq)]
pub enum DistributionSpec {
    Uniform { lo: f64, hi: f64 },
    Triangular { min: f64, mode: f64, max: f64 },
    TruncNormal { mean: f64, sd: f64, lo: f64, hi: f64 },
    TruncGumbel { loc: f64, scale: f64, lo: f64, hi: f64 },
}

impl DistributionSpec {
    /// Check parameter invariants, including positive truncation mass.
    pub fn validate(&self) -> Result<(), DistributionError> {
        let invalid = |msg: &str| Err(DistributionError::InvalidParameters(msg.to_string()));
        match *self {
            DistributionSpec::Uniform { lo, hi } => {
                if !(lo < hi) {
                    return invalid("uniform requires lo < hi");
                }
            }
            DistributionSpec::Triangular { min, mode, max } => {
                if !(min <= mode && mode <= max && min < max) {
                    return invalid("triangular requires min <= mode <= max and min < max");
                }
            }
            DistributionSpec::TruncNormal { sd, lo, hi, .. } => {
                if !(sd > 0.0) {
                    return invalid("truncated normal requires sd > 0");
                }
                if !(lo < hi) {
                    return invalid("truncated normal requires lo < hi");
                }
                self.check_truncation_mass(lo, hi)?;
            }
            DistributionSpec::TruncGumbel { scale, lo, hi, .. } => {
                if !(scale > 0.0) {
                    return invalid("truncated Gumbel requires scale > 0");
                }
                if !(lo < hi) || !hi.is_finite() || !lo.is_finite() {
                    return invalid("truncated Gumbel requires finite lo < hi");
                }
                self.check_truncation_mass(lo, hi)?;
            }
        }
        Ok(())
    }

    fn check_truncation_mass(&self, lo: f64, hi: f64) -> Result<(), DistributionError> {
        let mass = self.parent_cdf(hi) - self.parent_cdf(lo);
        if mass > 0.0 {
            Ok(())
        } else {
            Err(DistributionError::EmptyTruncation { lo, hi })
        }
    }

    /// Support interval `[lo, hi]`; `hi` may be infinite.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            DistributionSpec::Uniform { lo, hi } => (lo, hi),
            DistributionSpec::Triangular { min, max, .. } => (min, max),
            DistributionSpec::TruncNormal { lo, hi, .. } => (lo, hi),
            DistributionSpec::TruncGumbel { lo, hi, .. } => (lo, hi),
        }
    }

    /// CDF of the (possibly truncated) distribution.
    pub fn cdf(&self, x: f64) -> Result<f64, DistributionError> {
        self.validate()?;
        let (lo, hi) = self.support();
        if x <= lo {
            return Ok(0.0);
        }
        if x >= hi {
            return Ok(1.0);
        }
        let p = match *self {
            DistributionSpec::Uniform { lo, hi } => (x - lo) / (hi - lo),
            DistributionSpec::Triangular { .. } => self.parent_cdf(x),
            DistributionSpec::TruncNormal { .. } | DistributionSpec::TruncGumbel { .. } => {
                let f_lo = self.parent_cdf(lo);
                let f_hi = self.parent_cdf(hi);
                (self.parent_cdf(x) - f_lo) / (f_hi - f_lo)
            }
        };
        Ok(p.clamp(0.0, 1.0))
    }

    /// Inverse CDF. Closed-form for uniform, triangular and Gumbel; the
    /// truncated normal uses the parent inverse plus one Newton polish step.
    pub fn quantile(&self, p: f64) -> Result<f64, DistributionError> {
        self.validate()?;
        if !(0.0..=1.0).contains(&p) {
            return Err(DistributionError::ProbabilityOutOfRange(p));
        }
        let (lo, hi) = self.support();
        if p == 0.0 {
            return Ok(lo);
        }
        if p == 1.0 {
            return Ok(hi);
        }
        let x = match *self {
            DistributionSpec::Uniform { lo, hi } => lo + p * (hi - lo),
            DistributionSpec::Triangular { .. } => self.parent_quantile(p),
            DistributionSpec::TruncNormal { mean, sd, .. } => {
                let f_lo = self.parent_cdf(lo);
                let f_hi = self.parent_cdf(hi);
                let pp = f_lo + p * (f_hi - f_lo);
                let mut x = self.parent_quantile(pp);
                // One Newton step on the parent CDF tightens the inverse to
                // round-trip error below 1e-12 in probability.
                let z = (x - mean) / sd;
                let pdf = (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt());
                if pdf > 0.0 {
                    x -= (self.parent_cdf(x) - pp) / pdf;
                }
                x
            }
            DistributionSpec::TruncGumbel { .. } => {
                let f_lo = self.parent_cdf(lo);
                let f_hi = self.parent_cdf(hi);
                self.parent_quantile(f_lo + p * (f_hi - f_lo))
            }
        };
        Ok(x.clamp(lo, hi))
    }

    /// Representative value used when an input is fixed: triangular mode,
    /// uniform midpoint, normal mean and Gumbel location (clipped to support).
    pub fn nominal_value(&self) -> Result<f64, DistributionError> {
        self.validate()?;
        let (lo, hi) = self.support();
        Ok(match *self {
            DistributionSpec::Uniform { lo, hi } => 0.5 * (lo + hi),
            DistributionSpec::Triangular { mode, .. } => mode,
            DistributionSpec::TruncNormal { mean, .. } => mean.clamp(lo, hi),
            DistributionSpec::TruncGumbel { loc, .. } => loc.clamp(lo, hi),
        })
    }

    /// Untruncated parent CDF (the triangular and uniform are their own parent).
    fn parent_cdf(&self, x: f64) -> f64 {
        match *self {
            DistributionSpec::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            DistributionSpec::Triangular { min, mode, max } => {
                if x <= min {
                    0.0
                } else if x >= max {
                    1.0
                } else if x <= mode {
                    (x - min).powi(2) / ((max - min) * (mode - min).max(f64::MIN_POSITIVE))
                } else {
                    1.0 - (max - x).powi(2) / ((max - min) * (max - mode).max(f64::MIN_POSITIVE))
                }
            }
            DistributionSpec::TruncNormal { mean, sd, .. } => {
                if x == f64::INFINITY {
                    1.0
                } else if x == f64::NEG_INFINITY {
                    0.0
                } else {
                    let z = (x - mean) / (sd * std::f64::consts::SQRT_2);
                    0.5 * erf::erfc(-z)
                }
            }
            DistributionSpec::TruncGumbel { loc, scale, .. } => {
                // Maximum-Gumbel convention: F(x) = exp(-exp(-(x - loc)/scale)).
                (-(-(x - loc) / scale).exp()).exp()
            }
        }
    }

    fn parent_quantile(&self, p: f64) -> f64 {
        match *self {
            DistributionSpec::Uniform { lo, hi } => lo + p * (hi - lo),
            DistributionSpec::Triangular { min, mode, max } => {
                let fc = (mode - min) / (max - min);
                if p <= fc {
                    min + (p * (max - min) * (mode - min)).sqrt()
                } else {
                    max - ((1.0 - p) * (max - min) * (max - mode)).sqrt()
                }
            }
            DistributionSpec::TruncNormal { mean, sd, .. } => {
                mean + sd * std::f64::consts::SQRT_2 * erf::erf_inv(2.0 * p - 1.0)
            }
            DistributionSpec::TruncGumbel { loc, scale, .. } => loc - scale * (-p.ln()).ln(),
        }
    }
}

/// An ordered set of named, mutually independent inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSpace {
    inputs: Vec<(String, DistributionSpec)>,
}

impl InputSpace {
    /// Build an input space; names must be unique and non-empty.
    pub fn new(inputs: Vec<(String, DistributionSpec)>) -> Result<Self, DistributionError> {
        if inputs.is_empty() {
            return Err(DistributionError::InvalidParameters(
                "input space requires at least one input".to_string(),
            ));
        }
        for (i, (name, dist)) in inputs.iter().enumerate() {
            dist.validate()?;
            if inputs[..i].iter().any(|(other, _)| other == name) {
                return Err(DistributionError::InvalidParameters(format!(
                    "duplicate input name `{name}`"
                )));
            }
        }
        Ok(Self { inputs })
    }

    pub fn dimension(&self) -> usize {
        self.inputs.len()
    }

    pub fn names(&self) -> Vec<String> {
        self.inputs.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn inputs(&self) -> &[(String, DistributionSpec)] {
        &self.inputs
    }

    pub fn distribution(&self, j: usize) -> &DistributionSpec {
        &self.inputs[j].1
    }

    /// Map a unit-hypercube row to physical space column-by-column.
    pub fn quantile_row(&self, unit: &[f64]) -> Result<Vec<f64>, DistributionError> {
        debug_assert_eq!(unit.len(), self.dimension());
        self.inputs
            .iter()
            .zip(unit)
            .map(|((_, dist), &u)| dist.quantile(u))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table1_marginals() -> Vec<DistributionSpec> {
        vec![
            DistributionSpec::TruncGumbel { loc: 1013.0, scale: 558.0, lo: 500.0, hi: 3000.0 },
            DistributionSpec::TruncNormal { mean: 30.0, sd: 8.0, lo: 15.0, hi: f64::INFINITY },
            DistributionSpec::Triangular { min: 49.0, mode: 50.0, max: 51.0 },
            DistributionSpec::Triangular { min: 54.0, mode: 55.0, max: 56.0 },
            DistributionSpec::Uniform { lo: 7.0, hi: 9.0 },
            DistributionSpec::Triangular { min: 55.0, mode: 55.5, max: 56.0 },
            DistributionSpec::Triangular { min: 4990.0, mode: 5000.0, max: 5010.0 },
            DistributionSpec::Triangular { min: 295.0, mode: 300.0, max: 305.0 },
        ]
    }

    #[test]
    fn uniform_cdf_midpoint() {
        let d = DistributionSpec::Uniform { lo: 7.0, hi: 9.0 };
        assert_eq!(d.cdf(8.0).unwrap(), 0.5);
    }

    #[test]
    fn trunc_gumbel_cdf_at_upper_bound() {
        let d = DistributionSpec::TruncGumbel { loc: 1013.0, scale: 558.0, lo: 500.0, hi: 3000.0 };
        assert_eq!(d.cdf(3000.0).unwrap(), 1.0);
        assert_eq!(d.cdf(500.0).unwrap(), 0.0);
    }

    #[test]
    fn symmetric_triangular_median_is_mode() {
        let d = DistributionSpec::Triangular { min: 49.0, mode: 50.0, max: 51.0 };
        assert!((d.cdf(50.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn uniform_quantile_linear() {
        let d = DistributionSpec::Uniform { lo: 7.0, hi: 9.0 };
        assert_eq!(d.quantile(0.25).unwrap(), 7.5);
    }

    #[test]
    fn trunc_normal_quantile_round_trip() {
        let d = DistributionSpec::TruncNormal { mean: 30.0, sd: 8.0, lo: 15.0, hi: f64::INFINITY };
        for p in [0.1, 0.5, 0.9] {
            let x = d.quantile(p).unwrap();
            assert!((d.cdf(x).unwrap() - p).abs() < 1e-10, "p={p}");
        }
    }

    #[test]
    fn trunc_gumbel_median_by_bisection_oracle() {
        let d = DistributionSpec::TruncGumbel { loc: 1013.0, scale: 558.0, lo: 500.0, hi: 3000.0 };
        // Independent oracle: bisection on the truncated CDF.
        let (mut a, mut b) = (500.0, 3000.0);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if d.cdf(m).unwrap() < 0.5 {
                a = m;
            } else {
                b = m;
            }
        }
        let oracle = 0.5 * (a + b);
        let m = d.quantile(0.5).unwrap();
        assert!((d.cdf(m).unwrap() - 0.5).abs() < 1e-10);
        assert!((m - oracle).abs() < 1e-6);
    }

    #[test]
    fn nominal_values() {
        let zm = DistributionSpec::Triangular { min: 54.0, mode: 55.0, max: 56.0 };
        assert_eq!(zm.nominal_value().unwrap(), 55.0);
        let l = DistributionSpec::Triangular { min: 4990.0, mode: 5000.0, max: 5010.0 };
        assert_eq!(l.nominal_value().unwrap(), 5000.0);
        let hd = DistributionSpec::Uniform { lo: 7.0, hi: 9.0 };
        assert_eq!(hd.nominal_value().unwrap(), 8.0);
    }

    #[test]
    fn cdf_quantile_round_trip_grid_all_marginals() {
        for dist in table1_marginals() {
            for k in 1..100 {
                let p = k as f64 / 100.0;
                let x = dist.quantile(p).unwrap();
                let back = dist.cdf(x).unwrap();
                assert!((back - p).abs() < 1e-8, "{dist:?} p={p} back={back}");
            }
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(DistributionSpec::Uniform { lo: 9.0, hi: 7.0 }.validate().is_err());
        assert!(DistributionSpec::Triangular { min: 1.0, mode: 0.0, max: 2.0 }
            .validate()
            .is_err());
        assert!(DistributionSpec::TruncNormal { mean: 0.0, sd: -1.0, lo: 0.0, hi: 1.0 }
            .validate()
            .is_err());
        assert!(DistributionSpec::TruncGumbel { loc: 0.0, scale: 1.0, lo: 2.0, hi: 1.0 }
            .validate()
            .is_err());
        // Truncation window far in the tail carries no mass.
        assert!(matches!(
            DistributionSpec::TruncNormal { mean: 0.0, sd: 1.0, lo: 400.0, hi: 500.0 }.validate(),
            Err(DistributionError::EmptyTruncation { .. })
        ));
    }

    #[test]
    fn quantile_rejects_out_of_range_probability() {
        let d = DistributionSpec::Uniform { lo: 0.0, hi: 1.0 };
        assert!(matches!(
            d.quantile(1.5),
            Err(DistributionError::ProbabilityOutOfRange(_))
        ));
    }

    #[test]
    fn duplicate_names_rejected() {
        let u = DistributionSpec::Uniform { lo: 0.0, hi: 1.0 };
        assert!(InputSpace::new(vec![
            ("a".to_string(), u.clone()),
            ("a".to_string(), u),
        ])
        .is_err());
    }
}
