//! Global sensitivity analysis toolkit.
//!
//! The crate covers the usual pipeline for a deterministic simulator with
//! independent random inputs:
//!
//! 1. describe the input space ([`distributions`]),
//! 2. build a design matrix ([`sampling`]),
//! 3. run the model over it ([`models`]),
//! 4. analyze the outputs: Morris screening ([`screening`]),
//!    regression-based importance measures ([`regression`]),
//!    variance-based Sobol' indices ([`sobol`]),
//!    or a polynomial surrogate when the model is expensive ([`metamodel`]),
//! 5. export plot-ready datasets ([`report`]).
//!
//! A river flood benchmark model ships in [`models`] and is used throughout
//! the test suite.

pub mod distributions;
pub mod metamodel;
pub mod models;
pub mod regression;
pub mod report;
pub mod sampling;
pub mod screening;
pub mod sobol;

pub use distributions::{DistributionError, DistributionSpec, InputSpace};
pub use metamodel::{
    fit_polynomial, fit_polynomial_validated, sobol_via_metamodel, BasisTerm, Metamodel,
    MetamodelError, PolySpec,
};
pub use models::{
    evaluate, AnalyticModel, EvalError, EvaluationSet, FixedInputs, FloodModel, FloodOutput,
    FnModel, Model, ModelError,
};
pub use regression::{regression_indices, RegressionError, RegressionIndices};
pub use report::{cobweb, main_effects, CobwebDataset, MainEffectCurve, ReportError};
pub use sampling::{
    default_morris_delta, lhs, monte_carlo, morris_trajectories, saltelli_design, DesignKind,
    MorrisDesign, PickFreezeBlock, PickFreezeDesign, SampleMatrix, SamplingError,
};
pub use screening::{
    elementary_effects, morris_measures, MorrisGroup, MorrisResult, MorrisThresholds,
    ScreeningError,
};
pub use sobol::{
    bootstrap_confidence, estimate_second_order, estimate_sobol, SobolError, SobolEstimator,
    SobolResult,
};
