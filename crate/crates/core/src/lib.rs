//! Operating characteristics for Bayesian clinical trial designs that borrow
//! external information through robust mixture-of-normals priors.

pub mod calibration;
pub mod config;
pub mod design;
pub mod error;
pub mod io;
pub mod map;
pub mod metrics;
pub mod mixture;
pub mod quadrature;
pub mod roots;
pub mod runner;
pub mod scalar;
pub mod special;

pub use calibration::{
    calibrate, max_weight_for_bound, BorrowingPrior, Calibration, CalibrationMetric, CalibrationRequest,
    GridPoint, Param, ParamGrid, RootChoice, SNewSolution, WeightSearch, solve_s_new,
};
pub use design::{
    ContrastBorrowDesign, ControlBorrowDesign, Design, Direction, SuccessRule, TrialData,
};
pub use error::{Error, Result};
pub use metrics::{
    DecisionTable, DesignPrior, Extremum, McConfig, Method, Metric, MetricReport, OcEvaluator, Truth,
};
pub use map::{
    fit_mixture, map_predictive, robustify, EmOptions, GriddedDensity, HierarchyConfig, HistoricalStudy,
    MapPredictive, MixtureFit, MuPrior, TauPrior,
};
pub use mixture::{MixtureNormal, NormalComponent, TruncatedMixture, WeightedComponent};
pub use quadrature::{Integral, QuadratureConfig};
pub use scalar::Real;

/// Double-precision mixture, the type the CLI works in.
pub type Mixture = MixtureNormal<f64>;
pub type Evaluator = OcEvaluator<f64>;
pub type Study = HistoricalStudy<f64>;
