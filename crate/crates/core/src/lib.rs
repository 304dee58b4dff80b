//! Extreme value index estimation for randomly right-censored heavy-tailed
//! data.
//!
//! The crate covers the Hill, censored Hill, Worms, Kaplan-Meier, Bayesian
//! and extended-Pareto estimators, the bias-reduced and shrinkage Worms
//! estimators, a parametric Pareto bootstrap for confidence intervals, and a
//! seeded Monte-Carlo harness for bias/RMSE and coverage studies.
//!
//! ```
//! use censored_evi::estimators::{worms, Target};
//! use censored_evi::sample::CensoredSample;
//!
//! let sample = CensoredSample::from_indicator_pairs([(1.0, 1), (2.0, 1), (4.0, 1), (8.0, 1)])?;
//! let ordered = sample.order();
//! // without censoring the Worms estimator is the Hill estimator
//! let estimate = worms(&ordered, 3, Target::Gamma1)?;
//! assert!((estimate - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod bootstrap;
pub mod estimators;
pub mod kaplan_meier;
pub mod numeric;
pub mod rng;
pub mod sample;
pub mod simulation;

pub use bootstrap::{bootstrap_ci, BootstrapConfig, CiResult, KMode};
pub use estimators::{estimator_path, EstimatorPath, EstimatorSpec, Target, TailEstimator};
pub use kaplan_meier::{km_survival, SurvivalCurve, SurvivalTarget};
pub use sample::{CensoredObservation, CensoredSample, OrderedSample};
pub use simulation::{Distribution, ScenarioSpec};
