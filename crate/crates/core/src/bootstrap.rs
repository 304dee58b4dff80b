//! Parametric Pareto bootstrap confidence intervals for γ₁.
//!
//! Steps:
//! 1. pick `k̂₁` (event side, `ρ₁`) and `k̂₂` (censoring side, `ρ₂`), either
//!    adaptively as the largest `k` where the Worms estimate and its
//!    shrinkage version agree within `ε`, or fixed;
//! 2. point estimates `γ̂₁ = worms(k̂₁)` and `γ̂₂` at `k̂₂`;
//! 3. each replicate draws `n` pairs from strict Pareto(γ̂₁) and Pareto(γ̂₂),
//!    censors, and evaluates the shrinkage Worms estimator at `k̂₁`;
//! 4. the interval runs between the empirical `α/2` and `1 - α/2` quantiles
//!    of the replicate estimates.
//!
//! Replicate `r` always draws from the stream `seed / REPLICATE / r`, so an
//! interval does not depend on thread count.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimators::{
    worms, worms_bias_reduced, worms_shrinkage, EstimateError, EstimatorSpec, Target, TailEstimator,
    DEFAULT_OMEGA,
};
use crate::rng::{label, StreamKey};
use crate::sample::OrderedSample;
use crate::simulation::{censor, Distribution, ScenarioSpec};

pub const DEFAULT_EPSILON: f64 = 0.01;
pub const DEFAULT_REPLICATES: usize = 1000;
pub const DEFAULT_ALPHA: f64 = 0.05;
/// Fixed-threshold fraction suited to `n = 500`; `0.04` suits `n = 1000`.
pub const DEFAULT_FIXED_FRACTION: f64 = 0.05;
/// Total draws allowed per interval, as a multiple of the replicate count.
pub const REDRAW_CAP_FACTOR: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BootstrapError {
    #[error("no admissible k for {target:?}")]
    NoAdmissibleK { target: Target },
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("invalid bootstrap configuration: {0}")]
    InvalidConfig(String),
    #[error("point estimate of {target:?} at k = {k} is undefined: {source}")]
    PointEstimate {
        target: Target,
        k: usize,
        source: EstimateError,
    },
    #[error("replicate estimator undefined too often: {draws} draws exceed cap {cap}")]
    TooManyRedraws { draws: usize, cap: usize },
}

impl BootstrapError {
    /// Whether the failure is a numerical degeneracy of the data rather
    /// than a configuration problem.
    pub fn is_numerical(&self) -> bool {
        !matches!(self, BootstrapError::InvalidConfig(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum KMode {
    Adaptive { epsilon: f64 },
    Fixed { k1: usize, k2: usize },
}

impl KMode {
    /// Fixed mode with `k₁ = k₂ = round(fraction · n)`, at least 1.
    pub fn fixed_fraction(n: usize, fraction: f64) -> Self {
        let k = ((fraction * n as f64).round() as usize).max(1);
        KMode::Fixed { k1: k, k2: k }
    }
}

/// Which estimator of γ₂ parametrises the censoring Pareto in the replicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gamma2Source {
    #[default]
    Worms,
    BiasReduced,
    Shrinkage,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub rho1: f64,
    pub rho2: f64,
    pub omega: f64,
    pub replicates: usize,
    pub alpha: f64,
    pub k_mode: KMode,
    pub seed: u64,
    #[serde(default)]
    pub gamma2_source: Gamma2Source,
}

impl BootstrapConfig {
    pub fn new(rho1: f64, rho2: f64) -> Self {
        Self {
            rho1,
            rho2,
            omega: DEFAULT_OMEGA,
            replicates: DEFAULT_REPLICATES,
            alpha: DEFAULT_ALPHA,
            k_mode: KMode::Adaptive {
                epsilon: DEFAULT_EPSILON,
            },
            seed: 0,
            gamma2_source: Gamma2Source::Worms,
        }
    }

    pub fn validate(&self) -> Result<(), BootstrapError> {
        let bad = |m: String| Err(BootstrapError::InvalidConfig(m));
        if !(self.rho1 < 0.0 && self.rho2 < 0.0 && self.rho1.is_finite() && self.rho2.is_finite()) {
            return bad(format!("rho1 and rho2 must be negative, got {} and {}", self.rho1, self.rho2));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return bad(format!("omega must be positive, got {}", self.omega));
        }
        if self.replicates == 0 {
            return bad("replicate count must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if let KMode::Adaptive { epsilon } = self.k_mode {
            if epsilon.is_nan() || epsilon < 0.0 {
                return bad(format!("epsilon must be non-negative, got {epsilon}"));
            }
        }
        Ok(())
    }

    /// Estimator applied to every bootstrap replicate.
    pub fn replicate_estimator(&self) -> EstimatorSpec {
        EstimatorSpec::BrWormsShrink {
            rho: self.rho1,
            omega: self.omega,
            target: Target::Gamma1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiResult {
    pub k1: usize,
    pub k2: usize,
    pub gamma1_hat: f64,
    pub gamma2_hat: f64,
    pub alpha: f64,
    pub lower: f64,
    pub upper: f64,
    /// Replicate estimates in replicate order.
    pub replicates: Vec<f64>,
    /// Replicates that had to be redrawn because the estimator was undefined.
    pub redraws: usize,
}

impl CiResult {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn covers(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

/// Largest `k` with `|worms(k) - worms_shrinkage(k, ρ, ω)| <= ε`. A `k`
/// where either estimate is undefined never qualifies.
pub fn adaptive_k(
    o: &OrderedSample,
    target: Target,
    rho: f64,
    omega: f64,
    epsilon: f64,
) -> Result<usize, BootstrapError> {
    (1..o.len())
        .rev()
        .find(|&k| {
            match (worms(o, k, target), worms_shrinkage(o, k, rho, omega, target)) {
                (Ok(w), Ok(s)) => (w - s).abs() <= epsilon,
                _ => false,
            }
        })
        .ok_or(BootstrapError::NoAdmissibleK { target })
}

/// 1-based rank `ceil(x)`, with `x` snapped to an integer when it is one up
/// to rounding error.
fn ceil_rank(x: f64, n: usize) -> usize {
    let r = x.round();
    let c = if (x - r).abs() < 1e-9 { r } else { x.ceil() };
    (c as usize).clamp(1, n)
}

/// Empirical `α/2` and `1 - α/2` quantiles as order statistics of ranks
/// `⌈Nα/2⌉` and `⌈N(1-α/2)⌉`.
pub fn percentile_interval(values: &[f64], alpha: f64) -> (f64, f64) {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let lo = ceil_rank(n as f64 * alpha / 2.0, n);
    let hi = ceil_rank(n as f64 * (1.0 - alpha / 2.0), n);
    (sorted[lo - 1], sorted[hi - 1])
}

fn choose_ks(o: &OrderedSample, config: &BootstrapConfig) -> Result<(usize, usize), BootstrapError> {
    match config.k_mode {
        KMode::Adaptive { epsilon } => Ok((
            adaptive_k(o, Target::Gamma1, config.rho1, config.omega, epsilon)?,
            adaptive_k(o, Target::Gamma2, config.rho2, config.omega, epsilon)?,
        )),
        KMode::Fixed { k1, k2 } => {
            for k in [k1, k2] {
                if k == 0 || k >= o.len() {
                    return Err(BootstrapError::InvalidConfig(format!(
                        "fixed k = {k} outside 1..={}",
                        o.len() - 1
                    )));
                }
            }
            Ok((k1, k2))
        }
    }
}

fn point_estimate(
    o: &OrderedSample,
    k: usize,
    target: Target,
    source: Gamma2Source,
    rho: f64,
    omega: f64,
) -> Result<f64, BootstrapError> {
    let value = match source {
        Gamma2Source::Worms => worms(o, k, target),
        Gamma2Source::BiasReduced => worms_bias_reduced(o, k, rho, target),
        Gamma2Source::Shrinkage => worms_shrinkage(o, k, rho, omega, target),
    };
    match value {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(_) => Err(BootstrapError::PointEstimate {
            target,
            k,
            source: EstimateError::NonPositiveBase { k },
        }),
        Err(source) => Err(BootstrapError::PointEstimate { target, k, source }),
    }
}

/// Bootstrap interval using the configured shrinkage Worms estimator on the
/// replicates.
pub fn bootstrap_ci(o: &OrderedSample, config: &BootstrapConfig) -> Result<CiResult, BootstrapError> {
    bootstrap_ci_with(o, config, &config.replicate_estimator())
}

/// Bootstrap interval with a caller-supplied replicate estimator.
pub fn bootstrap_ci_with<E: TailEstimator + ?Sized>(
    o: &OrderedSample,
    config: &BootstrapConfig,
    estimator: &E,
) -> Result<CiResult, BootstrapError> {
    config.validate()?;
    let n = o.len();
    let uncensored = o.uncensored_count();
    if uncensored == 0 || uncensored == n {
        return Err(BootstrapError::DegenerateSample(
            "sample needs both censored and uncensored observations".into(),
        ));
    }

    let (k1, k2) = choose_ks(o, config)?;
    let gamma1_hat = point_estimate(o, k1, Target::Gamma1, Gamma2Source::Worms, config.rho1, config.omega)?;
    let gamma2_hat = point_estimate(o, k2, Target::Gamma2, config.gamma2_source, config.rho2, config.omega)?;

    let x_dist = Distribution::Pareto { gamma: gamma1_hat };
    let c_dist = Distribution::Pareto { gamma: gamma2_hat };
    let cap = REDRAW_CAP_FACTOR * config.replicates;
    let root = StreamKey::root(config.seed);

    let draws: Vec<Option<(f64, usize)>> = (0..config.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let key = root.indexed(label::REPLICATE, r);
            (0..cap as u64).find_map(|attempt| {
                let key = key.indexed(label::ATTEMPT, attempt);
                let x = x_dist.sample(n, &mut key.child(label::X).rng());
                let c = c_dist.sample(n, &mut key.child(label::C).rng());
                let replicate = censor(&x, &c).order();
                estimator
                    .estimate(&replicate, k1)
                    .ok()
                    .filter(|v| v.is_finite())
                    .map(|v| (v, attempt as usize))
            })
        })
        .collect();

    let mut replicates = Vec::with_capacity(config.replicates);
    let mut redraws = 0usize;
    for d in &draws {
        match d {
            Some((v, extra)) => {
                replicates.push(*v);
                redraws += extra;
            }
            None => redraws += cap,
        }
    }
    let total = config.replicates + redraws;
    if total > cap || replicates.len() < config.replicates {
        return Err(BootstrapError::TooManyRedraws { draws: total, cap });
    }

    let (lower, upper) = percentile_interval(&replicates, config.alpha);
    Ok(CiResult {
        k1,
        k2,
        gamma1_hat,
        gamma2_hat,
        alpha: config.alpha,
        lower,
        upper,
        replicates,
        redraws,
    })
}

/// Bootstrap seed used for dataset `index` of a coverage experiment.
pub fn dataset_seed(base_seed: u64, index: u64) -> u64 {
    StreamKey::root(base_seed).indexed(label::DATASET, index).seed()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetOutcome {
    pub index: usize,
    pub result: Result<CiResult, BootstrapError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub true_gamma1: f64,
    pub alpha: f64,
    pub datasets: Vec<DatasetOutcome>,
}

impl CoverageReport {
    fn successes(&self) -> impl Iterator<Item = (usize, &CiResult)> {
        self.datasets
            .iter()
            .filter_map(|d| d.result.as_ref().ok().map(|r| (d.index, r)))
    }

    pub fn succeeded(&self) -> usize {
        self.successes().count()
    }

    pub fn failures(&self) -> Vec<usize> {
        self.datasets
            .iter()
            .filter(|d| d.result.is_err())
            .map(|d| d.index)
            .collect()
    }

    /// Fraction of successful intervals containing the true γ₁; `NaN` if
    /// every dataset failed.
    pub fn coverage(&self) -> f64 {
        let ok = self.succeeded();
        if ok == 0 {
            return f64::NAN;
        }
        self.successes().filter(|(_, r)| r.covers(self.true_gamma1)).count() as f64 / ok as f64
    }

    pub fn mean_width(&self) -> f64 {
        let ok = self.succeeded();
        if ok == 0 {
            return f64::NAN;
        }
        self.successes().map(|(_, r)| r.width()).sum::<f64>() / ok as f64
    }

    /// Datasets whose interval misses the true value.
    pub fn misses(&self) -> Vec<usize> {
        self.successes()
            .filter(|(_, r)| !r.covers(self.true_gamma1))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# true_gamma1\t{}", self.true_gamma1);
        let _ = writeln!(out, "# alpha\t{}", self.alpha);
        let _ = writeln!(out, "# datasets\t{}", self.datasets.len());
        let _ = writeln!(out, "# failures\t{}", self.failures().len());
        let _ = writeln!(out, "# coverage\t{}", self.coverage());
        let _ = writeln!(out, "# mean_width\t{}", self.mean_width());
        out.push_str("dataset\tk1\tk2\tgamma1_hat\tgamma2_hat\tlower\tupper\tcovered\tredraws\terror\n");
        for d in &self.datasets {
            match &d.result {
                Ok(r) => {
                    let _ = writeln!(
                        out,
                        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t",
                        d.index,
                        r.k1,
                        r.k2,
                        r.gamma1_hat,
                        r.gamma2_hat,
                        r.lower,
                        r.upper,
                        u8::from(r.covers(self.true_gamma1)),
                        r.redraws
                    );
                }
                Err(e) => {
                    let _ = writeln!(out, "{}\tNA\tNA\tNA\tNA\tNA\tNA\tNA\tNA\t{}", d.index, e);
                }
            }
        }
        out
    }
}

/// Run the bootstrap on `dataset_count` samples drawn from `scenario` and
/// collect interval coverage of the true γ₁. Dataset `d` uses the
/// scenario's replication `d` and bootstrap seed [`dataset_seed`].
pub fn coverage_experiment(
    scenario: &ScenarioSpec,
    config: &BootstrapConfig,
    dataset_count: usize,
) -> Result<CoverageReport, BootstrapError> {
    coverage_experiment_with(scenario, config, dataset_count, &config.replicate_estimator())
}

pub fn coverage_experiment_with<E: TailEstimator + ?Sized>(
    scenario: &ScenarioSpec,
    config: &BootstrapConfig,
    dataset_count: usize,
    estimator: &E,
) -> Result<CoverageReport, BootstrapError> {
    config.validate()?;
    scenario
        .validate()
        .map_err(|e| BootstrapError::InvalidConfig(e.to_string()))?;
    if dataset_count == 0 {
        return Err(BootstrapError::InvalidConfig("dataset count must be at least 1".into()));
    }
    let datasets = (0..dataset_count)
        .into_par_iter()
        .map(|d| {
            let ordered = scenario.replication(d as u64).order();
            let cfg = BootstrapConfig {
                seed: dataset_seed(config.seed, d as u64),
                ..*config
            };
            DatasetOutcome {
                index: d,
                result: bootstrap_ci_with(&ordered, &cfg, estimator),
            }
        })
        .collect();
    Ok(CoverageReport {
        true_gamma1: scenario.gamma1(),
        alpha: config.alpha,
        datasets,
    })
}
