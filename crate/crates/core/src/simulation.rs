//! Heavy-tailed samplers, censored-sample generation and the Monte-Carlo
//! bias/RMSE harness.

use std::fmt::Write as _;

use rand::distributions::Open01;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimators::TailEstimator;
use crate::numeric::CompensatedSum;
use crate::rng::{label, StreamKey};
use crate::sample::{CensoredObservation, CensoredSample};

/// Default Monte-Carlo replication count.
pub const DEFAULT_REPLICATIONS: usize = 200;
/// Default sample size.
pub const DEFAULT_SAMPLE_SIZE: usize = 500;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulationError {
    #[error("invalid distribution parameter: {0}")]
    InvalidDistribution(String),
    #[error("probability {0} outside (0, 1)")]
    ProbabilityOutOfRange(f64),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("unknown scenario preset {0:?} (expected burr-heavy, burr-even, burr-light or frechet)")]
    UnknownPreset(String),
}

/// Distribution of `X` or `C`, all with a positive extreme value index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Distribution {
    /// Survival `(η/(η + x^τ))^λ`.
    Burr { eta: f64, tau: f64, lambda: f64 },
    /// Survival `1 - exp(-x^{-α})`.
    Frechet { alpha: f64 },
    /// Strict Pareto on `x > 1`, survival `x^{-1/γ}`.
    Pareto { gamma: f64 },
}

fn positive(name: &str, v: f64) -> Result<(), SimulationError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(SimulationError::InvalidDistribution(format!("{name} must be positive, got {v}")))
    }
}

impl Distribution {
    pub fn burr(eta: f64, tau: f64, lambda: f64) -> Result<Self, SimulationError> {
        let d = Distribution::Burr { eta, tau, lambda };
        d.validate()?;
        Ok(d)
    }

    pub fn frechet(alpha: f64) -> Result<Self, SimulationError> {
        let d = Distribution::Frechet { alpha };
        d.validate()?;
        Ok(d)
    }

    pub fn pareto(gamma: f64) -> Result<Self, SimulationError> {
        let d = Distribution::Pareto { gamma };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        match *self {
            Distribution::Burr { eta, tau, lambda } => {
                positive("eta", eta)?;
                positive("tau", tau)?;
                positive("lambda", lambda)
            }
            Distribution::Frechet { alpha } => positive("alpha", alpha),
            Distribution::Pareto { gamma } => positive("gamma", gamma),
        }
    }

    pub fn true_evi(&self) -> f64 {
        match *self {
            Distribution::Burr { tau, lambda, .. } => 1.0 / (tau * lambda),
            Distribution::Frechet { alpha } => 1.0 / alpha,
            Distribution::Pareto { gamma } => gamma,
        }
    }

    /// Survival function `P(X > x)`.
    pub fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        match *self {
            Distribution::Burr { eta, tau, lambda } => (eta / (eta + x.powf(tau))).powf(lambda),
            Distribution::Frechet { alpha } => -(-x.powf(-alpha)).exp_m1(),
            Distribution::Pareto { gamma } => {
                if x <= 1.0 {
                    1.0
                } else {
                    x.powf(-1.0 / gamma)
                }
            }
        }
    }

    /// Inverse distribution function at non-exceedance probability `q`.
    pub fn quantile(&self, q: f64) -> Result<f64, SimulationError> {
        if !(q > 0.0 && q < 1.0) {
            return Err(SimulationError::ProbabilityOutOfRange(q));
        }
        Ok(self.quantile_unchecked(q))
    }

    fn quantile_unchecked(&self, q: f64) -> f64 {
        // -ln(1 - q), accurate for small q
        let neg_log_tail = -(-q).ln_1p();
        match *self {
            Distribution::Burr { eta, tau, lambda } => {
                (eta * (neg_log_tail / lambda).exp_m1()).powf(1.0 / tau)
            }
            Distribution::Frechet { alpha } => (-q.ln()).powf(-1.0 / alpha),
            Distribution::Pareto { gamma } => (gamma * neg_log_tail).exp(),
        }
    }

    /// `n` independent draws by inverse transform.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n)
            .map(|_| {
                let u: f64 = rng.sample(Open01);
                self.quantile_unchecked(u)
            })
            .collect()
    }
}

/// One simulation design: variable of interest, censoring variable and run
/// sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub x: Distribution,
    pub c: Distribution,
    pub n: usize,
    pub replications: usize,
    pub seed: u64,
}

/// The four designs of the reference simulation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// Burr(10,2,2) censored by Burr(10,5,2), p ≈ 0.286.
    BurrHeavy,
    /// Burr(10,2,1) censored by Burr(10,2,1), p = 0.5.
    BurrEven,
    /// Burr(10,5,2) censored by Burr(10,2,2), p ≈ 0.714.
    BurrLight,
    /// Fréchet(2) censored by Fréchet(1), p = 2/3.
    Frechet,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::BurrHeavy, Preset::BurrEven, Preset::BurrLight, Preset::Frechet];

    pub fn name(self) -> &'static str {
        match self {
            Preset::BurrHeavy => "burr-heavy",
            Preset::BurrEven => "burr-even",
            Preset::BurrLight => "burr-light",
            Preset::Frechet => "frechet",
        }
    }

    pub fn distributions(self) -> (Distribution, Distribution) {
        let burr = |eta, tau, lambda| Distribution::Burr { eta, tau, lambda };
        match self {
            Preset::BurrHeavy => (burr(10.0, 2.0, 2.0), burr(10.0, 5.0, 2.0)),
            Preset::BurrEven => (burr(10.0, 2.0, 1.0), burr(10.0, 2.0, 1.0)),
            Preset::BurrLight => (burr(10.0, 5.0, 2.0), burr(10.0, 2.0, 2.0)),
            Preset::Frechet => (
                Distribution::Frechet { alpha: 2.0 },
                Distribution::Frechet { alpha: 1.0 },
            ),
        }
    }

    pub fn scenario(self, n: usize, replications: usize, seed: u64) -> ScenarioSpec {
        let (x, c) = self.distributions();
        ScenarioSpec {
            x,
            c,
            n,
            replications,
            seed,
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = SimulationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| SimulationError::UnknownPreset(s.to_string()))
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), SimulationError> {
        self.x.validate()?;
        self.c.validate()?;
        if self.n < 2 {
            return Err(SimulationError::InvalidScenario(format!(
                "sample size must be at least 2, got {}",
                self.n
            )));
        }
        Ok(())
    }

    pub fn gamma1(&self) -> f64 {
        self.x.true_evi()
    }

    pub fn gamma2(&self) -> f64 {
        self.c.true_evi()
    }

    /// Index of the observed `Z`, `γ₁γ₂/(γ₁+γ₂)`.
    pub fn gamma(&self) -> f64 {
        let (g1, g2) = (self.gamma1(), self.gamma2());
        g1 * g2 / (g1 + g2)
    }

    /// Limiting tail proportion of uncensored observations, `γ₂/(γ₁+γ₂)`.
    pub fn p(&self) -> f64 {
        let (g1, g2) = (self.gamma1(), self.gamma2());
        g2 / (g1 + g2)
    }

    /// Stream key of replication (or dataset) `index`.
    pub fn replication_key(&self, index: u64) -> StreamKey {
        StreamKey::root(self.seed).indexed(label::REPLICATION, index)
    }

    /// Censored sample of replication `index`.
    pub fn replication(&self, index: u64) -> CensoredSample {
        generate_censored(self, self.replication_key(index))
    }
}

/// Draw `n` pairs `(min(X, C), X <= C)` with `X` and `C` from independent
/// substreams of `key`.
pub fn generate_censored(scenario: &ScenarioSpec, key: StreamKey) -> CensoredSample {
    let mut x_rng = key.child(label::X).rng();
    let mut c_rng = key.child(label::C).rng();
    let x = scenario.x.sample(scenario.n, &mut x_rng);
    let c = scenario.c.sample(scenario.n, &mut c_rng);
    censor(&x, &c)
}

pub(crate) fn censor(x: &[f64], c: &[f64]) -> CensoredSample {
    let observations = x
        .iter()
        .zip(c)
        .map(|(&x, &c)| CensoredObservation {
            z: x.min(c),
            delta: x <= c,
        })
        .collect();
    CensoredSample::new(observations).expect("samplers only produce positive finite values")
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasRmseRow {
    pub estimator: String,
    pub k: usize,
    /// `NaN` when no replication produced a defined estimate.
    pub bias: f64,
    pub rmse: f64,
    pub defined_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasRmseTable {
    pub true_gamma1: f64,
    pub replications: usize,
    pub rows: Vec<BiasRmseRow>,
}

impl BiasRmseTable {
    pub fn get(&self, estimator: &str, k: usize) -> Option<&BiasRmseRow> {
        self.rows.iter().find(|r| r.estimator == estimator && r.k == k)
    }

    pub fn rows_for<'a>(&'a self, estimator: &'a str) -> impl Iterator<Item = &'a BiasRmseRow> + 'a {
        self.rows.iter().filter(move |r| r.estimator == estimator)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("estimator\tk\tbias\trmse\tdefined_count\n");
        for r in &self.rows {
            let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}", r.estimator, r.k, r.bias, r.rmse, r.defined_count);
        }
        out
    }
}

/// Bias and RMSE of each estimator at each `k` over the scenario's
/// replications. Undefined estimates are left out of the cell aggregates
/// and show up as a lower `defined_count`.
pub fn mc_bias_rmse<E: TailEstimator>(
    scenario: &ScenarioSpec,
    estimators: &[E],
    k_grid: &[usize],
) -> Result<BiasRmseTable, SimulationError> {
    scenario.validate()?;
    if scenario.replications < 2 {
        return Err(SimulationError::InvalidScenario(
            "at least two replications are required".into(),
        ));
    }
    if let Some(&bad) = k_grid.iter().find(|&&k| k == 0 || k >= scenario.n) {
        return Err(SimulationError::InvalidScenario(format!(
            "k = {bad} outside 1..={}",
            scenario.n - 1
        )));
    }

    let per_replication: Vec<Vec<Option<f64>>> = (0..scenario.replications as u64)
        .into_par_iter()
        .map(|r| {
            let ordered = scenario.replication(r).order();
            estimators
                .iter()
                .flat_map(|e| {
                    let ordered = &ordered;
                    k_grid
                        .iter()
                        .map(move |&k| e.estimate(ordered, k).ok().filter(|v| v.is_finite()))
                })
                .collect()
        })
        .collect();

    let gamma1 = scenario.gamma1();
    let labels: Vec<String> = estimators.iter().map(|e| e.label()).collect();
    let mut rows = Vec::with_capacity(estimators.len() * k_grid.len());
    for (ei, label) in labels.iter().enumerate() {
        for (ki, &k) in k_grid.iter().enumerate() {
            let cell = ei * k_grid.len() + ki;
            let mut err = CompensatedSum::new();
            let mut sq = CompensatedSum::new();
            let mut count = 0usize;
            for est in per_replication.iter().filter_map(|rep| rep[cell]) {
                let e = est - gamma1;
                err.add(e);
                sq.add(e * e);
                count += 1;
            }
            let (bias, rmse) = if count == 0 {
                (f64::NAN, f64::NAN)
            } else {
                (err.value() / count as f64, (sq.value() / count as f64).sqrt())
            };
            rows.push(BiasRmseRow {
                estimator: label.clone(),
                k,
                bias,
                rmse,
                defined_count: count,
            });
        }
    }
    Ok(BiasRmseTable {
        true_gamma1: gamma1,
        replications: scenario.replications,
        rows,
    })
}
