//! Kaplan-Meier survival curves evaluated at the order statistics.
//!
//! The curve for the event distribution `F` uses the indicators `delta`; the
//! curve for the censoring distribution `G` uses `1 - delta`. In both cases
//! the value at the sample maximum is set to exactly zero, so the top
//! observation never carries weight in the Kaplan-Meier weighted sums.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sample::OrderedSample;

/// Above this size the product is accumulated in log space.
const LOG_SPACE_THRESHOLD: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurvivalTarget {
    /// `1 - F`, driven by the uncensored observations.
    Event,
    /// `1 - G`, driven by the censored observations.
    Censor,
}

impl SurvivalTarget {
    fn exponent(self, delta: bool) -> bool {
        match self {
            SurvivalTarget::Event => delta,
            SurvivalTarget::Censor => !delta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("degenerate Kaplan-Meier denominator at k = {k}")]
pub struct DegenerateDenominator {
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurve {
    pub target: SurvivalTarget,
    /// `values[i]` is the survival estimate at `Z_{i+1,n}`.
    pub values: Vec<f64>,
    /// Whether the product at the maximum was non-zero before being forced.
    pub forced_zero_at_max: bool,
}

impl SurvivalCurve {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Threshold survival `Ŝ(Z_{n-k,n})`.
    pub fn at_threshold(&self, k: usize) -> f64 {
        self.values[self.values.len() - k - 1]
    }

    /// `Ŝ(Z_{n-j+1,n}) / Ŝ(Z_{n-k,n})` for `1 <= j <= k <= n-1`.
    pub fn ratio(&self, j: usize, k: usize) -> Result<f64, DegenerateDenominator> {
        let n = self.values.len();
        assert!(j >= 1 && j <= k && k < n, "survival_ratio requires 1 <= j <= k <= n-1");
        let denom = self.values[n - k - 1];
        if denom <= 0.0 {
            return Err(DegenerateDenominator { k });
        }
        Ok(self.values[n - j] / denom)
    }

    /// Relative KM mass on each spacing `(Z_{n-j,n}, Z_{n-j+1,n}]`, i.e. the
    /// left limit `Ŝ(Z_{n-j+1,n}-) / Ŝ(Z_{n-k,n}) = Ŝ(Z_{n-j,n}) / Ŝ(Z_{n-k,n})`
    /// for `j = 1..=k`, indexed by `j - 1`. The weight of the `j = k`
    /// spacing is always 1.
    ///
    /// The step function is constant on each spacing, so this is the exact
    /// integral of `Ŝ(u)/Ŝ(t)` against `d log u`; on uncensored data the
    /// weights are `j/k` and the Worms sum is the Hill estimator.
    pub(crate) fn weights(&self, k: usize) -> Result<Vec<f64>, DegenerateDenominator> {
        let n = self.values.len();
        let denom = self.values[n - k - 1];
        if denom <= 0.0 {
            return Err(DegenerateDenominator { k });
        }
        Ok((1..=k).map(|j| self.values[n - j - 1] / denom).collect())
    }
}

/// Product-limit estimate `Π_{m <= i+1} (1 - 1/(n-m+1))^{e_m}` at every rank.
pub fn km_survival(ordered: &OrderedSample, target: SurvivalTarget) -> SurvivalCurve {
    let n = ordered.len();
    let delta = ordered.delta();
    let mut values = Vec::with_capacity(n);

    if n > LOG_SPACE_THRESHOLD {
        let mut log_s = 0.0f64;
        for (m, &d) in delta.iter().enumerate() {
            if target.exponent(d) {
                // factor (n-m-1)/(n-m) with zero-based m
                let remaining = (n - m) as f64;
                log_s += (-1.0 / remaining).ln_1p();
            }
            values.push(log_s.exp());
        }
    } else {
        let mut s = 1.0f64;
        for (m, &d) in delta.iter().enumerate() {
            if target.exponent(d) {
                s *= 1.0 - 1.0 / (n - m) as f64;
            }
            values.push(s);
        }
    }

    let mut forced_zero_at_max = false;
    if let Some(last) = values.last_mut() {
        forced_zero_at_max = *last != 0.0;
        *last = 0.0;
    }
    SurvivalCurve {
        target,
        values,
        forced_zero_at_max,
    }
}

/// Free-function form of [`SurvivalCurve::ratio`].
pub fn survival_ratio(
    curve: &SurvivalCurve,
    j: usize,
    k: usize,
) -> Result<f64, DegenerateDenominator> {
    curve.ratio(j, k)
}
