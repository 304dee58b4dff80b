//! Censored observations: ingestion, validation, ordering.
//!
//! An observation is the pair `(z, delta)` with `z = min(X, C)` and
//! `delta = 1{X <= C}`. Every estimator works on an [`OrderedSample`], which
//! holds the observations sorted ascending in `z` together with their
//! concomitant indicators.

use std::io::Read;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kaplan_meier::{km_survival, SurvivalCurve, SurvivalTarget};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SampleError {
    #[error("empty sample")]
    Empty,
    #[error("non-positive observation at index {index}: {value}")]
    NonPositive { index: usize, value: f64 },
    #[error("non-finite observation at index {index}")]
    NonFinite { index: usize },
    #[error("malformed censoring indicator at index {index}: {value:?} (expected 0 or 1)")]
    MalformedDelta { index: usize, value: String },
    #[error("malformed record at index {index}: {reason}")]
    MalformedRecord { index: usize, reason: String },
    #[error("k = {k} out of range 1..={max} for sample of size {n}", max = n.saturating_sub(1))]
    KOutOfRange { k: usize, n: usize },
    #[error("csv: {0}")]
    Csv(String),
}

/// One observed pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensoredObservation {
    pub z: f64,
    /// `true` when the observation is uncensored (`X <= C`).
    pub delta: bool,
}

/// Validated, unordered collection of censored observations.
#[derive(Debug, Clone, PartialEq)]
pub struct CensoredSample {
    observations: Vec<CensoredObservation>,
}

impl CensoredSample {
    pub fn new(observations: Vec<CensoredObservation>) -> Result<Self, SampleError> {
        if observations.is_empty() {
            return Err(SampleError::Empty);
        }
        for (index, obs) in observations.iter().enumerate() {
            if !obs.z.is_finite() {
                return Err(SampleError::NonFinite { index });
            }
            if obs.z <= 0.0 {
                return Err(SampleError::NonPositive { index, value: obs.z });
            }
        }
        Ok(Self { observations })
    }

    pub fn from_pairs<I>(records: I) -> Result<Self, SampleError>
    where
        I: IntoIterator<Item = (f64, bool)>,
    {
        Self::new(
            records
                .into_iter()
                .map(|(z, delta)| CensoredObservation { z, delta })
                .collect(),
        )
    }

    /// Ingest `(z, indicator)` records where the indicator must be 0 or 1.
    pub fn from_indicator_pairs<I>(records: I) -> Result<Self, SampleError>
    where
        I: IntoIterator<Item = (f64, i64)>,
    {
        let mut observations = Vec::new();
        for (index, (z, d)) in records.into_iter().enumerate() {
            let delta = match d {
                0 => false,
                1 => true,
                other => {
                    return Err(SampleError::MalformedDelta {
                        index,
                        value: other.to_string(),
                    })
                }
            };
            observations.push(CensoredObservation { z, delta });
        }
        Self::new(observations)
    }

    /// Read a CSV with header `z,delta`. Record indices in errors are
    /// zero-based and count data rows only.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self, SampleError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers().map_err(|e| SampleError::Csv(e.to_string()))?;
        let z_col = headers.iter().position(|h| h == "z");
        let d_col = headers.iter().position(|h| h == "delta");
        let (z_col, d_col) = match (z_col, d_col) {
            (Some(z), Some(d)) => (z, d),
            _ => {
                return Err(SampleError::Csv(format!(
                    "expected header with columns `z,delta`, found `{}`",
                    headers.iter().collect::<Vec<_>>().join(",")
                )))
            }
        };

        let mut observations = Vec::new();
        for (index, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| SampleError::MalformedRecord {
                index,
                reason: e.to_string(),
            })?;
            let z_field = record.get(z_col).ok_or_else(|| SampleError::MalformedRecord {
                index,
                reason: "missing z".into(),
            })?;
            let z: f64 = z_field.parse().map_err(|_| SampleError::MalformedRecord {
                index,
                reason: format!("unparseable z {z_field:?}"),
            })?;
            let d_field = record.get(d_col).unwrap_or("");
            let delta = parse_indicator(d_field).ok_or_else(|| SampleError::MalformedDelta {
                index,
                value: d_field.to_string(),
            })?;
            observations.push(CensoredObservation { z, delta });
        }
        Self::new(observations)
    }

    pub fn observations(&self) -> &[CensoredObservation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Copy with every indicator flipped; turns the censoring variable into
    /// the variable of interest.
    pub fn flipped(&self) -> Self {
        Self {
            observations: self
                .observations
                .iter()
                .map(|o| CensoredObservation { z: o.z, delta: !o.delta })
                .collect(),
        }
    }

    /// Copy with every `z` multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self, SampleError> {
        Self::new(
            self.observations
                .iter()
                .map(|o| CensoredObservation { z: o.z * factor, delta: o.delta })
                .collect(),
        )
    }

    pub fn order(&self) -> OrderedSample {
        order(self)
    }
}

fn parse_indicator(field: &str) -> Option<bool> {
    match field {
        "1" => Some(true),
        "0" => Some(false),
        _ => None,
    }
}

/// Observations sorted ascending by `z`, with indicator concomitants.
///
/// Kaplan-Meier curves are computed on first use and cached.
#[derive(Debug, Clone)]
pub struct OrderedSample {
    z: Vec<f64>,
    log_z: Vec<f64>,
    delta: Vec<bool>,
    event_curve: OnceLock<SurvivalCurve>,
    censor_curve: OnceLock<SurvivalCurve>,
}

impl PartialEq for OrderedSample {
    fn eq(&self, other: &Self) -> bool {
        self.z == other.z && self.delta == other.delta
    }
}

/// Sort a sample ascending in `z`. At tied `z`, uncensored observations take
/// the lower ranks; remaining ties keep input order.
pub fn order(sample: &CensoredSample) -> OrderedSample {
    let mut obs = sample.observations.clone();
    // stable: equal (z, delta) keep input order
    obs.sort_by(|a, b| a.z.total_cmp(&b.z).then_with(|| b.delta.cmp(&a.delta)));
    let z: Vec<f64> = obs.iter().map(|o| o.z).collect();
    let log_z = z.iter().map(|v| v.ln()).collect();
    let delta = obs.iter().map(|o| o.delta).collect();
    OrderedSample {
        z,
        log_z,
        delta,
        event_curve: OnceLock::new(),
        censor_curve: OnceLock::new(),
    }
}

impl OrderedSample {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// Order statistics `Z_{1,n} <= ... <= Z_{n,n}` (zero-based slice).
    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn log_z(&self) -> &[f64] {
        &self.log_z
    }

    pub fn delta(&self) -> &[bool] {
        &self.delta
    }

    pub fn as_sample(&self) -> CensoredSample {
        CensoredSample {
            observations: self
                .z
                .iter()
                .zip(&self.delta)
                .map(|(&z, &delta)| CensoredObservation { z, delta })
                .collect(),
        }
    }

    pub fn uncensored_count(&self) -> usize {
        self.delta.iter().filter(|&&d| d).count()
    }

    /// Cached Kaplan-Meier curve for the requested target.
    pub fn survival(&self, target: SurvivalTarget) -> &SurvivalCurve {
        match target {
            SurvivalTarget::Event => self.event_curve.get_or_init(|| km_survival(self, target)),
            SurvivalTarget::Censor => self.censor_curve.get_or_init(|| km_survival(self, target)),
        }
    }

    pub fn check_k(&self, k: usize) -> Result<(), SampleError> {
        let n = self.len();
        if k == 0 || k >= n {
            Err(SampleError::KOutOfRange { k, n })
        } else {
            Ok(())
        }
    }

    /// `p̂_k`: fraction of uncensored observations among the `k` largest.
    pub fn uncensored_proportion(&self, k: usize) -> Result<f64, SampleError> {
        self.check_k(k)?;
        Ok(self.top_uncensored(k) as f64 / k as f64)
    }

    pub(crate) fn top_uncensored(&self, k: usize) -> usize {
        self.delta[self.len() - k..].iter().filter(|&&d| d).count()
    }
}
