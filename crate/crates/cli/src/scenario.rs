//! TOML scenario files for `cevi simulate`.
//!
//! ```toml
//! preset = "burr-heavy"          # or give [x] and [c] explicitly
//! n = 500
//! replications = 200
//! seed = 11
//! mode = "bias-rmse"
//! k_grid = [10, 20, 50]          # or [k_range] start/end/step
//!
//! [[estimators]]
//! family = "br-worms"
//! rho = -1.0
//! ```

use std::path::Path;

use censored_evi::estimators::EstimatorSpec;
use censored_evi::simulation::{Distribution, Preset};
use serde::Deserialize;

use crate::args::SimMode;
use crate::error::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub preset: Option<String>,
    pub x: Option<Distribution>,
    pub c: Option<Distribution>,
    pub n: Option<usize>,
    pub replications: Option<usize>,
    pub seed: Option<u64>,
    pub mode: Option<SimMode>,
    pub estimators: Option<Vec<EstimatorSpec>>,
    pub k_grid: Option<Vec<usize>>,
    pub k_range: Option<KRange>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KRange {
    pub start: usize,
    pub end: usize,
    #[serde(default = "one")]
    pub step: usize,
}

fn one() -> usize {
    1
}

impl KRange {
    pub fn values(self) -> Vec<usize> {
        (self.start..=self.end).step_by(self.step.max(1)).collect()
    }
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let file: ScenarioFile = toml::from_str(&text).map_err(|e| CliError::Scenario {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let bad = |message: &str| {
            Err(CliError::Scenario {
                path: path.to_path_buf(),
                message: message.into(),
            })
        };
        match (&file.preset, file.x, file.c) {
            (Some(_), None, None) | (None, Some(_), Some(_)) => {}
            (Some(_), _, _) => return bad("give either preset or both x and c, not both"),
            (None, _, _) => return bad("missing preset, or one of x and c"),
        }
        if file.k_grid.is_some() && file.k_range.is_some() {
            return bad("give either k_grid or k_range");
        }
        if let Some(p) = &file.preset {
            if p.parse::<Preset>().is_err() {
                return bad(&format!("unknown preset {p:?}"));
            }
        }
        Ok(file)
    }

    /// The `(X, C)` pair, from the preset or the explicit distributions.
    pub fn distributions(&self) -> (Distribution, Distribution) {
        match (&self.preset, self.x, self.c) {
            (Some(p), _, _) => p.parse::<Preset>().expect("validated on load").distributions(),
            (None, Some(x), Some(c)) => (x, c),
            _ => unreachable!("validated on load"),
        }
    }

    pub fn k_values(&self) -> Option<Vec<usize>> {
        self.k_grid.clone().or_else(|| self.k_range.map(KRange::values))
    }
}
