use std::fmt::Write as _;
use std::path::Path;

use censored_evi::bootstrap::{
    bootstrap_ci, coverage_experiment, BootstrapConfig, KMode, DEFAULT_FIXED_FRACTION,
};
use censored_evi::estimators::{
    estimator_path, EstimatorParams, EstimatorSpec, Target, DEFAULT_RHO_GRID,
};
use censored_evi::kaplan_meier::SurvivalTarget;
use censored_evi::sample::{CensoredSample, OrderedSample};
use censored_evi::simulation::{
    mc_bias_rmse, Preset, ScenarioSpec, DEFAULT_REPLICATIONS, DEFAULT_SAMPLE_SIZE,
};
use serde::Serialize;

use crate::args::{BootstrapArgs, BootstrapCiArgs, EstimateArgs, KModeArg, KmArgs, SimMode, SimulateArgs};
use crate::error::CliError;
use crate::manifest::{InputDigest, RunManifest};
use crate::scenario::ScenarioFile;

/// Default k grid for simulation studies: 5, 10, ..., 250.
const DEFAULT_K_GRID: (usize, usize, usize) = (5, 250, 5);

/// A finished run: the primary output and its manifest.
pub struct Run {
    pub output: String,
    pub manifest: RunManifest,
}

fn read_sample(path: &Path) -> Result<(OrderedSample, InputDigest), CliError> {
    let bytes = std::fs::read(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let sample = CensoredSample::from_csv_reader(bytes.as_slice()).map_err(|source| CliError::Data {
        path: path.to_path_buf(),
        source,
    })?;
    Ok((sample.order(), InputDigest::of(path, &bytes)))
}

fn fmt_estimate(v: Option<f64>) -> (String, u8) {
    match v {
        Some(v) => (v.to_string(), 1),
        None => ("NA".into(), 0),
    }
}

#[derive(Serialize)]
struct EstimateConfig {
    estimators: Vec<EstimatorSpec>,
    k_min: usize,
    k_max: usize,
}

pub fn estimate(args: &EstimateArgs) -> Result<Run, CliError> {
    let (ordered, digest) = read_sample(&args.input)?;
    let n = ordered.len();
    if n < 2 {
        return Err(CliError::Usage(format!("need at least 2 observations, got {n}")));
    }
    let k_max = args.k_max.unwrap_or(n - 1);

    let uses_rho = args.family.uses_rho();
    if !uses_rho && !args.rho.is_empty() {
        return Err(CliError::Usage(format!("family {} takes no --rho", args.family)));
    }
    let rhos: Vec<Option<f64>> = match (uses_rho, args.rho.is_empty()) {
        (false, _) => vec![None],
        (true, true) => DEFAULT_RHO_GRID.iter().copied().map(Some).collect(),
        (true, false) => args.rho.iter().copied().map(Some).collect(),
    };
    let specs = rhos
        .iter()
        .map(|&rho| {
            EstimatorSpec::try_from(EstimatorParams {
                family: args.family,
                rho,
                omega: args.omega,
                a: args.a,
                b: args.b,
                target: Some(args.target.into()),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut out = String::new();
    out.push_str(if uses_rho { "rho\tk\testimate\tdefined\n" } else { "k\testimate\tdefined\n" });
    for spec in &specs {
        let path = estimator_path(&ordered, *spec, args.k_min, k_max)?;
        for (k, v) in path.iter() {
            let (est, defined) = fmt_estimate(v);
            if let Some(rho) = spec.rho() {
                let _ = write!(out, "{rho}\t");
            }
            let _ = writeln!(out, "{k}\t{est}\t{defined}");
        }
    }

    let mut manifest = RunManifest::new(
        "estimate",
        EstimateConfig {
            estimators: specs,
            k_min: args.k_min,
            k_max,
        },
    );
    manifest.input = Some(digest);
    Ok(Run { output: out, manifest })
}

#[derive(Serialize)]
struct KmConfig {
    target: SurvivalTarget,
}

pub fn km(args: &KmArgs) -> Result<Run, CliError> {
    let (ordered, digest) = read_sample(&args.input)?;
    let target: SurvivalTarget = args.target.into();
    let curve = ordered.survival(target);
    let mut out = String::from("rank\tz\tsurvival\n");
    for (i, (z, s)) in ordered.z().iter().zip(&curve.values).enumerate() {
        let _ = writeln!(out, "{}\t{z}\t{s}", i + 1);
    }
    let mut manifest = RunManifest::new("km", KmConfig { target });
    manifest.input = Some(digest);
    Ok(Run { output: out, manifest })
}

fn bootstrap_config(b: &BootstrapArgs, n: usize, seed: u64) -> Result<BootstrapConfig, CliError> {
    let k_mode = match b.k_mode {
        KModeArg::Adaptive => {
            if b.k1.is_some() || b.k2.is_some() {
                return Err(CliError::Usage("--k1/--k2 need --k-mode fixed".into()));
            }
            KMode::Adaptive { epsilon: b.epsilon }
        }
        KModeArg::Fixed => {
            let KMode::Fixed { k1, k2 } = KMode::fixed_fraction(n, DEFAULT_FIXED_FRACTION) else {
                unreachable!()
            };
            let (k1, k2) = (b.k1.unwrap_or(k1), b.k2.unwrap_or(k2));
            for (name, k) in [("k1", k1), ("k2", k2)] {
                if k == 0 || k >= n {
                    return Err(CliError::Usage(format!("--{name} = {k} outside 1..={}", n - 1)));
                }
            }
            KMode::Fixed { k1, k2 }
        }
    };
    let config = BootstrapConfig {
        rho1: b.rho1,
        rho2: b.rho2,
        omega: b.omega,
        replicates: b.replicates,
        alpha: b.alpha,
        k_mode,
        seed,
        gamma2_source: b.gamma2_source.into(),
    };
    config.validate()?;
    Ok(config)
}

#[derive(Serialize)]
struct CiRecord {
    k1: usize,
    k2: usize,
    gamma1_hat: f64,
    gamma2_hat: f64,
    alpha: f64,
    lower: f64,
    upper: f64,
    replicates: usize,
    redraws: usize,
}

/// Bootstrap run: a human summary for stdout plus the JSON record.
pub struct CiRun {
    pub summary: String,
    pub run: Run,
}

pub fn bootstrap(args: &BootstrapCiArgs) -> Result<CiRun, CliError> {
    let (ordered, digest) = read_sample(&args.input)?;
    let config = bootstrap_config(&args.bootstrap, ordered.len(), args.seed)?;
    let r = bootstrap_ci(&ordered, &config)?;
    let record = CiRecord {
        k1: r.k1,
        k2: r.k2,
        gamma1_hat: r.gamma1_hat,
        gamma2_hat: r.gamma2_hat,
        alpha: r.alpha,
        lower: r.lower,
        upper: r.upper,
        replicates: r.replicates.len(),
        redraws: r.redraws,
    };

    let mut summary = String::new();
    let level = (1e8 * (1.0 - r.alpha)).round() / 1e6;
    let _ = writeln!(summary, "n = {}, uncensored = {}", ordered.len(), ordered.uncensored_count());
    let _ = writeln!(summary, "k1 = {}, gamma1_hat = {:.6}", r.k1, r.gamma1_hat);
    let _ = writeln!(summary, "k2 = {}, gamma2_hat = {:.6}", r.k2, r.gamma2_hat);
    let _ = writeln!(
        summary,
        "{level}% interval for gamma1: [{:.6}, {:.6}] from {} replicates ({} redraws)",
        r.lower,
        r.upper,
        r.replicates.len(),
        r.redraws
    );

    let mut output = serde_json::to_string(&record).expect("record serialises");
    output.push('\n');
    let mut manifest = RunManifest::new("bootstrap-ci", config);
    manifest.seed = Some(args.seed);
    manifest.input = Some(digest);
    Ok(CiRun {
        summary,
        run: Run { output, manifest },
    })
}

#[derive(Serialize)]
struct SimulateConfig {
    scenario: ScenarioSpec,
    mode: SimMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    estimators: Option<Vec<EstimatorSpec>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_grid: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bootstrap: Option<BootstrapConfig>,
}

/// Estimators compared in a bias/RMSE study when none are given.
pub fn default_estimators(rho: f64, omega: f64) -> Vec<EstimatorSpec> {
    let t = Target::Gamma1;
    vec![
        EstimatorSpec::CensoredHill,
        EstimatorSpec::Worms { target: t },
        EstimatorSpec::WormsKm,
        EstimatorSpec::BayesMdi,
        EstimatorSpec::Ep { rho },
        EstimatorSpec::EpShrink { rho, omega },
        EstimatorSpec::BrWorms { rho, target: t },
        EstimatorSpec::BrWormsShrink { rho, omega, target: t },
    ]
}

pub fn simulate(args: &SimulateArgs) -> Result<Run, CliError> {
    let file = match &args.scenario_file {
        Some(path) => ScenarioFile::load(path)?,
        None => {
            let name = args.scenario.as_deref().expect("clap requires a scenario");
            let preset: Preset = name.parse()?;
            ScenarioFile {
                preset: Some(preset.name().into()),
                ..ScenarioFile::default()
            }
        }
    };
    let (x, c) = file.distributions();
    let mode = args.mode.or(file.mode).unwrap_or(SimMode::BiasRmse);
    let scenario = ScenarioSpec {
        x,
        c,
        n: args.n.or(file.n).unwrap_or(DEFAULT_SAMPLE_SIZE),
        replications: args.reps.or(file.replications).unwrap_or(DEFAULT_REPLICATIONS),
        seed: args.seed.or(file.seed).unwrap_or(0),
    };
    scenario.validate()?;

    let (output, config) = match mode {
        SimMode::BiasRmse => {
            let estimators = file
                .estimators
                .clone()
                .unwrap_or_else(|| default_estimators(args.bootstrap.rho1, args.bootstrap.omega));
            let k_grid: Vec<usize> = match file.k_values() {
                Some(ks) => ks,
                None => {
                    let (lo, hi, step) = DEFAULT_K_GRID;
                    (lo..=hi).step_by(step).filter(|&k| k < scenario.n).collect()
                }
            };
            if k_grid.is_empty() {
                return Err(CliError::Usage(format!("empty k grid for n = {}", scenario.n)));
            }
            let table = mc_bias_rmse(&scenario, &estimators, &k_grid)?;
            let config = SimulateConfig {
                scenario,
                mode,
                estimators: Some(estimators),
                k_grid: Some(k_grid),
                bootstrap: None,
            };
            (table.to_tsv(), config)
        }
        SimMode::Coverage => {
            if file.estimators.is_some() || file.k_values().is_some() {
                return Err(CliError::Usage(
                    "estimators and k grids apply to bias-rmse studies only".into(),
                ));
            }
            let bootstrap = bootstrap_config(&args.bootstrap, scenario.n, scenario.seed)?;
            let report = coverage_experiment(&scenario, &bootstrap, scenario.replications)?;
            let config = SimulateConfig {
                scenario,
                mode,
                estimators: None,
                k_grid: None,
                bootstrap: Some(bootstrap),
            };
            (report.to_tsv(), config)
        }
    };
    let seed = config.scenario.seed;
    let mut manifest = RunManifest::new("simulate", config);
    manifest.seed = Some(seed);
    Ok(Run { output, manifest })
}
