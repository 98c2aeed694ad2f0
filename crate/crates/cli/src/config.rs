//! Run configuration: JSON schema, defaults and validation.
//!
//! Parsing happens in two passes. The top level is read with unknown keys
//! rejected; `params` is then decoded against the struct for the selected
//! model so that its errors carry a `params.`-prefixed key path.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use abcscore_core::models::smith::{self, Cov2};
use abcscore_core::models::SmithModel;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    NormalParabola,
    Equicorr,
    Probit,
    Smith,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    AbcCs,
    AbcSuffstat,
    AbcCounts,
    PairwiseMcmc,
    CalibratedPairwiseMcmc,
    FullMcmc,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::AbcCs => "abc-cs",
            Method::AbcSuffstat => "abc-suffstat",
            Method::AbcCounts => "abc-counts",
            Method::PairwiseMcmc => "pairwise-mcmc",
            Method::CalibratedPairwiseMcmc => "calibrated-pairwise-mcmc",
            Method::FullMcmc => "full-mcmc",
        }
    }

    pub fn is_abc(self) -> bool {
        matches!(self, Method::AbcCs | Method::AbcSuffstat | Method::AbcCounts)
    }
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::NormalParabola => "normal-parabola",
            ModelKind::Equicorr => "equicorr",
            ModelKind::Probit => "probit",
            ModelKind::Smith => "smith",
        }
    }
}

/// Summary statistic used by `abc-suffstat` on the normal parabola.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NpSuffstat {
    /// (Σy, Σy²)
    T,
    /// (ȳ, s)
    T1,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormalParabolaParams {
    pub n: usize,
    pub theta: f64,
    pub prior_upper: f64,
    pub grid_size: usize,
    pub suffstat: NpSuffstat,
}

impl Default for NormalParabolaParams {
    fn default() -> Self {
        NormalParabolaParams {
            n: 50,
            theta: 5.0,
            prior_upper: 15.0,
            grid_size: 4096,
            suffstat: NpSuffstat::T1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquicorrParams {
    pub n: usize,
    pub q: usize,
    pub mu: f64,
    pub sigma2: f64,
    pub rho: f64,
    pub sufficient_simulation: bool,
}

impl Default for EquicorrParams {
    fn default() -> Self {
        EquicorrParams {
            n: 30,
            q: 50,
            mu: 0.0,
            sigma2: 1.0,
            rho: 0.5,
            sufficient_simulation: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbitParams {
    pub n: usize,
    pub q: usize,
    pub beta0: f64,
    pub beta1: f64,
    pub sigma2: f64,
}

impl Default for ProbitParams {
    fn default() -> Self {
        ProbitParams {
            n: 30,
            q: 10,
            beta0: 0.5,
            beta1: 1.5,
            sigma2: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmithParams {
    /// Stations on a `grid_side × grid_side` grid when no files are given.
    pub grid_side: usize,
    pub spacing: f64,
    pub n_years: usize,
    /// (σ₁₁, σ₁₂, σ₂₂, β^μ, β^λ, ξ) used to simulate the data.
    pub theta: Vec<f64>,
    pub stations: Option<PathBuf>,
    pub maxima: Option<PathBuf>,
}

impl Default for SmithParams {
    fn default() -> Self {
        SmithParams {
            grid_side: 3,
            spacing: 10.0,
            n_years: 60,
            theta: vec![100.0, 30.0, 150.0, 30.0, 0.1, -0.05, 8.0, 0.02, 0.01, 0.3],
            stations: None,
            maxima: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ModelParams {
    NormalParabola(NormalParabolaParams),
    Equicorr(EquicorrParams),
    Probit(ProbitParams),
    Smith(SmithParams),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    pub n_proposals: usize,
    pub alpha: f64,
    pub proposal_df: f64,
    /// Multiplier of V(θ̃) in the t proposal scale matrix.
    pub proposal_scale: f64,
    /// Resample the accepted draws to this many equal-weight rows.
    pub resample: Option<usize>,
    pub mcmc_iterations: usize,
    pub burn_in: usize,
    /// Random-walk covariance multiplier; 2.4²/d when absent.
    pub mcmc_scale: Option<f64>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            n_proposals: 1_000_000,
            alpha: 0.001,
            proposal_df: 5.0,
            proposal_scale: 5.0,
            resample: None,
            mcmc_iterations: 30_000,
            burn_in: 5000,
            mcmc_scale: None,
        }
    }
}

/// Precision matrix of the ABC distance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecisionChoice {
    /// G(θ̃) for a raw summary with the dimension of θ, none otherwise
    /// (ABC-cs summaries are already whitened).
    Godambe,
    None,
    /// Inverse of the summary covariance simulated at θ̃.
    Simulated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistanceConfig {
    pub precision: PrecisionChoice,
}

impl Default for DistanceConfig {
    fn default() -> Self {
        DistanceConfig {
            precision: PrecisionChoice::Godambe,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    pub n_trials: Option<usize>,
    /// Methods compared in every trial; defaults to the run's method.
    #[serde(default)]
    pub methods: Vec<Method>,
}

/// Fully validated configuration; serializes back to an accepted input.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub model: ModelKind,
    pub method: Method,
    pub seed: u64,
    pub params: ModelParams,
    pub sampler: SamplerConfig,
    pub godambe_replications: usize,
    pub distance: DistanceConfig,
    pub output_dir: Option<PathBuf>,
    pub study: Option<StudySection>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: ModelKind,
    method: Method,
    seed: u64,
    #[serde(default)]
    params: Option<serde_json::Value>,
    #[serde(default)]
    sampler: SamplerConfig,
    #[serde(default = "default_replications")]
    godambe_replications: usize,
    #[serde(default)]
    distance: DistanceConfig,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    study: Option<StudySection>,
}

fn default_replications() -> usize {
    abcscore_core::estimating::DEFAULT_REPLICATIONS
}

fn decode<T: DeserializeOwned>(value: serde_json::Value, prefix: &str) -> Result<T, CliError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let path = if inner == "." {
            prefix.to_string()
        } else {
            format!("{prefix}.{inner}")
        };
        CliError::config(path, e.into_inner().to_string())
    })
}

pub fn parse_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config("", format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = parse_config_str(&text)?;
    // relative data paths are relative to the config file
    if let ModelParams::Smith(p) = &mut cfg.params {
        let base = path.parent().unwrap_or(Path::new("."));
        for f in [&mut p.stations, &mut p.maxima].into_iter().flatten() {
            if f.is_relative() {
                *f = base.join(&*f);
            }
        }
    }
    Ok(cfg)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig, CliError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        CliError::config(if path == "." { String::new() } else { path }, e.into_inner().to_string())
    })?;
    let params_value = match raw.params {
        Some(serde_json::Value::Null) | None => serde_json::Value::Object(Default::default()),
        Some(v) => v,
    };
    let params = match raw.model {
        ModelKind::NormalParabola => ModelParams::NormalParabola(decode(params_value, "params")?),
        ModelKind::Equicorr => ModelParams::Equicorr(decode(params_value, "params")?),
        ModelKind::Probit => ModelParams::Probit(decode(params_value, "params")?),
        ModelKind::Smith => ModelParams::Smith(decode(params_value, "params")?),
    };
    let cfg = RunConfig {
        model: raw.model,
        method: raw.method,
        seed: raw.seed,
        params,
        sampler: raw.sampler,
        godambe_replications: raw.godambe_replications,
        distance: raw.distance,
        output_dir: raw.output_dir,
        study: raw.study,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Whether `method` can be run on `model`; `q` is the probit cluster size.
pub fn supported(model: ModelKind, method: Method, q: Option<usize>) -> bool {
    use Method::*;
    match (model, method) {
        (_, AbcCs | PairwiseMcmc | CalibratedPairwiseMcmc) => true,
        (ModelKind::NormalParabola | ModelKind::Equicorr, AbcSuffstat | FullMcmc) => true,
        (ModelKind::Probit, AbcCounts) => true,
        (ModelKind::Probit, FullMcmc) => q == Some(2),
        _ => false,
    }
}

fn check(ok: bool, path: &str, msg: impl Into<String>) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::config(path, msg.into()))
    }
}

impl RunConfig {
    fn probit_q(&self) -> Option<usize> {
        match &self.params {
            ModelParams::Probit(p) => Some(p.q),
            _ => None,
        }
    }

    /// Methods run by `study`, the run's own method when none are listed.
    pub fn study_methods(&self) -> Vec<Method> {
        match &self.study {
            Some(s) if !s.methods.is_empty() => s.methods.clone(),
            _ => vec![self.method],
        }
    }

    pub fn study_trials(&self) -> usize {
        let default = match self.model {
            ModelKind::NormalParabola => 50,
            _ => 20,
        };
        self.study.as_ref().and_then(|s| s.n_trials).unwrap_or(default)
    }

    fn check_method(&self, method: Method, path: &str) -> Result<(), CliError> {
        check(
            supported(self.model, method, self.probit_q()),
            path,
            format!(
                "method {} is not supported for model {}{}",
                method.as_str(),
                self.model.as_str(),
                if self.model == ModelKind::Probit && method == Method::FullMcmc {
                    " unless q = 2"
                } else {
                    ""
                }
            ),
        )
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.check_method(self.method, "method")?;
        if let Some(s) = &self.study {
            for (i, m) in s.methods.iter().enumerate() {
                self.check_method(*m, &format!("study.methods[{i}]"))?;
            }
            check(s.n_trials != Some(0), "study.n_trials", "must be at least 1")?;
        }

        let s = &self.sampler;
        check(s.alpha > 0.0 && s.alpha <= 1.0, "sampler.alpha", format!("must lie in (0, 1], got {}", s.alpha))?;
        check(
            s.n_proposals as f64 * s.alpha >= 1.0 - 1e-9,
            "sampler.n_proposals",
            format!("{} proposals accept nothing at alpha = {}", s.n_proposals, s.alpha),
        )?;
        check(s.proposal_df > 0.0, "sampler.proposal_df", "must be positive")?;
        check(s.proposal_scale > 0.0, "sampler.proposal_scale", "must be positive")?;
        check(s.resample != Some(0), "sampler.resample", "must be at least 1")?;
        check(
            s.burn_in < s.mcmc_iterations,
            "sampler.burn_in",
            format!("burn-in {} leaves nothing of {} iterations", s.burn_in, s.mcmc_iterations),
        )?;
        check(
            s.mcmc_scale.is_none_or(|v| v > 0.0),
            "sampler.mcmc_scale",
            "must be positive",
        )?;
        check(
            self.godambe_replications >= abcscore_core::estimating::MIN_REPLICATIONS,
            "godambe_replications",
            format!("at least {} required", abcscore_core::estimating::MIN_REPLICATIONS),
        )?;

        match &self.params {
            ModelParams::NormalParabola(p) => {
                check(p.n >= 2, "params.n", "need at least two observations")?;
                check(p.prior_upper > 0.0, "params.prior_upper", "must be positive")?;
                check(
                    p.theta > 0.0 && p.theta < p.prior_upper,
                    "params.theta",
                    format!("must lie in (0, {})", p.prior_upper),
                )?;
                check(p.grid_size >= 2, "params.grid_size", "need at least two points")?;
            }
            ModelParams::Equicorr(p) => {
                check(p.n >= 2, "params.n", "need at least two clusters")?;
                check(p.q >= 2, "params.q", "need clusters of size at least two")?;
                check(p.sigma2 > 0.0, "params.sigma2", "must be positive")?;
                let lo = -1.0 / (p.q as f64 - 1.0);
                check(
                    p.rho > lo && p.rho < 1.0,
                    "params.rho",
                    format!("must lie in ({lo}, 1) for q = {}", p.q),
                )?;
            }
            ModelParams::Probit(p) => {
                check(p.n >= 1, "params.n", "need at least one cluster")?;
                check(p.q >= 2, "params.q", "need at least two time points")?;
                check(p.sigma2 > 0.0, "params.sigma2", "must be positive (θ uses log σ²)")?;
                check(
                    p.beta0.is_finite() && p.beta1.is_finite(),
                    "params",
                    "coefficients must be finite",
                )?;
            }
            ModelParams::Smith(p) => {
                check(
                    p.theta.len() == smith::DIM,
                    "params.theta",
                    format!("needs {} entries, got {}", smith::DIM, p.theta.len()),
                )?;
                check(p.theta.iter().all(|v| v.is_finite()), "params.theta", "entries must be finite")?;
                Cov2::new(p.theta[0], p.theta[1], p.theta[2])
                    .map_err(|_| {
                        CliError::config(
                            "params.theta",
                            format!(
                                "Σ = [[{}, {}], [{}, {}]] is not positive definite (σ₁₂² must be below σ₁₁σ₂₂)",
                                p.theta[0], p.theta[1], p.theta[1], p.theta[2]
                            ),
                        )
                    })?;
                check(
                    p.stations.is_some() == p.maxima.is_some(),
                    "params",
                    "stations and maxima files must be given together",
                )?;
                if p.stations.is_none() {
                    check(p.grid_side >= 2, "params.grid_side", "need at least a 2 × 2 grid")?;
                    check(p.spacing > 0.0, "params.spacing", "must be positive")?;
                    check(p.n_years >= 1, "params.n_years", "need at least one year")?;
                    let model = SmithModel::grid(p.grid_side, p.spacing, p.n_years)
                        .map_err(|e| CliError::config("params", e.to_string()))?;
                    model
                        .margins(&p.theta)
                        .map_err(|e| CliError::config("params.theta", e.to_string()))?;
                }
            }
        }
        Ok(())
    }

    pub fn snapshot(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
