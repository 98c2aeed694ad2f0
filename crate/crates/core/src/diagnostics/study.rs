use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numkernel::RngStream;

/// Stream ids of consecutive trials are this far apart.
pub const TRIAL_STRIDE: u64 = 1_000_000;

#[derive(Clone, Debug, Serialize)]
pub struct StudyConfig {
    pub n_trials: usize,
    pub seed: u64,
    pub methods: Vec<String>,
    pub param_names: Vec<String>,
    /// Serialized run configuration, stored verbatim with the results.
    pub config_snapshot: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MethodOutcome {
    pub method: String,
    pub mean: Option<Vec<f64>>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub stream_id: u64,
    pub outcomes: Vec<MethodOutcome>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StudyResult {
    pub config: StudyConfig,
    pub trials: Vec<TrialRecord>,
}

/// Runs `trial(t, stream)` for every trial, where `stream` has id
/// t·10⁶ under the study seed. The closure returns one posterior mean (or
/// error) per method; a trial-level error marks every method missing.
/// Trials run concurrently and are reported in index order.
pub fn run_study<F>(config: &StudyConfig, trial: F) -> Result<StudyResult>
where
    F: Fn(usize, RngStream) -> Result<Vec<Result<Vec<f64>>>> + Sync,
{
    if config.n_trials == 0 {
        return Err(Error::InvalidInput("study needs at least one trial".into()));
    }
    let trials = (0..config.n_trials)
        .into_par_iter()
        .map(|t| {
            let stream = RngStream::new(config.seed, t as u64 * TRIAL_STRIDE);
            let outcomes = match trial(t, stream) {
                Ok(per_method) if per_method.len() == config.methods.len() => config
                    .methods
                    .iter()
                    .zip(per_method)
                    .map(|(m, r)| match r {
                        Ok(mean) => MethodOutcome {
                            method: m.clone(),
                            mean: Some(mean),
                            error: None,
                        },
                        Err(e) => MethodOutcome {
                            method: m.clone(),
                            mean: None,
                            error: Some(e.to_string()),
                        },
                    })
                    .collect(),
                Ok(per_method) => missing(
                    &config.methods,
                    &format!("trial returned {} results for {} methods", per_method.len(), config.methods.len()),
                ),
                Err(e) => missing(&config.methods, &e.to_string()),
            };
            TrialRecord {
                trial: t,
                seed: stream.seed,
                stream_id: stream.stream_id,
                outcomes,
            }
        })
        .collect();
    Ok(StudyResult {
        config: config.clone(),
        trials,
    })
}

fn missing(methods: &[String], msg: &str) -> Vec<MethodOutcome> {
    methods
        .iter()
        .map(|m| MethodOutcome {
            method: m.clone(),
            mean: None,
            error: Some(msg.to_string()),
        })
        .collect()
}

impl StudyResult {
    /// Posterior means of `method` across trials, `None` where it failed.
    pub fn column(&self, method: &str) -> Vec<Option<Vec<f64>>> {
        self.trials
            .iter()
            .map(|t| {
                t.outcomes
                    .iter()
                    .find(|o| o.method == method)
                    .and_then(|o| o.mean.clone())
            })
            .collect()
    }

    /// One row per (trial, method): `trial,seed,stream_id,method,<params>,error`.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Io(e.to_string());
        let mut header: Vec<String> = ["trial", "seed", "stream_id", "method"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend(self.config.param_names.iter().cloned());
        header.push("error".into());
        wtr.write_record(&header).map_err(io)?;
        let d = self.config.param_names.len();
        for t in &self.trials {
            for o in &t.outcomes {
                let mut rec = vec![
                    t.trial.to_string(),
                    t.seed.to_string(),
                    t.stream_id.to_string(),
                    o.method.clone(),
                ];
                match &o.mean {
                    Some(m) => rec.extend(m.iter().map(|v| v.to_string())),
                    None => rec.extend(std::iter::repeat_n(String::new(), d)),
                }
                rec.push(o.error.clone().unwrap_or_default());
                wtr.write_record(&rec).map_err(io)?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}
