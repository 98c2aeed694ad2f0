//! Files written by `run`: samples.csv, summary.json, diagnostics.json,
//! config.json and, for the Smith model, extremal.csv.
//!
//! Everything except `meta.timing` in summary.json is a function of the
//! configuration and seed, so reruns reproduce the files byte for byte.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use abcscore_core::diagnostics::summarize;
use abcscore_core::{Error, Result, WeightedSample};

use crate::config::RunConfig;
use crate::pipeline::{streams, MethodRun, Session};

pub const SAMPLES_FILE: &str = "samples.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";
pub const CONFIG_FILE: &str = "config.json";
pub const EXTREMAL_FILE: &str = "extremal.csv";
pub const STUDY_FILE: &str = "study.csv";

/// Parameter columns followed by `weight`.
pub fn write_samples(w: impl Write, names: &[String], sample: &WeightedSample) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut header = names.to_vec();
    header.push("weight".into());
    wtr.write_record(&header).map_err(io)?;
    for i in 0..sample.len() {
        let mut rec: Vec<String> = sample.draws.row(i).iter().map(|v| v.to_string()).collect();
        rec.push(sample.weights[i].to_string());
        wtr.write_record(&rec).map_err(io)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn summary_json(cfg: &RunConfig, session: &Session, run: &MethodRun, runtime: Duration) -> Result<Value> {
    let s = summarize(&run.sample, &session.param_names)?;
    let m = &run.sample.meta;
    let finished = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64());
    Ok(json!({
        "model": cfg.model,
        "method": run.method,
        "parameters": s.parameters,
        "n_draws": s.n_draws,
        "ess": s.ess,
        "meta": {
            "seed": cfg.seed,
            "epsilon": m.epsilon,
            "alpha": m.alpha,
            "acceptance_rate": m.acceptance_rate,
            "n_proposals": m.n_proposals,
            "n_accepted": m.n_accepted,
            "omega_bar": session.godambe.omega_bar,
            "mcle": session.mcle,
            "timing": {
                "runtime_seconds": runtime.as_secs_f64(),
                "finished_unix": finished,
            },
        },
    }))
}

pub fn diagnostics_json(cfg: &RunConfig, session: &Session, run: &MethodRun) -> Value {
    let mut v = json!({
        "godambe": session.godambe,
        "rng": {
            "generator": "chacha8",
            "seed": cfg.seed,
            "streams": {
                "data": streams::DATA,
                "godambe": streams::GODAMBE,
                "sampler": streams::SAMPLER,
                "resample": streams::RESAMPLE,
                "design": streams::DESIGN,
                "summary_covariance": streams::SUMMARY_COVARIANCE,
            },
        },
        "sampler": run.sample.meta,
        "distance": run.distance,
        "model": session.extras,
    });
    if let Some(kl) = run.kl {
        v["kl"] = json!({ "direction": "KL(exact || approximate)", "value": kl });
    }
    v
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(v).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn write_run(dir: &Path, cfg: &RunConfig, session: &Session, run: &MethodRun, runtime: Duration) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_samples(fs::File::create(dir.join(SAMPLES_FILE))?, &session.param_names, &run.sample)?;
    write_json(&dir.join(SUMMARY_FILE), &summary_json(cfg, session, run, runtime)?)?;
    write_json(&dir.join(DIAGNOSTICS_FILE), &diagnostics_json(cfg, session, run))?;
    fs::write(dir.join(CONFIG_FILE), cfg.snapshot() + "\n")?;
    if let Some(curve) = &run.extremal {
        curve.write_csv(fs::File::create(dir.join(EXTREMAL_FILE))?)?;
    }
    Ok(())
}
