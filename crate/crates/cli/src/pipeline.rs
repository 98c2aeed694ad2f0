//! Experiment orchestration: observed data, MCLE, Godambe estimate and the
//! requested posterior samplers for one model.

use serde_json::{json, Map, Value};

use abcscore_core::diagnostics::{
    extremal_curve, kl_divergence_1d, station_offsets, ExtremalCurve,
};
use abcscore_core::estimating::{
    composite_score, estimate_godambe, simulated_summary_covariance, solve_mcle,
};
use abcscore_core::models::normal_parabola::NpData;
use abcscore_core::models::{
    DataFn, EquicorrData, EquicorrModel, Model, NormalParabola, ProbitData, ProbitModel,
    SmithData, SmithModel, SpatialDataset,
};
use abcscore_core::numkernel::MultivariateT;
use abcscore_core::samplers::{
    abc_importance, abc_reject, resample, rw_metropolis, SummaryTarget,
};
use abcscore_core::{DistanceSpec, Error, GodambeEstimate, Matrix, Result, RngStream, WeightedSample};

use crate::config::{Method, ModelParams, NpSuffstat, PrecisionChoice, RunConfig};

/// Child stream ids under the run stream.
pub mod streams {
    pub const DATA: u64 = 1;
    pub const GODAMBE: u64 = 2;
    pub const SAMPLER: u64 = 3;
    pub const RESAMPLE: u64 = 4;
    pub const DESIGN: u64 = 5;
    pub const SUMMARY_COVARIANCE: u64 = 6;
}

/// Quantities shared by every method of one run.
#[derive(Clone, Debug)]
pub struct Session {
    pub param_names: Vec<String>,
    pub mcle: Vec<f64>,
    pub godambe: GodambeEstimate,
    /// Model-specific diagnostics (probit floor hits, data shape, …).
    pub extras: Map<String, Value>,
}

#[derive(Clone, Debug)]
pub struct MethodRun {
    pub method: Method,
    pub sample: WeightedSample,
    /// Distance used by an ABC method, for the diagnostics file.
    pub distance: Option<Value>,
    pub kl: Option<f64>,
    pub extremal: Option<ExtremalCurve>,
}

/// Runs `methods` on the model of `cfg`. Data, MCLE and Godambe estimate are
/// computed once; each method failure is reported in its own slot.
pub fn execute(cfg: &RunConfig, methods: &[Method], root: RngStream) -> Result<(Session, Vec<Result<MethodRun>>)> {
    match &cfg.params {
        ModelParams::NormalParabola(p) => {
            let model = NormalParabola::new(p.n, p.prior_upper)?;
            let data = model.simulate(&[p.theta], &mut root.child(streams::DATA).generator())?;
            let theta_hat = NormalParabola::mle(&data);
            let info = model.info(theta_hat)?;
            let est = GodambeEstimate::from_matrices(vec![theta_hat], Matrix::diag(&[info]), Matrix::diag(&[info]))?;
            let exact = model.exact_posterior(&data, p.grid_size)?;
            let suffstat = p.suffstat;
            let hooks = Hooks {
                from_prior: true,
                cs_distance: Some(DistanceSpec::l1()),
                extra_target: Box::new(move |y: &NpData| {
                    let f = move |d: &NpData| -> Vec<f64> {
                        match suffstat {
                            NpSuffstat::T => d.t(),
                            NpSuffstat::T1 => d.t1(),
                        }
                    };
                    let observed = f(y);
                    Ok(Some((Box::new(move |d: &NpData| Ok(f(d))) as DataFn<'static, NpData>, observed, Some(DistanceSpec::l1()))))
                }),
                post: Box::new(move |run: &mut MethodRun| {
                    run.kl = Some(kl_divergence_1d(&exact, &run.sample, 0)?);
                    Ok(())
                }),
            };
            let mut extras = Map::new();
            extras.insert("n".into(), json!(p.n));
            drive(&model, data, Some(est), methods, cfg, root, hooks, extras)
        }
        ModelParams::Equicorr(p) => {
            let model = EquicorrModel::new(p.n, p.q)?.with_sufficient_simulation(p.sufficient_simulation);
            let omega = model.omega_from_natural(p.mu, p.sigma2, p.rho)?;
            let data = model.simulate(&omega, &mut root.child(streams::DATA).generator())?;
            let hooks = Hooks {
                from_prior: false,
                cs_distance: None,
                extra_target: Box::new(|y: &EquicorrData| {
                    let summary: DataFn<'static, EquicorrData> = Box::new(|d: &EquicorrData| Ok(d.summary()));
                    Ok(Some((summary, y.summary(), None)))
                }),
                post: Box::new(|_| Ok(())),
            };
            let mut extras = Map::new();
            extras.insert("omega_true".into(), json!(omega));
            drive(&model, data, None, methods, cfg, root, hooks, extras)
        }
        ModelParams::Probit(p) => {
            let model = ProbitModel::random_design(p.n, p.q, root.child(streams::DESIGN))?;
            let theta = [p.beta0, p.beta1, p.sigma2.ln()];
            let data = model.simulate(&theta, &mut root.child(streams::DATA).generator())?;
            let hooks = Hooks {
                from_prior: false,
                cs_distance: None,
                extra_target: Box::new(|y: &ProbitData| {
                    let summary: DataFn<'static, ProbitData> = Box::new(|d: &ProbitData| Ok(d.counts()));
                    Ok(Some((summary, y.counts(), Some(DistanceSpec::l1()))))
                }),
                post: Box::new(|_| Ok(())),
            };
            let (mut session, runs) = drive(&model, data, None, methods, cfg, root, hooks, Map::new())?;
            session.extras.insert("probability_floor_hits".into(), json!(model.floor_hits()));
            Ok((session, runs))
        }
        ModelParams::Smith(p) => {
            let (model, data) = match (&p.stations, &p.maxima) {
                (Some(s), Some(m)) => {
                    let ds = SpatialDataset::load(s, m)?;
                    (ds.model()?, ds.maxima)
                }
                _ => {
                    let model = SmithModel::grid(p.grid_side, p.spacing, p.n_years)?;
                    let data = model.simulate(&p.theta, &mut root.child(streams::DATA).generator())?;
                    (model, data)
                }
            };
            let offsets = station_offsets(model.coords());
            let hooks = Hooks {
                from_prior: false,
                cs_distance: None,
                extra_target: Box::new(|_: &SmithData| Ok(None)),
                post: Box::new(move |run: &mut MethodRun| {
                    let s = &run.sample;
                    let sigma: Vec<[f64; 3]> = (0..s.len())
                        .map(|i| {
                            let r = s.draws.row(i);
                            [r[0], r[1], r[2]]
                        })
                        .collect();
                    run.extremal = Some(extremal_curve(&sigma, &s.weights, &offsets)?);
                    Ok(())
                }),
            };
            let mut extras = Map::new();
            extras.insert("n_years".into(), json!(data.n()));
            extras.insert("n_stations".into(), json!(model.q()));
            drive(&model, data, None, methods, cfg, root, hooks, extras)
        }
    }
}

type ExtraTarget<D> = (DataFn<'static, D>, Vec<f64>, Option<DistanceSpec>);

/// Model-specific pieces of the generic driver.
struct Hooks<D> {
    /// ABC proposals from the prior (rejection) instead of a t proposal.
    from_prior: bool,
    /// Fixed distance for ABC-cs; the configured precision otherwise.
    cs_distance: Option<DistanceSpec>,
    /// Summary, observed value and fixed distance (if any) of the
    /// `abc-suffstat` / `abc-counts` target.
    extra_target: Box<dyn Fn(&D) -> Result<Option<ExtraTarget<D>>>>,
    post: Box<dyn Fn(&mut MethodRun) -> Result<()>>,
}

#[allow(clippy::too_many_arguments)]
fn drive<M: Model>(
    model: &M,
    data: M::Data,
    est: Option<GodambeEstimate>,
    methods: &[Method],
    cfg: &RunConfig,
    root: RngStream,
    hooks: Hooks<M::Data>,
    extras: Map<String, Value>,
) -> Result<(Session, Vec<Result<MethodRun>>)> {
    let est = match est {
        Some(e) => e,
        None => {
            let mcle = solve_mcle(model, &data, &model.initial_estimate(&data))?;
            estimate_godambe(model, &mcle, cfg.godambe_replications, root.child(streams::GODAMBE))?
        }
    };
    let session = Session {
        param_names: model.param_names(),
        mcle: est.theta.clone(),
        godambe: est,
        extras,
    };
    let runs = methods
        .iter()
        .map(|&m| {
            let mut run = run_method(model, &data, &session, m, cfg, root, &hooks)?;
            if let Some(k) = cfg.sampler.resample {
                if run.method.is_abc() {
                    run.sample = resample(&run.sample, k, root.child(streams::RESAMPLE))?;
                }
            }
            (hooks.post)(&mut run)?;
            Ok(run)
        })
        .collect();
    Ok((session, runs))
}

fn distance_json(spec: &DistanceSpec, precision: &str) -> Value {
    json!({ "kind": spec.kind, "precision": precision })
}

fn run_method<M: Model>(
    model: &M,
    data: &M::Data,
    session: &Session,
    method: Method,
    cfg: &RunConfig,
    root: RngStream,
    hooks: &Hooks<M::Data>,
) -> Result<MethodRun> {
    let est = &session.godambe;
    let d = model.dim();
    let sampler_stream = root.child(streams::SAMPLER);
    let s = &cfg.sampler;

    let (target, distance) = match method {
        Method::AbcCs => {
            let eval = model.score_evaluator(&est.theta)?;
            let e = est.clone();
            let summary: DataFn<M::Data> = Box::new(move |y| e.rescale(&eval(y)?));
            let observed = est.rescale(&composite_score(model, &est.theta, data)?)?;
            let (spec, label) = match &hooks.cs_distance {
                Some(spec) => (spec.clone(), "none".to_string()),
                // η_c is already whitened by B_c; only an explicit
                // `simulated` choice rescales it further.
                None if !matches!(cfg.distance.precision, PrecisionChoice::Simulated) => {
                    (DistanceSpec::euclidean(), "none".to_string())
                }
                None => configured_distance(model, est, &summary, observed.len(), cfg, root)?,
            };
            let info = distance_json(&spec, &label);
            (SummaryTarget::new(summary, spec, observed), info)
        }
        Method::AbcSuffstat | Method::AbcCounts => {
            let (summary, observed, fixed) = (hooks.extra_target)(data)?
                .ok_or_else(|| Error::InvalidInput(format!("{} has no {} summary", model.name(), method.as_str())))?;
            let (spec, label) = match fixed {
                Some(spec) => (spec, "none".to_string()),
                None => configured_distance(model, est, &summary, observed.len(), cfg, root)?,
            };
            let info = distance_json(&spec, &label);
            (SummaryTarget::new(summary, spec, observed), info)
        }
        Method::FullMcmc | Method::PairwiseMcmc | Method::CalibratedPairwiseMcmc => {
            let scale = s.mcmc_scale.unwrap_or(2.4 * 2.4 / d as f64);
            let w = est.omega_bar;
            let h_inv = est.h.inverse()?.symmetrize();
            let sample = match method {
                Method::FullMcmc => {
                    if !model.has_full_likelihood() {
                        return Err(Error::InvalidInput(format!("{} has no full likelihood", model.name())));
                    }
                    let target = |t: &[f64]| {
                        let lp = model.log_prior(t);
                        if lp == f64::NEG_INFINITY {
                            return lp;
                        }
                        model.full_loglik(t, data).map_or(f64::NEG_INFINITY, |l| l + lp)
                    };
                    rw_metropolis(target, &est.theta, &est.v.scale(scale), s.mcmc_iterations, s.burn_in, sampler_stream)?
                }
                Method::PairwiseMcmc => {
                    let target = |t: &[f64]| composite_target(model, t, data, 1.0);
                    rw_metropolis(target, &est.theta, &h_inv.scale(scale), s.mcmc_iterations, s.burn_in, sampler_stream)?
                }
                _ => {
                    let target = |t: &[f64]| composite_target(model, t, data, w);
                    rw_metropolis(target, &est.theta, &h_inv.scale(scale * w), s.mcmc_iterations, s.burn_in, sampler_stream)?
                }
            };
            return Ok(MethodRun {
                method,
                sample,
                distance: None,
                kl: None,
                extremal: None,
            });
        }
    };

    let targets = [target];
    let sample = if hooks.from_prior {
        abc_reject(model, &targets, s.n_proposals, s.alpha, sampler_stream)?
    } else {
        let proposal = MultivariateT::new(s.proposal_df, est.theta.clone(), &est.v.scale(s.proposal_scale))?;
        abc_importance(model, &proposal, &targets, s.n_proposals, s.alpha, sampler_stream)?
    };
    let sample = sample.into_iter().next().expect("one target");
    Ok(MethodRun {
        method,
        sample,
        distance: Some(distance),
        kl: None,
        extremal: None,
    })
}

/// Composite log-likelihood tempered by 1/ω plus the log prior.
fn composite_target<M: Model>(model: &M, t: &[f64], data: &M::Data, omega: f64) -> f64 {
    let lp = model.log_prior(t);
    if lp == f64::NEG_INFINITY || !model.in_support(t) {
        return f64::NEG_INFINITY;
    }
    model.logcl(t, data) / omega + lp
}

/// Distance of an importance-sampling ABC target under the configured
/// precision choice.
fn configured_distance<M: Model>(
    model: &M,
    est: &GodambeEstimate,
    summary: &DataFn<'_, M::Data>,
    dim: usize,
    cfg: &RunConfig,
    root: RngStream,
) -> Result<(DistanceSpec, String)> {
    match cfg.distance.precision {
        PrecisionChoice::Godambe if dim == est.dim() => Ok((DistanceSpec::with_precision(est.g.clone())?, "godambe".into())),
        PrecisionChoice::Godambe | PrecisionChoice::None => Ok((DistanceSpec::euclidean(), "none".into())),
        PrecisionChoice::Simulated => {
            let cov = simulated_summary_covariance(
                model,
                &est.theta,
                |y: &M::Data| summary(y),
                cfg.godambe_replications,
                root.child(streams::SUMMARY_COVARIANCE),
            )?;
            Ok((DistanceSpec::with_precision(cov.spd_inverse()?)?, "simulated".into()))
        }
    }
}
