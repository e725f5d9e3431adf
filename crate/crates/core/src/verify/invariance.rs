use std::time::Instant;

use crate::cones::{Binding, ConeParams};
use crate::curvop::{scaled_tol, CurvatureOperator};
use crate::error::{Error, Result};
use crate::flow::{integrate, IntegratorConfig, Termination, TrajectoryRecord};
use crate::liealg::LieAlgebraBasis;
use crate::models::{random_in_cone, random_params, rng_for};

use super::report::{ExperimentReport, ParamSpec, Violation};
use super::run_indexed;

#[derive(Debug, Clone)]
pub struct InvarianceConfig {
    /// Dimensions cycled over trials.
    pub ns: Vec<usize>,
    /// Fixed parameters, or `None` to draw fresh ones per trial.
    pub params: Option<ConeParams>,
    pub trials: usize,
    pub seed: u64,
    pub integrator: IntegratorConfig,
    /// Margins must stay `≥ −tol_rel · max(1, ‖R‖∞)`.
    pub tol_rel: f64,
    /// Consecutive recorded violations needed before a re-check.
    pub persistence: usize,
    pub jobs: usize,
    pub keep_trajectories: bool,
}

impl Default for InvarianceConfig {
    fn default() -> Self {
        Self {
            ns: vec![3, 4],
            params: None,
            trials: 1000,
            seed: 0,
            integrator: IntegratorConfig::default(),
            tol_rel: 1e-7,
            persistence: 3,
            jobs: 0,
            keep_trajectories: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartKind {
    Interior,
    Boundary(Binding),
}

impl StartKind {
    fn label(&self) -> &'static str {
        match self {
            Self::Interior => "interior",
            Self::Boundary(Binding::C1) => "boundary-c1",
            Self::Boundary(Binding::C2) => "boundary-c2",
        }
    }
}

/// Index of the point completing the first run of `persistence`
/// consecutive recorded margins below `−tol_rel · max(1, ‖R‖∞)`.
pub fn persistent_violation(rec: &TrajectoryRecord, tol_rel: f64, persistence: usize) -> Option<usize> {
    let mut run = 0;
    for (i, p) in rec.points.iter().enumerate() {
        match p.margin() {
            Some(m) if m < -scaled_tol(tol_rel, p.norm) => {
                run += 1;
                if run >= persistence.max(1) {
                    return Some(i);
                }
            }
            _ => run = 0,
        }
    }
    None
}

struct TrialOutcome {
    n: usize,
    start: StartKind,
    fallback: bool,
    status: Option<Termination>,
    min_rel_margin: f64,
    candidates: u64,
    violation: Option<Violation>,
    columns: Option<String>,
}

fn draw_start(
    params: &ConeParams,
    n: usize,
    kind: StartKind,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<(CurvatureOperator, StartKind, bool)> {
    match kind {
        StartKind::Interior => Ok((random_in_cone(params, n, None, rng)?.operator, kind, false)),
        StartKind::Boundary(b) => match random_in_cone(params, n, Some(b), rng) {
            Ok(s) => Ok((s.operator, kind, false)),
            Err(Error::SamplerExhausted(_)) if b == Binding::C1 => {
                let s = random_in_cone(params, n, Some(Binding::C2), rng)?;
                Ok((s.operator, StartKind::Boundary(Binding::C2), true))
            }
            Err(e) => Err(e),
        },
    }
}

fn run_trial(cfg: &InvarianceConfig, bases: &[LieAlgebraBasis], idx: usize) -> TrialOutcome {
    let sample = idx as u64;
    let mut rng = rng_for(cfg.seed, sample);
    let n_slot = idx % cfg.ns.len();
    let n = cfg.ns[n_slot];
    let basis = &bases[n_slot];
    let params = cfg.params.unwrap_or_else(|| random_params(&mut rng));
    let wanted = match idx % 3 {
        0 => StartKind::Interior,
        1 => StartKind::Boundary(Binding::C2),
        _ => StartKind::Boundary(Binding::C1),
    };
    let mut out = TrialOutcome {
        n,
        start: wanted,
        fallback: false,
        status: None,
        min_rel_margin: f64::INFINITY,
        candidates: 0,
        violation: None,
        columns: None,
    };
    let context = |start: StartKind, extra: &str| {
        format!(
            "n={n} lambda1={} lambda2={} start={} {extra}",
            params.lambda1(),
            params.lambda2(),
            start.label()
        )
    };
    let (r0, start, fallback) = match draw_start(&params, n, wanted, &mut rng) {
        Ok(v) => v,
        Err(e) => {
            out.violation = Some(Violation {
                sample,
                time: None,
                margin: f64::NAN,
                magnitude: f64::NAN,
                context: context(wanted, &format!("sampling failed: {e}")),
            });
            return out;
        }
    };
    out.start = start;
    out.fallback = fallback;

    let rec = match integrate(&r0, basis, &cfg.integrator, Some(&params)) {
        Ok(r) => r,
        Err(e) => {
            out.violation = Some(Violation {
                sample,
                time: None,
                margin: f64::NAN,
                magnitude: f64::NAN,
                context: context(start, &format!("integration failed: {e}")),
            });
            return out;
        }
    };
    out.status = Some(rec.status);
    for p in &rec.points {
        if let Some(m) = p.margin() {
            out.min_rel_margin = out.min_rel_margin.min(m / p.norm.max(1.0));
        }
    }
    if cfg.keep_trajectories {
        out.columns = Some(rec.to_columns());
    }

    if let Some(i) = persistent_violation(&rec, cfg.tol_rel, cfg.persistence) {
        out.candidates = 1;
        let p = &rec.points[i];
        // re-integrate up to the offending time with a quarter of the step
        let fine = IntegratorConfig {
            dt0: cfg.integrator.dt0 / 4.0,
            t_max: p.t,
            record_stride: 1,
            store_operators: false,
            ..cfg.integrator.clone()
        };
        let confirmed = match integrate(&r0, basis, &fine, Some(&params)) {
            Ok(fine_rec) => {
                let q = fine_rec.last();
                let m = q.margin().unwrap_or(f64::NAN);
                (m < -scaled_tol(cfg.tol_rel, q.norm)).then_some((q.t, m, q.norm))
            }
            Err(_) => Some((p.t, p.margin().unwrap_or(f64::NAN), p.norm)),
        };
        if let Some((t, m, norm)) = confirmed {
            out.violation = Some(Violation {
                sample,
                time: Some(t),
                margin: m,
                magnitude: -m / norm.max(1.0),
                context: context(start, &format!("status={}", rec.status)),
            });
        }
    }
    out
}

/// Integrates `trials` in-cone starts (cycling interior, C2-boundary and
/// C1-boundary draws) and reports confirmed cone exits.
///
/// A C1-boundary request that the sampler cannot satisfy falls back to a
/// C2-boundary start; the fallback count is reported.
pub fn invariance_experiment(cfg: &InvarianceConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    if cfg.ns.is_empty() {
        return Err(Error::InvalidConfig("no dimensions given".into()));
    }
    cfg.integrator.validate()?;
    let bases = cfg
        .ns
        .iter()
        .map(|&n| LieAlgebraBasis::new(n))
        .collect::<Result<Vec<_>>>()?;

    let outcomes = run_indexed(cfg.trials, cfg.jobs, |i| run_trial(cfg, &bases, i));

    let params = match cfg.params {
        Some(p) => ParamSpec::Fixed {
            lambda1: p.lambda1(),
            lambda2: p.lambda2(),
        },
        None => ParamSpec::RandomPerSample,
    };
    let mut report = ExperimentReport::new("invariance", cfg.ns.clone(), params, cfg.seed);
    report.count("trials", cfg.trials as u64);
    for start in [
        StartKind::Interior,
        StartKind::Boundary(Binding::C2),
        StartKind::Boundary(Binding::C1),
    ] {
        let c = outcomes.iter().filter(|o| o.start == start).count();
        report.count(&format!("start_{}", start.label()), c as u64);
    }
    report.count(
        "c1_fallbacks",
        outcomes.iter().filter(|o| o.fallback).count() as u64,
    );
    for st in [Termination::BlowUp, Termination::ReachedTmax, Termination::StepUnderflow] {
        let c = outcomes.iter().filter(|o| o.status == Some(st)).count();
        report.count(&format!("status_{st}"), c as u64);
    }
    report.count(
        "persistent_candidates",
        outcomes.iter().map(|o| o.candidates).sum(),
    );
    report.metric(
        "min_relative_margin",
        outcomes
            .iter()
            .map(|o| o.min_rel_margin)
            .fold(f64::INFINITY, f64::min),
    );
    report.metric("tol_rel", cfg.tol_rel);
    report.note("persistence", cfg.persistence.to_string());
    report.note("dt0", crate::kv::fmt_exact(cfg.integrator.dt0));
    report.note("t_max", crate::kv::fmt_exact(cfg.integrator.t_max));
    report.note("norm_cap", crate::kv::fmt_exact(cfg.integrator.norm_cap));

    for (i, o) in outcomes.into_iter().enumerate() {
        if let Some(v) = o.violation {
            report.violations.push(v);
        }
        if let Some(cols) = o.columns {
            report
                .artifacts
                .push((format!("trajectory_{i:05}_n{}.tsv", o.n), cols));
        }
    }
    report.duration = started.elapsed();
    Ok(report)
}
