use std::time::Instant;

use crate::cones::{cone_contains, ConeParams, LambdaGrid, DEFAULT_TOL};
use crate::curvop::{scalar_curvature, spectrum, CurvatureOperator};
use crate::error::{Error, Result};
use crate::liealg::LieAlgebraBasis;
use crate::models::{random_in_cone, random_symmetric, rng_for};

use super::report::{ExperimentReport, ParamSpec, Violation};
use super::run_indexed;

#[derive(Debug, Clone)]
pub struct TraceConfig {
    pub ns: Vec<usize>,
    /// Random symmetric operators for the trace identity.
    pub random_samples: usize,
    /// Parameter points for the in-cone sign check.
    pub grid: LambdaGrid,
    /// In-cone draws per grid point (dimensions cycled).
    pub cone_samples: usize,
    /// Zero-trace candidates per grid point for the rigidity check.
    pub rigidity_samples: usize,
    pub seed: u64,
    pub identity_tol: f64,
    pub sign_tol: f64,
    pub rigidity_tol: f64,
    pub jobs: usize,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            ns: vec![3, 4, 5],
            random_samples: 1000,
            grid: LambdaGrid::coarse(3, 3, 0.6),
            cone_samples: 1000,
            rigidity_samples: 100,
            seed: 0,
            identity_tol: 1e-10,
            sign_tol: 1e-9,
            rigidity_tol: 1e-9,
            jobs: 0,
        }
    }
}

enum Task {
    Identity,
    Sign(usize),
    Rigidity(usize),
}

#[derive(Default)]
struct Outcome {
    identity_err: Option<f64>,
    scal_rel: Option<f64>,
    /// `Some(‖μ‖∞)` when the candidate lies in the closed cone.
    in_closure: Option<f64>,
    rejected: bool,
    violation: Option<Violation>,
}

fn scale(r: &CurvatureOperator) -> f64 {
    r.norm_inf().max(1.0)
}

/// Removes the trace: `R − (Tr R / N)·Id`.
fn trace_free(r: &CurvatureOperator) -> CurvatureOperator {
    let shift = r.trace() / r.dim() as f64;
    r.add_scaled(&CurvatureOperator::identity(r.n()), -shift)
        .expect("same dimension")
}

fn run_task(
    cfg: &TraceConfig,
    bases: &[LieAlgebraBasis],
    task: &Task,
    idx: usize,
) -> Result<Outcome> {
    let sample = idx as u64;
    let mut rng = rng_for(cfg.seed, sample);
    let slot = idx % bases.len();
    let basis = &bases[slot];
    let n = basis.n();
    let mut out = Outcome::default();
    match task {
        Task::Identity => {
            let r = random_symmetric(n, 1.0, &mut rng);
            let err = (2.0 * r.trace() - scalar_curvature(&r, basis)?).abs() / scale(&r);
            out.identity_err = Some(err);
            if !(err < cfg.identity_tol) {
                out.violation = Some(Violation {
                    sample,
                    time: None,
                    margin: -err,
                    magnitude: err,
                    context: format!("n={n} check=trace-identity"),
                });
            }
        }
        Task::Sign(p) => {
            let params = &cfg.grid.points()[*p];
            let r = random_in_cone(params, n, None, &mut rng)?.operator;
            let rel = scalar_curvature(&r, basis)? / scale(&r);
            out.scal_rel = Some(rel);
            if rel < -cfg.sign_tol {
                out.violation = Some(Violation {
                    sample,
                    time: None,
                    margin: rel,
                    magnitude: -rel,
                    context: format!(
                        "n={n} lambda1={} lambda2={} check=scal-sign",
                        params.lambda1(),
                        params.lambda2()
                    ),
                });
            }
        }
        Task::Rigidity(p) => {
            let params = &cfg.grid.points()[*p];
            let candidate = match idx % 3 {
                0 => CurvatureOperator::zeros(n),
                1 => trace_free(&random_in_cone(params, n, None, &mut rng)?.operator),
                _ => trace_free(&random_symmetric(n, 1.0, &mut rng)),
            };
            let mu = spectrum(&candidate)?;
            let scal = scalar_curvature(&candidate, basis)?;
            debug_assert!(scal.abs() <= 1e-9 * scale(&candidate));
            if cone_contains(&mu, params, false, DEFAULT_TOL)?.member {
                let size = mu.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                out.in_closure = Some(size);
                if !(size < cfg.rigidity_tol) {
                    out.violation = Some(Violation {
                        sample,
                        time: None,
                        margin: -size,
                        magnitude: size,
                        context: format!(
                            "n={n} lambda1={} lambda2={} check=rigidity scal={scal}",
                            params.lambda1(),
                            params.lambda2()
                        ),
                    });
                }
            } else {
                out.rejected = true;
            }
        }
    }
    Ok(out)
}

/// Scalar curvature checks: `Scal = 2·Tr` on random operators,
/// `Scal ≥ 0` on in-cone draws, and `Scal = 0` forcing `R = 0` on
/// zero-trace candidates that lie in a cone's closure.
///
/// Samples are indexed globally: the identity block first, then the sign
/// block and the rigidity block, each grid point in order.
pub fn trace_identity_experiment(cfg: &TraceConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    if cfg.ns.is_empty() {
        return Err(Error::InvalidConfig("no dimensions given".into()));
    }
    if cfg.grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let bases = cfg
        .ns
        .iter()
        .map(|&n| LieAlgebraBasis::new(n))
        .collect::<Result<Vec<_>>>()?;

    let mut tasks = Vec::new();
    tasks.extend((0..cfg.random_samples).map(|_| Task::Identity));
    for p in 0..cfg.grid.len() {
        tasks.extend((0..cfg.cone_samples).map(|_| Task::Sign(p)));
    }
    for p in 0..cfg.grid.len() {
        tasks.extend((0..cfg.rigidity_samples).map(|_| Task::Rigidity(p)));
    }
    let outcomes = run_indexed(tasks.len(), cfg.jobs, |i| run_task(cfg, &bases, &tasks[i], i));

    let mut report = ExperimentReport::new(
        "trace",
        cfg.ns.clone(),
        ParamSpec::Grid {
            points: cfg.grid.len(),
        },
        cfg.seed,
    );
    let mut max_identity_err = 0.0_f64;
    let mut min_scal = f64::INFINITY;
    let mut in_closure = 0u64;
    let mut rejected = 0u64;
    let mut max_closure_size = 0.0_f64;
    for o in outcomes {
        let o = o?;
        if let Some(e) = o.identity_err {
            max_identity_err = max_identity_err.max(e);
        }
        if let Some(s) = o.scal_rel {
            min_scal = min_scal.min(s);
        }
        if let Some(s) = o.in_closure {
            in_closure += 1;
            max_closure_size = max_closure_size.max(s);
        }
        rejected += o.rejected as u64;
        report.violations.extend(o.violation);
    }
    report.count("identity_samples", cfg.random_samples as u64);
    report.count("sign_samples", (cfg.cone_samples * cfg.grid.len()) as u64);
    report.count("rigidity_in_closure", in_closure);
    report.count("rigidity_outside_closure", rejected);
    report.metric("max_relative_identity_error", max_identity_err);
    report.metric("min_relative_scal", min_scal);
    report.metric("max_closure_spectrum", max_closure_size);
    report.note(
        "grid",
        cfg.grid
            .points()
            .iter()
            .map(|p: &ConeParams| format!("({},{})", p.lambda1(), p.lambda2()))
            .collect::<Vec<_>>()
            .join(" "),
    );
    report.duration = started.elapsed();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_free_has_zero_scal() {
        let b = LieAlgebraBasis::new(4).unwrap();
        let r = random_symmetric(4, 2.0, &mut rng_for(0, 0));
        let t = trace_free(&r);
        assert!(t.trace().abs() < 1e-12);
        assert!(scalar_curvature(&t, &b).unwrap().abs() < 1e-12);
    }

    #[test]
    fn small_run_passes() {
        let cfg = TraceConfig {
            random_samples: 50,
            cone_samples: 30,
            rigidity_samples: 9,
            seed: 9,
            jobs: 2,
            ..Default::default()
        };
        let r = trace_identity_experiment(&cfg).unwrap();
        assert!(r.passed(), "{}", r.summary());
        // the zero candidate is always in the closure
        assert!(r.get_count("rigidity_in_closure").unwrap() >= 1);
    }
}
