use std::time::Instant;

use crate::cones::{Binding, ConeParams, LambdaGrid};
use crate::curvop::ode_rhs;
use crate::error::{Error, Result};
use crate::liealg::LieAlgebraBasis;
use crate::models::{random_in_cone, rng_for, ConeSample};

use super::expansion::{rate_expansion, FrameConstants};
use super::report::{ExperimentReport, ParamSpec, Violation};
use super::run_indexed;

#[derive(Debug, Clone)]
pub struct TangentConfig {
    pub ns: Vec<usize>,
    pub grid: LambdaGrid,
    /// Samples per (n, grid point, binding) cell.
    pub samples: usize,
    pub seed: u64,
    /// Rates must stay `≥ −tol_rel · max(1, ‖R‖∞²)`.
    pub tol_rel: f64,
    /// Samples whose relevant eigenvalues are closer than
    /// `gap_rel · max(1, ‖μ‖∞)` are skipped.
    pub gap_rel: f64,
    /// A skip fraction at or above this is itself a failure.
    pub max_skip_fraction: f64,
    pub jobs: usize,
}

impl Default for TangentConfig {
    fn default() -> Self {
        Self {
            ns: vec![3, 4, 5],
            grid: LambdaGrid::coarse(5, 5, 0.55),
            samples: 200,
            seed: 0,
            tol_rel: 1e-8,
            gap_rel: 1e-6,
            max_skip_fraction: 0.05,
            jobs: 0,
        }
    }
}

enum Outcome {
    Vacuous,
    Skipped(&'static str),
    Checked {
        rate: f64,
        scale: f64,
        residual: f64,
        groups: Vec<(&'static str, f64)>,
        violation: Option<Violation>,
    },
}

/// Number of leading eigenvalues that must be simple for the first-order
/// rate of the binding functional to be the weighted diagonal of `R² + R#`.
fn gap_span(which: Binding) -> usize {
    match which {
        Binding::C1 => 4,
        Binding::C2 => 3,
    }
}

fn has_small_gap(mu: &[f64], which: Binding, gap_rel: f64) -> bool {
    let scale = mu.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let span = gap_span(which).min(mu.len());
    mu[..span].windows(2).any(|w| w[1] - w[0] < gap_rel * scale)
}

fn check_sample(
    cfg: &TangentConfig,
    basis: &LieAlgebraBasis,
    params: &ConeParams,
    which: Binding,
    sample: u64,
    first: bool,
) -> Outcome {
    let mut rng = rng_for(cfg.seed, sample);
    let s: ConeSample = match random_in_cone(params, basis.n(), Some(which), &mut rng) {
        Ok(s) => s,
        Err(Error::SamplerExhausted(_)) if first => return Outcome::Vacuous,
        Err(Error::SamplerExhausted(_)) => return Outcome::Skipped("sampler-exhausted"),
        Err(_) => return Outcome::Skipped("sampling-error"),
    };
    if has_small_gap(&s.spectrum, which, cfg.gap_rel) {
        return Outcome::Skipped("small-eigenvalue-gap");
    }
    let Ok(d) = ode_rhs(&s.operator, basis) else {
        return Outcome::Skipped("rhs-error");
    };
    let q: Vec<f64> = (0..basis.dim())
        .map(|a| d.quadratic_form(&s.frame.column(a)))
        .collect();
    let (l1, l2, dl) = (params.lambda1(), params.lambda2(), params.delta());
    let rate = match which {
        Binding::C1 => q[0] + l1 * q[1] + l2 * q[2],
        Binding::C2 => l1 * q[0] + dl * q[1],
    };
    let norm = s.operator.norm_inf();
    let scale = norm.max(1.0).powi(2);

    let (residual, groups) = match FrameConstants::new(basis, &s.frame)
        .and_then(|cf| rate_expansion(&s.spectrum, &cf, params, which))
    {
        Ok(terms) => ((terms.total - rate).abs() / scale, terms.groups),
        Err(_) => (f64::NAN, Vec::new()),
    };

    let violation = (rate < -cfg.tol_rel * scale).then(|| Violation {
        sample,
        time: None,
        margin: rate,
        magnitude: -rate / scale,
        context: format!(
            "n={} lambda1={} lambda2={} binding={which}",
            basis.n(),
            l1,
            l2
        ),
    });
    Outcome::Checked {
        rate,
        scale,
        residual,
        groups,
        violation,
    }
}

/// Samples boundary points of each cone in the grid and checks that the
/// reaction term `R² + R#` points into the cone: the first-order rate of the
/// binding functional must be nonnegative.
///
/// Cells whose first boundary draw exhausts the sampler are reported as
/// vacuous (the requested boundary stratum has no simple-spectrum points).
pub fn tangent_cone_experiment(cfg: &TangentConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    if cfg.ns.is_empty() {
        return Err(Error::InvalidConfig("no dimensions given".into()));
    }
    if cfg.grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if cfg.samples == 0 {
        return Err(Error::InvalidConfig("samples must be positive".into()));
    }
    let bases = cfg
        .ns
        .iter()
        .map(|&n| LieAlgebraBasis::new(n))
        .collect::<Result<Vec<_>>>()?;
    let mut cells: Vec<(usize, usize, Binding)> = Vec::new();
    for b in 0..bases.len() {
        for p in 0..cfg.grid.len() {
            cells.push((b, p, Binding::C1));
            cells.push((b, p, Binding::C2));
        }
    }

    // a vacuous cell is decided by its first draw, so that draw runs alone
    let per_cell = run_indexed(cells.len(), cfg.jobs, |c| {
        let (b, p, w) = cells[c];
        let base = (c * cfg.samples) as u64;
        let first = check_sample(cfg, &bases[b], &cfg.grid.points()[p], w, base, true);
        if matches!(first, Outcome::Vacuous) {
            return vec![first];
        }
        let mut out = Vec::with_capacity(cfg.samples);
        out.push(first);
        for k in 1..cfg.samples {
            out.push(check_sample(cfg, &bases[b], &cfg.grid.points()[p], w, base + k as u64, false));
        }
        out
    });

    let mut report = ExperimentReport::new(
        "tangent-cone",
        cfg.ns.clone(),
        ParamSpec::Grid {
            points: cfg.grid.len(),
        },
        cfg.seed,
    );
    let mut vacuous = Vec::new();
    let mut checked = [0u64; 2];
    let mut attempted = 0u64;
    let mut min_rel_rate = [f64::INFINITY; 2];
    let mut max_residual = 0.0_f64;
    let mut group_min: Vec<(String, f64)> = Vec::new();
    let mut violations = Vec::new();

    for (c, outs) in per_cell.into_iter().enumerate() {
        let (b, p, w) = cells[c];
        let wi = (w == Binding::C2) as usize;
        for o in outs {
            match o {
                Outcome::Vacuous => {
                    let pt = cfg.grid.points()[p];
                    vacuous.push(format!(
                        "n={}:{}:{}:{w}",
                        cfg.ns[b],
                        pt.lambda1(),
                        pt.lambda2()
                    ));
                }
                Outcome::Skipped(reason) => {
                    attempted += 1;
                    report.skip(reason, 1);
                }
                Outcome::Checked {
                    rate,
                    scale,
                    residual,
                    groups,
                    violation,
                } => {
                    attempted += 1;
                    checked[wi] += 1;
                    min_rel_rate[wi] = min_rel_rate[wi].min(rate / scale);
                    if residual.is_nan() || max_residual.is_nan() {
                        max_residual = f64::NAN;
                    } else {
                        max_residual = max_residual.max(residual);
                    }
                    for (name, v) in groups {
                        let key = format!("{}_{name}", if wi == 0 { "c1" } else { "c2" });
                        let rel = v / scale;
                        match group_min.iter_mut().find(|(k, _)| *k == key) {
                            Some(e) => e.1 = e.1.min(rel),
                            None => group_min.push((key, rel)),
                        }
                    }
                    violations.extend(violation);
                }
            }
        }
    }

    if checked.iter().sum::<u64>() == 0 {
        return Err(Error::AllSkipped(format!(
            "no sample checked ({} vacuous cells, {} skipped)",
            vacuous.len(),
            report.skipped_total()
        )));
    }

    report.count("cells", cells.len() as u64);
    report.count("vacuous_cells", vacuous.len() as u64);
    report.count("attempted", attempted);
    report.count("checked_c1", checked[0]);
    report.count("checked_c2", checked[1]);
    report.metric("min_relative_rate_c1", min_rel_rate[0]);
    report.metric("min_relative_rate_c2", min_rel_rate[1]);
    report.metric("max_expansion_residual", max_residual);
    for (k, v) in group_min {
        report.metric(&format!("min_group_{k}"), v);
    }
    report.metric("tol_rel", cfg.tol_rel);
    if !vacuous.is_empty() {
        report.note("vacuous", vacuous.join(" "));
    }

    let skip_fraction = report.skipped_total() as f64 / attempted.max(1) as f64;
    report.metric("skip_fraction", skip_fraction);
    if skip_fraction >= cfg.max_skip_fraction {
        violations.push(Violation {
            sample: 0,
            time: None,
            margin: f64::NAN,
            magnitude: skip_fraction,
            context: format!(
                "skip fraction {skip_fraction} at or above {}",
                cfg.max_skip_fraction
            ),
        });
    }
    if !(max_residual <= 1e-9) {
        violations.push(Violation {
            sample: 0,
            time: None,
            margin: f64::NAN,
            magnitude: max_residual,
            context: "regrouped expansion disagrees with the direct rate".into(),
        });
    }
    report.violations = violations;
    report.duration = started.elapsed();
    Ok(report)
}
