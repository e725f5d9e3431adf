use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cones::{check_intersection_identity, check_union_identity, LambdaGrid, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::kv::fmt_list;
use crate::models::rng_for;

use super::report::{ExperimentReport, ParamSpec, Violation};
use super::run_indexed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumFamily {
    /// `|N(0,1)|` entries.
    Nonneg,
    /// `N(0,1)` entries.
    Mixed,
    /// `μ₁` within `1e-6` of `0` or of `−μ₂`, straddling the boundaries of
    /// the nonnegative and 2-nonnegative cones.
    NearBoundary,
    /// Magnitudes `10^U(−6, 6)` with random signs.
    ExtremeRatio,
}

impl SpectrumFamily {
    pub const ALL: [SpectrumFamily; 4] = [
        Self::Nonneg,
        Self::Mixed,
        Self::NearBoundary,
        Self::ExtremeRatio,
    ];

    /// Ascending spectrum of length `dim`.
    pub fn draw<R: Rng + ?Sized>(&self, dim: usize, rng: &mut R) -> Vec<f64> {
        fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
            StandardNormal.sample(rng)
        }
        let mut mu: Vec<f64> = match self {
            Self::Nonneg => (0..dim).map(|_| normal(rng).abs()).collect(),
            Self::Mixed => (0..dim).map(|_| normal(rng)).collect(),
            Self::NearBoundary => {
                let mut mu: Vec<f64> = (0..dim).map(|_| normal(rng).abs() + 0.1).collect();
                mu.sort_by(f64::total_cmp);
                let eps = 1e-6 * normal(rng);
                mu[0] = if rng.gen_bool(0.5) { eps } else { -mu[1] + eps };
                mu
            }
            Self::ExtremeRatio => (0..dim)
                .map(|_| {
                    let m = 10f64.powf(rng.gen_range(-6.0..6.0));
                    if rng.gen_bool(0.5) {
                        m
                    } else {
                        -m
                    }
                })
                .collect(),
        };
        mu.sort_by(f64::total_cmp);
        mu
    }
}

impl fmt::Display for SpectrumFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Nonneg => "nonneg",
            Self::Mixed => "mixed",
            Self::NearBoundary => "near-boundary",
            Self::ExtremeRatio => "extreme-ratio",
        })
    }
}

impl FromStr for SpectrumFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.to_string() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown spectrum family '{s}'")))
    }
}

#[derive(Debug, Clone)]
pub struct SetIdentityConfig {
    /// Spectrum lengths cycled over samples.
    pub dims: Vec<usize>,
    pub families: Vec<SpectrumFamily>,
    pub spectra: usize,
    pub grid: LambdaGrid,
    pub seed: u64,
    pub tol: f64,
    /// Append the spectrum `(−1, 1, …, 1)` for each length.
    pub include_fixture: bool,
    pub jobs: usize,
}

impl Default for SetIdentityConfig {
    fn default() -> Self {
        Self {
            dims: vec![3, 6, 10],
            families: SpectrumFamily::ALL.to_vec(),
            spectra: 1000,
            grid: LambdaGrid::default(),
            seed: 0,
            tol: DEFAULT_TOL,
            include_fixture: true,
            jobs: 0,
        }
    }
}

#[derive(Default)]
struct SampleOutcome {
    banded: [bool; 3],
    disagreements: Vec<(&'static str, Option<(f64, f64)>)>,
}

const IDENTITIES: [&str; 3] = ["intersection", "union", "union-strict"];

fn check_one(mu: &[f64], cfg: &SetIdentityConfig) -> Result<SampleOutcome> {
    let checks = [
        check_intersection_identity(mu, &cfg.grid, cfg.tol)?,
        check_union_identity(mu, &cfg.grid, false, cfg.tol)?,
        check_union_identity(mu, &cfg.grid, true, cfg.tol)?,
    ];
    let mut out = SampleOutcome::default();
    for (k, c) in checks.iter().enumerate() {
        out.banded[k] = c.within_band;
        if !c.agrees {
            out.disagreements
                .push((IDENTITIES[k], c.witness.map(|p| (p.lambda1(), p.lambda2()))));
        }
    }
    Ok(out)
}

/// Compares grid intersections and unions of the cone family with their
/// closed forms (nonnegative, 2-nonnegative and 2-positive cones) over random
/// spectra.
pub fn set_identity_experiment(cfg: &SetIdentityConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    if cfg.dims.is_empty() || cfg.families.is_empty() {
        return Err(Error::InvalidConfig("no spectrum lengths or families".into()));
    }
    if let Some(&d) = cfg.dims.iter().find(|&&d| d < 3) {
        return Err(Error::SpectrumTooShort { needed: 3, found: d });
    }
    if cfg.grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if !cfg.grid.contains_corner() {
        return Err(Error::GridMissingCorner);
    }

    let mut spectra: Vec<(String, Vec<f64>)> = (0..cfg.spectra)
        .map(|i| {
            let mut rng = rng_for(cfg.seed, i as u64);
            let dim = cfg.dims[i % cfg.dims.len()];
            let fam = cfg.families[(i / cfg.dims.len()) % cfg.families.len()];
            (fam.to_string(), fam.draw(dim, &mut rng))
        })
        .collect();
    if cfg.include_fixture {
        for &dim in &cfg.dims {
            let mut mu = vec![1.0; dim];
            mu[0] = -1.0;
            spectra.push(("fixture".into(), mu));
        }
    }

    let outcomes = run_indexed(spectra.len(), cfg.jobs, |i| check_one(&spectra[i].1, cfg));

    let mut report = ExperimentReport::new(
        "set-identity",
        cfg.dims.clone(),
        ParamSpec::Grid {
            points: cfg.grid.len(),
        },
        cfg.seed,
    );
    let mut banded = [0u64; 3];
    let mut disagreements = [0u64; 3];
    for (i, o) in outcomes.into_iter().enumerate() {
        let o = o?;
        for k in 0..3 {
            banded[k] += o.banded[k] as u64;
        }
        for (name, witness) in o.disagreements {
            let k = IDENTITIES.iter().position(|n| *n == name).unwrap_or(0);
            disagreements[k] += 1;
            let (family, mu) = &spectra[i];
            let witness = witness
                .map(|(a, b)| format!(" witness=({a},{b})"))
                .unwrap_or_default();
            report.violations.push(Violation {
                sample: i as u64,
                time: None,
                margin: mu[0],
                magnitude: mu.iter().fold(0.0, |m: f64, v| m.max(v.abs())),
                context: format!("identity={name} family={family} mu={}{witness}", fmt_list(mu)),
            });
        }
    }
    report.count("spectra", spectra.len() as u64);
    report.count("grid_points", cfg.grid.len() as u64);
    for k in 0..3 {
        report.count(&format!("disagreements_{}", IDENTITIES[k]), disagreements[k]);
        report.count(&format!("within_band_{}", IDENTITIES[k]), banded[k]);
    }
    report.metric("intersection_band", cfg.grid.intersection_band());
    report.metric("tol", cfg.tol);
    report.note(
        "families",
        cfg.families
            .iter()
            .map(|f| f.to_string())
            .collect::<Vec<_>>()
            .join(" "),
    );
    report.duration = started.elapsed();
    Ok(report)
}
