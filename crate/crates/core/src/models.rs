//! Fixture operators and seeded samplers.
//!
//! Seeds are split per trial as `seed + index` (wrapping), each feeding an
//! independent ChaCha8 stream, so any sample can be regenerated from
//! `(seed, index)` alone.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cones::{c1, c2, critical_lambda2, Binding, ConeParams};
use crate::curvop::CurvatureOperator;
use crate::error::{Error, Result};
use crate::kv::{fmt_exact, fmt_list, parse_list, KvDocument};
use crate::liealg::fiber_dim;

/// Attempts allowed to the boundary rejection sampler.
pub const RETRY_CAP: usize = 1000;

/// Tolerance on the inactive constraint of a boundary draw.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Generator for sample `index` of a run keyed by `seed`: ChaCha8 keyed by
/// the seed, with the sample index as the stream number. Distinct seeds give
/// unrelated sample sets (a plain `seed + index` split would make runs at
/// `s` and `s + 1` share all but one sample).
pub fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Haar-distributed element of O(dim): QR of a Gaussian matrix with the
/// sign of `R`'s diagonal folded into `Q`.
pub fn random_orthogonal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    let qr = gaussian_matrix(dim, dim, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Haar-distributed element of SO(n).
pub fn random_rotation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let mut q = random_orthogonal(n, rng);
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

pub fn random_symmetric<R: Rng + ?Sized>(n: usize, scale: f64, rng: &mut R) -> CurvatureOperator {
    let dim = fiber_dim(n);
    let g = gaussian_matrix(dim, dim, rng);
    let m = (&g + g.transpose()) * (0.5 * scale);
    CurvatureOperator::from_matrix(n, m).expect("symmetric by construction")
}

pub fn rank_one<R: Rng + ?Sized>(n: usize, scale: f64, rng: &mut R) -> CurvatureOperator {
    let dim = fiber_dim(n);
    let v = gaussian_matrix(dim, 1, rng);
    let v = &v / v.norm();
    CurvatureOperator::from_matrix(n, &v * v.transpose() * scale).expect("symmetric by construction")
}

/// Space-form operator `r·Id`.
pub fn sphere_operator(n: usize, r: f64) -> CurvatureOperator {
    CurvatureOperator::identity(n).scaled(r)
}

/// Diagonal operator with spectrum `(−1, 1, …, 1)`.
pub fn remark4_operator(n: usize) -> CurvatureOperator {
    let mut d = vec![1.0; fiber_dim(n)];
    d[0] = -1.0;
    CurvatureOperator::diagonal(n, &d).expect("length matches")
}

/// Uniform-ish draw from Λ: `λ₁ ~ U[½, 1]`, then `λ₂` uniform between the
/// lower edge `1 − λ₁` and `min(λ₁, critical)`, rejecting rounding misses.
pub fn random_params<R: Rng + ?Sized>(rng: &mut R) -> ConeParams {
    loop {
        let l1: f64 = rng.gen_range(0.5..=1.0);
        let lo = 1.0 - l1;
        let hi = l1.min(critical_lambda2(l1));
        let l2 = if hi > lo { rng.gen_range(lo..hi) } else { lo };
        if let Ok(p) = ConeParams::new(l1, l2) {
            return p;
        }
    }
}

/// A sampled operator together with its exact eigen-structure.
#[derive(Debug, Clone)]
pub struct ConeSample {
    /// Ascending prescribed spectrum.
    pub spectrum: Vec<f64>,
    /// Orthogonal frame; column `α` is the eigenvector of `spectrum[α]`.
    pub frame: DMatrix<f64>,
    pub operator: CurvatureOperator,
}

/// `μ₂..μ_N` i.i.d. `|N(0,1)|`, sorted; `μ₁` left at zero for the caller.
fn tail_spectrum<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    let mut mu = vec![0.0; dim];
    for v in mu.iter_mut().skip(1) {
        let x: f64 = StandardNormal.sample(rng);
        *v = x.abs();
    }
    mu[1..].sort_by(f64::total_cmp);
    mu
}

/// Draws a sorted spectrum in `C_{λ₁,λ₂}` and conjugates it by a random
/// orthogonal frame of Λ²ℝⁿ.
///
/// * `boundary = None`: interior draw, `μ₁` uniform on the open interval
///   between its lower bound and `μ₂`.
/// * `Some(C1)`: `μ₁ = −λ₁μ₂ − λ₂μ₃`, rejecting until `C2 ≥ −1e-12`.
/// * `Some(C2)`: `μ₁ = −δμ₂/λ₁`, rejecting until `C1 ≥ −1e-12`.
///
/// Boundary draws therefore satisfy `μ₁ ≤ 0 ≤ μ₂`. Exhausting
/// [`RETRY_CAP`] attempts means the requested stratum is (numerically) empty.
pub fn random_in_cone<R: Rng + ?Sized>(
    params: &ConeParams,
    n: usize,
    boundary: Option<Binding>,
    rng: &mut R,
) -> Result<ConeSample> {
    let dim = fiber_dim(n);
    if dim < 3 {
        return Err(Error::SpectrumTooShort { needed: 3, found: dim });
    }
    let (l1, l2, d) = (params.lambda1(), params.lambda2(), params.delta());
    let mut spectrum = None;
    for _ in 0..RETRY_CAP {
        let mut mu = tail_spectrum(dim, rng);
        match boundary {
            None => {
                let lower = (-(l1 * mu[1] + l2 * mu[2])).max(-d * mu[1] / l1);
                let u: f64 = rng.gen_range(f64::EPSILON..1.0);
                mu[0] = lower + u * (mu[1] - lower);
                spectrum = Some(mu);
                break;
            }
            Some(Binding::C1) => {
                mu[0] = -l1 * mu[1] - l2 * mu[2];
                if c2(&mu, l1, l2, 0, 1)? >= -BOUNDARY_TOL {
                    spectrum = Some(mu);
                    break;
                }
            }
            Some(Binding::C2) => {
                mu[0] = -d * mu[1] / l1;
                if c1(&mu, l1, l2, 0, 1, 2)? >= -BOUNDARY_TOL {
                    spectrum = Some(mu);
                    break;
                }
            }
        }
    }
    let spectrum = spectrum.ok_or(Error::SamplerExhausted(RETRY_CAP))?;
    let frame = random_orthogonal(dim, rng);
    let operator = CurvatureOperator::from_spectrum(n, &spectrum, &frame)?;
    Ok(ConeSample {
        spectrum,
        frame,
        operator,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Identity,
    Diagonal,
    RandomSymmetric,
    RandomInCone,
    Remark4,
    RankOne,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Identity => "identity",
            Self::Diagonal => "diagonal",
            Self::RandomSymmetric => "random-symmetric",
            Self::RandomInCone => "random-in-cone",
            Self::Remark4 => "remark4",
            Self::RankOne => "rank-one",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "identity" => Self::Identity,
            "diagonal" => Self::Diagonal,
            "random-symmetric" => Self::RandomSymmetric,
            "random-in-cone" => Self::RandomInCone,
            "remark4" => Self::Remark4,
            "rank-one" => Self::RankOne,
            other => return Err(Error::Model(format!("unknown kind `{other}`"))),
        })
    }
}

/// Declarative description of a fixture operator.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub n: usize,
    pub spectrum: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub scale: f64,
    pub params: Option<ConeParams>,
    pub boundary: Option<Binding>,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, n: usize) -> Self {
        Self {
            kind,
            n,
            spectrum: None,
            seed: None,
            scale: 1.0,
            params: None,
            boundary: None,
        }
    }

    fn validate(&self) -> Result<()> {
        let missing = |what: &str| Err(Error::Model(format!("{} requires `{what}`", self.kind)));
        match self.kind {
            ModelKind::Diagonal => match &self.spectrum {
                None => missing("spectrum"),
                Some(s) if s.len() != fiber_dim(self.n) => Err(Error::DimensionMismatch {
                    expected: fiber_dim(self.n),
                    found: s.len(),
                }),
                Some(_) => Ok(()),
            },
            ModelKind::RandomSymmetric | ModelKind::RankOne if self.seed.is_none() => missing("seed"),
            ModelKind::RandomInCone if self.seed.is_none() => missing("seed"),
            ModelKind::RandomInCone if self.params.is_none() => missing("lambda1/lambda2"),
            _ => Ok(()),
        }
    }

    pub fn build(&self) -> Result<CurvatureOperator> {
        self.validate()?;
        let seed = self.seed.unwrap_or(0);
        let mut rng = rng_for(seed, 0);
        Ok(match self.kind {
            ModelKind::Identity => sphere_operator(self.n, self.scale),
            ModelKind::Diagonal => {
                CurvatureOperator::diagonal(self.n, self.spectrum.as_deref().unwrap_or(&[]))?
                    .scaled(self.scale)
            }
            ModelKind::RandomSymmetric => random_symmetric(self.n, self.scale, &mut rng),
            ModelKind::RankOne => rank_one(self.n, self.scale, &mut rng),
            ModelKind::Remark4 => remark4_operator(self.n).scaled(self.scale),
            ModelKind::RandomInCone => {
                let p = self.params.expect("validated");
                random_in_cone(&p, self.n, self.boundary, &mut rng)?
                    .operator
                    .scaled(self.scale)
            }
        })
    }

    pub fn to_kv(&self, doc: &mut KvDocument, section: &str) {
        doc.set(section, "kind", self.kind.to_string());
        doc.set(section, "n", self.n.to_string());
        doc.set(section, "scale", fmt_exact(self.scale));
        if let Some(s) = &self.spectrum {
            doc.set(section, "spectrum", fmt_list(s));
        }
        if let Some(seed) = self.seed {
            doc.set(section, "seed", seed.to_string());
        }
        if let Some(p) = self.params {
            doc.set(section, "lambda1", fmt_exact(p.lambda1()));
            doc.set(section, "lambda2", fmt_exact(p.lambda2()));
        }
        doc.set(
            section,
            "boundary",
            self.boundary.map_or("none".to_string(), |b| b.to_string()),
        );
    }

    pub fn from_kv(doc: &KvDocument, section: &str) -> Result<Self> {
        let get = |k: &str| doc.get(section, k);
        let kind: ModelKind = get("kind")
            .ok_or_else(|| Error::Model("missing `kind`".into()))?
            .parse()?;
        let n: usize = doc
            .get_parsed(section, "n")
            .map_err(Error::Model)?
            .ok_or_else(|| Error::Model("missing `n`".into()))?;
        let mut spec = Self::new(kind, n);
        if let Some(s) = doc.get_parsed::<f64>(section, "scale").map_err(Error::Model)? {
            spec.scale = s;
        }
        if let Some(s) = get("spectrum") {
            spec.spectrum = Some(parse_list(s).map_err(Error::Model)?);
        }
        spec.seed = doc.get_parsed(section, "seed").map_err(Error::Model)?;
        let l1: Option<f64> = doc.get_parsed(section, "lambda1").map_err(Error::Model)?;
        let l2: Option<f64> = doc.get_parsed(section, "lambda2").map_err(Error::Model)?;
        if let (Some(a), Some(b)) = (l1, l2) {
            spec.params = Some(ConeParams::new(a, b)?);
        }
        spec.boundary = match get("boundary") {
            None | Some("none") => None,
            Some("C1") => Some(Binding::C1),
            Some("C2") => Some(Binding::C2),
            Some(other) => return Err(Error::Model(format!("unknown boundary `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}
