//! The parameter region Λ and the (λ₁, λ₂)-nonnegative cone family.
//!
//! Every predicate here works on an ascending spectrum `μ₁ ≤ … ≤ μ_N`.
//! Indices passed to [`c1`] and [`c2`] are zero-based.

use std::fmt;

use crate::curvop::{eigen_sorted, scaled_tol, CurvatureOperator};
use crate::error::{Error, Result};

/// Default membership tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;

/// The inequality of Λ that a parameter pair breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionViolation {
    NonFinite,
    /// `0 ≤ λ₂`
    Lambda2Negative,
    /// `λ₂ ≤ λ₁`
    Lambda2AboveLambda1,
    /// `λ₁ ≤ 1`
    Lambda1AboveOne,
    /// `0 < 1 − (λ₁+λ₂)λ₂`
    DeltaNotPositive,
    /// `1 − (λ₁+λ₂)λ₂ ≤ λ₁`
    DeltaAboveLambda1,
}

impl fmt::Display for RegionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::NonFinite => "parameters must be finite",
            Self::Lambda2Negative => "violates 0 <= lambda2",
            Self::Lambda2AboveLambda1 => "violates lambda2 <= lambda1",
            Self::Lambda1AboveOne => "violates lambda1 <= 1",
            Self::DeltaNotPositive => "violates 0 < 1 - (lambda1 + lambda2) * lambda2",
            Self::DeltaAboveLambda1 => "violates 1 - (lambda1 + lambda2) * lambda2 <= lambda1",
        };
        f.write_str(s)
    }
}

/// `1 − (λ₁+λ₂)λ₂`, the second weight of C2.
#[inline]
pub fn delta(lambda1: f64, lambda2: f64) -> f64 {
    1.0 - (lambda1 + lambda2) * lambda2
}

/// The λ₂ at which `1 − (λ₁+λ₂)λ₂` vanishes: `(√(λ₁²+4) − λ₁)/2`.
pub fn critical_lambda2(lambda1: f64) -> f64 {
    ((lambda1 * lambda1 + 4.0).sqrt() - lambda1) / 2.0
}

pub fn region_check(lambda1: f64, lambda2: f64) -> std::result::Result<(), RegionViolation> {
    if !lambda1.is_finite() || !lambda2.is_finite() {
        return Err(RegionViolation::NonFinite);
    }
    if lambda2 < 0.0 {
        return Err(RegionViolation::Lambda2Negative);
    }
    if lambda2 > lambda1 {
        return Err(RegionViolation::Lambda2AboveLambda1);
    }
    if lambda1 > 1.0 {
        return Err(RegionViolation::Lambda1AboveOne);
    }
    let d = delta(lambda1, lambda2);
    if d <= 0.0 {
        return Err(RegionViolation::DeltaNotPositive);
    }
    if d > lambda1 {
        return Err(RegionViolation::DeltaAboveLambda1);
    }
    Ok(())
}

pub fn lambda_region_contains(lambda1: f64, lambda2: f64) -> bool {
    region_check(lambda1, lambda2).is_ok()
}

/// A validated point of Λ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeParams {
    lambda1: f64,
    lambda2: f64,
}

impl ConeParams {
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        region_check(lambda1, lambda2).map_err(|violation| Error::OutsideRegion {
            lambda1,
            lambda2,
            violation,
        })?;
        Ok(Self { lambda1, lambda2 })
    }

    /// The 2-nonnegative corner `(1, 0)`.
    pub fn two_nonneg() -> Self {
        Self {
            lambda1: 1.0,
            lambda2: 0.0,
        }
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    pub fn delta(&self) -> f64 {
        delta(self.lambda1, self.lambda2)
    }
}

fn check_increasing(idx: &[usize], len: usize) -> Result<()> {
    if idx.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::IndexOrder(idx.to_vec()));
    }
    if let Some(&last) = idx.last() {
        if last >= len {
            return Err(Error::IndexOutOfRange {
                index: last,
                bound: len,
            });
        }
    }
    Ok(())
}

/// `μ_α + λ₁ μ_β + λ₂ μ_γ`.
pub fn c1(mu: &[f64], lambda1: f64, lambda2: f64, a: usize, b: usize, c: usize) -> Result<f64> {
    check_increasing(&[a, b, c], mu.len())?;
    Ok(mu[a] + lambda1 * mu[b] + lambda2 * mu[c])
}

/// `λ₁ μ_α + (1 − (λ₁+λ₂)λ₂) μ_β`.
pub fn c2(mu: &[f64], lambda1: f64, lambda2: f64, a: usize, b: usize) -> Result<f64> {
    check_increasing(&[a, b], mu.len())?;
    Ok(lambda1 * mu[a] + delta(lambda1, lambda2) * mu[b])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Binding {
    C1,
    C2,
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Binding::C1 => "C1",
            Binding::C2 => "C2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeVerdict {
    pub member: bool,
    pub margin: f64,
    pub binding: Binding,
}

/// Minimal C1 and C2 values over all index combinations. For an ascending
/// spectrum with nonnegative weights these are attained at `(0,1,2)` and `(0,1)`.
pub fn margins(mu: &[f64], params: &ConeParams) -> Result<(f64, f64)> {
    if mu.len() < 3 {
        return Err(Error::SpectrumTooShort {
            needed: 3,
            found: mu.len(),
        });
    }
    Ok((
        c1(mu, params.lambda1, params.lambda2, 0, 1, 2)?,
        c2(mu, params.lambda1, params.lambda2, 0, 1)?,
    ))
}

fn inf_norm(mu: &[f64]) -> f64 {
    mu.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Membership of an ascending spectrum in `C_{λ₁,λ₂}` (or its interior when
/// `strict`). `tol` is absolute for `‖μ‖∞ ≤ 1` and relative beyond, and is
/// multiplied by each functional's weight sum, so a functional is compared
/// through its weighted mean. This keeps the tolerant sets nested the same
/// way as the exact ones (nonnegative ⊂ every cone ⊂ 2-nonnegative).
pub fn cone_contains(mu: &[f64], params: &ConeParams, strict: bool, tol: f64) -> Result<ConeVerdict> {
    let (m1, m2) = margins(mu, params)?;
    let (margin, binding) = if m1 <= m2 {
        (m1, Binding::C1)
    } else {
        (m2, Binding::C2)
    };
    let t = scaled_tol(tol, inf_norm(mu));
    let w1 = 1.0 + params.lambda1 + params.lambda2;
    let w2 = params.lambda1 + params.delta();
    let member = if strict {
        m1 > t * w1 && m2 > t * w2
    } else {
        m1 >= -t * w1 && m2 >= -t * w2
    };
    Ok(ConeVerdict {
        member,
        margin,
        binding,
    })
}

pub fn cone_contains_operator(
    r: &CurvatureOperator,
    params: &ConeParams,
    strict: bool,
    tol: f64,
) -> Result<ConeVerdict> {
    let eig = eigen_sorted(r)?;
    cone_contains(&eig.values, params, strict, tol)
}

/// `μ₁ + μ₂ ≥ −2·tol` (tolerance weighted as in [`cone_contains`]).
pub fn two_nonneg_contains(mu: &[f64], tol: f64) -> bool {
    match mu {
        [a, b, ..] => a + b >= -2.0 * scaled_tol(tol, inf_norm(mu)),
        _ => mu.iter().all(|v| *v >= -scaled_tol(tol, inf_norm(mu))),
    }
}

/// `μ₁ + μ₂ > 2·tol`.
pub fn two_pos_contains(mu: &[f64], tol: f64) -> bool {
    match mu {
        [a, b, ..] => a + b > 2.0 * scaled_tol(tol, inf_norm(mu)),
        _ => mu.iter().all(|v| *v > scaled_tol(tol, inf_norm(mu))),
    }
}

/// `μ₁ ≥ −tol`.
pub fn nonneg_contains(mu: &[f64], tol: f64) -> bool {
    mu.first()
        .map_or(true, |v| *v >= -scaled_tol(tol, inf_norm(mu)))
}

/// A finite sample of Λ.
#[derive(Debug, Clone)]
pub struct LambdaGrid {
    points: Vec<ConeParams>,
}

impl LambdaGrid {
    pub fn from_points(points: Vec<ConeParams>) -> Self {
        Self { points }
    }

    /// `size × size` lattice over `[0,1]²` restricted to Λ, plus
    /// `near_critical` points below the critical curve for every lattice
    /// column where that curve bounds Λ. Offsets run geometrically from
    /// `1e-1` down to `1e-7`.
    pub fn lattice(size: usize, near_critical: usize) -> Self {
        let mut points = Vec::new();
        if size < 2 {
            return Self { points };
        }
        let last = (size - 1) as f64;
        for i in 0..size {
            let l1 = i as f64 / last;
            for j in 0..size {
                if let Ok(p) = ConeParams::new(l1, j as f64 / last) {
                    points.push(p);
                }
            }
            let crit = critical_lambda2(l1);
            if crit <= l1 {
                for k in 0..near_critical {
                    let expo = if near_critical > 1 {
                        -1.0 - 6.0 * k as f64 / (near_critical - 1) as f64
                    } else {
                        -7.0
                    };
                    if let Ok(p) = ConeParams::new(l1, crit - 10f64.powf(expo)) {
                        points.push(p);
                    }
                }
            }
        }
        Self { points }
    }

    /// `n1 × n2` grid: λ₁ evenly spaced on `[lo, 1]`, and for each λ₁ the λ₂
    /// values evenly spaced from the lower edge `1 − λ₁` to the upper edge
    /// `min(λ₁, critical − 1e-3)`.
    pub fn coarse(n1: usize, n2: usize, lo: f64) -> Self {
        let mut points = Vec::new();
        for i in 0..n1 {
            let l1 = if n1 == 1 {
                1.0
            } else {
                1.0 - (1.0 - lo) * (n1 - 1 - i) as f64 / (n1 - 1) as f64
            };
            // the lower edge is an equality; step up until rounding admits it
            let mut bottom = (1.0 - l1).max(0.0);
            for _ in 0..16 {
                if lambda_region_contains(l1, bottom) {
                    break;
                }
                bottom = bottom.next_up();
            }
            let top = l1.min(critical_lambda2(l1) - 1e-3);
            for j in 0..n2 {
                let l2 = if n2 == 1 {
                    bottom
                } else {
                    bottom + (top - bottom) * j as f64 / (n2 - 1) as f64
                };
                if let Ok(p) = ConeParams::new(l1, l2) {
                    points.push(p);
                }
            }
        }
        Self { points }
    }

    pub fn points(&self) -> &[ConeParams] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains_corner(&self) -> bool {
        self.points
            .iter()
            .any(|p| p.lambda1 == 1.0 && p.lambda2 == 0.0)
    }

    /// Smallest `δ/λ₁` over the grid. A spectrum with `μ₁ < 0` passes C2 at
    /// every grid point iff `−μ₁ ≤ band · μ₂`.
    pub fn intersection_band(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.delta() / p.lambda1)
            .fold(f64::INFINITY, f64::min)
    }
}

impl Default for LambdaGrid {
    fn default() -> Self {
        Self::lattice(50, 20)
    }
}

/// Outcome of comparing a sampled intersection/union with its closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    /// Membership decided over the grid.
    pub grid_side: bool,
    /// Membership in the closed-form set.
    pub reference: bool,
    /// The sides disagree only by an amount the grid cannot resolve.
    pub within_band: bool,
    /// A grid point that witnesses the grid-side decision, if any.
    pub witness: Option<ConeParams>,
    pub agrees: bool,
}

/// Intersection over the grid versus the nonnegative cone.
///
/// The grid only approaches the critical curve, so a spectrum with
/// `−band·μ₂ ≤ μ₁ < 0` (see [`LambdaGrid::intersection_band`]) is in every
/// sampled cone while failing nonnegativity; such disagreements are
/// reported as `within_band` rather than as counterexamples.
pub fn check_intersection_identity(mu: &[f64], grid: &LambdaGrid, tol: f64) -> Result<IdentityCheck> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut witness = None;
    for p in grid.points() {
        if !cone_contains(mu, p, false, tol)?.member {
            witness = Some(*p);
            break;
        }
    }
    let grid_side = witness.is_none();
    let reference = nonneg_contains(mu, tol);
    let t = scaled_tol(tol, inf_norm(mu));
    let within_band = grid_side
        && !reference
        && mu.len() >= 2
        && mu[1] >= 0.0
        && -mu[0] <= grid.intersection_band() * mu[1] + t;
    Ok(IdentityCheck {
        grid_side,
        reference,
        within_band,
        witness,
        agrees: grid_side == reference || within_band,
    })
}

/// Union over the grid versus the 2-nonnegative (or, when `strict`,
/// 2-positive) cone. The corner `(1, 0)` must be present; additionally every
/// grid point that admits `μ` must be dominated by the corner.
pub fn check_union_identity(mu: &[f64], grid: &LambdaGrid, strict: bool, tol: f64) -> Result<IdentityCheck> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if !grid.contains_corner() {
        return Err(Error::GridMissingCorner);
    }
    let corner = cone_contains(mu, &ConeParams::two_nonneg(), strict, tol)?.member;
    let mut witness = None;
    let mut dominated = true;
    for p in grid.points() {
        if cone_contains(mu, p, strict, tol)?.member {
            witness.get_or_insert(*p);
            if !corner {
                dominated = false;
            }
        }
    }
    let grid_side = witness.is_some();
    let reference = if strict {
        two_pos_contains(mu, tol)
    } else {
        two_nonneg_contains(mu, tol)
    };
    let t = scaled_tol(tol, inf_norm(mu));
    let within_band = grid_side != reference && mu.len() >= 2 && (mu[0] + mu[1]).abs() <= 2.0 * t;
    Ok(IdentityCheck {
        grid_side,
        reference,
        within_band,
        witness,
        agrees: dominated && (grid_side == reference || within_band),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn region_examples() {
        assert!(lambda_region_contains(1.0, 0.0));
        assert!(lambda_region_contains(0.75, 0.5));
        for l1 in [0.72, 0.8, 0.9, 1.0] {
            assert!(!lambda_region_contains(l1, critical_lambda2(l1)));
        }
        assert_eq!(region_check(0.5, 0.9), Err(RegionViolation::Lambda2AboveLambda1));
        assert_eq!(region_check(0.6, 0.2), Err(RegionViolation::DeltaAboveLambda1));
        assert_eq!(region_check(1.2, 0.2), Err(RegionViolation::Lambda1AboveOne));
        assert_eq!(region_check(0.9, -0.1), Err(RegionViolation::Lambda2Negative));
        assert_eq!(region_check(f64::NAN, 0.0), Err(RegionViolation::NonFinite));
    }

    #[test]
    fn critical_value_zeroes_delta() {
        for l1 in [0.0, 0.3, 0.75, 1.0] {
            let l2 = critical_lambda2(l1);
            assert!(delta(l1, l2).abs() < 1e-15);
        }
    }

    #[test]
    fn c1_examples() {
        assert_eq!(c1(&[1.0, 1.0, 1.0], 0.75, 0.5, 0, 1, 2).unwrap(), 2.25);
        assert!((c1(&[-1.0, 1.0, 1.0], 0.75, 0.5, 0, 1, 2).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(c1(&[0.0; 6], 0.75, 0.5, 0, 3, 5).unwrap(), 0.0);
        assert!(matches!(c1(&[0.0; 3], 1.0, 0.0, 1, 0, 2), Err(Error::IndexOrder(_))));
        assert!(matches!(
            c1(&[0.0; 3], 1.0, 0.0, 0, 1, 3),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn c2_examples() {
        let mu = [-1.0, 1.0, 1.0];
        assert!((c2(&mu, 0.75, 0.5, 0, 1).unwrap() + 0.375).abs() < 1e-15);
        assert_eq!(c2(&mu, 1.0, 0.0, 0, 1).unwrap(), 0.0);
        assert_eq!(c2(&[0.0; 3], 0.75, 0.5, 0, 2).unwrap(), 0.0);
        assert!(c2(&mu, 1.0, 0.0, 1, 1).is_err());
    }

    #[test]
    fn cone_contains_identity() {
        let p = ConeParams::new(0.75, 0.5).unwrap();
        let v = cone_contains(&[1.0; 6], &p, false, DEFAULT_TOL).unwrap();
        assert!(v.member);
        let expected = (1.0f64 + 0.75 + 0.5).min(0.75 + p.delta());
        assert!((v.margin - expected).abs() < 1e-15);
    }

    #[test]
    fn remark4_spectrum() {
        let mu = [-1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let v = cone_contains(&mu, &ConeParams::new(0.75, 0.5).unwrap(), false, DEFAULT_TOL).unwrap();
        assert!(!v.member);
        assert_eq!(v.binding, Binding::C2);
        assert!((v.margin + 0.375).abs() < 1e-12);
        assert!(two_nonneg_contains(&mu, DEFAULT_TOL));
        assert!(!nonneg_contains(&mu, DEFAULT_TOL));
    }

    #[test]
    fn cone_contains_errors() {
        let p = ConeParams::two_nonneg();
        assert!(matches!(
            cone_contains(&[1.0, 2.0], &p, false, DEFAULT_TOL),
            Err(Error::SpectrumTooShort { .. })
        ));
        assert!(matches!(
            ConeParams::new(0.5, 0.9),
            Err(Error::OutsideRegion {
                violation: RegionViolation::Lambda2AboveLambda1,
                ..
            })
        ));
    }

    #[test]
    fn zero_spectrum_in_everything() {
        let mu = [0.0; 3];
        assert!(two_nonneg_contains(&mu, DEFAULT_TOL));
        assert!(nonneg_contains(&mu, DEFAULT_TOL));
        assert!(!two_pos_contains(&mu, DEFAULT_TOL));
    }

    #[test]
    fn default_grid_shape() {
        let g = LambdaGrid::default();
        assert!(g.contains_corner());
        assert!(g.points().iter().all(|p| lambda_region_contains(p.lambda1(), p.lambda2())));
        let near = g
            .points()
            .iter()
            .any(|p| (critical_lambda2(p.lambda1()) - p.lambda2()) < 1e-6);
        assert!(near);
    }

    #[test]
    fn coarse_grid_is_in_region() {
        let g = LambdaGrid::coarse(5, 5, 0.55);
        assert_eq!(g.len(), 25);
        assert!(g.contains_corner());
    }

    #[test]
    fn identity_checks_on_named_spectra() {
        let g = LambdaGrid::default();
        let r4 = [-1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let i = check_intersection_identity(&r4, &g, DEFAULT_TOL).unwrap();
        assert!(i.agrees && !i.grid_side && !i.reference);

        let u = check_union_identity(&r4, &g, false, DEFAULT_TOL).unwrap();
        assert!(u.agrees && u.grid_side && u.reference);
        assert!(u.witness.is_some());

        let half = [-1.0, 0.5, 1.0];
        let u = check_union_identity(&half, &g, false, DEFAULT_TOL).unwrap();
        assert!(u.agrees && !u.grid_side && !u.reference);

        let pos = [0.5, 1.0, 2.0];
        assert!(check_intersection_identity(&pos, &g, DEFAULT_TOL).unwrap().grid_side);
        let s = check_union_identity(&pos, &g, true, DEFAULT_TOL).unwrap();
        assert!(s.agrees && s.grid_side && s.reference);
    }

    #[test]
    fn small_negative_first_eigenvalue_is_rejected_near_critical() {
        let g = LambdaGrid::default();
        let mu = [-1e-4, 1.0, 1.0];
        let i = check_intersection_identity(&mu, &g, DEFAULT_TOL).unwrap();
        assert!(!i.grid_side && !i.reference && i.agrees);
    }

    #[test]
    fn identity_check_errors() {
        let empty = LambdaGrid::from_points(vec![]);
        assert!(matches!(
            check_intersection_identity(&[1.0; 3], &empty, DEFAULT_TOL),
            Err(Error::EmptyGrid)
        ));
        let no_corner = LambdaGrid::from_points(vec![ConeParams::new(0.75, 0.5).unwrap()]);
        assert!(matches!(
            check_union_identity(&[1.0; 3], &no_corner, false, DEFAULT_TOL),
            Err(Error::GridMissingCorner)
        ));
    }
}
