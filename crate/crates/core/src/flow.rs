//! Integration of `dR/dt = R² + R#`.
//!
//! Classical RK4 with a growth guard: a step of size `h` is accepted only if
//! `‖R² + R#‖_F · h ≤ growth_fraction · (‖R‖_F + 1)`, otherwise `dt` is
//! multiplied by `step_shrink` and the step retried. The Frobenius norm is
//! used for the guard so that the step sequence is invariant under the
//! orthogonal maps induced by SO(n). Steps never grow back: near a blow-up
//! the admissible step only shrinks.

use std::fmt;
use std::fmt::Write as _;

use crate::cones::{margins, ConeParams};
use crate::curvop::{eigen_sorted, ode_rhs, CurvatureOperator};
use crate::error::{Error, Result};
use crate::kv::fmt_exact;
use crate::liealg::LieAlgebraBasis;

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub dt0: f64,
    pub t_max: f64,
    /// Blow-up threshold on `‖R‖∞`.
    pub norm_cap: f64,
    pub step_shrink: f64,
    pub min_dt: f64,
    pub record_stride: usize,
    pub growth_fraction: f64,
    pub store_operators: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt0: 1e-3,
            t_max: 10.0,
            norm_cap: 1e8,
            step_shrink: 0.5,
            min_dt: 1e-14,
            record_stride: 10,
            growth_fraction: 0.1,
            store_operators: false,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.dt0 > 0.0) {
            return bad("dt0 must be positive");
        }
        if !(self.t_max > 0.0) {
            return bad("t_max must be positive");
        }
        if !(self.norm_cap > 1.0) {
            return bad("norm_cap must exceed 1");
        }
        if !(self.step_shrink > 0.0 && self.step_shrink < 1.0) {
            return bad("step_shrink must lie in (0, 1)");
        }
        if !(self.min_dt > 0.0) {
            return bad("min_dt must be positive");
        }
        if self.record_stride == 0 {
            return bad("record_stride must be at least 1");
        }
        if !(self.growth_fraction > 0.0) {
            return bad("growth_fraction must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ReachedTmax,
    BlowUp,
    StepUnderflow,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ReachedTmax => "reached-t-max",
            Self::BlowUp => "blow-up",
            Self::StepUnderflow => "step-underflow",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub eigenvalues: Vec<f64>,
    pub c1_margin: Option<f64>,
    pub c2_margin: Option<f64>,
    pub norm: f64,
    pub asymmetry: f64,
}

impl TrajectoryPoint {
    pub fn margin(&self) -> Option<f64> {
        match (self.c1_margin, self.c2_margin) {
            (Some(a), Some(b)) => Some(a.min(b)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub points: Vec<TrajectoryPoint>,
    /// Full operators at each recorded point, when requested.
    pub operators: Option<Vec<CurvatureOperator>>,
    pub final_state: CurvatureOperator,
    pub status: Termination,
    pub steps: usize,
    pub final_dt: f64,
}

impl TrajectoryRecord {
    pub fn last(&self) -> &TrajectoryPoint {
        self.points.last().expect("at least the initial point is recorded")
    }

    /// One row per recorded step: `t μ₁ … μ_N c1 c2 norm`, whitespace
    /// separated, preceded by a `#` header.
    pub fn to_columns(&self) -> String {
        let mut out = String::new();
        let dim = self.final_state.dim();
        out.push_str("# t");
        for a in 1..=dim {
            let _ = write!(out, " mu{a}");
        }
        out.push_str(" c1_margin c2_margin norm\n");
        for p in &self.points {
            out.push_str(&fmt_exact(p.t));
            for v in &p.eigenvalues {
                out.push(' ');
                out.push_str(&fmt_exact(*v));
            }
            for m in [p.c1_margin, p.c2_margin] {
                out.push(' ');
                out.push_str(&m.map_or("nan".to_string(), fmt_exact));
            }
            out.push(' ');
            out.push_str(&fmt_exact(p.norm));
            out.push('\n');
        }
        out
    }
}

fn record_point(
    r: &CurvatureOperator,
    t: f64,
    params: Option<&ConeParams>,
) -> Result<TrajectoryPoint> {
    let eig = eigen_sorted(r)?;
    let (c1_margin, c2_margin) = match params {
        Some(p) => {
            let (a, b) = margins(&eig.values, p)?;
            (Some(a), Some(b))
        }
        None => (None, None),
    };
    Ok(TrajectoryPoint {
        t,
        eigenvalues: eig.values,
        c1_margin,
        c2_margin,
        norm: r.norm_inf(),
        asymmetry: r.asymmetry(),
    })
}

fn rk4_step(
    r: &CurvatureOperator,
    k1: &CurvatureOperator,
    h: f64,
    basis: &LieAlgebraBasis,
) -> Result<CurvatureOperator> {
    let k2 = ode_rhs(&r.add_scaled(k1, 0.5 * h)?, basis)?;
    let k3 = ode_rhs(&r.add_scaled(&k2, 0.5 * h)?, basis)?;
    let k4 = ode_rhs(&r.add_scaled(&k3, h)?, basis)?;
    let incr = k1
        .add_scaled(&k2, 2.0)?
        .add_scaled(&k3, 2.0)?
        .add_scaled(&k4, 1.0)?;
    let mut next = r.add_scaled(&incr, h / 6.0)?;
    next.symmetrize();
    Ok(next)
}

/// Integrates from `r0` until `t_max`, blow-up past `norm_cap`, or step
/// underflow below `min_dt`. Eigenvalues (and cone margins when `params` is
/// given) are recorded at `t = 0`, every `record_stride` accepted steps, and
/// at termination.
pub fn integrate(
    r0: &CurvatureOperator,
    basis: &LieAlgebraBasis,
    cfg: &IntegratorConfig,
    params: Option<&ConeParams>,
) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    if r0.n() != basis.n() {
        return Err(Error::DimensionMismatch {
            expected: basis.n(),
            found: r0.n(),
        });
    }
    let mut r = r0.clone();
    r.symmetrize();
    let mut t = 0.0;
    let mut dt = cfg.dt0;
    let mut steps = 0usize;
    let mut points = vec![record_point(&r, t, params)?];
    let mut operators = cfg.store_operators.then(|| vec![r.clone()]);
    let mut last_recorded = 0usize;

    let status = loop {
        if r.norm_inf() >= cfg.norm_cap {
            break Termination::BlowUp;
        }
        let remaining = cfg.t_max - t;
        if remaining <= 0.0 {
            break Termination::ReachedTmax;
        }
        let k1 = ode_rhs(&r, basis)?;
        let growth_limit = cfg.growth_fraction * (r.norm_frobenius() + 1.0);
        let rate = k1.norm_frobenius();
        while rate * dt.min(remaining) > growth_limit && dt >= cfg.min_dt {
            dt *= cfg.step_shrink;
        }
        if dt < cfg.min_dt {
            break Termination::StepUnderflow;
        }
        let (h, last) = if dt >= remaining {
            (remaining, true)
        } else {
            (dt, false)
        };
        let next = rk4_step(&r, &k1, h, basis)?;
        if !next.is_finite() {
            return Err(Error::NonFinite {
                time: t,
                last_state: Box::new(r),
            });
        }
        r = next;
        t = if last { cfg.t_max } else { t + h };
        steps += 1;
        if steps % cfg.record_stride == 0 {
            points.push(record_point(&r, t, params)?);
            if let Some(ops) = operators.as_mut() {
                ops.push(r.clone());
            }
            last_recorded = steps;
        }
    };

    if last_recorded != steps {
        points.push(record_point(&r, t, params)?);
        if let Some(ops) = operators.as_mut() {
            ops.push(r.clone());
        }
    }

    Ok(TrajectoryRecord {
        points,
        operators,
        final_state: r,
        status,
        steps,
        final_dt: dt,
    })
}

/// Rates `μ_α² + Σ_{γ<η} (c_α^{γη})² μ_γ μ_η` of `R² + R#` for a diagonal
/// `R = diag(μ)` in the wedge basis.
pub fn diagonal_rhs(mu: &[f64], basis: &LieAlgebraBasis) -> Result<Vec<f64>> {
    let dim = basis.dim();
    if mu.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: mu.len(),
        });
    }
    Ok((0..dim)
        .map(|a| {
            let mut s = mu[a] * mu[a];
            for g in 0..dim {
                for e in (g + 1)..dim {
                    let c = basis.c(g, e, a);
                    s += c * c * mu[g] * mu[e];
                }
            }
            s
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvop::ode_rhs;

    #[test]
    fn zero_is_an_equilibrium() {
        let b = LieAlgebraBasis::new(3).unwrap();
        let cfg = IntegratorConfig {
            t_max: 1.0,
            ..Default::default()
        };
        let rec = integrate(&CurvatureOperator::zeros(3), &b, &cfg, None).unwrap();
        assert_eq!(rec.status, Termination::ReachedTmax);
        assert!(rec.points.iter().all(|p| p.eigenvalues.iter().all(|v| *v == 0.0)));
        assert_eq!(rec.last().t, 1.0);
    }

    #[test]
    fn identity_blows_up() {
        let b = LieAlgebraBasis::new(3).unwrap();
        let rec = integrate(&CurvatureOperator::identity(3), &b, &IntegratorConfig::default(), None)
            .unwrap();
        assert_eq!(rec.status, Termination::BlowUp);
        // t* = 1 / (1 + 1/2)
        assert!((rec.last().t - 2.0 / 3.0).abs() < 1e-6);
        assert!(rec.points.windows(2).all(|w| w[0].t < w[1].t));
    }

    #[test]
    fn step_underflow_is_a_status() {
        let b = LieAlgebraBasis::new(3).unwrap();
        let cfg = IntegratorConfig {
            min_dt: 1e-4,
            dt0: 1e-3,
            ..Default::default()
        };
        let rec = integrate(&CurvatureOperator::identity(3), &b, &cfg, None).unwrap();
        assert_eq!(rec.status, Termination::StepUnderflow);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let b = LieAlgebraBasis::new(3).unwrap();
        let r = CurvatureOperator::identity(3);
        for cfg in [
            IntegratorConfig { dt0: 0.0, ..Default::default() },
            IntegratorConfig { t_max: -1.0, ..Default::default() },
            IntegratorConfig { norm_cap: 1.0, ..Default::default() },
            IntegratorConfig { record_stride: 0, ..Default::default() },
        ] {
            assert!(matches!(integrate(&r, &b, &cfg, None), Err(Error::InvalidConfig(_))));
        }
        let wrong = CurvatureOperator::identity(4);
        assert!(integrate(&wrong, &b, &IntegratorConfig::default(), None).is_err());
    }

    #[test]
    fn diagonal_rhs_examples() {
        let b = LieAlgebraBasis::new(3).unwrap();
        assert_eq!(diagonal_rhs(&[0.0; 3], &b).unwrap(), vec![0.0; 3]);
        let r = diagonal_rhs(&[1.0; 3], &b).unwrap();
        assert!(r.iter().all(|v| (v - 1.5).abs() < 1e-15));
        assert!(diagonal_rhs(&[1.0; 4], &b).is_err());
    }

    #[test]
    fn diagonal_rhs_matches_full_rhs_on_diagonal_input() {
        for n in 3..=5 {
            let b = LieAlgebraBasis::new(n).unwrap();
            let mu: Vec<f64> = (0..b.dim()).map(|a| (a as f64 * 0.37).sin()).collect();
            let full = ode_rhs(&CurvatureOperator::diagonal(n, &mu).unwrap(), &b).unwrap();
            let rates = diagonal_rhs(&mu, &b).unwrap();
            for a in 0..b.dim() {
                assert!((full.matrix()[(a, a)] - rates[a]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn columns_have_one_row_per_point() {
        let b = LieAlgebraBasis::new(3).unwrap();
        let cfg = IntegratorConfig { t_max: 0.1, ..Default::default() };
        let p = ConeParams::two_nonneg();
        let rec = integrate(&CurvatureOperator::identity(3), &b, &cfg, Some(&p)).unwrap();
        let text = rec.to_columns();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "# t mu1 mu2 mu3 c1_margin c2_margin norm");
        assert_eq!(lines.count(), rec.points.len());
        for p in &rec.points {
            let m = p.margin().unwrap();
            assert!((m - (p.eigenvalues[0] + p.eigenvalues[1])).abs() < 1e-12);
        }
    }
}
