//! Curvature-operator algebra on Λ²ℝⁿ, Hamilton's reaction ODE
//! `dR/dt = R² + R#`, and numerical checks of the (λ₁, λ₂)-nonnegative
//! cone family: ODE invariance, the boundary tangent-cone inequality, the
//! intersection/union set identities, and the trace identity.

pub mod cli;
pub mod cones;
pub mod curvop;
pub mod error;
pub mod flow;
pub mod kv;
pub mod liealg;
pub mod models;
pub mod verify;

pub use cones::{Binding, ConeParams, ConeVerdict, LambdaGrid};
pub use curvop::{CurvatureOperator, EigenData};
pub use error::{Error, Result};
pub use flow::{IntegratorConfig, Termination, TrajectoryRecord};
pub use liealg::LieAlgebraBasis;
