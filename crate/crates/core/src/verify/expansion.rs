//! Eigen-frame expansion of the weighted derivative of the binding cone
//! functional.
//!
//! For `R` diagonal in an orthonormal frame `{ω_α}` with ascending spectrum
//! `μ`, the diagonal of `R² + R#` in that frame is
//! `μ_α² + Σ_{γ<η} (c'_α^{γη})² μ_γ μ_η`, where `c'` are the structure
//! constants expressed in the frame. The weighted sums below regroup this
//! into terms whose signs are controlled individually on the cone boundary.

use nalgebra::DMatrix;

use crate::cones::{Binding, ConeParams};
use crate::error::{Error, Result};
use crate::liealg::LieAlgebraBasis;

/// Structure constants `c'_γ^{αβ}` in a rotated orthonormal frame
/// (column `α` of `frame` is `ω_α` in basis coordinates).
pub struct FrameConstants {
    dim: usize,
    data: Vec<f64>,
}

impl FrameConstants {
    pub fn new(basis: &LieAlgebraBasis, frame: &DMatrix<f64>) -> Result<Self> {
        let dim = basis.dim();
        if frame.nrows() != dim || frame.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: frame.nrows(),
            });
        }
        let idx = |a: usize, b: usize, g: usize| (a * dim + b) * dim + g;
        // transform one tensor slot at a time
        let mut t1 = vec![0.0; dim * dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                for g in 0..dim {
                    let mut s = 0.0;
                    for k in 0..dim {
                        s += basis.c(i, j, k) * frame[(k, g)];
                    }
                    t1[idx(i, j, g)] = s;
                }
            }
        }
        let mut t2 = vec![0.0; dim * dim * dim];
        for i in 0..dim {
            for b in 0..dim {
                for g in 0..dim {
                    let mut s = 0.0;
                    for j in 0..dim {
                        s += t1[idx(i, j, g)] * frame[(j, b)];
                    }
                    t2[idx(i, b, g)] = s;
                }
            }
        }
        let mut data = vec![0.0; dim * dim * dim];
        for a in 0..dim {
            for b in 0..dim {
                for g in 0..dim {
                    let mut s = 0.0;
                    for i in 0..dim {
                        s += t2[idx(i, b, g)] * frame[(i, a)];
                    }
                    data[idx(a, b, g)] = s;
                }
            }
        }
        Ok(Self { dim, data })
    }

    pub fn identity(basis: &LieAlgebraBasis) -> Self {
        let dim = basis.dim();
        let mut data = vec![0.0; dim * dim * dim];
        for a in 0..dim {
            for b in 0..dim {
                for g in 0..dim {
                    data[(a * dim + b) * dim + g] = basis.c(a, b, g);
                }
            }
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `c'_γ^{αβ}`.
    #[inline]
    pub fn c(&self, alpha: usize, beta: usize, gamma: usize) -> f64 {
        self.data[(alpha * self.dim + beta) * self.dim + gamma]
    }

    #[inline]
    fn sq(&self, gamma: usize, alpha: usize, beta: usize) -> f64 {
        let c = self.c(alpha, beta, gamma);
        c * c
    }
}

/// Weighted derivative split into its sign-controlled groups.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTerms {
    /// `μ₁² + λ₁μ₂² + λ₂μ₃²` (C1) or `λ₁μ₁² + δμ₂²` (C2).
    pub squares: f64,
    /// Named cross-term groups; their sum plus `squares` is `total`.
    pub groups: Vec<(&'static str, f64)>,
    pub total: f64,
}

fn check_len(mu: &[f64], cf: &FrameConstants) -> Result<()> {
    if mu.len() != cf.dim() {
        return Err(Error::DimensionMismatch {
            expected: cf.dim(),
            found: mu.len(),
        });
    }
    if mu.len() < 3 {
        return Err(Error::SpectrumTooShort {
            needed: 3,
            found: mu.len(),
        });
    }
    Ok(())
}

/// Direct evaluation: `Σ_α w_α (μ_α² + Σ_{γ<η} (c'_α^{γη})² μ_γ μ_η)` with
/// the functional's weights on the first two or three eigenvalues.
pub fn weighted_rate(mu: &[f64], cf: &FrameConstants, params: &ConeParams, which: Binding) -> Result<f64> {
    check_len(mu, cf)?;
    let dim = mu.len();
    let weights: Vec<(usize, f64)> = match which {
        Binding::C1 => vec![(0, 1.0), (1, params.lambda1()), (2, params.lambda2())],
        Binding::C2 => vec![(0, params.lambda1()), (1, params.delta())],
    };
    let mut total = 0.0;
    for (a, w) in weights {
        let mut rate = mu[a] * mu[a];
        for g in 0..dim {
            for e in (g + 1)..dim {
                rate += cf.sq(a, g, e) * mu[g] * mu[e];
            }
        }
        total += w * rate;
    }
    Ok(total)
}

/// The regrouped expansion. For C1 the groups are, in zero-based indices
/// with `b` ranging over `3..N`:
///
/// * `first-pair`: `Σ_b (c'_0^{1b})² (μ₁ + λ₁μ₀) μ_b`
/// * `triple`: `(c'_0^{12})² (μ₁μ₂ + λ₁μ₀μ₂ + λ₂μ₀μ₁)`
/// * `first-third`: `Σ_b (c'_0^{2b})² (μ₂ + λ₂μ₀) μ_b`
/// * `remainder`: `Σ_b (c'_1^{2b})² (λ₁μ₂ + λ₂μ₁) μ_b` plus all terms with
///   both indices `≥ 3`.
///
/// For C2 (`γ = λ₁`, `δ = 1 − (λ₁+λ₂)λ₂`, `b` over `2..N`):
///
/// * `first-pair`: `Σ_b (c'_0^{1b})² (γμ₁ + δμ₀) μ_b`
/// * `remainder`: `Σ_{2≤a<b} (γ(c'_0^{ab})² + δ(c'_1^{ab})²) μ_a μ_b`
pub fn rate_expansion(
    mu: &[f64],
    cf: &FrameConstants,
    params: &ConeParams,
    which: Binding,
) -> Result<RateTerms> {
    check_len(mu, cf)?;
    let dim = mu.len();
    let (l1, l2, d) = (params.lambda1(), params.lambda2(), params.delta());
    let (squares, groups) = match which {
        Binding::C1 => {
            let squares = mu[0] * mu[0] + l1 * mu[1] * mu[1] + l2 * mu[2] * mu[2];
            let mut first_pair = 0.0;
            let mut first_third = 0.0;
            let mut remainder = 0.0;
            for b in 3..dim {
                first_pair += cf.sq(0, 1, b) * (mu[1] + l1 * mu[0]) * mu[b];
                first_third += cf.sq(0, 2, b) * (mu[2] + l2 * mu[0]) * mu[b];
                remainder += cf.sq(1, 2, b) * (l1 * mu[2] + l2 * mu[1]) * mu[b];
            }
            let triple = cf.sq(0, 1, 2) * (mu[1] * mu[2] + l1 * mu[0] * mu[2] + l2 * mu[0] * mu[1]);
            for a in 3..dim {
                for b in (a + 1)..dim {
                    remainder += (cf.sq(0, a, b) + l1 * cf.sq(1, a, b) + l2 * cf.sq(2, a, b))
                        * mu[a]
                        * mu[b];
                }
            }
            (
                squares,
                vec![
                    ("first-pair", first_pair),
                    ("triple", triple),
                    ("first-third", first_third),
                    ("remainder", remainder),
                ],
            )
        }
        Binding::C2 => {
            let squares = l1 * mu[0] * mu[0] + d * mu[1] * mu[1];
            let mut first_pair = 0.0;
            for b in 2..dim {
                first_pair += cf.sq(0, 1, b) * (l1 * mu[1] + d * mu[0]) * mu[b];
            }
            let mut remainder = 0.0;
            for a in 2..dim {
                for b in (a + 1)..dim {
                    remainder += (l1 * cf.sq(0, a, b) + d * cf.sq(1, a, b)) * mu[a] * mu[b];
                }
            }
            (
                squares,
                vec![("first-pair", first_pair), ("remainder", remainder)],
            )
        }
    };
    let total = squares + groups.iter().map(|(_, v)| v).sum::<f64>();
    Ok(RateTerms {
        squares,
        groups,
        total,
    })
}
