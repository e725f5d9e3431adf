//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use curvflow::models::{random_rotation, random_symmetric, rng_for};
use curvflow::{CurvatureOperator, LieAlgebraBasis};
use nalgebra::DMatrix;

/// Levi-Civita symbol on `{0, 1, 2}`.
pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// `I#I = κ·I` with `κ = (n − 2)/2`, so `r(t)·I` solves `r′ = (1 + κ) r²`.
pub fn riccati_kappa(n: usize) -> f64 {
    (n as f64 - 2.0) / 2.0
}

pub fn riccati(r0: f64, n: usize, t: f64) -> f64 {
    r0 / (1.0 - (1.0 + riccati_kappa(n)) * r0 * t)
}

pub fn riccati_blowup(r0: f64, n: usize) -> f64 {
    1.0 / ((1.0 + riccati_kappa(n)) * r0)
}

/// The n = 3 diagonal system `μ′_a = μ_a² + ½ μ_b μ_c`, written out by hand.
fn diag3(mu: [f64; 3]) -> [f64; 3] {
    [
        mu[0] * mu[0] + 0.5 * mu[1] * mu[2],
        mu[1] * mu[1] + 0.5 * mu[0] * mu[2],
        mu[2] * mu[2] + 0.5 * mu[0] * mu[1],
    ]
}

/// Fixed-step classical RK4 for [`diag3`].
pub fn diag3_oracle(mu0: [f64; 3], t: f64, steps: usize) -> [f64; 3] {
    let h = t / steps as f64;
    let add = |a: [f64; 3], b: [f64; 3], s: f64| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]];
    let mut y = mu0;
    for _ in 0..steps {
        let k1 = diag3(y);
        let k2 = diag3(add(y, k1, h / 2.0));
        let k3 = diag3(add(y, k2, h / 2.0));
        let k4 = diag3(add(y, k3, h));
        for a in 0..3 {
            y[a] += h / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
        }
    }
    y
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

pub fn random_pair(n: usize, seed: u64, i: u64) -> (CurvatureOperator, CurvatureOperator) {
    let mut rng = rng_for(seed, i);
    (random_symmetric(n, 1.0, &mut rng), random_symmetric(n, 1.0, &mut rng))
}

/// Induced rotation of Λ²ℝⁿ for a random element of SO(n).
pub fn random_induced(basis: &LieAlgebraBasis, seed: u64, i: u64) -> DMatrix<f64> {
    let q = random_rotation(basis.n(), &mut rng_for(seed, i));
    basis.induced_rotation(&q).unwrap()
}

/// Jacobi sum `Σ_δ c_δ^{αβ} c_ε^{δγ} + cyclic(α, β, γ)`.
pub fn jacobi(basis: &LieAlgebraBasis, a: usize, b: usize, g: usize, e: usize) -> f64 {
    let dim = basis.dim();
    let mut s = 0.0;
    for d in 0..dim {
        s += basis.c(a, b, d) * basis.c(d, g, e)
            + basis.c(b, g, d) * basis.c(d, a, e)
            + basis.c(g, a, d) * basis.c(d, b, e);
    }
    s
}
