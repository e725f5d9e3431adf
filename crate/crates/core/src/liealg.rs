//! Orthonormal wedge basis of so(n) and its Lie-bracket structure constants.
//!
//! Basis elements are indexed by `0..N` with `N = n(n-1)/2`; index `α`
//! corresponds to the pair `(i, j)`, `i < j`, in lexicographic order, so for
//! `n = 3` the pairs are `(0,1), (0,2), (1,2)`.
//!
//! The generator for `(i, j)` has `-1/√2` at `(i, j)` and `+1/√2` at `(j, i)`.
//! With this sign the `n = 3` structure constants are exactly `ε_{αβγ}/√2`.
//! The overall sign of the basis never enters the sharp product or any
//! curvature quantity, which are all even in the structure constants.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const MIN_DIM: usize = 3;
pub const MAX_DIM: usize = 10;

/// Orthonormal basis `{φ^α}` of so(n) together with the dense tensor
/// `c_γ^{αβ} = ⟨[φ^α, φ^β], φ^γ⟩`.
#[derive(Debug, Clone)]
pub struct LieAlgebraBasis {
    n: usize,
    dim: usize,
    pairs: Vec<(usize, usize)>,
    pair_index: Vec<Option<usize>>,
    generators: Vec<DMatrix<f64>>,
    structure: Vec<f64>,
    /// `slices[γ]` is the antisymmetric `N×N` matrix `(c_γ^{αβ})_{αβ}`.
    slices: Vec<DMatrix<f64>>,
}

/// Frobenius (trace) inner product `trace(Aᵀ B)`.
pub fn trace_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(b).sum()
}

pub fn fiber_dim(n: usize) -> usize {
    n * (n - 1) / 2
}

impl LieAlgebraBasis {
    pub fn new(n: usize) -> Result<Self> {
        if !(MIN_DIM..=MAX_DIM).contains(&n) {
            return Err(Error::DimensionOutOfRange(n));
        }
        let dim = fiber_dim(n);
        let mut pairs = Vec::with_capacity(dim);
        let mut pair_index = vec![None; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                pair_index[i * n + j] = Some(pairs.len());
                pairs.push((i, j));
            }
        }

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let generators: Vec<DMatrix<f64>> = pairs
            .iter()
            .map(|&(i, j)| {
                let mut g = DMatrix::zeros(n, n);
                g[(i, j)] = -s;
                g[(j, i)] = s;
                g
            })
            .collect();

        let mut structure = vec![0.0; dim * dim * dim];
        for a in 0..dim {
            for b in 0..dim {
                let comm = &generators[a] * &generators[b] - &generators[b] * &generators[a];
                for (g, gen) in generators.iter().enumerate() {
                    structure[(a * dim + b) * dim + g] = trace_inner(&comm, gen);
                }
            }
        }

        let slices = (0..dim)
            .map(|g| DMatrix::from_fn(dim, dim, |a, b| structure[(a * dim + b) * dim + g]))
            .collect();

        Ok(Self {
            n,
            dim,
            pairs,
            pair_index,
            generators,
            structure,
            slices,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Fiber dimension `N = n(n-1)/2`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pair(&self, alpha: usize) -> Result<(usize, usize)> {
        self.pairs
            .get(alpha)
            .copied()
            .ok_or(Error::IndexOutOfRange {
                index: alpha,
                bound: self.dim,
            })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Index of the pair `(i, j)`, `i < j`.
    pub fn index_of(&self, i: usize, j: usize) -> Result<usize> {
        for v in [i, j] {
            if v >= self.n {
                return Err(Error::IndexOutOfRange {
                    index: v,
                    bound: self.n,
                });
            }
        }
        self.pair_index[i * self.n + j].ok_or(Error::IndexOrder(vec![i, j]))
    }

    pub fn generator(&self, alpha: usize) -> Result<&DMatrix<f64>> {
        self.check(alpha)?;
        Ok(&self.generators[alpha])
    }

    pub fn generators(&self) -> &[DMatrix<f64>] {
        &self.generators
    }

    /// `c_γ^{αβ}`, the `φ^γ` component of `[φ^α, φ^β]`.
    #[inline]
    pub fn c(&self, alpha: usize, beta: usize, gamma: usize) -> f64 {
        self.structure[(alpha * self.dim + beta) * self.dim + gamma]
    }

    /// The matrix `(c_γ^{αβ})_{αβ}` for fixed `γ`.
    pub fn slice(&self, gamma: usize) -> &DMatrix<f64> {
        &self.slices[gamma]
    }

    pub fn bracket(&self, alpha: usize, beta: usize) -> Result<DVector<f64>> {
        self.check(alpha)?;
        self.check(beta)?;
        Ok(DVector::from_fn(self.dim, |g, _| self.c(alpha, beta, g)))
    }

    /// Rebuild the `n×n` matrix `Σ_γ v_γ φ^γ` from a coefficient vector.
    pub fn to_matrix(&self, coeffs: &DVector<f64>) -> Result<DMatrix<f64>> {
        if coeffs.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: coeffs.len(),
            });
        }
        let mut m = DMatrix::zeros(self.n, self.n);
        for (c, g) in coeffs.iter().zip(&self.generators) {
            m += g * *c;
        }
        Ok(m)
    }

    /// Coefficients of an antisymmetric `n×n` matrix in the basis.
    pub fn coefficients(&self, m: &DMatrix<f64>) -> Result<DVector<f64>> {
        if m.nrows() != self.n || m.ncols() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: m.nrows(),
            });
        }
        Ok(DVector::from_iterator(
            self.dim,
            self.generators.iter().map(|g| trace_inner(g, m)),
        ))
    }

    /// The orthogonal map on Λ²ℝⁿ induced by `Q ∈ O(n)`:
    /// `q_{αβ} = ⟨φ^α, Q φ^β Qᵀ⟩`.
    pub fn induced_rotation(&self, rot: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if rot.nrows() != self.n || rot.ncols() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: rot.nrows(),
            });
        }
        let mut q = DMatrix::zeros(self.dim, self.dim);
        for (b, gb) in self.generators.iter().enumerate() {
            let conj = rot * gb * rot.transpose();
            for (a, ga) in self.generators.iter().enumerate() {
                q[(a, b)] = trace_inner(ga, &conj);
            }
        }
        Ok(q)
    }

    fn check(&self, alpha: usize) -> Result<()> {
        if alpha < self.dim {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: alpha,
                bound: self.dim,
            })
        }
    }
}
