//! Curvature operators as symmetric bilinear forms on Λ²ℝⁿ.
//!
//! A [`CurvatureOperator`] stores the symmetric `N×N` matrix of the form in
//! the orthonormal wedge basis of [`LieAlgebraBasis`]. The sharp product
//! and the reaction term `R² + R#` of Hamilton's curvature ODE live here.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::liealg::{fiber_dim, LieAlgebraBasis};

/// Symmetry tolerance enforced on construction, before re-symmetrization.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Absolute tolerance below `‖R‖∞ = 1`, relative above.
#[inline]
pub fn scaled_tol(tol: f64, norm: f64) -> f64 {
    tol * norm.max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureOperator {
    n: usize,
    entries: DMatrix<f64>,
}

impl CurvatureOperator {
    /// Wraps a matrix, rejecting it when it is not symmetric to within
    /// [`SYMMETRY_TOL`] (scaled by the entry size) and symmetrizing the rest.
    pub fn from_matrix(n: usize, entries: DMatrix<f64>) -> Result<Self> {
        let dim = fiber_dim(n);
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: entries.nrows().max(entries.ncols()),
            });
        }
        let asym = (&entries - entries.transpose()).abs().max();
        let norm = entries.abs().max();
        if !(asym <= scaled_tol(SYMMETRY_TOL, norm)) {
            return Err(Error::NotSymmetric(asym));
        }
        let mut op = Self { n, entries };
        op.symmetrize();
        Ok(op)
    }

    pub fn zeros(n: usize) -> Self {
        let dim = fiber_dim(n);
        Self {
            n,
            entries: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(n: usize) -> Self {
        let dim = fiber_dim(n);
        Self {
            n,
            entries: DMatrix::identity(dim, dim),
        }
    }

    pub fn diagonal(n: usize, diag: &[f64]) -> Result<Self> {
        let dim = fiber_dim(n);
        if diag.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: diag.len(),
            });
        }
        let mut entries = DMatrix::zeros(dim, dim);
        for (a, v) in diag.iter().enumerate() {
            entries[(a, a)] = *v;
        }
        Ok(Self { n, entries })
    }

    /// `frame · diag(spectrum) · frameᵀ`.
    pub fn from_spectrum(n: usize, spectrum: &[f64], frame: &DMatrix<f64>) -> Result<Self> {
        let d = Self::diagonal(n, spectrum)?;
        if frame.nrows() != d.dim() || frame.ncols() != d.dim() {
            return Err(Error::DimensionMismatch {
                expected: d.dim(),
                found: frame.nrows(),
            });
        }
        let mut op = Self {
            n,
            entries: frame * d.entries * frame.transpose(),
        };
        op.symmetrize();
        Ok(op)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    /// Largest absolute entry.
    pub fn norm_inf(&self) -> f64 {
        self.entries.abs().max()
    }

    pub fn norm_frobenius(&self) -> f64 {
        self.entries.norm()
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    pub fn asymmetry(&self) -> f64 {
        (&self.entries - self.entries.transpose()).abs().max()
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|v| v.is_finite())
    }

    pub fn symmetrize(&mut self) {
        let dim = self.dim();
        for a in 0..dim {
            for b in (a + 1)..dim {
                let m = 0.5 * (self.entries[(a, b)] + self.entries[(b, a)]);
                self.entries[(a, b)] = m;
                self.entries[(b, a)] = m;
            }
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            n: self.n,
            entries: &self.entries * s,
        }
    }

    /// `self + s·other`.
    pub fn add_scaled(&self, other: &Self, s: f64) -> Result<Self> {
        same_dim(self, other)?;
        Ok(Self {
            n: self.n,
            entries: &self.entries + &other.entries * s,
        })
    }

    /// `q · R · qᵀ` for an orthogonal `N×N` map `q`.
    pub fn conjugate(&self, q: &DMatrix<f64>) -> Result<Self> {
        if q.nrows() != self.dim() || q.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: q.nrows(),
            });
        }
        let mut op = Self {
            n: self.n,
            entries: q * &self.entries * q.transpose(),
        };
        op.symmetrize();
        Ok(op)
    }

    /// Quadratic form `R(v, v)`.
    pub fn quadratic_form(&self, v: &nalgebra::DVectorView<'_, f64>) -> f64 {
        (v.transpose() * &self.entries * v)[(0, 0)]
    }
}

fn same_dim(a: &CurvatureOperator, b: &CurvatureOperator) -> Result<()> {
    if a.n != b.n {
        return Err(Error::DimensionMismatch {
            expected: a.n,
            found: b.n,
        });
    }
    Ok(())
}

fn basis_dim(op: &CurvatureOperator, basis: &LieAlgebraBasis) -> Result<()> {
    if op.n != basis.n() {
        return Err(Error::DimensionMismatch {
            expected: basis.n(),
            found: op.n,
        });
    }
    Ok(())
}

/// `(A#B)_{αβ} = ½ Σ c_α^{γη} c_β^{δθ} A_{γδ} B_{ηθ}`.
///
/// Evaluated slice-wise as `½ ⟨C_α, A C_β B⟩_F` where `C_α` is the
/// antisymmetric matrix `(c_α^{γη})_{γη}`; the result is symmetrized.
pub fn sharp(
    a: &CurvatureOperator,
    b: &CurvatureOperator,
    basis: &LieAlgebraBasis,
) -> Result<CurvatureOperator> {
    same_dim(a, b)?;
    basis_dim(a, basis)?;
    let dim = basis.dim();
    let products: Vec<DMatrix<f64>> = (0..dim)
        .map(|beta| &a.entries * basis.slice(beta) * &b.entries)
        .collect();
    let mut out = DMatrix::zeros(dim, dim);
    for alpha in 0..dim {
        let ca = basis.slice(alpha);
        for (beta, p) in products.iter().enumerate() {
            out[(alpha, beta)] = 0.5 * ca.dot(p);
        }
    }
    let mut op = CurvatureOperator { n: a.n, entries: out };
    op.symmetrize();
    Ok(op)
}

/// `A# = A#A`.
pub fn sharp_self(a: &CurvatureOperator, basis: &LieAlgebraBasis) -> Result<CurvatureOperator> {
    sharp(a, a, basis)
}

/// Reaction term of Hamilton's ODE, `R² + R#`.
pub fn ode_rhs(r: &CurvatureOperator, basis: &LieAlgebraBasis) -> Result<CurvatureOperator> {
    let mut s = sharp_self(r, basis)?;
    s.entries += &r.entries * &r.entries;
    s.symmetrize();
    Ok(s)
}

/// Ascending eigenvalues with the matching orthonormal eigenvectors
/// (column `α` of `vectors` pairs with `values[α]`).
#[derive(Debug, Clone)]
pub struct EigenData {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

pub fn eigen_sorted(r: &CurvatureOperator) -> Result<EigenData> {
    if !r.is_finite() {
        return Err(Error::Eigen("non-finite entries".into()));
    }
    let asym = r.asymmetry();
    if asym > scaled_tol(SYMMETRY_TOL, r.norm_inf()) {
        return Err(Error::NotSymmetric(asym));
    }
    let eig = SymmetricEigen::try_new(r.entries.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigen("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..r.dim()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigen("non-finite eigenvalue".into()));
    }
    let vectors = DMatrix::from_fn(r.dim(), r.dim(), |row, col| {
        eig.eigenvectors[(row, order[col])]
    });
    Ok(EigenData { values, vectors })
}

/// Sorted eigenvalues only.
pub fn spectrum(r: &CurvatureOperator) -> Result<Vec<f64>> {
    eigen_sorted(r).map(|e| e.values)
}

/// Coordinates of `e_i ∧ e_j` in the wedge basis: `(index, sign)`, or `None`
/// when `i = j`.
fn wedge(basis: &LieAlgebraBasis, i: usize, j: usize) -> Result<Option<(usize, f64)>> {
    let n = basis.n();
    for v in [i, j] {
        if v >= n {
            return Err(Error::IndexOutOfRange { index: v, bound: n });
        }
    }
    Ok(match i.cmp(&j) {
        std::cmp::Ordering::Equal => None,
        std::cmp::Ordering::Less => Some((basis.index_of(i, j)?, 1.0)),
        std::cmp::Ordering::Greater => Some((basis.index_of(j, i)?, -1.0)),
    })
}

/// `R_{ijkl} = ⟨Rm(e_i, e_j) e_l, e_k⟩ = ½ 𝓡(e_i∧e_j, e_k∧e_l)`.
///
/// Here `e_i∧e_j` is the bivector `e_i e_jᵀ − e_j e_iᵀ`, which has norm √2
/// in the trace inner product, i.e. `e_i∧e_j = ±√2 φ^{(ij)}`. The two factors
/// cancel, so `R_{ijkl}` equals the signed matrix entry `±R_{αβ}`.
pub fn curvature_tensor_entry(
    r: &CurvatureOperator,
    basis: &LieAlgebraBasis,
    i: usize,
    j: usize,
    k: usize,
    l: usize,
) -> Result<f64> {
    basis_dim(r, basis)?;
    let (Some((a, sa)), Some((b, sb))) = (wedge(basis, i, j)?, wedge(basis, k, l)?) else {
        return Ok(0.0);
    };
    let bivector_norm_sq = 2.0;
    Ok(0.5 * bivector_norm_sq * sa * sb * r.entries[(a, b)])
}

/// `Scal = Σ_{i,j} R_{ijij}`; equals `2·trace(R)`.
pub fn scalar_curvature(r: &CurvatureOperator, basis: &LieAlgebraBasis) -> Result<f64> {
    basis_dim(r, basis)?;
    let n = basis.n();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += curvature_tensor_entry(r, basis, i, j, i, j)?;
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(n: usize) -> LieAlgebraBasis {
        LieAlgebraBasis::new(n).unwrap()
    }

    #[test]
    fn sharp_of_zero_is_zero() {
        let b = basis(4);
        let z = CurvatureOperator::zeros(4);
        let id = CurvatureOperator::identity(4);
        assert_eq!(sharp(&z, &id, &b).unwrap().norm_inf(), 0.0);
        assert_eq!(sharp_self(&z, &b).unwrap().norm_inf(), 0.0);
        assert_eq!(ode_rhs(&z, &b).unwrap().norm_inf(), 0.0);
    }

    #[test]
    fn identity_sharp_in_three_dimensions() {
        let b = basis(3);
        let id = CurvatureOperator::identity(3);
        let s = sharp(&id, &id, &b).unwrap();
        assert!((s.matrix() - DMatrix::<f64>::identity(3, 3) * 0.5).abs().max() < 1e-15);
        let rhs = ode_rhs(&id, &b).unwrap();
        assert!((rhs.matrix() - DMatrix::<f64>::identity(3, 3) * 1.5).abs().max() < 1e-15);
    }

    #[test]
    fn adjugate_law_n3() {
        let b = basis(3);
        let (x, y, z) = (2.0, -3.0, 0.5);
        let a = CurvatureOperator::diagonal(3, &[x, y, z]).unwrap();
        let s = sharp_self(&a, &b).unwrap();
        let expected = [y * z / 2.0, x * z / 2.0, x * y / 2.0];
        for i in 0..3 {
            assert!((s.matrix()[(i, i)] - expected[i]).abs() < 1e-12);
        }
        assert!(s.matrix().iter().enumerate().all(|(k, v)| k % 4 == 0 || v.abs() < 1e-15));
    }

    #[test]
    fn sharp_rejects_mismatched_dimensions() {
        let b = basis(3);
        let a = CurvatureOperator::identity(3);
        let c = CurvatureOperator::identity(4);
        assert!(matches!(sharp(&a, &c, &b), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(sharp(&c, &c, &b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn from_matrix_checks_shape_and_symmetry() {
        assert!(CurvatureOperator::from_matrix(3, DMatrix::zeros(4, 4)).is_err());
        let mut m = DMatrix::zeros(3, 3);
        m[(0, 1)] = 1.0;
        assert!(matches!(
            CurvatureOperator::from_matrix(3, m),
            Err(Error::NotSymmetric(_))
        ));
    }

    #[test]
    fn eigen_of_diagonal_is_sorted_with_axis_vectors() {
        let r = CurvatureOperator::diagonal(3, &[3.0, 1.0, 2.0]).unwrap();
        let e = eigen_sorted(&r).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
        for (col, axis) in [1usize, 2, 0].iter().enumerate() {
            assert!((e.vectors[(*axis, col)].abs() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn eigen_of_identity() {
        let e = eigen_sorted(&CurvatureOperator::identity(5)).unwrap();
        assert!(e.values.iter().all(|v| (*v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn eigen_rejects_non_finite() {
        let r = CurvatureOperator::diagonal(3, &[f64::NAN, 1.0, 2.0]).unwrap();
        assert!(matches!(eigen_sorted(&r), Err(Error::Eigen(_))));
    }

    #[test]
    fn tensor_entry_antisymmetry_and_isotropy() {
        let b = basis(3);
        let id = CurvatureOperator::identity(3);
        assert_eq!(curvature_tensor_entry(&id, &b, 0, 0, 1, 2).unwrap(), 0.0);
        let v = curvature_tensor_entry(&id, &b, 0, 1, 0, 1).unwrap();
        for (i, j) in [(0, 2), (1, 2)] {
            assert_eq!(curvature_tensor_entry(&id, &b, i, j, i, j).unwrap(), v);
        }
        assert_eq!(curvature_tensor_entry(&id, &b, 1, 0, 0, 1).unwrap(), -v);
        assert!(curvature_tensor_entry(&id, &b, 0, 3, 0, 1).is_err());
        assert!(curvature_tensor_entry(&id, &b, 0, 0, 0, 3).is_err());
    }

    #[test]
    fn scalar_curvature_of_identity() {
        let b = basis(3);
        assert_eq!(scalar_curvature(&CurvatureOperator::zeros(3), &b).unwrap(), 0.0);
        let s = scalar_curvature(&CurvatureOperator::identity(3), &b).unwrap();
        assert!((s - 6.0).abs() < 1e-14);
    }
}
