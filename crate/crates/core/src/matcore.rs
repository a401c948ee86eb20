//! Dense symmetric linear algebra shared by every solver.
//!
//! [`SymMatrix`] is the common currency: it stores a square matrix whose
//! symmetry is enforced when it is built, so eigensolvers never see the
//! one-ulp asymmetries that accumulate in the dual updates.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Condition number above which a block is treated as singular.
pub const MAX_BLOCK_CONDITION: f64 = 1e12;

/// Relative eigenvalue threshold used for Laplacian rank checks.
pub const LAPLACIAN_ZERO_TOL: f64 = 1e-10;

const EIGEN_EPS: f64 = f64::EPSILON;
const EIGEN_MAX_ITER: usize = 10_000;

/// A dense, exactly symmetric, finite square matrix.
#[derive(Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Builds a symmetric matrix from `m` by averaging it with its transpose.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidDimension(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidDimension("empty matrix".into()));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("matrix".into()));
        }
        Ok(Self::symmetrized(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidDimension("ragged rows".into()));
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Self::new(DMatrix::from_fn(dim, dim, f))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    /// Averages `m` with its transpose without re-checking finiteness.
    pub(crate) fn symmetrized(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        Self((m + t) * 0.5)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn scale(&self, c: f64) -> Self {
        Self(&self.0 * c)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// `tr(self · other)` for symmetric operands, i.e. the Frobenius inner product.
    pub fn dot(&self, other: &SymMatrix) -> f64 {
        self.0.dot(&other.0)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.0.row_iter().map(|r| r.sum()).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.0.diagonal().iter().copied().collect()
    }

    /// `Xᵀ · self · X` for a tall matrix `X`.
    pub fn congruence(&self, x: &DMatrix<f64>) -> SymMatrix {
        Self::symmetrized(x.transpose() * &self.0 * x)
    }

    /// Restriction to the rows and columns listed in `idx`.
    pub fn submatrix(&self, idx: &[usize]) -> SymMatrix {
        Self(DMatrix::from_fn(idx.len(), idx.len(), |i, j| {
            self.0[(idx[i], idx[j])]
        }))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.0
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymMatrix{}", self.0)
    }
}

impl Serialize for SymMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        SymMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 - &rhs.0)
    }
}

impl Mul<f64> for &SymMatrix {
    type Output = SymMatrix;
    fn mul(self, rhs: f64) -> SymMatrix {
        self.scale(rhs)
    }
}

impl Neg for &SymMatrix {
    type Output = SymMatrix;
    fn neg(self) -> SymMatrix {
        SymMatrix(-&self.0)
    }
}

/// Eigendecomposition of a symmetric matrix with eigenvalues in ascending order.
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub values: Vec<f64>,
    /// Orthogonal matrix whose column `i` pairs with `values[i]`.
    pub vectors: DMatrix<f64>,
}

impl EigenPair {
    /// `V · diag(f(values)) · Vᵀ`.
    pub fn reconstruct_with(&self, mut f: impl FnMut(f64) -> f64) -> SymMatrix {
        let mut scaled = self.vectors.clone();
        for (j, &v) in self.values.iter().enumerate() {
            let fv = f(v);
            scaled.column_mut(j).scale_mut(fv);
        }
        SymMatrix::symmetrized(scaled * self.vectors.transpose())
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.reconstruct_with(|v| v)
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

/// Symmetric eigendecomposition, eigenvalues ascending.
pub fn sym_eig(s: &SymMatrix) -> Result<EigenPair> {
    sym_eig_named(s, "matrix")
}

/// Same as [`sym_eig`] but names the matrix role in the error.
pub fn sym_eig_named(s: &SymMatrix, role: &str) -> Result<EigenPair> {
    let eig = SymmetricEigen::try_new(s.0.clone(), EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or_else(|| Error::EigenFailure(role.to_string()))?;
    let d = s.dim();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(d, d, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(EigenPair { values, vectors })
}

/// Nearest positive semidefinite matrix in Frobenius norm (negative eigenvalues clamped to 0).
pub fn psd_project(s: &SymMatrix) -> Result<SymMatrix> {
    let eig = sym_eig_named(s, "PSD projection input")?;
    if eig.min() >= 0.0 {
        return Ok(s.clone());
    }
    Ok(eig.reconstruct_with(|v| v.max(0.0)))
}

/// Construction used for the orthonormal basis of `1⊥`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisFlavor {
    #[default]
    Helmert,
    Householder,
}

impl std::str::FromStr for BasisFlavor {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "helmert" => Ok(Self::Helmert),
            "householder" => Ok(Self::Householder),
            other => Err(Error::InvalidArgument(format!("unknown basis flavor `{other}`"))),
        }
    }
}

/// A `d × (d-1)` matrix with orthonormal columns spanning the complement of the all-ones vector.
#[derive(Clone, Debug)]
pub struct ProjectionBasis {
    matrix: DMatrix<f64>,
    flavor: BasisFlavor,
}

impl ProjectionBasis {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn flavor(&self) -> BasisFlavor {
        self.flavor
    }

    /// `Pᵀ S P`, a `(d-1) × (d-1)` matrix.
    pub fn compress(&self, s: &SymMatrix) -> SymMatrix {
        s.congruence(&self.matrix)
    }

    /// `P X Pᵀ`, a `d × d` matrix with zero row sums.
    pub fn expand(&self, x: &SymMatrix) -> SymMatrix {
        SymMatrix::symmetrized(&self.matrix * x.as_matrix() * self.matrix.transpose())
    }
}

/// Orthonormal basis of `{x : xᵀ1 = 0}` in `ℝ^d`.
pub fn ones_complement_basis(d: usize, flavor: BasisFlavor) -> Result<ProjectionBasis> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!(
            "complement basis needs d >= 2, got {d}"
        )));
    }
    let matrix = match flavor {
        BasisFlavor::Helmert => DMatrix::from_fn(d, d - 1, |i, j| {
            let k = (j + 1) as f64;
            let norm = (k * (k + 1.0)).sqrt();
            if i <= j {
                1.0 / norm
            } else if i == j + 1 {
                -k / norm
            } else {
                0.0
            }
        }),
        BasisFlavor::Householder => {
            // Reflector sending 1/√d to e₁; its remaining columns span 1⊥.
            let s = 1.0 / (d as f64).sqrt();
            let mut u = DVector::from_element(d, s);
            u[0] -= 1.0;
            let uu = u.dot(&u);
            let q = DMatrix::identity(d, d) - (&u * u.transpose()) * (2.0 / uu);
            q.columns(1, d - 1).into_owned()
        }
    };
    Ok(ProjectionBasis { matrix, flavor })
}

fn laplacian_row_sum_check(theta: &SymMatrix) -> Result<()> {
    let scale = theta.max_abs().max(1.0);
    let worst = theta
        .row_sums()
        .into_iter()
        .fold(0.0_f64, |m, r| m.max(r.abs()));
    if worst > 1e-8 * scale {
        return Err(Error::NotLaplacian(worst));
    }
    Ok(())
}

/// Eigenvalues of `Pᵀ Θ P` after checking that Θ is a rank `d-1` PSD Laplacian.
pub(crate) fn laplacian_complement_eig(
    theta: &SymMatrix,
    basis: &ProjectionBasis,
) -> Result<EigenPair> {
    if basis.dim() != theta.dim() {
        return Err(Error::DimensionMismatch {
            expected: theta.dim(),
            got: basis.dim(),
        });
    }
    laplacian_row_sum_check(theta)?;
    let eig = sym_eig_named(&basis.compress(theta), "compressed Laplacian")?;
    let threshold = LAPLACIAN_ZERO_TOL * theta.max_abs();
    if eig.min() < threshold {
        return Err(Error::SingularLaplacian {
            value: eig.min(),
            threshold,
        });
    }
    Ok(eig)
}

/// Product of the nonzero eigenvalues of a PSD Laplacian with one-dimensional kernel `span(1)`.
pub fn pseudo_det(theta: &SymMatrix) -> Result<f64> {
    Ok(log_pseudo_det(theta)?.exp())
}

/// Logarithm of [`pseudo_det`], computed without forming the product.
pub fn log_pseudo_det(theta: &SymMatrix) -> Result<f64> {
    let basis = ones_complement_basis(theta.dim(), BasisFlavor::Helmert)?;
    log_pseudo_det_with_basis(theta, &basis)
}

pub fn log_pseudo_det_with_basis(theta: &SymMatrix, basis: &ProjectionBasis) -> Result<f64> {
    let eig = laplacian_complement_eig(theta, basis)?;
    Ok(eig.values.iter().map(|v| v.ln()).sum())
}

/// `M_OO − M_OH (M_HH)⁻¹ M_HO`.
pub fn schur_complement(m: &SymMatrix, observed: &[usize], hidden: &[usize]) -> Result<SymMatrix> {
    let d = m.dim();
    let mut seen = vec![false; d];
    for &i in observed.iter().chain(hidden) {
        if i >= d {
            return Err(Error::InvalidIndexSet(format!("index {i} out of range for dimension {d}")));
        }
        if seen[i] {
            return Err(Error::InvalidIndexSet(format!("index {i} listed twice")));
        }
        seen[i] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::InvalidIndexSet(
            "observed and hidden sets do not cover every index".into(),
        ));
    }
    if observed.is_empty() {
        return Err(Error::InvalidIndexSet("observed set is empty".into()));
    }
    let m_oo = m.submatrix(observed);
    if hidden.is_empty() {
        return Ok(m_oo);
    }
    let m_hh = m.submatrix(hidden);
    let eig = sym_eig_named(&m_hh, "hidden block")?;
    let (lo, hi) = eig
        .values
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), v| (lo.min(v.abs()), hi.max(v.abs())));
    let cond = if lo == 0.0 { f64::INFINITY } else { hi / lo };
    if cond > MAX_BLOCK_CONDITION {
        return Err(Error::SingularBlock(cond));
    }
    let m_oh = DMatrix::from_fn(observed.len(), hidden.len(), |i, j| {
        m.get(observed[i], hidden[j])
    });
    let inv_hh = eig.reconstruct_with(|v| 1.0 / v);
    let correction = &m_oh * inv_hh.as_matrix() * m_oh.transpose();
    Ok(SymMatrix::symmetrized(m_oo.into_matrix() - correction))
}

/// `log det(K)` via Cholesky; fails when `K` is not positive definite.
pub fn log_det_pd(k: &SymMatrix, role: &str) -> Result<f64> {
    let chol = k.as_matrix().clone().cholesky().ok_or_else(|| {
        let min_eigenvalue = sym_eig(k).map(|e| e.min()).unwrap_or(f64::NAN);
        Error::NotPositiveDefinite {
            what: role.to_string(),
            min_eigenvalue,
        }
    })?;
    Ok(2.0 * chol.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(d: usize, rng: &mut impl Rng) -> SymMatrix {
        SymMatrix::from_fn(d, |_, _| rng.random_range(-1.0..1.0)).unwrap()
    }

    fn random_pd(d: usize, rng: &mut impl Rng) -> SymMatrix {
        let x = DMatrix::from_fn(d, d + 2, |_, _| rng.random_range(-1.0..1.0));
        SymMatrix::new(&x * x.transpose() + DMatrix::identity(d, d) * 0.1).unwrap()
    }

    fn orthogonality_residual(v: &DMatrix<f64>) -> f64 {
        let g = v.transpose() * v - DMatrix::identity(v.ncols(), v.ncols());
        g.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    #[test]
    fn construction_symmetrizes() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 4.0, 3.0]);
        let s = SymMatrix::new(m).unwrap();
        assert_eq!(s.get(0, 1), 3.0);
        assert_eq!(s.get(1, 0), 3.0);
    }

    #[test]
    fn construction_rejects_non_finite_and_non_square() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, 0.0, 1.0]);
        assert!(matches!(SymMatrix::new(m), Err(Error::NonFinite(_))));
        let r = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(SymMatrix::new(r), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn eig_identity() {
        let e = sym_eig(&SymMatrix::identity(3)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
        assert!(orthogonality_residual(&e.vectors) < 1e-12);
    }

    #[test]
    fn eig_diagonal_sorted_ascending() {
        let e = sym_eig(&SymMatrix::from_diagonal(&[2.0, -1.0]).unwrap()).unwrap();
        assert_eq!(e.values, vec![-1.0, 2.0]);
        assert_relative_eq!(e.vectors[(1, 0)].abs(), 1.0);
        assert_relative_eq!(e.vectors[(0, 1)].abs(), 1.0);
    }

    #[test]
    fn eig_reconstructs_random_6x6() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_sym(6, &mut rng);
        let e = sym_eig(&s).unwrap();
        assert!(e.reconstruct().max_abs_diff(&s) < 1e-10);
    }

    #[test]
    fn psd_project_clamps_negative_eigenvalue() {
        let p = psd_project(&SymMatrix::from_diagonal(&[1.0, -1.0]).unwrap()).unwrap();
        assert!(p.max_abs_diff(&SymMatrix::from_diagonal(&[1.0, 0.0]).unwrap()) < 1e-15);
    }

    #[test]
    fn psd_project_fixes_psd_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = random_pd(5, &mut rng);
        assert!(psd_project(&s).unwrap().max_abs_diff(&s) < 1e-10);
    }

    /// The projection is the Frobenius-nearest PSD matrix: no PSD perturbation of it gets closer.
    #[test]
    fn psd_project_is_frobenius_nearest() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_sym(5, &mut rng);
        let p = psd_project(&s).unwrap();
        let base = (&s - &p).frobenius_norm();
        for _ in 0..200 {
            let y = DMatrix::from_fn(5, 2, |_, _| rng.random_range(-1.0..1.0));
            let q = psd_project(&(&p + &SymMatrix::new(&y * y.transpose()).unwrap().scale(0.05)))
                .unwrap();
            assert!((&s - &q).frobenius_norm() >= base - 1e-12);
        }
        // Independent clamp oracle: diagonalize by Jacobi sweeps rather than the library eigensolver.
        let oracle = jacobi_clamp(&s);
        assert!(p.max_abs_diff(&oracle) < 1e-10);
    }

    fn jacobi_clamp(s: &SymMatrix) -> SymMatrix {
        let d = s.dim();
        let mut a = s.as_matrix().clone();
        let mut v = DMatrix::<f64>::identity(d, d);
        for _ in 0..100 {
            let mut off = 0.0;
            for p in 0..d {
                for q in p + 1..d {
                    off += a[(p, q)] * a[(p, q)];
                    if a[(p, q)].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let sn = t * c;
                    let mut r = DMatrix::<f64>::identity(d, d);
                    r[(p, p)] = c;
                    r[(q, q)] = c;
                    r[(p, q)] = sn;
                    r[(q, p)] = -sn;
                    a = r.transpose() * &a * &r;
                    v = &v * &r;
                }
            }
            if off < 1e-30 {
                break;
            }
        }
        let clamped = DMatrix::from_fn(d, d, |i, j| if i == j { a[(i, i)].max(0.0) } else { 0.0 });
        SymMatrix::new(&v * clamped * v.transpose()).unwrap()
    }

    #[test]
    fn helmert_two_dimensional() {
        let p = ones_complement_basis(2, BasisFlavor::Helmert).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert_relative_eq!(p.matrix()[(0, 0)], s, epsilon = 1e-15);
        assert_relative_eq!(p.matrix()[(1, 0)], -s, epsilon = 1e-15);
    }

    #[test]
    fn basis_invariants_both_flavors() {
        for flavor in [BasisFlavor::Helmert, BasisFlavor::Householder] {
            for d in 2..12 {
                let p = ones_complement_basis(d, flavor).unwrap();
                assert_eq!(p.matrix().shape(), (d, d - 1));
                assert!(orthogonality_residual(p.matrix()) < 1e-12);
                let ones = DVector::from_element(d, 1.0);
                let pt1 = p.matrix().transpose() * ones;
                assert!(pt1.amax() < 1e-12, "{flavor:?} d={d}");
            }
        }
    }

    #[test]
    fn basis_rejects_small_dimension() {
        assert!(matches!(
            ones_complement_basis(1, BasisFlavor::Helmert),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn pseudo_det_two_node() {
        let theta = SymMatrix::from_rows(&[vec![0.5, -0.5], vec![-0.5, 0.5]]).unwrap();
        assert_relative_eq!(pseudo_det(&theta).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn pseudo_det_path_laplacian() {
        let theta = SymMatrix::from_rows(&[
            vec![1.0, -1.0, 0.0],
            vec![-1.0, 2.0, -1.0],
            vec![0.0, -1.0, 1.0],
        ])
        .unwrap();
        assert_relative_eq!(pseudo_det(&theta).unwrap(), 3.0, max_relative = 1e-12);
        // Rank-one correction by the outer product 11ᵀ/d gives the same value.
        let corrected = SymMatrix::from_fn(3, |i, j| theta.get(i, j) + 1.0 / 3.0).unwrap();
        let det = corrected.as_matrix().determinant();
        assert_relative_eq!(det, 3.0, max_relative = 1e-10);
    }

    #[test]
    fn pseudo_det_homogeneity() {
        let theta = SymMatrix::from_rows(&[
            vec![1.0, -1.0, 0.0],
            vec![-1.0, 2.0, -1.0],
            vec![0.0, -1.0, 1.0],
        ])
        .unwrap();
        let c = 2.5;
        assert_relative_eq!(
            pseudo_det(&theta.scale(c)).unwrap(),
            c * c * pseudo_det(&theta).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn pseudo_det_rejects_extra_kernel() {
        // Two disconnected components: second zero eigenvalue.
        let theta = SymMatrix::from_rows(&[
            vec![1.0, -1.0, 0.0, 0.0],
            vec![-1.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, -1.0],
            vec![0.0, 0.0, -1.0, 1.0],
        ])
        .unwrap();
        assert!(matches!(pseudo_det(&theta), Err(Error::SingularLaplacian { .. })));
        let not_lap = SymMatrix::identity(3);
        assert!(matches!(pseudo_det(&not_lap), Err(Error::NotLaplacian(_))));
    }

    #[test]
    fn schur_block_diagonal_and_scalar() {
        let m = SymMatrix::from_diagonal(&[1.0, 2.0, 3.0]).unwrap();
        let s = schur_complement(&m, &[0, 1], &[2]).unwrap();
        assert!(s.max_abs_diff(&SymMatrix::from_diagonal(&[1.0, 2.0]).unwrap()) < 1e-15);

        let (a, b, c) = (3.0, 1.2, 2.0);
        let m = SymMatrix::from_rows(&[vec![a, b], vec![b, c]]).unwrap();
        let s = schur_complement(&m, &[0], &[1]).unwrap();
        assert_relative_eq!(s.get(0, 0), a - b * b / c, epsilon = 1e-15);
    }

    #[test]
    fn schur_star_example() {
        let k = SymMatrix::from_fn(5, |i, j| match (i, j) {
            (4, 4) => 4.0,
            (i, j) if i == j => 2.0,
            (4, _) | (_, 4) => 1.0,
            _ => 0.0,
        })
        .unwrap();
        let s = schur_complement(&k, &[0, 1, 2, 3], &[4]).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == j { 1.75 } else { -0.25 };
                assert_relative_eq!(s.get(i, j), expected, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn schur_rejects_bad_inputs() {
        let m = SymMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        assert!(matches!(schur_complement(&m, &[0], &[1]), Err(Error::SingularBlock(_))));
        let m = SymMatrix::identity(3);
        assert!(matches!(schur_complement(&m, &[0, 1], &[1]), Err(Error::InvalidIndexSet(_))));
        assert!(matches!(schur_complement(&m, &[0], &[1]), Err(Error::InvalidIndexSet(_))));
    }

    #[test]
    fn schur_of_pd_is_pd() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for trial in 0..100 {
            let d = 2 + trial % 7;
            let m = random_pd(d, &mut rng);
            let split = 1 + trial % (d - 1);
            let obs: Vec<usize> = (0..split).collect();
            let hid: Vec<usize> = (split..d).collect();
            let s = schur_complement(&m, &obs, &hid).unwrap();
            assert!(sym_eig(&s).unwrap().min() > 0.0);
        }
    }

    #[test]
    fn log_det_matches_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let k = random_pd(4, &mut rng);
        let from_eig: f64 = sym_eig(&k).unwrap().values.iter().map(|v| v.ln()).sum();
        assert_relative_eq!(log_det_pd(&k, "K").unwrap(), from_eig, max_relative = 1e-12);
        assert!(log_det_pd(&SymMatrix::from_diagonal(&[1.0, -1.0]).unwrap(), "K").is_err());
    }

    fn sym_strategy() -> impl Strategy<Value = SymMatrix> {
        (1usize..=50, any::<u64>()).prop_map(|(d, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            random_sym(d, &mut rng)
        })
    }

    fn laplacian_strategy() -> impl Strategy<Value = SymMatrix> {
        (2usize..=10, any::<u64>()).prop_map(|(d, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = DMatrix::from_fn(d, d, |_, _| rng.random_range(0.1..2.0));
            let w = (&w + w.transpose()) * 0.5;
            SymMatrix::from_fn(d, |i, j| {
                if i == j {
                    (0..d).filter(|&k| k != i).map(|k| w[(i, k)]).sum()
                } else {
                    -w[(i, j)]
                }
            })
            .unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn eig_reconstruction_and_orthogonality(s in sym_strategy()) {
            let e = sym_eig(&s).unwrap();
            let d = s.dim() as f64;
            prop_assert!(e.reconstruct().max_abs_diff(&s) < 1e-10 * d);
            prop_assert!(orthogonality_residual(&e.vectors) < 1e-10);
            prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn psd_project_idempotent(s in sym_strategy()) {
            let p = psd_project(&s).unwrap();
            prop_assert!(sym_eig(&p).unwrap().min() >= -1e-10);
            let pp = psd_project(&p).unwrap();
            prop_assert!(pp.max_abs_diff(&p) < 1e-10);
        }

        #[test]
        fn pseudo_det_basis_invariant(theta in laplacian_strategy()) {
            let d = theta.dim();
            let h = ones_complement_basis(d, BasisFlavor::Helmert).unwrap();
            let q = ones_complement_basis(d, BasisFlavor::Householder).unwrap();
            let a = log_pseudo_det_with_basis(&theta, &h).unwrap().exp();
            let b = log_pseudo_det_with_basis(&theta, &q).unwrap().exp();
            prop_assert!(((a - b) / a).abs() < 1e-10);
            let corrected = SymMatrix::from_fn(d, |i, j| theta.get(i, j) + 1.0 / d as f64).unwrap();
            let det = corrected.as_matrix().determinant();
            prop_assert!(((det - a) / a).abs() < 1e-10);
        }
    }
}
