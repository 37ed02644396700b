//! Dense complex linear algebra for non-hermitian operators.

mod eigen;
mod expm;
pub mod io;
mod metric;
mod schur;

use std::ops::{Add, Deref, Mul, Sub};

use ndarray::{Array1, Array2, ArrayView1, Zip};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub use eigen::{classify_spectrum, conjugate_pairing, eigendecompose, BiorthogonalEigensystem, SpectrumClass, SpectrumKind};
pub use expm::{expm, expm_array};
pub use metric::{build_metric, MetricOperator};
pub use schur::{balance, hermitian_eigen, schur};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Square complex matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix(Array2<C64>);

impl ComplexMatrix {
    pub fn new(a: Array2<C64>) -> Result<Self> {
        let (r, c) = a.dim();
        if r != c {
            return Err(Error::InvalidMatrix(format!("not square: {r}x{c}")));
        }
        if r == 0 {
            return Err(Error::InvalidMatrix("empty matrix".into()));
        }
        if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite entry".into()));
        }
        Ok(Self(a))
    }

    /// Wraps an array already known to be square; finiteness is not rechecked.
    pub(crate) fn wrap(a: Array2<C64>) -> Self {
        debug_assert_eq!(a.nrows(), a.ncols());
        Self(a)
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidMatrix("ragged rows".into()));
        }
        Self::new(Array2::from_shape_fn((n, n), |(i, j)| rows[i][j]))
    }

    pub fn from_fn(n: usize, f: impl FnMut((usize, usize)) -> C64) -> Result<Self> {
        Self::new(Array2::from_shape_fn((n, n), f))
    }

    pub fn identity(n: usize) -> Self {
        Self(Array2::eye(n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(Array2::zeros((n, n)))
    }

    pub fn from_diag(d: &[C64]) -> Self {
        Self(Array2::from_diag(&Array1::from(d.to_vec())))
    }

    pub fn from_real_diag(d: &[f64]) -> Self {
        Self(Array2::from_diag(&Array1::from_iter(d.iter().map(|&x| C64::new(x, 0.0)))))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_array(&self) -> &Array2<C64> {
        &self.0
    }

    pub fn into_array(self) -> Array2<C64> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(adjoint(&self.0))
    }

    pub fn dot(&self, other: &ComplexMatrix) -> Self {
        Self(self.0.dot(&other.0))
    }

    pub fn apply(&self, v: &Array1<C64>) -> Array1<C64> {
        self.0.dot(v)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(&self.0 * s)
    }

    pub fn trace(&self) -> C64 {
        self.0.diag().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius(&self.0)
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.0)
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        let d = frobenius(&(&self.0 - &adjoint(&self.0)));
        d <= rel_tol * self.frobenius_norm().max(f64::MIN_POSITIVE)
    }

    pub fn inverse(&self) -> Result<Self> {
        inverse(&self.0).map(Self)
    }
}

impl Deref for ComplexMatrix {
    type Target = Array2<C64>;
    fn deref(&self) -> &Array2<C64> {
        &self.0
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.dot(rhs)
    }
}

pub(crate) fn adjoint(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

pub(crate) fn frobenius(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn max_abs(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub(crate) fn one_norm(a: &Array2<C64>) -> f64 {
    a.columns().into_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

pub(crate) fn vec_norm(v: ArrayView1<C64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Conjugate-linear in the first argument.
pub(crate) fn dotc(u: ArrayView1<C64>, v: ArrayView1<C64>) -> C64 {
    Zip::from(u).and(v).fold(ZERO, |acc, a, b| acc + a.conj() * b)
}

struct Lu {
    lu: Array2<C64>,
    perm: Vec<usize>,
}

fn lu_factor(a: &Array2<C64>) -> Result<Lu> {
    let n = a.nrows();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| lu[[i, k]].norm().total_cmp(&lu[[j, k]].norm()))
            .unwrap();
        let pivot = lu[[p, k]];
        if pivot.norm() == 0.0 || !pivot.norm().is_finite() {
            return Err(Error::Singular);
        }
        if p != k {
            for j in 0..n {
                lu.swap([p, j], [k, j]);
            }
            perm.swap(p, k);
        }
        for i in k + 1..n {
            let f = lu[[i, k]] / pivot;
            lu[[i, k]] = f;
            if f != ZERO {
                for j in k + 1..n {
                    let t = lu[[k, j]];
                    lu[[i, j]] -= f * t;
                }
            }
        }
    }
    Ok(Lu { lu, perm })
}

impl Lu {
    fn solve(&self, b: &Array2<C64>) -> Array2<C64> {
        let n = self.lu.nrows();
        let mut x = Array2::from_shape_fn(b.dim(), |(i, j)| b[[self.perm[i], j]]);
        for c in 0..b.ncols() {
            for i in 0..n {
                let mut s = x[[i, c]];
                for k in 0..i {
                    s -= self.lu[[i, k]] * x[[k, c]];
                }
                x[[i, c]] = s;
            }
            for i in (0..n).rev() {
                let mut s = x[[i, c]];
                for k in i + 1..n {
                    s -= self.lu[[i, k]] * x[[k, c]];
                }
                x[[i, c]] = s / self.lu[[i, i]];
            }
        }
        x
    }
}

/// Solves `a x = b` by LU with partial pivoting.
pub(crate) fn solve(a: &Array2<C64>, b: &Array2<C64>) -> Result<Array2<C64>> {
    let x = lu_factor(a)?.solve(b);
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Singular);
    }
    Ok(x)
}

pub(crate) fn inverse(a: &Array2<C64>) -> Result<Array2<C64>> {
    solve(a, &Array2::eye(a.nrows()))
}

/// ‖H†g − gH‖ in the Frobenius norm.
pub fn pseudo_hermiticity_residual(h: &ComplexMatrix, g: &MetricOperator) -> Result<f64> {
    check_dim(h.dim(), g.dim())?;
    let gm = g.g().as_array();
    let d = adjoint(h.as_array()).dot(gm) - gm.dot(h.as_array());
    Ok(frobenius(&d))
}

/// ⟨u, g v⟩.
pub fn g_inner(u: &Array1<C64>, v: &Array1<C64>, g: &MetricOperator) -> Result<C64> {
    check_dim(u.len(), g.dim())?;
    check_dim(v.len(), g.dim())?;
    Ok(dotc(u.view(), g.g().as_array().dot(v).view()))
}

/// Trace of `a` evaluated in the g-inner product over the eigenbasis:
/// Σ_k ⟨g⁻¹φ_k, g A ψ_k⟩. For the metric built from the same eigensystem
/// g⁻¹φ_k = ψ_k, so this is Σ_k ⟨ψ_k, g A ψ_k⟩.
pub fn g_trace(a: &ComplexMatrix, eigsys: &BiorthogonalEigensystem, g: &MetricOperator) -> Result<C64> {
    check_dim(a.dim(), eigsys.dim())?;
    check_dim(a.dim(), g.dim())?;
    let ginv_phi = g.g_inverse().as_array().dot(eigsys.left());
    let ga_psi = g.g().as_array().dot(&a.as_array().dot(eigsys.right()));
    let mut s = ZERO;
    for k in 0..a.dim() {
        s += dotc(ginv_phi.column(k), ga_psi.column(k));
    }
    let tr = a.trace();
    let scale = a.frobenius_norm() * (a.dim() as f64).sqrt();
    if (s - tr).norm() > 1e-9 * scale.max(1.0) {
        log::warn!("g-trace {s} deviates from the matrix trace {tr}");
    }
    Ok(s)
}

pub(crate) fn check_dim(found: usize, expected: usize) -> Result<()> {
    if found != expected {
        Err(Error::DimensionMismatch { expected, found })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn rejects_non_square_and_non_finite() {
        assert!(ComplexMatrix::new(Array2::zeros((2, 3))).is_err());
        assert!(ComplexMatrix::new(Array2::zeros((0, 0))).is_err());
        let mut a = Array2::<C64>::zeros((2, 2));
        a[[0, 1]] = c(f64::NAN, 0.0);
        assert!(ComplexMatrix::new(a).is_err());
    }

    #[test]
    fn solve_matches_manual_inverse() {
        let a = array![[c(2.0, 1.0), c(1.0, 0.0)], [c(0.0, -1.0), c(3.0, 0.5)]];
        let inv = inverse(&a).unwrap();
        let det = a[[0, 0]] * a[[1, 1]] - a[[0, 1]] * a[[1, 0]];
        let expect = array![[a[[1, 1]] / det, -a[[0, 1]] / det], [-a[[1, 0]] / det, a[[0, 0]] / det]];
        assert!(frobenius(&(&inv - &expect)) < 1e-14);
    }

    #[test]
    fn singular_matrix_detected() {
        let a = array![[c(1.0, 0.0), c(2.0, 0.0)], [c(2.0, 0.0), c(4.0, 0.0)]];
        assert_eq!(inverse(&a), Err(Error::Singular));
    }

    #[test]
    fn sigma_x_inner_product_vanishes_on_basis_vector() {
        let sx = ComplexMatrix::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]).unwrap();
        let g = MetricOperator::new(sx, 1e-12).unwrap();
        let e1 = array![ONE, ZERO];
        assert_eq!(g_inner(&e1, &e1, &g).unwrap(), ZERO);
        assert!(!g.positive_definite());
    }

    #[test]
    fn identity_metric_gives_standard_inner_product() {
        let g = MetricOperator::identity(2);
        let u = array![c(1.0, 2.0), c(-0.5, 0.3)];
        let v = array![c(0.2, -1.0), c(3.0, 0.0)];
        let expect = u[0].conj() * v[0] + u[1].conj() * v[1];
        assert!((g_inner(&u, &v, &g).unwrap() - expect).norm() < 1e-15);
    }

    #[test]
    fn residual_of_hermitian_matrix_with_identity_metric_is_zero() {
        let h = ComplexMatrix::from_rows(&[vec![c(1.0, 0.0), c(0.0, 2.0)], vec![c(0.0, -2.0), c(-3.0, 0.0)]]).unwrap();
        let r = pseudo_hermiticity_residual(&h, &MetricOperator::identity(2)).unwrap();
        assert_eq!(r, 0.0);
    }
}
