use ndarray::{Array1, Array2};

use super::eigen::{classify_spectrum, conjugate_pairing, BiorthogonalEigensystem, SpectrumKind};
use super::schur::hermitian_eigen;
use super::{adjoint, frobenius, inverse, ComplexMatrix, C64};
use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

/// Hermitian invertible metric g with its inverse and spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricOperator {
    g: ComplexMatrix,
    g_inverse: ComplexMatrix,
    eigenvalues: Vec<f64>,
    eigenvectors: Array2<C64>,
}

fn hermitize(a: &Array2<C64>) -> Array2<C64> {
    (a + &adjoint(a)).mapv(|z| z * 0.5)
}

impl MetricOperator {
    /// Validates hermiticity (relative tolerance `herm_tol`) and inverts g.
    pub fn new(g: ComplexMatrix, herm_tol: f64) -> Result<Self> {
        if !g.is_hermitian(herm_tol) {
            return Err(Error::InvalidMatrix("metric is not hermitian".into()));
        }
        let gh = hermitize(g.as_array());
        let (eigenvalues, eigenvectors) = hermitian_eigen(&gh)?;
        let vmax = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if eigenvalues.iter().any(|v| v.abs() <= 1e-14 * vmax) {
            return Err(Error::Singular);
        }
        let inv = Array2::from_shape_fn(eigenvectors.dim(), |(i, k)| eigenvectors[[i, k]] / eigenvalues[k]).dot(&adjoint(&eigenvectors));
        Ok(Self { g: ComplexMatrix::wrap(gh), g_inverse: ComplexMatrix::wrap(hermitize(&inv)), eigenvalues, eigenvectors })
    }

    /// Uses a known inverse instead of computing one.
    pub fn from_parts(g: ComplexMatrix, g_inverse: ComplexMatrix, herm_tol: f64) -> Result<Self> {
        if !g.is_hermitian(herm_tol) || !g_inverse.is_hermitian(herm_tol) {
            return Err(Error::InvalidMatrix("metric is not hermitian".into()));
        }
        let gh = hermitize(g.as_array());
        let (eigenvalues, eigenvectors) = hermitian_eigen(&gh)?;
        Ok(Self { g: ComplexMatrix::wrap(gh), g_inverse: ComplexMatrix::wrap(hermitize(g_inverse.as_array())), eigenvalues, eigenvectors })
    }

    /// Diagonal metric diag(d).
    pub fn diagonal(d: &[f64]) -> Result<Self> {
        if d.iter().any(|&x| x == 0.0 || !x.is_finite()) {
            return Err(Error::Singular);
        }
        let n = d.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
        let mut eigenvectors = Array2::<C64>::zeros((n, n));
        for (k, &i) in order.iter().enumerate() {
            eigenvectors[[i, k]] = C64::new(1.0, 0.0);
        }
        let inv: Vec<f64> = d.iter().map(|x| 1.0 / x).collect();
        Ok(Self {
            g: ComplexMatrix::from_real_diag(d),
            g_inverse: ComplexMatrix::from_real_diag(&inv),
            eigenvalues: order.iter().map(|&i| d[i]).collect(),
            eigenvectors,
        })
    }

    /// g = V†V for an invertible transform V that maps H to a hermitian operator.
    pub fn from_transform(v: &ComplexMatrix) -> Result<Self> {
        let vinv = inverse(v.as_array())?;
        let g = adjoint(v.as_array()).dot(v.as_array());
        let gi = vinv.dot(&adjoint(&vinv));
        Self::from_parts(ComplexMatrix::wrap(hermitize(&g)), ComplexMatrix::wrap(hermitize(&gi)), 1e-8)
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n]).expect("identity is invertible")
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn g(&self) -> &ComplexMatrix {
        &self.g
    }

    pub fn g_inverse(&self) -> &ComplexMatrix {
        &self.g_inverse
    }

    /// Ascending real eigenvalues of g.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    pub fn positive_definite(&self) -> bool {
        self.min_eigenvalue() > 0.0
    }

    /// Spectral norm ‖g‖₂.
    pub fn norm(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Hermitian square root W = g^{1/2} and its inverse; requires positive definiteness.
    pub fn sqrt_pair(&self) -> Option<(Array2<C64>, Array2<C64>)> {
        if !self.positive_definite() {
            return None;
        }
        let q = &self.eigenvectors;
        let s: Array1<f64> = self.eigenvalues.iter().map(|v| v.sqrt()).collect();
        let w = Array2::from_shape_fn(q.dim(), |(i, k)| q[[i, k]] * s[k]).dot(&adjoint(q));
        let wi = Array2::from_shape_fn(q.dim(), |(i, k)| q[[i, k]] / s[k]).dot(&adjoint(q));
        Some((w, wi))
    }

    /// ‖g g⁻¹ − I‖_F.
    pub fn inverse_defect(&self) -> f64 {
        frobenius(&(self.g.as_array().dot(self.g_inverse.as_array()) - Array2::<C64>::eye(self.dim())))
    }
}

/// Metric from a biorthogonal eigensystem.
///
/// Real spectrum: g = Σ_n φ_n φ_n†, g⁻¹ = Σ_n ψ_n ψ_n† (positive definite).
/// Conjugate-paired spectrum: the positive-definite sum does not intertwine
/// H with H†, so partners n̄ are combined, g = Σ_n φ_n φ_n̄†,
/// g⁻¹ = Σ_n ψ_n̄ ψ_n†, which is hermitian and indefinite. A generic spectrum
/// admits no metric.
pub fn build_metric(eigsys: &BiorthogonalEigensystem, tol: &Tolerances) -> Result<MetricOperator> {
    let class = classify_spectrum(eigsys.eigenvalues(), tol.imag);
    let psi = eigsys.right();
    let phi = eigsys.left();
    let (g, gi) = match class.kind {
        SpectrumKind::AllReal => (phi.dot(&adjoint(phi)), psi.dot(&adjoint(psi))),
        SpectrumKind::ConjugatePaired => {
            let p = conjugate_pairing(eigsys.eigenvalues(), tol.imag).ok_or(Error::NotPseudoHermitian)?;
            let n = eigsys.dim();
            let phi_bar = Array2::from_shape_fn((n, n), |(i, k)| phi[[i, p[k]]]);
            let psi_bar = Array2::from_shape_fn((n, n), |(i, k)| psi[[i, p[k]]]);
            (phi.dot(&adjoint(&phi_bar)), psi_bar.dot(&adjoint(psi)))
        }
        SpectrumKind::Generic => return Err(Error::NotPseudoHermitian),
    };
    let metric = MetricOperator::from_parts(ComplexMatrix::wrap(hermitize(&g)), ComplexMatrix::wrap(hermitize(&gi)), 1e-6)?;
    let pd = metric.positive_definite();
    if pd != (class.kind == SpectrumKind::AllReal) {
        log::warn!("metric definiteness ({pd}) disagrees with spectrum class {:?}", class.kind);
    }
    Ok(metric)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigendecompose, max_abs, pseudo_hermiticity_residual, I, ONE, ZERO};

    fn two_level(lambda: f64) -> ComplexMatrix {
        ComplexMatrix::from_rows(&[vec![I * lambda, ONE], vec![ONE, -I * lambda]]).unwrap()
    }

    #[test]
    fn hermitian_matrix_gives_identity_metric() {
        let h = ComplexMatrix::from_rows(&[vec![C64::new(1.0, 0.0), C64::new(0.5, -0.5)], vec![C64::new(0.5, 0.5), C64::new(-2.0, 0.0)]]).unwrap();
        let tol = Tolerances::default();
        let g = build_metric(&eigendecompose(&h, &tol).unwrap(), &tol).unwrap();
        assert!(max_abs(&(g.g().as_array() - Array2::<C64>::eye(2))) < 1e-14);
    }

    #[test]
    fn two_level_metric_has_ratio_one_to_three() {
        let tol = Tolerances::default();
        let h = two_level(0.5);
        let g = build_metric(&eigendecompose(&h, &tol).unwrap(), &tol).unwrap();
        assert!(g.positive_definite());
        let ratio = g.max_eigenvalue() / g.min_eigenvalue();
        assert!((ratio - 3.0).abs() < 1e-12, "{ratio}");
        assert!(pseudo_hermiticity_residual(&h, &g).unwrap() < 1e-12);
        assert!(g.inverse_defect() < 1e-13);
    }

    #[test]
    fn residual_against_identity_is_anti_hermitian_part() {
        let lambda = 0.7;
        let r = pseudo_hermiticity_residual(&two_level(lambda), &MetricOperator::identity(2)).unwrap();
        assert!((r - 2.0 * lambda * 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn conjugate_paired_metric_is_indefinite_and_intertwines() {
        // 2×2 in the broken regime: eigenvalues ±i sqrt(λ² − 1)
        let tol = Tolerances::default();
        let h = two_level(1.5);
        let es = eigendecompose(&h, &tol).unwrap();
        let g = build_metric(&es, &tol).unwrap();
        assert!(!g.positive_definite());
        assert!(pseudo_hermiticity_residual(&h, &g).unwrap() < 1e-12);
        assert!(g.inverse_defect() < 1e-12);
    }

    #[test]
    fn generic_spectrum_has_no_metric() {
        let tol = Tolerances::default();
        let h = ComplexMatrix::from_rows(&[vec![C64::new(1.0, 0.3), ZERO], vec![ZERO, C64::new(2.0, 0.0)]]).unwrap();
        let es = eigendecompose(&h, &tol).unwrap();
        assert_eq!(build_metric(&es, &tol), Err(Error::NotPseudoHermitian));
    }

    #[test]
    fn sqrt_pair_squares_back() {
        let g = MetricOperator::new(ComplexMatrix::from_rows(&[vec![C64::new(2.0, 0.0), C64::new(0.0, -1.0)], vec![C64::new(0.0, 1.0), C64::new(2.0, 0.0)]]).unwrap(), 1e-12).unwrap();
        let (w, wi) = g.sqrt_pair().unwrap();
        assert!(max_abs(&(w.dot(&w) - g.g().as_array())) < 1e-14);
        assert!(max_abs(&(w.dot(&wi) - Array2::<C64>::eye(2))) < 1e-14);
    }
}
