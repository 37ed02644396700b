use ndarray::{Array1, Array2, ArrayView1};

use super::schur::{balance, schur, triangular_eigenvectors};
use super::{adjoint, frobenius, inverse, one_norm, vec_norm, ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

/// Right eigenvectors ψ_n and left eigenvectors φ_n with ⟨φ_m, ψ_n⟩ = δ_mn.
///
/// Each ψ_n has unit 2-norm and its largest-modulus component real and
/// positive; φ_n carries the remaining scale. Eigenvalues are sorted by real
/// part, then imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct BiorthogonalEigensystem {
    eigenvalues: Vec<C64>,
    right: Array2<C64>,
    left: Array2<C64>,
    groups: Vec<Vec<usize>>,
    condition: f64,
}

impl BiorthogonalEigensystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }

    /// Columns are ψ_n.
    pub fn right(&self) -> &Array2<C64> {
        &self.right
    }

    /// Columns are φ_n.
    pub fn left(&self) -> &Array2<C64> {
        &self.left
    }

    pub fn right_vector(&self, n: usize) -> ArrayView1<'_, C64> {
        self.right.column(n)
    }

    pub fn left_vector(&self, n: usize) -> ArrayView1<'_, C64> {
        self.left.column(n)
    }

    pub fn degeneracy_groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// Condition number of the left/right overlap matrix before normalization.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// max |⟨φ_m, ψ_n⟩ − δ_mn|.
    pub fn biorthonormality_error(&self) -> f64 {
        let s = adjoint(&self.left).dot(&self.right);
        let mut e: f64 = 0.0;
        for ((m, n), z) in s.indexed_iter() {
            let d = if m == n { *z - 1.0 } else { *z };
            e = e.max(d.norm());
        }
        e
    }

    /// Σ_n ψ_n φ_n† − I in the Frobenius norm.
    pub fn completeness_error(&self) -> f64 {
        let p = self.right.dot(&adjoint(&self.left));
        frobenius(&(p - Array2::<C64>::eye(self.dim())))
    }

    pub fn spectrum_class(&self, imag_tolerance: f64) -> SpectrumClass {
        classify_spectrum(&self.eigenvalues, imag_tolerance)
    }

    /// Rescales ψ_n → c_n ψ_n and φ_n → φ_n / c_n, which preserves
    /// biorthonormality and changes the spectral metric by positive weights.
    pub fn rescaled(&self, scales: &[f64]) -> Self {
        assert_eq!(scales.len(), self.dim());
        let mut out = self.clone();
        for (n, &c) in scales.iter().enumerate() {
            out.right.column_mut(n).mapv_inplace(|x| x * c);
            out.left.column_mut(n).mapv_inplace(|x| x / c);
        }
        out
    }

    /// Reassembles Σ_n E_n ψ_n φ_n†.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let scaled = Array2::from_shape_fn(self.right.dim(), |(i, n)| self.right[[i, n]] * self.eigenvalues[n]);
        ComplexMatrix::wrap(scaled.dot(&adjoint(&self.left)))
    }

    /// Σ_n f(E_n) ψ_n φ_n†.
    pub fn spectral_function(&self, f: impl Fn(C64) -> C64) -> ComplexMatrix {
        let scaled = Array2::from_shape_fn(self.right.dim(), |(i, n)| self.right[[i, n]] * f(self.eigenvalues[n]));
        ComplexMatrix::wrap(scaled.dot(&adjoint(&self.left)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    AllReal,
    ConjugatePaired,
    Generic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumClass {
    pub kind: SpectrumKind,
    pub imag_tolerance: f64,
}

/// Greedy pairing of every eigenvalue with a conjugate partner. Real values
/// (|Im E| < tol) pair with themselves. Returns `None` if some complex value
/// has no partner.
pub fn conjugate_pairing(eigs: &[C64], tol: f64) -> Option<Vec<usize>> {
    let n = eigs.len();
    let mut partner = vec![usize::MAX; n];
    for i in 0..n {
        if partner[i] != usize::MAX {
            continue;
        }
        if eigs[i].im.abs() < tol {
            partner[i] = i;
            continue;
        }
        let target = eigs[i].conj();
        let best = (0..n)
            .filter(|&j| j != i && partner[j] == usize::MAX && eigs[j].im.abs() >= tol)
            .min_by(|&a, &b| (eigs[a] - target).norm().total_cmp(&(eigs[b] - target).norm()))?;
        if (eigs[best] - target).norm() >= tol * (1.0 + target.norm()) {
            return None;
        }
        partner[i] = best;
        partner[best] = i;
    }
    Some(partner)
}

pub fn classify_spectrum(eigs: &[C64], tol: f64) -> SpectrumClass {
    let kind = if eigs.iter().all(|e| e.im.abs() < tol) {
        SpectrumKind::AllReal
    } else if conjugate_pairing(eigs, tol).is_some() {
        SpectrumKind::ConjugatePaired
    } else {
        SpectrumKind::Generic
    };
    SpectrumClass { kind, imag_tolerance: tol }
}

fn right_vectors(b: &Array2<C64>, tol: &Tolerances) -> Result<(Vec<C64>, Array2<C64>)> {
    let (t, z) = schur(b)?;
    let n = b.nrows();
    let vals: Vec<C64> = (0..n).map(|k| t[[k, k]]).collect();
    let mut v = z.dot(&triangular_eigenvectors(&t, tol.degeneracy));
    let scale = frobenius(b).max(f64::MIN_POSITIVE);
    for k in 0..n {
        let nrm = vec_norm(v.column(k));
        v.column_mut(k).mapv_inplace(|x| x / nrm);
        let r = b.dot(&v.column(k)) - v.column(k).mapv(|x| x * vals[k]);
        let res = vec_norm(r.view()) / scale;
        if !(res <= tol.eigen_residual) {
            return Err(Error::Defective {
                reason: format!("eigenpair {k} (E = {}) has relative residual {res:e}", vals[k]),
            });
        }
    }
    Ok((vals, v))
}

fn sort_order(vals: &[C64], tol: f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&a, &b| vals[a].re.total_cmp(&vals[b].re));
    // within runs of numerically equal real parts, order by imaginary part
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() {
            let a = vals[idx[end - 1]];
            let b = vals[idx[end]];
            if (b.re - a.re).abs() > tol * (1.0 + a.norm()) {
                break;
            }
            end += 1;
        }
        idx[start..end].sort_by(|&a, &b| vals[a].im.total_cmp(&vals[b].im));
        start = end;
    }
    idx
}

fn degeneracy_groups(vals: &[C64], tol: f64) -> Vec<Vec<usize>> {
    let n = vals.len();
    let mut root: Vec<usize> = (0..n).collect();
    fn find(root: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while root[r] != r {
            r = root[r];
        }
        root[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (vals[i] - vals[j]).norm() < tol * (1.0 + vals[i].norm()) {
                let (a, b) = (find(&mut root, i), find(&mut root, j));
                root[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut label = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut root, i);
        if label[r] == usize::MAX {
            label[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[label[r]].push(i);
    }
    groups
}

/// Biorthogonal eigen-decomposition of a general complex matrix.
///
/// Right and left eigenvectors come from separate Schur decompositions of the
/// balanced H and its adjoint; left vectors are paired by conjugate-eigenvalue
/// proximity and then corrected with the inverse overlap matrix, which also
/// handles degenerate groups. A failed eigen-residual or an overlap condition
/// number above the threshold reports `Defective`.
pub fn eigendecompose(h: &ComplexMatrix, tol: &Tolerances) -> Result<BiorthogonalEigensystem> {
    let n = h.dim();
    let (b, d) = balance(h.as_array());
    let (vals, vr) = right_vectors(&b, tol)?;
    let (lvals, wl) = right_vectors(&adjoint(&b), tol)?;

    let mut used = vec![false; n];
    let mut w = Array2::<C64>::zeros((n, n));
    for k in 0..n {
        let target = vals[k].conj();
        let j = (0..n)
            .filter(|&j| !used[j])
            .min_by(|&a, &b| (lvals[a] - target).norm().total_cmp(&(lvals[b] - target).norm()))
            .unwrap();
        used[j] = true;
        w.column_mut(k).assign(&wl.column(j));
    }

    let overlap = adjoint(&w).dot(&vr);
    let overlap_inv = inverse(&overlap).map_err(|_| Error::Defective { reason: "left/right overlap matrix is singular".into() })?;
    let condition = one_norm(&overlap) * one_norm(&overlap_inv);
    if !(condition <= tol.defective_condition) {
        return Err(Error::Defective { reason: format!("overlap condition number {condition:e}") });
    }
    let phi_b = w.dot(&adjoint(&overlap_inv));

    let order = sort_order(&vals, tol.degeneracy);
    let mut eigenvalues = Vec::with_capacity(n);
    let mut right = Array2::<C64>::zeros((n, n));
    let mut left = Array2::<C64>::zeros((n, n));
    for (col, &k) in order.iter().enumerate() {
        let mut psi: Array1<C64> = Array1::from_shape_fn(n, |i| vr[[i, k]] * d[i]);
        let mut phi: Array1<C64> = Array1::from_shape_fn(n, |i| phi_b[[i, k]] / d[i]);
        let nrm = vec_norm(psi.view());
        let big = psi.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or(ZERO);
        let c = big.conj() / (big.norm() * nrm);
        psi.mapv_inplace(|x| x * c);
        phi.mapv_inplace(|x| x / c.conj());
        right.column_mut(col).assign(&psi);
        left.column_mut(col).assign(&phi);
        eigenvalues.push(vals[k]);
    }
    let groups = degeneracy_groups(&eigenvalues, tol.degeneracy);
    Ok(BiorthogonalEigensystem { eigenvalues, right, left, groups, condition })
}
