use ndarray::{s, Array2};

use super::{adjoint, frobenius, C64, ONE, ZERO};
use crate::error::{Error, Result};

const RADIX: f64 = 2.0;

/// Diagonal balancing. Returns `(b, d)` with `b = D⁻¹ a D`, `D = diag(d)`,
/// where `d` holds exact powers of two so no rounding is introduced.
pub fn balance(a: &Array2<C64>) -> (Array2<C64>, Vec<f64>) {
    let n = a.nrows();
    let mut b = a.clone();
    let mut d = vec![1.0; n];
    let radix2 = RADIX * RADIX;
    loop {
        let mut converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += b[[j, i]].l1_norm();
                    r += b[[i, j]].l1_norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s0 = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= radix2;
            }
            g = r * RADIX;
            while c >= g {
                f /= RADIX;
                c /= radix2;
            }
            if (c + r) / f < 0.95 * s0 {
                converged = false;
                d[i] *= f;
                b.row_mut(i).mapv_inplace(|z| z / f);
                b.column_mut(i).mapv_inplace(|z| z * f);
            }
        }
        if converged {
            return (b, d);
        }
    }
}

/// Householder reduction to upper Hessenberg form: `a = q h q†`.
pub(crate) fn hessenberg(a: &Array2<C64>) -> (Array2<C64>, Array2<C64>) {
    let n = a.nrows();
    let mut h = a.clone();
    let mut q = Array2::<C64>::eye(n);
    for k in 0..n.saturating_sub(2) {
        let x = h.slice(s![k + 1.., k]).to_owned();
        let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() == 0.0 { ONE } else { x[0] / x[0].norm() };
        let alpha = -phase * xnorm;
        let mut v = x;
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        v.mapv_inplace(|z| z / vnorm);
        let m = n - k - 1;
        // left: rows k+1.., columns k..
        for j in k..n {
            let mut w = ZERO;
            for i in 0..m {
                w += v[i].conj() * h[[k + 1 + i, j]];
            }
            for i in 0..m {
                h[[k + 1 + i, j]] -= 2.0 * v[i] * w;
            }
        }
        // right: all rows, columns k+1..
        for mat in [&mut h, &mut q] {
            for i in 0..n {
                let mut w = ZERO;
                for j in 0..m {
                    w += mat[[i, k + 1 + j]] * v[j];
                }
                for j in 0..m {
                    mat[[i, k + 1 + j]] -= 2.0 * w * v[j].conj();
                }
            }
        }
        h[[k + 1, k]] = alpha;
        for i in k + 2..n {
            h[[i, k]] = ZERO;
        }
    }
    (h, q)
}

/// Rotation `[[c, s], [−s̄, c]]` mapping `(x, y)` to `(r, 0)`.
fn givens(x: C64, y: C64) -> (f64, C64) {
    if y == ZERO {
        return (1.0, ZERO);
    }
    if x == ZERO {
        return (0.0, y.conj() / y.norm());
    }
    let ax = x.norm();
    let nu = ax.hypot(y.norm());
    (ax / nu, (x / ax) * y.conj() / nu)
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mid = (a + d) * 0.5;
    let l1 = mid + disc;
    let l2 = mid - disc;
    if (l1 - d).norm() < (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Complex Schur decomposition `a = z t z†` with `t` upper triangular and
/// `z` unitary, via Hessenberg reduction and single-shift QR.
pub fn schur(a: &Array2<C64>) -> Result<(Array2<C64>, Array2<C64>)> {
    let n = a.nrows();
    let (mut h, mut z) = hessenberg(a);
    if n == 1 {
        return Ok((h, z));
    }
    let norm = frobenius(&h).max(f64::MIN_POSITIVE);
    let eps = f64::EPSILON;
    let max_iter = 60 * n;
    let mut total = 0usize;
    let mut iter = 0usize;
    let mut hi = n - 1;
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let mut s = h[[l - 1, l - 1]].l1_norm() + h[[l, l]].l1_norm();
            if s == 0.0 {
                s = norm;
            }
            if h[[l, l - 1]].l1_norm() <= eps * s {
                h[[l, l - 1]] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > max_iter {
            return Err(Error::NoConvergence { iterations: total });
        }
        let shift = if iter % 10 == 0 {
            h[[hi, hi]] + 0.75 * h[[hi, hi - 1]].re.abs()
        } else {
            wilkinson_shift(h[[hi - 1, hi - 1]], h[[hi - 1, hi]], h[[hi, hi - 1]], h[[hi, hi]])
        };
        for k in l..hi {
            let (x, y) = if k == l {
                (h[[l, l]] - shift, h[[l + 1, l]])
            } else {
                (h[[k, k - 1]], h[[k + 1, k - 1]])
            };
            let (c, sn) = givens(x, y);
            let j0 = if k == l { l } else { k - 1 };
            for j in j0..n {
                let a0 = h[[k, j]];
                let a1 = h[[k + 1, j]];
                h[[k, j]] = c * a0 + sn * a1;
                h[[k + 1, j]] = -sn.conj() * a0 + c * a1;
            }
            let i1 = (k + 2).min(hi);
            for i in 0..=i1 {
                let a0 = h[[i, k]];
                let a1 = h[[i, k + 1]];
                h[[i, k]] = c * a0 + sn.conj() * a1;
                h[[i, k + 1]] = -sn * a0 + c * a1;
            }
            for i in 0..n {
                let a0 = z[[i, k]];
                let a1 = z[[i, k + 1]];
                z[[i, k]] = c * a0 + sn.conj() * a1;
                z[[i, k + 1]] = -sn * a0 + c * a1;
            }
            if k > l {
                h[[k + 1, k - 1]] = ZERO;
            }
        }
    }
    for j in 0..n {
        for i in j + 1..n {
            h[[i, j]] = ZERO;
        }
    }
    Ok((h, z))
}

/// Eigenvectors of an upper-triangular matrix by back-substitution. Couplings
/// between diagonal entries closer than `degeneracy·(1+|t_kk|)` are dropped,
/// so a Jordan block yields a vector with a large eigen-residual instead of
/// an overflow.
pub(crate) fn triangular_eigenvectors(t: &Array2<C64>, degeneracy: f64) -> Array2<C64> {
    let n = t.nrows();
    let small = f64::EPSILON * frobenius(t).max(f64::MIN_POSITIVE);
    let mut x = Array2::<C64>::zeros((n, n));
    for k in 0..n {
        let lk = t[[k, k]];
        x[[k, k]] = ONE;
        for j in (0..k).rev() {
            let mut s = ZERO;
            for i in j + 1..=k {
                s += t[[j, i]] * x[[i, k]];
            }
            let mut den = t[[j, j]] - lk;
            if den.norm() <= degeneracy * (1.0 + lk.norm()) {
                x[[j, k]] = ZERO;
                continue;
            }
            if den.norm() < small {
                den = C64::new(small, 0.0);
            }
            x[[j, k]] = -s / den;
        }
        let m = x.column(k).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if m > 1e100 {
            x.column_mut(k).mapv_inplace(|z| z / m);
        }
    }
    x
}

/// Eigen-decomposition of a hermitian matrix: real eigenvalues in ascending
/// order and orthonormal eigenvector columns.
pub fn hermitian_eigen(a: &Array2<C64>) -> Result<(Vec<f64>, Array2<C64>)> {
    let sym = (a + &adjoint(a)).mapv(|z| z * 0.5);
    let (t, z) = schur(&sym)?;
    let n = a.nrows();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| t[[i, i]].re.total_cmp(&t[[j, j]].re));
    let vals: Vec<f64> = idx.iter().map(|&i| t[[i, i]].re).collect();
    let mut vecs = Array2::<C64>::zeros((n, n));
    for (c, &i) in idx.iter().enumerate() {
        vecs.column_mut(c).assign(&z.column(i));
    }
    Ok((vals, vecs))
}
