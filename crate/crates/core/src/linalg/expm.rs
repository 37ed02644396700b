use ndarray::Array2;

use super::schur::balance;
use super::{one_norm, solve, ComplexMatrix, C64};
use crate::error::Result;

const THETA: [(usize, f64); 5] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
    (13, 5.371920351148152e0),
];

const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn pade_coefficients(m: usize) -> &'static [f64] {
    match m {
        3 => &[120.0, 60.0, 12.0, 1.0],
        5 => &[30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0],
        7 => &[17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0],
        9 => &[17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0, 2162160.0, 110880.0, 3960.0, 90.0, 1.0],
        _ => &B13,
    }
}

fn scaled(a: &Array2<C64>, s: f64) -> Array2<C64> {
    a.mapv(|z| z * s)
}

/// Padé approximant r_m(a) as (numerator, denominator) = (V + U, V − U).
fn pade(a: &Array2<C64>, m: usize) -> (Array2<C64>, Array2<C64>) {
    let n = a.nrows();
    let id = Array2::<C64>::eye(n);
    let b = pade_coefficients(m);
    let a2 = a.dot(a);
    if m == 13 {
        let a4 = a2.dot(&a2);
        let a6 = a4.dot(&a2);
        let u_inner = scaled(&a6, b[13]) + scaled(&a4, b[11]) + scaled(&a2, b[9]);
        let u = a.dot(&(a6.dot(&u_inner) + scaled(&a6, b[7]) + scaled(&a4, b[5]) + scaled(&a2, b[3]) + scaled(&id, b[1])));
        let v_inner = scaled(&a6, b[12]) + scaled(&a4, b[10]) + scaled(&a2, b[8]);
        let v = a6.dot(&v_inner) + scaled(&a6, b[6]) + scaled(&a4, b[4]) + scaled(&a2, b[2]) + scaled(&id, b[0]);
        return (&v + &u, &v - &u);
    }
    let mut powers = vec![id.clone(), a2.clone()];
    while powers.len() <= m / 2 {
        let next = powers.last().unwrap().dot(&a2);
        powers.push(next);
    }
    let mut u_even = Array2::<C64>::zeros((n, n));
    let mut v = Array2::<C64>::zeros((n, n));
    for k in 0..=m / 2 {
        u_even = u_even + scaled(&powers[k], b[2 * k + 1]);
        v = v + scaled(&powers[k], b[2 * k]);
    }
    let u = a.dot(&u_even);
    (&v + &u, &v - &u)
}

/// exp(a) by balancing followed by Padé scaling and squaring.
pub fn expm_array(a: &Array2<C64>) -> Result<Array2<C64>> {
    let (b, d) = balance(a);
    let norm = one_norm(&b);
    let mut chosen = None;
    for &(m, theta) in &THETA[..4] {
        if norm <= theta {
            chosen = Some((m, 0));
            break;
        }
    }
    let (m, s) = chosen.unwrap_or_else(|| {
        let theta = THETA[4].1;
        let s = if norm > theta { (norm / theta).log2().ceil().max(0.0) as i32 } else { 0 };
        (13, s)
    });
    let bs = scaled(&b, 0.5f64.powi(s));
    let (p, q) = pade(&bs, m);
    let mut r = solve(&q, &p)?;
    for _ in 0..s {
        r = r.dot(&r);
    }
    Ok(Array2::from_shape_fn(r.dim(), |(i, j)| r[[i, j]] * d[i] / d[j]))
}

pub fn expm(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    expm_array(a.as_array()).map(ComplexMatrix::wrap)
}
