//! Model Hamiltonians and their analytic metrics.
//!
//! Each model is a one-parameter family H(c): the two-level system is driven
//! by λ, the oscillator by ω and the Hatano-Nelson chain by the hopping t.

use std::sync::Arc;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, ComplexMatrix, MetricOperator, C64, I, ONE, ZERO};

/// H = [[iλ, γ], [γ, −iλ]] in the ordered basis (excited, ground).
pub fn build_two_level(lambda: f64) -> ComplexMatrix {
    two_level_with_coupling(lambda, 1.0)
}

pub fn two_level_with_coupling(lambda: f64, gamma: f64) -> ComplexMatrix {
    ComplexMatrix::wrap(ndarray::array![[I * lambda, ONE * gamma], [ONE * gamma, -I * lambda]])
}

/// g(λ) = 2[[γ, −iλ], [iλ, γ]]; eigenvalues 2(γ ± λ).
pub fn two_level_metric_matrix(lambda: f64, gamma: f64) -> ComplexMatrix {
    ComplexMatrix::wrap(ndarray::array![[ONE * (2.0 * gamma), -I * (2.0 * lambda)], [I * (2.0 * lambda), ONE * (2.0 * gamma)]])
}

/// Hermitian square root V of g(λ), so that g = V†V and V H V⁻¹ is hermitian.
pub fn two_level_transform(lambda: f64, gamma: f64) -> Result<ComplexMatrix> {
    if lambda.abs() >= gamma {
        return Err(Error::InvalidParameter(format!("|λ| = {} must stay below γ = {gamma}", lambda.abs())));
    }
    let a = (2.0 * (gamma + lambda)).sqrt();
    let b = (2.0 * (gamma - lambda)).sqrt();
    let p = (a + b) / 2.0;
    let q = (a - b) / 2.0;
    Ok(ComplexMatrix::wrap(ndarray::array![[ONE * p, -I * q], [I * q, ONE * p]]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Open,
    Periodic,
}

/// Single-particle Hatano-Nelson chain: super-diagonal −(t/2)e^{−α},
/// sub-diagonal −(t/2)e^{+α}, diagonal V.
pub fn build_hatano_nelson(length: usize, hopping: f64, alpha: f64, potential: &[f64], boundary: Boundary) -> Result<ComplexMatrix> {
    if length < 2 {
        return Err(Error::InvalidParameter("chain length must be at least 2".into()));
    }
    if potential.len() != length {
        return Err(Error::InvalidParameter(format!("potential has {} entries for length {length}", potential.len())));
    }
    let up = -0.5 * hopping * (-alpha).exp();
    let down = -0.5 * hopping * alpha.exp();
    let mut h = Array2::<C64>::zeros((length, length));
    for x in 0..length {
        h[[x, x]] = ONE * potential[x];
    }
    for x in 0..length - 1 {
        h[[x, x + 1]] += ONE * up;
        h[[x + 1, x]] += ONE * down;
    }
    if boundary == Boundary::Periodic {
        h[[length - 1, 0]] += ONE * up;
        h[[0, length - 1]] += ONE * down;
    }
    ComplexMatrix::new(h)
}

/// Plane-wave spectrum of the periodic, potential-free chain.
pub fn hatano_nelson_ring_spectrum(length: usize, hopping: f64, alpha: f64) -> Vec<C64> {
    (0..length)
        .map(|j| {
            let k = 2.0 * std::f64::consts::PI * j as f64 / length as f64;
            C64::new(-hopping * alpha.cosh() * k.cos(), -hopping * alpha.sinh() * k.sin())
        })
        .collect()
}

/// Parameters of the non-hermitian oscillator H = (p − iξ)²/2m + mω²x²/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorParams {
    pub xi: f64,
    pub mass: f64,
    pub hbar: f64,
    pub n_basis: usize,
    /// Frequency of the fixed Fock basis.
    pub omega_ref: f64,
}

impl OscillatorParams {
    pub fn new(xi: f64, n_basis: usize, omega_ref: f64) -> Self {
        Self { xi, mass: 1.0, hbar: 1.0, n_basis, omega_ref }
    }
}

/// Truncated oscillator in the position grid (discrete variable
/// representation) of an `n_basis`-level Fock space.
///
/// The grid points x_k are the eigenvalues of the truncated position matrix
/// X_N. In that basis the similarity S = e^{−ξX_N/ħ} is diagonal, H(ξ) is
/// built as S H(0) S⁻¹ and the metric e^{2ξX_N/ħ} is diagonal and constant.
#[derive(Debug, Clone)]
pub struct Oscillator {
    params: OscillatorParams,
    grid: Vec<f64>,
    /// Columns are the grid states expressed in the Fock basis.
    fock_to_grid: Array2<C64>,
    kinetic: Array2<C64>,
    x2: Array2<C64>,
}

fn fock_position(n: usize, scale: f64) -> Array2<C64> {
    let mut x = Array2::<C64>::zeros((n, n));
    for k in 1..n {
        let v = ONE * (scale * (k as f64).sqrt());
        x[[k - 1, k]] = v;
        x[[k, k - 1]] = v;
    }
    x
}

/// Exact compression of (a ± a†)² to the first n levels: diagonal 2k+1,
/// second off-diagonals sign·sqrt((k+1)(k+2)).
fn fock_square(n: usize, sign: f64) -> Array2<C64> {
    let mut m = Array2::<C64>::zeros((n, n));
    for k in 0..n {
        m[[k, k]] = ONE * (2.0 * k as f64 + 1.0);
        if k + 2 < n {
            let v = ONE * (sign * (((k + 1) * (k + 2)) as f64).sqrt());
            m[[k, k + 2]] = v;
            m[[k + 2, k]] = v;
        }
    }
    m
}

impl Oscillator {
    pub fn new(params: OscillatorParams) -> Result<Self> {
        let OscillatorParams { mass, hbar, n_basis, omega_ref, xi } = params;
        if n_basis < 8 {
            return Err(Error::InvalidParameter(format!("n_basis = {n_basis} must be at least 8")));
        }
        if !(mass > 0.0 && hbar > 0.0 && omega_ref > 0.0 && xi.is_finite()) {
            return Err(Error::InvalidParameter("mass, hbar and omega_ref must be positive and ξ finite".into()));
        }
        let x_scale = (hbar / (2.0 * mass * omega_ref)).sqrt();
        let (grid, q) = hermitian_eigen(&fock_position(n_basis, x_scale))?;
        let to_grid = |a: &Array2<C64>| crate::linalg::adjoint(&q).dot(a).dot(&q);
        // (P²)_N/2m = (ħω_r/4)·compress(−(a† − a)²), (X²)_N = (ħ/2mω_r)·compress((a + a†)²)
        let kinetic = to_grid(&fock_square(n_basis, -1.0).mapv(|z| z * (hbar * omega_ref / 4.0)));
        let x2 = to_grid(&fock_square(n_basis, 1.0).mapv(|z| z * (x_scale * x_scale)));
        Ok(Self { params, grid, fock_to_grid: q, kinetic, x2 })
    }

    pub fn params(&self) -> &OscillatorParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.params.n_basis
    }

    /// Grid points x_k (eigenvalues of the truncated position matrix).
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Hermitian H(ξ = 0) = (P²)_N/2m + mω²(X²)_N/2 in the grid basis.
    pub fn hermitian_hamiltonian(&self, omega: f64) -> ComplexMatrix {
        let m = self.params.mass;
        ComplexMatrix::wrap(&self.kinetic + &self.x2.mapv(|z| z * (0.5 * m * omega * omega)))
    }

    /// H(ξ) = S H(0) S⁻¹ with S = diag(e^{−ξx_k/ħ}).
    pub fn hamiltonian(&self, omega: f64) -> Result<ComplexMatrix> {
        if !(omega > 0.0) {
            return Err(Error::InvalidParameter(format!("ω = {omega} must be positive")));
        }
        let h0 = self.hermitian_hamiltonian(omega);
        let s: Vec<f64> = self.grid.iter().map(|x| -self.params.xi * x / self.params.hbar).collect();
        ComplexMatrix::new(Array2::from_shape_fn(h0.raw_dim(), |(j, k)| h0[[j, k]] * (s[j] - s[k]).exp()))
    }

    /// diag(e^{2ξx_k/ħ}).
    pub fn metric(&self) -> Result<MetricOperator> {
        let d: Vec<f64> = self.grid.iter().map(|x| (2.0 * self.params.xi * x / self.params.hbar).exp()).collect();
        MetricOperator::diagonal(&d)
    }

    /// Converts a grid-basis operator to the Fock basis.
    pub fn to_fock(&self, a: &ComplexMatrix) -> ComplexMatrix {
        let q = &self.fock_to_grid;
        ComplexMatrix::wrap(q.dot(a.as_array()).dot(&crate::linalg::adjoint(q)))
    }

    /// Truncated position and momentum matrices in the Fock basis.
    pub fn fock_position_momentum(&self) -> (ComplexMatrix, ComplexMatrix) {
        let OscillatorParams { mass, hbar, n_basis, omega_ref, .. } = self.params;
        let x = fock_position(n_basis, (hbar / (2.0 * mass * omega_ref)).sqrt());
        let ps = (hbar * mass * omega_ref / 2.0).sqrt();
        let mut p = Array2::<C64>::zeros((n_basis, n_basis));
        for k in 1..n_basis {
            let v = (k as f64).sqrt() * ps;
            p[[k, k - 1]] = I * v;
            p[[k - 1, k]] = -I * v;
        }
        (ComplexMatrix::wrap(x), ComplexMatrix::wrap(p))
    }

    /// Exact ladder ħω(n + ½), n = 0..count.
    pub fn ladder(&self, omega: f64, count: usize) -> Vec<f64> {
        (0..count).map(|n| self.params.hbar * omega * (n as f64 + 0.5)).collect()
    }
}

/// Builds the oscillator with ω_ref = ω, m = ħ = 1, in the grid basis.
pub fn build_oscillator(omega: f64, xi: f64, n_basis: usize) -> Result<ComplexMatrix> {
    Oscillator::new(OscillatorParams::new(xi, n_basis, omega))?.hamiltonian(omega)
}

/// One of the three model families, parameterized by its control value.
#[derive(Debug, Clone)]
pub enum ModelSpec {
    /// Control: λ.
    TwoLevel { gamma: f64 },
    /// Control: ω.
    Oscillator(Arc<Oscillator>),
    /// Control: hopping t.
    HatanoNelson { length: usize, alpha: f64, potential: Vec<f64>, boundary: Boundary },
}

impl ModelSpec {
    pub fn two_level() -> Self {
        ModelSpec::TwoLevel { gamma: 1.0 }
    }

    pub fn oscillator(params: OscillatorParams) -> Result<Self> {
        Ok(ModelSpec::Oscillator(Arc::new(Oscillator::new(params)?)))
    }

    pub fn hatano_nelson(length: usize, alpha: f64, potential: Vec<f64>, boundary: Boundary) -> Result<Self> {
        if length < 2 || potential.len() != length || !alpha.is_finite() {
            return Err(Error::InvalidParameter("Hatano-Nelson needs length ≥ 2 and one potential value per site".into()));
        }
        Ok(ModelSpec::HatanoNelson { length, alpha, potential, boundary })
    }

    pub fn dimension(&self) -> usize {
        match self {
            ModelSpec::TwoLevel { .. } => 2,
            ModelSpec::Oscillator(o) => o.dim(),
            ModelSpec::HatanoNelson { length, .. } => *length,
        }
    }

    pub fn control_name(&self) -> &'static str {
        match self {
            ModelSpec::TwoLevel { .. } => "lambda",
            ModelSpec::Oscillator(_) => "omega",
            ModelSpec::HatanoNelson { .. } => "hopping",
        }
    }

    pub fn hamiltonian(&self, control: f64) -> Result<ComplexMatrix> {
        match self {
            ModelSpec::TwoLevel { gamma } => Ok(two_level_with_coupling(control, *gamma)),
            ModelSpec::Oscillator(o) => o.hamiltonian(control),
            ModelSpec::HatanoNelson { length, alpha, potential, boundary } => build_hatano_nelson(*length, control, *alpha, potential, *boundary),
        }
    }

    /// Closed-form metric where the model provides one. May be indefinite
    /// (two-level beyond the exceptional point); callers check definiteness.
    pub fn analytic_metric(&self, control: f64) -> Option<Result<MetricOperator>> {
        match self {
            ModelSpec::TwoLevel { gamma } => {
                if control.abs() == *gamma {
                    return Some(Err(Error::Singular));
                }
                let g = 2.0 * gamma;
                let det = g * g - 4.0 * control * control;
                let inv = ComplexMatrix::wrap(ndarray::array![[ONE * (g / det), I * (2.0 * control / det)], [-I * (2.0 * control / det), ONE * (g / det)]]);
                Some(MetricOperator::from_parts(two_level_metric_matrix(control, *gamma), inv, 1e-14))
            }
            ModelSpec::Oscillator(o) => Some(o.metric()),
            ModelSpec::HatanoNelson { length, alpha, boundary: Boundary::Open, .. } => {
                let d: Vec<f64> = (0..*length).map(|x| (-2.0 * alpha * x as f64).exp()).collect();
                Some(MetricOperator::diagonal(&d))
            }
            ModelSpec::HatanoNelson { boundary: Boundary::Periodic, .. } => None,
        }
    }

    /// dg/dc of the analytic metric.
    pub fn metric_derivative(&self, _control: f64) -> Option<ComplexMatrix> {
        match self {
            ModelSpec::TwoLevel { .. } => Some(ComplexMatrix::wrap(ndarray::array![[ZERO, -I * 2.0], [I * 2.0, ZERO]])),
            ModelSpec::Oscillator(o) => Some(ComplexMatrix::zeros(o.dim())),
            ModelSpec::HatanoNelson { length, boundary: Boundary::Open, .. } => Some(ComplexMatrix::zeros(*length)),
            ModelSpec::HatanoNelson { boundary: Boundary::Periodic, .. } => None,
        }
    }
}
