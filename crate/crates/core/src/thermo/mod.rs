//! Gibbs states, reality of thermodynamic quantities, two-time work
//! statistics and quasistatic cycles.

mod cycle;
mod work;

pub use cycle::{quasistatic_cycle, solve_beta, CyclePoint, CycleReport, CycleSpec, Leg};
pub use work::{jarzynski_report, partial_exp_work, transition_matrix, two_time_work, work_distribution, JarzynskiReport, TransitionMatrix, WorkDistribution, WorkEntry, WorkRun};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::linalg::{adjoint, BiorthogonalEigensystem, ComplexMatrix, C64};

/// Σ_n e^{−βE_n}, imaginary part retained.
pub fn partition_function(eigs: &[C64], beta: f64) -> C64 {
    eigs.iter().map(|e| (-beta * e).exp()).sum()
}

/// F = −ln(Re Z)/β; `ComplexPartitionFunction` if |Im Z| > tol·|Z|.
pub fn free_energy(z: C64, beta: f64, tol: f64) -> Result<f64> {
    if z.im.abs() > tol * z.norm() || !(z.re > 0.0) {
        return Err(Error::ComplexPartitionFunction { re: z.re, im: z.im });
    }
    Ok(-z.re.ln() / beta)
}

/// Canonical state over a (possibly complex, conjugate-paired) spectrum.
///
/// Weights are kept shifted by the lowest real part so that large β does
/// not overflow: Z = e^{−βE_ref} Σ_n e^{−β(E_n − E_ref)}.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalState {
    beta: f64,
    eigenvalues: Vec<C64>,
    weights: Vec<C64>,
    log_partition: C64,
}

impl ThermalState {
    pub fn gibbs(eigenvalues: &[C64], beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("β = {beta} must be positive")));
        }
        if eigenvalues.is_empty() {
            return Err(Error::InvalidParameter("empty spectrum".into()));
        }
        let e_ref = eigenvalues.iter().map(|e| e.re).fold(f64::INFINITY, f64::min);
        let raw: Vec<C64> = eigenvalues.iter().map(|e| (-beta * (e - e_ref)).exp()).collect();
        let sum: C64 = raw.iter().sum();
        Ok(Self {
            beta,
            eigenvalues: eigenvalues.to_vec(),
            weights: raw.iter().map(|w| w / sum).collect(),
            log_partition: C64::new(-beta * e_ref, 0.0) + sum.ln(),
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }

    /// e^{−βE_n}/Z, complex for conjugate-paired spectra.
    pub fn weights(&self) -> &[C64] {
        &self.weights
    }

    pub fn partition(&self) -> C64 {
        self.log_partition.exp()
    }

    pub fn log_partition(&self) -> C64 {
        self.log_partition
    }

    /// Real populations; `NonRealSpectrum` when some weight is complex.
    pub fn populations(&self, tol: f64) -> Result<Vec<f64>> {
        let max_imag = self.weights.iter().map(|w| w.im.abs()).fold(0.0, f64::max);
        if max_imag > tol {
            return Err(Error::NonRealSpectrum { max_imag });
        }
        Ok(self.weights.iter().map(|w| w.re).collect())
    }

    /// F = −ln Z / β with the reality check of [`free_energy`].
    pub fn free_energy(&self, tol: f64) -> Result<f64> {
        let z = self.log_partition;
        // the phase of Z is Im ln Z
        if z.im.abs() > tol {
            let zz = z.exp();
            return Err(Error::ComplexPartitionFunction { re: zz.re, im: zz.im });
        }
        Ok(-z.re / self.beta)
    }

    /// E = Σ E_n e^{−βE_n}/Z.
    pub fn internal_energy(&self, tol: f64) -> Result<f64> {
        let e: C64 = self.eigenvalues.iter().zip(&self.weights).map(|(e, w)| e * w).sum();
        if e.im.abs() > tol * e.re.abs().max(1.0) {
            return Err(Error::NonRealResult { quantity: "internal energy".into(), imag: e.im });
        }
        Ok(e.re)
    }

    /// S = β(E − F) = βE + ln Z.
    pub fn entropy(&self, tol: f64) -> Result<f64> {
        let e: C64 = self.eigenvalues.iter().zip(&self.weights).map(|(e, w)| e * w).sum();
        let s = self.beta * e + self.log_partition;
        if e.im.abs() > tol * e.re.abs().max(1.0) {
            return Err(Error::NonRealResult { quantity: "internal energy".into(), imag: e.im });
        }
        if s.im.abs() > tol * s.re.abs().max(1.0) {
            return Err(Error::NonRealResult { quantity: "entropy".into(), imag: s.im });
        }
        Ok(s.re)
    }

    /// Complex entropy βE + ln Z without the reality check.
    pub fn entropy_complex(&self) -> C64 {
        let e: C64 = self.eigenvalues.iter().zip(&self.weights).map(|(e, w)| e * w).sum();
        self.beta * e + self.log_partition
    }
}

/// Π_n = ψ_n φ_n†.
pub fn projector(n: usize, eigsys: &BiorthogonalEigensystem) -> Result<ComplexMatrix> {
    if n >= eigsys.dim() {
        return Err(Error::InvalidParameter(format!("projector index {n} out of range")));
    }
    let psi = eigsys.right_vector(n);
    let phi = eigsys.left_vector(n);
    Ok(ComplexMatrix::wrap(Array2::from_shape_fn((psi.len(), psi.len()), |(i, j)| psi[i] * phi[j].conj())))
}

/// ρ = Σ_n w_n ψ_n φ_n† for the weights of `state`, which must follow the
/// eigenvalue order of `eigsys`.
pub fn density_matrix(eigsys: &BiorthogonalEigensystem, state: &ThermalState) -> Result<ComplexMatrix> {
    crate::linalg::check_dim(state.weights.len(), eigsys.dim())?;
    let w = &state.weights;
    let scaled = Array2::from_shape_fn(eigsys.right().dim(), |(i, n)| eigsys.right()[[i, n]] * w[n]);
    Ok(ComplexMatrix::wrap(scaled.dot(&adjoint(eigsys.left()))))
}

/// T_r = 1/|E₁ − E₀| for the two lowest levels of a sorted spectrum.
pub fn relaxation_time(eigsys: &BiorthogonalEigensystem) -> Result<f64> {
    let e = eigsys.eigenvalues();
    if e.len() < 2 {
        return Err(Error::InvalidParameter("relaxation time needs two levels".into()));
    }
    Ok(1.0 / (e[1] - e[0]).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{build_metric, eigendecompose, g_trace, max_abs};
    use crate::models::{build_hatano_nelson, build_two_level, Boundary};
    use crate::tolerance::Tolerances;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn partition_function_examples() {
        let z = partition_function(&[c(-1.0, 0.0), c(1.0, 0.0)], 1.0);
        assert!((z.re - (1f64.exp() + (-1f64).exp())).abs() < 1e-15 && z.im == 0.0);
        assert!((z.re - 3.0862).abs() < 1e-4);
        // geometric series of the exact ladder
        let ladder: Vec<C64> = (0..400).map(|n| c(0.2 * (n as f64 + 0.5), 0.0)).collect();
        let z = partition_function(&ladder, 1.0);
        assert!((z.re - 1.0 / (2.0 * 0.1f64.sinh())).abs() < 1e-12);
        assert!((z.re - 4.9917).abs() < 1e-4);
        let ring = build_hatano_nelson(4, 1.0, 0.5, &[0.0; 4], Boundary::Periodic).unwrap();
        let es = eigendecompose(&ring, &Tolerances::default()).unwrap();
        assert!(partition_function(es.eigenvalues(), 1.0).im.abs() < 1e-14);
    }

    #[test]
    fn free_energy_examples() {
        assert_eq!(free_energy(c(1.0, 0.0), 1.0, 1e-10).unwrap(), 0.0);
        let z = 1f64.exp() + (-1f64).exp();
        assert!((free_energy(c(z, 0.0), 1.0, 1e-10).unwrap() + z.ln()).abs() < 1e-15);
        assert!((free_energy(c(z, 0.0), 1.0, 1e-10).unwrap() + 1.1269).abs() < 1e-4);
        assert!(matches!(free_energy(c(2.0, 0.5), 1.0, 1e-10), Err(Error::ComplexPartitionFunction { .. })));
    }

    #[test]
    fn two_level_energy_and_ground_state_limit() {
        let st = ThermalState::gibbs(&[c(-1.0, 0.0), c(1.0, 0.0)], 1.0).unwrap();
        assert!((st.internal_energy(1e-10).unwrap() + 1f64.tanh()).abs() < 1e-15);
        let cold = ThermalState::gibbs(&[c(-0.8, 0.0), c(0.8, 0.0)], 1e4).unwrap();
        assert!((cold.internal_energy(1e-10).unwrap() + 0.8).abs() < 1e-12);
        assert!(cold.entropy(1e-10).unwrap().abs() < 1e-12);
        let f = cold.free_energy(1e-10).unwrap();
        assert!((f + 0.8).abs() < 1e-12);
    }

    #[test]
    fn entropy_matches_direct_formula() {
        let eigs = [c(-0.3, 0.0), c(0.5, 0.0), c(1.7, 0.0)];
        let beta = 0.7;
        let st = ThermalState::gibbs(&eigs, beta).unwrap();
        let z = partition_function(&eigs, beta).re;
        let p: Vec<f64> = eigs.iter().map(|e| (-beta * e.re).exp() / z).collect();
        let direct: f64 = -p.iter().map(|x| x * x.ln()).sum::<f64>();
        assert!((st.entropy(1e-10).unwrap() - direct).abs() < 1e-14);
        assert!((st.populations(1e-12).unwrap().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn paired_spectrum_gives_real_quantities() {
        let ring = build_hatano_nelson(4, 1.0, 0.5, &[0.0; 4], Boundary::Periodic).unwrap();
        let es = eigendecompose(&ring, &Tolerances::default()).unwrap();
        let st = ThermalState::gibbs(es.eigenvalues(), 1.0).unwrap();
        assert!(st.populations(1e-10).is_err());
        st.internal_energy(1e-12).unwrap();
        st.entropy(1e-12).unwrap();
        // g-trace of Hρ is real as well
        let tol = Tolerances::default();
        let g = build_metric(&es, &tol).unwrap();
        let rho = density_matrix(&es, &st).unwrap();
        let e = g_trace(&ring.dot(&rho), &es, &g).unwrap();
        assert!(e.im.abs() < 1e-12);
        assert!((e.re - st.internal_energy(1e-12).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn generic_spectrum_is_rejected() {
        let st = ThermalState::gibbs(&[c(1.0, 0.3), c(2.0, 0.0)], 1.0).unwrap();
        assert!(matches!(st.internal_energy(1e-10), Err(Error::NonRealResult { .. })));
        assert!(matches!(st.entropy(1e-10), Err(Error::NonRealResult { .. })));
        assert!(matches!(st.free_energy(1e-10), Err(Error::ComplexPartitionFunction { .. })));
    }

    #[test]
    fn projectors_of_two_level_model() {
        let es = eigendecompose(&build_two_level(0.5), &Tolerances::default()).unwrap();
        let p0 = projector(0, &es).unwrap();
        let p1 = projector(1, &es).unwrap();
        assert!(max_abs(&(p0.dot(&p0).into_array() - p0.as_array())) < 1e-12);
        assert!(max_abs(&((&p0 + &p1).into_array() - ComplexMatrix::identity(2).as_array())) < 1e-12);
        let st = ThermalState::gibbs(es.eigenvalues(), 1.0).unwrap();
        let rho = density_matrix(&es, &st).unwrap();
        for (n, p) in [p0, p1].iter().enumerate() {
            assert!((p.dot(&rho).trace() - st.weights()[n]).norm() < 1e-14);
        }
        // tr(ρH) from the g-trace is real
        let g = build_metric(&es, &Tolerances::default()).unwrap();
        let e = g_trace(&rho.dot(&build_two_level(0.5)), &es, &g).unwrap();
        assert!(e.im.abs() < 1e-12);
        assert_eq!(g_trace(&ComplexMatrix::identity(2), &es, &g).unwrap().re.round(), 2.0);
    }

    #[test]
    fn relaxation_time_of_two_level_model() {
        for lf in [0.2, 0.5, 0.8, 0.95] {
            let es = eigendecompose(&build_two_level(lf), &Tolerances::default()).unwrap();
            let tr = relaxation_time(&es).unwrap();
            assert!((tr - 1.0 / (2.0 * (1.0 - lf * lf).sqrt())).abs() < 1e-12);
        }
    }
}
