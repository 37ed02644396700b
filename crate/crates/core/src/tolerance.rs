/// Numerical tolerances shared by every module. All fields are overridable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Eigenvalues with |Im E| below this count as real.
    pub imag: f64,
    /// Relative width of a degeneracy group: |E_a - E_b| < degeneracy * (1 + |E|).
    pub degeneracy: f64,
    /// Upper bound on the eigenvector condition number before reporting a defective matrix.
    pub defective_condition: f64,
    /// Relative eigen-residual accepted for each eigenpair.
    pub eigen_residual: f64,
    /// Relative hermiticity defect accepted for a metric.
    pub hermiticity: f64,
    /// Relative imaginary part accepted for thermodynamic quantities.
    pub reality: f64,
    /// Step-halving and unitarity tolerance for propagation.
    pub propagation: f64,
    /// Entropy matching tolerance on isentropes.
    pub entropy: f64,
    /// Relative step of central differences, scaled by the protocol duration.
    pub finite_difference: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            imag: 1e-8,
            degeneracy: 1e-8,
            defective_condition: 1e8,
            eigen_residual: 1e-8,
            hermiticity: 1e-10,
            reality: 1e-10,
            propagation: 1e-8,
            entropy: 1e-10,
            finite_difference: 1e-6,
        }
    }
}
