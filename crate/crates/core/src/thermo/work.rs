use ndarray::Array2;

use super::ThermalState;
use crate::dynamics::{propagate, PropagationResult, PropagationSettings, Protocol};
use crate::error::{Error, Result};
use crate::linalg::{adjoint, classify_spectrum, dotc, eigendecompose, BiorthogonalEigensystem, ComplexMatrix, MetricOperator, SpectrumKind};
use crate::models::ModelSpec;
use crate::tolerance::Tolerances;

/// Two-time measurement statistics. Rows index the initial level n, columns
/// the final level m.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    /// p_nm = tr(Π_n ρ₀)·|⟨ψ_m^τ, g_τ U ψ_n⟩|².
    pub probabilities: Array2<f64>,
    /// |⟨ψ_m^τ, g_τ U ψ_n⟩|² with g-normalized ψ.
    pub overlaps: Array2<f64>,
    pub populations: Vec<f64>,
}

impl TransitionMatrix {
    /// Σ_m |⟨ψ_m^τ, g_τ U ψ_n⟩|² for each n; equal to one for g-unitary U.
    pub fn overlap_row_sums(&self) -> Vec<f64> {
        self.overlaps.rows().into_iter().map(|r| r.sum()).collect()
    }

    /// Σ_m p_nm, equal to the initial population of level n.
    pub fn row_sums(&self) -> Vec<f64> {
        self.probabilities.rows().into_iter().map(|r| r.sum()).collect()
    }
}

fn require_real(es: &BiorthogonalEigensystem, tol: f64) -> Result<()> {
    if classify_spectrum(es.eigenvalues(), tol).kind != SpectrumKind::AllReal {
        let max_imag = es.eigenvalues().iter().map(|e| e.im.abs()).fold(0.0, f64::max);
        return Err(Error::NonRealSpectrum { max_imag });
    }
    Ok(())
}

fn g_norms(es: &BiorthogonalEigensystem, g: &MetricOperator) -> Result<Vec<f64>> {
    let gpsi = g.g().as_array().dot(es.right());
    (0..es.dim())
        .map(|n| {
            let v = dotc(es.right_vector(n), gpsi.column(n)).re;
            if v > 0.0 {
                Ok(v)
            } else {
                Err(Error::SingularMetric { time: f64::NAN, control: f64::NAN, min_eigenvalue: g.min_eigenvalue() })
            }
        })
        .collect()
}

/// p_nm = (e^{−βE_n}/Z₀)·|⟨ψ_m^τ, g_τ U ψ_n⟩|² with every ψ normalized in
/// its own metric.
pub fn transition_matrix(
    eig0: &BiorthogonalEigensystem,
    eig_t: &BiorthogonalEigensystem,
    g0: &MetricOperator,
    g_t: &MetricOperator,
    u: &ComplexMatrix,
    state0: &ThermalState,
    tol: &Tolerances,
) -> Result<TransitionMatrix> {
    let n = eig0.dim();
    for d in [eig_t.dim(), g0.dim(), g_t.dim(), u.dim(), state0.eigenvalues().len()] {
        crate::linalg::check_dim(d, n)?;
    }
    require_real(eig0, tol.imag)?;
    require_real(eig_t, tol.imag)?;
    let populations = state0.populations(tol.imag)?;
    let nu = g_norms(eig0, g0)?;
    let mu = g_norms(eig_t, g_t)?;
    let amp = adjoint(eig_t.right()).dot(&g_t.g().as_array().dot(&u.as_array().dot(eig0.right())));
    let overlaps = Array2::from_shape_fn((n, n), |(i, m)| amp[[m, i]].norm_sqr() / (mu[m] * nu[i]));
    let probabilities = Array2::from_shape_fn((n, n), |(i, m)| populations[i] * overlaps[[i, m]]);
    Ok(TransitionMatrix { probabilities, overlaps, populations })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkEntry {
    pub n: usize,
    pub m: usize,
    /// w_nm = E_m^τ − E_n.
    pub work: f64,
    pub probability: f64,
}

/// The exact discrete work measure Σ δ(w − w_nm) p_nm.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkDistribution {
    pub entries: Vec<WorkEntry>,
    pub beta: f64,
    pub z0: f64,
    pub z_tau: f64,
    /// Z_τ/Z₀ evaluated with shifted exponents.
    pub z_ratio: f64,
    pub e_min_initial: f64,
    pub e_min_final: f64,
}

impl WorkDistribution {
    pub fn total_probability(&self) -> f64 {
        self.entries.iter().map(|e| e.probability).sum()
    }
}

fn shifted_sum(e: &[f64], beta: f64) -> (f64, f64) {
    let e_min = e.iter().copied().fold(f64::INFINITY, f64::min);
    (e_min, e.iter().map(|x| (-beta * (x - e_min)).exp()).sum())
}

pub fn work_distribution(p: &TransitionMatrix, eig0: &BiorthogonalEigensystem, eig_t: &BiorthogonalEigensystem, beta: f64) -> WorkDistribution {
    let e0: Vec<f64> = eig0.eigenvalues().iter().map(|e| e.re).collect();
    let et: Vec<f64> = eig_t.eigenvalues().iter().map(|e| e.re).collect();
    let mut entries = Vec::with_capacity(e0.len() * et.len());
    for (n, en) in e0.iter().enumerate() {
        for (m, em) in et.iter().enumerate() {
            entries.push(WorkEntry { n, m, work: em - en, probability: p.probabilities[[n, m]] });
        }
    }
    let (min0, s0) = shifted_sum(&e0, beta);
    let (mint, st) = shifted_sum(&et, beta);
    WorkDistribution {
        entries,
        beta,
        z0: (-beta * min0).exp() * s0,
        z_tau: (-beta * mint).exp() * st,
        z_ratio: (-beta * (mint - min0)).exp() * st / s0,
        e_min_initial: min0,
        e_min_final: mint,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JarzynskiReport {
    /// ⟨e^{−βW}⟩.
    pub exp_avg_work: f64,
    /// e^{−βΔF} = Z_τ/Z₀.
    pub exp_delta_f: f64,
    pub relative_residual: f64,
    pub mean_work: f64,
    pub delta_f: f64,
    pub irreversible_work: f64,
}

pub fn jarzynski_report(wd: &WorkDistribution) -> JarzynskiReport {
    let beta = wd.beta;
    let exp_avg_work: f64 = wd.entries.iter().map(|e| (-beta * e.work).exp() * e.probability).sum();
    let mean_work: f64 = wd.entries.iter().map(|e| e.work * e.probability).sum();
    let exp_delta_f = wd.z_ratio;
    let delta_f = -exp_delta_f.ln() / beta;
    JarzynskiReport {
        exp_avg_work,
        exp_delta_f,
        relative_residual: (exp_avg_work - exp_delta_f).abs() / exp_delta_f,
        mean_work,
        delta_f,
        irreversible_work: mean_work - delta_f,
    }
}

/// Σ_{n, m < n_max} e^{−βw_nm} p_nm.
pub fn partial_exp_work(wd: &WorkDistribution, n_max: usize) -> f64 {
    wd.entries.iter().filter(|e| e.n < n_max && e.m < n_max).map(|e| (-wd.beta * e.work).exp() * e.probability).sum()
}

/// Everything produced by one two-time measurement experiment.
#[derive(Debug, Clone)]
pub struct WorkRun {
    pub propagation: PropagationResult,
    pub initial: BiorthogonalEigensystem,
    pub final_: BiorthogonalEigensystem,
    pub transitions: TransitionMatrix,
    pub distribution: WorkDistribution,
    pub report: JarzynskiReport,
    /// Initial Gibbs weight of the five highest levels of a truncated basis
    /// (oscillator only).
    pub tail_weight: Option<f64>,
}

/// Gibbs state of H(λ_i) at β, propagation over the protocol, and the
/// resulting work statistics. Measurement bases are the eigenbases at the
/// ends of the protocol window; metrics are those used by the propagator.
pub fn two_time_work(model: &ModelSpec, protocol: &Protocol, beta: f64, settings: &PropagationSettings) -> Result<WorkRun> {
    let tol = &settings.tolerances;
    let (t0, t1) = protocol.time_range();
    let initial = eigendecompose(&model.hamiltonian(protocol.value(t0)?)?, tol)?;
    let final_ = eigendecompose(&model.hamiltonian(protocol.value(t1)?)?, tol)?;
    require_real(&initial, tol.imag)?;
    require_real(&final_, tol.imag)?;
    let state0 = ThermalState::gibbs(initial.eigenvalues(), beta)?;
    let pops = state0.populations(tol.imag)?;
    let tail_weight = matches!(model, ModelSpec::Oscillator(_)).then(|| pops.iter().rev().take(5).sum::<f64>());
    if let Some(w) = tail_weight.filter(|w| *w > 1e-8) {
        log::warn!("Gibbs weight {w:e} in the top five levels exceeds 1e-8; basis may be too small");
    }
    let propagation = propagate(model, protocol, settings)?;
    let transitions = transition_matrix(&initial, &final_, &propagation.metric_start, &propagation.metric_end, &propagation.u, &state0, tol)?;
    let distribution = work_distribution(&transitions, &initial, &final_, beta);
    let report = jarzynski_report(&distribution);
    Ok(WorkRun { propagation, initial, final_, transitions, distribution, report, tail_weight })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Integrator;
    use crate::linalg::{build_metric, eigendecompose};
    use crate::models::{build_two_level, OscillatorParams};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn constant_protocol_has_no_transitions() {
        let model = ModelSpec::two_level();
        let p = Protocol::constant(0.4, 1.0).unwrap();
        let run = two_time_work(&model, &p, 1.0, &PropagationSettings::default()).unwrap();
        let pops = &run.transitions.populations;
        for n in 0..2 {
            for m in 0..2 {
                let expect = if n == m { pops[n] } else { 0.0 };
                assert!((run.transitions.probabilities[[n, m]] - expect).abs() < 1e-10);
            }
        }
        assert!(run.report.relative_residual < 1e-10);
        assert!(run.report.irreversible_work.abs() < 1e-10);
        let zero_work: f64 = run.distribution.entries.iter().filter(|e| e.work.abs() < 1e-14).map(|e| e.probability).sum();
        assert!((zero_work - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sudden_quench_matches_overlap_oracle() {
        // U = I: p_nm = (e^{−βE_n}/Z₀)|⟨ψ_m^τ, g_τ ψ_n⟩|², evaluated by hand for 2×2
        let t = tol();
        let (h0, h1) = (build_two_level(0.0), build_two_level(0.5));
        let (e0, e1) = (eigendecompose(&h0, &t).unwrap(), eigendecompose(&h1, &t).unwrap());
        let model = ModelSpec::two_level();
        let g0 = model.analytic_metric(0.0).unwrap().unwrap();
        let g1 = model.analytic_metric(0.5).unwrap().unwrap();
        let st = ThermalState::gibbs(e0.eigenvalues(), 1.0).unwrap();
        let tm = transition_matrix(&e0, &e1, &g0, &g1, &ComplexMatrix::identity(2), &st, &t).unwrap();
        let g = g1.g();
        for n in 0..2 {
            for m in 0..2 {
                let a = e1.right_vector(m);
                let b = e0.right_vector(n);
                let gb = [g[[0, 0]] * b[0] + g[[0, 1]] * b[1], g[[1, 0]] * b[0] + g[[1, 1]] * b[1]];
                let ga = [g[[0, 0]] * a[0] + g[[0, 1]] * a[1], g[[1, 0]] * a[0] + g[[1, 1]] * a[1]];
                let amp = a[0].conj() * gb[0] + a[1].conj() * gb[1];
                let na = (a[0].conj() * ga[0] + a[1].conj() * ga[1]).re;
                let g0b = g0.g().as_array().dot(&b.to_owned());
                let nb = (b[0].conj() * g0b[0] + b[1].conj() * g0b[1]).re;
                let z0: f64 = e0.eigenvalues().iter().map(|e| (-e.re).exp()).sum();
                let expect = (-e0.eigenvalues()[n].re).exp() / z0 * amp.norm_sqr() / (na * nb);
                assert!((tm.probabilities[[n, m]] - expect).abs() < 1e-14);
            }
        }
        let _ = build_metric(&e1, &t).unwrap();
    }

    #[test]
    fn two_level_linear_quench_satisfies_jarzynski() {
        let model = ModelSpec::two_level();
        let p = Protocol::linear(0.0, 0.5, 1.0).unwrap();
        let run = two_time_work(&model, &p, 1.0, &PropagationSettings::default()).unwrap();
        assert_eq!(run.distribution.entries.len(), 4);
        assert!((run.distribution.total_probability() - 1.0).abs() < 1e-9);
        assert!(run.distribution.entries.iter().all(|e| e.probability >= 0.0 && e.probability <= 1.0));
        assert!(run.report.relative_residual < 1e-6, "{:?}", run.report);
        assert!(run.report.irreversible_work > -1e-8);
        for s in run.transitions.overlap_row_sums() {
            assert!((s - 1.0).abs() < 1e-8);
        }
        let e0 = run.initial.eigenvalues();
        let e1 = run.final_.eigenvalues();
        for w in &run.distribution.entries {
            assert_eq!(w.work, e1[w.m].re - e0[w.n].re);
        }
    }

    #[test]
    fn residual_shrinks_under_step_refinement() {
        // fixed step counts without the halving loop, via a loose tolerance
        let model = ModelSpec::two_level();
        let p = Protocol::linear(0.0, 0.5, 1.0).unwrap();
        let mut residuals = Vec::new();
        for prop_tol in [1e-2, 1e-5, 1e-9] {
            let mut s = PropagationSettings { steps: 16, ..Default::default() };
            s.tolerances.propagation = prop_tol;
            residuals.push(two_time_work(&model, &p, 1.0, &s).unwrap().report.relative_residual);
        }
        assert!(residuals[2] <= residuals[0]);
        assert!(residuals[2] < 1e-8);
    }

    #[test]
    fn oscillator_ratio_is_exact_for_truncated_system() {
        let model = ModelSpec::oscillator(OscillatorParams::new(0.5, 16, 1.0)).unwrap();
        let p = Protocol::erf(1.0, 1.4, 0.5, 2).unwrap();
        let s = PropagationSettings { integrator: Integrator::Magnus4, ..Default::default() };
        let run = two_time_work(&model, &p, 1.0, &s).unwrap();
        assert!(run.report.relative_residual < 1e-9, "{:?}", run.report);
        assert!(run.report.irreversible_work > -1e-8);
        let (t0, t1) = p.time_range();
        let (wi, wf) = (p.value(t0).unwrap(), p.value(t1).unwrap());
        let analytic = (wi / 2.0).sinh() / (wf / 2.0).sinh();
        assert!((run.report.exp_delta_f - analytic).abs() < 1e-3);
    }

    #[test]
    fn partial_sums_approach_full_sum() {
        let model = ModelSpec::two_level();
        let p = Protocol::linear(0.0, 0.3, 0.5).unwrap();
        let run = two_time_work(&model, &p, 2.0, &PropagationSettings::default()).unwrap();
        assert!((partial_exp_work(&run.distribution, 2) - run.report.exp_avg_work).abs() < 1e-15);
        assert!(partial_exp_work(&run.distribution, 1) < run.report.exp_avg_work);
    }
}
