//! Driving protocols and propagation of iħ∂_tU = (H_t + G_t)U with the gauge
//! field G_t = −(iħ/2) g_t⁻¹ ∂_t g_t.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::linalg::{adjoint, build_metric, eigendecompose, expm_array, max_abs, ComplexMatrix, MetricOperator, C64, ZERO};
use crate::models::ModelSpec;
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, PartialEq)]
pub enum ProtocolKind {
    /// λ_i + (λ_f − λ_i) t/τ on [0, τ].
    Linear,
    /// (λ_i + λ_f)/2 + (λ_f − λ_i)/2 · erf(t/τ) on [−Nτ, Nτ].
    Erf { window: u32 },
    /// Piecewise-linear interpolation of (t, value) samples.
    Tabulated { samples: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    kind: ProtocolKind,
    start_value: f64,
    end_value: f64,
    duration: f64,
}

impl Protocol {
    pub fn linear(start_value: f64, end_value: f64, duration: f64) -> Result<Self> {
        check_duration(duration)?;
        check_finite(&[start_value, end_value])?;
        Ok(Self { kind: ProtocolKind::Linear, start_value, end_value, duration })
    }

    pub fn erf(start_value: f64, end_value: f64, duration: f64, window: u32) -> Result<Self> {
        check_duration(duration)?;
        check_finite(&[start_value, end_value])?;
        if window == 0 {
            return Err(Error::InvalidParameter("erf window N must be a positive integer".into()));
        }
        Ok(Self { kind: ProtocolKind::Erf { window }, start_value, end_value, duration })
    }

    pub fn tabulated(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidParameter("tabulated protocol needs at least two samples".into()));
        }
        check_finite(&samples.iter().flat_map(|&(t, v)| [t, v]).collect::<Vec<_>>())?;
        if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidParameter("tabulated sample times must be strictly increasing".into()));
        }
        let duration = samples.last().unwrap().0 - samples[0].0;
        let (start_value, end_value) = (samples[0].1, samples.last().unwrap().1);
        Ok(Self { kind: ProtocolKind::Tabulated { samples }, start_value, end_value, duration })
    }

    /// A protocol that holds `value` fixed for `duration`.
    pub fn constant(value: f64, duration: f64) -> Result<Self> {
        Self::linear(value, value, duration)
    }

    pub fn kind(&self) -> &ProtocolKind {
        &self.kind
    }

    pub fn start_value(&self) -> f64 {
        self.start_value
    }

    pub fn end_value(&self) -> f64 {
        self.end_value
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn time_range(&self) -> (f64, f64) {
        match &self.kind {
            ProtocolKind::Linear => (0.0, self.duration),
            ProtocolKind::Erf { window } => {
                let h = *window as f64 * self.duration;
                (-h, h)
            }
            ProtocolKind::Tabulated { samples } => (samples[0].0, samples.last().unwrap().0),
        }
    }

    /// Control value at `t`; `OutOfRange` outside the protocol window.
    pub fn value(&self, t: f64) -> Result<f64> {
        let (a, b) = self.time_range();
        let slack = 1e-12 * (b - a);
        if !(t >= a - slack && t <= b + slack) {
            return Err(Error::OutOfRange { t, start: a, end: b });
        }
        Ok(self.value_extended(t))
    }

    /// Control value with the defining formula continued past the window
    /// (tabulated protocols continue their end segments).
    pub fn value_extended(&self, t: f64) -> f64 {
        let (li, lf, tau) = (self.start_value, self.end_value, self.duration);
        match &self.kind {
            ProtocolKind::Linear => li + (lf - li) * t / tau,
            ProtocolKind::Erf { .. } => 0.5 * (li + lf) + 0.5 * (lf - li) * libm::erf(t / tau),
            ProtocolKind::Tabulated { samples } => {
                let ((t0, v0), (t1, v1)) = segment(samples, t);
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// dλ/dt.
    pub fn rate(&self, t: f64) -> f64 {
        let (li, lf, tau) = (self.start_value, self.end_value, self.duration);
        match &self.kind {
            ProtocolKind::Linear => (lf - li) / tau,
            ProtocolKind::Erf { .. } => {
                let x = t / tau;
                (lf - li) / (tau * std::f64::consts::PI.sqrt()) * (-x * x).exp()
            }
            ProtocolKind::Tabulated { samples } => {
                let ((t0, v0), (t1, v1)) = segment(samples, t);
                (v1 - v0) / (t1 - t0)
            }
        }
    }
}

fn segment(samples: &[(f64, f64)], t: f64) -> ((f64, f64), (f64, f64)) {
    let i = samples.partition_point(|s| s.0 <= t).clamp(1, samples.len() - 1);
    (samples[i - 1], samples[i])
}

fn check_duration(duration: f64) -> Result<()> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::InvalidParameter(format!("duration τ = {duration} must be positive")));
    }
    Ok(())
}

fn check_finite(v: &[f64]) -> Result<()> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("protocol values must be finite".into()));
    }
    Ok(())
}

/// H(λ(t)).
pub fn hamiltonian_at(model: &ModelSpec, protocol: &Protocol, t: f64) -> Result<ComplexMatrix> {
    model.hamiltonian(protocol.value(t)?)
}

/// G = −(iħ/2) g⁻¹ dg/dt.
pub fn gauge_field(g: &MetricOperator, dg_dt: &ComplexMatrix, hbar: f64) -> Result<ComplexMatrix> {
    crate::linalg::check_dim(dg_dt.dim(), g.dim())?;
    if g.inverse_defect() > 1e-6 * (g.dim() as f64).sqrt() * (g.norm() / g.min_eigenvalue().abs()) {
        return Err(Error::Singular);
    }
    let coef = C64::new(0.0, -0.5 * hbar);
    Ok(ComplexMatrix::wrap(g.g_inverse().as_array().dot(dg_dt.as_array()).mapv(|z| z * coef)))
}

/// ‖U†g_tU − g₀‖_F / ‖g₀‖₂. With g = I this is ‖U†U − I‖_F.
pub fn unitarity_residual(u: &ComplexMatrix, g0: &MetricOperator, gt: &MetricOperator) -> f64 {
    let ua = u.as_array();
    let d = adjoint(ua).dot(&gt.g().as_array().dot(ua)) - g0.g().as_array();
    crate::linalg::frobenius(&d) / g0.norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    /// Classical fourth-order Runge-Kutta on the matrix equation.
    Rk4,
    /// Fourth-order commutator-free Magnus: two exponentials per step at the
    /// Gauss nodes.
    Magnus4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricSource {
    /// Closed-form g(λ) and dg/dλ from the model.
    Analytic,
    /// g from the eigensystem of H_t, dg/dt by central differences.
    Spectral,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationSettings {
    pub hbar: f64,
    /// Initial step count; rounded up to a multiple of the checkpoint segments.
    pub steps: usize,
    pub max_steps: usize,
    pub integrator: Integrator,
    /// `None` uses the analytic metric when the model has one.
    pub metric_source: Option<MetricSource>,
    pub tolerances: Tolerances,
}

impl Default for PropagationSettings {
    fn default() -> Self {
        Self { hbar: 1.0, steps: 64, max_steps: 1 << 17, integrator: Integrator::Rk4, metric_source: None, tolerances: Tolerances::default() }
    }
}

#[derive(Debug, Clone)]
pub struct PropagationResult {
    pub u: ComplexMatrix,
    /// (t, unitarity residual) at interior grid times and the final time.
    pub checkpoints: Vec<(f64, f64)>,
    pub steps_used: usize,
    pub step_size: f64,
    /// Entrywise change against the run with half as many steps, measured in
    /// the g-orthonormal frame.
    pub change: f64,
    pub metric_start: MetricOperator,
    pub metric_end: MetricOperator,
}

/// Number of equal segments delimiting checkpoints (15 interior times).
const SEGMENTS: usize = 16;

struct Generator<'a> {
    model: &'a ModelSpec,
    protocol: &'a Protocol,
    source: MetricSource,
    hbar: f64,
    tol: Tolerances,
}

impl Generator<'_> {
    fn metric_at_control(&self, t: f64, c: f64) -> Result<MetricOperator> {
        let singular = |min_eigenvalue: f64| Error::SingularMetric { time: t, control: c, min_eigenvalue };
        let g = match self.source {
            MetricSource::Analytic => match self.model.analytic_metric(c) {
                Some(Ok(g)) => g,
                Some(Err(_)) => return Err(singular(0.0)),
                None => return Err(Error::InvalidParameter("model has no analytic metric".into())),
            },
            MetricSource::Spectral => {
                let h = self.model.hamiltonian(c)?;
                match eigendecompose(&h, &self.tol).and_then(|es| build_metric(&es, &self.tol)) {
                    Ok(g) => g,
                    Err(Error::Defective { .. }) | Err(Error::NotPseudoHermitian) => return Err(singular(0.0)),
                    Err(e) => return Err(e),
                }
            }
        };
        if !g.positive_definite() {
            return Err(singular(g.min_eigenvalue()));
        }
        Ok(g)
    }

    fn metric(&self, t: f64) -> Result<MetricOperator> {
        self.metric_at_control(t, self.protocol.value_extended(t))
    }

    /// K = (H + G)/ħ and the metric at `t`.
    fn eval(&self, t: f64) -> Result<(Array2<C64>, MetricOperator)> {
        let c = self.protocol.value_extended(t);
        let h = self.model.hamiltonian(c)?;
        let g = self.metric_at_control(t, c)?;
        let dg = match self.source {
            MetricSource::Analytic => self.model.metric_derivative(c).map(|d| d.scale(C64::new(self.protocol.rate(t), 0.0))),
            MetricSource::Spectral => {
                let step = self.tol.finite_difference * self.protocol.duration();
                let gp = self.metric(t + step)?;
                let gm = self.metric(t - step)?;
                Some(ComplexMatrix::wrap((gp.g().as_array() - gm.g().as_array()).mapv(|z| z / (2.0 * step))))
            }
        };
        let mut k = h.into_array();
        if let Some(dg) = dg {
            if dg.iter().any(|z| *z != ZERO) {
                k = k + gauge_field(&g, &dg, self.hbar)?.as_array();
            }
        }
        Ok((k.mapv(|z| z / self.hbar), g))
    }
}

struct Run {
    u: Array2<C64>,
    checkpoints: Vec<(f64, f64)>,
    g0: MetricOperator,
    g1: MetricOperator,
}

fn minus_i(a: &Array2<C64>) -> Array2<C64> {
    a.mapv(|z| C64::new(z.im, -z.re))
}

fn run(gen: &Generator, t0: f64, t1: f64, steps: usize, integrator: Integrator) -> Result<Run> {
    let n = gen.model.dimension();
    let h = (t1 - t0) / steps as f64;
    let per_segment = steps / SEGMENTS;
    let mut u = Array2::<C64>::eye(n);
    let mut checkpoints = Vec::with_capacity(SEGMENTS);
    let g0 = gen.metric(t0)?;
    let (mut k_left, _) = match integrator {
        Integrator::Rk4 => gen.eval(t0)?,
        Integrator::Magnus4 => (Array2::zeros((n, n)), g0.clone()),
    };
    let sqrt3 = 3f64.sqrt();
    let (c1, c2) = (0.5 - sqrt3 / 6.0, 0.5 + sqrt3 / 6.0);
    let (a1, a2) = (0.25 + sqrt3 / 6.0, 0.25 - sqrt3 / 6.0);
    let mut g_last = g0.clone();
    for s in 0..steps {
        let t = t0 + s as f64 * h;
        let t_next = if s + 1 == steps { t1 } else { t0 + (s + 1) as f64 * h };
        let need_metric = (s + 1) % per_segment == 0;
        match integrator {
            Integrator::Rk4 => {
                let (k_mid, _) = gen.eval(t + 0.5 * h)?;
                let (k_right, g_right) = gen.eval(t_next)?;
                let f = |k: &Array2<C64>, y: &Array2<C64>| minus_i(&k.dot(y));
                let k1 = f(&k_left, &u);
                let k2 = f(&k_mid, &(&u + &k1.mapv(|z| z * (0.5 * h))));
                let k3 = f(&k_mid, &(&u + &k2.mapv(|z| z * (0.5 * h))));
                let k4 = f(&k_right, &(&u + &k3.mapv(|z| z * h)));
                u = &u + &((k1 + k2.mapv(|z| z * 2.0) + k3.mapv(|z| z * 2.0) + k4).mapv(|z| z * (h / 6.0)));
                k_left = k_right;
                if need_metric {
                    g_last = g_right;
                }
            }
            Integrator::Magnus4 => {
                let (ka, _) = gen.eval(t + c1 * h)?;
                let (kb, _) = gen.eval(t + c2 * h)?;
                let first = expm_array(&minus_i(&(ka.mapv(|z| z * (a1 * h)) + kb.mapv(|z| z * (a2 * h)))))?;
                let second = expm_array(&minus_i(&(ka.mapv(|z| z * (a2 * h)) + kb.mapv(|z| z * (a1 * h)))))?;
                u = second.dot(&first.dot(&u));
                if need_metric {
                    g_last = gen.metric(t_next)?;
                }
            }
        }
        if need_metric {
            let r = unitarity_residual(&ComplexMatrix::wrap(u.clone()), &g0, &g_last);
            checkpoints.push((t_next, r));
        }
    }
    if u.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NotConverged { steps, change: f64::INFINITY });
    }
    Ok(Run { u, checkpoints, g0, g1: g_last })
}

/// Entrywise difference in the g-orthonormal frame: W₁ (U_a − U_b) W₀⁻¹ with W = g^{1/2}.
fn frame_change(a: &Array2<C64>, b: &Array2<C64>, g0: &MetricOperator, g1: &MetricOperator) -> f64 {
    let (_, w0_inv) = g0.sqrt_pair().expect("positive definite");
    let (w1, _) = g1.sqrt_pair().expect("positive definite");
    max_abs(&w1.dot(&(a - b)).dot(&w0_inv))
}

/// Propagates over the full protocol window.
pub fn propagate(model: &ModelSpec, protocol: &Protocol, settings: &PropagationSettings) -> Result<PropagationResult> {
    let (t0, t1) = protocol.time_range();
    propagate_interval(model, protocol, t0, t1, settings)
}

/// Propagates from `t0` to `t1` inside the protocol window, doubling the
/// step count until the g-frame change between successive runs falls below
/// the propagation tolerance.
pub fn propagate_interval(model: &ModelSpec, protocol: &Protocol, t0: f64, t1: f64, settings: &PropagationSettings) -> Result<PropagationResult> {
    protocol.value(t0)?;
    protocol.value(t1)?;
    if !(t1 > t0) {
        return Err(Error::InvalidParameter("propagation interval must have t1 > t0".into()));
    }
    if settings.steps == 0 || !(settings.hbar > 0.0) {
        return Err(Error::InvalidParameter("steps must be ≥ 1 and ħ > 0".into()));
    }
    let source = settings.metric_source.unwrap_or(if model.analytic_metric(protocol.start_value()).is_some() { MetricSource::Analytic } else { MetricSource::Spectral });
    let gen = Generator { model, protocol, source, hbar: settings.hbar, tol: settings.tolerances };
    let tol = settings.tolerances.propagation;
    let mut steps = settings.steps.div_ceil(SEGMENTS) * SEGMENTS;
    let mut prev = run(&gen, t0, t1, steps, settings.integrator)?;
    let mut last_change = f64::INFINITY;
    loop {
        let next_steps = steps * 2;
        if next_steps > settings.max_steps {
            return Err(Error::NotConverged { steps, change: last_change });
        }
        let cur = run(&gen, t0, t1, next_steps, settings.integrator)?;
        let change = frame_change(&cur.u, &prev.u, &cur.g0, &cur.g1);
        steps = next_steps;
        if change < tol {
            if let Some(&(time, residual)) = cur.checkpoints.iter().find(|c| !(c.1 < tol)) {
                return Err(Error::UnitarityLost { time, residual });
            }
            return Ok(PropagationResult {
                u: ComplexMatrix::wrap(cur.u),
                checkpoints: cur.checkpoints,
                steps_used: steps,
                step_size: (t1 - t0) / steps as f64,
                change,
                metric_start: cur.g0,
                metric_end: cur.g1,
            });
        }
        log::debug!("{steps} steps: change {change:e}");
        last_change = change;
        prev = cur;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{expm, I, ONE};
    use crate::models::{build_two_level, Boundary, OscillatorParams};

    fn settings(integrator: Integrator) -> PropagationSettings {
        PropagationSettings { integrator, ..Default::default() }
    }

    #[test]
    fn protocol_values() {
        let p = Protocol::linear(0.0, 0.5, 2.0).unwrap();
        assert_eq!(p.value(1.0).unwrap(), 0.25);
        assert!(matches!(p.value(2.5), Err(Error::OutOfRange { .. })));
        let e = Protocol::erf(0.2, 0.6, 1.0, 3).unwrap();
        assert_eq!(e.value(0.0).unwrap(), 0.4);
        assert_eq!(e.time_range(), (-3.0, 3.0));
        assert!((e.value(-3.0).unwrap() - 0.2).abs() < 1e-5);
        assert!((e.value(3.0).unwrap() - 0.6).abs() < 1e-5);
        let tab = Protocol::tabulated(vec![(0.0, 0.0), (1.0, 1.0), (3.0, 0.0)]).unwrap();
        assert_eq!(tab.value(2.0).unwrap(), 0.5);
        assert_eq!(tab.rate(2.0), -0.5);
        assert!(Protocol::tabulated(vec![(0.0, 0.0), (0.0, 1.0)]).is_err());
        assert!(Protocol::linear(0.0, 1.0, 0.0).is_err());
        assert!(Protocol::erf(0.0, 1.0, 1.0, 0).is_err());
    }

    #[test]
    fn erf_rate_matches_central_difference() {
        let e = Protocol::erf(0.2, 0.6, 1.5, 2).unwrap();
        for t in [-2.0, -0.3, 0.0, 0.7, 2.9] {
            let h = 1e-6;
            let fd = (e.value_extended(t + h) - e.value_extended(t - h)) / (2.0 * h);
            assert!((fd - e.rate(t)).abs() < 1e-9);
        }
    }

    #[test]
    fn hamiltonian_at_endpoints() {
        let model = ModelSpec::two_level();
        let p = Protocol::linear(0.0, 0.5, 1.0).unwrap();
        let h0 = hamiltonian_at(&model, &p, 0.0).unwrap();
        assert_eq!(h0.as_array(), &ndarray::array![[ZERO, ONE], [ONE, ZERO]]);
        let h1 = hamiltonian_at(&model, &p, 1.0).unwrap();
        assert_eq!(h1.as_array(), &ndarray::array![[I * 0.5, ONE], [ONE, -I * 0.5]]);
    }

    #[test]
    fn gauge_field_linear_and_vanishing() {
        let g = MetricOperator::identity(2);
        assert_eq!(gauge_field(&g, &ComplexMatrix::zeros(2), 1.0).unwrap(), ComplexMatrix::zeros(2));
        let model = ModelSpec::two_level();
        let g = model.analytic_metric(0.3).unwrap().unwrap();
        let dg = model.metric_derivative(0.3).unwrap().scale(ONE * 0.5);
        let a = gauge_field(&g, &dg, 1.0).unwrap();
        let b = gauge_field(&g, &dg.scale(ONE * 2.0), 1.0).unwrap();
        assert!(max_abs(&(b.as_array() - &a.as_array().mapv(|z| z * 2.0))) < 1e-15);
    }

    #[test]
    fn analytic_metric_derivative_matches_central_difference() {
        let model = ModelSpec::two_level();
        let h = 1e-6;
        for lambda in [-0.7, 0.0, 0.4, 0.9] {
            let gp = model.analytic_metric(lambda + h).unwrap().unwrap();
            let gm = model.analytic_metric(lambda - h).unwrap().unwrap();
            let fd = (gp.g().as_array() - gm.g().as_array()).mapv(|z| z / (2.0 * h));
            assert!(max_abs(&(fd - model.metric_derivative(lambda).unwrap().as_array())) < 1e-6);
        }
    }

    #[test]
    fn constant_sigma_x_gives_rotation() {
        let model = ModelSpec::two_level();
        let t = 1.3;
        let r = propagate(&model, &Protocol::constant(0.0, t).unwrap(), &settings(Integrator::Rk4)).unwrap();
        let expect = ndarray::array![[ONE * t.cos(), -I * t.sin()], [-I * t.sin(), ONE * t.cos()]];
        assert!(max_abs(&(r.u.as_array() - &expect)) < 1e-9);
        assert!(r.checkpoints.len() >= 10);
    }

    #[test]
    fn constant_non_hermitian_matches_exponential_oracle() {
        let model = ModelSpec::two_level();
        let t = 2.0;
        for integrator in [Integrator::Rk4, Integrator::Magnus4] {
            let r = propagate(&model, &Protocol::constant(0.5, t).unwrap(), &settings(integrator)).unwrap();
            let oracle = expm(&build_two_level(0.5).scale(C64::new(0.0, -t))).unwrap();
            assert!(max_abs(&(r.u.as_array() - oracle.as_array())) < 1e-9, "{integrator:?}");
        }
    }

    #[test]
    fn crossing_exceptional_point_is_refused() {
        let model = ModelSpec::two_level();
        let p = Protocol::linear(0.0, 1.2, 1.0).unwrap();
        for source in [MetricSource::Analytic, MetricSource::Spectral] {
            let s = PropagationSettings { metric_source: Some(source), ..Default::default() };
            match propagate(&model, &p, &s) {
                Err(Error::SingularMetric { control, .. }) => assert!(control >= 1.0 - 1e-6, "{control}"),
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn linear_quench_preserves_metric_and_sources_agree() {
        let model = ModelSpec::two_level();
        let p = Protocol::linear(0.0, 0.5, 1.0).unwrap();
        let a = propagate(&model, &p, &settings(Integrator::Rk4)).unwrap();
        assert!(a.checkpoints.iter().all(|c| c.1 < 1e-8));
        let magnus = propagate(&model, &p, &settings(Integrator::Magnus4)).unwrap();
        assert!(max_abs(&(a.u.as_array() - magnus.u.as_array())) < 1e-8);
        // the spectral metric is a different (rescaled) family; U†g_tU = g₀ holds for it too
        let s = PropagationSettings { metric_source: Some(MetricSource::Spectral), ..Default::default() };
        let b = propagate(&model, &p, &s).unwrap();
        assert!(b.checkpoints.iter().all(|c| c.1 < 1e-8));
    }

    #[test]
    fn composition_over_halves() {
        let model = ModelSpec::two_level();
        let p = Protocol::linear(-0.3, 0.6, 1.5).unwrap();
        let s = settings(Integrator::Rk4);
        let full = propagate(&model, &p, &s).unwrap();
        let first = propagate_interval(&model, &p, 0.0, 0.75, &s).unwrap();
        let second = propagate_interval(&model, &p, 0.75, 1.5, &s).unwrap();
        let composed = second.u.dot(&first.u);
        assert!(max_abs(&(full.u.as_array() - composed.as_array())) < 1e-8);
    }

    #[test]
    fn hermitian_limit_agrees_with_standard_propagator() {
        // ξ = 0: G = 0 and the metric is the identity
        let model = ModelSpec::oscillator(OscillatorParams::new(0.0, 12, 1.0)).unwrap();
        let p = Protocol::constant(1.0, 0.8).unwrap();
        let r = propagate(&model, &p, &settings(Integrator::Rk4)).unwrap();
        let oracle = expm(&model.hamiltonian(1.0).unwrap().scale(C64::new(0.0, -0.8))).unwrap();
        assert!(max_abs(&(r.u.as_array() - oracle.as_array())) < 1e-8);
        assert!(r.checkpoints.iter().all(|c| c.1 < 1e-8));
    }

    #[test]
    fn periodic_chain_has_no_unitary_evolution() {
        let model = ModelSpec::hatano_nelson(4, 0.5, vec![0.0; 4], Boundary::Periodic).unwrap();
        let p = Protocol::linear(1.0, 1.2, 1.0).unwrap();
        assert!(matches!(propagate(&model, &p, &PropagationSettings::default()), Err(Error::SingularMetric { .. })));
    }
}
