//! One function per subcommand. Each returns the tables to write and a set
//! of summary values; nothing here touches the filesystem except reading a
//! matrix file.

use std::collections::BTreeMap;

use num_complex::Complex64;
use pseudotherm::dynamics::{propagate, Protocol};
use pseudotherm::linalg::io::parse_matrix;
use pseudotherm::linalg::{build_metric, eigendecompose, pseudo_hermiticity_residual, MetricOperator};
use pseudotherm::models::two_level_with_coupling;
use pseudotherm::thermo::{partial_exp_work, quasistatic_cycle, relaxation_time, two_time_work, WorkRun};
use pseudotherm::{ComplexMatrix, Error};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, ModelConfig, ProtocolConfig, SweepParameter};
use crate::error::CliError;
use crate::svg::{Plot, Style};
use crate::table::{Cell, Table};

pub struct Figure {
    pub name: String,
    pub table: Table,
    pub plot: Option<Plot>,
}

#[derive(Default)]
pub struct Output {
    pub figures: Vec<Figure>,
    pub values: BTreeMap<String, Value>,
    pub failures: Vec<String>,
}

impl Output {
    fn figure(&mut self, name: &str, table: Table, plot: Option<Plot>) {
        self.figures.push(Figure { name: name.into(), table, plot });
    }

    fn value(&mut self, key: &str, v: impl Into<Value>) {
        self.values.insert(key.into(), v.into());
    }
}

/// Evaluates `f` at every sweep point (or once without a sweep) on the
/// current rayon pool. Results come back ordered by the sweep value.
fn over_sweep<T, F>(cfg: &ExperimentConfig, default: SweepParameter, f: F) -> Result<(SweepParameter, Vec<(f64, T)>), CliError>
where
    T: Send,
    F: Fn(&ExperimentConfig) -> Result<T, CliError> + Sync,
{
    let Some(sweep) = &cfg.sweep else {
        let key = match default {
            SweepParameter::Beta => cfg.beta,
            SweepParameter::Control => cfg.static_control(),
            _ => protocol_field(cfg, default),
        };
        return Ok((default, vec![(key, f(cfg)?)]));
    };
    let param = sweep.parameter;
    let mut out = sweep
        .points()
        .par_iter()
        .map(|&v| {
            let at = |e: CliError| CliError::AtPoint { parameter: param.name().into(), value: v, source: Box::new(e) };
            let c = cfg.with_parameter(param, v).map_err(at)?;
            f(&c).map(|r| (v, r)).map_err(at)
        })
        .collect::<Result<Vec<_>, _>>()?;
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok((param, out))
}

fn protocol_field(cfg: &ExperimentConfig, p: SweepParameter) -> f64 {
    match (&cfg.protocol, p) {
        (Some(ProtocolConfig::Linear { duration, .. } | ProtocolConfig::Erf { duration, .. } | ProtocolConfig::Constant { duration, .. }), SweepParameter::Duration) => *duration,
        (Some(ProtocolConfig::Linear { start, .. } | ProtocolConfig::Erf { start, .. }), SweepParameter::Start) => *start,
        (Some(ProtocolConfig::Linear { end, .. } | ProtocolConfig::Erf { end, .. }), SweepParameter::End) => *end,
        _ => f64::NAN,
    }
}

fn hamiltonian(cfg: &ExperimentConfig, control: f64) -> Result<ComplexMatrix, CliError> {
    match &cfg.model {
        ModelConfig::Matrix { path } => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.clone(), message: e.to_string() })?;
            Ok(parse_matrix(&text)?)
        }
        _ => Ok(cfg.model()?.hamiltonian(control)?),
    }
}

fn c(x: f64) -> Cell {
    Cell::Real(x)
}

fn n(k: usize) -> Cell {
    Cell::Int(k as i64)
}

pub fn spectrum(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let tol = cfg.tolerances();
    let (param, points) = over_sweep(cfg, SweepParameter::Control, |c| {
        let es = eigendecompose(&hamiltonian(c, c.static_control())?, &tol)?;
        Ok((es.eigenvalues().to_vec(), es.spectrum_class(tol.imag).kind, es.condition()))
    })?;
    let mut t = Table::new(&[param.name(), "n", "re", "im"]);
    let mut out = Output::default();
    for (key, (eigs, kind, cond)) in &points {
        for (k, e) in eigs.iter().enumerate() {
            t.push(vec![c(*key), n(k), c(e.re), c(e.im)]);
        }
        t.comment(format!("{} = {key}: {kind:?}, eigenvector condition {cond:.3e}", param.name()));
    }
    if let [(_, (_, kind, cond))] = points.as_slice() {
        out.value("spectrum_kind", format!("{kind:?}"));
        out.value("condition", *cond);
    }
    out.figure("spectrum", t, Some(Plot::new("Spectrum", "re", &["im"], false, Style::Scatter)));
    Ok(out)
}

pub fn metric(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let tol = cfg.tolerances();
    let (param, points) = over_sweep(cfg, SweepParameter::Control, |c| {
        let h = hamiltonian(c, c.static_control())?;
        let g = build_metric(&eigendecompose(&h, &tol)?, &tol)?;
        let residual = pseudo_hermiticity_residual(&h, &g)?;
        Ok((g, residual))
    })?;
    let mut t = Table::new(&[param.name(), "i", "j", "g_re", "g_im", "g_inv_re", "g_inv_im"]);
    let mut spec = Table::new(&[param.name(), "k", "eigenvalue"]);
    let mut out = Output::default();
    let mut worst = 0.0f64;
    for (key, (g, residual)) in &points {
        worst = worst.max(*residual);
        let (a, b) = (g.g(), g.g_inverse());
        for i in 0..g.dim() {
            for j in 0..g.dim() {
                t.push(vec![c(*key), n(i), n(j), c(a[[i, j]].re), c(a[[i, j]].im), c(b[[i, j]].re), c(b[[i, j]].im)]);
            }
        }
        for (k, v) in g.eigenvalues().iter().enumerate() {
            spec.push(vec![c(*key), n(k), c(*v)]);
        }
        t.comment(format!("{} = {key}: ‖H†g − gH‖/‖gH‖ = {residual:.3e}, positive definite: {}", param.name(), g.positive_definite()));
    }
    out.value("max_pseudo_hermiticity_residual", worst);
    if let [(_, (g, _))] = points.as_slice() {
        out.value("positive_definite", g.positive_definite());
        out.value("min_eigenvalue", g.min_eigenvalue());
        out.value("max_eigenvalue", g.max_eigenvalue());
    }
    out.figure("metric", t, None);
    out.figure("metric_spectrum", spec, None);
    Ok(out)
}

pub fn evolve(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let model = cfg.model()?;
    let r = propagate(&model, &cfg.protocol()?, &cfg.settings())?;
    let mut cp = Table::new(&["t", "unitarity_residual"]);
    for (t, res) in &r.checkpoints {
        cp.push(vec![c(*t), c(*res)]);
    }
    let mut u = Table::new(&["i", "j", "re", "im"]);
    for ((i, j), z) in r.u.indexed_iter() {
        u.push(vec![n(i), n(j), c(z.re), c(z.im)]);
    }
    let mut out = Output::default();
    out.value("steps", r.steps_used as u64);
    out.value("step_size", r.step_size);
    out.value("change", r.change);
    out.value("max_unitarity_residual", r.checkpoints.iter().map(|x| x.1).fold(0.0, f64::max));
    out.figure("evolve_checkpoints", cp, Some(Plot::new("‖U†g_tU − g₀‖", "t", &["unitarity_residual"], false, Style::Line)));
    out.figure("evolve_u", u, None);
    Ok(out)
}

fn work_run(cfg: &ExperimentConfig) -> Result<WorkRun, CliError> {
    Ok(two_time_work(&cfg.model()?, &cfg.protocol()?, cfg.beta, &cfg.settings())?)
}

fn check_run(cfg: &ExperimentConfig, label: &str, run: &WorkRun, failures: &mut Vec<String>) {
    let r = &run.report;
    if r.relative_residual > cfg.checks.jarzynski_residual {
        failures.push(format!("{label}: Jarzynski residual {:.3e} exceeds {:.1e}", r.relative_residual, cfg.checks.jarzynski_residual));
    }
    if r.irreversible_work < cfg.checks.irreversible_work_floor {
        failures.push(format!("{label}: irreversible work {:.3e} below {:.1e}", r.irreversible_work, cfg.checks.irreversible_work_floor));
    }
}

fn report_values(out: &mut Output, run: &WorkRun) {
    let r = &run.report;
    out.value("exp_avg_work", r.exp_avg_work);
    out.value("exp_delta_f", r.exp_delta_f);
    out.value("relative_residual", r.relative_residual);
    out.value("mean_work", r.mean_work);
    out.value("delta_f", r.delta_f);
    out.value("irreversible_work", r.irreversible_work);
    if let Some(w) = run.tail_weight {
        out.value("tail_weight", w);
    }
    out.value("steps", run.propagation.steps_used as u64);
}

pub fn work(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let run = work_run(cfg)?;
    let mut t = Table::new(&["n", "m", "w", "p"]);
    for e in &run.distribution.entries {
        t.push(vec![n(e.n), n(e.m), c(e.work), c(e.probability)]);
    }
    t.comment(format!("Z0 = {:.16e}, Ztau = {:.16e}, Emin_initial = {:.16e}, Emin_final = {:.16e}", run.distribution.z0, run.distribution.z_tau, run.distribution.e_min_initial, run.distribution.e_min_final));
    let mut out = Output::default();
    report_values(&mut out, &run);
    check_run(cfg, "work", &run, &mut out.failures);
    out.figure("work", t, Some(Plot::new("Work distribution", "w", &["p"], false, Style::Scatter)));
    Ok(out)
}

pub fn jarzynski(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let (param, points) = over_sweep(cfg, SweepParameter::Beta, work_run)?;
    let mut t = Table::new(&[param.name(), "exp_avg_work", "exp_delta_f", "relative_residual", "mean_work", "delta_f", "irreversible_work", "steps"]);
    let mut out = Output::default();
    for (key, run) in &points {
        let r = &run.report;
        t.push(vec![c(*key), c(r.exp_avg_work), c(r.exp_delta_f), c(r.relative_residual), c(r.mean_work), c(r.delta_f), c(r.irreversible_work), n(run.propagation.steps_used)]);
        check_run(cfg, &format!("{} = {key}", param.name()), run, &mut out.failures);
    }
    if let [(_, run)] = points.as_slice() {
        report_values(&mut out, run);
    }
    out.value("max_relative_residual", points.iter().map(|(_, r)| r.report.relative_residual).fold(0.0, f64::max));
    let log = cfg.sweep.as_ref().and_then(|s| s.range.as_ref()).is_some_and(|r| r.spacing == crate::config::Spacing::Log);
    out.figure("jarzynski", t, Some(Plot::new("Jarzynski residual", param.name(), &["relative_residual"], log, Style::Line)));
    Ok(out)
}

pub fn carnot(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let cycle = cfg.cycle.as_ref().ok_or_else(|| CliError::Invalid { field: "cycle".into(), message: "required for carnot".into() })?;
    if !matches!(cfg.model, ModelConfig::TwoLevel { .. }) {
        return Err(CliError::Invalid { field: "model.kind".into(), message: "the Carnot engine runs on the two_level family".into() });
    }
    let family = |c: &[f64]| -> pseudotherm::Result<ComplexMatrix> { Ok(two_level_with_coupling(c[1], c[0])) };
    let r = quasistatic_cycle(family, &cycle.spec(), &cfg.tolerances())?;
    let mut trace = Table::new(&["step", "leg", "gamma", "lambda", "beta", "entropy", "energy"]);
    for (k, p) in r.entropy_trace.iter().enumerate() {
        let leg = pseudotherm::thermo::Leg::ALL.iter().position(|l| *l == p.leg).unwrap();
        trace.push(vec![n(k), n(leg), c(p.control[0]), c(p.control[1]), c(p.beta), c(p.entropy), c(p.energy)]);
    }
    trace.comment("legs: 0 hot isotherm, 1 isentrope hot to cold, 2 cold isotherm, 3 isentrope cold to hot");
    let mut summary = Table::new(&["t_hot", "t_cold", "q_hot", "q_cold", "w_net", "efficiency", "carnot_bound", "q_isentropes", "max_imag"]);
    summary.push(vec![c(r.t_hot), c(r.t_cold), c(r.q_hot), c(r.q_cold), c(r.w_net), c(r.efficiency), c(r.carnot_bound), c(r.q_isentropes), c(r.max_imag)]);
    let mut out = Output::default();
    out.value("efficiency", r.efficiency);
    out.value("carnot_bound", r.carnot_bound);
    out.value("q_hot", r.q_hot);
    out.value("q_cold", r.q_cold);
    out.value("w_net", r.w_net);
    out.value("first_law_defect", r.first_law_defect());
    out.value("max_imag", r.max_imag);
    if r.efficiency > r.carnot_bound + 1e-6 {
        out.failures.push(format!("efficiency {} exceeds the Carnot bound {}", r.efficiency, r.carnot_bound));
    }
    out.figure("carnot_trace", trace, Some(Plot::new("Carnot cycle", "entropy", &["beta"], false, Style::Line)));
    out.figure("carnot_summary", summary, None);
    Ok(out)
}

/// e^{−βΔF} of the untruncated oscillator between the protocol endpoints.
fn oscillator_ratio(cfg: &ExperimentConfig, p: &Protocol) -> Result<f64, CliError> {
    let (t0, t1) = p.time_range();
    let (wi, wf) = (p.value(t0)?, p.value(t1)?);
    let x = cfg.beta * cfg.hbar / 2.0;
    Ok((x * wi).sinh() / (x * wf).sinh())
}

pub fn fig1_left(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    if !matches!(cfg.model, ModelConfig::Oscillator { .. }) {
        return Err(CliError::Invalid { field: "model.kind".into(), message: "fig1-left needs the oscillator".into() });
    }
    let run = work_run(cfg)?;
    let reference = oscillator_ratio(cfg, &cfg.protocol()?)?;
    let mut t = Table::new(&["n_max", "partial_exp_work", "exp_delta_f", "exp_delta_f_reference"]);
    let dim = run.initial.dim();
    for n_max in 1..=dim {
        t.push(vec![n(n_max), c(partial_exp_work(&run.distribution, n_max)), c(run.report.exp_delta_f), c(reference)]);
    }
    t.comment("exp_delta_f: truncated Z_tau/Z_0; exp_delta_f_reference: sinh(beta hbar omega_i/2)/sinh(beta hbar omega_f/2)");
    let mut out = Output::default();
    report_values(&mut out, &run);
    out.value("reference", reference);
    out.value("relative_error_vs_reference", (run.report.exp_avg_work - reference).abs() / reference);
    check_run(cfg, "fig1-left", &run, &mut out.failures);
    out.figure("fig1_left", t, Some(Plot::new("Average exponentiated work", "n_max", &["partial_exp_work", "exp_delta_f_reference"], false, Style::Line)));
    Ok(out)
}

pub fn fig1_right(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let sweep = cfg.sweep.as_ref().filter(|s| s.parameter == SweepParameter::Duration);
    let sweep = sweep.ok_or_else(|| CliError::Invalid { field: "sweep.parameter".into(), message: "fig1-right sweeps the duration".into() })?;
    let (_, points) = over_sweep(cfg, SweepParameter::Duration, |c| {
        let erf = work_run(c)?;
        let (start, end, tau) = match &c.protocol {
            Some(ProtocolConfig::Erf { start, end, duration, .. }) => (*start, *end, *duration),
            _ => return Err(CliError::Invalid { field: "protocol.kind".into(), message: "fig1-right compares an erf protocol with a linear ramp".into() }),
        };
        let linear = two_time_work(&c.model()?, &Protocol::linear(start, end, tau)?, c.beta, &c.settings())?;
        Ok((erf, linear))
    })?;
    let mut t = Table::new(&["tau", "w_irr_erf", "w_irr_linear", "residual_erf", "residual_linear"]);
    t.comment(sweep.describe());
    t.comment("linear ramp runs over [0, tau]; the erf protocol over [-N tau, N tau]");
    let mut out = Output::default();
    for (tau, (erf, lin)) in &points {
        t.push(vec![c(*tau), c(erf.report.irreversible_work), c(lin.report.irreversible_work), c(erf.report.relative_residual), c(lin.report.relative_residual)]);
        check_run(cfg, &format!("erf tau = {tau}"), erf, &mut out.failures);
        check_run(cfg, &format!("linear tau = {tau}"), lin, &mut out.failures);
    }
    let (first, last) = (&points[0].1, &points[points.len() - 1].1);
    out.value("w_irr_erf_smallest_tau", first.0.report.irreversible_work);
    out.value("w_irr_linear_smallest_tau", first.1.report.irreversible_work);
    out.value("w_irr_erf_largest_tau", last.0.report.irreversible_work);
    out.value("w_irr_linear_largest_tau", last.1.report.irreversible_work);
    out.figure("fig1_right", t, Some(Plot::new("Irreversible work", "tau", &["w_irr_erf", "w_irr_linear"], true, Style::Line)));
    Ok(out)
}

pub fn fig2_left(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let ModelConfig::TwoLevel { gamma } = cfg.model else {
        return Err(CliError::Invalid { field: "model.kind".into(), message: "fig2-left needs the two_level model".into() });
    };
    let tol = cfg.tolerances();
    let (_, points) = over_sweep(cfg, SweepParameter::End, |c| {
        let lf = protocol_field(c, SweepParameter::End);
        let tr = relaxation_time(&eigendecompose(&two_level_with_coupling(lf, gamma), &tol)?)?;
        Ok((tr, work_run(c)?))
    })?;
    let mut t = Table::new(&["lambda_f", "t_r", "t_r_analytic", "jarzynski_residual"]);
    let mut out = Output::default();
    let mut worst = 0.0f64;
    for (lf, (tr, run)) in &points {
        let analytic = 1.0 / (2.0 * (gamma * gamma - lf * lf).sqrt());
        worst = worst.max((tr - analytic).abs() / analytic);
        t.push(vec![c(*lf), c(*tr), c(analytic), c(run.report.relative_residual)]);
        check_run(cfg, &format!("lambda_f = {lf}"), run, &mut out.failures);
    }
    out.value("max_relative_t_r_error", worst);
    out.value("max_jarzynski_residual", points.iter().map(|(_, (_, r))| r.report.relative_residual).fold(0.0, f64::max));
    out.figure("fig2_left", t, Some(Plot::new("Relaxation time", "lambda_f", &["t_r"], false, Style::Line)));
    Ok(out)
}

/// ⟨ψ, σ_x ψ⟩ = 2 Re(ψ₀* ψ₁).
pub fn sigma_x_norm(psi: [Complex64; 2]) -> f64 {
    2.0 * (psi[0].conj() * psi[1]).re
}

pub fn random_states(seed: u64, count: usize) -> Vec<[Complex64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut z = [Complex64::new(0.0, 0.0); 2];
            for v in z.iter_mut() {
                *v = Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
            }
            let norm = (z[0].norm_sqr() + z[1].norm_sqr()).sqrt();
            z.map(|v| v / norm)
        })
        .collect()
}

pub fn fig2_right(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let count = cfg.samples.unwrap_or(100);
    let states = random_states(cfg.seed, count);
    let mut t = Table::new(&["n", "norm"]);
    t.comment("rng: ChaCha8 seeded from the config seed; real and imaginary parts standard normal; states normalized");
    t.comment("norm: <psi, sigma_x psi>");
    for (k, s) in states.iter().enumerate() {
        t.push(vec![n(k), c(sigma_x_norm(*s))]);
    }
    let norms: Vec<f64> = states.iter().map(|s| sigma_x_norm(*s)).collect();
    let mut out = Output::default();
    out.value("positive", norms.iter().filter(|v| **v > 0.0).count() as u64);
    out.value("negative", norms.iter().filter(|v| **v < 0.0).count() as u64);
    // σ_x is a valid (indefinite) metric for the two-level family at any λ
    let sx = ComplexMatrix::from_rows(&[vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)], vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]])?;
    let g = MetricOperator::new(sx, 1e-14)?;
    out.value("sigma_x_residual_broken_regime", pseudo_hermiticity_residual(&two_level_with_coupling(1.5, 1.0), &g)?);
    let crossing = propagate(&pseudotherm::models::ModelSpec::two_level(), &Protocol::linear(0.5, 1.5, 1.0)?, &cfg.settings());
    let crossing = match crossing {
        Err(Error::SingularMetric { time, control, min_eigenvalue }) => json!({"refused": true, "time": time, "control": control, "min_eigenvalue": min_eigenvalue}),
        Err(e) => json!({"refused": true, "error": e.to_string()}),
        Ok(_) => {
            out.failures.push("propagation across the exceptional point was not refused".into());
            json!({"refused": false})
        }
    };
    out.value("crossing", crossing);
    out.figure("fig2_right", t, Some(Plot::new("Norm against sigma_x", "n", &["norm"], false, Style::Scatter)));
    Ok(out)
}
