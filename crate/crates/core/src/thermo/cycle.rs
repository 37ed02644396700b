use super::{density_matrix, ThermalState};
use crate::error::{Error, Result};
use crate::linalg::{build_metric, eigendecompose, g_trace, BiorthogonalEigensystem, ComplexMatrix, MetricOperator, C64};
use crate::tolerance::Tolerances;

const BETA_MIN: f64 = 1e-6;
const BETA_MAX: f64 = 1e6;
/// Relative mismatch allowed between the β reached at the end of an
/// isentrope and the temperature of the following isotherm.
const CLOSURE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Leg {
    HotIsotherm,
    HotToCold,
    ColdIsotherm,
    ColdToHot,
}

impl Leg {
    pub const ALL: [Leg; 4] = [Leg::HotIsotherm, Leg::HotToCold, Leg::ColdIsotherm, Leg::ColdToHot];

    pub fn name(self) -> &'static str {
        match self {
            Leg::HotIsotherm => "hot_isotherm",
            Leg::HotToCold => "isentrope_hot_to_cold",
            Leg::ColdIsotherm => "cold_isotherm",
            Leg::ColdToHot => "isentrope_cold_to_hot",
        }
    }

    fn is_isotherm(self) -> bool {
        matches!(self, Leg::HotIsotherm | Leg::ColdIsotherm)
    }
}

/// Corners A, B, C, D in control space. A→B is the hot isotherm, B→C and
/// D→A are isentropes, C→D is the cold isotherm; legs are straight lines.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleSpec {
    pub t_hot: f64,
    pub t_cold: f64,
    pub corners: [Vec<f64>; 4],
    /// Total number of steps, split evenly over the four legs.
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CyclePoint {
    pub leg: Leg,
    pub control: Vec<f64>,
    pub beta: f64,
    pub entropy: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleReport {
    pub t_hot: f64,
    pub t_cold: f64,
    /// Heat absorbed on the hot isotherm.
    pub q_hot: f64,
    /// Heat released on the cold isotherm.
    pub q_cold: f64,
    /// Work delivered by the engine, −Σ tr(ρ δH).
    pub w_net: f64,
    pub efficiency: f64,
    pub carnot_bound: f64,
    /// Heat exchanged on the two isentropes; zero in the quasistatic limit.
    pub q_isentropes: f64,
    pub entropy_trace: Vec<CyclePoint>,
    /// Largest imaginary part seen in E, S or the traces.
    pub max_imag: f64,
}

impl CycleReport {
    pub fn first_law_defect(&self) -> f64 {
        (self.w_net - (self.q_hot - self.q_cold)).abs()
    }
}

/// β with S(β) = s_target for the given spectrum, by bisection on ln β over
/// [10⁻⁶, 10⁶]. S decreases monotonically in β.
pub fn solve_beta(eigs: &[C64], s_target: f64, tol: &Tolerances) -> Result<f64> {
    let s = |beta: f64| ThermalState::gibbs(eigs, beta)?.entropy(tol.reality);
    let (s_hi, s_lo) = (s(BETA_MIN)?, s(BETA_MAX)?);
    if !(s_target <= s_hi + tol.entropy && s_target >= s_lo - tol.entropy) {
        return Err(Error::IsentropeNotFound { reason: format!("target entropy {s_target} outside [{s_lo}, {s_hi}]") });
    }
    let (mut a, mut b) = (BETA_MIN.ln(), BETA_MAX.ln());
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let sm = s(mid.exp())?;
        if (sm - s_target).abs() < tol.entropy * 1e-3 || b - a < 1e-15 {
            return Ok(mid.exp());
        }
        if sm > s_target {
            a = mid;
        } else {
            b = mid;
        }
    }
    let beta = (0.5 * (a + b)).exp();
    let miss = (s(beta)? - s_target).abs();
    if miss > tol.entropy {
        return Err(Error::IsentropeNotFound { reason: format!("bisection stalled with entropy error {miss:e}") });
    }
    Ok(beta)
}

struct Sample {
    h: ComplexMatrix,
    eigsys: BiorthogonalEigensystem,
    metric: MetricOperator,
    rho: ComplexMatrix,
    state: ThermalState,
}

fn lerp(a: &[f64], b: &[f64], s: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * (y - x)).collect()
}

fn real_part(z: C64, what: &str, max_imag: &mut f64, tol: f64) -> Result<f64> {
    *max_imag = max_imag.max(z.im.abs());
    if z.im.abs() > tol * z.re.abs().max(1.0) {
        return Err(Error::NonRealResult { quantity: what.into(), imag: z.im });
    }
    Ok(z.re)
}

/// Quasistatic Carnot cycle over a family H(control).
///
/// Each step between neighbouring equilibrium states splits the energy change
/// with midpoint weights, δQ = tr((ρ' − ρ)(H + H')/2) and
/// δW = tr((ρ + ρ')/2 (H' − H)), so δQ + δW = tr(ρ'H') − tr(ρH) exactly.
/// Traces are g-traces in the eigenbasis of the earlier point.
pub fn quasistatic_cycle<F>(family: F, spec: &CycleSpec, tol: &Tolerances) -> Result<CycleReport>
where
    F: Fn(&[f64]) -> Result<ComplexMatrix>,
{
    if !(spec.t_hot > spec.t_cold && spec.t_cold > 0.0) {
        return Err(Error::InvalidParameter(format!("need T_hot > T_cold > 0, got {} and {}", spec.t_hot, spec.t_cold)));
    }
    if spec.steps < 100 {
        return Err(Error::InvalidParameter(format!("at least 100 cycle steps required, got {}", spec.steps)));
    }
    let dim = spec.corners[0].len();
    if spec.corners.iter().any(|c| c.len() != dim) {
        return Err(Error::InvalidParameter("corners must share one control dimension".into()));
    }
    let per_leg = spec.steps.div_ceil(4);
    let (beta_hot, beta_cold) = (1.0 / spec.t_hot, 1.0 / spec.t_cold);
    let mut max_imag = 0.0f64;

    let sample = |control: &[f64], beta: f64| -> Result<Sample> {
        let h = family(control)?;
        let eigsys = eigendecompose(&h, tol)?;
        let metric = build_metric(&eigsys, tol)?;
        let state = ThermalState::gibbs(eigsys.eigenvalues(), beta)?;
        let rho = density_matrix(&eigsys, &state)?;
        Ok(Sample { h, eigsys, metric, rho, state })
    };

    let mut trace = Vec::with_capacity(4 * per_leg + 1);
    let (mut q_hot, mut q_cold, mut q_isen, mut work_on) = (0.0, 0.0, 0.0, 0.0);
    let mut beta = beta_hot;

    for (k, leg) in Leg::ALL.into_iter().enumerate() {
        let (from, to) = (&spec.corners[k], &spec.corners[(k + 1) % 4]);
        let mut prev = sample(from, beta)?;
        let s_target = prev.state.entropy(tol.reality)?;
        if k == 0 {
            let energy = real_part(g_trace(&prev.rho.dot(&prev.h), &prev.eigsys, &prev.metric)?, "energy", &mut max_imag, tol.reality)?;
            trace.push(CyclePoint { leg, control: from.clone(), beta, entropy: s_target, energy });
        }
        let mut leg_heat = 0.0;
        for j in 1..=per_leg {
            let control = lerp(from, to, j as f64 / per_leg as f64);
            if !leg.is_isotherm() {
                let h = family(&control)?;
                let es = eigendecompose(&h, tol)?;
                beta = solve_beta(es.eigenvalues(), s_target, tol)?;
            }
            let next = sample(&control, beta)?;
            let h_mid = (&prev.h + &next.h).scale(C64::new(0.5, 0.0));
            let rho_mid = (&prev.rho + &next.rho).scale(C64::new(0.5, 0.0));
            let dq = g_trace(&(&next.rho - &prev.rho).dot(&h_mid), &prev.eigsys, &prev.metric)?;
            let dw = g_trace(&rho_mid.dot(&(&next.h - &prev.h)), &prev.eigsys, &prev.metric)?;
            leg_heat += real_part(dq, "heat", &mut max_imag, tol.reality)?;
            work_on += real_part(dw, "work", &mut max_imag, tol.reality)?;
            let entropy = real_part(next.state.entropy_complex(), "entropy", &mut max_imag, tol.reality)?;
            let energy = real_part(g_trace(&next.rho.dot(&next.h), &next.eigsys, &next.metric)?, "energy", &mut max_imag, tol.reality)?;
            trace.push(CyclePoint { leg, control, beta, entropy, energy });
            prev = next;
        }
        match leg {
            Leg::HotIsotherm => {
                q_hot = leg_heat;
                beta = beta_hot;
            }
            Leg::ColdIsotherm => {
                q_cold = -leg_heat;
                beta = beta_cold;
            }
            Leg::HotToCold | Leg::ColdToHot => {
                q_isen += leg_heat;
                let want = if leg == Leg::HotToCold { beta_cold } else { beta_hot };
                if ((beta - want) / want).abs() > CLOSURE_TOL {
                    return Err(Error::IsentropeNotFound {
                        reason: format!("{} ends at beta = {beta}, the next isotherm needs {want}", leg.name()),
                    });
                }
                beta = want;
            }
        }
    }
    let w_net = -work_on;
    Ok(CycleReport {
        t_hot: spec.t_hot,
        t_cold: spec.t_cold,
        q_hot,
        q_cold,
        w_net,
        efficiency: w_net / q_hot,
        carnot_bound: 1.0 - spec.t_cold / spec.t_hot,
        q_isentropes: q_isen,
        entropy_trace: trace,
        max_imag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::two_level_with_coupling;

    fn family(c: &[f64]) -> Result<ComplexMatrix> {
        Ok(two_level_with_coupling(c[1], c[0]))
    }

    fn corners(gaps: [f64; 4], lambdas: [f64; 4]) -> [Vec<f64>; 4] {
        std::array::from_fn(|k| vec![(gaps[k] * gaps[k] / 4.0 + lambdas[k] * lambdas[k]).sqrt(), lambdas[k]])
    }

    fn spec(lambdas: [f64; 4], steps: usize) -> CycleSpec {
        CycleSpec { t_hot: 2.0, t_cold: 1.0, corners: corners([4.0, 2.0, 1.0, 2.0], lambdas), steps }
    }

    #[test]
    fn solve_beta_inverts_entropy() {
        let eigs = [C64::new(-1.0, 0.0), C64::new(1.0, 0.0)];
        let tol = Tolerances::default();
        let s = ThermalState::gibbs(&eigs, 0.8).unwrap().entropy(1e-12).unwrap();
        assert!((solve_beta(&eigs, s, &tol).unwrap() - 0.8).abs() < 1e-9);
        assert!(matches!(solve_beta(&eigs, 1.0, &tol), Err(Error::IsentropeNotFound { .. })));
    }

    #[test]
    fn hermitian_engine_reaches_carnot() {
        let r = quasistatic_cycle(family, &spec([0.0; 4], 2000), &Tolerances::default()).unwrap();
        assert_eq!(r.carnot_bound, 0.5);
        assert!((r.efficiency - 0.5).abs() < 1e-3, "{}", r.efficiency);
        assert!(r.efficiency <= 0.5 + 1e-6);
        assert!(r.first_law_defect() < 1e-6 * r.q_hot.abs());
        // Q_hot = T_h ΔS on the hot isotherm
        let s = |b: f64, gap: f64| ThermalState::gibbs(&[C64::new(-gap / 2.0, 0.0), C64::new(gap / 2.0, 0.0)], b).unwrap().entropy(1e-12).unwrap();
        let expect = 2.0 * (s(0.5, 2.0) - s(0.5, 4.0));
        assert!((r.q_hot - expect).abs() < 1e-5 * expect);
    }

    #[test]
    fn pseudo_hermitian_engine_matches_hermitian() {
        let tol = Tolerances::default();
        let h = quasistatic_cycle(family, &spec([0.0; 4], 1000), &tol).unwrap();
        let p = quasistatic_cycle(family, &spec([0.5, -0.7, 0.3, -0.4], 1000), &tol).unwrap();
        assert!((p.efficiency - h.efficiency).abs() < 1e-3);
        assert!(p.max_imag < 1e-10, "{}", p.max_imag);
        assert!(p.efficiency <= 0.5 + 1e-6);
    }

    #[test]
    fn mismatched_isentrope_is_reported() {
        // B and C gaps do not follow T_c/T_h
        let mut s = spec([0.0; 4], 200);
        s.corners = corners([4.0, 2.0, 1.5, 2.0], [0.0; 4]);
        assert!(matches!(quasistatic_cycle(family, &s, &Tolerances::default()), Err(Error::IsentropeNotFound { .. })));
    }

    #[test]
    fn bad_parameters_are_rejected() {
        let mut s = spec([0.0; 4], 50);
        assert!(matches!(quasistatic_cycle(family, &s, &Tolerances::default()), Err(Error::InvalidParameter(_))));
        s.steps = 200;
        s.t_cold = 3.0;
        assert!(matches!(quasistatic_cycle(family, &s, &Tolerances::default()), Err(Error::InvalidParameter(_))));
    }
}
