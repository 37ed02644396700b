use ndarray::Array2;
use proptest::prelude::*;
use pseudotherm::dynamics::{propagate, Integrator, PropagationSettings, Protocol};
use pseudotherm::linalg::{build_metric, classify_spectrum, conjugate_pairing, eigendecompose, g_trace, SpectrumKind};
use pseudotherm::models::{build_hatano_nelson, build_oscillator, build_two_level, Boundary, ModelSpec, OscillatorParams};
use pseudotherm::thermo::{projector, two_time_work, ThermalState};
use pseudotherm::{ComplexMatrix, Tolerances, C64};

fn config() -> ProptestConfig {
    ProptestConfig { cases: 128, ..ProptestConfig::default() }
}

fn max_abs(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn check_projectors(h: &ComplexMatrix) -> Result<(), TestCaseError> {
    let es = eigendecompose(h, &Tolerances::default()).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let n = es.dim();
    prop_assert!(es.biorthonormality_error() < 1e-10, "biorthonormality {}", es.biorthonormality_error());
    let mut sum = Array2::<C64>::zeros((n, n));
    for k in 0..n {
        let p = projector(k, &es).unwrap();
        let scale = p.max_abs().max(1.0);
        let idem = max_abs(&(p.dot(&p).into_array() - p.as_array())) / (scale * scale);
        prop_assert!(idem < 1e-12, "Π_{}² − Π_{} = {:e}", k, k, idem);
        sum = sum + p.as_array();
    }
    let completeness = max_abs(&(sum - Array2::<C64>::eye(n)));
    prop_assert!(completeness < 1e-12, "ΣΠ − I = {:e}", completeness);
    Ok(())
}

fn potential(seed: &[f64], len: usize) -> Vec<f64> {
    (0..len).map(|i| seed[i % seed.len()]).collect()
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn two_level_projectors(lambda in -0.95f64..0.95) {
        check_projectors(&build_two_level(lambda))?;
    }

    #[test]
    fn oscillator_projectors(omega in 0.2f64..1.5, xi in -0.5f64..0.5, n in 8usize..20) {
        check_projectors(&build_oscillator(omega, xi, n).unwrap())?;
    }

    #[test]
    fn hatano_nelson_projectors(len in 2usize..10, t in 0.3f64..2.0, alpha in -0.6f64..0.6, v in prop::collection::vec(-1.0f64..1.0, 1..4), periodic in any::<bool>()) {
        let b = if periodic { Boundary::Periodic } else { Boundary::Open };
        check_projectors(&build_hatano_nelson(len, t, alpha, &potential(&v, len), b).unwrap())?;
    }

    #[test]
    fn g_trace_is_the_matrix_trace(lambda in -0.9f64..0.9, re in prop::collection::vec(-1.0f64..1.0, 4), im in prop::collection::vec(-1.0f64..1.0, 4)) {
        let tol = Tolerances::default();
        let es = eigendecompose(&build_two_level(lambda), &tol).unwrap();
        let g = build_metric(&es, &tol).unwrap();
        let a = ComplexMatrix::from_fn(2, |(i, j)| C64::new(re[2 * i + j], im[2 * i + j])).unwrap();
        let gt = g_trace(&a, &es, &g).unwrap();
        prop_assert!((gt - a.trace()).norm() < 1e-10 * (1.0 + a.max_abs()));
    }

    #[test]
    fn periodic_chain_pairs_conjugates(len in 3usize..12, alpha in 0.1f64..0.8) {
        let tol = Tolerances::default();
        let h = build_hatano_nelson(len, 1.0, alpha, &vec![0.0; len], Boundary::Periodic).unwrap();
        let es = eigendecompose(&h, &tol).unwrap();
        let e = es.eigenvalues();
        let pairing = conjugate_pairing(e, 1e-8).expect("spectrum closes under conjugation");
        for (k, &p) in pairing.iter().enumerate() {
            prop_assert!((e[p] - e[k].conj()).norm() < 1e-8);
            prop_assert_eq!(pairing[p], k);
        }
        // reality of thermal quantities on a paired spectrum
        let st = ThermalState::gibbs(e, 1.0).unwrap();
        prop_assert!(st.partition().im.abs() < 1e-10 * st.partition().norm());
        st.internal_energy(1e-10).unwrap();
        st.entropy(1e-10).unwrap();
    }

    #[test]
    fn open_chain_is_real(len in 2usize..12, alpha in -1.0f64..1.0, v in prop::collection::vec(-1.0f64..1.0, 1..4)) {
        let h = build_hatano_nelson(len, 1.0, alpha, &potential(&v, len), Boundary::Open).unwrap();
        let es = eigendecompose(&h, &Tolerances::default()).unwrap();
        prop_assert_eq!(classify_spectrum(es.eigenvalues(), 1e-8).kind, SpectrumKind::AllReal);
    }

    #[test]
    fn metric_intertwines(lambda in -0.95f64..0.95) {
        let tol = Tolerances::default();
        let h = build_two_level(lambda);
        let g = build_metric(&eigendecompose(&h, &tol).unwrap(), &tol).unwrap();
        prop_assert!(g.positive_definite());
        prop_assert!(pseudotherm::linalg::pseudo_hermiticity_residual(&h, &g).unwrap() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    #[test]
    fn two_level_row_sums(li in -0.6f64..0.6, lf in -0.6f64..0.6, tau in 0.1f64..2.0, beta in 0.2f64..3.0) {
        let p = Protocol::linear(li, lf, tau).unwrap();
        let run = two_time_work(&ModelSpec::two_level(), &p, beta, &PropagationSettings::default()).unwrap();
        for s in run.transitions.overlap_row_sums() {
            prop_assert!((s - 1.0).abs() < 1e-8, "row sum {}", s);
        }
        prop_assert!(run.report.irreversible_work > -1e-8);
        prop_assert!(run.report.relative_residual < 1e-6);
    }

    #[test]
    fn oscillator_row_sums(wi in 0.4f64..1.0, wf in 0.4f64..1.0, xi in -0.4f64..0.4, tau in 0.2f64..1.0, n in 10usize..16) {
        let model = ModelSpec::oscillator(OscillatorParams::new(xi, n, wi)).unwrap();
        let p = Protocol::erf(wi, wf, tau, 2).unwrap();
        let s = PropagationSettings { integrator: Integrator::Magnus4, ..Default::default() };
        let run = two_time_work(&model, &p, 1.0, &s).unwrap();
        for r in run.transitions.overlap_row_sums() {
            prop_assert!((r - 1.0).abs() < 1e-8, "row sum {}", r);
        }
    }

    #[test]
    fn hatano_nelson_row_sums(len in 2usize..7, alpha in -0.5f64..0.5, ti in 0.5f64..1.5, tf in 0.5f64..1.5, tau in 0.2f64..1.5, v in prop::collection::vec(-0.5f64..0.5, 1..3)) {
        let model = ModelSpec::hatano_nelson(len, alpha, potential(&v, len), Boundary::Open).unwrap();
        let p = Protocol::linear(ti, tf, tau).unwrap();
        let run = two_time_work(&model, &p, 1.0, &PropagationSettings::default()).unwrap();
        for r in run.transitions.overlap_row_sums() {
            prop_assert!((r - 1.0).abs() < 1e-8, "row sum {}", r);
        }
        for (_, res) in &run.propagation.checkpoints {
            prop_assert!(*res < 1e-8);
        }
    }
}

#[test]
fn propagation_checkpoints_cover_the_window() {
    let p = Protocol::linear(0.0, 0.5, 1.0).unwrap();
    let r = propagate(&ModelSpec::two_level(), &p, &PropagationSettings::default()).unwrap();
    assert_eq!(r.checkpoints.len(), 16);
    assert!((r.checkpoints.last().unwrap().0 - 1.0).abs() < 1e-12);
}
