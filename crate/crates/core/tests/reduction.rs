mod common;

use freqlump_core::analysis::{bound_check, reduce, reduce_with_tau, simulate_auxiliary, simulate_pair};
use freqlump_core::bound::{decay_envelope, evaluate_bound, DecayEnvelope};
use freqlump_core::fullorder::{build_full_model_from_parts, Aggregates};
use freqlump_core::sim::{step_input, InputSignal, Integrator, LinearSystem, StepScenario, TimeGrid};
use freqlump_core::system::SystemDescription;
use freqlump_core::Error;
use nalgebra::DVector;

use common::{designed_four_bus, four_bus_step_pu};

fn scenario(dp: f64) -> StepScenario {
    StepScenario { bus: 3, delta_p: dp, horizon: 60.0, dt: 0.2 }
}

#[test]
fn auxiliary_sum_reproduces_reduced_model() {
    for sys in [SystemDescription::four_bus(), designed_four_bus().0] {
        let red = reduce(&sys).unwrap();
        let sc = scenario(four_bus_step_pu());
        let (_, reduced) = simulate_pair(&sys, &red, &sc, Integrator::Exact).unwrap();
        let aux = simulate_auxiliary(&sys, &red, &sc, Integrator::Exact).unwrap();
        for k in 0..aux.len() {
            let pm_sum = aux.values[(k, 1)] + aux.values[(k, 2)];
            assert!((aux.values[(k, 0)] - reduced.values[(k, 0)]).abs() < 1e-9);
            assert!((pm_sum - reduced.values[(k, 1)]).abs() < 1e-9);
        }
        assert_eq!(aux.labels, ["domega", "pm_bar_1", "pm_bar_2"]);
    }
}

#[test]
fn equal_time_constants_give_zero_bound_and_error() {
    let mut sys = SystemDescription::four_bus();
    sys.generators[1].turbine_tc = 4.0;
    let red = reduce_with_tau(&sys, 4.0).unwrap();
    let report = bound_check(&sys, &red, &scenario(four_bus_step_pu())).unwrap();
    assert_eq!(report.e_norm, 0.0);
    assert!(report.bound_series.iter().all(|b| *b == 0.0));
    assert!(report.error_series.iter().all(|e| *e < 1e-15));
    assert!(report.satisfied);
    // The optimiser also lands on the shared value.
    assert_eq!(reduce(&sys).unwrap().tau.tau_bar, 4.0);
}

#[test]
fn zero_input_gives_zero_series() {
    let sys = SystemDescription::four_bus();
    let red = reduce(&sys).unwrap();
    let report = bound_check(&sys, &red, &scenario(0.0)).unwrap();
    assert!(report.error_series.iter().chain(&report.bound_series).all(|v| *v == 0.0));
    assert!(report.satisfied);
}

#[test]
fn bound_holds_across_step_sizes_and_is_monotone() {
    for sys in [SystemDescription::four_bus(), designed_four_bus().0] {
        let red = reduce(&sys).unwrap();
        for scale in [0.25, 1.0, 4.0] {
            let report = bound_check(&sys, &red, &scenario(scale * four_bus_step_pu())).unwrap();
            assert!(report.satisfied, "scale {scale}");
            assert!(report.bound_series.windows(2).all(|w| w[1] >= w[0]));
            assert!(report.error_series.iter().any(|e| *e > 0.0));
        }
    }
}

#[test]
fn bound_scales_linearly_with_e_norm() {
    let sys = SystemDescription::four_bus();
    let red = reduce(&sys).unwrap();
    let sc = scenario(four_bus_step_pu());
    let (full, reduced) = simulate_pair(&sys, &red, &sc, Integrator::Exact).unwrap();
    let input = step_input(3, sc.delta_p);
    let env = decay_envelope(&red.auxiliary.a_bar).unwrap();
    let one = evaluate_bound(&full, &reduced, &input, &red.full, red.e_norm, env).unwrap();
    let two = evaluate_bound(&full, &reduced, &input, &red.full, 2.0 * red.e_norm, env).unwrap();
    for (a, b) in one.bound_series.iter().zip(&two.bound_series) {
        assert_eq!(2.0 * a, *b);
    }
    let csv = one.to_csv();
    assert!(csv.starts_with("t,error,bound\n"));
    assert_eq!(csv.lines().count(), full.len() + 1);
}

#[test]
fn mismatched_grids_rejected() {
    let sys = SystemDescription::four_bus();
    let red = reduce(&sys).unwrap();
    let (full, _) = simulate_pair(&sys, &red, &scenario(1e-3), Integrator::Exact).unwrap();
    let (_, reduced) =
        simulate_pair(&sys, &red, &StepScenario { dt: 0.1, ..scenario(1e-3) }, Integrator::Exact).unwrap();
    let env = decay_envelope(&red.auxiliary.a_bar).unwrap();
    let err = evaluate_bound(&full, &reduced, &step_input(3, 1e-3), &red.full, red.e_norm, env).unwrap_err();
    assert!(matches!(err, Error::GridMismatch(_)));
}

#[test]
fn singular_a_rejected() {
    let agg = Aggregates { m_eff: 1.0, d_eff: 0.0, r_g_eff: 0.0, p_load: 0.0, gen_inertia: 1.0, gen_damping: 0.0 };
    let full = build_full_model_from_parts(&agg, &[2.0], &[0.0]).unwrap();
    let sys = LinearSystem::from(&full);
    let input = InputSignal::constant(DVector::zeros(2));
    let tr = freqlump_core::sim::simulate_linear(&sys, &input, &DVector::zeros(2), &TimeGrid::new(1.0, 0.1), Integrator::Exact)
        .unwrap();
    let env = DecayEnvelope { k: 1.0, lambda: 1.0 };
    let err = evaluate_bound(&tr, &tr, &input, &full, 0.0, env).unwrap_err();
    assert!(matches!(err, Error::SingularMatrix(_)));
    assert!(matches!(decay_envelope(&full.a), Err(Error::NotHurwitz { .. })));
}
