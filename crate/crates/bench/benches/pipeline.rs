use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use freqlump_bench::designed_four_bus;
use freqlump_core::analysis::{reduce, simulate_pair};
use freqlump_core::design::{design, DesignTargets, TransientTarget};
use freqlump_core::network::solve_equilibrium;
use freqlump_core::reduced::optimize_tau_bar;
use freqlump_core::sim::{simulate_nonlinear, Integrator, StepScenario};
use freqlump_core::system::SystemDescription;

fn scenario(sys: &SystemDescription) -> StepScenario {
    StepScenario { bus: 3, delta_p: sys.mw_to_pu(0.02), horizon: 60.0, dt: 0.2 }
}

fn tau_bar(c: &mut Criterion) {
    c.bench_function("optimize_tau_bar", |b| {
        b.iter(|| optimize_tau_bar(black_box(&[4.0, 10.0]), black_box(&[0.217, 0.0868])).unwrap())
    });
}

fn linear(c: &mut Criterion) {
    let sys = designed_four_bus();
    let red = reduce(&sys).unwrap();
    let sc = scenario(&sys);
    c.bench_function("simulate_pair_exact_60s", |b| {
        b.iter(|| simulate_pair(&sys, &red, black_box(&sc), Integrator::Exact).unwrap())
    });
    c.bench_function("simulate_pair_rk4_60s", |b| {
        b.iter(|| simulate_pair(&sys, &red, black_box(&sc), Integrator::Rk4).unwrap())
    });
}

fn nonlinear(c: &mut Criterion) {
    let sys = designed_four_bus();
    let angles = solve_equilibrium(&sys).unwrap();
    let sc = scenario(&sys);
    c.bench_function("simulate_nonlinear_60s", |b| b.iter(|| simulate_nonlinear(&sys, &angles, black_box(&sc)).unwrap()));
}

fn design_step(c: &mut Criterion) {
    let sys = SystemDescription::four_bus();
    let tau = reduce(&sys).unwrap().tau.tau_bar;
    let targets = DesignTargets { r_reg: 0.4644, transient: TransientTarget::Zeta(0.7) };
    c.bench_function("design", |b| b.iter(|| design(&sys, black_box(targets), tau).unwrap()));
}

criterion_group!(benches, tau_bar, linear, nonlinear, design_step);
criterion_main!(benches);
