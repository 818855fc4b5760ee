//! End-to-end helpers: reduction, paired linear runs, bound checks and
//! pole sweeps.

use std::fmt::Write as _;

use crate::bound::{decay_envelope, evaluate_bound, perturbation_norm, BoundReport};
use crate::error::Result;
use crate::fullorder::{
    aggregate, build_full_model, build_full_model_from_parts, diagonalizability_report, is_hurwitz, HurwitzReport,
    FullOrderModel, DIAGONALIZABILITY_THRESHOLD,
};
use crate::reduced::{build_auxiliary, build_reduced, optimize_tau_bar, AuxiliaryModel, ReducedModel, TauBarResult};
use crate::sim::{
    linear_step_response, scenario_metadata, step_input, Integrator, LinearSystem, PoleZero, StepScenario, Trajectory,
};
use crate::system::SystemDescription;

#[derive(Debug, Clone)]
pub struct Reduction {
    pub tau: TauBarResult,
    pub full: FullOrderModel,
    pub auxiliary: AuxiliaryModel,
    pub reduced: ReducedModel,
    pub e_norm: f64,
    pub full_hurwitz: HurwitzReport,
    pub aux_hurwitz: HurwitzReport,
    pub full_condition: f64,
    pub aux_condition: f64,
}

/// Optimises τ̄ and builds every model.
pub fn reduce(system: &SystemDescription) -> Result<Reduction> {
    let agg = aggregate(system);
    let full = build_full_model(system, &agg)?;
    let tau = optimize_tau_bar(&full.taus, &full.droops)?;
    assemble(full, tau)
}

/// Builds every model around a given τ̄ instead of the optimised one.
pub fn reduce_with_tau(system: &SystemDescription, tau_bar: f64) -> Result<Reduction> {
    let agg = aggregate(system);
    let full = build_full_model(system, &agg)?;
    let objective_value = crate::reduced::tau_objective(tau_bar, &full.taus, &full.droops)?;
    assemble(full, TauBarResult { tau_bar, objective_value, search_trace: Vec::new() })
}

fn assemble(full: FullOrderModel, tau: TauBarResult) -> Result<Reduction> {
    let auxiliary = build_auxiliary(&full, tau.tau_bar)?;
    let reduced = build_reduced(&full.aggregates, tau.tau_bar)?;
    Ok(Reduction {
        e_norm: perturbation_norm(&full, &auxiliary.gamma)?,
        full_hurwitz: is_hurwitz(&full.a)?,
        aux_hurwitz: is_hurwitz(&auxiliary.a_bar)?,
        full_condition: diagonalizability_report(&full.a)?,
        aux_condition: diagonalizability_report(&auxiliary.a_bar)?,
        tau,
        full,
        auxiliary,
        reduced,
    })
}

impl Reduction {
    pub fn report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "tau_bar            {:.12} s", self.tau.tau_bar);
        let _ = writeln!(s, "objective          {:.12e}", self.tau.objective_value);
        let _ = writeln!(s, "||(Gamma - I)A||_2 {:.12e}", self.e_norm);
        for (name, h, kappa) in [
            ("A", &self.full_hurwitz, self.full_condition),
            ("Gamma A", &self.aux_hurwitz, self.aux_condition),
        ] {
            let _ = writeln!(
                s,
                "{name:<8} hurwitz={} abscissa={:.6e} eigvec_cond={:.6e} diagonalizable={}",
                h.is_hurwitz,
                h.spectral_abscissa,
                kappa,
                kappa <= DIAGONALIZABILITY_THRESHOLD
            );
        }
        s
    }
}

fn annotate(mut traj: Trajectory, system: &SystemDescription, scenario: &StepScenario) -> Trajectory {
    traj.sync_freq = Some(system.sync_freq);
    traj.metadata.extend(scenario_metadata(system, scenario));
    traj
}

/// Full and reduced step responses on the scenario grid, from rest.
pub fn simulate_pair(
    system: &SystemDescription,
    red: &Reduction,
    scenario: &StepScenario,
    integrator: Integrator,
) -> Result<(Trajectory, Trajectory)> {
    scenario.validate()?;
    let grid = scenario.grid();
    let full = linear_step_response(&LinearSystem::from(&red.full), scenario.delta_p, &grid, integrator)?;
    let reduced = linear_step_response(&LinearSystem::from(&red.reduced), scenario.delta_p, &grid, integrator)?;
    Ok((annotate(full, system, scenario), annotate(reduced, system, scenario)))
}

pub fn simulate_auxiliary(
    system: &SystemDescription,
    red: &Reduction,
    scenario: &StepScenario,
    integrator: Integrator,
) -> Result<Trajectory> {
    scenario.validate()?;
    let sys = LinearSystem::auxiliary(&red.auxiliary, &red.full);
    let traj = linear_step_response(&sys, scenario.delta_p, &scenario.grid(), integrator)?;
    Ok(annotate(traj, system, scenario))
}

/// Refuses unless A and ΓA are Hurwitz and diagonalizable, then evaluates
/// the bound for the scenario using exact stepping.
pub fn bound_check(system: &SystemDescription, red: &Reduction, scenario: &StepScenario) -> Result<BoundReport> {
    decay_envelope(&red.full.a)?;
    let envelope = decay_envelope(&red.auxiliary.a_bar)?;
    let (full, reduced) = simulate_pair(system, red, scenario, Integrator::Exact)?;
    let input = step_input(red.full.b.ncols(), scenario.delta_p);
    evaluate_bound(&full, &reduced, &input, &red.full, red.e_norm, envelope)
}

#[derive(Debug)]
pub struct SweepPoint {
    pub d_mult: f64,
    pub m_mult: f64,
    pub d_eff: f64,
    pub m_eff: f64,
    pub full: Result<PoleZero>,
    pub reduced: Result<PoleZero>,
}

/// Poles and zeros of both models with D_eff and M_eff scaled by every
/// pair of multipliers. Row-major in (d, m).
pub fn pole_sweep(system: &SystemDescription, tau_bar: f64, d_mults: &[f64], m_mults: &[f64]) -> Result<Vec<SweepPoint>> {
    let base = aggregate(system);
    let full = build_full_model(system, &base)?;
    let mut out = Vec::with_capacity(d_mults.len() * m_mults.len());
    for &dm in d_mults {
        for &mm in m_mults {
            let agg = base.with_effective(base.m_eff * mm, base.d_eff * dm);
            let full_pz = build_full_model_from_parts(&agg, &full.taus, &full.droops).and_then(|m| PoleZero::of_full(&m));
            let red_pz = build_reduced(&agg, tau_bar).and_then(|m| PoleZero::of_reduced(&m));
            out.push(SweepPoint {
                d_mult: dm,
                m_mult: mm,
                d_eff: agg.d_eff,
                m_eff: agg.m_eff,
                full: full_pz,
                reduced: red_pz,
            });
        }
    }
    Ok(out)
}

/// `count` evenly spaced values over [lo, hi] (just `lo` when count is 1).
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        n => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}
