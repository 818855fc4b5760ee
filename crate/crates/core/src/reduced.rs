//! Lumped second-order model and the choice of its governor time constant.
//!
//! The lumped time constant τ̄ minimises ‖(Γ̃(τ̂) − I)Ã‖₂ with
//! Γ̃(τ̂) = diag(τ)/τ̂ and Ã = [A_R A_τ], where A_R = A_τ R_G is a single
//! column. This is the governor part of (Γ − I)A, whose first row
//! vanishes, so it depends only on τ and R_G, never on M_eff or D_eff.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fullorder::{Aggregates, FullOrderModel};
use crate::linalg;

/// Spectral norm of (Γ̃(τ̂) − I)Ã for the given generator data.
pub fn tau_objective(tau_hat: f64, taus: &[f64], droops: &[f64]) -> Result<f64> {
    if !(tau_hat > 0.0) {
        return Err(Error::InvalidTau(tau_hat));
    }
    check_generator_data(taus, droops)?;
    Ok(linalg::spectral_norm(&scaled_governor_block(tau_hat, taus, droops)))
}

/// The |G| x (|G|+1) matrix (Γ̃(τ̂) − I)Ã.
pub fn scaled_governor_block(tau_hat: f64, taus: &[f64], droops: &[f64]) -> DMatrix<f64> {
    let g = taus.len();
    let mut m = DMatrix::zeros(g, g + 1);
    for k in 0..g {
        let scale = taus[k] / tau_hat - 1.0;
        m[(k, 0)] = scale * (-droops[k] / taus[k]);
        m[(k, k + 1)] = scale * (-1.0 / taus[k]);
    }
    m
}

fn check_generator_data(taus: &[f64], droops: &[f64]) -> Result<()> {
    if taus.is_empty() || taus.len() != droops.len() {
        return Err(Error::InvalidArgument("need one (tau, droop) pair per generator".into()));
    }
    if let Some(t) = taus.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::InvalidTau(*t));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub struct TauSearch {
    /// Log-spaced samples over [min(τ)/10, 10·max(τ)].
    pub grid_points: usize,
    /// Golden-section stopping width relative to the bracket midpoint.
    pub rel_tol: f64,
}

impl Default for TauSearch {
    fn default() -> Self {
        Self { grid_points: 2000, rel_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauBarResult {
    pub tau_bar: f64,
    pub objective_value: f64,
    /// (τ̂, objective) for every grid sample, in increasing τ̂.
    pub search_trace: Vec<(f64, f64)>,
}

impl TauBarResult {
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("tau_hat,objective\n");
        for (t, v) in &self.search_trace {
            let _ = writeln!(out, "{t:.16e},{v:.16e}");
        }
        out
    }
}

pub fn optimize_tau_bar(taus: &[f64], droops: &[f64]) -> Result<TauBarResult> {
    optimize_tau_bar_with(taus, droops, TauSearch::default())
}

/// Dense logarithmic grid, then golden-section refinement inside the
/// bracket around the best grid sample. The individual τ_g are also
/// evaluated since the objective vanishes exactly there when all τ_g agree.
pub fn optimize_tau_bar_with(taus: &[f64], droops: &[f64], search: TauSearch) -> Result<TauBarResult> {
    check_generator_data(taus, droops)?;
    if search.grid_points < 3 {
        return Err(Error::InvalidArgument("tau search needs at least 3 grid points".into()));
    }
    let f = |t: f64| linalg::spectral_norm(&scaled_governor_block(t, taus, droops));

    let lo = taus.iter().copied().fold(f64::INFINITY, f64::min) / 10.0;
    let hi = taus.iter().copied().fold(0.0, f64::max) * 10.0;
    let (log_lo, log_hi) = (lo.ln(), hi.ln());
    let n = search.grid_points;
    let trace: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let t = (log_lo + (log_hi - log_lo) * i as f64 / (n - 1) as f64).exp();
            (t, f(t))
        })
        .collect();

    // Ties resolve to the smaller τ̂.
    let mut best_idx = 0;
    for (i, s) in trace.iter().enumerate() {
        if s.1 < trace[best_idx].1 {
            best_idx = i;
        }
    }
    let mut best = trace[best_idx];
    let consider = |t: f64, v: f64, best: &mut (f64, f64)| {
        if v < best.1 || (v == best.1 && t < best.0) {
            *best = (t, v);
        }
    };

    let mut a = trace[best_idx.saturating_sub(1)].0;
    let mut b = trace[(best_idx + 1).min(n - 1)].0;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a) > search.rel_tol * 0.5 * (a + b) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    consider(c, fc, &mut best);
    consider(d, fd, &mut best);
    let mid = 0.5 * (a + b);
    consider(mid, f(mid), &mut best);
    for &t in taus {
        consider(t, f(t), &mut best);
    }

    Ok(TauBarResult { tau_bar: best.0, objective_value: best.1, search_trace: trace })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedModel {
    pub a_red: DMatrix<f64>,
    pub b_red: DMatrix<f64>,
    pub tau_bar: f64,
    pub aggregates: Aggregates,
}

impl ReducedModel {
    pub fn state_labels(&self) -> Vec<String> {
        vec!["domega".into(), "pm_red".into()]
    }

    pub fn frequency_channel(&self) -> (DVector<f64>, DVector<f64>) {
        (self.b_red.column(0).into_owned(), DVector::from_vec(vec![1.0, 0.0]))
    }
}

pub fn build_reduced(agg: &Aggregates, tau_bar: f64) -> Result<ReducedModel> {
    if !(agg.m_eff > 0.0) {
        return Err(Error::DegenerateModel(format!("effective inertia must be > 0 (got {})", agg.m_eff)));
    }
    if !(tau_bar > 0.0) {
        return Err(Error::InvalidTau(tau_bar));
    }
    let inv_m = 1.0 / agg.m_eff;
    let inv_t = 1.0 / tau_bar;
    let a_red = DMatrix::from_row_slice(2, 2, &[-agg.d_eff * inv_m, inv_m, -agg.r_g_eff * inv_t, -inv_t]);
    let b_red = DMatrix::from_row_slice(2, 2, &[inv_m, 0.0, 0.0, inv_t]);
    Ok(ReducedModel { a_red, b_red, tau_bar, aggregates: *agg })
}

/// Full-dimension model with every governor time constant replaced by τ̄.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryModel {
    pub a_bar: DMatrix<f64>,
    pub b_bar: DMatrix<f64>,
    /// Γ = diag{1, diag(τ)/τ̄}.
    pub gamma: DMatrix<f64>,
    pub tau_bar: f64,
}

pub fn gamma_matrix(taus: &[f64], tau_bar: f64) -> DMatrix<f64> {
    let mut diag = vec![1.0];
    diag.extend(taus.iter().map(|t| t / tau_bar));
    DMatrix::from_diagonal(&DVector::from_vec(diag))
}

pub fn build_auxiliary(full: &FullOrderModel, tau_bar: f64) -> Result<AuxiliaryModel> {
    if !(tau_bar > 0.0) {
        return Err(Error::InvalidTau(tau_bar));
    }
    let gamma = gamma_matrix(&full.taus, tau_bar);
    let a_bar = &gamma * &full.a;
    let b_bar = &gamma * &full.b;
    Ok(AuxiliaryModel { a_bar, b_bar, gamma, tau_bar })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fullorder::{aggregate, build_full_model};
    use crate::system::SystemDescription;

    #[test]
    fn objective_zero_when_tau_hat_matches() {
        assert_eq!(tau_objective(3.0, &[3.0, 3.0, 3.0], &[0.1, 0.2, 0.3]).unwrap(), 0.0);
    }

    #[test]
    fn objective_single_row() {
        let v = tau_objective(1.0, &[2.0], &[1.0]).unwrap();
        assert!((v - 2f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn objective_rejects_nonpositive_tau_hat() {
        assert!(matches!(tau_objective(0.0, &[1.0], &[1.0]), Err(Error::InvalidTau(_))));
        assert!(matches!(tau_objective(-2.0, &[1.0], &[1.0]), Err(Error::InvalidTau(_))));
    }

    #[test]
    fn optimizer_exact_cases() {
        let r = optimize_tau_bar(&[5.0, 5.0], &[0.3, 0.01]).unwrap();
        assert_eq!(r.tau_bar, 5.0);
        assert_eq!(r.objective_value, 0.0);
        let r = optimize_tau_bar(&[7.5], &[0.2]).unwrap();
        assert_eq!((r.tau_bar, r.objective_value), (7.5, 0.0));
    }

    #[test]
    fn optimizer_beats_every_sample() {
        let r = optimize_tau_bar(&[4.0, 10.0], &[0.217, 0.0868]).unwrap();
        assert_eq!(r.search_trace.len(), 2000);
        assert!(r.search_trace.iter().all(|s| r.objective_value <= s.1));
        assert_eq!(r.objective_value, tau_objective(r.tau_bar, &[4.0, 10.0], &[0.217, 0.0868]).unwrap());
        assert!(r.trace_csv().starts_with("tau_hat,objective\n"));
    }

    #[test]
    fn reduced_unit_model() {
        let agg = Aggregates { m_eff: 1.0, d_eff: 1.0, r_g_eff: 1.0, p_load: 0.0, gen_inertia: 1.0, gen_damping: 1.0 };
        let r = build_reduced(&agg, 1.0).unwrap();
        assert_eq!(r.a_red, DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, -1.0, -1.0]));
        assert_eq!(r.b_red, DMatrix::identity(2, 2));
        let zero = Aggregates { m_eff: 0.0, ..agg };
        assert!(matches!(build_reduced(&zero, 1.0), Err(Error::DegenerateModel(_))));
    }

    #[test]
    fn reduced_trace_identity() {
        let agg = aggregate(&SystemDescription::four_bus());
        let r = build_reduced(&agg, 5.3).unwrap();
        assert!((r.a_red.trace() - (-agg.d_eff / agg.m_eff - 1.0 / 5.3)).abs() < 1e-15);
    }

    #[test]
    fn auxiliary_first_row_untouched() {
        let sys = SystemDescription::four_bus();
        let full = build_full_model(&sys, &aggregate(&sys)).unwrap();
        let aux = build_auxiliary(&full, 5.69).unwrap();
        let diff = &aux.a_bar - &full.a;
        assert!(diff.row(0).iter().all(|v| *v == 0.0));
        assert!(diff.rows(1, 2).iter().any(|v| *v != 0.0));

        let mut same = sys.clone();
        same.generators[1].turbine_tc = 4.0;
        let full = build_full_model(&same, &aggregate(&same)).unwrap();
        let aux = build_auxiliary(&full, 4.0).unwrap();
        assert_eq!(aux.gamma, DMatrix::identity(3, 3));
        assert_eq!(aux.a_bar, full.a);
    }
}
