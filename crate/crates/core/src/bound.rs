//! Error bound between the full model and its lumped reduction.
//!
//! With E = (Γ − I)A and ‖e^{ΓA t}‖₂ ≤ k e^{−λt},
//!
//! ```text
//! |Δω(t) − Δω_red(t)| ≤ ‖E‖₂ (k/λ) sup_{0≤s≤t} (‖x(s)‖₂ + ‖A⁻¹Bu(s)‖₂)
//! ```

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fullorder::{FullOrderModel, DIAGONALIZABILITY_THRESHOLD, HURWITZ_MARGIN};
use crate::linalg;
use crate::sim::{InputSignal, Trajectory};

/// Absolute slack used when comparing the error against the bound.
pub const BOUND_SLACK: f64 = 1e-12;

/// ‖(Γ − I)A‖₂.
pub fn perturbation_norm(full: &FullOrderModel, gamma: &DMatrix<f64>) -> Result<f64> {
    let n = full.n_states();
    if gamma.shape() != (n, n) {
        return Err(Error::InvalidArgument(format!("gamma is {:?}, model has {n} states", gamma.shape())));
    }
    Ok(linalg::spectral_norm(&((gamma - DMatrix::identity(n, n)) * &full.a)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayEnvelope {
    pub k: f64,
    pub lambda: f64,
}

impl DecayEnvelope {
    pub fn at(&self, t: f64) -> f64 {
        self.k * (-self.lambda * t).exp()
    }
}

/// t = 0 followed by log-spaced samples up to 10/λ.
pub fn envelope_sample_times(lambda: f64, count: usize) -> Vec<f64> {
    let t_max = 10.0 / lambda;
    let t_min = 1e-4 * t_max;
    let mut out = vec![0.0];
    let m = count.saturating_sub(1).max(2);
    out.extend((0..m).map(|i| t_min * (t_max / t_min).powf(i as f64 / (m - 1) as f64)));
    out
}

/// λ is the negated spectral abscissa and k the eigenvector condition
/// number, raised if necessary so that the sampled envelope holds.
pub fn decay_envelope(a_bar: &DMatrix<f64>) -> Result<DecayEnvelope> {
    let abscissa = linalg::spectral_abscissa(a_bar)?;
    if abscissa >= -HURWITZ_MARGIN {
        return Err(Error::NotHurwitz { abscissa });
    }
    let kappa = linalg::eigenvector_condition(a_bar)?;
    if !(kappa <= DIAGONALIZABILITY_THRESHOLD) {
        return Err(Error::EffectivelyDefective { condition: kappa, threshold: DIAGONALIZABILITY_THRESHOLD });
    }
    let lambda = -abscissa;
    let mut k = kappa.max(1.0);
    for t in envelope_sample_times(lambda, 200) {
        let norm = linalg::spectral_norm(&(a_bar * t).exp());
        k = k.max(norm * (lambda * t).exp());
    }
    Ok(DecayEnvelope { k, lambda })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub e_norm: f64,
    pub envelope: DecayEnvelope,
    pub times: Vec<f64>,
    pub bound_series: Vec<f64>,
    pub error_series: Vec<f64>,
    pub satisfied: bool,
}

impl BoundReport {
    pub fn violations(&self) -> usize {
        self.error_series.iter().zip(&self.bound_series).filter(|(e, b)| **e > **b + BOUND_SLACK).count()
    }

    pub fn max_ratio(&self) -> f64 {
        self.error_series
            .iter()
            .zip(&self.bound_series)
            .filter(|(_, b)| **b > 0.0)
            .map(|(e, b)| e / b)
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,error,bound\n");
        for ((t, e), b) in self.times.iter().zip(&self.error_series).zip(&self.bound_series) {
            let _ = writeln!(out, "{t:.16e},{e:.16e},{b:.16e}");
        }
        out
    }
}

/// Evaluates the bound along a full-model trajectory and compares it with
/// the frequency gap to a reduced (or auxiliary) trajectory on the same grid.
pub fn evaluate_bound(
    full_traj: &Trajectory,
    reduced_traj: &Trajectory,
    input: &InputSignal,
    full: &FullOrderModel,
    e_norm: f64,
    envelope: DecayEnvelope,
) -> Result<BoundReport> {
    if !full_traj.same_grid(reduced_traj) {
        return Err(Error::GridMismatch(format!(
            "{} samples vs {} samples",
            full_traj.len(),
            reduced_traj.len()
        )));
    }
    if full_traj.n_states != full.n_states() || input.dim() != full.b.ncols() {
        return Err(Error::InvalidArgument("trajectory or input does not match the full model".into()));
    }
    let lu = full.a.clone().lu();
    if !lu.is_invertible() {
        return Err(Error::SingularMatrix("full-model A has no inverse".into()));
    }
    let scale = e_norm * envelope.k / envelope.lambda;

    let f_full = full_traj.frequency();
    let f_red = reduced_traj.frequency();
    let mut sup: f64 = 0.0;
    let mut bound_series = Vec::with_capacity(full_traj.len());
    let mut error_series = Vec::with_capacity(full_traj.len());
    for (k, t) in full_traj.times.iter().enumerate() {
        let forced = lu.solve(&(&full.b * input.at(*t))).expect("invertible");
        sup = sup.max(full_traj.state(k).norm() + forced.norm());
        bound_series.push(scale * sup);
        error_series.push((f_full[k] - f_red[k]).abs());
    }
    let satisfied = error_series.iter().zip(&bound_series).all(|(e, b)| *e <= *b + BOUND_SLACK);
    Ok(BoundReport {
        e_norm,
        envelope,
        times: full_traj.times.clone(),
        bound_series,
        error_series,
        satisfied,
    })
}
