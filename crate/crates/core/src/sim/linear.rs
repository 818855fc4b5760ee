use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::{InputSignal, ModelKind, TimeGrid, Trajectory};
use crate::error::{Error, Result};
use crate::fullorder::FullOrderModel;
use crate::reduced::{AuxiliaryModel, ReducedModel};
use crate::system::DerParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    /// Zero-order-hold discretisation through the matrix exponential.
    /// Falls back to RK4 when A is singular.
    Exact,
    Rk4,
}

/// ẋ = A x + B u with labelled states.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub state_labels: Vec<String>,
    pub kind: ModelKind,
}

impl From<&FullOrderModel> for LinearSystem {
    fn from(m: &FullOrderModel) -> Self {
        Self { a: m.a.clone(), b: m.b.clone(), state_labels: m.state_labels.clone(), kind: ModelKind::Full }
    }
}

impl From<&ReducedModel> for LinearSystem {
    fn from(m: &ReducedModel) -> Self {
        Self { a: m.a_red.clone(), b: m.b_red.clone(), state_labels: m.state_labels(), kind: ModelKind::Reduced }
    }
}

impl LinearSystem {
    pub fn auxiliary(aux: &AuxiliaryModel, full: &FullOrderModel) -> Self {
        let mut labels = vec!["domega".to_string()];
        labels.extend(full.state_labels[1..].iter().map(|l| l.replacen("pm_", "pm_bar_", 1)));
        Self { a: aux.a_bar.clone(), b: aux.b_bar.clone(), state_labels: labels, kind: ModelKind::Auxiliary }
    }

    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    pub fn derivative(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u
    }
}

fn rk4_step(sys: &LinearSystem, x: &DVector<f64>, bu: &DVector<f64>, h: f64) -> DVector<f64> {
    let f = |y: &DVector<f64>| &sys.a * y + bu;
    let k1 = f(x);
    let k2 = f(&(x + &k1 * (h / 2.0)));
    let k3 = f(&(x + &k2 * (h / 2.0)));
    let k4 = f(&(x + &k3 * h));
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Simulates on a uniform grid, holding the input at its value at the
/// start of each step.
pub fn simulate_linear(
    sys: &LinearSystem,
    input: &InputSignal,
    x0: &DVector<f64>,
    grid: &TimeGrid,
    integrator: Integrator,
) -> Result<Trajectory> {
    let n = sys.n_states();
    if x0.len() != n || input.dim() != sys.b.ncols() || sys.b.nrows() != n {
        return Err(Error::InvalidArgument("state, input, and matrix dimensions disagree".into()));
    }
    if !(grid.dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be > 0 (got {})", grid.dt)));
    }
    let times = grid.times();
    let dt = grid.dt;

    // Φ = e^{A dt}, Ψ = A⁻¹(Φ − I)
    let exact = match integrator {
        Integrator::Exact => {
            let phi = (&sys.a * dt).exp();
            let psi = sys
                .a
                .clone()
                .lu()
                .solve(&(&phi - DMatrix::identity(n, n)))
                .filter(|m| m.iter().all(|v| v.is_finite()));
            psi.map(|psi| (phi, psi))
        }
        Integrator::Rk4 => None,
    };
    let used = if exact.is_some() { "exact" } else { "rk4" };

    let mut values = DMatrix::zeros(times.len(), n);
    let mut x = x0.clone();
    values.row_mut(0).copy_from(&x.transpose());
    for k in 0..grid.steps {
        let u = input.at(times[k]);
        x = match &exact {
            Some((phi, psi)) => phi * &x + psi * (&sys.b * u),
            None => rk4_step(sys, &x, &(&sys.b * u), dt),
        };
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { time: times[k + 1] });
        }
        values.row_mut(k + 1).copy_from(&x.transpose());
    }

    let mut metadata = BTreeMap::new();
    metadata.insert("integrator".into(), used.to_string());
    metadata.insert("dt".into(), format!("{dt}"));
    Ok(Trajectory {
        kind: sys.kind,
        times,
        labels: sys.state_labels.clone(),
        values,
        n_states: n,
        freq_index: 0,
        sync_freq: None,
        metadata,
    })
}

/// Response of a deviation model, starting at rest, to a load increase of
/// `delta_p` pu at t = 0. The input is u = [−delta_p, 0, ...].
pub fn linear_step_response(sys: &LinearSystem, delta_p: f64, grid: &TimeGrid, integrator: Integrator) -> Result<Trajectory> {
    let input = step_input(sys.b.ncols(), delta_p);
    simulate_linear(sys, &input, &DVector::zeros(sys.n_states()), grid, integrator)
}

/// Constant input u = [−delta_p, 0, ...].
pub fn step_input(dim: usize, delta_p: f64) -> InputSignal {
    let mut u = DVector::zeros(dim);
    u[0] = -delta_p;
    InputSignal::constant(u)
}

/// Output change of each DER, −(D_d Δω + M_d Δω̇), when every bus shares
/// the model's frequency. One series per DER, aligned with `traj.times`.
pub fn der_power_common_frequency(
    traj: &Trajectory,
    sys: &LinearSystem,
    input: &InputSignal,
    ders: &[DerParams],
) -> Vec<Vec<f64>> {
    let (dw, dw_dot): (Vec<f64>, Vec<f64>) = (0..traj.len())
        .map(|k| {
            let x = traj.state(k);
            let xdot = sys.derivative(&x, input.at(traj.times[k]));
            (x[0], xdot[0])
        })
        .unzip();
    ders.iter()
        .map(|d| dw.iter().zip(&dw_dot).map(|(w, wd)| -(d.droop * w + d.synthetic_inertia * wd)).collect())
        .collect()
}
