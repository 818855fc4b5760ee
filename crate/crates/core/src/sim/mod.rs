//! Time-domain simulation of the linear models and of the per-bus
//! nonlinear network, plus step-response metrics and pole/zero extraction.
//!
//! Frequency states are deviations from synchronous speed in rad/s. CSV
//! output appends the same signal in Hz and as an absolute frequency.

mod linear;
mod metrics;
mod nonlinear;
mod polezero;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::system::{BusId, SystemDescription};

pub use linear::{der_power_common_frequency, linear_step_response, simulate_linear, step_input, Integrator, LinearSystem};
pub use metrics::{step_metrics, StepMetrics, SETTLE_TOLERANCE};
pub use nonlinear::{simulate_nonlinear, simulate_nonlinear_with, NonlinearOptions};
pub use polezero::{pole_zero, PoleZero};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepScenario {
    /// Bus whose load steps up.
    pub bus: BusId,
    /// Load increase in pu (applied as a decrease of the bus injection).
    pub delta_p: f64,
    pub horizon: f64,
    pub dt: f64,
}

impl StepScenario {
    pub const DEFAULT_HORIZON: f64 = 60.0;

    /// Defaults: horizon 60 s, dt = min(τ)/20.
    pub fn with_defaults(system: &SystemDescription, bus: BusId, delta_p: f64) -> Self {
        Self { bus, delta_p, horizon: Self::DEFAULT_HORIZON, dt: system.min_turbine_tc() / 20.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.dt > 0.0 && self.dt <= self.horizon) {
            return Err(Error::InvalidArgument(format!(
                "need horizon > 0 and 0 < dt <= horizon (horizon {}, dt {})",
                self.horizon, self.dt
            )));
        }
        if !self.delta_p.is_finite() {
            return Err(Error::InvalidArgument("step magnitude must be finite".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> TimeGrid {
        TimeGrid::new(self.horizon, self.dt)
    }

    pub(crate) fn describe(&self) -> String {
        format!("step {:.6e} pu at bus {}, horizon {} s, dt {} s", self.delta_p, self.bus, self.horizon, self.dt)
    }
}

/// Uniform sample grid t_k = k·dt, k = 0..=n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub dt: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, dt: f64) -> Self {
        let steps = ((horizon / dt).round() as usize).max(1);
        Self { dt, steps }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| k as f64 * self.dt).collect()
    }
}

/// Piecewise-constant input: each entry holds from its start time until
/// the next entry.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSignal {
    pieces: Vec<(f64, DVector<f64>)>,
}

impl InputSignal {
    pub fn constant(u: DVector<f64>) -> Self {
        Self { pieces: vec![(f64::NEG_INFINITY, u)] }
    }

    pub fn piecewise(mut pieces: Vec<(f64, DVector<f64>)>) -> Self {
        assert!(!pieces.is_empty(), "input needs at least one piece");
        pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
        pieces[0].0 = f64::NEG_INFINITY;
        Self { pieces }
    }

    /// Value at time t (right-continuous; a small tolerance places grid
    /// points that land on a breakpoint after it).
    pub fn at(&self, t: f64) -> &DVector<f64> {
        let tol = 1e-12 * t.abs().max(1.0);
        let mut current = &self.pieces[0].1;
        for (start, u) in &self.pieces[1..] {
            if *start <= t + tol {
                current = u;
            } else {
                break;
            }
        }
        current
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].1.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Full,
    Reduced,
    Auxiliary,
    Nonlinear,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Full => "full",
            ModelKind::Reduced => "reduced",
            ModelKind::Auxiliary => "auxiliary",
            ModelKind::Nonlinear => "nonlinear",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub kind: ModelKind,
    pub times: Vec<f64>,
    pub labels: Vec<String>,
    /// One row per sample, one column per label.
    pub values: DMatrix<f64>,
    /// The first `n_states` columns are integrator states; the rest are
    /// derived outputs.
    pub n_states: usize,
    /// Column holding the (system) frequency deviation in rad/s.
    pub freq_index: usize,
    pub sync_freq: Option<f64>,
    pub metadata: BTreeMap<String, String>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j).iter().copied().collect()
    }

    pub fn column_by_label(&self, label: &str) -> Option<Vec<f64>> {
        self.labels.iter().position(|l| l == label).map(|j| self.column(j))
    }

    /// Frequency deviation series in rad/s.
    pub fn frequency(&self) -> Vec<f64> {
        self.column(self.freq_index)
    }

    /// Integrator state at sample k.
    pub fn state(&self, k: usize) -> DVector<f64> {
        self.values.row(k).columns(0, self.n_states).transpose()
    }

    pub fn same_grid(&self, other: &Trajectory) -> bool {
        self.times.len() == other.times.len()
            && self
                .times
                .iter()
                .zip(&other.times)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0))
    }

    /// CSV with a header of labels, time in the first column and every value
    /// printed with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time");
        for l in &self.labels {
            out.push(',');
            out.push_str(l);
        }
        if self.sync_freq.is_some() {
            out.push_str(",domega_hz,freq_hz");
        }
        out.push('\n');
        for (k, t) in self.times.iter().enumerate() {
            let _ = write!(out, "{t:.16e}");
            for j in 0..self.labels.len() {
                let _ = write!(out, ",{:.16e}", self.values[(k, j)]);
            }
            if let Some(ws) = self.sync_freq {
                let dw = self.values[(k, self.freq_index)];
                let _ = write!(out, ",{:.16e},{:.16e}", dw / (2.0 * PI), (ws + dw) / (2.0 * PI));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Builds the metadata shared by every trajectory for a system + scenario.
pub fn scenario_metadata(system: &SystemDescription, scenario: &StepScenario) -> BTreeMap<String, String> {
    let mut meta = BTreeMap::new();
    meta.insert("scenario".into(), scenario.describe());
    meta.insert("parameter_hash".into(), system.parameter_hash());
    if let Some(name) = &system.name {
        meta.insert("system".into(), name.clone());
    }
    if let Some(notes) = &system.notes {
        meta.insert("system_notes".into(), notes.clone());
    }
    meta.insert("frequency_units".into(), "rad/s deviation".into());
    meta
}
