use super::Trajectory;
use crate::error::{Error, Result};

/// Maximum peak-to-peak variation allowed over the final 10% of a
/// trajectory before it counts as settled.
pub const SETTLE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepMetrics {
    pub nadir: f64,
    pub nadir_time: f64,
    /// Mean of the final 10% window.
    pub steady_state: f64,
    /// Peak excursion past the steady state, as a fraction of |steady_state|.
    pub overshoot: f64,
    /// Time after which the signal stays within ±2% of the steady state.
    pub settling_time_2pct: f64,
}

pub fn step_metrics(traj: &Trajectory, freq_index: usize) -> Result<StepMetrics> {
    if freq_index >= traj.labels.len() {
        return Err(Error::InvalidArgument(format!("column {freq_index} out of range")));
    }
    if traj.is_empty() {
        return Err(Error::InvalidArgument("empty trajectory".into()));
    }
    let x = traj.column(freq_index);
    let n = x.len();
    let window = &x[n - (n / 10).max(1)..];
    let (lo, hi) = window.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    if hi - lo > SETTLE_TOLERANCE {
        return Err(Error::NotSettled { variation: hi - lo, tolerance: SETTLE_TOLERANCE });
    }
    let steady_state = window.iter().sum::<f64>() / window.len() as f64;

    let mut nadir_idx = 0;
    for (k, v) in x.iter().enumerate() {
        if *v < x[nadir_idx] {
            nadir_idx = k;
        }
    }

    let overshoot = if steady_state != 0.0 {
        let s = steady_state.signum();
        let peak = x.iter().map(|v| s * (v - steady_state)).fold(0.0, f64::max);
        peak / steady_state.abs()
    } else {
        0.0
    };

    let band = 0.02 * steady_state.abs();
    let settling_time_2pct = match x.iter().rposition(|v| (v - steady_state).abs() > band) {
        Some(k) if k + 1 < n => traj.times[k + 1],
        Some(k) => traj.times[k],
        None => traj.times[0],
    };

    Ok(StepMetrics {
        nadir: x[nadir_idx],
        nadir_time: traj.times[nadir_idx],
        steady_state,
        overshoot,
        settling_time_2pct,
    })
}
