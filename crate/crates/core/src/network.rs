//! Lossless transmission network: branch flows and the pre-disturbance
//! angle equilibrium.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::system::{BusId, Line, SystemDescription};

/// Real and reactive flow leaving the `from` end of a purely reactive line.
pub fn branch_flow(line: &Line, angle_from: f64, angle_to: f64, vmag_from: f64, vmag_to: f64) -> (f64, f64) {
    let b = 1.0 / line.reactance;
    let d = angle_from - angle_to;
    let p = vmag_from * vmag_to * b * d.sin();
    let q = vmag_from * vmag_from * b - vmag_from * vmag_to * b * d.cos();
    (p, q)
}

/// Index-based view of the network used by the solvers: one entry per line
/// with the coupling |V_i||V_j|/x.
#[derive(Debug, Clone)]
pub struct Topology {
    pub n_buses: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl Topology {
    pub fn new(system: &SystemDescription) -> Self {
        let edges = system
            .lines
            .iter()
            .map(|l| {
                let i = system.bus_index(l.from).expect("validated line endpoint");
                let j = system.bus_index(l.to).expect("validated line endpoint");
                let k = system.buses[i].voltage_mag * system.buses[j].voltage_mag / l.reactance;
                (i, j, k)
            })
            .collect();
        Self { n_buses: system.buses.len(), edges }
    }

    /// Σ_ℓ P_bℓ for every bus b.
    pub fn flow_sums(&self, angles: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_buses];
        self.flow_sums_into(angles, &mut out);
        out
    }

    pub fn flow_sums_into(&self, angles: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for &(i, j, k) in &self.edges {
            let p = k * (angles[i] - angles[j]).sin();
            out[i] += p;
            out[j] -= p;
        }
    }

    /// Jacobian of the flow sums with respect to all bus angles.
    pub fn flow_jacobian(&self, angles: &[f64]) -> DMatrix<f64> {
        let n = self.n_buses;
        let mut jac = DMatrix::zeros(n, n);
        for &(i, j, k) in &self.edges {
            let c = k * (angles[i] - angles[j]).cos();
            jac[(i, i)] += c;
            jac[(j, j)] += c;
            jac[(i, j)] -= c;
            jac[(j, i)] -= c;
        }
        jac
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngleSolution {
    /// Bus ids in system order.
    pub bus_ids: Vec<BusId>,
    /// Angles in radians, aligned with `bus_ids`; the reference bus is 0.
    pub angles: Vec<f64>,
    pub reference_bus: BusId,
    /// Net real power the reference bus must inject to close the balance.
    pub reference_injection: f64,
    /// Largest |mismatch| over non-reference buses at the solution.
    pub max_mismatch: f64,
    pub iterations: usize,
}

impl AngleSolution {
    pub fn angle(&self, bus: BusId) -> Option<f64> {
        self.bus_ids.iter().position(|&b| b == bus).map(|i| self.angles[i])
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { max_iter: 50, tol: 1e-10 }
    }
}

/// Scheduled net injection per bus (system order): bus injection plus the
/// generator reference setting at generator buses.
pub fn scheduled_injections(system: &SystemDescription) -> Vec<f64> {
    system
        .buses
        .iter()
        .map(|b| b.injection + system.generator_at(b.id).map_or(0.0, |g| g.reference))
        .collect()
}

pub fn solve_equilibrium(system: &SystemDescription) -> Result<AngleSolution> {
    solve_equilibrium_with(system, system.reference_bus_id(), NewtonOptions::default())
}

/// Full-step Newton from a flat start on the real-power balance of every
/// non-reference bus. Once the tolerance is met, iteration continues while
/// each step still halves the mismatch, so the returned point is as close
/// to an exact fixed point as rounding allows.
pub fn solve_equilibrium_with(system: &SystemDescription, reference: BusId, opts: NewtonOptions) -> Result<AngleSolution> {
    let topo = Topology::new(system);
    let n = topo.n_buses;
    let ref_idx = system
        .bus_index(reference)
        .ok_or_else(|| Error::InvalidArgument(format!("reference bus {reference} does not exist")))?;
    let p_sched = scheduled_injections(system);
    let free: Vec<usize> = (0..n).filter(|&i| i != ref_idx).collect();
    let mut theta = vec![0.0; n];

    let mismatch = |theta: &[f64]| -> (Vec<f64>, f64) {
        let flows = topo.flow_sums(theta);
        let f: Vec<f64> = free.iter().map(|&i| flows[i] - p_sched[i]).collect();
        let worst = f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        (f, worst)
    };

    let (mut f, mut worst) = mismatch(&theta);
    let mut iterations = 0;
    let mut converged = worst <= opts.tol;
    while iterations < opts.max_iter && !free.is_empty() {
        if converged && worst == 0.0 {
            break;
        }
        let full = topo.flow_jacobian(&theta);
        let jac = DMatrix::from_fn(free.len(), free.len(), |r, c| full[(free[r], free[c])]);
        let rhs = DVector::from_vec(f.clone());
        let step = jac
            .lu()
            .solve(&rhs)
            .ok_or(Error::NonConvergence { iterations, mismatch: worst })?;
        let mut trial = theta.clone();
        for (k, &i) in free.iter().enumerate() {
            trial[i] -= step[k];
        }
        let (f_new, worst_new) = mismatch(&trial);
        iterations += 1;
        if converged && worst_new > 0.5 * worst {
            if worst_new < worst {
                theta = trial;
                worst = worst_new;
            }
            break;
        }
        theta = trial;
        f = f_new;
        worst = worst_new;
        if !worst.is_finite() {
            break;
        }
        converged = worst <= opts.tol;
    }
    if !(worst <= opts.tol) {
        return Err(Error::NonConvergence { iterations, mismatch: worst });
    }

    let flows = topo.flow_sums(&theta);
    Ok(AngleSolution {
        bus_ids: system.buses.iter().map(|b| b.id).collect(),
        angles: theta,
        reference_bus: reference,
        reference_injection: flows[ref_idx],
        max_mismatch: worst,
        iterations,
    })
}

/// Σ over all buses of the flows leaving them; zero for a lossless network.
pub fn lossless_balance(system: &SystemDescription, angles: &AngleSolution) -> f64 {
    lossless_balance_at(system, &angles.angles)
}

pub fn lossless_balance_at(system: &SystemDescription, angles: &[f64]) -> f64 {
    let mut total = 0.0;
    for line in &system.lines {
        let i = system.bus_index(line.from).expect("validated");
        let j = system.bus_index(line.to).expect("validated");
        let (vi, vj) = (system.buses[i].voltage_mag, system.buses[j].voltage_mag);
        total += branch_flow(line, angles[i], angles[j], vi, vj).0;
        let reverse = Line { from: line.to, to: line.from, reactance: line.reactance };
        total += branch_flow(&reverse, angles[j], angles[i], vj, vi).0;
    }
    total
}
