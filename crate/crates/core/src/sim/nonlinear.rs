//! Per-bus swing dynamics on the lossless network.
//!
//! Generator buses carry (θ, Δω, P^m); DER buses with synthetic inertia
//! carry (θ, Δω). Buses with M = D = 0 are algebraic: their angles are
//! re-solved by Newton at every RK4 stage so that their real-power balance
//! holds exactly.

use nalgebra::{DMatrix, DVector};

use super::{scenario_metadata, ModelKind, StepScenario, Trajectory};
use crate::error::{Error, Result};
use crate::linalg;
use crate::network::{AngleSolution, Topology};
use crate::system::SystemDescription;

#[derive(Debug, Clone, Copy)]
pub struct NonlinearOptions {
    /// Internal step is chosen so that h·ρ(J) ≤ this, where ρ(J) is the
    /// spectral radius of the post-disturbance Jacobian.
    pub step_factor: f64,
    /// Optional hard cap on the internal step.
    pub max_substep: Option<f64>,
    pub newton_max_iter: usize,
}

impl Default for NonlinearOptions {
    fn default() -> Self {
        Self { step_factor: 0.2, max_substep: None, newton_max_iter: 30 }
    }
}

struct GenTerm {
    dyn_pos: usize,
    droop: f64,
    tau: f64,
    reference: f64,
}

struct NetworkModel {
    topo: Topology,
    n: usize,
    dyn_idx: Vec<usize>,
    alg_idx: Vec<usize>,
    inertia: Vec<f64>,
    damping: Vec<f64>,
    gens: Vec<GenTerm>,
    /// Bus injections after the disturbance.
    injection: Vec<f64>,
    newton_max_iter: usize,
}

impl NetworkModel {
    fn n_dyn(&self) -> usize {
        self.dyn_idx.len()
    }

    fn n_y(&self) -> usize {
        2 * self.n_dyn() + self.gens.len()
    }

    fn assemble_angles(&self, y: &DVector<f64>, alg: &[f64]) -> Vec<f64> {
        let mut theta = vec![0.0; self.n];
        for (k, &i) in self.dyn_idx.iter().enumerate() {
            theta[i] = y[k];
        }
        for (k, &i) in self.alg_idx.iter().enumerate() {
            theta[i] = alg[k];
        }
        theta
    }

    /// Solves the algebraic-bus balance in place (warm start from `theta`).
    fn solve_algebraic(&self, theta: &mut [f64]) -> Result<()> {
        if self.alg_idx.is_empty() {
            return Ok(());
        }
        let m = self.alg_idx.len();
        let mut last = f64::INFINITY;
        for iter in 0..=self.newton_max_iter {
            let flows = self.topo.flow_sums(theta);
            let f = DVector::from_iterator(m, self.alg_idx.iter().map(|&i| flows[i] - self.injection[i]));
            let worst = f.amax();
            if worst <= 1e-14 || (worst <= 1e-10 && worst >= 0.5 * last) {
                return Ok(());
            }
            if iter == self.newton_max_iter {
                return Err(Error::NonConvergence { iterations: iter, mismatch: worst });
            }
            last = worst;
            let full = self.topo.flow_jacobian(theta);
            let jac = DMatrix::from_fn(m, m, |r, c| full[(self.alg_idx[r], self.alg_idx[c])]);
            let step = jac.lu().solve(&f).ok_or(Error::NonConvergence { iterations: iter, mismatch: worst })?;
            for (k, &i) in self.alg_idx.iter().enumerate() {
                theta[i] -= step[k];
            }
        }
        unreachable!()
    }

    /// Right-hand side; `alg` is the warm start for (and receives) the
    /// algebraic angles.
    fn rhs(&self, y: &DVector<f64>, alg: &mut [f64]) -> Result<DVector<f64>> {
        let nd = self.n_dyn();
        let mut theta = self.assemble_angles(y, alg);
        self.solve_algebraic(&mut theta)?;
        for (k, &i) in self.alg_idx.iter().enumerate() {
            alg[k] = theta[i];
        }
        let flows = self.topo.flow_sums(&theta);
        let mut dy = DVector::zeros(self.n_y());
        for (k, &i) in self.dyn_idx.iter().enumerate() {
            let dw = y[nd + k];
            dy[k] = dw;
            dy[nd + k] = (self.injection[i] - flows[i] - self.damping[k] * dw) / self.inertia[k];
        }
        for (g, gen) in self.gens.iter().enumerate() {
            let pm = y[2 * nd + g];
            let dw = y[nd + gen.dyn_pos];
            dy[nd + gen.dyn_pos] += pm / self.inertia[gen.dyn_pos];
            dy[2 * nd + g] = (-pm + gen.reference - gen.droop * dw) / gen.tau;
        }
        Ok(dy)
    }

    fn rk4(&self, y: &DVector<f64>, h: f64, alg: &mut [f64]) -> Result<DVector<f64>> {
        let k1 = self.rhs(y, alg)?;
        let k2 = self.rhs(&(y + &k1 * (h / 2.0)), alg)?;
        let k3 = self.rhs(&(y + &k2 * (h / 2.0)), alg)?;
        let k4 = self.rhs(&(y + &k3 * h), alg)?;
        Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
    }

    fn spectral_radius(&self, y: &DVector<f64>, alg: &[f64]) -> Result<f64> {
        let ny = self.n_y();
        let mut jac = DMatrix::zeros(ny, ny);
        for j in 0..ny {
            let eps = 1e-7 * y[j].abs().max(1.0);
            let mut yp = y.clone();
            let mut ym = y.clone();
            yp[j] += eps;
            ym[j] -= eps;
            let fp = self.rhs(&yp, &mut alg.to_vec())?;
            let fm = self.rhs(&ym, &mut alg.to_vec())?;
            jac.set_column(j, &((fp - fm) / (2.0 * eps)));
        }
        Ok(linalg::eigenvalues(&jac)?.iter().map(|l| l.norm()).fold(0.0, f64::max))
    }
}

pub fn simulate_nonlinear(system: &SystemDescription, angles0: &AngleSolution, scenario: &StepScenario) -> Result<Trajectory> {
    simulate_nonlinear_with(system, angles0, scenario, NonlinearOptions::default())
}

pub fn simulate_nonlinear_with(
    system: &SystemDescription,
    angles0: &AngleSolution,
    scenario: &StepScenario,
    opts: NonlinearOptions,
) -> Result<Trajectory> {
    scenario.validate()?;
    let ids: Vec<_> = system.buses.iter().map(|b| b.id).collect();
    if angles0.bus_ids != ids {
        return Err(Error::InvalidArgument("angle solution does not match the system's buses".into()));
    }
    let step_idx = system
        .bus_index(scenario.bus)
        .ok_or_else(|| Error::InvalidArgument(format!("step bus {} does not exist", scenario.bus)))?;

    let topo = Topology::new(system);
    let n = system.buses.len();
    let flows0 = topo.flow_sums(&angles0.angles);

    let ref_idx = system.bus_index(angles0.reference_bus).expect("reference bus in system");
    if system.generator_at(angles0.reference_bus).is_none() {
        let gap = flows0[ref_idx] - system.buses[ref_idx].injection;
        if gap.abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "reference bus {} has no generator to absorb a {gap:.3e} pu mismatch",
                angles0.reference_bus
            )));
        }
    }

    let mut dyn_idx = Vec::new();
    let mut alg_idx = Vec::new();
    let (mut inertia, mut damping) = (Vec::new(), Vec::new());
    for (i, bus) in system.buses.iter().enumerate() {
        let (m, d) = system.bus_inertia_damping(bus.id);
        if m > 0.0 {
            dyn_idx.push(i);
            inertia.push(m);
            damping.push(d);
        } else if d > 0.0 {
            return Err(Error::InvalidArgument(format!(
                "bus {} has damping {d} but zero inertia; algebraic buses need M = D = 0",
                bus.id
            )));
        } else {
            alg_idx.push(i);
        }
    }

    // Mechanical set-points that make the initial point an exact fixed point.
    let gens: Vec<GenTerm> = system
        .generators
        .iter()
        .map(|g| {
            let i = system.bus_index(g.bus).expect("validated");
            GenTerm {
                dyn_pos: dyn_idx.iter().position(|&j| j == i).expect("generators have inertia"),
                droop: g.droop_inverse,
                tau: g.turbine_tc,
                reference: flows0[i] - system.buses[i].injection,
            }
        })
        .collect();

    let mut injection: Vec<f64> = system.buses.iter().map(|b| b.injection).collect();
    injection[step_idx] -= scenario.delta_p;

    let model = NetworkModel {
        topo,
        n,
        dyn_idx,
        alg_idx,
        inertia,
        damping,
        gens,
        injection,
        newton_max_iter: opts.newton_max_iter,
    };

    let nd = model.n_dyn();
    let ng = model.gens.len();
    let mut y = DVector::zeros(model.n_y());
    for (k, &i) in model.dyn_idx.iter().enumerate() {
        y[k] = angles0.angles[i];
    }
    for (g, gen) in model.gens.iter().enumerate() {
        y[2 * nd + g] = gen.reference;
    }
    let mut alg: Vec<f64> = model.alg_idx.iter().map(|&i| angles0.angles[i]).collect();

    let grid = scenario.grid();
    let rho = model.spectral_radius(&y, &alg)?;
    let mut h_target = if rho > 0.0 { opts.step_factor / rho } else { grid.dt };
    if let Some(cap) = opts.max_substep {
        h_target = h_target.min(cap);
    }
    let substeps = ((grid.dt / h_target).ceil() as usize).max(1);
    let h = grid.dt / substeps as f64;

    let mut labels: Vec<String> = system.buses.iter().map(|b| format!("theta_{}", b.id)).collect();
    labels.extend(model.dyn_idx.iter().map(|&i| format!("domega_{}", system.buses[i].id)));
    labels.extend(system.generators.iter().map(|g| format!("pm_{}", g.bus)));
    let n_states = labels.len();
    let freq_index = labels.len();
    labels.push("domega_sys".into());
    labels.extend(system.ders.iter().map(|d| format!("p_der_{}", d.bus)));
    let der_idx: Vec<usize> = system.ders.iter().map(|d| system.bus_index(d.bus).expect("validated")).collect();
    let m_total: f64 = model.inertia.iter().sum();

    let times = grid.times();
    let mut values = DMatrix::zeros(times.len(), labels.len());
    let mut record = |k: usize, y: &DVector<f64>, alg: &mut Vec<f64>| -> Result<()> {
        let mut theta = model.assemble_angles(y, alg);
        model.solve_algebraic(&mut theta)?;
        for (a, &i) in model.alg_idx.iter().enumerate() {
            alg[a] = theta[i];
        }
        let flows = model.topo.flow_sums(&theta);
        let mut row = Vec::with_capacity(labels.len());
        row.extend_from_slice(&theta);
        row.extend((0..nd).map(|j| y[nd + j]));
        row.extend((0..ng).map(|g| y[2 * nd + g]));
        row.push((0..nd).map(|j| model.inertia[j] * y[nd + j]).sum::<f64>() / m_total);
        row.extend(der_idx.iter().map(|&i| flows[i] - model.injection[i]));
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { time: times[k] });
        }
        values.row_mut(k).copy_from_slice(&row);
        Ok(())
    };

    record(0, &y, &mut alg)?;
    for k in 0..grid.steps {
        for _ in 0..substeps {
            y = model.rk4(&y, h, &mut alg)?;
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { time: times[k + 1] });
        }
        record(k + 1, &y, &mut alg)?;
    }

    let mut metadata = scenario_metadata(system, scenario);
    metadata.insert("integrator".into(), "rk4".into());
    metadata.insert("internal_step".into(), format!("{h:e}"));
    metadata.insert("system_frequency".into(), "inertia-weighted average of bus frequencies".into());
    Ok(Trajectory {
        kind: ModelKind::Nonlinear,
        times,
        labels,
        values,
        n_states,
        freq_index,
        sync_freq: Some(system.sync_freq),
        metadata,
    })
}
