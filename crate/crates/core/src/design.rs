//! DER droop and synthetic-inertia design on the lumped model
//!
//! ```text
//!           k (s + a)
//! H(s) = ------------------------,   k = 1/M_eff,  a = 1/τ̄
//!        s² + 2ζω_n s + ω_n²
//!
//! ω_n² = (R_G,eff + D_eff)/(τ̄ M_eff)
//! ζ    = (M_eff + τ̄ D_eff) / (2 √(τ̄ M_eff (R_G,eff + D_eff)))
//! ```

use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::fullorder::{aggregate, Aggregates};
use crate::system::{BusId, SystemDescription};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferFunction2 {
    pub k: f64,
    pub a: f64,
    pub omega_n: f64,
    pub zeta: f64,
}

impl TransferFunction2 {
    /// Denominator coefficients [1, 2ζω_n, ω_n²].
    pub fn denominator(&self) -> [f64; 3] {
        [1.0, 2.0 * self.zeta * self.omega_n, self.omega_n * self.omega_n]
    }
}

pub fn transfer_function(agg: &Aggregates, tau_bar: f64) -> Result<TransferFunction2> {
    let stiffness = agg.r_g_eff + agg.d_eff;
    if !(agg.m_eff > 0.0 && tau_bar > 0.0 && stiffness > 0.0) {
        return Err(Error::DegenerateModel(format!(
            "need M_eff > 0, tau_bar > 0 and R_G,eff + D_eff > 0 (got {}, {}, {})",
            agg.m_eff, tau_bar, stiffness
        )));
    }
    Ok(TransferFunction2 {
        k: 1.0 / agg.m_eff,
        a: 1.0 / tau_bar,
        omega_n: (stiffness / (tau_bar * agg.m_eff)).sqrt(),
        zeta: zeta_of(agg.m_eff, agg.d_eff, agg.r_g_eff, tau_bar),
    })
}

fn zeta_of(m_eff: f64, d_eff: f64, r_g_eff: f64, tau_bar: f64) -> f64 {
    (m_eff + tau_bar * d_eff) / (2.0 * (tau_bar * m_eff * (r_g_eff + d_eff)).sqrt())
}

/// ΔP_load / Δω_ss = H(0)⁻¹ = ω_n²/(k·a).
pub fn steady_state_regulation(tf: &TransferFunction2) -> f64 {
    tf.omega_n * tf.omega_n / (tf.k * tf.a)
}

/// Σ D_D needed for a regulation target. Rounding-level negatives are
/// clamped to zero.
pub fn required_der_droop_total(r_reg: f64, r_g_eff: f64, gen_damping_total: f64) -> Result<f64> {
    let total = r_reg - r_g_eff - gen_damping_total;
    if total >= 0.0 {
        Ok(total)
    } else if total > -1e-12 * r_reg.abs().max(1.0) {
        Ok(0.0)
    } else {
        Err(Error::InfeasibleRegulation(format!(
            "R_reg = {r_reg} < R_G,eff + sum D_G = {r_g_eff} + {gen_damping_total} = {}",
            r_g_eff + gen_damping_total
        )))
    }
}

/// Positive M_eff values giving damping ratio `zeta`, ascending.
pub fn solve_m_eff_for_zeta(zeta: f64, d_eff: f64, r_g_eff: f64, tau_bar: f64) -> Result<Vec<f64>> {
    if !(zeta > 0.0 && tau_bar > 0.0 && d_eff >= 0.0 && r_g_eff + d_eff > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need zeta > 0, tau_bar > 0, D_eff >= 0, R_G,eff + D_eff > 0 (got {zeta}, {tau_bar}, {d_eff}, {r_g_eff})"
        )));
    }
    let b = 2.0 * tau_bar * d_eff - 4.0 * zeta * zeta * tau_bar * (r_g_eff + d_eff);
    let c = tau_bar * tau_bar * d_eff * d_eff;
    let mut disc = b * b - 4.0 * c;
    if disc < 0.0 && disc > -1e-14 * b * b {
        disc = 0.0;
    }
    if disc < 0.0 {
        return Err(Error::NoRealSolution(format!(
            "zeta = {zeta} is unreachable with D_eff = {d_eff}, tau_bar = {tau_bar} (discriminant {disc:.3e})"
        )));
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut roots = vec![q];
    if q != 0.0 {
        roots.push(c / q);
    }
    roots.retain(|m| *m > 0.0);
    roots.retain(|m| (zeta_of(*m, d_eff, r_g_eff, tau_bar) - zeta).abs() <= 1e-9 * zeta.max(1.0));
    roots.sort_by(f64::total_cmp);
    roots.dedup();
    if roots.is_empty() {
        return Err(Error::NoRealSolution(format!("no positive M_eff gives zeta = {zeta}")));
    }
    Ok(roots)
}

pub fn m_eff_for_omega_n(omega_n: f64, d_eff: f64, r_g_eff: f64, tau_bar: f64) -> Result<f64> {
    if !(omega_n > 0.0 && tau_bar > 0.0 && r_g_eff + d_eff > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need omega_n > 0, tau_bar > 0, R_G,eff + D_eff > 0 (got {omega_n}, {tau_bar}, {})",
            r_g_eff + d_eff
        )));
    }
    Ok((r_g_eff + d_eff) / (tau_bar * omega_n * omega_n))
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + comp
}

/// Splits `total` in proportion to `ratings`.
pub fn allocate_proportional(total: f64, ratings: &[f64]) -> Vec<f64> {
    let sum = compensated_sum(ratings.iter().copied());
    ratings.iter().map(|r| total * (r / sum)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransientTarget {
    Zeta(f64),
    OmegaN(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignTargets {
    pub r_reg: f64,
    pub transient: TransientTarget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignResult {
    pub targets: DesignTargets,
    pub tau_bar: f64,
    /// Σ D_G + Σ D_D
    pub d_eff: f64,
    /// Σ M_G + Σ M_D
    pub m_eff: f64,
    pub der_droop_total: f64,
    pub der_inertia_total: f64,
    /// Every positive M_eff root for a ζ target (one entry for ω_n).
    pub m_eff_candidates: Vec<f64>,
    pub der_buses: Vec<BusId>,
    pub der_droops: Vec<f64>,
    pub der_inertias: Vec<f64>,
    pub achieved: TransferFunction2,
    pub aggregates: Aggregates,
}

pub fn design(system: &SystemDescription, targets: DesignTargets, tau_bar: f64) -> Result<DesignResult> {
    if !(tau_bar > 0.0) {
        return Err(Error::InvalidTau(tau_bar));
    }
    let base = aggregate(system);
    let (gen_m, gen_d, r_g) = (base.gen_inertia, base.gen_damping, base.r_g_eff);

    let der_droop_total = required_der_droop_total(targets.r_reg, r_g, gen_d)?;
    if system.ders.is_empty() && der_droop_total > 0.0 {
        return Err(Error::InfeasibleRegulation(format!(
            "R_reg = {} needs {der_droop_total} pu of DER droop but the system has no DERs",
            targets.r_reg
        )));
    }
    let d_eff = gen_d + der_droop_total;

    let candidates = match targets.transient {
        TransientTarget::Zeta(z) => solve_m_eff_for_zeta(z, d_eff, r_g, tau_bar)?,
        TransientTarget::OmegaN(w) => vec![m_eff_for_omega_n(w, d_eff, r_g, tau_bar)?],
    };
    let floor = gen_m * (1.0 - 1e-12);
    let m_eff = candidates.iter().copied().find(|m| *m >= floor).ok_or_else(|| {
        Error::InfeasibleInertia(format!(
            "every M_eff solution {candidates:?} is below the generator inertia sum {gen_m}"
        ))
    })?;
    let der_inertia_total = (m_eff - gen_m).max(0.0);
    if system.ders.is_empty() && der_inertia_total > 1e-12 * gen_m.max(1.0) {
        return Err(Error::InfeasibleInertia(format!(
            "M_eff = {m_eff} needs DER inertia but the system has no DERs"
        )));
    }
    let m_eff = gen_m + der_inertia_total;

    let ratings: Vec<f64> = system.ders.iter().map(|d| d.rating).collect();
    let aggregates = base.with_effective(m_eff, d_eff);
    Ok(DesignResult {
        targets,
        tau_bar,
        d_eff,
        m_eff,
        der_droop_total,
        der_inertia_total,
        m_eff_candidates: candidates,
        der_buses: system.ders.iter().map(|d| d.bus).collect(),
        der_droops: allocate_proportional(der_droop_total, &ratings),
        der_inertias: allocate_proportional(der_inertia_total, &ratings),
        achieved: transfer_function(&aggregates, tau_bar)?,
        aggregates,
    })
}

impl DesignResult {
    /// Copy of `system` with the designed DER droops and inertias.
    pub fn apply(&self, system: &SystemDescription) -> SystemDescription {
        let mut out = system.clone();
        for (der, (d, m)) in out.ders.iter_mut().zip(self.der_droops.iter().zip(&self.der_inertias)) {
            der.droop = *d;
            der.synthetic_inertia = *m;
        }
        out
    }

    pub fn report(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for DesignResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        let _ = writeln!(s, "targets");
        let _ = writeln!(s, "  R_reg          {:.10}", self.targets.r_reg);
        match self.targets.transient {
            TransientTarget::Zeta(z) => {
                let _ = writeln!(s, "  zeta           {z:.10}");
            }
            TransientTarget::OmegaN(w) => {
                let _ = writeln!(s, "  omega_n        {w:.10} rad/s");
            }
        }
        let _ = writeln!(s, "  tau_bar        {:.10} s", self.tau_bar);
        let _ = writeln!(s, "totals");
        let _ = writeln!(s, "  D_eff          {:.10}", self.d_eff);
        let _ = writeln!(s, "  M_eff          {:.10}", self.m_eff);
        let _ = writeln!(s, "  sum D_D        {:.10}", self.der_droop_total);
        let _ = writeln!(s, "  sum M_D        {:.10}", self.der_inertia_total);
        let roots: Vec<String> = self.m_eff_candidates.iter().map(|m| format!("{m:.10}")).collect();
        let _ = writeln!(s, "  M_eff roots    {}", roots.join(", "));
        let _ = writeln!(s, "per-DER");
        let _ = writeln!(s, "  {:>6}  {:>16}  {:>16}", "bus", "D_D", "M_D");
        for ((b, d), m) in self.der_buses.iter().zip(&self.der_droops).zip(&self.der_inertias) {
            let _ = writeln!(s, "  {b:>6}  {d:>16.10e}  {m:>16.10e}");
        }
        let tf = &self.achieved;
        let _ = writeln!(s, "achieved");
        let _ = writeln!(s, "  R_reg          {:.10}", steady_state_regulation(tf));
        let _ = writeln!(s, "  zeta           {:.10}", tf.zeta);
        let _ = writeln!(s, "  omega_n        {:.10} rad/s", tf.omega_n);
        let _ = writeln!(s, "  zero           {:.10} 1/s", -tf.a);
        f.write_str(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use crate::reduced::build_reduced;

    fn unit() -> Aggregates {
        Aggregates { m_eff: 1.0, d_eff: 0.0, r_g_eff: 1.0, p_load: 0.0, gen_inertia: 1.0, gen_damping: 0.0 }
    }

    #[test]
    fn unit_transfer_function() {
        let tf = transfer_function(&unit(), 1.0).unwrap();
        assert_eq!((tf.k, tf.a, tf.omega_n, tf.zeta), (1.0, 1.0, 1.0, 0.5));
        assert_eq!(steady_state_regulation(&tf), 1.0);
        assert!(transfer_function(&Aggregates { m_eff: 0.0, ..unit() }, 1.0).is_err());
    }

    #[test]
    fn poles_match_denominator() {
        let agg = Aggregates { m_eff: 0.27, d_eff: 0.16, r_g_eff: 0.3038, p_load: 0.0, gen_inertia: 0.26, gen_damping: 0.0868 };
        let tf = transfer_function(&agg, 5.69).unwrap();
        let poles = linalg::eigenvalues(&build_reduced(&agg, 5.69).unwrap().a_red).unwrap();
        let [_, b, c] = tf.denominator();
        for p in poles {
            assert!((p * p + p * b + c).norm() < 1e-9);
        }
    }

    #[test]
    fn droop_total() {
        assert_eq!(required_der_droop_total(0.5, 0.3, 0.2).unwrap(), 0.0);
        assert!(matches!(required_der_droop_total(0.2, 0.3, 0.0868), Err(Error::InfeasibleRegulation(_))));
        assert!((required_der_droop_total(1.0, 0.25, 0.5).unwrap() - 0.25).abs() < 1e-16);
    }

    #[test]
    fn zero_damping_root() {
        let roots = solve_m_eff_for_zeta(0.7, 0.0, 0.3, 5.0).unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - 4.0 * 0.49 * 5.0 * 0.3).abs() < 1e-12);
    }

    #[test]
    fn unreachable_zeta() {
        // ζ ≥ √(D/(R+D)) for every M.
        assert!(matches!(solve_m_eff_for_zeta(0.1, 1.0, 0.1, 5.0), Err(Error::NoRealSolution(_))));
    }

    #[test]
    fn allocation_examples() {
        let a = allocate_proportional(0.074, &[0.25, 0.75]);
        assert!((a[0] - 0.0185).abs() < 1e-15 && (a[1] - 0.0555).abs() < 1e-15);
        assert_eq!(allocate_proportional(0.3, &[2.0]), vec![0.3]);
        assert_eq!(allocate_proportional(0.0, &[1.0, 3.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn no_der_targets_give_zero_allocation() {
        let sys = SystemDescription::four_bus();
        let agg = aggregate(&sys);
        let tau = 5.69;
        let zeta = transfer_function(&agg, tau).unwrap().zeta;
        let r = design(&sys, DesignTargets { r_reg: agg.r_g_eff + agg.d_eff, transient: TransientTarget::Zeta(zeta) }, tau)
            .unwrap();
        assert!(r.der_droops.iter().chain(&r.der_inertias).all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn omega_n_design() {
        let sys = SystemDescription::four_bus();
        let r = design(&sys, DesignTargets { r_reg: 0.4644, transient: TransientTarget::OmegaN(0.5) }, 5.69).unwrap();
        assert!((r.achieved.omega_n - 0.5).abs() < 1e-12);
        let out = r.apply(&sys);
        assert_eq!(out.ders[1].droop, r.der_droops[1]);
        assert!(r.report().contains("per-DER"));
    }

    #[test]
    fn inertia_below_generators_rejected() {
        let sys = SystemDescription::four_bus();
        let err = design(&sys, DesignTargets { r_reg: 0.4644, transient: TransientTarget::OmegaN(5.0) }, 5.69).unwrap_err();
        assert!(matches!(err, Error::InfeasibleInertia(_)));
    }
}
