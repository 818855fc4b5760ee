//! Common-frequency aggregation and the (|G|+1)-state linear model
//!
//! ```text
//! x = [Δω, P^m_1 .. P^m_|G|],   u = [P_load, P^r_1 .. P^r_|G|]
//!
//!     | -D_eff/M_eff   1ᵀ/M_eff |
//! A = |  A_R           A_τ      |,   B = diag{1/M_eff, -A_τ}
//!
//! A_τ = -diag(τ)⁻¹,   A_R = A_τ R_G
//! ```

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::system::SystemDescription;

/// Eigenvalues must sit left of this to count as Hurwitz.
pub const HURWITZ_MARGIN: f64 = 1e-9;
/// Eigenvector condition numbers above this are treated as defective.
pub const DIAGONALIZABILITY_THRESHOLD: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregates {
    /// Σ M_G + Σ M_D
    pub m_eff: f64,
    /// Σ D_G + Σ D_D
    pub d_eff: f64,
    /// Σ R_G
    pub r_g_eff: f64,
    /// Σ of bus injections (net electrical load, negative when consuming).
    pub p_load: f64,
    /// Σ M_G alone.
    pub gen_inertia: f64,
    /// Σ D_G alone.
    pub gen_damping: f64,
}

impl Aggregates {
    pub fn der_inertia(&self) -> f64 {
        self.m_eff - self.gen_inertia
    }

    pub fn der_damping(&self) -> f64 {
        self.d_eff - self.gen_damping
    }

    /// Same generator data with different effective inertia and damping.
    pub fn with_effective(&self, m_eff: f64, d_eff: f64) -> Self {
        Self { m_eff, d_eff, ..*self }
    }
}

pub fn aggregate(system: &SystemDescription) -> Aggregates {
    let gen_inertia: f64 = system.generators.iter().map(|g| g.inertia).sum();
    let gen_damping: f64 = system.generators.iter().map(|g| g.damping).sum();
    let der_inertia: f64 = system.ders.iter().map(|d| d.synthetic_inertia).sum();
    let der_damping: f64 = system.ders.iter().map(|d| d.droop).sum();
    Aggregates {
        m_eff: gen_inertia + der_inertia,
        d_eff: gen_damping + der_damping,
        r_g_eff: system.generators.iter().map(|g| g.droop_inverse).sum(),
        p_load: system.buses.iter().map(|b| b.injection).sum(),
        gen_inertia,
        gen_damping,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullOrderModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub state_labels: Vec<String>,
    pub input_labels: Vec<String>,
    pub taus: Vec<f64>,
    pub droops: Vec<f64>,
    pub aggregates: Aggregates,
}

impl FullOrderModel {
    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    /// Input column for P_load and output row selecting Δω.
    pub fn frequency_channel(&self) -> (DVector<f64>, DVector<f64>) {
        let n = self.n_states();
        let mut c = DVector::zeros(n);
        c[0] = 1.0;
        (self.b.column(0).into_owned(), c)
    }
}

pub fn build_full_model(system: &SystemDescription, agg: &Aggregates) -> Result<FullOrderModel> {
    let taus: Vec<f64> = system.generators.iter().map(|g| g.turbine_tc).collect();
    let droops: Vec<f64> = system.generators.iter().map(|g| g.droop_inverse).collect();
    let mut model = build_full_model_from_parts(agg, &taus, &droops)?;
    for (i, g) in system.generators.iter().enumerate() {
        model.state_labels[i + 1] = format!("pm_{}", g.bus);
        model.input_labels[i + 1] = format!("pr_{}", g.bus);
    }
    Ok(model)
}

/// Assembles A and B from the aggregates and per-generator (τ, R_G).
pub fn build_full_model_from_parts(agg: &Aggregates, taus: &[f64], droops: &[f64]) -> Result<FullOrderModel> {
    if !(agg.m_eff > 0.0) {
        return Err(Error::DegenerateModel(format!("effective inertia must be > 0 (got {})", agg.m_eff)));
    }
    if taus.len() != droops.len() || taus.is_empty() {
        return Err(Error::InvalidArgument("need one (tau, droop) pair per generator".into()));
    }
    if let Some(t) = taus.iter().find(|t| !(**t > 0.0)) {
        return Err(Error::DegenerateModel(format!("turbine time constant must be > 0 (got {t})")));
    }
    let g = taus.len();
    let n = g + 1;
    let inv_m = 1.0 / agg.m_eff;
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, n);
    a[(0, 0)] = -agg.d_eff * inv_m;
    b[(0, 0)] = inv_m;
    for k in 0..g {
        let inv_tau = 1.0 / taus[k];
        a[(0, k + 1)] = inv_m;
        a[(k + 1, 0)] = -inv_tau * droops[k];
        a[(k + 1, k + 1)] = -inv_tau;
        b[(k + 1, k + 1)] = inv_tau;
    }
    let mut state_labels = vec!["domega".to_string()];
    let mut input_labels = vec!["p_load".to_string()];
    for k in 0..g {
        state_labels.push(format!("pm_{}", k + 1));
        input_labels.push(format!("pr_{}", k + 1));
    }
    Ok(FullOrderModel {
        a,
        b,
        state_labels,
        input_labels,
        taus: taus.to_vec(),
        droops: droops.to_vec(),
        aggregates: *agg,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HurwitzReport {
    pub is_hurwitz: bool,
    pub spectral_abscissa: f64,
}

pub fn is_hurwitz(a: &DMatrix<f64>) -> Result<HurwitzReport> {
    let abscissa = linalg::spectral_abscissa(a)?;
    Ok(HurwitzReport { is_hurwitz: abscissa < -HURWITZ_MARGIN, spectral_abscissa: abscissa })
}

/// κ₂ of the unit-column eigenvector matrix (infinite when defective).
/// Callers treat values above [`DIAGONALIZABILITY_THRESHOLD`] as
/// non-diagonalizable.
pub fn diagonalizability_report(a: &DMatrix<f64>) -> Result<f64> {
    linalg::eigenvector_condition(a)
}
