use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::fullorder::FullOrderModel;
use crate::linalg::{self, C64};
use crate::reduced::ReducedModel;

/// Poles and transmission zeros of the P_load → Δω channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleZero {
    /// Sorted by real part, descending.
    pub poles: Vec<C64>,
    pub zeros: Vec<C64>,
}

impl PoleZero {
    pub fn of_full(model: &FullOrderModel) -> Result<Self> {
        let (b, c) = model.frequency_channel();
        pole_zero(&model.a, &b, &c)
    }

    pub fn of_reduced(model: &ReducedModel) -> Result<Self> {
        let (b, c) = model.frequency_channel();
        pole_zero(&model.a_red, &b, &c)
    }

    /// Complex poles with positive imaginary part, most dominant first.
    pub fn upper_complex_poles(&self) -> Vec<C64> {
        self.poles.iter().copied().filter(|p| p.im > 1e-12 * p.norm().max(1.0)).collect()
    }
}

pub fn pole_zero(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> Result<PoleZero> {
    Ok(PoleZero { poles: linalg::eigenvalues(a)?, zeros: linalg::siso_zeros(a, b, c)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fullorder::{aggregate, build_full_model};
    use crate::reduced::build_reduced;
    use crate::system::SystemDescription;

    #[test]
    fn reduced_zero_is_minus_inverse_tau_bar() {
        let agg = aggregate(&SystemDescription::four_bus());
        let pz = PoleZero::of_reduced(&build_reduced(&agg, 5.69).unwrap()).unwrap();
        assert_eq!(pz.poles.len(), 2);
        assert_eq!(pz.zeros.len(), 1);
        assert!((pz.zeros[0].re + 1.0 / 5.69).abs() < 1e-14 && pz.zeros[0].im == 0.0);
    }

    #[test]
    fn full_model_zeros_are_governor_poles() {
        // The Δω channel's zeros are the isolated turbine lags −1/τ_g.
        let sys = SystemDescription::four_bus();
        let pz = PoleZero::of_full(&build_full_model(&sys, &aggregate(&sys)).unwrap()).unwrap();
        assert_eq!(pz.poles.len(), 3);
        let mut z: Vec<f64> = pz.zeros.iter().map(|z| z.re).collect();
        z.sort_by(f64::total_cmp);
        assert!((z[0] + 0.25).abs() < 1e-12 && (z[1] + 0.1).abs() < 1e-12);
    }
}
