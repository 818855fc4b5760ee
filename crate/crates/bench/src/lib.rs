//! Shared fixtures for the benchmarks.

use freqlump_core::analysis::reduce;
use freqlump_core::design::{design, DesignTargets, TransientTarget};
use freqlump_core::system::SystemDescription;

/// Four-bus system with DERs sized for R_reg = 0.4644, ζ = 0.7.
pub fn designed_four_bus() -> SystemDescription {
    let sys = SystemDescription::four_bus();
    let tau_bar = reduce(&sys).expect("bundled system reduces").tau.tau_bar;
    let targets = DesignTargets { r_reg: 0.4644, transient: TransientTarget::Zeta(0.7) };
    design(&sys, targets, tau_bar).expect("bundled targets are feasible").apply(&sys)
}
