#![allow(dead_code)]

use freqlump_core::analysis::reduce;
use freqlump_core::design::{design, DesignResult, DesignTargets, TransientTarget};
use freqlump_core::system::{Bus, BusKind, DerParams, GeneratorParams, Line, SystemDescription};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 0.02 MW on the 23 MVA base.
pub fn four_bus_step_pu() -> f64 {
    SystemDescription::four_bus().mw_to_pu(0.02)
}

/// Four-bus system with DERs designed for R_reg = 0.4644, ζ = 0.7.
pub fn designed_four_bus() -> (SystemDescription, DesignResult) {
    let sys = SystemDescription::four_bus();
    let tau_bar = reduce(&sys).unwrap().tau.tau_bar;
    let result = design(&sys, DesignTargets { r_reg: 0.4644, transient: TransientTarget::Zeta(0.7) }, tau_bar).unwrap();
    (result.apply(&sys), result)
}

/// Connected 4–8 bus system: bus 1 is always a generator, the rest are a
/// mix of generators, DERs (dynamic or algebraic) and passive buses.
pub fn random_system(seed: u64) -> SystemDescription {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n: u32 = rng.random_range(4..=8);
    let mut buses = Vec::new();
    let mut generators = Vec::new();
    let mut ders = Vec::new();
    for id in 1..=n {
        let kind = if id == 1 {
            BusKind::Generator
        } else {
            match rng.random_range(0..4) {
                0 => BusKind::Generator,
                1 | 2 => BusKind::Der,
                _ => BusKind::Passive,
            }
        };
        let injection = if kind == BusKind::Generator { 0.0 } else { -rng.random_range(0.0..0.05) };
        buses.push(Bus { id, kind, voltage_mag: rng.random_range(0.95..1.05), injection });
        match kind {
            BusKind::Generator => generators.push(GeneratorParams {
                bus: id,
                inertia: rng.random_range(0.05..0.3),
                damping: rng.random_range(0.01..0.1),
                droop_inverse: rng.random_range(0.05..0.3),
                turbine_tc: rng.random_range(2.0..10.0),
                reference: rng.random_range(0.0..0.02),
            }),
            BusKind::Der => {
                let dynamic = rng.random_bool(0.5);
                ders.push(DerParams {
                    bus: id,
                    synthetic_inertia: if dynamic { rng.random_range(0.005..0.05) } else { 0.0 },
                    droop: if dynamic { rng.random_range(0.0..0.05) } else { 0.0 },
                    rating: rng.random_range(0.1..1.0),
                })
            }
            BusKind::Passive => {}
        }
    }
    let mut lines = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for id in 2..=n {
        let other = rng.random_range(1..id);
        seen.insert((other, id));
        lines.push(Line { from: other, to: id, reactance: rng.random_range(0.05..0.5) });
    }
    for _ in 0..rng.random_range(0..n) {
        let a = rng.random_range(1..=n);
        let b = rng.random_range(1..=n);
        let key = (a.min(b), a.max(b));
        if a != b && seen.insert(key) {
            lines.push(Line { from: key.0, to: key.1, reactance: rng.random_range(0.05..0.5) });
        }
    }
    let sys = SystemDescription {
        name: Some(format!("random-{seed}")),
        notes: None,
        base_mva: 23.0,
        base_kv: 4.8,
        sync_freq: 376.99111843077515,
        reference_bus: None,
        buses,
        lines,
        generators,
        ders,
    };
    sys.validate().expect("generated system is valid");
    sys
}
