//! System description: buses, lines, generator and DER parameters.
//!
//! The on-disk format is TOML with one top-level table of bases and four
//! arrays of tables:
//!
//! ```toml
//! name = "four-bus"            # optional
//! notes = "..."                # optional, copied into output metadata
//! base_mva = 23.0
//! base_kv = 4.8
//! sync_freq = 376.99111843077515   # rad/s
//! reference_bus = 1            # optional; defaults to lowest-id generator bus
//!
//! [[bus]]
//! id = 1
//! kind = "generator"           # generator | der | passive
//! voltage_mag = 1.0            # pu
//! injection = 0.0              # pu, loads negative
//!
//! [[line]]
//! from = 1
//! to = 2
//! reactance = 0.1              # pu
//!
//! [[generator]]
//! bus = 1
//! inertia = 0.1302             # pu*s
//! damping = 0.0434             # pu
//! droop_inverse = 0.217        # pu
//! turbine_tc = 4.0             # s
//! reference = 0.0109           # pu
//!
//! [[der]]
//! bus = 3
//! synthetic_inertia = 0.0      # pu*s
//! droop = 0.0                  # pu
//! rating = 0.25                # pu
//! ```
//!
//! Every quantity is per unit on the declared bases except time constants
//! (seconds) and `sync_freq` (rad/s).

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub type BusId = u32;

const FOUR_BUS_TOML: &str = include_str!("../data/four_bus.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    Generator,
    Der,
    Passive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: BusId,
    pub kind: BusKind,
    pub voltage_mag: f64,
    pub injection: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Line {
    pub from: BusId,
    pub to: BusId,
    pub reactance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorParams {
    pub bus: BusId,
    pub inertia: f64,
    pub damping: f64,
    /// Inverse speed-droop regulation constant.
    pub droop_inverse: f64,
    pub turbine_tc: f64,
    pub reference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DerParams {
    pub bus: BusId,
    pub synthetic_inertia: f64,
    pub droop: f64,
    pub rating: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDescription {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
    pub base_mva: f64,
    pub base_kv: f64,
    pub sync_freq: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_bus: Option<BusId>,
    #[serde(rename = "bus", default)]
    pub buses: Vec<Bus>,
    #[serde(rename = "line", default)]
    pub lines: Vec<Line>,
    #[serde(rename = "generator", default)]
    pub generators: Vec<GeneratorParams>,
    #[serde(rename = "der", default)]
    pub ders: Vec<DerParams>,
}

impl SystemDescription {
    /// The bundled four-bus system (two generators, two DERs) with DER
    /// response switched off.
    pub fn four_bus() -> Self {
        Self::from_toml_str(FOUR_BUS_TOML).expect("bundled four-bus system is valid")
    }

    pub fn four_bus_toml() -> &'static str {
        FOUR_BUS_TOML
    }

    /// Parses and validates.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let sys: SystemDescription =
            toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        sys.validate()?;
        Ok(sys)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("system description serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml_string())?;
        Ok(())
    }

    /// Checks every structural and parameter invariant, collecting all
    /// violations into a single [`Error::Validation`].
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();

        for (what, v) in [("base_mva", self.base_mva), ("base_kv", self.base_kv), ("sync_freq", self.sync_freq)] {
            if !(v.is_finite() && v > 0.0) {
                errs.push(format!("{what} must be finite and > 0 (got {v})"));
            }
        }

        let mut kinds = BTreeMap::new();
        for bus in &self.buses {
            if kinds.insert(bus.id, bus.kind).is_some() {
                errs.push(format!("duplicate bus id {}", bus.id));
            }
            if !(bus.voltage_mag.is_finite() && bus.voltage_mag > 0.0) {
                errs.push(format!("bus {}: voltage_mag must be > 0 (got {})", bus.id, bus.voltage_mag));
            }
            if !bus.injection.is_finite() {
                errs.push(format!("bus {}: injection must be finite", bus.id));
            }
        }
        if self.buses.is_empty() {
            errs.push("system has no buses".into());
        }

        let mut pairs = BTreeSet::new();
        for (i, line) in self.lines.iter().enumerate() {
            let tag = format!("line {} ({}-{})", i + 1, line.from, line.to);
            if line.from == line.to {
                errs.push(format!("{tag}: from and to are the same bus"));
            }
            for end in [line.from, line.to] {
                if !kinds.contains_key(&end) {
                    errs.push(format!("{tag}: references unknown bus {end}"));
                }
            }
            if !(line.reactance.is_finite() && line.reactance > 0.0) {
                errs.push(format!("{tag}: reactance must be > 0 (got {})", line.reactance));
            }
            let key = (line.from.min(line.to), line.from.max(line.to));
            if !pairs.insert(key) {
                errs.push(format!("{tag}: parallel line between buses {} and {}", key.0, key.1));
            }
        }

        if self.generators.is_empty() {
            errs.push("system has no generators".into());
        }
        let mut gen_buses = BTreeSet::new();
        for g in &self.generators {
            match kinds.get(&g.bus) {
                None => errs.push(format!("generator references unknown bus {}", g.bus)),
                Some(BusKind::Generator) => {}
                Some(k) => errs.push(format!("generator at bus {} which has kind {k:?}", g.bus)),
            }
            if !gen_buses.insert(g.bus) {
                errs.push(format!("more than one generator at bus {}", g.bus));
            }
            let b = g.bus;
            check_pos(&mut errs, b, "generator inertia", g.inertia);
            check_pos(&mut errs, b, "generator turbine_tc", g.turbine_tc);
            check_nonneg(&mut errs, b, "generator droop_inverse", g.droop_inverse);
            check_nonneg(&mut errs, b, "generator damping", g.damping);
            if !g.reference.is_finite() {
                errs.push(format!("bus {b}: generator reference must be finite"));
            }
        }

        let mut der_buses = BTreeSet::new();
        for d in &self.ders {
            match kinds.get(&d.bus) {
                None => errs.push(format!("DER references unknown bus {}", d.bus)),
                Some(BusKind::Der) => {}
                Some(BusKind::Generator) => errs.push(format!(
                    "DER connected to generator bus {} (DER and generator bus sets must be disjoint)",
                    d.bus
                )),
                Some(BusKind::Passive) => errs.push(format!("DER at passive bus {}", d.bus)),
            }
            if !der_buses.insert(d.bus) {
                errs.push(format!("more than one DER at bus {}", d.bus));
            }
            check_nonneg(&mut errs, d.bus, "DER synthetic_inertia", d.synthetic_inertia);
            check_nonneg(&mut errs, d.bus, "DER droop", d.droop);
            check_pos(&mut errs, d.bus, "DER rating", d.rating);
        }

        for bus in &self.buses {
            match bus.kind {
                BusKind::Generator if !gen_buses.contains(&bus.id) => {
                    errs.push(format!("bus {} has kind generator but no generator record", bus.id))
                }
                BusKind::Der if !der_buses.contains(&bus.id) => {
                    errs.push(format!("bus {} has kind der but no der record", bus.id))
                }
                _ => {}
            }
        }

        if let Some(r) = self.reference_bus {
            if !kinds.contains_key(&r) {
                errs.push(format!("reference_bus {r} does not exist"));
            }
        }

        if errs.is_empty() && !self.is_connected() {
            errs.push("network graph is not connected".into());
        }

        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }

    fn is_connected(&self) -> bool {
        if self.buses.len() <= 1 {
            return true;
        }
        let mut adj: BTreeMap<BusId, Vec<BusId>> = BTreeMap::new();
        for l in &self.lines {
            adj.entry(l.from).or_default().push(l.to);
            adj.entry(l.to).or_default().push(l.from);
        }
        let start = self.buses[0].id;
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(b) = queue.pop_front() {
            for &n in adj.get(&b).map(Vec::as_slice).unwrap_or(&[]) {
                if seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        seen.len() == self.buses.len()
    }

    pub fn bus_index(&self, id: BusId) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn bus(&self, id: BusId) -> Option<&Bus> {
        self.buses.iter().find(|b| b.id == id)
    }

    pub fn generator_at(&self, id: BusId) -> Option<&GeneratorParams> {
        self.generators.iter().find(|g| g.bus == id)
    }

    pub fn der_at(&self, id: BusId) -> Option<&DerParams> {
        self.ders.iter().find(|d| d.bus == id)
    }

    /// Explicit `reference_bus` if set, else the lowest-id generator bus.
    pub fn reference_bus_id(&self) -> BusId {
        self.reference_bus.unwrap_or_else(|| {
            self.generators
                .iter()
                .map(|g| g.bus)
                .min()
                .expect("validated system has a generator")
        })
    }

    /// Inertia and damping attached to a bus (generator or DER); zero for
    /// passive buses.
    pub fn bus_inertia_damping(&self, id: BusId) -> (f64, f64) {
        if let Some(g) = self.generator_at(id) {
            (g.inertia, g.damping)
        } else if let Some(d) = self.der_at(id) {
            (d.synthetic_inertia, d.droop)
        } else {
            (0.0, 0.0)
        }
    }

    pub fn min_turbine_tc(&self) -> f64 {
        self.generators.iter().map(|g| g.turbine_tc).fold(f64::INFINITY, f64::min)
    }

    /// Short content hash of the serialized description, used to tag outputs.
    pub fn parameter_hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml_string().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Converts a power quantity in MW to per unit on this system's base.
    pub fn mw_to_pu(&self, mw: f64) -> f64 {
        mw / self.base_mva
    }
}

fn check_pos(errs: &mut Vec<String>, bus: BusId, what: &str, v: f64) {
    if !(v.is_finite() && v > 0.0) {
        errs.push(format!("bus {bus}: {what} must be > 0 (got {v})"));
    }
}

fn check_nonneg(errs: &mut Vec<String>, bus: BusId, what: &str, v: f64) {
    if !(v.is_finite() && v >= 0.0) {
        errs.push(format!("bus {bus}: {what} must be >= 0 (got {v})"));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_system_parses() {
        let sys = SystemDescription::four_bus();
        assert_eq!(sys.buses.len(), 4);
        assert_eq!(sys.lines.len(), 5);
        assert_eq!(sys.reference_bus_id(), 1);
        assert!((sys.mw_to_pu(0.02) - 8.695652173913044e-4).abs() < 1e-18);
    }

    #[test]
    fn der_on_generator_bus_is_named() {
        let text = SystemDescription::four_bus_toml().replace("bus = 3\nsynthetic_inertia", "bus = 2\nsynthetic_inertia");
        let err = SystemDescription::from_toml_str(&text).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Validation(_)));
        assert!(msg.contains("DER connected to generator bus 2"), "{msg}");
    }

    #[test]
    fn collects_every_violation() {
        let mut sys = SystemDescription::four_bus();
        sys.lines[0].reactance = -1.0;
        sys.generators[0].turbine_tc = 0.0;
        sys.buses[2].voltage_mag = 0.0;
        match sys.validate() {
            Err(Error::Validation(v)) => assert_eq!(v.len(), 3, "{v:?}"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn disconnected_graph_rejected() {
        let mut sys = SystemDescription::four_bus();
        sys.lines.retain(|l| l.to != 4 && l.from != 4);
        let msg = sys.validate().unwrap_err().to_string();
        assert!(msg.contains("not connected"));
    }

    #[test]
    fn parallel_and_self_lines_rejected() {
        let mut sys = SystemDescription::four_bus();
        sys.lines.push(Line { from: 2, to: 1, reactance: 0.3 });
        sys.lines.push(Line { from: 3, to: 3, reactance: 0.3 });
        let msg = sys.validate().unwrap_err().to_string();
        assert!(msg.contains("parallel line"));
        assert!(msg.contains("same bus"));
    }

    #[test]
    fn parse_error_carries_location() {
        let err = SystemDescription::from_toml_str("base_mva = \n").unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
        assert!(err.to_string().contains("line 1"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_field_rejected() {
        let text = SystemDescription::four_bus_toml().replace("reactance = 0.1", "reactance = 0.1\nresistance = 0.01");
        assert!(matches!(SystemDescription::from_toml_str(&text), Err(Error::Parse(_))));
    }

    #[test]
    fn round_trip_is_identity() {
        let sys = SystemDescription::four_bus();
        let again = SystemDescription::from_toml_str(&sys.to_toml_string()).unwrap();
        assert_eq!(sys, again);
        assert_eq!(sys.parameter_hash(), again.parameter_hash());
    }
}
