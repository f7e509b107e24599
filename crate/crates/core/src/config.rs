//! TOML run configuration with `[geometry]`, `[materials]`, `[bias]` and
//! `[numerics]` sections. Unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::device::{BiasPoint, DeviceSpec, MaterialParams};
use crate::error::{Error, Result};
use crate::hamiltonian::LeadAlignment;
use crate::negf::EngineOptions;
use crate::phonon::PhononOptions;
use crate::poisson::GateCoupling;
use crate::qubit::QubitOptions;
use crate::scf::ScfOptions;
use crate::timedomain::TimeOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    /// Transverse modes kept.
    pub mode_count: usize,
    /// Cross-section grid spacing, nm; defaults to the axial spacing.
    pub transverse_spacing: Option<f64>,
    pub gate_coupling: GateCoupling,
    pub lead_alignment: LeadAlignment,
    /// Contact conduction-band edge relative to the energy zero, eV.
    pub band_offset: f64,
    pub scf: ScfOptions,
    pub engine: EngineOptions,
    pub time: TimeOptions,
    pub phonon: PhononOptions,
    pub qubit: QubitOptions,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            mode_count: 4,
            transverse_spacing: None,
            gate_coupling: GateCoupling::Everywhere,
            lead_alignment: LeadAlignment::BulkEdge,
            band_offset: 0.0,
            scf: ScfOptions::default(),
            engine: EngineOptions::default(),
            time: TimeOptions::default(),
            phonon: PhononOptions::default(),
            qubit: QubitOptions::default(),
        }
    }
}

impl Numerics {
    pub fn validate(&self) -> Result<()> {
        if self.mode_count == 0 {
            return Err(Error::invalid("mode_count", "must be ≥ 1"));
        }
        if let Some(h) = self.transverse_spacing {
            if !(h > 0.0) {
                return Err(Error::invalid("transverse_spacing", "must be > 0"));
            }
        }
        self.scf.validate()?;
        self.engine.grid.validate()?;
        self.time.validate()?;
        self.phonon.validate()?;
        self.qubit.onsets.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub geometry: DeviceSpec,
    pub materials: MaterialParams,
    pub bias: BiasPoint,
    pub numerics: Numerics,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.materials.validate()?;
        self.bias.validate()?;
        self.numerics.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(Config::from_toml("").unwrap(), Config::default());
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = Config::from_toml("[geometry]\nchanel_length = 20\n").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(Config::from_toml("[extras]\nx = 1\n").is_err());
    }

    #[test]
    fn nested_numerics_parse() {
        let cfg = Config::from_toml(
            "[bias]\nvg1 = 1.15\n[numerics]\ngate_coupling = \"gated-only\"\n[numerics.scf]\nbeta = 0.5\n[numerics.engine.grid]\nbudget = 1000\n",
        )
        .unwrap();
        assert_eq!(cfg.bias.vg1, 1.15);
        assert_eq!(cfg.numerics.gate_coupling, GateCoupling::GatedOnly);
        assert_eq!(cfg.numerics.scf.beta, 0.5);
        assert_eq!(cfg.numerics.engine.grid.budget, 1000);
    }

    #[test]
    fn round_trip() {
        let mut cfg = Config::default();
        cfg.bias.vd = 0.042;
        cfg.numerics.transverse_spacing = Some(0.2);
        assert_eq!(Config::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(Config::from_toml("[numerics.scf]\nbeta = 0.0\n").is_err());
        assert!(Config::from_toml("[materials]\nm_star = -1\n").is_err());
    }
}
