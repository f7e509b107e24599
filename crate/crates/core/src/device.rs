//! Device geometry, material parameters, bias points and the axial grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half the GaAs lattice constant (0.5653 nm).
pub const GAAS_HALF_LATTICE: f64 = 0.282_65;

/// Geometry of the dual-gate nanowire channel. Lengths in nm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceSpec {
    pub channel_length: f64,
    pub radius: f64,
    pub gate1_length: f64,
    pub gate2_length: f64,
    pub source_to_gate1: f64,
    pub gate2_to_drain: f64,
    pub oxide_thickness: f64,
    pub grid_spacing: f64,
}

impl Default for DeviceSpec {
    fn default() -> Self {
        Self {
            channel_length: 20.0,
            radius: 2.5,
            gate1_length: 3.0,
            gate2_length: 3.0,
            source_to_gate1: 3.0,
            gate2_to_drain: 8.0,
            oxide_thickness: 2.0,
            grid_spacing: GAAS_HALF_LATTICE,
        }
    }
}

impl DeviceSpec {
    /// Gap between the two gates, derived from the other segment lengths.
    pub fn inter_gate_gap(&self) -> f64 {
        self.channel_length
            - self.source_to_gate1
            - self.gate1_length
            - self.gate2_length
            - self.gate2_to_drain
    }

    pub fn cross_section_area(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius
    }

    /// Channel volume in nm³.
    pub fn volume(&self) -> f64 {
        self.cross_section_area() * self.channel_length
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("channel_length", self.channel_length),
            ("radius", self.radius),
            ("gate1_length", self.gate1_length),
            ("gate2_length", self.gate2_length),
            ("source_to_gate1", self.source_to_gate1),
            ("gate2_to_drain", self.gate2_to_drain),
            ("oxide_thickness", self.oxide_thickness),
            ("grid_spacing", self.grid_spacing),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be finite and > 0, got {v}")));
            }
        }
        let gap = self.inter_gate_gap();
        if gap <= 0.0 {
            return Err(Error::DegenerateGeometry(format!(
                "segments exceed the channel length (inter-gate gap {gap:.4} nm)"
            )));
        }
        Ok(())
    }

    /// Nominal segment boundaries from z = 0 to z = channel_length.
    fn nominal_boundaries(&self) -> [f64; 6] {
        let b1 = self.source_to_gate1;
        let b2 = b1 + self.gate1_length;
        let b3 = b2 + self.inter_gate_gap();
        let b4 = b3 + self.gate2_length;
        [0.0, b1, b2, b3, b4, self.channel_length]
    }
}

/// Material parameters of the nanowire and its surroundings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialParams {
    /// Effective mass ratio m*/m0.
    pub m_star: f64,
    pub eps_nw_rel: f64,
    pub eps_ox_rel: f64,
    /// Contact donor density, cm⁻³.
    pub donor_density: f64,
    /// Lattice temperature, K.
    pub temperature: f64,
    /// Acoustic deformation potential, eV (GaAs conduction band, ~7 eV).
    pub deformation_potential: f64,
    /// Mass density, kg/m³ (GaAs: 5317).
    pub mass_density: f64,
    /// Longitudinal sound velocity, m/s (GaAs [100]: 4730).
    pub sound_velocity: f64,
    /// Representative acoustic phonon energy, eV.
    pub phonon_energy_acoustic: f64,
    /// Longitudinal optical phonon energy, eV (GaAs: 36.2 meV).
    pub phonon_energy_optical: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self {
            m_star: 0.06,
            eps_nw_rel: 12.9,
            eps_ox_rel: 3.9,
            donor_density: 5e17,
            temperature: 300.0,
            deformation_potential: 7.0,
            mass_density: 5317.0,
            sound_velocity: 4730.0,
            phonon_energy_acoustic: 0.005,
            phonon_energy_optical: 0.0362,
        }
    }
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.m_star > 0.0) {
            return Err(Error::invalid("m_star", "must be > 0"));
        }
        if !(self.eps_nw_rel >= 1.0) {
            return Err(Error::invalid("eps_nw_rel", "must be >= 1"));
        }
        if !(self.eps_ox_rel >= 1.0) {
            return Err(Error::invalid("eps_ox_rel", "must be >= 1"));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::invalid("temperature", "must be > 0"));
        }
        if !(self.donor_density > 0.0) {
            return Err(Error::invalid("donor_density", "must be > 0"));
        }
        if !(self.mass_density > 0.0) {
            return Err(Error::invalid("mass_density", "must be > 0"));
        }
        if !(self.sound_velocity > 0.0) {
            return Err(Error::invalid("sound_velocity", "must be > 0"));
        }
        if !(self.phonon_energy_acoustic > 0.0 && self.phonon_energy_optical > 0.0) {
            return Err(Error::invalid("phonon_energy", "must be > 0"));
        }
        Ok(())
    }

    pub fn thermal_energy(&self) -> f64 {
        crate::units::thermal_energy(self.temperature)
    }
}

/// Drain biases above this magnitude leave the small-signal measurement regime.
pub const DRAIN_BIAS_GUARD: f64 = 0.2;

/// Gate and drain voltages, V.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BiasPoint {
    pub vg1: f64,
    pub vg2: f64,
    /// Pulse increment added to gate 2.
    pub delta_vg2: f64,
    pub vd: f64,
}

impl BiasPoint {
    pub fn new(vg1: f64, vg2: f64, delta_vg2: f64, vd: f64) -> Self {
        Self {
            vg1,
            vg2,
            delta_vg2,
            vd,
        }
    }

    /// Effective gate-2 voltage including the pulse.
    pub fn gate2(&self) -> f64 {
        self.vg2 + self.delta_vg2
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("vg1", self.vg1),
            ("vg2", self.vg2),
            ("delta_vg2", self.delta_vg2),
            ("vd", self.vd),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        Ok(())
    }

    /// False when |vd| exceeds the measurement-regime guard. Not an error.
    pub fn in_measurement_regime(&self) -> bool {
        self.vd.abs() <= DRAIN_BIAS_GUARD
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Region {
    SourceExtension,
    Gate1,
    Gap,
    Gate2,
    DrainExtension,
}

impl Region {
    pub const ALL: [Region; 5] = [
        Region::SourceExtension,
        Region::Gate1,
        Region::Gap,
        Region::Gate2,
        Region::DrainExtension,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Region::SourceExtension => "source-ext",
            Region::Gate1 => "gate1",
            Region::Gap => "gap",
            Region::Gate2 => "gate2",
            Region::DrainExtension => "drain-ext",
        }
    }
}

/// Uniform axial grid with a region label per point.
#[derive(Debug, Clone, PartialEq)]
pub struct AxialGrid {
    pub spacing: f64,
    pub z: Vec<f64>,
    pub regions: Vec<Region>,
    /// Snapped boundary indices: region k spans `[bounds[k], bounds[k+1])`,
    /// the last region also includes the final point.
    pub bounds: [usize; 6],
    /// Snapped minus nominal position of each boundary, nm.
    pub snap_offsets: [f64; 6],
}

impl AxialGrid {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// Index range of one region.
    pub fn range(&self, region: Region) -> std::ops::Range<usize> {
        let k = Region::ALL.iter().position(|r| *r == region).unwrap();
        let end = if k == 4 { self.len() } else { self.bounds[k + 1] };
        self.bounds[k]..end
    }
}

/// Builds the axial grid with N = round(L/a) + 1 points and snapped region boundaries.
pub fn build_axial_grid(spec: &DeviceSpec) -> Result<AxialGrid> {
    spec.validate()?;
    let a = spec.grid_spacing;
    let cells = (spec.channel_length / a).round() as usize;
    if cells < 2 {
        return Err(Error::DegenerateGeometry(format!(
            "channel of {:.4} nm holds fewer than two grid cells of {a} nm",
            spec.channel_length
        )));
    }
    let n = cells + 1;
    let nominal = spec.nominal_boundaries();
    let mut bounds = [0usize; 6];
    let mut snap_offsets = [0.0; 6];
    for (k, b) in nominal.iter().enumerate() {
        let idx = ((b / a).round() as usize).min(cells);
        bounds[k] = idx;
        snap_offsets[k] = idx as f64 * a - b;
    }
    for k in 0..5 {
        let seg_cells = bounds[k + 1].saturating_sub(bounds[k]);
        if seg_cells < 2 {
            return Err(Error::DegenerateGeometry(format!(
                "segment `{}` spans {seg_cells} grid cell(s); at least 2 are required",
                Region::ALL[k].label()
            )));
        }
    }
    let z: Vec<f64> = (0..n).map(|i| i as f64 * a).collect();
    let regions = (0..n)
        .map(|i| {
            let k = (1..5).rev().find(|&k| i >= bounds[k]).unwrap_or(0);
            Region::ALL[k]
        })
        .collect();
    Ok(AxialGrid {
        spacing: a,
        z,
        regions,
        bounds,
        snap_offsets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_72_points() {
        let g = build_axial_grid(&DeviceSpec::default()).unwrap();
        assert_eq!(g.len(), 72);
        assert_eq!(g.regions[0], Region::SourceExtension);
        assert_eq!(*g.regions.last().unwrap(), Region::DrainExtension);
        for off in g.snap_offsets {
            assert!(off.abs() <= 0.5 * g.spacing + 1e-12);
        }
    }

    #[test]
    fn labels_are_contiguous() {
        let g = build_axial_grid(&DeviceSpec::default()).unwrap();
        let mut seen = vec![g.regions[0]];
        for r in &g.regions[1..] {
            if r != seen.last().unwrap() {
                assert!(!seen.contains(r), "region {r:?} reappears");
                seen.push(*r);
            }
        }
        assert_eq!(seen, Region::ALL.to_vec());
        for r in Region::ALL {
            assert!(g.range(r).all(|i| g.regions[i] == r));
        }
    }

    #[test]
    fn channel_of_one_cell_is_degenerate() {
        let spec = DeviceSpec {
            channel_length: GAAS_HALF_LATTICE,
            ..DeviceSpec::default()
        };
        assert!(matches!(
            build_axial_grid(&spec),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn shifted_segments_still_end_at_channel_length() {
        let spec = DeviceSpec {
            gate2_to_drain: 7.0,
            ..DeviceSpec::default()
        };
        assert!((spec.inter_gate_gap() - 4.0).abs() < 1e-12);
        let g = build_axial_grid(&spec).unwrap();
        let last = g.range(Region::DrainExtension).end - 1;
        assert!((g.z[last] - 20.0).abs() <= 0.5 * g.spacing);
    }

    #[test]
    fn negative_gap_is_rejected() {
        let spec = DeviceSpec {
            gate2_to_drain: 12.0,
            ..DeviceSpec::default()
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn grid_is_deterministic() {
        let a = build_axial_grid(&DeviceSpec::default()).unwrap();
        let b = build_axial_grid(&DeviceSpec::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn large_drain_bias_is_flagged_not_rejected() {
        let b = BiasPoint::new(1.15, 1.3, 0.0, 0.5);
        assert!(b.validate().is_ok());
        assert!(!b.in_measurement_regime());
    }
}
