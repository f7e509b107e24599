//! Fixed physical constants in the eV / nm / fs / V unit system.
//!
//! Every module interface takes energies in eV, lengths in nm, times in fs and
//! potentials in V. Currents are reported in A.

/// Reduced Planck constant, eV·fs.
pub const HBAR: f64 = 0.658_211_956_9;
/// Planck constant, eV·fs.
pub const PLANCK: f64 = 2.0 * std::f64::consts::PI * HBAR;
/// Boltzmann constant, eV/K.
pub const K_BOLTZMANN: f64 = 8.617_333_262e-5;
/// ħ²/(2 m0), eV·nm².
pub const HBAR2_OVER_2M0: f64 = 0.038_099_821_2;
/// Spin-degenerate conductance quantum 2e²/h expressed as 2e/h per volt, S.
pub const TWO_E_OVER_H: f64 = 7.748_091_729e-5;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// e/ε0 in V·nm: potential produced by one electron per nm² of areal density over 1 nm.
pub const E_OVER_EPS0: f64 = 18.095_127_4;
/// ħ²π²/m0 per nm², eV. This is the rounded value used by the closed-box estimate.
pub const BOX_CONSTANT: f64 = 0.7525;
/// 1 nm⁻³ expressed in cm⁻³.
pub const PER_NM3_IN_PER_CM3: f64 = 1e21;
/// 1 ns in fs.
pub const NS: f64 = 1e6;

/// Snapshot of the constants, for run manifests.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct UnitSystem {
    pub hbar_ev_fs: f64,
    pub k_boltzmann_ev_per_k: f64,
    pub two_e_over_h_siemens: f64,
    pub elementary_charge_c: f64,
}

pub const UNITS: UnitSystem = UnitSystem {
    hbar_ev_fs: HBAR,
    k_boltzmann_ev_per_k: K_BOLTZMANN,
    two_e_over_h_siemens: TWO_E_OVER_H,
    elementary_charge_c: ELEMENTARY_CHARGE,
};

/// Thermal energy kB·T in eV.
#[inline]
pub fn thermal_energy(temperature: f64) -> f64 {
    K_BOLTZMANN * temperature
}

/// ħ²/(2 m* m0) in eV·nm².
#[inline]
pub fn kinetic_prefactor(m_star: f64) -> f64 {
    HBAR2_OVER_2M0 / m_star
}
