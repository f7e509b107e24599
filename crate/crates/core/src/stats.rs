//! Occupation functions and the degenerate contact Fermi level.

use crate::scalar::Scalar;
use crate::units;

/// Fermi–Dirac occupancy 1/(1 + exp((E − μ)/kT)), overflow-safe for any |E − μ|.
pub fn fermi_dirac<T: Scalar>(energy: T, mu: T, kt: T) -> T {
    let x = (energy - mu) / kt;
    if x > T::zero() {
        let e = (-x).exp();
        e / (T::one() + e)
    } else {
        T::one() / (T::one() + x.exp())
    }
}

/// Bose–Einstein occupancy 1/(exp(ħω/kT) − 1) for ħω > 0.
pub fn bose_einstein<T: Scalar>(phonon_energy: T, kt: T) -> T {
    let x = phonon_energy / kt;
    if x > T::lit(700.0) {
        return T::zero();
    }
    T::one() / x.exp_m1()
}

/// Normalized complete Fermi–Dirac integral of order 1/2,
/// F(η) = (2/√π) ∫₀^∞ √x / (1 + e^{x−η}) dx, so F → e^η for η → −∞.
pub fn fermi_dirac_half(eta: f64) -> f64 {
    if eta > 100.0 {
        // Sommerfeld expansion; the omitted terms are O(e^{−η}).
        let pi2 = std::f64::consts::PI.powi(2);
        let lead = 4.0 / (3.0 * std::f64::consts::PI.sqrt()) * eta.powf(1.5);
        return lead * (1.0 + pi2 / (8.0 * eta * eta) + 7.0 * pi2 * pi2 / (640.0 * eta.powi(4)));
    }
    // x = s² removes the square-root endpoint singularity.
    let s_max = (eta.max(0.0) + 60.0).sqrt();
    let intervals = 4000;
    let h = s_max / intervals as f64;
    let f = |s: f64| {
        let x = s * s;
        let arg = x - eta;
        let occ = if arg > 0.0 {
            let e = (-arg).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + arg.exp())
        };
        s * s * occ
    };
    let mut sum = f(0.0) + f(s_max);
    for k in 1..intervals {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(k as f64 * h);
    }
    4.0 / std::f64::consts::PI.sqrt() * sum * h / 3.0
}

/// Effective conduction-band density of states N_c = 2 (m* m0 kT / 2πħ²)^{3/2}, nm⁻³.
pub fn effective_density_of_states(m_star: f64, temperature: f64) -> f64 {
    let kt = units::thermal_energy(temperature);
    let c = units::kinetic_prefactor(m_star);
    2.0 * (kt / (4.0 * std::f64::consts::PI * c)).powf(1.5)
}

/// Contact Fermi level relative to the contact conduction-band edge.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ContactFermiLevel {
    /// μ − E_c, eV.
    pub mu: f64,
    /// Reduced Fermi level (μ − E_c)/kT.
    pub eta: f64,
    /// True when μ lies above the band edge.
    pub degenerate: bool,
}

/// Solves N_c F(η) = N_d for the bulk contact by bisection to a relative
/// density error below 1e-10.
pub fn contact_fermi_level(mat: &crate::device::MaterialParams) -> ContactFermiLevel {
    let nc = effective_density_of_states(mat.m_star, mat.temperature);
    let nd = mat.donor_density / units::PER_NM3_IN_PER_CM3;
    let kt = mat.thermal_energy();
    let density = |eta: f64| nc * fermi_dirac_half(eta);

    let mut lo = -50.0;
    while density(lo) > nd {
        lo *= 2.0;
    }
    let mut hi = 50.0;
    while density(hi) < nd {
        hi *= 2.0;
    }
    let mut eta = 0.5 * (lo + hi);
    for _ in 0..400 {
        eta = 0.5 * (lo + hi);
        let n = density(eta);
        if ((n - nd) / nd).abs() < 1e-10 {
            break;
        }
        if n < nd {
            lo = eta;
        } else {
            hi = eta;
        }
    }
    ContactFermiLevel {
        mu: eta * kt,
        eta,
        degenerate: eta > 0.0,
    }
}
