//! Per-mode axial tight-binding chains and the semi-infinite lead self-energy.

use num_complex::Complex;

use crate::scalar::Scalar;
use crate::transverse::SubbandLadder;
use crate::units;

/// Nearest-neighbour hopping t = ħ²/(2 m* m0 a²), eV.
pub fn hopping<T: Scalar>(m_star: T, spacing: T) -> T {
    T::lit(units::HBAR2_OVER_2M0) / (m_star * spacing * spacing)
}

/// Surface self-energy of a semi-infinite uniform chain (on-site 2t + E_b,
/// hopping −t) attached to the first or last device site.
///
/// With x = (E − E_b − 2t)/(2t): inside the band σ = t(x − i√(1−x²)) on the
/// retarded branch; outside, the real root with |σ| ≤ t (decaying lead state).
pub fn lead_self_energy<T: Scalar>(energy: T, band_bottom: T, t: T) -> Complex<T> {
    let two = T::lit(2.0);
    let x = (energy - band_bottom - two * t) / (two * t);
    if x.abs() <= T::one() {
        Complex::new(t * x, -t * (T::one() - x * x).sqrt())
    } else if x < T::zero() {
        Complex::new(t * (x + (x * x - T::one()).sqrt()), T::zero())
    } else {
        Complex::new(t * (x - (x * x - T::one()).sqrt()), T::zero())
    }
}

/// Broadening Γ = i(σ − σ*) = −2 Im σ.
pub fn broadening<T: Scalar>(sigma: Complex<T>) -> T {
    -T::lit(2.0) * sigma.im
}

/// Where the lead band bottom of each mode sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeadAlignment {
    /// Every mode's lead band starts at the bulk contact conduction-band edge;
    /// the confinement step at the contact/channel junction forms the tunnel
    /// barriers.
    #[default]
    BulkEdge,
    /// Leads are ideal extensions of each channel mode (band bottom E_n + offset).
    ModeEdge,
}

/// One transverse mode's axial chain.
#[derive(Debug, Clone)]
pub struct ModeChain {
    /// Diagonal 2t + E_sub,n(z_i), eV.
    pub diag: Vec<f64>,
    /// Lead band bottoms for source and drain, eV.
    pub lead_bottom: [f64; 2],
    /// Transverse energy of this mode, eV.
    pub transverse: f64,
}

impl ModeChain {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Lowest sub-band edge along the chain, eV.
    pub fn min_edge(&self, t: f64) -> f64 {
        self.diag.iter().fold(f64::INFINITY, |m, &d| m.min(d - 2.0 * t))
    }
}

/// Block-diagonal mode-space Hamiltonian.
#[derive(Debug, Clone)]
pub struct ModeHamiltonian {
    pub modes: Vec<ModeChain>,
    /// Hopping t, eV (off-diagonal is −t).
    pub hopping: f64,
    pub spacing: f64,
    /// Inter-mode coupling per site, `coupling[m][n][i]`. Zero when the
    /// cross-section potential is z-independent; kept so a coupled-mode solver
    /// can be plugged in.
    pub coupling: Vec<Vec<Vec<f64>>>,
}

impl ModeHamiltonian {
    pub fn sites(&self) -> usize {
        self.modes.first().map_or(0, |m| m.len())
    }

    pub fn is_mode_diagonal(&self) -> bool {
        self.coupling.iter().flatten().flatten().all(|&c| c == 0.0)
    }

    /// Off-diagonal bands written as (mode, i, diagonal, lower, upper).
    pub fn bands(&self) -> Vec<(usize, usize, f64, f64, f64)> {
        let mut out = Vec::new();
        for (m, chain) in self.modes.iter().enumerate() {
            let n = chain.len();
            for (i, &d) in chain.diag.iter().enumerate() {
                let lower = if i > 0 { -self.hopping } else { 0.0 };
                let upper = if i + 1 < n { -self.hopping } else { 0.0 };
                out.push((m, i, d, lower, upper));
            }
        }
        out
    }
}

/// Assembles each mode's chain from the sub-band ladder.
pub fn build_hamiltonian(
    ladder: &SubbandLadder,
    m_star: f64,
    spacing: f64,
    leads: LeadAlignment,
) -> ModeHamiltonian {
    let t = hopping(m_star, spacing);
    let modes: Vec<ModeChain> = ladder
        .edges
        .iter()
        .zip(&ladder.transverse)
        .map(|(edge, &en)| {
            let bottom = match leads {
                LeadAlignment::BulkEdge => ladder.offset,
                LeadAlignment::ModeEdge => en + ladder.offset,
            };
            ModeChain {
                diag: edge.iter().map(|e| 2.0 * t + e).collect(),
                lead_bottom: [bottom, bottom],
                transverse: en,
            }
        })
        .collect();
    let m = modes.len();
    let n = modes.first().map_or(0, |c| c.len());
    ModeHamiltonian {
        modes,
        hopping: t,
        spacing,
        coupling: vec![vec![vec![0.0; n]; m]; m],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::GAAS_HALF_LATTICE;
    use crate::linalg::tridiagonal_eigenvalues;
    use crate::transverse::subband_ladder;
    use proptest::prelude::*;

    #[test]
    fn default_hopping_is_7_95_ev() {
        let t = hopping(0.06, GAAS_HALF_LATTICE);
        assert!((t - 7.948).abs() < 5e-3, "{t}");
        let t32 = hopping(0.06f32, GAAS_HALF_LATTICE as f32);
        assert!((t32 as f64 - t).abs() < 1e-5 * t);
    }

    #[test]
    fn doubling_spacing_quarters_hopping() {
        let a: f64 = hopping(0.06, 0.3);
        let b = hopping(0.06, 0.6);
        assert!((a / 4.0 - b).abs() < 1e-15 * a);
    }

    #[test]
    fn band_limits() {
        let t: f64 = 2.0;
        let s = lead_self_energy(0.0, 0.0, t);
        assert!((s.re + t).abs() < 1e-14 && s.im.abs() < 1e-14);
        let s = lead_self_energy(2.0 * t, 0.0, t);
        assert!(s.re.abs() < 1e-14 && (s.im + t).abs() < 1e-14);
    }

    fn fixed_point_error(e: f64, eb: f64, t: f64) -> f64 {
        let s = lead_self_energy(e, eb, t);
        let rhs = Complex::new(t * t, 0.0) / (Complex::new(e - eb - 2.0 * t, 0.0) - s);
        (s - rhs).norm() / t
    }

    #[test]
    fn far_below_band_matches_iterated_recursion() {
        let t: f64 = 7.95;
        let e = -10.0 * t;
        let s = lead_self_energy(e, 0.0, t);
        assert_eq!(s.im, 0.0);
        assert!(s.re.abs() < t);
        let mut it = 0.0;
        for _ in 0..200 {
            it = t * t / (e - 2.0 * t - it);
        }
        assert!((s.re - it).abs() < 1e-12);
    }

    #[test]
    fn fixed_point_holds_over_a_scan() {
        let t = 7.95;
        for k in 0..2000 {
            let e = -3.0 * t + 7.0 * t * k as f64 / 1999.0;
            assert!(fixed_point_error(e, 0.1, t) < 1e-12, "E={e}");
            let s = lead_self_energy(e, 0.1, t);
            assert!(s.im <= 0.0 && broadening(s) >= 0.0);
        }
    }

    #[test]
    fn continuous_across_band_edges() {
        let t = 1.0;
        for edge in [0.0, 4.0] {
            let a = lead_self_energy(edge - 1e-12, 0.0, t);
            let b = lead_self_energy(edge + 1e-12, 0.0, t);
            assert!((a - b).norm() < 1e-5);
        }
    }

    #[test]
    fn two_site_eigenvalues() {
        let ladder = subband_ladder(&[0.0], &[0.0, 0.0], 0.0);
        let h = build_hamiltonian(&ladder, 0.06, GAAS_HALF_LATTICE, LeadAlignment::BulkEdge);
        let t = h.hopping;
        let ev = tridiagonal_eigenvalues(&h.modes[0].diag, &[-t], -1.0, 10.0 * t, 1e-12);
        assert!((ev[0] - t).abs() < 1e-10 && (ev[1] - 3.0 * t).abs() < 1e-10);
    }

    #[test]
    fn coupling_hook_is_zero() {
        let ladder = subband_ladder(&[0.5, 1.2], &[0.0; 8], 0.0);
        let h = build_hamiltonian(&ladder, 0.06, 0.3, LeadAlignment::BulkEdge);
        assert!(h.is_mode_diagonal());
        assert_eq!(h.coupling.len(), 2);
    }

    proptest! {
        #[test]
        fn constant_shift_moves_spectrum(c in -1.0f64..1.0) {
            let phi: Vec<f64> = (0..12).map(|i| 0.05 * i as f64).collect();
            let shifted: Vec<f64> = phi.iter().map(|p| p - c).collect();
            let h0 = build_hamiltonian(&subband_ladder(&[0.5], &phi, 0.0), 0.06, 0.3, LeadAlignment::BulkEdge);
            let h1 = build_hamiltonian(&subband_ladder(&[0.5], &shifted, 0.0), 0.06, 0.3, LeadAlignment::BulkEdge);
            let t = h0.hopping;
            let off = vec![-t; 11];
            let e0 = tridiagonal_eigenvalues(&h0.modes[0].diag, &off, -5.0, 5.0 * t, 1e-12);
            let e1 = tridiagonal_eigenvalues(&h1.modes[0].diag, &off, -5.0, 5.0 * t, 1e-12);
            for (a, b) in e0.iter().zip(&e1) {
                prop_assert!((b - a - c).abs() < 1e-9);
            }
        }

        #[test]
        fn retarded_everywhere(e in -20.0f64..40.0, eb in -1.0f64..1.0) {
            let s = lead_self_energy(e, eb, 7.95);
            prop_assert!(s.im <= 0.0);
            prop_assert!(fixed_point_error(e, eb, 7.95) < 1e-12);
        }
    }
}
