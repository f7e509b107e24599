//! Energy-resolved NEGF pass over all modes: occupied LDOS, carrier density,
//! transmission and current on an adaptive grid.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::green::{occupied_ldos, solve_g, transmission, ChainGreen};
use super::grid::{refine_energy_grid, seed_grid, EnergyGrid, GridOptions, Resonance, ResonanceDetector};
use super::poles::open_poles;
use crate::error::{Error, Result};
use crate::hamiltonian::{broadening, lead_self_energy, ModeHamiltonian};
use crate::stats::fermi_dirac;
use crate::units;

type C = Complex<f64>;

/// Reservoir electrochemical potentials (eV) and thermal energy kT (eV).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contacts {
    pub mu_s: f64,
    pub mu_d: f64,
    pub kt: f64,
}

impl Contacts {
    /// Drain bias `vd` (V) lowers the drain level: μ_D = μ_S − e·V_D.
    pub fn biased(mu_s: f64, vd: f64, temperature: f64) -> Self {
        Self {
            mu_s,
            mu_d: mu_s - vd,
            kt: units::thermal_energy(temperature),
        }
    }

    pub fn f_s(&self, e: f64) -> f64 {
        fermi_dirac(e, self.mu_s, self.kt)
    }

    pub fn f_d(&self, e: f64) -> f64 {
        fermi_dirac(e, self.mu_d, self.kt)
    }

    /// Energy range the current integral must cover (±`span` kT around both levels).
    pub fn thermal_range(&self, span: f64) -> (f64, f64) {
        (
            self.mu_s.min(self.mu_d) - span * self.kt,
            self.mu_s.max(self.mu_d) + span * self.kt,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineOptions {
    pub grid: GridOptions,
    /// Margin added below the lowest band edge and above the thermal range, eV.
    pub window_margin: f64,
    /// Thermal range half-width in units of kT.
    pub thermal_span: f64,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            grid: GridOptions::default(),
            window_margin: 0.1,
            thermal_span: 20.0,
        }
    }
}

/// Result of one NEGF pass.
#[derive(Debug, Clone)]
pub struct NegfSolution {
    pub grid: EnergyGrid,
    /// Indices of modes with states inside the window.
    pub active_modes: Vec<usize>,
    /// Poles per active mode.
    pub poles: Vec<Vec<Resonance>>,
    /// `transmission[k][m]` for active mode m at grid energy k.
    pub transmission: Vec<Vec<f64>>,
    /// Occupied LDOS summed over modes, `ldos[k][i]`, 1/(eV·nm).
    pub ldos: Vec<Vec<f64>>,
    /// Electrons per nm.
    pub line_density: Vec<f64>,
    /// Electrons per cm³ (line density over the cross-section area).
    pub volume_density: Vec<f64>,
    /// Current amplitude, A.
    pub current: f64,
    pub contacts: Contacts,
    pub warnings: Vec<String>,
}

impl NegfSolution {
    pub fn total_transmission(&self) -> Vec<f64> {
        self.transmission.iter().map(|t| t.iter().sum()).collect()
    }

    /// Electrons in sites `range` (∑ λ_i a).
    pub fn charge_in(&self, range: std::ops::Range<usize>, spacing: f64) -> f64 {
        self.line_density[range].iter().sum::<f64>() * spacing
    }
}

/// I0 = (2e/h) Σ_k w_k T(E_k)[f_S(E_k) − f_D(E_k)], A.
///
/// Refuses a grid that does not span the thermal range of both reservoirs.
pub fn current_amplitude(grid: &EnergyGrid, total_t: &[f64], contacts: &Contacts, span: f64) -> Result<f64> {
    let (need_lo, need_hi) = contacts.thermal_range(span);
    if !grid.covers(need_lo, need_hi) {
        return Err(Error::GridCoverage {
            grid_min: grid.lo(),
            grid_max: grid.hi(),
            need_min: need_lo,
            need_max: need_hi,
        });
    }
    if contacts.mu_s == contacts.mu_d {
        return Ok(0.0);
    }
    let sum: f64 = grid
        .energies
        .iter()
        .zip(&grid.weights)
        .zip(total_t)
        .map(|((&e, &w), &t)| w * t * (contacts.f_s(e) - contacts.f_d(e)))
        .sum();
    Ok(units::TWO_E_OVER_H * sum)
}

/// n(z_i) = Σ_k w_k D(E_k, z_i), electrons per nm.
pub fn carrier_density(grid: &EnergyGrid, ldos: &[Vec<f64>]) -> Vec<f64> {
    let n = ldos.first().map_or(0, |d| d.len());
    let mut out = vec![0.0; n];
    for (w, d) in grid.weights.iter().zip(ldos) {
        for (o, v) in out.iter_mut().zip(d) {
            *o += w * v;
        }
    }
    out
}

/// NEGF evaluator bound to one Hamiltonian and bias.
pub struct NegfEngine<'a> {
    pub hamiltonian: &'a ModeHamiltonian,
    pub contacts: Contacts,
    pub options: EngineOptions,
    /// Extra resonances to resolve (e.g. poles of a regularized isolated G).
    pub extra_resonances: Vec<Resonance>,
    /// Channel cross-section, nm², for the volumetric density.
    pub cross_section_area: f64,
    window: (f64, f64),
    active: Vec<usize>,
}

impl<'a> NegfEngine<'a> {
    pub fn new(
        hamiltonian: &'a ModeHamiltonian,
        contacts: Contacts,
        options: EngineOptions,
        cross_section_area: f64,
    ) -> Result<Self> {
        if !hamiltonian.is_mode_diagonal() {
            return Err(Error::Unsupported(
                "inter-mode coupling is non-zero; only the mode-diagonal solver is implemented".into(),
            ));
        }
        options.grid.validate()?;
        let t = hamiltonian.hopping;
        let (th_lo, th_hi) = contacts.thermal_range(options.thermal_span);
        let hi = th_hi + options.window_margin;
        let active: Vec<usize> = hamiltonian
            .modes
            .iter()
            .enumerate()
            .filter(|(_, m)| m.min_edge(t) < hi)
            .map(|(i, _)| i)
            .collect();
        let edge = active
            .iter()
            .map(|&m| {
                let c = &hamiltonian.modes[m];
                c.min_edge(t).min(c.lead_bottom[0]).min(c.lead_bottom[1])
            })
            .fold(f64::INFINITY, f64::min);
        let lo = (edge - options.window_margin).min(th_lo);
        Ok(Self {
            hamiltonian,
            contacts,
            options,
            extra_resonances: Vec::new(),
            cross_section_area,
            window: (lo, hi),
            active,
        })
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn active_modes(&self) -> &[usize] {
        &self.active
    }

    pub fn self_energies(&self, mode: usize, e: f64) -> (C, C) {
        let c = &self.hamiltonian.modes[mode];
        let t = self.hamiltonian.hopping;
        (
            lead_self_energy(e, c.lead_bottom[0], t),
            lead_self_energy(e, c.lead_bottom[1], t),
        )
    }

    /// G of one mode at real energy `e` (plus an optional site-local self-energy).
    /// An exact pole is moved off the real axis by a negligible amount.
    pub fn green(&self, mode: usize, e: f64, local: Option<&[C]>) -> ChainGreen<f64> {
        let c = &self.hamiltonian.modes[mode];
        let (ss, sd) = self.self_energies(mode, e);
        let t = self.hamiltonian.hopping;
        match solve_g(C::new(e, 0.0), &c.diag, t, ss, sd, local) {
            Ok(g) => g,
            Err(_) => {
                let nudge = 1e-15 * e.abs().max(1.0);
                solve_g(C::new(e, nudge), &c.diag, t, ss, sd, local)
                    .expect("an off-axis energy is never a pole of a Hermitian chain")
            }
        }
    }

    /// Transmission per active mode and occupied LDOS summed over modes.
    pub fn evaluate(&self, e: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.hamiltonian.sites();
        let a = self.hamiltonian.spacing;
        let (fs, fd) = (self.contacts.f_s(e), self.contacts.f_d(e));
        let mut ldos = vec![0.0; n];
        let mut trans = Vec::with_capacity(self.active.len());
        for &m in &self.active {
            let (ss, sd) = self.self_energies(m, e);
            let (gs, gd) = (broadening(ss), broadening(sd));
            let g = self.green(m, e, None);
            trans.push(transmission(&g, gs, gd));
            for (o, v) in ldos.iter_mut().zip(occupied_ldos(&g, gs, gd, fs, fd, a)) {
                *o += v;
            }
        }
        (trans, ldos)
    }

    pub fn poles(&self) -> Vec<Vec<Resonance>> {
        let (lo, hi) = self.window;
        self.active
            .iter()
            .map(|&m| open_poles(&self.hamiltonian.modes[m], self.hamiltonian.hopping, lo, hi))
            .collect()
    }

    /// Full pass: pole search, adaptive grid, LDOS, density and current.
    pub fn solve(&self) -> Result<NegfSolution> {
        let (lo, hi) = self.window;
        let poles = self.poles();
        let mut seeds: Vec<Resonance> = poles.iter().flatten().copied().collect();
        seeds.extend(self.extra_resonances.iter().copied());
        let base = seed_grid(lo, hi, &seeds, &self.options.grid)?;
        let detector = Detector { engine: self };
        let refined = refine_energy_grid(&base, &detector, &self.options.grid)?;
        let grid = refined.grid;
        let na = self.active.len();
        let mut transmission = Vec::with_capacity(grid.len());
        let mut ldos = Vec::with_capacity(grid.len());
        for s in refined.samples {
            transmission.push(s[2..2 + na].to_vec());
            ldos.push(s[2 + na..].to_vec());
        }
        let line_density = carrier_density(&grid, &ldos);
        let area = self.cross_section_area;
        let volume_density = line_density
            .iter()
            .map(|l| l / area * units::PER_NM3_IN_PER_CM3)
            .collect();
        let total: Vec<f64> = transmission.iter().map(|t: &Vec<f64>| t.iter().sum()).collect();
        let current = current_amplitude(&grid, &total, &self.contacts, self.options.thermal_span)?;
        Ok(NegfSolution {
            grid,
            active_modes: self.active.clone(),
            poles,
            transmission,
            ldos,
            line_density,
            volume_density,
            current,
            contacts: self.contacts,
            warnings: refined.warnings,
        })
    }

}

struct Detector<'e, 'a> {
    engine: &'e NegfEngine<'a>,
}

impl ResonanceDetector for Detector<'_, '_> {
    fn resonances(&self) -> Vec<Resonance> {
        Vec::new()
    }

    /// [ΣT, ΣD, T per mode..., D per site...]; only the first two drive refinement.
    fn sample(&self, energy: f64) -> Vec<f64> {
        let (t, d) = self.engine.evaluate(energy);
        let mut out = Vec::with_capacity(2 + t.len() + d.len());
        out.push(t.iter().sum());
        out.push(d.iter().sum());
        out.extend(t);
        out.extend(d);
        out
    }

    fn criteria(&self) -> usize {
        2
    }
}
