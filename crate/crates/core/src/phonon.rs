//! Deformation-potential electron–phonon scattering in the self-consistent
//! Born approximation with site-local self-energies.
//!
//! Broadening and in-scattering are built from the spectral function A and
//! the electron correlation Gⁿ at phonon-shifted energies:
//! Σⁱⁿ(E) = Σ_m τ̃²[(f+1)Gⁿ_m(E+ħω) + f Gⁿ_m(E−ħω)],
//! Σᵒᵘᵗ(E) = Σ_m τ̃²[(f+1)Gᵖ_m(E−ħω) + f Gᵖ_m(E+ħω)], Γ_ph = Σⁱⁿ + Σᵒᵘᵗ,
//! with Gᵖ = A − Gⁿ. For empty final states Γ_ph reduces to the pure
//! broadening τ̃²[(f+1)A(E−ħω) + f A(E+ħω)]. The real part is off by default;
//! when enabled it is τ̃²[(f+1)Re G(E−ħω) + f Re G(E+ħω)], exact in the
//! quasi-elastic limit.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::device::{MaterialParams, GAAS_HALF_LATTICE};
use crate::error::{Error, Result};
use crate::hamiltonian::{broadening, build_hamiltonian};
use crate::negf::{full_green, EnergyGrid, NegfEngine, Resonance};
use crate::scf::DeviceModel;
use crate::stats::bose_einstein;
use crate::transverse::subband_ladder;
use crate::units;
use crate::BiasPoint;

type C = Complex<f64>;

const HBAR_SI: f64 = 1.054_571_817e-34;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BranchKind {
    Acoustic,
    Optical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhononBranch {
    pub kind: BranchKind,
    /// ħω, eV.
    pub energy: f64,
    /// Deformation potential D, eV.
    pub deformation: f64,
    /// ρ, kg/m³.
    pub mass_density: f64,
    /// Normalization volume Ω, nm³.
    pub volume: f64,
    /// Strain wavevector |β|, 1/nm.
    pub wavevector: f64,
}

impl PhononBranch {
    /// Acoustic branch with |β| = ω/v_s.
    pub fn acoustic(mat: &MaterialParams, volume: f64) -> Self {
        let omega = mat.phonon_energy_acoustic / units::HBAR * 1e15;
        Self {
            kind: BranchKind::Acoustic,
            energy: mat.phonon_energy_acoustic,
            deformation: mat.deformation_potential,
            mass_density: mat.mass_density,
            volume,
            wavevector: omega / mat.sound_velocity * 1e-9,
        }
    }

    /// Optical branch with the zone-boundary wavevector π/a_lattice.
    pub fn optical(mat: &MaterialParams, volume: f64) -> Self {
        Self {
            kind: BranchKind::Optical,
            energy: mat.phonon_energy_optical,
            deformation: mat.deformation_potential,
            mass_density: mat.mass_density,
            volume,
            wavevector: std::f64::consts::PI / (2.0 * GAAS_HALF_LATTICE),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.energy > 0.0 && self.mass_density > 0.0 && self.volume > 0.0) {
            return Err(Error::invalid("phonon branch", "ħω, ρ and Ω must be > 0"));
        }
        if !self.deformation.is_finite() {
            return Err(Error::invalid("deformation", "must be finite"));
        }
        Ok(())
    }
}

/// τ̃ = D·|β|·u₀ with u₀² = ħ f_BE / (2ρΩω), eV.
pub fn coupling_strength(branch: &PhononBranch, temperature: f64) -> f64 {
    let f = bose_einstein(branch.energy, units::thermal_energy(temperature));
    coupling_from_occupation(branch, f)
}

/// τ̃ at a given phonon occupation.
pub fn coupling_from_occupation(branch: &PhononBranch, occupation: f64) -> f64 {
    let omega = branch.energy / units::HBAR * 1e15;
    let volume = branch.volume * 1e-27;
    let u0 = (HBAR_SI * occupation / (2.0 * branch.mass_density * volume * omega)).sqrt();
    branch.deformation * (branch.wavevector * 1e9) * u0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhononOptions {
    pub enabled: bool,
    pub acoustic: bool,
    pub optical: bool,
    /// Treat the acoustic branch in the ħω → 0 limit.
    pub quasi_elastic_acoustic: bool,
    /// Born-loop mixing fraction.
    pub mixing: f64,
    /// Convergence threshold on max|ΔΣ|, eV.
    pub tol: f64,
    pub max_iter: usize,
    /// Include Re Σ_ph.
    pub real_part: bool,
}

impl Default for PhononOptions {
    fn default() -> Self {
        Self {
            enabled: false,
            acoustic: true,
            optical: true,
            quasi_elastic_acoustic: true,
            mixing: 0.5,
            tol: 1e-10,
            max_iter: 400,
            real_part: false,
        }
    }
}

impl PhononOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.mixing > 0.0 && self.mixing <= 1.0) {
            return Err(Error::invalid("phonon.mixing", "must lie in (0, 1]"));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::invalid("phonon.tol", "tol and max_iter must be > 0"));
        }
        Ok(())
    }
}

/// One scattering channel: shift ħω and emission/absorption strengths
/// τ̃²(f+1), τ̃² f (eV²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scatterer {
    pub shift: f64,
    pub emission: f64,
    pub absorption: f64,
}

/// Scatterers for the enabled branches at temperature `temperature`.
pub fn scatterers(mat: &MaterialParams, volume: f64, opts: &PhononOptions) -> Vec<Scatterer> {
    let kt = units::thermal_energy(mat.temperature);
    let mut out = Vec::new();
    let mut push = |b: PhononBranch, elastic: bool| {
        let f = bose_einstein(b.energy, kt);
        let tau = coupling_from_occupation(&b, f);
        let t2 = tau * tau;
        // τ̃ already carries f; the bare strength per phonon is τ̃²/f
        let per = if f > 0.0 { t2 / f } else { 0.0 };
        out.push(Scatterer {
            shift: if elastic { 0.0 } else { b.energy },
            emission: per * (f + 1.0),
            absorption: per * f,
        });
    };
    if opts.acoustic {
        push(PhononBranch::acoustic(mat, volume), opts.quasi_elastic_acoustic);
    }
    if opts.optical {
        push(PhononBranch::optical(mat, volume), false);
    }
    out
}

/// Converged Born self-energy and the observables computed with it.
#[derive(Debug, Clone)]
pub struct PhononSolution {
    pub grid: EnergyGrid,
    /// Γ_ph per mode, site and energy, `gamma[m][i][k]`, eV.
    pub gamma: Vec<Vec<Vec<f64>>>,
    /// Σⁱⁿ_ph, same layout, eV.
    pub sigma_in: Vec<Vec<Vec<f64>>>,
    /// Re Σ_ph, same layout, eV; zero unless enabled.
    pub sigma_re: Vec<Vec<Vec<f64>>>,
    pub iterations: usize,
    /// max|ΔΣ| per iteration, eV.
    pub history: Vec<f64>,
    /// Drain-terminal current, A.
    pub current: f64,
    /// Source-terminal current, A.
    pub source_current: f64,
    /// (2/2πa)[G Γ_ph G†]_ii summed over modes, `[k][i]`, 1/(eV·nm).
    pub scattered_ldos: Vec<Vec<f64>>,
}

impl PhononSolution {
    /// Σ_ph at one mode, site and grid index.
    pub fn sigma(&self, mode: usize, site: usize, k: usize) -> C {
        C::new(self.sigma_re[mode][site][k], -0.5 * self.gamma[mode][site][k])
    }
}

struct Pass {
    a: Vec<Vec<f64>>,
    re_g: Vec<Vec<f64>>,
    gn: Vec<Vec<f64>>,
    drain: f64,
    source: f64,
    scattered: Vec<f64>,
}

fn evaluate(engine: &NegfEngine<'_>, e: f64, gamma: &[Vec<f64>], sigma_in: &[Vec<f64>], sigma_re: &[Vec<f64>]) -> Result<Pass> {
    let h = engine.hamiltonian;
    let n = h.sites();
    let (fs, fd) = (engine.contacts.f_s(e), engine.contacts.f_d(e));
    let modes = engine.active_modes();
    let mut a_all = Vec::with_capacity(modes.len());
    let mut re_all = Vec::with_capacity(modes.len());
    let mut gn_all = Vec::with_capacity(modes.len());
    let mut drain = 0.0;
    let mut source = 0.0;
    let mut scattered = vec![0.0; n];
    let pref = 2.0 / (2.0 * std::f64::consts::PI * h.spacing);
    for (slot, &m) in modes.iter().enumerate() {
        let (ss, sd) = engine.self_energies(m, e);
        let (gs, gd) = (broadening(ss), broadening(sd));
        let local: Vec<C> = gamma[slot].iter().zip(&sigma_re[slot]).map(|(g, r)| C::new(*r, -0.5 * g)).collect();
        let chain = &h.modes[m];
        let g = full_green(C::new(e, 0.0), &chain.diag, h.hopping, ss, sd, Some(&local)).or_else(|_| {
            full_green(C::new(e, 1e-15 * e.abs().max(1.0)), &chain.diag, h.hopping, ss, sd, Some(&local))
        })?;
        let mut inj = sigma_in[slot].clone();
        inj[0] += gs * fs;
        inj[n - 1] += gd * fd;
        let mut a = vec![0.0; n];
        let mut gn = vec![0.0; n];
        for i in 0..n {
            a[i] = -2.0 * g[i][i].im;
            let mut acc = 0.0;
            let mut sc = 0.0;
            for j in 0..n {
                let w = g[i][j].norm_sqr();
                acc += w * inj[j];
                sc += w * gamma[slot][j];
            }
            gn[i] = acc;
            scattered[i] += pref * sc;
        }
        drain += gd * (gn[n - 1] - fd * a[n - 1]);
        source += gs * (gn[0] - fs * a[0]);
        a_all.push(a);
        re_all.push((0..n).map(|i| g[i][i].re).collect());
        gn_all.push(gn);
    }
    Ok(Pass {
        a: a_all,
        re_g: re_all,
        gn: gn_all,
        drain,
        source,
        scattered,
    })
}

/// Self-consistent Born loop on `grid`, starting from the phonon-free G.
pub fn born_self_energy(
    engine: &NegfEngine<'_>,
    grid: &EnergyGrid,
    scatter: &[Scatterer],
    opts: &PhononOptions,
) -> Result<PhononSolution> {
    opts.validate()?;
    let n = engine.hamiltonian.sites();
    let nm = engine.active_modes().len();
    let nk = grid.len();
    // [m][i][k]
    let mut gamma = vec![vec![vec![0.0; nk]; n]; nm];
    let mut sigma_in = vec![vec![vec![0.0; nk]; n]; nm];
    let mut sigma_re = vec![vec![vec![0.0; nk]; n]; nm];
    let mut history = Vec::new();
    let slice_at = |x: &Vec<Vec<Vec<f64>>>, k: usize| -> Vec<Vec<f64>> {
        x.iter().map(|m| m.iter().map(|s| s[k]).collect()).collect()
    };
    let mut iterations = 0;
    loop {
        let passes: Vec<Result<Pass>> = (0..nk)
            .into_par_iter()
            .map(|k| evaluate(engine, grid.energies[k], &slice_at(&gamma, k), &slice_at(&sigma_in, k), &slice_at(&sigma_re, k)))
            .collect();
        let passes: Vec<Pass> = passes.into_iter().collect::<Result<_>>()?;
        let active = scatter.iter().any(|s| s.emission != 0.0 || s.absorption != 0.0);
        let converged = !active || history.last().is_some_and(|&c: &f64| c < opts.tol);
        if converged || iterations >= opts.max_iter {
            if !converged {
                return Err(Error::BornNotConverged {
                    iterations,
                    last_change: *history.last().unwrap_or(&f64::NAN),
                    history,
                });
            }
            let drain: Vec<f64> = passes.iter().map(|p| p.drain).collect();
            let source: Vec<f64> = passes.iter().map(|p| p.source).collect();
            return Ok(PhononSolution {
                grid: grid.clone(),
                gamma,
                sigma_in,
                sigma_re,
                iterations,
                history,
                current: units::TWO_E_OVER_H * grid.integrate(&drain),
                source_current: -units::TWO_E_OVER_H * grid.integrate(&source),
                scattered_ldos: passes.into_iter().map(|p| p.scattered).collect(),
            });
        }
        // [m][i][k] tables for interpolation at shifted energies
        let a_t: Vec<Vec<Vec<f64>>> = (0..nm)
            .map(|m| (0..n).map(|i| passes.iter().map(|p| p.a[m][i]).collect()).collect())
            .collect();
        let gn_t: Vec<Vec<Vec<f64>>> = (0..nm)
            .map(|m| (0..n).map(|i| passes.iter().map(|p| p.gn[m][i]).collect()).collect())
            .collect();
        let re_t: Vec<Vec<Vec<f64>>> = (0..nm)
            .map(|m| (0..n).map(|i| passes.iter().map(|p| p.re_g[m][i]).collect()).collect())
            .collect();
        let updates: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut new_in = vec![0.0; nk];
                let mut new_out = vec![0.0; nk];
                let mut new_re = vec![0.0; nk];
                for k in 0..nk {
                    let e = grid.energies[k];
                    for s in scatter {
                        for m in 0..nm {
                            let (a, gn) = (&a_t[m][i], &gn_t[m][i]);
                            let at = |x: f64, y: &[f64]| {
                                if s.shift == 0.0 {
                                    y[k]
                                } else {
                                    grid.interpolate(y, x)
                                }
                            };
                            let gn_up = at(e + s.shift, gn);
                            let gn_dn = at(e - s.shift, gn);
                            let gp_up = (at(e + s.shift, a) - gn_up).max(0.0);
                            let gp_dn = (at(e - s.shift, a) - gn_dn).max(0.0);
                            new_in[k] += s.emission * gn_up + s.absorption * gn_dn;
                            new_out[k] += s.emission * gp_dn + s.absorption * gp_up;
                            if opts.real_part {
                                let re = &re_t[m][i];
                                new_re[k] += s.emission * at(e - s.shift, re) + s.absorption * at(e + s.shift, re);
                            }
                        }
                    }
                }
                (new_in, new_out, new_re)
            })
            .collect();
        let mut change: f64 = 0.0;
        let beta = opts.mixing;
        for (i, (new_in, new_out, new_re)) in updates.into_iter().enumerate() {
            for k in 0..nk {
                let g_new = new_in[k] + new_out[k];
                // the same Σ acts on every mode (unit form factors)
                for m in 0..nm {
                    let g_old = gamma[m][i][k];
                    let s_old = sigma_in[m][i][k];
                    let r_old = sigma_re[m][i][k];
                    change = change
                        .max(0.5 * (g_new - g_old).abs())
                        .max((new_in[k] - s_old).abs())
                        .max((new_re[k] - r_old).abs());
                    gamma[m][i][k] = (1.0 - beta) * g_old + beta * g_new;
                    sigma_re[m][i][k] = (1.0 - beta) * r_old + beta * new_re[k];
                    sigma_in[m][i][k] = (1.0 - beta) * s_old + beta * new_in[k];
                }
            }
        }
        history.push(change);
        iterations += 1;
    }
}

/// Resonances shifted by ±ħω so the grid resolves scattering into them.
pub fn shifted_resonances(poles: &[Resonance], scatter: &[Scatterer]) -> Vec<Resonance> {
    let mut out = Vec::new();
    for s in scatter.iter().filter(|s| s.shift > 0.0) {
        for p in poles {
            for sign in [-1.0, 1.0] {
                out.push(Resonance {
                    center: p.center + sign * s.shift,
                    width: p.width,
                });
            }
        }
    }
    out
}

/// Current with and without phonons on a common grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhononCurrent {
    pub with_phonons: f64,
    pub phonon_free: f64,
    pub iterations: usize,
}

impl PhononCurrent {
    pub fn relative_change(&self) -> f64 {
        ((self.with_phonons - self.phonon_free) / self.phonon_free).abs()
    }
}

/// Runs the Born loop for one engine and compares against the coherent current.
pub fn phonon_current(engine: &mut NegfEngine<'_>, scatter: &[Scatterer], opts: &PhononOptions) -> Result<PhononCurrent> {
    let poles: Vec<Resonance> = engine.poles().into_iter().flatten().collect();
    engine.extra_resonances.extend(shifted_resonances(&poles, scatter));
    let free = engine.solve()?;
    let ph = born_self_energy(engine, &free.grid, scatter, opts)?;
    Ok(PhononCurrent {
        with_phonons: ph.current,
        phonon_free: free.current,
        iterations: ph.iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapPoint {
    /// Ground-to-first-excited gap, eV.
    pub gap: f64,
    pub current: f64,
    pub current_phonon_free: f64,
    pub relative_change: f64,
}

/// Current versus an imposed gap between the two lowest transverse levels,
/// at the potential `phi` and bias `bias` (virtual devices).
pub fn gap_scan(model: &DeviceModel, phi: &[f64], bias: &BiasPoint, gaps: &[f64], opts: &PhononOptions) -> Result<Vec<GapPoint>> {
    let scatter = scatterers(&model.materials, model.spec.volume(), opts);
    let e1 = model.modes.energies[0];
    let mut out = Vec::with_capacity(gaps.len());
    for &gap in gaps {
        if !(gap > 0.0) {
            return Err(Error::invalid("gap", "must be > 0"));
        }
        let ladder = subband_ladder(&[e1, e1 + gap], phi, model.numerics.band_offset);
        let h = build_hamiltonian(
            &ladder,
            model.materials.m_star,
            model.spec.grid_spacing,
            model.numerics.lead_alignment,
        );
        let mut engine = model.engine(&h, bias)?;
        let pc = phonon_current(&mut engine, &scatter, opts)?;
        out.push(GapPoint {
            gap,
            current: pc.with_phonons,
            current_phonon_free: pc.phonon_free,
            relative_change: pc.relative_change(),
        });
    }
    Ok(out)
}
