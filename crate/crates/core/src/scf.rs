//! Device model assembly and the NEGF–Poisson fixed-point iteration.

use serde::{Deserialize, Serialize};

use crate::config::{Config, Numerics};
use crate::device::{build_axial_grid, AxialGrid, BiasPoint, DeviceSpec, MaterialParams};
use crate::error::{Error, Result};
use crate::hamiltonian::{build_hamiltonian, ModeHamiltonian};
use crate::negf::{Contacts, NegfEngine, NegfSolution};
use crate::poisson::{poisson_solve, PoissonOperator};
use crate::stats::{contact_fermi_level, ContactFermiLevel};
use crate::transverse::{solve_transverse_modes, subband_ladder, CrossSectionGrid, SubbandLadder, TransverseModes};

/// Everything that does not change with bias: grids, transverse modes, contact level.
#[derive(Debug, Clone)]
pub struct DeviceModel {
    pub spec: DeviceSpec,
    pub materials: MaterialParams,
    pub numerics: Numerics,
    pub grid: AxialGrid,
    pub modes: TransverseModes,
    pub fermi: ContactFermiLevel,
}

impl DeviceModel {
    pub fn new(spec: DeviceSpec, materials: MaterialParams, numerics: Numerics) -> Result<Self> {
        spec.validate()?;
        materials.validate()?;
        numerics.validate()?;
        let grid = build_axial_grid(&spec)?;
        let h = numerics.transverse_spacing.unwrap_or(spec.grid_spacing);
        let cross = CrossSectionGrid::disk(spec.radius, h)?;
        let modes = solve_transverse_modes(&cross, materials.m_star, numerics.mode_count)?;
        let fermi = contact_fermi_level(&materials);
        Ok(Self {
            spec,
            materials,
            numerics,
            grid,
            modes,
            fermi,
        })
    }

    pub fn from_config(config: &Config) -> Result<Self> {
        Self::new(config.geometry.clone(), config.materials.clone(), config.numerics.clone())
    }

    pub fn contacts(&self, bias: &BiasPoint) -> Contacts {
        Contacts::biased(self.fermi.mu, bias.vd, self.materials.temperature)
    }

    pub fn poisson(&self, bias: &BiasPoint) -> PoissonOperator {
        PoissonOperator::new(&self.spec, &self.materials, &self.grid, bias, self.numerics.gate_coupling)
    }

    pub fn ladder(&self, phi: &[f64]) -> SubbandLadder {
        subband_ladder(&self.modes.energies, phi, self.numerics.band_offset)
    }

    pub fn hamiltonian(&self, phi: &[f64]) -> ModeHamiltonian {
        build_hamiltonian(
            &self.ladder(phi),
            self.materials.m_star,
            self.spec.grid_spacing,
            self.numerics.lead_alignment,
        )
    }

    pub fn engine<'a>(&self, h: &'a ModeHamiltonian, bias: &BiasPoint) -> Result<NegfEngine<'a>> {
        NegfEngine::new(h, self.contacts(bias), self.numerics.engine.clone(), self.spec.cross_section_area())
    }

    /// One NEGF pass at fixed potential.
    pub fn negf(&self, phi: &[f64], bias: &BiasPoint) -> Result<(ModeHamiltonian, NegfSolution)> {
        let h = self.hamiltonian(phi);
        let sol = self.engine(&h, bias)?.solve()?;
        Ok((h, sol))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialGuess {
    /// φ ≡ 0.
    Zero,
    /// Charge-free Poisson solution for the applied gates.
    #[default]
    GateProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScfOptions {
    /// Mixing fraction of the new potential.
    pub beta: f64,
    /// Convergence threshold on max|φ_out − φ_in|, V.
    pub tol: f64,
    pub max_iter: usize,
    pub initial_guess: InitialGuess,
}

impl Default for ScfOptions {
    fn default() -> Self {
        Self {
            beta: 0.2,
            tol: 1e-6,
            max_iter: 300,
            initial_guess: InitialGuess::GateProfile,
        }
    }
}

impl ScfOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::invalid("beta", "must be in (0, 1]"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol", "must be > 0"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter", "must be ≥ 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ScfState {
    /// Potential at which the returned NEGF solution was computed, V.
    pub phi: Vec<f64>,
    /// Electrons per nm.
    pub line_density: Vec<f64>,
    /// Electrons per cm³.
    pub volume_density: Vec<f64>,
    pub iterations: usize,
    /// max|φ_out − φ_in| per iteration, V.
    pub residuals: Vec<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct ScfOutcome {
    pub state: ScfState,
    pub solution: NegfSolution,
    pub hamiltonian: ModeHamiltonian,
    pub bias: BiasPoint,
}

impl ScfOutcome {
    /// Local conduction-band edge −φ(z) + offset, eV.
    pub fn band_edge(&self, model: &DeviceModel) -> Vec<f64> {
        model.ladder(&self.state.phi).band_edge()
    }
}

/// Simple-mixing fixed point of NEGF density and Poisson potential.
pub fn scf_iterate(model: &DeviceModel, bias: &BiasPoint, opts: &ScfOptions) -> Result<ScfOutcome> {
    let op = model.poisson(bias);
    let phi0 = match opts.initial_guess {
        InitialGuess::Zero => vec![0.0; model.grid.len()],
        InitialGuess::GateProfile => poisson_solve(&op, &vec![0.0; model.grid.len()])?,
    };
    scf_from(model, bias, opts, phi0)
}

/// Fixed-point iteration starting from an explicit potential.
pub fn scf_from(model: &DeviceModel, bias: &BiasPoint, opts: &ScfOptions, phi0: Vec<f64>) -> Result<ScfOutcome> {
    opts.validate()?;
    bias.validate()?;
    let op = model.poisson(bias);
    let mut phi = phi0;
    let mut residuals = Vec::new();
    for it in 1..=opts.max_iter {
        let (h, sol) = model.negf(&phi, bias)?;
        let new = poisson_solve(&op, &sol.line_density)?;
        let res = phi.iter().zip(&new).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        residuals.push(res);
        if res < opts.tol {
            return Ok(ScfOutcome {
                state: ScfState {
                    phi,
                    line_density: sol.line_density.clone(),
                    volume_density: sol.volume_density.clone(),
                    iterations: it,
                    residuals,
                    converged: true,
                },
                solution: sol,
                hamiltonian: h,
                bias: *bias,
            });
        }
        for (p, q) in phi.iter_mut().zip(&new) {
            *p = (1.0 - opts.beta) * *p + opts.beta * q;
        }
    }
    Err(Error::ScfNotConverged {
        iterations: opts.max_iter,
        last_residual: *residuals.last().unwrap_or(&f64::NAN),
        history: residuals,
    })
}
