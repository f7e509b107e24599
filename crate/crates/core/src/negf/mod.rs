//! Non-equilibrium Green's function machinery.

pub mod engine;
pub mod green;
pub mod grid;
pub mod poles;

pub use engine::{carrier_density, current_amplitude, Contacts, EngineOptions, NegfEngine, NegfSolution};
pub use green::{full_green, occupied_ldos, solve_g, spectral_density, transmission, ChainGreen};
pub use grid::{refine_energy_grid, seed_grid, EnergyGrid, GridOptions, Refined, Resonance, ResonanceDetector};
pub use poles::{closed_levels, open_poles};
