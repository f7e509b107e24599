//! Closed-form oracle suite shared by the `selftest` command and the
//! acceptance tests. Each check reports its measured figure next to the
//! threshold it must meet.

use std::time::Instant;

use num_complex::Complex;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::device::{build_axial_grid, BiasPoint, DeviceSpec, MaterialParams, Region, GAAS_HALF_LATTICE};
use crate::error::Result;
use crate::hamiltonian::{hopping, lead_self_energy, ModeChain, ModeHamiltonian};
use crate::negf::{full_green, seed_grid, solve_g, transmission, Contacts, EngineOptions, GridOptions, NegfEngine, Resonance};
use crate::poisson::{oxide_kappa2, poisson_solve, GateCoupling, PoissonOperator};
use crate::timedomain::{dominant_frequency, energy_to_time, time_grid};
use crate::transverse::{box_level, box_levels_fd, circular_well_level, solve_transverse_modes, CrossSectionGrid, BESSEL_J0_1};
use crate::units;

type C = Complex<f64>;

#[derive(Debug, Clone, Serialize)]
pub struct OracleCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Measured figure of merit (relative error unless noted).
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
    pub seconds: f64,
}

fn check(name: &'static str, start: Instant, value: f64, threshold: f64, passed: bool, detail: String) -> OracleCheck {
    OracleCheck {
        name,
        passed,
        value,
        threshold,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Single-site device between two semi-infinite leads: RGF transmission
/// against Γ_SΓ_D/((E − ε − 2ReΣ)² + ((Γ_S + Γ_D)/2)²) with the lead
/// self-energy written out from the square-root dispersion.
pub fn breit_wigner() -> Result<OracleCheck> {
    let start = Instant::now();
    let t = 0.05;
    let eps = 2.0 * t + 0.01;
    let sigma = |e: f64| {
        let x = (e - 2.0 * t) / (2.0 * t);
        if x.abs() <= 1.0 {
            C::new(t * x, -t * (1.0 - x * x).sqrt())
        } else {
            C::new(t * (x - x.signum() * (x * x - 1.0).sqrt()), 0.0)
        }
    };
    let width = -2.0 * sigma(eps).im;
    let mut worst: f64 = 0.0;
    let n = 4001;
    for k in 0..n {
        let e = eps + width * (-50.0 + 100.0 * k as f64 / (n - 1) as f64);
        let s = sigma(e);
        let g = -2.0 * s.im;
        let exact = g * g / ((e - eps - 2.0 * s.re).powi(2) + g * g);
        let ss = lead_self_energy(e, 0.0, t);
        let gr = solve_g(C::new(e, 0.0), &[eps], t, ss, ss, None)?;
        let num = transmission(&gr, -2.0 * ss.im, -2.0 * ss.im);
        let err = if exact > 0.0 {
            ((num - exact) / exact).abs()
        } else {
            num.abs()
        };
        worst = worst.max(err);
    }
    Ok(check("breit-wigner", start, worst, 1e-10, worst < 1e-10, format!("{n} energies over ±50 linewidths")))
}

/// i(G − G†) = GΓG† on the full default device at 100 seeded random energies.
pub fn spectral_identity(seed: u64) -> Result<OracleCheck> {
    let start = Instant::now();
    let spec = DeviceSpec::default();
    let mat = MaterialParams::default();
    let grid = build_axial_grid(&spec)?;
    let phi = poisson_solve(
        &PoissonOperator::new(&spec, &mat, &grid, &BiasPoint::new(1.15, 1.3, 0.0, 0.0), GateCoupling::Everywhere),
        &vec![0.0; grid.len()],
    )?;
    let t = hopping(mat.m_star, spec.grid_spacing);
    let diag: Vec<f64> = phi.iter().map(|p| 2.0 * t + 0.5855 - p).collect();
    let mut rng = StdRng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let e: f64 = rng.random_range(0.0..1.0);
        let ss = lead_self_energy(e, 0.0, t);
        let g = full_green(C::new(e, 0.0), &diag, t, ss, ss, None)?;
        let n = diag.len();
        let (gs, gd) = (-2.0 * ss.im, -2.0 * ss.im);
        let mut scale: f64 = 0.0;
        let mut diff: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let a = C::new(0.0, 1.0) * (g[i][j] - g[j][i].conj());
                let b = g[i][0] * g[j][0].conj() * gs + g[i][n - 1] * g[j][n - 1].conj() * gd;
                scale = scale.max(a.norm());
                diff = diff.max((a - b).norm());
            }
        }
        worst = worst.max(diff / scale);
    }
    Ok(check("spectral-identity", start, worst, 1e-10, worst < 1e-10, format!("seed {seed}, full matrices")))
}

/// Ground transverse mode against the J₀ zero at spacings a, a/2, a/4.
pub fn circular_well() -> Result<OracleCheck> {
    let start = Instant::now();
    let (r, m) = (2.5, 0.06);
    let exact = circular_well_level(BESSEL_J0_1, r, m);
    let mut errors = Vec::new();
    for div in [1.0, 2.0, 4.0] {
        let g = CrossSectionGrid::disk(r, GAAS_HALF_LATTICE / div)?;
        let modes = solve_transverse_modes(&g, m, 1)?;
        errors.push(((modes.energies[0] - exact) / exact).abs());
    }
    let passed = errors[0] < 0.03 && errors[1] < errors[0] && errors[2] < errors[1];
    Ok(check("circular-well", start, errors[0], 0.03, passed, format!("errors at a, a/2, a/4: {:.3e}, {:.3e}, {:.3e}", errors[0], errors[1], errors[2])))
}

/// ε211 − ε111 of a 5×5×3 nm³ box: closed form and finite differences.
pub fn box_spacing() -> Result<OracleCheck> {
    let start = Instant::now();
    let l = [5.0, 5.0, 3.0];
    let analytic = box_level([2, 1, 1], l, 0.06) - box_level([1, 1, 1], l, 0.06);
    let fd = box_levels_fd(l, 0.06, GAAS_HALF_LATTICE, 2)?;
    let numeric = fd[1] - fd[0];
    let rel = ((numeric - analytic) / analytic).abs();
    let passed = (analytic - 0.7525).abs() < 5e-4 && rel < 0.02;
    Ok(check(
        "box-spacing",
        start,
        rel,
        0.02,
        passed,
        format!("analytic {analytic:.4} eV, finite-difference {numeric:.4} eV"),
    ))
}

/// Decay length of φ into a long ungated extension against 1/κ, plus the
/// residual of the direct solve.
pub fn poisson_decay() -> Result<OracleCheck> {
    let start = Instant::now();
    let spec = DeviceSpec {
        channel_length: 60.0,
        gate2_to_drain: 48.0,
        ..DeviceSpec::default()
    };
    let mat = MaterialParams::default();
    let grid = build_axial_grid(&spec)?;
    let op = PoissonOperator::new(&spec, &mat, &grid, &BiasPoint::new(1.0, 1.0, 0.0, 0.0), GateCoupling::Everywhere);
    let lambda = vec![0.0; grid.len()];
    let phi = poisson_solve(&op, &lambda)?;
    let residual = op.residual(&phi, &lambda);
    let edge = grid.range(Region::Gate2).end;
    // log-slope between 2 and 6 nm past the gate edge
    let (i1, i2) = (edge + (2.0 / grid.spacing).round() as usize, edge + (6.0 / grid.spacing).round() as usize);
    let length = (grid.z[i2] - grid.z[i1]) / (phi[i1] / phi[i2]).ln();
    let expect = 1.0 / oxide_kappa2(spec.radius, spec.oxide_thickness, mat.eps_nw_rel, mat.eps_ox_rel).sqrt();
    let rel = ((length - expect) / expect).abs();
    Ok(check(
        "poisson-decay",
        start,
        rel,
        0.02,
        rel < 0.02 && residual < 1e-12,
        format!("decay {length:.4} nm vs 1/κ {expect:.4} nm, residual {residual:.2e}"),
    ))
}

fn pole(e: f64, c: f64, gamma: f64) -> C {
    C::new(1.0, 0.0) / C::new(e - c, 0.5 * gamma)
}

/// Decay rate γ/2ħ of one Lorentzian and the ΔE/h beat of two.
pub fn lorentzian_transform() -> Result<OracleCheck> {
    let start = Instant::now();
    let opts = GridOptions {
        tail_span: 0.5,
        tail_ratio: 1.02,
        ..GridOptions::default()
    };
    let gamma = 1e-4;
    let g = seed_grid(-1.0, 1.0, &[Resonance { center: 0.0, width: gamma }], &opts)?;
    let k: Vec<C> = g.energies.iter().map(|&e| pole(e, 0.0, gamma)).collect();
    let tau = units::HBAR / gamma;
    let f = energy_to_time(&g.energies, &k, &[2.0 * tau, 6.0 * tau]);
    let rate = (f[0].norm() / f[1].norm()).ln() / (4.0 * tau);
    let decay_err = ((rate - gamma / (2.0 * units::HBAR)) / (gamma / (2.0 * units::HBAR))).abs();

    let (gamma2, split) = (2e-6, 2e-4);
    let res = [
        Resonance { center: -0.5 * split, width: gamma2 },
        Resonance { center: 0.5 * split, width: gamma2 },
    ];
    let g2 = seed_grid(-1.0, 1.0, &res, &opts)?;
    let k2: Vec<C> = g2
        .energies
        .iter()
        .map(|&e| pole(e, -0.5 * split, gamma2) + pole(e, 0.5 * split, gamma2))
        .collect();
    let (times, _) = time_grid(12.0 * units::PLANCK / split, 4096);
    let mag: Vec<f64> = energy_to_time(&g2.energies, &k2, &times).iter().map(|c| c.norm()).collect();
    let exact = split / units::PLANCK;
    let beat_err = dominant_frequency(&times, &mag, 5.0).map_or(f64::INFINITY, |f| ((f - exact) / exact).abs());
    let worst = decay_err.max(beat_err);
    Ok(check(
        "lorentzian-transform",
        start,
        worst,
        0.01,
        worst < 0.01,
        format!("decay error {decay_err:.2e}, beat error {beat_err:.2e}"),
    ))
}

/// Electrons in a narrow dot level far below both Fermi levels, counted over
/// ±1000 half-widths of the resonance (Lorentzian tail loss 0.06%).
pub fn kramers_weight() -> Result<OracleCheck> {
    let start = Instant::now();
    let a = GAAS_HALF_LATTICE;
    let t = hopping(0.06, a);
    // 20-site well between 12-site, 2 eV barriers
    let n = 64;
    let diag: Vec<f64> = (0..n)
        .map(|i| 2.0 * t + if (10..22).contains(&i) || (42..54).contains(&i) { 2.0 } else { 0.0 })
        .collect();
    let h = ModeHamiltonian {
        modes: vec![ModeChain {
            diag,
            lead_bottom: [0.0, 0.0],
            transverse: 0.0,
        }],
        hopping: t,
        spacing: a,
        coupling: vec![vec![vec![0.0; n]]],
    };
    let level = crate::negf::open_poles(&h.modes[0], t, 0.0, 1.0)
        .into_iter()
        .min_by(|p, q| p.center.total_cmp(&q.center))
        .ok_or_else(|| crate::error::Error::invalid("kramers oracle", "no dot level"))?;
    let mu = level.center + 0.3;
    let engine = NegfEngine::new(&h, Contacts::biased(mu, 0.0, 300.0), EngineOptions::default(), 1.0)?;
    let span = 500.0 * level.width;
    let grid = seed_grid(
        level.center - span,
        level.center + span,
        &[level],
        &GridOptions {
            tail_span: span,
            ..GridOptions::default()
        },
    )?;
    let totals: Vec<f64> = grid
        .energies
        .iter()
        .map(|&e| engine.evaluate(e).1.iter().sum::<f64>() * a)
        .collect();
    let electrons = grid.integrate(&totals);
    let err = (electrons - 2.0).abs();
    Ok(check(
        "kramers-weight",
        start,
        err,
        0.01,
        err <= 0.01,
        format!("{electrons:.5} electrons at E = {:.4} eV, width {:.2e} eV", level.center, level.width),
    ))
}

/// The full oracle suite in a fixed order.
pub fn run_all() -> Vec<(&'static str, Result<OracleCheck>)> {
    vec![
        ("breit-wigner", breit_wigner()),
        ("spectral-identity", spectral_identity(7)),
        ("circular-well", circular_well()),
        ("box-spacing", box_spacing()),
        ("poisson-decay", poisson_decay()),
        ("lorentzian-transform", lorentzian_transform()),
        ("kramers-weight", kramers_weight()),
    ]
}
