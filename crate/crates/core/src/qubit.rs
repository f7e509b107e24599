//! Qubit-level observables: dot occupation, Bloch angles, occupancy onsets
//! and the stability map over the two gate voltages.

use std::ops::Range;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::device::{AxialGrid, BiasPoint, Region};
use crate::error::{Error, Result};
use crate::hamiltonian::ModeHamiltonian;
use crate::linalg::tridiagonal_eigenvector;
use crate::negf::{closed_levels, NegfEngine, NegfSolution};
use crate::scf::{scf_iterate, DeviceModel, ScfOptions, ScfOutcome};

type C = Complex<f64>;

/// Dot charge (electrons) below which the dots count as empty.
pub const EMPTY_DOT_CHARGE: f64 = 1e-3;

/// Where the outer dot boundaries sit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OuterBoundary {
    /// Outer edge of each gate; the contact tails are excluded.
    #[default]
    GateEdge,
    /// Potential maximum between the gate and its contact.
    Barrier,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DotRegions {
    pub left: Range<usize>,
    pub right: Range<usize>,
}

fn centre(r: Range<usize>) -> usize {
    (r.start + r.end - 1) / 2
}

/// Index of the smallest φ in `range`, first on ties.
fn argmin(phi: &[f64], range: Range<usize>) -> usize {
    range
        .clone()
        .fold(range.start, |best, i| if phi[i] < phi[best] { i } else { best })
}

/// Dot regions from the barrier (potential minimum of φ) between the gates.
pub fn dot_regions(grid: &AxialGrid, phi: &[f64], outer: OuterBoundary) -> DotRegions {
    let g1 = grid.range(Region::Gate1);
    let g2 = grid.range(Region::Gate2);
    let (c1, c2) = (centre(g1.clone()), centre(g2.clone()));
    let mid = argmin(phi, c1 + 1..c2);
    let (start, end) = match outer {
        OuterBoundary::GateEdge => (g1.start, g2.end),
        OuterBoundary::Barrier => (argmin(phi, 0..c1), argmin(phi, c2 + 1..phi.len()) + 1),
    };
    DotRegions {
        left: start..mid,
        right: mid + 1..end,
    }
}

/// Closed-chain levels in `[lo, hi)` of every mode whose eigenvector keeps at
/// least half its weight inside `region`, sorted.
pub fn dot_levels(h: &ModeHamiltonian, region: &Range<usize>, lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for chain in &h.modes {
        let off = vec![-h.hopping; chain.diag.len() - 1];
        for e in closed_levels(chain, h.hopping, lo, hi) {
            let v = tridiagonal_eigenvector(&chain.diag, &off, e);
            let norm: f64 = v.iter().map(|x| x * x).sum();
            let inside: f64 = region.clone().map(|i| v[i] * v[i]).sum();
            if inside >= 0.5 * norm {
                out.push(e);
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Spacing between the two lowest levels localized in `region`, eV.
pub fn level_spacing(h: &ModeHamiltonian, region: &Range<usize>, hi: f64) -> Option<f64> {
    let lo = h.modes.iter().flat_map(|m| m.diag.iter()).fold(f64::INFINITY, |a, &d| a.min(d)) - 4.0 * h.hopping;
    let levels = dot_levels(h, region, lo, hi);
    (levels.len() >= 2).then(|| levels[1] - levels[0])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Occupation {
    /// p(z) normalized over both dots, zero elsewhere, 1/nm.
    pub profile: Vec<f64>,
    pub p_left: f64,
    pub p_right: f64,
    /// Electrons in both dots.
    pub dot_charge: f64,
    pub left_charge: f64,
    pub right_charge: f64,
}

/// Normalized positional probability over the two dots; `None` when the dots are empty.
pub fn positional_probability(line_density: &[f64], regions: &DotRegions, spacing: f64) -> Option<Occupation> {
    let sum = |r: &Range<usize>| r.clone().map(|i| line_density[i]).sum::<f64>() * spacing;
    let (l, r) = (sum(&regions.left), sum(&regions.right));
    let total = l + r;
    if !(total >= EMPTY_DOT_CHARGE) {
        return None;
    }
    let mut profile = vec![0.0; line_density.len()];
    for i in regions.left.clone().chain(regions.right.clone()) {
        profile[i] = line_density[i] / total;
    }
    let p_left = l / total;
    Some(Occupation {
        profile,
        p_left,
        p_right: 1.0 - p_left,
        dot_charge: total,
        left_charge: l,
        right_charge: r,
    })
}

/// θ = 2 arccos √p_left.
pub fn polar_angle(p_left: f64) -> f64 {
    2.0 * p_left.clamp(0.0, 1.0).sqrt().acos()
}

/// Which grid point of each dot carries the Green's-function phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhasePoint {
    Start,
    #[default]
    Central,
    End,
}

impl PhasePoint {
    pub fn pick(self, r: &Range<usize>) -> usize {
        match self {
            PhasePoint::Start => r.start,
            PhasePoint::Central => centre(r.clone()),
            PhasePoint::End => r.end - 1,
        }
    }
}

/// Σ_k w_k f_S(E_k) Σ_m G_m,ii(E_k).
pub fn occupied_green(engine: &NegfEngine<'_>, sol: &NegfSolution, site: usize) -> C {
    let vals: Vec<C> = sol
        .grid
        .energies
        .par_iter()
        .map(|&e| {
            let f = engine.contacts.f_s(e);
            engine
                .active_modes()
                .iter()
                .map(|&m| engine.green(m, e, None).diag[site] * f)
                .sum()
        })
        .collect();
    vals.iter().zip(&sol.grid.weights).map(|(v, w)| v * w).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QubitState {
    pub p_left: f64,
    pub p_right: f64,
    pub theta: f64,
    /// arg g_R − arg g_L wrapped to (−π, π]; absent when the dots are empty.
    pub phi: f64,
    pub bias: BiasPoint,
}

/// Bloch angles of a converged solution.
pub fn bloch_angles(model: &DeviceModel, out: &ScfOutcome, point: PhasePoint, outer: OuterBoundary) -> Result<Option<QubitState>> {
    let regions = dot_regions(&model.grid, &out.state.phi, outer);
    let Some(occ) = positional_probability(&out.state.line_density, &regions, model.grid.spacing) else {
        return Ok(None);
    };
    let engine = model.engine(&out.hamiltonian, &out.bias)?;
    let gl = occupied_green(&engine, &out.solution, point.pick(&regions.left));
    let gr = occupied_green(&engine, &out.solution, point.pick(&regions.right));
    let mut phi = gr.arg() - gl.arg();
    if phi <= -std::f64::consts::PI {
        phi += 2.0 * std::f64::consts::PI;
    } else if phi > std::f64::consts::PI {
        phi -= 2.0 * std::f64::consts::PI;
    }
    Ok(Some(QubitState {
        p_left: occ.p_left,
        p_right: occ.p_right,
        theta: polar_angle(occ.p_left),
        phi,
        bias: out.bias,
    }))
}

/// Dot and phase conventions plus onset search settings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QubitOptions {
    pub outer_boundary: OuterBoundary,
    pub phase_point: PhasePoint,
    pub onsets: OnsetOptions,
}

/// Scan and bisection settings for the occupancy onsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OnsetOptions {
    pub vg1_range: [f64; 2],
    pub vg2_range: [f64; 2],
    /// Fixed VG2 while VG1 is scanned, V.
    pub vg2_fixed: f64,
    /// VG1 above the ground onset used for the delocalization scan, V.
    pub deloc_offset: f64,
    pub scan_step: f64,
    pub tol: f64,
    pub outer: OuterBoundary,
}

impl OnsetOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.scan_step > 0.0 && self.tol > 0.0) {
            return Err(Error::invalid("onsets", "scan_step and tol must be > 0"));
        }
        if !(self.vg1_range[1] > self.vg1_range[0] && self.vg2_range[1] > self.vg2_range[0]) {
            return Err(Error::invalid("onsets", "ranges must be increasing"));
        }
        Ok(())
    }
}

impl Default for OnsetOptions {
    fn default() -> Self {
        Self {
            vg1_range: [0.6, 2.4],
            vg2_range: [0.6, 2.4],
            vg2_fixed: 0.0,
            deloc_offset: 0.05,
            scan_step: 0.05,
            tol: 1e-3,
            outer: OuterBoundary::GateEdge,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Onsets {
    pub ground_vg1: f64,
    pub excited_vg1: f64,
    pub delocalization_vg2: f64,
}

/// First upward crossing of `target` by `f` over `[lo, hi]`, bracketed on a
/// uniform scan and refined by bisection. A decrease by more than 1% of the
/// target before the crossing is reported as non-monotone.
pub fn find_crossing(mut f: impl FnMut(f64) -> Result<f64>, lo: f64, hi: f64, step: f64, tol: f64, target: f64, what: &str) -> Result<f64> {
    let n = ((hi - lo) / step).ceil().max(1.0) as usize;
    let mut prev_x = lo;
    let mut prev = f(lo)?;
    if prev >= target {
        return Err(Error::NoCrossing { what: format!("{what} (already above at {lo} V)"), target });
    }
    for k in 1..=n {
        let x = (lo + k as f64 * step).min(hi);
        let y = f(x)?;
        if y < prev - 0.01 * target.abs() {
            return Err(Error::NonMonotone { what: format!("{what} near {x:.4} V") });
        }
        if y >= target {
            let (mut a, mut b) = (prev_x, x);
            while b - a > tol {
                let m = 0.5 * (a + b);
                if f(m)? >= target {
                    b = m;
                } else {
                    a = m;
                }
            }
            return Ok(0.5 * (a + b));
        }
        prev_x = x;
        prev = y;
    }
    Err(Error::NoCrossing { what: what.to_string(), target })
}

/// Left-dot charge, p_right and the converged state at one zero-drain bias.
fn dot_state(model: &DeviceModel, bias: &BiasPoint, scf: &ScfOptions, outer: OuterBoundary) -> Result<(f64, f64)> {
    let out = scf_iterate(model, bias, scf)?;
    let regions = dot_regions(&model.grid, &out.state.phi, outer);
    let occ = positional_probability(&out.state.line_density, &regions, model.grid.spacing);
    let left = out.solution.charge_in(regions.left.clone(), model.grid.spacing);
    Ok((left, occ.map_or(0.0, |o| o.p_right)))
}

/// VG1 onsets of 0.5 and 1.5 electrons in the left dot, and the VG2 where p_right reaches 0.05.
pub fn occupancy_thresholds(model: &DeviceModel, scf: &ScfOptions, opts: &OnsetOptions) -> Result<Onsets> {
    opts.validate()?;
    let left = |vg1: f64| dot_state(model, &BiasPoint::new(vg1, opts.vg2_fixed, 0.0, 0.0), scf, opts.outer).map(|s| s.0);
    let [a, b] = opts.vg1_range;
    let ground = find_crossing(left, a, b, opts.scan_step, opts.tol, 0.5, "left-dot charge")?;
    let excited = find_crossing(left, ground, b, opts.scan_step, opts.tol, 1.5, "left-dot charge")?;
    let vg1 = ground + opts.deloc_offset;
    let right = |vg2: f64| dot_state(model, &BiasPoint::new(vg1, vg2, 0.0, 0.0), scf, opts.outer).map(|s| s.1);
    let [c, d] = opts.vg2_range;
    let deloc = find_crossing(right, c, d, opts.scan_step, opts.tol, 0.05, "p_right")?;
    Ok(Onsets {
        ground_vg1: ground,
        excited_vg1: excited,
        delocalization_vg2: deloc,
    })
}

/// Inclusive `start:stop:step` voltage axis.
pub fn axis(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) {
        return Err(Error::invalid("axis", "need step > 0 and stop >= start"));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| start + k as f64 * step).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapPoint {
    pub vg1: f64,
    pub vg2: f64,
    /// Drain current, A; `None` marks a hole.
    pub current: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityMap {
    pub vg1: Vec<f64>,
    pub vg2: Vec<f64>,
    pub vd: f64,
    /// Row-major over vg1 then vg2.
    pub points: Vec<MapPoint>,
    /// Strict 8-neighbour maxima as (i1, i2), sorted by decreasing current.
    pub maxima: Vec<(usize, usize)>,
    /// Per-vg1 position of the largest current, a sampled ridge.
    pub ridge: Vec<(f64, f64)>,
}

impl StabilityMap {
    pub fn at(&self, i1: usize, i2: usize) -> Option<f64> {
        self.points[i1 * self.vg2.len() + i2].current
    }

    pub fn holes(&self) -> Vec<&MapPoint> {
        self.points.iter().filter(|p| p.current.is_none()).collect()
    }

    pub fn max_current(&self) -> f64 {
        self.points.iter().filter_map(|p| p.current).fold(0.0, f64::max)
    }

    /// Maxima carrying at least `fraction` of the map maximum.
    pub fn dominant_maxima(&self, fraction: f64) -> Vec<(f64, f64, f64)> {
        let top = self.max_current();
        self.maxima
            .iter()
            .filter_map(|&(i, j)| {
                let c = self.at(i, j)?;
                (c >= fraction * top && c > 0.0).then_some((self.vg1[i], self.vg2[j], c))
            })
            .collect()
    }
}

/// Current at one bias from a fresh SCF, no state shared with other points.
pub fn map_current(model: &DeviceModel, bias: &BiasPoint, scf: &ScfOptions) -> Result<f64> {
    Ok(scf_iterate(model, bias, scf)?.solution.current)
}

pub fn stability_diagram(model: &DeviceModel, vg1: &[f64], vg2: &[f64], vd: f64, scf: &ScfOptions) -> StabilityMap {
    let pairs: Vec<(f64, f64)> = vg1.iter().flat_map(|&a| vg2.iter().map(move |&b| (a, b))).collect();
    let points: Vec<MapPoint> = pairs
        .par_iter()
        .map(|&(a, b)| match map_current(model, &BiasPoint::new(a, b, 0.0, vd), scf) {
            Ok(c) => MapPoint { vg1: a, vg2: b, current: Some(c), error: None },
            Err(e) => MapPoint { vg1: a, vg2: b, current: None, error: Some(e.to_string()) },
        })
        .collect();
    StabilityMap::from_points(vg1.to_vec(), vg2.to_vec(), vd, points)
}

impl StabilityMap {
    /// Map from row-major points with maxima and ridge annotated.
    pub fn from_points(vg1: Vec<f64>, vg2: Vec<f64>, vd: f64, points: Vec<MapPoint>) -> Self {
        assert_eq!(points.len(), vg1.len() * vg2.len());
        let mut map = StabilityMap {
            vg1,
            vg2,
            vd,
            points,
            maxima: Vec::new(),
            ridge: Vec::new(),
        };
        map.maxima = local_maxima(&map);
        let (n1, n2) = (map.vg1.len(), map.vg2.len());
        map.ridge = (0..n1)
            .filter_map(|i| {
                let (j, c) = (0..n2)
                    .filter_map(|j| map.at(i, j).map(|c| (j, c)))
                    .fold(None, |acc: Option<(usize, f64)>, (j, c)| match acc {
                        Some((_, bc)) if bc >= c => acc,
                        _ => Some((j, c)),
                    })?;
                (c > 0.0).then_some((map.vg1[i], map.vg2[j]))
            })
            .collect();
        map
    }
}

fn local_maxima(map: &StabilityMap) -> Vec<(usize, usize)> {
    let (n1, n2) = (map.vg1.len(), map.vg2.len());
    let mut out = Vec::new();
    for i in 0..n1 {
        for j in 0..n2 {
            let Some(c) = map.at(i, j) else { continue };
            if c <= 0.0 {
                continue;
            }
            let mut peak = true;
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    if (di, dj) == (0, 0) || a < 0 || b < 0 || a >= n1 as i64 || b >= n2 as i64 {
                        continue;
                    }
                    if map.at(a as usize, b as usize).is_some_and(|v| v >= c) {
                        peak = false;
                    }
                }
            }
            if peak {
                out.push((i, j));
            }
        }
    }
    out.sort_by(|&(a, b), &(c, d)| map.at(c, d).partial_cmp(&map.at(a, b)).unwrap());
    out
}
