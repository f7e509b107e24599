//! Adaptive non-uniform energy grid with trapezoid weights.
//!
//! Narrow resonances are seeded from pole estimates (a fine uniform patch of
//! ±4 widths plus geometric tails), then the grid is bisected wherever a
//! sampled quantity changes by more than a set fraction between neighbours.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A pole of G: centre (eV) and full width γ = −2 Im z (eV).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Resonance {
    pub center: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridOptions {
    /// Uniform background step, eV.
    pub coarse_step: f64,
    /// Maximum number of energy points.
    pub budget: usize,
    /// Relative neighbour-to-neighbour change that triggers bisection.
    pub variation: f64,
    /// Changes below this fraction of a quantity's global maximum are ignored.
    pub floor: f64,
    /// Extent of the geometric tails around each resonance, eV.
    pub tail_span: f64,
    /// Growth ratio of the tail spacing.
    pub tail_ratio: f64,
    /// Widths below this are treated as this value when seeding, eV.
    pub min_width: f64,
    /// Maximum bisection passes.
    pub max_passes: usize,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            coarse_step: 1e-3,
            budget: 200_000,
            variation: 0.1,
            floor: 1e-4,
            tail_span: 0.05,
            tail_ratio: 1.1,
            min_width: 1e-13,
            max_passes: 30,
        }
    }
}

impl GridOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.coarse_step > 0.0) {
            return Err(Error::invalid("coarse_step", "must be > 0"));
        }
        if self.budget < 16 {
            return Err(Error::invalid("budget", "must be at least 16"));
        }
        if !(self.variation > 0.0 && self.tail_ratio > 1.0 && self.min_width > 0.0) {
            return Err(Error::invalid("grid options", "variation, tail_ratio - 1 and min_width must be > 0"));
        }
        Ok(())
    }
}

/// Sorted energies with trapezoid weights over `[lo, hi]`.
#[derive(Debug, Clone, Default)]
pub struct EnergyGrid {
    pub energies: Vec<f64>,
    pub weights: Vec<f64>,
    /// Resonances the grid was refined around.
    pub resonances: Vec<Resonance>,
    /// Set when the point budget stopped refinement early.
    pub budget_exhausted: bool,
}

impl EnergyGrid {
    /// Builds a grid from arbitrary points, clipped to `[lo, hi]` with both
    /// ends included and near-duplicates removed.
    pub fn from_points(mut points: Vec<f64>, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::invalid("energy window", format!("empty window [{lo}, {hi}]")));
        }
        points.retain(|e| e.is_finite() && *e > lo && *e < hi);
        points.push(lo);
        points.push(hi);
        points.sort_by(f64::total_cmp);
        let mut energies: Vec<f64> = Vec::with_capacity(points.len());
        for e in points {
            let scale = e.abs().max(1.0);
            match energies.last() {
                Some(&p) if e - p <= 4.0 * f64::EPSILON * scale => {}
                _ => energies.push(e),
            }
        }
        if *energies.last().unwrap() != hi {
            // hi was merged into a close neighbour; keep the exact end point.
            let n = energies.len();
            energies[n - 1] = hi;
        }
        let weights = trapezoid_weights(&energies);
        Ok(Self {
            energies,
            weights,
            resonances: Vec::new(),
            budget_exhausted: false,
        })
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn lo(&self) -> f64 {
        self.energies[0]
    }

    pub fn hi(&self) -> f64 {
        self.energies[self.energies.len() - 1]
    }

    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        self.lo() <= lo && self.hi() >= hi
    }

    /// Largest spacing among intervals touching `[center − span, center + span]`.
    pub fn max_spacing_near(&self, center: f64, span: f64) -> f64 {
        let e = &self.energies;
        let start = e.partition_point(|&x| x < center - span).saturating_sub(1);
        let end = e.partition_point(|&x| x <= center + span).min(e.len() - 1);
        (start..end).map(|k| e[k + 1] - e[k]).fold(0.0, f64::max)
    }

    /// ∫ y dE with the grid weights.
    pub fn integrate(&self, y: &[f64]) -> f64 {
        self.weights.iter().zip(y).map(|(w, v)| w * v).sum()
    }

    /// Linear interpolation of samples `y` at `e`; zero outside the grid.
    pub fn interpolate(&self, y: &[f64], e: f64) -> f64 {
        let xs = &self.energies;
        if e < xs[0] || e > xs[xs.len() - 1] {
            return 0.0;
        }
        let k = xs.partition_point(|&x| x <= e);
        if k == 0 {
            return y[0];
        }
        if k >= xs.len() {
            return y[xs.len() - 1];
        }
        let (x0, x1) = (xs[k - 1], xs[k]);
        let s = (e - x0) / (x1 - x0);
        y[k - 1] * (1.0 - s) + y[k] * s
    }
}

pub fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        let h = 0.5 * (x[k + 1] - x[k]);
        w[k] += h;
        w[k + 1] += h;
    }
    w
}

/// Points resolving one resonance: spacing γ/16 over ±4γ, then geometric tails.
pub fn resonance_points(r: Resonance, opts: &GridOptions) -> Vec<f64> {
    let g = r.width.max(opts.min_width);
    let step = g / 16.0;
    let mut pts: Vec<f64> = (-64..=64).map(|s| r.center + s as f64 * step).collect();
    let mut d = 4.0 * g;
    let mut h = step;
    while d < opts.tail_span {
        h *= opts.tail_ratio;
        d += h;
        pts.push(r.center + d);
        pts.push(r.center - d);
    }
    pts
}

/// Background plus resonance-seeded grid on `[lo, hi]`.
pub fn seed_grid(lo: f64, hi: f64, resonances: &[Resonance], opts: &GridOptions) -> Result<EnergyGrid> {
    opts.validate()?;
    let k0 = (lo / opts.coarse_step).ceil() as i64;
    let k1 = (hi / opts.coarse_step).floor() as i64;
    let mut pts: Vec<f64> = (k0..=k1).map(|k| k as f64 * opts.coarse_step).collect();
    let inside: Vec<Resonance> = resonances
        .iter()
        .copied()
        .filter(|r| r.center + 4.0 * r.width > lo && r.center - 4.0 * r.width < hi)
        .collect();
    for r in &inside {
        pts.extend(resonance_points(*r, opts));
    }
    let mut grid = EnergyGrid::from_points(pts, lo, hi)?;
    grid.resonances = inside;
    if grid.len() > opts.budget {
        grid.budget_exhausted = true;
    }
    Ok(grid)
}

/// Source of pole estimates and sampled quantities driving refinement.
pub trait ResonanceDetector: Sync {
    fn resonances(&self) -> Vec<Resonance>;
    /// Non-negative quantities (transmission, occupied LDOS, ...) at `energy`.
    fn sample(&self, energy: f64) -> Vec<f64>;
    /// Number of leading sample components that drive bisection.
    fn criteria(&self) -> usize {
        usize::MAX
    }
}

/// Refinement outcome: the grid and, aligned with it, the sampled values.
#[derive(Debug, Clone)]
pub struct Refined {
    pub grid: EnergyGrid,
    pub samples: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

fn needs_split(a: &[f64], b: &[f64], scale: &[f64], opts: &GridOptions) -> bool {
    a.iter().zip(b).zip(scale).take(scale.len()).any(|((&x, &y), &s)| {
        let d = (x - y).abs();
        d > opts.floor * s && d > opts.variation * x.abs().max(y.abs())
    })
}

/// Seeds the grid with the detector's resonances and bisects intervals with
/// large relative variation until none remain or the budget is spent.
pub fn refine_energy_grid(
    grid: &EnergyGrid,
    detector: &dyn ResonanceDetector,
    opts: &GridOptions,
) -> Result<Refined> {
    opts.validate()?;
    let mut resonances = grid.resonances.clone();
    let mut pts = grid.energies.clone();
    for r in detector.resonances() {
        if r.center > grid.lo() && r.center < grid.hi() {
            pts.extend(resonance_points(r, opts));
            resonances.push(r);
        }
    }
    let seeded = EnergyGrid::from_points(pts, grid.lo(), grid.hi())?;
    let mut energies = seeded.energies;
    let mut samples: Vec<Vec<f64>> = energies.par_iter().map(|&e| detector.sample(e)).collect();
    let mut exhausted = energies.len() > opts.budget;
    let mut warnings = Vec::new();
    let min_gap = 1e-14;
    for _ in 0..opts.max_passes {
        if exhausted {
            break;
        }
        let width = samples.first().map_or(0, |s| s.len()).min(detector.criteria());
        let scale: Vec<f64> = (0..width)
            .map(|c| samples.iter().map(|s| s[c].abs()).fold(0.0, f64::max))
            .collect();
        let split: Vec<usize> = (0..energies.len() - 1)
            .filter(|&k| {
                energies[k + 1] - energies[k] > min_gap * energies[k].abs().max(1.0)
                    && needs_split(&samples[k], &samples[k + 1], &scale, opts)
            })
            .collect();
        if split.is_empty() {
            break;
        }
        let room = opts.budget.saturating_sub(energies.len());
        let take = split.len().min(room);
        if take < split.len() {
            exhausted = true;
        }
        let mids: Vec<f64> = split[..take]
            .iter()
            .map(|&k| 0.5 * (energies[k] + energies[k + 1]))
            .collect();
        let new_samples: Vec<Vec<f64>> = mids.par_iter().map(|&e| detector.sample(e)).collect();
        let mut e2 = Vec::with_capacity(energies.len() + take);
        let mut s2 = Vec::with_capacity(energies.len() + take);
        let mut j = 0;
        for k in 0..energies.len() {
            e2.push(energies[k]);
            s2.push(std::mem::take(&mut samples[k]));
            if j < take && split[j] == k {
                e2.push(mids[j]);
                s2.push(new_samples[j].clone());
                j += 1;
            }
        }
        energies = e2;
        samples = s2;
    }
    if exhausted {
        warnings.push(format!(
            "energy-grid budget of {} points exhausted; narrowest seeded resonance width {:.3e} eV",
            opts.budget,
            resonances.iter().map(|r| r.width).fold(f64::INFINITY, f64::min)
        ));
    }
    let weights = trapezoid_weights(&energies);
    Ok(Refined {
        grid: EnergyGrid {
            energies,
            weights,
            resonances,
            budget_exhausted: exhausted,
        },
        samples,
        warnings,
    })
}
