//! Transverse confinement: finite-difference sub-bands of the circular
//! cross-section, the closed-box level formula and the 3D box solver used as
//! its numerical counterpart.

use crate::error::{Error, Result};
use crate::linalg::{lowest_eigenpairs, SparseSymmetric};
use crate::scalar::Scalar;
use crate::units;

/// Cartesian grid over a disk of radius R with hard walls at r = R.
#[derive(Debug, Clone)]
pub struct CrossSectionGrid {
    pub radius: f64,
    pub spacing: f64,
    /// Grid indices run over `-half..=half` along x and y.
    pub half: i64,
    /// Interior points (ix, iy), row-major in (ix, iy).
    pub points: Vec<(i64, i64)>,
    index: Vec<Option<usize>>,
}

impl CrossSectionGrid {
    pub fn disk(radius: f64, spacing: f64) -> Result<Self> {
        if !(radius > 0.0 && spacing > 0.0) {
            return Err(Error::invalid("radius/spacing", "must be > 0"));
        }
        let half = (radius / spacing).floor() as i64 + 1;
        let side = (2 * half + 1) as usize;
        let mut index = vec![None; side * side];
        let mut points = Vec::new();
        for ix in -half..=half {
            for iy in -half..=half {
                let (x, y) = (ix as f64 * spacing, iy as f64 * spacing);
                if x * x + y * y < radius * radius {
                    index[Self::flat(half, ix, iy)] = Some(points.len());
                    points.push((ix, iy));
                }
            }
        }
        if points.is_empty() {
            return Err(Error::DegenerateGeometry(
                "cross-section grid has no interior points".into(),
            ));
        }
        Ok(Self {
            radius,
            spacing,
            half,
            points,
            index,
        })
    }

    fn flat(half: i64, ix: i64, iy: i64) -> usize {
        let side = 2 * half + 1;
        ((ix + half) * side + (iy + half)) as usize
    }

    pub fn index_of(&self, ix: i64, iy: i64) -> Option<usize> {
        if ix.abs() > self.half || iy.abs() > self.half {
            return None;
        }
        self.index[Self::flat(self.half, ix, iy)]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn coords(&self, k: usize) -> (f64, f64) {
        let (ix, iy) = self.points[k];
        (ix as f64 * self.spacing, iy as f64 * self.spacing)
    }

    /// −(ħ²/2m*)∇² with Dirichlet walls on the circle. Where a stencil
    /// neighbour falls outside, the wall distance δ along that axis replaces
    /// the neighbour by a linear ghost value, which only modifies the diagonal
    /// (h/δ instead of 1) and keeps the operator symmetric.
    pub fn kinetic_operator(&self, m_star: f64) -> SparseSymmetric {
        let c = units::kinetic_prefactor(m_star) / (self.spacing * self.spacing);
        let r2 = self.radius * self.radius;
        let h = self.spacing;
        let mut op = SparseSymmetric::new(self.len());
        for (p, &(ix, iy)) in self.points.iter().enumerate() {
            let (x, y) = (ix as f64 * h, iy as f64 * h);
            let mut diag = 0.0;
            for (dx, dy) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                match self.index_of(ix + dx, iy + dy) {
                    Some(q) => {
                        diag += 1.0;
                        if q > p {
                            op.add_symmetric(p, q, -c);
                        }
                    }
                    None => {
                        let delta = if dx != 0 {
                            (r2 - y * y).max(0.0).sqrt() - x.abs()
                        } else {
                            (r2 - x * x).max(0.0).sqrt() - y.abs()
                        };
                        diag += h / delta.clamp(1e-3 * h, h);
                    }
                }
            }
            op.add_symmetric(p, p, c * diag);
        }
        op
    }
}

/// Lowest transverse eigenpairs (sub-band energies above the local band edge).
#[derive(Debug, Clone)]
pub struct TransverseModes {
    pub energies: Vec<f64>,
    /// Real orthonormal eigenvectors over `grid.points`.
    pub vectors: Vec<Vec<f64>>,
    pub grid: CrossSectionGrid,
}

/// Eigenvalues closer than this are treated as one degenerate cluster.
const DEGENERACY_TOL: f64 = 1e-7;

/// Solves the hard-wall cross-section problem for the `count` lowest modes.
///
/// Degenerate clusters are rotated onto the projections of a fixed list of
/// patterns (1, x, y, x²−y², xy, ...) so the output does not depend on the
/// eigensolver's internal basis choice.
pub fn solve_transverse_modes(
    grid: &CrossSectionGrid,
    m_star: f64,
    count: usize,
) -> Result<TransverseModes> {
    if count == 0 || count > grid.len() {
        return Err(Error::invalid(
            "mode count",
            format!("must be in 1..={}, got {count}", grid.len()),
        ));
    }
    let op = grid.kinetic_operator(m_star);
    // Solve a few extra so a degenerate partner just past `count` is not split off.
    let extra = (count + 2).min(grid.len());
    let ep = lowest_eigenpairs(&op, extra)?;
    let patterns = orientation_patterns(grid);
    let mut energies = ep.values.clone();
    let mut vectors = ep.vectors.clone();
    let mut start = 0;
    while start < extra {
        let mut end = start + 1;
        while end < extra && (ep.values[end] - ep.values[start]).abs() < DEGENERACY_TOL {
            end += 1;
        }
        let oriented = orient_cluster(&ep.vectors[start..end], &patterns);
        let mean = ep.values[start..end].iter().sum::<f64>() / (end - start) as f64;
        for (k, v) in oriented.into_iter().enumerate() {
            vectors[start + k] = v;
            if end - start > 1 {
                energies[start + k] = mean;
            }
        }
        start = end;
    }
    energies.truncate(count);
    vectors.truncate(count);
    Ok(TransverseModes {
        energies,
        vectors,
        grid: grid.clone(),
    })
}

fn orientation_patterns(grid: &CrossSectionGrid) -> Vec<Vec<f64>> {
    let fns: [fn(f64, f64) -> f64; 8] = [
        |_, _| 1.0,
        |x, _| x,
        |_, y| y,
        |x, y| x * x - y * y,
        |x, y| x * y,
        |x, y| x * x * x - 3.0 * x * y * y,
        |x, y| 3.0 * x * x * y - y * y * y,
        |x, y| x * x + y * y,
    ];
    fns.iter()
        .map(|f| {
            (0..grid.len())
                .map(|k| {
                    let (x, y) = grid.coords(k);
                    f(x, y)
                })
                .collect()
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn orient_cluster(cluster: &[Vec<f64>], patterns: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = cluster.len();
    let mut chosen: Vec<Vec<f64>> = Vec::with_capacity(d);
    let candidates = patterns.iter().cloned().chain(cluster.iter().cloned());
    for p in candidates {
        if chosen.len() == d {
            break;
        }
        let pnorm = dot(&p, &p).sqrt();
        let mut v = vec![0.0; p.len()];
        for q in cluster {
            let c = dot(q, &p);
            v.iter_mut().zip(q).for_each(|(o, x)| *o += c * x);
        }
        for q in &chosen {
            let c = dot(q, &v);
            v.iter_mut().zip(q).for_each(|(o, x)| *o -= c * x);
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-6 * pnorm.max(1.0) {
            v.iter_mut().for_each(|x| *x /= norm);
            chosen.push(v);
        }
    }
    chosen
}

/// Closed-box level ħ²π²/(2m*m0)·Σ nᵢ²/Lᵢ², using the rounded box constant 0.7525 eV·nm².
pub fn box_level<T: Scalar>(quantum: [u32; 3], lengths: [T; 3], m_star: T) -> T {
    let pref = T::lit(units::BOX_CONSTANT) / (T::lit(2.0) * m_star);
    let sum = quantum
        .iter()
        .zip(lengths.iter())
        .fold(T::zero(), |acc, (&n, &l)| {
            let n = T::lit(n as f64);
            acc + n * n / (l * l)
        });
    pref * sum
}

/// Lowest `count` levels of a hard-wall rectangular box, from the 3D
/// seven-point finite-difference operator. Each axis uses round(L/h) cells.
pub fn box_levels_fd(lengths: [f64; 3], m_star: f64, spacing: f64, count: usize) -> Result<Vec<f64>> {
    let dims: Vec<(usize, f64)> = lengths
        .iter()
        .map(|&l| {
            let cells = ((l / spacing).round() as usize).max(2);
            (cells - 1, l / cells as f64)
        })
        .collect();
    let (nx, ny, nz) = (dims[0].0, dims[1].0, dims[2].0);
    let c = units::kinetic_prefactor(m_star);
    let idx = |i: usize, j: usize, k: usize| (i * ny + j) * nz + k;
    let mut op = SparseSymmetric::new(nx * ny * nz);
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                let p = idx(i, j, k);
                let diag: f64 = dims.iter().map(|&(_, h)| 2.0 * c / (h * h)).sum();
                op.add_symmetric(p, p, diag);
                if i + 1 < nx {
                    op.add_symmetric(p, idx(i + 1, j, k), -c / (dims[0].1 * dims[0].1));
                }
                if j + 1 < ny {
                    op.add_symmetric(p, idx(i, j + 1, k), -c / (dims[1].1 * dims[1].1));
                }
                if k + 1 < nz {
                    op.add_symmetric(p, idx(i, j, k + 1), -c / (dims[2].1 * dims[2].1));
                }
            }
        }
    }
    Ok(lowest_eigenpairs(&op, count)?.values)
}

/// Sub-band edges along the channel for every transverse mode.
///
/// The cross-section potential is z-independent, so each mode's χₙ is shared
/// by all axial points and the inter-mode coupling vanishes.
#[derive(Debug, Clone)]
pub struct SubbandLadder {
    /// Transverse energies Eₙ above the local band edge, eV.
    pub transverse: Vec<f64>,
    /// `edges[n][i]` = Eₙ − e·φ(zᵢ) + offset, eV.
    pub edges: Vec<Vec<f64>>,
    /// Constant added to every edge, eV.
    pub offset: f64,
}

impl SubbandLadder {
    pub fn modes(&self) -> usize {
        self.transverse.len()
    }

    /// Local conduction-band edge −e·φ(z) + offset, eV.
    pub fn band_edge(&self) -> Vec<f64> {
        self.edges[0].iter().map(|e| e - self.transverse[0]).collect()
    }
}

/// Builds the ladder for potential φ (V) on the axial grid.
pub fn subband_ladder(transverse: &[f64], phi: &[f64], offset: f64) -> SubbandLadder {
    let edges = transverse
        .iter()
        .map(|&en| phi.iter().map(|p| en - p + offset).collect())
        .collect();
    SubbandLadder {
        transverse: transverse.to_vec(),
        edges,
        offset,
    }
}

/// Circular-well oracle: ħ² j² /(2 m* m0 R²) for Bessel zero j.
pub fn circular_well_level(bessel_zero: f64, radius: f64, m_star: f64) -> f64 {
    units::kinetic_prefactor(m_star) * bessel_zero * bessel_zero / (radius * radius)
}

/// First zeros of J₀, J₁, J₂.
pub const BESSEL_J0_1: f64 = 2.404_825_557_695_773;
pub const BESSEL_J1_1: f64 = 3.831_705_970_207_512;
pub const BESSEL_J2_1: f64 = 5.135_622_301_840_683;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::GAAS_HALF_LATTICE;

    fn default_modes(count: usize) -> TransverseModes {
        let g = CrossSectionGrid::disk(2.5, GAAS_HALF_LATTICE).unwrap();
        solve_transverse_modes(&g, 0.06, count).unwrap()
    }

    #[test]
    fn mask_is_symmetric() {
        let g = CrossSectionGrid::disk(2.5, GAAS_HALF_LATTICE).unwrap();
        for &(ix, iy) in &g.points {
            for (a, b) in [(iy, ix), (-ix, iy), (ix, -iy), (-ix, -iy)] {
                assert!(g.index_of(a, b).is_some());
            }
        }
    }

    #[test]
    fn ground_mode_matches_bessel_zero() {
        let m = default_modes(4);
        let exact = circular_well_level(BESSEL_J0_1, 2.5, 0.06);
        assert!((exact - 0.588).abs() < 1e-3);
        assert!(((m.energies[0] - exact) / exact).abs() < 0.03);
    }

    #[test]
    fn first_excited_pair_is_degenerate() {
        let m = default_modes(4);
        assert!((m.energies[1] - m.energies[2]).abs() < 1e-6);
        let exact = circular_well_level(BESSEL_J1_1, 2.5, 0.06);
        assert!(((m.energies[1] - exact) / exact).abs() < 0.03);
    }

    #[test]
    fn degenerate_pair_is_oriented_along_x_then_y() {
        let m = default_modes(3);
        let g = &m.grid;
        let px: f64 = (0..g.len()).map(|k| g.coords(k).0 * m.vectors[1][k]).sum();
        let py: f64 = (0..g.len()).map(|k| g.coords(k).1 * m.vectors[1][k]).sum();
        assert!(px > 0.0 && py.abs() < 1e-8);
        let qy: f64 = (0..g.len()).map(|k| g.coords(k).1 * m.vectors[2][k]).sum();
        assert!(qy > 0.0);
    }

    #[test]
    fn eigenvectors_are_orthonormal() {
        let m = default_modes(4);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot(&m.vectors[i], &m.vectors[j]) - want).abs() < 1e-10);
            }
        }
        assert!(m.energies.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn doubling_mass_halves_energies() {
        let g = CrossSectionGrid::disk(2.5, GAAS_HALF_LATTICE).unwrap();
        let a = solve_transverse_modes(&g, 0.06, 4).unwrap();
        let b = solve_transverse_modes(&g, 0.12, 4).unwrap();
        for (x, y) in a.energies.iter().zip(&b.energies) {
            assert!((x / 2.0 - y).abs() < 1e-12 * x);
        }
    }

    #[test]
    fn too_many_modes_is_an_error() {
        let g = CrossSectionGrid::disk(0.5, 0.3).unwrap();
        assert!(solve_transverse_modes(&g, 0.06, g.len() + 1).is_err());
    }

    #[test]
    fn box_spacing_is_0_7525_ev() {
        let l = [5.0f64, 5.0, 3.0];
        let gap = box_level([2, 1, 1], l, 0.06) - box_level([1, 1, 1], l, 0.06);
        assert!((gap - 0.7525).abs() < 1e-12);
        let gap32 = box_level([2, 1, 1], [5.0f32, 5.0, 3.0], 0.06) - box_level([1, 1, 1], [5.0f32, 5.0, 3.0], 0.06);
        assert!((gap32 - 0.7525).abs() < 1e-5);
    }

    #[test]
    fn box_spacing_scales_inversely_with_mass() {
        let l = [5.0f64, 5.0, 3.0];
        for m in [0.03, 0.067, 0.1] {
            let gap = box_level([2, 1, 1], l, m) - box_level([1, 1, 1], l, m);
            assert!((gap - 0.7525 * 0.06 / m).abs() < 1e-12);
        }
    }

    #[test]
    fn box_level_free_particle_limit() {
        assert!(box_level([1, 1, 1], [1e9, 1e9, 1e9], 0.06) < 1e-15);
    }

    #[test]
    fn flat_potential_gives_flat_ladder() {
        let ladder = subband_ladder(&[0.5, 1.2], &vec![0.0; 10], 0.0);
        assert!(ladder.edges[0].iter().all(|&e| e == 0.5));
        assert!(ladder.edges[1].iter().all(|&e| e == 1.2));
    }

    #[test]
    fn ladder_is_linear_in_phi() {
        let t = [0.588, 1.49];
        let p1: Vec<f64> = (0..20).map(|i| (i as f64 * 0.3).sin()).collect();
        let p2: Vec<f64> = (0..20).map(|i| 0.1 * i as f64).collect();
        let sum: Vec<f64> = p1.iter().zip(&p2).map(|(a, b)| a + b).collect();
        let zero = vec![0.0; 20];
        let l12 = subband_ladder(&t, &sum, 0.0);
        let l2 = subband_ladder(&t, &p2, 0.0);
        let l1 = subband_ladder(&t, &p1, 0.0);
        let l0 = subband_ladder(&t, &zero, 0.0);
        for n in 0..2 {
            for i in 0..20 {
                let lhs = l12.edges[n][i] - l2.edges[n][i];
                let rhs = l1.edges[n][i] - l0.edges[n][i];
                assert!((lhs - rhs).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn gate_dip_is_exactly_the_gate_voltage() {
        let mut phi = vec![0.0; 30];
        phi[10..20].iter_mut().for_each(|p| *p = 1.15);
        let l = subband_ladder(&[0.588], &phi, 0.0);
        assert!((l.edges[0][0] - l.edges[0][15] - 1.15).abs() < 1e-14);
    }
}
