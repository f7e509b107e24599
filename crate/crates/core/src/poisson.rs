//! One-dimensional Poisson equation for the Ω-gated wire:
//! [d²/dz² − κ²(z)](φ − V_G(z)) = e·λ(z) / (ε_nw (π − θ) R²).

use serde::{Deserialize, Serialize};

use crate::device::{AxialGrid, BiasPoint, DeviceSpec, MaterialParams, Region};
use crate::error::{Error, Result};
use crate::linalg::solve_tridiagonal;
use crate::units;

/// Where the oxide coupling term κ² acts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateCoupling {
    /// κ² on every site, V_G = 0 off the gates (ungated oxide screens to ground).
    #[default]
    Everywhere,
    /// κ² and V_G only under the gate electrodes.
    GatedOnly,
}

/// Ω-gate angle θ = arccos(R/(R + t_ox)).
pub fn omega_gate_angle(radius: f64, oxide: f64) -> f64 {
    (radius / (radius + oxide)).acos()
}

/// Oxide coupling κ² = (2/R²)(ε_ox/ε_nw)/ln(1 + t_ox/R), nm⁻².
pub fn oxide_kappa2(radius: f64, oxide: f64, eps_nw: f64, eps_ox: f64) -> f64 {
    2.0 / (radius * radius) * (eps_ox / eps_nw) / (1.0 + oxide / radius).ln()
}

#[derive(Debug, Clone)]
pub struct PoissonOperator {
    pub spacing: f64,
    pub kappa2: Vec<f64>,
    pub gate: Vec<f64>,
    /// e/(ε0 ε_nw (π − θ) R²) in V·nm per (electron/nm).
    pub charge_coefficient: f64,
    pub theta: f64,
}

impl PoissonOperator {
    pub fn new(
        spec: &DeviceSpec,
        mat: &MaterialParams,
        grid: &AxialGrid,
        bias: &BiasPoint,
        coupling: GateCoupling,
    ) -> Self {
        let theta = omega_gate_angle(spec.radius, spec.oxide_thickness);
        let k2 = oxide_kappa2(spec.radius, spec.oxide_thickness, mat.eps_nw_rel, mat.eps_ox_rel);
        let n = grid.len();
        let mut kappa2 = vec![0.0; n];
        let mut gate = vec![0.0; n];
        for i in 0..n {
            let region = grid.regions[i];
            let gated = matches!(region, Region::Gate1 | Region::Gate2);
            gate[i] = match region {
                Region::Gate1 => bias.vg1,
                Region::Gate2 => bias.gate2(),
                _ => 0.0,
            };
            kappa2[i] = match coupling {
                GateCoupling::Everywhere => k2,
                GateCoupling::GatedOnly if gated => k2,
                GateCoupling::GatedOnly => 0.0,
            };
        }
        let charge_coefficient =
            units::E_OVER_EPS0 / (mat.eps_nw_rel * (std::f64::consts::PI - theta) * spec.radius * spec.radius);
        Self {
            spacing: grid.spacing,
            kappa2,
            gate,
            charge_coefficient,
            theta,
        }
    }

    /// Operator with explicit profiles.
    pub fn from_profiles(spacing: f64, kappa2: Vec<f64>, gate: Vec<f64>, charge_coefficient: f64) -> Result<Self> {
        if kappa2.len() != gate.len() || gate.len() < 3 {
            return Err(Error::invalid("poisson profiles", "need equal lengths ≥ 3"));
        }
        if kappa2.iter().any(|&k| k < 0.0) {
            return Err(Error::invalid("kappa2", "must be ≥ 0"));
        }
        Ok(Self {
            spacing,
            kappa2,
            gate,
            charge_coefficient,
            theta: f64::NAN,
        })
    }

    pub fn len(&self) -> usize {
        self.gate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gate.is_empty()
    }

    /// Right-hand side of the interior equations.
    fn rhs(&self, lambda: &[f64]) -> Vec<f64> {
        (1..self.len() - 1)
            .map(|i| self.charge_coefficient * lambda[i] - self.kappa2[i] * self.gate[i])
            .collect()
    }

    /// Largest absolute residual of the discrete equations at `phi`.
    pub fn residual(&self, phi: &[f64], lambda: &[f64]) -> f64 {
        let h2 = self.spacing * self.spacing;
        let rhs = self.rhs(lambda);
        let mut worst = phi[0].abs().max(phi[self.len() - 1].abs());
        for i in 1..self.len() - 1 {
            let lhs = (phi[i - 1] - 2.0 * phi[i] + phi[i + 1]) / h2 - self.kappa2[i] * phi[i];
            worst = worst.max((lhs - rhs[i - 1]).abs());
        }
        worst
    }
}

/// Direct tridiagonal solve with φ = 0 at both contacts. `lambda` in electrons/nm.
pub fn poisson_solve(op: &PoissonOperator, lambda: &[f64]) -> Result<Vec<f64>> {
    let n = op.len();
    if lambda.len() != n {
        return Err(Error::invalid("density", format!("length {} != grid {}", lambda.len(), n)));
    }
    let h2 = op.spacing * op.spacing;
    let m = n - 2;
    let off = vec![1.0 / h2; m.saturating_sub(1)];
    let diag: Vec<f64> = (1..n - 1).map(|i| -2.0 / h2 - op.kappa2[i]).collect();
    let inner = solve_tridiagonal(&off, &diag, &off, &op.rhs(lambda))?;
    let mut phi = vec![0.0; n];
    phi[1..n - 1].copy_from_slice(&inner);
    Ok(phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::build_axial_grid;
    use proptest::prelude::*;

    fn default_op(bias: BiasPoint) -> PoissonOperator {
        let spec = DeviceSpec::default();
        let grid = build_axial_grid(&spec).unwrap();
        PoissonOperator::new(&spec, &MaterialParams::default(), &grid, &bias, GateCoupling::Everywhere)
    }

    #[test]
    fn default_geometry_constants() {
        let k2 = oxide_kappa2(2.5, 2.0, 12.9, 3.9);
        assert!((k2 - 0.1646).abs() < 2e-4, "{k2}");
        assert!((1.0 / k2.sqrt() - 2.465).abs() < 5e-3);
        let th = omega_gate_angle(2.5, 2.0);
        assert!((th - (2.5f64 / 4.5).acos()).abs() < 1e-15 && (th - 0.98177).abs() < 1e-4);
    }

    #[test]
    fn no_charge_no_gate_is_flat() {
        let op = default_op(BiasPoint::new(0.0, 0.0, 0.0, 0.0));
        let phi = poisson_solve(&op, &vec![0.0; op.len()]).unwrap();
        assert!(phi.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn residual_is_machine_small() {
        let op = default_op(BiasPoint::new(1.15, 1.3, 0.042, 0.0));
        let lambda: Vec<f64> = (0..op.len()).map(|i| 0.1 * (i as f64 * 0.2).sin().abs()).collect();
        let phi = poisson_solve(&op, &lambda).unwrap();
        assert!(op.residual(&phi, &lambda) < 1e-12);
    }

    #[test]
    fn gated_only_leaves_gap_unscreened() {
        let spec = DeviceSpec::default();
        let grid = build_axial_grid(&spec).unwrap();
        let op = PoissonOperator::new(
            &spec,
            &MaterialParams::default(),
            &grid,
            &BiasPoint::new(1.0, 1.0, 0.0, 0.0),
            GateCoupling::GatedOnly,
        );
        for i in grid.range(Region::Gap) {
            assert_eq!(op.kappa2[i], 0.0);
        }
    }

    #[test]
    fn point_charge_gives_kink() {
        // ungated: φ'' = c·λ, λ = q/a at the middle site
        let n = 41;
        let a = 0.5;
        let c = 0.3;
        let op = PoissonOperator::from_profiles(a, vec![0.0; n], vec![0.0; n], c).unwrap();
        let mut lambda = vec![0.0; n];
        lambda[20] = 2.0 / a;
        let phi = poisson_solve(&op, &lambda).unwrap();
        let len = (n - 1) as f64 * a;
        let z0 = 20.0 * a;
        // Green's function of d² with Dirichlet ends, weight c·q.
        for (i, p) in phi.iter().enumerate() {
            let z = i as f64 * a;
            let exact = if z <= z0 {
                -c * 2.0 * z * (len - z0) / len
            } else {
                -c * 2.0 * z0 * (len - z) / len
            };
            assert!((p - exact).abs() < 1e-12, "{i}: {p} vs {exact}");
        }
    }

    proptest! {
        #[test]
        fn linear_in_density(s1 in 0.0f64..1.0, s2 in 0.0f64..1.0) {
            let op = default_op(BiasPoint::new(1.15, 1.3, 0.0, 0.0));
            let n = op.len();
            let l1: Vec<f64> = (0..n).map(|i| s1 * ((i * 7) % 5) as f64 * 0.01).collect();
            let l2: Vec<f64> = (0..n).map(|i| s2 * (i as f64 * 0.1).cos().abs() * 0.05).collect();
            let l12: Vec<f64> = l1.iter().zip(&l2).map(|(a, b)| a + b).collect();
            let p12 = poisson_solve(&op, &l12).unwrap();
            let p2 = poisson_solve(&op, &l2).unwrap();
            let p1 = poisson_solve(&op, &l1).unwrap();
            let p0 = poisson_solve(&op, &vec![0.0; n]).unwrap();
            for i in 0..n {
                prop_assert!(((p12[i] - p2[i]) - (p1[i] - p0[i])).abs() < 1e-12);
            }
        }
    }
}
