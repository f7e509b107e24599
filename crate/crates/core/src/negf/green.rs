//! Retarded Green's function of a tridiagonal chain with terminal
//! self-energies, by left/right recursive sweeps.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Diagonal and the first/last columns of G = [z − H − Σ]⁻¹.
#[derive(Debug, Clone)]
pub struct ChainGreen<T> {
    pub diag: Vec<Complex<T>>,
    /// G_{i,1}
    pub first: Vec<Complex<T>>,
    /// G_{i,N}
    pub last: Vec<Complex<T>>,
}

impl<T: Scalar> ChainGreen<T> {
    /// G_{1N}
    pub fn corner(&self) -> Complex<T> {
        self.first[self.first.len() - 1]
    }
}

fn checked_inv<T: Scalar>(x: Complex<T>, energy: T) -> Result<Complex<T>> {
    let n2 = x.norm_sqr();
    if n2.is_zero() || !n2.is_finite() {
        return Err(Error::Singular {
            energy: energy.to_f64_lossy(),
        });
    }
    let inv = Complex::new(x.re / n2, -x.im / n2);
    if !(inv.re.is_finite() && inv.im.is_finite()) {
        return Err(Error::Singular {
            energy: energy.to_f64_lossy(),
        });
    }
    Ok(inv)
}

/// Solves for G at complex energy `z` on the chain with on-site `diag`,
/// hopping −`t`, self-energies on the first and last sites and an optional
/// site-local extra self-energy (phonons).
///
/// An exactly singular pivot returns [`Error::Singular`] so the caller can
/// move the energy point.
pub fn solve_g<T: Scalar>(
    z: Complex<T>,
    diag: &[T],
    t: T,
    sigma_s: Complex<T>,
    sigma_d: Complex<T>,
    local: Option<&[Complex<T>]>,
) -> Result<ChainGreen<T>> {
    let n = diag.len();
    assert!(n > 0);
    let a: Vec<Complex<T>> = (0..n)
        .map(|i| {
            let mut v = z - Complex::from(diag[i]);
            if i == 0 {
                v = v - sigma_s;
            }
            if i == n - 1 {
                v = v - sigma_d;
            }
            if let Some(l) = local {
                v = v - l[i];
            }
            v
        })
        .collect();
    let t2 = Complex::from(t * t);
    let mut gl = vec![Complex::zero(); n];
    let mut gr = vec![Complex::zero(); n];
    gl[0] = checked_inv(a[0], z.re)?;
    for i in 1..n {
        gl[i] = checked_inv(a[i] - t2 * gl[i - 1], z.re)?;
    }
    gr[n - 1] = checked_inv(a[n - 1], z.re)?;
    for i in (0..n - 1).rev() {
        gr[i] = checked_inv(a[i] - t2 * gr[i + 1], z.re)?;
    }
    let mut g = vec![Complex::zero(); n];
    for i in 0..n {
        let mut d = a[i];
        if i > 0 {
            d = d - t2 * gl[i - 1];
        }
        if i + 1 < n {
            d = d - t2 * gr[i + 1];
        }
        g[i] = checked_inv(d, z.re)?;
    }
    // Off-diagonal coupling of z − H is +t.
    let tc = Complex::from(t);
    let mut first = vec![Complex::zero(); n];
    first[0] = g[0];
    for i in 1..n {
        first[i] = -gr[i] * tc * first[i - 1];
    }
    let mut last = vec![Complex::zero(); n];
    last[n - 1] = g[n - 1];
    for i in (0..n - 1).rev() {
        last[i] = -gl[i] * tc * last[i + 1];
    }
    Ok(ChainGreen { diag: g, first, last })
}

/// Full G = [z − H − Σ]⁻¹ of the chain as rows `g[i][j]`, O(N²).
pub fn full_green<T: Scalar>(
    z: Complex<T>,
    diag: &[T],
    t: T,
    sigma_s: Complex<T>,
    sigma_d: Complex<T>,
    local: Option<&[Complex<T>]>,
) -> Result<Vec<Vec<Complex<T>>>> {
    let n = diag.len();
    let a: Vec<Complex<T>> = (0..n)
        .map(|i| {
            let mut v = z - Complex::from(diag[i]);
            if i == 0 {
                v = v - sigma_s;
            }
            if i == n - 1 {
                v = v - sigma_d;
            }
            if let Some(l) = local {
                v = v - l[i];
            }
            v
        })
        .collect();
    let t2 = Complex::from(t * t);
    let tc = Complex::from(t);
    let mut gl = vec![Complex::zero(); n];
    let mut gr = vec![Complex::zero(); n];
    gl[0] = checked_inv(a[0], z.re)?;
    for i in 1..n {
        gl[i] = checked_inv(a[i] - t2 * gl[i - 1], z.re)?;
    }
    gr[n - 1] = checked_inv(a[n - 1], z.re)?;
    for i in (0..n - 1).rev() {
        gr[i] = checked_inv(a[i] - t2 * gr[i + 1], z.re)?;
    }
    let mut g = vec![vec![Complex::zero(); n]; n];
    for j in 0..n {
        let mut d = a[j];
        if j > 0 {
            d = d - t2 * gl[j - 1];
        }
        if j + 1 < n {
            d = d - t2 * gr[j + 1];
        }
        g[j][j] = checked_inv(d, z.re)?;
        for i in (0..j).rev() {
            g[i][j] = -gl[i] * tc * g[i + 1][j];
        }
        for i in j + 1..n {
            g[i][j] = -gr[i] * tc * g[i - 1][j];
        }
    }
    Ok(g)
}

/// Occupied LDOS per site, 1/(eV·nm), spin included:
/// D_i = (2/2πa)[|G_i1|² Γ_S f_S + |G_iN|² Γ_D f_D].
pub fn occupied_ldos<T: Scalar>(
    g: &ChainGreen<T>,
    gamma_s: T,
    gamma_d: T,
    f_s: T,
    f_d: T,
    spacing: T,
) -> Vec<T> {
    let pref = T::lit(2.0) / (T::lit(2.0) * T::PI() * spacing);
    g.first
        .iter()
        .zip(&g.last)
        .map(|(a, b)| pref * (a.norm_sqr() * gamma_s * f_s + b.norm_sqr() * gamma_d * f_d))
        .collect()
}

/// Full spectral density per site, (2/2πa)·(−2 Im G_ii).
pub fn spectral_density<T: Scalar>(g: &ChainGreen<T>, spacing: T) -> Vec<T> {
    let pref = T::lit(2.0) / (T::lit(2.0) * T::PI() * spacing);
    g.diag.iter().map(|x| -T::lit(2.0) * pref * x.im).collect()
}

/// Transmission Γ_S Γ_D |G_1N|².
pub fn transmission<T: Scalar>(g: &ChainGreen<T>, gamma_s: T, gamma_d: T) -> T {
    gamma_s * gamma_d * g.corner().norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    type C = Complex<f64>;

    fn dense(z: C, diag: &[f64], t: f64, ss: C, sd: C) -> DMatrix<C> {
        let n = diag.len();
        let mut a = DMatrix::<C>::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = z - diag[i];
            if i + 1 < n {
                a[(i, i + 1)] = C::from(t);
                a[(i + 1, i)] = C::from(t);
            }
        }
        a[(0, 0)] -= ss;
        a[(n - 1, n - 1)] -= sd;
        a.try_inverse().unwrap()
    }

    #[test]
    fn one_site_scalar_inverse() {
        let gamma = 0.01;
        let s = C::new(0.0, -gamma / 2.0);
        let g = solve_g(C::new(0.3, 0.0), &[0.3], 1.0, s, s, None).unwrap();
        assert!((g.diag[0].norm() - 1.0 / gamma).abs() < 1e-9);
        assert!((transmission(&g, gamma, gamma) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matches_dense_inverse() {
        let diag: Vec<f64> = (0..9).map(|i| 2.0 + 0.1 * (i as f64).sin()).collect();
        let (ss, sd) = (C::new(-0.3, -0.2), C::new(0.1, -0.05));
        let z = C::new(1.7, 0.0);
        let g = solve_g(z, &diag, 1.0, ss, sd, None).unwrap();
        let d = dense(z, &diag, 1.0, ss, sd);
        for i in 0..9 {
            assert!((g.diag[i] - d[(i, i)]).norm() < 1e-12);
            assert!((g.first[i] - d[(i, 0)]).norm() < 1e-12);
            assert!((g.last[i] - d[(i, 8)]).norm() < 1e-12);
        }
    }

    #[test]
    fn full_matrix_matches_dense() {
        let diag: Vec<f64> = (0..6).map(|i| 2.0 + 0.3 * i as f64).collect();
        let (ss, sd) = (C::new(-0.3, -0.2), C::new(0.1, -0.05));
        let local: Vec<C> = (0..6).map(|i| C::new(0.0, -0.01 * i as f64)).collect();
        let z = C::new(2.4, 0.0);
        let g = full_green(z, &diag, 1.0, ss, sd, Some(&local)).unwrap();
        let mut d = dense(z, &diag, 1.0, ss, sd);
        // fold the local self-energy into the dense reference
        let mut a = d.clone().try_inverse().unwrap();
        for i in 0..6 {
            a[(i, i)] -= local[i];
        }
        d = a.try_inverse().unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert!((g[i][j] - d[(i, j)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn exact_pole_is_singular() {
        let err = solve_g(C::new(0.5, 0.0), &[0.5], 1.0, C::zero(), C::zero(), None);
        assert!(matches!(err, Err(Error::Singular { .. })));
    }

    #[test]
    fn left_right_symmetric() {
        let diag: Vec<f64> = (0..7).map(|i| 2.0 + 0.2 * i as f64).collect();
        let (ss, sd) = (C::new(-0.3, -0.2), C::new(0.1, -0.05));
        let g = solve_g(C::new(2.3, 0.0), &diag, 1.0, ss, sd, None).unwrap();
        let rev: Vec<f64> = diag.iter().rev().copied().collect();
        let h = solve_g(C::new(2.3, 0.0), &rev, 1.0, sd, ss, None).unwrap();
        let (a, b) = (transmission(&g, 0.4, 0.1), transmission(&h, 0.1, 0.4));
        assert!((a - b).abs() < 1e-12 * a.max(1e-300));
    }

    #[test]
    fn ldos_limits() {
        let diag = vec![2.0; 5];
        let s = C::new(-0.5, -0.4);
        let g = solve_g(C::new(2.1, 0.0), &diag, 1.0, s, s, None).unwrap();
        let gam = 0.8;
        let full = occupied_ldos(&g, gam, gam, 1.0, 1.0, 0.3);
        let spec = spectral_density(&g, 0.3);
        for (a, b) in full.iter().zip(&spec) {
            assert!((a - b).abs() < 1e-12 * b.abs());
        }
        assert!(occupied_ldos(&g, gam, gam, 0.0, 0.0, 0.3).iter().all(|&d| d == 0.0));
    }

    #[test]
    fn single_precision_works() {
        let g = solve_g(
            Complex::<f32>::new(0.3, 0.0),
            &[0.3f32],
            1.0,
            Complex::new(0.0, -0.05),
            Complex::new(0.0, -0.05),
            None,
        )
        .unwrap();
        assert!((transmission(&g, 0.1, 0.1) - 1.0).abs() < 1e-5);
    }
}
