//! Poles of the open-chain Green's function.
//!
//! Closed-chain eigenvalues (Sturm bisection) seed a Rayleigh-quotient
//! iteration on the complex-symmetric matrix H + Σ(Re z), with Σ re-evaluated
//! at every step so the nonlinear eigenproblem z = eig(H + Σ(z)) converges.

use num_complex::Complex;

use super::grid::Resonance;
use crate::hamiltonian::{lead_self_energy, ModeChain};
use crate::linalg::{solve_tridiagonal, tridiagonal_eigenvalues, tridiagonal_eigenvector};

type C = Complex<f64>;

/// Eigenvalues of the closed chain inside `[lo, hi)`.
pub fn closed_levels(chain: &ModeChain, t: f64, lo: f64, hi: f64) -> Vec<f64> {
    let off = vec![-t; chain.len().saturating_sub(1)];
    tridiagonal_eigenvalues(&chain.diag, &off, lo, hi, 1e-14 * (4.0 * t).max(1.0))
}

fn rayleigh(diag: &[C], t: f64, v: &[C]) -> C {
    let n = v.len();
    let mut num = C::new(0.0, 0.0);
    let mut den = C::new(0.0, 0.0);
    for i in 0..n {
        let mut av = diag[i] * v[i];
        if i > 0 {
            av -= v[i - 1] * t;
        }
        if i + 1 < n {
            av -= v[i + 1] * t;
        }
        num += v[i] * av;
        den += v[i] * v[i];
    }
    num / den
}

/// Open-system resonances of one mode chain with closed levels in `[lo, hi)`.
///
/// Levels below both lead bands stay real (bound states, zero width).
pub fn open_poles(chain: &ModeChain, t: f64, lo: f64, hi: f64) -> Vec<Resonance> {
    let n = chain.len();
    let off = vec![-t; n.saturating_sub(1)];
    let mut out: Vec<Resonance> = Vec::new();
    for level in closed_levels(chain, t, lo, hi) {
        let v0 = tridiagonal_eigenvector(&chain.diag, &off, level);
        // first-order width from the closed eigenvector, kept as fallback
        let ss = lead_self_energy(level, chain.lead_bottom[0], t);
        let sd = lead_self_energy(level, chain.lead_bottom[1], t);
        let first_order = C::new(level, 0.0) + ss * v0[0] * v0[0] + sd * v0[n - 1] * v0[n - 1];
        let mut z = first_order;
        let mut v: Vec<C> = v0.iter().map(|&x| C::new(x, 0.0)).collect();
        let mut converged = false;
        for _ in 0..60 {
            let ss = lead_self_energy(z.re, chain.lead_bottom[0], t);
            let sd = lead_self_energy(z.re, chain.lead_bottom[1], t);
            let mut diag: Vec<C> = chain.diag.iter().map(|&d| C::new(d, 0.0)).collect();
            diag[0] += ss;
            diag[n - 1] += sd;
            let shifted: Vec<C> = diag.iter().map(|d| d - z).collect();
            let offc = vec![C::new(-t, 0.0); n.saturating_sub(1)];
            let x = match solve_tridiagonal(&offc, &shifted, &offc, &v) {
                Ok(x) => x,
                Err(_) => {
                    converged = true;
                    break;
                }
            };
            let norm = x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if !(norm.is_finite() && norm > 0.0) {
                break;
            }
            v = x.iter().map(|c| c / norm).collect();
            let znew = rayleigh(&diag, t, &v);
            let step = (znew - z).norm();
            z = znew;
            if step < 1e-15 * (4.0 * t) {
                converged = true;
                break;
            }
        }
        // A wandering iteration (broad above-barrier states) falls back to
        // the first-order estimate.
        if !converged || (z.re - level).abs() > 0.25 || z.im > 0.0 {
            z = first_order;
        }
        let width = (-2.0 * z.im).max(0.0);
        let dup = out
            .iter()
            .any(|r| (r.center - z.re).abs() < 1e-12 && (r.width - width).abs() <= 1e-6 * width.max(1e-300));
        if !dup {
            out.push(Resonance { center: z.re, width });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::negf::green::{solve_g, transmission};

    fn double_barrier(n: usize, well: f64, barrier: f64, t: f64) -> ModeChain {
        let diag = (0..n)
            .map(|i| {
                let v = if i < 4 || i >= n - 4 { barrier } else { well };
                2.0 * t + v
            })
            .collect();
        ModeChain {
            diag,
            lead_bottom: [0.0, 0.0],
            transverse: 0.0,
        }
    }

    #[test]
    fn pole_matches_transmission_peak() {
        let t = 1.0;
        let chain = double_barrier(24, 0.0, 0.6, t);
        let poles = open_poles(&chain, t, 0.0, 0.2);
        assert!(!poles.is_empty());
        let p = poles[0];
        assert!(p.width > 0.0 && p.width < 1e-2);
        let tr = |e: f64| {
            let s = lead_self_energy(e, 0.0, t);
            let g = solve_g(C::new(e, 0.0), &chain.diag, t, s, s, None).unwrap();
            transmission(&g, -2.0 * s.im, -2.0 * s.im)
        };
        // symmetric double barrier: unit transmission at resonance
        assert!(tr(p.center) > 0.999, "{}", tr(p.center));
        // half maximum at ±γ/2 (Breit–Wigner shape near the peak)
        let half = tr(p.center + 0.5 * p.width);
        assert!((half - 0.5).abs() < 0.02, "{half}");
    }

    #[test]
    fn bound_state_has_zero_width() {
        let t = 1.0;
        let mut chain = double_barrier(20, -0.5, 0.3, t);
        chain.lead_bottom = [0.0, 0.0];
        let poles = open_poles(&chain, t, -1.0, -0.1);
        assert!(poles.iter().all(|p| p.width == 0.0));
        assert!(!poles.is_empty());
    }
}
