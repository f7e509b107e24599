//! Energy-to-time transform of the contact-resolved kernels
//! k_X(E) = Tr[G_iso(E) Σ_X(E) G(E)], the pulse-current trace and the
//! repetition/dephasing times and oscillation frequency derived from it.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::negf::grid::trapezoid_weights;
use crate::negf::{closed_levels, solve_g, EnergyGrid, NegfEngine, Resonance};
use crate::scalar::Scalar;
use crate::units;

type C = Complex<f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeOptions {
    /// Regularization of the isolated-channel Green's function, eV.
    pub eta: f64,
    /// Number of time samples.
    pub points: usize,
    /// Fixed window length, ns; chosen from the narrowest resonance when absent.
    pub t_max_ns: Option<f64>,
    /// Window extensions allowed to reach 1.5 × T_rep.
    pub extensions: usize,
    /// A spectral peak must exceed this multiple of the median magnitude.
    pub peak_to_median: f64,
}

impl Default for TimeOptions {
    fn default() -> Self {
        Self {
            eta: 1e-10,
            points: 4096,
            t_max_ns: None,
            extensions: 3,
            peak_to_median: 5.0,
        }
    }
}

impl TimeOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) {
            return Err(Error::invalid("eta", "must be > 0"));
        }
        if self.points < 4096 {
            return Err(Error::invalid("points", "at least 4096 time samples are required"));
        }
        if let Some(t) = self.t_max_ns {
            if !(t > 0.0) {
                return Err(Error::invalid("t_max_ns", "must be > 0"));
            }
        }
        Ok(())
    }
}

/// Which contact's self-energy enters the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terminal {
    Source,
    Drain,
}

/// Kernel of one chain: σ_X Σ_i G_{s,i} G_iso_{i,s}, s the contact site.
pub fn reduced_kernel_chain<T: Scalar>(
    e: T,
    diag: &[T],
    t: T,
    sigma_s: Complex<T>,
    sigma_d: Complex<T>,
    eta: T,
    terminal: Terminal,
) -> Result<Complex<T>> {
    let g = solve_g(Complex::new(e, T::zero()), diag, t, sigma_s, sigma_d, None)?;
    let z = Complex::new(T::zero(), T::zero());
    let iso = solve_g(Complex::new(e, eta), diag, t, z, z, None)?;
    let (col, col_iso, sigma) = match terminal {
        Terminal::Source => (&g.first, &iso.first, sigma_s),
        Terminal::Drain => (&g.last, &iso.last, sigma_d),
    };
    let sum = col.iter().zip(col_iso).fold(z, |acc, (a, b)| acc + *a * *b);
    Ok(sigma * sum)
}

/// Source and drain kernels on a grid, summed over the engine's active modes.
#[derive(Debug, Clone)]
pub struct KernelSet {
    pub grid: EnergyGrid,
    pub source: Vec<C>,
    pub drain: Vec<C>,
}

/// Closed-chain levels as resonances of width 2η, so the grid resolves G_iso.
pub fn isolated_resonances(engine: &NegfEngine<'_>, eta: f64) -> Vec<Resonance> {
    let (lo, hi) = engine.window();
    let h = engine.hamiltonian;
    engine
        .active_modes()
        .iter()
        .flat_map(|&m| closed_levels(&h.modes[m], h.hopping, lo, hi))
        .map(|c| Resonance {
            center: c,
            width: 2.0 * eta,
        })
        .collect()
}

pub fn reduced_kernels(engine: &NegfEngine<'_>, grid: &EnergyGrid, eta: f64) -> Result<KernelSet> {
    let h = engine.hamiltonian;
    let pairs: Vec<Result<(C, C)>> = grid
        .energies
        .par_iter()
        .map(|&e| {
            let mut ks = C::new(0.0, 0.0);
            let mut kd = C::new(0.0, 0.0);
            for &m in engine.active_modes() {
                let (ss, sd) = engine.self_energies(m, e);
                let chain = &h.modes[m];
                let eval = |term| {
                    reduced_kernel_chain(e, &chain.diag, h.hopping, ss, sd, eta, term).or_else(|_| {
                        let nudge = 1e-15 * e.abs().max(1.0);
                        reduced_kernel_chain(e + nudge, &chain.diag, h.hopping, ss, sd, eta, term)
                    })
                };
                ks += eval(Terminal::Source)?;
                kd += eval(Terminal::Drain)?;
            }
            Ok((ks, kd))
        })
        .collect();
    let mut source = Vec::with_capacity(grid.len());
    let mut drain = Vec::with_capacity(grid.len());
    for p in pairs {
        let (s, d) = p?;
        source.push(s);
        drain.push(d);
    }
    Ok(KernelSet {
        grid: grid.clone(),
        source,
        drain,
    })
}

/// ∫₀¹ (1−s) e^{cs} ds and ∫₀¹ s e^{cs} ds.
fn linear_moments(c: C) -> (C, C) {
    if c.norm() < 0.05 {
        // Σ cⁿ/(n!(n+1)(n+2)) and Σ cⁿ/(n!(n+2))
        let mut a = C::new(0.0, 0.0);
        let mut b = C::new(0.0, 0.0);
        let mut p = C::new(1.0, 0.0);
        let mut fact = 1.0;
        for n in 0..10 {
            if n > 0 {
                p *= c;
                fact *= n as f64;
            }
            let nf = n as f64;
            a += p / (fact * (nf + 1.0) * (nf + 2.0));
            b += p / (fact * (nf + 2.0));
        }
        (a, b)
    } else {
        let ec = c.exp();
        let b = (ec * (c - 1.0) + 1.0) / (c * c);
        let total = (ec - 1.0) / c;
        (total - b, b)
    }
}

/// f(t) = ∫ k(E) e^{−iEt/ħ} dE with k linear between grid energies (exact
/// for the interpolant, so coarse smooth regions do not alias at long
/// times). At t = 0 this is the trapezoid sum Σ w_k k(E_k). Times in fs.
pub fn energy_to_time(energies: &[f64], k: &[C], times_fs: &[f64]) -> Vec<C> {
    assert_eq!(energies.len(), k.len());
    times_fs
        .par_iter()
        .map(|&t| {
            let w = t / units::HBAR;
            let mut acc = C::new(0.0, 0.0);
            for j in 0..energies.len() - 1 {
                let (ea, eb) = (energies[j], energies[j + 1]);
                let h = eb - ea;
                let (ma, mb) = linear_moments(C::new(0.0, -w * h));
                let phase = C::from_polar(1.0, -w * ea);
                acc += phase * h * (k[j] * ma + k[j + 1] * mb);
            }
            acc
        })
        .collect()
}

/// Uniform grid on [0, t_max] with trapezoid weights.
pub fn time_grid(t_max_fs: f64, points: usize) -> (Vec<f64>, Vec<f64>) {
    let dt = t_max_fs / (points - 1) as f64;
    let t: Vec<f64> = (0..points).map(|j| j as f64 * dt).collect();
    let w = trapezoid_weights(&t);
    (t, w)
}

/// I(t) = I0 · Re f_D(t) / Re f_D(0).
pub fn pulse_current_trace(f_d: &[C], i0: f64) -> Result<Vec<f64>> {
    let peak = f_d.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let r0 = f_d[0].re;
    if !(r0.abs() > 1e-300 * peak.max(f64::MIN_POSITIVE)) || r0 == 0.0 {
        return Err(Error::DegenerateNormalization { value: r0 });
    }
    Ok(f_d.iter().map(|c| i0 * c.re / r0).collect())
}

/// Norm-weighted mean time Σ w t|f| / Σ w|f| over t ≤ `limit`.
pub fn mean_time(times: &[f64], weights: &[f64], f: &[C], limit: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&t, &w), c) in times.iter().zip(weights).zip(f) {
        if t > limit {
            break;
        }
        let a = c.norm();
        num += w * t * a;
        den += w * a;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Dominant oscillation frequency (1/fs) of `signal` on a uniform grid, from
/// the interior local maximum of its DFT magnitude (mean removed). `None`
/// when no peak stands above `peak_to_median` × the median magnitude.
pub fn dominant_frequency(times: &[f64], signal: &[f64], peak_to_median: f64) -> Option<f64> {
    let n = signal.len();
    if n < 8 {
        return None;
    }
    let dt = times[1] - times[0];
    let mean = signal.iter().sum::<f64>() / n as f64;
    let x: Vec<f64> = signal.iter().map(|s| s - mean).collect();
    let half = n / 2;
    let mags: Vec<f64> = (0..=half)
        .into_par_iter()
        .map(|k| {
            let mut acc = C::new(0.0, 0.0);
            let step = -2.0 * std::f64::consts::PI * k as f64 / n as f64;
            for (j, v) in x.iter().enumerate() {
                acc += C::from_polar(*v, step * j as f64);
            }
            acc.norm()
        })
        .collect();
    let mut sorted = mags[1..].to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let mut best: Option<usize> = None;
    for k in 2..half {
        if mags[k] > mags[k - 1] && mags[k] >= mags[k + 1] && best.is_none_or(|b| mags[k] > mags[b]) {
            best = Some(k);
        }
    }
    let k = best?;
    if !(mags[k] > peak_to_median * median) {
        return None;
    }
    // parabolic refinement of the peak position
    let (a, b, c) = (mags[k - 1], mags[k], mags[k + 1]);
    let denom = a - 2.0 * b + c;
    let shift = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    Some((k as f64 + shift) / (n as f64 * dt))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtractedTimes {
    pub t_rep_fs: f64,
    pub t_dephase_fs: f64,
    /// Oscillation frequency, 1/fs.
    pub f_osc: Option<f64>,
}

/// T_rep from |f_S| over the window, T_dephase from |f_D| up to T_rep, and the
/// beat frequency of |f_D|.
pub fn extract_times(times: &[f64], weights: &[f64], f_s: &[C], f_d: &[C], peak_to_median: f64) -> ExtractedTimes {
    let t_rep = mean_time(times, weights, f_s, f64::INFINITY);
    let t_dephase = mean_time(times, weights, f_d, t_rep);
    let mag: Vec<f64> = f_d.iter().map(|c| c.norm()).collect();
    ExtractedTimes {
        t_rep_fs: t_rep,
        t_dephase_fs: t_dephase,
        f_osc: dominant_frequency(times, &mag, peak_to_median),
    }
}

/// Drain-current pulse and its characteristic times.
#[derive(Debug, Clone)]
pub struct TimeTrace {
    pub t_ns: Vec<f64>,
    pub f_s: Vec<C>,
    pub f_d: Vec<C>,
    /// Drain current, A.
    pub current: Vec<f64>,
    pub f_osc_mhz: Option<f64>,
    pub t_rep_ns: f64,
    pub t_dephase_ns: f64,
    /// ΔE/h of the closest resonance pair, MHz.
    pub splitting_mhz: Option<f64>,
    pub energy_points: usize,
    pub warnings: Vec<String>,
}

/// Frequency ΔE/h (MHz) of the closest pair of resonance centres.
pub fn closest_pair_frequency(resonances: &[Resonance]) -> Option<f64> {
    let mut c: Vec<f64> = resonances.iter().map(|r| r.center).collect();
    c.sort_by(f64::total_cmp);
    c.windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d > 0.0)
        .min_by(f64::total_cmp)
        .map(|d| d / units::PLANCK * 1e9)
}

/// Largest distance between resonance centres, eV.
fn nyquist_spread(open: &[Resonance], iso: &[Resonance]) -> Option<f64> {
    let c = || open.iter().chain(iso).map(|r| r.center);
    let lo = c().fold(f64::INFINITY, f64::min);
    let hi = c().fold(f64::NEG_INFINITY, f64::max);
    (hi > lo).then_some(hi - lo)
}

fn to_mhz(per_fs: f64) -> f64 {
    per_fs * 1e9
}

/// Transforms the kernels of a converged device and extracts the times.
///
/// Energies are measured from μ_S, which fixes the phase reference of the
/// reported real current. The window starts at `t_max_ns` or at five times
/// ħ over the narrowest width and grows until it spans 1.5 T_rep.
pub fn compute_trace(engine: &NegfEngine<'_>, i0: f64, opts: &TimeOptions) -> Result<TimeTrace> {
    opts.validate()?;
    let mut engine_eta = NegfEngine::new(
        engine.hamiltonian,
        engine.contacts,
        engine.options.clone(),
        engine.cross_section_area,
    )?;
    let iso = isolated_resonances(engine, opts.eta);
    engine_eta.extra_resonances = iso.clone();
    let sol = engine_eta.solve()?;
    let mut warnings = sol.warnings.clone();
    if sol.grid.budget_exhausted {
        return Err(Error::UnderResolved(format!(
            "energy grid budget exhausted ({} points); the transform would alias",
            sol.grid.len()
        )));
    }
    let kernels = reduced_kernels(&engine_eta, &sol.grid, opts.eta)?;
    let shifted: Vec<f64> = kernels.grid.energies.iter().map(|e| e - engine.contacts.mu_s).collect();
    let open: Vec<Resonance> = sol.poles.iter().flatten().copied().collect();
    let narrowest = open
        .iter()
        .chain(iso.iter())
        .map(|r| r.width)
        .filter(|w| *w > 0.0)
        .fold(f64::INFINITY, f64::min);
    let mut t_max = match opts.t_max_ns {
        Some(t) => t * units::NS,
        None if narrowest.is_finite() => 5.0 * units::HBAR / narrowest,
        None => 1.0 * units::NS,
    };
    let mut pass = 0;
    loop {
        let (times, weights) = time_grid(t_max, opts.points);
        let f_s = energy_to_time(&shifted, &kernels.source, &times);
        let f_d = energy_to_time(&shifted, &kernels.drain, &times);
        let ex = extract_times(&times, &weights, &f_s, &f_d, opts.peak_to_median);
        if t_max < 1.5 * ex.t_rep_fs && pass < opts.extensions && opts.t_max_ns.is_none() {
            t_max = 2.0 * ex.t_rep_fs;
            pass += 1;
            continue;
        }
        if t_max < 1.5 * ex.t_rep_fs {
            warnings.push(format!(
                "time window {:.3e} ns is shorter than 1.5 T_rep ({:.3e} ns)",
                t_max / units::NS,
                ex.t_rep_fs / units::NS
            ));
        }
        let current = pulse_current_trace(&f_d, i0)?;
        let dt = times[1] - times[0];
        let mut f_osc = ex.f_osc.map(to_mhz);
        if let Some(spread) = nyquist_spread(&open, &iso) {
            if dt * spread / units::HBAR > std::f64::consts::PI {
                warnings.push(format!(
                    "time step {:.3e} ns aliases beats across the {spread:.3e} eV resonance spread; f_osc withheld",
                    dt / units::NS
                ));
                f_osc = None;
            }
        }
        return Ok(TimeTrace {
            t_ns: times.iter().map(|t| t / units::NS).collect(),
            f_s,
            f_d,
            current,
            f_osc_mhz: f_osc,
            t_rep_ns: ex.t_rep_fs / units::NS,
            t_dephase_ns: ex.t_dephase_fs / units::NS,
            splitting_mhz: closest_pair_frequency(&open),
            energy_points: kernels.grid.len(),
            warnings,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::negf::{seed_grid, GridOptions};

    fn lorentz_grid(centers: &[f64], gamma: f64) -> EnergyGrid {
        let res: Vec<Resonance> = centers.iter().map(|&c| Resonance { center: c, width: gamma }).collect();
        let opts = GridOptions {
            tail_span: 0.5,
            tail_ratio: 1.02,
            ..GridOptions::default()
        };
        seed_grid(-1.0, 1.0, &res, &opts).unwrap()
    }

    /// Retarded single pole 1/(E − ε + iγ/2).
    fn pole(e: f64, c: f64, gamma: f64) -> C {
        C::new(1.0, 0.0) / C::new(e - c, 0.5 * gamma)
    }

    #[test]
    fn zero_time_is_plain_integral() {
        let g = lorentz_grid(&[0.1], 1e-3);
        let k: Vec<C> = g.energies.iter().map(|&e| C::new(e * e, e)).collect();
        let f = energy_to_time(&g.energies, &k, &[0.0]);
        let direct: C = g.weights.iter().zip(&k).map(|(w, v)| v * *w).sum();
        assert!((f[0] - direct).norm() < 1e-13);
    }

    #[test]
    fn single_pole_decays_at_half_width() {
        let gamma = 1e-4;
        let g = lorentz_grid(&[0.0], gamma);
        let k: Vec<C> = g.energies.iter().map(|&e| pole(e, 0.0, gamma)).collect();
        let tau = units::HBAR / gamma;
        let times: Vec<f64> = (1..=6).map(|j| j as f64 * tau).collect();
        let f = energy_to_time(&g.energies, &k, &times);
        // |f(t)| ∝ exp(−γt/2ħ): log-slope between 2τ and 6τ
        let rate = (f[1].norm() / f[5].norm()).ln() / (4.0 * tau);
        let exact = gamma / (2.0 * units::HBAR);
        assert!(((rate - exact) / exact).abs() < 0.01, "{rate} vs {exact}");
    }

    #[test]
    fn two_poles_beat_at_splitting() {
        let gamma = 2e-6;
        let split = 2e-4;
        let g = lorentz_grid(&[-0.5 * split, 0.5 * split], gamma);
        let k: Vec<C> = g
            .energies
            .iter()
            .map(|&e| pole(e, -0.5 * split, gamma) + pole(e, 0.5 * split, gamma))
            .collect();
        let beat = units::PLANCK / split;
        let (times, _) = time_grid(12.0 * beat, 4096);
        let f = energy_to_time(&g.energies, &k, &times);
        let mag: Vec<f64> = f.iter().map(|c| c.norm()).collect();
        let freq = dominant_frequency(&times, &mag, 5.0).unwrap();
        let exact = split / units::PLANCK;
        assert!(((freq - exact) / exact).abs() < 0.01, "{freq} vs {exact}");
    }

    #[test]
    fn single_pole_has_no_beat() {
        let gamma = 1e-5;
        let g = lorentz_grid(&[0.0], gamma);
        let k: Vec<C> = g.energies.iter().map(|&e| pole(e, 0.0, gamma)).collect();
        let (times, _) = time_grid(20.0 * units::HBAR / gamma, 4096);
        let mag: Vec<f64> = energy_to_time(&g.energies, &k, &times).iter().map(|c| c.norm()).collect();
        assert!(dominant_frequency(&times, &mag, 5.0).is_none());
    }

    #[test]
    fn transform_is_linear() {
        let g = lorentz_grid(&[0.0, 0.2], 1e-3);
        let k1: Vec<C> = g.energies.iter().map(|&e| pole(e, 0.0, 1e-3)).collect();
        let k2: Vec<C> = g.energies.iter().map(|&e| pole(e, 0.2, 1e-3) * 0.3).collect();
        let k12: Vec<C> = k1.iter().zip(&k2).map(|(a, b)| a + b).collect();
        let times = [0.0, 10.0, 1e3, 1e5];
        let (a, b, c) = (
            energy_to_time(&g.energies, &k1, &times),
            energy_to_time(&g.energies, &k2, &times),
            energy_to_time(&g.energies, &k12, &times),
        );
        for j in 0..times.len() {
            assert!((a[j] + b[j] - c[j]).norm() < 1e-12 * c[j].norm().max(1.0));
        }
    }

    #[test]
    fn exponential_mean_time() {
        let tau = 7.0;
        let (t, w) = time_grid(10.0 * tau, 8192);
        let f: Vec<C> = t.iter().map(|x| C::new((-x / tau).exp(), 0.0)).collect();
        let m = mean_time(&t, &w, &f, f64::INFINITY);
        // truncated mean of an exponential on [0, 10τ]
        let exact = tau * (1.0 - 11.0 * (-10.0f64).exp()) / (1.0 - (-10.0f64).exp());
        assert!(((m - exact) / exact).abs() < 1e-6);
        assert!(((m - tau) / tau).abs() < 1e-3);
    }

    #[test]
    fn normalization_contract() {
        let f = vec![C::new(2.0, 1.0), C::new(-1.0, 0.5)];
        let i = pulse_current_trace(&f, 3e-12).unwrap();
        assert_eq!(i[0], 3e-12);
        assert!(pulse_current_trace(&[C::new(0.0, 1.0)], 1.0).is_err());
    }

    #[test]
    fn one_site_kernel_closed_form() {
        let (eps, eta) = (0.3, 1e-10);
        let ss = C::new(-0.01, -0.02);
        let sd = C::new(0.005, -0.03);
        for e in [0.1, 0.29, 0.31, 0.5] {
            let k = reduced_kernel_chain(e, &[eps], 1.0, ss, sd, eta, Terminal::Drain).unwrap();
            let exact = sd / (C::new(e - eps, eta) * (C::new(e - eps, 0.0) - ss - sd));
            assert!((k - exact).norm() < 1e-10 * exact.norm());
        }
    }

    #[test]
    fn mirrored_chain_swaps_kernels() {
        let diag = vec![2.0, 2.3, 2.1, 2.3, 2.0];
        let s = C::new(-0.4, -0.3);
        let ks = reduced_kernel_chain(2.05, &diag, 1.0, s, s, 1e-10, Terminal::Source).unwrap();
        let kd = reduced_kernel_chain(2.05, &diag, 1.0, s, s, 1e-10, Terminal::Drain).unwrap();
        assert!((ks - kd).norm() < 1e-12 * ks.norm());
    }
}
