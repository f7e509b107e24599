use num_traits::NumAssign;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Thomas algorithm for `sub[i-1]·x[i-1] + diag[i]·x[i] + sup[i]·x[i+1] = rhs[i]`.
///
/// Works for real and complex element types. A zero pivot is reported as
/// [`Error::Singular`] with `energy` set to NaN; callers that know the energy
/// rewrap it.
pub fn solve_tridiagonal<F>(sub: &[F], diag: &[F], sup: &[F], rhs: &[F]) -> Result<Vec<F>>
where
    F: Copy + NumAssign,
{
    let n = diag.len();
    assert_eq!(rhs.len(), n);
    assert!(n == 0 || (sub.len() == n - 1 && sup.len() == n - 1));
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![F::zero(); n];
    let mut d = vec![F::zero(); n];
    let mut pivot = diag[0];
    if pivot.is_zero() {
        return Err(Error::Singular { energy: f64::NAN });
    }
    if n > 1 {
        c[0] = sup[0] / pivot;
    }
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - sub[i - 1] * c[i - 1];
        if pivot.is_zero() {
            return Err(Error::Singular { energy: f64::NAN });
        }
        if i < n - 1 {
            c[i] = sup[i] / pivot;
        }
        d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        let next = d[i + 1];
        d[i] -= c[i] * next;
    }
    Ok(d)
}

/// Number of eigenvalues strictly below `x` of the symmetric tridiagonal
/// matrix with diagonal `diag` and off-diagonal `off` (Sturm sequence).
pub fn sturm_count<T: Scalar>(diag: &[T], off: &[T], x: T) -> usize {
    let tiny = T::min_positive_value().sqrt();
    let mut count = 0;
    let mut q = T::one();
    for i in 0..diag.len() {
        q = if i == 0 {
            diag[0] - x
        } else {
            diag[i] - x - off[i - 1] * off[i - 1] / q
        };
        if q.abs() < tiny {
            q = -tiny;
        }
        if q < T::zero() {
            count += 1;
        }
    }
    count
}

/// All eigenvalues in `[lo, hi)` of a symmetric tridiagonal matrix, ascending,
/// located by Sturm bisection to absolute accuracy `tol`.
pub fn tridiagonal_eigenvalues<T: Scalar>(diag: &[T], off: &[T], lo: T, hi: T, tol: T) -> Vec<T> {
    let n_lo = sturm_count(diag, off, lo);
    let n_hi = sturm_count(diag, off, hi);
    let mut out = Vec::with_capacity(n_hi.saturating_sub(n_lo));
    for k in n_lo..n_hi {
        // k-th eigenvalue (0-based): count(x) <= k  and count(x') > k
        let (mut a, mut b) = (lo, hi);
        let two = T::lit(2.0);
        let mut iters = 0;
        while b - a > tol && iters < 200 {
            let mid = (a + b) / two;
            if sturm_count(diag, off, mid) > k {
                b = mid;
            } else {
                a = mid;
            }
            iters += 1;
        }
        out.push((a + b) / two);
    }
    out
}

/// Eigenvector of a symmetric tridiagonal matrix for a known eigenvalue,
/// by two steps of inverse iteration from a fixed start vector.
pub fn tridiagonal_eigenvector(diag: &[f64], off: &[f64], eigenvalue: f64) -> Vec<f64> {
    let n = diag.len();
    let scale = diag.iter().map(|d| d.abs()).fold(1.0, f64::max);
    let shift = eigenvalue + 1e-13 * scale;
    let shifted: Vec<f64> = diag.iter().map(|d| d - shift).collect();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7 + 3) % 11) as f64).collect();
    for _ in 0..3 {
        v = match solve_tridiagonal(off, &shifted, off, &v) {
            Ok(x) => x,
            Err(_) => {
                let perturbed: Vec<f64> = shifted.iter().map(|d| d - 1e-12 * scale).collect();
                solve_tridiagonal(off, &perturbed, off, &v).expect("perturbed shift is regular")
            }
        };
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
    }
    // Fix the sign so the largest-magnitude component is positive.
    let (imax, _) = v
        .iter()
        .enumerate()
        .fold((0, 0.0), |acc, (i, x)| if x.abs() > acc.1 { (i, x.abs()) } else { acc });
    if v[imax] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn thomas_matches_dense_solution() {
        let sub = [1.0, -2.0, 0.5];
        let diag = [4.0, 5.0, 6.0, 3.0];
        let sup = [1.5, 0.25, -1.0];
        let x_true = [1.0, -2.0, 3.0, 0.5];
        let rhs: Vec<f64> = (0..4)
            .map(|i| {
                let mut r = diag[i] * x_true[i];
                if i > 0 {
                    r += sub[i - 1] * x_true[i - 1];
                }
                if i < 3 {
                    r += sup[i] * x_true[i + 1];
                }
                r
            })
            .collect();
        let x = solve_tridiagonal(&sub, &diag, &sup, &rhs).unwrap();
        for (a, b) in x.iter().zip(x_true) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn complex_thomas() {
        let i = Complex64::i();
        let sub = [Complex64::new(1.0, 0.0)];
        let diag = [Complex64::new(2.0, 0.0) + i, Complex64::new(2.0, 0.0) - i];
        let sup = [Complex64::new(1.0, 0.0)];
        let rhs = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let x = solve_tridiagonal(&sub, &diag, &sup, &rhs).unwrap();
        let r0 = diag[0] * x[0] + sup[0] * x[1];
        let r1 = sub[0] * x[0] + diag[1] * x[1];
        assert!((r0 - rhs[0]).norm() < 1e-15 && (r1 - rhs[1]).norm() < 1e-15);
    }

    #[test]
    fn zero_pivot_is_singular() {
        let r = solve_tridiagonal(&[1.0], &[0.0, 1.0], &[1.0], &[1.0, 1.0]);
        assert!(matches!(r, Err(Error::Singular { .. })));
    }

    #[test]
    fn sturm_bisection_two_site() {
        let t: f64 = 2.0;
        let ev = tridiagonal_eigenvalues(&[2.0 * t, 2.0 * t], &[-t], -10.0, 10.0, 1e-13);
        assert_eq!(ev.len(), 2);
        assert!((ev[0] - t).abs() < 1e-12 && (ev[1] - 3.0 * t).abs() < 1e-12);
    }

    #[test]
    fn sturm_matches_analytic_chain() {
        let n = 40;
        let ev = tridiagonal_eigenvalues(&vec![2.0; n], &vec![-1.0; n - 1], -1.0, 5.0, 1e-13);
        for (k, e) in ev.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((e - exact).abs() < 1e-11, "{k}: {e} vs {exact}");
        }
    }

    #[test]
    fn inverse_iteration_eigenvector() {
        let n = 10;
        let diag = vec![2.0; n];
        let off = vec![-1.0; n - 1];
        let e0 = 2.0 - 2.0 * (std::f64::consts::PI / (n + 1) as f64).cos();
        let v = tridiagonal_eigenvector(&diag, &off, e0);
        for i in 0..n {
            let exact = ((i + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).sin()
                * (2.0 / (n + 1) as f64).sqrt();
            assert!((v[i] - exact).abs() < 1e-9);
        }
    }
}
