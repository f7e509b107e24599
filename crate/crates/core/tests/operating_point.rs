//! End-to-end properties of the self-consistent solution.

use nanoqubit::poisson::poisson_solve;
use nanoqubit::{scf_iterate, BiasPoint, Config, DeviceModel, ScfOptions};

fn model() -> DeviceModel {
    DeviceModel::from_config(&Config::default()).unwrap()
}

#[test]
fn operating_point_converges_and_is_self_consistent() {
    let m = model();
    let bias = BiasPoint::new(1.15, 1.3, 0.042, 0.042);
    let out = scf_iterate(&m, &bias, &ScfOptions::default()).unwrap();
    assert!(out.state.converged && out.state.iterations <= 60, "{} iterations", out.state.iterations);
    assert!(out.state.residuals.last().unwrap() < &1e-6);
    assert!(out.state.line_density.iter().all(|&d| d >= 0.0));
    // φ is the Poisson solution of its own density up to the loop tolerance
    let phi = poisson_solve(&m.poisson(&bias), &out.state.line_density).unwrap();
    let worst = phi.iter().zip(&out.state.phi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-5, "{worst}");
    assert!(out.solution.current > 0.0);
}

#[test]
fn zero_drain_bias_carries_no_current() {
    let m = model();
    let out = scf_iterate(&m, &BiasPoint::new(1.15, 1.3, 0.042, 0.0), &ScfOptions::default()).unwrap();
    assert_eq!(out.solution.current, 0.0);
}

#[test]
fn reversed_drain_bias_reverses_current() {
    let m = model();
    let fwd = scf_iterate(&m, &BiasPoint::new(1.15, 1.3, 0.042, 0.02), &ScfOptions::default()).unwrap();
    let rev = scf_iterate(&m, &BiasPoint::new(1.15, 1.3, 0.042, -0.02), &ScfOptions::default()).unwrap();
    assert!(fwd.solution.current > 0.0 && rev.solution.current < 0.0);
}

#[test]
fn max_iter_exhaustion_is_an_error() {
    let m = model();
    let opts = ScfOptions { max_iter: 2, ..Default::default() };
    assert!(scf_iterate(&m, &BiasPoint::new(1.15, 1.3, 0.042, 0.042), &opts).is_err());
}
