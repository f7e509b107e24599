//! Acceptance criteria 1–15. Every criterion runs, prints one
//! `ACCEPTANCE n PASS|FAIL` line, and the test fails if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nanoqubit::phonon::gap_scan;
use nanoqubit::qubit::{axis, dot_regions, level_spacing, positional_probability, stability_diagram, MapPoint, StabilityMap};
use nanoqubit::selftest;
use nanoqubit::timedomain::compute_trace;
use nanoqubit::{scf_iterate, BiasPoint, DeviceModel, DeviceSpec, MaterialParams, Numerics, ScfOptions};

struct Report {
    failed: Vec<usize>,
}

impl Report {
    fn record(&mut self, n: usize, pass: bool, detail: String) {
        let line = format!("ACCEPTANCE {n:>2} {}: {detail}", if pass { "PASS" } else { "FAIL" });
        println!("{line}");
        if !pass {
            self.failed.push(n);
        }
    }
}

fn model() -> DeviceModel {
    DeviceModel::new(DeviceSpec::default(), MaterialParams::default(), Numerics::default()).unwrap()
}

fn oracle(r: &mut Report, n: usize, c: nanoqubit::Result<selftest::OracleCheck>, limit_s: f64) {
    match c {
        Ok(c) => {
            let pass = c.passed && c.seconds < limit_s;
            r.record(n, pass, format!("{} = {:.3e} (limit {:.1e}), {}, {:.2} s (limit {limit_s} s)", c.name, c.value, c.threshold, c.detail, c.seconds));
        }
        Err(e) => r.record(n, false, format!("error: {e}")),
    }
}

fn run_stability(out: &Path, threads: &str) -> (bool, f64) {
    let start = Instant::now();
    let ok = Command::new(env!("CARGO_BIN_EXE_nanoqubit"))
        .args(["stability", "--vg1", "1.12:1.16:0.002", "--vg2", "1.33:1.35:0.001", "--vd", "0.042", "--threads", threads, "--out"])
        .arg(out)
        .output()
        .map(|o| o.status.code() == Some(0))
        .unwrap_or(false);
    (ok, start.elapsed().as_secs_f64())
}

fn csv_body(path: &Path) -> Option<String> {
    let text = std::fs::read_to_string(path).ok()?;
    Some(text.lines().skip(1).collect::<Vec<_>>().join("\n"))
}

fn map_from_csv(path: &Path) -> Option<StabilityMap> {
    let body = csv_body(path)?;
    let points: Vec<MapPoint> = body
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            MapPoint {
                vg1: f[0].parse().unwrap(),
                vg2: f[1].parse().unwrap(),
                current: f[2].parse().ok(),
                error: None,
            }
        })
        .collect();
    let mut vg1: Vec<f64> = points.iter().map(|p| p.vg1).collect();
    vg1.dedup();
    let vg2: Vec<f64> = points.iter().take_while(|p| p.vg1 == points[0].vg1).map(|p| p.vg2).collect();
    Some(StabilityMap::from_points(vg1, vg2, 0.042, points))
}

#[test]
fn acceptance_criteria() {
    let mut r = Report { failed: Vec::new() };
    let scf = ScfOptions::default();
    let m = model();

    oracle(&mut r, 1, selftest::breit_wigner(), 1.0);
    oracle(&mut r, 2, selftest::spectral_identity(2024), 5.0);
    oracle(&mut r, 3, selftest::circular_well(), 30.0);
    oracle(&mut r, 4, selftest::box_spacing(), 30.0);
    oracle(&mut r, 5, selftest::poisson_decay(), f64::INFINITY);
    oracle(&mut r, 6, selftest::lorentzian_transform(), f64::INFINITY);
    oracle(&mut r, 7, selftest::kramers_weight(), f64::INFINITY);

    // 8: zero drain bias gives exactly zero current, also over a map
    {
        let out = scf_iterate(&m, &BiasPoint::new(1.15, 1.3, 0.042, 0.0), &scf);
        let single = out.as_ref().map(|o| o.solution.current);
        let map = stability_diagram(&m, &axis(1.12, 1.16, 0.01).unwrap(), &axis(1.33, 1.35, 0.005).unwrap(), 0.0, &scf);
        let all_zero = map.points.iter().all(|p| p.current == Some(0.0));
        r.record(8, single.as_ref().is_ok_and(|c| *c == 0.0) && all_zero, format!("I0 = {single:?}, {} map points all exactly zero: {all_zero}", map.points.len()));
    }

    // 9 and 14: the full paper window through the CLI, with 1 and 2 workers
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("w1"), dir.path().join("w2"));
    let (ok1, secs1) = run_stability(&a, "1");
    let (ok2, _) = run_stability(&b, "2");
    {
        let same = ok1
            && ok2
            && ["stability.csv", "stability_maxima.csv", "stability_ridge.csv"]
                .iter()
                .all(|f| csv_body(&a.join(f)).is_some() && csv_body(&a.join(f)) == csv_body(&b.join(f)));
        r.record(9, same, format!("21×21 stability bodies identical for 1 and 2 workers: {same} (runs ok: {ok1}, {ok2})"));
    }

    // 10: spacing of the two lowest levels localized in the gate-1 dot
    {
        let out = scf_iterate(&m, &BiasPoint::new(1.15, 1.3, 0.0, 0.0), &scf).unwrap();
        let regions = dot_regions(&m.grid, &out.state.phi, m.numerics.qubit.outer_boundary);
        let sp = level_spacing(&out.hamiltonian, &regions.left, 5.0);
        let pass = sp.is_some_and(|s| (s - 0.5).abs() <= 0.1);
        r.record(10, pass, format!("dot level spacing {:?} eV, target 0.500 ± 0.100", sp));
    }

    // 11: p_left = p_right crossing for ΔVG2 in [20, 58] mV
    {
        let steps = axis(0.020, 0.058, 0.002).unwrap();
        let diffs: Vec<Option<f64>> = steps
            .iter()
            .map(|&d| {
                let out = scf_iterate(&m, &BiasPoint::new(1.15, 1.3, d, 0.0), &scf).ok()?;
                let regions = dot_regions(&m.grid, &out.state.phi, m.numerics.qubit.outer_boundary);
                positional_probability(&out.state.line_density, &regions, m.grid.spacing).map(|o| o.p_left - o.p_right)
            })
            .collect();
        let crossing = steps.windows(2).zip(diffs.windows(2)).find_map(|(s, d)| match (d[0], d[1]) {
            (Some(x), Some(y)) if x * y <= 0.0 => Some(0.5 * (s[0] + s[1])),
            _ => None,
        });
        let ends = (diffs.first().copied().flatten(), diffs.last().copied().flatten());
        r.record(11, crossing.is_some(), format!("crossing at {crossing:?} V; p_left − p_right = {:?} at 20 mV, {:?} at 58 mV", ends.0, ends.1));
    }

    // 12 and 13: the operating point
    let op = BiasPoint::new(1.15, 1.3, 0.042, 0.042);
    let out = scf_iterate(&m, &op, &scf).unwrap();
    {
        let pa = out.solution.current * 1e12;
        r.record(12, (0.1..=100.0).contains(&pa), format!("I0 = {pa:.4} pA, target [0.1, 100] pA"));
    }
    {
        let engine = m.engine(&out.hamiltonian, &op).unwrap();
        match compute_trace(&engine, out.solution.current, &m.numerics.time) {
            Ok(t) => {
                let f_ok = t.f_osc_mhz.is_some_and(|f| (10.0..=100.0).contains(&f));
                let td_ok = (30.0..=150.0).contains(&t.t_dephase_ns);
                let tr_ok = (150.0..=600.0).contains(&t.t_rep_ns);
                let consistent = match (t.f_osc_mhz, t.splitting_mhz) {
                    (Some(f), Some(s)) => ((f - s) / s).abs() < 0.05,
                    _ => false,
                };
                r.record(
                    13,
                    f_ok && td_ok && tr_ok && consistent,
                    format!(
                        "f_osc {:?} MHz, T_dephase {:.1} ns, T_rep {:.1} ns, splitting ΔE/h {:?} MHz, warnings {:?}",
                        t.f_osc_mhz, t.t_dephase_ns, t.t_rep_ns, t.splitting_mhz, t.warnings
                    ),
                );
            }
            Err(e) => r.record(13, false, format!("error: {e}")),
        }
    }

    // 14: two dominant maxima split by about (4 mV, 4 mV)
    match map_from_csv(&a.join("stability.csv")) {
        Some(map) => {
            let dom = map.dominant_maxima(0.5);
            let pass = dom.len() == 2 && {
                let (p, q) = if dom[0].0 <= dom[1].0 { (dom[0], dom[1]) } else { (dom[1], dom[0]) };
                let (d1, d2) = ((q.0 - p.0) * 1e3, (q.1 - p.1) * 1e3);
                (2.0..=6.0).contains(&d1)
                    && (2.0..=6.0).contains(&d2)
                    && (p.0 - 1.140).abs() <= 0.015
                    && (p.1 - 1.342).abs() <= 0.015
                    && (q.0 - 1.144).abs() <= 0.015
                    && (q.1 - 1.346).abs() <= 0.015
            } && secs1 <= 1800.0;
            r.record(
                14,
                pass,
                format!(
                    "{} dominant maxima (≥ half the map maximum) {:?}, all maxima {}, map time {secs1:.0} s",
                    dom.len(),
                    dom.iter().map(|d| (d.0, d.1)).collect::<Vec<_>>(),
                    map.maxima.len()
                ),
            );
        }
        None => r.record(14, false, "stability CSV missing".into()),
    }

    // 15: phonon gap scan
    {
        let start = Instant::now();
        let gaps = [0.010, 0.025, 0.050, 0.100, 0.200, 0.350, 0.500];
        let opts = nanoqubit::phonon::PhononOptions { enabled: true, ..Default::default() };
        match gap_scan(&m, &out.state.phi, &op, &gaps, &opts) {
            Ok(pts) => {
                let rel: Vec<f64> = pts.iter().map(|p| p.relative_change).collect();
                // non-increasing in the gap within the 1e-3 Born-loop noise
                let monotone = rel.windows(2).all(|w| w[1] <= w[0] + 1e-3);
                let secs = start.elapsed().as_secs_f64();
                let pass = rel[6] < 0.05 && rel[0] > 0.10 && monotone && secs <= 600.0;
                r.record(15, pass, format!("relative change {:?} at gaps {:?} meV, monotone {monotone}, {secs:.0} s", rel.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>(), gaps.map(|g| g * 1e3)));
            }
            Err(e) => r.record(15, false, format!("error: {e}")),
        }
    }

    assert!(r.failed.is_empty(), "failed criteria: {:?}", r.failed);
}
