//! Subcommand bodies. Each fills a [`Run`] with tables, warnings and a summary.

use anyhow::{bail, Context, Result};
use nanoqubit::hamiltonian::ModeHamiltonian;
use nanoqubit::phonon::gap_scan;
use nanoqubit::qubit::{
    axis, bloch_angles, dot_regions, occupancy_thresholds, positional_probability, stability_diagram,
};
use nanoqubit::timedomain::compute_trace;
use nanoqubit::{scf_iterate, selftest, BiasPoint, Config, DeviceModel, ScfOutcome};
use rayon::prelude::*;

use crate::output::{num, opt, Run, Table};
use crate::{BiasArgs, Cli, Command};

/// `start:stop:step` scaled by `unit`.
pub fn parse_sweep(text: &str, unit: f64) -> Result<Vec<f64>> {
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("sweep `{text}` is not start:stop:step"))?;
    let [a, b, s] = parts[..] else {
        bail!("sweep `{text}` is not start:stop:step");
    };
    Ok(axis(a * unit, b * unit, s * unit)?)
}

pub fn parse_list(text: &str, unit: f64) -> Result<Vec<f64>> {
    text.split(',')
        .map(|p| p.trim().parse::<f64>().map(|v| v * unit))
        .collect::<Result<_, _>>()
        .with_context(|| format!("`{text}` is not a comma-separated list of numbers"))
}

fn resolve(config: &mut Config, bias: &BiasArgs) -> Result<BiasPoint> {
    config.bias = bias.apply(config.bias);
    config.validate()?;
    Ok(config.bias)
}

fn dump_hamiltonian(run: &mut Run, h: &ModeHamiltonian, z: &[f64]) {
    let mut t = Table::new("hamiltonian.csv", &["mode", "site", "z_nm", "diag_eV", "hopping_eV"]);
    for (m, chain) in h.modes.iter().enumerate() {
        for (i, d) in chain.diag.iter().enumerate() {
            t.push(vec![m.to_string(), i.to_string(), num(z[i]), num(*d), num(-h.hopping)]);
        }
    }
    run.tables.push(t);
}

fn scf_point(run: &mut Run, model: &DeviceModel, bias: &BiasPoint) -> Result<ScfOutcome> {
    let out = run.stage("scf", || scf_iterate(model, bias, &model.numerics.scf))?;
    run.warn_all("negf", &out.solution.warnings);
    Ok(out)
}

pub fn dispatch(cli: &Cli, mut config: Config) -> Result<(Run, Config)> {
    let mut run = Run::new();
    let model_for = |config: &Config, run: &mut Run| -> Result<DeviceModel> {
        Ok(run.stage("model", || DeviceModel::from_config(config))?)
    };
    match &cli.command {
        Command::Modes => {
            config.validate()?;
            let model = model_for(&config, &mut run)?;
            let mut t = Table::new("modes.csv", &["mode", "energy_eV"]);
            for (k, e) in model.modes.energies.iter().enumerate() {
                t.push(vec![k.to_string(), num(*e)]);
            }
            run.tables.push(t);
            run.say(format!(
                "modes_eV={}",
                model.modes.energies.iter().map(|e| format!("{e:.6}")).collect::<Vec<_>>().join(",")
            ));
        }
        Command::Scf(b) => {
            let bias = resolve(&mut config, b)?;
            let model = model_for(&config, &mut run)?;
            let out = scf_point(&mut run, &model, &bias)?;
            let edge = out.band_edge(&model);
            let mut t = Table::new(
                "band.csv",
                &["z_nm", "region", "phi_V", "band_edge_eV", "density_per_nm", "density_per_cm3"],
            );
            for i in 0..model.grid.len() {
                t.push(vec![
                    num(model.grid.z[i]),
                    model.grid.regions[i].label().to_string(),
                    num(out.state.phi[i]),
                    num(edge[i]),
                    num(out.state.line_density[i]),
                    num(out.state.volume_density[i]),
                ]);
            }
            run.tables.push(t);
            let mut r = Table::new("residuals.csv", &["iteration", "residual_V"]);
            for (k, v) in out.state.residuals.iter().enumerate() {
                r.push(vec![(k + 1).to_string(), num(*v)]);
            }
            run.tables.push(r);
            if cli.dump_hamiltonian {
                dump_hamiltonian(&mut run, &out.hamiltonian, &model.grid.z);
            }
            run.say(format!(
                "iterations={} residual_V={:.3e} I0_A={:.6e}",
                out.state.iterations,
                out.state.residuals.last().copied().unwrap_or(f64::NAN),
                out.solution.current
            ));
        }
        Command::Ldos(b) => {
            let bias = resolve(&mut config, b)?;
            let model = model_for(&config, &mut run)?;
            let out = scf_point(&mut run, &model, &bias)?;
            let sol = &out.solution;
            let mut t = Table::new("ldos.csv", &["E_eV", "z_nm", "ldos_per_eV_nm"]);
            for (k, e) in sol.grid.energies.iter().enumerate() {
                for (i, z) in model.grid.z.iter().enumerate() {
                    t.push(vec![num(*e), num(*z), num(sol.ldos[k][i])]);
                }
            }
            run.tables.push(t);
            let total = sol.total_transmission();
            let mut tt = Table::new("transmission.csv", &["E_eV", "T"]);
            for (e, v) in sol.grid.energies.iter().zip(&total) {
                tt.push(vec![num(*e), num(*v)]);
            }
            run.tables.push(tt);
            if cli.dump_hamiltonian {
                dump_hamiltonian(&mut run, &out.hamiltonian, &model.grid.z);
            }
            run.say(format!("energy_points={} I0_A={:.6e}", sol.grid.len(), sol.current));
        }
        Command::Iv { bias: b, vd_sweep } => {
            let bias = resolve(&mut config, b)?;
            let model = model_for(&config, &mut run)?;
            let vds = parse_sweep(vd_sweep, 1.0)?;
            let results: Vec<_> = run.stage("sweep", || {
                vds.par_iter()
                    .map(|&vd| scf_iterate(&model, &BiasPoint { vd, ..bias }, &model.numerics.scf))
                    .collect()
            });
            let mut t = Table::new("iv.csv", &["vd_V", "I_A", "iterations", "status"]);
            for (vd, r) in vds.iter().zip(results) {
                match r {
                    Ok(o) => {
                        run.warn_all(&format!("vd={vd}"), &o.solution.warnings);
                        t.push(vec![num(*vd), num(o.solution.current), o.state.iterations.to_string(), "ok".into()]);
                    }
                    Err(e) => {
                        run.warn(format!("hole at vd={vd}: {e}"));
                        t.push(vec![num(*vd), String::new(), String::new(), format!("hole: {e}")]);
                    }
                }
            }
            run.tables.push(t);
        }
        Command::Pulse { bias: b, tmax_ns, nt } => {
            if let Some(t) = tmax_ns {
                config.numerics.time.t_max_ns = Some(*t);
            }
            if let Some(n) = nt {
                config.numerics.time.points = *n;
            }
            let bias = resolve(&mut config, b)?;
            let model = model_for(&config, &mut run)?;
            let out = scf_point(&mut run, &model, &bias)?;
            let engine = model.engine(&out.hamiltonian, &bias)?;
            let trace = run.stage("transform", || compute_trace(&engine, out.solution.current, &model.numerics.time))?;
            run.warn_all("pulse", &trace.warnings);
            let mut t = Table::new("pulse.csv", &["t_ns", "I_A", "re_fD", "im_fD", "abs_fS"]);
            for j in 0..trace.t_ns.len() {
                t.push(vec![
                    num(trace.t_ns[j]),
                    num(trace.current[j]),
                    num(trace.f_d[j].re),
                    num(trace.f_d[j].im),
                    num(trace.f_s[j].norm()),
                ]);
            }
            run.tables.push(t);
            let mut s = Table::new(
                "pulse_summary.csv",
                &["I0_A", "f_osc_MHz", "T_rep_ns", "T_dephase_ns", "splitting_MHz", "energy_points"],
            );
            s.push(vec![
                num(out.solution.current),
                opt(trace.f_osc_mhz),
                num(trace.t_rep_ns),
                num(trace.t_dephase_ns),
                opt(trace.splitting_mhz),
                trace.energy_points.to_string(),
            ]);
            run.tables.push(s);
            run.say(format!(
                "f_osc_MHz={} T_rep_ns={:.4} T_dephase_ns={:.4} I0_A={:.6e}",
                trace.f_osc_mhz.map_or("absent".to_string(), |f| format!("{f:.4}")),
                trace.t_rep_ns,
                trace.t_dephase_ns,
                out.solution.current
            ));
        }
        Command::PhononScan { bias: b, gaps } => {
            config.numerics.phonon.enabled = true;
            let bias = resolve(&mut config, b)?;
            let model = model_for(&config, &mut run)?;
            let gaps = parse_list(gaps, 1e-3)?;
            let out = scf_point(&mut run, &model, &bias)?;
            let points = run.stage("born", || gap_scan(&model, &out.state.phi, &bias, &gaps, &model.numerics.phonon))?;
            let mut t = Table::new("phonon.csv", &["gap_meV", "I_A", "I_phonon_free_A", "rel_change"]);
            for p in &points {
                t.push(vec![num(p.gap * 1e3), num(p.current), num(p.current_phonon_free), num(p.relative_change)]);
            }
            run.tables.push(t);
            let mut sorted = points.clone();
            sorted.sort_by(|a, b| a.gap.total_cmp(&b.gap));
            if sorted.windows(2).any(|w| w[1].relative_change > w[0].relative_change) {
                run.warn("relative phonon change is not monotone in the gap");
            }
        }
        Command::InitCheck { bias: b, onsets } => {
            let mut bias = resolve(&mut config, b)?;
            if bias.vd != 0.0 {
                run.warn(format!("init-check runs at zero drain bias; vd={} ignored", bias.vd));
                bias.vd = 0.0;
                config.bias = bias;
            }
            let model = model_for(&config, &mut run)?;
            let out = scf_point(&mut run, &model, &bias)?;
            let q = &model.numerics.qubit;
            let regions = dot_regions(&model.grid, &out.state.phi, q.outer_boundary);
            let occ = positional_probability(&out.state.line_density, &regions, model.grid.spacing);
            let mut t = Table::new("init.csv", &["z_nm", "p_per_nm"]);
            match &occ {
                Some(o) => {
                    for (z, p) in model.grid.z.iter().zip(&o.profile) {
                        t.push(vec![num(*z), num(*p)]);
                    }
                    run.say(format!(
                        "p_left={:.6} p_right={:.6} dot_charge={:.6e} initialized={}",
                        o.p_left,
                        o.p_right,
                        o.dot_charge,
                        o.p_left > 0.95
                    ));
                }
                None => run.say("dots empty: no initialization"),
            }
            run.tables.push(t);
            if *onsets {
                let on = run.stage("onsets", || occupancy_thresholds(&model, &model.numerics.scf, &q.onsets))?;
                let mut t = Table::new("onsets.csv", &["ground_vg1_V", "excited_vg1_V", "delocalization_vg2_V"]);
                t.push(vec![num(on.ground_vg1), num(on.excited_vg1), num(on.delocalization_vg2)]);
                run.tables.push(t);
                run.say(format!(
                    "ground_vg1={:.4} excited_vg1={:.4} delocalization_vg2={:.4}",
                    on.ground_vg1, on.excited_vg1, on.delocalization_vg2
                ));
            }
        }
        Command::Manipulate { bias: b, dvg2_sweep } => {
            let mut bias = resolve(&mut config, b)?;
            bias.vd = 0.0;
            config.bias = bias;
            let model = model_for(&config, &mut run)?;
            let steps = parse_sweep(dvg2_sweep, 1e-3)?;
            let q = model.numerics.qubit.clone();
            let results: Vec<_> = run.stage("sweep", || {
                steps
                    .par_iter()
                    .map(|&d| scf_iterate(&model, &BiasPoint { delta_vg2: d, ..bias }, &model.numerics.scf))
                    .collect()
            });
            let mut profile = Table::new("manipulate.csv", &["dvg2_mV", "z_nm", "p_per_nm"]);
            let mut summary = Table::new("manipulate_summary.csv", &["dvg2_mV", "p_left", "p_right", "dot_charge", "status"]);
            for (d, r) in steps.iter().zip(results) {
                let mv = num(d * 1e3);
                let o = match r {
                    Ok(o) => o,
                    Err(e) => {
                        run.warn(format!("hole at dvg2={d}: {e}"));
                        summary.push(vec![mv, String::new(), String::new(), String::new(), format!("hole: {e}")]);
                        continue;
                    }
                };
                let regions = dot_regions(&model.grid, &o.state.phi, q.outer_boundary);
                match positional_probability(&o.state.line_density, &regions, model.grid.spacing) {
                    Some(occ) => {
                        for (z, p) in model.grid.z.iter().zip(&occ.profile) {
                            profile.push(vec![mv.clone(), num(*z), num(*p)]);
                        }
                        summary.push(vec![mv, num(occ.p_left), num(occ.p_right), num(occ.dot_charge), "ok".into()]);
                    }
                    None => summary.push(vec![mv, String::new(), String::new(), String::new(), "empty".into()]),
                }
            }
            run.tables.push(profile);
            run.tables.push(summary);
        }
        Command::Bloch { bias: b, vg1_sweep, vg2_sweep } => {
            let mut bias = resolve(&mut config, b)?;
            bias.vd = 0.0;
            config.bias = bias;
            let model = model_for(&config, &mut run)?;
            let vg1 = parse_sweep(vg1_sweep, 1.0)?;
            let vg2 = match vg2_sweep {
                Some(s) => parse_sweep(s, 1.0)?,
                None => vec![bias.vg2],
            };
            let pairs: Vec<(f64, f64)> = vg1.iter().flat_map(|&a| vg2.iter().map(move |&c| (a, c))).collect();
            let q = model.numerics.qubit.clone();
            let results: Vec<_> = run.stage("sweep", || {
                pairs
                    .par_iter()
                    .map(|&(a, c)| {
                        let p = BiasPoint { vg1: a, vg2: c, ..bias };
                        let o = scf_iterate(&model, &p, &model.numerics.scf)?;
                        bloch_angles(&model, &o, q.phase_point, q.outer_boundary)
                    })
                    .collect()
            });
            let mut t = Table::new("bloch.csv", &["vg1", "vg2", "theta", "phi", "p_left", "status"]);
            for (&(a, c), r) in pairs.iter().zip(results) {
                match r {
                    Ok(Some(s)) => t.push(vec![num(a), num(c), num(s.theta), num(s.phi), num(s.p_left), "ok".into()]),
                    Ok(None) => t.push(vec![num(a), num(c), String::new(), String::new(), String::new(), "empty".into()]),
                    Err(e) => {
                        run.warn(format!("hole at ({a}, {c}): {e}"));
                        t.push(vec![num(a), num(c), String::new(), String::new(), String::new(), format!("hole: {e}")]);
                    }
                }
            }
            run.tables.push(t);
        }
        Command::Stability { vg1, vg2, vd } => {
            config.bias.vd = *vd;
            config.validate()?;
            let model = model_for(&config, &mut run)?;
            let (a1, a2) = (parse_sweep(vg1, 1.0)?, parse_sweep(vg2, 1.0)?);
            let map = run.stage("map", || stability_diagram(&model, &a1, &a2, *vd, &model.numerics.scf));
            let mut t = Table::new("stability.csv", &["vg1", "vg2", "I0_A", "status"]);
            for p in &map.points {
                match (&p.current, &p.error) {
                    (Some(c), _) => t.push(vec![num(p.vg1), num(p.vg2), num(*c), "ok".into()]),
                    (None, e) => {
                        let msg = e.clone().unwrap_or_default();
                        run.warn(format!("hole at ({}, {}): {msg}", p.vg1, p.vg2));
                        t.push(vec![num(p.vg1), num(p.vg2), String::new(), format!("hole: {msg}")]);
                    }
                }
            }
            run.tables.push(t);
            let mut m = Table::new("stability_maxima.csv", &["rank", "vg1", "vg2", "I0_A"]);
            for (k, &(i, j)) in map.maxima.iter().enumerate() {
                m.push(vec![k.to_string(), num(map.vg1[i]), num(map.vg2[j]), opt(map.at(i, j))]);
            }
            run.tables.push(m);
            let mut r = Table::new("stability_ridge.csv", &["vg1", "vg2"]);
            for (a, c) in &map.ridge {
                r.push(vec![num(*a), num(*c)]);
            }
            run.tables.push(r);
            run.say(format!("points={} holes={} maxima={}", map.points.len(), map.holes().len(), map.maxima.len()));
        }
        Command::Selftest => {
            let mut t = Table::new("selftest.csv", &["oracle", "passed", "value", "threshold", "seconds", "detail"]);
            for (name, r) in run.stage("oracles", selftest::run_all) {
                match r {
                    Ok(c) => {
                        run.summary.push(format!(
                            "{} {name}: {:.3e} (limit {:.1e}) {}",
                            if c.passed { "PASS" } else { "FAIL" },
                            c.value,
                            c.threshold,
                            c.detail
                        ));
                        run.failed |= !c.passed;
                        t.push(vec![
                            name.into(),
                            c.passed.to_string(),
                            num(c.value),
                            num(c.threshold),
                            format!("{:.3}", c.seconds),
                            c.detail,
                        ]);
                    }
                    Err(e) => {
                        run.summary.push(format!("FAIL {name}: {e}"));
                        run.failed = true;
                        t.push(vec![name.into(), "false".into(), String::new(), String::new(), String::new(), e.to_string()]);
                    }
                }
            }
            run.tables.push(t);
        }
    }
    Ok((run, config))
}
