//! Declarative scenario execution: parse a configuration, run each
//! `[[run]]` pipeline, and write CSV tables, optional grid dumps, a gnuplot
//! script and a manifest into an output directory.

pub mod config;
pub mod output;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;

pub use config::{apply_override, Evolver, InitialState, Physics, RunSpec, ScenarioConfig};
pub use output::{fmt_e, Cell, Check, Manifest, Report, RunRecord, Status, Table, MANIFEST_FILE};

use crate::bath::BathKind;
use crate::decoherence::{closed_form_thermal_initial, DecoherenceSetup, PowerLawFit, Regime};
use crate::error::{Error, Result};
use crate::evolve::{
    evolve_hpz, evolve_lambda, hpz_coefficients, kernel_propagate_tables, lambda_generator, EvolutionConfig, Trajectory,
};
use crate::langevin::{sample_moments, LangevinModel};
use crate::response::{fluctuation_moments, green_initial_value, DriveSpec, TimeGrid};
use crate::wigner::{equilibrium_covariance, equilibrium_wigner, gaussian_state_wigner, kicked_cat_wigner, CatSpec, PhaseGaussian, PhaseMoments, WignerGrid};

/// Process exit status for an error: 2 configuration, 3 numerical abort, 4 I/O.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } => 4,
        e if e.is_numerical() => 3,
        Error::CoefficientRange { .. } => 3,
        _ => 2,
    }
}

/// Result of [`run_scenario`]: the manifest written and the first run error.
#[derive(Debug)]
pub struct Outcome {
    pub manifest: Manifest,
    /// Exit status of the first failing run, if any run raised an error.
    pub error_code: Option<i32>,
}

impl Outcome {
    /// 0 when every run completed and passed its checks, 1 when a check
    /// failed, otherwise the first error's code.
    pub fn exit_status(&self) -> i32 {
        match self.error_code {
            Some(c) => c,
            None if self.manifest.runs.iter().any(|r| r.status() == Status::Fail) => 1,
            None => 0,
        }
    }
}

/// Run every entry of `cfg`, writing artifacts under `out`. Runs execute in
/// parallel; each writes only its own files, and the manifest is written
/// once at the end.
pub fn run_scenario(cfg: &ScenarioConfig, out: &Path, runner_version: &str) -> Result<Outcome> {
    cfg.validate()?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    let results: Vec<(RunRecord, Option<i32>, Option<String>)> = cfg
        .runs
        .par_iter()
        .enumerate()
        .map(|(idx, run)| {
            let mut rec = RunRecord {
                name: run.name().into(),
                mode: run.mode().into(),
                files: vec![],
                summary: String::new(),
                error: None,
                checks: vec![],
            };
            let mut plot = None;
            let code = match execute(cfg, idx, run, out, &mut rec) {
                Ok(p) => {
                    plot = p;
                    None
                }
                Err(e) => {
                    log::error!("run {}: {e}", rec.name);
                    rec.error = Some(e.to_string());
                    Some(exit_code(&e))
                }
            };
            (rec, code, plot)
        })
        .collect();
    let error_code = results.iter().find_map(|(_, c, _)| *c);
    if cfg.output.plot_script {
        let mut script = String::from("# gnuplot script for the tables in this directory\nset datafile separator ','\nset key autotitle columnhead\n");
        for (_, _, p) in &results {
            if let Some(p) = p {
                script.push_str(p);
            }
        }
        let path = out.join("plot.gp");
        fs::write(&path, script).map_err(|e| Error::io(&path, e))?;
    }
    let runs = results.into_iter().map(|(r, _, _)| r).collect();
    let manifest = Manifest::new(cfg, runner_version, started, clock.elapsed().as_secs_f64(), runs)?;
    manifest.write(out)?;
    Ok(Outcome { manifest, error_code })
}

fn execute(cfg: &ScenarioConfig, idx: usize, run: &RunSpec, out: &Path, rec: &mut RunRecord) -> Result<Option<String>> {
    let ph = cfg.physics();
    match run {
        RunSpec::Evolve { name, evolver, lambda, initial, t_final, dt, require_physical, expect_violation } => {
            let w0 = initial_grid(cfg, &ph, initial)?;
            let traj = evolve_grid(cfg, &ph, &w0, *evolver, *lambda, *t_final, *dt)?;
            let file = format!("{name}_moments.csv");
            moments_table(&traj.times, &traj.moments, ph.osc.hbar).write(&out.join(&file))?;
            rec.files.push(file.clone());
            if cfg.output.dump_grids {
                for (k, (t, g)) in traj.frames.iter().enumerate() {
                    let f = format!("{name}_grid_{k:04}.txt");
                    g.write_dump(out.join(&f))?;
                    log::debug!("dumped grid at t = {t} to {f}");
                    rec.files.push(f);
                }
            }
            let fired = match traj.uncertainty_violation {
                Some(t) => format!("uncertainty detector fired at t = {t:.6}"),
                None => "uncertainty detector never fired".into(),
            };
            rec.summary = format!("min uncertainty ratio {:.6}; {fired}", traj.min_uncertainty_ratio);
            let check = if *require_physical {
                Check::new("uncertainty-bound", traj.uncertainty_violation.is_none(), fired)
            } else if *expect_violation {
                Check::new("uncertainty-violation-expected", traj.uncertainty_violation.is_some(), fired)
            } else {
                Check::skip("uncertainty-bound", fired)
            };
            rec.checks.push(check);
            Ok(Some(format!(
                "set title '{name}: second moments'\nplot '{file}' using 1:5 with lines, '' using 1:6 with lines, '' using 1:8 with lines\npause -1\n"
            )))
        }
        RunSpec::EquilibriumCheck { name, lambdas, t_final, dt, tolerance } => {
            let grid = cfg.grid_for(&InitialState::Equilibrium)?;
            let w0 = equilibrium_wigner(&ph.osc, &ph.th, &grid)?;
            let scale = w0.max_abs();
            let mut table = Table::new(&["lambda", "t", "max_abs_deviation_rel"]);
            let mut worst = Vec::new();
            for &l in lambdas {
                let mut ecfg = EvolutionConfig::new(l, *t_final);
                ecfg.dt = *dt;
                let n_steps = (*t_final / ecfg.resolved_dt(&ph.osc, &ph.bath)).ceil() as usize;
                ecfg.record_every = if cfg.output.checkpoint_every > 0 { cfg.output.checkpoint_every } else { (n_steps / 10).max(1) };
                let traj = evolve_lambda(&w0, &ecfg, &ph.osc, &ph.th, &ph.bath)?;
                let mut max_dev: f64 = 0.0;
                for (t, g) in &traj.frames {
                    let dev = g.max_difference(&w0)? / scale;
                    max_dev = max_dev.max(dev);
                    table.push(&[Cell::Int(l as i64), Cell::Num(*t), Cell::Num(dev)]);
                }
                rec.checks.push(Check::new(
                    &format!("stationary-lambda{l:+}"),
                    max_dev < *tolerance,
                    format!("max|W - W0|/max W0 = {max_dev:.3e} (tolerance {tolerance:.1e})"),
                ));
                worst.push(format!("lambda {l:+}: {max_dev:.2e}"));
            }
            let file = format!("{name}.csv");
            table.write(&out.join(&file))?;
            rec.files.push(file.clone());
            rec.summary = format!("max relative deviation {}", worst.join(", "));
            Ok(Some(format!(
                "set title '{name}: drift from equilibrium'\nset logscale y\nplot '{file}' using 2:3:1 with points palette\nunset logscale y\npause -1\n"
            )))
        }
        RunSpec::Decohere { name, regime, cat, times, tolerance, fit_exponent, points } => {
            decohere(&ph, name, *regime, cat, times, *tolerance, *fit_exponent, *points, out, rec)
        }
        RunSpec::KramersCompare { name, initial, t_final, dt, samples, paths, z_max } => {
            let w0 = initial_grid(cfg, &ph, initial)?;
            let traj = evolve_grid(cfg, &ph, &w0, Evolver::Lambda, -1, *t_final, *dt)?;
            let g0 = initial_gaussian(&ph, initial)?;
            let (_, d) = lambda_generator(-1, &ph.osc, &ph.th, &ph.bath, &ph.drive)?;
            let model = LangevinModel {
                mass: ph.osc.mass,
                spring_constant: ph.osc.spring_constant,
                gamma: ph.bath.gamma,
                momentum_diffusion: d[1][1],
            };
            // compare at the evolution steps nearest to evenly spaced times
            let idx_at: Vec<usize> = (1..=*samples)
                .map(|k| {
                    let t = *t_final * k as f64 / *samples as f64;
                    (0..traj.times.len())
                        .min_by(|&a, &b| (traj.times[a] - t).abs().total_cmp(&(traj.times[b] - t).abs()))
                        .expect("non-empty trajectory")
                })
                .collect();
            let ts: Vec<f64> = idx_at.iter().map(|&i| traj.times[i]).collect();
            let seed = cfg.seed.wrapping_add(idx as u64);
            let mc = sample_moments(&model, g0.mean, g0.cov, &ts, *paths, seed)?;
            let mut table = Table::new(&["t", "moment", "grid", "monte_carlo", "standard_error", "z"]);
            let mut z_worst: f64 = 0.0;
            let mut count = 0;
            for (&i, s) in idx_at.iter().zip(&mc) {
                let m = &traj.moments[i];
                let c = m.covariance();
                let pairs = [
                    ("mean_q", m.mean_q, s.mean_q, s.se_mean_q),
                    ("mean_p", m.mean_p, s.mean_p, s.se_mean_p),
                    ("var_q", c[0][0], s.var_q, s.se_var_q),
                    ("var_p", c[1][1], s.var_p, s.se_var_p),
                    ("cov_qp", c[0][1], s.cov_qp, s.se_cov_qp),
                ];
                for (label, grid, mcv, se) in pairs {
                    let z = (grid - mcv) / se;
                    z_worst = z_worst.max(z.abs());
                    count += 1;
                    table.push(&[Cell::Num(s.t), Cell::Text(label), Cell::Num(grid), Cell::Num(mcv), Cell::Num(se), Cell::Num(z)]);
                }
            }
            let file = format!("{name}.csv");
            table.write(&out.join(&file))?;
            rec.files.push(file.clone());
            rec.summary = format!("grid vs Monte Carlo ({paths} paths): max |z| = {z_worst:.2} over {count} moments");
            rec.checks.push(Check::new(
                "monte-carlo-agreement",
                z_worst <= *z_max,
                format!("max |z| = {z_worst:.2} (limit {z_max})"),
            ));
            Ok(Some(format!(
                "set title '{name}: grid minus Monte Carlo in standard errors'\nplot '{file}' using 1:6 with points\npause -1\n"
            )))
        }
        RunSpec::Coefficients { name, t_final, dt } => {
            let grid = TimeGrid::covering(*t_final, dt.unwrap_or(0.01))?;
            let c = hpz_coefficients(&ph.bath, &ph.osc, &ph.th, grid, &ph.moments)?;
            let mut table = Table::new(&["t", "two_gamma", "omega2", "d_pp", "d_qp"]);
            for k in 0..grid.len() {
                table.push(&[
                    Cell::Num(grid.time(k)),
                    Cell::Num(c.gamma_t[k]),
                    Cell::Num(c.omega2_t[k]),
                    Cell::Num(c.d_pp[k]),
                    Cell::Num(c.d_qp[k]),
                ]);
            }
            let file = format!("{name}.csv");
            table.write(&out.join(&file))?;
            rec.files.push(file.clone());
            let last = grid.len() - 1;
            rec.summary = format!(
                "at t = {:.4}: 2Gamma = {:.6}, Omega^2 = {:.6}, d_pp = {:.6}",
                grid.t_final(),
                c.gamma_t[last],
                c.omega2_t[last],
                c.d_pp[last]
            );
            if ph.bath.kind == BathKind::Ohmic {
                let (g, w2) = (ph.bath.gamma, ph.osc.omega0().powi(2));
                let rel = |x: f64, r: f64| if r == 0.0 { x.abs() } else { (x / r - 1.0).abs() };
                let worst = (1..grid.len()).fold(0.0f64, |m, k| m.max(rel(c.gamma_t[k], g)).max(rel(c.omega2_t[k], w2)));
                rec.checks.push(Check::new(
                    "ohmic-constant-coefficients",
                    worst < 1e-4,
                    format!("max relative deviation of 2Gamma, Omega^2 = {worst:.2e}"),
                ));
                if g * grid.t_final() >= 10.0 && ph.osc.spring_constant > 0.0 {
                    let (_, d) = lambda_generator(-1, &ph.osc, &ph.th, &ph.bath, &DriveSpec::None)?;
                    let r = rel(c.d_pp[last], d[1][1]);
                    rec.checks.push(Check::new(
                        "long-time-diffusion",
                        r < 0.01,
                        format!("d_pp = {:.6e} vs {:.6e} (rel {r:.2e})", c.d_pp[last], d[1][1]),
                    ));
                }
            }
            Ok(Some(format!(
                "set title '{name}: coefficients'\nplot '{file}' using 1:2 with lines, '' using 1:3 with lines, '' using 1:4 with lines, '' using 1:5 with lines\npause -1\n"
            )))
        }
    }
}

fn initial_gaussian(ph: &Physics, initial: &InitialState) -> Result<PhaseGaussian> {
    Ok(match *initial {
        InitialState::Packet { q0, p0, sigma } => PhaseGaussian::minimal(q0, p0, sigma, ph.osc.hbar),
        InitialState::Gaussian { mean, cov } => PhaseGaussian { mean, cov },
        InitialState::Equilibrium => PhaseGaussian { mean: [0.0, 0.0], cov: equilibrium_covariance(&ph.osc, &ph.th)? },
        InitialState::Cat { .. } => return Err(Error::Config("a cat state is not Gaussian".into())),
    })
}

fn initial_grid(cfg: &ScenarioConfig, ph: &Physics, initial: &InitialState) -> Result<WignerGrid> {
    let grid = cfg.grid_for(initial)?;
    match *initial {
        InitialState::Cat { d, sigma, kick_variance } => kicked_cat_wigner(&CatSpec::new(d, sigma), &ph.osc, kick_variance, &grid),
        InitialState::Equilibrium => equilibrium_wigner(&ph.osc, &ph.th, &grid),
        _ => gaussian_state_wigner(&initial_gaussian(ph, initial)?, &ph.osc, &grid),
    }
}

fn evolve_grid(
    cfg: &ScenarioConfig,
    ph: &Physics,
    w0: &WignerGrid,
    evolver: Evolver,
    lambda: i32,
    t_final: f64,
    dt: Option<f64>,
) -> Result<Trajectory> {
    let mut ecfg = EvolutionConfig::new(lambda, t_final);
    ecfg.dt = dt;
    ecfg.drive = ph.drive.clone();
    ecfg.record_every = cfg.output.checkpoint_every;
    match evolver {
        Evolver::Lambda => evolve_lambda(w0, &ecfg, &ph.osc, &ph.th, &ph.bath),
        Evolver::Hpz => {
            let grid = TimeGrid::covering(t_final, dt.unwrap_or(0.01).min(0.01))?;
            let c = hpz_coefficients(&ph.bath, &ph.osc, &ph.th, grid, &ph.moments)?;
            evolve_hpz(w0, &c, &ecfg)
        }
        Evolver::Kernel => kernel_trajectory(cfg, ph, w0, t_final, dt),
    }
}

/// Kernel propagation to evenly spaced times (every `dt`, or ten samples).
fn kernel_trajectory(cfg: &ScenarioConfig, ph: &Physics, w0: &WignerGrid, t_final: f64, dt: Option<f64>) -> Result<Trajectory> {
    let n = dt.map_or(10, |h| (t_final / h - 1e-9).ceil().max(1.0) as usize);
    let grid = TimeGrid::covering(t_final, 0.01)?;
    let green = green_initial_value(&ph.bath, &ph.osc, grid)?;
    let moments = fluctuation_moments(&ph.bath, &ph.osc, &ph.th, grid, &ph.moments)?;
    let bound = 0.25 * ph.osc.hbar * ph.osc.hbar;
    let m0 = w0.moments();
    let mut traj = Trajectory {
        times: vec![0.0],
        moments: vec![m0],
        frames: vec![],
        uncertainty_violation: None,
        min_uncertainty_ratio: m0.uncertainty_determinant() / bound,
    };
    let every = cfg.output.checkpoint_every;
    if every > 0 {
        traj.frames.push((0.0, w0.clone()));
    }
    for k in 1..=n {
        let t = if k == n { grid.t_final() } else { t_final * k as f64 / n as f64 };
        let w = kernel_propagate_tables(w0, &green, &moments, t)?;
        let m = w.moments();
        let ratio = m.uncertainty_determinant() / bound;
        traj.min_uncertainty_ratio = traj.min_uncertainty_ratio.min(ratio);
        if ratio < 1.0 - 1e-6 && traj.uncertainty_violation.is_none() {
            traj.uncertainty_violation = Some(t);
        }
        traj.times.push(t);
        traj.moments.push(m);
        if k == n || (every > 0 && k % every == 0) {
            traj.frames.push((t, w));
        }
    }
    Ok(traj)
}

fn moments_table(times: &[f64], moments: &[PhaseMoments], hbar: f64) -> Table {
    let mut t = Table::new(&["t", "norm", "mean_q", "mean_p", "var_q", "var_p", "cov_qp", "uncertainty_ratio"]);
    let bound = 0.25 * hbar * hbar;
    for (time, m) in times.iter().zip(moments) {
        let c = m.covariance();
        t.push(&[
            Cell::Num(*time),
            Cell::Num(m.norm),
            Cell::Num(m.mean_q),
            Cell::Num(m.mean_p),
            Cell::Num(c[0][0]),
            Cell::Num(c[1][1]),
            Cell::Num(c[0][1]),
            Cell::Num(m.uncertainty_determinant() / bound),
        ]);
    }
    t
}

/// Decoherence time of the regime's short-time law with exponent `n`, where
/// one is known in closed form.
pub fn nominal_tau(setup: &DecoherenceSetup, n: f64) -> Option<f64> {
    let (m, h, s, d) = (setup.osc.mass, setup.osc.hbar, setup.cat.sigma, setup.cat.d);
    let kt = setup.th.kt;
    let zeta = setup.bath.friction_constant();
    let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
    match setup.regime {
        Regime::ThermalInitial if close(n, 2.0) && kt > 0.0 && d > 0.0 => Some(8f64.sqrt() * s * s / ((kt / m).sqrt() * d)),
        Regime::ZeroTInitial if close(n, 1.0) && zeta * kt * d > 0.0 => Some(3.0 * h * h / (zeta * kt * d * d)),
        Regime::ZeroTInitial if close(n, 3.0) && zeta * kt * d > 0.0 => {
            Some((12.0 * m * m * s.powi(4) / (zeta * kt * d * d)).cbrt())
        }
        Regime::Driven if close(n, 3.0) => match setup.drive {
            DriveSpec::DeltaCorrelatedRandom { g } if g * d > 0.0 => Some((24.0 * m * m * s.powi(4) / (g * d * d)).cbrt()),
            _ => None,
        },
        _ => None,
    }
}

/// Fit `-ln a = c t^n` over samples with `a >= 1/e`.
pub fn short_time_fit(times: &[f64], a: &[f64], n: f64) -> Option<PowerLawFit> {
    let threshold = (-1.0f64).exp();
    let (ts, vs): (Vec<f64>, Vec<f64>) = times.iter().zip(a).filter(|(_, &v)| v >= threshold).map(|(&t, &v)| (t, v)).unzip();
    PowerLawFit::with_exponent(&ts, &vs, n)
}

#[allow(clippy::too_many_arguments)]
fn decohere(
    ph: &Physics,
    name: &str,
    regime: Regime,
    cat: &CatSpec,
    times: &[f64],
    tolerance: f64,
    fit_exponent: Option<f64>,
    points: usize,
    out: &Path,
    rec: &mut RunRecord,
) -> Result<Option<String>> {
    let setup = DecoherenceSetup {
        regime,
        bath: ph.bath,
        osc: ph.osc,
        th: ph.th,
        cat: *cat,
        drive: ph.drive.clone(),
        moments: ph.moments,
    };
    let closed = setup.closed_form(times)?;
    let simulated = if regime == Regime::Entangled {
        None
    } else {
        let xs = setup.default_coordinates(times, points)?;
        Some(setup.simulate(times, &xs)?)
    };
    let mut table = Table::new(&["t", "a_simulated", "a_closed_form", "in_regime", "regime", "d", "sigma", "kt", "gamma"]);
    let regime_name = regime.to_string();
    for (k, t) in times.iter().enumerate() {
        table.push(&[
            Cell::Num(*t),
            Cell::Num(simulated.as_ref().map_or(f64::NAN, |s| s.a[k])),
            Cell::Num(closed[k].a),
            Cell::Int(closed[k].in_regime as i64),
            Cell::Text(&regime_name),
            Cell::Num(cat.d),
            Cell::Num(cat.sigma),
            Cell::Num(ph.th.kt),
            Cell::Num(ph.bath.gamma),
        ]);
    }
    let file = format!("{name}.csv");
    table.write(&out.join(&file))?;
    rec.files.push(file.clone());

    let a: Vec<f64> = match &simulated {
        Some(s) => s.a.clone(),
        None => closed.iter().map(|c| c.a).collect(),
    };
    let series = crate::decoherence::AttenuationSeries::new(times.to_vec(), a.clone(), regime)?;
    let violations = series.invariant_violations(1e-3);
    rec.checks.push(Check::new(
        "attenuation-invariants",
        violations.is_empty(),
        if violations.is_empty() { "a(0) = 1 and a <= 1 within 1e-3".to_string() } else { violations.join("; ") },
    ));
    if let Some(s) = &simulated {
        let window: Vec<(f64, f64)> = times
            .iter()
            .enumerate()
            .filter(|(k, t)| **t > 0.0 && closed[*k].in_regime)
            .map(|(k, _)| (s.a[k], closed[k].a))
            .collect();
        if window.is_empty() {
            rec.checks.push(Check::skip("closed-form-agreement", "no samples inside the validity window"));
        } else {
            let worst = window.iter().fold(0.0f64, |m, (x, c)| m.max((x / c - 1.0).abs()));
            rec.checks.push(Check::new(
                "closed-form-agreement",
                worst <= tolerance,
                format!("max |a_sim/a_closed - 1| = {worst:.3e} over {} samples (tolerance {tolerance})", window.len()),
            ));
        }
    } else if ph.th.kt >= 20.0 * ph.osc.hbar * ph.bath.gamma {
        let mut worst: f64 = 0.0;
        let mut count = 0;
        for (k, &t) in times.iter().enumerate() {
            if t > 0.0 && ph.bath.gamma * t <= 0.1 {
                let r = closed_form_thermal_initial(&ph.bath, &ph.osc, &ph.th, cat, t)?;
                worst = worst.max((closed[k].a / r.a - 1.0).abs());
                count += 1;
            }
        }
        rec.checks.push(if count == 0 {
            Check::skip("high-temperature-reduction", "no samples with gamma t <= 0.1")
        } else {
            Check::new(
                "high-temperature-reduction",
                worst <= tolerance,
                format!("max |a/a_thermal - 1| = {worst:.3e} over {count} samples (tolerance {tolerance})"),
            )
        });
    }
    let n = fit_exponent.unwrap_or(regime.short_time_exponent());
    let fit = short_time_fit(times, &a, n);
    let mut summary = String::new();
    if let Some(t) = series.e_fold_time {
        let _ = write!(summary, "1/e time {t:.6e}; ");
    }
    if let Some(f) = series.short_time_fit {
        let _ = write!(summary, "free-fit exponent {:.4}; ", f.exponent);
    }
    match (fit, nominal_tau(&setup, n)) {
        (Some(f), Some(nominal)) => {
            let rel = (f.tau() / nominal - 1.0).abs();
            let _ = write!(summary, "tau_d {:.6e} (t^{n} law, expected {nominal:.6e})", f.tau());
            rec.checks.push(Check::new(
                "decoherence-time",
                rel <= tolerance,
                format!("fitted tau_d {:.6e} vs {nominal:.6e} (rel {rel:.3e}, tolerance {tolerance})", f.tau()),
            ));
        }
        (Some(f), None) => {
            let _ = write!(summary, "tau_d {:.6e} (t^{n} law)", f.tau());
        }
        (None, _) => {
            summary.push_str("no samples for a short-time fit");
        }
    }
    rec.summary = summary;
    Ok(Some(format!(
        "set title '{name}: attenuation ({regime_name})'\nplot '{file}' using 1:2 with points title 'simulated', '' using 1:3 with lines title 'closed form'\npause -1\n"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_error_class() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::InvalidParameter("x".into())), 2);
        assert_eq!(exit_code(&Error::NormalizationDrift { t: 1.0, drift: 1.0, limit: 0.1 }), 3);
        assert_eq!(exit_code(&Error::io("x", std::io::Error::other("boom"))), 4);
    }

    #[test]
    fn nominal_thermal_tau() {
        let setup = DecoherenceSetup {
            regime: Regime::ThermalInitial,
            bath: crate::BathSpec::ohmic(0.01, 1.0),
            osc: crate::OscillatorSpec::free_particle(1.0, 1.0),
            th: crate::ThermalSpec::new(4.0),
            cat: CatSpec::new(6.0, 1.0),
            drive: DriveSpec::None,
            moments: Default::default(),
        };
        let tau = nominal_tau(&setup, 2.0).unwrap();
        assert!((tau - 8f64.sqrt() / 12.0).abs() < 1e-15);
        assert!(nominal_tau(&setup, 3.0).is_none());
    }
}
