//! External forces and the mean-square displacement they produce.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::{BathKind, BathSpec, OscillatorSpec};
use crate::error::{Error, Result};
use crate::quadrature::GaussRule;
use crate::response::green::GreenTable;

/// A c-number force `f(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Force {
    Constant { value: f64 },
    Sinusoid { amplitude: f64, omega: f64, #[serde(default)] phase: f64 },
    /// Samples at `t = k*dt`, linearly interpolated and zero afterwards.
    Sampled { dt: f64, values: Vec<f64> },
}

impl Force {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Force::Constant { value } => *value,
            Force::Sinusoid { amplitude, omega, phase } => amplitude * (omega * t + phase).sin(),
            Force::Sampled { dt, values } => sample_linear(*dt, values, t),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Force::Constant { value } => value.is_finite(),
            Force::Sinusoid { amplitude, omega, phase } => {
                amplitude.is_finite() && omega.is_finite() && phase.is_finite()
            }
            Force::Sampled { dt, values } => *dt > 0.0 && values.iter().all(|v| v.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("malformed force {self:?}")))
        }
    }
}

fn sample_linear(dt: f64, values: &[f64], t: f64) -> f64 {
    if values.is_empty() || t < 0.0 {
        return 0.0;
    }
    let x = t / dt;
    let k = x.floor() as usize;
    if k + 1 >= values.len() {
        return if k + 1 == values.len() && x == k as f64 { values[k] } else { 0.0 };
    }
    let f = x - k as f64;
    values[k] * (1.0 - f) + values[k + 1] * f
}

/// Driving applied to the oscillator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DriveSpec {
    #[default]
    None,
    Deterministic { force: Force },
    /// Classical random force with `<f(t) f(t')> = g delta(t - t')`.
    DeltaCorrelatedRandom { g: f64 },
    /// Classical random force with stationary autocorrelation sampled at
    /// lags `k*dt` (linear interpolation, zero beyond the last sample).
    CorrelatedRandom { dt: f64, samples: Vec<f64> },
}

impl DriveSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DriveSpec::None => Ok(()),
            DriveSpec::Deterministic { force } => force.validate(),
            DriveSpec::DeltaCorrelatedRandom { g } => {
                if *g >= 0.0 && g.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("drive strength g must be >= 0, got {g}")))
                }
            }
            DriveSpec::CorrelatedRandom { dt, samples } => {
                if *dt > 0.0 && samples.iter().all(|v| v.is_finite()) {
                    Ok(())
                } else {
                    Err(Error::invalid("correlated drive needs dt > 0 and finite samples"))
                }
            }
        }
    }

    /// Deterministic force at time `t` (zero for random drives).
    pub fn mean_force(&self, t: f64) -> f64 {
        match self {
            DriveSpec::Deterministic { force } => force.eval(t),
            _ => 0.0,
        }
    }
}

/// Mean-square displacement produced by the drive alone,
/// `s_d(t) = int_0^t int_0^t G(t-t') G(t-t'') <f(t') f(t'')> dt' dt''`.
///
/// For a deterministic force this is the square of the driven mean
/// displacement.
pub fn driven_msd(drive: &DriveSpec, green: &GreenTable, t: f64) -> Result<f64> {
    drive.validate()?;
    let end = green.grid.t_final();
    if !(t >= 0.0) || t > end * (1.0 + 1e-12) {
        return Err(Error::CoefficientRange { t, end });
    }
    let rule = GaussRule::new(8);
    let h = green.grid.dt;
    let g_at = |u: f64| green_at(green, u);
    // intervals [0, t] split at table nodes
    let n_full = ((t / h).floor() as usize).min(green.grid.steps);
    let mut edges: Vec<f64> = (0..=n_full).map(|k| k as f64 * h).collect();
    if t - edges[n_full] > 1e-14 * h.max(t) {
        edges.push(t);
    }
    Ok(match drive {
        DriveSpec::None => 0.0,
        DriveSpec::DeltaCorrelatedRandom { g } => {
            g * edges
                .windows(2)
                .map(|w| rule.integrate(w[0], w[1], |u| g_at(u).powi(2)))
                .sum::<f64>()
        }
        DriveSpec::Deterministic { .. } => driven_mean(drive, green, t)?.powi(2),
        DriveSpec::CorrelatedRandom { dt, samples } => {
            let corr = |lag: f64| sample_linear(*dt, samples, lag.abs());
            // the inner integrand has kinks where u - v hits a sample lag
            let mut acc = 0.0;
            for a in edges.windows(2) {
                acc += rule.integrate(a[0], a[1], |u| {
                    let mut bps = vec![0.0, t];
                    for k in 0..samples.len() {
                        for v in [u - k as f64 * dt, u + k as f64 * dt] {
                            if v > 0.0 && v < t {
                                bps.push(v);
                            }
                        }
                    }
                    bps.sort_by(f64::total_cmp);
                    bps.dedup();
                    let inner: f64 = bps
                        .windows(2)
                        .map(|b| rule.integrate(b[0], b[1], |v| g_at(v) * corr(u - v)))
                        .sum();
                    g_at(u) * inner
                });
            }
            acc
        }
    })
}

/// Mean displacement `int_0^t G(t - t') f(t') dt'` produced by a
/// deterministic force (zero for the other drives).
pub fn driven_mean(drive: &DriveSpec, green: &GreenTable, t: f64) -> Result<f64> {
    drive.validate()?;
    let end = green.grid.t_final();
    if !(t >= 0.0) || t > end * (1.0 + 1e-12) {
        return Err(Error::CoefficientRange { t, end });
    }
    let DriveSpec::Deterministic { force } = drive else {
        return Ok(0.0);
    };
    let rule = GaussRule::new(8);
    let h = green.grid.dt;
    let n_full = ((t / h).floor() as usize).min(green.grid.steps);
    let mut edges: Vec<f64> = (0..=n_full).map(|k| k as f64 * h).collect();
    if t - edges[n_full] > 1e-14 * h.max(t) {
        edges.push(t);
    }
    Ok(edges
        .windows(2)
        .map(|w| rule.integrate(w[0], w[1], |u| green_at(green, u) * force.eval(t - u)))
        .sum())
}

fn green_at(green: &GreenTable, u: f64) -> f64 {
    let h = green.grid.dt;
    let k = ((u / h).floor() as usize).min(green.grid.steps.saturating_sub(1));
    if green.grid.steps == 0 {
        return green.g[0];
    }
    green.g_within(k, u - k as f64 * h)
}

/// Closed form of `g int_0^t G(u)^2 du` for the Ohmic oscillator, an
/// independent path for the delta-correlated drive.
pub fn delta_driven_msd_ohmic(g: f64, bath: &BathSpec, osc: &OscillatorSpec, t: f64) -> Result<f64> {
    if bath.kind != BathKind::Ohmic {
        return Err(Error::invalid("closed-form driven displacement needs an Ohmic bath"));
    }
    let m = osc.mass;
    let gamma = bath.gamma;
    let w02 = osc.spring_constant / m;
    let disc = Complex64::new(w02 - 0.25 * gamma * gamma, 0.0);
    let w1 = disc.sqrt();
    // G = e^{-gamma u/2} sin(w1 u)/(m w1), so
    // G^2 = e^{-gamma u} (1 - Re e^{2 i w1 u}) / (2 m^2 w1^2) for real w1, and
    // the same identity holds with complex w1 using cos(2 w1 u) = (e^{2iw1u} + e^{-2iw1u})/2.
    let expint = |c: Complex64| -> Complex64 {
        let z = c * t;
        if z.norm() < 1e-6 {
            Complex64::new(t, 0.0) * (1.0 + z / 2.0 + z * z / 6.0)
        } else {
            (z.exp() - 1.0) / c
        }
    };
    if (w1 * t).norm() < 1e-4 {
        // critically damped: G = u e^{-gamma u/2}/m, int u^2 e^{-gamma u}
        let v = if gamma * t < 1e-6 {
            t.powi(3) / 3.0
        } else {
            let e = (-gamma * t).exp();
            (2.0 - e * (gamma * gamma * t * t + 2.0 * gamma * t + 2.0)) / gamma.powi(3)
        };
        return Ok(g * v / (m * m));
    }
    let base = expint(Complex64::new(-gamma, 0.0));
    let plus = expint(Complex64::new(-gamma, 0.0) + 2.0 * Complex64::i() * w1);
    let minus = expint(Complex64::new(-gamma, 0.0) - 2.0 * Complex64::i() * w1);
    let val = (base - 0.5 * (plus + minus)) / (2.0 * m * m * w1 * w1);
    Ok(g * val.re)
}
