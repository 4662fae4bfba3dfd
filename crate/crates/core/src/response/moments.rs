//! Second moments of the fluctuating part of the initial-value solution,
//! `X(t) = int_0^t G(t - t') F(t') dt'`, and the covariance dyadic `A(t)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::{omega_coth, BathKind, BathSpec, OscillatorSpec, ThermalSpec};
use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::quadrature::{hermite, GaussRule};
use crate::response::green::{green_initial_value, GreenTable, TimeGrid};

/// Controls for [`fluctuation_moments`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentOptions {
    /// Accept `kT < hbar*omega0`; the quantum noise spectrum is then used
    /// with a hard frequency cutoff and the result depends on it.
    #[serde(default)]
    pub low_temperature_override: bool,
    /// Cutoff for the quantum noise spectrum, as a multiple of the largest
    /// characteristic frequency.
    #[serde(default = "default_cutoff_factor")]
    pub cutoff_factor: f64,
}

fn default_cutoff_factor() -> f64 {
    50.0
}

impl Default for MomentOptions {
    fn default() -> Self {
        Self {
            low_temperature_override: false,
            cutoff_factor: default_cutoff_factor(),
        }
    }
}

/// `<X^2>`, `<V^2>` and the symmetrized `<XV>` on a time grid, with their
/// exact time derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationMoments {
    pub grid: TimeGrid,
    pub mass: f64,
    pub xx: Vec<f64>,
    pub vv: Vec<f64>,
    pub xv: Vec<f64>,
    pub xx_dot: Vec<f64>,
    pub vv_dot: Vec<f64>,
    pub xv_dot: Vec<f64>,
}

impl FluctuationMoments {
    pub fn times(&self) -> Vec<f64> {
        self.grid.times()
    }

    /// Covariance of the fluctuating part in `(q, p)` ordering,
    /// `[[<X^2>, m<XV>], [m<XV>, m^2 <V^2>]]`.
    pub fn covariance(&self, k: usize) -> Mat2 {
        let m = self.mass;
        [[self.xx[k], m * self.xv[k]], [m * self.xv[k], m * m * self.vv[k]]]
    }

    /// The dyadic `A(t)` at every sample (`(q, p)` ordering).
    pub fn a_matrix(&self) -> Vec<Mat2> {
        (0..self.grid.len()).map(|k| self.covariance(k)).collect()
    }

    /// Cubic Hermite interpolation of the covariance and its derivative.
    pub fn eval(&self, t: f64) -> Result<(Mat2, Mat2)> {
        let end = self.grid.t_final();
        if !(t >= 0.0) || t > end * (1.0 + 1e-12) {
            return Err(Error::CoefficientRange { t, end });
        }
        if self.grid.steps == 0 {
            return Ok((self.covariance(0), self.covariance_dot(0)));
        }
        let h = self.grid.dt;
        let k = ((t / h).floor() as usize).min(self.grid.steps - 1);
        let s = t - k as f64 * h;
        let herm = |y: &[f64], d: &[f64]| hermite(y[k], d[k], y[k + 1], d[k + 1], h, s);
        let lin = |y: &[f64]| y[k] + (y[k + 1] - y[k]) * s / h;
        let m = self.mass;
        let (xx, xv, vv) = (herm(&self.xx, &self.xx_dot), herm(&self.xv, &self.xv_dot), herm(&self.vv, &self.vv_dot));
        let (dxx, dxv, dvv) = (lin(&self.xx_dot), lin(&self.xv_dot), lin(&self.vv_dot));
        Ok((
            [[xx, m * xv], [m * xv, m * m * vv]],
            [[dxx, m * dxv], [m * dxv, m * m * dvv]],
        ))
    }

    pub fn covariance_dot(&self, k: usize) -> Mat2 {
        let m = self.mass;
        [
            [self.xx_dot[k], m * self.xv_dot[k]],
            [m * self.xv_dot[k], m * m * self.vv_dot[k]],
        ]
    }
}

/// Internal step for the moment quadratures.
fn internal_step(bath: &BathSpec, osc: &OscillatorSpec) -> f64 {
    let mut w = osc.omega0().max(bath.gamma);
    if bath.kind == BathKind::SingleRelaxationTime {
        w = w.max(4.0 / bath.tau);
    }
    if w == 0.0 {
        w = 1.0;
    }
    0.02 / w
}

fn spectral_scale(bath: &BathSpec, osc: &OscillatorSpec) -> f64 {
    let mut w = osc.omega0().max(bath.gamma);
    if bath.kind == BathKind::SingleRelaxationTime {
        w = w.max(1.0 / bath.tau);
    }
    if w == 0.0 {
        1.0
    } else {
        w
    }
}

/// Fluctuation moments of the initially uncoupled oscillator.
///
/// Above `kT = hbar*omega0` the force correlation is the classical kernel
/// `kT mu(|t|)`, which is finite and time-local for the Ohmic bath. Below it
/// the zero-point part of the noise makes `<V^2>` diverge logarithmically
/// with the spectral cutoff, so the call is refused unless
/// [`MomentOptions::low_temperature_override`] is set, in which case the
/// full quantum spectrum is used up to the configured cutoff.
pub fn fluctuation_moments(
    bath: &BathSpec,
    osc: &OscillatorSpec,
    th: &ThermalSpec,
    grid: TimeGrid,
    opts: &MomentOptions,
) -> Result<FluctuationMoments> {
    th.validate()?;
    let hbar_w0 = osc.hbar * osc.omega0();
    let quantum = th.kt < hbar_w0;
    if quantum {
        if !opts.low_temperature_override {
            return Err(Error::LowTemperature {
                kt: th.kt,
                hbar_omega: hbar_w0,
            });
        }
        log::warn!(
            "kT = {} < hbar*omega0 = {}: fluctuation moments use the quantum noise spectrum \
             cut off at {} x the largest bath/oscillator frequency; the zero-point part diverges \
             logarithmically with this cutoff for an initially uncoupled state",
            th.kt,
            hbar_w0,
            opts.cutoff_factor
        );
    }
    let mut h_int = internal_step(bath, osc);
    if quantum {
        h_int = h_int.min(0.25 / (opts.cutoff_factor * spectral_scale(bath, osc)));
    }
    let sub = (grid.dt / h_int).ceil().max(1.0) as usize;
    let fine = TimeGrid::new(grid.dt / sub as f64, grid.steps * sub)?;
    let green = green_initial_value(bath, osc, fine)?;
    let full = if quantum {
        quantum_moments(bath, osc, th, &green, opts.cutoff_factor)?
    } else {
        classical_moments(bath, osc, th, &green)
    };
    let pick = |v: &[f64]| -> Vec<f64> { (0..grid.len()).map(|k| v[k * sub]).collect() };
    Ok(FluctuationMoments {
        grid,
        mass: osc.mass,
        xx: pick(&full.xx),
        vv: pick(&full.vv),
        xv: pick(&full.xv),
        xx_dot: pick(&full.xx_dot),
        vv_dot: pick(&full.vv_dot),
        xv_dot: pick(&full.xv_dot),
    })
}

/// Moments for the classical kernel `kT mu(|t|)` on the Green table's own grid.
pub(crate) fn classical_moments(
    bath: &BathSpec,
    osc: &OscillatorSpec,
    th: &ThermalSpec,
    green: &GreenTable,
) -> FluctuationMoments {
    let n = green.grid.len();
    let h = green.grid.dt;
    let m = osc.mass;
    let kt = th.kt;
    let rule = GaussRule::new(8);
    let g_at = |k: usize, s: f64| green.g_within(k, s);
    let gd_at = |k: usize, s: f64| green.gdot_within(k, s);
    let mut out = FluctuationMoments {
        grid: green.grid,
        mass: m,
        xx: vec![0.0; n],
        vv: vec![0.0; n],
        xv: vec![0.0; n],
        xx_dot: vec![0.0; n],
        vv_dot: vec![0.0; n],
        xv_dot: vec![0.0; n],
    };
    match bath.kind {
        BathKind::Ohmic => {
            let c = 2.0 * m * bath.gamma * kt;
            for k in 0..n {
                let (g, gd) = (green.g[k], green.gdot[k]);
                if k > 0 {
                    let j = k - 1;
                    out.xx[k] = out.xx[j] + c * rule.integrate(0.0, h, |s| g_at(j, s).powi(2));
                    out.vv[k] = out.vv[j] + c * rule.integrate(0.0, h, |s| gd_at(j, s).powi(2));
                }
                out.xv[k] = 0.5 * c * g * g;
                out.xx_dot[k] = c * g * g;
                out.xv_dot[k] = c * g * gd;
                out.vv_dot[k] = c * gd * gd;
            }
        }
        BathKind::SingleRelaxationTime => {
            let tau = bath.tau;
            let kappa0 = kt * bath.friction_constant() / tau;
            // I_f(u) = int_0^u f(v) kappa(u - v) dv for f = G and G'.
            let (mut ig, mut igd) = (0.0, 0.0);
            for k in 0..n {
                if k > 0 {
                    let j = k - 1;
                    let partial = |s: f64, f: &dyn Fn(f64) -> f64| -> f64 {
                        rule.integrate(0.0, s, |v| f(v) * kappa0 * (-(s - v) / tau).exp())
                    };
                    let fg = |v: f64| g_at(j, v);
                    let fgd = |v: f64| gd_at(j, v);
                    let ig_at = |s: f64| (-s / tau).exp() * ig + partial(s, &fg);
                    let igd_at = |s: f64| (-s / tau).exp() * igd + partial(s, &fgd);
                    out.xx[k] = out.xx[j] + 2.0 * rule.integrate(0.0, h, |s| g_at(j, s) * ig_at(s));
                    out.vv[k] = out.vv[j] + 2.0 * rule.integrate(0.0, h, |s| gd_at(j, s) * igd_at(s));
                    let (a, b) = (ig_at(h), igd_at(h));
                    ig = a;
                    igd = b;
                }
                let (g, gd) = (green.g[k], green.gdot[k]);
                let ig_dot = kappa0 * g - ig / tau;
                out.xv[k] = g * ig;
                out.xx_dot[k] = 2.0 * g * ig;
                out.vv_dot[k] = 2.0 * gd * igd;
                out.xv_dot[k] = gd * ig + g * ig_dot;
            }
        }
    }
    out
}

/// Moments for the quantum noise spectrum `Re mu(w) hbar w coth(hbar w/2kT)`
/// truncated at a hard cutoff.
fn quantum_moments(
    bath: &BathSpec,
    osc: &OscillatorSpec,
    th: &ThermalSpec,
    green: &GreenTable,
    cutoff_factor: f64,
) -> Result<FluctuationMoments> {
    let w_scale = spectral_scale(bath, osc);
    let w_c = cutoff_factor * w_scale;
    let n = green.grid.len();
    let h = green.grid.dt;
    if w_c * h > 0.5 {
        return Err(Error::Quadrature(format!(
            "time step {h} too coarse for noise cutoff {w_c}"
        )));
    }
    let t_end = green.grid.t_final().max(h);
    let width = (0.5 / t_end).min(0.25 * w_scale);
    let panels = (w_c / width).ceil() as usize;
    let wrule = GaussRule::new(8);
    let mut nodes = Vec::with_capacity(panels * 8);
    for p in 0..panels {
        let a = w_c * p as f64 / panels as f64;
        let b = w_c * (p + 1) as f64 / panels as f64;
        for (w, wt) in wrule.points(a, b) {
            let spec = bath.memory_real(w) * osc.hbar * omega_coth(w, osc.hbar, th.kt) / std::f64::consts::PI;
            nodes.push((w, wt * spec));
        }
    }
    let trule = GaussRule::new(4);
    let g_at = |k: usize, s: f64| green.g_within(k, s);
    let gd_at = |k: usize, s: f64| green.gdot_within(k, s);
    const CHUNK: usize = 256;
    let partials: Vec<[Vec<f64>; 6]> = nodes
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc: [Vec<f64>; 6] = Default::default();
            for v in acc.iter_mut() {
                *v = vec![0.0; n];
            }
            for &(w, weight) in chunk {
                let (mut fg, mut fgd) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
                for k in 0..n {
                    if k > 0 {
                        let j = k - 1;
                        let t0 = j as f64 * h;
                        for (s, ws) in trule.points(0.0, h) {
                            let e = Complex64::from_polar(ws, w * (t0 + s));
                            fg += e * g_at(j, s);
                            fgd += e * gd_at(j, s);
                        }
                    }
                    let e = Complex64::from_polar(1.0, w * k as f64 * h);
                    let (g, gd) = (green.g[k] * e, green.gdot[k] * e);
                    acc[0][k] += weight * fg.norm_sqr();
                    acc[1][k] += weight * fgd.norm_sqr();
                    acc[2][k] += weight * (fg * fgd.conj()).re;
                    acc[3][k] += weight * 2.0 * (fg.conj() * g).re;
                    acc[4][k] += weight * 2.0 * (fgd.conj() * gd).re;
                    acc[5][k] += weight * ((g * fgd.conj()).re + (fg * gd.conj()).re);
                }
            }
            acc
        })
        .collect();
    let mut tot: [Vec<f64>; 6] = Default::default();
    for v in tot.iter_mut() {
        *v = vec![0.0; n];
    }
    for part in &partials {
        for (t, p) in tot.iter_mut().zip(part) {
            for (a, b) in t.iter_mut().zip(p) {
                *a += b;
            }
        }
    }
    let [xx, vv, xv, xx_dot, vv_dot, xv_dot] = tot;
    Ok(FluctuationMoments {
        grid: green.grid,
        mass: osc.mass,
        xx,
        vv,
        xv,
        xx_dot,
        vv_dot,
        xv_dot,
    })
}
