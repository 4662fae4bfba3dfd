//! Green functions of the damped oscillator: the stationary (Fourier) form
//! and the initial-value solution of the homogeneous Volterra equation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::{BathKind, BathSpec, OscillatorSpec};
use crate::error::{Error, Result};
use crate::quadrature::{hermite, hermite5};

/// Uniform time grid `t_k = k*dt`, `k = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, steps: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!("time step must be > 0, got {dt}")));
        }
        Ok(Self { dt, steps })
    }

    /// Grid of step at most `dt_max` reaching exactly `t_final`.
    pub fn covering(t_final: f64, dt_max: f64) -> Result<Self> {
        if !(t_final >= 0.0 && t_final.is_finite()) {
            return Err(Error::invalid(format!("final time must be >= 0, got {t_final}")));
        }
        if t_final == 0.0 {
            return Self::new(dt_max, 0);
        }
        let steps = (t_final / dt_max).ceil().max(1.0) as usize;
        Self::new(t_final / steps as f64, steps)
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t_final(&self) -> f64 {
        self.dt * self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.dt * k as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }
}

/// `G`, `G'`, `G''` and `G'''` at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenSample {
    pub g: f64,
    pub gdot: f64,
    pub gddot: f64,
    pub g3: f64,
}

/// Sampled Green function with its first three derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenTable {
    pub grid: TimeGrid,
    pub g: Vec<f64>,
    pub gdot: Vec<f64>,
    pub gddot: Vec<f64>,
    pub g3: Vec<f64>,
}

impl GreenTable {
    pub fn times(&self) -> Vec<f64> {
        self.grid.times()
    }

    pub fn sample(&self, k: usize) -> GreenSample {
        GreenSample {
            g: self.g[k],
            gdot: self.gdot[k],
            gddot: self.gddot[k],
            g3: self.g3[k],
        }
    }

    /// Piecewise cubic Hermite evaluation between samples.
    /// `G` at offset `s` inside interval `k`.
    pub(crate) fn g_within(&self, k: usize, s: f64) -> f64 {
        let (g, d, dd) = (&self.g, &self.gdot, &self.gddot);
        hermite5(g[k], d[k], dd[k], g[k + 1], d[k + 1], dd[k + 1], self.grid.dt, s)
    }

    /// `G'` at offset `s` inside interval `k`.
    pub(crate) fn gdot_within(&self, k: usize, s: f64) -> f64 {
        let (g, d, dd) = (&self.gdot, &self.gddot, &self.g3);
        hermite5(g[k], d[k], dd[k], g[k + 1], d[k + 1], dd[k + 1], self.grid.dt, s)
    }

    pub fn eval(&self, t: f64) -> Result<GreenSample> {
        let end = self.grid.t_final();
        if !(t >= 0.0) || t > end * (1.0 + 1e-12) + 1e-300 {
            return Err(Error::CoefficientRange { t, end });
        }
        let h = self.grid.dt;
        let k = ((t / h).floor() as usize).min(self.grid.steps.saturating_sub(1));
        if self.grid.steps == 0 {
            return Ok(self.sample(0));
        }
        let s = t - k as f64 * h;
        let g = self.g_within(k, s);
        let gdot = self.gdot_within(k, s);
        let gddot = hermite(self.gddot[k], self.g3[k], self.gddot[k + 1], self.g3[k + 1], h, s);
        let g3 = self.g3[k] + (self.g3[k + 1] - self.g3[k]) * s / h;
        Ok(GreenSample { g, gdot, gddot, g3 })
    }
}

/// Third derivative from the equation of motion, given `G`, `G'`, `G''`.
pub(crate) fn third_derivative(bath: &BathSpec, osc: &OscillatorSpec, g: f64, gd: f64, gdd: f64) -> f64 {
    let m = osc.mass;
    let k = osc.spring_constant;
    match bath.kind {
        BathKind::Ohmic => -(bath.gamma * gdd + k * gd / m),
        BathKind::SingleRelaxationTime => {
            let tau = bath.tau;
            (-(m * bath.gamma / tau) * gd - (m * gdd + k * g) / tau - k * gd) / m
        }
    }
}

fn validate_inputs(bath: &BathSpec, osc: &OscillatorSpec) -> Result<()> {
    bath.validate()?;
    osc.validate()?;
    if (bath.mass - osc.mass).abs() > 1e-12 * osc.mass {
        return Err(Error::invalid(format!(
            "bath mass {} differs from oscillator mass {}",
            bath.mass, osc.mass
        )));
    }
    Ok(())
}

/// Closed form for delta memory, `m G'' + m gamma G' + K G = 0`.
fn ohmic_closed_form(gamma: f64, osc: &OscillatorSpec, t: f64) -> (f64, f64, f64) {
    let m = osc.mass;
    let w02 = osc.spring_constant / m;
    let disc = w02 - 0.25 * gamma * gamma;
    // S = sin(w1 t)/w1 and C = cos(w1 t), continued through disc <= 0.
    let x = disc * t * t;
    let (s, c) = if x.abs() < 1e-8 {
        (t * (1.0 - x / 6.0 + x * x / 120.0), 1.0 - x / 2.0 + x * x / 24.0)
    } else if disc > 0.0 {
        let w1 = disc.sqrt();
        ((w1 * t).sin() / w1, (w1 * t).cos())
    } else {
        let k = (-disc).sqrt();
        // e^{-gamma t/2} sinh(k t) can overflow separately; combine exponents.
        let e = (-0.5 * gamma * t).exp();
        if e == 0.0 {
            let a = ((k - 0.5 * gamma) * t).exp();
            let g = a * 0.5 / k / m;
            let gd = a * 0.5 * (1.0 - 0.5 * gamma / k) / m;
            let gdd = -gamma * gd - w02 * g;
            return (g, gd, gdd);
        }
        ((k * t).sinh() / k, (k * t).cosh())
    };
    let e = (-0.5 * gamma * t).exp();
    let g = e * s / m;
    let gd = e * (c - 0.5 * gamma * s) / m;
    let gdd = -gamma * gd - w02 * g;
    (g, gd, gdd)
}

/// Roots of a complex polynomial `sum_k c[k] z^k` by Durand-Kerner with Newton polish.
pub(crate) fn poly_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = coeffs.len() - 1;
    let lead = coeffs[n];
    let a: Vec<Complex64> = coeffs.iter().map(|c| c / lead).collect();
    let eval = |z: Complex64| a.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c);
    let radius = 1.0 + a[..n].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(0.5 * radius, 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4))
        .collect();
    for _ in 0..500 {
        let mut delta = 0.0f64;
        for i in 0..n {
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    den *= z[i] - z[j];
                }
            }
            let step = eval(z[i]) / den;
            z[i] -= step;
            delta = delta.max(step.norm() / (1.0 + z[i].norm()));
        }
        if delta < 1e-15 {
            break;
        }
    }
    let deriv: Vec<Complex64> = (1..=n).map(|k| a[k] * k as f64).collect();
    let eval_d = |z: Complex64| deriv.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c);
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let d = eval_d(*zi);
            if d.norm() == 0.0 {
                break;
            }
            *zi -= eval(*zi) / d;
        }
        if !(zi.re.is_finite() && zi.im.is_finite()) {
            return Err(Error::Quadrature("pole search diverged".into()));
        }
    }
    Ok(z)
}

/// Poles of `alpha(z)` for the single-relaxation-time bath and the residue
/// weights `(1 - i z tau)/N'(z)`.
fn srt_poles(bath: &BathSpec, osc: &OscillatorSpec) -> Result<Vec<(Complex64, Complex64)>> {
    let m = osc.mass;
    let k = osc.spring_constant;
    let tau = bath.tau;
    let i = Complex64::i();
    // N(z) = (K - m z^2)(1 - i z tau) - i z m gamma
    let c = [
        Complex64::new(k, 0.0),
        -i * (tau * k + m * bath.gamma),
        Complex64::new(-m, 0.0),
        i * m * tau,
    ];
    let roots = poly_roots(&c)?;
    let scale = roots.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let mut out = Vec::with_capacity(3);
    for z in roots {
        if z.im > 1e-10 * scale {
            let res = ((Complex64::new(1.0, 0.0) - i * z * tau) / (c[1] + 2.0 * c[2] * z + 3.0 * c[3] * z * z)).norm();
            return Err(Error::Causality {
                residual: res,
                tolerance: 1e-10,
            });
        }
        let z = Complex64::new(z.re, z.im.min(0.0));
        let dn = c[1] + 2.0 * c[2] * z + 3.0 * c[3] * z * z;
        out.push((z, (Complex64::new(1.0, 0.0) - i * z * tau) / dn));
    }
    Ok(out)
}

/// Stationary Green function `G(t) = (1/2 pi) int alpha(w + i0) e^{-iwt} dw`.
///
/// Ohmic baths use the closed form; the single-relaxation-time bath closes
/// the contour in the lower half-plane and sums residues at the three poles
/// of `alpha`, after verifying none lies in the upper half-plane.
pub fn green_stationary(bath: &BathSpec, osc: &OscillatorSpec, grid: TimeGrid) -> Result<GreenTable> {
    validate_inputs(bath, osc)?;
    if bath.gamma == 0.0 && osc.spring_constant == 0.0 {
        return Err(Error::invalid(
            "stationary Green function needs gamma > 0 or K > 0",
        ));
    }
    let n = grid.len();
    let mut table = GreenTable {
        grid,
        g: vec![0.0; n],
        gdot: vec![0.0; n],
        gddot: vec![0.0; n],
        g3: vec![0.0; n],
    };
    if bath.kind == BathKind::Ohmic || bath.gamma == 0.0 {
        for k in 0..n {
            let (g, gd, gdd) = ohmic_closed_form(bath.gamma, osc, grid.time(k));
            table.g[k] = g;
            table.gdot[k] = gd;
            table.gddot[k] = gdd;
        }
    } else {
        let poles = srt_poles(bath, osc)?;
        let i = Complex64::i();
        for k in 0..n {
            let t = grid.time(k);
            let mut acc = [Complex64::new(0.0, 0.0); 3];
            for (z, w) in &poles {
                let e = (-i * z * t).exp() * w;
                acc[0] += e;
                acc[1] += -i * z * e;
                acc[2] += -z * z * e;
            }
            // G = -i sum Res
            table.g[k] = (-i * acc[0]).re;
            table.gdot[k] = (-i * acc[1]).re;
            table.gddot[k] = (-i * acc[2]).re;
        }
        table.g[0] = 0.0;
    }
    for k in 0..n {
        table.g3[k] = third_derivative(bath, osc, table.g[k], table.gdot[k], table.gddot[k]);
    }
    Ok(table)
}

/// Maximum internal step count of the Volterra integrator at the fine level.
const VOLTERRA_MAX_STEPS: usize = 50_000_000;

/// Green function of the initial-value problem,
/// `m G'' + int_0^t mu(t-s) G'(s) ds + K G = 0`, `G(0) = 0`, `G'(0) = 1/m`,
/// integrated in the time domain.
///
/// The scheme is trapezoidal product integration, run at steps `h`, `h/2`
/// and `h/4` and combined by repeated Richardson extrapolation.
pub fn green_initial_value(bath: &BathSpec, osc: &OscillatorSpec, grid: TimeGrid) -> Result<GreenTable> {
    validate_inputs(bath, osc)?;
    let mut h_max = grid.dt;
    let w0 = osc.omega0();
    if w0 > 0.0 {
        h_max = h_max.min(0.02 / w0);
    }
    if bath.gamma > 0.0 {
        h_max = h_max.min(0.02 / bath.gamma);
    }
    if bath.kind == BathKind::SingleRelaxationTime {
        h_max = h_max.min(bath.tau / 20.0);
    }
    let sub = (grid.dt / h_max).ceil().max(1.0) as usize;
    let total = sub.checked_mul(grid.steps).and_then(|v| v.checked_mul(4));
    match total {
        Some(v) if v <= VOLTERRA_MAX_STEPS => {}
        _ => {
            return Err(Error::Volterra(format!(
                "required step count exceeds {VOLTERRA_MAX_STEPS} (output dt = {}, internal h <= {h_max:e})",
                grid.dt
            )))
        }
    }
    let l0 = volterra_trapezoid(bath, osc, grid, sub)?;
    let l1 = volterra_trapezoid(bath, osc, grid, 2 * sub)?;
    let l2 = volterra_trapezoid(bath, osc, grid, 4 * sub)?;
    let n = grid.len();
    // Two Romberg levels: the trapezoidal error expands in even powers of h.
    let romberg = |a: &[f64], b: &[f64], c: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|k| {
                let r1 = (4.0 * b[k] - a[k]) / 3.0;
                let r2 = (4.0 * c[k] - b[k]) / 3.0;
                (16.0 * r2 - r1) / 15.0
            })
            .collect()
    };
    let g = romberg(&l0.0, &l1.0, &l2.0);
    let gdot = romberg(&l0.1, &l1.1, &l2.1);
    let gddot = romberg(&l0.2, &l1.2, &l2.2);
    let g3 = (0..n)
        .map(|k| third_derivative(bath, osc, g[k], gdot[k], gddot[k]))
        .collect();
    if g.iter().chain(&gdot).chain(&gddot).any(|v| !v.is_finite()) {
        return Err(Error::Volterra("non-finite solution".into()));
    }
    Ok(GreenTable {
        grid,
        g,
        gdot,
        gddot,
        g3,
    })
}

/// One trapezoidal pass with `sub` internal steps per output step.
/// Returns (G, G', G'') at the output times.
#[allow(clippy::type_complexity)]
fn volterra_trapezoid(
    bath: &BathSpec,
    osc: &OscillatorSpec,
    grid: TimeGrid,
    sub: usize,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let m = osc.mass;
    let kk = osc.spring_constant;
    let h = grid.dt / sub as f64;
    let c = bath.local_friction();
    let mu0 = bath.memory_smooth(0.0);
    // The smooth memory is exponential, so the trapezoidal history sum
    // obeys a one-term recursion: hist_n = sum_{j=1}^{n-1} mu(t_n - t_j) V_j.
    let decay = match bath.kind {
        BathKind::SingleRelaxationTime => (-h / bath.tau).exp(),
        BathKind::Ohmic => 0.0,
    };
    let n_out = grid.len();
    let mut out = (vec![0.0; n_out], vec![0.0; n_out], vec![0.0; n_out]);
    let (mut g, mut v) = (0.0, 1.0 / m);
    let v0 = v;
    let mut hist = 0.0;
    let mut mu_t0 = mu0; // mu(t_n) for the endpoint weight on V_0
    // I_0 = 0, so a_0 = -(c V_0)/m
    let mut a = -(c * v) / m;
    out.0[0] = g;
    out.1[0] = v;
    out.2[0] = a;
    let lhs = m + 0.5 * h * (0.5 * h * mu0 + c) + 0.25 * kk * h * h;
    for n in 0..grid.steps * sub {
        // hist_{n+1} from hist_n
        let hist_next = if n == 0 { 0.0 } else { decay * (hist + mu0 * v) };
        let mu_t1 = mu_t0 * decay;
        let known = h * (0.5 * mu_t1 * v0 + hist_next);
        let rhs = m * v + 0.5 * h * (m * a - known - kk * (g + 0.5 * h * v));
        let v_next = rhs / lhs;
        let g_next = g + 0.5 * h * (v + v_next);
        let integral = known + 0.5 * h * mu0 * v_next;
        let a_next = (-integral - c * v_next - kk * g_next) / m;
        g = g_next;
        v = v_next;
        a = a_next;
        hist = hist_next;
        mu_t0 = mu_t1;
        if (n + 1) % sub == 0 {
            let k = (n + 1) / sub;
            out.0[k] = g;
            out.1[k] = v;
            out.2[k] = a;
        }
    }
    Ok(out)
}
