//! Fluctuation-dissipation integrals over the spectral density `Im alpha`.

use crate::bath::{omega_coth, thermal_coth, BathKind, BathSpec, OscillatorSpec, ThermalSpec};
use crate::error::{Error, Result};
use crate::quadrature::integrate_adaptive;
use std::f64::consts::PI;

const REL_TOL: f64 = 1e-10;
const MAX_PANELS: usize = 200_000;
/// Hard cutoff as a multiple of the largest characteristic frequency.
const CUTOFF_FACTOR: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Weight {
    Cos,
    OneMinusCos,
    Sin,
}

impl Weight {
    #[inline]
    fn eval(self, x: f64) -> f64 {
        match self {
            Weight::Cos => x.cos(),
            // 1 - cos x = 2 sin^2(x/2) keeps precision at small x.
            Weight::OneMinusCos => {
                let s = (0.5 * x).sin();
                2.0 * s * s
            }
            Weight::Sin => x.sin(),
        }
    }
}

/// `Re mu / |D|^2 = Im alpha / omega`, finite at `omega = 0` when `K > 0`.
fn im_alpha_over_omega(bath: &BathSpec, osc: &OscillatorSpec, w: f64) -> f64 {
    let mu = bath.memory_fourier_unchecked(num_complex::Complex64::new(w, 0.0));
    let re = osc.spring_constant - osc.mass * w * w + w * mu.im;
    let im = -w * mu.re;
    let n = re * re + im * im;
    if n == 0.0 {
        return 0.0;
    }
    mu.re / n
}

fn characteristic_frequencies(bath: &BathSpec, osc: &OscillatorSpec) -> Vec<f64> {
    let mut s = vec![];
    let w0 = osc.omega0();
    if w0 > 0.0 {
        s.push(w0);
    }
    if bath.gamma > 0.0 {
        s.push(bath.gamma);
    }
    if bath.kind == BathKind::SingleRelaxationTime {
        s.push(1.0 / bath.tau);
    }
    s
}

/// `int_0^inf E(w) weight(w t) dw` with envelope `E = Im alpha * coth(hbar w/2kT)`
/// when a temperature is given, `E = Im alpha` otherwise.
fn spectral_integral(
    bath: &BathSpec,
    osc: &OscillatorSpec,
    kt: Option<f64>,
    weight: Weight,
    t: f64,
) -> Result<f64> {
    let hbar = osc.hbar;
    let envelope = |w: f64| -> f64 {
        let base = im_alpha_over_omega(bath, osc, w);
        match kt {
            Some(kt) => omega_coth(w, hbar, kt) * base,
            None => w * base,
        }
    };
    let scales = characteristic_frequencies(bath, osc);
    let w_hi = scales.iter().cloned().fold(0.0, f64::max);
    let w_lo = scales.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut w_max = CUTOFF_FACTOR * w_hi;
    if t > 0.0 {
        // the weight must complete many periods below the cutoff
        w_max = w_max.max(1000.0 / t);
    }
    // Geometric breakpoints from deep below the smallest scale up to the
    // cutoff, refined near the resonance, then split to width <= pi/t.
    let mut bps = vec![0.0];
    let mut w = 1e-8 * w_lo.min(if t > 0.0 { 1.0 / t } else { f64::INFINITY });
    while w < w_max {
        bps.push(w);
        w *= 1.5;
    }
    bps.push(w_max);
    let w0 = osc.omega0();
    if w0 > 0.0 && bath.gamma > 0.0 {
        for k in -6..=6 {
            let x = w0 + k as f64 * 0.25 * bath.gamma;
            if x > 0.0 && x < w_max {
                bps.push(x);
            }
        }
    }
    bps.sort_by(f64::total_cmp);
    bps.dedup();
    if t > 0.0 {
        let width = PI / t;
        let mut refined = vec![bps[0]];
        for win in bps.windows(2) {
            let n = ((win[1] - win[0]) / width).ceil().max(1.0) as usize;
            for k in 1..=n {
                refined.push(win[0] + (win[1] - win[0]) * k as f64 / n as f64);
            }
        }
        bps = refined;
    }
    let f = |w: f64| envelope(w) * weight.eval(w * t);
    let body = integrate_adaptive(f, &bps, 1e-300, REL_TOL, MAX_PANELS)?;

    // Tail beyond the cutoff: the envelope decays as a power law w^-p. The
    // non-oscillatory part is integrated analytically and the oscillatory
    // part by two integrations by parts.
    let e1 = envelope(w_max);
    let e2 = envelope(2.0 * w_max);
    let tail = if e1 == 0.0 || e2 == 0.0 {
        0.0
    } else {
        let p = -(e2 / e1).abs().ln() / 2f64.ln();
        if p <= 1.0 {
            return Err(Error::Quadrature(format!(
                "spectral envelope decays too slowly beyond cutoff (power {p:.3})"
            )));
        }
        let smooth = e1 * w_max / (p - 1.0);
        let (cos_tail, sin_tail, remainder) = if t > 0.0 {
            let d1 = -p * e1 / w_max;
            let (sn, cs) = (w_max * t).sin_cos();
            (
                -e1 * sn / t - d1 * cs / (t * t),
                e1 * cs / t - d1 * sn / (t * t),
                p * (p + 1.0) * e1.abs() / (w_max * w_max * t.powi(3)),
            )
        } else {
            (smooth, 0.0, 0.0)
        };
        if remainder > 1e-9 * body.abs().max(1e-300) && remainder > 1e-14 * e1.abs() * w_max {
            return Err(Error::Quadrature(format!(
                "tail remainder {remainder:e} not negligible against integral {body:e}"
            )));
        }
        match weight {
            Weight::Cos => cos_tail,
            Weight::Sin => sin_tail,
            Weight::OneMinusCos if t == 0.0 => 0.0,
            Weight::OneMinusCos => smooth - cos_tail,
        }
    };
    Ok(body + tail)
}

fn check(bath: &BathSpec, osc: &OscillatorSpec) -> Result<()> {
    bath.validate()?;
    osc.validate()?;
    Ok(())
}

/// Symmetrized stationary position autocorrelation
/// `C0(t) = (hbar/pi) int_0^inf Im alpha coth(hbar w/2kT) cos(wt) dw`.
pub fn position_autocorrelation(bath: &BathSpec, osc: &OscillatorSpec, th: &ThermalSpec, t: f64) -> Result<f64> {
    check(bath, osc)?;
    th.validate()?;
    if osc.spring_constant == 0.0 {
        return Err(Error::invalid(
            "position autocorrelation diverges for the free particle (K = 0)",
        ));
    }
    let t = t.abs();
    if bath.gamma == 0.0 {
        let w0 = osc.omega0();
        return Ok(osc.hbar / (2.0 * osc.mass * w0)
            * thermal_coth(osc.hbar * w0, th.kt)
            * (w0 * t).cos());
    }
    Ok(osc.hbar / PI * spectral_integral(bath, osc, Some(th.kt), Weight::Cos, t)?)
}

/// Mean-square displacement of the stationary process,
/// `s(t) = (2 hbar/pi) int_0^inf Im alpha coth(hbar w/2kT) (1 - cos wt) dw`.
pub fn mean_square_displacement(bath: &BathSpec, osc: &OscillatorSpec, th: &ThermalSpec, t: f64) -> Result<f64> {
    check(bath, osc)?;
    th.validate()?;
    let t = t.abs();
    if t == 0.0 {
        return Ok(0.0);
    }
    if bath.gamma == 0.0 {
        if osc.spring_constant == 0.0 {
            return Err(Error::invalid(
                "no stationary process for an undamped free particle",
            ));
        }
        let w0 = osc.omega0();
        return Ok(osc.hbar / (osc.mass * w0)
            * thermal_coth(osc.hbar * w0, th.kt)
            * (1.0 - (w0 * t).cos()));
    }
    Ok(2.0 * osc.hbar / PI * spectral_integral(bath, osc, Some(th.kt), Weight::OneMinusCos, t)?)
}

/// Commutator amplitude `c(t)` with `[x(t), x(0)] = i c(t)`:
/// `c(t) = (2 hbar/pi) int_0^inf Im alpha sin(wt) dw`. Odd in `t`.
pub fn commutator_x(bath: &BathSpec, osc: &OscillatorSpec, t: f64) -> Result<f64> {
    check(bath, osc)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let sign = t.signum();
    let t = t.abs();
    if bath.gamma == 0.0 {
        let w0 = osc.omega0();
        let v = if w0 == 0.0 {
            osc.hbar * t / osc.mass
        } else {
            osc.hbar * (w0 * t).sin() / (osc.mass * w0)
        };
        return Ok(sign * v);
    }
    Ok(sign * 2.0 * osc.hbar / PI * spectral_integral(bath, osc, None, Weight::Sin, t)?)
}
