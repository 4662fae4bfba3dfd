//! Coordinate density of an evolving state from its characteristic
//! function. With `x(t) = u q + v p + shift + X`, where `(q, p)` is the
//! initial phase point and `X` independent Gaussian noise of variance `<X^2>`,
//! `P(x) = (1/pi hbar) int_0^inf Re[chi(u s, v s) e^{i (x - shift) s / hbar}] e^{-<X^2> s^2 / 2 hbar^2} ds`.
//! For release into the bath at `t = 0`: `u = m G'`, `v = G`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bath::{BathSpec, OscillatorSpec, ThermalSpec};
use crate::error::{Error, Result};
use crate::quadrature::integrate_adaptive;
use crate::response::{fluctuation_moments, green_initial_value, FluctuationMoments, GreenTable, MomentOptions, TimeGrid};
use crate::wigner::{CatSpec, PhaseGaussian};

const TABLE_STEP: f64 = 0.01;
const MAX_PANELS: usize = 20_000;
/// Cut-off of the `s` integral in widths of the characteristic function's Gaussian decay.
const DECAY_WIDTHS: f64 = 10.0;

/// Linear map from the initial phase point to the coordinate at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateMap {
    pub u: f64,
    pub v: f64,
    pub shift: f64,
    /// Variance of the additive Gaussian noise.
    pub variance: f64,
}

impl CoordinateMap {
    pub fn from_tables(osc: &OscillatorSpec, green: &GreenTable, moments: &FluctuationMoments, t: f64) -> Result<Self> {
        let g = green.eval(t)?;
        Ok(Self {
            u: osc.mass * g.gdot,
            v: g.g,
            shift: 0.0,
            variance: moments.eval(t)?.0[0][0].max(0.0),
        })
    }
}

/// `(1/pi hbar) int_0^upper Re[phi(s) e^{i x s/hbar}] ds` at every `x`,
/// with panel breaks no wider than half an oscillation at `freq`.
fn fourier_density<F>(phi: F, upper: f64, freq: f64, extra_break: Option<f64>, hbar: f64, xs: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Complex64 + Sync,
{
    if !(upper.is_finite() && upper > 0.0) {
        return Err(Error::Quadrature("characteristic function does not decay".into()));
    }
    let panels = ((upper * freq / PI).ceil() as usize).clamp(8, MAX_PANELS / 4);
    let mut breaks: Vec<f64> = (0..=panels).map(|i| upper * i as f64 / panels as f64).collect();
    if let Some(b) = extra_break.filter(|b| *b > 0.0 && *b < upper) {
        breaks.push(b);
        breaks.sort_by(f64::total_cmp);
    }
    xs.par_iter()
        .map(|&x| {
            let f = |s: f64| {
                let c = phi(s);
                let (sn, cs) = (x * s / hbar).sin_cos();
                c.re * cs - c.im * sn
            };
            Ok(integrate_adaptive(f, &breaks, 1e-13 * upper, 1e-10, MAX_PANELS)? / (PI * hbar))
        })
        .collect()
}

fn noise_and_shift(map: &CoordinateMap, hbar: f64, s: f64) -> Complex64 {
    Complex64::from_polar(
        (-map.variance * s * s / (2.0 * hbar * hbar)).exp(),
        -map.shift * s / hbar,
    )
}

/// Coordinate density of a Gaussian state mapped by `map`.
pub fn packet_density(g: &PhaseGaussian, map: &CoordinateMap, hbar: f64, xs: &[f64]) -> Result<Vec<f64>> {
    g.validate()?;
    let c = &g.cov;
    let (u, v) = (map.u, map.v);
    let var = u * u * c[0][0] + 2.0 * u * v * c[0][1] + v * v * c[1][1] + map.variance;
    let upper = DECAY_WIDTHS * (2.0 * hbar * hbar / var).sqrt();
    let mean = (u * g.mean[0] + v * g.mean[1] + map.shift).abs();
    let x_max = xs.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let phi = |s: f64| g.characteristic(u * s, v * s, hbar) * noise_and_shift(map, hbar, s);
    fourier_density(phi, upper, (x_max + mean) / hbar, None, hbar, xs)
}

/// Coordinate density of the (optionally momentum-kicked) cat mapped by `map`.
pub fn cat_density(cat: &CatSpec, kick_variance: f64, map: &CoordinateMap, hbar: f64, xs: &[f64]) -> Result<Vec<f64>> {
    cat.validate()?;
    if !(kick_variance >= 0.0) {
        return Err(Error::invalid(format!("kick variance must be >= 0, got {kick_variance}")));
    }
    let (u, v) = (map.u, map.v);
    let s2 = cat.sigma * cat.sigma;
    let sp2 = hbar * hbar / (4.0 * s2);
    let h2 = 2.0 * hbar * hbar;
    let alpha = (u * u * s2 + v * v * (sp2 + kick_variance) + map.variance) / h2;
    let alpha_q = (u * u * s2 + map.variance) / h2;
    // the interference terms peak where v s reaches the packet separation
    let s_c = if v != 0.0 { cat.d * sp2 / ((sp2 + kick_variance) * v.abs()) } else { 0.0 };
    let mut upper = s_c + DECAY_WIDTHS / alpha.sqrt();
    if alpha_q > 0.0 {
        upper = upper.min(DECAY_WIDTHS / alpha_q.sqrt());
    }
    let x_max = xs.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let freq = (x_max + map.shift.abs() + 0.5 * u.abs() * cat.d) / hbar;
    let phi = |s: f64| cat.characteristic(hbar, kick_variance, u * s, v * s) * noise_and_shift(map, hbar, s);
    fourier_density(phi, upper, freq, Some(s_c), hbar, xs)
}

/// `P(x, t)` at each `x` from tables covering `t`. `kick_variance` is the
/// extra momentum variance of each packet (zero for the pure cat).
pub fn probability_density_from_tables(
    cat: &CatSpec,
    kick_variance: f64,
    osc: &OscillatorSpec,
    green: &GreenTable,
    moments: &FluctuationMoments,
    t: f64,
    xs: &[f64],
) -> Result<Vec<f64>> {
    let map = CoordinateMap::from_tables(osc, green, moments, t)?;
    cat_density(cat, kick_variance, &map, osc.hbar, xs)
}

/// `P(x, t)` for a cat released into the bath at `t = 0`.
#[allow(clippy::too_many_arguments)]
pub fn probability_density_fourier(
    cat: &CatSpec,
    kick_variance: f64,
    bath: &BathSpec,
    osc: &OscillatorSpec,
    th: &ThermalSpec,
    t: f64,
    xs: &[f64],
    opts: &MomentOptions,
) -> Result<Vec<f64>> {
    let grid = TimeGrid::covering(t, TABLE_STEP)?;
    let green = green_initial_value(bath, osc, grid)?;
    let moments = fluctuation_moments(bath, osc, th, grid, opts)?;
    probability_density_from_tables(cat, kick_variance, osc, &green, &moments, grid.t_final(), xs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::kernel_propagate;
    use crate::wigner::{cat_wigner, GridSpec};

    #[test]
    fn initial_density_is_the_wave_function() {
        let cat = CatSpec::new(4.0, 0.7);
        let osc = OscillatorSpec::default();
        let xs: Vec<f64> = (0..161).map(|i| -8.0 + 0.1 * i as f64).collect();
        let p = probability_density_fourier(&cat, 0.0, &BathSpec::ohmic(0.3, 1.0), &osc, &ThermalSpec::new(5.0), 0.0, &xs, &MomentOptions::default()).unwrap();
        for (x, v) in xs.iter().zip(&p) {
            assert!((v - cat.initial_density(*x)).abs() < 1e-10, "{x}: {v}");
        }
    }

    #[test]
    fn packet_density_is_gaussian() {
        let g = PhaseGaussian { mean: [1.0, -0.5], cov: [[0.8, 0.1], [0.1, 0.6]] };
        let map = CoordinateMap { u: 0.9, v: 0.4, shift: 0.3, variance: 0.2 };
        let mean = 0.9 - 0.2 + 0.3;
        let var = 0.81 * 0.8 + 2.0 * 0.36 * 0.1 + 0.16 * 0.6 + 0.2;
        let xs: Vec<f64> = (0..81).map(|i| -4.0 + 0.1 * i as f64).collect();
        let p = packet_density(&g, &map, 1.0, &xs).unwrap();
        for (x, v) in xs.iter().zip(&p) {
            let exact = (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt();
            assert!((v - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn agrees_with_kernel_marginal() {
        let cat = CatSpec::new(4.0, 1.0);
        let osc = OscillatorSpec::default();
        let bath = BathSpec::ohmic(0.5, 1.0);
        let th = ThermalSpec::new(5.0);
        let grid = GridSpec::symmetric(14.0, 14.0, 128, 160).unwrap();
        let w0 = cat_wigner(&cat, &osc, &grid).unwrap();
        let t = 0.7;
        let w = kernel_propagate(&w0, &bath, &osc, &th, t, &MomentOptions::default()).unwrap();
        let marginal = w.marginal_q();
        let xs = w.q.values();
        let p = probability_density_fourier(&cat, 0.0, &bath, &osc, &th, t, &xs, &MomentOptions::default()).unwrap();
        let scale = p.iter().cloned().fold(0.0, f64::max);
        for (a, b) in marginal.iter().zip(&p) {
            assert!((a - b).abs() < 1e-4 * scale, "{a} vs {b}");
        }
    }
}
