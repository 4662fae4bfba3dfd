//! Propagation by the Gaussian transition probability
//! `P(z; z', t) = N(z - M(t) z'; A(t))`.
//!
//! For each output point the `p'` integral is done against a table of the
//! initial rows convolved in `p` (the kernel restricted to a line in `z'` is
//! Gaussian), leaving a one-dimensional Gaussian-weighted integral over `q'`.

use std::f64::consts::PI;

use rayon::prelude::*;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::bath::{BathSpec, OscillatorSpec, ThermalSpec};
use crate::error::{Error, Result};
use crate::linalg::{det, inverse, Mat2};
use crate::quadrature::{interp_zero_padded, lagrange_weights};
use crate::response::{fluctuation_moments, green_initial_value, FluctuationMoments, GreenTable, MomentOptions, TimeGrid};
use crate::wigner::{Axis, WignerGrid};

/// Largest internal step used to tabulate `G` and the moments.
const TABLE_STEP: f64 = 0.01;
/// Half-width, in standard deviations, of the Gaussian windows.
const WINDOW: f64 = 10.0;

/// Map from initial to mean final phase point, `[[m G', G], [m^2 G'', m G']]`.
pub fn mean_map(green: &GreenTable, mass: f64, t: f64) -> Result<Mat2> {
    let s = green.eval(t)?;
    Ok([[mass * s.gdot, s.g], [mass * mass * s.gddot, mass * s.gdot]])
}

/// Rows of `W0` convolved along `p` with `N(0, width^2)`, sampled on a
/// uniform `p` axis that may extend past the input grid.
struct RowTable {
    p0: f64,
    h: f64,
    rows: Vec<Vec<f64>>,
}

impl RowTable {
    fn build(w0: &WignerGrid, width: f64) -> Self {
        let hp = w0.p.step;
        let np = w0.p.len;
        if width < hp {
            let mut planner = FftPlanner::new();
            let fwd = planner.plan_fft_forward(np);
            let inv = planner.plan_fft_inverse(np);
            let filter: Vec<f64> = (0..np)
                .map(|j| {
                    let k = if j <= np / 2 { j as f64 } else { j as f64 - np as f64 };
                    let k = 2.0 * PI * k / (np as f64 * hp);
                    (-0.5 * k * k * width * width).exp() / np as f64
                })
                .collect();
            let rows = (0..w0.q.len)
                .into_par_iter()
                .map(|i| {
                    let mut buf: Vec<Complex64> = w0.row(i).iter().map(|&v| Complex64::new(v, 0.0)).collect();
                    fwd.process(&mut buf);
                    for (b, f) in buf.iter_mut().zip(&filter) {
                        *b *= f;
                    }
                    inv.process(&mut buf);
                    buf.iter().map(|c| c.re).collect()
                })
                .collect();
            return Self { p0: w0.p.min, h: hp, rows };
        }
        let h = hp.max(width / 8.0);
        let lo = w0.p.min - WINDOW * width;
        let len = ((w0.p.max() + WINDOW * width - lo) / h).ceil() as usize + 1;
        let norm = hp / (width * (2.0 * PI).sqrt());
        let reach = (WINDOW * width / hp).ceil() as isize;
        let rows = (0..w0.q.len)
            .into_par_iter()
            .map(|i| {
                let src = w0.row(i);
                (0..len)
                    .map(|k| {
                        let p = lo + k as f64 * h;
                        let c = ((p - w0.p.min) / hp).round() as isize;
                        let (a, b) = ((c - reach).max(0), (c + reach).min(np as isize - 1));
                        let mut acc = 0.0;
                        for j in a..=b {
                            let x = (p - w0.p.value(j as usize)) / width;
                            acc += src[j as usize] * (-0.5 * x * x).exp();
                        }
                        acc * norm
                    })
                    .collect()
            })
            .collect();
        Self { p0: lo, h, rows }
    }

    /// Sampled `p` range, including the zero-padded interpolation margin.
    fn range(&self) -> (f64, f64) {
        let n = self.rows.first().map_or(0, Vec::len) as f64;
        (self.p0 - 4.0 * self.h, self.p0 + (n + 3.0) * self.h)
    }

    /// Interpolate across rows at `q` (on `axis`) and along each row at `p`.
    fn eval_2d(&self, axis: Axis, q: f64, p: f64) -> f64 {
        let pos = axis.position(q);
        let base = pos.floor();
        let frac = pos - base;
        let i0 = base as isize;
        let nq = self.rows.len() as isize;
        if frac == 0.0 && i0 >= 0 && i0 < nq {
            return interp_zero_padded(&self.rows[i0 as usize], (p - self.p0) / self.h);
        }
        let lw = lagrange_weights(frac);
        let mut acc = 0.0;
        for (s, ws) in lw.iter().enumerate() {
            let k = i0 - 3 + s as isize;
            if k >= 0 && k < nq {
                acc += ws * interp_zero_padded(&self.rows[k as usize], (p - self.p0) / self.h);
            }
        }
        acc
    }
}

/// Propagate `w0` to time `t` from precomputed tables covering `t`.
pub fn kernel_propagate_tables(
    w0: &WignerGrid,
    green: &GreenTable,
    moments: &FluctuationMoments,
    t: f64,
) -> Result<WignerGrid> {
    let m = mean_map(green, moments.mass, t)?;
    let (a, _) = moments.eval(t)?;
    let (hq, hp) = (w0.q.step, w0.p.step);
    let det_a = det(&a);
    if !(det_a > 1e-10 * (hq * hp).powi(2)) {
        return Err(Error::KernelDegenerate { t, det: det_a });
    }
    let det_m = det(&m);
    let (c, m_inv) = match (inverse(&a), inverse(&m)) {
        (Some(c), Some(mi)) if det_m.abs() > 1e-300 => (c, mi),
        _ => return Err(Error::KernelDegenerate { t, det: det_a }),
    };
    let m1 = [m[0][0], m[1][0]];
    let m2 = [m[0][1], m[1][1]];
    let cm2 = [c[0][0] * m2[0] + c[0][1] * m2[1], c[1][0] * m2[0] + c[1][1] * m2[1]];
    let kappa = m2[0] * cm2[0] + m2[1] * cm2[1];
    // Gaussian weight of q' after the p' integral: exp(-eta (q' - q_c)^2 / 2)
    let eta = det_m * det_m / (det_a * kappa);
    let width = 1.0 / eta.sqrt();
    // p' at the kernel peak, p* = alpha(z) - beta q'
    let beta = (cm2[0] * m1[0] + cm2[1] * m1[1]) / kappa;
    let table = RowTable::build(w0, 1.0 / kappa.sqrt());
    let pref = (2.0 * PI / kappa).sqrt() / (2.0 * PI * det_a.sqrt());
    let q = w0.q;
    // sample spacing along the line resolving both the weight and the table
    let dx = 0.5 * width.min(1.0 / (1.0 / hq + beta.abs() / hp));
    let (p_lo, p_hi) = table.range();

    let mut out = WignerGrid::zeros(&w0.spec(), w0.meta);
    out.values
        .par_chunks_mut(w0.p.len)
        .enumerate()
        .for_each(|(i, row)| {
            let qz = q.value(i);
            for (j, cell) in row.iter_mut().enumerate() {
                let pz = w0.p.value(j);
                let alpha = (cm2[0] * qz + cm2[1] * pz) / kappa;
                let qc = m_inv[0][0] * qz + m_inv[0][1] * pz;
                let mut a = (qc - WINDOW * width).max(q.min - 4.0 * hq);
                let mut b = (qc + WINDOW * width).min(q.max() + 4.0 * hq);
                if beta != 0.0 {
                    let (x1, x2) = ((alpha - p_lo) / beta, (alpha - p_hi) / beta);
                    a = a.max(x1.min(x2));
                    b = b.min(x1.max(x2));
                }
                if b <= a {
                    continue;
                }
                let n = ((b - a) / dx).ceil() as usize;
                let h = (b - a) / n as f64;
                let mut acc = 0.0;
                for k in 0..=n {
                    let x = a + k as f64 * h;
                    let f = (-0.5 * eta * (x - qc) * (x - qc)).exp() * table.eval_2d(q, x, alpha - beta * x);
                    acc += if k == 0 || k == n { 0.5 * f } else { f };
                }
                *cell = pref * acc * h;
            }
        });
    Ok(out)
}

/// Propagate `w0` to time `t` with the transition probability built from
/// the initial-value Green function and fluctuation moments.
pub fn kernel_propagate(
    w0: &WignerGrid,
    bath: &BathSpec,
    osc: &OscillatorSpec,
    th: &ThermalSpec,
    t: f64,
    opts: &MomentOptions,
) -> Result<WignerGrid> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("kernel propagation needs t > 0, got {t}")));
    }
    let grid = TimeGrid::covering(t, TABLE_STEP)?;
    let green = green_initial_value(bath, osc, grid)?;
    let moments = fluctuation_moments(bath, osc, th, grid, opts)?;
    kernel_propagate_tables(w0, &green, &moments, grid.t_final())
}
