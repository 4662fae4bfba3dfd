//! Exact one-step transport of a phase-space density under a linear
//! stochastic flow: affine push-forward followed by Gaussian smoothing.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::linalg::{det, inverse, Mat2};
use crate::quadrature::{interp_zero_padded, shift_line};
use crate::wigner::WignerGrid;

/// Smallest acceptable `|A_qq|` in the shear factorization of the inverse map.
const MIN_PIVOT: f64 = 0.2;

/// Affine map plus Gaussian spread for one step: `z -> M z + c + xi`,
/// `xi ~ N(0, Q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearStep {
    pub transfer: Mat2,
    pub offset: [f64; 2],
    pub covariance: Mat2,
}

/// Reusable FFT plans and scratch for one grid shape.
pub struct Transport {
    nq: usize,
    np: usize,
    fwd_q: Arc<dyn Fft<f64>>,
    inv_q: Arc<dyn Fft<f64>>,
    fwd_p: Arc<dyn Fft<f64>>,
    inv_p: Arc<dyn Fft<f64>>,
}

impl Transport {
    pub fn new(nq: usize, np: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            nq,
            np,
            fwd_q: planner.plan_fft_forward(nq),
            inv_q: planner.plan_fft_inverse(nq),
            fwd_p: planner.plan_fft_forward(np),
            inv_p: planner.plan_fft_inverse(np),
        }
    }

    pub fn apply(&self, w: &mut WignerGrid, step: &LinearStep, t: f64) -> Result<()> {
        push_forward(w, &step.transfer, step.offset, t)?;
        self.smooth(w, &step.covariance, t)
    }

    /// Convolve `w` with the centred Gaussian of covariance `cov`, by FFT.
    /// The grid is treated as periodic, which is harmless while the density
    /// vanishes near the edges.
    pub fn smooth(&self, w: &mut WignerGrid, cov: &Mat2, t: f64) -> Result<()> {
        let tr = cov[0][0] + cov[1][1];
        let size = cov[0][0].abs() + cov[1][1].abs() + cov[0][1].abs();
        if size == 0.0 {
            return Ok(());
        }
        let disc = ((cov[0][0] - cov[1][1]).powi(2) + 4.0 * cov[0][1] * cov[1][0]).sqrt();
        let lo = 0.5 * (tr - disc);
        if lo < -1e-10 * size || cov[0][0] < -1e-10 * size || cov[1][1] < -1e-10 * size {
            return Err(Error::Stability {
                t,
                detail: format!("step covariance {cov:?} is not positive semi-definite (eigenvalue {lo:e})"),
            });
        }
        assert_eq!((w.q.len, w.p.len), (self.nq, self.np), "transport built for another grid");
        let (nq, np) = (self.nq, self.np);
        let mut data: Vec<Complex64> = w.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        data.par_chunks_mut(np).for_each(|row| self.fwd_p.process(row));
        let mut cols = transpose(&data, nq, np);
        cols.par_chunks_mut(nq).for_each(|col| self.fwd_q.process(col));
        let kq = wavenumbers(nq, w.q.step);
        let kp = wavenumbers(np, w.p.step);
        let (a, b, c) = (cov[0][0], cov[0][1] + cov[1][0], cov[1][1]);
        cols.par_chunks_mut(nq).enumerate().for_each(|(j, col)| {
            let y = kp[j];
            for (i, v) in col.iter_mut().enumerate() {
                let x = kq[i];
                *v *= (-0.5 * (a * x * x + b * x * y + c * y * y)).exp();
            }
        });
        cols.par_chunks_mut(nq).for_each(|col| self.inv_q.process(col));
        let mut rows = transpose(&cols, np, nq);
        rows.par_chunks_mut(np).for_each(|row| self.inv_p.process(row));
        let scale = 1.0 / (nq * np) as f64;
        for (v, c) in w.values.iter_mut().zip(&rows) {
            *v = c.re * scale;
        }
        Ok(())
    }
}

fn wavenumbers(n: usize, h: f64) -> Vec<f64> {
    let base = 2.0 * std::f64::consts::PI / (n as f64 * h);
    (0..n)
        .map(|k| {
            let f = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
            f * base
        })
        .collect()
}

/// Row-major `rows x cols` to row-major `cols x rows`.
fn transpose<T: Copy + Send + Sync + Default>(src: &[T], rows: usize, cols: usize) -> Vec<T> {
    let mut out = vec![T::default(); src.len()];
    out.par_chunks_mut(rows).enumerate().for_each(|(j, line)| {
        for (i, v) in line.iter_mut().enumerate() {
            *v = src[i * cols + j];
        }
    });
    out
}

/// Replace `w` by the density of `M z + c`: `w'(z) = w(M^{-1}(z - c)) / |det M|`.
///
/// The inverse map is factored as `L D U` (unit lower shear, diagonal
/// scaling, unit upper shear), so every pass is a one-dimensional
/// resampling along grid lines.
pub fn push_forward(w: &mut WignerGrid, m: &Mat2, c: [f64; 2], t: f64) -> Result<()> {
    let a_inv = inverse(m).ok_or_else(|| Error::Stability {
        t,
        detail: format!("singular phase-space map {m:?}"),
    })?;
    let [[a, b], [cc, d]] = a_inv;
    if a.abs() < MIN_PIVOT {
        return Err(Error::Stability {
            t,
            detail: format!("step too large: inverse map {a_inv:?} rotates past the shear factorization limit"),
        });
    }
    let dt_a = det(&a_inv);
    let l = cc / a;
    let u = b / a;
    let s_q = a;
    let s_p = dt_a / a;
    // y = A z + e with e = -A c; split as L (D U z + f), f = L^{-1} e
    let e = [-(a * c[0] + b * c[1]), -(cc * c[0] + d * c[1])];
    let f = [e[0], e[1] - l * e[0]];
    let (nq, np) = (w.q.len, w.p.len);
    let (qa, pa) = (w.q, w.p);
    let identity = |x: f64| x.abs() < 1e-15;

    // F1(y) = W(y_q, l y_q + y_p): shear along p
    if !identity(l) {
        let src = w.values.clone();
        w.values.par_chunks_mut(np).enumerate().for_each(|(i, row)| {
            let shift = l * qa.value(i) / pa.step;
            shift_line(&src[i * np..(i + 1) * np], shift, row);
        });
    }
    // F2(x) = F1(s_q x_q + f_q, s_p x_p + f_p): scale along p, then q
    if !(identity(s_p - 1.0) && identity(f[1])) {
        let src = w.values.clone();
        let pos: Vec<f64> = (0..np).map(|j| pa.position(s_p * pa.value(j) + f[1])).collect();
        w.values.par_chunks_mut(np).enumerate().for_each(|(i, row)| {
            let line = &src[i * np..(i + 1) * np];
            for (j, v) in row.iter_mut().enumerate() {
                *v = interp_zero_padded(line, pos[j]);
            }
        });
    }
    let needs_q_scale = !(identity(s_q - 1.0) && identity(f[0]));
    let needs_q_shear = !identity(u);
    if needs_q_scale || needs_q_shear {
        let mut cols = transpose(&w.values, nq, np);
        if needs_q_scale {
            let src = cols.clone();
            let pos: Vec<f64> = (0..nq).map(|i| qa.position(s_q * qa.value(i) + f[0])).collect();
            cols.par_chunks_mut(nq).enumerate().for_each(|(j, col)| {
                let line = &src[j * nq..(j + 1) * nq];
                for (i, v) in col.iter_mut().enumerate() {
                    *v = interp_zero_padded(line, pos[i]);
                }
            });
        }
        // F3(z) = F2(z_q + u z_p, z_p): shear along q
        if needs_q_shear {
            let src = cols.clone();
            cols.par_chunks_mut(nq).enumerate().for_each(|(j, col)| {
                let shift = u * pa.value(j) / qa.step;
                shift_line(&src[j * nq..(j + 1) * nq], shift, col);
            });
        }
        w.values = transpose(&cols, np, nq);
    }
    let jac = dt_a.abs();
    if !identity(jac - 1.0) {
        w.values.par_iter_mut().for_each(|v| *v *= jac);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::OscillatorSpec;
    use crate::linalg::{congruence, LinearFlow};
    use crate::wigner::{gaussian_state_wigner, GridSpec, PhaseGaussian};

    fn setup() -> (OscillatorSpec, GridSpec) {
        (OscillatorSpec::default(), GridSpec::symmetric(10.0, 10.0, 128, 128).unwrap())
    }

    #[test]
    fn push_forward_of_gaussian_is_gaussian() {
        let (osc, grid) = setup();
        let g = PhaseGaussian { mean: [0.5, -0.3], cov: [[1.0, 0.2], [0.2, 0.8]] };
        let mut w = gaussian_state_wigner(&g, &osc, &grid).unwrap();
        let th: f64 = 0.3;
        let m = [[th.cos() * 1.1, th.sin()], [-th.sin(), th.cos() * 0.95]];
        let c = [0.2, 0.1];
        push_forward(&mut w, &m, c, 0.0).unwrap();
        let mean = crate::linalg::apply(&m, g.mean);
        let exact = PhaseGaussian { mean: [mean[0] + c[0], mean[1] + c[1]], cov: congruence(&m, &g.cov) };
        let e = gaussian_state_wigner(&exact, &osc, &grid).unwrap();
        let err = w.max_difference(&e).unwrap() / e.max_abs();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn smoothing_adds_covariance() {
        let (osc, grid) = setup();
        let g = PhaseGaussian { mean: [0.0, 0.0], cov: [[0.6, 0.1], [0.1, 0.5]] };
        let mut w = gaussian_state_wigner(&g, &osc, &grid).unwrap();
        let q = [[0.3, -0.05], [-0.05, 0.4]];
        Transport::new(128, 128).smooth(&mut w, &q, 0.0).unwrap();
        let exact = PhaseGaussian { mean: [0.0, 0.0], cov: crate::linalg::add(&g.cov, &q) };
        let e = gaussian_state_wigner(&exact, &osc, &grid).unwrap();
        assert!(w.max_difference(&e).unwrap() < 1e-10);
    }

    #[test]
    fn step_matches_linear_flow_covariance() {
        let (osc, grid) = setup();
        let g = PhaseGaussian::minimal(1.0, 0.0, 1.0, 1.0);
        let mut w = gaussian_state_wigner(&g, &osc, &grid).unwrap();
        let b = [[0.0, 1.0], [-1.0, -0.2]];
        let flow = LinearFlow::new(&b, [0.0, 0.0], &[[0.0, 0.0], [0.0, 0.1]], 0.05);
        let step = LinearStep { transfer: flow.transfer, offset: flow.offset, covariance: flow.covariance };
        let tr = Transport::new(128, 128);
        let mut cov = g.cov;
        let mut mean = g.mean;
        for _ in 0..40 {
            tr.apply(&mut w, &step, 0.0).unwrap();
            cov = crate::linalg::add(&congruence(&flow.transfer, &cov), &flow.covariance);
            mean = crate::linalg::apply(&flow.transfer, mean);
        }
        let m = w.moments();
        assert!((m.mean_q - mean[0]).abs() < 1e-6, "{} vs {}", m.mean_q, mean[0]);
        let c = m.covariance();
        for i in 0..2 {
            for j in 0..2 {
                assert!((c[i][j] - cov[i][j]).abs() < 1e-6, "{c:?} vs {cov:?}");
            }
        }
        assert!((m.norm - 1.0).abs() < 1e-6, "{}", m.norm);
    }

    #[test]
    fn indefinite_step_covariance_is_rejected() {
        let (osc, grid) = setup();
        let mut w = gaussian_state_wigner(&PhaseGaussian::minimal(0.0, 0.0, 1.0, 1.0), &osc, &grid).unwrap();
        let r = Transport::new(128, 128).smooth(&mut w, &[[0.1, 0.0], [0.0, -0.1]], 1.0);
        assert!(matches!(r, Err(Error::Stability { .. })), "{r:?}");
    }

    #[test]
    fn large_rotation_is_rejected() {
        let (osc, grid) = setup();
        let mut w = gaussian_state_wigner(&PhaseGaussian::minimal(0.0, 0.0, 1.0, 1.0), &osc, &grid).unwrap();
        let th: f64 = 1.5;
        let m = [[th.cos(), th.sin()], [-th.sin(), th.cos()]];
        assert!(matches!(push_forward(&mut w, &m, [0.0, 0.0], 2.0), Err(Error::Stability { .. })));
    }
}
