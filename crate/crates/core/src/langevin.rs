//! Classical Langevin Monte Carlo for the linear oscillator, used as an
//! independent oracle for phase-space evolution.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{LinearFlow, Mat2};

/// `dq = p/m dt`, `dp = (-K q - gamma p) dt + sqrt(2 D_pp) dW`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LangevinModel {
    pub mass: f64,
    pub spring_constant: f64,
    pub gamma: f64,
    /// Momentum diffusion `D_pp`; `m gamma kT` for a thermal bath, plus
    /// `g/2` for a delta-correlated random force of strength `g`.
    pub momentum_diffusion: f64,
}

impl LangevinModel {
    pub fn thermal(mass: f64, spring_constant: f64, gamma: f64, kt: f64) -> Self {
        Self {
            mass,
            spring_constant,
            gamma,
            momentum_diffusion: mass * gamma * kt,
        }
    }

    fn flow(&self, h: f64) -> LinearFlow {
        let b: Mat2 = [[0.0, 1.0 / self.mass], [-self.spring_constant, -self.gamma]];
        let d: Mat2 = [[0.0, 0.0], [0.0, self.momentum_diffusion]];
        LinearFlow::new(&b, [0.0, 0.0], &d, h)
    }
}

/// Sample moments with standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleMoments {
    pub t: f64,
    pub mean_q: f64,
    pub mean_p: f64,
    pub var_q: f64,
    pub var_p: f64,
    pub cov_qp: f64,
    pub se_mean_q: f64,
    pub se_mean_p: f64,
    pub se_var_q: f64,
    pub se_var_p: f64,
    pub se_cov_qp: f64,
}

/// Propagate `n_paths` trajectories from a Gaussian initial distribution
/// (mean `z0`, covariance `cov0` in `(q, p)` ordering) with the exact
/// discrete-time transition of the linear SDE, recording moments at
/// `times` (ascending, `>= 0`). Deterministic for a given `seed`.
pub fn sample_moments(
    model: &LangevinModel,
    z0: [f64; 2],
    cov0: Mat2,
    times: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<Vec<SampleMoments>> {
    if n_paths < 2 {
        return Err(Error::invalid("Monte Carlo needs at least 2 paths"));
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|t| *t < 0.0) {
        return Err(Error::invalid("sample times must be ascending and non-negative"));
    }
    let mut steps = Vec::with_capacity(times.len());
    let mut prev = 0.0;
    for &t in times {
        let h = t - prev;
        let flow = if h > 0.0 { Some(model.flow(h)) } else { None };
        let chol = flow.as_ref().map(|f| cholesky(&f.covariance)).transpose()?;
        steps.push((flow, chol));
        prev = t;
    }
    let l0 = cholesky(&cov0)?;
    const CHUNK: usize = 1024;
    let n_chunks = n_paths.div_ceil(CHUNK);
    // per-chunk raw power sums: n, q, p, q^2, p^2, qp, q^3, p^3, q^4, p^4
    let partial: Vec<Vec<[f64; 10]>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64 + 1);
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n_paths);
            let mut acc = vec![[0.0; 10]; times.len()];
            for _ in lo..hi {
                let (a, b): (f64, f64) = (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
                let mut z = [z0[0] + l0[0][0] * a, z0[1] + l0[1][0] * a + l0[1][1] * b];
                for (k, (flow, chol)) in steps.iter().enumerate() {
                    if let (Some(f), Some(l)) = (flow, chol) {
                        let (a, b): (f64, f64) = (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
                        let m = f.transfer;
                        z = [
                            m[0][0] * z[0] + m[0][1] * z[1] + l[0][0] * a,
                            m[1][0] * z[0] + m[1][1] * z[1] + l[1][0] * a + l[1][1] * b,
                        ];
                    }
                    let (q, p) = (z[0], z[1]);
                    let (q2, p2) = (q * q, p * p);
                    let s = &mut acc[k];
                    s[0] += 1.0;
                    s[1] += q;
                    s[2] += p;
                    s[3] += q2;
                    s[4] += p2;
                    s[5] += q * p;
                    s[6] += q2 * q;
                    s[7] += p2 * p;
                    s[8] += q2 * q2;
                    s[9] += p2 * p2;
                }
            }
            acc
        })
        .collect();
    let mut out = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        let mut s = [0.0; 10];
        for chunk in &partial {
            for i in 0..10 {
                s[i] += chunk[k][i];
            }
        }
        out.push(moments_from_sums(t, &s));
    }
    Ok(out)
}

fn moments_from_sums(t: f64, s: &[f64; 10]) -> SampleMoments {
    let n = s[0];
    let e = |i: usize| s[i] / n;
    let (mq, mp) = (e(1), e(2));
    let vq = e(3) - mq * mq;
    let vp = e(4) - mp * mp;
    let cqp = e(5) - mq * mp;
    let central4 = |m: f64, e2: f64, e3: f64, e4: f64| e4 - 4.0 * m * e3 + 6.0 * m * m * e2 - 3.0 * m.powi(4);
    let m4q = central4(mq, e(3), e(6), e(8));
    let m4p = central4(mp, e(4), e(7), e(9));
    SampleMoments {
        t,
        mean_q: mq,
        mean_p: mp,
        var_q: vq,
        var_p: vp,
        cov_qp: cqp,
        se_mean_q: (vq / n).sqrt(),
        se_mean_p: (vp / n).sqrt(),
        se_var_q: ((m4q - vq * vq).max(0.0) / n).sqrt(),
        se_var_p: ((m4p - vp * vp).max(0.0) / n).sqrt(),
        // Gaussian estimate of Var(dq dp)
        se_cov_qp: ((vq * vp + cqp * cqp) / n).sqrt(),
    }
}

/// Lower Cholesky factor of a symmetric positive semi-definite 2x2 matrix.
fn cholesky(a: &Mat2) -> Result<Mat2> {
    let tol = 1e-14 * (a[0][0].abs() + a[1][1].abs());
    if a[0][0] < -tol || a[1][1] < -tol {
        return Err(Error::invalid("covariance is not positive semi-definite"));
    }
    let l00 = a[0][0].max(0.0).sqrt();
    let l10 = if l00 > 0.0 { a[1][0] / l00 } else { 0.0 };
    let r = a[1][1] - l10 * l10;
    if r < -tol {
        return Err(Error::invalid("covariance is not positive semi-definite"));
    }
    Ok([[l00, 0.0], [l10, r.max(0.0).sqrt()]])
}
