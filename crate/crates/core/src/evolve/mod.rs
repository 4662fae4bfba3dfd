//! Time evolution of Wigner functions: the constant-coefficient
//! master/pre-master family, the exact equation with time-dependent
//! coefficients, the Gaussian transition kernel and the Fourier form of the
//! coordinate density.

pub mod fourier;
pub mod hpz;
pub mod kernel;
pub mod lambda;
pub mod transport;

pub use fourier::{cat_density, packet_density, probability_density_fourier, probability_density_from_tables, CoordinateMap};
pub use hpz::{evolve_hpz, hpz_coefficients, hpz_from_tables, HpzCoefficients};
pub use kernel::{kernel_propagate, kernel_propagate_tables, mean_map};
pub use lambda::{evolve_lambda, lambda_generator};
pub use transport::{push_forward, LinearStep, Transport};

use serde::{Deserialize, Serialize};

use crate::bath::{BathSpec, OscillatorSpec};
use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::response::DriveSpec;
use crate::wigner::{PhaseMoments, WignerGrid};

/// Width, in samples, of the edge band watched for mass leaking off the grid.
const EDGE_BAND: usize = 4;

fn default_leak_tolerance() -> f64 {
    1e-6
}

fn default_norm_rate() -> f64 {
    1e-5
}

fn default_uncertainty_tolerance() -> f64 {
    1e-6
}

/// Settings shared by the grid evolvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    /// -1: coordinate pre-master, 0: master, +1: momentum pre-master.
    #[serde(default)]
    pub lambda: i32,
    /// Time step; defaults to `min(0.01/omega0, 0.01/gamma)`.
    #[serde(default)]
    pub dt: Option<f64>,
    pub t_final: f64,
    #[serde(default)]
    pub drive: DriveSpec,
    /// Keep every n-th grid (0 keeps only the final one).
    #[serde(default)]
    pub record_every: usize,
    /// Largest tolerated `|W|` in the edge band relative to `max |W|`.
    #[serde(default = "default_leak_tolerance")]
    pub leak_tolerance: f64,
    /// Tolerated normalization drift per unit time.
    #[serde(default = "default_norm_rate")]
    pub norm_tolerance_rate: f64,
    /// Relative margin below `hbar^2/4` that counts as a violation.
    #[serde(default = "default_uncertainty_tolerance")]
    pub uncertainty_tolerance: f64,
}

impl EvolutionConfig {
    pub fn new(lambda: i32, t_final: f64) -> Self {
        Self {
            lambda,
            dt: None,
            t_final,
            drive: DriveSpec::None,
            record_every: 0,
            leak_tolerance: default_leak_tolerance(),
            norm_tolerance_rate: default_norm_rate(),
            uncertainty_tolerance: default_uncertainty_tolerance(),
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(-1..=1).contains(&self.lambda) {
            return Err(Error::invalid(format!("lambda must be -1, 0 or 1, got {}", self.lambda)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::invalid(format!("t_final must be >= 0, got {}", self.t_final)));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::invalid(format!("dt must be > 0, got {dt}")));
            }
        }
        self.drive.validate()
    }

    /// The configured step, or `min(0.01/omega0, 0.01/gamma)`.
    pub fn resolved_dt(&self, osc: &OscillatorSpec, bath: &BathSpec) -> f64 {
        self.dt.unwrap_or_else(|| {
            let w = osc.omega0().max(bath.gamma);
            if w > 0.0 {
                0.01 / w
            } else {
                0.01
            }
        })
    }

    fn step_count(&self, dt: f64) -> (usize, f64) {
        if self.t_final == 0.0 {
            return (0, dt);
        }
        let n = (self.t_final / dt - 1e-9).ceil().max(1.0) as usize;
        (n, self.t_final / n as f64)
    }
}

/// Output of a grid evolution.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Every step time, starting at 0.
    pub times: Vec<f64>,
    pub moments: Vec<PhaseMoments>,
    /// Recorded grids with their times; always ends with the final grid.
    pub frames: Vec<(f64, WignerGrid)>,
    /// First time the uncertainty determinant fell below `hbar^2/4`.
    pub uncertainty_violation: Option<f64>,
    /// Smallest `(<dq^2><dp^2> - <dq dp>^2) / (hbar^2/4)` seen.
    pub min_uncertainty_ratio: f64,
}

impl Trajectory {
    pub fn final_grid(&self) -> &WignerGrid {
        &self.frames.last().expect("trajectory always holds the final grid").1
    }

    pub fn mean_q(&self) -> Vec<f64> {
        self.moments.iter().map(|m| m.mean_q).collect()
    }
}

/// Step a grid with per-step linear maps, checking normalization, edge
/// leakage and the uncertainty bound after every step.
pub(crate) fn run_steps<F>(mut w: WignerGrid, cfg: &EvolutionConfig, dt: f64, mut step_for: F) -> Result<Trajectory>
where
    F: FnMut(f64, f64) -> Result<LinearStep>,
{
    let hbar = w.meta.oscillator.hbar;
    let bound = 0.25 * hbar * hbar;
    let (n, h) = cfg.step_count(dt);
    let transport = Transport::new(w.q.len, w.p.len);
    let m0 = w.moments();
    let mut traj = Trajectory {
        times: vec![0.0],
        moments: vec![m0],
        frames: vec![],
        uncertainty_violation: None,
        min_uncertainty_ratio: m0.uncertainty_determinant() / bound,
    };
    if cfg.record_every > 0 {
        traj.frames.push((0.0, w.clone()));
    }
    for k in 0..n {
        let t0 = k as f64 * h;
        let t = (k + 1) as f64 * h;
        let step = step_for(t0, h)?;
        transport.apply(&mut w, &step, t)?;
        let m = w.moments();
        if !m.norm.is_finite() || w.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Stability { t, detail: "non-finite values in the grid".into() });
        }
        let drift = (m.norm - m0.norm).abs();
        let limit = cfg.norm_tolerance_rate * t + 1e-9;
        if drift > limit {
            return Err(Error::NormalizationDrift { t, drift, limit });
        }
        let edge = w.edge_fraction(EDGE_BAND);
        if edge > cfg.leak_tolerance {
            return Err(Error::BoundaryLeak { t, mass: edge, limit: cfg.leak_tolerance });
        }
        let ratio = m.uncertainty_determinant() / bound;
        traj.min_uncertainty_ratio = traj.min_uncertainty_ratio.min(ratio);
        if ratio < 1.0 - cfg.uncertainty_tolerance && traj.uncertainty_violation.is_none() {
            log::info!("uncertainty bound violated at t = {t}: ratio {ratio}");
            traj.uncertainty_violation = Some(t);
        }
        traj.times.push(t);
        traj.moments.push(m);
        if cfg.record_every > 0 && (k + 1) % cfg.record_every == 0 && k + 1 < n {
            traj.frames.push((t, w.clone()));
        }
    }
    traj.frames.push((n as f64 * h, w));
    Ok(traj)
}

/// Integrate `Phi' = B Phi`, `c' = B c + b`, `Q' = B Q + Q B^T + 2 D` over
/// `[t0, t0 + h]` from `Phi = I`, `c = 0`, `Q = 0` with `n` RK4 substeps.
pub(crate) fn integrate_step<G>(t0: f64, h: f64, n: usize, generator: G) -> LinearStep
where
    G: Fn(f64) -> (Mat2, Mat2, [f64; 2]),
{
    // state: Phi (4), Q (qq, qp, pp), c (2)
    let rhs = |t: f64, y: &[f64; 9]| -> [f64; 9] {
        let (b, d, f) = generator(t);
        let phi = [[y[0], y[1]], [y[2], y[3]]];
        let q = [[y[4], y[5]], [y[5], y[6]]];
        let bp = crate::linalg::mul(&b, &phi);
        let bq = crate::linalg::mul(&b, &q);
        [
            bp[0][0],
            bp[0][1],
            bp[1][0],
            bp[1][1],
            2.0 * bq[0][0] + 2.0 * d[0][0],
            bq[0][1] + bq[1][0] + 2.0 * d[0][1],
            2.0 * bq[1][1] + 2.0 * d[1][1],
            b[0][0] * y[7] + b[0][1] * y[8] + f[0],
            b[1][0] * y[7] + b[1][1] * y[8] + f[1],
        ]
    };
    let mut y = [1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let s = h / n as f64;
    let axpy = |y: &[f64; 9], k: &[f64; 9], a: f64| {
        let mut r = *y;
        for i in 0..9 {
            r[i] += a * k[i];
        }
        r
    };
    for i in 0..n {
        let t = t0 + i as f64 * s;
        let k1 = rhs(t, &y);
        let k2 = rhs(t + 0.5 * s, &axpy(&y, &k1, 0.5 * s));
        let k3 = rhs(t + 0.5 * s, &axpy(&y, &k2, 0.5 * s));
        let k4 = rhs(t + s, &axpy(&y, &k3, s));
        for j in 0..9 {
            y[j] += s / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
    LinearStep {
        transfer: [[y[0], y[1]], [y[2], y[3]]],
        offset: [y[7], y[8]],
        covariance: [[y[4], y[5]], [y[5], y[6]]],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::LinearFlow;

    #[test]
    fn rk4_step_matches_van_loan() {
        let b = [[-0.1, 1.0], [-2.0, -0.3]];
        let d = [[0.01, 0.0], [0.0, 0.2]];
        let flow = LinearFlow::new(&b, [0.0, 0.5], &d, 0.3);
        let step = integrate_step(0.0, 0.3, 300, |_| (b, d, [0.0, 0.5]));
        for i in 0..2 {
            assert!((step.offset[i] - flow.offset[i]).abs() < 1e-10);
            for j in 0..2 {
                assert!((step.transfer[i][j] - flow.transfer[i][j]).abs() < 1e-10);
                assert!((step.covariance[i][j] - flow.covariance[i][j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn step_count_divides_horizon() {
        let cfg = EvolutionConfig::new(0, 1.0);
        assert_eq!(cfg.step_count(0.3), (4, 0.25));
        assert_eq!(cfg.step_count(0.1).0, 10);
        assert!(EvolutionConfig::new(2, 1.0).validate().is_err());
    }
}
