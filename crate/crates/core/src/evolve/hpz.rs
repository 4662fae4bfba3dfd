//! The exact master equation with time-dependent coefficients, with the
//! coefficients reconstructed from the initial-value Green function and the
//! fluctuation moments.

use serde::{Deserialize, Serialize};

use crate::bath::{BathSpec, OscillatorSpec, ThermalSpec};
use crate::error::{Error, Result};
use crate::evolve::{integrate_step, push_forward, run_steps, EvolutionConfig, Trajectory};
use crate::linalg::{Mat2, IDENTITY};
use crate::response::{fluctuation_moments, green_initial_value, DriveSpec, FluctuationMoments, GreenTable, MomentOptions, TimeGrid};
use crate::wigner::WignerGrid;

/// Time-dependent coefficients of
/// `dW/dt = -(p/m) dW/dq + m Omega^2 q dW/dp + 2 Gamma d(pW)/dp + d_pp d^2W/dp^2 + d_qp d^2W/dq dp`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HpzCoefficients {
    pub grid: TimeGrid,
    pub mass: f64,
    /// `2 Gamma(t)`.
    pub gamma_t: Vec<f64>,
    /// `Omega^2(t)`.
    pub omega2_t: Vec<f64>,
    /// Momentum diffusion (momentum^2 / time).
    pub d_pp: Vec<f64>,
    /// Cross diffusion (action / time).
    pub d_qp: Vec<f64>,
    /// Mean map just after coupling, `[[m G', G], [m^2 G'', m G']]` at `t = 0+`;
    /// it differs from the identity when the memory kernel is singular at zero lag.
    pub initial_map: Mat2,
}

/// Coefficients from tables sampled on a common grid.
pub fn hpz_from_tables(green: &GreenTable, moments: &FluctuationMoments) -> Result<HpzCoefficients> {
    if green.grid != moments.grid {
        return Err(Error::invalid("Green table and moments must share a time grid"));
    }
    let m = moments.mass;
    let n = green.grid.len();
    let mut c = HpzCoefficients {
        grid: green.grid,
        mass: m,
        gamma_t: Vec::with_capacity(n),
        omega2_t: Vec::with_capacity(n),
        d_pp: Vec::with_capacity(n),
        d_qp: Vec::with_capacity(n),
        initial_map: [[m * green.gdot[0], green.g[0]], [m * m * green.gddot[0], m * green.gdot[0]]],
    };
    for k in 0..n {
        let t = green.grid.time(k);
        let (u1, du1, ddu1) = (m * green.gdot[k], m * green.gddot[k], m * green.g3[k]);
        let (u2, du2, ddu2) = (m * green.g[k], m * green.gdot[k], m * green.gddot[k]);
        let wr = du1 * u2 - u1 * du2;
        let scale = (du1 * u2).abs() + (u1 * du2).abs();
        if !(wr.abs() > 1e-12 * scale) || !wr.is_finite() {
            return Err(Error::WronskianDegenerate { t, value: wr });
        }
        let two_gamma = (u1 * ddu2 - u2 * ddu1) / wr;
        let omega2 = (du2 * ddu1 - du1 * ddu2) / wr;
        let a = moments.covariance(k);
        let da = moments.covariance_dot(k);
        let d_qp = da[0][1] - a[1][1] / m + m * omega2 * a[0][0] + two_gamma * a[0][1];
        let d_pp = 0.5 * (da[1][1] + 2.0 * m * omega2 * a[0][1] + 2.0 * two_gamma * a[1][1]);
        c.gamma_t.push(two_gamma);
        c.omega2_t.push(omega2);
        c.d_pp.push(d_pp);
        c.d_qp.push(d_qp);
    }
    Ok(c)
}

/// Build the Green function and moments on `grid` and derive the coefficients.
pub fn hpz_coefficients(
    bath: &BathSpec,
    osc: &OscillatorSpec,
    th: &ThermalSpec,
    grid: TimeGrid,
    opts: &MomentOptions,
) -> Result<HpzCoefficients> {
    let green = green_initial_value(bath, osc, grid)?;
    let moments = fluctuation_moments(bath, osc, th, grid, opts)?;
    hpz_from_tables(&green, &moments)
}

impl HpzCoefficients {
    /// `(2 Gamma, Omega^2, d_pp, d_qp)` at `t` by cubic interpolation.
    pub fn at(&self, t: f64) -> Result<[f64; 4]> {
        let end = self.grid.t_final();
        if !(t >= 0.0) || t > end * (1.0 + 1e-12) + 1e-300 {
            return Err(Error::CoefficientRange { t, end });
        }
        let n = self.grid.len();
        let series = [&self.gamma_t, &self.omega2_t, &self.d_pp, &self.d_qp];
        if n < 4 {
            let k = ((t / self.grid.dt).round() as usize).min(n - 1);
            return Ok(series.map(|s| s[k]));
        }
        let x = t / self.grid.dt;
        let k0 = (x.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        let mut w = [0.0; 4];
        for (i, wi) in w.iter_mut().enumerate() {
            let xi = (k0 + i) as f64;
            *wi = (0..4)
                .filter(|&j| j != i)
                .map(|j| (x - (k0 + j) as f64) / (xi - (k0 + j) as f64))
                .product();
        }
        Ok(series.map(|s| (0..4).map(|i| w[i] * s[k0 + i]).sum()))
    }

    /// Drift and diffusion matrices at `t`.
    pub fn generator(&self, t: f64) -> Result<(Mat2, Mat2)> {
        let [g2, w2, dpp, dqp] = self.at(t)?;
        let m = self.mass;
        Ok((
            [[0.0, 1.0 / m], [-m * w2, -g2]],
            [[0.0, 0.5 * dqp], [0.5 * dqp, dpp]],
        ))
    }
}

/// Evolve `w0` under the exact equation. The grid first receives the
/// coupling map `initial_map`, then each step applies the transition
/// obtained by integrating the coefficient ODEs across the step.
pub fn evolve_hpz(w0: &WignerGrid, coeffs: &HpzCoefficients, cfg: &EvolutionConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let end = coeffs.grid.t_final();
    if cfg.t_final > end * (1.0 + 1e-12) {
        return Err(Error::CoefficientRange { t: cfg.t_final, end });
    }
    let extra_dpp = match &cfg.drive {
        DriveSpec::DeltaCorrelatedRandom { g } => 0.5 * g,
        DriveSpec::CorrelatedRandom { .. } => {
            return Err(Error::invalid(
                "a correlated random force has no local-in-time phase-space equation",
            ))
        }
        _ => 0.0,
    };
    let dt = cfg.dt.unwrap_or(coeffs.grid.dt.max(1e-300));
    let mut w = w0.clone();
    if coeffs.initial_map != IDENTITY {
        push_forward(&mut w, &coeffs.initial_map, [0.0, 0.0], 0.0)?;
    }
    let sub_dt = coeffs.grid.dt.max(1e-300);
    let drive = cfg.drive.clone();
    run_steps(w, cfg, dt, move |t0, h| {
        // validate the whole interval before integrating
        coeffs.at(t0)?;
        coeffs.at((t0 + h).min(end))?;
        let n = (h / sub_dt).ceil().max(8.0) as usize;
        Ok(integrate_step(t0, h, n, |t| {
            let (b, mut d) = coeffs.generator(t.min(end)).expect("range checked");
            d[1][1] += extra_dpp;
            (b, d, [0.0, drive.mean_force(t)])
        }))
    })
}
