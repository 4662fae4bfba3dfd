//! The constant-coefficient family: master equation (`lambda = 0`) and the
//! momentum (`+1`) and coordinate (`-1`) coupling pre-master equations.

use crate::bath::{BathKind, BathSpec, OscillatorSpec, ThermalSpec};
use crate::error::{Error, Result};
use crate::evolve::{run_steps, EvolutionConfig, LinearStep, Trajectory};
use crate::linalg::{apply, expm2, LinearFlow, Mat2};
use crate::quadrature::GaussRule;
use crate::response::DriveSpec;
use crate::wigner::WignerGrid;

/// `(N + 1/2) hbar w0`, finite as `w0 -> 0` (where it tends to `kT`).
fn thermal_energy(osc: &OscillatorSpec, th: &ThermalSpec) -> f64 {
    let x = osc.hbar * osc.omega0();
    if x == 0.0 {
        return th.kt;
    }
    0.5 * x * crate::bath::thermal_coth(x, th.kt)
}

/// Drift matrix `B` and diffusion `D` of
/// `dW/dt = -div(B z W) + sum D_ij d_i d_j W` for the given `lambda`,
/// including the momentum diffusion `g/2` of a delta-correlated force.
pub fn lambda_generator(
    lambda: i32,
    osc: &OscillatorSpec,
    th: &ThermalSpec,
    bath: &BathSpec,
    drive: &DriveSpec,
) -> Result<(Mat2, Mat2)> {
    osc.validate()?;
    th.validate()?;
    bath.validate()?;
    if bath.kind != BathKind::Ohmic {
        return Err(Error::invalid(
            "the master and pre-master equations are defined for the Ohmic bath",
        ));
    }
    if !(-1..=1).contains(&lambda) {
        return Err(Error::invalid(format!("lambda must be -1, 0 or 1, got {lambda}")));
    }
    let m = osc.mass;
    let g = bath.gamma;
    let l = lambda as f64;
    let w0 = osc.omega0();
    let e = thermal_energy(osc, th);
    let d_qq = if lambda == -1 || g == 0.0 {
        0.0
    } else if w0 == 0.0 {
        return Err(Error::invalid(
            "coordinate diffusion diverges for the free particle unless lambda = -1",
        ));
    } else {
        g * (1.0 + l) * e / (2.0 * m * w0 * w0)
    };
    let mut d_pp = g * (1.0 - l) * m * e / 2.0;
    match drive {
        DriveSpec::None | DriveSpec::Deterministic { .. } => {}
        DriveSpec::DeltaCorrelatedRandom { g } => d_pp += 0.5 * g,
        DriveSpec::CorrelatedRandom { .. } => {
            return Err(Error::invalid(
                "a correlated random force has no local-in-time phase-space equation",
            ))
        }
    }
    let b = [
        [-0.5 * g * (1.0 + l), 1.0 / m],
        [-osc.spring_constant, -0.5 * g * (1.0 - l)],
    ];
    Ok((b, [[d_qq, 0.0], [0.0, d_pp]]))
}

/// Evolve `w0` under the `lambda` equation with a possible drive.
///
/// Each step applies the exact transition of the linear equation over the
/// step, so the only discretization error is the phase-space interpolation;
/// a time-dependent force enters through the affine offset.
pub fn evolve_lambda(
    w0: &WignerGrid,
    cfg: &EvolutionConfig,
    osc: &OscillatorSpec,
    th: &ThermalSpec,
    bath: &BathSpec,
) -> Result<Trajectory> {
    cfg.validate()?;
    let (b, d) = lambda_generator(cfg.lambda, osc, th, bath, &cfg.drive)?;
    let dt = cfg.resolved_dt(osc, bath);
    let (n, h) = cfg.step_count(dt);
    let flow = LinearFlow::new(&b, [0.0, 0.0], &d, if n == 0 { dt } else { h });
    let rule = GaussRule::new(8);
    // exp(B (h - s)) at the quadrature nodes, for the force offset
    let nodes: Vec<(f64, f64, Mat2)> = rule
        .points(0.0, h)
        .map(|(s, wgt)| {
            let bh = [[b[0][0] * (h - s), b[0][1] * (h - s)], [b[1][0] * (h - s), b[1][1] * (h - s)]];
            (s, wgt, expm2(&bh))
        })
        .collect();
    let drive = cfg.drive.clone();
    run_steps(w0.clone(), cfg, dt, move |t0, _| {
        let mut offset = [0.0, 0.0];
        if let DriveSpec::Deterministic { force } = &drive {
            for (s, wgt, e) in &nodes {
                let v = apply(e, [0.0, force.eval(t0 + s)]);
                offset[0] += wgt * v[0];
                offset[1] += wgt * v[1];
            }
        }
        Ok(LinearStep {
            transfer: flow.transfer,
            offset,
            covariance: flow.covariance,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::response::Force;
    use crate::wigner::{equilibrium_wigner, gaussian_wigner, CatSpec, GridSpec};

    fn params() -> (OscillatorSpec, ThermalSpec, BathSpec) {
        (OscillatorSpec::default(), ThermalSpec::new(2.0), BathSpec::ohmic(0.2, 1.0))
    }

    #[test]
    fn equilibrium_is_stationary_for_every_lambda() {
        let (osc, th, bath) = params();
        let grid = GridSpec::default_for(&CatSpec::new(0.0, 1.0), &osc, Some(&th)).unwrap();
        let grid = GridSpec::symmetric(grid.q.max(), grid.p.max(), 96, 96).unwrap();
        let w0 = equilibrium_wigner(&osc, &th, &grid).unwrap();
        for lambda in [-1, 0, 1] {
            let cfg = EvolutionConfig::new(lambda, 5.0).with_dt(0.05);
            let tr = evolve_lambda(&w0, &cfg, &osc, &th, &bath).unwrap();
            let err = tr.final_grid().max_difference(&w0).unwrap() / w0.max_abs();
            assert!(err < 1e-6, "lambda {lambda}: {err}");
        }
    }

    #[test]
    fn generator_coefficients() {
        let (osc, th, bath) = params();
        let (b, d) = lambda_generator(-1, &osc, &th, &bath, &DriveSpec::None).unwrap();
        assert_eq!(b, [[0.0, 1.0], [-1.0, -0.2]]);
        let e = 0.5 * crate::bath::coth(0.25);
        assert!((d[1][1] - 0.2 * e).abs() < 1e-14);
        assert_eq!(d[0][0], 0.0);
        let (b0, d0) = lambda_generator(0, &osc, &th, &bath, &DriveSpec::DeltaCorrelatedRandom { g: 0.4 }).unwrap();
        assert_eq!(b0[0][0], -0.1);
        assert!((d0[0][0] - 0.1 * e).abs() < 1e-14);
        assert!((d0[1][1] - 0.1 * e - 0.2).abs() < 1e-14);
        let free = OscillatorSpec::free_particle(1.0, 1.0);
        assert!(lambda_generator(0, &free, &th, &bath, &DriveSpec::None).is_err());
        assert!(lambda_generator(-1, &free, &th, &bath, &DriveSpec::None).is_ok());
    }

    #[test]
    fn constant_force_shifts_the_mean() {
        // undamped, unit oscillator with constant force f: q(t) = f (1 - cos t)
        let osc = OscillatorSpec::default();
        let th = ThermalSpec::new(1.0);
        let bath = BathSpec::ohmic(0.0, 1.0);
        let grid = GridSpec::symmetric(8.0, 8.0, 128, 128).unwrap();
        let w0 = gaussian_wigner(0.0, 0.0, 1.0, &osc, &grid).unwrap();
        let mut cfg = EvolutionConfig::new(0, 1.0).with_dt(0.1);
        cfg.drive = DriveSpec::Deterministic { force: Force::Constant { value: 0.5 } };
        let tr = evolve_lambda(&w0, &cfg, &osc, &th, &bath).unwrap();
        let m = tr.moments.last().unwrap();
        assert!((m.mean_q - 0.5 * (1.0 - 1f64.cos())).abs() < 1e-7, "{}", m.mean_q);
        assert!((m.mean_p - 0.5 * 1f64.sin()).abs() < 1e-7, "{}", m.mean_p);
    }
}
