//! Green functions, fluctuation-dissipation quadratures, fluctuation
//! moments and driven displacements.

pub mod drive;
pub mod green;
pub mod moments;
pub mod spectral;

pub use drive::{delta_driven_msd_ohmic, driven_mean, driven_msd, DriveSpec, Force};
pub use green::{green_initial_value, green_stationary, GreenSample, GreenTable, TimeGrid};
pub use moments::{fluctuation_moments, FluctuationMoments, MomentOptions};
pub use spectral::{commutator_x, mean_square_displacement, position_autocorrelation};

use crate::bath::{BathSpec, OscillatorSpec, ThermalSpec};
use crate::error::Result;

/// Correlation functions of the stationary process sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationFunctions {
    pub times: Vec<f64>,
    /// `C0(t)`; empty for the free particle, where it diverges.
    pub c0: Vec<f64>,
    pub s: Vec<f64>,
    pub comm: Vec<f64>,
    /// Driven mean-square displacement; zeros when no drive is given.
    pub sd: Vec<f64>,
}

/// Evaluate all stationary correlation functions at `times`.
pub fn correlation_functions(
    bath: &BathSpec,
    osc: &OscillatorSpec,
    th: &ThermalSpec,
    times: &[f64],
    drive: Option<(&DriveSpec, &GreenTable)>,
) -> Result<CorrelationFunctions> {
    let c0 = if osc.spring_constant > 0.0 {
        times
            .iter()
            .map(|&t| position_autocorrelation(bath, osc, th, t))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let s = times
        .iter()
        .map(|&t| mean_square_displacement(bath, osc, th, t))
        .collect::<Result<Vec<_>>>()?;
    let comm = times
        .iter()
        .map(|&t| commutator_x(bath, osc, t))
        .collect::<Result<Vec<_>>>()?;
    let sd = match drive {
        Some((d, g)) => times.iter().map(|&t| driven_msd(d, g, t)).collect::<Result<Vec<_>>>()?,
        None => vec![0.0; times.len()],
    };
    Ok(CorrelationFunctions {
        times: times.to_vec(),
        c0,
        s,
        comm,
        sd,
    })
}
