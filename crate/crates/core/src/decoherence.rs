//! Decoherence of a two-packet superposition: closed-form attenuation
//! factors, extraction of the attenuation from coordinate densities, and
//! the fringe contrast of the momentum distribution.
//!
//! The attenuation `a(t)` is the coefficient of the interference term of
//! `P(x, t)` divided by twice the geometric mean of the two packet terms,
//! all evaluated at the midpoint between the packets.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bath::{BathSpec, OscillatorSpec, ThermalSpec};
use crate::error::{Error, Result};
use crate::evolve::{cat_density, packet_density, CoordinateMap};
use crate::response::{
    commutator_x, driven_mean, driven_msd, fluctuation_moments, green_initial_value, mean_square_displacement,
    DriveSpec, GreenTable, MomentOptions, TimeGrid,
};
use crate::wigner::{CatSpec, WignerGrid};

/// Which initial condition and environment a series describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Pure cat released into a hot bath.
    ZeroTInitial,
    /// Cat whose packets carry thermal momentum spread.
    ThermalInitial,
    /// Cat prepared from the coupled equilibrium state (free particle).
    Entangled,
    /// Cat subject to a classical random force.
    Driven,
}

impl Regime {
    /// Leading exponent of `-ln a` at short times.
    pub fn short_time_exponent(self) -> f64 {
        match self {
            Regime::ZeroTInitial | Regime::Driven => 3.0,
            Regime::ThermalInitial | Regime::Entangled => 2.0,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::ZeroTInitial => "zero-t-initial",
            Regime::ThermalInitial => "thermal-initial",
            Regime::Entangled => "entangled",
            Regime::Driven => "driven",
        })
    }
}

/// A closed-form attenuation with a flag telling whether the inputs lie in
/// the regime where the formula was derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub a: f64,
    pub in_regime: bool,
}

fn short_time(bath: &BathSpec, osc: &OscillatorSpec, t: f64) -> bool {
    bath.gamma * t <= 0.1 && osc.omega0() * t <= 0.1
}

fn high_temperature(bath: &BathSpec, osc: &OscillatorSpec, th: &ThermalSpec) -> bool {
    th.kt >= 10.0 * osc.hbar * osc.omega0().max(bath.gamma)
}

fn check_inputs(osc: &OscillatorSpec, th: &ThermalSpec, cat: &CatSpec, t: f64) -> Result<()> {
    osc.validate()?;
    th.validate()?;
    cat.validate()?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("time must be >= 0, got {t}")));
    }
    Ok(())
}

/// `exp{-zeta kT d^2 t^3 / (12 m^2 sigma^4 + 3 hbar^2 t^2)}` for a pure cat in
/// an Ohmic bath, valid at high temperature and `gamma t, omega0 t << 1`,
/// and while the thermal broadening `2 zeta kT t^3 / 3m^2` of each packet
/// stays below `sigma^2 / 10`.
pub fn closed_form_zero_t_initial(
    bath: &BathSpec,
    osc: &OscillatorSpec,
    th: &ThermalSpec,
    cat: &CatSpec,
    t: f64,
) -> Result<ClosedForm> {
    check_inputs(osc, th, cat, t)?;
    let (m, h, s) = (osc.mass, osc.hbar, cat.sigma);
    let num = bath.friction_constant() * th.kt * cat.d * cat.d * t.powi(3);
    let den = 12.0 * m * m * s.powi(4) + 3.0 * h * h * t * t;
    Ok(ClosedForm {
        a: if num == 0.0 { 1.0 } else { (-num / den).exp() },
        in_regime: short_time(bath, osc, t)
            && high_temperature(bath, osc, th)
            && 2.0 * bath.friction_constant() * th.kt * t.powi(3) / (3.0 * m * m) <= 0.1 * s * s,
    })
}

/// `exp{-(kT/m) t^2 d^2 / [8 (sigma^4 + sigma^2 (kT/m) t^2 + (hbar^2/4m^2) t^2)]}`
/// for packets with thermal momentum spread, valid for `gamma t << 1`.
pub fn closed_form_thermal_initial(
    bath: &BathSpec,
    osc: &OscillatorSpec,
    th: &ThermalSpec,
    cat: &CatSpec,
    t: f64,
) -> Result<ClosedForm> {
    check_inputs(osc, th, cat, t)?;
    let (m, h, s) = (osc.mass, osc.hbar, cat.sigma);
    let v2 = th.kt / m;
    let num = v2 * t * t * cat.d * cat.d;
    let den = 8.0 * (s.powi(4) + s * s * v2 * t * t + h * h * t * t / (4.0 * m * m));
    Ok(ClosedForm {
        a: if num == 0.0 { 1.0 } else { (-num / den).exp() },
        in_regime: bath.gamma * t <= 0.1,
    })
}

/// `exp{-s(t) d^2 / (8 sigma^2 w^2(t))}` with `w^2 = sigma^2 + s + c^2/4sigma^2`,
/// for a free particle whose cat is prepared from the coupled equilibrium;
/// `s` is the stationary mean-square displacement and `[x(t), x(0)] = i c(t)`.
pub fn closed_form_entangled(
    bath: &BathSpec,
    osc: &OscillatorSpec,
    th: &ThermalSpec,
    cat: &CatSpec,
    t: f64,
) -> Result<ClosedForm> {
    check_inputs(osc, th, cat, t)?;
    if osc.spring_constant != 0.0 {
        return Err(Error::invalid("the entangled-state attenuation is defined for the free particle (K = 0)"));
    }
    if t == 0.0 {
        return Ok(ClosedForm { a: 1.0, in_regime: true });
    }
    let s = mean_square_displacement(bath, osc, th, t)?;
    let c = commutator_x(bath, osc, t)?;
    let s2 = cat.sigma * cat.sigma;
    let w2 = s2 + s + c * c / (4.0 * s2);
    Ok(ClosedForm {
        a: (-s * cat.d * cat.d / (8.0 * s2 * w2)).exp(),
        in_regime: true,
    })
}

/// Displacement variance added by the random part of a drive. A
/// deterministic force moves both packets together and adds none.
pub fn drive_variance(drive: &DriveSpec, green: &GreenTable, t: f64) -> Result<f64> {
    match drive {
        DriveSpec::None | DriveSpec::Deterministic { .. } => Ok(0.0),
        _ => driven_msd(drive, green, t),
    }
}

/// `exp{-s_d d^2 / (8 sigma^2 (sigma^2 + s_d))}` with `s_d` the displacement
/// variance produced by the drive.
pub fn closed_form_driven(drive: &DriveSpec, green: &GreenTable, cat: &CatSpec, t: f64) -> Result<ClosedForm> {
    cat.validate()?;
    let sd = drive_variance(drive, green, t)?;
    let s2 = cat.sigma * cat.sigma;
    Ok(ClosedForm {
        a: (-sd * cat.d * cat.d / (8.0 * s2 * (s2 + sd))).exp(),
        in_regime: true,
    })
}

/// `-ln a ~ coefficient * t^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub coefficient: f64,
}

impl PowerLawFit {
    /// Time at which the fitted law reaches `-ln a = 1`.
    pub fn tau(&self) -> f64 {
        self.coefficient.powf(-1.0 / self.exponent)
    }

    fn points(times: &[f64], a: &[f64]) -> Vec<(f64, f64)> {
        times
            .iter()
            .zip(a)
            .filter_map(|(&t, &a)| {
                let b = -a.ln();
                (t > 0.0 && b > 0.0 && b.is_finite()).then_some((t, b))
            })
            .collect()
    }

    /// Least-squares line through `(ln t, ln(-ln a))` over samples with `a < 1`.
    pub fn free(times: &[f64], a: &[f64]) -> Option<Self> {
        let pts = Self::points(times, a);
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        for &(t, b) in &pts {
            let (x, y) = (t.ln(), b.ln());
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        let den = n * sxx - sx * sx;
        if den.abs() < 1e-300 {
            return None;
        }
        let exponent = (n * sxy - sx * sy) / den;
        let intercept = (sy - exponent * sx) / n;
        Some(Self {
            exponent,
            coefficient: intercept.exp(),
        })
    }

    /// Least-squares coefficient of `-ln a = c t^exponent` with the exponent fixed.
    pub fn with_exponent(times: &[f64], a: &[f64], exponent: f64) -> Option<Self> {
        let pts = Self::points(times, a);
        let (num, den) = pts.iter().fold((0.0, 0.0), |(n, d), &(t, b)| {
            let x = t.powf(exponent);
            (n + x * b, d + x * x)
        });
        (den > 0.0).then(|| Self {
            exponent,
            coefficient: num / den,
        })
    }
}

/// Attenuation samples with the derived decoherence times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttenuationSeries {
    pub times: Vec<f64>,
    pub a: Vec<f64>,
    pub regime: Regime,
    /// First time `a` falls below `1/e` (log-linear interpolation).
    pub e_fold_time: Option<f64>,
    /// Power law fitted to the samples with `1/e <= a < 1`.
    pub short_time_fit: Option<PowerLawFit>,
    /// Same samples with the regime's leading exponent imposed.
    pub fixed_exponent_fit: Option<PowerLawFit>,
}

impl AttenuationSeries {
    pub fn new(times: Vec<f64>, a: Vec<f64>, regime: Regime) -> Result<Self> {
        if times.len() != a.len() {
            return Err(Error::invalid("attenuation series needs one value per time"));
        }
        let threshold = (-1.0f64).exp();
        let mut e_fold_time = None;
        for k in 1..a.len() {
            if a[k] < threshold && a[k - 1] >= threshold {
                let (l0, l1) = (a[k - 1].ln(), a[k].max(1e-300).ln());
                let f = (-1.0 - l0) / (l1 - l0);
                e_fold_time = Some(times[k - 1] + f * (times[k] - times[k - 1]));
                break;
            }
        }
        let (ts, vs): (Vec<f64>, Vec<f64>) = times
            .iter()
            .zip(&a)
            .filter(|(_, &v)| v >= threshold)
            .map(|(&t, &v)| (t, v))
            .unzip();
        Ok(Self {
            short_time_fit: PowerLawFit::free(&ts, &vs),
            fixed_exponent_fit: PowerLawFit::with_exponent(&ts, &vs, regime.short_time_exponent()),
            times,
            a,
            regime,
            e_fold_time,
        })
    }

    /// Decoherence time from the fixed-exponent fit.
    pub fn tau_d(&self) -> Option<f64> {
        self.fixed_exponent_fit.map(|f| f.tau())
    }

    /// `a(0) = 1` and `a <= 1` to within `tol`; one message per violation.
    pub fn invariant_violations(&self, tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        if let (Some(&t0), Some(&a0)) = (self.times.first(), self.a.first()) {
            if t0 == 0.0 && (a0 - 1.0).abs() > tol {
                out.push(format!("a(0) = {a0} differs from 1 by more than {tol}"));
            }
        }
        for (t, a) in self.times.iter().zip(&self.a) {
            if *a > 1.0 + tol {
                out.push(format!("a({t}) = {a} exceeds 1 + {tol}"));
            }
        }
        out
    }
}

/// Centres and common width of the two packets, taken from their separately
/// evolved densities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketEnvelope {
    pub centers: [f64; 2],
    pub width: f64,
}

impl PacketEnvelope {
    pub fn from_packets(xs: &[f64], plus: &[f64], minus: &[f64]) -> Result<Self> {
        let stats = |p: &[f64]| -> Result<(f64, f64)> {
            if p.len() != xs.len() || xs.len() < 3 {
                return Err(Error::invalid("packet density must be sampled on the coordinate grid"));
            }
            let (mut n, mut m1, mut m2) = (0.0, 0.0, 0.0);
            for k in 0..xs.len() - 1 {
                let h = 0.5 * (xs[k + 1] - xs[k]);
                for j in [k, k + 1] {
                    n += h * p[j];
                    m1 += h * p[j] * xs[j];
                    m2 += h * p[j] * xs[j] * xs[j];
                }
            }
            if !(n > 0.0) {
                return Err(Error::invalid("packet density has no mass on the grid"));
            }
            let mean = m1 / n;
            Ok((mean, (m2 / n - mean * mean).max(0.0)))
        };
        let (mp, vp) = stats(plus)?;
        let (mm, vm) = stats(minus)?;
        Ok(Self {
            centers: [mp, mm],
            width: (0.5 * (vp + vm)).sqrt(),
        })
    }
}

/// Result of fitting `A1 g(x - mu1) + A2 g(x - mu2) + g(x - mid) (c cos kx + s sin kx)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    pub a: f64,
    pub wavenumber: f64,
    pub amplitudes: [f64; 2],
    pub fringe_amplitude: f64,
    /// Root-mean-square residual relative to the density maximum.
    pub residual: f64,
}

struct FringeModel<'a> {
    xs: &'a [f64],
    y: DVector<f64>,
    env: PacketEnvelope,
}

impl FringeModel<'_> {
    fn gauss(&self, x: f64) -> f64 {
        (-x * x / (2.0 * self.env.width * self.env.width)).exp()
    }

    /// Least-squares coefficients and residual norm at wavenumber `k`.
    fn solve(&self, k: f64) -> Option<(DVector<f64>, f64)> {
        let [m1, m2] = self.env.centers;
        let mid = 0.5 * (m1 + m2);
        let cols = if k * self.env.width < 1e-6 { 3 } else { 4 };
        let a = DMatrix::from_fn(self.xs.len(), cols, |i, j| {
            let x = self.xs[i];
            match j {
                0 => self.gauss(x - m1),
                1 => self.gauss(x - m2),
                2 => self.gauss(x - mid) * (k * (x - mid)).cos(),
                _ => self.gauss(x - mid) * (k * (x - mid)).sin(),
            }
        });
        let coef = a.clone().svd(true, true).solve(&self.y, 1e-13).ok()?;
        let r = (&a * &coef - &self.y).norm();
        Some((coef, r))
    }
}

/// Fit the three-term model to one density with the packet envelope fixed.
pub fn fit_fringes(xs: &[f64], density: &[f64], env: &PacketEnvelope, t: f64) -> Result<FringeFit> {
    if xs.len() != density.len() || xs.len() < 8 {
        return Err(Error::invalid("density must be sampled at the given coordinates (at least 8)"));
    }
    let s = env.width;
    if !(s > 0.0) {
        return Err(Error::FitFailure { t, detail: "packet width is zero".into() });
    }
    let model = FringeModel { xs, y: DVector::from_column_slice(density), env: *env };
    let dx = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
    // fringes need at least four samples per period
    let k_max = std::f64::consts::PI / (2.0 * dx);
    let dk = 0.2 / s;
    let n_scan = (k_max / dk).ceil() as usize;
    let mut best = (0.0, f64::INFINITY);
    for i in 0..=n_scan {
        let k = i as f64 * dk;
        if let Some((_, r)) = model.solve(k) {
            if r < best.1 {
                best = (k, r);
            }
        }
    }
    // golden-section refinement around the best scanned wavenumber
    let (mut lo, mut hi) = ((best.0 - dk).max(0.0), best.0 + dk);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let resid = |k: f64| model.solve(k).map_or(f64::INFINITY, |(_, r)| r);
    let (mut c, mut d) = (hi - g * (hi - lo), lo + g * (hi - lo));
    let (mut fc, mut fd) = (resid(c), resid(d));
    while hi - lo > 1e-9 / s {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = resid(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = resid(d);
        }
    }
    let mut k = 0.5 * (lo + hi);
    if resid(k) > best.1 {
        k = best.0;
    }
    let (coef, r) = model.solve(k).ok_or_else(|| Error::FitFailure { t, detail: "singular least-squares system".into() })?;
    let sep = (env.centers[0] - env.centers[1]).abs();
    if sep < s && k * s < 1.0 {
        return Err(Error::PacketsMerged { t });
    }
    let (a1, a2) = (coef[0], coef[1]);
    if !(a1 > 0.0 && a2 > 0.0) {
        return Err(Error::FitFailure { t, detail: format!("packet amplitudes {a1:e}, {a2:e} not positive") });
    }
    let fringe = if coef.len() == 4 { coef[2].hypot(coef[3]) } else { coef[2].abs() };
    let mid_packets = (-sep * sep / (8.0 * s * s)).exp();
    let peak = density.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(FringeFit {
        a: fringe / (2.0 * (a1 * a2).sqrt() * mid_packets),
        wavenumber: k,
        amplitudes: [a1, a2],
        fringe_amplitude: fringe,
        residual: r / (xs.len() as f64).sqrt() / peak.max(1e-300),
    })
}

/// Attenuation series from densities `P(x; t_k)` sampled at `xs`, with the
/// packet envelopes from separately evolved single packets.
pub fn attenuation_from_density(
    xs: &[f64],
    times: &[f64],
    densities: &[Vec<f64>],
    envelopes: &[PacketEnvelope],
    regime: Regime,
) -> Result<AttenuationSeries> {
    if densities.len() != times.len() || envelopes.len() != times.len() {
        return Err(Error::invalid("need one density and one envelope per time"));
    }
    let mut a = Vec::with_capacity(times.len());
    for ((t, p), env) in times.iter().zip(densities).zip(envelopes) {
        a.push(fit_fringes(xs, p, env, *t)?.a);
    }
    AttenuationSeries::new(times.to_vec(), a, regime)
}

/// Physical setup of a decoherence run.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceSetup {
    pub regime: Regime,
    pub bath: BathSpec,
    pub osc: OscillatorSpec,
    pub th: ThermalSpec,
    pub cat: CatSpec,
    pub drive: DriveSpec,
    pub moments: MomentOptions,
}

impl DecoherenceSetup {
    fn kick_variance(&self) -> f64 {
        match self.regime {
            Regime::ThermalInitial => self.osc.mass * self.th.kt,
            _ => 0.0,
        }
    }

    fn tables(&self, t_max: f64) -> Result<(GreenTable, crate::response::FluctuationMoments)> {
        let grid = TimeGrid::covering(t_max, 0.01)?;
        let green = green_initial_value(&self.bath, &self.osc, grid)?;
        let moments = fluctuation_moments(&self.bath, &self.osc, &self.th, grid, &self.moments)?;
        Ok((green, moments))
    }

    /// Closed-form attenuation at each time.
    pub fn closed_form(&self, times: &[f64]) -> Result<Vec<ClosedForm>> {
        let (b, o, th, c) = (&self.bath, &self.osc, &self.th, &self.cat);
        match self.regime {
            Regime::ZeroTInitial => times.iter().map(|&t| closed_form_zero_t_initial(b, o, th, c, t)).collect(),
            Regime::ThermalInitial => times.iter().map(|&t| closed_form_thermal_initial(b, o, th, c, t)).collect(),
            Regime::Entangled => times.iter().map(|&t| closed_form_entangled(b, o, th, c, t)).collect(),
            Regime::Driven => {
                let t_max = times.iter().cloned().fold(0.0, f64::max);
                let green = green_initial_value(b, o, TimeGrid::covering(t_max, 0.01)?)?;
                times.iter().map(|&t| closed_form_driven(&self.drive, &green, c, t)).collect()
            }
        }
    }

    /// Coordinates covering both packets at every time with enough samples
    /// for the interference fringes.
    pub fn default_coordinates(&self, times: &[f64], points: usize) -> Result<Vec<f64>> {
        let t_max = times.iter().cloned().fold(0.0, f64::max);
        let (green, moments) = self.tables(t_max)?;
        let hbar = self.osc.hbar;
        let mut half = 0.0f64;
        for &t in times {
            let map = self.map(&green, &moments, t)?;
            for sign in [1.0, -1.0] {
                let g = self.cat.packet(sign, hbar, self.kick_variance());
                let c = &g.cov;
                let var = map.u * map.u * c[0][0] + 2.0 * map.u * map.v * c[0][1] + map.v * map.v * c[1][1] + map.variance;
                let mean = map.u * g.mean[0] + map.v * g.mean[1] + map.shift;
                half = half.max(mean.abs() + 8.0 * var.sqrt());
            }
        }
        let n = points.max(16);
        Ok((0..n).map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64).collect())
    }

    fn map(&self, green: &GreenTable, moments: &crate::response::FluctuationMoments, t: f64) -> Result<CoordinateMap> {
        let mut map = CoordinateMap::from_tables(&self.osc, green, moments, t)?;
        if self.regime == Regime::Driven {
            map.variance += drive_variance(&self.drive, green, t)?;
            map.shift += driven_mean(&self.drive, green, t)?;
        }
        Ok(map)
    }

    /// Simulated attenuation from the characteristic-function densities of
    /// the cat and of its two packets, evolved separately.
    pub fn simulate(&self, times: &[f64], xs: &[f64]) -> Result<AttenuationSeries> {
        if self.regime == Regime::Entangled {
            return Err(Error::invalid(
                "the entangled regime has no initial-value simulation; use the closed form",
            ));
        }
        let t_max = times.iter().cloned().fold(0.0, f64::max);
        let (green, moments) = self.tables(t_max)?;
        let hbar = self.osc.hbar;
        let kick = self.kick_variance();
        let mut densities = Vec::with_capacity(times.len());
        let mut envelopes = Vec::with_capacity(times.len());
        for &t in times {
            let map = self.map(&green, &moments, t)?;
            densities.push(cat_density(&self.cat, kick, &map, hbar, xs)?);
            let plus = packet_density(&self.cat.packet(1.0, hbar, kick), &map, hbar, xs)?;
            let minus = packet_density(&self.cat.packet(-1.0, hbar, kick), &map, hbar, xs)?;
            envelopes.push(PacketEnvelope::from_packets(xs, &plus, &minus)?);
        }
        attenuation_from_density(xs, times, &densities, &envelopes, self.regime)
    }
}

/// Fringe contrast of the momentum distribution over a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumContrast {
    pub times: Vec<f64>,
    /// `|int P(p) e^{i p d/hbar} dp| / int P(p) dp`, relative to the first frame.
    pub contrast: Vec<f64>,
}

/// Track the `cos(p d / hbar)` modulation of the momentum marginal.
pub fn momentum_space_diagnostic(frames: &[(f64, WignerGrid)], cat: &CatSpec) -> Result<MomentumContrast> {
    cat.validate()?;
    let Some((_, first)) = frames.first() else {
        return Err(Error::invalid("no frames to analyse"));
    };
    let hbar = first.meta.oscillator.hbar;
    if cat.d > 0.0 {
        let period = 2.0 * std::f64::consts::PI * hbar / cat.d;
        if first.p.step * crate::wigner::FRINGE_SAMPLES > period {
            return Err(Error::FringeResolution(format!(
                "p step {:.4e} exceeds {} samples per fringe period {:.4e}",
                first.p.step,
                crate::wigner::FRINGE_SAMPLES,
                period
            )));
        }
    }
    let raw = |w: &WignerGrid| -> f64 {
        let marg = w.marginal_p();
        let (mut re, mut im, mut n) = (0.0, 0.0, 0.0);
        for (j, v) in marg.iter().enumerate() {
            let (s, c) = (w.p.value(j) * cat.d / hbar).sin_cos();
            re += v * c;
            im += v * s;
            n += v;
        }
        if n == 0.0 {
            0.0
        } else {
            re.hypot(im) / n
        }
    };
    let c0 = raw(first);
    if !(c0 > 0.0) {
        return Err(Error::FringeResolution("initial momentum distribution shows no fringes".into()));
    }
    Ok(MomentumContrast {
        times: frames.iter().map(|(t, _)| *t).collect(),
        contrast: frames.iter().map(|(_, w)| raw(w) / c0).collect(),
    })
}
