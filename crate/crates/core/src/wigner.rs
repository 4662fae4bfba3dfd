//! Wigner distributions sampled on a uniform phase-space grid.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::{thermal_coth, OscillatorSpec, ThermalSpec};
use crate::error::{Error, Result};
use crate::linalg::{det, inverse, Mat2};
use crate::quadrature::trapezoid;

/// Default number of samples per axis.
pub const DEFAULT_POINTS: usize = 256;
/// Coverage demanded of every constructed state, in standard deviations.
pub const COVERAGE_SIGMAS: f64 = 6.0;
/// Samples required per fringe period.
pub const FRINGE_SAMPLES: f64 = 8.0;
const NORM_TOLERANCE: f64 = 1e-6;

/// Uniform axis `min + i*step`, `i = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub step: f64,
    pub len: usize,
}

impl Axis {
    pub fn new(min: f64, step: f64, len: usize) -> Result<Self> {
        if !(step > 0.0 && step.is_finite() && min.is_finite()) || len < 16 {
            return Err(Error::invalid(format!(
                "axis needs step > 0 and at least 16 points (min {min}, step {step}, len {len})"
            )));
        }
        Ok(Self { min, step, len })
    }

    /// Axis spanning `[-half, half]` with `len` points.
    pub fn symmetric(half: f64, len: usize) -> Result<Self> {
        if !(half > 0.0) || len < 2 {
            return Err(Error::invalid(format!("bad symmetric axis: half-extent {half}, {len} points")));
        }
        Self::new(-half, 2.0 * half / (len - 1) as f64, len)
    }

    #[inline]
    pub fn value(&self, i: usize) -> f64 {
        self.min + i as f64 * self.step
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.value(i)).collect()
    }

    pub fn max(&self) -> f64 {
        self.value(self.len - 1)
    }

    /// Fractional index of coordinate `x`.
    #[inline]
    pub fn position(&self, x: f64) -> f64 {
        (x - self.min) / self.step
    }

    fn covers(&self, lo: f64, hi: f64) -> bool {
        let slack = 1e-9 * self.step;
        self.min <= lo + slack && self.max() >= hi - slack
    }
}

/// Phase-space sampling: coordinate and momentum axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub q: Axis,
    pub p: Axis,
}

impl GridSpec {
    pub fn symmetric(q_half: f64, p_half: f64, nq: usize, np: usize) -> Result<Self> {
        Ok(Self {
            q: Axis::symmetric(q_half, nq)?,
            p: Axis::symmetric(p_half, np)?,
        })
    }

    /// Default grid for a cat (or single packet with `d = 0`): covers both
    /// packets, and the thermal spread when a bath temperature and a
    /// confining potential are given.
    pub fn default_for(cat: &CatSpec, osc: &OscillatorSpec, th: Option<&ThermalSpec>) -> Result<Self> {
        cat.validate()?;
        let s = COVERAGE_SIGMAS;
        let mut q_half = (s * cat.sigma).max(0.5 * cat.d + s * cat.sigma);
        let mut p_half = s * osc.hbar / (2.0 * cat.sigma);
        if let (Some(th), true) = (th, osc.spring_constant > 0.0) {
            let cov = equilibrium_covariance(osc, th)?;
            q_half = q_half.max(s * cov[0][0].sqrt());
            p_half = p_half.max(s * cov[1][1].sqrt());
        }
        Self::symmetric(q_half, p_half, DEFAULT_POINTS, DEFAULT_POINTS)
    }

    pub fn cell_area(&self) -> f64 {
        self.q.step * self.p.step
    }
}

/// Physical parameters recorded with a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WignerMeta {
    pub oscillator: OscillatorSpec,
    pub thermal: Option<ThermalSpec>,
}

/// Real Wigner function samples, `values[i * p.len + j] = W(q_i, p_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub q: Axis,
    pub p: Axis,
    pub values: Vec<f64>,
    pub meta: WignerMeta,
}

/// First and raw second moments of a phase-space density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseMoments {
    pub norm: f64,
    pub mean_q: f64,
    pub mean_p: f64,
    pub q2: f64,
    pub p2: f64,
    /// Symmetrized `<qp>`; for a Wigner function this is the plain phase-space average.
    pub qp: f64,
}

impl PhaseMoments {
    /// Central covariance in `(q, p)` ordering.
    pub fn covariance(&self) -> Mat2 {
        let cqp = self.qp - self.mean_q * self.mean_p;
        [
            [self.q2 - self.mean_q * self.mean_q, cqp],
            [cqp, self.p2 - self.mean_p * self.mean_p],
        ]
    }

    /// `<dq^2><dp^2> - <dq dp>^2`, bounded below by `hbar^2/4` for physical states.
    pub fn uncertainty_determinant(&self) -> f64 {
        det(&self.covariance())
    }
}

impl WignerGrid {
    pub fn zeros(grid: &GridSpec, meta: WignerMeta) -> Self {
        Self {
            q: grid.q,
            p: grid.p,
            values: vec![0.0; grid.q.len * grid.p.len],
            meta,
        }
    }

    /// Sample `f(q, p)` on the grid, rows in parallel.
    pub fn from_fn<F: Fn(f64, f64) -> f64 + Sync>(grid: &GridSpec, meta: WignerMeta, f: F) -> Self {
        let mut w = Self::zeros(grid, meta);
        let (qa, pa) = (grid.q, grid.p);
        w.values.par_chunks_mut(pa.len).enumerate().for_each(|(i, row)| {
            let q = qa.value(i);
            for (j, v) in row.iter_mut().enumerate() {
                *v = f(q, pa.value(j));
            }
        });
        w
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec { q: self.q, p: self.p }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.p.len + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p.len..(i + 1) * self.p.len]
    }

    /// Trapezoidal `int int W dq dp`.
    pub fn norm(&self) -> f64 {
        trapezoid(&self.marginal_q(), self.q.step)
    }

    /// `P(q) = int W dp`.
    pub fn marginal_q(&self) -> Vec<f64> {
        self.values
            .par_chunks(self.p.len)
            .map(|row| trapezoid(row, self.p.step))
            .collect()
    }

    /// `P(p) = int W dq`.
    pub fn marginal_p(&self) -> Vec<f64> {
        let (nq, np) = (self.q.len, self.p.len);
        let mut col = vec![0.0; nq];
        (0..np)
            .map(|j| {
                for (i, c) in col.iter_mut().enumerate() {
                    *c = self.values[i * np + j];
                }
                trapezoid(&col, self.q.step)
            })
            .collect()
    }

    pub fn moments(&self) -> PhaseMoments {
        let (nq, np) = (self.q.len, self.p.len);
        let ps = self.p.values();
        // per-row p-integrals of W, pW, p^2 W
        let rows: Vec<[f64; 3]> = self
            .values
            .par_chunks(np)
            .map(|row| {
                let mut s = [0.0; 3];
                for (j, &w) in row.iter().enumerate() {
                    let f = if j == 0 || j == np - 1 { 0.5 } else { 1.0 };
                    let p = ps[j];
                    s[0] += f * w;
                    s[1] += f * w * p;
                    s[2] += f * w * p * p;
                }
                s
            })
            .collect();
        let mut acc = [0.0; 6];
        for (i, s) in rows.iter().enumerate() {
            let f = if i == 0 || i == nq - 1 { 0.5 } else { 1.0 };
            let q = self.q.value(i);
            acc[0] += f * s[0];
            acc[1] += f * q * s[0];
            acc[2] += f * s[1];
            acc[3] += f * q * q * s[0];
            acc[4] += f * s[2];
            acc[5] += f * q * s[1];
        }
        let a = self.q.step * self.p.step;
        let norm = acc[0] * a;
        PhaseMoments {
            norm,
            mean_q: acc[1] * a / norm,
            mean_p: acc[2] * a / norm,
            q2: acc[3] * a / norm,
            p2: acc[4] * a / norm,
            qp: acc[5] * a / norm,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |self - other|` over a shared grid.
    pub fn max_difference(&self, other: &WignerGrid) -> Result<f64> {
        if self.q != other.q || self.p != other.p {
            return Err(Error::invalid("grids differ"));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Largest `|W|` within `band` samples of the edge, relative to `max |W|`.
    pub fn edge_fraction(&self, band: usize) -> f64 {
        let (nq, np) = (self.q.len, self.p.len);
        let mut edge: f64 = 0.0;
        for i in 0..nq {
            for j in 0..np {
                if i < band || j < band || i + band >= nq || j + band >= np {
                    edge = edge.max(self.values[i * np + j].abs());
                }
            }
        }
        let peak = self.max_abs();
        if peak > 0.0 {
            edge / peak
        } else {
            0.0
        }
    }

    /// Write the grid as text: `#` header lines with the axes and physical
    /// parameters, then one comma-separated line of `W(q_i, p_j)` per `q_i`.
    pub fn write_dump(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        out.write_all(self.dump_string().as_bytes()).map_err(|e| Error::io(path, e))?;
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn dump_string(&self) -> String {
        let mut s = String::new();
        let o = &self.meta.oscillator;
        let _ = writeln!(s, "# wigner grid, q-index major, units: reduced (hbar and m explicit)");
        let _ = writeln!(s, "# q_min = {:.17e}", self.q.min);
        let _ = writeln!(s, "# q_step = {:.17e}", self.q.step);
        let _ = writeln!(s, "# q_len = {}", self.q.len);
        let _ = writeln!(s, "# p_min = {:.17e}", self.p.min);
        let _ = writeln!(s, "# p_step = {:.17e}", self.p.step);
        let _ = writeln!(s, "# p_len = {}", self.p.len);
        let _ = writeln!(s, "# mass = {:.17e}", o.mass);
        let _ = writeln!(s, "# spring_constant = {:.17e}", o.spring_constant);
        let _ = writeln!(s, "# hbar = {:.17e}", o.hbar);
        if let Some(th) = self.meta.thermal {
            let _ = writeln!(s, "# kt = {:.17e}", th.kt);
        }
        for i in 0..self.q.len {
            let row: Vec<String> = self.row(i).iter().map(|v| format!("{v:.17e}")).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    pub fn read_dump(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut header = std::collections::HashMap::new();
        let mut values = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once('=') {
                    header.insert(k.trim().to_string(), v.trim().to_string());
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            for tok in line.split(',') {
                values.push(parse_num(tok.trim(), path)?);
            }
        }
        let get = |k: &str| -> Result<f64> {
            let v = header
                .get(k)
                .ok_or_else(|| Error::Config(format!("{}: missing header field {k}", path.display())))?;
            parse_num(v, path)
        };
        let q = Axis::new(get("q_min")?, get("q_step")?, get("q_len")? as usize)?;
        let p = Axis::new(get("p_min")?, get("p_step")?, get("p_len")? as usize)?;
        if values.len() != q.len * p.len {
            return Err(Error::Config(format!(
                "{}: expected {} values, found {}",
                path.display(),
                q.len * p.len,
                values.len()
            )));
        }
        let oscillator = OscillatorSpec::new(get("mass")?, get("spring_constant")?, get("hbar")?);
        let thermal = header.contains_key("kt").then(|| get("kt").map(ThermalSpec::new)).transpose()?;
        Ok(Self {
            q,
            p,
            values,
            meta: WignerMeta { oscillator, thermal },
        })
    }
}

fn parse_num(s: &str, path: &Path) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::Config(format!("{}: cannot parse number {s:?}", path.display())))
}

/// Gaussian phase-space density with mean and covariance in `(q, p)` ordering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseGaussian {
    pub mean: [f64; 2],
    pub cov: Mat2,
}

impl PhaseGaussian {
    /// Minimal-uncertainty packet with `sigma_p = hbar / (2 sigma_q)`.
    pub fn minimal(q0: f64, p0: f64, sigma_q: f64, hbar: f64) -> Self {
        let sp = hbar / (2.0 * sigma_q);
        Self {
            mean: [q0, p0],
            cov: [[sigma_q * sigma_q, 0.0], [0.0, sp * sp]],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.cov;
        if !(c[0][0] > 0.0 && c[1][1] > 0.0 && det(c) > 0.0) || (c[0][1] - c[1][0]).abs() > 1e-12 * (c[0][0] + c[1][1]) {
            return Err(Error::invalid(format!("covariance {c:?} is not symmetric positive definite")));
        }
        if !(self.mean[0].is_finite() && self.mean[1].is_finite()) {
            return Err(Error::invalid("non-finite Gaussian mean"));
        }
        Ok(())
    }

    pub fn density(&self, q: f64, p: f64) -> f64 {
        let inv = inverse(&self.cov).expect("validated covariance");
        let (x, y) = (q - self.mean[0], p - self.mean[1]);
        let e = inv[0][0] * x * x + 2.0 * inv[0][1] * x * y + inv[1][1] * y * y;
        (-0.5 * e).exp() / (2.0 * std::f64::consts::PI * det(&self.cov).sqrt())
    }

    /// `<exp(-i (u q + v p) / hbar)>`.
    pub fn characteristic(&self, u: f64, v: f64, hbar: f64) -> Complex64 {
        let c = &self.cov;
        let quad = (u * u * c[0][0] + 2.0 * u * v * c[0][1] + v * v * c[1][1]) / (2.0 * hbar * hbar);
        let phase = -(u * self.mean[0] + v * self.mean[1]) / hbar;
        Complex64::from_polar((-quad).exp(), phase)
    }

    fn check_coverage(&self, grid: &GridSpec) -> Result<()> {
        let s = COVERAGE_SIGMAS;
        let (sq, sp) = (self.cov[0][0].sqrt(), self.cov[1][1].sqrt());
        let ok_q = grid.q.covers(self.mean[0] - s * sq, self.mean[0] + s * sq);
        let ok_p = grid.p.covers(self.mean[1] - s * sp, self.mean[1] + s * sp);
        if !(ok_q && ok_p) {
            return Err(Error::GridTooSmall(format!(
                "grid q [{:.4}, {:.4}], p [{:.4}, {:.4}] does not cover {s} standard deviations \
                 around ({:.4}, {:.4}) with widths ({sq:.4}, {sp:.4})",
                grid.q.min,
                grid.q.max(),
                grid.p.min,
                grid.p.max(),
                self.mean[0],
                self.mean[1]
            )));
        }
        if grid.q.step > sq || grid.p.step > sp {
            return Err(Error::GridTooSmall(format!(
                "grid steps ({:.4}, {:.4}) do not resolve widths ({sq:.4}, {sp:.4})",
                grid.q.step, grid.p.step
            )));
        }
        Ok(())
    }
}

fn meta(osc: &OscillatorSpec, th: Option<&ThermalSpec>) -> WignerMeta {
    WignerMeta {
        oscillator: *osc,
        thermal: th.copied(),
    }
}

fn check_norm(w: WignerGrid) -> Result<WignerGrid> {
    let n = w.norm();
    if (n - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::GridTooSmall(format!(
            "sampled state integrates to {n:.9}; refine or enlarge the grid"
        )));
    }
    Ok(w)
}

/// Minimal-uncertainty Gaussian centred at `(q0, p0)`.
pub fn gaussian_wigner(q0: f64, p0: f64, sigma_q: f64, osc: &OscillatorSpec, grid: &GridSpec) -> Result<WignerGrid> {
    osc.validate()?;
    if !(sigma_q > 0.0) {
        return Err(Error::invalid(format!("packet width must be > 0, got {sigma_q}")));
    }
    gaussian_state_wigner(&PhaseGaussian::minimal(q0, p0, sigma_q, osc.hbar), osc, grid)
}

/// Arbitrary Gaussian state (squeezed or correlated).
pub fn gaussian_state_wigner(g: &PhaseGaussian, osc: &OscillatorSpec, grid: &GridSpec) -> Result<WignerGrid> {
    osc.validate()?;
    g.validate()?;
    g.check_coverage(grid)?;
    let g = *g;
    check_norm(WignerGrid::from_fn(grid, meta(osc, None), move |q, p| g.density(q, p)))
}

/// Two identical minimal-uncertainty packets at `q = +-d/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatSpec {
    pub d: f64,
    pub sigma: f64,
}

impl CatSpec {
    pub fn new(d: f64, sigma: f64) -> Self {
        Self { d, sigma }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d >= 0.0 && self.d.is_finite()) {
            return Err(Error::invalid(format!("cat separation must be >= 0, got {}", self.d)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(format!("cat packet width must be > 0, got {}", self.sigma)));
        }
        Ok(())
    }

    /// `N0 = 1 / (2 (1 + exp(-d^2 / 8 sigma^2)))`.
    pub fn normalization(&self) -> f64 {
        1.0 / (2.0 * (1.0 + (-self.d * self.d / (8.0 * self.sigma * self.sigma)).exp()))
    }

    /// `|psi(x, 0)|^2` from the two-packet wave function.
    pub fn initial_density(&self, x: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        let a = (-(x - 0.5 * self.d).powi(2) / (4.0 * s2)).exp();
        let b = (-(x + 0.5 * self.d).powi(2) / (4.0 * s2)).exp();
        let norm2 = (8.0 * std::f64::consts::PI * s2).sqrt() * (1.0 + (-self.d * self.d / (8.0 * s2)).exp());
        (a + b).powi(2) / norm2
    }

    /// One packet, optionally with extra momentum variance.
    pub fn packet(&self, sign: f64, hbar: f64, kick_variance: f64) -> PhaseGaussian {
        let mut g = PhaseGaussian::minimal(sign * 0.5 * self.d, 0.0, self.sigma, hbar);
        g.cov[1][1] += kick_variance;
        g
    }

    /// Characteristic function `<exp(-i (u q + v p) / hbar)>` of the cat,
    /// after averaging over a Gaussian momentum kick of variance
    /// `kick_variance` (zero for the pure state).
    pub fn characteristic(&self, hbar: f64, kick_variance: f64, u: f64, v: f64) -> Complex64 {
        let n0 = self.normalization();
        let plus = self.packet(1.0, hbar, kick_variance).characteristic(u, v, hbar);
        let minus = self.packet(-1.0, hbar, kick_variance).characteristic(u, v, hbar);
        let centre = PhaseGaussian::minimal(0.0, 0.0, self.sigma, hbar);
        let kick = (-v * v * kick_variance / (2.0 * hbar * hbar)).exp();
        let cross = (centre.characteristic(u, v - self.d, hbar) + centre.characteristic(u, v + self.d, hbar)) * kick;
        n0 * (plus + minus + cross)
    }
}

/// Cat-state Wigner function
/// `N0 [W(q + d/2, p) + W(q - d/2, p) + 2 cos(p d / hbar) W(q, p)]`.
pub fn cat_wigner(cat: &CatSpec, osc: &OscillatorSpec, grid: &GridSpec) -> Result<WignerGrid> {
    kicked_cat_wigner(cat, osc, 0.0, grid)
}

/// Cat state averaged over a Gaussian momentum kick of variance
/// `kick_variance` (a particle given a thermal velocity: `m kT`).
pub fn kicked_cat_wigner(cat: &CatSpec, osc: &OscillatorSpec, kick_variance: f64, grid: &GridSpec) -> Result<WignerGrid> {
    osc.validate()?;
    cat.validate()?;
    if !(kick_variance >= 0.0) {
        return Err(Error::invalid(format!("kick variance must be >= 0, got {kick_variance}")));
    }
    let hbar = osc.hbar;
    let plus = cat.packet(1.0, hbar, kick_variance);
    let minus = cat.packet(-1.0, hbar, kick_variance);
    plus.check_coverage(grid)?;
    minus.check_coverage(grid)?;
    let s1 = plus.cov[1][1] - kick_variance;
    let s = plus.cov[1][1];
    // fringe wavenumber in p after the kick average
    let k = cat.d * s1 / (hbar * s);
    if k > 0.0 {
        let period = 2.0 * std::f64::consts::PI / k;
        if grid.p.step > period / FRINGE_SAMPLES {
            return Err(Error::FringeResolution(format!(
                "p step {:.4e} exceeds {} samples per fringe period {period:.4e}",
                grid.p.step, FRINGE_SAMPLES
            )));
        }
    }
    let n0 = cat.normalization();
    let sq2 = cat.sigma * cat.sigma;
    let damp = (-cat.d * cat.d * s1 * (1.0 - s1 / s) / (2.0 * hbar * hbar)).exp();
    let two_pi = 2.0 * std::f64::consts::PI;
    let cross = move |q: f64, p: f64| {
        let gq = (-q * q / (2.0 * sq2)).exp() / (two_pi * sq2).sqrt();
        let gp = (-p * p / (2.0 * s)).exp() / (two_pi * s).sqrt();
        2.0 * damp * gq * gp * (k * p).cos()
    };
    let w = WignerGrid::from_fn(grid, meta(osc, None), move |q, p| {
        n0 * (plus.density(q, p) + minus.density(q, p) + cross(q, p))
    });
    check_norm(w)
}

/// Equilibrium covariance `diag((2N+1) hbar/(2 m w0), (2N+1) m hbar w0 / 2)`.
pub fn equilibrium_covariance(osc: &OscillatorSpec, th: &ThermalSpec) -> Result<Mat2> {
    osc.validate()?;
    th.validate()?;
    if osc.spring_constant == 0.0 {
        return Err(Error::invalid("no normalizable equilibrium for the free particle (K = 0)"));
    }
    let w0 = osc.omega0();
    let n = thermal_coth(osc.hbar * w0, th.kt);
    Ok([
        [n * osc.hbar / (2.0 * osc.mass * w0), 0.0],
        [0.0, n * osc.mass * osc.hbar * w0 / 2.0],
    ])
}

/// Equilibrium Wigner function
/// `exp{-(p^2 + m^2 w0^2 q^2) / ((2N+1) m hbar w0)} / ((2N+1) pi hbar)`.
pub fn equilibrium_wigner(osc: &OscillatorSpec, th: &ThermalSpec, grid: &GridSpec) -> Result<WignerGrid> {
    let g = PhaseGaussian {
        mean: [0.0, 0.0],
        cov: equilibrium_covariance(osc, th)?,
    };
    g.check_coverage(grid)?;
    check_norm(WignerGrid::from_fn(grid, meta(osc, Some(th)), move |q, p| g.density(q, p)))
}
