//! Quadrature and interpolation primitives shared by the response and
//! phase-space layers.

use crate::error::{Error, Result};

// 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One Gauss-Kronrod 7/15 panel: returns (Kronrod estimate, |Kronrod - Gauss|).
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        resk += WGK[j] * s;
        if j % 2 == 1 {
            resg += WG[j / 2] * s;
        }
    }
    (resk * h, ((resk - resg) * h).abs())
}

/// Globally adaptive Gauss-Kronrod integration over `[a, b]`, starting from
/// the supplied breakpoints (which must lie inside the interval, sorted).
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    breakpoints: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<f64> {
    if breakpoints.len() < 2 {
        return Ok(0.0);
    }
    // (a, b, value, error)
    let mut panels: Vec<(f64, f64, f64, f64)> = breakpoints
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let (v, e) = gk15(&mut f, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();
    loop {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        let magnitude: f64 = panels.iter().map(|p| p.2.abs()).sum();
        if !total.is_finite() {
            return Err(Error::Quadrature("non-finite integrand".into()));
        }
        // Oscillatory integrands can cancel to far below their magnitude.
        if err <= abs_tol.max(rel_tol * total.abs()).max(1e-14 * magnitude) {
            return Ok(total);
        }
        if panels.len() >= max_panels {
            return Err(Error::Quadrature(format!(
                "error estimate {err:e} above tolerance after {} panels",
                panels.len()
            )));
        }
        // Split the worst ~10% of panels in one sweep.
        let mut order: Vec<usize> = (0..panels.len()).collect();
        order.sort_unstable_by(|&i, &j| panels[j].3.total_cmp(&panels[i].3));
        let n_split = (panels.len() / 10).max(1);
        let mut split: Vec<usize> = order[..n_split].to_vec();
        split.sort_unstable_by(|a, b| b.cmp(a));
        for idx in split {
            let (a, b, _, _) = panels.swap_remove(idx);
            let m = 0.5 * (a + b);
            let (v1, e1) = gk15(&mut f, a, m);
            let (v2, e2) = gk15(&mut f, m, b);
            panels.push((a, m, v1, e1));
            panels.push((m, b, v2, e2));
        }
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Gauss-Legendre rule mapped onto `[a, b]`.
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        Self { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(c + h * x))
            .sum::<f64>()
            * h
    }

    /// Nodes and weights on `[a, b]`.
    pub fn points(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (c + h * x, w * h))
    }
}

/// Number of points in the Lagrange interpolation stencil.
pub const STENCIL: usize = 8;
const STENCIL_LEFT: isize = 3;

/// Lagrange weights for interpolation at fractional offset `frac` in [0, 1)
/// from equally spaced nodes at offsets -3..=4.
#[inline]
pub fn lagrange_weights(frac: f64) -> [f64; STENCIL] {
    let mut w = [0.0; STENCIL];
    // Exact hit on a node avoids 0/0 in the barycentric form.
    if frac == 0.0 {
        w[STENCIL_LEFT as usize] = 1.0;
        return w;
    }
    // Denominators prod_{k != j} (j - k) for nodes -3..4.
    const DEN: [f64; STENCIL] = [-5040.0, 720.0, -240.0, 144.0, -144.0, 240.0, -720.0, 5040.0];
    let mut full = 1.0;
    for k in 0..STENCIL {
        full *= frac - (k as f64 - STENCIL_LEFT as f64);
    }
    for j in 0..STENCIL {
        let d = frac - (j as f64 - STENCIL_LEFT as f64);
        w[j] = full / (d * DEN[j]);
    }
    w
}

/// Interpolate a uniformly sampled sequence at fractional index `pos`,
/// treating samples outside `0..len` as zero.
#[inline]
pub fn interp_zero_padded(data: &[f64], pos: f64) -> f64 {
    let n = data.len() as isize;
    let base = pos.floor();
    let i0 = base as isize;
    if i0 < -STENCIL_LEFT - 1 || i0 > n + STENCIL_LEFT {
        return 0.0;
    }
    let w = lagrange_weights(pos - base);
    let start = i0 - STENCIL_LEFT;
    let mut acc = 0.0;
    for (k, wk) in w.iter().enumerate() {
        let idx = start + k as isize;
        if idx >= 0 && idx < n {
            acc += wk * data[idx as usize];
        }
    }
    acc
}

/// Resample `src` onto `dst[j] = src(j + shift)` for a constant fractional
/// shift, zero outside the sampled range.
pub fn shift_line(src: &[f64], shift: f64, dst: &mut [f64]) {
    let n = src.len() as isize;
    let base = shift.floor();
    let w = lagrange_weights(shift - base);
    let off = base as isize - STENCIL_LEFT;
    for (j, out) in dst.iter_mut().enumerate() {
        let start = j as isize + off;
        let mut acc = 0.0;
        if start >= 0 && start + STENCIL as isize <= n {
            let s = &src[start as usize..start as usize + STENCIL];
            for k in 0..STENCIL {
                acc += w[k] * s[k];
            }
        } else {
            for (k, wk) in w.iter().enumerate() {
                let idx = start + k as isize;
                if idx >= 0 && idx < n {
                    acc += wk * src[idx as usize];
                }
            }
        }
        *out = acc;
    }
}

/// Cubic Hermite interpolation on `[0, h]` from values and derivatives at the ends.
#[inline]
pub fn hermite(y0: f64, d0: f64, y1: f64, d1: f64, h: f64, s: f64) -> f64 {
    let u = s / h;
    let u2 = u * u;
    let u3 = u2 * u;
    let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
    let h10 = u3 - 2.0 * u2 + u;
    let h01 = -2.0 * u3 + 3.0 * u2;
    let h11 = u3 - u2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

/// Quintic Hermite interpolation from values and first two derivatives at
/// both ends of an interval of length `h`, evaluated at offset `s`.
#[allow(clippy::too_many_arguments)]
pub fn hermite5(y0: f64, d0: f64, dd0: f64, y1: f64, d1: f64, dd1: f64, h: f64, s: f64) -> f64 {
    let u = s / h;
    let u2 = u * u;
    let u3 = u2 * u;
    let u4 = u3 * u;
    let u5 = u4 * u;
    let a0 = 1.0 - 10.0 * u3 + 15.0 * u4 - 6.0 * u5;
    let a1 = u - 6.0 * u3 + 8.0 * u4 - 3.0 * u5;
    let a2 = 0.5 * (u2 - 3.0 * u3 + 3.0 * u4 - u5);
    let b2 = 0.5 * (u3 - 2.0 * u4 + u5);
    let b1 = -4.0 * u3 + 7.0 * u4 - 3.0 * u5;
    let b0 = 10.0 * u3 - 15.0 * u4 + 6.0 * u5;
    a0 * y0 + a1 * h * d0 + a2 * h * h * dd0 + b0 * y1 + b1 * h * d1 + b2 * h * h * dd1
}

/// Trapezoidal weights for `n` uniformly spaced samples.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1])),
    }
}
