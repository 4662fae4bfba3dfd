//! Small dense matrix helpers for the linear phase-space flows.

/// 2x2 matrix in row-major `[[a, b], [c, d]]`.
pub type Mat2 = [[f64; 2]; 2];

pub const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

pub fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut r = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

pub fn transpose(a: &Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

pub fn det(a: &Mat2) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn inverse(a: &Mat2) -> Option<Mat2> {
    let d = det(a);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    Some([[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]])
}

pub fn apply(a: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

/// `a * s * a^T`.
pub fn congruence(a: &Mat2, s: &Mat2) -> Mat2 {
    mul(&mul(a, s), &transpose(a))
}

pub fn add(a: &Mat2, b: &Mat2) -> Mat2 {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

/// Exponential of an `n x n` row-major matrix by scaling and squaring with a
/// truncated Taylor series.
pub fn expm(a: &[f64], n: usize) -> Vec<f64> {
    assert_eq!(a.len(), n * n);
    let norm = (0..n)
        .map(|i| (0..n).map(|j| a[i * n + j].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let a: Vec<f64> = a.iter().map(|v| v * scale).collect();
    let matmul = |x: &[f64], y: &[f64]| -> Vec<f64> {
        let mut r = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let xik = x[i * n + k];
                if xik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    r[i * n + j] += xik * y[k * n + j];
                }
            }
        }
        r
    };
    let mut result = vec![0.0; n * n];
    let mut term = vec![0.0; n * n];
    for i in 0..n {
        result[i * n + i] = 1.0;
        term[i * n + i] = 1.0;
    }
    for k in 1..=16 {
        term = matmul(&term, &a);
        for v in term.iter_mut() {
            *v /= k as f64;
        }
        for (r, t) in result.iter_mut().zip(&term) {
            *r += t;
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    result
}

pub fn expm2(a: &Mat2) -> Mat2 {
    let r = expm(&[a[0][0], a[0][1], a[1][0], a[1][1]], 2);
    [[r[0], r[1]], [r[2], r[3]]]
}

/// Exact one-step propagators of the linear SDE `dz = (B z + b) dt + noise`
/// with diffusion matrix `D` (so the covariance obeys `S' = B S + S B^T + 2D`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFlow {
    /// `exp(B h)`.
    pub transfer: Mat2,
    /// `int_0^h exp(B s) ds * b`.
    pub offset: [f64; 2],
    /// Covariance accumulated from zero over the step.
    pub covariance: Mat2,
}

impl LinearFlow {
    /// Van Loan's block-exponential construction.
    pub fn new(b: &Mat2, drift: [f64; 2], diffusion: &Mat2, h: f64) -> Self {
        // [[-B, 2D], [0, B^T]] h
        let mut blk = vec![0.0; 16];
        for i in 0..2 {
            for j in 0..2 {
                blk[i * 4 + j] = -b[i][j] * h;
                blk[i * 4 + j + 2] = 2.0 * diffusion[i][j] * h;
                blk[(i + 2) * 4 + j + 2] = b[j][i] * h;
            }
        }
        let e = expm(&blk, 4);
        // F22 = exp(B^T h), F12 = exp(-Bh) Q; covariance = F22^T F12
        let f22 = [[e[10], e[11]], [e[14], e[15]]];
        let f12 = [[e[2], e[3]], [e[6], e[7]]];
        let transfer = transpose(&f22);
        let mut cov = mul(&transfer, &f12);
        let sym = 0.5 * (cov[0][1] + cov[1][0]);
        cov[0][1] = sym;
        cov[1][0] = sym;
        // augmented [[B, b], [0, 0]] h gives the affine offset
        let aug = [
            b[0][0] * h, b[0][1] * h, drift[0] * h,
            b[1][0] * h, b[1][1] * h, drift[1] * h,
            0.0, 0.0, 0.0,
        ];
        let ea = expm(&aug, 3);
        Self {
            transfer,
            offset: [ea[2], ea[5]],
            covariance: cov,
        }
    }
}
