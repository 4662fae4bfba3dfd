//! Bath memory models, the oscillator response function and thermal factors.
//!
//! All quantities are in a reduced unit system where the mass and Planck's
//! constant are explicit parameters (both default to 1) and temperature is
//! carried as an energy `kT`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this value of `hbar*omega / 2kT` the hyperbolic cotangent is
/// evaluated from its Laurent series.
const COTH_SERIES_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BathKind {
    /// Constant viscosity `mu(z) = m*gamma` (delta-correlated memory).
    Ohmic,
    /// Exponential memory `mu(t) = (m*gamma/tau) exp(-t/tau)`.
    SingleRelaxationTime,
}

/// A linear passive heat bath, described by its memory function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    pub kind: BathKind,
    /// Ohmic decay constant.
    pub gamma: f64,
    /// Bath relaxation time; only read for [`BathKind::SingleRelaxationTime`].
    pub tau: f64,
    pub mass: f64,
}

impl BathSpec {
    pub fn ohmic(gamma: f64, mass: f64) -> Self {
        Self {
            kind: BathKind::Ohmic,
            gamma,
            tau: 0.0,
            mass,
        }
    }

    pub fn single_relaxation_time(gamma: f64, tau: f64, mass: f64) -> Self {
        Self {
            kind: BathKind::SingleRelaxationTime,
            gamma,
            tau,
            mass,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::invalid(format!("bath mass must be > 0, got {}", self.mass)));
        }
        if self.kind == BathKind::SingleRelaxationTime && !(self.tau > 0.0 && self.tau.is_finite())
        {
            return Err(Error::invalid(format!(
                "single-relaxation-time bath needs tau > 0, got {}",
                self.tau
            )));
        }
        Ok(())
    }

    /// Friction constant `zeta = m*gamma`.
    pub fn friction_constant(&self) -> f64 {
        self.mass * self.gamma
    }

    /// Fourier transform of the memory function, `mu(z) = int_0^inf mu(t) e^{izt} dt`.
    pub fn memory_fourier(&self, z: Complex64) -> Result<Complex64> {
        if z.im < 0.0 {
            return Err(Error::LowerHalfPlane(z));
        }
        Ok(self.memory_fourier_unchecked(z))
    }

    pub(crate) fn memory_fourier_unchecked(&self, z: Complex64) -> Complex64 {
        let zeta = Complex64::new(self.friction_constant(), 0.0);
        match self.kind {
            BathKind::Ohmic => zeta,
            BathKind::SingleRelaxationTime => {
                zeta / (Complex64::new(1.0, 0.0) - Complex64::i() * z * self.tau)
            }
        }
    }

    /// `Re mu(omega + i0)` on the real axis.
    pub fn memory_real(&self, omega: f64) -> f64 {
        let zeta = self.friction_constant();
        match self.kind {
            BathKind::Ohmic => zeta,
            BathKind::SingleRelaxationTime => zeta / (1.0 + (omega * self.tau).powi(2)),
        }
    }

    /// Coefficient of the instantaneous part of the memory: the friction
    /// integral contributes `local * x'(t)` with no history dependence.
    pub(crate) fn local_friction(&self) -> f64 {
        match self.kind {
            BathKind::Ohmic => self.friction_constant(),
            BathKind::SingleRelaxationTime => 0.0,
        }
    }

    /// Smooth (non-delta) part of the memory function for `t >= 0`.
    pub(crate) fn memory_smooth(&self, t: f64) -> f64 {
        match self.kind {
            BathKind::Ohmic => 0.0,
            BathKind::SingleRelaxationTime => {
                self.friction_constant() / self.tau * (-t / self.tau).exp()
            }
        }
    }

    /// Characteristic memory time, zero for the Ohmic bath.
    pub fn relaxation_time(&self) -> f64 {
        match self.kind {
            BathKind::Ohmic => 0.0,
            BathKind::SingleRelaxationTime => self.tau,
        }
    }
}

/// The central oscillator; `spring_constant = 0` is the free particle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorSpec {
    pub mass: f64,
    pub spring_constant: f64,
    pub hbar: f64,
}

impl Default for OscillatorSpec {
    fn default() -> Self {
        Self {
            mass: 1.0,
            spring_constant: 1.0,
            hbar: 1.0,
        }
    }
}

impl OscillatorSpec {
    pub fn new(mass: f64, spring_constant: f64, hbar: f64) -> Self {
        Self {
            mass,
            spring_constant,
            hbar,
        }
    }

    pub fn free_particle(mass: f64, hbar: f64) -> Self {
        Self::new(mass, 0.0, hbar)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::invalid(format!("mass must be > 0, got {}", self.mass)));
        }
        if !(self.spring_constant >= 0.0 && self.spring_constant.is_finite()) {
            return Err(Error::invalid(format!(
                "spring constant must be >= 0, got {}",
                self.spring_constant
            )));
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::invalid(format!("hbar must be > 0, got {}", self.hbar)));
        }
        Ok(())
    }

    pub fn omega0(&self) -> f64 {
        (self.spring_constant / self.mass).sqrt()
    }
}

/// Bath temperature in energy units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalSpec {
    pub kt: f64,
}

impl ThermalSpec {
    pub fn new(kt: f64) -> Self {
        Self { kt }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kt >= 0.0 && self.kt.is_finite()) {
            return Err(Error::invalid(format!("kT must be >= 0, got {}", self.kt)));
        }
        Ok(())
    }

    /// Mean thermal velocity `sqrt(kT/m)`.
    pub fn thermal_velocity(&self, mass: f64) -> f64 {
        (self.kt / mass).sqrt()
    }
}

/// `coth(x)` for `x >= 0`, accurate at both extremes.
pub fn coth(x: f64) -> f64 {
    if x < COTH_SERIES_THRESHOLD {
        1.0 / x + x / 3.0
    } else if x > 20.0 {
        1.0
    } else {
        1.0 / x.tanh()
    }
}

/// `coth(hbar*omega / 2kT)` for `omega >= 0`; exactly 1 at zero temperature.
pub fn thermal_coth(hbar_omega: f64, kt: f64) -> f64 {
    if kt == 0.0 {
        return 1.0;
    }
    coth(hbar_omega / (2.0 * kt))
}

/// `omega * coth(hbar*omega / 2kT)`, finite at `omega = 0` where it tends to `2kT/hbar`.
pub(crate) fn omega_coth(omega: f64, hbar: f64, kt: f64) -> f64 {
    if kt == 0.0 {
        return omega;
    }
    let x = hbar * omega / (2.0 * kt);
    if x < COTH_SERIES_THRESHOLD {
        2.0 * kt / hbar * (1.0 + x * x / 3.0)
    } else {
        omega * coth(x)
    }
}

/// Occupation factor `2(N + 1/2) = coth(hbar*omega0 / 2kT)`.
pub fn occupation_factor(osc: &OscillatorSpec, th: &ThermalSpec) -> Result<f64> {
    let w0 = osc.omega0();
    if !(w0 > 0.0) {
        return Err(Error::invalid("occupation factor needs omega0 > 0"));
    }
    Ok(thermal_coth(osc.hbar * w0, th.kt))
}

/// Response function `alpha(omega + i0) = 1 / (-m omega^2 - i omega mu(omega) + K)`.
pub fn response(bath: &BathSpec, osc: &OscillatorSpec, omega: f64) -> Result<Complex64> {
    if !omega.is_finite() {
        return Err(Error::invalid(format!("response needs a finite frequency, got {omega}")));
    }
    let d = response_denominator(bath, osc, omega);
    let scale = osc.spring_constant + osc.mass * omega * omega;
    if d.norm() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::ResonancePole { omega });
    }
    Ok(d.inv())
}

fn response_denominator(bath: &BathSpec, osc: &OscillatorSpec, omega: f64) -> Complex64 {
    let mu = bath.memory_fourier_unchecked(Complex64::new(omega, 0.0));
    Complex64::new(osc.spring_constant - osc.mass * omega * omega, 0.0)
        - Complex64::i() * omega * mu
}

/// `Im alpha(omega + i0) = omega Re mu / |D|^2`; zero exactly at a lossless pole.
pub fn response_imag(bath: &BathSpec, osc: &OscillatorSpec, omega: f64) -> f64 {
    let d = response_denominator(bath, osc, omega);
    let n = d.norm_sqr();
    if n == 0.0 {
        return 0.0;
    }
    omega * bath.memory_real(omega) / n
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ohmic_memory_is_constant() {
        let bath = BathSpec::ohmic(1.0, 1.0);
        let mu = bath.memory_fourier(Complex64::new(3.0, 0.0)).unwrap();
        assert_eq!(mu, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn srt_memory_at_imaginary_unit() {
        let bath = BathSpec::single_relaxation_time(1.0, 1.0, 1.0);
        let mu = bath.memory_fourier(Complex64::i()).unwrap();
        assert_relative_eq!(mu.re, 0.5, epsilon = 1e-15);
        assert_relative_eq!(mu.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn srt_memory_matches_numerical_laplace_transform() {
        // int_0^inf (m gamma/tau) e^{-t/tau} e^{izt} dt at z = i, by composite Simpson.
        let bath = BathSpec::single_relaxation_time(1.0, 1.0, 1.0);
        let n = 200_000;
        let t_max = 60.0;
        let h = t_max / n as f64;
        let f = |t: f64| bath.memory_smooth(t) * (-t).exp();
        let mut sum = f(0.0) + f(t_max);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * f(k as f64 * h);
        }
        let laplace = sum * h / 3.0;
        assert_relative_eq!(laplace, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn srt_converges_to_ohmic_as_tau_shrinks() {
        let zeta = 0.7;
        let mut prev = f64::INFINITY;
        for &tau in &[1e-1, 1e-2, 1e-3, 1e-4] {
            let bath = BathSpec::single_relaxation_time(zeta, tau, 1.0);
            let worst = (0..200)
                .map(|k| {
                    let w = k as f64 * 0.05;
                    (bath.memory_fourier(Complex64::new(w, 0.0)).unwrap() - zeta).norm()
                })
                .fold(0.0, f64::max);
            assert!(worst < prev);
            prev = worst;
        }
        // the deviation is first order in omega*tau
        assert!(prev < 1e-3);
    }

    #[test]
    fn lower_half_plane_rejected() {
        let bath = BathSpec::ohmic(1.0, 1.0);
        assert!(matches!(
            bath.memory_fourier(Complex64::new(1.0, -0.1)),
            Err(Error::LowerHalfPlane(_))
        ));
    }

    #[test]
    fn static_response_is_inverse_stiffness() {
        let bath = BathSpec::ohmic(0.0, 1.0);
        let osc = OscillatorSpec::new(1.0, 1.0, 1.0);
        let a = response(&bath, &osc, 0.0).unwrap();
        assert_eq!(a, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn response_on_resonance_is_pure_imaginary() {
        let bath = BathSpec::ohmic(0.2, 1.0);
        let osc = OscillatorSpec::new(1.0, 1.0, 1.0);
        let a = response(&bath, &osc, 1.0).unwrap();
        // independent evaluation: 1 / (-i gamma omega0)
        let oracle = Complex64::new(1.0, 0.0) / Complex64::new(0.0, -0.2);
        assert_relative_eq!(a.re, oracle.re, epsilon = 1e-12);
        assert_relative_eq!(a.im, 5.0, epsilon = 1e-12);
        assert_relative_eq!(oracle.im, 5.0, epsilon = 1e-12);
    }

    #[test]
    fn undamped_resonance_is_flagged() {
        let bath = BathSpec::ohmic(0.0, 1.0);
        let osc = OscillatorSpec::new(1.0, 4.0, 1.0);
        assert!(matches!(
            response(&bath, &osc, 2.0),
            Err(Error::ResonancePole { .. })
        ));
    }

    #[test]
    fn response_decays_like_inverse_mass_omega_squared() {
        let bath = BathSpec::single_relaxation_time(0.3, 0.5, 2.0);
        let osc = OscillatorSpec::new(2.0, 1.0, 1.0);
        let w = 1e5;
        let a = response(&bath, &osc, w).unwrap();
        assert_relative_eq!(a.norm() * 2.0 * w * w, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn coth_limits() {
        let osc = OscillatorSpec::default();
        assert_eq!(occupation_factor(&osc, &ThermalSpec::new(0.0)).unwrap(), 1.0);
        // hbar omega0 / 2kT = 0.5 -> coth(0.5)
        let f = occupation_factor(&osc, &ThermalSpec::new(1.0)).unwrap();
        assert_relative_eq!(f, 2.163_953_413_738_653, epsilon = 1e-12);
        let kt = 1e6;
        let f = occupation_factor(&osc, &ThermalSpec::new(kt)).unwrap();
        assert_relative_eq!(f, 2.0 * kt, max_relative = 1e-12);
    }

    #[test]
    fn coth_series_oracle() {
        // coth(x) = 1/x + sum_k 2^{2k} B_{2k} x^{2k-1} / (2k)!  (x=0.5, many terms)
        let x: f64 = 0.5;
        let bern = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0, 7.0 / 6.0];
        let mut s = 1.0 / x;
        let mut fact = 1.0;
        for (k, b) in bern.iter().enumerate() {
            let n = 2 * (k + 1);
            fact *= ((n - 1) * n) as f64;
            s += 2f64.powi(n as i32) * b * x.powi(n as i32 - 1) / fact;
        }
        assert_relative_eq!(coth(x), s, epsilon = 1e-9);
        assert_relative_eq!(s, 2.163953, epsilon = 1e-6);
    }

    #[test]
    fn occupation_factor_requires_oscillator() {
        let osc = OscillatorSpec::free_particle(1.0, 1.0);
        assert!(occupation_factor(&osc, &ThermalSpec::new(1.0)).is_err());
    }

    #[test]
    fn omega_coth_is_continuous_at_series_threshold() {
        let kt = 0.7;
        let x = COTH_SERIES_THRESHOLD;
        let w = 2.0 * kt * x;
        let below = omega_coth(w * (1.0 - 1e-9), 1.0, kt);
        let above = omega_coth(w * (1.0 + 1e-9), 1.0, kt);
        assert_relative_eq!(below, above, max_relative = 1e-8);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn memory_has_nonnegative_real_part(
                gamma in 0.0..5.0f64, tau in 1e-3..10.0f64, lw in -4.0..4.0f64
            ) {
                let w = 10f64.powf(lw);
                for bath in [BathSpec::ohmic(gamma, 1.0), BathSpec::single_relaxation_time(gamma, tau, 1.0)] {
                    let mu = bath.memory_fourier(Complex64::new(w, 0.0)).unwrap();
                    prop_assert!(mu.re >= 0.0);
                    prop_assert!((mu.re - bath.memory_real(w)).abs() <= 1e-12 * (1.0 + mu.re));
                }
            }

            #[test]
            fn response_is_causal_on_real_axis(
                gamma in 0.01..3.0f64, tau in 1e-3..5.0f64, k in 0.0..4.0f64, w in 0.0..20.0f64
            ) {
                let osc = OscillatorSpec::new(1.3, k, 1.0);
                for bath in [BathSpec::ohmic(gamma, 1.3), BathSpec::single_relaxation_time(gamma, tau, 1.3)] {
                    if let (Ok(a), Ok(b)) = (response(&bath, &osc, w), response(&bath, &osc, -w)) {
                        prop_assert!(a.im >= -1e-15);
                        prop_assert!((b - a.conj()).norm() <= 1e-12 * a.norm().max(1.0));
                        let im = response_imag(&bath, &osc, w);
                        prop_assert!((im - a.im).abs() <= 1e-9 * a.norm().max(1e-12));
                    }
                }
            }

            #[test]
            fn occupation_factor_monotone_and_at_least_one(kt1 in 0.0..50.0f64, dkt in 0.0..50.0f64) {
                let osc = OscillatorSpec::default();
                let a = occupation_factor(&osc, &ThermalSpec::new(kt1)).unwrap();
                let b = occupation_factor(&osc, &ThermalSpec::new(kt1 + dkt)).unwrap();
                prop_assert!(a >= 1.0);
                prop_assert!(b >= a - 1e-12 * b);
            }
        }
    }
}
