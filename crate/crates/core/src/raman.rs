//! Raman channel physics.
//!
//! Anti-Stokes and Stokes count rates follow the Bose-Einstein phonon
//! occupation `n(T) = 1 / (exp(C/T) - 1)` with `C = h·Δν / k_B`:
//!
//! ```text
//! AS(T) = A · n(T) + N_AS
//! S(T)  = B · (n(T) + 1) + N_S
//! ```
//!
//! The calibrated observable is the reference-subtracted anti-Stokes signal
//! normalised to the noise-free Stokes signal, which is linear in
//! `exp(-C/T)`:
//!
//! ```text
//! (AS(T) - AS(T0)) / (S(T) - N_S) = C1 · exp(-C/T) + C2
//! ```

use serde::{Deserialize, Serialize};

use crate::constants::{BOLTZMANN, PLANCK, SILICA_RAMAN_SHIFT_HZ};
use crate::error::{Error, Result};

/// Raman shift and the derived characteristic temperature `C = h·Δν/k_B`.
///
/// The shift is an ordinary frequency (Hz), not an angular one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RamanConstants {
    spectral_shift_hz: f64,
    characteristic_temperature: f64,
}

impl RamanConstants {
    pub fn new(spectral_shift_hz: f64) -> Result<Self> {
        if !(spectral_shift_hz.is_finite() && spectral_shift_hz > 0.0) {
            return Err(Error::Domain(format!(
                "Raman shift must be positive, got {spectral_shift_hz}"
            )));
        }
        Ok(Self {
            spectral_shift_hz,
            characteristic_temperature: PLANCK * spectral_shift_hz / BOLTZMANN,
        })
    }

    /// 13 THz silica shift, C ≈ 623.9 K.
    pub fn silica() -> Self {
        Self::new(SILICA_RAMAN_SHIFT_HZ).expect("positive constant")
    }

    pub fn spectral_shift_hz(&self) -> f64 {
        self.spectral_shift_hz
    }

    /// `C` in kelvin.
    pub fn c(&self) -> f64 {
        self.characteristic_temperature
    }

    /// `exp(-C/T)`, the calibration regressor.
    pub fn boltzmann_factor(&self, t: f64) -> Result<f64> {
        check_temperature(t)?;
        Ok((-self.c() / t).exp())
    }

    /// Bose-Einstein occupation `1/(exp(C/T) - 1)`; zero in the `T → 0` limit.
    pub fn occupation(&self, t: f64) -> Result<f64> {
        let x = self.boltzmann_factor(t)?;
        // x / (1 - x) == 1 / (exp(C/T) - 1), stable for small x.
        Ok(x / (1.0 - x))
    }
}

impl Default for RamanConstants {
    fn default() -> Self {
        Self::silica()
    }
}

fn check_temperature(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("temperature must be positive, got {t} K")))
    }
}

/// Amplitudes and noise rates of the two detection channels, counts/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelCoefficients {
    pub a: f64,
    pub b: f64,
    pub noise_as: f64,
    pub noise_s: f64,
}

impl ChannelCoefficients {
    pub fn new(a: f64, b: f64, noise_as: f64, noise_s: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::Domain(format!(
                "channel amplitudes must be positive (A={a}, B={b})"
            )));
        }
        if !(noise_as >= 0.0 && noise_s >= 0.0) {
            return Err(Error::Domain(format!(
                "noise rates must be non-negative (N_AS={noise_as}, N_S={noise_s})"
            )));
        }
        Ok(Self {
            a,
            b,
            noise_as,
            noise_s,
        })
    }
}

/// Anti-Stokes count rate at temperature `t`.
pub fn as_rate(t: f64, ch: &ChannelCoefficients, rc: &RamanConstants) -> Result<f64> {
    Ok(ch.a * rc.occupation(t)? + ch.noise_as)
}

/// Stokes count rate at temperature `t`.
pub fn s_rate(t: f64, ch: &ChannelCoefficients, rc: &RamanConstants) -> Result<f64> {
    Ok(ch.b * (rc.occupation(t)? + 1.0) + ch.noise_s)
}

/// Fitted constants of the linearised calibration law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConstants {
    pub c1: f64,
    pub c2: f64,
    pub sigma_c1: f64,
    pub sigma_c2: f64,
    /// Reference temperature of the subtracted anti-Stokes trace, K.
    pub t0: f64,
    pub raman: RamanConstants,
}

impl CalibrationConstants {
    pub fn new(c1: f64, c2: f64, t0: f64, raman: RamanConstants) -> Result<Self> {
        Self::with_errors(c1, c2, 0.0, 0.0, t0, raman)
    }

    pub fn with_errors(c1: f64, c2: f64, sigma_c1: f64, sigma_c2: f64, t0: f64, raman: RamanConstants) -> Result<Self> {
        if !(c1.is_finite() && c1 > 0.0) {
            return Err(Error::Domain(format!("C1 must be positive, got {c1}")));
        }
        if !c2.is_finite() {
            return Err(Error::Domain(format!("C2 must be finite, got {c2}")));
        }
        check_temperature(t0)?;
        Ok(Self {
            c1,
            c2,
            sigma_c1,
            sigma_c2,
            t0,
            raman,
        })
    }

    /// Room-temperature constants `C1 = 81`, `C2 = -9.8` referenced to 296 K.
    pub fn room_temperature_reference() -> Self {
        Self::with_errors(81.0, -9.8, 3.0, 0.4, 296.0, RamanConstants::silica()).expect("valid constants")
    }

    /// Ratio the constants predict at the reference temperature; zero for a
    /// self-consistent calibration.
    pub fn reference_residual(&self) -> f64 {
        self.c1 * (-self.raman.c() / self.t0).exp() + self.c2
    }
}

/// `C1·exp(-C/T) + C2`.
pub fn ratio_forward(t: f64, cal: &CalibrationConstants) -> Result<f64> {
    Ok(cal.c1 * cal.raman.boltzmann_factor(t)? + cal.c2)
}

/// Exact inverse of [`ratio_forward`]: `T = -C / ln((r - C2)/C1)`.
pub fn invert_temperature(r: f64, cal: &CalibrationConstants) -> Result<f64> {
    if !r.is_finite() {
        return Err(Error::InvalidRatio {
            ratio: r,
            reason: "ratio is not finite",
        });
    }
    let u = (r - cal.c2) / cal.c1;
    if u <= 0.0 {
        return Err(Error::InvalidRatio {
            ratio: r,
            reason: "non-positive logarithm argument",
        });
    }
    if u >= 1.0 {
        return Err(Error::InvalidRatio {
            ratio: r,
            reason: "non-positive temperature",
        });
    }
    Ok(-cal.raman.c() / u.ln())
}

/// First-order propagation of a ratio uncertainty into temperature,
/// `σ_T = (T²/C) · σ_r / (r - C2)`.
pub fn temperature_uncertainty(r: f64, sigma_r: f64, cal: &CalibrationConstants) -> Result<f64> {
    if !(sigma_r >= 0.0) {
        return Err(Error::Domain(format!(
            "ratio uncertainty must be non-negative, got {sigma_r}"
        )));
    }
    let t = invert_temperature(r, cal)?;
    Ok(t * t / cal.raman.c() * sigma_r / (r - cal.c2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn room() -> CalibrationConstants {
        CalibrationConstants::new(81.0, -9.8, 296.0, RamanConstants::silica()).unwrap()
    }

    fn channels() -> ChannelCoefficients {
        ChannelCoefficients::new(1000.0, 1000.0, 0.0, 0.0).unwrap()
    }

    #[test]
    fn characteristic_temperature_of_13_thz() {
        // h·13 THz / k_B evaluated by hand
        let c = 6.626_070_15e-34 * 13.0e12 / 1.380_649e-23;
        assert!((RamanConstants::silica().c() - c).abs() < 1e-12);
        assert!((c - 623.90).abs() < 0.01);
    }

    #[test]
    fn anti_stokes_rate_examples() {
        let rc = RamanConstants::silica();
        let v = as_rate(296.0, &channels(), &rc).unwrap();
        assert!((v - 138.314_214_5).abs() < 1e-6, "{v}");
        let tiny = as_rate(1.0, &channels(), &rc).unwrap();
        assert!(tiny.abs() < 1e-200);
        let at_ln2 = as_rate(rc.c() / 2f64.ln(), &channels(), &rc).unwrap();
        assert!((at_ln2 - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn stokes_rate_examples() {
        let rc = RamanConstants::silica();
        let v = s_rate(296.0, &channels(), &rc).unwrap();
        assert!((v - 1_138.314_214_5).abs() < 1e-6);
        assert!((s_rate(1.0, &channels(), &rc).unwrap() - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn non_positive_temperature_is_rejected() {
        let rc = RamanConstants::silica();
        assert!(matches!(as_rate(0.0, &channels(), &rc), Err(Error::Domain(_))));
        assert!(matches!(s_rate(-3.0, &channels(), &rc), Err(Error::Domain(_))));
        assert!(ratio_forward(0.0, &room()).is_err());
    }

    #[test]
    fn ratio_forward_examples() {
        let v = ratio_forward(296.0, &room()).unwrap();
        assert!((v - 0.042_143).abs() < 1e-5, "{v}");
        let unit = CalibrationConstants::new(1.0, 0.0, 296.0, RamanConstants::silica()).unwrap();
        assert!((ratio_forward(1e12, &unit).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn inversion_examples() {
        let t = invert_temperature(0.0, &room()).unwrap();
        assert!((t - 295.398_6).abs() < 1e-3, "{t}");
        let r = ratio_forward(340.0, &room()).unwrap();
        let back = invert_temperature(r, &room()).unwrap();
        assert!(((back - 340.0) / 340.0).abs() < 1e-12);
    }

    #[test]
    fn inversion_domain_boundaries() {
        let cal = room();
        assert!(matches!(
            invert_temperature(-9.8, &cal),
            Err(Error::InvalidRatio { .. })
        ));
        assert!(matches!(
            invert_temperature(-20.0, &cal),
            Err(Error::InvalidRatio { .. })
        ));
        // (r - C2)/C1 == 1
        assert!(matches!(
            invert_temperature(81.0 - 9.8, &cal),
            Err(Error::InvalidRatio { .. })
        ));
        assert!(invert_temperature(f64::NAN, &cal).is_err());
    }

    #[test]
    fn uncertainty_examples() {
        let cal = room();
        assert_eq!(temperature_uncertainty(0.0, 0.0, &cal).unwrap(), 0.0);
        let s = temperature_uncertainty(0.0, 0.1, &cal).unwrap();
        assert!((s - 1.4272).abs() < 1e-3, "{s}");
        let s2 = temperature_uncertainty(0.0, 0.2, &cal).unwrap();
        assert!((s2 - 2.0 * s).abs() < 1e-12);
        assert!(temperature_uncertainty(-9.8, 0.1, &cal).is_err());
        assert!(temperature_uncertainty(0.0, -0.1, &cal).is_err());
    }

    #[test]
    fn reference_residual_of_room_constants_is_small() {
        // 81·exp(-C/296) ≈ 9.84 so the residual is about 0.04
        let r = room().reference_residual();
        assert!(r.abs() < 3.0 * 0.4);
    }

    #[test]
    fn invalid_constants_rejected() {
        let rc = RamanConstants::silica();
        assert!(CalibrationConstants::new(0.0, 1.0, 296.0, rc).is_err());
        assert!(CalibrationConstants::new(1.0, 1.0, 0.0, rc).is_err());
        assert!(RamanConstants::new(0.0).is_err());
        assert!(ChannelCoefficients::new(1.0, 0.0, 0.0, 0.0).is_err());
        assert!(ChannelCoefficients::new(1.0, 1.0, -1.0, 0.0).is_err());
    }
}
