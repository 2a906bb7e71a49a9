use serde::{Deserialize, Serialize};

use super::layout::FiberLayout;
use crate::constants::{FWHM_PER_SIGMA, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::raman::{ChannelCoefficients, RamanConstants};

/// Slow position-dependent gain `p(x) = 1 + depth·sin(2πx/period + phase)`
/// applied to both Raman channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolarizationModel {
    pub modulation_depth: f64,
    /// m.
    pub spatial_period: f64,
    /// rad.
    pub phase: f64,
}

impl Default for PolarizationModel {
    fn default() -> Self {
        Self {
            modulation_depth: 0.3,
            spatial_period: 2.0,
            phase: 0.0,
        }
    }
}

impl PolarizationModel {
    pub fn none() -> Self {
        Self {
            modulation_depth: 0.0,
            ..Self::default()
        }
    }

    pub fn factor(&self, x: f64) -> f64 {
        1.0 + self.modulation_depth * (std::f64::consts::TAU * x / self.spatial_period + self.phase).sin()
    }
}

/// Acquisition chain: laser, detectors and time-to-digital converter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstrumentConfig {
    /// Hz.
    pub repetition_rate: f64,
    /// s.
    pub pulse_fwhm: f64,
    /// s.
    pub jitter_fwhm: f64,
    /// s.
    pub bin_width: f64,
    /// s.
    pub integration_time: f64,
    pub group_index: f64,
    /// counts/s.
    pub dark_rate_as: f64,
    /// counts/s.
    pub dark_rate_s: f64,
    /// Anti-Stokes amplitude at unit polarization factor, counts/s.
    pub amplitude_a: f64,
    /// Stokes amplitude at unit polarization factor, counts/s.
    pub amplitude_b: f64,
    pub polarization: PolarizationModel,
}

/// Anti-Stokes counts per bin targeted by the default amplitudes.
pub const DEFAULT_AS_COUNTS_PER_BIN: f64 = 1.0e4;

impl InstrumentConfig {
    /// 2.5 MHz, 250 ps pulses, 40 ps jitter, 100 ps bins, 300 s, amplitudes
    /// scaled for 10⁴ anti-Stokes counts per bin at 296 K and a fitted
    /// `C1 = 81`.
    pub fn room_default() -> Self {
        let mut cfg = Self::base();
        cfg.scale_amplitudes(296.0, DEFAULT_AS_COUNTS_PER_BIN, 81.0, &RamanConstants::silica())
            .expect("valid defaults");
        cfg
    }

    /// Same chain in liquid nitrogen: 10⁴ anti-Stokes counts per bin at 77 K
    /// and a fitted `C1 = 38400`.
    pub fn cryo_default() -> Self {
        let mut cfg = Self::base();
        cfg.scale_amplitudes(77.0, DEFAULT_AS_COUNTS_PER_BIN, 38_400.0, &RamanConstants::silica())
            .expect("valid defaults");
        cfg
    }

    fn base() -> Self {
        Self {
            repetition_rate: 2.5e6,
            pulse_fwhm: 250e-12,
            jitter_fwhm: 40e-12,
            bin_width: 100e-12,
            integration_time: 300.0,
            group_index: 1.468,
            dark_rate_as: 100.0,
            dark_rate_s: 100.0,
            amplitude_a: 1.0,
            amplitude_b: 1.0,
            polarization: PolarizationModel::default(),
        }
    }

    /// Chooses `A` so the anti-Stokes channel collects `as_counts` per bin at
    /// `t_ref`, and `B` so that a calibration referenced to `t_ref` fits to
    /// slope `c1`.
    ///
    /// The reference-subtracted ratio is exactly
    /// `(A/B)/(1 - e^{-C/T0}) · (e^{-C/T} - e^{-C/T0})`, so the fitted slope is
    /// `C1 = (A/B)/(1 - e^{-C/T0})`.
    pub fn scale_amplitudes(&mut self, t_ref: f64, as_counts: f64, c1: f64, rc: &RamanConstants) -> Result<()> {
        if !(as_counts > 0.0 && c1 > 0.0) {
            return Err(Error::Config("amplitude targets must be positive".into()));
        }
        let occupation = rc.occupation(t_ref)?;
        let x0 = rc.boltzmann_factor(t_ref)?;
        self.amplitude_a = as_counts / (occupation * self.counts_per_rate());
        self.amplitude_b = self.amplitude_a / (c1 * (1.0 - x0));
        Ok(())
    }

    pub fn period(&self) -> f64 {
        1.0 / self.repetition_rate
    }

    /// Histogram length, `ceil(period / bin_width)`.
    pub fn bin_count(&self) -> usize {
        let n = self.period() / self.bin_width;
        // tolerate representation error in exact ratios such as 400 ns / 100 ps
        (n - 1e-9).ceil() as usize
    }

    /// Counts per bin accumulated from a rate of 1 count/s:
    /// integration time × (bin width × repetition rate).
    pub fn counts_per_rate(&self) -> f64 {
        self.integration_time * self.bin_width * self.repetition_rate
    }

    /// Channel amplitudes and dark rates in counts/s.
    pub fn channels(&self) -> Result<ChannelCoefficients> {
        ChannelCoefficients::new(self.amplitude_a, self.amplitude_b, self.dark_rate_as, self.dark_rate_s)
    }

    /// Fiber length covered by one time bin, m.
    pub fn bin_length(&self) -> f64 {
        time_to_position(self.bin_width, self.group_index).expect("validated bin width")
    }

    /// FWHM of the combined pulse and jitter response, s.
    pub fn response_fwhm(&self) -> f64 {
        self.pulse_fwhm.hypot(self.jitter_fwhm)
    }

    /// Standard deviation of the combined response along the fiber, m.
    pub fn response_sigma_length(&self) -> f64 {
        time_to_position(self.response_fwhm(), self.group_index).expect("validated") / FWHM_PER_SIGMA
    }

    /// FWHM of the combined response along the fiber, m.
    pub fn spatial_resolution(&self) -> f64 {
        time_to_position(self.response_fwhm(), self.group_index).expect("validated")
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("repetition_rate", self.repetition_rate),
            ("bin_width", self.bin_width),
            ("group_index", self.group_index),
            ("polarization.spatial_period", self.polarization.spatial_period),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("pulse_fwhm", self.pulse_fwhm),
            ("jitter_fwhm", self.jitter_fwhm),
            ("integration_time", self.integration_time),
            ("dark_rate_as", self.dark_rate_as),
            ("dark_rate_s", self.dark_rate_s),
            ("amplitude_a", self.amplitude_a),
            ("amplitude_b", self.amplitude_b),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} must be non-negative, got {v}")));
            }
        }
        let depth = self.polarization.modulation_depth;
        if !(0.0..1.0).contains(&depth) {
            return Err(Error::Config(format!(
                "polarization modulation depth must lie in [0, 1), got {depth}"
            )));
        }
        if self.bin_width > self.period() {
            return Err(Error::Config("bin width exceeds the repetition period".into()));
        }
        Ok(())
    }

    /// Rejects fibers whose round trip does not fit in one repetition period.
    pub fn validate_for(&self, layout: &FiberLayout) -> Result<()> {
        self.validate()?;
        let round_trip = 2.0 * self.group_index * layout.total_length / SPEED_OF_LIGHT;
        if round_trip >= self.period() {
            return Err(Error::Range {
                length_m: layout.total_length,
                round_trip_s: round_trip,
                period_s: self.period(),
            });
        }
        Ok(())
    }
}

/// Round-trip time of flight to fiber position, `c·t / (2·n_g)`.
pub fn time_to_position(t: f64, group_index: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time must be non-negative, got {t} s")));
    }
    if !(group_index > 0.0) {
        return Err(Error::Domain(format!(
            "group index must be positive, got {group_index}"
        )));
    }
    Ok(SPEED_OF_LIGHT * t / (2.0 * group_index))
}

/// Inverse of [`time_to_position`].
pub fn position_to_time(x: f64, group_index: f64) -> f64 {
    2.0 * group_index * x / SPEED_OF_LIGHT
}
