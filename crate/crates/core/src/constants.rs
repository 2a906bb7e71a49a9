//! Exact SI defining constants (2019 redefinition).

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Raman shift of silica used throughout, Hz.
pub const SILICA_RAMAN_SHIFT_HZ: f64 = 13.0e12;

/// Ratio between a Gaussian's FWHM and its standard deviation, 2·sqrt(2 ln 2).
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

/// Converts a temperature in kelvin to degrees Celsius.
pub fn kelvin_to_celsius(t: f64) -> f64 {
    t - 273.15
}
