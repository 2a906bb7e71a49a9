use serde::{Deserialize, Serialize};

use crate::calibration::ratio_from_means;
use crate::error::{Error, Result};
use crate::otdr::{CountHistogram, FiberLayout};
use crate::raman::{invert_temperature, temperature_uncertainty, CalibrationConstants};

/// Temperature estimate per reporting bin along the fiber.
///
/// Invalid bins carry `NaN` temperature and uncertainty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureProfile {
    /// Arc length of the leading edge of bin 0, m.
    pub origin: f64,
    /// m.
    pub bin_length: f64,
    pub temperatures: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub valid: Vec<bool>,
}

impl TemperatureProfile {
    pub fn len(&self) -> usize {
        self.temperatures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.temperatures.is_empty()
    }

    /// Arc length of the centre of bin `i`.
    pub fn center(&self, i: usize) -> f64 {
        self.origin + (i as f64 + 0.5) * self.bin_length
    }

    /// Bin containing arc length `x`, if any.
    pub fn bin_of(&self, x: f64) -> Option<usize> {
        let k = ((x - self.origin) / self.bin_length).floor();
        (k >= 0.0 && (k as usize) < self.len()).then_some(k as usize)
    }

    /// Valid temperature of bin `i`.
    pub fn get(&self, i: usize) -> Option<f64> {
        (i < self.len() && self.valid[i]).then(|| self.temperatures[i])
    }

    /// Marks bin `i` invalid.
    pub fn invalidate(&mut self, i: usize) {
        self.valid[i] = false;
        self.temperatures[i] = f64::NAN;
        self.sigmas[i] = f64::NAN;
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    /// Median propagated uncertainty of the valid bins.
    pub fn median_sigma(&self) -> Option<f64> {
        let mut s: Vec<f64> = self
            .sigmas
            .iter()
            .zip(&self.valid)
            .filter(|(_, v)| **v)
            .map(|(s, _)| *s)
            .collect();
        if s.is_empty() {
            return None;
        }
        s.sort_by(f64::total_cmp);
        Some(s[s.len() / 2])
    }
}

/// Per-bin inversion using raw histogram bins as reporting bins.
pub fn invert_profile(
    as_t: &CountHistogram,
    as_ref: &CountHistogram,
    s_t: &CountHistogram,
    cal: &CalibrationConstants,
    layout: &FiberLayout,
    noise_s: f64,
) -> Result<TemperatureProfile> {
    invert_profile_aggregated(as_t, as_ref, s_t, cal, layout, noise_s, 1)
}

/// Per-bin inversion after summing `aggregate` consecutive raw bins into
/// each reporting bin. `noise_s` is the Stokes floor per raw bin.
///
/// The profile stops at the fiber end. Bins whose Stokes signal does not
/// clear the noise floor, or whose ratio lies outside the invertible range,
/// are flagged invalid.
pub fn invert_profile_aggregated(
    as_t: &CountHistogram,
    as_ref: &CountHistogram,
    s_t: &CountHistogram,
    cal: &CalibrationConstants,
    layout: &FiberLayout,
    noise_s: f64,
    aggregate: usize,
) -> Result<TemperatureProfile> {
    as_t.check_aligned(as_ref)?;
    as_t.check_aligned(s_t)?;
    if aggregate == 0 {
        return Err(Error::Config("aggregation factor must be at least 1".into()));
    }
    let bin_length = as_t.bin_length() * aggregate as f64;
    let on_fiber = (layout.total_length / bin_length).ceil() as usize;
    let n = (as_t.len() / aggregate).min(on_fiber);
    let floor = noise_s * aggregate as f64;
    let sum = |h: &CountHistogram, j: usize| -> f64 {
        h.counts[j * aggregate..(j + 1) * aggregate].iter().sum::<u64>() as f64
    };

    let mut profile = TemperatureProfile {
        origin: 0.0,
        bin_length,
        temperatures: Vec::with_capacity(n),
        sigmas: Vec::with_capacity(n),
        valid: Vec::with_capacity(n),
    };
    for j in 0..n {
        let estimate = ratio_from_means(sum(as_t, j), sum(as_ref, j), sum(s_t, j), 1.0, floor).and_then(|r| {
            let t = invert_temperature(r.value, cal)?;
            Ok((t, temperature_uncertainty(r.value, r.sigma, cal)?))
        });
        match estimate {
            Ok((t, s)) => {
                profile.temperatures.push(t);
                profile.sigmas.push(s);
                profile.valid.push(true);
            }
            Err(_) => {
                profile.temperatures.push(f64::NAN);
                profile.sigmas.push(f64::NAN);
                profile.valid.push(false);
            }
        }
    }
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::otdr::Channel;
    use crate::raman::RamanConstants;

    fn hist(counts: Vec<u64>, channel: Channel) -> CountHistogram {
        CountHistogram {
            bin_width: 100e-12,
            counts,
            channel,
            integration_time: 300.0,
            seed: 0,
            repetition_rate: 2.5e6,
            group_index: 1.468,
        }
    }

    fn layout() -> FiberLayout {
        FiberLayout::new(0.02, vec![[0.0, 0.0], [0.05, 0.0]], 0.5).unwrap()
    }

    #[test]
    fn identical_traces_give_flat_reference_profile() {
        let cal = CalibrationConstants::new(81.0, -9.8, 296.0, RamanConstants::silica()).unwrap();
        let a = hist(vec![10_000; 100], Channel::AntiStokes);
        let s = hist(vec![1_000; 100], Channel::Stokes);
        let p = invert_profile(&a, &a, &s, &cal, &layout(), 7.5).unwrap();
        // 0.5 m of fiber in 1.0211 cm bins
        assert_eq!(p.len(), 49);
        let t_zero = invert_temperature(0.0, &cal).unwrap();
        assert!(p.temperatures.iter().all(|t| (t - t_zero).abs() < 1e-9));
        assert!(p.valid.iter().all(|v| *v));
    }

    #[test]
    fn dim_stokes_bin_is_flagged_alone() {
        let cal = CalibrationConstants::new(81.0, -9.8, 296.0, RamanConstants::silica()).unwrap();
        let a = hist(vec![10_000; 100], Channel::AntiStokes);
        let mut sc = vec![1_000; 100];
        sc[10] = 5;
        let s = hist(sc, Channel::Stokes);
        let p = invert_profile(&a, &a, &s, &cal, &layout(), 7.5).unwrap();
        assert!(!p.valid[10] && p.temperatures[10].is_nan());
        assert!(p.valid[9] && p.valid[11]);
        assert_eq!(p.valid_count(), p.len() - 1);
    }

    #[test]
    fn aggregation_sums_counts() {
        let cal = CalibrationConstants::new(81.0, -9.8, 296.0, RamanConstants::silica()).unwrap();
        let a = hist(vec![10_000; 100], Channel::AntiStokes);
        let s = hist(vec![1_000; 100], Channel::Stokes);
        let single = invert_profile(&a, &a, &s, &cal, &layout(), 0.0).unwrap();
        let double = invert_profile_aggregated(&a, &a, &s, &cal, &layout(), 0.0, 2).unwrap();
        assert!((double.bin_length - 2.0 * single.bin_length).abs() < 1e-15);
        // twice the counts: uncertainty drops by sqrt(2)
        assert!((single.sigmas[0] / double.sigmas[0] - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn misaligned_inputs_are_shape_errors() {
        let cal = CalibrationConstants::room_temperature_reference();
        let a = hist(vec![1; 100], Channel::AntiStokes);
        let b = hist(vec![1; 90], Channel::AntiStokes);
        assert!(matches!(
            invert_profile(&a, &b, &a, &cal, &layout(), 0.0),
            Err(Error::Shape(_))
        ));
    }
}
