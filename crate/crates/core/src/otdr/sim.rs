//! Seeded photon-counting synthesis of OTDR histograms.
//!
//! Each bin is an independent Poisson draw around its expected count, with
//! its own random stream derived from `(seed, channel, bin index)`. Serial
//! and parallel evaluation therefore agree bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::board::BoardModel;
use super::instrument::{time_to_position, InstrumentConfig};
use super::layout::{temperature_along_fiber, FiberLayout, FiberTemperature};
use crate::constants::FWHM_PER_SIGMA;
use crate::error::{Error, Result};
use crate::raman::RamanConstants;

/// Sub-samples per time bin used to resolve temperature edges and the
/// response kernel.
pub const OVERSAMPLING: usize = 8;

/// The kernel is truncated at this many standard deviations.
const KERNEL_HALF_WIDTH_SIGMAS: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    #[serde(rename = "AS")]
    AntiStokes,
    #[serde(rename = "S")]
    Stokes,
}

impl Channel {
    pub fn tag(self) -> &'static str {
        match self {
            Channel::AntiStokes => "AS",
            Channel::Stokes => "S",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "AS" => Ok(Channel::AntiStokes),
            "S" => Ok(Channel::Stokes),
            other => Err(Error::Parse(format!("unknown channel {other:?}"))),
        }
    }

    fn stream_id(self) -> u64 {
        match self {
            Channel::AntiStokes => 0xA5,
            Channel::Stokes => 0x5A,
        }
    }
}

/// Photon counts per time bin for one detection channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountHistogram {
    /// s.
    pub bin_width: f64,
    pub counts: Vec<u64>,
    pub channel: Channel,
    /// s.
    pub integration_time: f64,
    pub seed: u64,
    /// Hz.
    pub repetition_rate: f64,
    pub group_index: f64,
}

impl CountHistogram {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Fiber length covered by one bin, m.
    pub fn bin_length(&self) -> f64 {
        time_to_position(self.bin_width, self.group_index).unwrap_or(f64::NAN)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Checks that two histograms share binning.
    pub fn check_aligned(&self, other: &CountHistogram) -> Result<()> {
        let same_width = (self.bin_width - other.bin_width).abs() <= 1e-9 * self.bin_width;
        let same_index = (self.group_index - other.group_index).abs() <= 1e-12;
        if !same_width || self.len() != other.len() || !same_index {
            return Err(Error::Shape(format!(
                "histograms differ: {} bins of {:e} s (n_g {}) vs {} bins of {:e} s (n_g {})",
                self.len(),
                self.bin_width,
                self.group_index,
                other.len(),
                other.bin_width,
                other.group_index
            )));
        }
        Ok(())
    }
}

/// Normalised discrete response kernel on the oversampled grid: cell
/// integrals of a Gaussian with the combined pulse and jitter FWHM.
pub fn response_kernel(instrument: &InstrumentConfig) -> Vec<f64> {
    let dt = instrument.bin_width / OVERSAMPLING as f64;
    let sigma = instrument.response_fwhm() / FWHM_PER_SIGMA / dt;
    if sigma < 1e-6 {
        return vec![1.0];
    }
    let half = (KERNEL_HALF_WIDTH_SIGMAS * sigma).ceil() as i64;
    let cdf = |z: f64| 0.5 * (1.0 + libm::erf(z / (sigma * std::f64::consts::SQRT_2)));
    let mut k: Vec<f64> = (-half..=half)
        .map(|j| cdf(j as f64 + 0.5) - cdf(j as f64 - 0.5))
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Circular convolution with a centred odd-length kernel.
fn convolve_circular(signal: &[f64], kernel: &[f64]) -> Vec<f64> {
    let n = signal.len() as i64;
    let half = (kernel.len() / 2) as i64;
    (0..n)
        .into_par_iter()
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .map(|(j, w)| {
                    let src = (i - (j as i64 - half)).rem_euclid(n);
                    w * signal[src as usize]
                })
                .sum()
        })
        .collect()
}

/// Expected counts per bin for one channel.
///
/// The channel rate (Bose-Einstein law times the polarization factor) is
/// evaluated on an oversampled position grid, blurred by the pulse and
/// jitter response, averaged into time bins, offset by the dark rate, and
/// scaled by integration time × duty factor.
pub fn expected_counts(
    temperature: &FiberTemperature,
    instrument: &InstrumentConfig,
    channel: Channel,
    raman: &RamanConstants,
) -> Result<Vec<f64>> {
    instrument.validate()?;
    let bins = instrument.bin_count();
    let fine = bins * OVERSAMPLING;
    let dx = instrument.bin_length() / OVERSAMPLING as f64;
    let rates: Vec<f64> = (0..fine)
        .into_par_iter()
        .map(|j| {
            let x = (j as f64 + 0.5) * dx;
            if x > temperature.total_length {
                return Ok(0.0);
            }
            let occ = raman.occupation(temperature.at(x))?;
            let gain = instrument.polarization.factor(x);
            Ok(match channel {
                Channel::AntiStokes => gain * instrument.amplitude_a * occ,
                Channel::Stokes => gain * instrument.amplitude_b * (occ + 1.0),
            })
        })
        .collect::<Result<_>>()?;
    let blurred = convolve_circular(&rates, &response_kernel(instrument));
    let dark = match channel {
        Channel::AntiStokes => instrument.dark_rate_as,
        Channel::Stokes => instrument.dark_rate_s,
    };
    let scale = instrument.counts_per_rate();
    Ok(blurred
        .chunks_exact(OVERSAMPLING)
        .map(|c| (c.iter().sum::<f64>() / OVERSAMPLING as f64 + dark) * scale)
        .collect())
}

/// Expected counts for a board and fiber layout.
pub fn expected_rate_profile(
    board: &BoardModel,
    layout: &FiberLayout,
    instrument: &InstrumentConfig,
    channel: Channel,
    raman: &RamanConstants,
) -> Result<Vec<f64>> {
    board.validate()?;
    layout.validate(board)?;
    instrument.validate_for(layout)?;
    expected_counts(&temperature_along_fiber(board, layout), instrument, channel, raman)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the random stream for one bin.
pub fn bin_stream_seed(seed: u64, channel: Channel, bin: usize) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(channel.stream_id())) ^ bin as u64)
}

/// Derives an independent seed for a named acquisition from a base seed.
pub fn derive_seed(base: u64, label: &str) -> u64 {
    // FNV-1a keeps the mapping stable across toolchains.
    let hash = label.bytes().fold(0xCBF2_9CE4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    });
    splitmix64(base ^ splitmix64(hash))
}

fn poisson_draw(mean: f64, seed: u64) -> u64 {
    if !(mean > 0.0) {
        return 0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Poisson::new(mean).expect("finite positive mean");
    dist.sample(&mut rng) as u64
}

/// Draws a Poisson histogram around `expected`.
pub fn sample_histogram(
    expected: &[f64],
    instrument: &InstrumentConfig,
    channel: Channel,
    seed: u64,
) -> CountHistogram {
    let counts = expected
        .par_iter()
        .enumerate()
        .map(|(i, &m)| poisson_draw(m, bin_stream_seed(seed, channel, i)))
        .collect();
    CountHistogram {
        bin_width: instrument.bin_width,
        counts,
        channel,
        integration_time: instrument.integration_time,
        seed,
        repetition_rate: instrument.repetition_rate,
        group_index: instrument.group_index,
    }
}

/// One simulated acquisition of `channel` for the given board state.
pub fn simulate_trace(
    board: &BoardModel,
    layout: &FiberLayout,
    instrument: &InstrumentConfig,
    channel: Channel,
    raman: &RamanConstants,
    seed: u64,
) -> Result<CountHistogram> {
    let expected = expected_rate_profile(board, layout, instrument, channel, raman)?;
    Ok(sample_histogram(&expected, instrument, channel, seed))
}
