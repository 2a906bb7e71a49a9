//! From histograms to temperature profiles and board thermograms.
//!
//! The spatial pipeline runs in four steps: sample the fiber path at a fixed
//! arc-length spacing, map each sample to its profile bin, splat one Gaussian
//! hotspot per sample, then smooth the map with a Gaussian filter.

pub mod profile;
pub mod render;
pub mod spatial;

pub use profile::{invert_profile, invert_profile_aggregated, TemperatureProfile};
pub use render::{color_of, render_thermogram, ColorScale, RgbImage};
pub use spatial::{gaussian_filter, sample_path, splat_gaussians, BinGrid, SamplePoint, ThermogramGrid};
