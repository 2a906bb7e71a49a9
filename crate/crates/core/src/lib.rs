//! Software twin of a centimetre-resolution Raman distributed temperature
//! sensor used for thermography of a Joule-heated circuit board.
//!
//! The crate covers the full analysis chain:
//!
//! * [`raman`]: anti-Stokes/Stokes count-rate law, calibration ratio and its
//!   exact inversion,
//! * [`heat`]: heater resistance, Joule power and the quadratic `ΔT(I)` fit,
//! * [`otdr`]: seeded photon-counting simulation of OTDR histograms,
//! * [`calibration`]: reference-subtracted ratio and the two-constant fit,
//! * [`reconstruction`]: per-bin inversion and the 2-D thermogram pipeline,
//! * [`io`] and [`pipeline`]: file formats and end-to-end experiment runs.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod calibration;
pub mod constants;
pub mod error;
pub mod heat;
pub mod io;
pub mod otdr;
pub mod pipeline;
pub mod raman;
pub mod reconstruction;

pub use calibration::{CalibrationPoint, CalibrationRegion};
pub use error::{Error, Result};
pub use otdr::{BoardModel, Channel, CountHistogram, FiberLayout, InstrumentConfig};
pub use raman::{CalibrationConstants, ChannelCoefficients, RamanConstants};
pub use reconstruction::{SamplePoint, TemperatureProfile, ThermogramGrid};
