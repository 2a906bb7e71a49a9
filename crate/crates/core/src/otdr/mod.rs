//! OTDR trace synthesis for a fiber routed over the heated board.

pub mod board;
pub mod instrument;
pub mod layout;
pub mod sim;

pub use board::{BoardHeater, BoardModel, HeaterState};
pub use instrument::{position_to_time, time_to_position, InstrumentConfig, PolarizationModel};
pub use layout::{temperature_along_fiber, CoiledSerpentine, FiberLayout, FiberTemperature};
pub use sim::{
    derive_seed, expected_counts, expected_rate_profile, sample_histogram, simulate_trace, Channel, CountHistogram,
};
