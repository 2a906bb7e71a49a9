use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heat::HeaterGeometry;

/// Drive state of a heater.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeaterState {
    #[default]
    Off,
    /// Surface temperature rise above ambient, K.
    Rise(f64),
}

impl HeaterState {
    pub fn rise(&self) -> f64 {
        match *self {
            HeaterState::Off => 0.0,
            HeaterState::Rise(dt) => dt,
        }
    }

    pub fn is_active(&self) -> bool {
        self.rise() != 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoardHeater {
    pub id: String,
    pub geometry: HeaterGeometry,
    #[serde(default)]
    pub state: HeaterState,
}

/// Rectangular board with heating elements, origin at its lower-left corner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoardModel {
    pub width: f64,
    pub height: f64,
    pub heaters: Vec<BoardHeater>,
    /// K.
    pub ambient: f64,
}

/// Heater slots of the 15-element board as `(id, column, row)` on a
/// 5 × 3 grid with 3 cm column and 2 cm row pitch.
const PCB_SLOTS: [(&str, usize, usize); 15] = [
    ("R6", 0, 0),
    ("R3", 1, 0),
    ("R11", 2, 0),
    ("R7", 3, 0),
    ("R12", 4, 0),
    ("R1", 0, 1),
    ("R2", 1, 1),
    ("R8", 2, 1),
    ("R10", 3, 1),
    ("R15", 4, 1),
    ("R4", 0, 2),
    ("R5", 1, 2),
    ("R9", 2, 2),
    ("R13", 3, 2),
    ("R14", 4, 2),
];

impl BoardModel {
    /// 15 cm × 6 cm board with fifteen 1 cm² heaters, all off.
    pub fn pcb(ambient: f64) -> Self {
        let heaters = PCB_SLOTS
            .iter()
            .map(|&(id, col, row)| BoardHeater {
                id: id.to_string(),
                geometry: HeaterGeometry::pcb_trace([0.015 + 0.03 * col as f64, 0.01 + 0.02 * row as f64]),
                state: HeaterState::Off,
            })
            .collect();
        Self {
            width: 0.15,
            height: 0.06,
            heaters,
            ambient,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.height > 0.0) {
            return Err(Error::Config(format!(
                "board dimensions must be positive, got {} × {}",
                self.width, self.height
            )));
        }
        if !(self.ambient.is_finite() && self.ambient > 0.0) {
            return Err(Error::Config(format!("ambient must be positive, got {}", self.ambient)));
        }
        for (i, h) in self.heaters.iter().enumerate() {
            h.geometry.validate()?;
            let [x0, y0, x1, y1] = h.geometry.bounds();
            if x0 < 0.0 || y0 < 0.0 || x1 > self.width || y1 > self.height {
                return Err(Error::Config(format!("heater {} footprint leaves the board", h.id)));
            }
            if let HeaterState::Rise(dt) = h.state {
                if !(dt.is_finite() && self.ambient + dt > 0.0) {
                    return Err(Error::Config(format!("heater {} has invalid rise {dt} K", h.id)));
                }
            }
            if self.heaters[..i].iter().any(|o| o.id == h.id) {
                return Err(Error::Config(format!("duplicate heater id {}", h.id)));
            }
        }
        Ok(())
    }

    pub fn heater(&self, id: &str) -> Option<&BoardHeater> {
        self.heaters.iter().find(|h| h.id == id)
    }

    /// Sets one heater's state; unknown ids are a configuration error.
    pub fn set_state(&mut self, id: &str, state: HeaterState) -> Result<()> {
        let h = self
            .heaters
            .iter_mut()
            .find(|h| h.id == id)
            .ok_or_else(|| Error::Config(format!("unknown heater {id}")))?;
        h.state = state;
        Ok(())
    }

    /// Copy of the board with every heater off.
    pub fn all_off(&self) -> Self {
        let mut b = self.clone();
        for h in &mut b.heaters {
            h.state = HeaterState::Off;
        }
        b
    }

    pub fn active_heaters(&self) -> impl Iterator<Item = &BoardHeater> {
        self.heaters.iter().filter(|h| h.state.is_active())
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= 0.0 && p[1] >= 0.0 && p[0] <= self.width && p[1] <= self.height
    }
}
