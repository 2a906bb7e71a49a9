use serde::{Deserialize, Serialize};

use super::board::BoardModel;
use crate::error::{Error, Result};
use crate::heat::HeaterGeometry;

/// Fiber path: an off-board lead-in, a polyline across the board, and an
/// off-board tail up to `total_length`.
///
/// Arc lengths are measured from the launch end of the fiber unless a
/// method says otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberLayout {
    /// m.
    pub lead_in: f64,
    /// Board-plane vertices, m.
    pub path: Vec<[f64; 2]>,
    /// m.
    pub total_length: f64,
}

/// Parameters of the generated serpentine layout with coils over heaters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoiledSerpentine {
    pub lead_in: f64,
    pub total_length: f64,
    /// Full passes over the board; every heater is coiled once per pass.
    pub sweeps: usize,
    /// Row offset from the heater row for each sweep (cycled), m.
    pub row_offsets: Vec<f64>,
    pub coil_radius: f64,
    pub coil_turns: usize,
    pub segments_per_turn: usize,
    /// Distance of the row turnarounds from the board edge, m.
    pub edge_margin: f64,
}

impl Default for CoiledSerpentine {
    fn default() -> Self {
        Self {
            lead_in: 2.0,
            total_length: 10.0,
            sweeps: 3,
            row_offsets: vec![-0.0015, 0.0, 0.0015],
            coil_radius: 0.0025,
            coil_turns: 7,
            segments_per_turn: 24,
            edge_margin: 0.005,
        }
    }
}

impl FiberLayout {
    pub fn new(lead_in: f64, path: Vec<[f64; 2]>, total_length: f64) -> Result<Self> {
        let layout = Self {
            lead_in,
            path,
            total_length,
        };
        layout.validate_shape()?;
        Ok(layout)
    }

    fn validate_shape(&self) -> Result<()> {
        if !(self.lead_in.is_finite() && self.lead_in >= 0.0) {
            return Err(Error::Config(format!(
                "lead-in must be non-negative, got {}",
                self.lead_in
            )));
        }
        if self.path.len() < 2 {
            return Err(Error::Config("fiber path needs at least two vertices".into()));
        }
        if self.path.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::Config("fiber path has non-finite coordinates".into()));
        }
        let on_board = self.path_length();
        if !(self.total_length >= self.lead_in + on_board - 1e-12) {
            return Err(Error::Config(format!(
                "total length {} m is shorter than lead-in plus path ({} m)",
                self.total_length,
                self.lead_in + on_board
            )));
        }
        Ok(())
    }

    /// Full validation, including that the path stays on the board.
    pub fn validate(&self, board: &BoardModel) -> Result<()> {
        self.validate_shape()?;
        let eps = 1e-12;
        if let Some(p) = self
            .path
            .iter()
            .find(|p| p[0] < -eps || p[1] < -eps || p[0] > board.width + eps || p[1] > board.height + eps)
        {
            return Err(Error::Config(format!("fiber vertex {p:?} lies outside the board")));
        }
        Ok(())
    }

    /// On-board polyline length, m.
    pub fn path_length(&self) -> f64 {
        self.path.windows(2).map(|w| seg_len(w[0], w[1])).sum()
    }

    /// Arc length where the fiber leaves the board.
    pub fn board_end(&self) -> f64 {
        self.lead_in + self.path_length()
    }

    /// Board point at on-board arc length `s` (clamped to the path).
    pub fn point_at(&self, s: f64) -> [f64; 2] {
        let mut remaining = s.max(0.0);
        for w in self.path.windows(2) {
            let l = seg_len(w[0], w[1]);
            if remaining <= l {
                let f = if l > 0.0 { remaining / l } else { 0.0 };
                return lerp(w[0], w[1], f);
            }
            remaining -= l;
        }
        *self.path.last().expect("validated path")
    }

    /// Fiber arc-length intervals (from the launch end) lying inside the
    /// closed heater footprint. Touching intervals are merged.
    pub fn heater_intervals(&self, heater: &HeaterGeometry) -> Vec<(f64, f64)> {
        let bounds = heater.bounds();
        let mut out: Vec<(f64, f64)> = Vec::new();
        let mut s0 = self.lead_in;
        for w in self.path.windows(2) {
            let l = seg_len(w[0], w[1]);
            if let Some((t0, t1)) = clip_segment(w[0], w[1], bounds) {
                let (a, b) = (s0 + t0 * l, s0 + t1 * l);
                match out.last_mut() {
                    Some(last) if a <= last.1 + 1e-12 => last.1 = last.1.max(b),
                    _ => out.push((a, b)),
                }
            }
            s0 += l;
        }
        out
    }

    /// Serpentine over the heater rows of `board`, coiling over each heater.
    pub fn coiled_serpentine(board: &BoardModel, p: &CoiledSerpentine) -> Result<Self> {
        if p.sweeps == 0 || p.row_offsets.is_empty() || p.segments_per_turn < 3 {
            return Err(Error::Config("invalid serpentine parameters".into()));
        }
        let mut rows: Vec<(f64, Vec<&HeaterGeometry>)> = Vec::new();
        for h in &board.heaters {
            let y = h.geometry.center[1];
            match rows.iter_mut().find(|(ry, _)| (ry - y).abs() < 1e-9) {
                Some((_, hs)) => hs.push(&h.geometry),
                None => rows.push((y, vec![&h.geometry])),
            }
        }
        if rows.is_empty() {
            return Err(Error::Config("board has no heaters to route over".into()));
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (_, hs) in &mut rows {
            hs.sort_by(|a, b| a.center[0].total_cmp(&b.center[0]));
        }

        let (left, right) = (p.edge_margin, board.width - p.edge_margin);
        let mut path: Vec<[f64; 2]> = Vec::new();
        let mut forward = true;
        for sweep in 0..p.sweeps {
            let dy = p.row_offsets[sweep % p.row_offsets.len()];
            let order: Vec<usize> = if sweep % 2 == 0 {
                (0..rows.len()).collect()
            } else {
                (0..rows.len()).rev().collect()
            };
            for ri in order {
                let (ry, heaters) = &rows[ri];
                let y = ry + dy;
                let (start, end) = if forward { (left, right) } else { (right, left) };
                path.push([start, y]);
                let dir = if forward { 1.0 } else { -1.0 };
                let visit: Vec<&&HeaterGeometry> = if forward {
                    heaters.iter().collect()
                } else {
                    heaters.iter().rev().collect()
                };
                for g in visit {
                    let cx = g.center[0];
                    let r = p.coil_radius;
                    let theta0: f64 = if forward { std::f64::consts::PI } else { 0.0 };
                    path.push([cx + r * theta0.cos(), y]);
                    let steps = p.coil_turns * p.segments_per_turn;
                    for k in 1..=steps {
                        let th = theta0 + dir * std::f64::consts::TAU * k as f64 / p.segments_per_turn as f64;
                        path.push([cx + r * th.cos(), y + r * th.sin()]);
                    }
                    path.push([cx - r * theta0.cos(), y]);
                }
                path.push([end, y]);
                forward = !forward;
            }
        }
        path.dedup();
        let layout = Self::new(p.lead_in, path, p.total_length)?;
        layout.validate(board)?;
        Ok(layout)
    }
}

fn seg_len(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
}

fn lerp(a: [f64; 2], b: [f64; 2], f: f64) -> [f64; 2] {
    [a[0] + (b[0] - a[0]) * f, a[1] + (b[1] - a[1]) * f]
}

/// Liang-Barsky clip of segment `a→b` to a closed box; returns the parameter
/// range inside.
fn clip_segment(a: [f64; 2], b: [f64; 2], [x0, y0, x1, y1]: [f64; 4]) -> Option<(f64, f64)> {
    let d = [b[0] - a[0], b[1] - a[1]];
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for (p, q) in [
        (-d[0], a[0] - x0),
        (d[0], x1 - a[0]),
        (-d[1], a[1] - y0),
        (d[1], y1 - a[1]),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
        }
    }
    (t0 <= t1).then_some((t0, t1))
}

/// Piecewise-constant temperature along the fiber.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberTemperature {
    pub ambient: f64,
    /// `(start, end, temperature)` intervals sorted by start, closed.
    pub segments: Vec<(f64, f64, f64)>,
    pub total_length: f64,
}

impl FiberTemperature {
    pub fn uniform(ambient: f64, total_length: f64) -> Self {
        Self {
            ambient,
            segments: Vec::new(),
            total_length,
        }
    }

    /// Temperature at arc length `x`; the hottest segment wins where
    /// footprints overlap.
    pub fn at(&self, x: f64) -> f64 {
        self.segments
            .iter()
            .filter(|s| x >= s.0 && x <= s.1)
            .map(|s| s.2)
            .fold(None, |acc: Option<f64>, t| Some(acc.map_or(t, |a| a.max(t))))
            .unwrap_or(self.ambient)
    }

    /// Elevated intervals, merged where adjacent.
    pub fn elevated_intervals(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for &(a, b, t) in &self.segments {
            if t == self.ambient {
                continue;
            }
            match out.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        out
    }
}

/// Fiber temperature for a board: heater surface temperature inside active
/// footprints (ideal contact), ambient everywhere else.
pub fn temperature_along_fiber(board: &BoardModel, layout: &FiberLayout) -> FiberTemperature {
    let mut segments: Vec<(f64, f64, f64)> = Vec::new();
    for h in board.active_heaters() {
        let t = board.ambient + h.state.rise();
        for (a, b) in layout.heater_intervals(&h.geometry) {
            segments.push((a, b, t));
        }
    }
    segments.sort_by(|a, b| a.0.total_cmp(&b.0));
    FiberTemperature {
        ambient: board.ambient,
        segments,
        total_length: layout.total_length,
    }
}
