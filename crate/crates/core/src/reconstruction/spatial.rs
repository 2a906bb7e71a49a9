use serde::{Deserialize, Serialize};

use super::profile::TemperatureProfile;
use crate::constants::FWHM_PER_SIGMA;
use crate::error::{Error, Result};
use crate::otdr::{BoardModel, FiberLayout};

/// How arc length maps onto bin indices: `floor((s - origin) / bin_length)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinGrid {
    pub origin: f64,
    pub bin_length: f64,
}

impl BinGrid {
    /// Bins counted from the point where the fiber enters the board.
    pub fn on_board(layout: &FiberLayout, bin_length: f64) -> Self {
        Self {
            origin: layout.lead_in,
            bin_length,
        }
    }

    /// The binning of an inverted profile.
    pub fn of_profile(p: &TemperatureProfile) -> Self {
        Self {
            origin: p.origin,
            bin_length: p.bin_length,
        }
    }

    pub fn index(&self, arc_length: f64) -> usize {
        ((arc_length - self.origin) / self.bin_length + 1e-9).floor().max(0.0) as usize
    }
}

/// A point picked along the fiber path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    /// Arc length from the launch end, m.
    pub arc_length: f64,
    pub board_xy: [f64; 2],
    pub bin_index: usize,
    /// Sequence number used to colour the point in plots.
    pub color_tag: u32,
}

/// Points every `spacing` metres along the on-board path, starting where the
/// fiber enters the board.
pub fn sample_path(layout: &FiberLayout, spacing: f64, bins: BinGrid) -> Result<Vec<SamplePoint>> {
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::Config(format!("sample spacing must be positive, got {spacing}")));
    }
    if !(bins.bin_length > 0.0) {
        return Err(Error::Config("bin length must be positive".into()));
    }
    let length = layout.path_length();
    if spacing > length {
        return Err(Error::EmptyPath(format!(
            "spacing {spacing} m exceeds the on-board path length {length} m"
        )));
    }
    let count = (length / spacing + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|k| {
            let s = (k as f64 * spacing).min(length);
            let arc = layout.lead_in + s;
            SamplePoint {
                arc_length: arc,
                board_xy: layout.point_at(s),
                bin_index: bins.index(arc),
                color_tag: k as u32,
            }
        })
        .collect())
}

/// Raster of absolute temperatures over the board.
///
/// `values[row * cols + col]`; row 0 is the lowest `y`. Pixel `(row, col)`
/// is centred at `origin + (col, row) · resolution`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermogramGrid {
    /// m per pixel.
    pub resolution: f64,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
    /// Board coordinates of the centre of pixel (0, 0), m.
    pub origin: [f64; 2],
}

impl ThermogramGrid {
    /// Board-sized grid filled with `value`.
    pub fn for_board(board: &BoardModel, resolution: f64, value: f64) -> Result<Self> {
        if !(resolution > 0.0) {
            return Err(Error::Config(format!(
                "grid resolution must be positive, got {resolution}"
            )));
        }
        let cols = (board.width / resolution).round().max(1.0) as usize;
        let rows = (board.height / resolution).round().max(1.0) as usize;
        Ok(Self {
            resolution,
            rows,
            cols,
            values: vec![value; rows * cols],
            origin: [0.5 * resolution, 0.5 * resolution],
        })
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn pixel_center(&self, row: usize, col: usize) -> [f64; 2] {
        [
            self.origin[0] + col as f64 * self.resolution,
            self.origin[1] + row as f64 * self.resolution,
        ]
    }

    /// Nearest pixel to a board point, clamped to the grid.
    pub fn pixel_of(&self, p: [f64; 2]) -> (usize, usize) {
        let col = ((p[0] - self.origin[0]) / self.resolution).round();
        let row = ((p[1] - self.origin[1]) / self.resolution).round();
        (
            row.clamp(0.0, (self.rows - 1) as f64) as usize,
            col.clamp(0.0, (self.cols - 1) as f64) as usize,
        )
    }

    /// `(row, col, value)` of the maximum; first occurrence in row-major order.
    pub fn argmax(&self) -> (usize, usize, f64) {
        let (i, v) =
            self.values.iter().enumerate().fold(
                (0, f64::NEG_INFINITY),
                |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) },
            );
        (i / self.cols, i % self.cols, v)
    }

    pub fn max(&self) -> f64 {
        self.argmax().2
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Peak-normalised Gaussian `2^{-(2d/fwhm)²}`.
fn hotspot_weight(d2: f64, fwhm: f64) -> f64 {
    (-4.0 * std::f64::consts::LN_2 * d2 / (fwhm * fwhm)).exp()
}

/// Splats one Gaussian hotspot per valid sample point onto an ambient grid.
///
/// Each point contributes `(T_bin - ambient)·G(d)` with `G` peaking at 1.
/// Where contributions overlap, the pixel takes their maximum, so repeated
/// passes of the fiber over one spot do not add up. Pixels farther than
/// three FWHM from every valid point stay at ambient.
pub fn splat_gaussians(
    points: &[SamplePoint],
    profile: &TemperatureProfile,
    board: &BoardModel,
    fwhm: f64,
    resolution: f64,
) -> Result<ThermogramGrid> {
    if !(fwhm > 0.0) {
        return Err(Error::Config(format!("hotspot FWHM must be positive, got {fwhm}")));
    }
    let ambient = board.ambient;
    let mut grid = ThermogramGrid::for_board(board, resolution, ambient)?;
    let mut best = vec![f64::NEG_INFINITY; grid.values.len()];
    let reach = 3.0 * fwhm;
    let span = (reach / resolution).ceil() as i64;
    for p in points {
        let Some(t) = profile.get(p.bin_index) else {
            continue;
        };
        let dt = t - ambient;
        let (r0, c0) = grid.pixel_of(p.board_xy);
        let rows = (r0 as i64 - span).max(0)..=(r0 as i64 + span).min(grid.rows as i64 - 1);
        for r in rows {
            let cols = (c0 as i64 - span).max(0)..=(c0 as i64 + span).min(grid.cols as i64 - 1);
            for c in cols {
                let [x, y] = grid.pixel_center(r as usize, c as usize);
                let d2 = (x - p.board_xy[0]).powi(2) + (y - p.board_xy[1]).powi(2);
                if d2 > reach * reach {
                    continue;
                }
                let v = dt * hotspot_weight(d2, fwhm);
                let slot = &mut best[r as usize * grid.cols + c as usize];
                if v > *slot {
                    *slot = v;
                }
            }
        }
    }
    for (value, b) in grid.values.iter_mut().zip(best) {
        if b.is_finite() {
            *value = ambient + b;
        }
    }
    Ok(grid)
}

fn gaussian_taps(sigma_px: f64) -> Vec<f64> {
    if sigma_px < 1e-9 {
        return vec![1.0];
    }
    let half = (4.0 * sigma_px).ceil() as i64;
    let mut k: Vec<f64> = (-half..=half)
        .map(|i| (-0.5 * (i as f64 / sigma_px).powi(2)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Separable, normalised Gaussian smoothing with replicated edges.
pub fn gaussian_filter(grid: &ThermogramGrid, fwhm: f64) -> Result<ThermogramGrid> {
    if !(fwhm > 0.0) {
        return Err(Error::Config(format!("filter FWHM must be positive, got {fwhm}")));
    }
    let taps = gaussian_taps(fwhm / FWHM_PER_SIGMA / grid.resolution);
    let half = (taps.len() / 2) as i64;
    let (rows, cols) = (grid.rows as i64, grid.cols as i64);
    let idx = |r: i64, c: i64| (r.clamp(0, rows - 1) * cols + c.clamp(0, cols - 1)) as usize;

    let mut horizontal = vec![0.0; grid.values.len()];
    for r in 0..rows {
        for c in 0..cols {
            horizontal[(r * cols + c) as usize] = taps
                .iter()
                .enumerate()
                .map(|(k, w)| w * grid.values[idx(r, c + k as i64 - half)])
                .sum();
        }
    }
    let mut out = grid.clone();
    for r in 0..rows {
        for c in 0..cols {
            out.values[(r * cols + c) as usize] = taps
                .iter()
                .enumerate()
                .map(|(k, w)| w * horizontal[idx(r + k as i64 - half, c)])
                .sum();
        }
    }
    Ok(out)
}
