use std::io::Write;

use super::spatial::ThermogramGrid;
use crate::error::{Error, Result};
use crate::heat::HeaterGeometry;

/// Temperature window mapped onto the colour ramp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorScale {
    pub tmin: f64,
    pub tmax: f64,
}

impl ColorScale {
    pub fn new(tmin: f64, tmax: f64) -> Result<Self> {
        if !(tmin.is_finite() && tmax.is_finite() && tmax > tmin) {
            return Err(Error::Config(format!(
                "color scale needs Tmax > Tmin, got [{tmin}, {tmax}]"
            )));
        }
        Ok(Self { tmin, tmax })
    }

    /// Window from ambient up to the grid maximum, at least 1 K wide.
    pub fn auto(grid: &ThermogramGrid, ambient: f64) -> Self {
        let hi = grid.max().max(ambient + 1.0);
        Self {
            tmin: ambient,
            tmax: hi,
        }
    }
}

/// Stops of the colour ramp, dark blue-black to pale yellow.
/// Lightness rises monotonically along the table.
const RAMP: [[u8; 3]; 9] = [
    [0, 0, 4],
    [31, 12, 72],
    [85, 15, 109],
    [136, 34, 106],
    [186, 54, 85],
    [227, 89, 51],
    [249, 140, 10],
    [249, 201, 50],
    [252, 255, 164],
];

const OVERLAY: [u8; 3] = [255, 255, 255];
/// Dash and gap length of the heater outline, pixels.
const DASH: usize = 3;

/// Colour for temperature `t`; out-of-range values clamp to the ends.
pub fn color_of(t: f64, scale: &ColorScale) -> [u8; 3] {
    let u = ((t - scale.tmin) / (scale.tmax - scale.tmin)).clamp(0.0, 1.0);
    let u = if u.is_nan() { 0.0 } else { u };
    // fixed-point position along the ramp keeps the output exact
    let pos = (u * ((RAMP.len() - 1) * 256) as f64).round() as usize;
    let (i, frac) = (pos / 256, (pos % 256) as u32);
    if i >= RAMP.len() - 1 {
        return RAMP[RAMP.len() - 1];
    }
    let (a, b) = (RAMP[i], RAMP[i + 1]);
    std::array::from_fn(|k| ((a[k] as u32 * (256 - frac) + b[k] as u32 * frac + 128) / 256) as u8)
}

/// 8-bit RGB raster, top row first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    fn put(&mut self, x: usize, y: usize, c: [u8; 3]) {
        let i = 3 * (y * self.width + x);
        self.data[i..i + 3].copy_from_slice(&c);
    }

    /// Binary PPM (P6).
    pub fn write_ppm<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "P6\n{} {}\n255\n", self.width, self.height)?;
        w.write_all(&self.data)?;
        Ok(())
    }

    pub fn to_ppm_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.data.len() + 32);
        self.write_ppm(&mut out).expect("writing to memory");
        out
    }
}

/// Renders the grid with the board's `+y` pointing up and dashed outlines
/// around each heater footprint.
pub fn render_thermogram(grid: &ThermogramGrid, scale: &ColorScale, heaters: &[HeaterGeometry]) -> RgbImage {
    let (w, h) = (grid.cols, grid.rows);
    let mut img = RgbImage {
        width: w,
        height: h,
        data: vec![0; 3 * w * h],
    };
    for row in 0..h {
        for col in 0..w {
            img.put(col, h - 1 - row, color_of(grid.get(row, col), scale));
        }
    }
    for heater in heaters {
        let [x0, y0, x1, y1] = heater.bounds();
        let (r0, c0) = grid.pixel_of([x0, y0]);
        let (r1, c1) = grid.pixel_of([x1, y1]);
        let (top, bottom) = (h - 1 - r1, h - 1 - r0);
        // walk the perimeter once so dashes stay continuous around corners
        let mut perimeter: Vec<(usize, usize)> = Vec::new();
        perimeter.extend((c0..=c1).map(|x| (x, top)));
        perimeter.extend((top + 1..=bottom).map(|y| (c1, y)));
        perimeter.extend((c0..c1).rev().map(|x| (x, bottom)));
        perimeter.extend((top + 1..bottom).rev().map(|y| (c0, y)));
        for (k, (x, y)) in perimeter.into_iter().enumerate() {
            if (k / DASH).is_multiple_of(2) {
                img.put(x, y, OVERLAY);
            }
        }
    }
    img
}
