//! Figures of merit on reconstructed profiles and thermograms.

use serde::{Deserialize, Serialize};

use crate::calibration::CalibrationRegion;
use crate::error::{Error, Result};
use crate::heat::HeaterGeometry;
use crate::otdr::FiberLayout;
use crate::reconstruction::{TemperatureProfile, ThermogramGrid};

/// Heater contact intervals along the fiber, each shrunk by `margin` at
/// both ends. Intervals shorter than `2·margin` are dropped.
pub fn plateau_intervals(layout: &FiberLayout, heater: &HeaterGeometry, margin: f64) -> Vec<(f64, f64)> {
    layout
        .heater_intervals(heater)
        .into_iter()
        .map(|(a, b)| (a + margin, b - margin))
        .filter(|(a, b)| b > a)
        .collect()
}

/// Mean temperature over the valid bins whose centres fall inside any of
/// `intervals`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauEstimate {
    pub temperature: f64,
    /// Propagated standard error of the mean, K.
    pub sigma: f64,
    pub bins: usize,
}

pub fn plateau_temperature(profile: &TemperatureProfile, intervals: &[(f64, f64)]) -> Option<PlateauEstimate> {
    let (mut sum, mut var, mut n) = (0.0, 0.0, 0usize);
    for i in 0..profile.len() {
        let x = profile.center(i);
        if !intervals.iter().any(|&(a, b)| x >= a && x <= b) {
            continue;
        }
        if let Some(t) = profile.get(i) {
            sum += t;
            var += profile.sigmas[i].powi(2);
            n += 1;
        }
    }
    (n > 0).then(|| PlateauEstimate {
        temperature: sum / n as f64,
        sigma: var.sqrt() / n as f64,
        bins: n,
    })
}

/// Calibration region over the first fiber pass of `heater`, kept `margin`
/// away from the contact edges.
pub fn calibration_region_for(layout: &FiberLayout, heater: &HeaterGeometry, margin: f64) -> Result<CalibrationRegion> {
    let (a, b) = plateau_intervals(layout, heater, margin)
        .into_iter()
        .next()
        .ok_or_else(|| Error::Config("fiber contact with the calibration heater is too short".into()))?;
    CalibrationRegion::new(a, b)
}

/// 8-connected set of pixels above a threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HotRegion {
    pub pixels: usize,
    /// `(row, col)` of the hottest pixel.
    pub argmax: (usize, usize),
    /// Board coordinates of the hottest pixel, m.
    pub peak_xy: [f64; 2],
    pub peak: f64,
}

/// Regions of pixels strictly above `threshold`, ordered by first pixel in
/// row-major scan.
pub fn connected_regions(grid: &ThermogramGrid, threshold: f64) -> Vec<HotRegion> {
    let (rows, cols) = (grid.rows, grid.cols);
    let mut seen = vec![false; rows * cols];
    let mut regions = Vec::new();
    let mut stack = Vec::new();
    for start in 0..rows * cols {
        if seen[start] || !(grid.values[start] > threshold) {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let (mut pixels, mut best) = (0usize, start);
        while let Some(i) = stack.pop() {
            pixels += 1;
            if grid.values[i] > grid.values[best] || (grid.values[i] == grid.values[best] && i < best) {
                best = i;
            }
            let (r, c) = ((i / cols) as i64, (i % cols) as i64);
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let (nr, nc) = (r + dr, c + dc);
                    if nr < 0 || nc < 0 || nr >= rows as i64 || nc >= cols as i64 {
                        continue;
                    }
                    let j = nr as usize * cols + nc as usize;
                    if !seen[j] && grid.values[j] > threshold {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        let argmax = (best / cols, best % cols);
        regions.push(HotRegion {
            pixels,
            argmax,
            peak_xy: grid.pixel_center(argmax.0, argmax.1),
            peak: grid.values[best],
        });
    }
    regions
}

/// Error-function edge fitted to a rising step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeFit {
    pub low: f64,
    pub high: f64,
    /// Arc length of the half-height point, m.
    pub center: f64,
    /// Gaussian width of the edge, m.
    pub sigma: f64,
}

/// `Φ⁻¹(0.9) − Φ⁻¹(0.1)` for a unit Gaussian.
const TEN_NINETY_PER_SIGMA: f64 = 2.563_103_131_089_201;

impl EdgeFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.low
            + (self.high - self.low)
                * 0.5
                * (1.0 + libm::erf((x - self.center) / (std::f64::consts::SQRT_2 * self.sigma)))
    }

    /// Distance between the 10 % and 90 % points of the edge.
    pub fn width_10_90(&self) -> f64 {
        TEN_NINETY_PER_SIGMA * self.sigma
    }
}

fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let piv = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..4 {
            let f = a[r][col] / a[col][col];
            let pivot_row = a[col];
            for (dst, src) in a[r][col..].iter_mut().zip(&pivot_row[col..]) {
                *dst -= f * src;
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for r in (0..4).rev() {
        let s: f64 = (r + 1..4).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Least-squares fit of an error-function edge to `(x, y)` samples with
/// Levenberg–Marquardt, started from the data's range and midpoint crossing.
pub fn fit_edge(samples: &[(f64, f64)]) -> Result<EdgeFit> {
    if samples.len() < 5 {
        return Err(Error::DegenerateFit("edge fit needs at least 5 samples".into()));
    }
    let k = (samples.len() / 5).max(1);
    let mean = |s: &[(f64, f64)]| s.iter().map(|p| p.1).sum::<f64>() / s.len() as f64;
    let low = mean(&samples[..k]);
    let high = mean(&samples[samples.len() - k..]);
    let mid = 0.5 * (low + high);
    let x0 = samples
        .iter()
        .find(|p| (p.1 - mid) * (high - low).signum() >= 0.0)
        .map_or(samples[samples.len() / 2].0, |p| p.0);
    let span = samples[samples.len() - 1].0 - samples[0].0;
    let mut p = [low, high, x0, span / 20.0];

    let residual = |p: &[f64; 4]| -> f64 {
        let f = EdgeFit {
            low: p[0],
            high: p[1],
            center: p[2],
            sigma: p[3],
        };
        samples.iter().map(|&(x, y)| (y - f.eval(x)).powi(2)).sum()
    };
    let mut cost = residual(&p);
    let mut lambda = 1e-3;
    for _ in 0..200 {
        let mut jtj = [[0.0; 4]; 4];
        let mut jtr = [0.0; 4];
        for &(x, y) in samples {
            let z = (x - p[2]) / (std::f64::consts::SQRT_2 * p[3]);
            let phi = 0.5 * (1.0 + libm::erf(z));
            let g = (-z * z).exp() / (std::f64::consts::PI.sqrt() * std::f64::consts::SQRT_2 * p[3]);
            let amp = p[1] - p[0];
            let j = [1.0 - phi, phi, -amp * g, -amp * g * (x - p[2]) / p[3]];
            let r = y - (p[0] + amp * phi);
            for a in 0..4 {
                jtr[a] += j[a] * r;
                for b in 0..4 {
                    jtj[a][b] += j[a] * j[b];
                }
            }
        }
        let mut improved = false;
        for _ in 0..20 {
            let mut m = jtj;
            for (d, row) in m.iter_mut().enumerate() {
                row[d] += lambda * jtj[d][d].max(1e-30);
            }
            let Some(step) = solve4(m, jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [
                p[0] + step[0],
                p[1] + step[1],
                p[2] + step[2],
                (p[3] + step[3]).abs().max(1e-12),
            ];
            let c = residual(&trial);
            if c < cost {
                let converged = (cost - c) <= 1e-14 * cost.max(1e-300);
                p = trial;
                cost = c;
                lambda = (lambda * 0.3).max(1e-12);
                improved = !converged;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    if !p.iter().all(|v| v.is_finite()) {
        return Err(Error::Numeric("edge fit diverged".into()));
    }
    Ok(EdgeFit {
        low: p[0],
        high: p[1],
        center: p[2],
        sigma: p[3],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::otdr::BoardModel;

    #[test]
    fn edge_fit_recovers_a_noiseless_erf() {
        let truth = EdgeFit {
            low: 296.0,
            high: 338.0,
            center: 4.0,
            sigma: 0.011,
        };
        let samples: Vec<_> = (0..80)
            .map(|i| {
                let x = 3.8 + i as f64 * 0.005;
                (x, truth.eval(x))
            })
            .collect();
        let fit = fit_edge(&samples).unwrap();
        assert!((fit.sigma - truth.sigma).abs() < 1e-7, "{fit:?}");
        assert!((fit.center - truth.center).abs() < 1e-7);
        assert!((fit.width_10_90() - 2.5631 * 0.011).abs() < 1e-5);
    }

    #[test]
    fn ten_ninety_constant_matches_the_inverse_normal() {
        // erf(z/√2) = 0.8 at z = 1.2815515655
        let z = TEN_NINETY_PER_SIGMA / 2.0;
        assert!((libm::erf(z / std::f64::consts::SQRT_2) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn regions_are_eight_connected() {
        let board = BoardModel {
            width: 0.005,
            height: 0.005,
            heaters: vec![],
            ambient: 0.0,
        };
        let mut g = ThermogramGrid::for_board(&board, 0.001, 0.0).unwrap();
        // diagonal pair plus an isolated pixel
        g.values[0] = 5.0;
        g.values[6] = 7.0;
        g.values[24] = 3.0;
        let r = connected_regions(&g, 1.0);
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].pixels, 2);
        assert_eq!(r[0].argmax, (1, 1));
        assert_eq!(r[0].peak, 7.0);
        assert_eq!(r[1].argmax, (4, 4));
        assert!(connected_regions(&g, 10.0).is_empty());
    }

    #[test]
    fn plateau_intervals_sit_inside_contacts() {
        let board = BoardModel::pcb(296.0);
        let layout = FiberLayout::coiled_serpentine(&board, &Default::default()).unwrap();
        let h = board.heater("R9").unwrap().geometry;
        let full = layout.heater_intervals(&h);
        let inner = plateau_intervals(&layout, &h, 0.026);
        assert_eq!(inner.len(), full.len());
        for (f, i) in full.iter().zip(&inner) {
            assert!((i.0 - f.0 - 0.026).abs() < 1e-12 && (f.1 - i.1 - 0.026).abs() < 1e-12);
        }
        let region = calibration_region_for(&layout, &h, 0.026).unwrap();
        assert_eq!((region.start, region.end), inner[0]);
    }

    #[test]
    fn plateau_mean_skips_invalid_bins() {
        let mut p = TemperatureProfile {
            origin: 0.0,
            bin_length: 0.01,
            temperatures: vec![1.0, 2.0, 4.0, 100.0],
            sigmas: vec![1.0; 4],
            valid: vec![true; 4],
        };
        p.invalidate(1);
        let e = plateau_temperature(&p, &[(0.0, 0.03)]).unwrap();
        assert_eq!(e.bins, 2);
        assert!((e.temperature - 2.5).abs() < 1e-12);
        assert!((e.sigma - 2f64.sqrt() / 2.0).abs() < 1e-12);
        assert!(plateau_temperature(&p, &[(0.5, 0.6)]).is_none());
    }
}
