//! Two-constant temperature calibration from reference-subtracted traces.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::otdr::CountHistogram;
use crate::raman::{
    as_rate, invert_temperature, s_rate, temperature_uncertainty, CalibrationConstants, ChannelCoefficients,
    RamanConstants,
};

/// Fiber window averaged for calibration, arc length from the launch end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationRegion {
    /// m.
    pub start: f64,
    /// m.
    pub end: f64,
}

/// Minimum number of whole bins in a calibration region.
pub const MIN_REGION_BINS: usize = 3;

impl CalibrationRegion {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !(start.is_finite() && end.is_finite() && start >= 0.0 && end > start) {
            return Err(Error::Config(format!("invalid calibration region [{start}, {end}] m")));
        }
        Ok(Self { start, end })
    }

    /// Bins lying entirely inside the region; partial bins are excluded.
    pub fn bins(&self, bin_length: f64) -> Result<Range<usize>> {
        if !(self.end > self.start && self.start >= 0.0) {
            return Err(Error::Config(format!(
                "invalid calibration region [{}, {}] m",
                self.start, self.end
            )));
        }
        let first = (self.start / bin_length - 1e-9).ceil().max(0.0) as usize;
        let last = (self.end / bin_length + 1e-9).floor() as usize;
        if last < first + MIN_REGION_BINS {
            return Err(Error::Config(format!(
                "calibration region [{}, {}] m covers fewer than {MIN_REGION_BINS} whole bins",
                self.start, self.end
            )));
        }
        Ok(first..last)
    }
}

/// One thermocouple reading and the ratio measured with it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationPoint {
    /// K.
    pub t_cal: f64,
    pub delta_ratio: f64,
    pub sigma: f64,
}

/// Dark-count floor of a histogram in counts per bin.
pub fn estimate_noise_floor(hist: &CountHistogram, dark_rate: f64) -> f64 {
    dark_rate * hist.integration_time * hist.bin_width * hist.repetition_rate
}

/// Normalised reference-subtracted anti-Stokes signal and its Poisson error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaRatio {
    pub value: f64,
    pub sigma: f64,
}

/// Ratio from region means `a`, `b`, `s` over `n` bins; `noise` is the
/// Stokes floor per bin.
pub(crate) fn ratio_from_means(a: f64, b: f64, s: f64, n: f64, noise: f64) -> Result<DeltaRatio> {
    let denom = s - noise;
    if !(denom > 0.0) {
        return Err(Error::DegenerateStokes { mean: s, floor: noise });
    }
    let value = (a - b) / denom;
    let var = ((a + b) / n + value * value * s / n) / (denom * denom);
    Ok(DeltaRatio {
        value,
        sigma: var.sqrt(),
    })
}

/// `[mean(AS_T) - mean(AS_ref)] / [mean(S_T) - N_S]` over the region.
pub fn compute_delta_ratio(
    as_t: &CountHistogram,
    as_ref: &CountHistogram,
    s_t: &CountHistogram,
    region: &CalibrationRegion,
    noise_s: f64,
) -> Result<DeltaRatio> {
    as_t.check_aligned(as_ref)?;
    as_t.check_aligned(s_t)?;
    let bins = region.bins(as_t.bin_length())?;
    if bins.end > as_t.len() {
        return Err(Error::Shape(format!(
            "calibration region ends at bin {} but histograms have {}",
            bins.end,
            as_t.len()
        )));
    }
    let n = bins.len() as f64;
    let mean = |h: &CountHistogram| h.counts[bins.clone()].iter().sum::<u64>() as f64 / n;
    ratio_from_means(mean(as_t), mean(as_ref), mean(s_t), n, noise_s)
}

/// Least-squares line `Δratio = C1·exp(-C/T) + C2`, weighted by `1/σ²` when
/// every point carries a positive uncertainty.
pub fn fit_calibration(points: &[CalibrationPoint], t0: f64, rc: &RamanConstants) -> Result<CalibrationConstants> {
    let mut temps: Vec<f64> = points.iter().map(|p| p.t_cal).collect();
    temps.sort_by(f64::total_cmp);
    temps.dedup();
    if temps.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "need at least two distinct calibration temperatures, got {}",
            temps.len()
        )));
    }
    let xs = points
        .iter()
        .map(|p| rc.boltzmann_factor(p.t_cal))
        .collect::<Result<Vec<f64>>>()?;
    let weighted = points.iter().all(|p| p.sigma > 0.0 && p.sigma.is_finite());
    let w: Vec<f64> = points
        .iter()
        .map(|p| if weighted { 1.0 / (p.sigma * p.sigma) } else { 1.0 })
        .collect();

    let sw: f64 = w.iter().sum();
    let x_mean = xs.iter().zip(&w).map(|(x, w)| w * x).sum::<f64>() / sw;
    let y_mean = points.iter().zip(&w).map(|(p, w)| w * p.delta_ratio).sum::<f64>() / sw;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for ((x, p), w) in xs.iter().zip(points).zip(&w) {
        let dx = x - x_mean;
        sxx += w * dx * dx;
        sxy += w * dx * (p.delta_ratio - y_mean);
    }
    if !(sxx > 0.0) {
        return Err(Error::DegenerateFit("calibration regressor has no spread".into()));
    }
    let c1 = sxy / sxx;
    let c2 = y_mean - c1 * x_mean;

    let mut var_c1 = 1.0 / sxx;
    let mut var_c2 = 1.0 / sw + x_mean * x_mean / sxx;
    if !weighted {
        let dof = points.len().saturating_sub(2);
        let rss: f64 = xs
            .iter()
            .zip(points)
            .map(|(x, p)| (p.delta_ratio - c1 * x - c2).powi(2))
            .sum();
        // an exact two-point line has no residual information
        let s2 = if dof > 0 { rss / dof as f64 } else { 0.0 };
        var_c1 *= s2;
        var_c2 *= s2;
    }
    if !(c1 > 0.0) {
        return Err(Error::DegenerateFit(format!(
            "fitted C1 = {c1} is not positive; the law cannot be inverted"
        )));
    }
    CalibrationConstants::with_errors(c1, c2, var_c1.sqrt(), var_c2.sqrt(), t0, *rc)
}

/// DTS temperature recovered for one calibration point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub t_cal: f64,
    pub delta_ratio: f64,
    pub t_dts: Option<f64>,
    pub sigma_t: Option<f64>,
    /// `T_DTS - T_cal`, K.
    pub residual: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub constants: CalibrationConstants,
    pub rows: Vec<ReportRow>,
}

impl CalibrationReport {
    pub fn max_abs_residual(&self) -> Option<f64> {
        self.rows
            .iter()
            .filter_map(|r| r.residual)
            .map(f64::abs)
            .fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
    }
}

/// Largest relative departure of `AS(T0) / (S(T) - N_S)` from its value at
/// `T = T0` over `[t_lo, t_hi]`, sampled every 0.01 K. This is the term the
/// linear law treats as the constant `-C2`.
pub fn reference_term_deviation(
    t0: f64,
    t_lo: f64,
    t_hi: f64,
    ch: &ChannelCoefficients,
    rc: &RamanConstants,
) -> Result<f64> {
    if !(t_lo > 0.0 && t_hi >= t_lo) {
        return Err(Error::Domain(format!("temperature range [{t_lo}, {t_hi}] is empty")));
    }
    let as0 = as_rate(t0, ch, rc)?;
    let term = |t: f64| -> Result<f64> { Ok(as0 / (s_rate(t, ch, rc)? - ch.noise_s)) };
    let at_t0 = term(t0)?;
    let steps = ((t_hi - t_lo) / 0.01).ceil() as usize;
    let mut worst = 0.0_f64;
    for i in 0..=steps {
        let t = (t_lo + i as f64 * 0.01).min(t_hi);
        worst = worst.max((term(t)? / at_t0 - 1.0).abs());
    }
    Ok(worst)
}

/// Inverts every point with the fitted constants; failures are recorded per
/// row.
pub fn calibration_report(cal: &CalibrationConstants, points: &[CalibrationPoint]) -> CalibrationReport {
    let rows = points
        .iter()
        .map(|p| {
            let inverted = invert_temperature(p.delta_ratio, cal)
                .and_then(|t| Ok((t, temperature_uncertainty(p.delta_ratio, p.sigma.max(0.0), cal)?)));
            match inverted {
                Ok((t, s)) => ReportRow {
                    t_cal: p.t_cal,
                    delta_ratio: p.delta_ratio,
                    t_dts: Some(t),
                    sigma_t: Some(s),
                    residual: Some(t - p.t_cal),
                    error: None,
                },
                Err(e) => ReportRow {
                    t_cal: p.t_cal,
                    delta_ratio: p.delta_ratio,
                    t_dts: None,
                    sigma_t: None,
                    residual: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    CalibrationReport { constants: *cal, rows }
}
