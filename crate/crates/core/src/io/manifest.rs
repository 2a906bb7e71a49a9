use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{read_to_string, read_trace_file};
use crate::calibration::{
    calibration_report, compute_delta_ratio, estimate_noise_floor, fit_calibration, CalibrationPoint,
    CalibrationRegion, ReportRow,
};
use crate::constants::SILICA_RAMAN_SHIFT_HZ;
use crate::error::{Error, Result};
use crate::raman::{CalibrationConstants, RamanConstants};

pub const MANIFEST_SCHEMA: &str = "rdts-manifest/1";
pub const CONSTANTS_SCHEMA: &str = "rdts-constants/1";

/// One calibration acquisition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestRun {
    /// Thermocouple temperature, K.
    pub t_cal: f64,
    pub anti_stokes: String,
    pub stokes: String,
}

/// Calibration runs and how to reduce them. Trace paths are relative to
/// the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationManifest {
    pub schema_version: String,
    /// Reference temperature, K.
    pub t0: f64,
    /// Anti-Stokes trace acquired at `t0`.
    pub reference_anti_stokes: String,
    pub region: CalibrationRegion,
    /// Stokes dark-count rate, counts/s.
    pub dark_rate_s: f64,
    #[serde(default = "default_shift")]
    pub raman_shift_hz: f64,
    pub runs: Vec<ManifestRun>,
}

fn default_shift() -> f64 {
    SILICA_RAMAN_SHIFT_HZ
}

impl CalibrationManifest {
    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("manifest: {e}")))?;
        if m.schema_version != MANIFEST_SCHEMA {
            return Err(Error::Config(format!(
                "unsupported manifest schema `{}`, expected `{MANIFEST_SCHEMA}`",
                m.schema_version
            )));
        }
        if !(m.dark_rate_s.is_finite() && m.dark_rate_s >= 0.0) {
            return Err(Error::Config("manifest dark_rate_s must be non-negative".into()));
        }
        Ok(m)
    }

    /// Loads the manifest; returns it with the directory its paths are
    /// relative to.
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let m = Self::from_json(&read_to_string(path)?)?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((m, dir))
    }

    /// Reads every trace, forms the calibration points and fits them.
    pub fn calibrate(&self, dir: &Path) -> Result<ConstantsFile> {
        let rc = RamanConstants::new(self.raman_shift_hz)?;
        let as_ref = read_trace_file(&dir.join(&self.reference_anti_stokes))?;
        // read everything first so a missing file is reported before any
        // degenerate-fit verdict
        let runs = self
            .runs
            .iter()
            .map(|r| {
                Ok((
                    r.t_cal,
                    read_trace_file(&dir.join(&r.anti_stokes))?,
                    read_trace_file(&dir.join(&r.stokes))?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let points = runs
            .iter()
            .map(|(t, a, s)| {
                let noise = estimate_noise_floor(s, self.dark_rate_s);
                let r = compute_delta_ratio(a, &as_ref, s, &self.region, noise)?;
                Ok(CalibrationPoint {
                    t_cal: *t,
                    delta_ratio: r.value,
                    sigma: r.sigma,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let constants = fit_calibration(&points, self.t0, &rc)?;
        Ok(ConstantsFile::new(&constants, Some(self.region), points))
    }
}

/// Fitted constants in file form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsRecord {
    pub c1: f64,
    pub c2: f64,
    pub sigma_c1: f64,
    pub sigma_c2: f64,
    /// K.
    pub t0: f64,
    /// Hz.
    pub raman_shift_hz: f64,
}

/// Calibration result: constants, the points they were fitted to and the
/// per-point inversion table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsFile {
    pub schema_version: String,
    pub constants: ConstantsRecord,
    #[serde(default)]
    pub region: Option<CalibrationRegion>,
    #[serde(default)]
    pub points: Vec<CalibrationPoint>,
    #[serde(default)]
    pub report: Vec<ReportRow>,
}

impl ConstantsFile {
    pub fn new(c: &CalibrationConstants, region: Option<CalibrationRegion>, points: Vec<CalibrationPoint>) -> Self {
        let report = calibration_report(c, &points).rows;
        Self {
            schema_version: CONSTANTS_SCHEMA.to_string(),
            constants: ConstantsRecord {
                c1: c.c1,
                c2: c.c2,
                sigma_c1: c.sigma_c1,
                sigma_c2: c.sigma_c2,
                t0: c.t0,
                raman_shift_hz: c.raman.spectral_shift_hz(),
            },
            region,
            points,
            report,
        }
    }

    pub fn constants(&self) -> Result<CalibrationConstants> {
        let r = &self.constants;
        CalibrationConstants::with_errors(
            r.c1,
            r.c2,
            r.sigma_c1,
            r.sigma_c2,
            r.t0,
            RamanConstants::new(r.raman_shift_hz)?,
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("constants: {e}")))?;
        if f.schema_version != CONSTANTS_SCHEMA {
            return Err(Error::Config(format!(
                "unsupported constants schema `{}`, expected `{CONSTANTS_SCHEMA}`",
                f.schema_version
            )));
        }
        f.constants()?;
        Ok(f)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::write_trace_file;
    use crate::otdr::{Channel, CountHistogram};
    use crate::raman::ratio_forward;

    fn hist(counts: Vec<u64>, channel: Channel) -> CountHistogram {
        CountHistogram {
            bin_width: 100e-12,
            counts,
            channel,
            integration_time: 300.0,
            seed: 0,
            repetition_rate: 2.5e6,
            group_index: 1.468,
        }
    }

    /// Writes traces whose region means reproduce `ratio_forward` exactly.
    fn synthetic(dir: &Path, temps: &[f64]) -> CalibrationManifest {
        let cal = CalibrationConstants::room_temperature_reference();
        let base = 1_000_000u64;
        let stokes = 1_000_000u64;
        write_trace_file(&dir.join("ref_AS.csv"), &hist(vec![base; 50], Channel::AntiStokes)).unwrap();
        let runs = temps
            .iter()
            .map(|&t| {
                let r = ratio_forward(t, &cal).unwrap() - ratio_forward(296.0, &cal).unwrap();
                let a = (base as f64 + r * stokes as f64).round() as u64;
                let (fa, fs) = (format!("AS_{t}.csv"), format!("S_{t}.csv"));
                write_trace_file(&dir.join(&fa), &hist(vec![a; 50], Channel::AntiStokes)).unwrap();
                write_trace_file(&dir.join(&fs), &hist(vec![stokes; 50], Channel::Stokes)).unwrap();
                ManifestRun {
                    t_cal: t,
                    anti_stokes: fa,
                    stokes: fs,
                }
            })
            .collect();
        CalibrationManifest {
            schema_version: MANIFEST_SCHEMA.into(),
            t0: 296.0,
            reference_anti_stokes: "ref_AS.csv".into(),
            region: CalibrationRegion::new(0.05, 0.3).unwrap(),
            dark_rate_s: 0.0,
            raman_shift_hz: SILICA_RAMAN_SHIFT_HZ,
            runs,
        }
    }

    #[test]
    fn synthetic_manifest_recovers_the_slope() {
        let dir = tempfile::tempdir().unwrap();
        let m = synthetic(dir.path(), &[296.0, 310.0, 320.0, 334.0]);
        let out = m.calibrate(dir.path()).unwrap();
        // integer counts quantise the ratio to 1e-6
        assert!((out.constants.c1 - 81.0).abs() < 0.01, "{:?}", out.constants);
        let text = crate::io::to_json(&out).unwrap();
        assert_eq!(ConstantsFile::from_json(&text).unwrap(), out);
    }

    #[test]
    fn single_run_is_degenerate_and_missing_file_is_io() {
        let dir = tempfile::tempdir().unwrap();
        let m = synthetic(dir.path(), &[310.0]);
        assert!(m.calibrate(dir.path()).unwrap_err().is_degenerate());
        let mut m = synthetic(dir.path(), &[296.0, 310.0]);
        m.runs[1].stokes = "nope.csv".into();
        assert!(matches!(m.calibrate(dir.path()), Err(Error::Io(_))));
    }
}
