//! End-to-end experiment runs: calibration, scenario acquisition, per-bin
//! inversion and the board thermogram.
//!
//! [`Experiment::prepare`] computes the noiseless expected histograms once;
//! [`Prepared::run`] then only draws Poisson counts for a seed, so Monte Carlo
//! loops over seeds stay cheap.

use serde::{Deserialize, Serialize};

use crate::analysis::{
    calibration_region_for, connected_regions, fit_edge, plateau_intervals, plateau_temperature, EdgeFit,
    PlateauEstimate,
};
use crate::calibration::{
    calibration_report, compute_delta_ratio, estimate_noise_floor, fit_calibration, CalibrationPoint,
    CalibrationRegion, CalibrationReport,
};
use crate::error::{Error, Result};
use crate::heat::{temperature_rise, CopperProperties, RiseMode, ThermalEnvironment};
use crate::otdr::{
    derive_seed, expected_counts, expected_rate_profile, sample_histogram, BoardModel, Channel, CoiledSerpentine,
    CountHistogram, FiberLayout, FiberTemperature, HeaterState, InstrumentConfig,
};
use crate::raman::{CalibrationConstants, RamanConstants};
use crate::reconstruction::{
    gaussian_filter, invert_profile_aggregated, sample_path, splat_gaussians, BinGrid, SamplePoint, TemperatureProfile,
    ThermogramGrid,
};

/// Which heater is calibrated and at which thermocouple temperatures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationPlan {
    pub heater: String,
    /// K; the first entry is the reference temperature `T0`.
    pub temperatures: Vec<f64>,
    /// Explicit averaging window; derived from the heater contact if absent.
    #[serde(default)]
    pub region: Option<CalibrationRegion>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReconstructionParams {
    /// Raw time bins summed per reporting bin.
    pub aggregate: usize,
    /// Sample spacing along the path, m.
    pub spacing: f64,
    /// m.
    pub hotspot_fwhm: f64,
    /// m.
    pub filter_fwhm: f64,
    /// m per pixel.
    pub resolution: f64,
    /// Minimum rise above ambient for a reported hot region, K. The
    /// reported threshold never drops below three median bin uncertainties.
    pub region_rise: f64,
}

impl Default for ReconstructionParams {
    fn default() -> Self {
        Self {
            aggregate: 1,
            spacing: 0.01,
            hotspot_fwhm: 0.01,
            filter_fwhm: 0.01,
            resolution: 0.001,
            region_rise: 5.0,
        }
    }
}

/// Heater drive in a scenario: a surface rise or a current fed through the
/// heat model. Exactly one must be given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeaterSetting {
    pub id: String,
    /// K.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rise: Option<f64>,
    /// A.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub current: Option<f64>,
}

impl HeaterSetting {
    pub fn rise(id: &str, rise: f64) -> Self {
        Self {
            id: id.to_string(),
            rise: Some(rise),
            current: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub heaters: Vec<HeaterSetting>,
}

impl Scenario {
    fn new(name: &str, heaters: &[(&str, f64)]) -> Self {
        Self {
            name: name.to_string(),
            heaters: heaters.iter().map(|&(id, dt)| HeaterSetting::rise(id, dt)).collect(),
        }
    }

    pub fn all_off() -> Self {
        Self::new("all_off", &[])
    }

    /// Single R9 hotspot at +42 K.
    pub fn r9() -> Self {
        Self::new("r9", &[("R9", 42.0)])
    }

    /// Two- and three-heater configurations at about +22 K each.
    pub fn multi_hotspot() -> Vec<Self> {
        vec![
            Self::new("r9_r3", &[("R9", 22.0), ("R3", 22.0)]),
            Self::new("r6_r12", &[("R6", 22.0), ("R12", 22.0)]),
            Self::new("r4_r11_r14", &[("R4", 22.0), ("R11", 22.0), ("R14", 22.0)]),
            Self::new("r6_r9_r12", &[("R6", 22.0), ("R9", 22.0), ("R12", 22.0)]),
        ]
    }

    /// R9 at +1 K and +4 K in liquid nitrogen.
    pub fn cryo() -> Vec<Self> {
        vec![
            Self::new("cryo_1k", &[("R9", 1.0)]),
            Self::new("cryo_4k", &[("R9", 4.0)]),
        ]
    }

    /// Looks up a built-in scenario by name.
    pub fn preset(name: &str) -> Option<Self> {
        let mut all = vec![Self::all_off(), Self::r9()];
        all.extend(Self::multi_hotspot());
        all.extend(Self::cryo());
        all.into_iter().find(|s| s.name == name)
    }
}

/// Fully resolved experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    /// Board with every heater off; scenarios switch heaters on.
    pub board: BoardModel,
    pub layout: FiberLayout,
    pub instrument: InstrumentConfig,
    pub raman: RamanConstants,
    pub calibration: CalibrationPlan,
    pub reconstruction: ReconstructionParams,
    pub environment: ThermalEnvironment,
    pub copper: CopperProperties,
}

impl Experiment {
    /// Board in air at 296 K, R9 calibrated from 296 K to 334 K.
    pub fn room() -> Self {
        let board = BoardModel::pcb(296.0);
        let layout = FiberLayout::coiled_serpentine(&board, &CoiledSerpentine::default()).expect("default layout");
        let copper = CopperProperties::default();
        let geometry = board.heater("R9").expect("R9 on the default board").geometry;
        Self {
            environment: ThermalEnvironment::air_296k(&geometry, &copper).expect("default environment"),
            board,
            layout,
            instrument: InstrumentConfig::room_default(),
            raman: RamanConstants::silica(),
            calibration: CalibrationPlan {
                heater: "R9".into(),
                temperatures: vec![296.0, 310.0, 320.0, 334.0],
                region: None,
            },
            reconstruction: ReconstructionParams::default(),
            copper,
        }
    }

    /// Board immersed in liquid nitrogen, calibrated from 77 K to 81 K.
    pub fn cryo() -> Self {
        let board = BoardModel::pcb(77.0);
        let layout = FiberLayout::coiled_serpentine(&board, &CoiledSerpentine::default()).expect("default layout");
        let copper = CopperProperties::default();
        let geometry = board.heater("R9").expect("R9 on the default board").geometry;
        Self {
            environment: ThermalEnvironment::ln2_77k(&geometry, &copper).expect("default environment"),
            board,
            layout,
            instrument: InstrumentConfig::cryo_default(),
            raman: RamanConstants::silica(),
            calibration: CalibrationPlan {
                heater: "R9".into(),
                temperatures: vec![77.0, 78.0, 79.0, 80.0, 81.0],
                region: None,
            },
            reconstruction: ReconstructionParams {
                region_rise: 0.0,
                ..ReconstructionParams::default()
            },
            copper,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.board.validate()?;
        self.layout.validate(&self.board)?;
        self.instrument.validate_for(&self.layout)?;
        let plan = &self.calibration;
        if self.board.heater(&plan.heater).is_none() {
            return Err(Error::Config(format!(
                "calibration heater {} is not on the board",
                plan.heater
            )));
        }
        if plan.temperatures.is_empty() || plan.temperatures.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::Config("calibration temperatures must be positive".into()));
        }
        let r = &self.reconstruction;
        if r.aggregate == 0 {
            return Err(Error::Config("aggregation factor must be at least 1".into()));
        }
        for (name, v) in [
            ("spacing", r.spacing),
            ("hotspot_fwhm", r.hotspot_fwhm),
            ("filter_fwhm", r.filter_fwhm),
            ("resolution", r.resolution),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!(
                    "reconstruction.{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn t0(&self) -> f64 {
        self.calibration.temperatures[0]
    }

    /// Reporting bin length, m.
    pub fn reporting_bin_length(&self) -> f64 {
        self.instrument.bin_length() * self.reconstruction.aggregate as f64
    }

    /// Calibration window: the configured one, or the first contact with
    /// the calibration heater kept one response FWHM from its edges.
    pub fn calibration_region(&self) -> Result<CalibrationRegion> {
        if let Some(r) = self.calibration.region {
            return Ok(r);
        }
        let h = self
            .board
            .heater(&self.calibration.heater)
            .ok_or_else(|| Error::Config(format!("unknown heater {}", self.calibration.heater)))?;
        calibration_region_for(&self.layout, &h.geometry, self.instrument.spatial_resolution())
    }

    /// Constants that the noiseless forward model produces exactly.
    pub fn ideal_constants(&self) -> Result<CalibrationConstants> {
        let t0 = self.t0();
        let x0 = self.raman.boltzmann_factor(t0)?;
        let c1 = self.instrument.amplitude_a / self.instrument.amplitude_b / (1.0 - x0);
        CalibrationConstants::new(c1, -c1 * x0, t0, self.raman)
    }

    /// Board with the scenario's heater states applied.
    pub fn board_for(&self, scenario: &Scenario) -> Result<BoardModel> {
        let mut board = self.board.all_off();
        for h in &scenario.heaters {
            let rise = match (h.rise, h.current) {
                (Some(dt), None) => dt,
                (None, Some(i)) => {
                    let g = self
                        .board
                        .heater(&h.id)
                        .ok_or_else(|| Error::Config(format!("unknown heater {}", h.id)))?
                        .geometry;
                    temperature_rise(i, &self.environment, &g, &self.copper, RiseMode::SelfConsistent)?
                }
                _ => {
                    return Err(Error::Config(format!(
                        "heater {} needs exactly one of `rise` or `current`",
                        h.id
                    )))
                }
            };
            board.set_state(&h.id, HeaterState::Rise(rise))?;
        }
        board.validate()?;
        Ok(board)
    }

    fn board_with_heater_at(&self, id: &str, t: f64) -> Result<BoardModel> {
        let mut board = self.board.all_off();
        let rise = t - board.ambient;
        if rise != 0.0 {
            board.set_state(id, HeaterState::Rise(rise))?;
        }
        Ok(board)
    }

    fn expected_pair(&self, board: &BoardModel) -> Result<ExpectedPair> {
        let ch = |c| expected_rate_profile(board, &self.layout, &self.instrument, c, &self.raman);
        Ok(ExpectedPair {
            anti_stokes: ch(Channel::AntiStokes)?,
            stokes: ch(Channel::Stokes)?,
        })
    }

    /// Computes every noiseless histogram needed to run `scenario`.
    pub fn prepare(&self, scenario: &Scenario) -> Result<Prepared> {
        self.validate()?;
        let board = self.board_for(scenario)?;
        let reference = self.expected_pair(&self.board.all_off())?;
        let calibration = self
            .calibration
            .temperatures
            .iter()
            .map(|&t| {
                Ok((
                    t,
                    self.expected_pair(&self.board_with_heater_at(&self.calibration.heater, t)?)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let acquisition = self.expected_pair(&board)?;
        Ok(Prepared {
            experiment: self.clone(),
            scenario: scenario.clone(),
            board,
            reference,
            calibration,
            acquisition,
        })
    }

    /// Inverts a scenario acquisition into a profile.
    pub fn invert(
        &self,
        as_t: &CountHistogram,
        as_ref: &CountHistogram,
        s_t: &CountHistogram,
        cal: &CalibrationConstants,
    ) -> Result<TemperatureProfile> {
        let noise = estimate_noise_floor(s_t, self.instrument.dark_rate_s);
        invert_profile_aggregated(
            as_t,
            as_ref,
            s_t,
            cal,
            &self.layout,
            noise,
            self.reconstruction.aggregate,
        )
    }

    /// Samples the path, splats one hotspot per sample and smooths the map.
    pub fn thermogram(&self, profile: &TemperatureProfile) -> Result<Thermogram> {
        let r = &self.reconstruction;
        let points = sample_path(&self.layout, r.spacing, BinGrid::of_profile(profile))?;
        let raw = splat_gaussians(&points, profile, &self.board, r.hotspot_fwhm, r.resolution)?;
        let filtered = gaussian_filter(&raw, r.filter_fwhm)?;
        Ok(Thermogram { points, raw, filtered })
    }

    /// Per-heater plateau estimates and hot regions of the thermogram.
    pub fn summarize(&self, board: &BoardModel, profile: &TemperatureProfile, grid: &ThermogramGrid) -> PeakSummary {
        let noise_sigma = profile.median_sigma().unwrap_or(0.0);
        let threshold = board.ambient + self.reconstruction.region_rise.max(3.0 * noise_sigma);
        let margin = self.instrument.spatial_resolution();
        let regions = connected_regions(grid, threshold)
            .into_iter()
            .map(|r| {
                let (nearest, distance) = board
                    .heaters
                    .iter()
                    .map(|h| (h.id.clone(), dist(h.geometry.center, r.peak_xy)))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap_or_default();
                RegionReport {
                    peak: r.peak,
                    x: r.peak_xy[0],
                    y: r.peak_xy[1],
                    pixels: r.pixels,
                    nearest_heater: nearest,
                    distance,
                }
            })
            .collect();
        let heaters = board
            .heaters
            .iter()
            .map(|h| {
                let intervals = plateau_intervals(&self.layout, &h.geometry, margin);
                HeaterReport {
                    id: h.id.clone(),
                    set_temperature: board.ambient + h.state.rise(),
                    plateau: plateau_temperature(profile, &intervals),
                    map_peak: footprint_max(grid, &h.geometry),
                }
            })
            .collect();
        PeakSummary {
            ambient: board.ambient,
            noise_sigma,
            threshold,
            regions,
            heaters,
        }
    }

    /// Reconstructed profile across a heated fiber section `[start,
    /// start + length]`, inverted with the ideal constants, with an edge fit
    /// on each side. `seed = None` inverts the expected counts rounded to
    /// integers instead of a Poisson draw.
    pub fn step_response(&self, start: f64, length: f64, rise: f64, seed: Option<u64>) -> Result<StepResponse> {
        self.instrument.validate_for(&self.layout)?;
        let ambient = self.board.ambient;
        let total = self.layout.total_length;
        let window = 0.15;
        if !(start > window && start + length + window < total && length > 2.0 * window) {
            return Err(Error::Config(format!(
                "heated section [{start}, {}] m is too short or leaves the fiber",
                start + length
            )));
        }
        let cold = FiberTemperature::uniform(ambient, total);
        let hot = FiberTemperature {
            segments: vec![(start, start + length, ambient + rise)],
            ..cold.clone()
        };
        let draw = |t: &FiberTemperature, ch: Channel, label: &str| -> Result<CountHistogram> {
            let e = expected_counts(t, &self.instrument, ch, &self.raman)?;
            Ok(match seed {
                Some(seed) => sample_histogram(&e, &self.instrument, ch, derive_seed(seed, label)),
                None => {
                    let mut h = sample_histogram(&e, &self.instrument, ch, 0);
                    h.counts = e.iter().map(|m| m.round() as u64).collect();
                    h
                }
            })
        };
        let as_ref = draw(&cold, Channel::AntiStokes, "step_ref_AS")?;
        let as_t = draw(&hot, Channel::AntiStokes, "step_AS")?;
        let s_t = draw(&hot, Channel::Stokes, "step_S")?;
        let profile = self.invert(&as_t, &as_ref, &s_t, &self.ideal_constants()?)?;
        let near = |edge: f64, flip: f64| -> Vec<(f64, f64)> {
            let mut v: Vec<(f64, f64)> = (0..profile.len())
                .filter(|&i| (profile.center(i) - edge).abs() <= window)
                .filter_map(|i| profile.get(i).map(|t| (flip * profile.center(i), t)))
                .collect();
            v.sort_by(|a, b| a.0.total_cmp(&b.0));
            v
        };
        let rising = fit_edge(&near(start, 1.0))?;
        // the falling edge is fitted as a rising one in mirrored coordinates
        let mut falling = fit_edge(&near(start + length, -1.0))?;
        falling.center = -falling.center;
        Ok(StepResponse {
            profile,
            rising,
            falling,
        })
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn footprint_max(grid: &ThermogramGrid, g: &crate::heat::HeaterGeometry) -> Option<f64> {
    let mut best: Option<f64> = None;
    for row in 0..grid.rows {
        for col in 0..grid.cols {
            if g.contains(grid.pixel_center(row, col)) {
                let v = grid.get(row, col);
                best = Some(best.map_or(v, |b| b.max(v)));
            }
        }
    }
    best
}

/// Expected counts per bin for both channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedPair {
    pub anti_stokes: Vec<f64>,
    pub stokes: Vec<f64>,
}

/// Both channels of one acquisition.
#[derive(Debug, Clone, PartialEq)]
pub struct Acquisition {
    pub anti_stokes: CountHistogram,
    pub stokes: CountHistogram,
}

impl ExpectedPair {
    fn sample(&self, instrument: &InstrumentConfig, seed: u64, label: &str) -> Acquisition {
        Acquisition {
            anti_stokes: sample_histogram(
                &self.anti_stokes,
                instrument,
                Channel::AntiStokes,
                derive_seed(seed, &format!("{label}_AS")),
            ),
            stokes: sample_histogram(
                &self.stokes,
                instrument,
                Channel::Stokes,
                derive_seed(seed, &format!("{label}_S")),
            ),
        }
    }
}

/// Label of the calibration acquisition at `t` kelvin.
pub fn calibration_label(t: f64) -> String {
    format!("cal_{t:.2}K")
}

/// Scenario with its noiseless histograms precomputed.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub experiment: Experiment,
    pub scenario: Scenario,
    /// Board with the scenario's heaters on.
    pub board: BoardModel,
    pub reference: ExpectedPair,
    pub calibration: Vec<(f64, ExpectedPair)>,
    pub acquisition: ExpectedPair,
}

/// Every simulated trace of one seeded run.
#[derive(Debug, Clone)]
pub struct Acquisitions {
    pub reference: Acquisition,
    pub calibration: Vec<(f64, Acquisition)>,
    pub scenario: Acquisition,
}

impl Prepared {
    pub fn acquire(&self, seed: u64) -> Acquisitions {
        let inst = &self.experiment.instrument;
        Acquisitions {
            reference: self.reference.sample(inst, seed, "reference"),
            calibration: self
                .calibration
                .iter()
                .map(|(t, e)| (*t, e.sample(inst, seed, &calibration_label(*t))))
                .collect(),
            scenario: self
                .acquisition
                .sample(inst, seed, &format!("scenario_{}", self.scenario.name)),
        }
    }

    /// Full seeded run: calibrate, invert the scenario and build its map.
    pub fn run(&self, seed: u64) -> Result<ScenarioRun> {
        let traces = self.acquire(seed);
        let exp = &self.experiment;
        let calibration = calibrate(
            exp,
            &traces.reference.anti_stokes,
            traces.calibration.iter().map(|(t, a)| (*t, a)),
        )?;
        let profile = exp.invert(
            &traces.scenario.anti_stokes,
            &traces.reference.anti_stokes,
            &traces.scenario.stokes,
            &calibration.report.constants,
        )?;
        let thermogram = exp.thermogram(&profile)?;
        let summary = exp.summarize(&self.board, &profile, &thermogram.filtered);
        Ok(ScenarioRun {
            calibration,
            profile,
            thermogram,
            summary,
            traces,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOutcome {
    pub region: CalibrationRegion,
    pub points: Vec<CalibrationPoint>,
    pub report: CalibrationReport,
}

/// Fits the calibration from a reference anti-Stokes trace and
/// `(T_cal, acquisition)` runs.
pub fn calibrate<'a>(
    exp: &Experiment,
    as_ref: &CountHistogram,
    runs: impl IntoIterator<Item = (f64, &'a Acquisition)>,
) -> Result<CalibrationOutcome> {
    let region = exp.calibration_region()?;
    let points = runs
        .into_iter()
        .map(|(t, acq)| {
            let noise = estimate_noise_floor(&acq.stokes, exp.instrument.dark_rate_s);
            let r = compute_delta_ratio(&acq.anti_stokes, as_ref, &acq.stokes, &region, noise)?;
            Ok(CalibrationPoint {
                t_cal: t,
                delta_ratio: r.value,
                sigma: r.sigma,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let constants = fit_calibration(&points, exp.t0(), &exp.raman)?;
    let report = calibration_report(&constants, &points);
    Ok(CalibrationOutcome { region, points, report })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Thermogram {
    pub points: Vec<SamplePoint>,
    /// Map after splatting, before smoothing.
    pub raw: ThermogramGrid,
    pub filtered: ThermogramGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionReport {
    /// K.
    pub peak: f64,
    /// m.
    pub x: f64,
    /// m.
    pub y: f64,
    pub pixels: usize,
    pub nearest_heater: String,
    /// Peak distance from the nearest heater centre, m.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeaterReport {
    pub id: String,
    /// Simulated surface temperature, K.
    pub set_temperature: f64,
    /// Mean of the profile bins well inside the heater contacts.
    pub plateau: Option<PlateauEstimate>,
    /// Hottest thermogram pixel inside the footprint, K.
    pub map_peak: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakSummary {
    pub ambient: f64,
    /// Median per-bin temperature uncertainty, K.
    pub noise_sigma: f64,
    /// Absolute region threshold, K.
    pub threshold: f64,
    pub regions: Vec<RegionReport>,
    pub heaters: Vec<HeaterReport>,
}

impl PeakSummary {
    pub fn heater(&self, id: &str) -> Option<&HeaterReport> {
        self.heaters.iter().find(|h| h.id == id)
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub calibration: CalibrationOutcome,
    pub profile: TemperatureProfile,
    pub thermogram: Thermogram,
    pub summary: PeakSummary,
    pub traces: Acquisitions,
}

#[derive(Debug, Clone)]
pub struct StepResponse {
    pub profile: TemperatureProfile,
    pub rising: EdgeFit,
    pub falling: EdgeFit,
}

impl StepResponse {
    /// Mean 10–90 % width of the two edges, m.
    pub fn width_10_90(&self) -> f64 {
        0.5 * (self.rising.width_10_90() + self.falling.width_10_90())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve() {
        assert_eq!(Scenario::preset("r9").unwrap().heaters[0].rise, Some(42.0));
        assert_eq!(Scenario::preset("r4_r11_r14").unwrap().heaters.len(), 3);
        assert!(Scenario::preset("nope").is_none());
    }

    #[test]
    fn heater_setting_needs_one_drive() {
        let exp = Experiment::room();
        let bad = Scenario {
            name: "x".into(),
            heaters: vec![HeaterSetting {
                id: "R9".into(),
                rise: Some(1.0),
                current: Some(1.0),
            }],
        };
        assert!(exp.board_for(&bad).is_err());
        let by_current = Scenario {
            name: "x".into(),
            heaters: vec![HeaterSetting {
                id: "R9".into(),
                rise: None,
                current: Some(1.0),
            }],
        };
        let b = exp.board_for(&by_current).unwrap();
        // about 40 K/A² with resistance rising along the way
        let dt = b.heater("R9").unwrap().state.rise();
        assert!(dt > 40.0 && dt < 50.0, "{dt}");
    }

    #[test]
    fn ideal_constants_match_the_room_defaults() {
        let c = Experiment::room().ideal_constants().unwrap();
        assert!((c.c1 - 81.0).abs() < 1e-9);
        assert!(c.reference_residual().abs() < 1e-12);
    }

    #[test]
    fn calibration_region_lies_on_r9() {
        let exp = Experiment::room();
        let r = exp.calibration_region().unwrap();
        let bins = r.bins(exp.instrument.bin_length()).unwrap();
        assert!(bins.len() >= 5, "{bins:?}");
    }

    #[test]
    fn r9_run_recovers_the_heater() {
        let exp = Experiment::room();
        let prepared = exp.prepare(&Scenario::r9()).unwrap();
        let run = prepared.run(7).unwrap();
        let c = run.calibration.report.constants;
        assert!((c.c1 - 81.0).abs() < 4.0 * c.sigma_c1, "{c:?}");
        let plateau = run.summary.heater("R9").unwrap().plateau.unwrap();
        assert!((plateau.temperature - 338.0).abs() < 2.0, "{plateau:?}");
        assert_eq!(run.summary.regions.len(), 1, "{:?}", run.summary.regions);
        assert_eq!(run.summary.regions[0].nearest_heater, "R9");
        assert!(run.summary.regions[0].distance < 0.01);
    }

    #[test]
    fn runs_are_deterministic() {
        let prepared = Experiment::room().prepare(&Scenario::r9()).unwrap();
        let a = prepared.run(3).unwrap();
        let b = prepared.run(3).unwrap();
        assert_eq!(a.thermogram.filtered, b.thermogram.filtered);
        assert_eq!(a.traces.scenario.anti_stokes, b.traces.scenario.anti_stokes);
    }
}
