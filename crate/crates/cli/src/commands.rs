use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rdts_core::heat::{
    derived_thermal_resistance, electrical_resistance, fit_quadratic_coefficient, temperature_rise,
    thermal_resistance_ratio, RiseMode, ThermalEnvironment,
};
use rdts_core::io::{
    read_heat_csv, read_trace_file, to_json, write_grid_csv, write_profile_csv, write_trace_file, CalibrationManifest,
    ConstantsFile, ExperimentConfig, ManifestRun, MANIFEST_SCHEMA,
};
use rdts_core::pipeline::{calibration_label, Acquisition, Experiment, PeakSummary, Scenario};
use rdts_core::reconstruction::{render_thermogram, ColorScale};
use rdts_core::{BoardModel, Error, Result};

use crate::{Environment, Format, TraceArgs};

fn out_dir(flag: Option<PathBuf>, cfg: Option<&ExperimentConfig>) -> Result<PathBuf> {
    let dir = flag
        .or_else(|| cfg.and_then(|c| c.output.dir.as_ref().map(PathBuf::from)))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn load(config: &Path) -> Result<(ExperimentConfig, Experiment, Vec<Scenario>)> {
    let cfg = ExperimentConfig::load(config)?;
    let (exp, scenarios) = cfg.resolve()?;
    Ok((cfg, exp, scenarios))
}

fn write_acquisition(dir: &Path, label: &str, acq: &Acquisition) -> Result<(String, String)> {
    let (a, s) = (format!("{label}_AS.csv"), format!("{label}_S.csv"));
    write_trace_file(&dir.join(&a), &acq.anti_stokes)?;
    write_trace_file(&dir.join(&s), &acq.stokes)?;
    Ok((a, s))
}

/// Traces of every scenario plus the shared reference and calibration runs.
/// Returns the manifest describing the calibration runs.
fn simulate_into(exp: &Experiment, scenarios: &[Scenario], seed: u64, dir: &Path) -> Result<CalibrationManifest> {
    let mut manifest = None;
    for scenario in scenarios {
        let traces = exp.prepare(scenario)?.acquire(seed);
        write_acquisition(dir, &format!("scenario_{}", scenario.name), &traces.scenario)?;
        if manifest.is_none() {
            let (reference, _) = write_acquisition(dir, "reference", &traces.reference)?;
            let runs = traces
                .calibration
                .iter()
                .map(|(t, acq)| {
                    let (anti_stokes, stokes) = write_acquisition(dir, &calibration_label(*t), acq)?;
                    Ok(ManifestRun {
                        t_cal: *t,
                        anti_stokes,
                        stokes,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            manifest = Some(CalibrationManifest {
                schema_version: MANIFEST_SCHEMA.to_string(),
                t0: exp.t0(),
                reference_anti_stokes: reference,
                region: exp.calibration_region()?,
                dark_rate_s: exp.instrument.dark_rate_s,
                raman_shift_hz: exp.raman.spectral_shift_hz(),
                runs,
            });
        }
    }
    let manifest = manifest.ok_or_else(|| Error::Config("config has no scenarios".into()))?;
    write(&dir.join("manifest.json"), to_json(&manifest)?.as_bytes())?;
    Ok(manifest)
}

pub fn simulate(config: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<()> {
    let (cfg, exp, scenarios) = load(config)?;
    let dir = out_dir(out, Some(&cfg))?;
    let seed = seed.unwrap_or(cfg.seed);
    let manifest = simulate_into(&exp, &scenarios, seed, &dir)?;
    println!(
        "wrote {} scenario(s) and {} calibration run(s) to {} (seed {seed})",
        scenarios.len(),
        manifest.runs.len(),
        dir.display()
    );
    Ok(())
}

fn calibration_table(file: &ConstantsFile) -> String {
    let c = &file.constants;
    let mut s = String::new();
    let _ = writeln!(s, "C1 = {:.4} ± {:.4}", c.c1, c.sigma_c1);
    let _ = writeln!(s, "C2 = {:.5} ± {:.5}", c.c2, c.sigma_c2);
    let _ = writeln!(s, "T0 = {} K", c.t0);
    let _ = writeln!(
        s,
        "{:>10} {:>12} {:>10} {:>8} {:>9}",
        "T_cal/K", "ratio", "T_DTS/K", "σ_T/K", "resid/K"
    );
    for r in &file.report {
        match (r.t_dts, r.sigma_t, r.residual) {
            (Some(t), Some(sig), Some(res)) => {
                let _ = writeln!(
                    s,
                    "{:>10.2} {:>12.6} {:>10.3} {:>8.3} {:>9.3}",
                    r.t_cal, r.delta_ratio, t, sig, res
                );
            }
            _ => {
                let _ = writeln!(
                    s,
                    "{:>10.2} {:>12.6}   inversion failed: {}",
                    r.t_cal,
                    r.delta_ratio,
                    r.error.as_deref().unwrap_or("")
                );
            }
        }
    }
    s
}

pub fn calibrate(manifest: &Path, out: Option<PathBuf>, format: Option<Format>) -> Result<()> {
    let (m, base) = CalibrationManifest::load(manifest)?;
    let file = m.calibrate(&base)?;
    let dir = out_dir(out, None)?;
    let json = to_json(&file)?;
    write(&dir.join("constants.json"), json.as_bytes())?;
    match format {
        Some(Format::Json) => print!("{json}"),
        _ => print!("{}", calibration_table(&file)),
    }
    Ok(())
}

struct Inputs {
    anti_stokes: rdts_core::CountHistogram,
    stokes: rdts_core::CountHistogram,
    reference: rdts_core::CountHistogram,
    constants: rdts_core::CalibrationConstants,
}

fn read_inputs(t: &TraceArgs) -> Result<Inputs> {
    let inputs = Inputs {
        anti_stokes: read_trace_file(&t.anti_stokes)?,
        stokes: read_trace_file(&t.stokes)?,
        reference: read_trace_file(&t.reference)?,
        constants: ConstantsFile::load(&t.constants)?.constants()?,
    };
    inputs.anti_stokes.check_aligned(&inputs.reference)?;
    inputs.anti_stokes.check_aligned(&inputs.stokes)?;
    Ok(inputs)
}

fn invert_inputs(exp: &Experiment, i: &Inputs) -> Result<rdts_core::TemperatureProfile> {
    if (i.anti_stokes.bin_width - exp.instrument.bin_width).abs() > 1e-6 * exp.instrument.bin_width {
        return Err(Error::Shape(format!(
            "trace bin width {} s differs from the configured {} s",
            i.anti_stokes.bin_width, exp.instrument.bin_width
        )));
    }
    exp.invert(&i.anti_stokes, &i.reference, &i.stokes, &i.constants)
}

pub fn invert(config: &Path, traces: &TraceArgs, out: Option<PathBuf>) -> Result<()> {
    let (cfg, exp, _) = load(config)?;
    let inputs = read_inputs(traces)?;
    let profile = invert_inputs(&exp, &inputs)?;
    let dir = out_dir(out, Some(&cfg))?;
    write(&dir.join("profile.csv"), write_profile_csv(&profile).as_bytes())?;
    println!(
        "{} bins, {} valid, median σ_T {:.3} K",
        profile.len(),
        profile.valid_count(),
        profile.median_sigma().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn summary_text(s: &PeakSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "ambient {:.2} K, median σ_T {:.3} K, region threshold {:.2} K",
        s.ambient, s.noise_sigma, s.threshold
    );
    let _ = writeln!(out, "{} hot region(s)", s.regions.len());
    for r in &s.regions {
        let _ = writeln!(
            out,
            "  peak {:.2} K at ({:.1}, {:.1}) mm, nearest {} ({:.1} mm), {} px",
            r.peak,
            r.x * 1e3,
            r.y * 1e3,
            r.nearest_heater,
            r.distance * 1e3,
            r.pixels
        );
    }
    let _ = writeln!(out, "{:>5} {:>9} {:>12} {:>9}", "heater", "set/K", "plateau/K", "map/K");
    for h in &s.heaters {
        let plateau = h
            .plateau
            .map_or("-".to_string(), |p| format!("{:.2}±{:.2}", p.temperature, p.sigma));
        let map = h.map_peak.map_or("-".to_string(), |v| format!("{v:.2}"));
        let _ = writeln!(out, "{:>5} {:>9.2} {:>12} {:>9}", h.id, h.set_temperature, plateau, map);
    }
    out
}

/// Writes the profile, grid, image and summary selected by `format`.
fn write_thermogram_outputs(
    exp: &Experiment,
    board: &BoardModel,
    profile: &rdts_core::TemperatureProfile,
    dir: &Path,
    format: Option<Format>,
) -> Result<PeakSummary> {
    let map = exp.thermogram(profile)?;
    let summary = exp.summarize(board, profile, &map.filtered);
    let want = |f: Format| format.is_none() || format == Some(f);
    if want(Format::Csv) {
        write(&dir.join("profile.csv"), write_profile_csv(profile).as_bytes())?;
        write(&dir.join("grid.csv"), write_grid_csv(&map.filtered).as_bytes())?;
    }
    if want(Format::Ppm) {
        let scale = ColorScale::auto(&map.filtered, board.ambient);
        let heaters: Vec<_> = board.heaters.iter().map(|h| h.geometry).collect();
        let image = render_thermogram(&map.filtered, &scale, &heaters);
        write(&dir.join("thermogram.ppm"), &image.to_ppm_bytes())?;
    }
    if want(Format::Json) {
        write(&dir.join("summary.json"), to_json(&summary)?.as_bytes())?;
    }
    Ok(summary)
}

pub fn thermogram(
    config: &Path,
    traces: &TraceArgs,
    scenario: Option<&str>,
    out: Option<PathBuf>,
    format: Option<Format>,
) -> Result<()> {
    let (cfg, exp, scenarios) = load(config)?;
    let board = match scenario {
        None => exp.board.all_off(),
        Some(name) => {
            let s = scenarios
                .iter()
                .find(|s| s.name == name)
                .ok_or_else(|| Error::Config(format!("config has no scenario `{name}`")))?;
            exp.board_for(s)?
        }
    };
    let inputs = read_inputs(traces)?;
    let profile = invert_inputs(&exp, &inputs)?;
    let dir = out_dir(out, Some(&cfg))?;
    let summary = write_thermogram_outputs(&exp, &board, &profile, &dir, format)?;
    match format {
        Some(Format::Json) => print!("{}", to_json(&summary)?),
        _ => print!("{}", summary_text(&summary)),
    }
    Ok(())
}

pub fn heatmodel(
    data: Option<&Path>,
    r_el: Option<f64>,
    environment: Environment,
    format: Option<Format>,
) -> Result<()> {
    let board = BoardModel::pcb(296.0);
    let geometry = board.heater("R9").expect("default board has R9").geometry;
    let copper = rdts_core::heat::CopperProperties::default();
    let air = ThermalEnvironment::air_296k(&geometry, &copper)?;
    let ln2 = ThermalEnvironment::ln2_77k(&geometry, &copper)?;
    let mut report = serde_json::Map::new();
    let mut text = String::new();

    if let Some(path) = data {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let points = read_heat_csv(&raw)?;
        let fit = fit_quadratic_coefficient(&points)?;
        let env = match environment {
            Environment::Room => air,
            Environment::Cryo => ln2,
        };
        let r = match r_el {
            Some(r) => r,
            None => electrical_resistance(env.ambient, &geometry, &copper)?,
        };
        let r_th = derived_thermal_resistance(fit.k, r)?;
        let _ = writeln!(
            text,
            "K = {:.4} ± {:.4} K/A² from {} points",
            fit.k, fit.sigma_k, fit.n_points
        );
        let _ = writeln!(text, "R_th = {r_th:.4} K/W with R_el = {r:.6} Ω");
        report.insert("fit".into(), serde_json::to_value(fit)?);
        report.insert("r_el".into(), r.into());
        report.insert("r_th".into(), r_th.into());
    }

    let _ = writeln!(
        text,
        "{:>8} {:>8} {:>10} {:>9} {:>9} {:>12}",
        "env", "T/K", "R_el/Ω", "R_th/K/W", "K/K/A²", "ΔT(1 A)/K"
    );
    let mut rows = Vec::new();
    for (name, env) in [("air", air), ("ln2", ln2)] {
        let r = electrical_resistance(env.ambient, &geometry, &copper)?;
        let dt = temperature_rise(1.0, &env, &geometry, &copper, RiseMode::Frozen)?;
        let _ = writeln!(
            text,
            "{name:>8} {:>8.1} {r:>10.6} {:>9.4} {:>9.4} {dt:>12.4}",
            env.ambient,
            env.r_th,
            env.r_th * r
        );
        rows.push(serde_json::json!({
            "environment": name,
            "ambient_k": env.ambient,
            "r_el_ohm": r,
            "r_th_k_per_w": env.r_th,
            "k_k_per_a2": env.r_th * r,
            "rise_at_1a_k": dt,
        }));
    }
    let ratio = thermal_resistance_ratio(
        air.h_conv.expect("preset carries h"),
        ln2.h_conv.expect("preset carries h"),
    )?;
    let _ = writeln!(text, "convective R_th ratio ln2/air = {ratio:.4}");
    report.insert("environments".into(), rows.into());
    report.insert("convective_ratio".into(), ratio.into());

    match format {
        Some(Format::Json) => print!("{}", to_json(&report)?),
        _ => print!("{text}"),
    }
    Ok(())
}

pub fn pipeline(config: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<()> {
    let (cfg, exp, scenarios) = load(config)?;
    let dir = out_dir(out, Some(&cfg))?;
    let seed = seed.unwrap_or(cfg.seed);
    let traces = dir.join("traces");
    std::fs::create_dir_all(&traces).map_err(|e| Error::Io(format!("{}: {e}", traces.display())))?;
    let manifest = simulate_into(&exp, &scenarios, seed, &traces)?;
    let constants = manifest.calibrate(&traces)?;
    write(&dir.join("constants.json"), to_json(&constants)?.as_bytes())?;
    print!("{}", calibration_table(&constants));
    let cal = constants.constants()?;
    let reference = read_trace_file(&traces.join(&manifest.reference_anti_stokes))?;
    let mut summaries = serde_json::Map::new();
    for scenario in &scenarios {
        let label = format!("scenario_{}", scenario.name);
        let inputs = Inputs {
            anti_stokes: read_trace_file(&traces.join(format!("{label}_AS.csv")))?,
            stokes: read_trace_file(&traces.join(format!("{label}_S.csv")))?,
            reference: reference.clone(),
            constants: cal,
        };
        let profile = invert_inputs(&exp, &inputs)?;
        let sdir = dir.join(&scenario.name);
        std::fs::create_dir_all(&sdir).map_err(|e| Error::Io(format!("{}: {e}", sdir.display())))?;
        let board = exp.board_for(scenario)?;
        let summary = write_thermogram_outputs(&exp, &board, &profile, &sdir, None)?;
        println!("== {}", scenario.name);
        print!("{}", summary_text(&summary));
        summaries.insert(scenario.name.clone(), serde_json::to_value(&summary)?);
    }
    write(&dir.join("summary.json"), to_json(&summaries)?.as_bytes())?;
    Ok(())
}
