use proptest::prelude::*;

use rdts_core::calibration::{compute_delta_ratio, fit_calibration, CalibrationPoint, CalibrationRegion};
use rdts_core::heat::{
    electrical_resistance, fit_quadratic_coefficient, temperature_rise, CopperProperties, EnvironmentLabel,
    HeaterGeometry, RiseMode, ThermalEnvironment,
};
use rdts_core::io::{read_grid_csv, read_trace, write_grid_csv, write_trace};
use rdts_core::otdr::sim::response_kernel;
use rdts_core::otdr::{expected_counts, FiberTemperature};
use rdts_core::raman::{as_rate, invert_temperature, ratio_forward, s_rate};
use rdts_core::reconstruction::{gaussian_filter, sample_path, splat_gaussians, BinGrid};
use rdts_core::{
    BoardModel, CalibrationConstants, Channel, ChannelCoefficients, CountHistogram, FiberLayout, InstrumentConfig,
    RamanConstants, TemperatureProfile, ThermogramGrid,
};

fn rc() -> RamanConstants {
    RamanConstants::silica()
}

fn hist(counts: Vec<u64>, channel: Channel) -> CountHistogram {
    CountHistogram {
        bin_width: 100e-12,
        counts,
        channel,
        integration_time: 300.0,
        seed: 3,
        repetition_rate: 2.5e6,
        group_index: 1.468,
    }
}

fn constants() -> impl Strategy<Value = CalibrationConstants> {
    (1.0f64..1e5, -50.0f64..50.0, 60.0f64..400.0)
        .prop_map(|(c1, c2, t0)| CalibrationConstants::new(c1, c2, t0, rc()).unwrap())
}

fn channels() -> impl Strategy<Value = ChannelCoefficients> {
    (1.0f64..1e7, 1.0f64..1e7, 0.0f64..1e4, 0.0f64..1e4)
        .prop_map(|(a, b, na, ns)| ChannelCoefficients::new(a, b, na, ns).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn forward_inverse_identity(t in 60.0f64..400.0, cal in constants()) {
        let back = invert_temperature(ratio_forward(t, &cal).unwrap(), &cal).unwrap();
        prop_assert!((back - t).abs() / t < 1e-9, "{t} -> {back}");
    }

    #[test]
    fn channel_identity(t in 1.0f64..2000.0, ch in channels()) {
        let lhs = (s_rate(t, &ch, &rc()).unwrap() - ch.noise_s) / ch.b
            - (as_rate(t, &ch, &rc()).unwrap() - ch.noise_as) / ch.a;
        prop_assert!((lhs - 1.0).abs() <= 8.0 * f64::EPSILON, "{lhs}");
    }

    #[test]
    fn noise_free_ratio_law(t in 1.0f64..2000.0, a in 1.0f64..1e7, b in 1.0f64..1e7) {
        let ch = ChannelCoefficients::new(a, b, 0.0, 0.0).unwrap();
        let ratio = as_rate(t, &ch, &rc()).unwrap() / s_rate(t, &ch, &rc()).unwrap();
        let expect = a / b * (-rc().c() / t).exp();
        prop_assert!((ratio / expect - 1.0).abs() < 1e-12);
        prop_assert!(ratio > 0.0 && ratio < a / b);
    }

    #[test]
    fn fit_is_scale_consistent(k in 0.01f64..100.0, c1 in 10.0f64..1000.0, c2 in -50.0f64..0.0) {
        let cal = CalibrationConstants::new(c1, c2, 296.0, rc()).unwrap();
        let pts: Vec<CalibrationPoint> = [296.0, 305.0, 318.0, 334.0]
            .iter()
            .enumerate()
            .map(|(i, &t)| CalibrationPoint {
                t_cal: t,
                // off-line points so the residuals are non-trivial
                delta_ratio: ratio_forward(t, &cal).unwrap() + 0.01 * (i as f64 - 1.5),
                sigma: 0.0,
            })
            .collect();
        let scaled: Vec<CalibrationPoint> = pts
            .iter()
            .map(|p| CalibrationPoint { delta_ratio: k * p.delta_ratio, ..*p })
            .collect();
        let a = fit_calibration(&pts, 296.0, &rc()).unwrap();
        let b = fit_calibration(&scaled, 296.0, &rc()).unwrap();
        prop_assert!((b.c1 - k * a.c1).abs() <= 1e-9 * (k * a.c1).abs().max(1.0));
        prop_assert!((b.c2 - k * a.c2).abs() <= 1e-9 * (k * a.c2).abs().max(1.0));
    }

    #[test]
    fn noisy_fit_satisfies_reference_zero(seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let cal = CalibrationConstants::new(81.0, -81.0 * rc().boltzmann_factor(296.0).unwrap(), 296.0, rc()).unwrap();
        let pts: Vec<CalibrationPoint> = [296.0, 310.0, 320.0, 334.0]
            .iter()
            .map(|&t| {
                let noise: f64 = rng.random_range(-0.02..0.02);
                CalibrationPoint { t_cal: t, delta_ratio: ratio_forward(t, &cal).unwrap() + noise, sigma: 0.02 }
            })
            .collect();
        let fit = fit_calibration(&pts, 296.0, &rc()).unwrap();
        let x0 = rc().boltzmann_factor(296.0).unwrap();
        let sigma = (x0 * fit.sigma_c1).hypot(fit.sigma_c2);
        prop_assert!(fit.reference_residual().abs() < 3.0 * sigma);
    }

    #[test]
    fn delta_ratio_is_antisymmetric(
        a in prop::collection::vec(1000u64..20_000, 40),
        b in prop::collection::vec(1000u64..20_000, 40),
        s in prop::collection::vec(50_000u64..90_000, 40),
    ) {
        let region = CalibrationRegion::new(0.05, 0.3).unwrap();
        let (ha, hb, hs) = (hist(a, Channel::AntiStokes), hist(b, Channel::AntiStokes), hist(s, Channel::Stokes));
        let fwd = compute_delta_ratio(&ha, &hb, &hs, &region, 7.5).unwrap();
        let rev = compute_delta_ratio(&hb, &ha, &hs, &region, 7.5).unwrap();
        prop_assert_eq!(fwd.value, -rev.value);
        prop_assert_eq!(fwd.sigma, rev.sigma);
    }

    #[test]
    fn frozen_rise_is_quadratic(i in 0.0f64..2.0, r_th in 0.1f64..100.0) {
        let g = HeaterGeometry::pcb_trace([0.05, 0.03]);
        let cu = CopperProperties::default();
        let env = ThermalEnvironment::new(r_th, 296.0, EnvironmentLabel::Custom).unwrap();
        let one = temperature_rise(i, &env, &g, &cu, RiseMode::Frozen).unwrap();
        let two = temperature_rise(2.0 * i, &env, &g, &cu, RiseMode::Frozen).unwrap();
        prop_assert!((two - 4.0 * one).abs() <= 1e-12 * two.max(1.0));
    }

    #[test]
    fn quadratic_fit_recovers_k(k in 0.01f64..500.0, n in 2usize..12) {
        let pts: Vec<(f64, f64)> = (1..=n).map(|j| {
            let i = j as f64 * 0.1;
            (i, k * i * i)
        }).collect();
        let fit = fit_quadratic_coefficient(&pts).unwrap();
        prop_assert!((fit.k / k - 1.0).abs() < 1e-10);
    }

    #[test]
    fn trace_round_trip(counts in prop::collection::vec(any::<u64>(), 1..64), seed in any::<u64>()) {
        let mut h = hist(counts, Channel::Stokes);
        h.seed = seed;
        prop_assert_eq!(read_trace(&write_trace(&h)).unwrap(), h);
    }

    #[test]
    fn grid_round_trip(values in prop::collection::vec(-1e6f64..1e6, 12)) {
        let g = ThermogramGrid { resolution: 0.001, rows: 3, cols: 4, values, origin: [0.0005, 0.0005] };
        prop_assert_eq!(read_grid_csv(&write_grid_csv(&g)).unwrap(), g);
    }
}

#[test]
fn rates_and_ratio_increase_with_temperature() {
    let ch = ChannelCoefficients::new(3.0e5, 2.0e5, 100.0, 100.0).unwrap();
    let cal = CalibrationConstants::room_temperature_reference();
    let (mut a, mut s, mut r) = (f64::MIN, f64::MIN, f64::MIN);
    for t in 60..=400 {
        let t = t as f64;
        let (na, ns, nr) = (
            as_rate(t, &ch, &rc()).unwrap(),
            s_rate(t, &ch, &rc()).unwrap(),
            ratio_forward(t, &cal).unwrap(),
        );
        assert!(na > a && ns > s && nr > r, "not increasing at {t} K");
        (a, s, r) = (na, ns, nr);
    }
}

#[test]
fn self_consistent_rise_exceeds_frozen() {
    let g = HeaterGeometry::pcb_trace([0.05, 0.03]);
    let cu = CopperProperties::default();
    let env = ThermalEnvironment::air_296k(&g, &cu).unwrap();
    for k in 0..=20 {
        let i = k as f64 * 0.05;
        let frozen = temperature_rise(i, &env, &g, &cu, RiseMode::Frozen).unwrap();
        let sc = temperature_rise(i, &env, &g, &cu, RiseMode::SelfConsistent).unwrap();
        assert!(sc >= frozen, "{i} A: {sc} < {frozen}");
    }
    // resistance rises with temperature
    assert!(electrical_resistance(320.0, &g, &cu).unwrap() > electrical_resistance(296.0, &g, &cu).unwrap());
}

#[test]
fn kernel_is_normalised_and_blur_conserves_counts() {
    let inst = InstrumentConfig::room_default();
    let k = response_kernel(&inst);
    assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    // the same heat load shifted by whole bins yields the same total
    let mut no_pol = inst;
    no_pol.polarization.modulation_depth = 0.0;
    let total = |start: f64| -> f64 {
        let t = FiberTemperature {
            segments: vec![(start, start + 0.05, 340.0)],
            ..FiberTemperature::uniform(296.0, 10.0)
        };
        expected_counts(&t, &no_pol, Channel::AntiStokes, &rc())
            .unwrap()
            .iter()
            .sum()
    };
    let (a, b) = (total(3.0037), total(3.0037 + 400.0 * inst.bin_length()));
    assert!((a / b - 1.0).abs() < 1e-9, "{a} vs {b}");
}

#[test]
fn range_check_rejects_long_fibers() {
    let inst = InstrumentConfig::room_default();
    // 2.5 MHz leaves 400 ns, so the unambiguous length is about 40.8 m
    let ok = FiberLayout::new(1.0, vec![[0.01, 0.01], [0.1, 0.01]], 40.0).unwrap();
    let bad = FiberLayout::new(1.0, vec![[0.01, 0.01], [0.1, 0.01]], 41.0).unwrap();
    assert!(inst.validate_for(&ok).is_ok());
    assert!(matches!(inst.validate_for(&bad), Err(rdts_core::Error::Range { .. })));
}

#[test]
fn one_local_maximum_per_heater_crossing() {
    use rdts_core::pipeline::{Experiment, Scenario};
    let exp = Experiment::room();
    let board = exp.board_for(&Scenario::r9()).unwrap();
    let crossings = exp.layout.heater_intervals(&board.heater("R9").unwrap().geometry).len();
    let hot =
        rdts_core::otdr::expected_rate_profile(&board, &exp.layout, &exp.instrument, Channel::AntiStokes, &exp.raman)
            .unwrap();
    let cold = rdts_core::otdr::expected_rate_profile(
        &exp.board,
        &exp.layout,
        &exp.instrument,
        Channel::AntiStokes,
        &exp.raman,
    )
    .unwrap();
    // excess over ambient, against the Poisson noise of the ambient counts
    let excess: Vec<f64> = hot.iter().zip(&cold).map(|(h, c)| h - c).collect();
    let noise: Vec<f64> = cold.iter().map(|c| 3.0 * c.sqrt()).collect();
    let maxima = (1..excess.len() - 1)
        .filter(|&i| excess[i] > noise[i] && excess[i] > excess[i - 1] && excess[i] >= excess[i + 1])
        .count();
    assert!(crossings >= 2);
    assert_eq!(maxima, crossings);
}

fn straight_layout() -> FiberLayout {
    FiberLayout::new(2.0, vec![[0.01, 0.01], [0.14, 0.01], [0.14, 0.05], [0.01, 0.05]], 10.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sample_count_matches_path_length(spacing in 0.002f64..0.1) {
        let layout = straight_layout();
        let pts = sample_path(&layout, spacing, BinGrid::on_board(&layout, 0.0102)).unwrap();
        let covered = pts.len() as f64 * spacing;
        prop_assert!((covered - layout.path_length()).abs() <= spacing + 1e-12);
        prop_assert!(pts.windows(2).all(|w| w[1].arc_length > w[0].arc_length));
    }

    #[test]
    fn invalid_bins_only_remove_their_splat(
        temps in prop::collection::vec(296.0f64..340.0, 40),
        drop in 0usize..40,
    ) {
        let layout = straight_layout();
        let board = BoardModel::pcb(296.0);
        let mut profile = TemperatureProfile {
            origin: layout.lead_in,
            bin_length: 0.01,
            sigmas: vec![1.0; temps.len()],
            valid: vec![true; temps.len()],
            temperatures: temps,
        };
        let pts = sample_path(&layout, 0.01, BinGrid::of_profile(&profile)).unwrap();
        let fwhm = 0.01;
        let full = splat_gaussians(&pts, &profile, &board, fwhm, 0.002).unwrap();
        profile.invalidate(drop);
        let masked = splat_gaussians(&pts, &profile, &board, fwhm, 0.002).unwrap();
        let dropped: Vec<[f64; 2]> = pts.iter().filter(|p| p.bin_index == drop).map(|p| p.board_xy).collect();
        for r in 0..full.rows {
            for c in 0..full.cols {
                let (a, b) = (full.get(r, c), masked.get(r, c));
                prop_assert!(b <= a);
                let [x, y] = full.pixel_center(r, c);
                let near = dropped.iter().any(|p| (p[0] - x).hypot(p[1] - y) <= 3.0 * fwhm);
                if !near {
                    prop_assert_eq!(a, b);
                }
            }
        }
    }

    #[test]
    fn filter_stays_within_input_range(values in prop::collection::vec(250.0f64..400.0, 30 * 20), fwhm in 0.0005f64..0.02) {
        let g = ThermogramGrid { resolution: 0.001, rows: 20, cols: 30, values, origin: [0.0005, 0.0005] };
        let f = gaussian_filter(&g, fwhm).unwrap();
        let (lo, hi) = (g.min(), g.max());
        prop_assert!(f.values.iter().all(|v| *v >= lo - 1e-9 && *v <= hi + 1e-9));
    }
}
