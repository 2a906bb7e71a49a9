use rdts_core::constants::FWHM_PER_SIGMA;
use rdts_core::otdr::{derive_seed, sample_histogram};
use rdts_core::pipeline::{Experiment, Scenario};
use rdts_core::Channel;

#[test]
fn poisson_moments_over_many_seeds() {
    let inst = Experiment::room().instrument;
    let expected = [50.0, 80.0, 200.0, 1_000.0, 10_000.0];
    let n = 1_500;
    let mut sum = [0.0; 5];
    let mut sum2 = [0.0; 5];
    for seed in 0..n {
        let h = sample_histogram(&expected, &inst, Channel::Stokes, derive_seed(seed, "moments"));
        for (i, &c) in h.counts.iter().enumerate() {
            sum[i] += c as f64;
            sum2[i] += (c as f64).powi(2);
        }
    }
    for i in 0..expected.len() {
        let mean = sum[i] / n as f64;
        let var = (sum2[i] - n as f64 * mean * mean) / (n - 1) as f64;
        assert!((0.9..=1.1).contains(&(var / mean)), "bin {i}: var/mean {}", var / mean);
        // five standard errors of the mean
        assert!(
            (mean - expected[i]).abs() < 5.0 * (expected[i] / n as f64).sqrt(),
            "bin {i}: mean {mean}"
        );
    }
}

#[test]
fn sampling_ignores_thread_count() {
    let exp = Experiment::room();
    let prepared = exp.prepare(&Scenario::r9()).unwrap();
    let draw = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| prepared.acquire(42))
    };
    let (one, many) = (draw(1), draw(4));
    assert_eq!(one.scenario.anti_stokes, many.scenario.anti_stokes);
    assert_eq!(one.scenario.stokes, many.scenario.stokes);
    assert_eq!(one.calibration, many.calibration);
}

#[test]
fn seeded_runs_are_reproducible() {
    let prepared = Experiment::room().prepare(&Scenario::r9()).unwrap();
    let (a, b) = (prepared.run(9).unwrap(), prepared.run(9).unwrap());
    assert_eq!(a.profile, b.profile);
    assert_eq!(a.thermogram.filtered, b.thermogram.filtered);
    assert_ne!(prepared.run(10).unwrap().traces.scenario, a.traces.scenario);
}

#[test]
fn noiseless_step_width_matches_blur_oracle() {
    let exp = Experiment::room();
    let w = exp.step_response(5.0, 1.0, 42.0, None).unwrap().width_10_90();
    // Gaussian response convolved with a one-bin box, as variances
    let sigma = exp.instrument.spatial_resolution() / FWHM_PER_SIGMA;
    let box_len = exp.reporting_bin_length();
    // 10-90% width of a Gaussian edge is 2·√2·erfinv(0.8)·σ
    let oracle = 2.563_103_1 * (sigma * sigma + box_len * box_len / 12.0).sqrt();
    assert!((oracle - 0.02914).abs() < 2e-4, "oracle {oracle}");
    assert!((w - oracle).abs() < 1e-3, "width {w} vs oracle {oracle}");
}

#[test]
fn all_off_board_shows_no_regions() {
    let prepared = Experiment::room().prepare(&Scenario::all_off()).unwrap();
    for seed in 0..5 {
        let s = prepared.run(seed).unwrap().summary;
        assert!(s.regions.is_empty(), "seed {seed}: {:?}", s.regions);
    }
}
