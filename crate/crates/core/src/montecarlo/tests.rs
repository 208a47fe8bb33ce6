use super::*;
use crate::coherence::Spectrum;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

const OMEGA: f64 = 3.77e15;

fn geometry() -> Geometry {
    Geometry::new(1.0, 500e-9).unwrap()
}

fn pair(kind: SourceKind, model: Option<PhaseModel>) -> Vec<SourceSpec> {
    [0.0, 1e-3]
        .iter()
        .map(|&x| {
            let mut b = SourceSpec::builder(kind.clone(), Spectrum::monochromatic(OMEGA).unwrap()).position(x);
            if let Some(m) = model {
                b = b.phase_model(m);
            }
            b.build().unwrap()
        })
        .collect()
}

fn period() -> f64 {
    500e-9 / 1e-3
}

fn grid() -> Vec<f64> {
    crate::analytic::symmetric_grid(5.0 * period(), 257)
}

#[test]
fn laser_transient_keeps_fringes() {
    let mut cfg = SimulationConfig::new(pair(SourceKind::Laser, None), geometry());
    cfg.photons = 10_000;
    cfg.bins = 100;
    let r = simulate_first_order(&cfg, &grid()).unwrap();
    assert!(r.fit.visibility > 0.95, "{:?}", r.fit);
    assert!(r.histogram_fit.visibility > 0.95, "{:?}", r.histogram_fit);
    assert!(!r.fit.ill_conditioned);
}

#[test]
fn laser_long_average_washes_out() {
    let tc = 1e-6;
    let lasers = pair(SourceKind::Laser, Some(PhaseModel::CoherentPhase { coherence_time: tc }));
    let mut cfg = SimulationConfig::new(lasers, geometry());
    cfg.photons = 10_000;
    cfg.duration = Some(1000.0 * tc);
    let r = simulate_first_order(&cfg, &grid()).unwrap();
    assert!(r.fit.visibility <= 0.1, "{:?}", r.fit);
}

#[test]
fn thermal_visibility_follows_inverse_root_n() {
    let n = 10_000;
    let mut vs: Vec<f64> = (0..100)
        .map(|seed| {
            let mut cfg = SimulationConfig::new(pair(SourceKind::Thermal, None), geometry());
            cfg.photons = n;
            cfg.seed = seed;
            simulate_first_order(&cfg, &grid()).unwrap().fit.visibility
        })
        .collect();
    vs.sort_by(f64::total_cmp);
    let median = 0.5 * (vs[49] + vs[50]);
    let target = 1.0 / (n as f64).sqrt();
    assert!((median / target - 1.0).abs() < 0.3, "median {median}");
}

#[test]
fn first_order_is_deterministic_and_thread_independent() {
    let mut cfg = SimulationConfig::new(pair(SourceKind::Thermal, None), geometry());
    cfg.photons = 5000;
    cfg.seed = 11;
    cfg.threads = Some(1);
    let a = simulate_first_order(&cfg, &grid()).unwrap();
    cfg.threads = Some(4);
    let b = simulate_first_order(&cfg, &grid()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn fit_is_unbiased_on_synthetic_fringes() {
    let k = 2.0 * std::f64::consts::PI / period();
    let x = grid();
    let normal = rand_distr::Normal::new(0.0, 0.01).unwrap();
    for v in [0.0, 0.25, 0.5, 1.0] {
        let mut total = 0.0;
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let phi = crate::rng::uniform_phase(&mut rng);
            let y: Vec<f64> = x.iter().map(|&xi| 1.0 + v * (k * xi + phi).cos() + normal.sample(&mut rng)).collect();
            total += fit_visibility(&x, &y, k).visibility;
        }
        let bias = total / 100.0 - v;
        assert!(bias.abs() < 0.02, "V={v} bias {bias}");
    }
}

#[test]
fn short_grid_is_flagged() {
    let k = 1.0;
    let x: Vec<f64> = (0..10).map(|i| i as f64 * 1e-6).collect();
    let y = vec![1.0; 10];
    assert!(fit_visibility(&x, &y, k).ill_conditioned);
}

fn event_config(source: SourceSpec, detectors: usize, duration: f64, rate: f64) -> SimulationConfig {
    let mut cfg = SimulationConfig::new(vec![source], geometry());
    cfg.order = detectors;
    cfg.detectors = (0..detectors).map(|i| DetectorSpec::new(i, 0.0).unwrap()).collect();
    cfg.duration = Some(duration);
    cfg.rate = rate;
    cfg.seed = 3;
    cfg
}

fn thermal(width: f64) -> SourceSpec {
    SourceSpec::builder(SourceKind::Thermal, Spectrum::rectangular(OMEGA, width).unwrap()).build().unwrap()
}

#[test]
fn laser_counts_are_poisson() {
    let laser = SourceSpec::builder(SourceKind::Laser, Spectrum::monochromatic(OMEGA).unwrap()).build().unwrap();
    let cfg = event_config(laser, 1, 1e-3, 1e8);
    let ev = generate_events(&cfg).unwrap();
    let n = ev.streams[0].len() as f64;
    let mean = 1e5;
    assert!((n - mean).abs() < 5.0 * mean.sqrt(), "{n}");
    assert!(ev.streams[0].windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
}

#[test]
fn thermal_counts_are_super_poissonian() {
    let width = 2.0 * std::f64::consts::PI * 1e9;
    let tc = 1e-9;
    let rate = 2e8;
    let cfg = event_config(thermal(width), 1, 2e4 * tc, rate);
    let ev = generate_events(&cfg).unwrap();
    let bins = 20_000;
    let mut counts = vec![0.0f64; bins];
    for e in &ev.streams[0] {
        counts[((e.timestamp / tc) as usize).min(bins - 1)] += 1.0;
    }
    let mean = counts.iter().sum::<f64>() / bins as f64;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (bins - 1) as f64;
    let fano = var / mean;
    // excess over Poisson is mean × (integrated g² − 1) over the bin, between 0 and mean
    assert!(fano > 1.0 + 0.2 * mean, "fano {fano}, mean {mean}");
    assert!(fano < 1.0 + mean * 1.1, "fano {fano}, mean {mean}");
}

#[test]
fn identical_seeds_identical_streams() {
    let cfg = event_config(thermal(2e9), 2, 1e-6, 1e8);
    let a = generate_events(&cfg).unwrap();
    let b = generate_events(&cfg).unwrap();
    assert_eq!(a, b);
    let mut ca = Vec::new();
    let mut cb = Vec::new();
    write_events_csv(&a, &mut ca).unwrap();
    write_events_csv(&b, &mut cb).unwrap();
    assert_eq!(ca, cb);
    let text = String::from_utf8(ca).unwrap();
    assert!(text.starts_with("detector_id,timestamp_s\n"));
    let line = text.lines().nth(1).unwrap();
    let ts = line.split(',').nth(1).unwrap();
    assert_eq!(ts.split('e').next().unwrap().replace(['.', '-'], "").len(), 12);
}

#[test]
fn few_events_raise_warning() {
    let cfg = event_config(thermal(2e9), 2, 1e-9, 1e6);
    assert!(!generate_events(&cfg).unwrap().warnings.is_empty());
}

#[test]
fn thermal_bunching_from_coincidences() {
    let width = 2.0 * std::f64::consts::PI * 1e9;
    let tc = 1e-9;
    let cfg = event_config(thermal(width), 2, 1e6 * tc, 2e8);
    let ev = generate_events(&cfg).unwrap();
    let r = correlate(&ev, 2, 10.0 * tc, 201).unwrap();
    let (g0, _) = r.at_zero();
    assert!((g0 - 2.0).abs() < 0.1, "g2(0) = {g0}");
    let edge = r.values[0];
    assert!((edge - 1.0).abs() < 0.1, "g2(far) = {edge}");
}

#[test]
fn laser_coincidences_are_flat() {
    let laser = SourceSpec::builder(SourceKind::Laser, Spectrum::monochromatic(OMEGA).unwrap()).build().unwrap();
    let cfg = event_config(laser, 2, 1e-3, 1e7);
    let r = correlate(&generate_events(&cfg).unwrap(), 2, 1e-7, 21).unwrap();
    let mean = r.values.iter().sum::<f64>() / r.values.len() as f64;
    assert!((mean - 1.0).abs() < 0.05, "{mean}");
}

#[test]
fn thermal_third_order_coincidences() {
    let width = 2.0 * std::f64::consts::PI * 1e9;
    let tc = 1e-9;
    let cfg = event_config(thermal(width), 3, 2e6 * tc, 2e8);
    let ev = generate_events(&cfg).unwrap();
    let r = correlate(&ev, 3, 0.5 * tc, 9).unwrap();
    let (g0, se) = r.at_zero();
    assert!((g0 - 6.0).abs() < 0.5, "g3(0) = {g0} ± {se}");
}

#[test]
fn empty_stream_gives_zero_counts() {
    let ev = EventStreams { streams: vec![Vec::new(), Vec::new()], duration: 1.0, coherence_time: 1.0, warnings: vec![] };
    let r = correlate(&ev, 2, 0.1, 10).unwrap();
    assert!(r.counts.iter().all(|&c| c == 0));
}

#[test]
fn intensity_correlation_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let speckle: Vec<f64> = (0..200_000).map(|_| Exp1.sample(&mut rng)).collect();
    let other: Vec<f64> = (0..200_000).map(|_| Exp1.sample(&mut rng)).collect();
    let r = intensity_correlation(&[&speckle, &speckle], 2, 1.0).unwrap();
    assert!((r.values[2] - 2.0).abs() < 0.1, "{}", r.values[2]);
    let r = intensity_correlation(&[&speckle, &other], 0, 1.0).unwrap();
    assert!((r.values[0] - 1.0).abs() < 0.05);
    let flat = vec![3.0; 100];
    let r = intensity_correlation(&[&flat, &flat, &flat], 1, 1.0).unwrap();
    assert!(r.values.iter().all(|&v| v == 1.0));
    assert!(intensity_correlation(&[&flat, &speckle], 0, 1.0).is_err());
}

#[test]
fn two_laser_beating_has_half_visibility() {
    let detuning = 2.0 * std::f64::consts::PI * 189e6;
    let lasers = vec![
        SourceSpec::builder(SourceKind::Laser, Spectrum::monochromatic(OMEGA).unwrap()).build().unwrap(),
        SourceSpec::builder(SourceKind::Laser, Spectrum::monochromatic(OMEGA - detuning).unwrap()).build().unwrap(),
    ];
    let mut cfg = SimulationConfig::new(lasers, geometry());
    cfg.order = 2;
    cfg.detectors = (0..2).map(|i| DetectorSpec::new(i, 0.0).unwrap()).collect();
    cfg.duration = Some(0.02);
    cfg.rate = 1e7;
    let ev = generate_events(&cfg).unwrap();
    let beat = 2.0 * std::f64::consts::PI / detuning;
    let r = correlate(&ev, 2, 2.0 * beat, 101).unwrap();
    let fit = fit_visibility(&r.centers(), &r.values, detuning);
    assert!((fit.visibility - 0.5).abs() < 0.02, "{fit:?}");
    assert!((fit.offset - 1.0).abs() < 0.02);
}
