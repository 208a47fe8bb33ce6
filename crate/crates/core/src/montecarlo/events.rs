use std::f64::consts::TAU;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rand::RngExt;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::SimulationConfig;
use crate::coherence::{PhaseModel, SourceKind, SourceSpec, Spectrum, Statistics};
use crate::error::{Error, Result};
use crate::rng::{install, substream, uniform_phase};

const TAG_FIELD: u64 = 0xE1;
const TAG_THIN: u64 = 0xE2;
const TAG_BEAT: u64 = 0xE3;

/// Time cells per block of generated intensity.
const BLOCK: usize = 1 << 16;
/// Time cells per coherence time for fluctuating intensities.
const CELLS_PER_COHERENCE: f64 = 16.0;
/// Candidate events per segment of a thinned process.
const EVENTS_PER_SEGMENT: f64 = 1.0e5;
/// Fewer expected events than this raises a warning.
const MIN_EXPECTED_EVENTS: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionEvent {
    pub detector: usize,
    pub timestamp: f64,
}

/// Per-detector detection events, each sorted by timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStreams {
    pub streams: Vec<Vec<DetectionEvent>>,
    pub duration: f64,
    /// Time scale over which the intensity stays correlated, s.
    pub coherence_time: f64,
    pub warnings: Vec<String>,
}

/// How the detection intensity fluctuates in time.
enum Model {
    Constant,
    /// Product of `factors` independent chaotic-field intensities.
    Chaotic { spectrum: Spectrum, factors: u32 },
    /// Two lasers mixed on a beam splitter; the outputs beat in antiphase.
    Beat { detuning: f64, phase_time: f64 },
}

fn model_for(sources: &[SourceSpec]) -> Result<Model> {
    let coherent = |s: &SourceSpec| matches!(s.kind(), SourceKind::Laser | SourceKind::Bec);
    match sources {
        [s] if coherent(s) => Ok(Model::Constant),
        [s] => match s.kind() {
            SourceKind::Thermal | SourceKind::ColdAtomCloud if s.statistics() == Statistics::Boson => Ok(Model::Chaotic { spectrum: *s.spectrum(), factors: 1 }),
            SourceKind::SuperbunchingCascade { stages } => Ok(Model::Chaotic { spectrum: *s.spectrum(), factors: *stages }),
            k => Err(Error::Usage(format!(
                "event streams of a {}{} source cannot be produced by thinning an intensity",
                if s.statistics() == Statistics::Fermion { "fermion " } else { "" },
                k.name()
            ))),
        },
        [a, b] if coherent(a) && coherent(b) => {
            let phase_time = match (a.phase_model(), b.phase_model()) {
                (PhaseModel::CoherentPhase { coherence_time: t1 }, PhaseModel::CoherentPhase { coherence_time: t2 }) => t1.min(t2),
                _ => f64::INFINITY,
            };
            Ok(Model::Beat { detuning: a.spectrum().center() - b.spectrum().center(), phase_time })
        }
        _ => Err(Error::Usage("event streams support one source, or two lasers on a beam splitter".into())),
    }
}

/// Power spectrum relative to the line centre, up to a constant.
fn spectral_weight(spectrum: &Spectrum, d: f64) -> f64 {
    match *spectrum {
        Spectrum::Monochromatic { .. } => (d == 0.0) as u8 as f64,
        Spectrum::Rectangular { width, .. } => (d.abs() <= width / 2.0) as u8 as f64,
        Spectrum::Gaussian { sigma, .. } => (-d * d / (2.0 * sigma * sigma)).exp(),
        Spectrum::Lorentzian { gamma, .. } => 1.0 / (1.0 + (2.0 * d / gamma).powi(2)),
    }
}

/// One block of |E(t)|² for a complex Gaussian field with the given spectrum,
/// normalized to unit mean.
fn chaotic_block(fft: &Arc<dyn Fft<f64>>, weights: &[f64], norm: f64, seed: u64, key: &[u64]) -> Vec<f64> {
    let mut rng = substream(seed, key);
    let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid");
    let mut buf: Vec<Complex64> = weights
        .iter()
        .map(|&w| {
            if w == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng)) * w.sqrt()
            }
        })
        .collect();
    fft.process(&mut buf);
    buf.iter().map(|e| e.norm_sqr() / norm).collect()
}

/// Detection events for every detector of `config`.
///
/// Each detector's events are a Poisson process thinned by the local
/// intensity. Chaotic light is a complex Gaussian field built in the
/// frequency domain, so g⁽²⁾(τ) = 1 + |g⁽¹⁾(τ)|²; a cascade multiplies
/// independent chaotic intensities; lasers are constant.
pub fn generate_events(config: &SimulationConfig) -> Result<EventStreams> {
    config.validate()?;
    let duration = config.duration.ok_or_else(|| Error::Usage("event streams need a duration".into()))?;
    let n_det = config.detectors.len().max(config.order);
    if n_det == 0 {
        return Err(Error::Usage("at least one detector is required".into()));
    }
    let model = model_for(&config.sources)?;
    if matches!(model, Model::Beat { .. }) && n_det != 2 {
        return Err(Error::Usage("two-laser beating is observed at the two beam-splitter outputs".into()));
    }
    let mut warnings = Vec::new();
    let expected = config.rate * duration;
    if expected < MIN_EXPECTED_EVENTS {
        warnings.push(format!("only {expected:.1} events expected per detector; statistics will be poor"));
    }
    let seed = config.seed;
    let rate = config.rate;
    let (per_block, coherence_time) = match &model {
        Model::Chaotic { spectrum, factors } => {
            let tc = spectrum.coherence_time();
            if !tc.is_finite() {
                return Err(Error::Usage("chaotic light needs a finite bandwidth".into()));
            }
            (chaotic_events(spectrum, *factors, tc / CELLS_PER_COHERENCE, duration, n_det, rate, seed, config.threads)?, tc)
        }
        Model::Constant => {
            let tc = match config.sources[0].phase_model() {
                PhaseModel::CoherentPhase { coherence_time } => coherence_time,
                PhaseModel::RandomPerPhoton => 0.0,
            };
            (thinned_events(|_, _| 1.0, 1.0, duration, n_det, rate, seed, config.threads), tc)
        }
        Model::Beat { detuning, phase_time } => {
            let (detuning, phase_time) = (*detuning, *phase_time);
            let intensity = move |d: usize, t: f64| {
                let interval = if phase_time.is_finite() { (t / phase_time).floor() as u64 } else { 0 };
                let phi = uniform_phase(&mut substream(seed, &[TAG_BEAT, interval]));
                let sign = if d == 0 { 1.0 } else { -1.0 };
                1.0 + sign * (detuning * t + phi).cos()
            };
            (thinned_events(intensity, 2.0, duration, n_det, rate, seed, config.threads), phase_time)
        }
    };

    let mut streams = vec![Vec::new(); n_det];
    for block in per_block {
        for (s, events) in streams.iter_mut().zip(block) {
            s.extend(events);
        }
    }
    Ok(EventStreams {
        streams,
        duration,
        coherence_time,
        warnings,
    })
}

/// Poisson process with rate `rate·intensity(d, t)`, drawn at the peak rate
/// `rate·peak` and thinned. Segments have fixed boundaries so the result does
/// not depend on the worker count.
fn thinned_events<F>(intensity: F, peak: f64, duration: f64, n_det: usize, rate: f64, seed: u64, threads: Option<usize>) -> Vec<Vec<Vec<DetectionEvent>>>
where
    F: Fn(usize, f64) -> f64 + Sync,
{
    let segments = ((rate * peak * duration) / EVENTS_PER_SEGMENT).ceil().max(1.0) as usize;
    let seg = duration / segments as f64;
    install(threads, || {
        (0..segments)
            .into_par_iter()
            .map(|b| {
                let t0 = b as f64 * seg;
                (0..n_det)
                    .map(|d| {
                        let mut rng = substream(seed, &[TAG_THIN, d as u64, b as u64]);
                        let k = Poisson::new(rate * peak * seg).map(|p| p.sample(&mut rng) as usize).unwrap_or(0);
                        let mut times: Vec<f64> = (0..k).map(|_| t0 + seg * rng.random::<f64>()).collect();
                        times.sort_by(f64::total_cmp);
                        times
                            .into_iter()
                            .filter(|&t| rng.random::<f64>() * peak < intensity(d, t))
                            .map(|t| DetectionEvent { detector: d, timestamp: t })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    })
}

#[allow(clippy::too_many_arguments)]
fn chaotic_events(
    spectrum: &Spectrum,
    factors: u32,
    dt: f64,
    duration: f64,
    n_det: usize,
    rate: f64,
    seed: u64,
    threads: Option<usize>,
) -> Result<Vec<Vec<Vec<DetectionEvent>>>> {
    let cells = (duration / dt).ceil().max(1.0) as usize;
    let blocks = cells.div_ceil(BLOCK);
    let fft = FftPlanner::<f64>::new().plan_fft_inverse(BLOCK);
    let dw = TAU / (BLOCK as f64 * dt);
    let weights: Vec<f64> = (0..BLOCK)
        .map(|m| {
            let signed = if m < BLOCK / 2 { m as f64 } else { m as f64 - BLOCK as f64 };
            spectral_weight(spectrum, signed * dw)
        })
        .collect();
    let norm: f64 = weights.iter().sum();
    if weights.iter().filter(|&&w| w > 0.0).count() < 4 {
        return Err(Error::Numeric("spectrum is too narrow for the time grid".into()));
    }
    Ok(install(threads, || {
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let first = b * BLOCK;
                let len = BLOCK.min(cells - first);
                let mut intensity = vec![1.0; BLOCK];
                for f in 0..factors {
                    let block = chaotic_block(&fft, &weights, norm, seed, &[TAG_FIELD, f as u64, b as u64]);
                    for (i, v) in intensity.iter_mut().zip(block) {
                        *i *= v;
                    }
                }
                (0..n_det)
                    .map(|d| {
                        let mut rng = substream(seed, &[TAG_THIN, d as u64, b as u64]);
                        let mut out = Vec::new();
                        for (c, &level) in intensity.iter().enumerate().take(len) {
                            let t0 = (first + c) as f64 * dt;
                            let width = dt.min(duration - t0);
                            let mean = rate * level * width;
                            if !(mean > 0.0) {
                                continue;
                            }
                            let k = Poisson::new(mean).map(|p| p.sample(&mut rng) as usize).unwrap_or(0);
                            let start = out.len();
                            for _ in 0..k {
                                out.push(DetectionEvent { detector: d, timestamp: t0 + width * rng.random::<f64>() });
                            }
                            out[start..].sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
                        }
                        out
                    })
                    .collect()
            })
            .collect()
    }))
}

/// Writes all events, merged in time order, as `detector_id,timestamp_s`.
pub fn write_events_csv<W: Write>(streams: &EventStreams, mut w: W) -> std::io::Result<()> {
    let mut all: Vec<DetectionEvent> = streams.streams.iter().flatten().copied().collect();
    all.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp).then(a.detector.cmp(&b.detector)));
    writeln!(w, "detector_id,timestamp_s")?;
    for e in all {
        writeln!(w, "{},{:.11e}", e.detector, e.timestamp)?;
    }
    Ok(())
}
