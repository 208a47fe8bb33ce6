//! Stochastic engines: photon-by-photon first-order build-up, detection
//! event streams and windowed coincidence correlation.

mod correlate;
mod events;
mod fit;

use num_complex::Complex64;
use rand::RngExt;
use rayon::prelude::*;

pub use correlate::{correlate, intensity_correlation, CorrelationResult};
pub use events::{generate_events, write_events_csv, DetectionEvent, EventStreams};
pub use fit::{fit_visibility, VisibilityFit};

use crate::analytic::{Axis, Normalization, PatternSamples};
use crate::coherence::{DetectorSpec, Geometry, PhaseModel, SourceKind, SourceSpec};
use crate::error::{Error, Result};
use crate::rng::{chunks, install, substream, uniform_phase};

const TAG_PHOTON: u64 = 0xF1;
const TAG_INTERVAL: u64 = 0xF2;

/// Inputs shared by the stochastic engines.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub sources: Vec<SourceSpec>,
    pub detectors: Vec<DetectorSpec>,
    pub geometry: Geometry,
    /// Correlation order n.
    pub order: usize,
    /// Detected quanta N (first-order build-up).
    pub photons: usize,
    /// Observation time, s. For the first-order build-up `None` places every
    /// photon inside one coherence interval.
    pub duration: Option<f64>,
    /// Mean detection rate per detector, 1/s (event streams).
    pub rate: f64,
    pub seed: u64,
    pub bins: usize,
    pub threads: Option<usize>,
}

impl SimulationConfig {
    pub fn new(sources: Vec<SourceSpec>, geometry: Geometry) -> Self {
        Self {
            sources,
            detectors: Vec::new(),
            geometry,
            order: 1,
            photons: 10_000,
            duration: None,
            rate: 1.0e6,
            seed: 0,
            bins: 64,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order == 0 || self.order > 4 {
            return Err(Error::UnsupportedOrder(self.order));
        }
        if self.photons == 0 {
            return Err(Error::Domain { name: "photons", value: 0.0, constraint: "must be >= 1" });
        }
        if self.bins < 8 {
            return Err(Error::Domain { name: "bins", value: self.bins as f64, constraint: "must be >= 8" });
        }
        if let Some(d) = self.duration {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::Domain { name: "duration", value: d, constraint: "must be > 0" });
            }
        }
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return Err(Error::Domain { name: "rate", value: self.rate, constraint: "must be > 0" });
        }
        if self.sources.is_empty() {
            return Err(Error::Usage("at least one source is required".into()));
        }
        Ok(())
    }
}

/// Result of the photon-by-photon first-order build-up.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderSimulation {
    /// Σⱼ Pⱼ(x) / N on the requested grid.
    pub pattern: PatternSamples,
    /// Histogram bin edges over the grid range, m.
    pub bin_edges: Vec<f64>,
    /// Detection positions drawn photon by photon.
    pub counts: Vec<u64>,
    /// Fit of the summed probability function.
    pub fit: VisibilityFit,
    /// Fit of the sampled histogram; includes detection shot noise.
    pub histogram_fit: VisibilityFit,
    /// (max − min)/(max + min) of the summed probability function.
    pub extrema_visibility: f64,
    /// Fringe wavenumber used by both fits, rad/m.
    pub fringe_k: f64,
}

/// Key under which a source draws its phase: sources in one phase group share it.
fn phase_key(sources: &[SourceSpec], i: usize) -> u64 {
    match sources[i].phase_group() {
        Some(g) => (1 << 32) | g as u64,
        None => i as u64,
    }
}

/// Builds up a two-source first-order pattern one detected photon at a time.
pub fn simulate_first_order(config: &SimulationConfig, grid: &[f64]) -> Result<FirstOrderSimulation> {
    config.validate()?;
    let sources = &config.sources;
    if sources.len() != 2 {
        return Err(Error::Usage(format!("first-order build-up needs two sources, got {}", sources.len())));
    }
    if grid.len() < 2 || !grid.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::Usage("grid must be strictly increasing with at least two points".into()));
    }
    let q = config.geometry.fringe_k();
    let fringe_k = q * (sources[1].position() - sources[0].position()).abs();
    if fringe_k == 0.0 {
        return Err(Error::Usage("sources coincide; there is no fringe to fit".into()));
    }
    let amp: Vec<f64> = sources.iter().map(|s| s.intensity_weight().sqrt()).collect();
    let total: f64 = sources.iter().map(|s| s.intensity_weight()).sum();
    let p_max = amp.iter().sum::<f64>().powi(2) / total;
    let single = sources.iter().all(|s| matches!(s.kind(), SourceKind::SinglePhoton));
    let n = config.photons;
    let dt = config.duration.map_or(0.0, |d| d / n as f64);
    let (x0, x1) = (grid[0], grid[grid.len() - 1]);
    let bins = config.bins;
    let width = (x1 - x0) / bins as f64;
    let seed = config.seed;

    let partials: Vec<(Vec<f64>, Vec<u64>)> = install(config.threads, || {
        chunks(n)
            .into_par_iter()
            .map(|(c, start, len)| {
                let mut rng = substream(seed, &[TAG_PHOTON, c]);
                let mut sum = vec![0.0; grid.len()];
                let mut hist = vec![0u64; bins];
                let mut phases = vec![0.0; sources.len()];
                for j in start..start + len {
                    let t = (j as f64 + 0.5) * dt;
                    for (i, s) in sources.iter().enumerate() {
                        phases[i] = match s.phase_model() {
                            PhaseModel::RandomPerPhoton => uniform_phase(&mut rng),
                            PhaseModel::CoherentPhase { coherence_time } => {
                                let interval = if coherence_time.is_finite() { (t / coherence_time).floor() as u64 } else { 0 };
                                uniform_phase(&mut substream(seed, &[TAG_INTERVAL, phase_key(sources, i), interval]))
                            }
                        };
                    }
                    // a single-photon source emits alone: no second amplitude to interfere with
                    let emitting: Option<usize> = if single {
                        let u: f64 = rng.random::<f64>() * total;
                        Some(if u < sources[0].intensity_weight() { 0 } else { 1 })
                    } else {
                        None
                    };
                    let p = |x: f64| -> f64 {
                        match emitting {
                            Some(_) => 1.0,
                            None => {
                                let a: Complex64 = sources
                                    .iter()
                                    .enumerate()
                                    .map(|(i, s)| Complex64::from_polar(amp[i], q * s.position() * x + phases[i]))
                                    .sum();
                                a.norm_sqr() / total
                            }
                        }
                    };
                    for (acc, &x) in sum.iter_mut().zip(grid) {
                        *acc += p(x);
                    }
                    let x = loop {
                        let x = x0 + (x1 - x0) * rng.random::<f64>();
                        if rng.random::<f64>() * p_max <= p(x) {
                            break x;
                        }
                    };
                    let b = (((x - x0) / width) as usize).min(bins - 1);
                    hist[b] += 1;
                }
                (sum, hist)
            })
            .collect()
    });

    let mut sum = vec![0.0; grid.len()];
    let mut counts = vec![0u64; bins];
    for (s, h) in partials {
        for (a, b) in sum.iter_mut().zip(s) {
            *a += b;
        }
        for (a, b) in counts.iter_mut().zip(h) {
            *a += b;
        }
    }
    let values: Vec<f64> = sum.iter().map(|v| v / n as f64).collect();
    let pattern = PatternSamples::new(Axis::Position, grid.to_vec(), None, values, Normalization::UncorrelatedBaselineOne, 1.0)?;
    let fit = fit_visibility(grid, &pattern.values, fringe_k);
    let bin_edges: Vec<f64> = (0..=bins).map(|b| x0 + width * b as f64).collect();
    let centers: Vec<f64> = bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let hist_f: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let histogram_fit = fit_visibility(&centers, &hist_f, fringe_k);
    let extrema_visibility = pattern.visibility();
    Ok(FirstOrderSimulation {
        pattern,
        bin_edges,
        counts,
        fit,
        histogram_fit,
        extrema_visibility,
        fringe_k,
    })
}

#[cfg(test)]
mod tests;
