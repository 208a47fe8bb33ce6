//! Closed-form interference patterns. These are the oracle the path engine
//! and the stochastic simulators are checked against.

use std::f64::consts::PI;

use crate::coherence::{GammaTable, Geometry, SourceKind, SourceSpec, Spectrum};
use crate::error::{require_positive, Error, Result};
use crate::propagators::{sinc, spectral_envelope};

/// Coordinate the pattern is sampled over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Detection-time difference(s), s.
    TimeDifference,
    /// Transverse detector position (or position difference), m.
    Position,
    /// Two transverse coordinates, m; values are stored row-major.
    PositionPair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    Raw,
    /// Divided by the uncorrelated baseline, so far-apart detections give 1.
    UncorrelatedBaselineOne,
}

/// A sampled probability function.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternSamples {
    pub axis: Axis,
    pub grid: Vec<f64>,
    /// Second coordinate for two-dimensional patterns.
    pub grid2: Option<Vec<f64>>,
    /// `grid.len()` values, or `grid.len() * grid2.len()` in row-major order.
    pub values: Vec<f64>,
    pub normalization: Normalization,
    /// Level of statistically independent detections in the units of `values`.
    pub baseline: f64,
}

fn strictly_increasing(g: &[f64]) -> bool {
    !g.is_empty() && g.iter().all(|x| x.is_finite()) && g.windows(2).all(|w| w[1] > w[0])
}

impl PatternSamples {
    pub fn new(axis: Axis, grid: Vec<f64>, grid2: Option<Vec<f64>>, values: Vec<f64>, normalization: Normalization, baseline: f64) -> Result<Self> {
        if !strictly_increasing(&grid) || grid2.as_ref().is_some_and(|g| !strictly_increasing(g)) {
            return Err(Error::Usage("grid must be non-empty, finite and strictly increasing".into()));
        }
        let expected = grid.len() * grid2.as_ref().map_or(1, |g| g.len());
        if values.len() != expected {
            return Err(Error::Usage(format!("expected {expected} values, got {}", values.len())));
        }
        // tiny negative values are rounding residue of exact zeros
        let mut values = values;
        for v in &mut values {
            if !v.is_finite() || *v < -1e-12 {
                return Err(Error::Numeric(format!("pattern value {v} is not a probability")));
            }
            *v = v.max(0.0);
        }
        Ok(Self {
            axis,
            grid,
            grid2,
            values,
            normalization,
            baseline,
        })
    }

    fn one_d(axis: Axis, grid: &[f64], f: impl Fn(f64) -> f64, normalization: Normalization, baseline: f64) -> Result<Self> {
        let values = grid.iter().map(|&x| f(x)).collect();
        Self::new(axis, grid.to_vec(), None, values, normalization, baseline)
    }

    fn two_d(axis: Axis, g1: &[f64], g2: &[f64], f: impl Fn(f64, f64) -> f64, normalization: Normalization, baseline: f64) -> Result<Self> {
        let mut values = Vec::with_capacity(g1.len() * g2.len());
        for &a in g1 {
            for &b in g2 {
                values.push(f(a, b));
            }
        }
        Self::new(axis, g1.to_vec(), Some(g2.to_vec()), values, normalization, baseline)
    }

    pub fn is_2d(&self) -> bool {
        self.grid2.is_some()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// (max − min)/(max + min) over the grid.
    pub fn visibility(&self) -> f64 {
        let (hi, lo) = (self.max(), self.min());
        if hi + lo == 0.0 {
            0.0
        } else {
            (hi - lo) / (hi + lo)
        }
    }

    /// Grid coordinate(s) of the smallest value.
    pub fn argmin(&self) -> (f64, Option<f64>) {
        self.coords(self.index_of(|a, b| a < b))
    }

    pub fn argmax(&self) -> (f64, Option<f64>) {
        self.coords(self.index_of(|a, b| a > b))
    }

    fn index_of(&self, better: impl Fn(f64, f64) -> bool) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if better(v, self.values[best]) {
                best = i;
            }
        }
        best
    }

    fn coords(&self, i: usize) -> (f64, Option<f64>) {
        match &self.grid2 {
            Some(g2) => (self.grid[i / g2.len()], Some(g2[i % g2.len()])),
            None => (self.grid[i], None),
        }
    }

    /// Value at row `i`, column `j` of a two-dimensional pattern.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        let cols = self.grid2.as_ref().map_or(1, |g| g.len());
        self.values[i * cols + j]
    }
}

/// `n` points evenly spanning [−half_span, half_span].
pub fn symmetric_grid(half_span: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|i| -half_span + 2.0 * half_span * i as f64 / (n - 1) as f64).collect()
}

/// Default number of grid points.
pub const DEFAULT_GRID_POINTS: usize = 512;

/// Envelope form used for the Gaussian Mach-Zehnder pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MzEnvelope {
    /// e^{−σ²(t₁²+t₂²)/2}/(e^{−σ²t₁²}+e^{−σ²t₂²}) with t₁ = τ, t₂ = 0; equals 1/2 at τ = 0.
    #[default]
    Verbatim,
    /// |g⁽¹⁾(τ)| from the spectral envelope; equals 1 at τ = 0.
    Standard,
}

/// First-order Mach-Zehnder pattern versus arm delay τ.
pub fn mz_first_order(spectrum: &Spectrum, grid: &[f64], envelope: MzEnvelope) -> Result<PatternSamples> {
    let s = spectrum.validated()?;
    let w0 = s.center();
    let f = move |tau: f64| match (s, envelope) {
        (Spectrum::Monochromatic { .. }, _) => 1.0 + (w0 * tau).cos(),
        (Spectrum::Gaussian { sigma, .. }, MzEnvelope::Verbatim) => {
            let (t1, t2) = (tau, 0.0);
            let s2 = sigma * sigma;
            let env = (-s2 * (t1 * t1 + t2 * t2) / 2.0).exp() / ((-s2 * t1 * t1).exp() + (-s2 * t2 * t2).exp());
            1.0 + env * (w0 * (t1 - t2)).cos()
        }
        _ => 1.0 + spectral_envelope(&s, tau).conj().re,
    };
    PatternSamples::one_d(Axis::TimeDifference, grid, f, Normalization::Raw, 1.0)
}

/// Parameters of the multi-beam first-order patterns.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderParams {
    /// Number of detected quanta N.
    pub n_detected: usize,
    /// Quanta detected while both single-photon sources emitted (N₂).
    pub n_simultaneous: usize,
    /// Initial phase per source (transient patterns), rad.
    pub phases: Vec<f64>,
    /// Observation much longer than the coherence time.
    pub long_average: bool,
}

impl Default for FirstOrderParams {
    fn default() -> Self {
        Self {
            n_detected: 1,
            n_simultaneous: 0,
            phases: Vec::new(),
            long_average: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderPattern {
    pub pattern: PatternSamples,
    pub visibility: f64,
}

fn phase(params: &FirstOrderParams, i: usize) -> f64 {
    params.phases.get(i).copied().unwrap_or(0.0)
}

/// Fringe argument 2πd/(λL) per metre.
fn fringe_k(geometry: &Geometry) -> f64 {
    geometry.fringe_k()
}

/// Three-beam transient pattern, offsets as printed for collinear S₁, S₂, S₃.
pub fn three_beam_first_order(d12: f64, d23: f64, geometry: &Geometry, phases: [f64; 3], x: f64) -> f64 {
    let k = fringe_k(geometry);
    let d13 = d12 + d23;
    1.5 + (k * d12 * (x - d23 / 2.0) + phases[0] - phases[1]).cos()
        + (k * d23 * (x + d12 / 2.0) + phases[1] - phases[2]).cos()
        + (k * d13 * x + phases[0] - phases[2]).cos()
}

/// First-order pattern of two or three independent beams on the detection plane.
pub fn multi_beam_first_order(sources: &[SourceSpec], geometry: &Geometry, grid: &[f64], params: &FirstOrderParams) -> Result<FirstOrderPattern> {
    if params.n_detected == 0 {
        return Err(Error::Usage("N_detected must be at least 1".into()));
    }
    let kind_of = |s: &SourceSpec| match s.kind() {
        SourceKind::Laser | SourceKind::Bec => "coherent",
        SourceKind::SinglePhoton => "single",
        _ => "random",
    };
    let k = fringe_k(geometry);
    match sources.len() {
        2 => {
            let d = (sources[1].position() - sources[0].position()).abs();
            let dphi = phase(params, 0) - phase(params, 1);
            let kinds = (kind_of(&sources[0]), kind_of(&sources[1]));
            let amplitude = match kinds {
                ("coherent", "coherent") => {
                    if params.long_average {
                        0.0
                    } else {
                        1.0
                    }
                }
                ("random", "random") => 1.0 / (params.n_detected as f64).sqrt(),
                ("single", "single") => {
                    if params.n_simultaneous > params.n_detected {
                        return Err(Error::Usage("N2 cannot exceed N".into()));
                    }
                    if params.n_simultaneous == 0 {
                        0.0
                    } else {
                        let n2 = params.n_simultaneous as f64;
                        n2 / params.n_detected as f64 / n2.sqrt()
                    }
                }
                _ => {
                    return Err(Error::Usage(format!(
                        "no closed form for a {} / {} source pair",
                        sources[0].kind().name(),
                        sources[1].kind().name()
                    )))
                }
            };
            let pattern = PatternSamples::one_d(Axis::Position, grid, |x| 1.0 + amplitude * (k * d * x + dphi).cos(), Normalization::UncorrelatedBaselineOne, 1.0)?;
            Ok(FirstOrderPattern { pattern, visibility: amplitude })
        }
        3 => {
            if sources.iter().any(|s| kind_of(s) != "coherent") {
                return Err(Error::Usage("the three-beam closed form covers coherent sources only".into()));
            }
            let mut pos: Vec<f64> = sources.iter().map(|s| s.position()).collect();
            pos.sort_by(f64::total_cmp);
            let (d12, d23) = (pos[1] - pos[0], pos[2] - pos[1]);
            let phases = [phase(params, 0), phase(params, 1), phase(params, 2)];
            let pattern = if params.long_average {
                PatternSamples::one_d(Axis::Position, grid, |_| 1.5, Normalization::Raw, 1.5)?
            } else {
                PatternSamples::one_d(Axis::Position, grid, |x| three_beam_first_order(d12, d23, geometry, phases, x), Normalization::Raw, 1.5)?
            };
            let visibility = pattern.visibility();
            Ok(FirstOrderPattern { pattern, visibility })
        }
        n => Err(Error::Usage(format!("{n} sources are not supported (2 or 3)"))),
    }
}

/// Temporal or spatial (transverse) pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Temporal,
    Spatial,
}

/// Width parameters that set the sinc arguments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceParams {
    /// Spectral bandwidth Δω (or laser detuning for two-laser HOM), rad/s.
    pub delta_omega: f64,
    /// Source transverse size d (or l for the laser–thermal case), m.
    pub extent: f64,
    /// Separation between the two source centres (laser–thermal case), m.
    pub separation: f64,
    pub wavelength: f64,
    pub distance: f64,
}

impl CoherenceParams {
    pub fn temporal(delta_omega: f64) -> Self {
        Self {
            delta_omega,
            extent: 0.0,
            separation: 0.0,
            wavelength: 0.0,
            distance: 0.0,
        }
    }

    pub fn spatial(extent: f64, wavelength: f64, distance: f64) -> Self {
        Self {
            delta_omega: 0.0,
            extent,
            separation: 0.0,
            wavelength,
            distance,
        }
    }

    /// Argument of the coherence sinc at separation `s` (τ or Δx).
    pub fn sinc_arg(&self, domain: Domain, s: f64) -> Result<f64> {
        match domain {
            Domain::Temporal => Ok(require_positive("delta_omega", self.delta_omega)? * s / 2.0),
            Domain::Spatial => {
                let d = require_positive("extent", self.extent)?;
                let l = require_positive("wavelength", self.wavelength)?;
                let z = require_positive("L", self.distance)?;
                Ok(PI * d * s / (l * z))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HbtKind {
    Thermal,
    Laser,
    SuperbunchingCascade { stages: u32 },
    SuperbunchingModulated { gamma: GammaTable },
    ColdAtomCloud,
    /// Cold atoms with fermion statistics.
    FermionBeam,
    Bec,
}

/// Normalized g⁽²⁾ of one beam in an HBT interferometer.
pub fn hbt_second_order(kind: &HbtKind, domain: Domain, params: &CoherenceParams, grid: &[f64]) -> Result<PatternSamples> {
    let axis = match domain {
        Domain::Temporal => Axis::TimeDifference,
        Domain::Spatial => Axis::Position,
    };
    let flat = matches!(kind, HbtKind::Laser | HbtKind::Bec);
    let mut values = Vec::with_capacity(grid.len());
    for &s in grid {
        let v = if flat {
            1.0
        } else {
            let s2 = sinc(params.sinc_arg(domain, s)?).powi(2);
            match kind {
                HbtKind::Thermal | HbtKind::ColdAtomCloud => 1.0 + s2,
                HbtKind::FermionBeam => 1.0 - s2,
                HbtKind::SuperbunchingCascade { stages } => (1.0 + s2).powi(*stages as i32),
                HbtKind::SuperbunchingModulated { gamma } => {
                    if domain == Domain::Spatial {
                        return Err(Error::Usage("intensity modulation acts on the temporal pattern only".into()));
                    }
                    gamma.eval(s) * (1.0 + s2)
                }
                HbtKind::Laser | HbtKind::Bec => unreachable!(),
            }
        };
        values.push(v);
    }
    PatternSamples::new(axis, grid.to_vec(), None, values, Normalization::UncorrelatedBaselineOne, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HomPair {
    EntangledPair,
    SinglePhotonPair,
    LaserLaser,
    LaserThermal,
    BecPair,
    FermionPair,
}

/// Normalized two-photon pattern of two beams meeting on a 50:50 beam splitter.
pub fn hom_second_order(pair: HomPair, domain: Domain, params: &CoherenceParams, grid: &[f64]) -> Result<PatternSamples> {
    let axis = match domain {
        Domain::Temporal => Axis::TimeDifference,
        Domain::Spatial => Axis::Position,
    };
    let mut values = Vec::with_capacity(grid.len());
    for &s in grid {
        let v = match (pair, domain) {
            (HomPair::EntangledPair | HomPair::SinglePhotonPair, _) => 1.0 - sinc(params.sinc_arg(domain, s)?).powi(2),
            (HomPair::LaserLaser, Domain::Temporal) => 1.0 - 0.5 * (params.delta_omega * s).cos(),
            (HomPair::BecPair, Domain::Temporal) => 1.0 - 0.5 * sinc(params.sinc_arg(domain, s)?).powi(2),
            (HomPair::FermionPair, Domain::Temporal) => 1.0 + sinc(params.sinc_arg(domain, s)?).powi(2),
            (HomPair::LaserThermal, Domain::Spatial) => {
                let env = sinc(params.sinc_arg(domain, s)?).powi(2);
                let k = 2.0 * PI * params.separation / (params.distance * params.wavelength);
                1.0 + 0.25 * env * (1.0 - 2.0 * (k * s).cos())
            }
            _ => {
                return Err(Error::Usage(format!("no {domain:?} closed form for the {pair:?} pair")));
            }
        };
        values.push(v);
    }
    PatternSamples::new(axis, grid.to_vec(), None, values, Normalization::UncorrelatedBaselineOne, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultiSourceKind {
    SinglePhoton,
    Laser,
}

/// Two-photon pattern of three collinear independent sources versus x₁ − x₂
/// (unnormalized, as printed: baseline 3 for single photons and 4.5 for lasers).
pub fn multi_source_second_order(kind: MultiSourceKind, d12: f64, d23: f64, geometry: &Geometry, grid: &[f64]) -> Result<PatternSamples> {
    require_positive("d12", d12)?;
    require_positive("d23", d23)?;
    let k = fringe_k(geometry);
    let d13 = d12 + d23;
    let base = match kind {
        MultiSourceKind::SinglePhoton => 3.0,
        MultiSourceKind::Laser => 4.5,
    };
    let f = |s: f64| base + (k * d12 * (s - d23 / 2.0)).cos() + (k * d13 * s).cos() + (k * d23 * (s + d12 / 2.0)).cos();
    PatternSamples::one_d(Axis::Position, grid, f, Normalization::Raw, base)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanMode {
    /// D₂ fixed, D₁ scanned.
    FixOne,
    /// Both detectors moved together.
    SameDirection,
    /// Detectors moved symmetrically in opposite directions.
    OppositeDirections,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseMode {
    /// The two beams keep equal, fixed phases.
    EqualFixed,
    /// The relative phase is random; single-coordinate and sum terms average out.
    RandomRelative,
}

/// One term c·cos(q·(a·x₁ + b·x₂)) of the two-detector expansion, with q = 2πd/(λL).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineTerm {
    pub coefficient: f64,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubwavelengthResult {
    pub terms: Vec<CosineTerm>,
    /// Fringe period of the scanned two-photon interference, m.
    pub effective_period: f64,
    /// First-order fringe period λL/d, m.
    pub first_order_period: f64,
    /// Visibility along the scan.
    pub visibility: f64,
}

impl SubwavelengthResult {
    /// Two-photon probability at (x₁, x₂).
    pub fn eval(&self, q: f64, x1: f64, x2: f64) -> f64 {
        self.terms.iter().map(|t| t.coefficient * (q * (t.a * x1 + t.b * x2)).cos()).sum()
    }
}

/// Term expansion of the two-beam two-photon pattern (unit intensities) and
/// the fringe period seen by a given scan.
pub fn subwavelength_decomposition(scan: ScanMode, phase_mode: PhaseMode, d: f64, geometry: &Geometry) -> Result<SubwavelengthResult> {
    require_positive("d", d)?;
    let all = [
        CosineTerm { coefficient: 4.0, a: 0.0, b: 0.0 },
        CosineTerm { coefficient: 4.0, a: 0.0, b: 1.0 },
        CosineTerm { coefficient: 4.0, a: 1.0, b: 0.0 },
        CosineTerm { coefficient: 2.0, a: 1.0, b: 1.0 },
        CosineTerm { coefficient: 2.0, a: 1.0, b: -1.0 },
    ];
    let terms: Vec<CosineTerm> = match phase_mode {
        PhaseMode::EqualFixed => all.to_vec(),
        PhaseMode::RandomRelative => all.iter().copied().filter(|t| t.a * t.b < 0.0 || (t.a == 0.0 && t.b == 0.0)).collect(),
    };
    let first = geometry.wavelength() * geometry.distance() / d;
    let effective_period = match scan {
        ScanMode::FixOne => first,
        // the (x₁ − x₂) term sees twice the displacement
        ScanMode::OppositeDirections => first / 2.0,
        // the (x₁ + x₂) term sees twice the displacement
        ScanMode::SameDirection => {
            if phase_mode == PhaseMode::RandomRelative {
                return Err(Error::Usage("the sum term averages out under a random relative phase".into()));
            }
            first / 2.0
        }
    };
    let q = 2.0 * PI / first;
    let result = SubwavelengthResult {
        terms,
        effective_period,
        first_order_period: first,
        visibility: 0.0,
    };
    let scan_point = |s: f64| match scan {
        ScanMode::FixOne => (s, 0.0),
        ScanMode::SameDirection => (s, s),
        ScanMode::OppositeDirections => (s, -s),
    };
    let n = 4096;
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..n {
        let (x1, x2) = scan_point(first * i as f64 / n as f64);
        let v = result.eval(q, x1, x2);
        hi = hi.max(v);
        lo = lo.min(v);
    }
    let visibility = (hi - lo) / (hi + lo);
    Ok(SubwavelengthResult { visibility, ..result })
}

/// Third-order configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThirdOrderConfig {
    /// Thermal light; grid coordinates are (x₁−x₂, x₁−x₃) or (t₁−t₂, t₁−t₃).
    ThermalHbt3(Domain),
    /// Fermions; same coordinates as the thermal case.
    FermionHbt3(Domain),
    /// One single-photon source (intensity I₁) and one laser (I₂) separated by d.
    SinglePhotonPlusLaser { i1: f64, i2: f64 },
    /// Three single-photon sources; grid is (x₁, x₂) with D₃ fixed at `x3`.
    ThreeSinglePhoton { d12: f64, d23: f64, x3: f64 },
    /// Three single-photon sources with d₁₂ = d₂₃ = d and x₃ = x₂; grid is (x₁, x₂).
    ThreeSinglePhotonSlice,
}

/// Normalized third-order pattern on a two-dimensional grid.
///
/// `params` supplies Δω (temporal) or d, λ, L (spatial and multi-source cases).
pub fn third_order_pattern(config: ThirdOrderConfig, params: &CoherenceParams, grid1: &[f64], grid2: &[f64]) -> Result<PatternSamples> {
    let spatial_k = || -> Result<f64> {
        let l = require_positive("wavelength", params.wavelength)?;
        let z = require_positive("L", params.distance)?;
        Ok(2.0 * PI / (l * z))
    };
    match config {
        ThirdOrderConfig::ThermalHbt3(domain) | ThirdOrderConfig::FermionHbt3(domain) => {
            let fermion = matches!(config, ThirdOrderConfig::FermionHbt3(_));
            let axis = if domain == Domain::Temporal { Axis::TimeDifference } else { Axis::PositionPair };
            let sign = if fermion { -1.0 } else { 1.0 };
            // validate once so the closure can unwrap
            params.sinc_arg(domain, 1.0)?;
            let arg = |s: f64| params.sinc_arg(domain, s).expect("validated");
            PatternSamples::two_d(
                axis,
                grid1,
                grid2,
                |s12, s13| {
                    let s23 = s13 - s12;
                    let (a, b, c) = (sinc(arg(s12)), sinc(arg(s23)), sinc(arg(-s13)));
                    1.0 + sign * (a * a + b * b + c * c) + 2.0 * a * b * c
                },
                Normalization::UncorrelatedBaselineOne,
                1.0,
            )
        }
        ThirdOrderConfig::SinglePhotonPlusLaser { i1, i2 } => {
            if !(i1 >= 0.0 && i2 >= 0.0 && i1 + i2 > 0.0) {
                return Err(Error::Domain { name: "intensity", value: i1.min(i2), constraint: "must be >= 0 and not both zero" });
            }
            let k = spatial_k()? * require_positive("extent", params.extent)?;
            let far = 9.0 * i1 * i1 + i2 * i2;
            PatternSamples::two_d(
                Axis::PositionPair,
                grid1,
                grid2,
                |s12, s13| {
                    let s23 = s13 - s12;
                    (3.0 * i1 * i1 * (3.0 + 2.0 * (k * s12).cos() + 2.0 * (k * s23).cos() + 2.0 * (k * s13).cos()) + i2 * i2) / far
                },
                Normalization::UncorrelatedBaselineOne,
                1.0,
            )
        }
        ThirdOrderConfig::ThreeSinglePhoton { d12, d23, x3 } => {
            let k = spatial_k()?;
            require_positive("d12", d12)?;
            require_positive("d23", d23)?;
            let s = [0.0, d12, d12 + d23];
            PatternSamples::two_d(Axis::PositionPair, grid1, grid2, |x1, x2| six_path_probability(k, s, [x1, x2, x3]), Normalization::UncorrelatedBaselineOne, 1.0)
        }
        ThirdOrderConfig::ThreeSinglePhotonSlice => {
            let k = spatial_k()?;
            let d = require_positive("extent", params.extent)?;
            let s = [0.0, d, 2.0 * d];
            PatternSamples::two_d(Axis::PositionPair, grid1, grid2, |x1, x2| six_path_probability(k, s, [x1, x2, x2]), Normalization::UncorrelatedBaselineOne, 1.0)
        }
    }
}

/// |Σ over the six detector assignments of Π exp(−i k xᵢ s_σ(i))|² / 6 for
/// three point sources at `s` and detectors at `x`. Quadratic paraxial phases
/// are common to every assignment and drop out.
fn six_path_probability(k: f64, s: [f64; 3], x: [f64; 3]) -> f64 {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let (mut re, mut im) = (0.0, 0.0);
    for p in PERMS {
        let phase = -k * (x[0] * s[p[0]] + x[1] * s[p[1]] + x[2] * s[p[2]]);
        re += phase.cos();
        im += phase.sin();
    }
    (re * re + im * im) / 6.0
}

/// The general three-source expression in its printed closed form, divided
/// by 6. It does not equal the six-path sum and takes negative values, so it
/// is returned as a bare value. `k` is 2π/(λL).
pub fn three_photon_printed(k: f64, d12: f64, d23: f64, x: [f64; 3]) -> f64 {
    let [x1, x2, x3] = x;
    let d13 = d12 + d23;
    let c13 = |x: f64| (k * d13 * x).cos();
    let c12 = |x: f64| (k * d12 * (x - d23 / 2.0)).cos();
    let c23 = |x: f64| (k * d23 * (x + d12 / 2.0)).cos();
    let v = 6.0
        + 6.0 * (k * d12 * (x1 - x2)).cos()
        + 6.0 * (k * d13 * (x1 - x3)).cos()
        + 6.0 * (k * d23 * (x2 - x3)).cos()
        + 2.0 * c13(x1) * c12(x2) * c23(x3)
        + 2.0 * c13(x1) * c12(x3) * c23(x2)
        + 2.0 * c13(x2) * c12(x1) * c23(x3)
        + 2.0 * c13(x2) * c12(x3) * c23(x1)
        + 2.0 * c13(x3) * c12(x1) * c23(x2)
        + 2.0 * c13(x3) * c12(x2) * c23(x1);
    v / 6.0
}

/// The equal-spacing slice (x₃ = x₂) in its printed form, proportional and
/// not normalized. Like [`three_photon_printed`] it dips below zero.
pub fn three_photon_slice_printed(k: f64, d: f64, x1: f64, x2: f64) -> f64 {
    let c = |x: f64| (k * d * x).cos();
    let c2 = |x: f64| (2.0 * k * d * x).cos();
    1.0 + c(x1 - x2)
        + c2(x1) * c(x2 - d / 2.0) * c(x2 + d / 2.0) / 3.0
        + c2(x2) * c(x1 - d / 2.0) * c(x2 + d / 2.0) / 3.0
        + c2(x2) * c(x2 - d / 2.0) * c(x1 + d / 2.0) / 3.0
}

/// Source families for [`degree_at_zero`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoherenceFamily {
    Thermal,
    Coherent,
    Fermion,
    Cascade { stages: u32 },
}

/// g⁽ⁿ⁾ at all-zero separations: n! for thermal light, 1 for coherent
/// sources, 0 for fermions (n ≥ 2), 2^N for an N-stage cascade at n = 2.
pub fn degree_at_zero(family: CoherenceFamily, order: usize) -> Result<f64> {
    if order == 0 || order > 4 {
        return Err(Error::UnsupportedOrder(order));
    }
    Ok(match family {
        CoherenceFamily::Thermal => (1..=order).map(|k| k as f64).product(),
        CoherenceFamily::Coherent => 1.0,
        CoherenceFamily::Fermion => {
            if order == 1 {
                1.0
            } else {
                0.0
            }
        }
        CoherenceFamily::Cascade { stages } => {
            if order != 2 {
                return Err(Error::Usage("the cascade closed form is second order".into()));
            }
            2f64.powi(stages as i32)
        }
    })
}
