//! Domain types shared by every engine: spectra, phase models, sources,
//! detectors, geometry, plus the closed-form coherence utilities.

use std::f64::consts::PI;

use rand::{Rng, RngExt};
use rand_distr::{Cauchy, Distribution, Normal};

use crate::constants::CODATA;
use crate::error::{require_positive, Error, Result};

/// Default photon-absorption position uncertainty (atomic size), m.
pub const DEFAULT_POSITION_UNCERTAINTY: f64 = 1e-10;

/// Frequency distribution of the emitted quanta. All values in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Spectrum {
    Monochromatic { omega0: f64 },
    /// Flat band of full width `width` centred on `omega0`.
    Rectangular { omega0: f64, width: f64 },
    /// Gaussian with standard deviation `sigma`.
    Gaussian { omega0: f64, sigma: f64 },
    /// Lorentzian with full width `gamma` (temporal decay e^{-gamma|t|/2}).
    Lorentzian { omega0: f64, gamma: f64 },
}

impl Spectrum {
    pub fn monochromatic(omega0: f64) -> Result<Self> {
        Self::Monochromatic { omega0 }.validated()
    }

    pub fn rectangular(omega0: f64, width: f64) -> Result<Self> {
        Self::Rectangular { omega0, width }.validated()
    }

    pub fn gaussian(omega0: f64, sigma: f64) -> Result<Self> {
        Self::Gaussian { omega0, sigma }.validated()
    }

    pub fn lorentzian(omega0: f64, gamma: f64) -> Result<Self> {
        Self::Lorentzian { omega0, gamma }.validated()
    }

    /// Checks positivity and the quasi-monochromatic bound `width < omega0 / 10`.
    pub fn validated(self) -> Result<Self> {
        let omega0 = require_positive("omega0", self.center())?;
        if let Some(width) = self.width() {
            require_positive("spectral width", width)?;
            if width >= omega0 / 10.0 {
                return Err(Error::Domain {
                    name: "spectral width",
                    value: width,
                    constraint: "must be < omega0 / 10 (quasi-monochromatic)",
                });
            }
        }
        Ok(self)
    }

    pub fn center(&self) -> f64 {
        match *self {
            Spectrum::Monochromatic { omega0 }
            | Spectrum::Rectangular { omega0, .. }
            | Spectrum::Gaussian { omega0, .. }
            | Spectrum::Lorentzian { omega0, .. } => omega0,
        }
    }

    /// Width parameter (Δω, σ or Γ); `None` for a single frequency.
    pub fn width(&self) -> Option<f64> {
        match *self {
            Spectrum::Monochromatic { .. } => None,
            Spectrum::Rectangular { width, .. } => Some(width),
            Spectrum::Gaussian { sigma, .. } => Some(sigma),
            Spectrum::Lorentzian { gamma, .. } => Some(gamma),
        }
    }

    /// Coherence time 1/Δν with Δν = width/2π; infinite for a single frequency.
    pub fn coherence_time(&self) -> f64 {
        match self.width() {
            Some(w) => 2.0 * PI / w,
            None => f64::INFINITY,
        }
    }

    /// Same spectrum shifted to a new centre frequency.
    pub fn with_center(&self, omega0: f64) -> Result<Self> {
        match *self {
            Spectrum::Monochromatic { .. } => Self::monochromatic(omega0),
            Spectrum::Rectangular { width, .. } => Self::rectangular(omega0, width),
            Spectrum::Gaussian { sigma, .. } => Self::gaussian(omega0, sigma),
            Spectrum::Lorentzian { gamma, .. } => Self::lorentzian(omega0, gamma),
        }
    }

    /// Draws one angular frequency from f(ω).
    pub fn sample_omega<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.center() + self.sample_offset(rng)
    }

    /// Draws ω − ω0.
    pub fn sample_offset<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Spectrum::Monochromatic { .. } => 0.0,
            Spectrum::Rectangular { width, .. } => (rng.random::<f64>() - 0.5) * width,
            Spectrum::Gaussian { sigma, .. } => Normal::new(0.0, sigma)
                .expect("sigma validated positive")
                .sample(rng),
            Spectrum::Lorentzian { gamma, .. } => Cauchy::new(0.0, gamma / 2.0)
                .expect("gamma validated positive")
                .sample(rng),
        }
    }
}

/// How initial phases are assigned to emitted quanta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseModel {
    /// One phase shared by every quantum inside a coherence interval of length `coherence_time`.
    CoherentPhase { coherence_time: f64 },
    /// Independent uniform phase per emitted quantum.
    RandomPerPhoton,
}

impl PhaseModel {
    pub fn is_coherent(&self) -> bool {
        matches!(self, PhaseModel::CoherentPhase { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Statistics {
    Boson,
    Fermion,
}

impl Statistics {
    pub fn exchange_sign(self) -> f64 {
        match self {
            Statistics::Boson => 1.0,
            Statistics::Fermion => -1.0,
        }
    }
}

/// Sampled intensity-correlation function γ(τ) of a modulated source,
/// linearly interpolated in |τ|.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaTable {
    points: Vec<(f64, f64)>,
}

impl GammaTable {
    /// `points` are (τ ≥ 0, γ) pairs with strictly increasing τ.
    /// Requires γ(0) ≥ 1 and the last sample within 1e-3 of 1.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Invariant("gamma table needs at least two samples".into()));
        }
        if points[0].0 != 0.0 {
            return Err(Error::Invariant("gamma table must start at tau = 0".into()));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::Invariant("gamma table tau must be strictly increasing".into()));
            }
        }
        if points.iter().any(|&(t, g)| !t.is_finite() || !g.is_finite() || g < 0.0) {
            return Err(Error::Invariant("gamma table values must be finite and >= 0".into()));
        }
        if points[0].1 < 1.0 {
            return Err(Error::Invariant(format!("gamma(0) = {} must be >= 1", points[0].1)));
        }
        let tail = points[points.len() - 1].1;
        if (tail - 1.0).abs() > 1e-3 {
            return Err(Error::Invariant(format!("gamma(tau -> inf) = {tail} must tend to 1")));
        }
        Ok(Self { points })
    }

    /// Exponential excess γ(τ) = 1 + a·e^{-|τ|/τ0}, sampled out to 20 τ0.
    pub fn exponential(excess: f64, tau0: f64, samples: usize) -> Result<Self> {
        require_positive("tau0", tau0)?;
        let n = samples.max(2);
        let span = 20.0 * tau0;
        let pts = (0..n)
            .map(|i| {
                let t = span * i as f64 / (n - 1) as f64;
                (t, 1.0 + excess * (-t / tau0).exp())
            })
            .collect();
        Self::new(pts)
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn eval(&self, tau: f64) -> f64 {
        let t = tau.abs();
        let pts = &self.points;
        let last = pts[pts.len() - 1];
        if t >= last.0 {
            return last.1;
        }
        let i = pts.partition_point(|p| p.0 <= t);
        let (t0, g0) = pts[i - 1];
        let (t1, g1) = pts[i];
        g0 + (g1 - g0) * (t - t0) / (t1 - t0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceKind {
    Thermal,
    Laser,
    SinglePhoton,
    /// Chain of `stages` rotating-groundglass scatterers.
    SuperbunchingCascade { stages: u32 },
    /// Pseudothermal light whose pump intensity is modulated with correlation γ.
    SuperbunchingModulated { gamma: GammaTable },
    EntangledPairEmitter,
    ColdAtomCloud,
    Bec,
}

impl SourceKind {
    /// Phase model implied by the kind, given a coherence time for the coherent kinds.
    pub fn implied_phase_model(&self, coherence_time: f64) -> PhaseModel {
        match self {
            SourceKind::Laser | SourceKind::Bec => PhaseModel::CoherentPhase { coherence_time },
            _ => PhaseModel::RandomPerPhoton,
        }
    }

    pub fn is_massive(&self) -> bool {
        matches!(self, SourceKind::ColdAtomCloud | SourceKind::Bec)
    }

    pub fn name(&self) -> &'static str {
        match self {
            SourceKind::Thermal => "thermal",
            SourceKind::Laser => "laser",
            SourceKind::SinglePhoton => "single-photon",
            SourceKind::SuperbunchingCascade { .. } => "cascade",
            SourceKind::SuperbunchingModulated { .. } => "modulated",
            SourceKind::EntangledPairEmitter => "entangled-pair",
            SourceKind::ColdAtomCloud => "cold-atoms",
            SourceKind::Bec => "bec",
        }
    }
}

/// A light or matter source. Construct through [`SourceBuilder`].
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec {
    kind: SourceKind,
    position: f64,
    extent: f64,
    intensity_weight: f64,
    spectrum: Spectrum,
    phase_model: PhaseModel,
    statistics: Statistics,
    particle_mass: f64,
    particle_speed: f64,
    phase_group: Option<usize>,
}

impl SourceSpec {
    pub fn builder(kind: SourceKind, spectrum: Spectrum) -> SourceBuilder {
        SourceBuilder {
            kind,
            spectrum,
            position: 0.0,
            extent: 0.0,
            intensity_weight: 1.0,
            phase_model: None,
            statistics: Statistics::Boson,
            particle_mass: 0.0,
            particle_speed: None,
            phase_group: None,
        }
    }

    pub fn kind(&self) -> &SourceKind {
        &self.kind
    }
    pub fn position(&self) -> f64 {
        self.position
    }
    pub fn extent(&self) -> f64 {
        self.extent
    }
    pub fn intensity_weight(&self) -> f64 {
        self.intensity_weight
    }
    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }
    pub fn phase_model(&self) -> PhaseModel {
        self.phase_model
    }
    pub fn statistics(&self) -> Statistics {
        self.statistics
    }
    pub fn particle_mass(&self) -> f64 {
        self.particle_mass
    }
    pub fn particle_speed(&self) -> f64 {
        self.particle_speed
    }
    /// Coherent sources sharing a group id share one phase and frequency
    /// (virtual images of a single laser).
    pub fn phase_group(&self) -> Option<usize> {
        self.phase_group
    }
    pub fn is_massive(&self) -> bool {
        self.particle_mass > 0.0
    }

    /// Free-space wavelength: 2πc/ω0 for photons, h/(m v) for matter.
    pub fn wavelength(&self) -> f64 {
        if self.is_massive() {
            CODATA.h / (self.particle_mass * self.particle_speed)
        } else {
            2.0 * PI * CODATA.c / self.spectrum.center()
        }
    }

    /// Wavenumber 2π/λ.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength()
    }
}

#[derive(Debug, Clone)]
pub struct SourceBuilder {
    kind: SourceKind,
    spectrum: Spectrum,
    position: f64,
    extent: f64,
    intensity_weight: f64,
    phase_model: Option<PhaseModel>,
    statistics: Statistics,
    particle_mass: f64,
    particle_speed: Option<f64>,
    phase_group: Option<usize>,
}

impl SourceBuilder {
    pub fn position(mut self, x: f64) -> Self {
        self.position = x;
        self
    }
    pub fn extent(mut self, d: f64) -> Self {
        self.extent = d;
        self
    }
    pub fn intensity(mut self, w: f64) -> Self {
        self.intensity_weight = w;
        self
    }
    /// Explicit phase model; rejected by `build` if it contradicts the kind.
    pub fn phase_model(mut self, model: PhaseModel) -> Self {
        self.phase_model = Some(model);
        self
    }
    pub fn statistics(mut self, s: Statistics) -> Self {
        self.statistics = s;
        self
    }
    pub fn particle(mut self, mass: f64, speed: f64) -> Self {
        self.particle_mass = mass;
        self.particle_speed = Some(speed);
        self
    }
    pub fn phase_group(mut self, group: usize) -> Self {
        self.phase_group = Some(group);
        self
    }

    pub fn build(self) -> Result<SourceSpec> {
        let spectrum = self.spectrum.validated()?;
        if !self.position.is_finite() {
            return Err(Error::Domain {
                name: "position",
                value: self.position,
                constraint: "must be finite",
            });
        }
        if !(self.extent.is_finite() && self.extent >= 0.0) {
            return Err(Error::Domain {
                name: "extent",
                value: self.extent,
                constraint: "must be finite and >= 0",
            });
        }
        if !(self.intensity_weight.is_finite() && self.intensity_weight >= 0.0) {
            return Err(Error::Domain {
                name: "intensity_weight",
                value: self.intensity_weight,
                constraint: "must be finite and >= 0",
            });
        }
        if let SourceKind::SuperbunchingCascade { stages } = self.kind {
            if stages == 0 {
                return Err(Error::Invariant("cascade needs at least one stage".into()));
            }
        }

        let implied = self.kind.implied_phase_model(spectrum.coherence_time());
        let phase_model = match self.phase_model {
            None => implied,
            Some(given) => {
                if given.is_coherent() != implied.is_coherent() {
                    return Err(Error::Invariant(format!(
                        "{} sources require the {} phase model",
                        self.kind.name(),
                        if implied.is_coherent() { "coherent" } else { "random-per-photon" }
                    )));
                }
                if let PhaseModel::CoherentPhase { coherence_time } = given {
                    require_positive("coherence_time", coherence_time)?;
                }
                given
            }
        };

        if self.statistics == Statistics::Fermion
            && matches!(self.kind, SourceKind::Laser | SourceKind::Bec)
        {
            return Err(Error::Invariant(format!(
                "fermion statistics is incompatible with a phase-coherent {} source",
                self.kind.name()
            )));
        }
        if self.phase_group.is_some() && !phase_model.is_coherent() {
            return Err(Error::Invariant("only coherent sources may share a phase group".into()));
        }

        let (mass, speed) = if self.kind.is_massive() {
            let m = require_positive("particle_mass", self.particle_mass)?;
            let v = require_positive("particle_speed", self.particle_speed.unwrap_or(0.0))?;
            (m, v)
        } else {
            if self.particle_mass != 0.0 {
                return Err(Error::Invariant(format!(
                    "{} sources emit photons and must have zero mass",
                    self.kind.name()
                )));
            }
            if let Some(v) = self.particle_speed {
                if (v - CODATA.c).abs() > 1e-6 * CODATA.c {
                    return Err(Error::Invariant("photon speed must equal c".into()));
                }
            }
            (0.0, CODATA.c)
        };

        Ok(SourceSpec {
            kind: self.kind,
            position: self.position,
            extent: self.extent,
            intensity_weight: self.intensity_weight,
            spectrum,
            phase_model,
            statistics: self.statistics,
            particle_mass: mass,
            particle_speed: speed,
            phase_group: self.phase_group,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorSpec {
    pub id: usize,
    position: f64,
    position_uncertainty: f64,
}

impl DetectorSpec {
    pub fn new(id: usize, position: f64) -> Result<Self> {
        Self::with_uncertainty(id, position, DEFAULT_POSITION_UNCERTAINTY)
    }

    pub fn with_uncertainty(id: usize, position: f64, dx: f64) -> Result<Self> {
        if !position.is_finite() {
            return Err(Error::Domain {
                name: "detector position",
                value: position,
                constraint: "must be finite",
            });
        }
        require_positive("position_uncertainty", dx)?;
        Ok(Self {
            id,
            position,
            position_uncertainty: dx,
        })
    }

    pub fn position(&self) -> f64 {
        self.position
    }
    pub fn position_uncertainty(&self) -> f64 {
        self.position_uncertainty
    }
}

/// Source-plane to detection-plane layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    distance: f64,
    wavelength: f64,
    pub paraxial: bool,
}

impl Geometry {
    pub fn new(distance: f64, wavelength: f64) -> Result<Self> {
        Ok(Self {
            distance: require_positive("L", distance)?,
            wavelength: require_positive("wavelength", wavelength)?,
            paraxial: true,
        })
    }

    /// Geometry whose wavelength is taken from `source`.
    pub fn for_source(distance: f64, source: &SourceSpec) -> Result<Self> {
        Self::new(distance, source.wavelength())
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }
    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// Transverse spatial frequency 2π/(λL) used by all far-field patterns.
    pub fn fringe_k(&self) -> f64 {
        2.0 * PI / (self.wavelength * self.distance)
    }

    /// Rejects paraxial layouts whose transverse extent reaches L/10.
    pub fn check_paraxial(&self, sources: &[SourceSpec], detectors: &[DetectorSpec]) -> Result<()> {
        if !self.paraxial {
            return Ok(());
        }
        let extent = sources
            .iter()
            .map(|s| s.position().abs() + s.extent() / 2.0)
            .chain(detectors.iter().map(|d| d.position().abs()))
            .fold(0.0_f64, f64::max);
        if extent >= self.distance / 10.0 {
            return Err(Error::Domain {
                name: "transverse extent",
                value: extent,
                constraint: "must be < L/10 in paraxial mode",
            });
        }
        Ok(())
    }
}

/// Result of a blackbody degeneracy evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Degeneracy {
    pub value: f64,
    /// Set when hν/k_BT > 700 and the value was flushed to zero.
    pub underflow: bool,
}

/// Mean photon number per mode of blackbody radiation, 1/(e^{hν/k_BT} − 1).
pub fn degeneracy_factor_blackbody(nu: f64, temperature: f64) -> Result<Degeneracy> {
    require_positive("nu", nu)?;
    require_positive("T", temperature)?;
    let x = CODATA.h * nu / (CODATA.k_b * temperature);
    if x > 700.0 {
        return Ok(Degeneracy {
            value: 0.0,
            underflow: true,
        });
    }
    Ok(Degeneracy {
        value: 1.0 / x.exp_m1(),
        underflow: false,
    })
}

/// Photons per coherence time of a single-mode laser, P/(hν·Δν).
pub fn degeneracy_factor_laser(power: f64, nu: f64, linewidth: f64) -> Result<f64> {
    require_positive("power", power)?;
    require_positive("nu", nu)?;
    require_positive("linewidth", linewidth)?;
    Ok(power / (CODATA.h * nu * linewidth))
}

/// Coherence time 1/Δν.
pub fn coherence_time(bandwidth_hz: f64) -> Result<f64> {
    Ok(1.0 / require_positive("bandwidth", bandwidth_hz)?)
}

/// Longitudinal coherence length c/Δν.
pub fn coherence_length(bandwidth_hz: f64) -> Result<f64> {
    Ok(CODATA.c * coherence_time(bandwidth_hz)?)
}
