//! Single-particle propagators and spectral envelopes.
//!
//! Global prefactors are fixed to 1: every physical output downstream is a
//! normalized probability, so constants cancel.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::coherence::Spectrum;
use crate::constants::CODATA;
use crate::error::{require_positive, Error, Result};
use crate::quadrature::{adaptive_simpson, DEFAULT_MAX_DEPTH, DEFAULT_REL_TOL};

pub type ComplexAmplitude = Complex64;

/// sin(x)/x with sinc(0) = 1.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpacetimePoint {
    /// Transverse coordinate, m.
    pub x: f64,
    /// Longitudinal coordinate, m.
    pub z: f64,
    /// Time, s.
    pub t: f64,
}

impl SpacetimePoint {
    pub fn new(x: f64, z: f64, t: f64) -> Self {
        Self { x, z, t }
    }

    fn distance_to(&self, other: &SpacetimePoint) -> f64 {
        (self.x - other.x).hypot(self.z - other.z)
    }
}

/// Point-source photon propagator (1/|r−r0|)·e^{−i[ω(t−t0) − k|r−r0|]} with k = ω/c.
pub fn point_propagator(emit: SpacetimePoint, detect: SpacetimePoint, omega: f64) -> Result<ComplexAmplitude> {
    wave_propagator(emit, detect, omega, omega / CODATA.c)
}

/// Same as [`point_propagator`] with an explicit wavenumber, so matter waves
/// can use their own dispersion relation.
pub fn wave_propagator(emit: SpacetimePoint, detect: SpacetimePoint, omega: f64, k: f64) -> Result<ComplexAmplitude> {
    if detect.t < emit.t {
        return Err(Error::Causality {
            emit: emit.t,
            detect: detect.t,
        });
    }
    let r = emit.distance_to(&detect);
    if r == 0.0 {
        return Err(Error::Singularity);
    }
    let phase = -omega * (detect.t - emit.t) + k * r;
    Ok(Complex64::from_polar(1.0 / r, phase))
}

/// Transverse weight s(x_s) across an extended source.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum SourceProfile {
    #[default]
    Uniform,
    /// (x, s) samples relative to the source centre, linearly interpolated, zero outside.
    Table(Vec<(f64, f64)>),
}

impl SourceProfile {
    pub fn weight(&self, x: f64) -> f64 {
        match self {
            SourceProfile::Uniform => 1.0,
            SourceProfile::Table(pts) => {
                if pts.is_empty() || x < pts[0].0 || x > pts[pts.len() - 1].0 {
                    return 0.0;
                }
                let i = pts.partition_point(|p| p.0 <= x);
                if i == 0 {
                    return pts[0].1;
                }
                if i == pts.len() {
                    return pts[i - 1].1;
                }
                let (x0, s0) = pts[i - 1];
                let (x1, s1) = pts[i];
                s0 + (s1 - s0) * (x - x0) / (x1 - x0)
            }
        }
    }
}

fn path_length(x_det: f64, x_src: f64, l: f64, paraxial: bool) -> f64 {
    let dx = x_det - x_src;
    if paraxial {
        l + dx * dx / (2.0 * l)
    } else {
        l.hypot(dx)
    }
}

fn panels_for(k: f64, d: f64, x_span: f64, l: f64) -> usize {
    // enough panels to put several nodes per fringe of the integrand
    let cycles = k * d * (x_span + d) / (2.0 * PI * l);
    (8.0 + 4.0 * cycles).min(1e6) as usize
}

/// Propagator from a source of width `d` (centred on x = 0, at z = 0) to `detect` (at z = L).
///
/// Evaluates the source-averaged Green function
/// ∫ s(x_s) e^{i k r}/r dx_s / ∫ s(x_s) dx_s times e^{−iω t}; the constant L/(iλ) and
/// the obliquity factor are dropped so that d → 0 reproduces [`point_propagator`].
pub fn extended_source_propagator(
    d: f64,
    profile: &SourceProfile,
    detect: SpacetimePoint,
    omega: f64,
    l: f64,
    paraxial: bool,
) -> Result<ComplexAmplitude> {
    require_positive("source extent", d)?;
    require_positive("L", l)?;
    require_positive("omega", omega)?;
    if detect.t < 0.0 {
        return Err(Error::Causality { emit: 0.0, detect: detect.t });
    }
    let k = omega / CODATA.c;
    let panels = panels_for(k, d, detect.x.abs(), l);
    let norm = adaptive_simpson(
        |xs| Complex64::new(profile.weight(xs), 0.0),
        -d / 2.0,
        d / 2.0,
        16,
        DEFAULT_REL_TOL,
        DEFAULT_MAX_DEPTH,
    )?;
    if norm.re <= 0.0 {
        return Err(Error::Numeric("source profile integrates to zero".into()));
    }
    let integral = adaptive_simpson(
        |xs| {
            let r = path_length(detect.x, xs, l, paraxial);
            let r_mag = if paraxial { l } else { r };
            Complex64::from_polar(profile.weight(xs) / r_mag, k * r)
        },
        -d / 2.0,
        d / 2.0,
        panels,
        DEFAULT_REL_TOL,
        DEFAULT_MAX_DEPTH,
    )?;
    Ok(integral / norm.re * Complex64::from_polar(1.0, -omega * detect.t))
}

/// Normalized mutual coherence ⟨e^{ik(r_1 − r_2)}⟩ over the source profile.
/// Its squared magnitude is the cross term of the two-detector intensity correlation.
pub fn extended_source_coherence(
    d: f64,
    profile: &SourceProfile,
    x1: f64,
    x2: f64,
    omega: f64,
    l: f64,
    paraxial: bool,
) -> Result<ComplexAmplitude> {
    require_positive("source extent", d)?;
    require_positive("L", l)?;
    let k = omega / CODATA.c;
    let panels = panels_for(k, d, (x1 - x2).abs() + x1.abs() + x2.abs(), l);
    let norm = adaptive_simpson(
        |xs| Complex64::new(profile.weight(xs), 0.0),
        -d / 2.0,
        d / 2.0,
        16,
        DEFAULT_REL_TOL,
        DEFAULT_MAX_DEPTH,
    )?;
    let integral = adaptive_simpson(
        |xs| {
            let dr = path_length(x1, xs, l, paraxial) - path_length(x2, xs, l, paraxial);
            Complex64::from_polar(profile.weight(xs), k * dr)
        },
        -d / 2.0,
        d / 2.0,
        panels,
        DEFAULT_REL_TOL,
        DEFAULT_MAX_DEPTH,
    )?;
    Ok(integral / norm.re)
}

/// Normalized Fourier transform of the spectrum, ∫ f(ω) e^{−iωτ} dω.
pub fn spectral_envelope(spectrum: &Spectrum, tau: f64) -> ComplexAmplitude {
    let carrier = Complex64::from_polar(1.0, -spectrum.center() * tau);
    let magnitude = match *spectrum {
        Spectrum::Monochromatic { .. } => 1.0,
        Spectrum::Rectangular { width, .. } => sinc(width * tau / 2.0),
        Spectrum::Gaussian { sigma, .. } => (-sigma * sigma * tau * tau / 2.0).exp(),
        Spectrum::Lorentzian { gamma, .. } => (-gamma * tau.abs() / 2.0).exp(),
    };
    carrier * magnitude
}

/// Free-particle kernel for elapsed time `t` (may be negative; see tests).
fn free_kernel(m: f64, dx: f64, t: f64) -> Complex64 {
    let hbar = CODATA.hbar;
    let magnitude = (m / (2.0 * PI * hbar * t.abs())).sqrt();
    // 1/√i = e^{−iπ/4}; for t < 0 the factor flips to e^{+iπ/4}
    let branch = if t > 0.0 { -PI / 4.0 } else { PI / 4.0 };
    Complex64::from_polar(magnitude, branch + m * dx * dx / (2.0 * hbar * t))
}

/// Exact free-particle propagator √(m/(2πiħT))·exp(i m Δx²/(2ħT)).
pub fn free_particle_propagator(m: f64, a: SpacetimePoint, b: SpacetimePoint) -> Result<ComplexAmplitude> {
    require_positive("mass", m)?;
    if b.t <= a.t {
        return Err(Error::Causality { emit: a.t, detect: b.t });
    }
    Ok(free_kernel(m, b.x - a.x, b.t - a.t))
}

/// λ_D = h/(m v).
pub fn de_broglie_wavelength(m: f64, v: f64) -> Result<f64> {
    require_positive("mass", m)?;
    require_positive("speed", v)?;
    Ok(CODATA.h / (m * v))
}

#[cfg(test)]
mod tests {
    use super::*;

    const OMEGA: f64 = 3.54e15;

    fn lambda() -> f64 {
        2.0 * PI * CODATA.c / OMEGA
    }

    #[test]
    fn half_wavelength_gives_opposite_phase() {
        let e = SpacetimePoint::new(0.0, 0.0, 0.0);
        let a = point_propagator(e, SpacetimePoint::new(0.0, 1.0, 1e-8), OMEGA).unwrap();
        let b = point_propagator(e, SpacetimePoint::new(0.0, 1.0 + lambda() / 2.0, 1e-8), OMEGA).unwrap();
        let rel = (b / a).arg();
        assert!((rel.abs() - PI).abs() < 1e-6, "{rel}");
    }

    #[test]
    fn inverse_distance_law() {
        let e = SpacetimePoint::default();
        let a = point_propagator(e, SpacetimePoint::new(0.0, 1.0, 1.0), OMEGA).unwrap();
        let b = point_propagator(e, SpacetimePoint::new(0.0, 2.0, 1.0), OMEGA).unwrap();
        assert!((a.norm() / b.norm() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn propagator_errors() {
        let e = SpacetimePoint::new(0.0, 0.0, 1.0);
        assert_eq!(point_propagator(e, e, OMEGA), Err(Error::Singularity));
        let early = SpacetimePoint::new(0.0, 1.0, 0.0);
        assert!(matches!(point_propagator(e, early, OMEGA), Err(Error::Causality { .. })));
    }

    #[test]
    fn mach_zehnder_composition() {
        // two arms of equal length, arm 2 delayed by tau at detection
        for &tau in &[0.0, 0.3e-15, PI / OMEGA, 2.2e-15] {
            let e = SpacetimePoint::default();
            let k1 = point_propagator(e, SpacetimePoint::new(0.0, 1.0, 0.0), OMEGA).unwrap();
            let k2 = point_propagator(e, SpacetimePoint::new(0.0, 1.0, tau), OMEGA).unwrap();
            let p = (k1 + k2).norm_sqr() / (k1.norm_sqr() + k2.norm_sqr());
            assert!((p - (1.0 + (OMEGA * tau).cos())).abs() < 1e-9);
        }
    }

    #[test]
    fn phase_is_additive_over_segments() {
        let a = SpacetimePoint::new(0.0, 0.0, 0.0);
        let m = SpacetimePoint::new(0.0, 0.7, 2e-9);
        let b = SpacetimePoint::new(0.0, 1.9, 5e-9);
        let whole = point_propagator(a, b, OMEGA).unwrap().arg();
        let parts = point_propagator(a, m, OMEGA).unwrap().arg() + point_propagator(m, b, OMEGA).unwrap().arg();
        let diff = (whole - parts).rem_euclid(2.0 * PI);
        assert!(diff < 1e-6 || 2.0 * PI - diff < 1e-6);
    }

    #[test]
    fn extended_source_point_limit() {
        let l = 1.0;
        let det = SpacetimePoint::new(2e-4, l, 1e-8);
        let ext = extended_source_propagator(1e-12, &SourceProfile::Uniform, det, OMEGA, l, false).unwrap();
        let point = point_propagator(SpacetimePoint::default(), det, OMEGA).unwrap();
        assert!((ext - point).norm() / point.norm() < 1e-6);
    }

    #[test]
    fn extended_source_mirror_symmetry() {
        let l = 1.0;
        let a = extended_source_propagator(1e-3, &SourceProfile::Uniform, SpacetimePoint::new(3e-4, l, 0.0), OMEGA, l, true).unwrap();
        let b = extended_source_propagator(1e-3, &SourceProfile::Uniform, SpacetimePoint::new(-3e-4, l, 0.0), OMEGA, l, true).unwrap();
        assert!((a.norm() - b.norm()).abs() < 1e-9 * a.norm());
    }

    #[test]
    fn extended_source_correlation_is_sinc_squared() {
        let (d, l) = (1e-3, 1.0);
        for &sep in &[0.0, 1e-4, 2.5e-4, 4e-4, 7e-4] {
            let x1 = 1e-4;
            let g = extended_source_coherence(d, &SourceProfile::Uniform, x1, x1 - sep, OMEGA, l, true).unwrap();
            let expect = sinc(PI * d * sep / (lambda() * l)).powi(2);
            assert!((g.norm_sqr() - expect).abs() < 1e-7, "{sep}: {} vs {expect}", g.norm_sqr());
        }
    }

    #[test]
    fn envelopes_are_normalized_and_bounded() {
        let specs = [
            Spectrum::monochromatic(OMEGA).unwrap(),
            Spectrum::rectangular(OMEGA, 1e13).unwrap(),
            Spectrum::gaussian(OMEGA, 1e13).unwrap(),
            Spectrum::lorentzian(OMEGA, 1e13).unwrap(),
        ];
        for s in &specs {
            assert!((spectral_envelope(s, 0.0).norm() - 1.0).abs() < 1e-15);
            for i in 1..50 {
                let tau = i as f64 * 3.1e-14;
                let e = spectral_envelope(s, tau);
                assert!(e.norm() <= 1.0 + 1e-15);
                if !matches!(s, Spectrum::Monochromatic { .. }) {
                    assert!(e.norm() < 1.0);
                }
                assert!((spectral_envelope(s, -tau) - e.conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn gaussian_envelope_matches_fourier_quadrature() {
        let sigma = 2.0;
        let s = Spectrum::gaussian(100.0, sigma).unwrap();
        for &tau in &[0.0, 0.2, 0.5, 1.1] {
            let f = |w: f64| (-(w - 100.0).powi(2) / (2.0 * sigma * sigma)).exp();
            let norm = adaptive_simpson(|w| Complex64::new(f(w), 0.0), 100.0 - 12.0 * sigma, 100.0 + 12.0 * sigma, 32, 1e-12, 30).unwrap();
            let ft = adaptive_simpson(|w| Complex64::from_polar(f(w), -w * tau), 100.0 - 12.0 * sigma, 100.0 + 12.0 * sigma, 64, 1e-12, 30).unwrap();
            let num = ft / norm.re;
            assert!((num - spectral_envelope(&s, tau)).norm() < 1e-6);
        }
    }

    #[test]
    fn rectangular_envelope_squared_is_sinc_squared() {
        let dw = 1e12;
        let s = Spectrum::rectangular(OMEGA, dw).unwrap();
        let tau = 3.3e-12;
        assert!((spectral_envelope(&s, tau).norm_sqr() - sinc(dw * tau / 2.0).powi(2)).abs() < 1e-14);
    }

    #[test]
    fn free_particle_magnitude_is_position_independent() {
        let m = 1.44e-25;
        let a = SpacetimePoint::new(0.0, 0.0, 0.0);
        let t = 1e-3;
        let expect = (m / (2.0 * PI * CODATA.hbar * t)).sqrt();
        for &x in &[0.0, 1e-6, 3e-5] {
            let k = free_particle_propagator(m, a, SpacetimePoint::new(x, 0.0, t)).unwrap();
            assert!((k.norm() - expect).abs() < 1e-9 * expect);
        }
        assert!(free_particle_propagator(m, a, a).is_err());
    }

    #[test]
    fn free_particle_time_reversal() {
        let m = 1e-26;
        let k = free_kernel(m, 2e-6, 1e-3);
        let back = free_kernel(m, -2e-6, -1e-3);
        assert!((k - back.conj()).norm() < 1e-12 * k.norm());
    }

    #[test]
    fn free_particle_two_pinholes_fringe_period() {
        let m = 1.44e-25;
        let v = 10.0;
        let l = 0.1;
        let d = 50e-6;
        let t = l / v;
        let lambda_d = de_broglie_wavelength(m, v).unwrap();
        let period = l * lambda_d / d;
        let amp = |x: f64| {
            let b = SpacetimePoint::new(x, 0.0, t);
            free_particle_propagator(m, SpacetimePoint::new(-d / 2.0, 0.0, 0.0), b).unwrap()
                + free_particle_propagator(m, SpacetimePoint::new(d / 2.0, 0.0, 0.0), b).unwrap()
        };
        let p0 = amp(0.0).norm_sqr();
        let p_half = amp(period / 2.0).norm_sqr();
        let p_full = amp(period).norm_sqr();
        assert!(p_half / p0 < 1e-9);
        assert!((p_full / p0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn free_particle_convolution_identity() {
        // units with m/ħ = 1; a Gaussian convergence factor tames the tails
        let m = CODATA.hbar;
        let (xa, xb) = (0.3, -0.4);
        let (t1, t2) = (1.0, 1.0);
        let eps = 0.004;
        let half = 70.0;
        let n = 2_000_000;
        let h = 2.0 * half / n as f64;
        let mut sum = Complex64::new(0.0, 0.0);
        for i in 0..=n {
            let x = -half + h * i as f64;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            let k1 = free_particle_propagator(m, SpacetimePoint::new(xa, 0.0, 0.0), SpacetimePoint::new(x, 0.0, t1)).unwrap();
            let k2 = free_particle_propagator(m, SpacetimePoint::new(x, 0.0, t1), SpacetimePoint::new(xb, 0.0, t1 + t2)).unwrap();
            sum += k1 * k2 * (w * (-eps * x * x).exp());
        }
        sum *= h;
        let direct = free_particle_propagator(m, SpacetimePoint::new(xa, 0.0, 0.0), SpacetimePoint::new(xb, 0.0, t1 + t2)).unwrap();
        assert!((sum - direct).norm() / direct.norm() < 0.01, "{sum} vs {direct}");
    }

    #[test]
    fn de_broglie() {
        let l1 = de_broglie_wavelength(1.44e-25, 10.0).unwrap();
        assert!((l1 - CODATA.h / 1.44e-24).abs() < 1e-22);
        assert!((l1 - 4.6e-10).abs() / 4.6e-10 < 0.01);
        let l2 = de_broglie_wavelength(1.44e-25, 20.0).unwrap();
        assert!((l1 / l2 - 2.0).abs() < 1e-12);
        // N particles moving together behave as one of mass N·m
        let ln = de_broglie_wavelength(3.0 * 1.44e-25, 10.0).unwrap();
        assert!((l1 / ln - 3.0).abs() < 1e-12);
        assert!(de_broglie_wavelength(0.0, 1.0).is_err());
    }
}
