//! Adaptive Simpson quadrature for complex-valued integrands.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const DEFAULT_REL_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_DEPTH: u32 = 30;

/// Integrates `f` over `[a, b]`.
///
/// The interval is first cut into `panels` equal pieces so oscillatory
/// integrands are not mistaken for converged on the first bisection.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, panels: usize, rel_tol: f64, max_depth: u32) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Usage("integration bounds must be finite".into()));
    }
    if a == b {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;

    // coarse pass sets the absolute scale for the tolerance
    let mut coarse = Vec::with_capacity(panels);
    let mut scale = 0.0;
    for i in 0..panels {
        let lo = a + h * i as f64;
        let hi = if i + 1 == panels { b } else { lo + h };
        let mid = 0.5 * (lo + hi);
        let (fa, fm, fb) = (f(lo), f(mid), f(hi));
        let s = simpson(lo, hi, fa, fm, fb);
        scale += (hi - lo).abs() * (fa.norm() + 4.0 * fm.norm() + fb.norm()) / 6.0;
        coarse.push((lo, hi, fa, fm, fb, s));
    }
    let eps = rel_tol * scale.max(f64::MIN_POSITIVE) / panels as f64;

    let mut total = Complex64::new(0.0, 0.0);
    for (lo, hi, fa, fm, fb, s) in coarse {
        total += refine(&f, lo, hi, fa, fm, fb, s, eps, max_depth)?;
    }
    if !(total.re.is_finite() && total.im.is_finite()) {
        return Err(Error::Numeric("integrand produced non-finite values".into()));
    }
    Ok(total)
}

fn simpson(a: f64, b: f64, fa: Complex64, fm: Complex64, fb: Complex64) -> Complex64 {
    (fa + fm * 4.0 + fb) * ((b - a) / 6.0)
}

#[allow(clippy::too_many_arguments)]
fn refine<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: Complex64,
    fm: Complex64,
    fb: Complex64,
    whole: Complex64,
    eps: f64,
    depth: u32,
) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.norm() <= 15.0 * eps {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Numeric(format!(
            "quadrature did not converge on [{a:e}, {b:e}] (change {:e})",
            delta.norm()
        )));
    }
    Ok(refine(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)?
        + refine(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = adaptive_simpson(|x| Complex64::new(x * x * x, 2.0 * x), 0.0, 2.0, 1, 1e-12, 10).unwrap();
        assert!((v.re - 4.0).abs() < 1e-12);
        assert!((v.im - 4.0).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_fourier_integral() {
        // ∫_{-1}^{1} e^{i 40 x} dx = 2 sin(40)/40
        let v = adaptive_simpson(|x| Complex64::from_polar(1.0, 40.0 * x), -1.0, 1.0, 16, 1e-10, 30).unwrap();
        let exact = 2.0 * 40f64.sin() / 40.0;
        assert!((v.re - exact).abs() < 1e-9);
        assert!(v.im.abs() < 1e-9);
    }

    #[test]
    fn non_convergence_is_reported() {
        let r = adaptive_simpson(|x| Complex64::new((1.0 / x).sin() / x, 0.0), 1e-12, 1.0, 1, 1e-12, 3);
        assert!(matches!(r, Err(Error::Numeric(_))));
    }
}
