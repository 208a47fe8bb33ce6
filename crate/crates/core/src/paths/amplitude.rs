use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use super::{parity_sign, permutations, Leg, PhaseSymbol, Way, MAX_ORDER};
use crate::error::{Error, Result};

/// Values in radians for the phase symbols of a way.
pub type PhaseAssignment = HashMap<PhaseSymbol, f64>;

/// Coherent sum over the way's (already collapsed) paths:
/// Σ sign·e^{i(Σφ + r·θ_BS)}·Π factor(leg), divided by √(path count).
///
/// `factor` supplies the propagator product element for one leg. Reflections
/// use the 50:50 beam-splitter phase `bs_reflection_phase` (π/2 in practice).
pub fn way_amplitude<F>(way: &Way, phases: &PhaseAssignment, bs_reflection_phase: f64, factor: F) -> Result<Complex64>
where
    F: Fn(&Leg) -> Complex64,
{
    if way.paths.is_empty() {
        return Err(Error::Usage("way has no paths".into()));
    }
    let mut sum = Complex64::new(0.0, 0.0);
    for path in &way.paths {
        let mut phase = path.reflection_count as f64 * bs_reflection_phase;
        for sym in path.phase_symbols(way) {
            phase += phases
                .get(&sym)
                .ok_or_else(|| Error::Usage(format!("phase symbol {sym:?} is not assigned")))?;
        }
        let mut amp = Complex64::from_polar(path.sign, phase);
        for leg in &path.legs {
            amp *= factor(leg);
        }
        sum += amp;
    }
    Ok(sum / (way.paths.len() as f64).sqrt())
}

/// Default beam-splitter reflection phase.
pub const BS_REFLECTION_PHASE: f64 = FRAC_PI_2;

fn check_square(k: &[Vec<Complex64>]) -> Result<usize> {
    let n = k.len();
    if n == 0 || k.iter().any(|row| row.len() != n) {
        return Err(Error::Usage("propagator matrix must be square and non-empty".into()));
    }
    if n > MAX_ORDER {
        return Err(Error::UnsupportedOrder(n));
    }
    Ok(n)
}

fn signed_expansion(k: &[Vec<Complex64>], signed: bool) -> Result<Complex64> {
    let n = check_square(k)?;
    let mut total = Complex64::new(0.0, 0.0);
    for p in permutations(n) {
        let mut term = Complex64::new(if signed { parity_sign(&p) } else { 1.0 }, 0.0);
        for (i, &j) in p.iter().enumerate() {
            term *= k[i][j];
        }
        total += term;
    }
    Ok(total)
}

/// Permanent of `k` by explicit permutation expansion.
pub fn boson_path_oracle(k: &[Vec<Complex64>]) -> Result<Complex64> {
    signed_expansion(k, false)
}

/// Determinant of `k` by explicit permutation expansion.
pub fn fermion_path_oracle(k: &[Vec<Complex64>]) -> Result<Complex64> {
    signed_expansion(k, true)
}
