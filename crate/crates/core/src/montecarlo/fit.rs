/// Least-squares fit of y = a + b·cos(kx) + c·sin(kx) with k fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisibilityFit {
    /// √(b² + c²)/a; NaN when the system is singular.
    pub visibility: f64,
    pub offset: f64,
    pub amplitude: f64,
    /// Fringe phase φ in a·(1 + V cos(kx + φ)).
    pub phase: f64,
    /// The normal equations were close to singular (e.g. grid shorter than a period).
    pub ill_conditioned: bool,
}

/// Normalized Gram determinant below which the fit is flagged.
const CONDITION_FLOOR: f64 = 1e-8;

pub fn fit_visibility(x: &[f64], y: &[f64], k: f64) -> VisibilityFit {
    let mut g = [[0.0f64; 3]; 3];
    let mut r = [0.0f64; 3];
    for (&xi, &yi) in x.iter().zip(y) {
        let f = [1.0, (k * xi).cos(), (k * xi).sin()];
        for i in 0..3 {
            r[i] += f[i] * yi;
            for j in 0..3 {
                g[i][j] += f[i] * f[j];
            }
        }
    }
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&g);
    let scale = g[0][0] * g[1][1] * g[2][2];
    let ill_conditioned = !(scale > 0.0) || (d / scale).abs() < CONDITION_FLOOR;
    if d == 0.0 || !d.is_finite() {
        return VisibilityFit {
            visibility: f64::NAN,
            offset: f64::NAN,
            amplitude: f64::NAN,
            phase: f64::NAN,
            ill_conditioned: true,
        };
    }
    // Cramer's rule
    let mut coef = [0.0; 3];
    for (c, slot) in coef.iter_mut().enumerate() {
        let mut m = g;
        for row in 0..3 {
            m[row][c] = r[row];
        }
        *slot = det(&m) / d;
    }
    let [a, b, c] = coef;
    let amplitude = b.hypot(c);
    VisibilityFit {
        visibility: amplitude / a,
        offset: a,
        amplitude,
        phase: (-c).atan2(b),
        ill_conditioned,
    }
}
