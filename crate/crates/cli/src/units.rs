//! Quantities with unit suffixes, e.g. `"1.5 GHz"` or `"500 nm"`.

use std::f64::consts::TAU;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Time,
    Length,
    /// rad/s; Hz-family suffixes are converted with ω = 2πf.
    AngularFrequency,
    /// Events per second; Hz-family suffixes are taken as-is.
    Rate,
    /// Optical frequency ν in Hz.
    Frequency,
    Temperature,
    Power,
    Mass,
    Speed,
}

impl Quantity {
    /// Unit written when serializing.
    pub fn canonical(self) -> &'static str {
        match self {
            Quantity::Time => "s",
            Quantity::Length => "m",
            Quantity::AngularFrequency => "rad/s",
            Quantity::Rate | Quantity::Frequency => "Hz",
            Quantity::Temperature => "K",
            Quantity::Power => "W",
            Quantity::Mass => "kg",
            Quantity::Speed => "m/s",
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Quantity::Time => "time",
            Quantity::Length => "length",
            Quantity::AngularFrequency => "angular frequency",
            Quantity::Rate => "rate",
            Quantity::Frequency => "frequency",
            Quantity::Temperature => "temperature",
            Quantity::Power => "power",
            Quantity::Mass => "mass",
            Quantity::Speed => "speed",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy)]
enum Dim {
    Time,
    Length,
    Hertz,
    RadPerSec,
    Kelvin,
    Watt,
    Kilogram,
    MetrePerSec,
}

/// Unit, dimension, decimal exponent of the SI scale.
const UNITS: &[(&str, Dim, i32)] = &[
    ("s", Dim::Time, 0),
    ("ms", Dim::Time, -3),
    ("us", Dim::Time, -6),
    ("ns", Dim::Time, -9),
    ("ps", Dim::Time, -12),
    ("fs", Dim::Time, -15),
    ("m", Dim::Length, 0),
    ("mm", Dim::Length, -3),
    ("um", Dim::Length, -6),
    ("nm", Dim::Length, -9),
    ("Hz", Dim::Hertz, 0),
    ("kHz", Dim::Hertz, 3),
    ("MHz", Dim::Hertz, 6),
    ("GHz", Dim::Hertz, 9),
    ("THz", Dim::Hertz, 12),
    ("rad/s", Dim::RadPerSec, 0),
    ("K", Dim::Kelvin, 0),
    ("W", Dim::Watt, 0),
    ("mW", Dim::Watt, -3),
    ("kg", Dim::Kilogram, 0),
    ("m/s", Dim::MetrePerSec, 0),
];

/// Parses `"<number> <unit>"` into SI units of `q`.
pub fn parse_quantity(text: &str, q: Quantity) -> Result<f64, String> {
    let text = text.trim();
    let split = text.find(|c: char| c.is_whitespace()).ok_or_else(|| format!("missing unit in \"{text}\" (expected a {q})"))?;
    let (num, unit) = (&text[..split], text[split..].trim());
    let value: f64 = num.parse().map_err(|_| format!("\"{num}\" is not a number"))?;
    let &(_, dim, exp) = UNITS
        .iter()
        .find(|(u, _, _)| *u == unit)
        .ok_or_else(|| format!("unknown unit \"{unit}\""))?;
    // divide for negative exponents so that e.g. 500 nm is exactly 500e-9
    let v = if exp < 0 { value / 10f64.powi(-exp) } else { value * 10f64.powi(exp) };
    let out = match (q, dim) {
        (Quantity::Time, Dim::Time)
        | (Quantity::Length, Dim::Length)
        | (Quantity::AngularFrequency, Dim::RadPerSec)
        | (Quantity::Rate, Dim::Hertz)
        | (Quantity::Frequency, Dim::Hertz)
        | (Quantity::Temperature, Dim::Kelvin)
        | (Quantity::Power, Dim::Watt)
        | (Quantity::Mass, Dim::Kilogram)
        | (Quantity::Speed, Dim::MetrePerSec) => v,
        (Quantity::AngularFrequency, Dim::Hertz) => TAU * v,
        _ => return Err(format!("unit \"{unit}\" is not a {q}")),
    };
    if !out.is_finite() {
        return Err(format!("\"{text}\" is not finite"));
    }
    Ok(out)
}

/// Canonical text for `value` (SI) that parses back to the same bits.
pub fn format_quantity(value: f64, q: Quantity) -> String {
    format!("{value:e} {}", q.canonical())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_suffixes() {
        assert_eq!(parse_quantity("500 nm", Quantity::Length).unwrap(), 500e-9);
        assert_eq!(parse_quantity("2 ns", Quantity::Time).unwrap(), 2e-9);
        assert!((parse_quantity("1 GHz", Quantity::AngularFrequency).unwrap() - TAU * 1e9).abs() < 1e-3);
        assert_eq!(parse_quantity("1 GHz", Quantity::Rate).unwrap(), 1e9);
        assert_eq!(parse_quantity("3 rad/s", Quantity::AngularFrequency).unwrap(), 3.0);
        assert_eq!(parse_quantity("1 mW", Quantity::Power).unwrap(), 1e-3);
    }

    #[test]
    fn rejects_mismatch() {
        assert!(parse_quantity("5 ns", Quantity::Length).unwrap_err().contains("not a length"));
        assert!(parse_quantity("5", Quantity::Length).unwrap_err().contains("missing unit"));
        assert!(parse_quantity("x m", Quantity::Length).is_err());
        assert!(parse_quantity("1 parsec", Quantity::Length).is_err());
    }

    #[test]
    fn round_trips() {
        for v in [1.0 / 3.0, 6.02e23, -1.5e-12, 0.0] {
            let s = format_quantity(v, Quantity::Time);
            assert_eq!(parse_quantity(&s, Quantity::Time).unwrap().to_bits(), v.to_bits());
        }
    }
}
