use super::events::EventStreams;
use crate::error::{Error, Result};

/// Windowed coincidence histogram normalized to g⁽ⁿ⁾.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationResult {
    pub order: usize,
    /// Bin edges of each delay axis, s. Order 3 uses the same edges for
    /// t₂ − t₁ (rows) and t₃ − t₁ (columns).
    pub edges: Vec<f64>,
    /// g⁽ⁿ⁾ per bin, row-major for order 3.
    pub values: Vec<f64>,
    /// Poisson standard error per bin.
    pub stderr: Vec<f64>,
    pub counts: Vec<u64>,
    /// Singles per detector (or mean intensity per trace).
    pub singles: Vec<f64>,
    pub window: f64,
    pub warnings: Vec<String>,
}

impl CorrelationResult {
    pub fn bins(&self) -> usize {
        self.edges.len().saturating_sub(1)
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    fn center_index(&self) -> usize {
        let b = self.bins();
        if self.order == 3 {
            (b / 2) * b + b / 2
        } else {
            b / 2
        }
    }

    /// Value and standard error of the bin containing zero delay.
    pub fn at_zero(&self) -> (f64, f64) {
        let i = self.center_index();
        (self.values[i], self.stderr[i])
    }
}

fn empty(order: usize, edges: Vec<f64>, singles: Vec<f64>, window: f64, warnings: Vec<String>) -> CorrelationResult {
    let cells = (edges.len() - 1).pow(if order == 3 { 2 } else { 1 });
    CorrelationResult {
        order,
        edges,
        values: vec![0.0; cells],
        stderr: vec![0.0; cells],
        counts: vec![0; cells],
        singles,
        window,
        warnings,
    }
}

/// Counts every n-tuple (one event per detector) whose pairwise delays are
/// all within `window`, histogrammed over delays relative to detector 0 with
/// `bins` bins spanning [−window, window], and normalized by the accidental
/// rate expected from the singles.
pub fn correlate(events: &EventStreams, order: usize, window: f64, bins: usize) -> Result<CorrelationResult> {
    if !(order == 2 || order == 3) {
        return Err(Error::UnsupportedOrder(order));
    }
    if !(window.is_finite() && window > 0.0) {
        return Err(Error::Domain { name: "window", value: window, constraint: "must be > 0" });
    }
    if bins == 0 {
        return Err(Error::Domain { name: "bins", value: 0.0, constraint: "must be >= 1" });
    }
    if events.streams.len() < order {
        return Err(Error::Usage(format!("order {order} needs {order} streams, got {}", events.streams.len())));
    }
    let mut warnings = Vec::new();
    if window >= events.coherence_time {
        warnings.push(format!(
            "coincidence window {window:e} s is not shorter than the coherence time {:e} s",
            events.coherence_time
        ));
    }
    let width = 2.0 * window / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| -window + width * i as f64).collect();
    let times: Vec<Vec<f64>> = events.streams[..order].iter().map(|s| s.iter().map(|e| e.timestamp).collect()).collect();
    let singles: Vec<f64> = times.iter().map(|t| t.len() as f64).collect();
    if singles.contains(&0.0) {
        return Ok(empty(order, edges, singles, window, warnings));
    }
    let bin_of = |dt: f64| -> Option<usize> {
        if dt < -window || dt > window {
            return None;
        }
        Some((((dt + window) / width) as usize).min(bins - 1))
    };
    let cells = bins.pow(order as u32 - 1);
    let mut counts = vec![0u64; cells];
    // sliding lower bounds into the later streams
    let mut lo = vec![0usize; order];
    for &t0 in &times[0] {
        for s in 1..order {
            while lo[s] < times[s].len() && times[s][lo[s]] < t0 - window {
                lo[s] += 1;
            }
        }
        let near = |s: usize| times[s][lo[s]..].iter().take_while(|&&t| t <= t0 + window);
        if order == 2 {
            for &t1 in near(1) {
                if let Some(b) = bin_of(t1 - t0) {
                    counts[b] += 1;
                }
            }
        } else {
            for &t1 in near(1) {
                let Some(b1) = bin_of(t1 - t0) else { continue };
                for &t2 in near(2) {
                    if (t2 - t1).abs() > window {
                        continue;
                    }
                    if let Some(b2) = bin_of(t2 - t0) {
                        counts[b1 * bins + b2] += 1;
                    }
                }
            }
        }
    }
    let duration = events.duration;
    let accidental = singles.iter().product::<f64>() * (width / duration).powi(order as i32 - 1);
    let values = counts.iter().map(|&c| c as f64 / accidental).collect();
    let stderr = counts.iter().map(|&c| (c.max(1) as f64).sqrt() / accidental).collect();
    Ok(CorrelationResult {
        order,
        edges,
        values,
        stderr,
        counts,
        singles,
        window,
        warnings,
    })
}

/// Time-averaged intensity correlation of two or three sampled traces,
/// normalized by the mean intensities. Lags run over −max_lag..=max_lag
/// samples (both t₂ − t₁ and t₃ − t₁ for three traces).
pub fn intensity_correlation(traces: &[&[f64]], max_lag: usize, dt: f64) -> Result<CorrelationResult> {
    if !(traces.len() == 2 || traces.len() == 3) {
        return Err(Error::UnsupportedOrder(traces.len()));
    }
    let len = traces[0].len();
    if traces.iter().any(|t| t.len() != len) {
        return Err(Error::Usage("intensity traces must have equal length".into()));
    }
    if max_lag >= len {
        return Err(Error::Usage(format!("max lag {max_lag} must be shorter than the traces ({len} samples)")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Domain { name: "dt", value: dt, constraint: "must be > 0" });
    }
    let means: Vec<f64> = traces.iter().map(|t| t.iter().sum::<f64>() / len as f64).collect();
    if means.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::Numeric("a trace has zero mean intensity".into()));
    }
    let m = max_lag as isize;
    let lags: Vec<isize> = (-m..=m).collect();
    let overlap = |l: &[isize]| -> (usize, usize) {
        let min = l.iter().copied().min().unwrap_or(0).min(0);
        let max = l.iter().copied().max().unwrap_or(0).max(0);
        ((-min) as usize, len - max as usize)
    };
    let mut values = Vec::new();
    let mut counts = Vec::new();
    let at = |t: &[f64], i: usize, l: isize| t[(i as isize + l) as usize];
    if traces.len() == 2 {
        for &l in &lags {
            let (a, b) = overlap(&[l]);
            let s: f64 = (a..b).map(|i| traces[0][i] * at(traces[1], i, l)).sum();
            values.push(s / (b - a) as f64 / (means[0] * means[1]));
            counts.push((b - a) as u64);
        }
    } else {
        for &l1 in &lags {
            for &l2 in &lags {
                let (a, b) = overlap(&[l1, l2]);
                let s: f64 = (a..b).map(|i| traces[0][i] * at(traces[1], i, l1) * at(traces[2], i, l2)).sum();
                values.push(s / (b - a) as f64 / (means[0] * means[1] * means[2]));
                counts.push((b - a) as u64);
            }
        }
    }
    let edges = (-m..=m + 1).map(|l| (l as f64 - 0.5) * dt).collect();
    let stderr = vec![f64::NAN; values.len()];
    Ok(CorrelationResult {
        order: traces.len(),
        edges,
        values,
        stderr,
        counts,
        singles: means,
        window: max_lag as f64 * dt,
        warnings: Vec::new(),
    })
}
