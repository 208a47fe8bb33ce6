//! Data behind the published figures, each with shape checks.

use std::f64::consts::TAU;
use std::path::Path;

use feyncoh::analytic::{
    self, symmetric_grid, CoherenceParams, Domain, HbtKind, HomPair, MultiSourceKind, MzEnvelope, PatternSamples, ThirdOrderConfig,
};
use feyncoh::coherence::{Geometry, SourceKind, SourceSpec, Spectrum};
use feyncoh::montecarlo::{simulate_first_order, SimulationConfig};
use feyncoh::rng::substream_key;

use crate::run::{half_depth_width, DataTable, RunError};

pub const FIGURE_IDS: &[&str] = &["fig4", "fig6", "fig9", "fig12", "fig19", "fig23", "fig29a", "fig32", "fig35"];

/// Optical carrier used by the figures, rad/s (≈ 500 nm).
const OMEGA: f64 = 3.77e15;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    pub id: String,
    pub title: String,
    pub datasets: Vec<(String, DataTable)>,
    pub checks: Vec<Check>,
}

impl Figure {
    fn new(id: &str, title: &str) -> Self {
        Self { id: id.into(), title: title.into(), datasets: Vec::new(), checks: Vec::new() }
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check { name: name.into(), passed, detail });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn dataset(&self, name: &str) -> Option<&DataTable> {
        self.datasets.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn checks_text(&self) -> String {
        let mut out = format!("{}: {}\n", self.id, self.title);
        for c in &self.checks {
            out += &format!("{} {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        out
    }
}

#[derive(Debug, Clone, Default)]
pub struct FigureOptions {
    pub seed: u64,
    /// Independent runs per photon number (fig6 only); default 100.
    pub runs: Option<usize>,
    pub threads: Option<usize>,
}

pub fn reproduce(id: &str, opts: &FigureOptions) -> Result<Figure, RunError> {
    let r = match id {
        "fig4" => fig4(),
        "fig6" => fig6(opts),
        "fig9" => fig9(),
        "fig12" => fig12(),
        "fig19" => fig19(),
        "fig23" => fig23(),
        "fig29a" => fig29a(),
        "fig32" => fig32(),
        "fig35" => fig35(),
        _ => return Err(RunError::Usage(format!("unknown figure \"{id}\"; valid ids: {}", FIGURE_IDS.join(", ")))),
    };
    r.map_err(RunError::from)
}

/// Writes one CSV per dataset plus `checks.txt`.
pub fn write_figure(fig: &Figure, dir: &Path) -> Result<(), RunError> {
    std::fs::create_dir_all(dir)?;
    for (name, t) in &fig.datasets {
        std::fs::write(dir.join(format!("{name}.csv")), t.to_csv())?;
    }
    std::fs::write(dir.join("checks.txt"), fig.checks_text())?;
    Ok(())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn max_asymmetry(values: &[f64]) -> f64 {
    values.iter().zip(values.iter().rev()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn centre(p: &PatternSamples) -> f64 {
    p.values[p.values.len() / 2]
}

fn curves_table(axis: &str, grid: &[f64], names: &[&str], curves: &[&PatternSamples]) -> DataTable {
    let mut cols = vec![axis];
    cols.extend_from_slice(names);
    let mut t = DataTable::new(&cols);
    for (i, &x) in grid.iter().enumerate() {
        let mut row = vec![x];
        row.extend(curves.iter().map(|c| c.values[i]));
        t.rows.push(row);
    }
    t
}

fn grid_table(c1: &str, c2: &str, g1: &[f64], g2: &[f64], p: &PatternSamples) -> DataTable {
    let mut t = DataTable::new(&[c1, c2, "value"]);
    for (i, &x) in g1.iter().enumerate() {
        for (j, &y) in g2.iter().enumerate() {
            t.rows.push(vec![x, y, p.at(i, j)]);
        }
    }
    t
}

fn fig4() -> feyncoh::Result<Figure> {
    let mut f = Figure::new("fig4", "Mach-Zehnder first-order pattern, Gaussian spectrum");
    let s = Spectrum::gaussian(3.0e15, 2.9e14)?;
    let grid = symmetric_grid(20e-15, 2001);
    let v = analytic::mz_first_order(&s, &grid, MzEnvelope::Verbatim)?;
    let st = analytic::mz_first_order(&s, &grid, MzEnvelope::Standard)?;
    f.check("verbatim value at zero delay", close(centre(&v), 1.5, 1e-12), format!("{:.12}", centre(&v)));
    f.check("standard value at zero delay", close(centre(&st), 2.0, 1e-12), format!("{:.12}", centre(&st)));
    let asym = max_asymmetry(&v.values).max(max_asymmetry(&st.values));
    f.check("even in delay", asym < 1e-9, format!("max |P(t) - P(-t)| = {asym:.3e}"));
    let edge = (v.values[0] - 1.0).abs().max((st.values[0] - 1.0).abs());
    f.check("tends to 1 at the edges", edge < 1e-6, format!("|P(20 fs) - 1| = {edge:.3e}"));
    f.datasets.push(("pattern".into(), curves_table("tau_s", &grid, &["verbatim", "standard"], &[&v, &st])));
    Ok(f)
}

fn fig6_sources(kind: SourceKind) -> feyncoh::Result<(Vec<SourceSpec>, Geometry)> {
    let mono = Spectrum::monochromatic(OMEGA)?;
    let d = 1e-3;
    let s = vec![
        SourceSpec::builder(kind.clone(), mono).position(-d / 2.0).build()?,
        SourceSpec::builder(kind, mono).position(d / 2.0).build()?,
    ];
    let g = Geometry::for_source(1.0, &s[0])?;
    Ok((s, g))
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[i]
    }
}

/// Least-squares slope of log(y) against log(x).
fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

pub const FIG6_PHOTONS: [usize; 5] = [100, 316, 1000, 3162, 10000];

fn fig6(opts: &FigureOptions) -> feyncoh::Result<Figure> {
    let mut f = Figure::new("fig6", "Fitted first-order visibility of two thermal beams against detected photon number");
    let runs = opts.runs.unwrap_or(100);
    let (sources, g) = fig6_sources(SourceKind::Thermal)?;
    let period = g.wavelength() * g.distance() / 1e-3;
    let grid = symmetric_grid(5.0 * period, 257);
    let mut t = DataTable::new(&["photons", "median_visibility", "q25_visibility", "q75_visibility", "inverse_sqrt_n"]);
    let mut medians = Vec::new();
    for &n in &FIG6_PHOTONS {
        let mut vs = Vec::with_capacity(runs);
        for run in 0..runs {
            let mut cfg = SimulationConfig::new(sources.clone(), g);
            cfg.photons = n;
            cfg.seed = substream_key(opts.seed, &[n as u64, run as u64]);
            cfg.threads = opts.threads;
            vs.push(simulate_first_order(&cfg, &grid)?.fit.visibility);
        }
        let m = median(&mut vs);
        let target = 1.0 / (n as f64).sqrt();
        f.check(&format!("median V within 30% of 1/sqrt(N) at N = {n}"), (m / target - 1.0).abs() <= 0.3, format!("median {m:.4}, 1/sqrt(N) {target:.4}"));
        t.rows.push(vec![n as f64, m, quantile(&vs, 0.25), quantile(&vs, 0.75), target]);
        medians.push(m);
    }
    let ns: Vec<f64> = FIG6_PHOTONS.iter().map(|&n| n as f64).collect();
    let slope = log_slope(&ns, &medians);
    f.check("log-log slope is -0.5 +/- 0.05", close(slope, -0.5, 0.05), format!("slope {slope:.4}"));
    let mut laser = DataTable::new(&["photons", "laser_visibility"]);
    let (lasers, _) = fig6_sources(SourceKind::Laser)?;
    let mut cfg = SimulationConfig::new(lasers, g);
    cfg.photons = 10_000;
    cfg.seed = opts.seed;
    cfg.threads = opts.threads;
    let lv = simulate_first_order(&cfg, &grid)?.fit.visibility;
    laser.rows.push(vec![10_000.0, lv]);
    f.check("two lasers within one coherence time keep their fringes", lv > 0.95, format!("V = {lv:.4}"));
    f.datasets.push(("visibility".into(), t));
    f.datasets.push(("laser_reference".into(), laser));
    Ok(f)
}

fn visibility(values: &[f64]) -> (f64, f64, f64) {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    ((hi - lo) / (hi + lo), lo, hi)
}

fn fig9() -> feyncoh::Result<Figure> {
    let mut f = Figure::new("fig9", "First-order pattern of three coherent beams");
    let g = Geometry::new(1.0, TAU * 2.99792458e8 / OMEGA)?;
    let ll = g.wavelength() * g.distance();
    let d = ll.sqrt();
    let grid = symmetric_grid(3.0 * ll / d, 4001);
    let pattern = |d12: f64, d23: f64| -> Vec<f64> { grid.iter().map(|&x| analytic::three_beam_first_order(d12, d23, &g, [0.0; 3], x)).collect() };
    let a = pattern(d, 2.0 * d);
    let b = pattern(d, d);
    let (va, _, _) = visibility(&a);
    let (vb, lo_b, hi_b) = visibility(&b);
    f.check("(a) uneven spacing keeps a raised floor", va < 0.99, format!("V = {va:.5}"));
    f.check("(b) equal spacing with d^2 = lambda L reaches zero", lo_b < 1e-3 * hi_b, format!("min {lo_b:.3e}, max {hi_b:.4}"));
    f.check("(b) visibility above 0.999", vb > 0.999, format!("V = {vb:.6}"));
    let mut t = DataTable::new(&["x_m", "uneven", "equal"]);
    for (i, &x) in grid.iter().enumerate() {
        t.rows.push(vec![x, a[i], b[i]]);
    }
    f.datasets.push(("pattern".into(), t));
    Ok(f)
}

const BANDWIDTH: f64 = 1e12;

fn width_checks(f: &mut Figure, grid: &[f64], curves: &[PatternSamples]) {
    let widths: Vec<f64> = curves.iter().map(|c| half_depth_width(grid, &c.values, centre(c))).collect();
    for i in 1..widths.len() {
        let ratio = widths[i] / widths[i - 1];
        f.check(&format!("width halves from curve {} to {}", i, i + 1), close(ratio, 0.5, 0.05), format!("{:.4e} s -> {:.4e} s, ratio {ratio:.4}", widths[i - 1], widths[i]));
    }
}

fn fig12() -> feyncoh::Result<Figure> {
    let mut f = Figure::new("fig12", "Temporal two-photon bunching of thermal light at three bandwidths");
    let grid = symmetric_grid(4.0 * TAU / BANDWIDTH, 2001);
    let curves: Vec<PatternSamples> = [1.0, 2.0, 4.0]
        .iter()
        .map(|m| analytic::hbt_second_order(&HbtKind::Thermal, Domain::Temporal, &CoherenceParams::temporal(m * BANDWIDTH), &grid))
        .collect::<feyncoh::Result<_>>()?;
    for (i, c) in curves.iter().enumerate() {
        let peak = centre(c);
        let top = c.max();
        f.check(&format!("curve {} peaks at 2 at zero delay", i + 1), close(peak, 2.0, 1e-12) && close(top, peak, 0.0), format!("P(0) = {peak:.12}, max {top:.12}"));
        f.check(&format!("curve {} is even", i + 1), max_asymmetry(&c.values) < 1e-12, String::new());
    }
    width_checks(&mut f, &grid, &curves);
    let tail = (curves[2].values[0] - 1.0).abs();
    f.check("narrowest curve is at the baseline far out", tail < 0.01, format!("|P - 1| = {tail:.3e}"));
    let refs: Vec<&PatternSamples> = curves.iter().collect();
    f.datasets.push(("pattern".into(), curves_table("tau_s", &grid, &["dw", "2dw", "4dw"], &refs)));
    Ok(f)
}

fn fig19() -> feyncoh::Result<Figure> {
    let mut f = Figure::new("fig19", "Hong-Ou-Mandel dip of an entangled photon pair at three bandwidths");
    let grid = symmetric_grid(4.0 * TAU / BANDWIDTH, 2001);
    let curves: Vec<PatternSamples> = [1.0, 2.0, 4.0]
        .iter()
        .map(|m| analytic::hom_second_order(HomPair::EntangledPair, Domain::Temporal, &CoherenceParams::temporal(m * BANDWIDTH), &grid))
        .collect::<feyncoh::Result<_>>()?;
    for (i, c) in curves.iter().enumerate() {
        let dip = centre(c);
        f.check(&format!("curve {} reaches 0 at zero delay", i + 1), dip.abs() < 1e-12 && c.min() >= dip, format!("P(0) = {dip:.3e}"));
        f.check(&format!("curve {} is even", i + 1), max_asymmetry(&c.values) < 1e-12, String::new());
    }
    width_checks(&mut f, &grid, &curves);
    let refs: Vec<&PatternSamples> = curves.iter().collect();
    f.datasets.push(("pattern".into(), curves_table("tau_s", &grid, &["dw", "2dw", "4dw"], &refs)));
    Ok(f)
}

fn fig23() -> feyncoh::Result<Figure> {
    let mut f = Figure::new("fig23", "Second-order spatial pattern of three sources");
    let g = Geometry::new(1.0, TAU * 2.99792458e8 / OMEGA)?;
    let ll = g.wavelength() * g.distance();
    let d = 0.5e-3;
    let period = ll / d;
    // whole periods of every term, so the grid mean is the baseline
    let n = 4000;
    let grid: Vec<f64> = (0..n).map(|i| -2.0 * period + 4.0 * period * i as f64 / n as f64).collect();
    let sp = analytic::multi_source_second_order(MultiSourceKind::SinglePhoton, d, d, &g, &grid)?;
    let laser = analytic::multi_source_second_order(MultiSourceKind::Laser, d, d, &g, &grid)?;
    for (name, p, base) in [("single-photon", &sp, 3.0), ("laser", &laser, 4.5)] {
        let mean = p.values.iter().sum::<f64>() / n as f64;
        f.check(&format!("{name} baseline is {base}"), close(mean, base, 1e-9) && p.baseline == base, format!("grid mean {mean:.12}"));
    }
    let sym_grid = symmetric_grid(2.0 * period, 2001);
    let sym = analytic::multi_source_second_order(MultiSourceKind::SinglePhoton, d, d, &g, &sym_grid)?;
    let asym = max_asymmetry(&sym.values);
    f.check("equal spacing gives an even pattern", asym < 1e-9, format!("max asymmetry {asym:.3e}"));
    let at0 = analytic::multi_source_second_order(MultiSourceKind::SinglePhoton, d, d, &g, &[0.0])?.values[0];
    let want = 4.0 + 2.0 * (std::f64::consts::PI * d * d / ll).cos();
    f.check("single-photon value at zero separation", close(at0, want, 1e-12), format!("{at0:.12} vs {want:.12}"));
    f.datasets.push(("pattern".into(), curves_table("dx_m", &grid, &["single_photon", "laser"], &[&sp, &laser])));
    Ok(f)
}

fn spatial_params() -> feyncoh::Result<(CoherenceParams, f64)> {
    let g = Geometry::new(1.0, TAU * 2.99792458e8 / OMEGA)?;
    let extent = 1e-3;
    let p = CoherenceParams::spatial(extent, g.wavelength(), g.distance());
    Ok((p, g.wavelength() * g.distance() / extent))
}

fn transpose_asymmetry(p: &PatternSamples, n: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((p.at(i, j) - p.at(j, i)).abs());
        }
    }
    worst
}

fn fig29a() -> feyncoh::Result<Figure> {
    let mut f = Figure::new("fig29a", "Spatial third-order pattern of thermal light");
    let (params, unit) = spatial_params()?;
    let n = 101;
    let grid = symmetric_grid(5.0 * unit, n);
    let p = analytic::third_order_pattern(ThirdOrderConfig::ThermalHbt3(Domain::Spatial), &params, &grid, &grid)?;
    let origin = p.at(n / 2, n / 2);
    f.check("value 6 at the origin", close(origin, 6.0, 1e-12) && close(p.max(), 6.0, 1e-12), format!("{origin:.12}"));
    let asym = transpose_asymmetry(&p, n);
    f.check("symmetric under exchange of the two separations", asym < 1e-12, format!("{asym:.3e}"));
    let corner = p.at(n - 1, 0);
    f.check("uncorrelated corner tends to 1", close(corner, 1.0, 0.02), format!("{corner:.6}"));
    f.datasets.push(("pattern".into(), grid_table("dx12_m", "dx13_m", &grid, &grid, &p)));
    Ok(f)
}

fn fig32() -> feyncoh::Result<Figure> {
    let mut f = Figure::new("fig32", "Third-order pattern of three single-photon sources, equal-spacing slice");
    let (mut params, _) = spatial_params()?;
    let ll = params.wavelength * params.distance;
    let d = 0.5e-3;
    params.extent = d;
    let n = 101;
    let grid = symmetric_grid(2.0 * ll / d, n);
    let p = analytic::third_order_pattern(ThirdOrderConfig::ThreeSinglePhotonSlice, &params, &grid, &grid)?;
    let k = TAU / ll;
    let printed: Vec<f64> = grid.iter().flat_map(|&x1| grid.iter().map(move |&x2| analytic::three_photon_slice_printed(k, d, x1, x2))).collect();
    let lo = p.min();
    f.check("non-negative", lo >= -1e-12, format!("min {lo:.6}"));
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let m = (n - 1 - i) * n + (n - 1 - j);
            worst = worst.max((p.at(i, j) - p.at(n - 1 - i, n - 1 - j)).abs()).max((printed[i * n + j] - printed[m]).abs());
        }
    }
    f.check("symmetric under inversion through the origin", worst < 1e-9, format!("{worst:.3e}"));
    // with every detector at one point all six paths are in phase
    let diagonal = (0..n).map(|i| (p.at(i, i) - 6.0).abs()).fold(0.0, f64::max);
    f.check("value 3! = 6 wherever x1 = x2", diagonal < 1e-9, format!("max |P - 6| on the diagonal {diagonal:.3e}"));
    let c = (std::f64::consts::PI * d * d / ll).cos();
    let want = 2.0 + c * c;
    let origin_printed = printed[(n / 2) * n + n / 2];
    f.check("printed form at the origin", close(origin_printed, want, 1e-12), format!("{origin_printed:.12} vs {want:.12}"));
    let printed_min = printed.iter().copied().fold(f64::INFINITY, f64::min);
    f.check("printed simplification reported", true, format!("min of the printed form {printed_min:.6}"));
    let mut t = DataTable::new(&["x1_m", "x2_m", "value", "printed_form"]);
    for (i, &x) in grid.iter().enumerate() {
        for (j, &y) in grid.iter().enumerate() {
            t.rows.push(vec![x, y, p.at(i, j), printed[i * n + j]]);
        }
    }
    f.datasets.push(("pattern".into(), t));
    Ok(f)
}

fn fig35() -> feyncoh::Result<Figure> {
    let mut f = Figure::new("fig35", "Third-order temporal pattern of fermions");
    let params = CoherenceParams::temporal(BANDWIDTH);
    let unit = TAU / BANDWIDTH;
    let n = 101;
    let grid = symmetric_grid(5.0 * unit, n);
    let p = analytic::third_order_pattern(ThirdOrderConfig::FermionHbt3(Domain::Temporal), &params, &grid, &grid)?;
    let origin = p.at(n / 2, n / 2);
    f.check("zero at coincidence", origin.abs() < 1e-9, format!("{origin:.3e}"));
    f.check("never above the baseline", p.max() <= 1.0 + 1e-12, format!("max {:.6}", p.max()));
    let asym = transpose_asymmetry(&p, n);
    f.check("symmetric under exchange of the two delays", asym < 1e-12, format!("{asym:.3e}"));
    let corner = p.at(n - 1, 0);
    f.check("uncorrelated corner tends to 1", close(corner, 1.0, 0.02), format!("{corner:.6}"));
    f.datasets.push(("pattern".into(), grid_table("tau12_s", "tau13_s", &grid, &grid, &p)));
    Ok(f)
}
