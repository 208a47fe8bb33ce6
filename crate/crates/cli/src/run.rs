//! Executes an experiment configuration and writes its artifacts.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use feyncoh::analytic::{self, symmetric_grid, CoherenceFamily, CoherenceParams, Domain, FirstOrderParams, HbtKind, HomPair, MultiSourceKind, ThirdOrderConfig};
use feyncoh::coherence::{DetectorSpec, Geometry, SourceKind, SourceSpec, Spectrum, Statistics};
use feyncoh::montecarlo::{correlate, fit_visibility, generate_events, simulate_first_order, SimulationConfig};
use feyncoh::paths::{
    boson_path_oracle, enumerate_ways, fermion_path_oracle, way_amplitude, Configuration, EnsembleOptions, Estimate, Layout, PhaseAssignment, SuperpositionRule,
    BS_REFLECTION_PHASE,
};
use feyncoh::propagators::SpacetimePoint;
use num_complex::Complex64;
use rand::RngExt;

use crate::config::{to_toml, ConfigError, DomainName, Experiment, ExperimentConfig, McEngine, Mode, Rule, ThirdVariant};

/// Overrides from the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub mode: Option<Mode>,
    pub threads: Option<usize>,
}

impl RunOptions {
    /// Reads the worker cap from `FEYNCOH_THREADS`.
    pub fn threads_from_env() -> Option<usize> {
        std::env::var("FEYNCOH_THREADS").ok().and_then(|v| v.trim().parse().ok()).filter(|&n| n > 0)
    }
}

#[derive(Debug)]
pub enum RunError {
    Validation(Vec<ConfigError>),
    Usage(String),
    Numeric(String),
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Validation(_) | RunError::Usage(_) => 2,
            RunError::Numeric(_) => 3,
            RunError::Io(_) => 1,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Validation(errs) => {
                writeln!(f, "configuration has {} error(s):", errs.len())?;
                for e in errs {
                    writeln!(f, "  {e}")?;
                }
                Ok(())
            }
            RunError::Usage(m) => write!(f, "usage error: {m}"),
            RunError::Numeric(m) => write!(f, "numeric failure: {m}"),
            RunError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<feyncoh::Error> for RunError {
    fn from(e: feyncoh::Error) -> Self {
        match e {
            feyncoh::Error::Numeric(_) | feyncoh::Error::Singularity => RunError::Numeric(e.to_string()),
            _ => RunError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e.to_string())
    }
}

type Result<T> = std::result::Result<T, RunError>;

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(RunError::Usage(msg.into()))
}

/// Column-oriented numeric table; NaN cells are written empty.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl DataTable {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// CSV text with a header row and 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| if v.is_nan() { String::new() } else { format!("{v:.11e}") }).collect();
            out += &cells.join(",");
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub metrics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl Report {
    fn set(&mut self, key: impl Into<String>, value: f64) {
        self.metrics.insert(key.into(), value);
    }

    pub fn metric(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).copied()
    }

    fn to_text(&self, cfg: &ExperimentConfig) -> String {
        let mut out = format!(
            "experiment: {}\nname: {}\nmode: {}\nseed: {}\nsamples: {}\n\n",
            cfg.experiment.name(),
            cfg.name,
            cfg.mode.name(),
            cfg.seed,
            cfg.samples
        );
        for (k, v) in &self.metrics {
            out += &format!("{k} = {}\n", format_metric(*v));
        }
        for n in &self.notes {
            out += &format!("note: {n}\n");
        }
        out
    }
}

fn format_metric(v: f64) -> String {
    if v == 0.0 || (1e-3..1e6).contains(&v.abs()) {
        format!("{v:.6}")
    } else {
        format!("{v:.6e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    /// Configuration after command-line overrides.
    pub config: ExperimentConfig,
    pub table: DataTable,
    pub report: Report,
    pub timings: BTreeMap<String, f64>,
    pub threads: Option<usize>,
}

impl RunOutput {
    pub fn report_text(&self) -> String {
        self.report.to_text(&self.config)
    }

    pub fn meta_json(&self) -> serde_json::Value {
        serde_json::json!({
            "name": self.config.name,
            "experiment": self.config.experiment.name(),
            "mode": self.config.mode.name(),
            "seed": self.config.seed,
            "samples": self.config.samples,
            "threads": self.threads,
            "versions": {
                "feyncoh": feyncoh::VERSION,
                "feyncoh-cli": env!("CARGO_PKG_VERSION"),
            },
            "timings_s": self.timings,
            "config": to_toml(&self.config),
        })
    }
}

/// Applies command-line overrides.
pub fn effective(cfg: &ExperimentConfig, opts: &RunOptions) -> ExperimentConfig {
    let mut c = cfg.clone();
    if let Some(s) = opts.seed {
        c.seed = s;
    }
    if let Some(n) = opts.samples {
        c.samples = n;
    }
    if let Some(m) = opts.mode {
        c.mode = m;
    }
    if let Some(d) = &opts.out_dir {
        c.out_dir = Some(d.display().to_string());
    }
    c
}

/// Runs the experiment without touching the filesystem.
pub fn execute(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutput> {
    let cfg = effective(cfg, opts);
    let ctx = Ctx { cfg: &cfg, threads: opts.threads };
    let mut out = Outcome::default();
    let start = Instant::now();
    match cfg.experiment {
        Experiment::Mz => mz(&ctx, &mut out)?,
        Experiment::FirstOrder => first_order(&ctx, &mut out)?,
        Experiment::Hbt => hbt(&ctx, &mut out)?,
        Experiment::Hom => hom(&ctx, &mut out)?,
        Experiment::MultiSource => multi_source(&ctx, &mut out)?,
        Experiment::Subwavelength => subwavelength(&ctx, &mut out)?,
        Experiment::ThirdOrder => third_order(&ctx, &mut out)?,
        Experiment::Degree => degree(&ctx, &mut out)?,
        Experiment::Oracle => oracle(&ctx, &mut out)?,
        Experiment::Degeneracy => degeneracy(&ctx, &mut out)?,
    }
    out.timings.insert("total".into(), start.elapsed().as_secs_f64());
    Ok(RunOutput {
        config: cfg,
        table: out.table,
        report: out.report,
        timings: out.timings,
        threads: opts.threads,
    })
}

/// Output directory for a run.
pub fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    match &cfg.out_dir {
        Some(d) => PathBuf::from(d),
        None => Path::new("out").join(if cfg.name.is_empty() { "run" } else { &cfg.name }),
    }
}

/// Writes `pattern.csv`, `report.txt`, `meta.json` and the effective `config.toml`.
pub fn write_artifacts(out: &RunOutput, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("pattern.csv"), out.table.to_csv())?;
    std::fs::write(dir.join("report.txt"), out.report_text())?;
    let meta = serde_json::to_string_pretty(&out.meta_json()).map_err(|e| RunError::Io(e.to_string()))?;
    std::fs::write(dir.join("meta.json"), meta + "\n")?;
    std::fs::write(dir.join("config.toml"), to_toml(&out.config))?;
    Ok(())
}

/// Executes and writes artifacts; returns the output and its directory.
pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<(RunOutput, PathBuf)> {
    let out = execute(cfg, opts)?;
    let dir = output_dir(&out.config);
    write_artifacts(&out, &dir)?;
    Ok((out, dir))
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    threads: Option<usize>,
}

#[derive(Default)]
struct Outcome {
    table: DataTable,
    report: Report,
    timings: BTreeMap<String, f64>,
}

impl Default for DataTable {
    fn default() -> Self {
        DataTable::new(&[])
    }
}

impl Outcome {
    fn timed<T>(&mut self, key: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let r = f();
        *self.timings.entry(key.into()).or_insert(0.0) += t.elapsed().as_secs_f64();
        r
    }
}

impl Ctx<'_> {
    fn analytic(&self) -> bool {
        self.cfg.mode.analytic()
    }

    fn montecarlo(&self) -> bool {
        self.cfg.mode.montecarlo()
    }

    fn sources(&self) -> Result<Vec<SourceSpec>> {
        self.cfg.sources.iter().map(|s| s.build().map_err(RunError::from)).collect()
    }

    fn geometry(&self, specs: &[SourceSpec]) -> Result<Geometry> {
        let wavelength = match (self.cfg.wavelength, specs.first()) {
            (Some(w), _) => w,
            (None, Some(s)) => s.wavelength(),
            (None, None) => return usage("geometry.wavelength is required when there are no sources"),
        };
        Ok(Geometry::new(self.cfg.distance, wavelength)?)
    }

    fn grid(&self, default_span: f64) -> Vec<f64> {
        symmetric_grid(self.cfg.half_span.unwrap_or(default_span), self.cfg.points)
    }

    fn ensemble(&self) -> EnsembleOptions {
        EnsembleOptions {
            samples: self.cfg.samples,
            seed: self.cfg.seed,
            rule: match self.cfg.rule {
                Rule::Feynman => SuperpositionRule::Feynman,
                Rule::Distinguishable => SuperpositionRule::ForceDistinguishable,
            },
            threads: self.threads,
        }
    }

    fn domain(&self) -> Domain {
        match self.cfg.domain {
            DomainName::Temporal => Domain::Temporal,
            DomainName::Spatial => Domain::Spatial,
        }
    }

    fn simulation(&self, specs: Vec<SourceSpec>, geometry: Geometry, detectors: usize) -> Result<SimulationConfig> {
        let mut sim = SimulationConfig::new(specs, geometry);
        sim.order = detectors.max(1);
        sim.detectors = (0..detectors).map(|i| DetectorSpec::new(i, 0.0)).collect::<feyncoh::Result<_>>()?;
        sim.photons = self.cfg.mc.photons;
        sim.duration = self.cfg.mc.duration;
        sim.rate = self.cfg.mc.rate;
        sim.seed = self.cfg.seed;
        sim.bins = self.cfg.mc.bins;
        sim.threads = self.threads;
        Ok(sim)
    }
}

fn detectors(n: usize) -> Result<Vec<DetectorSpec>> {
    Ok((0..n).map(|i| DetectorSpec::new(i, 0.0)).collect::<feyncoh::Result<_>>()?)
}

fn rect_width(s: &SourceSpec) -> Result<f64> {
    match s.spectrum() {
        Spectrum::Rectangular { width, .. } => Ok(*width),
        other => usage(format!("the closed form assumes a rectangular spectrum, got {other:?}")),
    }
}

/// Points for two detectors separated by `s` in time or transverse position.
fn pair_points(domain: Domain, l: f64, s: f64) -> Vec<SpacetimePoint> {
    match domain {
        Domain::Temporal => vec![SpacetimePoint::new(0.0, l, s), SpacetimePoint::new(0.0, l, 0.0)],
        Domain::Spatial => vec![SpacetimePoint::new(s, l, 0.0), SpacetimePoint::new(0.0, l, 0.0)],
    }
}

fn axis_name(domain: Domain) -> &'static str {
    match domain {
        Domain::Temporal => "tau_s",
        Domain::Spatial => "dx_m",
    }
}

/// Largest |analytic − MC| in units of the MC standard error.
fn max_deviation(analytic: &[f64], mc: &[Estimate]) -> f64 {
    analytic
        .iter()
        .zip(mc)
        .map(|(a, e)| {
            let d = (a - e.value).abs();
            if d < 1e-9 * a.abs().max(1.0) {
                0.0
            } else if e.stderr > 0.0 {
                d / e.stderr
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max)
}

/// Full width of a peak or dip centred at zero, measured halfway between the
/// centre value and the baseline 1.
pub(crate) fn half_depth_width(grid: &[f64], values: &[f64], centre: f64) -> f64 {
    let level = 0.5 * (centre + 1.0);
    let rising = centre < 1.0;
    let start = grid.partition_point(|&x| x < 0.0);
    for i in start..grid.len().saturating_sub(1) {
        let (a, b) = (values[i], values[i + 1]);
        let crossed = if rising { a < level && b >= level } else { a > level && b <= level };
        if crossed {
            let f = (level - a) / (b - a);
            return 2.0 * (grid[i] + f * (grid[i + 1] - grid[i]));
        }
    }
    f64::NAN
}

fn one_d_table(axis: &str, grid: &[f64], analytic: Option<&[f64]>, mc: Option<&[Estimate]>) -> DataTable {
    let mut t = DataTable::new(&[axis, "analytic", "mc_mean", "mc_stderr"]);
    for (i, &x) in grid.iter().enumerate() {
        let a = analytic.map_or(f64::NAN, |v| v[i]);
        let (m, s) = mc.map_or((f64::NAN, f64::NAN), |v| (v[i].value, v[i].stderr));
        t.rows.push(vec![x, a, m, s]);
    }
    t
}

fn estimates(values: &[f64], stderr: &[f64]) -> Vec<Estimate> {
    values
        .iter()
        .zip(stderr)
        .map(|(&v, &s)| Estimate { value: v, stderr: s, raw: v, baseline: 1.0, samples: 0 })
        .collect()
}

fn record_zero(out: &mut Outcome, prefix: &str, analytic: Option<f64>, mc: Option<(f64, f64)>) {
    if let Some(a) = analytic {
        out.report.set(format!("{prefix}_zero_analytic"), a);
    }
    if let Some((m, s)) = mc {
        out.report.set(format!("{prefix}_zero_mc"), m);
        out.report.set(format!("{prefix}_zero_mc_stderr"), s);
    }
    if let (Some(a), Some((m, s))) = (analytic, mc) {
        let d = (a - m).abs();
        let se = if d < 1e-9 * a.abs().max(1.0) { 0.0 } else if s > 0.0 { d / s } else { f64::INFINITY };
        out.report.set(format!("{prefix}_zero_deviation_se"), se);
    }
}

fn compare(out: &mut Outcome, analytic: Option<&[f64]>, mc: Option<&[Estimate]>) {
    if let Some(a) = analytic {
        out.report.set("analytic_max", a.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        out.report.set("analytic_min", a.iter().copied().fold(f64::INFINITY, f64::min));
    }
    if let (Some(a), Some(m)) = (analytic, mc) {
        out.report.set("max_deviation_se", max_deviation(a, m));
    }
}

fn mz(ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let specs = ctx.sources()?;
    let Some(s) = specs.first() else { return usage("mz needs one source") };
    let tc = s.spectrum().coherence_time();
    let span = if tc.is_finite() { 10.0 * tc } else { 20.0 * TAU / s.spectrum().center() };
    let grid = ctx.grid(span);
    let env = ctx.cfg.params.envelope.to_core();
    let p = out.timed("analytic_s", || Ok(analytic::mz_first_order(s.spectrum(), &grid, env)?))?;
    let zero = analytic::mz_first_order(s.spectrum(), &[0.0], env)?.values[0];
    out.report.set("p_zero_analytic", zero);
    compare(out, Some(&p.values), None);
    if ctx.montecarlo() {
        out.report.notes.push("the Mach-Zehnder pattern has no stochastic engine; analytic only".into());
    }
    out.table = one_d_table("tau_s", &grid, Some(&p.values), None);
    Ok(())
}

fn first_order(ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let specs = ctx.sources()?;
    if !(2..=3).contains(&specs.len()) {
        return usage("first-order needs two or three sources");
    }
    let g = ctx.geometry(&specs)?;
    let mut pos: Vec<f64> = specs.iter().map(|s| s.position()).collect();
    pos.sort_by(f64::total_cmp);
    let d = pos[1] - pos[0];
    if d <= 0.0 {
        return usage("sources must be at distinct positions");
    }
    let grid = ctx.grid(5.0 * g.wavelength() * g.distance() / d);
    let p = &ctx.cfg.params;
    let params = FirstOrderParams {
        n_detected: ctx.cfg.mc.photons,
        n_simultaneous: p.simultaneous,
        phases: p.phases.clone(),
        long_average: p.long_average,
    };
    let analytic = if ctx.analytic() {
        let r = out.timed("analytic_s", || Ok(analytic::multi_beam_first_order(&specs, &g, &grid, &params)?))?;
        out.report.set("visibility_analytic", r.visibility);
        Some(r.pattern.values)
    } else {
        None
    };
    let mut mc = None;
    if ctx.montecarlo() {
        if specs.len() != 2 {
            out.report.notes.push("photon-by-photon build-up covers two sources; analytic only".into());
        } else {
            let sim = ctx.simulation(specs.clone(), g, 0)?;
            let r = out.timed("montecarlo_s", || Ok(simulate_first_order(&sim, &grid)?))?;
            out.report.set("visibility_mc_fit", r.fit.visibility);
            out.report.set("visibility_mc_histogram", r.histogram_fit.visibility);
            out.report.set("visibility_mc_extrema", r.extrema_visibility);
            out.report.set("fit_ill_conditioned", r.fit.ill_conditioned as u8 as f64);
            if r.fit.ill_conditioned {
                out.report.notes.push("visibility fit is ill-conditioned; widen the grid".into());
            }
            mc = Some(r.pattern.values);
        }
    }
    compare(out, analytic.as_deref(), None);
    let mut t = DataTable::new(&["x_m", "analytic", "mc_mean", "mc_stderr"]);
    for (i, &x) in grid.iter().enumerate() {
        t.rows.push(vec![x, analytic.as_ref().map_or(f64::NAN, |v| v[i]), mc.as_ref().map_or(f64::NAN, |v| v[i]), f64::NAN]);
    }
    out.table = t;
    Ok(())
}

fn hbt_kind(s: &SourceSpec) -> Result<HbtKind> {
    Ok(match s.kind() {
        SourceKind::Thermal => HbtKind::Thermal,
        SourceKind::Laser => HbtKind::Laser,
        SourceKind::Bec => HbtKind::Bec,
        SourceKind::SuperbunchingCascade { stages } => HbtKind::SuperbunchingCascade { stages: *stages },
        SourceKind::SuperbunchingModulated { gamma } => HbtKind::SuperbunchingModulated { gamma: gamma.clone() },
        SourceKind::ColdAtomCloud if s.statistics() == Statistics::Fermion => HbtKind::FermionBeam,
        SourceKind::ColdAtomCloud => HbtKind::ColdAtomCloud,
        k => return usage(format!("HBT is defined for one beam; {} sources are not supported", k.name())),
    })
}

fn hbt(ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let specs = ctx.sources()?;
    if specs.len() != 1 {
        return usage("hbt needs exactly one source");
    }
    let s = &specs[0];
    let g = ctx.geometry(&specs)?;
    let kind = hbt_kind(s)?;
    let flat = matches!(kind, HbtKind::Laser | HbtKind::Bec);
    let domain = ctx.domain();
    let (params, span) = match domain {
        Domain::Temporal => {
            let width = if flat { s.spectrum().width().unwrap_or(TAU * 1e9) } else { rect_width(s)? };
            (CoherenceParams::temporal(width), 10.0 * TAU / width)
        }
        Domain::Spatial => {
            let extent = if s.extent() > 0.0 { s.extent() } else if flat { 1e-3 } else { return usage("spatial HBT needs a source extent") };
            (CoherenceParams::spatial(extent, g.wavelength(), g.distance()), 10.0 * g.wavelength() * g.distance() / extent)
        }
    };
    let engine = ctx.cfg.mc_engine();
    let mut grid = ctx.grid(span);
    let mut mc: Option<Vec<Estimate>> = None;
    let mut mc_zero = None;
    if ctx.montecarlo() {
        match engine {
            McEngine::Events => {
                if domain != Domain::Temporal {
                    return usage("event streams give temporal correlations only");
                }
                let sim = ctx.simulation(specs.clone(), g, 2)?;
                let window = ctx.cfg.mc.window.unwrap_or(grid[grid.len() - 1]);
                let r = out.timed("montecarlo_s", || {
                    let ev = generate_events(&sim)?;
                    Ok(correlate(&ev, 2, window, ctx.cfg.mc.bins)?)
                })?;
                out.report.notes.extend(r.warnings.iter().cloned());
                grid = r.centers();
                mc_zero = Some(r.at_zero());
                mc = Some(estimates(&r.values, &r.stderr));
            }
            McEngine::Paths => {
                let config = Configuration::new(specs.clone(), detectors(2)?, g, Layout::Hbt)?;
                let mut pts: Vec<_> = grid.iter().map(|&x| pair_points(domain, g.distance(), x)).collect();
                pts.push(pair_points(domain, g.distance(), 0.0));
                let mut e = out.timed("montecarlo_s", || Ok(config.evaluate(&pts, &ctx.ensemble())?))?;
                let z = e.pop().expect("zero point");
                mc_zero = Some((z.value, z.stderr));
                mc = Some(e);
            }
            McEngine::Photons => return usage("the photons engine is for first-order build-up"),
        }
    }
    let distinguishable = ctx.cfg.rule == Rule::Distinguishable;
    if distinguishable {
        out.report.notes.push("paths forced distinguishable: the analytic reference is the uncorrelated background".into());
    }
    let analytic = if ctx.analytic() || mc.is_some() {
        let mut a = out.timed("analytic_s", || Ok(analytic::hbt_second_order(&kind, domain, &params, &grid)?))?;
        let mut zero = analytic::hbt_second_order(&kind, domain, &params, &[0.0])?.values[0];
        if distinguishable {
            a.values.iter_mut().for_each(|v| *v = 1.0);
            zero = 1.0;
        }
        record_zero(out, "g2", Some(zero), mc_zero);
        if !flat && !distinguishable {
            out.report.set("analytic_half_width", half_depth_width(&grid, &a.values, zero));
        }
        Some(a.values)
    } else {
        record_zero(out, "g2", None, mc_zero);
        None
    };
    compare(out, analytic.as_deref(), mc.as_deref());
    out.table = one_d_table(axis_name(domain), &grid, analytic.as_deref(), mc.as_deref());
    Ok(())
}

fn hom_pair(specs: &[SourceSpec]) -> Result<(HomPair, CoherenceParams, f64)> {
    use SourceKind as K;
    let kinds: Vec<&SourceKind> = specs.iter().map(|s| s.kind()).collect();
    let fermion = specs.iter().all(|s| s.statistics() == Statistics::Fermion);
    let temporal = |w: f64| (CoherenceParams::temporal(w), 10.0 * TAU / w);
    Ok(match kinds.as_slice() {
        [K::EntangledPairEmitter] => {
            let (p, s) = temporal(rect_width(&specs[0])?);
            (HomPair::EntangledPair, p, s)
        }
        [K::SinglePhoton, K::SinglePhoton] => {
            let (p, s) = temporal(rect_width(&specs[0])?);
            (if fermion { HomPair::FermionPair } else { HomPair::SinglePhotonPair }, p, s)
        }
        [K::Bec, K::Bec] => {
            let (p, s) = temporal(rect_width(&specs[0])?);
            (HomPair::BecPair, p, s)
        }
        [K::Laser, K::Laser] => {
            let detuning = (specs[0].spectrum().center() - specs[1].spectrum().center()).abs();
            if detuning == 0.0 {
                return usage("two-laser beating needs detuned lasers");
            }
            (HomPair::LaserLaser, CoherenceParams::temporal(detuning), 3.0 * TAU / detuning)
        }
        [K::Laser, K::Thermal] | [K::Thermal, K::Laser] => {
            let thermal = if matches!(kinds[0], K::Thermal) { &specs[0] } else { &specs[1] };
            let mut p = CoherenceParams::spatial(thermal.extent(), thermal.wavelength(), 1.0);
            p.separation = (specs[0].position() - specs[1].position()).abs();
            (HomPair::LaserThermal, p, 0.0)
        }
        _ => return usage("unsupported HOM pair (entangled pair, two single-photon sources, two lasers, laser + thermal, two BECs)"),
    })
}

fn hom(ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let specs = ctx.sources()?;
    let g = ctx.geometry(&specs)?;
    let (pair, mut params, mut span) = hom_pair(&specs)?;
    let domain = ctx.domain();
    if pair == HomPair::LaserThermal {
        if domain != Domain::Spatial {
            return usage("the laser + thermal closed form is spatial");
        }
        if !(params.extent > 0.0) {
            return usage("the thermal source needs an extent");
        }
        params.wavelength = g.wavelength();
        params.distance = g.distance();
        span = 10.0 * g.wavelength() * g.distance() / params.extent;
    } else if domain == Domain::Spatial {
        let extent = specs.iter().map(|s| s.extent()).fold(0.0, f64::max);
        if !(extent > 0.0) {
            return usage("spatial HOM needs a source extent");
        }
        params.extent = extent;
        params.wavelength = g.wavelength();
        params.distance = g.distance();
        span = 10.0 * g.wavelength() * g.distance() / extent;
    }
    let mut grid = ctx.grid(span);
    let mut mc = None;
    let mut mc_zero = None;
    if ctx.montecarlo() {
        match ctx.cfg.mc_engine() {
            McEngine::Events => {
                if pair != HomPair::LaserLaser {
                    return usage("event streams cover the two-laser beating case");
                }
                let sim = ctx.simulation(specs.clone(), g, 2)?;
                let window = ctx.cfg.mc.window.unwrap_or(grid[grid.len() - 1]);
                let r = out.timed("montecarlo_s", || Ok(correlate(&generate_events(&sim)?, 2, window, ctx.cfg.mc.bins)?))?;
                out.report.notes.extend(r.warnings.iter().cloned());
                grid = r.centers();
                mc_zero = Some(r.at_zero());
                mc = Some(estimates(&r.values, &r.stderr));
            }
            McEngine::Paths => {
                let config = Configuration::new(specs.clone(), detectors(2)?, g, Layout::Hom)?;
                let mut pts: Vec<_> = grid.iter().map(|&x| pair_points(domain, g.distance(), x)).collect();
                pts.push(pair_points(domain, g.distance(), 0.0));
                let mut e = out.timed("montecarlo_s", || Ok(config.evaluate(&pts, &ctx.ensemble())?))?;
                let z = e.pop().expect("zero point");
                mc_zero = Some((z.value, z.stderr));
                mc = Some(e);
            }
            McEngine::Photons => return usage("the photons engine is for first-order build-up"),
        }
    }
    if let (HomPair::LaserLaser, Some(m)) = (pair, &mc) {
        let values: Vec<f64> = m.iter().map(|e| e.value).collect();
        let fit = fit_visibility(&grid, &values, params.delta_omega);
        out.report.set("visibility_mc_fit", fit.visibility);
    }
    let analytic = if ctx.analytic() || mc.is_some() {
        let a = out.timed("analytic_s", || Ok(analytic::hom_second_order(pair, domain, &params, &grid)?))?;
        let zero = analytic::hom_second_order(pair, domain, &params, &[0.0])?.values[0];
        record_zero(out, "g2", Some(zero), mc_zero);
        if pair != HomPair::LaserLaser && pair != HomPair::LaserThermal {
            out.report.set("analytic_half_width", half_depth_width(&grid, &a.values, zero));
        }
        if pair == HomPair::LaserLaser {
            let (hi, lo) = (a.max(), a.min());
            out.report.set("visibility_analytic", (hi - lo) / (hi + lo));
        }
        Some(a.values)
    } else {
        record_zero(out, "g2", None, mc_zero);
        None
    };
    compare(out, analytic.as_deref(), mc.as_deref());
    out.table = one_d_table(axis_name(domain), &grid, analytic.as_deref(), mc.as_deref());
    Ok(())
}

fn sorted_positions(specs: &[SourceSpec]) -> Vec<f64> {
    let mut p: Vec<f64> = specs.iter().map(|s| s.position()).collect();
    p.sort_by(f64::total_cmp);
    p
}

fn multi_source(ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let specs = ctx.sources()?;
    if specs.len() != 3 {
        return usage("multi-source needs three sources");
    }
    let kind = if specs.iter().all(|s| matches!(s.kind(), SourceKind::SinglePhoton)) {
        MultiSourceKind::SinglePhoton
    } else if specs.iter().all(|s| matches!(s.kind(), SourceKind::Laser)) {
        MultiSourceKind::Laser
    } else {
        return usage("multi-source needs three single-photon sources or three lasers");
    };
    let g = ctx.geometry(&specs)?;
    let p = sorted_positions(&specs);
    let (d12, d23) = (p[1] - p[0], p[2] - p[1]);
    let grid = ctx.grid(3.0 * g.wavelength() * g.distance() / d12.max(d23));
    let a = out.timed("analytic_s", || Ok(analytic::multi_source_second_order(kind, d12, d23, &g, &grid)?))?;
    out.report.set("baseline_analytic", a.baseline);
    out.report.set("p_zero_analytic", analytic::multi_source_second_order(kind, d12, d23, &g, &[0.0])?.values[0]);
    let mut mc = None;
    if ctx.montecarlo() {
        let config = Configuration::new(specs.clone(), detectors(2)?, g, Layout::FreeSpace)?;
        let pts: Vec<_> = grid.iter().map(|&x| pair_points(Domain::Spatial, g.distance(), x)).collect();
        let e = out.timed("montecarlo_s", || Ok(config.evaluate(&pts, &ctx.ensemble())?))?;
        // engine values are normalized to the uncorrelated level; restore the printed scale
        mc = Some(
            e.into_iter()
                .map(|x| Estimate { value: x.value * a.baseline, stderr: x.stderr * a.baseline, ..x })
                .collect::<Vec<_>>(),
        );
    }
    let analytic = ctx.analytic().then_some(a.values.as_slice()).or(mc.as_ref().map(|_| a.values.as_slice()));
    compare(out, analytic, mc.as_deref());
    out.table = one_d_table("dx_m", &grid, analytic, mc.as_deref());
    Ok(())
}

fn subwavelength(ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let cfg = ctx.cfg;
    if cfg.sources.len() != 2 {
        return usage("subwavelength needs two sources");
    }
    let equal = cfg.params.phase_mode == crate::config::PhaseModeName::EqualFixed;
    let specs: Vec<SourceSpec> = cfg
        .sources
        .iter()
        .map(|s| s.build_with_group(if equal { Some(0) } else { s.phase_group }))
        .collect::<feyncoh::Result<_>>()?;
    let g = ctx.geometry(&specs)?;
    let d = (specs[1].position() - specs[0].position()).abs();
    let scan = cfg.params.scan.to_core();
    let sub = analytic::subwavelength_decomposition(scan, cfg.params.phase_mode.to_core(), d, &g)?;
    let q = TAU / sub.first_order_period;
    let grid = ctx.grid(2.0 * sub.first_order_period);
    let point = |s: f64| match scan {
        analytic::ScanMode::FixOne => (s, 0.0),
        analytic::ScanMode::SameDirection => (s, s),
        analytic::ScanMode::OppositeDirections => (s, -s),
    };
    let a: Vec<f64> = grid.iter().map(|&s| {
        let (x1, x2) = point(s);
        sub.eval(q, x1, x2) / 4.0
    }).collect();
    out.report.set("first_order_period", sub.first_order_period);
    out.report.set("effective_period", sub.effective_period);
    out.report.set("visibility_analytic", sub.visibility);
    let mut mc = None;
    if ctx.montecarlo() {
        let config = Configuration::new(specs.clone(), detectors(2)?, g, Layout::FreeSpace)?;
        let pts: Vec<_> = grid
            .iter()
            .map(|&s| {
                let (x1, x2) = point(s);
                vec![SpacetimePoint::new(x1, g.distance(), 0.0), SpacetimePoint::new(x2, g.distance(), 0.0)]
            })
            .collect();
        let e = out.timed("montecarlo_s", || Ok(config.evaluate(&pts, &ctx.ensemble())?))?;
        let values: Vec<f64> = e.iter().map(|x| x.value).collect();
        let fit = fit_visibility(&grid, &values, TAU / sub.effective_period);
        out.report.set("visibility_mc_fit", fit.visibility);
        mc = Some(e);
    }
    compare(out, Some(&a), mc.as_deref());
    out.table = one_d_table("s_m", &grid, Some(&a), mc.as_deref());
    Ok(())
}

/// How the path engine samples a third-order grid.
#[derive(Clone, Copy, PartialEq)]
enum Third {
    /// Grid is (1−2, 1−3) separations of one beam.
    Separations,
    /// Grid is (x₁, x₂) with x₃ fixed, or x₃ = x₂ when `None`.
    Positions(Option<f64>),
    AnalyticOnly,
}

fn third_order(ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let specs = ctx.sources()?;
    let g = ctx.geometry(&specs)?;
    let domain = ctx.domain();
    let Some(variant) = ctx.cfg.params.variant else { return usage("third-order needs params.variant") };
    let lambda_l = g.wavelength() * g.distance();
    let mut params = CoherenceParams::spatial(1.0, g.wavelength(), g.distance());
    let (config, span, engine) = match variant {
        ThirdVariant::Thermal | ThirdVariant::Fermion => {
            if specs.len() != 1 {
                return usage("thermal/fermion third order needs one source");
            }
            let s = &specs[0];
            let fermion = s.statistics() == Statistics::Fermion;
            if fermion != (variant == ThirdVariant::Fermion) {
                return usage("source statistics do not match params.variant");
            }
            let span = match domain {
                Domain::Temporal => {
                    params = CoherenceParams::temporal(rect_width(s)?);
                    3.0 * TAU / params.delta_omega
                }
                Domain::Spatial => {
                    if !(s.extent() > 0.0) {
                        return usage("spatial third order needs a source extent");
                    }
                    params.extent = s.extent();
                    3.0 * lambda_l / s.extent()
                }
            };
            let c = if fermion { ThirdOrderConfig::FermionHbt3(domain) } else { ThirdOrderConfig::ThermalHbt3(domain) };
            (c, span, Third::Separations)
        }
        ThirdVariant::SinglePhotonPlusLaser => {
            let sp = specs.iter().find(|s| matches!(s.kind(), SourceKind::SinglePhoton));
            let laser = specs.iter().find(|s| matches!(s.kind(), SourceKind::Laser));
            let (Some(sp), Some(laser), 2) = (sp, laser, specs.len()) else {
                return usage("single-photon-plus-laser needs one single-photon source and one laser");
            };
            let d = (sp.position() - laser.position()).abs();
            params.extent = d;
            (ThirdOrderConfig::SinglePhotonPlusLaser { i1: sp.intensity_weight(), i2: laser.intensity_weight() }, 2.0 * lambda_l / d, Third::AnalyticOnly)
        }
        ThirdVariant::ThreeSinglePhoton | ThirdVariant::ThreeSinglePhotonSlice => {
            if specs.len() != 3 || !specs.iter().all(|s| matches!(s.kind(), SourceKind::SinglePhoton)) {
                return usage("three single-photon sources are required");
            }
            let p = sorted_positions(&specs);
            let (d12, d23) = (p[1] - p[0], p[2] - p[1]);
            if variant == ThirdVariant::ThreeSinglePhotonSlice {
                if (d12 - d23).abs() > 1e-9 * d12 {
                    return usage("the slice requires equal source spacing");
                }
                params.extent = d12;
                (ThirdOrderConfig::ThreeSinglePhotonSlice, 2.0 * lambda_l / d12, Third::Positions(None))
            } else {
                (ThirdOrderConfig::ThreeSinglePhoton { d12, d23, x3: ctx.cfg.params.x3 }, 2.0 * lambda_l / d12.min(d23), Third::Positions(Some(ctx.cfg.params.x3)))
            }
        }
    };
    let grid = ctx.grid(span);
    let a = out.timed("analytic_s", || Ok(analytic::third_order_pattern(config, &params, &grid, &grid)?))?;
    let zero = analytic::third_order_pattern(config, &params, &[0.0], &[0.0])?.values[0];
    let far = analytic::third_order_pattern(config, &params, &[grid[grid.len() - 1]], &[grid[0]])?.values[0];
    out.report.set("far_corner_analytic", far);
    let mut mc = None;
    let mut mc_zero = None;
    if ctx.montecarlo() {
        if engine == Third::AnalyticOnly {
            out.report.notes.push(format!("{} is evaluated analytically only", variant.name()));
        } else {
            let layout = if engine == Third::Separations { Layout::Hbt } else { Layout::FreeSpace };
            let conf = Configuration::new(specs.clone(), detectors(3)?, g, layout)?;
            let l = g.distance();
            let at = |a: f64, b: f64| {
                let xs = match (engine, domain) {
                    (Third::Separations, Domain::Temporal) => return conf.points_at(&[0.0, -a, -b]),
                    (Third::Separations, Domain::Spatial) => [0.0, -a, -b],
                    (Third::Positions(x3), _) => [a, b, x3.unwrap_or(b)],
                    (Third::AnalyticOnly, _) => unreachable!(),
                };
                xs.iter().map(|&x| SpacetimePoint::new(x, l, 0.0)).collect::<Vec<_>>()
            };
            let mut pts = Vec::with_capacity(grid.len() * grid.len() + 1);
            for &x in &grid {
                for &y in &grid {
                    pts.push(at(x, y));
                }
            }
            pts.push(at(0.0, 0.0));
            let mut e = out.timed("montecarlo_s", || Ok(conf.evaluate(&pts, &ctx.ensemble())?))?;
            let z = e.pop().expect("zero point");
            mc_zero = Some((z.value, z.stderr));
            mc = Some(e);
        }
    }
    record_zero(out, "g3", Some(zero), mc_zero);
    compare(out, Some(&a.values), mc.as_deref());
    let (c1, c2) = match domain {
        Domain::Temporal if engine == Third::Separations => ("tau12_s", "tau13_s"),
        _ if engine == Third::Separations => ("dx12_m", "dx13_m"),
        _ => ("x1_m", "x2_m"),
    };
    let mut t = DataTable::new(&[c1, c2, "analytic", "mc_mean", "mc_stderr"]);
    for (i, &x) in grid.iter().enumerate() {
        for (j, &y) in grid.iter().enumerate() {
            let k = i * grid.len() + j;
            let (m, s) = mc.as_ref().map_or((f64::NAN, f64::NAN), |v| (v[k].value, v[k].stderr));
            t.rows.push(vec![x, y, a.values[k], m, s]);
        }
    }
    out.table = t;
    Ok(())
}

fn family(s: &SourceSpec) -> Result<CoherenceFamily> {
    Ok(match s.kind() {
        SourceKind::Thermal => CoherenceFamily::Thermal,
        SourceKind::ColdAtomCloud if s.statistics() == Statistics::Fermion => CoherenceFamily::Fermion,
        SourceKind::ColdAtomCloud => CoherenceFamily::Thermal,
        SourceKind::Laser | SourceKind::Bec => CoherenceFamily::Coherent,
        SourceKind::SuperbunchingCascade { stages } => CoherenceFamily::Cascade { stages: *stages },
        k => return usage(format!("no zero-delay closed form for {} sources", k.name())),
    })
}

fn degree(ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let specs = ctx.sources()?;
    if specs.is_empty() {
        return usage("degree needs at least one source");
    }
    let n = ctx.cfg.params.order;
    let mut t = DataTable::new(&["source", "analytic", "mc_mean", "mc_stderr"]);
    let mut analytic_values = Vec::new();
    let mut mc_values = Vec::new();
    for (i, s) in specs.iter().enumerate() {
        let a = analytic::degree_at_zero(family(s)?, n)?;
        out.report.set(format!("g{n}_zero_analytic_{i}"), a);
        analytic_values.push(a);
        let (m, se) = if ctx.montecarlo() {
            let g = Geometry::new(ctx.cfg.distance, s.wavelength())?;
            let conf = Configuration::new(vec![s.clone()], detectors(n)?, g, Layout::Hbt)?;
            let pts = conf.points_at(&vec![0.0; n]);
            let e = out.timed("montecarlo_s", || Ok(conf.probability(&pts, &ctx.ensemble())?))?;
            out.report.set(format!("g{n}_zero_mc_{i}"), e.value);
            out.report.set(format!("g{n}_zero_mc_stderr_{i}"), e.stderr);
            (e.value, e.stderr)
        } else {
            (f64::NAN, f64::NAN)
        };
        mc_values.push(m);
        t.rows.push(vec![i as f64, a, m, se]);
    }
    if specs.len() == 2 {
        if analytic_values[1] != 0.0 {
            out.report.set("ratio_analytic", analytic_values[0] / analytic_values[1]);
        }
        if mc_values[1].is_finite() && mc_values[1] != 0.0 {
            out.report.set("ratio_mc", mc_values[0] / mc_values[1]);
        }
    }
    out.table = t;
    Ok(())
}

fn zero_phases(way: &feyncoh::paths::Way) -> PhaseAssignment {
    let mut m = PhaseAssignment::new();
    for p in &way.paths {
        for s in p.phase_symbols(way) {
            m.insert(s, 0.0);
        }
    }
    m
}

fn oracle(ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let count = ctx.cfg.samples;
    let mono = Spectrum::monochromatic(3.0e15)?;
    let boson = SourceSpec::builder(SourceKind::Thermal, mono).build()?;
    let fermion = SourceSpec::builder(SourceKind::ColdAtomCloud, mono).statistics(Statistics::Fermion).particle(1.0e-25, 0.01).build()?;
    let mut t = DataTable::new(&["order", "matrices", "max_error_boson", "max_error_fermion"]);
    let (mut worst_b, mut worst_f) = (0.0f64, 0.0f64);
    for n in 2..=4usize {
        let wb = enumerate_ways(std::slice::from_ref(&boson), n, n, Layout::FreeSpace)?.remove(0);
        let wf = enumerate_ways(std::slice::from_ref(&fermion), n, n, Layout::FreeSpace)?.remove(0);
        let norm = ((1..=n).product::<usize>() as f64).sqrt();
        let (pb, pf) = (zero_phases(&wb), zero_phases(&wf));
        let (mut eb, mut ef) = (0.0f64, 0.0f64);
        for i in 0..count {
            let mut rng = feyncoh::rng::substream(ctx.cfg.seed, &[n as u64, i as u64]);
            let k: Vec<Vec<Complex64>> = (0..n)
                .map(|_| (0..n).map(|_| Complex64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0)).collect())
                .collect();
            let ab = way_amplitude(&wb, &pb, BS_REFLECTION_PHASE, |leg| k[leg.emission][leg.detector])? * norm;
            let af = way_amplitude(&wf, &pf, BS_REFLECTION_PHASE, |leg| k[leg.emission][leg.detector])? * norm;
            eb = eb.max((ab - boson_path_oracle(&k)?).norm());
            ef = ef.max((af - fermion_path_oracle(&k)?).norm());
        }
        t.rows.push(vec![n as f64, count as f64, eb, ef]);
        worst_b = worst_b.max(eb);
        worst_f = worst_f.max(ef);
    }
    out.report.set("max_error_boson", worst_b);
    out.report.set("max_error_fermion", worst_f);
    out.table = t;
    Ok(())
}

fn degeneracy(ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let p = &ctx.cfg.params;
    let Some(nu) = p.nu else { return usage("degeneracy needs params.nu") };
    let mut t = DataTable::new(&["nu_hz", "delta_blackbody", "delta_laser"]);
    let mut row = vec![nu, f64::NAN, f64::NAN];
    if let Some(temp) = p.temperature {
        let d = feyncoh::coherence::degeneracy_factor_blackbody(nu, temp)?;
        out.report.set("delta_blackbody", d.value);
        if d.underflow {
            out.report.notes.push("h·nu/(k_B·T) > 700: blackbody degeneracy flushed to zero".into());
        }
        row[1] = d.value;
    }
    if let (Some(power), Some(lw)) = (p.power, p.linewidth) {
        let d = feyncoh::coherence::degeneracy_factor_laser(power, nu, lw)?;
        out.report.set("delta_laser", d);
        row[2] = d;
    }
    if row[1].is_nan() && row[2].is_nan() {
        return usage("degeneracy needs params.temperature and/or params.power with params.linewidth");
    }
    t.rows.push(row);
    out.table = t;
    Ok(())
}
