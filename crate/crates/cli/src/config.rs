//! Experiment configuration files.
//!
//! A configuration is a TOML document. Dimensional values are strings with a
//! unit suffix (`"2 ns"`, `"500 nm"`, `"1 THz"`). Parsing reports every
//! problem it finds, each with the line it occurred on.

use std::fmt;
use std::path::Path;

use feyncoh::analytic::{MzEnvelope, PhaseMode, ScanMode};
use feyncoh::coherence::{GammaTable, PhaseModel, SourceKind, SourceSpec, Spectrum, Statistics};
use toml_edit::{Document, Item, Table, Value};

use crate::units::{format_quantity, parse_quantity, Quantity};

macro_rules! named {
    ($(#[$m:meta])* $name:ident { $($variant:ident = $text:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const NAMES: &'static [&'static str] = &[$($text),+];

            pub fn name(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }

            pub fn from_name(s: &str) -> Option<Self> {
                match s { $($text => Some($name::$variant),)+ _ => None }
            }
        }
    };
}

named!(Mode { Analytic = "analytic", MonteCarlo = "montecarlo", Both = "both" });

named!(Experiment {
    Mz = "mz",
    FirstOrder = "first-order",
    Hbt = "hbt",
    Hom = "hom",
    MultiSource = "multi-source",
    Subwavelength = "subwavelength",
    ThirdOrder = "third-order",
    Degree = "degree",
    Oracle = "oracle",
    Degeneracy = "degeneracy",
});

named!(DomainName { Temporal = "temporal", Spatial = "spatial" });

named!(Rule { Feynman = "feynman", Distinguishable = "distinguishable" });

named!(McEngine { Paths = "paths", Events = "events", Photons = "photons" });

named!(KindName {
    Thermal = "thermal",
    Laser = "laser",
    SinglePhoton = "single-photon",
    Cascade = "cascade",
    Modulated = "modulated",
    EntangledPair = "entangled-pair",
    ColdAtoms = "cold-atoms",
    Bec = "bec",
});

named!(SpectrumShape { Monochromatic = "monochromatic", Rectangular = "rectangular", Gaussian = "gaussian", Lorentzian = "lorentzian" });

named!(StatisticsName { Boson = "boson", Fermion = "fermion" });

named!(PhaseChoice { Coherent = "coherent", Random = "random" });

named!(EnvelopeName { Verbatim = "verbatim", Standard = "standard" });

named!(ScanName { FixOne = "fix-one", SameDirection = "same-direction", OppositeDirections = "opposite-directions" });

named!(PhaseModeName { EqualFixed = "equal-fixed", RandomRelative = "random-relative" });

named!(ThirdVariant {
    Thermal = "thermal",
    Fermion = "fermion",
    SinglePhotonPlusLaser = "single-photon-plus-laser",
    ThreeSinglePhoton = "three-single-photon",
    ThreeSinglePhotonSlice = "three-single-photon-slice",
});

impl Mode {
    pub fn analytic(self) -> bool {
        self != Mode::MonteCarlo
    }
    pub fn montecarlo(self) -> bool {
        self != Mode::Analytic
    }
}

impl EnvelopeName {
    pub fn to_core(self) -> MzEnvelope {
        match self {
            EnvelopeName::Verbatim => MzEnvelope::Verbatim,
            EnvelopeName::Standard => MzEnvelope::Standard,
        }
    }
}

impl ScanName {
    pub fn to_core(self) -> ScanMode {
        match self {
            ScanName::FixOne => ScanMode::FixOne,
            ScanName::SameDirection => ScanMode::SameDirection,
            ScanName::OppositeDirections => ScanMode::OppositeDirections,
        }
    }
}

impl PhaseModeName {
    pub fn to_core(self) -> PhaseMode {
        match self {
            PhaseModeName::EqualFixed => PhaseMode::EqualFixed,
            PhaseModeName::RandomRelative => PhaseMode::RandomRelative,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceConfig {
    pub kind: KindName,
    /// Cascade stages.
    pub stages: u32,
    pub spectrum: SpectrumShape,
    /// Centre angular frequency ω₀, rad/s.
    pub omega0: f64,
    /// Spectral width Δω (σ for Gaussian, Γ for Lorentzian), rad/s.
    pub delta_omega: Option<f64>,
    pub position: f64,
    pub extent: f64,
    pub intensity: f64,
    pub statistics: StatisticsName,
    pub phase_model: Option<PhaseChoice>,
    pub coherence_time: Option<f64>,
    pub mass: Option<f64>,
    pub speed: Option<f64>,
    pub phase_group: Option<usize>,
    /// Modulated sources: γ(0) − 1 and decay time of γ.
    pub gamma_excess: Option<f64>,
    pub gamma_tau: Option<f64>,
}

impl SourceConfig {
    pub fn spectrum(&self) -> feyncoh::Result<Spectrum> {
        let w = || self.delta_omega.unwrap_or(0.0);
        match self.spectrum {
            SpectrumShape::Monochromatic => Spectrum::monochromatic(self.omega0),
            SpectrumShape::Rectangular => Spectrum::rectangular(self.omega0, w()),
            SpectrumShape::Gaussian => Spectrum::gaussian(self.omega0, w()),
            SpectrumShape::Lorentzian => Spectrum::lorentzian(self.omega0, w()),
        }
    }

    pub fn core_kind(&self) -> feyncoh::Result<SourceKind> {
        Ok(match self.kind {
            KindName::Thermal => SourceKind::Thermal,
            KindName::Laser => SourceKind::Laser,
            KindName::SinglePhoton => SourceKind::SinglePhoton,
            KindName::Cascade => SourceKind::SuperbunchingCascade { stages: self.stages },
            KindName::Modulated => SourceKind::SuperbunchingModulated {
                gamma: GammaTable::exponential(self.gamma_excess.unwrap_or(1.0), self.gamma_tau.unwrap_or(1e-9), 256)?,
            },
            KindName::EntangledPair => SourceKind::EntangledPairEmitter,
            KindName::ColdAtoms => SourceKind::ColdAtomCloud,
            KindName::Bec => SourceKind::Bec,
        })
    }

    pub fn build(&self) -> feyncoh::Result<SourceSpec> {
        self.build_with_group(self.phase_group)
    }

    pub fn build_with_group(&self, group: Option<usize>) -> feyncoh::Result<SourceSpec> {
        let spectrum = self.spectrum()?;
        let mut b = SourceSpec::builder(self.core_kind()?, spectrum)
            .position(self.position)
            .extent(self.extent)
            .intensity(self.intensity)
            .statistics(match self.statistics {
                StatisticsName::Boson => Statistics::Boson,
                StatisticsName::Fermion => Statistics::Fermion,
            });
        if let Some(choice) = self.phase_model {
            b = b.phase_model(match choice {
                PhaseChoice::Random => PhaseModel::RandomPerPhoton,
                PhaseChoice::Coherent => PhaseModel::CoherentPhase {
                    coherence_time: self.coherence_time.unwrap_or(spectrum.coherence_time()),
                },
            });
        }
        if self.mass.is_some() || self.speed.is_some() {
            b = b.particle(self.mass.unwrap_or(0.0), self.speed.unwrap_or(0.0));
        }
        if let Some(g) = group {
            b = b.phase_group(g);
        }
        b.build()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub envelope: EnvelopeName,
    /// Initial source phases, rad.
    pub phases: Vec<f64>,
    /// Photons detected while both single-photon sources emitted.
    pub simultaneous: usize,
    pub long_average: bool,
    pub variant: Option<ThirdVariant>,
    /// Fixed third-detector position, m.
    pub x3: f64,
    pub scan: ScanName,
    pub phase_mode: PhaseModeName,
    pub order: usize,
    pub nu: Option<f64>,
    pub temperature: Option<f64>,
    pub power: Option<f64>,
    pub linewidth: Option<f64>,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            envelope: EnvelopeName::Verbatim,
            phases: Vec::new(),
            simultaneous: 0,
            long_average: false,
            variant: None,
            x3: 0.0,
            scan: ScanName::FixOne,
            phase_mode: PhaseModeName::RandomRelative,
            order: 2,
            nu: None,
            temperature: None,
            power: None,
            linewidth: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    /// Default depends on the experiment.
    pub engine: Option<McEngine>,
    pub photons: usize,
    pub duration: Option<f64>,
    /// Detection rate per detector, 1/s.
    pub rate: f64,
    pub window: Option<f64>,
    pub bins: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            engine: None,
            photons: 10_000,
            duration: None,
            rate: 1.0e7,
            window: None,
            bins: 101,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub mode: Mode,
    pub experiment: Experiment,
    pub domain: DomainName,
    pub seed: u64,
    pub samples: usize,
    pub out_dir: Option<String>,
    pub rule: Rule,
    pub distance: f64,
    /// Defaults to the first source's wavelength.
    pub wavelength: Option<f64>,
    /// Grid half-width; defaults to ten coherence units or fringe periods.
    pub half_span: Option<f64>,
    pub points: usize,
    pub sources: Vec<SourceConfig>,
    pub params: Params,
    pub mc: McConfig,
}

impl ExperimentConfig {
    /// Unit of the grid coordinate.
    pub fn grid_quantity(&self) -> Quantity {
        grid_quantity(self.experiment, self.domain)
    }

    pub fn mc_engine(&self) -> McEngine {
        self.mc.engine.unwrap_or(match self.experiment {
            Experiment::FirstOrder => McEngine::Photons,
            _ => McEngine::Paths,
        })
    }
}

fn grid_quantity(experiment: Experiment, domain: DomainName) -> Quantity {
    match experiment {
        Experiment::Mz => Quantity::Time,
        Experiment::FirstOrder | Experiment::MultiSource | Experiment::Subwavelength => Quantity::Length,
        _ => match domain {
            DomainName::Temporal => Quantity::Time,
            DomainName::Spatial => Quantity::Length,
        },
    }
}

/// One problem found while reading a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.key, self.message),
            None => write!(f, "{}: {}", self.key, self.message),
        }
    }
}

struct Reader<'a> {
    raw: &'a str,
    errors: Vec<ConfigError>,
}

impl<'a> Reader<'a> {
    fn line(&self, span: Option<std::ops::Range<usize>>) -> Option<usize> {
        span.map(|s| self.raw[..s.start.min(self.raw.len())].matches('\n').count() + 1)
    }

    fn key_line(&self, t: &Table, key: &str) -> Option<usize> {
        t.get_key_value(key).and_then(|(k, _)| self.line(k.span()))
    }

    fn error(&mut self, t: &Table, path: &str, key: &str, message: impl Into<String>) {
        let line = self.key_line(t, key).or_else(|| self.line(t.span()));
        self.errors.push(ConfigError { line, key: join(path, key), message: message.into() });
    }

    fn check_keys(&mut self, t: &Table, path: &str, allowed: &[&str]) {
        for (k, _) in t.iter() {
            if !allowed.contains(&k) {
                self.error(t, path, k, format!("unknown key (expected one of: {})", allowed.join(", ")));
            }
        }
    }

    fn value<'t>(&mut self, t: &'t Table, path: &str, key: &str) -> Option<&'t Value> {
        match t.get(key) {
            None => None,
            Some(Item::Value(v)) => Some(v),
            Some(_) => {
                self.error(t, path, key, "expected a value, not a table");
                None
            }
        }
    }

    fn string(&mut self, t: &Table, path: &str, key: &str) -> Option<String> {
        let v = self.value(t, path, key)?;
        match v.as_str() {
            Some(s) => Some(s.to_string()),
            None => {
                self.error(t, path, key, "expected a string");
                None
            }
        }
    }

    fn quantity(&mut self, t: &Table, path: &str, key: &str, q: Quantity) -> Option<f64> {
        let v = self.value(t, path, key)?;
        let Some(s) = v.as_str() else {
            self.error(t, path, key, format!("expected a {q} with a unit, e.g. \"1 {}\"", q.canonical()));
            return None;
        };
        match parse_quantity(s, q) {
            Ok(x) => Some(x),
            Err(e) => {
                self.error(t, path, key, e);
                None
            }
        }
    }

    fn positive(&mut self, t: &Table, path: &str, key: &str, q: Quantity) -> Option<f64> {
        let x = self.quantity(t, path, key, q)?;
        if x > 0.0 {
            Some(x)
        } else {
            self.error(t, path, key, format!("must be > 0 (got {x:e} {})", q.canonical()));
            None
        }
    }

    fn non_negative(&mut self, t: &Table, path: &str, key: &str, q: Quantity) -> Option<f64> {
        let x = self.quantity(t, path, key, q)?;
        if x >= 0.0 {
            Some(x)
        } else {
            self.error(t, path, key, format!("must be >= 0 (got {x:e} {})", q.canonical()));
            None
        }
    }

    fn float(&mut self, t: &Table, path: &str, key: &str) -> Option<f64> {
        let v = self.value(t, path, key)?;
        match v.as_float().or_else(|| v.as_integer().map(|i| i as f64)) {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                self.error(t, path, key, "expected a finite number");
                None
            }
        }
    }

    fn uint(&mut self, t: &Table, path: &str, key: &str, min: u64) -> Option<u64> {
        let v = self.value(t, path, key)?;
        match v.as_integer() {
            Some(i) if i >= min as i64 => Some(i as u64),
            Some(i) => {
                self.error(t, path, key, format!("must be >= {min} (got {i})"));
                None
            }
            None => {
                self.error(t, path, key, "expected an integer");
                None
            }
        }
    }

    fn boolean(&mut self, t: &Table, path: &str, key: &str) -> Option<bool> {
        let v = self.value(t, path, key)?;
        match v.as_bool() {
            Some(b) => Some(b),
            None => {
                self.error(t, path, key, "expected true or false");
                None
            }
        }
    }

    fn named<E>(&mut self, t: &Table, path: &str, key: &str, names: &[&str], parse: fn(&str) -> Option<E>) -> Option<E> {
        let s = self.string(t, path, key)?;
        match parse(&s) {
            Some(e) => Some(e),
            None => {
                self.error(t, path, key, format!("\"{s}\" is not one of: {}", names.join(", ")));
                None
            }
        }
    }

    fn section<'t>(&mut self, root: &'t Table, key: &str) -> Option<&'t Table> {
        match root.get(key) {
            None => None,
            Some(Item::Table(t)) => Some(t),
            Some(_) => {
                self.error(root, "", key, "expected a [section]");
                None
            }
        }
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

const TOP_KEYS: &[&str] = &[
    "name", "mode", "experiment", "domain", "seed", "samples", "out_dir", "rule", "geometry", "grid", "sources", "params", "montecarlo",
];
const SOURCE_KEYS: &[&str] = &[
    "kind", "stages", "spectrum", "omega0", "delta_omega", "position", "extent", "intensity", "statistics", "phase_model", "coherence_time", "mass",
    "speed", "phase_group", "gamma_excess", "gamma_tau",
];
const PARAM_KEYS: &[&str] = &[
    "envelope", "phases", "simultaneous", "long_average", "variant", "x3", "scan", "phase_mode", "order", "nu", "temperature", "power", "linewidth",
];
const MC_KEYS: &[&str] = &["engine", "photons", "duration", "rate", "window", "bins"];

/// Parses a configuration file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig, Vec<ConfigError>> {
    let text = std::fs::read(path).map_err(|e| vec![ConfigError { line: None, key: path.display().to_string(), message: e.to_string() }])?;
    let text = String::from_utf8(text).map_err(|_| vec![ConfigError { line: None, key: path.display().to_string(), message: "file is not UTF-8".into() }])?;
    parse_str(&text)
}

/// Parses configuration text, collecting every error.
pub fn parse_str(text: &str) -> Result<ExperimentConfig, Vec<ConfigError>> {
    let doc = Document::parse(text).map_err(|e| {
        let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        vec![ConfigError { line, key: "<syntax>".into(), message: e.message().to_string() }]
    })?;
    let root = doc.as_table();
    let mut r = Reader { raw: text, errors: Vec::new() };
    r.check_keys(root, "", TOP_KEYS);

    let name = r.string(root, "", "name");
    if name.is_none() && root.get("name").is_none() {
        r.error(root, "", "name", "missing required key");
    }
    let experiment = r.named(root, "", "experiment", Experiment::NAMES, Experiment::from_name);
    if experiment.is_none() && root.get("experiment").is_none() {
        r.error(root, "", "experiment", "missing required key");
    }
    let mode = r.named(root, "", "mode", Mode::NAMES, Mode::from_name).unwrap_or(Mode::Both);
    let domain = r.named(root, "", "domain", DomainName::NAMES, DomainName::from_name).unwrap_or(DomainName::Temporal);
    let seed = r.uint(root, "", "seed", 0).unwrap_or(0);
    let samples = r.uint(root, "", "samples", 1).unwrap_or(100_000) as usize;
    let out_dir = r.string(root, "", "out_dir");
    let rule = r.named(root, "", "rule", Rule::NAMES, Rule::from_name).unwrap_or(Rule::Feynman);

    let (mut distance, mut wavelength) = (1.0, None);
    if let Some(g) = r.section(root, "geometry") {
        r.check_keys(g, "geometry", &["distance", "wavelength"]);
        distance = r.positive(g, "geometry", "distance", Quantity::Length).unwrap_or(distance);
        wavelength = r.positive(g, "geometry", "wavelength", Quantity::Length);
    }

    let (mut half_span, mut points) = (None, 512usize);
    let gq = grid_quantity(experiment.unwrap_or(Experiment::Hbt), domain);
    if let Some(g) = r.section(root, "grid") {
        r.check_keys(g, "grid", &["half_span", "points"]);
        half_span = r.positive(g, "grid", "half_span", gq);
        points = r.uint(g, "grid", "points", 2).map_or(points, |p| p as usize);
    }

    let mut sources = Vec::new();
    match root.get("sources") {
        None => {}
        Some(Item::ArrayOfTables(arr)) => {
            for (i, t) in arr.iter().enumerate() {
                if let Some(s) = read_source(&mut r, t, &format!("sources[{i}]")) {
                    sources.push(s);
                }
            }
        }
        Some(_) => r.error(root, "", "sources", "expected [[sources]] tables"),
    }

    let mut params = Params::default();
    if let Some(p) = r.section(root, "params") {
        let path = "params";
        r.check_keys(p, path, PARAM_KEYS);
        params.envelope = r.named(p, path, "envelope", EnvelopeName::NAMES, EnvelopeName::from_name).unwrap_or(params.envelope);
        if let Some(v) = r.value(p, path, "phases") {
            match v.as_array() {
                Some(a) => {
                    let parsed: Option<Vec<f64>> = a.iter().map(|x| x.as_float().or_else(|| x.as_integer().map(|i| i as f64))).collect();
                    match parsed {
                        Some(ph) => params.phases = ph,
                        None => r.error(p, path, "phases", "expected an array of numbers (radians)"),
                    }
                }
                None => r.error(p, path, "phases", "expected an array of numbers (radians)"),
            }
        }
        params.simultaneous = r.uint(p, path, "simultaneous", 0).map_or(0, |v| v as usize);
        params.long_average = r.boolean(p, path, "long_average").unwrap_or(false);
        params.variant = r.named(p, path, "variant", ThirdVariant::NAMES, ThirdVariant::from_name);
        params.x3 = r.quantity(p, path, "x3", Quantity::Length).unwrap_or(0.0);
        params.scan = r.named(p, path, "scan", ScanName::NAMES, ScanName::from_name).unwrap_or(params.scan);
        params.phase_mode = r.named(p, path, "phase_mode", PhaseModeName::NAMES, PhaseModeName::from_name).unwrap_or(params.phase_mode);
        params.order = r.uint(p, path, "order", 1).map_or(params.order, |v| v as usize);
        if params.order > 4 {
            r.error(p, path, "order", format!("orders above 4 are not supported (got {})", params.order));
        }
        params.nu = r.positive(p, path, "nu", Quantity::Frequency);
        params.temperature = r.positive(p, path, "temperature", Quantity::Temperature);
        params.power = r.positive(p, path, "power", Quantity::Power);
        params.linewidth = r.positive(p, path, "linewidth", Quantity::Frequency);
    }

    let mut mc = McConfig::default();
    if let Some(m) = r.section(root, "montecarlo") {
        let path = "montecarlo";
        r.check_keys(m, path, MC_KEYS);
        mc.engine = r.named(m, path, "engine", McEngine::NAMES, McEngine::from_name);
        mc.photons = r.uint(m, path, "photons", 1).map_or(mc.photons, |v| v as usize);
        mc.duration = r.positive(m, path, "duration", Quantity::Time);
        mc.rate = r.positive(m, path, "rate", Quantity::Rate).unwrap_or(mc.rate);
        mc.window = r.positive(m, path, "window", Quantity::Time);
        mc.bins = r.uint(m, path, "bins", 8).map_or(mc.bins, |v| v as usize);
    }

    if r.errors.is_empty() {
        let cfg = ExperimentConfig {
            name: name.unwrap_or_default(),
            mode,
            experiment: experiment.expect("checked"),
            domain,
            seed,
            samples,
            out_dir,
            rule,
            distance,
            wavelength,
            half_span,
            points,
            sources,
            params,
            mc,
        };
        check_sources(&mut r, root, &cfg);
        if r.errors.is_empty() {
            return Ok(cfg);
        }
    }
    Err(r.errors)
}

fn read_source(r: &mut Reader, t: &Table, path: &str) -> Option<SourceConfig> {
    r.check_keys(t, path, SOURCE_KEYS);
    let before = r.errors.len();
    let kind = r.named(t, path, "kind", KindName::NAMES, KindName::from_name);
    if t.get("kind").is_none() {
        r.error(t, path, "kind", "missing required key");
    }
    let stages = r.uint(t, path, "stages", 1).map_or(1, |v| v as u32);
    let spectrum = r.named(t, path, "spectrum", SpectrumShape::NAMES, SpectrumShape::from_name).unwrap_or(SpectrumShape::Monochromatic);
    let omega0 = r.positive(t, path, "omega0", Quantity::AngularFrequency);
    if t.get("omega0").is_none() {
        r.error(t, path, "omega0", "missing required key");
    }
    let delta_omega = r.positive(t, path, "delta_omega", Quantity::AngularFrequency);
    if spectrum != SpectrumShape::Monochromatic && t.get("delta_omega").is_none() {
        r.error(t, path, "delta_omega", format!("required for a {} spectrum", spectrum.name()));
    }
    let position = r.quantity(t, path, "position", Quantity::Length).unwrap_or(0.0);
    let extent = r.non_negative(t, path, "extent", Quantity::Length).unwrap_or(0.0);
    let intensity = match r.float(t, path, "intensity") {
        Some(x) if x < 0.0 => {
            r.error(t, path, "intensity", "must be >= 0");
            1.0
        }
        Some(x) => x,
        None => 1.0,
    };
    let statistics = r.named(t, path, "statistics", StatisticsName::NAMES, StatisticsName::from_name).unwrap_or(StatisticsName::Boson);
    let phase_model = r.named(t, path, "phase_model", PhaseChoice::NAMES, PhaseChoice::from_name);
    let coherence_time = r.positive(t, path, "coherence_time", Quantity::Time);
    let mass = r.positive(t, path, "mass", Quantity::Mass);
    let speed = r.positive(t, path, "speed", Quantity::Speed);
    let phase_group = r.uint(t, path, "phase_group", 0).map(|v| v as usize);
    let gamma_excess = r.float(t, path, "gamma_excess");
    if gamma_excess.is_some_and(|g| g <= 0.0) {
        r.error(t, path, "gamma_excess", "must be > 0");
    }
    let gamma_tau = r.positive(t, path, "gamma_tau", Quantity::Time);
    if r.errors.len() > before {
        return None;
    }
    Some(SourceConfig {
        kind: kind?,
        stages,
        spectrum,
        omega0: omega0?,
        delta_omega,
        position,
        extent,
        intensity,
        statistics,
        phase_model,
        coherence_time,
        mass,
        speed,
        phase_group,
        gamma_excess,
        gamma_tau,
    })
}

/// Builds every source so that core invariants (phase-model rules, spectral
/// limits, particle parameters) are reported at parse time.
fn check_sources(r: &mut Reader, root: &Table, cfg: &ExperimentConfig) {
    let Some(Item::ArrayOfTables(arr)) = root.get("sources") else { return };
    for (i, (s, t)) in cfg.sources.iter().zip(arr.iter()).enumerate() {
        if let Err(e) = s.build() {
            let msg = e.to_string();
            let key = if msg.contains("phase model") {
                "phase_model"
            } else if msg.contains("mass") || msg.contains("speed") {
                "mass"
            } else if msg.contains("width") || msg.contains("omega") {
                "delta_omega"
            } else if msg.contains("fermion") {
                "statistics"
            } else {
                "kind"
            };
            let key = if t.contains_key(key) { key } else { "kind" };
            r.error(t, &format!("sources[{i}]"), key, msg);
        }
    }
}

/// Canonical text form; [`parse_str`] of the result yields an equal config.
pub fn to_toml(cfg: &ExperimentConfig) -> String {
    let mut out = String::new();
    let q = |v: f64, u: Quantity| format!("\"{}\"", format_quantity(v, u));
    let s = |v: &str| Value::from(v).to_string().trim().to_string();
    out += &format!("name = {}\n", s(&cfg.name));
    out += &format!("mode = \"{}\"\n", cfg.mode.name());
    out += &format!("experiment = \"{}\"\n", cfg.experiment.name());
    out += &format!("domain = \"{}\"\n", cfg.domain.name());
    out += &format!("seed = {}\n", cfg.seed);
    out += &format!("samples = {}\n", cfg.samples);
    if let Some(d) = &cfg.out_dir {
        out += &format!("out_dir = {}\n", s(d));
    }
    out += &format!("rule = \"{}\"\n", cfg.rule.name());

    out += "\n[geometry]\n";
    out += &format!("distance = {}\n", q(cfg.distance, Quantity::Length));
    if let Some(w) = cfg.wavelength {
        out += &format!("wavelength = {}\n", q(w, Quantity::Length));
    }

    out += "\n[grid]\n";
    if let Some(h) = cfg.half_span {
        out += &format!("half_span = {}\n", q(h, cfg.grid_quantity()));
    }
    out += &format!("points = {}\n", cfg.points);

    for src in &cfg.sources {
        out += "\n[[sources]]\n";
        out += &format!("kind = \"{}\"\n", src.kind.name());
        out += &format!("stages = {}\n", src.stages);
        out += &format!("spectrum = \"{}\"\n", src.spectrum.name());
        out += &format!("omega0 = {}\n", q(src.omega0, Quantity::AngularFrequency));
        if let Some(w) = src.delta_omega {
            out += &format!("delta_omega = {}\n", q(w, Quantity::AngularFrequency));
        }
        out += &format!("position = {}\n", q(src.position, Quantity::Length));
        out += &format!("extent = {}\n", q(src.extent, Quantity::Length));
        out += &format!("intensity = {:e}\n", src.intensity);
        out += &format!("statistics = \"{}\"\n", src.statistics.name());
        if let Some(p) = src.phase_model {
            out += &format!("phase_model = \"{}\"\n", p.name());
        }
        if let Some(t) = src.coherence_time {
            out += &format!("coherence_time = {}\n", q(t, Quantity::Time));
        }
        if let Some(m) = src.mass {
            out += &format!("mass = {}\n", q(m, Quantity::Mass));
        }
        if let Some(v) = src.speed {
            out += &format!("speed = {}\n", q(v, Quantity::Speed));
        }
        if let Some(g) = src.phase_group {
            out += &format!("phase_group = {g}\n");
        }
        if let Some(x) = src.gamma_excess {
            out += &format!("gamma_excess = {x:e}\n");
        }
        if let Some(t) = src.gamma_tau {
            out += &format!("gamma_tau = {}\n", q(t, Quantity::Time));
        }
    }

    let p = &cfg.params;
    out += "\n[params]\n";
    out += &format!("envelope = \"{}\"\n", p.envelope.name());
    let phases: Vec<String> = p.phases.iter().map(|x| format!("{x:e}")).collect();
    out += &format!("phases = [{}]\n", phases.join(", "));
    out += &format!("simultaneous = {}\n", p.simultaneous);
    out += &format!("long_average = {}\n", p.long_average);
    if let Some(v) = p.variant {
        out += &format!("variant = \"{}\"\n", v.name());
    }
    out += &format!("x3 = {}\n", q(p.x3, Quantity::Length));
    out += &format!("scan = \"{}\"\n", p.scan.name());
    out += &format!("phase_mode = \"{}\"\n", p.phase_mode.name());
    out += &format!("order = {}\n", p.order);
    for (key, v, u) in [
        ("nu", p.nu, Quantity::Frequency),
        ("temperature", p.temperature, Quantity::Temperature),
        ("power", p.power, Quantity::Power),
        ("linewidth", p.linewidth, Quantity::Frequency),
    ] {
        if let Some(v) = v {
            out += &format!("{key} = {}\n", q(v, u));
        }
    }

    let m = &cfg.mc;
    out += "\n[montecarlo]\n";
    if let Some(e) = m.engine {
        out += &format!("engine = \"{}\"\n", e.name());
    }
    out += &format!("photons = {}\n", m.photons);
    if let Some(d) = m.duration {
        out += &format!("duration = {}\n", q(d, Quantity::Time));
    }
    out += &format!("rate = {}\n", q(m.rate, Quantity::Rate));
    if let Some(w) = m.window {
        out += &format!("window = {}\n", q(w, Quantity::Time));
    }
    out += &format!("bins = {}\n", m.bins);
    out
}
