use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rand::RngExt;
use rayon::prelude::*;

use super::{classify, enumerate_ways, Layout, PhaseSymbol, Way};
use crate::coherence::{DetectorSpec, Geometry, SourceSpec};
use crate::constants::CODATA;
use crate::error::{Error, Result};
use crate::propagators::SpacetimePoint;
use crate::rng::{chunks, install, substream, uniform_phase};

/// Whether indistinguishable alternatives add amplitudes (rule II) or every
/// path is forced to add probabilities (rule III only).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SuperpositionRule {
    #[default]
    Feynman,
    ForceDistinguishable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleOptions {
    pub samples: usize,
    pub seed: u64,
    pub rule: SuperpositionRule,
    /// Worker cap; `None` uses the global pool. Results do not depend on it.
    pub threads: Option<usize>,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        Self {
            samples: 100_000,
            seed: 0,
            rule: SuperpositionRule::Feynman,
            threads: None,
        }
    }
}

/// Ensemble-averaged probability normalized by the uncorrelated baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    /// mean(P) / mean(baseline).
    pub value: f64,
    /// Delta-method standard error of `value`.
    pub stderr: f64,
    pub raw: f64,
    pub baseline: f64,
    pub samples: usize,
}

struct CompiledLeg {
    pos: usize,
    detector: usize,
    nodes: Vec<usize>,
}

struct CompiledPath {
    prefactor: Complex64,
    legs: Vec<CompiledLeg>,
}

struct CompiledWay {
    weight: f64,
    paths: Vec<CompiledPath>,
    classes: Vec<Vec<usize>>,
}

/// Random variables behind one phase symbol.
struct SymbolSlot {
    /// Source whose spectrum supplies the frequency offset.
    source: usize,
}

/// Emission position slot.
struct PositionSlot {
    source: usize,
    symbol: usize,
}

struct Compiled {
    symbols: Vec<SymbolSlot>,
    node_symbols: Vec<usize>,
    positions: Vec<PositionSlot>,
    ways: Vec<CompiledWay>,
    way_groups: Vec<Vec<usize>>,
}

/// Sources, detectors and layout of one experiment, with its ways enumerated
/// and classified.
pub struct Configuration {
    sources: Vec<SourceSpec>,
    detectors: Vec<DetectorSpec>,
    geometry: Geometry,
    layout: Layout,
    ways: Vec<Way>,
    compiled: Compiled,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }
    fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.0[r] != r {
            r = self.0[r];
        }
        self.0[i] = r;
        r
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[rb.max(ra)] = ra.min(rb);
        }
    }
    fn classes(mut self) -> Vec<Vec<usize>> {
        let n = self.0.len();
        let mut map: HashMap<usize, Vec<usize>> = HashMap::new();
        for i in 0..n {
            let r = self.find(i);
            map.entry(r).or_default().push(i);
        }
        let mut out: Vec<Vec<usize>> = map.into_values().collect();
        out.sort();
        out
    }
}

impl Configuration {
    pub fn new(sources: Vec<SourceSpec>, detectors: Vec<DetectorSpec>, geometry: Geometry, layout: Layout) -> Result<Self> {
        let ways = enumerate_ways(&sources, detectors.len(), detectors.len(), layout)?;
        Self::from_ways(sources, detectors, geometry, layout, ways)
    }

    /// Builds a configuration from explicitly edited ways (e.g. with
    /// emission times set); paths are reclassified.
    pub fn from_ways(
        sources: Vec<SourceSpec>,
        detectors: Vec<DetectorSpec>,
        geometry: Geometry,
        layout: Layout,
        mut ways: Vec<Way>,
    ) -> Result<Self> {
        geometry.check_paraxial(&sources, &detectors)?;
        for (i, d) in detectors.iter().enumerate() {
            if d.id != i {
                return Err(Error::Usage(format!("detector ids must be 0..n in order, found {} at {i}", d.id)));
            }
        }
        for a in &sources {
            for b in &sources {
                if a.phase_group().is_some()
                    && a.phase_group() == b.phase_group()
                    && a.spectrum() != b.spectrum()
                {
                    return Err(Error::Usage("sources sharing a phase group must share a spectrum".into()));
                }
            }
        }

        for way in &mut ways {
            let n = way.paths.len();
            let mut uf = UnionFind::new(n);
            for i in 0..n {
                for j in i + 1..n {
                    let v = classify((way, &way.paths[i]), (way, &way.paths[j]), &geometry, &detectors, &sources)?;
                    if !v.is_distinguishable() {
                        uf.union(i, j);
                    }
                }
            }
            way.path_classes = uf.classes();
        }

        let mut groups = UnionFind::new(ways.len());
        if detectors.len() == 1 {
            for i in 0..ways.len() {
                for j in i + 1..ways.len() {
                    let v = classify(
                        (&ways[i], &ways[i].paths[0]),
                        (&ways[j], &ways[j].paths[0]),
                        &geometry,
                        &detectors,
                        &sources,
                    )?;
                    if !v.is_distinguishable() {
                        groups.union(i, j);
                    }
                }
            }
        }
        let way_groups = groups.classes();
        for g in &way_groups {
            for &w in g {
                ways[w].distinguishable_from_other_ways = g.len() == 1;
            }
        }

        let compiled = compile(&ways, way_groups);
        Ok(Self {
            sources,
            detectors,
            geometry,
            layout,
            ways,
            compiled,
        })
    }

    pub fn sources(&self) -> &[SourceSpec] {
        &self.sources
    }
    pub fn detectors(&self) -> &[DetectorSpec] {
        &self.detectors
    }
    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }
    pub fn layout(&self) -> Layout {
        self.layout
    }
    pub fn ways(&self) -> &[Way] {
        &self.ways
    }
    pub fn order(&self) -> usize {
        self.detectors.len()
    }

    /// Detection points at the detectors' configured positions and time `t`.
    pub fn points_at(&self, times: &[f64]) -> Vec<SpacetimePoint> {
        self.detectors
            .iter()
            .zip(times)
            .map(|(d, &t)| SpacetimePoint::new(d.position(), self.geometry.distance(), t))
            .collect()
    }

    /// Ensemble estimate at one set of detection points (one per detector).
    pub fn probability(&self, points: &[SpacetimePoint], opts: &EnsembleOptions) -> Result<Estimate> {
        Ok(self.evaluate(&[points.to_vec()], opts)?.remove(0))
    }

    /// Ensemble estimates at many detection-point sets, sharing one set of
    /// phase samples across the grid.
    pub fn evaluate(&self, grid: &[Vec<SpacetimePoint>], opts: &EnsembleOptions) -> Result<Vec<Estimate>> {
        if opts.samples == 0 {
            return Err(Error::Usage("n_samples must be at least 1".into()));
        }
        for pts in grid {
            if pts.len() != self.detectors.len() {
                return Err(Error::Usage(format!(
                    "expected {} detection points, got {}",
                    self.detectors.len(),
                    pts.len()
                )));
            }
            if pts.iter().any(|p| !(p.x.is_finite() && p.t.is_finite())) {
                return Err(Error::Usage("detection points must be finite".into()));
            }
        }
        let parts = install(opts.threads, || {
            chunks(opts.samples)
                .into_par_iter()
                .map(|(c, _, len)| self.run_chunk(grid, opts, c, len))
                .collect::<Vec<_>>()
        });
        let mut acc = vec![[0.0f64; 5]; grid.len()];
        for part in parts {
            for (a, p) in acc.iter_mut().zip(part) {
                for k in 0..5 {
                    a[k] += p[k];
                }
            }
        }
        let n = opts.samples as f64;
        acc.iter()
            .map(|a| {
                let mp = a[0] / n;
                let mb = a[1] / n;
                if !(mb > 0.0) || !mp.is_finite() {
                    return Err(Error::Numeric("baseline probability vanished".into()));
                }
                let r = mp / mb;
                let (vp, vb, cpb) = if opts.samples > 1 {
                    let d = n - 1.0;
                    (
                        (a[2] - n * mp * mp) / d,
                        (a[3] - n * mb * mb) / d,
                        (a[4] - n * mp * mb) / d,
                    )
                } else {
                    (0.0, 0.0, 0.0)
                };
                let var = ((vp - 2.0 * r * cpb + r * r * vb) / (n * mb * mb)).max(0.0);
                Ok(Estimate {
                    value: r,
                    stderr: var.sqrt(),
                    raw: mp,
                    baseline: mb,
                    samples: opts.samples,
                })
            })
            .collect()
    }

    fn run_chunk(&self, grid: &[Vec<SpacetimePoint>], opts: &EnsembleOptions, chunk: u64, len: usize) -> Vec<[f64; 5]> {
        let cp = &self.compiled;
        let mut rng = substream(opts.seed, &[chunk]);
        let mut acc = vec![[0.0f64; 5]; grid.len()];
        let mut phase = vec![0.0; cp.symbols.len()];
        let mut domega = vec![0.0; cp.symbols.len()];
        let mut xpos = vec![0.0; cp.positions.len()];
        let nd = self.detectors.len();
        let mut leg_amp = vec![Complex64::new(0.0, 0.0); cp.positions.len() * nd];
        let mut node_amp = vec![Complex64::new(0.0, 0.0); cp.symbols.len() * nd];
        let l = self.geometry.distance();

        for _ in 0..len {
            for (i, s) in cp.symbols.iter().enumerate() {
                phase[i] = uniform_phase(&mut rng);
                domega[i] = self.sources[s.source].spectrum().sample_offset(&mut rng);
            }
            for (i, p) in cp.positions.iter().enumerate() {
                let src = &self.sources[p.source];
                xpos[i] = src.position() + (rng.random::<f64>() - 0.5) * src.extent();
            }

            for (gi, pts) in grid.iter().enumerate() {
                for (pi, p) in cp.positions.iter().enumerate() {
                    let src = &self.sources[p.source];
                    let omega0 = src.spectrum().center();
                    let omega = (omega0 + domega[p.symbol]).max(omega0 * 1e-6);
                    let k = if src.is_massive() {
                        src.particle_mass() * src.particle_speed() / CODATA.hbar * (omega / omega0).sqrt()
                    } else {
                        omega / CODATA.c
                    };
                    for (j, pt) in pts.iter().enumerate() {
                        let dx = pt.x - xpos[pi];
                        let excess = if self.geometry.paraxial {
                            dx * dx / (2.0 * l)
                        } else {
                            l.hypot(dx) - l
                        };
                        let mag = l / (l + excess);
                        leg_amp[pi * nd + j] = Complex64::from_polar(mag, phase[p.symbol] - omega * pt.t + k * excess);
                    }
                }
                for &s in &cp.node_symbols {
                    for (j, pt) in pts.iter().enumerate() {
                        node_amp[s * nd + j] = Complex64::from_polar(1.0, phase[s] - domega[s] * pt.t);
                    }
                }

                let (p, b) = self.sample_probability(&leg_amp, &node_amp, nd, opts.rule);
                let a = &mut acc[gi];
                a[0] += p;
                a[1] += b;
                a[2] += p * p;
                a[3] += b * b;
                a[4] += p * b;
            }
        }
        acc
    }

    fn sample_probability(&self, leg_amp: &[Complex64], node_amp: &[Complex64], nd: usize, rule: SuperpositionRule) -> (f64, f64) {
        let cp = &self.compiled;
        let mut baseline = 0.0;
        let mut prob = 0.0;
        let mut amps: Vec<Vec<Complex64>> = Vec::with_capacity(cp.ways.len());
        for way in &cp.ways {
            let a: Vec<Complex64> = way
                .paths
                .iter()
                .map(|path| {
                    let mut amp = path.prefactor;
                    for leg in &path.legs {
                        amp *= leg_amp[leg.pos * nd + leg.detector];
                        for &n in &leg.nodes {
                            amp *= node_amp[n * nd + leg.detector];
                        }
                    }
                    amp
                })
                .collect();
            let np = a.len() as f64;
            baseline += way.weight / np * a.iter().map(|z| z.norm_sqr()).sum::<f64>();
            amps.push(a);
        }
        if rule == SuperpositionRule::ForceDistinguishable {
            return (baseline, baseline);
        }
        for group in &cp.way_groups {
            if group.len() == 1 {
                let w = &cp.ways[group[0]];
                let a = &amps[group[0]];
                let np = a.len() as f64;
                let coherent: f64 = w
                    .classes
                    .iter()
                    .map(|cls| cls.iter().map(|&i| a[i]).sum::<Complex64>().norm_sqr())
                    .sum();
                prob += w.weight * coherent / np;
            } else {
                let total: Complex64 = group
                    .iter()
                    .map(|&wi| {
                        let a = &amps[wi];
                        a.iter().sum::<Complex64>() * (cp.ways[wi].weight / a.len() as f64).sqrt()
                    })
                    .sum();
                prob += total.norm_sqr();
            }
        }
        (prob, baseline)
    }
}

fn compile(ways: &[Way], way_groups: Vec<Vec<usize>>) -> Compiled {
    let mut sym_index: HashMap<PhaseSymbol, usize> = HashMap::new();
    let mut symbols = Vec::new();
    let mut node_symbols = Vec::new();
    let mut pos_index: HashMap<(usize, PhaseSymbol), usize> = HashMap::new();
    let mut positions = Vec::new();

    let mut intern = |sym: PhaseSymbol, source: usize, symbols: &mut Vec<SymbolSlot>, node_symbols: &mut Vec<usize>| -> usize {
        *sym_index.entry(sym).or_insert_with(|| {
            symbols.push(SymbolSlot { source });
            if matches!(sym, PhaseSymbol::Node { .. }) {
                node_symbols.push(symbols.len() - 1);
            }
            symbols.len() - 1
        })
    };

    let mut out_ways = Vec::with_capacity(ways.len());
    for way in ways {
        let mut paths = Vec::with_capacity(way.paths.len());
        for path in &way.paths {
            let mut legs = Vec::with_capacity(path.legs.len());
            for leg in &path.legs {
                let e = &way.emissions[leg.emission];
                let sym = intern(e.symbol, e.source, &mut symbols, &mut node_symbols);
                let pos = *pos_index.entry((e.source, e.symbol)).or_insert_with(|| {
                    positions.push(PositionSlot { source: e.source, symbol: sym });
                    positions.len() - 1
                });
                let nodes = leg
                    .via
                    .iter()
                    .enumerate()
                    .map(|(stage, &node)| {
                        intern(
                            PhaseSymbol::Node { source: e.source, stage: stage + 1, node },
                            e.source,
                            &mut symbols,
                            &mut node_symbols,
                        )
                    })
                    .collect();
                legs.push(CompiledLeg { pos, detector: leg.detector, nodes });
            }
            paths.push(CompiledPath {
                prefactor: Complex64::from_polar(path.sign, path.reflection_count as f64 * FRAC_PI_2),
                legs,
            });
        }
        out_ways.push(CompiledWay {
            weight: way.probability_weight,
            paths,
            classes: way.path_classes.clone(),
        });
    }
    Compiled {
        symbols,
        node_symbols,
        positions,
        ways: out_ways,
        way_groups,
    }
}

/// Ensemble probability of `config` at `points`, normalized so statistically
/// independent detections give 1.
pub fn ensemble_probability(config: &Configuration, points: &[SpacetimePoint], n_samples: usize, seed: u64) -> Result<Estimate> {
    config.probability(
        points,
        &EnsembleOptions {
            samples: n_samples,
            seed,
            ..Default::default()
        },
    )
}
