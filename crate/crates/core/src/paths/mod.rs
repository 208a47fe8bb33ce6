//! Enumeration of the ways and paths that trigger an n-fold coincidence,
//! their distinguishability, and the amplitude sums built from them.

mod amplitude;
mod ensemble;

use std::collections::BTreeSet;

pub use amplitude::{boson_path_oracle, fermion_path_oracle, way_amplitude, PhaseAssignment, BS_REFLECTION_PHASE};
pub use ensemble::{ensemble_probability, Configuration, EnsembleOptions, Estimate, SuperpositionRule};

use crate::coherence::{DetectorSpec, Geometry, PhaseModel, SourceKind, SourceSpec, Statistics};
use crate::error::{Error, Result};

/// Highest coincidence order the enumerator accepts.
pub const MAX_ORDER: usize = 4;

/// Optical layout between sources and detectors; decides reflection counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// Sources radiate straight onto the detection plane.
    FreeSpace,
    /// One beam split onto all detectors; detector 0 sits in the transmitted arm.
    Hbt,
    /// Source i (or pair photon i) enters beam-splitter port i; detector j sits
    /// behind output port j.
    Hom,
}

/// Symbolic initial phase carried by an amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PhaseSymbol {
    /// Independent phase of one emitted quantum.
    Emission { source: usize, label: usize },
    /// Phase shared by every quantum of a coherent source (or phase group)
    /// inside one coherence interval.
    Coherent { group: usize, interval: i64 },
    /// Scattering node of an extra cascade stage.
    Node { source: usize, stage: usize, node: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Emission {
    pub source: usize,
    pub label: usize,
    pub emission_time: f64,
    pub symbol: PhaseSymbol,
}

/// One quantum travelling from an emission to a detector, optionally through
/// one scattering node per extra cascade stage.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Leg {
    /// Index into the owning way's emissions.
    pub emission: usize,
    pub detector: usize,
    pub via: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub legs: Vec<Leg>,
    pub reflection_count: u32,
    /// Exchange sign: +1 for bosons, parity sign for fermions.
    pub sign: f64,
}

impl Path {
    /// Initial-phase symbols picked up along the path.
    pub fn phase_symbols(&self, way: &Way) -> Vec<PhaseSymbol> {
        let mut out = Vec::new();
        for leg in &self.legs {
            let e = &way.emissions[leg.emission];
            out.push(e.symbol);
            for (stage, &node) in leg.via.iter().enumerate() {
                out.push(PhaseSymbol::Node {
                    source: e.source,
                    stage: stage + 1,
                    node,
                });
            }
        }
        out
    }

    pub fn detectors(&self) -> BTreeSet<usize> {
        self.legs.iter().map(|l| l.detector).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Way {
    pub emissions: Vec<Emission>,
    pub probability_weight: f64,
    pub paths: Vec<Path>,
    pub distinguishable_from_other_ways: bool,
    /// Classes of mutually indistinguishable paths; amplitudes add inside a
    /// class and probabilities add across classes.
    pub path_classes: Vec<Vec<usize>>,
}

impl Way {
    /// Sorted list of emitting source ids (with multiplicity).
    pub fn source_multiset(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.emissions.iter().map(|e| e.source).collect();
        v.sort_unstable();
        v
    }

    pub fn is_fully_coherent(&self) -> bool {
        self.path_classes.len() <= 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistinguishReason {
    MomentumResolvable,
    OutsideCoherenceVolume,
    SourceStatusMeasurable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistinguishabilityVerdict {
    Indistinguishable,
    Distinguishable(DistinguishReason),
}

impl DistinguishabilityVerdict {
    pub fn is_distinguishable(&self) -> bool {
        matches!(self, DistinguishabilityVerdict::Distinguishable(_))
    }
}

fn coherence_interval(source: &SourceSpec, t: f64) -> i64 {
    match source.phase_model() {
        PhaseModel::CoherentPhase { coherence_time } if coherence_time.is_finite() => {
            (t / coherence_time).floor() as i64
        }
        _ => 0,
    }
}

fn emission_symbol(sources: &[SourceSpec], source: usize, label: usize, t: f64) -> PhaseSymbol {
    let s = &sources[source];
    if s.phase_model().is_coherent() {
        // phase groups are offset past the source ids so they never collide
        let group = match s.phase_group() {
            Some(g) => sources.len() + g,
            None => source,
        };
        PhaseSymbol::Coherent {
            group,
            interval: coherence_interval(s, t),
        }
    } else {
        PhaseSymbol::Emission { source, label }
    }
}

/// Counts of emissions per source whose total is `n`.
fn compositions(caps: &[(usize, usize)], n: usize) -> Vec<Vec<usize>> {
    // caps: (maximum count, step) per source
    fn rec(caps: &[(usize, usize)], i: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == caps.len() {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let (max, step) = caps[i];
        let mut c = 0;
        while c <= max.min(left) {
            cur.push(c);
            rec(caps, i + 1, left - c, cur, out);
            cur.pop();
            c += step;
        }
    }
    let mut out = Vec::new();
    rec(caps, 0, n, &mut Vec::with_capacity(caps.len()), &mut out);
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// All permutations of `0..n` in lexicographic order.
pub(crate) fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for i in 0..n {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(n, cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(n, &mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

pub(crate) fn parity_sign(perm: &[usize]) -> f64 {
    let mut inversions = 0;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn input_port(sources: &[SourceSpec], e: &Emission) -> usize {
    match sources[e.source].kind() {
        SourceKind::EntangledPairEmitter => e.label % 2,
        _ => e.source,
    }
}

fn reflections(layout: Layout, sources: &[SourceSpec], emissions: &[Emission], legs: &[Leg]) -> u32 {
    legs.iter()
        .filter(|leg| match layout {
            Layout::FreeSpace => false,
            Layout::Hbt => leg.detector != 0,
            Layout::Hom => input_port(sources, &emissions[leg.emission]) != leg.detector,
        })
        .count() as u32
}

/// Upper bound on paths per way (cascade stages multiply the count).
const MAX_PATHS_PER_WAY: usize = 100_000;

/// Lists every way `order` emissions from `sources` can trigger an
/// `order`-fold coincidence at `n_detectors` detectors, with all detector
/// assignments as paths.
///
/// Way weights follow the multinomial law in the source intensities,
/// restricted to allowed emission counts (single-photon sources emit at most
/// one quantum, pair emitters emit in pairs) and renormalized to sum to one.
/// Paths made identical by a shared coherent phase are collapsed.
pub fn enumerate_ways(sources: &[SourceSpec], n_detectors: usize, order: usize, layout: Layout) -> Result<Vec<Way>> {
    if order > MAX_ORDER {
        return Err(Error::UnsupportedOrder(order));
    }
    if order == 0 {
        return Err(Error::Usage("order must be at least 1".into()));
    }
    if sources.is_empty() {
        return Err(Error::Usage("at least one source is required".into()));
    }
    if n_detectors != order {
        return Err(Error::Usage(format!(
            "an {order}-fold coincidence needs exactly {order} detectors, got {n_detectors}"
        )));
    }
    let stats = sources[0].statistics();
    if sources.iter().any(|s| s.statistics() != stats) {
        return Err(Error::Usage("all sources must share the same statistics".into()));
    }
    if layout == Layout::Hom {
        if order > 2 {
            return Err(Error::Usage("the HOM layout has two output ports".into()));
        }
        if sources.len() > 2 {
            return Err(Error::Usage("the HOM layout has two input ports".into()));
        }
    }
    let has_cascade = sources
        .iter()
        .any(|s| matches!(s.kind(), SourceKind::SuperbunchingCascade { .. }));
    if has_cascade && sources.len() > 1 {
        return Err(Error::Usage("a cascade source must be the only source".into()));
    }
    if sources
        .iter()
        .any(|s| matches!(s.kind(), SourceKind::SuperbunchingModulated { .. }))
    {
        return Err(Error::Usage(
            "intensity-modulated sources are only available in the analytic engine".into(),
        ));
    }

    let caps: Vec<(usize, usize)> = sources
        .iter()
        .map(|s| match s.kind() {
            SourceKind::SinglePhoton => (1, 1),
            SourceKind::EntangledPairEmitter => (order, 2),
            _ => (order, 1),
        })
        .collect();
    let total_intensity: f64 = sources.iter().map(|s| s.intensity_weight()).sum();
    if total_intensity <= 0.0 {
        return Err(Error::Usage("total source intensity is zero".into()));
    }

    let mut ways = Vec::new();
    for counts in compositions(&caps, order) {
        let mut weight = factorial(order);
        for (s, &c) in sources.iter().zip(&counts) {
            weight *= (s.intensity_weight() / total_intensity).powi(c as i32) / factorial(c);
        }
        if weight == 0.0 {
            continue;
        }
        let mut emissions = Vec::with_capacity(order);
        for (s, &c) in counts.iter().enumerate() {
            for label in 0..c {
                emissions.push(Emission {
                    source: s,
                    label,
                    emission_time: 0.0,
                    symbol: emission_symbol(sources, s, label, 0.0),
                });
            }
        }
        let paths = build_paths(sources, &emissions, order, layout, stats)?;
        let n = paths.len();
        ways.push(Way {
            emissions,
            probability_weight: weight,
            paths,
            distinguishable_from_other_ways: order > 1,
            path_classes: vec![(0..n).collect()],
        });
    }
    if ways.is_empty() {
        return Err(Error::Usage(format!(
            "the sources cannot supply {order} quanta (single-photon sources emit at most one each)"
        )));
    }
    let norm: f64 = ways.iter().map(|w| w.probability_weight).sum();
    for w in &mut ways {
        w.probability_weight /= norm;
    }
    Ok(ways)
}

/// Rebuilds the path list of `way` after emission times were edited, so
/// coherence intervals and collapses are recomputed.
pub fn rebuild_way(sources: &[SourceSpec], way: &mut Way, layout: Layout) -> Result<()> {
    let stats = sources[way.emissions[0].source].statistics();
    for e in &mut way.emissions {
        e.symbol = emission_symbol(sources, e.source, e.label, e.emission_time);
    }
    way.paths = build_paths(sources, &way.emissions, way.emissions.len(), layout, stats)?;
    way.path_classes = vec![(0..way.paths.len()).collect()];
    Ok(())
}

fn build_paths(
    sources: &[SourceSpec],
    emissions: &[Emission],
    order: usize,
    layout: Layout,
    stats: Statistics,
) -> Result<Vec<Path>> {
    let stages = match sources[emissions[0].source].kind() {
        SourceKind::SuperbunchingCascade { stages } => *stages as usize,
        _ => 1,
    };
    let perms = permutations(order);
    let total = perms.len().checked_pow(stages as u32).unwrap_or(usize::MAX);
    if total > MAX_PATHS_PER_WAY {
        return Err(Error::Usage(format!(
            "{total} paths per way exceeds the supported {MAX_PATHS_PER_WAY}"
        )));
    }

    // identical-path collapse: a path is keyed by what each detector sees
    let mut seen = BTreeSet::new();
    let mut paths = Vec::new();
    for idx in 0..total {
        let mut rest = idx;
        let first = &perms[rest % perms.len()];
        rest /= perms.len();
        let mut node_perms = Vec::with_capacity(stages - 1);
        for _ in 1..stages {
            node_perms.push(&perms[rest % perms.len()]);
            rest /= perms.len();
        }
        let legs: Vec<Leg> = first
            .iter()
            .enumerate()
            .map(|(ei, &det)| Leg {
                emission: ei,
                detector: det,
                via: node_perms.iter().map(|p| p[det]).collect(),
            })
            .collect();
        let mut key: Vec<(usize, PhaseSymbol, usize, Vec<usize>)> = legs
            .iter()
            .map(|l| {
                let e = &emissions[l.emission];
                (e.source, e.symbol, l.detector, l.via.clone())
            })
            .collect();
        key.sort();
        if !seen.insert(key) {
            continue;
        }
        let sign = match stats {
            Statistics::Boson => 1.0,
            Statistics::Fermion => parity_sign(first),
        };
        let reflection_count = reflections(layout, sources, emissions, &legs);
        paths.push(Path {
            legs,
            reflection_count,
            sign,
        });
    }
    Ok(paths)
}

fn detector_lookup(detectors: &[DetectorSpec], id: usize) -> Result<&DetectorSpec> {
    detectors
        .get(id)
        .ok_or_else(|| Error::Usage(format!("detector {id} is not part of the configuration")))
}

/// Decides whether two paths of one configuration can be told apart.
pub fn classify(
    p: (&Way, &Path),
    q: (&Way, &Path),
    geometry: &Geometry,
    detectors: &[DetectorSpec],
    sources: &[SourceSpec],
) -> Result<DistinguishabilityVerdict> {
    let (wp, pp) = p;
    let (wq, pq) = q;
    if pp.detectors() != pq.detectors() {
        return Err(Error::Usage("paths cover different detectors".into()));
    }
    for e in wp.emissions.iter().chain(&wq.emissions) {
        if e.source >= sources.len() {
            return Err(Error::Usage(format!("source {} is not part of the configuration", e.source)));
        }
    }
    for leg in pp.legs.iter().chain(&pq.legs) {
        detector_lookup(detectors, leg.detector)?;
    }

    let mp = wp.source_multiset();
    let mq = wq.source_multiset();
    if mp != mq {
        let differing = mp
            .iter()
            .filter(|s| !mq.contains(s))
            .chain(mq.iter().filter(|s| !mp.contains(s)));
        for &s in differing {
            if matches!(sources[s].kind(), SourceKind::SinglePhoton) {
                return Ok(DistinguishabilityVerdict::Distinguishable(
                    DistinguishReason::SourceStatusMeasurable,
                ));
            }
        }
    }

    for lp in &pp.legs {
        let lq = pq
            .legs
            .iter()
            .find(|l| l.detector == lp.detector)
            .expect("detector sets are equal");
        let ep = &wp.emissions[lp.emission];
        let eq = &wq.emissions[lq.emission];
        let det = detector_lookup(detectors, lp.detector)?;
        let limit = geometry.wavelength() * geometry.distance() / det.position_uncertainty();
        let d = (sources[ep.source].position() - sources[eq.source].position()).abs();
        if d > limit {
            return Ok(DistinguishabilityVerdict::Distinguishable(
                DistinguishReason::MomentumResolvable,
            ));
        }
        let tau_c = sources[ep.source]
            .spectrum()
            .coherence_time()
            .min(sources[eq.source].spectrum().coherence_time());
        if (ep.emission_time - eq.emission_time).abs() > tau_c {
            return Ok(DistinguishabilityVerdict::Distinguishable(
                DistinguishReason::OutsideCoherenceVolume,
            ));
        }
    }
    Ok(DistinguishabilityVerdict::Indistinguishable)
}

#[cfg(test)]
mod tests;
