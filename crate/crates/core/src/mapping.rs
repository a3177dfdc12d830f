//! Loop-nest mappings: how a layer's seven dimensions are factored across the
//! memory hierarchy as spatial (fan-out) and temporal (sequential) loops.
//!
//! A mapping assigns each architecture level an ordered loop list, outermost
//! level first and outer loop first within a level. The canonical text form
//! is `Level: <loops> | Level: <loops>` with loops written `tP2` (temporal,
//! dimension P, bound 2) or `sK4` (spatial); levels without loops are
//! omitted and the loop-free mapping is written `-`.

use crate::arch::ArchSpec;
use crate::error::{Error, Result};
use crate::workload::{Axis, LayerShape};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, HashSet};

/// The seven loop dimensions, in canonical order.
pub const LOOP_DIMS: [Axis; 7] = [
    Axis::N,
    Axis::K,
    Axis::C,
    Axis::P,
    Axis::Q,
    Axis::R,
    Axis::S,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LoopKind {
    Temporal,
    Spatial,
}

/// One loop: `for dim in 0..bound`, run sequentially (temporal) or unrolled
/// across the level's instances (spatial).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Loop {
    pub dim: Axis,
    pub bound: u64,
    pub kind: LoopKind,
}

/// Per-level ordered loop lists, aligned with `ArchSpec::levels`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mapping {
    pub levels: Vec<Vec<Loop>>,
}

impl Mapping {
    /// Empty mapping (every dimension staying at extent 1).
    pub fn empty(spec: &ArchSpec) -> Self {
        Mapping {
            levels: vec![Vec::new(); spec.levels.len()],
        }
    }

    /// All loops in nest order (outermost level first, outer loop first).
    pub fn flat_loops(&self) -> impl Iterator<Item = (usize, &Loop)> + '_ {
        self.levels
            .iter()
            .enumerate()
            .flat_map(|(li, loops)| loops.iter().map(move |l| (li, l)))
    }

    pub fn loop_count(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    /// Product of all bounds over `dim`, across every level.
    pub fn dim_product(&self, dim: Axis) -> u64 {
        self.flat_loops()
            .filter(|(_, l)| l.dim == dim)
            .map(|(_, l)| l.bound)
            .product()
    }

    /// Compute-level instances addressed by the mapping: the product of all
    /// spatial bounds at the compute level and above.
    pub fn instances_at_compute(&self, spec: &ArchSpec) -> u64 {
        self.flat_loops()
            .filter(|(li, l)| *li <= spec.compute && l.kind == LoopKind::Spatial)
            .map(|(_, l)| l.bound)
            .product()
    }

    /// Temporal steps each compute-level instance runs: the product of all
    /// temporal bounds at the compute level and above (a flattened counter;
    /// upper-level temporal loops advance it exactly like compute-level ones).
    pub fn steps_at_compute(&self, spec: &ArchSpec) -> u64 {
        self.flat_loops()
            .filter(|(li, l)| *li <= spec.compute && l.kind == LoopKind::Temporal)
            .map(|(_, l)| l.bound)
            .product()
    }

    /// Parallel lanes inside one compute instance: spatial bounds below the
    /// compute level (e.g. column-level unrolling).
    pub fn lanes_below_compute(&self, spec: &ArchSpec) -> u64 {
        self.flat_loops()
            .filter(|(li, l)| *li > spec.compute && l.kind == LoopKind::Spatial)
            .map(|(_, l)| l.bound)
            .product()
    }

    /// Per-dimension extent of the tile processed in one compute-level step:
    /// whatever no loop at or above the compute level has factored out.
    pub fn below_compute_extent(&self, dim: Axis, layer: &LayerShape, spec: &ArchSpec) -> u64 {
        let above: u64 = self
            .flat_loops()
            .filter(|(li, l)| *li <= spec.compute && l.dim == dim)
            .map(|(_, l)| l.bound)
            .product();
        layer.extent(dim) / above
    }

    /// Canonical text encoding against `spec`'s level names.
    pub fn encode(&self, spec: &ArchSpec) -> String {
        let mut parts = Vec::new();
        for (li, loops) in self.levels.iter().enumerate() {
            if loops.is_empty() {
                continue;
            }
            let body: Vec<String> = loops
                .iter()
                .map(|l| {
                    let k = match l.kind {
                        LoopKind::Temporal => 't',
                        LoopKind::Spatial => 's',
                    };
                    format!("{k}{}{}", l.dim, l.bound)
                })
                .collect();
            parts.push(format!("{}: {}", spec.levels[li].name, body.join(" ")));
        }
        if parts.is_empty() {
            "-".to_string()
        } else {
            parts.join(" | ")
        }
    }

    /// Parse the canonical encoding. Loops with bound 1 are no-ops and are
    /// dropped so that equal schedules share one encoding.
    pub fn parse(text: &str, spec: &ArchSpec) -> Result<Mapping> {
        let mut m = Mapping::empty(spec);
        let trimmed = text.trim();
        if trimmed.is_empty() || trimmed == "-" {
            return Ok(m);
        }
        let mut seen = HashSet::new();
        for part in trimmed.split('|') {
            let part = part.trim();
            let (name, body) = part
                .split_once(':')
                .ok_or_else(|| Error::parse(format!("mapping level entry '{part}' lacks ':'")))?;
            let name = name.trim();
            let li = spec
                .level_index(name)
                .ok_or_else(|| Error::parse(format!("unknown level '{name}' in mapping")))?;
            if !seen.insert(li) {
                return Err(Error::parse(format!("level '{name}' appears twice")));
            }
            for tok in body.split_whitespace() {
                if tok == "-" {
                    continue;
                }
                let mut chars = tok.chars();
                let kind = match chars.next() {
                    Some('t') => LoopKind::Temporal,
                    Some('s') => LoopKind::Spatial,
                    _ => return Err(Error::parse(format!("loop '{tok}': expected t/s prefix"))),
                };
                let dim = match chars.next() {
                    Some('N') => Axis::N,
                    Some('K') => Axis::K,
                    Some('C') => Axis::C,
                    Some('P') => Axis::P,
                    Some('Q') => Axis::Q,
                    Some('R') => Axis::R,
                    Some('S') => Axis::S,
                    _ => {
                        return Err(Error::parse(format!(
                            "loop '{tok}': expected a dimension letter"
                        )))
                    }
                };
                let bound: u64 = chars
                    .as_str()
                    .parse()
                    .map_err(|_| Error::parse(format!("loop '{tok}': bad bound")))?;
                if bound == 0 {
                    return Err(Error::parse(format!("loop '{tok}': bound must be >= 1")));
                }
                if bound > 1 {
                    m.levels[li].push(Loop { dim, bound, kind });
                }
            }
        }
        Ok(m)
    }
}

/// Validation verdict with every violated rule spelled out.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub valid: bool,
    pub reasons: Vec<String>,
}

impl Verdict {
    pub fn into_result(self) -> Result<()> {
        if self.valid {
            Ok(())
        } else {
            Err(Error::InvalidMapping(self.reasons))
        }
    }
}

/// Check a mapping against its layer and architecture: full factorization of
/// every dimension, per-level spatial fan-out within `instances`, and the
/// per-step tile footprint within the compute level's capacity.
pub fn validate_mapping(m: &Mapping, layer: &LayerShape, spec: &ArchSpec) -> Verdict {
    let mut reasons = Vec::new();

    if m.levels.len() != spec.levels.len() {
        reasons.push(format!(
            "mapping has {} levels, architecture has {}",
            m.levels.len(),
            spec.levels.len()
        ));
        return Verdict {
            valid: false,
            reasons,
        };
    }

    for (li, l) in m.flat_loops() {
        if matches!(l.dim, Axis::H | Axis::W) {
            reasons.push(format!(
                "loop over {} at level '{}' is not a loop dimension",
                l.dim, spec.levels[li].name
            ));
        }
        if l.bound == 0 {
            reasons.push(format!("zero loop bound at level '{}'", spec.levels[li].name));
        }
    }
    if !reasons.is_empty() {
        return Verdict {
            valid: false,
            reasons,
        };
    }

    for dim in LOOP_DIMS {
        let product = m.dim_product(dim);
        let expected = layer.extent(dim);
        if product != expected {
            reasons.push(format!(
                "dimension factorization mismatch: {dim} bounds multiply to {product}, layer has {expected}"
            ));
        }
    }

    for (li, loops) in m.levels.iter().enumerate() {
        let fanout: u64 = loops
            .iter()
            .filter(|l| l.kind == LoopKind::Spatial)
            .map(|l| l.bound)
            .product();
        if fanout > spec.levels[li].instances {
            reasons.push(format!(
                "spatial fanout exceeds instances at level '{}': {fanout} > {}",
                spec.levels[li].name, spec.levels[li].instances
            ));
        }
    }

    if reasons.is_empty() {
        if let Some(cap) = spec.compute_level().capacity_bits {
            let e = |d| m.below_compute_extent(d, layer, spec);
            let (n, k, c, p, q, r, s) = (
                e(Axis::N),
                e(Axis::K),
                e(Axis::C),
                e(Axis::P),
                e(Axis::Q),
                e(Axis::R),
                e(Axis::S),
            );
            let input = n * c * (p + r - 1) * (q + s - 1);
            let weight = k * c * r * s;
            let output = n * k * p * q;
            let need = (input + weight + output) * spec.word_bits() as u64;
            if need > cap {
                reasons.push(format!(
                    "compute-level tile footprint {need} bits exceeds capacity {cap} bits"
                ));
            }
        }
    }

    Verdict {
        valid: reasons.is_empty(),
        reasons,
    }
}

/// Knobs restricting the sampled map space.
#[derive(Debug, Clone, Default)]
pub struct MapSpaceConstraints {
    /// Per level name: the only dimensions allowed to loop there.
    pub permitted_dims: BTreeMap<String, Vec<Axis>>,
    /// Factors that must appear exactly as given: (level name, dim, bound).
    pub fixed_factors: Vec<(String, Axis, u64)>,
    /// Reject mappings with more compute-level temporal steps than this.
    pub max_temporal_steps: Option<u64>,
    pub budget: u64,
    pub seed: u64,
}

impl MapSpaceConstraints {
    pub fn new(budget: u64, seed: u64) -> Self {
        MapSpaceConstraints {
            budget,
            seed,
            ..Default::default()
        }
    }
}

/// A sampled slice of the map space.
#[derive(Debug, Clone)]
pub struct MapSample {
    pub mappings: Vec<Mapping>,
    /// True when the retry ceiling tripped before `budget` distinct valid
    /// mappings were found (the space is, in practice, exhausted).
    pub exhausted: bool,
    pub attempts: u64,
}

fn prime_factors(mut v: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= v {
        while v % d == 0 {
            out.push(d);
            v /= d;
        }
        d += 1;
    }
    if v > 1 {
        out.push(v);
    }
    out
}

/// Seeded uniform sampling of distinct valid mappings. Each draw assigns the
/// prime factors of every dimension to random permitted levels, shuffles each
/// level's loop order, flips spatial/temporal per loop (levels with one
/// instance stay temporal), then keeps the candidate only if it validates.
/// The stream is a pure function of the seed; sampling stops after `budget`
/// distinct mappings or `budget * 1000` attempts, whichever comes first.
pub fn enumerate_mapspace(
    layer: &LayerShape,
    spec: &ArchSpec,
    cons: &MapSpaceConstraints,
) -> Result<MapSample> {
    if cons.budget == 0 {
        return Err(Error::parse("map-space budget must be >= 1"));
    }

    // Residual extent per dimension once fixed factors are carved out.
    let mut residual: BTreeMap<Axis, u64> = LOOP_DIMS
        .iter()
        .map(|&d| (d, layer.extent(d)))
        .collect();
    let mut fixed: Vec<(usize, Axis, u64)> = Vec::new();
    for (level, dim, bound) in &cons.fixed_factors {
        let li = spec
            .level_index(level)
            .ok_or_else(|| Error::parse(format!("fixed factor on unknown level '{level}'")))?;
        let r = residual.get_mut(dim).expect("loop dim");
        if *bound == 0 || *r % *bound != 0 {
            return Err(Error::parse(format!(
                "fixed factor {dim}x{bound} does not divide the remaining extent {r}"
            )));
        }
        *r /= *bound;
        if *bound > 1 {
            fixed.push((li, *dim, *bound));
        }
    }

    let allowed_levels: BTreeMap<Axis, Vec<usize>> = LOOP_DIMS
        .iter()
        .map(|&d| {
            let levels = (0..spec.levels.len())
                .filter(|li| {
                    cons.permitted_dims
                        .get(&spec.levels[*li].name)
                        .map_or(true, |dims| dims.contains(&d))
                })
                .collect::<Vec<_>>();
            (d, levels)
        })
        .collect();

    // A dimension that still needs factoring but may loop nowhere: the space
    // is empty by construction.
    for (&d, levels) in &allowed_levels {
        if residual[&d] > 1 && levels.is_empty() {
            return Ok(MapSample {
                mappings: Vec::new(),
                exhausted: true,
                attempts: 0,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cons.seed);
    let mut seen = HashSet::new();
    let mut mappings = Vec::new();
    let mut attempts = 0;
    let ceiling = cons.budget.saturating_mul(1000);

    while (mappings.len() as u64) < cons.budget && attempts < ceiling {
        attempts += 1;

        let mut per_level_bound: Vec<BTreeMap<Axis, u64>> =
            vec![BTreeMap::new(); spec.levels.len()];
        for (li, dim, bound) in &fixed {
            *per_level_bound[*li].entry(*dim).or_insert(1) *= bound;
        }
        for &dim in &LOOP_DIMS {
            for prime in prime_factors(residual[&dim]) {
                let levels = &allowed_levels[&dim];
                let li = levels[rng.gen_range(0..levels.len())];
                *per_level_bound[li].entry(dim).or_insert(1) *= prime;
            }
        }

        let mut levels: Vec<Vec<Loop>> = Vec::with_capacity(spec.levels.len());
        for (li, bounds) in per_level_bound.into_iter().enumerate() {
            let mut loops: Vec<Loop> = bounds
                .into_iter()
                .filter(|(_, b)| *b > 1)
                .map(|(dim, bound)| {
                    let kind = if spec.levels[li].instances > 1 && rng.gen_bool(0.5) {
                        LoopKind::Spatial
                    } else {
                        LoopKind::Temporal
                    };
                    Loop { dim, bound, kind }
                })
                .collect();
            loops.shuffle(&mut rng);
            levels.push(loops);
        }
        let m = Mapping { levels };

        if !validate_mapping(&m, layer, spec).valid {
            continue;
        }
        if let Some(cap) = cons.max_temporal_steps {
            if m.steps_at_compute(spec) > cap {
                continue;
            }
        }
        let enc = m.encode(spec);
        if seen.insert(enc) {
            mappings.push(m);
        }
    }

    let exhausted = (mappings.len() as u64) < cons.budget;
    Ok(MapSample {
        mappings,
        exhausted,
        attempts,
    })
}
