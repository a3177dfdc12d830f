//! Data-space decomposition: which output tile each compute-level instance
//! touches at each temporal step.
//!
//! A mapping splits the layer's output tensor top-down, loop by loop. Spatial
//! loops scatter tiles across instances, temporal loops sequence them, and
//! loops leaf-ward of the compute level stay inside a single step (they shape
//! the per-step tile and the lane parallelism, not the step counter). The
//! closed form here produces each `(instance, step)` entry in O(loop count)
//! from mixed-radix digit extraction; [`oracle_dataspaces`] instead executes
//! the nest literally, point by point, and exists so the closed form can be
//! checked against it.

use crate::arch::ArchSpec;
use crate::error::{Error, Result};
use crate::mapping::{validate_mapping, LoopKind, Mapping, LOOP_DIMS};
use crate::workload::{Axis, Interval, LayerShape, TensorBox};
use std::cell::Cell;
use std::io::Write;

/// Default cap on materialized (instance, step) entries.
pub const DEFAULT_ENTRY_CAP: u64 = 100_000_000;
/// Default cap on the oracle's 7-D iteration points.
pub const DEFAULT_ORACLE_POINT_CAP: u64 = 1_000_000;

thread_local! {
    static GENERATION_CALLS: Cell<u64> = const { Cell::new(0) };
}

/// How many times data-space generation (closed-form or oracle) ran on this
/// thread. Lets tests assert that downstream passes reuse tables instead of
/// regenerating them.
pub fn generation_calls() -> u64 {
    GENERATION_CALLS.with(|c| c.get())
}

fn count_generation_call() {
    GENERATION_CALLS.with(|c| c.set(c.get() + 1));
}

pub(crate) fn dim_index(dim: Axis) -> usize {
    LOOP_DIMS.iter().position(|&d| d == dim).expect("loop dim")
}

/// One loop's role in the decomposition.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LoopInfo {
    pub dim: Axis,
    pub kind: LoopKind,
    pub bound: u64,
    /// Per-dimension extent of the tiles this loop produces.
    pub child_extent: u64,
    /// Temporal loops: step-counter increment per iteration (the time
    /// stride). Spatial loops: instance-index place value.
    pub stride: u64,
}

/// Precomputed decomposition of a (mapping, layer) pair: the loops at or
/// above the compute level with their tile extents and strides, plus the
/// per-step tile left below the compute level.
#[derive(Debug, Clone)]
pub(crate) struct LoopView {
    pub loops: Vec<LoopInfo>,
    /// Tile extent per dimension (LOOP_DIMS order) inside one step.
    pub below_extent: [u64; 7],
    pub total_steps: u64,
    pub total_instances: u64,
    /// Steps by which a tile's reduction (C/R/S temporal loops) trails its
    /// first visit: an output is complete only after its last reduction step.
    pub reduction_tail: u64,
}

impl LoopView {
    pub fn new(m: &Mapping, layer: &LayerShape, spec: &ArchSpec) -> Self {
        let mut cur: [u64; 7] = [0; 7];
        for (i, &d) in LOOP_DIMS.iter().enumerate() {
            cur[i] = layer.extent(d);
        }
        let mut loops = Vec::with_capacity(m.loop_count());
        for (li, l) in m.flat_loops() {
            if li > spec.compute {
                continue;
            }
            let di = dim_index(l.dim);
            debug_assert_eq!(cur[di] % l.bound, 0, "mapping must be validated first");
            cur[di] /= l.bound;
            loops.push(LoopInfo {
                dim: l.dim,
                kind: l.kind,
                bound: l.bound,
                child_extent: cur[di],
                stride: 0,
            });
        }
        // Strides accumulate from the innermost loop outward.
        let mut g = 1u64;
        let mut s = 1u64;
        for info in loops.iter_mut().rev() {
            match info.kind {
                LoopKind::Temporal => {
                    info.stride = g;
                    g *= info.bound;
                }
                LoopKind::Spatial => {
                    info.stride = s;
                    s *= info.bound;
                }
            }
        }
        let reduction_tail = loops
            .iter()
            .filter(|l| {
                l.kind == LoopKind::Temporal && matches!(l.dim, Axis::C | Axis::R | Axis::S)
            })
            .map(|l| (l.bound - 1) * l.stride)
            .sum();
        LoopView {
            loops,
            below_extent: cur,
            total_steps: g,
            total_instances: s,
            reduction_tail,
        }
    }

    /// Lower corner (all seven dimensions) of the tile at `(inst, step)`.
    pub fn tile_lo(&self, inst: u64, step: u64) -> [u64; 7] {
        let mut lo = [0u64; 7];
        for l in &self.loops {
            let digit = match l.kind {
                LoopKind::Temporal => (step / l.stride) % l.bound,
                LoopKind::Spatial => (inst / l.stride) % l.bound,
            };
            lo[dim_index(l.dim)] += digit * l.child_extent;
        }
        lo
    }
}

/// The tile one compute-level instance works on during one temporal step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataSpaceEntry {
    pub spatial_index: u64,
    pub temporal_index: u64,
    /// Output region `[N, K, P, Q]` written this step.
    pub out_box: TensorBox,
    /// Reduction region `[C, R, S]` accumulated into it this step.
    pub reduction_slice: TensorBox,
}

/// Every (instance, step) entry of a mapping, instance-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSpaceTable {
    pub layer: String,
    pub mapping: String,
    pub instances: u64,
    pub steps: u64,
    pub entries: Vec<DataSpaceEntry>,
}

impl DataSpaceTable {
    pub fn entry(&self, inst: u64, step: u64) -> &DataSpaceEntry {
        &self.entries[(inst * self.steps + step) as usize]
    }

    /// CSV dump: one row per entry, fixed column set.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "instance,step,k_lo,k_hi,p_lo,p_hi,q_lo,q_hi,c_lo,c_hi,r_lo,r_hi,s_lo,s_hi"
        )?;
        for e in &self.entries {
            let iv = |b: &TensorBox, a: Axis| b.interval(a).expect("axis present");
            let k = iv(&e.out_box, Axis::K);
            let p = iv(&e.out_box, Axis::P);
            let q = iv(&e.out_box, Axis::Q);
            let c = iv(&e.reduction_slice, Axis::C);
            let r = iv(&e.reduction_slice, Axis::R);
            let s = iv(&e.reduction_slice, Axis::S);
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                e.spatial_index,
                e.temporal_index,
                k.lo,
                k.hi,
                p.lo,
                p.hi,
                q.lo,
                q.hi,
                c.lo,
                c.hi,
                r.lo,
                r.hi,
                s.lo,
                s.hi
            )?;
        }
        Ok(())
    }
}

fn entry_boxes(lo: &[u64; 7], ext: &[u64; 7]) -> (TensorBox, TensorBox) {
    let iv = |di: usize| {
        Interval::new(
            lo[di] as i64,
            (lo[di] + ext[di]) as i64 - 1,
        )
    };
    let out_box = TensorBox::new(
        vec![Axis::N, Axis::K, Axis::P, Axis::Q],
        vec![iv(0), iv(1), iv(3), iv(4)],
    );
    let reduction_slice = TensorBox::new(
        vec![Axis::C, Axis::R, Axis::S],
        vec![iv(2), iv(5), iv(6)],
    );
    (out_box, reduction_slice)
}

/// Time stride of the temporal loop at flat position `loop_index` (nest
/// order over all levels): the number of compute-level steps one iteration
/// advances, i.e. the product of the temporal bounds nested inside it down
/// to the compute level's innermost loop. The innermost temporal loop has
/// stride 1. Spatial loops and loops leaf-ward of the compute level have no
/// stride.
pub fn time_stride(m: &Mapping, spec: &ArchSpec, loop_index: usize) -> Result<u64> {
    let flat: Vec<(usize, &crate::mapping::Loop)> = m.flat_loops().collect();
    let (li, l) = *flat
        .get(loop_index)
        .ok_or_else(|| Error::parse(format!("no loop at position {loop_index}")))?;
    if li > spec.compute {
        return Err(Error::parse(format!(
            "loop at position {loop_index} sits leaf-ward of the compute level and has no time stride"
        )));
    }
    if l.kind == LoopKind::Spatial {
        return Err(Error::parse(format!(
            "loop at position {loop_index} is spatial and has no time stride"
        )));
    }
    Ok(flat[loop_index + 1..]
        .iter()
        .filter(|(lj, lp)| *lj <= spec.compute && lp.kind == LoopKind::Temporal)
        .map(|(_, lp)| lp.bound)
        .product())
}

/// Closed-form data-space table: every entry computed directly from the
/// mapping's mixed-radix structure, O(total entries).
pub fn generate_dataspaces(
    m: &Mapping,
    layer: &LayerShape,
    spec: &ArchSpec,
) -> Result<DataSpaceTable> {
    generate_dataspaces_capped(m, layer, spec, DEFAULT_ENTRY_CAP)
}

pub fn generate_dataspaces_capped(
    m: &Mapping,
    layer: &LayerShape,
    spec: &ArchSpec,
    entry_cap: u64,
) -> Result<DataSpaceTable> {
    count_generation_call();
    validate_mapping(m, layer, spec).into_result()?;
    let view = LoopView::new(m, layer, spec);
    let entries_total = view
        .total_instances
        .checked_mul(view.total_steps)
        .ok_or_else(|| Error::cap("entry count overflows"))?;
    if entries_total > entry_cap {
        return Err(Error::cap(format!(
            "data-space table needs {entries_total} entries, cap is {entry_cap} \
             (analysis intractable at this level)"
        )));
    }
    let mut entries = Vec::with_capacity(entries_total as usize);
    for inst in 0..view.total_instances {
        for step in 0..view.total_steps {
            let lo = view.tile_lo(inst, step);
            let (out_box, reduction_slice) = entry_boxes(&lo, &view.below_extent);
            entries.push(DataSpaceEntry {
                spatial_index: inst,
                temporal_index: step,
                out_box,
                reduction_slice,
            });
        }
    }
    Ok(DataSpaceTable {
        layer: layer.name.clone(),
        mapping: m.encode(spec),
        instances: view.total_instances,
        steps: view.total_steps,
        entries,
    })
}

/// Reference data-space table built by literally running the whole loop nest
/// and recording every 7-D point's (instance, step) visit. Asserts that each
/// point is visited exactly once and that each entry's visits fill its box.
/// Only for small layers; use it to check the closed form, not to analyze.
pub fn oracle_dataspaces(
    m: &Mapping,
    layer: &LayerShape,
    spec: &ArchSpec,
) -> Result<DataSpaceTable> {
    oracle_dataspaces_capped(m, layer, spec, DEFAULT_ORACLE_POINT_CAP)
}

pub fn oracle_dataspaces_capped(
    m: &Mapping,
    layer: &LayerShape,
    spec: &ArchSpec,
    point_cap: u64,
) -> Result<DataSpaceTable> {
    count_generation_call();
    validate_mapping(m, layer, spec).into_result()?;
    let points = layer.iteration_points();
    if points > point_cap {
        return Err(Error::cap(format!(
            "oracle would walk {points} points, cap is {point_cap}"
        )));
    }

    struct Acc {
        count: u64,
        lo: [u64; 7],
        hi: [u64; 7],
    }
    let flat: Vec<(usize, crate::mapping::Loop)> =
        m.flat_loops().map(|(li, l)| (li, *l)).collect();
    let extents: Vec<u64> = LOOP_DIMS.iter().map(|&d| layer.extent(d)).collect();
    let mut visited = vec![false; points as usize];
    let mut cells: std::collections::BTreeMap<(u64, u64), Acc> = std::collections::BTreeMap::new();

    // Depth-first execution of the nest. `origin`/`extent` track the current
    // subregion per dimension; inst/step accumulate mixed-radix indices over
    // the loops at or above the compute level.
    #[allow(clippy::too_many_arguments)] // recursion state, deliberately flat
    fn walk(
        flat: &[(usize, crate::mapping::Loop)],
        depth: usize,
        compute: usize,
        origin: &mut [u64; 7],
        extent: &mut [u64; 7],
        inst: u64,
        step: u64,
        extents: &[u64],
        visited: &mut [bool],
        cells: &mut std::collections::BTreeMap<(u64, u64), Acc>,
    ) {
        if depth == flat.len() {
            debug_assert!(extent.iter().all(|&e| e == 1));
            // Flat id of the single remaining point, row-major over dims.
            let mut id = 0u64;
            for di in 0..7 {
                id = id * extents[di] + origin[di];
            }
            let slot = &mut visited[id as usize];
            assert!(!*slot, "7-D point visited twice by the loop nest");
            *slot = true;
            let acc = cells.entry((inst, step)).or_insert_with(|| Acc {
                count: 0,
                lo: *origin,
                hi: *origin,
            });
            acc.count += 1;
            for (di, &o) in origin.iter().enumerate() {
                acc.lo[di] = acc.lo[di].min(o);
                acc.hi[di] = acc.hi[di].max(o);
            }
            return;
        }
        let (li, l) = flat[depth];
        let di = dim_index(l.dim);
        let child = extent[di] / l.bound;
        let saved_origin = origin[di];
        extent[di] = child;
        for i in 0..l.bound {
            origin[di] = saved_origin + i * child;
            let (inst2, step2) = if li <= compute {
                match l.kind {
                    LoopKind::Spatial => (inst * l.bound + i, step),
                    LoopKind::Temporal => (inst, step * l.bound + i),
                }
            } else {
                (inst, step)
            };
            walk(
                flat, depth + 1, compute, origin, extent, inst2, step2, extents, visited, cells,
            );
        }
        origin[di] = saved_origin;
        extent[di] = child * l.bound;
    }

    let mut origin = [0u64; 7];
    let mut extent = [0u64; 7];
    for (di, &d) in LOOP_DIMS.iter().enumerate() {
        extent[di] = layer.extent(d);
    }
    walk(
        &flat,
        0,
        spec.compute,
        &mut origin,
        &mut extent,
        0,
        0,
        &extents,
        &mut visited,
        &mut cells,
    );
    assert!(
        visited.iter().all(|&v| v),
        "loop nest failed to cover the iteration space"
    );

    let instances: u64 = flat
        .iter()
        .filter(|(li, l)| *li <= spec.compute && l.kind == LoopKind::Spatial)
        .map(|(_, l)| l.bound)
        .product();
    let steps: u64 = flat
        .iter()
        .filter(|(li, l)| *li <= spec.compute && l.kind == LoopKind::Temporal)
        .map(|(_, l)| l.bound)
        .product();

    let mut entries = Vec::with_capacity((instances * steps) as usize);
    for inst in 0..instances {
        for step in 0..steps {
            let acc = cells
                .get(&(inst, step))
                .expect("every (instance, step) cell is visited");
            let mut ext = [0u64; 7];
            let mut vol = 1u64;
            for (di, e) in ext.iter_mut().enumerate() {
                *e = acc.hi[di] - acc.lo[di] + 1;
                vol *= *e;
            }
            assert_eq!(
                vol, acc.count,
                "visited points do not fill an axis-aligned box"
            );
            let (out_box, reduction_slice) = entry_boxes(&acc.lo, &ext);
            entries.push(DataSpaceEntry {
                spatial_index: inst,
                temporal_index: step,
                out_box,
                reduction_slice,
            });
        }
    }
    Ok(DataSpaceTable {
        layer: layer.name.clone(),
        mapping: m.encode(spec),
        instances,
        steps,
        entries,
    })
}

/// Input region `[N, C, H, W]` a data-space entry needs: the reduction slice
/// slid over the output tile (stride 1, halo coordinates).
pub fn input_requirement(entry: &DataSpaceEntry) -> TensorBox {
    let n = entry.out_box.interval(Axis::N).expect("N");
    let p = entry.out_box.interval(Axis::P).expect("P");
    let q = entry.out_box.interval(Axis::Q).expect("Q");
    let c = entry.reduction_slice.interval(Axis::C).expect("C");
    let r = entry.reduction_slice.interval(Axis::R).expect("R");
    let s = entry.reduction_slice.interval(Axis::S).expect("S");
    TensorBox::new(
        vec![Axis::N, Axis::C, Axis::H, Axis::W],
        vec![
            n,
            c,
            Interval::new(p.lo + r.lo, p.hi + r.hi),
            Interval::new(q.lo + s.lo, q.hi + s.hi),
        ],
    )
}
