//! Cross-layer overlap analysis at the compute level.
//!
//! For every consumer (instance, step) this answers: which producer step
//! finishes the last input element this step needs? The analytical path
//! ([`ready_times`]) maps the step's input box into producer output
//! coordinates and evaluates [`DecompositionTable::finish_time`] at one
//! corner per producer spatial slice — O(consumer entries × spatial fanout).
//! The exhaustive path ([`oracle_ready_times`]) intersects every consumer box
//! with every producer box — O(N·M) — and is definitionally correct; the two
//! must agree exactly.
//!
//! [`overlapped_schedule`] turns a ready-time table plus per-step latencies
//! into start times, the consumer's tail latency beyond the producer's
//! finish, and the fraction of consumer work hidden under the producer.

use crate::arch::ArchSpec;
use crate::dataspace::{dim_index, input_requirement, DataSpaceTable, LoopView};
use crate::error::{Error, Result};
use crate::mapping::{validate_mapping, LoopKind, Mapping};
use crate::perf::PerfReport;
use crate::workload::{
    consumer_to_producer_box, padding_between, Axis, LayerShape, ProducerRegion, TensorBox,
};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cell::Cell;
use std::io::Write;

/// Cap on producer_entries * consumer_entries for the exhaustive oracle.
pub const DEFAULT_ORACLE_PAIR_CAP: u64 = 200_000_000;

thread_local! {
    static ANALYSIS_CALLS: Cell<u64> = const { Cell::new(0) };
}

/// How many ready-time analyses (analytical or oracle) ran on this thread.
/// Lets tests assert that schedule transformation reuses existing tables.
pub fn analysis_calls() -> u64 {
    ANALYSIS_CALLS.with(|c| c.get())
}

fn count_analysis_call() {
    ANALYSIS_CALLS.with(|c| c.set(c.get() + 1));
}

/// Producer step at which a consumer step's inputs are complete.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ReadyTime {
    /// No produced data needed (padding only, or no producer at all).
    AlwaysReady,
    AtStep(u64),
}

impl ReadyTime {
    /// CSV / report encoding: -1 for always-ready, otherwise the step.
    pub fn as_i64(self) -> i64 {
        match self {
            ReadyTime::AlwaysReady => -1,
            ReadyTime::AtStep(s) => s as i64,
        }
    }

    pub fn from_i64(v: i64) -> Self {
        if v < 0 {
            ReadyTime::AlwaysReady
        } else {
            ReadyTime::AtStep(v as u64)
        }
    }
}

impl Serialize for ReadyTime {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i64(self.as_i64())
    }
}

impl<'de> Deserialize<'de> for ReadyTime {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(ReadyTime::from_i64(i64::deserialize(d)?))
    }
}

/// Ready times for every consumer (instance, step), instance-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadyTimeTable {
    pub producer: String,
    pub consumer: String,
    pub producer_steps: u64,
    pub instances: u64,
    pub steps: u64,
    pub ready: Vec<ReadyTime>,
}

impl ReadyTimeTable {
    pub fn at(&self, inst: u64, step: u64) -> ReadyTime {
        self.ready[(inst * self.steps + step) as usize]
    }

    /// Collapse instances: a step may start only when every instance's inputs
    /// are ready, so per-step readiness is the max across instances.
    pub fn per_step(&self) -> Vec<ReadyTime> {
        let mut out = vec![ReadyTime::AlwaysReady; self.steps as usize];
        for inst in 0..self.instances {
            for step in 0..self.steps {
                let r = self.at(inst, step);
                if r > out[step as usize] {
                    out[step as usize] = r;
                }
            }
        }
        out
    }

    /// CSV dump: `instance,step,ready` with -1 for always-ready.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "instance,step,ready")?;
        for inst in 0..self.instances {
            for step in 0..self.steps {
                writeln!(w, "{},{},{}", inst, step, self.at(inst, step).as_i64())?;
            }
        }
        Ok(())
    }
}

/// Precomputed walk of a producer mapping's loops for answering "when is
/// output point (n,k,p,q) finished?" in O(loop count).
#[derive(Debug, Clone)]
pub struct DecompositionTable {
    view: LoopView,
    out_extent: [u64; 4],
    /// Per output dim, the producer's spatial slice width: the child extent
    /// of the innermost spatial loop over that dim at or above the compute
    /// level (full extent if the dim is never split spatially there).
    spatial_granularity: [u64; 4],
}

const OUT_DIMS: [Axis; 4] = [Axis::N, Axis::K, Axis::P, Axis::Q];

impl DecompositionTable {
    pub fn new(m: &Mapping, layer: &LayerShape, spec: &ArchSpec) -> Result<Self> {
        validate_mapping(m, layer, spec).into_result()?;
        let view = LoopView::new(m, layer, spec);
        let out_extent = [layer.n, layer.k, layer.p, layer.q];
        let mut spatial_granularity = out_extent;
        for l in &view.loops {
            if l.kind != LoopKind::Spatial {
                continue;
            }
            if let Some(oi) = OUT_DIMS.iter().position(|&d| d == l.dim) {
                // Loops come outer-to-inner, so the last write wins.
                spatial_granularity[oi] = l.child_extent;
            }
        }
        Ok(DecompositionTable {
            view,
            out_extent,
            spatial_granularity,
        })
    }

    pub fn steps(&self) -> u64 {
        self.view.total_steps
    }

    pub fn instances(&self) -> u64 {
        self.view.total_instances
    }

    /// Instance and step at which output point `(n, k, p, q)` is complete,
    /// i.e. its last reduction contribution has been applied. Walks the loops
    /// top-down, converting per-dimension offsets into spatial/temporal index
    /// contributions, then adds the trailing reduction steps.
    pub fn finish_time(&self, coord: [u64; 4]) -> Result<(u64, u64)> {
        for (i, (&c, &e)) in coord.iter().zip(self.out_extent.iter()).enumerate() {
            if c >= e {
                return Err(Error::parse(format!(
                    "output coordinate {c} out of range for {} (extent {e})",
                    OUT_DIMS[i]
                )));
            }
        }
        Ok(self.finish_time_unchecked(coord))
    }

    fn finish_time_unchecked(&self, coord: [u64; 4]) -> (u64, u64) {
        let mut lower = [0u64; 4]; // running lower bound per output dim
        let mut spatial = 0u64;
        let mut temporal = 0u64;
        for l in &self.view.loops {
            let Some(oi) = OUT_DIMS.iter().position(|&d| d == l.dim) else {
                continue; // reduction dims shift nothing spatially
            };
            let idx = (coord[oi] - lower[oi]) / l.child_extent;
            lower[oi] += idx * l.child_extent;
            match l.kind {
                LoopKind::Spatial => spatial += idx * l.stride,
                LoopKind::Temporal => temporal += idx * l.stride,
            }
        }
        (spatial, temporal + self.view.reduction_tail)
    }

    /// Latest finish step over every point of `box_` (producer output
    /// coordinates). Within one spatial slice the finish step is monotone in
    /// each coordinate, so only the top corner of each slice the box touches
    /// needs evaluating.
    fn box_ready_step(&self, box_: &TensorBox) -> u64 {
        let mut corners: [Vec<u64>; 4] = Default::default();
        for (oi, d) in OUT_DIMS.iter().enumerate() {
            let iv = box_.interval(*d).expect("producer box has N,K,P,Q");
            let (lo, hi) = (iv.lo as u64, iv.hi as u64);
            let g = self.spatial_granularity[oi];
            let mut pos = lo / g * g;
            while pos <= hi {
                corners[oi].push((pos + g - 1).min(hi));
                pos += g;
            }
        }
        let mut best = 0u64;
        for &n in &corners[0] {
            for &k in &corners[1] {
                for &p in &corners[2] {
                    for &q in &corners[3] {
                        let (_, t) = self.finish_time_unchecked([n, k, p, q]);
                        best = best.max(t);
                    }
                }
            }
        }
        best
    }
}

/// Convenience wrapper matching the one-shot call shape: build the
/// decomposition for `(m, layer)` and locate a single output point.
pub fn finish_time(
    m: &Mapping,
    layer: &LayerShape,
    spec: &ArchSpec,
    coord: [u64; 4],
) -> Result<(u64, u64)> {
    DecompositionTable::new(m, layer, spec)?.finish_time(coord)
}

/// Analytical ready times: streams consumer entries (nothing materialized),
/// maps each step's input box into producer output coordinates, and reads the
/// finish step off the producer decomposition. Needs the layers to chain.
pub fn ready_times(
    producer: &LayerShape,
    pm: &Mapping,
    consumer: &LayerShape,
    cm: &Mapping,
    spec: &ArchSpec,
) -> Result<ReadyTimeTable> {
    count_analysis_call();
    let pad = padding_between(producer, consumer)?;
    let ptab = DecompositionTable::new(pm, producer, spec)?;
    validate_mapping(cm, consumer, spec).into_result()?;
    let cview = LoopView::new(cm, consumer, spec);

    let mut ready =
        Vec::with_capacity((cview.total_instances * cview.total_steps) as usize);
    for inst in 0..cview.total_instances {
        for step in 0..cview.total_steps {
            let lo = cview.tile_lo(inst, step);
            let need = consumer_tile_input(&lo, &cview.below_extent);
            let r = match consumer_to_producer_box(&need, producer, pad) {
                ProducerRegion::Padding => ReadyTime::AlwaysReady,
                ProducerRegion::Produced { box_, .. } => {
                    ReadyTime::AtStep(ptab.box_ready_step(&box_))
                }
            };
            ready.push(r);
        }
    }
    Ok(ReadyTimeTable {
        producer: producer.name.clone(),
        consumer: consumer.name.clone(),
        producer_steps: ptab.steps(),
        instances: cview.total_instances,
        steps: cview.total_steps,
        ready,
    })
}

/// Input box of the consumer tile at `lo` with per-dim extents `ext`,
/// in the consumer's (padded) input coordinates.
fn consumer_tile_input(lo: &[u64; 7], ext: &[u64; 7]) -> TensorBox {
    let iv = |d: Axis| {
        let di = dim_index(d);
        crate::workload::Interval::new(lo[di] as i64, (lo[di] + ext[di]) as i64 - 1)
    };
    let n = iv(Axis::N);
    let c = iv(Axis::C);
    let p = iv(Axis::P);
    let q = iv(Axis::Q);
    let r = iv(Axis::R);
    let s = iv(Axis::S);
    TensorBox::new(
        vec![Axis::N, Axis::C, Axis::H, Axis::W],
        vec![
            n,
            c,
            crate::workload::Interval::new(p.lo + r.lo, p.hi + r.hi),
            crate::workload::Interval::new(q.lo + s.lo, q.hi + s.hi),
        ],
    )
}

/// Exhaustive reference: intersect every consumer step's required producer
/// box with every producer entry's output box and keep the latest producer
/// step seen. Definitionally correct, O(N·M); only for validation and the
/// runtime-scaling benchmark.
pub fn oracle_ready_times(
    producer: &LayerShape,
    pm: &Mapping,
    consumer: &LayerShape,
    cm: &Mapping,
    spec: &ArchSpec,
) -> Result<ReadyTimeTable> {
    let ptab = crate::dataspace::generate_dataspaces(pm, producer, spec)?;
    let ctab = crate::dataspace::generate_dataspaces(cm, consumer, spec)?;
    oracle_ready_times_from_tables(&ptab, &ctab, producer, consumer)
}

/// Oracle core over pre-built tables (lets benchmarks time just the scan).
pub fn oracle_ready_times_from_tables(
    ptab: &DataSpaceTable,
    ctab: &DataSpaceTable,
    producer: &LayerShape,
    consumer: &LayerShape,
) -> Result<ReadyTimeTable> {
    count_analysis_call();
    let pad = padding_between(producer, consumer)?;
    let pairs = (ptab.entries.len() as u64) * (ctab.entries.len() as u64);
    if pairs > DEFAULT_ORACLE_PAIR_CAP {
        return Err(Error::cap(format!(
            "oracle would test {pairs} box pairs, cap is {DEFAULT_ORACLE_PAIR_CAP}"
        )));
    }
    let mut ready = Vec::with_capacity(ctab.entries.len());
    for ce in &ctab.entries {
        let need = input_requirement(ce);
        let r = match consumer_to_producer_box(&need, producer, pad) {
            ProducerRegion::Padding => ReadyTime::AlwaysReady,
            ProducerRegion::Produced { box_, .. } => {
                let mut latest = None;
                for pe in &ptab.entries {
                    if pe.out_box.intersects(&box_) {
                        let t = pe.temporal_index;
                        latest = Some(latest.map_or(t, |m: u64| m.max(t)));
                    }
                }
                match latest {
                    Some(t) => ReadyTime::AtStep(t),
                    None => ReadyTime::AlwaysReady,
                }
            }
        };
        ready.push(r);
    }
    Ok(ReadyTimeTable {
        producer: producer.name.clone(),
        consumer: consumer.name.clone(),
        producer_steps: ptab.steps,
        instances: ctab.instances,
        steps: ctab.steps,
        ready,
    })
}

/// The consumer's execution timeline against a finished-at-uniform-rate
/// producer: step `t` may start once producer step `ready_t` has completed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapSchedule {
    /// Start time of each consumer step, ns, on the shared clock where the
    /// producer starts at 0.
    pub consumer_starts_ns: Vec<f64>,
    pub producer_finish_ns: f64,
    pub consumer_finish_ns: f64,
    pub consumer_sequential_ns: f64,
    /// Consumer time remaining after the producer finishes (the tail that
    /// overlap could not hide), clamped to [0, consumer_sequential_ns].
    pub overlapped_total_ns: f64,
    /// Share of the consumer's sequential time hidden under the producer.
    pub overlap_fraction: f64,
}

impl OverlapSchedule {
    /// End-to-end time of the producer+consumer pair.
    pub fn pair_makespan_ns(&self) -> f64 {
        self.producer_finish_ns + self.overlapped_total_ns
    }
}

/// Schedule the consumer against the producer under per-layer uniform step
/// latencies. A step waits for its predecessor step and for its inputs;
/// an input ready at producer step r is available once r+1 producer steps
/// have elapsed. Always-ready steps may start at time 0.
pub fn overlapped_schedule(
    producer_report: &PerfReport,
    consumer_report: &PerfReport,
    rt: &ReadyTimeTable,
) -> OverlapSchedule {
    assert_eq!(
        rt.producer_steps, producer_report.steps,
        "ready-time table does not match the producer report"
    );
    assert_eq!(
        rt.steps, consumer_report.steps,
        "ready-time table does not match the consumer report"
    );
    let sp = producer_report.step_latency_ns;
    let sc = consumer_report.step_latency_ns;
    let per_step = rt.per_step();
    let steps = per_step.len();

    let dep = |r: ReadyTime| -> f64 {
        match r {
            ReadyTime::AlwaysReady => 0.0,
            ReadyTime::AtStep(s) => (s + 1) as f64 * sp,
        }
    };

    let mut starts = Vec::with_capacity(steps);
    let mut prev_end = 0.0f64;
    for &r in &per_step {
        let start = prev_end.max(dep(r));
        starts.push(start);
        prev_end = start + sc;
    }

    // Closed form for the finish keeps long chains free of accumulated
    // rounding: finish = max over t of dep_t + (steps - t) * sc.
    let consumer_finish_ns = per_step
        .iter()
        .enumerate()
        .map(|(t, &r)| dep(r) + (steps - t) as f64 * sc)
        .fold(0.0f64, f64::max);

    let producer_finish_ns = producer_report.steps as f64 * sp;
    let consumer_sequential_ns = consumer_report.steps as f64 * sc;
    let overlapped_total_ns =
        (consumer_finish_ns - producer_finish_ns).clamp(0.0, consumer_sequential_ns);
    let overlap_fraction = (1.0 - overlapped_total_ns / consumer_sequential_ns).clamp(0.0, 1.0);

    OverlapSchedule {
        consumer_starts_ns: starts,
        producer_finish_ns,
        consumer_finish_ns,
        consumer_sequential_ns,
        overlapped_total_ns,
        overlap_fraction,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{parse_arch, test_docs};
    use crate::dataspace::generate_dataspaces;
    use crate::perf::evaluate;
    use crate::workload::LayerKind;

    fn two_bank() -> ArchSpec {
        parse_arch(test_docs::TWO_BANK).unwrap()
    }

    fn conv(name: &str, k: u64, c: u64, p: u64, q: u64, r: u64, s: u64) -> LayerShape {
        LayerShape {
            name: name.into(),
            kind: LayerKind::Conv,
            n: 1,
            k,
            c,
            p,
            q,
            r,
            s,
        }
    }

    fn l1() -> LayerShape {
        conv("L1", 2, 1, 2, 2, 1, 1)
    }

    fn l2() -> LayerShape {
        conv("L2", 1, 2, 2, 2, 1, 1)
    }

    #[test]
    fn finish_time_canonical_point() {
        let spec = two_bank();
        let m = Mapping::parse("Channel: sK2 | Bank: tP2 tQ2", &spec).unwrap();
        let (s, t) = finish_time(&m, &l1(), &spec, [0, 1, 1, 0]).unwrap();
        assert_eq!((s, t), (1, 2));
    }

    #[test]
    fn finish_time_origin_carries_only_reduction_tail() {
        let spec = two_bank();
        let layer = conv("L", 2, 3, 2, 2, 1, 1);
        let m = Mapping::parse("Bank: tC3 tP2 tQ2 | Column: sK2", &spec).unwrap();
        let (_, t) = finish_time(&m, &layer, &spec, [0, 0, 0, 0]).unwrap();
        // C-loop stride is 4; its last iteration trails by (3-1)*4 steps.
        assert_eq!(t, 8);
        let (_, t_last) = finish_time(&m, &layer, &spec, [0, 1, 1, 1]).unwrap();
        assert_eq!(t_last, 11); // 2*1 + 1 + tail 8
    }

    #[test]
    fn finish_time_all_spatial_is_step_zero() {
        let spec = two_bank();
        let m = Mapping::parse("Channel: sK2 | Column: sP2 sQ2", &spec).unwrap();
        for k in 0..2 {
            for p in 0..2 {
                for q in 0..2 {
                    let (_, t) = finish_time(&m, &l1(), &spec, [0, k, p, q]).unwrap();
                    assert_eq!(t, 0);
                }
            }
        }
    }

    #[test]
    fn finish_time_rejects_out_of_range() {
        let spec = two_bank();
        let m = Mapping::parse("Channel: sK2 | Bank: tP2 tQ2", &spec).unwrap();
        assert!(finish_time(&m, &l1(), &spec, [0, 2, 0, 0]).is_err());
    }

    /// Reference finish step: last (instance, step) whose out box holds the
    /// point, straight from a materialized table.
    fn table_finish_step(table: &DataSpaceTable, coord: [u64; 4]) -> u64 {
        let dims = [Axis::N, Axis::K, Axis::P, Axis::Q];
        table
            .entries
            .iter()
            .filter(|e| {
                dims.iter().enumerate().all(|(i, &d)| {
                    e.out_box.interval(d).unwrap().contains(coord[i] as i64)
                })
            })
            .map(|e| e.temporal_index)
            .max()
            .expect("point covered")
    }

    #[test]
    fn finish_time_matches_table_scan_everywhere() {
        let spec = two_bank();
        let layer = conv("L", 4, 2, 4, 2, 1, 1);
        for enc in [
            "DRAM: tK2 | Channel: sK2 tP2 | Bank: tQ2 tP2 | Column: tC2",
            "Channel: tC2 | Bank: tK4 tP4 tQ2",
            "Channel: sK2 | Bank: tP2 tC2 | Column: tK2 tP2 tQ2",
        ] {
            let m = Mapping::parse(enc, &spec).unwrap();
            assert!(validate_mapping(&m, &layer, &spec).valid, "{enc}");
            let table = generate_dataspaces(&m, &layer, &spec).unwrap();
            let dt = DecompositionTable::new(&m, &layer, &spec).unwrap();
            for k in 0..layer.k {
                for p in 0..layer.p {
                    for q in 0..layer.q {
                        let coord = [0, k, p, q];
                        let (_, t) = dt.finish_time(coord).unwrap();
                        assert_eq!(t, table_finish_step(&table, coord), "{enc} {coord:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn ready_times_canonical_pair_is_the_identity() {
        let spec = two_bank();
        let pm = Mapping::parse("Channel: sK2 | Bank: tP2 tQ2", &spec).unwrap();
        let cm = Mapping::parse("Bank: tP2 tQ2 | Column: tC2", &spec).unwrap();
        let rt = ready_times(&l1(), &pm, &l2(), &cm, &spec).unwrap();
        assert_eq!(rt.instances, 1);
        assert_eq!(rt.steps, 4);
        let got: Vec<i64> = rt.ready.iter().map(|r| r.as_i64()).collect();
        assert_eq!(got, vec![0, 1, 2, 3]);
    }

    #[test]
    fn padding_rows_are_always_ready() {
        let spec = two_bank();
        let producer = conv("P", 1, 1, 1, 1, 1, 1);
        let consumer = conv("C", 1, 1, 1, 1, 3, 1);
        let pm = Mapping::parse("-", &spec).unwrap();
        let cm = Mapping::parse("Bank: tR3", &spec).unwrap();
        let rt = ready_times(&producer, &pm, &consumer, &cm, &spec).unwrap();
        let got: Vec<i64> = rt.ready.iter().map(|r| r.as_i64()).collect();
        // r=0 reads the top padding row, r=2 the bottom one.
        assert_eq!(got, vec![-1, 0, -1]);
    }

    #[test]
    fn full_dependency_waits_for_last_producer_step() {
        let spec = two_bank();
        let producer = conv("P", 2, 1, 2, 2, 1, 1);
        let consumer = conv("C", 4, 2, 1, 1, 2, 2);
        let pm = Mapping::parse("Bank: tK2 tP2 tQ2", &spec).unwrap();
        let cm = Mapping::parse("Bank: tK4 | Column: tC2 tR2 tS2", &spec).unwrap();
        let rt = ready_times(&producer, &pm, &consumer, &cm, &spec).unwrap();
        assert!(rt
            .ready
            .iter()
            .all(|&r| r == ReadyTime::AtStep(7)));
    }

    #[test]
    fn analytic_equals_oracle_on_assorted_pairs() {
        let spec = two_bank();
        let cases: Vec<(LayerShape, &str, LayerShape, &str)> = vec![
            (
                l1(),
                "Channel: sK2 | Bank: tP2 tQ2",
                l2(),
                "Bank: tP2 tQ2 | Column: tC2",
            ),
            (
                conv("A", 4, 1, 4, 4, 1, 1),
                "Channel: sK2 | Bank: tK2 tP4 tQ2 | Column: tQ2",
                conv("B", 2, 4, 4, 4, 1, 1),
                "Channel: sK2 | Bank: tC4 tP2 tQ4 | Column: tP2",
            ),
            (
                conv("A", 2, 1, 4, 4, 1, 1),
                "Bank: tP4 tQ4 | Column: sK2",
                conv("B", 2, 2, 4, 4, 3, 3),
                "Channel: sK2 | Bank: tP4 tQ2 | Column: tC2 tQ2 tR3 tS3",
            ),
            (
                conv("A", 2, 1, 4, 4, 1, 1),
                "Channel: tP2 | Bank: tQ4 tK2 tP2",
                conv("B", 4, 2, 2, 2, 3, 3),
                "Bank: tK2 tQ2 tP2 | Column: sK2 tC2 tR3 tS3",
            ),
        ];
        for (pl, pe, cl, ce) in cases {
            let pm = Mapping::parse(pe, &spec).unwrap();
            let cm = Mapping::parse(ce, &spec).unwrap();
            assert!(validate_mapping(&pm, &pl, &spec).valid, "{pe}");
            assert!(validate_mapping(&cm, &cl, &spec).valid, "{ce}");
            let a = ready_times(&pl, &pm, &cl, &cm, &spec).unwrap();
            let o = oracle_ready_times(&pl, &pm, &cl, &cm, &spec).unwrap();
            assert_eq!(a, o, "{pe} -> {ce}");
        }
    }

    #[test]
    fn corner_rule_matches_max_over_all_box_points() {
        // Every point of every required box, brute force, no corner trick.
        let spec = two_bank();
        let pl = conv("A", 4, 1, 4, 4, 1, 1);
        let cl = conv("B", 2, 4, 4, 4, 1, 1);
        let pm = Mapping::parse("Channel: sK2 | Bank: tK2 tP4 | Column: tQ4", &spec).unwrap();
        let cm = Mapping::parse("Channel: sK2 | Bank: tC4 tP2 tQ4 | Column: tP2", &spec).unwrap();
        let dt = DecompositionTable::new(&pm, &pl, &spec).unwrap();
        let ctab = generate_dataspaces(&cm, &cl, &spec).unwrap();
        let pad = padding_between(&pl, &cl).unwrap();
        let rt = ready_times(&pl, &pm, &cl, &cm, &spec).unwrap();
        for (i, ce) in ctab.entries.iter().enumerate() {
            let need = input_requirement(ce);
            if let ProducerRegion::Produced { box_, .. } =
                consumer_to_producer_box(&need, &pl, pad)
            {
                let mut latest = 0;
                let iv = |d| box_.interval(d).unwrap();
                for n in iv(Axis::N).lo..=iv(Axis::N).hi {
                    for k in iv(Axis::K).lo..=iv(Axis::K).hi {
                        for p in iv(Axis::P).lo..=iv(Axis::P).hi {
                            for q in iv(Axis::Q).lo..=iv(Axis::Q).hi {
                                let (_, t) = dt
                                    .finish_time([n as u64, k as u64, p as u64, q as u64])
                                    .unwrap();
                                latest = latest.max(t);
                            }
                        }
                    }
                }
                assert_eq!(rt.ready[i], ReadyTime::AtStep(latest));
            }
        }
    }

    fn report_with(steps: u64, step_latency_ns: f64) -> PerfReport {
        PerfReport {
            layer: "x".into(),
            mapping: "-".into(),
            instances: 1,
            steps,
            lanes: 1,
            macs_per_step: 1,
            step_latency_ns,
            compute_ns: steps as f64 * step_latency_ns,
            reduction_ns: 0.0,
            transfer_ns: 0.0,
            total_ns: steps as f64 * step_latency_ns,
            aap_count: 0,
            moved_bits: 0,
            energy_pj: 0.0,
        }
    }

    fn rt_of(producer_steps: u64, ready: Vec<ReadyTime>) -> ReadyTimeTable {
        ReadyTimeTable {
            producer: "p".into(),
            consumer: "c".into(),
            producer_steps,
            instances: 1,
            steps: ready.len() as u64,
            ready,
        }
    }

    #[test]
    fn canonical_schedule_hides_three_quarters() {
        // Ready table from the real canonical pair; equal step latencies.
        let spec = two_bank();
        let pm = Mapping::parse("Channel: sK2 | Bank: tP2 tQ2", &spec).unwrap();
        let cm = Mapping::parse("Bank: tP2 tQ2 | Column: tC2", &spec).unwrap();
        let rt = ready_times(&l1(), &pm, &l2(), &cm, &spec).unwrap();
        let sp = 83306.0;
        let pr = report_with(4, sp);
        let cr = report_with(4, sp);
        let s = overlapped_schedule(&pr, &cr, &rt);
        assert_eq!(s.overlap_fraction, 0.75);
        assert_eq!(s.overlapped_total_ns, sp);
        assert_eq!(
            s.consumer_starts_ns,
            vec![sp, 2.0 * sp, 3.0 * sp, 4.0 * sp]
        );
        assert_eq!(s.pair_makespan_ns(), 5.0 * sp);
    }

    #[test]
    fn canonical_pair_with_true_latencies_still_overlaps() {
        // Same pair, real evaluated reports (consumer steps are 2 MACs wide).
        let spec = two_bank();
        let pm = Mapping::parse("Channel: sK2 | Bank: tP2 tQ2", &spec).unwrap();
        let cm = Mapping::parse("Bank: tP2 tQ2 | Column: tC2", &spec).unwrap();
        let rt = ready_times(&l1(), &pm, &l2(), &cm, &spec).unwrap();
        let ptab = generate_dataspaces(&pm, &l1(), &spec).unwrap();
        let ctab = generate_dataspaces(&cm, &l2(), &spec).unwrap();
        let pr = evaluate(&pm, &l1(), &spec, &ptab, 1).unwrap();
        let cr = evaluate(&cm, &l2(), &spec, &ctab, 1).unwrap();
        let s = overlapped_schedule(&pr, &cr, &rt);
        assert!(s.overlap_fraction > 0.0 && s.overlap_fraction < 1.0);
        assert!(s.overlapped_total_ns <= s.consumer_sequential_ns);
        // First consumer step still waits for producer step 0 only.
        assert_eq!(s.consumer_starts_ns[0], pr.step_latency_ns);
    }

    #[test]
    fn waiting_for_last_step_means_no_overlap() {
        let pr = report_with(4, 10.0);
        let cr = report_with(3, 7.0);
        let rt = rt_of(4, vec![ReadyTime::AtStep(3); 3]);
        let s = overlapped_schedule(&pr, &cr, &rt);
        assert_eq!(s.overlap_fraction, 0.0);
        assert_eq!(s.overlapped_total_ns, 21.0);
        assert_eq!(s.consumer_finish_ns, 40.0 + 21.0);
    }

    #[test]
    fn always_ready_runs_from_time_zero() {
        let pr = report_with(4, 10.0);
        let cr = report_with(8, 10.0);
        let rt = rt_of(4, vec![ReadyTime::AlwaysReady; 8]);
        let s = overlapped_schedule(&pr, &cr, &rt);
        // Consumer: 80 ns from t=0; producer finishes at 40: half hidden.
        assert_eq!(s.overlapped_total_ns, 40.0);
        assert_eq!(s.overlap_fraction, 0.5);
        let short = overlapped_schedule(&pr, &report_with(2, 10.0), &rt_of(4, vec![ReadyTime::AlwaysReady; 2]));
        assert_eq!(short.overlap_fraction, 1.0); // fully inside the producer
        assert_eq!(short.overlapped_total_ns, 0.0);
    }

    #[test]
    fn per_step_collapse_takes_worst_instance() {
        let rt = ReadyTimeTable {
            producer: "p".into(),
            consumer: "c".into(),
            producer_steps: 8,
            instances: 2,
            steps: 2,
            ready: vec![
                ReadyTime::AtStep(1),
                ReadyTime::AlwaysReady,
                ReadyTime::AtStep(5),
                ReadyTime::AtStep(2),
            ],
        };
        assert_eq!(
            rt.per_step(),
            vec![ReadyTime::AtStep(5), ReadyTime::AtStep(2)]
        );
    }

    #[test]
    fn ready_csv_uses_minus_one_sentinel() {
        let rt = rt_of(4, vec![ReadyTime::AlwaysReady, ReadyTime::AtStep(3)]);
        let mut buf = Vec::new();
        rt.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "instance,step,ready\n0,0,-1\n0,1,3\n");
    }

    #[test]
    fn analysis_counter_ticks() {
        let spec = two_bank();
        let pm = Mapping::parse("Channel: sK2 | Bank: tP2 tQ2", &spec).unwrap();
        let cm = Mapping::parse("Bank: tP2 tQ2 | Column: tC2", &spec).unwrap();
        let before = analysis_calls();
        let _ = ready_times(&l1(), &pm, &l2(), &cm, &spec).unwrap();
        assert_eq!(analysis_calls(), before + 1);
    }
}
