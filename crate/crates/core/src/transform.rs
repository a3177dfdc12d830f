//! Overlap-driven schedule transformation.
//!
//! Consumer data spaces are re-assigned to (instance, step) slots in
//! ascending order of input ready time, round-robin across instances, so no
//! step waits on a late input while an already-ready data space idles later
//! in the schedule. The loop-nest encoding is untouched: the artifact is the
//! original mapping plus a permutation of its data spaces. Reordering may
//! split reduction partners across instances, so each moved member of a
//! multi-entry reduction group pays one bulk partial-sum move.
//!
//! Works entirely from an existing [`DataSpaceTable`] and [`ReadyTimeTable`];
//! it never regenerates data spaces or re-runs ready-time analysis (the
//! call counters in `dataspace`/`overlap` let tests pin that down).

use crate::arch::ArchSpec;
use crate::dataspace::{DataSpaceEntry, DataSpaceTable};
use crate::overlap::{overlapped_schedule, OverlapSchedule, ReadyTimeTable};
use crate::perf::PerfReport;
use crate::workload::Axis;
use serde::Serialize;
use std::collections::HashMap;

/// A re-timed consumer schedule: where every original (instance, step) entry
/// landed, the resulting ready-time table, and what the move costs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransformedSchedule {
    /// For each original entry (instance-major index): its new
    /// `(instance, step)` slot.
    pub slots: Vec<(u64, u64)>,
    /// Ready times re-indexed to the new slots.
    pub ready: ReadyTimeTable,
    /// Entries that changed instance while sharing their output box (and
    /// hence partial sums) with other entries.
    pub moved_partial_sets: u64,
    pub overhead_ns: f64,
    /// Consumer tail beyond the producer finish under the new order, plus
    /// the movement overhead.
    pub transformed_total_ns: f64,
    pub schedule: OverlapSchedule,
}

impl TransformedSchedule {
    pub fn is_identity(&self) -> bool {
        let steps = self.ready.steps;
        self.slots
            .iter()
            .enumerate()
            .all(|(i, &(inst, step))| inst * steps + step == i as u64)
    }
}

fn out_box_key(e: &DataSpaceEntry) -> [(i64, i64); 4] {
    let iv = |a: Axis| {
        let i = e.out_box.interval(a).expect("output box axis");
        (i.lo, i.hi)
    };
    [iv(Axis::N), iv(Axis::K), iv(Axis::P), iv(Axis::Q)]
}

/// Reorder a consumer's data spaces by ascending ready time (stable on the
/// original step-major order), assigning rank r to instance `r % instances`,
/// step `r / instances`. Returns the permutation, the permuted ready table,
/// the re-scheduled overlap, and the partial-sum movement overhead.
pub fn transform(
    consumer_table: &DataSpaceTable,
    rt: &ReadyTimeTable,
    spec: &ArchSpec,
    producer_report: &PerfReport,
    consumer_report: &PerfReport,
) -> TransformedSchedule {
    assert_eq!(
        (rt.instances, rt.steps),
        (consumer_table.instances, consumer_table.steps),
        "ready-time table does not match the data-space table"
    );
    let instances = consumer_table.instances;
    let steps = consumer_table.steps;
    let n = consumer_table.entries.len();

    // Step-major stable order: with uniform ready times this is exactly the
    // round-robin slot order, making the transform a fixed point.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| {
        let e = &consumer_table.entries[i];
        (rt.ready[i], e.temporal_index, e.spatial_index)
    });

    let mut slots = vec![(0u64, 0u64); n];
    let mut new_ready = vec![crate::overlap::ReadyTime::AlwaysReady; n];
    for (rank, &orig) in order.iter().enumerate() {
        let inst = rank as u64 % instances;
        let step = rank as u64 / instances;
        slots[orig] = (inst, step);
        new_ready[(inst * steps + step) as usize] = rt.ready[orig];
    }

    // Reduction groups: entries sharing an output box hold partials of the
    // same outputs. Moving one such entry to another instance relocates its
    // partial sums.
    let mut group_size: HashMap<[(i64, i64); 4], u64> = HashMap::new();
    for e in &consumer_table.entries {
        *group_size.entry(out_box_key(e)).or_insert(0) += 1;
    }
    let mut moved_partial_sets = 0u64;
    let mut moved_bytes = 0.0f64;
    let wb = spec.word_bits() as f64;
    for (i, e) in consumer_table.entries.iter().enumerate() {
        let instance_changed = slots[i].0 != e.spatial_index;
        if instance_changed && group_size[&out_box_key(e)] > 1 {
            moved_partial_sets += 1;
            moved_bytes += e.out_box.volume() as f64 * wb / 8.0;
        }
    }
    let overhead_ns = match spec.governing_write_bw(spec.compute) {
        Some((_, bw)) if moved_partial_sets > 0 => moved_bytes / bw * spec.timing.t_ccd_l,
        _ => 0.0,
    };

    let ready = ReadyTimeTable {
        producer: rt.producer.clone(),
        consumer: rt.consumer.clone(),
        producer_steps: rt.producer_steps,
        instances,
        steps,
        ready: new_ready,
    };
    let schedule = overlapped_schedule(producer_report, consumer_report, &ready);
    let transformed_total_ns = schedule.overlapped_total_ns + overhead_ns;

    TransformedSchedule {
        slots,
        ready,
        moved_partial_sets,
        overhead_ns,
        transformed_total_ns,
        schedule,
    }
}

/// Materialize the permuted table: entry contents keep their boxes but take
/// their new (instance, step) identity. Feeding this plus the transformed
/// ready table back into [`transform`] yields the identity.
pub fn apply_permutation(table: &DataSpaceTable, ts: &TransformedSchedule) -> DataSpaceTable {
    let steps = table.steps;
    let mut entries = table.entries.clone();
    for (i, &(inst, step)) in ts.slots.iter().enumerate() {
        let mut e = table.entries[i].clone();
        e.spatial_index = inst;
        e.temporal_index = step;
        entries[(inst * steps + step) as usize] = e;
    }
    DataSpaceTable {
        layer: table.layer.clone(),
        mapping: table.mapping.clone(),
        instances: table.instances,
        steps,
        entries,
    }
}
