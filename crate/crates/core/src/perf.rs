//! Sequential (no cross-layer overlap) latency and energy of one mapping.
//!
//! Every temporal step runs the same tile shape, so the layer's latency is
//! `steps * step_latency + transfer`. A step serializes its MACs over the
//! lanes below the compute level, then merges spatially-split partial sums
//! with a serial addition chain plus a gather over the governing write
//! bandwidth. The finished output moves once to the next layer's input
//! locations over the channels allocated to this layer.

use crate::arch::{add_cost, mac_cost, ArchEnergy, ArchSpec};
use crate::dataspace::DataSpaceTable;
use crate::error::{Error, Result};
use crate::mapping::{LoopKind, Mapping};
use crate::workload::{output_footprint, Axis, LayerShape};
use serde::{Deserialize, Serialize};

/// Sequential cost of one (layer, mapping) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfReport {
    pub layer: String,
    pub mapping: String,
    pub instances: u64,
    pub steps: u64,
    /// Parallel MAC lanes inside one compute-level instance.
    pub lanes: u64,
    /// MACs one instance performs in one step.
    pub macs_per_step: u64,
    pub step_latency_ns: f64,
    pub compute_ns: f64,
    pub reduction_ns: f64,
    pub transfer_ns: f64,
    pub total_ns: f64,
    pub aap_count: u64,
    pub moved_bits: u64,
    pub energy_pj: f64,
}

/// Total energy from AAP activity plus bit movement: each AAP costs two row
/// activations; each moved bit pays the sense-amp path in and out plus I/O.
pub fn energy_pj(aap_count: u64, moved_bits: u64, energy: &ArchEnergy) -> f64 {
    aap_count as f64 * 2.0 * energy.e_act
        + moved_bits as f64 * (energy.e_pre_gsa + energy.e_post_gsa + energy.e_io)
}

/// Number of spatially-split partial sums feeding one output element: the
/// product of all spatial loop bounds over reduction dimensions (C, R, S) at
/// any level. 1 means every output is reduced in place.
fn partials_per_output(m: &Mapping) -> u64 {
    m.flat_loops()
        .filter(|(_, l)| {
            l.kind == LoopKind::Spatial && matches!(l.dim, Axis::C | Axis::R | Axis::S)
        })
        .map(|(_, l)| l.bound)
        .product()
}

/// Temporal reduction revisits of one output element at the compute level:
/// each revisit re-merges the spatial partials of its slice.
fn temporal_reduction_visits(m: &Mapping, spec: &ArchSpec) -> u64 {
    m.flat_loops()
        .filter(|(li, l)| {
            *li <= spec.compute
                && l.kind == LoopKind::Temporal
                && matches!(l.dim, Axis::C | Axis::R | Axis::S)
        })
        .map(|(_, l)| l.bound)
        .product()
}

/// Evaluate a mapping's sequential latency and energy. `channels` is the
/// number of memory channels allocated to this layer for moving its output
/// onward; the table must belong to `(m, layer)`.
pub fn evaluate(
    m: &Mapping,
    layer: &LayerShape,
    spec: &ArchSpec,
    table: &DataSpaceTable,
    channels: u64,
) -> Result<PerfReport> {
    if channels == 0 {
        return Err(Error::parse("layer channel allocation must be >= 1"));
    }
    let lanes = m.lanes_below_compute(spec);
    if lanes == 0 {
        return Err(Error::InvalidMapping(vec![
            "mapping has zero compute lanes".into()
        ]));
    }
    let wb = spec.word_bits();
    let mac = mac_cost(wb, spec);
    let (add_aaps, add_ns) = add_cost(wb, spec);
    let bytes_per_ns = |bw_bytes_per_cycle: f64| bw_bytes_per_cycle / spec.timing.t_ccd_l;
    let governing_bw = spec.governing_write_bw(spec.compute).map(|(_, bw)| bw);

    // Uniform step latency: the widest step governs all of them. Tiles are
    // uniform by construction, but scan anyway rather than trust entry 0.
    let (macs_per_step, out_tile_vol) = table
        .entries
        .iter()
        .map(|e| {
            let ov = e.out_box.volume();
            (ov * e.reduction_slice.volume(), ov)
        })
        .max()
        .ok_or_else(|| Error::parse("data-space table has no entries"))?;

    let serialized_macs = macs_per_step.div_ceil(lanes);
    let step_compute_ns = serialized_macs as f64 * mac.latency_ns;

    let partials = partials_per_output(m);
    let gather_bytes = ((partials - 1) * out_tile_vol) as f64 * wb as f64 / 8.0;
    let gather_ns = match governing_bw {
        Some(bw) if partials > 1 => gather_bytes / bytes_per_ns(bw),
        _ => 0.0,
    };
    let step_reduction_ns = (partials - 1) as f64 * add_ns + gather_ns;

    let step_latency_ns = step_compute_ns + step_reduction_ns;
    let compute_ns = table.steps as f64 * step_compute_ns;
    let reduction_ns = table.steps as f64 * step_reduction_ns;

    let out_elems = output_footprint(layer).volume();
    let out_bytes = out_elems as f64 * wb as f64 / 8.0;
    let transfer_ns = match governing_bw {
        Some(bw) => out_bytes / (channels as f64 * bytes_per_ns(bw)),
        None => 0.0,
    };

    // Operation counts: every MAC of the iteration space runs once; every
    // merge event adds (and moves) one partial per surviving chain link.
    let total_macs = macs_per_step * table.steps * table.instances;
    let reduction_adds = out_elems * temporal_reduction_visits(m, spec) * (partials - 1);
    let aap_count = total_macs * mac.aap_count + reduction_adds * add_aaps;
    let reduction_moved_bits = if governing_bw.is_some() {
        reduction_adds * wb as u64
    } else {
        0
    };
    let transfer_bits = if governing_bw.is_some() {
        out_elems * wb as u64
    } else {
        0
    };
    let moved_bits = reduction_moved_bits + transfer_bits;
    let energy = energy_pj(aap_count, moved_bits, &spec.energy);

    Ok(PerfReport {
        layer: layer.name.clone(),
        mapping: m.encode(spec),
        instances: table.instances,
        steps: table.steps,
        lanes,
        macs_per_step,
        step_latency_ns,
        compute_ns,
        reduction_ns,
        transfer_ns,
        total_ns: compute_ns + reduction_ns + transfer_ns,
        aap_count,
        moved_bits,
        energy_pj: energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{parse_arch, test_docs};
    use crate::dataspace::generate_dataspaces;
    use crate::workload::LayerKind;

    const NATIVE_ONE_LEVEL: &str = r#"{
      "arch": {
        "name": "Array", "instances": 1, "word_bits": 16,
        "capacity_bits": 1048576,
        "pim_ops": {"add": 1.0, "multiply": 1.0}
      },
      "compute_level": "Array",
      "timing": {"t_RC": 45, "t_RCD": 16, "t_RAS": 29, "t_CL": 16,
                 "t_RRD": 2, "t_WR": 16, "t_CCD_S": 2, "t_CCD_L": 4},
      "energy": {"e_ACT": 909, "e_Pre-GSA": 1.51, "e_Post-GSA": 1.17, "e_I/O": 0.80}
    }"#;

    fn two_bank() -> ArchSpec {
        parse_arch(test_docs::TWO_BANK).unwrap()
    }

    fn layer(name: &str, k: u64, c: u64, p: u64, q: u64) -> LayerShape {
        LayerShape {
            name: name.into(),
            kind: LayerKind::Conv,
            n: 1,
            k,
            c,
            p,
            q,
            r: 1,
            s: 1,
        }
    }

    fn eval(text: &str, l: &LayerShape, spec: &ArchSpec, channels: u64) -> PerfReport {
        let m = Mapping::parse(text, spec).unwrap();
        let t = generate_dataspaces(&m, l, spec).unwrap();
        evaluate(&m, l, spec, &t, channels).unwrap()
    }

    #[test]
    fn canonical_l1_frozen_numbers() {
        let spec = two_bank();
        let l1 = layer("L1", 2, 1, 2, 2);
        let r = eval("Channel: sK2 | Bank: tP2 tQ2", &l1, &spec, 1);
        assert_eq!(r.steps, 4);
        assert_eq!(r.instances, 2);
        assert_eq!(r.macs_per_step, 1);
        assert_eq!(r.step_latency_ns, 83306.0);
        assert_eq!(r.compute_ns, 333224.0);
        assert_eq!(r.reduction_ns, 0.0);
        // 8 outputs * 2 B over 16 B/cycle * 4 ns.
        assert_eq!(r.transfer_ns, 4.0);
        assert_eq!(r.total_ns, 333228.0);
        assert_eq!(r.aap_count, 8 * 1105);
        assert_eq!(r.moved_bits, 128);
        assert_eq!(r.energy_pj, 8840.0 * 1818.0 + 128.0 * 3.48);
    }

    #[test]
    fn spatial_reduction_pays_serial_adds_and_gather() {
        let spec = two_bank();
        let l = layer("L", 1, 2, 2, 2);
        let r = eval("Channel: sC2 | Bank: tP2 tQ2", &l, &spec, 1);
        let add_ns = 65.0 * 74.0;
        // One merge of one partial value per step: 2 bytes over 4 B/ns.
        assert_eq!(r.step_latency_ns, 83306.0 + add_ns + 0.5);
        assert_eq!(r.reduction_ns, 4.0 * (add_ns + 0.5));
        // 4 outputs, one merge each, 65 AAPs/add on top of 8 MACs.
        assert_eq!(r.aap_count, 8 * 1105 + 4 * 65);
        // 4 moved partials + 4 transferred outputs, 16 bits each.
        assert_eq!(r.moved_bits, 64 + 64);
    }

    #[test]
    fn lanes_serialize_macs_with_ceiling() {
        let spec = two_bank();
        let l = layer("L", 2, 1, 2, 2);
        // All of K,P,Q inside one step; 4 lanes for 8 MACs -> 2 rounds.
        let r = eval("Column: sK2 sP2 tQ2", &l, &spec, 1);
        assert_eq!(r.steps, 1);
        assert_eq!(r.lanes, 4);
        assert_eq!(r.macs_per_step, 8);
        assert_eq!(r.step_latency_ns, 2.0 * 83306.0);
    }

    #[test]
    fn native_ops_one_mac_layer_costs_add_plus_multiply() {
        let spec = parse_arch(NATIVE_ONE_LEVEL).unwrap();
        let l = layer("unit", 1, 1, 1, 1);
        let r = eval("-", &l, &spec, 1);
        assert_eq!(r.compute_ns, 2.0);
        assert_eq!(r.reduction_ns, 0.0);
        assert_eq!(r.transfer_ns, 0.0); // no bandwidth declared anywhere
        assert_eq!(r.total_ns, 2.0);
        assert_eq!(r.aap_count, 0);
        assert_eq!(r.energy_pj, 0.0);
    }

    #[test]
    fn native_ops_independent_of_timing_table() {
        let l = layer("unit", 1, 1, 1, 1);
        let a = eval("-", &l, &parse_arch(NATIVE_ONE_LEVEL).unwrap(), 1);
        let halved = NATIVE_ONE_LEVEL.replace("\"t_RC\": 45", "\"t_RC\": 90");
        let b = eval("-", &l, &parse_arch(&halved).unwrap(), 1);
        assert_eq!(a, b);
    }

    #[test]
    fn more_macs_never_faster_for_same_step_structure() {
        let spec = two_bank();
        let small = eval("Bank: tP2 tQ2", &layer("a", 1, 1, 2, 2), &spec, 1);
        let big = eval(
            "Bank: tP2 tQ2 | Column: sK2 tC2",
            &layer("b", 2, 2, 2, 2),
            &spec,
            1,
        );
        assert!(big.total_ns >= small.total_ns);
        assert!(big.macs_per_step > small.macs_per_step);
    }

    #[test]
    fn doubling_channels_never_raises_transfer() {
        let spec = two_bank();
        let l = layer("L", 2, 1, 2, 2);
        let one = eval("Channel: sK2 | Bank: tP2 tQ2", &l, &spec, 1);
        let two = eval("Channel: sK2 | Bank: tP2 tQ2", &l, &spec, 2);
        assert!(two.transfer_ns <= one.transfer_ns);
        assert_eq!(two.transfer_ns, one.transfer_ns / 2.0);
        assert_eq!(two.compute_ns, one.compute_ns);
    }

    #[test]
    fn totals_decompose() {
        let spec = two_bank();
        let l = layer("L", 2, 2, 2, 2);
        let r = eval("Channel: sC2 | Bank: tK2 tP2 tQ2", &l, &spec, 1);
        assert_eq!(r.total_ns, r.compute_ns + r.reduction_ns + r.transfer_ns);
        assert!(r.total_ns >= 0.0);
    }

    #[test]
    fn zero_channels_rejected() {
        let spec = two_bank();
        let l = layer("L", 2, 1, 2, 2);
        let m = Mapping::parse("Channel: sK2 | Bank: tP2 tQ2", &spec).unwrap();
        let t = generate_dataspaces(&m, &l, &spec).unwrap();
        assert!(evaluate(&m, &l, &spec, &t, 0).is_err());
    }
}
