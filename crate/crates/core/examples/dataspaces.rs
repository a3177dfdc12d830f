//! Data-space tables: how a mapping carves a layer's output into per-step,
//! per-instance tiles, and when each output coordinate is finished.
//!
//! The closed-form generator is validated against a full loop-nest
//! simulation; both are shown agreeing here.

use overlapim::arch::parse_arch;
use overlapim::dataspace::{generate_dataspaces, input_requirement, oracle_dataspaces};
use overlapim::mapping::Mapping;
use overlapim::overlap::finish_time;
use overlapim::workload::{parse_network, Axis};

fn main() -> overlapim::Result<()> {
    let spec = parse_arch(&std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/data/hbm.json"
    ))?)?;
    let net = parse_network(
        &std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/data/tiny2.json"
        ))?,
        1,
    )?;
    let layer = &net.layers[0];
    let m = Mapping::parse("Channel: sK2 | Bank: tP2 tQ2", &spec)?;

    let table = generate_dataspaces(&m, layer, &spec)?;
    println!(
        "layer {}: {} instances x {} steps = {} data spaces",
        layer.name,
        table.instances,
        table.steps,
        table.entries.len()
    );
    for e in &table.entries {
        let k = e.out_box.interval(Axis::K).unwrap();
        let p = e.out_box.interval(Axis::P).unwrap();
        let q = e.out_box.interval(Axis::Q).unwrap();
        println!(
            "  instance {} step {}: out k[{},{}] p[{},{}] q[{},{}]",
            e.spatial_index, e.temporal_index, k.lo, k.hi, p.lo, p.hi, q.lo, q.hi
        );
    }

    // The brute-force loop simulation visits all iteration points and must
    // produce the identical table.
    let oracle = oracle_dataspaces(&m, layer, &spec)?;
    println!(
        "loop-simulation oracle agrees: {}",
        oracle.entries == table.entries
    );

    // Each entry needs an input window (with halo for 3x3-style kernels).
    let need = input_requirement(table.entry(0, 3));
    let (c, h, w) = (
        need.interval(Axis::C).unwrap(),
        need.interval(Axis::H).unwrap(),
        need.interval(Axis::W).unwrap(),
    );
    println!(
        "input needed by instance 0, step 3: c[{},{}] h[{},{}] w[{},{}]",
        c.lo, c.hi, h.lo, h.hi, w.lo, w.hi
    );

    // And the closed-form finish time of any output coordinate.
    for coord in [[0, 0, 0, 0], [0, 1, 1, 0], [0, 1, 1, 1]] {
        let (t, s) = finish_time(&m, layer, &spec, coord)?;
        println!(
            "output (n{},k{},p{},q{}) finishes at step {t} on instance {s}",
            coord[0], coord[1], coord[2], coord[3]
        );
    }
    Ok(())
}
