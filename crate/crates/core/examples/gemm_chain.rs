//! Fully-connected/GEMM layers flow through the same machinery: a chain of
//! 64x64 projections searched end to end, with per-edge overlap fractions.
//!
//! The hierarchy here has a small spatial fan-out, so a 64x64 product cannot
//! be swallowed in one step and the layers execute temporally — which is
//! exactly when cross-layer overlap matters.

use overlapim::arch::parse_arch;
use overlapim::mapping::MapSpaceConstraints;
use overlapim::search::{search_network, MetricKind, Strategy};
use overlapim::workload::parse_network;

fn main() -> overlapim::Result<()> {
    let spec = parse_arch(&std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/data/pim2.json"
    ))?)?;
    let net = parse_network(
        &std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/data/gemm64.json"
        ))?,
        1,
    )?;
    for l in &net.layers {
        assert_eq!((l.p, l.q, l.r, l.s), (1, 1, 1, 1), "GEMM shape");
    }

    let cons = MapSpaceConstraints::new(200, 7);
    let plan = search_network(&net, &spec, &cons, Strategy::Forward, MetricKind::Transform)?;

    for r in &plan.records {
        println!("{}: {}", r.layer, r.mapping);
    }
    for e in &plan.edges {
        println!(
            "{} -> {}: hidden fraction {:.3} (transformed {:.3})",
            e.producer, e.consumer, e.overlap_fraction, e.transformed_fraction
        );
    }
    let t = &plan.totals;
    println!(
        "sequential {} ns, overlapped {} ns, transformed {} ns",
        t.sequential_ns, t.overlap_ns, t.transform_ns
    );
    Ok(())
}
