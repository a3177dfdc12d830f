//! Whole-network mapping search on the bundled 4-layer CNN: per-layer
//! candidate sampling chained forward along the network, scored by the
//! transformed overlapped latency.

use overlapim::arch::parse_arch;
use overlapim::mapping::MapSpaceConstraints;
use overlapim::search::{search_network, MetricKind, Strategy};
use overlapim::workload::parse_network;

fn main() -> overlapim::Result<()> {
    let spec = parse_arch(&std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/data/hbm.json"
    ))?)?;
    let net = parse_network(
        &std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/data/cnn4.json"
        ))?,
        1,
    )?;

    let cons = MapSpaceConstraints::new(100, 42);
    let plan = search_network(&net, &spec, &cons, Strategy::Forward, MetricKind::Transform)?;

    println!("strategy {}, metric {}, budget {} per layer, seed {}", plan.strategy, plan.metric, plan.budget, plan.seed);
    println!("\nper-layer winners:");
    for r in &plan.records {
        println!("  {} ({}):", r.layer, r.layer_index);
        println!("    mapping: {}", r.mapping);
        println!(
            "    best sequential {} ns | best overlapped {} ns | best transformed {} ns",
            r.original_ns, r.overlap_ns, r.transform_ns
        );
    }
    println!("\nadjacent-pair overlap:");
    for e in &plan.edges {
        println!(
            "  {} -> {}: hidden fraction {:.3}, after transform {:.3} ({} sets moved, {} ns overhead)",
            e.producer, e.consumer, e.overlap_fraction, e.transformed_fraction,
            e.moved_partial_sets, e.overhead_ns
        );
    }
    let t = &plan.totals;
    println!("\nnetwork totals:");
    println!("  run layers back-to-back: {} ns", t.sequential_ns);
    println!("  overlap adjacent layers: {} ns", t.overlap_ns);
    println!("  + schedule transformation: {} ns", t.transform_ns);
    println!("  energy: {} pJ", t.energy_pj);
    Ok(())
}
