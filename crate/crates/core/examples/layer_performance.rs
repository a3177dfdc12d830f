//! Per-layer latency and energy for a fixed mapping: compute steps,
//! cross-instance reduction, output transfer, and the activation/IO energy
//! split — on both the bit-serial model and a native-latency hierarchy.

use overlapim::arch::parse_arch;
use overlapim::dataspace::generate_dataspaces;
use overlapim::mapping::Mapping;
use overlapim::perf::evaluate;
use overlapim::workload::parse_network;

fn main() -> overlapim::Result<()> {
    let net = parse_network(
        &std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/data/cnn4.json"
        ))?,
        8,
    )?;
    let layer = &net.layers[2]; // 1x1 projection: k16 c8 p8 q8
    let text = "Channel: sK16 sP2 | Bank: tP4 tQ8 | Column: sC8";

    for arch_file in ["/data/hbm.json", "/data/native.json"] {
        let spec = parse_arch(&std::fs::read_to_string(format!(
            "{}{}",
            env!("CARGO_MANIFEST_DIR"),
            arch_file
        ))?)?;
        let m = Mapping::parse(text, &spec)?;
        let table = generate_dataspaces(&m, layer, &spec)?;
        let perf = evaluate(&m, layer, &spec, &table, net.channels[2])?;
        println!("== {} on {arch_file}", layer.name);
        println!("   {} instances x {} steps, {} lanes/instance", perf.instances, perf.steps, perf.lanes);
        println!("   step latency {} ns ({} MACs/step serialized over lanes)", perf.step_latency_ns, perf.macs_per_step);
        println!(
            "   compute {} ns + reduction {} ns + transfer {} ns = {} ns",
            perf.compute_ns, perf.reduction_ns, perf.transfer_ns, perf.total_ns
        );
        println!(
            "   {} activation pairs, {} bits moved, {} pJ\n",
            perf.aap_count, perf.moved_bits, perf.energy_pj
        );
    }
    Ok(())
}
