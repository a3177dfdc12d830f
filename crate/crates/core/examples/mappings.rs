//! Loop-nest mappings: the text encoding, validation against a layer and
//! hierarchy, and seeded sampling of the mapping space.

use overlapim::arch::parse_arch;
use overlapim::mapping::{
    enumerate_mapspace, validate_mapping, MapSpaceConstraints, Mapping,
};
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
    let layer = &net.layers[0];
    println!(
        "layer {}: k={} c={} p={} q={} r={} s={}",
        layer.name, layer.k, layer.c, layer.p, layer.q, layer.r, layer.s
    );

    // A hand-written mapping: `t` loops advance in time, `s` loops fan out
    // across instances of the level they sit at; levels leaf-ward of the
    // compute level (Bank) define the per-step tile.
    let text = "DRAM: tK2 | Channel: sK4 sQ8 | Bank: tC3 tP8 | Column: sQ8... oops";
    match Mapping::parse(text, &spec) {
        Ok(_) => println!("unexpectedly parsed"),
        Err(e) => println!("rejected malformed text: {e}"),
    }

    let good = "DRAM: tK2 | Channel: sK4 sQ8 | Bank: tC3 tP8 | Column: sR3 sS3";
    let m = Mapping::parse(good, &spec)?;
    let verdict = validate_mapping(&m, layer, &spec);
    println!("'{good}' valid: {}", verdict.valid);
    println!("canonical form: {}", m.encode(&spec));

    // An invalid one: K is only partially factored.
    let bad = Mapping::parse("DRAM: tK2 | Channel: sQ8 | Bank: tC3 tP8 | Column: sR3 sS3", &spec)?;
    let verdict = validate_mapping(&bad, layer, &spec);
    println!("partial factorization valid: {}", verdict.valid);
    for r in &verdict.reasons {
        println!("  reason: {r}");
    }

    // Seeded sampling: the same seed always yields the same candidates.
    let cons = MapSpaceConstraints::new(5, 42);
    let sample = enumerate_mapspace(layer, &spec, &cons)?;
    println!(
        "\n5 sampled mappings (seed 42, {} attempts, exhausted: {}):",
        sample.attempts, sample.exhausted
    );
    for m in &sample.mappings {
        println!("  {}", m.encode(&spec));
    }
    Ok(())
}
