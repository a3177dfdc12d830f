//! The bit-serial arithmetic cost model: row-activation counts, latencies,
//! and energy for adds and multiply-accumulates, plus native-latency
//! overrides for hierarchies whose compute level does arithmetic directly.

use overlapim::arch::{
    add_cost, addition_aap_count, aap_latency, mac_cost, parse_arch,
};
use overlapim::perf::energy_pj;

fn main() -> overlapim::Result<()> {
    let hbm = parse_arch(&std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/data/hbm.json"
    ))?)?;

    let wb = hbm.word_bits();
    println!("word width: {wb} bits");
    println!(
        "one {wb}-bit addition: {} row-activation pairs",
        addition_aap_count(wb)
    );
    println!(
        "one row-activation pair: {} ns",
        aap_latency(&hbm.timing)
    );
    let (add_aaps, add_ns) = add_cost(wb, &hbm);
    println!("addition latency: {add_aaps} pairs x {} ns = {add_ns} ns", aap_latency(&hbm.timing));

    let mac = mac_cost(wb, &hbm);
    println!(
        "one {wb}-bit multiply-accumulate: {} pairs + {} transpose row ops = {} ns",
        mac.aap_count, mac.transpose_rw_ops, mac.latency_ns
    );

    println!(
        "energy of one activation pair: {} pJ",
        energy_pj(1, 0, &hbm.energy)
    );
    println!(
        "energy of moving one byte through the I/O path: {} pJ",
        energy_pj(0, 8, &hbm.energy)
    );

    // A hierarchy that declares native add/multiply latencies on its compute
    // level skips the row-activation model entirely.
    let native = parse_arch(&std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/data/native.json"
    ))?)?;
    let nmac = mac_cost(native.word_bits(), &native);
    println!(
        "native compute level: multiply-accumulate = {} ns, {} activation pairs",
        nmac.latency_ns, nmac.aap_count
    );
    Ok(())
}
