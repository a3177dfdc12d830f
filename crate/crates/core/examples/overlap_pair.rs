//! Cross-layer overlap: when can each consumer step start, given what the
//! producer has finished? Shows the analytic ready-time table (verified
//! against the exhaustive pairwise oracle) and the overlapped two-layer
//! schedule it implies.

use overlapim::arch::parse_arch;
use overlapim::dataspace::generate_dataspaces;
use overlapim::mapping::Mapping;
use overlapim::overlap::{
    oracle_ready_times, overlapped_schedule, ready_times, ReadyTime,
};
use overlapim::perf::evaluate;
use overlapim::workload::parse_network;

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
    let (producer, consumer) = (&net.layers[0], &net.layers[1]);

    let pm = Mapping::parse("Channel: sK2 | Bank: tP2 tQ2", &spec)?;
    let cm = Mapping::parse("Bank: tP2 tQ2 | Column: tC2", &spec)?;

    let rt = ready_times(producer, &pm, consumer, &cm, &spec)?;
    println!(
        "ready times ({} -> {}), consumer runs {} steps:",
        rt.producer, rt.consumer, rt.steps
    );
    for step in 0..rt.steps {
        match rt.at(0, step) {
            ReadyTime::AlwaysReady => {
                println!("  consumer step {step}: needs only padding, always ready")
            }
            ReadyTime::AtStep(t) => {
                println!("  consumer step {step}: waits for producer step {t}")
            }
        }
    }

    let oracle = oracle_ready_times(producer, &pm, consumer, &cm, &spec)?;
    println!("exhaustive oracle agrees: {}", oracle.ready == rt.ready);

    // Latency picture: the consumer starts while the producer still runs.
    let ptab = generate_dataspaces(&pm, producer, &spec)?;
    let ctab = generate_dataspaces(&cm, consumer, &spec)?;
    let pr = evaluate(&pm, producer, &spec, &ptab, net.channels[0])?;
    let cr = evaluate(&cm, consumer, &spec, &ctab, net.channels[1])?;
    let sched = overlapped_schedule(&pr, &cr, &rt);
    println!("\nproducer finishes at {} ns", sched.producer_finish_ns);
    println!("consumer step starts (ns): {:?}", sched.consumer_starts_ns);
    println!(
        "consumer alone: {} ns; beyond the producer: {} ns; hidden fraction: {}",
        sched.consumer_sequential_ns, sched.overlapped_total_ns, sched.overlap_fraction
    );
    println!("pair makespan: {} ns", sched.pair_makespan_ns());
    Ok(())
}
