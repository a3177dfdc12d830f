//! Overlap-driven schedule transformation: re-assigning the consumer's
//! data spaces to steps in ascending ready-time order, so early-ready work
//! runs first and the consumer finishes sooner. Shown on a pair whose
//! natural step order is exactly backwards.

use overlapim::arch::parse_arch;
use overlapim::dataspace::generate_dataspaces;
use overlapim::mapping::Mapping;
use overlapim::overlap::{overlapped_schedule, ready_times, ReadyTime};
use overlapim::perf::evaluate;
use overlapim::transform::{apply_permutation, transform};
use overlapim::workload::parse_network;

fn main() -> overlapim::Result<()> {
    let spec = parse_arch(&std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/data/hbm.json"
    ))?)?;
    // Producer writes a 4-channel 2x2 plane; the consumer reduces one
    // channel per step. Their loop orders disagree, so consumer inputs
    // become ready out of step order.
    let net = parse_network(
        r#"{"layers": [
            {"name":"writer","kind":"conv","n":1,"k":4,"c":1,"p":2,"q":2,"r":1,"s":1},
            {"name":"reader","kind":"conv","n":1,"k":1,"c":4,"p":2,"q":2,"r":1,"s":1}
        ]}"#,
        1,
    )?;
    let (producer, consumer) = (&net.layers[0], &net.layers[1]);
    // The producer sweeps its output plane once per channel batch (channels
    // innermost); the consumer wants channels outermost — so the consumer's
    // early steps wait on producer steps scattered all over the timeline.
    let pm = Mapping::parse("Bank: tP2 tQ2 tK4", &spec)?;
    let cm = Mapping::parse("Bank: tC4 tP2 tQ2", &spec)?;

    let rt = ready_times(producer, &pm, consumer, &cm, &spec)?;
    let ready: Vec<ReadyTime> = rt.per_step();
    println!("consumer step -> producer step it waits for:");
    for (i, r) in ready.iter().enumerate() {
        println!("  step {i}: {r:?}");
    }

    let ptab = generate_dataspaces(&pm, producer, &spec)?;
    let ctab = generate_dataspaces(&cm, consumer, &spec)?;
    let pr = evaluate(&pm, producer, &spec, &ptab, 1)?;
    let cr = evaluate(&cm, consumer, &spec, &ctab, 1)?;

    let before = overlapped_schedule(&pr, &cr, &rt);
    let ts = transform(&ctab, &rt, &spec, &pr, &cr);
    println!(
        "\nbefore: consumer tail {} ns (fraction hidden {:.3})",
        before.overlapped_total_ns, before.overlap_fraction
    );
    println!(
        "after:  consumer tail {} ns (fraction hidden {:.3}), {} partial-sum sets moved, {} ns overhead",
        ts.transformed_total_ns,
        ts.schedule.overlap_fraction,
        ts.moved_partial_sets,
        ts.overhead_ns
    );
    println!("identity permutation: {}", ts.is_identity());

    // The permutation is a real reassignment of entries to (instance, step)
    // slots; applying it and transforming again changes nothing.
    let moved_table = apply_permutation(&ctab, &ts);
    let ts2 = transform(&moved_table, &ts.ready, &spec, &pr, &cr);
    println!("transforming the transformed schedule again is a no-op: {}", ts2.is_identity());
    Ok(())
}
