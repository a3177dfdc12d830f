//! Why the analytic ready-time algorithm exists: the exhaustive oracle
//! intersects every producer/consumer data-space pair (quadratic), the
//! analytic route touches each consumer entry once (linear). A small grid
//! keeps this example quick; the `bench-overlap` subcommand runs the full
//! study.

use overlapim::arch::parse_arch;
use overlapim::bench::{run_scaling, DEFAULT_ARCH_DOC};
use overlapim::cli::{bench_csv, bench_trend};

fn main() -> overlapim::Result<()> {
    let spec = parse_arch(DEFAULT_ARCH_DOC)?;
    let (points, skipped) = run_scaling(&[100, 400, 1600], &spec, 5.0)?;
    assert!(skipped.is_empty());
    print!("{}", bench_csv(&points));
    println!("{}", bench_trend(&points));
    Ok(())
}
