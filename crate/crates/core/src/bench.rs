//! Scaling study: streaming ready-time analysis vs. the exhaustive
//! pairwise oracle on growing GEMM pairs.
//!
//! Each point builds a producer with `n` output channels and a consumer
//! reducing over those `n` channels, mapped so both sides run `n` one-step
//! tiles (one data-space entry per step). The analytic path touches each
//! consumer entry once; the oracle intersects every producer/consumer entry
//! pair, so its cost grows quadratically and the speedup must widen as `n`
//! grows.

use crate::arch::ArchSpec;
use crate::dataspace::{generate_dataspaces, DataSpaceTable};
use crate::error::Result;
use crate::mapping::Mapping;
use crate::overlap::{
    oracle_ready_times_from_tables, ready_times, ReadyTimeTable, DEFAULT_ORACLE_PAIR_CAP,
};
use crate::report::BenchPoint;
use crate::workload::{LayerKind, LayerShape};
use std::time::Instant;

/// Memory hierarchy the benchmark runs on when none is supplied. The study
/// only measures analysis cost, which depends on table sizes, not on the
/// hardware numbers, so any well-formed hierarchy works.
pub const DEFAULT_ARCH_DOC: &str = r#"{
  "arch": {
    "name": "DRAM", "instances": 1, "word_bits": 16,
    "read_bw": 32.0, "write_bw": 32.0,
    "child": {
      "name": "Channel", "instances": 2, "word_bits": 16,
      "read_bw": 16.0, "write_bw": 16.0,
      "child": {
        "name": "Bank", "instances": 1, "word_bits": 16,
        "capacity_bits": 268435456,
        "pim_ops": {"add": null, "multiply": null},
        "child": {"name": "Column", "instances": 4, "word_bits": 16}
      }
    }
  },
  "timing": {"t_RC": 45, "t_RCD": 16, "t_RAS": 29, "t_CL": 16,
             "t_RRD": 2, "t_WR": 16, "t_CCD_S": 2, "t_CCD_L": 4},
  "energy": {"e_ACT": 909, "e_Pre-GSA": 1.51, "e_Post-GSA": 1.17, "e_I/O": 0.80}
}"#;

/// Producer/consumer GEMM pair with an `n`-channel boundary.
pub fn gemm_pair(n: u64) -> (LayerShape, LayerShape) {
    let producer = LayerShape {
        name: format!("produce{n}"),
        kind: LayerKind::Gemm,
        n: 1,
        k: n,
        c: 1,
        p: 1,
        q: 1,
        r: 1,
        s: 1,
    };
    let consumer = LayerShape {
        name: format!("reduce{n}"),
        kind: LayerKind::Gemm,
        n: 1,
        k: 1,
        c: n,
        p: 1,
        q: 1,
        r: 1,
        s: 1,
    };
    (producer, consumer)
}

/// Single-loop mappings giving each side exactly `n` temporal entries.
pub fn gemm_pair_mappings(n: u64, spec: &ArchSpec) -> Result<(Mapping, Mapping)> {
    let pm = Mapping::parse(&format!("Bank: tK{n}"), spec)?;
    let cm = Mapping::parse(&format!("Bank: tC{n}"), spec)?;
    Ok((pm, cm))
}

fn time_adaptive<F: FnMut() -> Result<ReadyTimeTable>>(
    mut f: F,
    min_ms: f64,
) -> Result<(f64, u32, ReadyTimeTable)> {
    // First measurement doubles as a warm-up and a cost estimate.
    let t0 = Instant::now();
    let first = f()?;
    let first_ms = t0.elapsed().as_secs_f64() * 1e3;
    if first_ms >= min_ms {
        return Ok((first_ms, 1, first));
    }
    let reps = ((min_ms / first_ms.max(1e-6)).ceil() as u32).clamp(1, 1_000_000);
    let t1 = Instant::now();
    let mut last = first;
    for _ in 0..reps {
        last = f()?;
    }
    let avg_ms = t1.elapsed().as_secs_f64() * 1e3 / reps as f64;
    Ok((avg_ms, reps, last))
}

/// Time both ready-time routes on one `n`-channel pair and check agreement.
pub fn bench_point(n: u64, spec: &ArchSpec, min_ms: f64) -> Result<BenchPoint> {
    let (producer, consumer) = gemm_pair(n);
    let (pm, cm) = gemm_pair_mappings(n, spec)?;
    // Tables are prebuilt so the oracle timing covers only intersection work.
    let ptab: DataSpaceTable = generate_dataspaces(&pm, &producer, spec)?;
    let ctab: DataSpaceTable = generate_dataspaces(&cm, &consumer, spec)?;

    let (analytic_ms, analytic_reps, analytic) = time_adaptive(
        || ready_times(&producer, &pm, &consumer, &cm, spec),
        min_ms,
    )?;
    let (oracle_ms, oracle_reps, oracle) = time_adaptive(
        || oracle_ready_times_from_tables(&ptab, &ctab, &producer, &consumer),
        min_ms,
    )?;
    assert_eq!(
        analytic.ready, oracle.ready,
        "analytic and oracle ready times diverged at n={n}"
    );
    Ok(BenchPoint {
        size: n,
        entries_per_side: n,
        analytic_ms,
        oracle_ms,
        speedup: oracle_ms / analytic_ms,
        analytic_reps,
        oracle_reps,
    })
}

/// Run the full grid, smallest first. Sizes whose pairwise oracle work would
/// exceed the cap are skipped and returned separately for reporting.
pub fn run_scaling(
    sizes: &[u64],
    spec: &ArchSpec,
    min_ms: f64,
) -> Result<(Vec<BenchPoint>, Vec<u64>)> {
    let mut sorted: Vec<u64> = sizes.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for &n in &sorted {
        if n.saturating_mul(n) > DEFAULT_ORACLE_PAIR_CAP {
            skipped.push(n);
            continue;
        }
        points.push(bench_point(n, spec, min_ms)?);
    }
    Ok((points, skipped))
}

/// Default measurement grid.
pub const DEFAULT_SIZES: [u64; 3] = [100, 1_000, 10_000];

/// Default minimum measured duration per route, in milliseconds.
pub const DEFAULT_MIN_MS: f64 = 50.0;
