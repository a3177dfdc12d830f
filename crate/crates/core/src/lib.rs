//! Mapping search and cross-layer overlap analysis for DNNs running on
//! in-DRAM bit-serial compute.
//!
//! A network is a chain of convolution/GEMM layers; a *mapping* assigns each
//! layer's loop nest to the levels of a DRAM hierarchy. Executing a mapping
//! splits the layer's output into *data spaces* — one output tile per
//! (compute instance, time step). Because a consumer tile only needs a small
//! window of the producer's output, the consumer can start long before the
//! producer ends. This crate makes that overlap analyzable and exploitable:
//!
//! - [`workload`] / [`arch`]: layer shapes, tensor boxes, the memory
//!   hierarchy, and the bit-serial arithmetic cost model.
//! - [`mapping`]: the loop-nest encoding, validation, and seeded map-space
//!   sampling.
//! - [`dataspace`]: closed-form data-space tables (with a loop-simulation
//!   oracle for testing).
//! - [`perf`]: per-layer latency/energy for a fixed mapping.
//! - [`overlap`]: per-step ready times of a consumer against its producer —
//!   computed analytically in one pass over the consumer's entries, with an
//!   exhaustive pairwise oracle as the correctness reference — plus the
//!   overlapped two-layer schedule.
//! - [`transform`]: schedule transformation that reorders entry-to-step
//!   assignment by ready time to start the consumer even earlier.
//! - [`search`]: per-layer candidate search chained across the network by
//!   forward/backward/middle strategies, scored by sequential, overlapped,
//!   or transformed latency.
//! - [`bench`]: the analytic-vs-oracle runtime scaling study.
//! - [`report`] / [`cli`]: JSON run reports and the command-line surface.
//!
//! The `examples/` directory demonstrates each capability end to end; the
//! `overlapim` binary exposes the same operations as subcommands.

pub mod arch;
pub mod bench;
pub mod cli;
pub mod dataspace;
pub mod error;
pub mod mapping;
pub mod overlap;
pub mod perf;
pub mod report;
pub mod search;
pub mod transform;
pub mod workload;

pub use error::{Error, Result};
