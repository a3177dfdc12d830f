//! Run reports: a single JSON envelope for every command's results.
//!
//! Reports carry the tool version, the resolved command line, SHA-256
//! digests of every input file, and the command's payload. Wall-clock
//! timings live in their own map so downstream comparisons can mask them
//! and diff everything else byte-for-byte.

use crate::error::Result;
use crate::overlap::{OverlapSchedule, ReadyTime, ReadyTimeTable};
use crate::perf::PerfReport;
use crate::search::NetworkPlan;
use crate::transform::TransformedSchedule;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

/// Identity of one input file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Hex SHA-256 of a byte string.
pub fn digest_bytes(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let out = h.finalize();
    let mut s = String::with_capacity(64);
    for b in out {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

/// Read and digest a file.
pub fn digest_file(path: &Path) -> Result<InputDigest> {
    let bytes = std::fs::read(path)?;
    Ok(InputDigest {
        path: path.display().to_string(),
        sha256: digest_bytes(&bytes),
    })
}

/// Compact view of a ready-time table (the full table is CSV-dumpable).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadySummary {
    pub producer: String,
    pub consumer: String,
    pub instances: u64,
    pub steps: u64,
    pub producer_steps: u64,
    /// Entries that depend on no producer step (padding-only input).
    pub always_ready_entries: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_ready_step: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_ready_step: Option<u64>,
}

impl ReadySummary {
    pub fn from_table(rt: &ReadyTimeTable) -> Self {
        let mut always = 0u64;
        let mut min_step: Option<u64> = None;
        let mut max_step: Option<u64> = None;
        for r in &rt.ready {
            match r {
                ReadyTime::AlwaysReady => always += 1,
                ReadyTime::AtStep(t) => {
                    min_step = Some(min_step.map_or(*t, |m| m.min(*t)));
                    max_step = Some(max_step.map_or(*t, |m| m.max(*t)));
                }
            }
        }
        ReadySummary {
            producer: rt.producer.clone(),
            consumer: rt.consumer.clone(),
            instances: rt.instances,
            steps: rt.steps,
            producer_steps: rt.producer_steps,
            always_ready_entries: always,
            min_ready_step: min_step,
            max_ready_step: max_step,
        }
    }
}

/// Transformation results without the (possibly huge) slot table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformSummary {
    pub identity: bool,
    pub moved_partial_sets: u64,
    pub overhead_ns: f64,
    pub transformed_total_ns: f64,
    pub overlap_fraction: f64,
    /// New instance-major slot per original entry; omitted when longer
    /// than [`crate::search::PERMUTATION_REPORT_CAP`].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub permutation: Option<Vec<u64>>,
}

impl TransformSummary {
    pub fn from_schedule(ts: &TransformedSchedule, steps: u64) -> Self {
        let permutation = if ts.slots.len() <= crate::search::PERMUTATION_REPORT_CAP {
            Some(
                ts.slots
                    .iter()
                    .map(|&(inst, step)| inst * steps + step)
                    .collect(),
            )
        } else {
            None
        };
        TransformSummary {
            identity: ts.is_identity(),
            moved_partial_sets: ts.moved_partial_sets,
            overhead_ns: ts.overhead_ns,
            transformed_total_ns: ts.transformed_total_ns,
            overlap_fraction: ts.schedule.overlap_fraction,
            permutation,
        }
    }
}

/// Payload of the pairwise overlap command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAnalysis {
    pub producer_mapping: String,
    pub consumer_mapping: String,
    pub producer_report: PerfReport,
    pub consumer_report: PerfReport,
    pub ready: ReadySummary,
    pub schedule: OverlapSchedule,
    pub transform: TransformSummary,
    /// Oracle cross-check verdict when requested: "EQUAL" or a mismatch note.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify: Option<String>,
}

/// One measured point of the analytic-vs-oracle scaling study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchPoint {
    /// Channel count of the square layer pair (entries per side).
    pub size: u64,
    pub entries_per_side: u64,
    pub analytic_ms: f64,
    pub oracle_ms: f64,
    pub speedup: f64,
    pub analytic_reps: u32,
    pub oracle_reps: u32,
}

/// The envelope every command emits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub command: String,
    pub inputs: Vec<InputDigest>,
    pub workers: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layers: Option<Vec<PerfReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair: Option<PairAnalysis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<NetworkPlan>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bench: Option<Vec<BenchPoint>>,
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn new(command: &str, workers: usize) -> Self {
        RunReport {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            inputs: Vec::new(),
            workers,
            layers: None,
            pair: None,
            plan: None,
            bench: None,
            timings_ms: BTreeMap::new(),
        }
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Clear the volatile wall-clock section of a serialized report so two runs
/// can be compared byte-for-byte.
pub fn mask_timings(value: &mut serde_json::Value) {
    if let Some(obj) = value.as_object_mut() {
        if let Some(t) = obj.get_mut("timings_ms") {
            *t = serde_json::Value::Object(serde_json::Map::new());
        }
    }
}
