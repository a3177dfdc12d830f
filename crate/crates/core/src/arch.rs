//! Architecture description: the memory-level tree, DRAM timing/energy
//! parameters, and the bit-serial in-memory arithmetic cost model.
//!
//! Compute happens inside DRAM via AAP (ACTIVATE-ACTIVATE-PRECHARGE) command
//! sequences that copy/combine rows; a b-bit addition costs `4b + 1` AAPs and
//! a b-bit multiply-accumulate is built from `b` sequential additions plus a
//! final accumulate, bracketed by row read/writes that transpose operands into
//! bit-serial layout. Technologies with native arithmetic (e.g. ReRAM blocks)
//! instead declare per-op latencies on the compute level, which bypasses the
//! AAP model entirely.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// DRAM timing parameters, nanoseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchTiming {
    #[serde(rename = "t_RC")]
    pub t_rc: f64,
    #[serde(rename = "t_RCD")]
    pub t_rcd: f64,
    #[serde(rename = "t_RAS")]
    pub t_ras: f64,
    #[serde(rename = "t_CL")]
    pub t_cl: f64,
    #[serde(rename = "t_RRD")]
    pub t_rrd: f64,
    #[serde(rename = "t_WR")]
    pub t_wr: f64,
    #[serde(rename = "t_CCD_S")]
    pub t_ccd_s: f64,
    #[serde(rename = "t_CCD_L")]
    pub t_ccd_l: f64,
}

/// Energy parameters, picojoules (activation per command, the rest per bit).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchEnergy {
    #[serde(rename = "e_ACT")]
    pub e_act: f64,
    #[serde(rename = "e_Pre-GSA")]
    pub e_pre_gsa: f64,
    #[serde(rename = "e_Post-GSA")]
    pub e_post_gsa: f64,
    #[serde(rename = "e_I/O")]
    pub e_io: f64,
}

/// In-memory op kinds that a compute level may override with native latencies.
pub const PIM_OPS: [&str; 2] = ["add", "multiply"];

/// One level of the memory hierarchy. `instances` is the fan-out under a
/// single parent instance. Bandwidth is bytes per cycle (a cycle is
/// `t_CCD_L` ns); levels without bandwidth are served by the nearest ancestor
/// that has it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchLevel {
    pub name: String,
    pub instances: u64,
    pub word_bits: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub read_bw: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub write_bw: Option<f64>,
    /// Storage per instance, bits. Only meaningful on the compute level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity_bits: Option<u64>,
    /// Ops this level can compute. `None` latency means "derive from the AAP
    /// model"; a number is a native per-op latency in ns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pim_ops: Option<BTreeMap<String, Option<f64>>>,
}

/// Parsed architecture: levels ordered root -> leaf, the compute level index,
/// and the shared timing/energy tables.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchSpec {
    pub levels: Vec<ArchLevel>,
    pub compute: usize,
    pub timing: ArchTiming,
    pub energy: ArchEnergy,
}

#[derive(Serialize, Deserialize)]
struct LevelDoc {
    name: String,
    instances: u64,
    word_bits: u32,
    #[serde(default)]
    read_bw: Option<f64>,
    #[serde(default)]
    write_bw: Option<f64>,
    #[serde(default)]
    capacity_bits: Option<u64>,
    #[serde(default)]
    pim_ops: Option<BTreeMap<String, Option<f64>>>,
    #[serde(default)]
    child: Option<Box<LevelDoc>>,
}

#[derive(Serialize, Deserialize)]
struct ArchDoc {
    arch: LevelDoc,
    #[serde(default)]
    compute_level: Option<String>,
    timing: ArchTiming,
    energy: ArchEnergy,
}

impl ArchSpec {
    pub fn compute_level(&self) -> &ArchLevel {
        &self.levels[self.compute]
    }

    pub fn level_index(&self, name: &str) -> Option<usize> {
        self.levels.iter().position(|l| l.name == name)
    }

    /// Nearest level at or above `idx` that declares write bandwidth.
    pub fn governing_write_bw(&self, idx: usize) -> Option<(usize, f64)> {
        (0..=idx)
            .rev()
            .find_map(|i| self.levels[i].write_bw.map(|bw| (i, bw)))
    }

    /// Word width at the compute level.
    pub fn word_bits(&self) -> u32 {
        self.compute_level().word_bits
    }
}

/// Parse an architecture document (JSON, UTF-8): a nested level tree
/// root -> leaf plus timing/energy tables. `compute_level` defaults to "Bank".
pub fn parse_arch(text: &str) -> Result<ArchSpec> {
    let doc: ArchDoc = serde_json::from_str(text)?;
    let mut levels = Vec::new();
    let mut cur = Some(doc.arch);
    while let Some(l) = cur {
        levels.push(ArchLevel {
            name: l.name,
            instances: l.instances,
            word_bits: l.word_bits,
            read_bw: l.read_bw,
            write_bw: l.write_bw,
            capacity_bits: l.capacity_bits,
            pim_ops: l.pim_ops,
        });
        cur = l.child.map(|b| *b);
    }

    let compute_name = doc.compute_level.as_deref().unwrap_or("Bank");
    let compute = levels
        .iter()
        .position(|l| l.name == compute_name)
        .ok_or_else(|| Error::parse(format!("missing compute level '{compute_name}'")))?;

    for (i, l) in levels.iter().enumerate() {
        if l.instances == 0 {
            return Err(Error::parse(format!(
                "level '{}' has zero instances",
                l.name
            )));
        }
        if l.word_bits == 0 {
            return Err(Error::parse(format!(
                "level '{}' has zero word width",
                l.name
            )));
        }
        for bw in [l.read_bw, l.write_bw].into_iter().flatten() {
            if bw <= 0.0 {
                return Err(Error::parse(format!(
                    "level '{}' has non-positive bandwidth",
                    l.name
                )));
            }
        }
        if l.capacity_bits.is_some() && i != compute {
            return Err(Error::parse(format!(
                "capacity_bits on '{}' but only the compute level stores tiles",
                l.name
            )));
        }
        if let Some(ops) = &l.pim_ops {
            for op in ops.keys() {
                if !PIM_OPS.contains(&op.as_str()) {
                    return Err(Error::parse(format!(
                        "level '{}' declares unknown pim op '{op}'",
                        l.name
                    )));
                }
            }
        }
    }

    let spec = ArchSpec {
        levels,
        compute,
        timing: doc.timing,
        energy: doc.energy,
    };

    // Movement is charged at the compute level's governing bandwidth. A tree
    // that declares bandwidth only below the compute level cannot serve it.
    let any_bw = spec
        .levels
        .iter()
        .any(|l| l.read_bw.is_some() || l.write_bw.is_some());
    if any_bw && spec.governing_write_bw(spec.compute).is_none() {
        return Err(Error::parse(
            "bandwidth on no ancestor of the compute level".to_string(),
        ));
    }

    Ok(spec)
}

/// AAPs needed for one n-bit in-memory addition.
pub fn addition_aap_count(word_bits: u32) -> u64 {
    4 * word_bits as u64 + 1
}

/// Latency of one AAP command sequence: two back-to-back activations plus the
/// precharge tail, `2*t_RAS + (t_RC - t_RAS)` ns.
pub fn aap_latency(timing: &ArchTiming) -> f64 {
    2.0 * timing.t_ras + (timing.t_rc - timing.t_ras)
}

/// Cost of one multiply-accumulate at the compute level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MacCost {
    /// AAP commands issued (0 when native op latencies are declared).
    pub aap_count: u64,
    /// Row read/writes for operand transposition (0 under native ops).
    pub transpose_rw_ops: u64,
    pub latency_ns: f64,
}

fn native_overrides(spec: &ArchSpec) -> Option<(f64, f64)> {
    let ops = spec.compute_level().pim_ops.as_ref()?;
    let add = (*ops.get("add")?)?;
    let multiply = (*ops.get("multiply")?)?;
    Some((add, multiply))
}

/// One word_bits-wide MAC. The bit-serial model is `word_bits` sequential
/// additions for the multiply plus one accumulate addition, and `2*word_bits`
/// row read/writes (at `t_RCD + t_CL + t_WR` each) to transpose operands.
/// When the compute level declares native add/multiply latencies, the cost is
/// just their sum and is independent of the timing table.
pub fn mac_cost(word_bits: u32, spec: &ArchSpec) -> MacCost {
    if let Some((add, multiply)) = native_overrides(spec) {
        return MacCost {
            aap_count: 0,
            transpose_rw_ops: 0,
            latency_ns: add + multiply,
        };
    }
    let add_aaps = addition_aap_count(word_bits);
    let aap_count = (word_bits as u64 + 1) * add_aaps;
    let transpose_rw_ops = 2 * word_bits as u64;
    let t = &spec.timing;
    let latency_ns =
        aap_count as f64 * aap_latency(t) + transpose_rw_ops as f64 * (t.t_rcd + t.t_cl + t.t_wr);
    MacCost {
        aap_count,
        transpose_rw_ops,
        latency_ns,
    }
}

/// Cost of one standalone word_bits-wide addition (used for serial
/// partial-sum reduction).
pub fn add_cost(word_bits: u32, spec: &ArchSpec) -> (u64, f64) {
    if let Some((add, _)) = native_overrides(spec) {
        return (0, add);
    }
    let aaps = addition_aap_count(word_bits);
    (aaps, aaps as f64 * aap_latency(&spec.timing))
}


#[cfg(test)]
mod tests {
    use super::*;

    fn table_timing() -> ArchTiming {
        ArchTiming {
            t_rc: 45.0,
            t_rcd: 16.0,
            t_ras: 29.0,
            t_cl: 16.0,
            t_rrd: 2.0,
            t_wr: 16.0,
            t_ccd_s: 2.0,
            t_ccd_l: 4.0,
        }
    }

    #[test]
    fn sixteen_bit_addition_is_65_aaps() {
        assert_eq!(addition_aap_count(16), 65);
    }

    #[test]
    fn aap_latency_is_74ns() {
        assert_eq!(aap_latency(&table_timing()), 74.0);
    }

    #[test]
    fn hbm_doc_parses_to_four_levels() {
        let spec = parse_arch(test_docs::HBM).unwrap();
        assert_eq!(spec.levels.len(), 4);
        assert_eq!(spec.compute_level().name, "Bank");
        let ch = spec.level_index("Channel").unwrap();
        assert_eq!(spec.levels[ch].write_bw, Some(16.0));
        let col = spec.level_index("Column").unwrap();
        assert_eq!(spec.levels[col].write_bw, None);
        // Bank movement is governed by the channel bandwidth.
        assert_eq!(spec.governing_write_bw(spec.compute), Some((ch, 16.0)));
    }

    #[test]
    fn sixteen_bit_mac_cost() {
        let spec = parse_arch(test_docs::HBM).unwrap();
        let mac = mac_cost(16, &spec);
        assert_eq!(mac.aap_count, 16 * 65 + 65);
        assert_eq!(mac.transpose_rw_ops, 32);
        assert_eq!(mac.latency_ns, 1105.0 * 74.0 + 32.0 * 48.0);
    }

    fn reram_doc(t_rc: f64) -> String {
        format!(
            r#"{{
          "arch": {{
            "name": "Chip", "instances": 1, "word_bits": 16, "write_bw": 16.0,
            "child": {{
              "name": "Bank", "instances": 8, "word_bits": 16,
              "pim_ops": {{"add": 10.0, "multiply": 100.0}}
            }}
          }},
          "timing": {{"t_RC": {t_rc}, "t_RCD": 16, "t_RAS": 29, "t_CL": 16,
                     "t_RRD": 2, "t_WR": 16, "t_CCD_S": 2, "t_CCD_L": 4}},
          "energy": {{"e_ACT": 909, "e_Pre-GSA": 1.51, "e_Post-GSA": 1.17, "e_I/O": 0.80}}
        }}"#
        )
    }

    #[test]
    fn native_ops_bypass_the_aap_model() {
        let spec = parse_arch(&reram_doc(45.0)).unwrap();
        let mac = mac_cost(16, &spec);
        assert_eq!(mac.aap_count, 0);
        assert_eq!(mac.transpose_rw_ops, 0);
        assert_eq!(mac.latency_ns, 110.0);
    }

    #[test]
    fn native_op_cost_ignores_timing() {
        let a = mac_cost(16, &parse_arch(&reram_doc(45.0)).unwrap());
        let b = mac_cost(16, &parse_arch(&reram_doc(4500.0)).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn minimal_single_level_doc_is_valid() {
        let text = r#"{
          "arch": {"name": "Bank", "instances": 1, "word_bits": 16,
                   "pim_ops": {"add": 1.0, "multiply": 1.0}},
          "timing": {"t_RC": 45, "t_RCD": 16, "t_RAS": 29, "t_CL": 16,
                     "t_RRD": 2, "t_WR": 16, "t_CCD_S": 2, "t_CCD_L": 4},
          "energy": {"e_ACT": 909, "e_Pre-GSA": 1.51, "e_Post-GSA": 1.17, "e_I/O": 0.80}
        }"#;
        let spec = parse_arch(text).unwrap();
        assert_eq!(spec.levels.len(), 1);
        assert_eq!(mac_cost(16, &spec).latency_ns, 2.0);
    }

    #[test]
    fn missing_compute_level_is_rejected() {
        let text = r#"{
          "arch": {"name": "Root", "instances": 1, "word_bits": 16},
          "timing": {"t_RC": 45, "t_RCD": 16, "t_RAS": 29, "t_CL": 16,
                     "t_RRD": 2, "t_WR": 16, "t_CCD_S": 2, "t_CCD_L": 4},
          "energy": {"e_ACT": 909, "e_Pre-GSA": 1.51, "e_Post-GSA": 1.17, "e_I/O": 0.80}
        }"#;
        assert!(matches!(parse_arch(text), Err(Error::Parse(_))));
    }

    #[test]
    fn zero_instances_is_rejected() {
        let text = test_docs::TWO_BANK.replace(r#""name": "Channel", "instances": 2"#,
                                               r#""name": "Channel", "instances": 0"#);
        assert!(parse_arch(&text).is_err());
    }

    #[test]
    fn bandwidth_only_below_compute_is_rejected() {
        let text = r#"{
          "arch": {
            "name": "Bank", "instances": 1, "word_bits": 16,
            "pim_ops": {"add": null, "multiply": null},
            "child": {"name": "Column", "instances": 4, "word_bits": 16, "write_bw": 16.0}
          },
          "timing": {"t_RC": 45, "t_RCD": 16, "t_RAS": 29, "t_CL": 16,
                     "t_RRD": 2, "t_WR": 16, "t_CCD_S": 2, "t_CCD_L": 4},
          "energy": {"e_ACT": 909, "e_Pre-GSA": 1.51, "e_Post-GSA": 1.17, "e_I/O": 0.80}
        }"#;
        let err = parse_arch(text).unwrap_err();
        assert!(err.to_string().contains("bandwidth on no ancestor"));
    }
}
