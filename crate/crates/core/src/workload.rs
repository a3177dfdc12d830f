//! Layer shapes, network chaining, and the tensor-box algebra used everywhere else.
//!
//! A convolution layer is described by the seven loop extents (N, K, C, P, Q,
//! R, S) with stride fixed at 1. Its output occupies `[N, K, P, Q]` and its
//! (possibly zero-padded) input `[N, C, P+R-1, Q+S-1]`. Fully-connected and
//! GEMM layers are the degenerate case R = S = P = Q = 1, so one box algebra
//! serves all layer kinds.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Tensor axes. N/K/C/P/Q/R/S are the loop dimensions; H/W are the input
/// spatial axes (P+R-1 by Q+S-1 halo coordinates).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Axis {
    N,
    K,
    C,
    P,
    Q,
    R,
    S,
    H,
    W,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Axis::N => 'N',
            Axis::K => 'K',
            Axis::C => 'C',
            Axis::P => 'P',
            Axis::Q => 'Q',
            Axis::R => 'R',
            Axis::S => 'S',
            Axis::H => 'H',
            Axis::W => 'W',
        };
        write!(f, "{c}")
    }
}

/// Closed integer interval `[lo, hi]`, `lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub lo: i64,
    pub hi: i64,
}

impl Interval {
    pub fn new(lo: i64, hi: i64) -> Self {
        debug_assert!(lo <= hi, "interval [{lo}, {hi}] is empty");
        Interval { lo, hi }
    }

    // Intervals are non-empty by construction, so there is no `is_empty`.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> u64 {
        (self.hi - self.lo + 1) as u64
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn contains(&self, x: i64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Axis-aligned box: one closed interval per axis, in a fixed axis order.
/// Every box in this crate has volume >= 1; emptiness is represented by the
/// *absence* of a box (see [`ProducerRegion::Padding`]).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TensorBox {
    pub axes: Vec<Axis>,
    pub ivs: Vec<Interval>,
}

impl TensorBox {
    pub fn new(axes: Vec<Axis>, ivs: Vec<Interval>) -> Self {
        debug_assert_eq!(axes.len(), ivs.len());
        TensorBox { axes, ivs }
    }

    pub fn volume(&self) -> u64 {
        self.ivs.iter().map(Interval::len).product()
    }

    /// True when the boxes overlap on every shared axis. Axes are matched by
    /// position; callers compare boxes of the same layout.
    pub fn intersects(&self, other: &TensorBox) -> bool {
        debug_assert_eq!(self.axes, other.axes);
        self.ivs
            .iter()
            .zip(&other.ivs)
            .all(|(a, b)| a.intersects(b))
    }

    pub fn interval(&self, axis: Axis) -> Option<Interval> {
        self.axes
            .iter()
            .position(|a| *a == axis)
            .map(|i| self.ivs[i])
    }
}

impl fmt::Display for TensorBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (a, iv)) in self.axes.iter().zip(&self.ivs).enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}:[{}..{}]", iv.lo, iv.hi)?;
        }
        write!(f, "}}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Conv,
    Fc,
    Gemm,
}

/// One layer's seven loop extents. Stride is always 1; padding is implied by
/// how adjacent layers chain (see [`padding_between`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerShape {
    pub name: String,
    pub kind: LayerKind,
    pub n: u64,
    pub k: u64,
    pub c: u64,
    pub p: u64,
    pub q: u64,
    pub r: u64,
    pub s: u64,
}

impl LayerShape {
    /// Extent of dimension `axis` (loop dimensions only).
    pub fn extent(&self, axis: Axis) -> u64 {
        match axis {
            Axis::N => self.n,
            Axis::K => self.k,
            Axis::C => self.c,
            Axis::P => self.p,
            Axis::Q => self.q,
            Axis::R => self.r,
            Axis::S => self.s,
            Axis::H | Axis::W => unreachable!("H/W are not loop dimensions"),
        }
    }

    /// Total number of scalar multiply-accumulate points in the 7-D
    /// iteration space.
    pub fn iteration_points(&self) -> u64 {
        self.n * self.k * self.c * self.p * self.q * self.r * self.s
    }

    fn validate(&self) -> Result<()> {
        for (axis, v) in [
            (Axis::N, self.n),
            (Axis::K, self.k),
            (Axis::C, self.c),
            (Axis::P, self.p),
            (Axis::Q, self.q),
            (Axis::R, self.r),
            (Axis::S, self.s),
        ] {
            if v == 0 {
                return Err(Error::parse(format!(
                    "layer '{}': dimension {axis} must be >= 1",
                    self.name
                )));
            }
        }
        if matches!(self.kind, LayerKind::Fc | LayerKind::Gemm)
            && (self.p != 1 || self.q != 1 || self.r != 1 || self.s != 1)
        {
            return Err(Error::parse(format!(
                "layer '{}': fc/gemm layers require P = Q = R = S = 1",
                self.name
            )));
        }
        Ok(())
    }
}

/// Output data space of a layer: `[N, K, P, Q]`, zero-based.
pub fn output_footprint(layer: &LayerShape) -> TensorBox {
    TensorBox::new(
        vec![Axis::N, Axis::K, Axis::P, Axis::Q],
        vec![
            Interval::new(0, layer.n as i64 - 1),
            Interval::new(0, layer.k as i64 - 1),
            Interval::new(0, layer.p as i64 - 1),
            Interval::new(0, layer.q as i64 - 1),
        ],
    )
}

/// Input data space of a layer in halo coordinates: `[N, C, P+R-1, Q+S-1]`.
pub fn input_footprint(layer: &LayerShape) -> TensorBox {
    TensorBox::new(
        vec![Axis::N, Axis::C, Axis::H, Axis::W],
        vec![
            Interval::new(0, layer.n as i64 - 1),
            Interval::new(0, layer.c as i64 - 1),
            Interval::new(0, (layer.p + layer.r - 1) as i64 - 1),
            Interval::new(0, (layer.q + layer.s - 1) as i64 - 1),
        ],
    )
}

/// Symmetric zero padding that makes `producer`'s output feed `consumer`'s
/// input, per spatial axis. Errors when no symmetric padding works.
pub fn padding_between(producer: &LayerShape, consumer: &LayerShape) -> Result<(u64, u64)> {
    if producer.k != consumer.c {
        return Err(Error::chain(format!(
            "layer '{}' produces K={} but layer '{}' consumes C={}",
            producer.name, producer.k, consumer.name, consumer.c
        )));
    }
    if producer.n != consumer.n {
        return Err(Error::chain(format!(
            "batch mismatch between '{}' (N={}) and '{}' (N={})",
            producer.name, producer.n, consumer.name, consumer.n
        )));
    }
    let pad_axis = |have: u64, need: u64, axis: &str| -> Result<u64> {
        if need < have || (need - have) % 2 != 0 {
            return Err(Error::chain(format!(
                "'{}' -> '{}': consumer needs {axis} extent {need}, producer provides {have}, \
                 not bridgeable by symmetric zero padding",
                producer.name, consumer.name
            )));
        }
        Ok((need - have) / 2)
    };
    let pad_p = pad_axis(producer.p, consumer.p + consumer.r - 1, "H")?;
    let pad_q = pad_axis(producer.q, consumer.q + consumer.s - 1, "W")?;
    Ok((pad_p, pad_q))
}

/// Result of mapping a consumer input box into producer output coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum ProducerRegion {
    /// The box lies entirely in zero padding (or outside what the producer
    /// writes): nothing to wait for.
    Padding,
    /// The produced part of the box. `clipped` reports whether any always-ready
    /// elements (padding / out-of-footprint) were clamped away.
    Produced { box_: TensorBox, clipped: bool },
}

/// Map a consumer-side input box `[N, C, H, W]` into the producer's output
/// coordinates `[N, K, P, Q]`: C maps to K one-to-one, spatial axes shift by
/// the padding offset, and every axis is clamped to the producer footprint.
pub fn consumer_to_producer_box(
    input_box: &TensorBox,
    producer: &LayerShape,
    pad: (u64, u64),
) -> ProducerRegion {
    let n = input_box.interval(Axis::N).expect("input box has N");
    let c = input_box.interval(Axis::C).expect("input box has C");
    let h = input_box.interval(Axis::H).expect("input box has H");
    let w = input_box.interval(Axis::W).expect("input box has W");

    let mut clipped = false;
    let mut clamp = |iv: Interval, max: i64| -> Option<Interval> {
        let lo = iv.lo.max(0);
        let hi = iv.hi.min(max);
        if lo != iv.lo || hi != iv.hi {
            clipped = true;
        }
        (lo <= hi).then(|| Interval::new(lo, hi))
    };

    let n_iv = clamp(n, producer.n as i64 - 1);
    let k_iv = clamp(c, producer.k as i64 - 1);
    let p_iv = clamp(
        Interval {
            lo: h.lo - pad.0 as i64,
            hi: h.hi - pad.0 as i64,
        },
        producer.p as i64 - 1,
    );
    let q_iv = clamp(
        Interval {
            lo: w.lo - pad.1 as i64,
            hi: w.hi - pad.1 as i64,
        },
        producer.q as i64 - 1,
    );

    match (n_iv, k_iv, p_iv, q_iv) {
        (Some(n), Some(k), Some(p), Some(q)) => ProducerRegion::Produced {
            box_: TensorBox::new(vec![Axis::N, Axis::K, Axis::P, Axis::Q], vec![n, k, p, q]),
            clipped,
        },
        _ => ProducerRegion::Padding,
    }
}

/// An ordered chain of layers plus each layer's memory-channel allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    pub layers: Vec<LayerShape>,
    /// Channels assigned to each layer (same length as `layers`).
    pub channels: Vec<u64>,
}

impl NetworkModel {
    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    /// Padding between consecutive layers `i` and `i+1`.
    pub fn padding(&self, i: usize) -> Result<(u64, u64)> {
        padding_between(&self.layers[i], &self.layers[i + 1])
    }
}

#[derive(Serialize, Deserialize)]
struct LayerDoc {
    name: String,
    kind: LayerKind,
    n: u64,
    k: u64,
    c: u64,
    p: u64,
    q: u64,
    r: u64,
    s: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    channels: Option<u64>,
}

#[derive(Serialize, Deserialize)]
struct NetworkDoc {
    layers: Vec<LayerDoc>,
}

/// Parse a workload document (JSON, UTF-8). Layers missing an explicit
/// `channels` entry get `default_channels`. Chain consistency (K feeding C,
/// spatial extents bridgeable by symmetric zero padding) is enforced here.
pub fn parse_network(text: &str, default_channels: u64) -> Result<NetworkModel> {
    let doc: NetworkDoc = serde_json::from_str(text)?;
    if doc.layers.is_empty() {
        return Err(Error::parse("workload has no layers"));
    }
    if default_channels == 0 {
        return Err(Error::parse("default channel allocation must be >= 1"));
    }
    let mut layers = Vec::with_capacity(doc.layers.len());
    let mut channels = Vec::with_capacity(doc.layers.len());
    for ld in doc.layers {
        let ch = ld.channels.unwrap_or(default_channels);
        if ch == 0 {
            return Err(Error::parse(format!(
                "layer '{}': channel allocation must be >= 1",
                ld.name
            )));
        }
        let layer = LayerShape {
            name: ld.name,
            kind: ld.kind,
            n: ld.n,
            k: ld.k,
            c: ld.c,
            p: ld.p,
            q: ld.q,
            r: ld.r,
            s: ld.s,
        };
        layer.validate()?;
        layers.push(layer);
        channels.push(ch);
    }
    let model = NetworkModel { layers, channels };
    for i in 0..model.len() - 1 {
        model.padding(i)?;
    }
    Ok(model)
}

/// Serialize a network back to its document form. `parse_network` of the
/// emitted text reproduces the model exactly.
pub fn emit_network(model: &NetworkModel) -> String {
    let doc = NetworkDoc {
        layers: model
            .layers
            .iter()
            .zip(&model.channels)
            .map(|(l, ch)| LayerDoc {
                name: l.name.clone(),
                kind: l.kind,
                n: l.n,
                k: l.k,
                c: l.c,
                p: l.p,
                q: l.q,
                r: l.r,
                s: l.s,
                channels: Some(*ch),
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("network serializes");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conv(name: &str, k: u64, c: u64, p: u64, q: u64, r: u64, s: u64) -> LayerShape {
        LayerShape {
            name: name.into(),
            kind: LayerKind::Conv,
            n: 1,
            k,
            c,
            p,
            q,
            r,
            s,
        }
    }

    #[test]
    fn output_footprint_dims() {
        let l = conv("l", 4, 3, 8, 8, 3, 3);
        let b = output_footprint(&l);
        assert_eq!(b.axes, vec![Axis::N, Axis::K, Axis::P, Axis::Q]);
        assert_eq!(b.volume(), 4 * 8 * 8);
    }

    #[test]
    fn input_footprint_has_halo() {
        let l = conv("l", 4, 3, 8, 8, 3, 3);
        let b = input_footprint(&l);
        assert_eq!(b.interval(Axis::H).unwrap(), Interval::new(0, 9));
        assert_eq!(b.interval(Axis::W).unwrap(), Interval::new(0, 9));
        assert_eq!(b.volume(), 3 * 10 * 10);
    }

    #[test]
    fn gemm_input_footprint_is_c_only() {
        let l = LayerShape {
            name: "proj".into(),
            kind: LayerKind::Gemm,
            n: 1,
            k: 64,
            c: 64,
            p: 1,
            q: 1,
            r: 1,
            s: 1,
        };
        let b = input_footprint(&l);
        assert_eq!(b.volume(), 64);
        assert_eq!(b.interval(Axis::H).unwrap(), Interval::new(0, 0));
    }

    #[test]
    fn padding_same_spatial_3x3() {
        // 8x8 -> 8x8 through a 3x3 window needs pad 1 on each side.
        let a = conv("a", 4, 3, 8, 8, 3, 3);
        let b = conv("b", 8, 4, 8, 8, 3, 3);
        assert_eq!(padding_between(&a, &b).unwrap(), (1, 1));
    }

    #[test]
    fn padding_valid_conv_is_zero() {
        let a = conv("a", 4, 3, 10, 10, 3, 3);
        let b = conv("b", 8, 4, 8, 8, 3, 3);
        assert_eq!(padding_between(&a, &b).unwrap(), (0, 0));
    }

    #[test]
    fn padding_rejects_channel_mismatch() {
        let a = conv("a", 4, 3, 8, 8, 3, 3);
        let b = conv("b", 8, 5, 8, 8, 3, 3);
        assert!(matches!(
            padding_between(&a, &b),
            Err(Error::ChainMismatch(_))
        ));
    }

    #[test]
    fn padding_rejects_odd_gap() {
        // consumer needs 9, producer has 8: gap 1 is not symmetric.
        let a = conv("a", 4, 3, 8, 8, 3, 3);
        let b = conv("b", 8, 4, 7, 7, 3, 3);
        assert!(padding_between(&a, &b).is_err());
    }

    #[test]
    fn producer_box_shifts_and_clips() {
        let prod = conv("a", 4, 3, 8, 8, 3, 3);
        // Consumer tile at the top-left corner, 3x3 window, pad 1:
        // H,W in [0..2] maps to P,Q in [-1..1] -> clamped [0..1], clipped.
        let ib = TensorBox::new(
            vec![Axis::N, Axis::C, Axis::H, Axis::W],
            vec![
                Interval::new(0, 0),
                Interval::new(0, 3),
                Interval::new(0, 2),
                Interval::new(0, 2),
            ],
        );
        match consumer_to_producer_box(&ib, &prod, (1, 1)) {
            ProducerRegion::Produced { box_, clipped } => {
                assert!(clipped);
                assert_eq!(box_.interval(Axis::P).unwrap(), Interval::new(0, 1));
                assert_eq!(box_.interval(Axis::K).unwrap(), Interval::new(0, 3));
            }
            ProducerRegion::Padding => panic!("box is not pure padding"),
        }
    }

    #[test]
    fn pure_padding_box_maps_to_padding() {
        let prod = conv("a", 4, 3, 8, 8, 3, 3);
        // A slice that only touches the padded border row H = 0 via r = 0.
        let ib = TensorBox::new(
            vec![Axis::N, Axis::C, Axis::H, Axis::W],
            vec![
                Interval::new(0, 0),
                Interval::new(0, 0),
                Interval::new(0, 0),
                Interval::new(0, 0),
            ],
        );
        assert_eq!(
            consumer_to_producer_box(&ib, &prod, (1, 1)),
            ProducerRegion::Padding
        );
    }

    #[test]
    fn enlarging_input_box_never_shrinks_producer_box() {
        let prod = conv("a", 4, 3, 8, 8, 3, 3);
        let small = TensorBox::new(
            vec![Axis::N, Axis::C, Axis::H, Axis::W],
            vec![
                Interval::new(0, 0),
                Interval::new(1, 2),
                Interval::new(3, 4),
                Interval::new(3, 4),
            ],
        );
        let big = TensorBox::new(
            vec![Axis::N, Axis::C, Axis::H, Axis::W],
            vec![
                Interval::new(0, 0),
                Interval::new(0, 3),
                Interval::new(1, 6),
                Interval::new(1, 6),
            ],
        );
        let vol = |r: ProducerRegion| match r {
            ProducerRegion::Padding => 0,
            ProducerRegion::Produced { box_, .. } => box_.volume(),
        };
        let vs = vol(consumer_to_producer_box(&small, &prod, (1, 1)));
        let vb = vol(consumer_to_producer_box(&big, &prod, (1, 1)));
        assert!(vb >= vs);
    }

    #[test]
    fn network_roundtrip_is_identity() {
        let text = r#"{"layers":[
            {"name":"c1","kind":"conv","n":1,"k":4,"c":3,"p":8,"q":8,"r":3,"s":3,"channels":2},
            {"name":"c2","kind":"conv","n":1,"k":8,"c":4,"p":8,"q":8,"r":3,"s":3}
        ]}"#;
        let m = parse_network(text, 1).unwrap();
        assert_eq!(m.channels, vec![2, 1]);
        let emitted = emit_network(&m);
        let m2 = parse_network(&emitted, 7).unwrap(); // default must not matter
        assert_eq!(m, m2);
    }

    #[test]
    fn parse_rejects_zero_dim() {
        let text = r#"{"layers":[{"name":"z","kind":"conv","n":1,"k":0,"c":1,"p":1,"q":1,"r":1,"s":1}]}"#;
        assert!(matches!(parse_network(text, 1), Err(Error::Parse(_))));
    }

    #[test]
    fn parse_rejects_broken_chain() {
        let text = r#"{"layers":[
            {"name":"a","kind":"conv","n":1,"k":4,"c":3,"p":8,"q":8,"r":3,"s":3},
            {"name":"b","kind":"conv","n":1,"k":8,"c":9,"p":8,"q":8,"r":3,"s":3}
        ]}"#;
        assert!(matches!(
            parse_network(text, 1),
            Err(Error::ChainMismatch(_))
        ));
    }

    #[test]
    fn parse_rejects_fc_with_spatial_extent() {
        let text = r#"{"layers":[{"name":"f","kind":"fc","n":1,"k":8,"c":8,"p":2,"q":1,"r":1,"s":1}]}"#;
        assert!(parse_network(text, 1).is_err());
    }
}
