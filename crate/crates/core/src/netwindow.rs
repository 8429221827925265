//! Windowed network anomaly scoring.
//!
//! A packet stream is split into tumbling (non-overlapping) observation
//! windows of length `W`. Each window is checked for three anomalies —
//! packet-rate spikes, high destination fan-out from one source, repeated
//! payload fingerprints — and the triggered features are scored with the
//! same weighted-sum machinery used for file heuristics.
//!
//! The window length is the knob: windows too short miss slow patterns,
//! windows too long delay the alarm. `score_windows` makes that tradeoff
//! measurable.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::heuristics::{score, FeatureId, FeatureSet, FeatureWeights};

/// One parsed packet record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PacketRecord {
    /// Milliseconds; non-decreasing in stream order.
    pub t: u64,
    pub src: String,
    pub dst: String,
    pub size: u64,
    /// 64-bit content fingerprint.
    pub payload_tag: u64,
}

/// Trigger limits for the per-window anomaly features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WindowParams {
    /// `RATE_SPIKE` when a window holds more packets than this.
    pub rate_limit: usize,
    /// `FANOUT_HIGH` when one source reaches more distinct destinations.
    pub fanout_limit: usize,
    /// `PAYLOAD_REPEAT` when one fingerprint occurs more often than this.
    pub repeat_limit: usize,
}

impl Default for WindowParams {
    fn default() -> Self {
        WindowParams {
            rate_limit: 100,
            fanout_limit: 10,
            repeat_limit: 10,
        }
    }
}

/// Raw counters underlying the window features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WindowCounters {
    pub packets: usize,
    /// Largest number of distinct destinations reached by a single source.
    pub max_fanout: usize,
    /// Largest occurrence count of a single payload fingerprint.
    pub max_repeat: usize,
}

/// Score of one observation window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WindowScore {
    pub window_start: u64,
    pub window_len: u64,
    pub counters: WindowCounters,
    pub features: FeatureSet,
    pub net: u32,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NetError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("line {line}: timestamps must be non-decreasing")]
    NonMonotoneTime { line: usize },
    #[error("window length must be at least 1 ms")]
    BadWindow,
}

/// Parse a `.pkt` stream file: tab-separated
/// `t<TAB>src<TAB>dst<TAB>size<TAB>payload_tag` lines, `#` comments.
pub fn parse_stream(text: &str) -> Result<Vec<PacketRecord>, NetError> {
    let mut records: Vec<PacketRecord> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').map(str::trim).collect();
        let [t, src, dst, size, tag] = fields[..] else {
            return Err(NetError::Syntax {
                line,
                reason: format!("expected 5 tab-separated fields, got {}", fields.len()),
            });
        };
        let syntax = |what: &str| NetError::Syntax {
            line,
            reason: format!("invalid {what}"),
        };
        let record = PacketRecord {
            t: t.parse().map_err(|_| syntax("timestamp"))?,
            src: src.to_string(),
            dst: dst.to_string(),
            size: size.parse().map_err(|_| syntax("size"))?,
            payload_tag: tag.parse().map_err(|_| syntax("payload tag"))?,
        };
        if src.is_empty() || dst.is_empty() {
            return Err(syntax("endpoint id"));
        }
        if let Some(prev) = records.last() {
            if record.t < prev.t {
                return Err(NetError::NonMonotoneTime { line });
            }
        }
        records.push(record);
    }
    Ok(records)
}

/// Raw counters for one batch of packets.
pub fn window_counters(packets: &[&PacketRecord]) -> WindowCounters {
    let mut per_src: HashMap<&str, BTreeSet<&str>> = HashMap::new();
    let mut per_tag: HashMap<u64, usize> = HashMap::new();
    for p in packets {
        per_src.entry(&p.src).or_default().insert(&p.dst);
        *per_tag.entry(p.payload_tag).or_default() += 1;
    }
    WindowCounters {
        packets: packets.len(),
        max_fanout: per_src.values().map(BTreeSet::len).max().unwrap_or(0),
        max_repeat: per_tag.values().copied().max().unwrap_or(0),
    }
}

fn window_features(c: &WindowCounters, params: &WindowParams) -> FeatureSet {
    let mut features = FeatureSet::new();
    if c.packets > params.rate_limit {
        features.insert(FeatureId::RateSpike);
    }
    if c.max_fanout > params.fanout_limit {
        features.insert(FeatureId::FanoutHigh);
    }
    if c.max_repeat > params.repeat_limit {
        features.insert(FeatureId::PayloadRepeat);
    }
    features
}

/// Score a stream over tumbling windows of `window_ms`, starting at the
/// first packet's timestamp. Every packet lands in exactly one window;
/// windows without packets are emitted too, so the output tiles the stream
/// contiguously.
pub fn score_windows(
    packets: &[PacketRecord],
    window_ms: u64,
    weights: &FeatureWeights,
    params: &WindowParams,
) -> Result<Vec<WindowScore>, NetError> {
    if window_ms == 0 {
        return Err(NetError::BadWindow);
    }
    let Some(first) = packets.first() else {
        return Ok(Vec::new());
    };
    let t0 = first.t;

    let mut buckets: BTreeMap<u64, Vec<&PacketRecord>> = BTreeMap::new();
    let mut last_index = 0;
    for p in packets {
        let index = (p.t - t0) / window_ms;
        last_index = last_index.max(index);
        buckets.entry(index).or_default().push(p);
    }

    let empty: Vec<&PacketRecord> = Vec::new();
    let mut out = Vec::with_capacity(last_index as usize + 1);
    for index in 0..=last_index {
        let batch = buckets.get(&index).unwrap_or(&empty);
        let counters = window_counters(batch);
        let features = window_features(&counters, params);
        let net = score(&features, weights).net;
        out.push(WindowScore {
            window_start: t0 + index * window_ms,
            window_len: window_ms,
            counters,
            features,
            net,
        });
    }
    Ok(out)
}
