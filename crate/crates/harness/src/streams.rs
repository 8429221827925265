//! Synthetic packet streams for the network-window experiments.
//!
//! The worm-burst stream carries two kilo-milliseconds of quiet background
//! traffic, then one source fanning out to forty fresh destinations at
//! 40 ms intervals with an identical payload. The fan-out rate is tuned so
//! 250 ms windows never see more than the fan-out limit while 500 ms and
//! longer windows do — the observation-window tradeoff in one file.

use fpguard_core::netwindow::PacketRecord;

/// The shipped worm-burst stream (`data/worm_burst.pkt`).
pub const WORM_BURST: &str = include_str!("../data/worm_burst.pkt");

/// Regenerate the worm-burst packets programmatically.
pub fn worm_burst_packets() -> Vec<PacketRecord> {
    let mut pkts = Vec::new();
    // Background: four hosts chatting with two servers.
    for tick in 0..20u64 {
        for h in 0..4u64 {
            pkts.push(PacketRecord {
                t: tick * 100 + h * 7,
                src: format!("h{h}"),
                dst: format!("srv{}", (tick + h) % 2),
                size: 200 + h * 50,
                payload_tag: 1000 + tick * 10 + h,
            });
        }
    }
    // Worm: one source, forty distinct destinations, one payload.
    for i in 0..40u64 {
        pkts.push(PacketRecord {
            t: 2000 + i * 40,
            src: "w0".into(),
            dst: format!("v{i:02}"),
            size: 512,
            payload_tag: 777_777,
        });
    }
    pkts
}

/// Render packets as `.pkt` text.
pub fn to_pkt_text(pkts: &[PacketRecord]) -> String {
    let mut out = String::new();
    for p in pkts {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            p.t, p.src, p.dst, p.size, p.payload_tag
        ));
    }
    out
}
