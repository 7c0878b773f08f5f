//! Synthetic Zipf packet traces.
//!
//! Flow sizes (in packets) are drawn from a Zipf law truncated at a support
//! chosen so the mean flow size matches the request. A bounded set of flows is
//! active at once and packets are drawn from it at random, so every flow's
//! packets arrive interleaved with others.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::Ipv4Addr;
use std::path::Path;

use lss_core::{seeded_hash, FlowKey};
use lss_pipeline::{Packet, TraceWriter};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::Serialize;

use crate::error::{config, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TraceSpec {
    pub seed: u64,
    pub flows: usize,
    pub zipf_s: f64,
    pub mean_packets: f64,
    pub packet_bytes: u64,
    /// Flows with packets in flight at any moment.
    pub concurrency: usize,
}

impl Default for TraceSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            flows: 10_000,
            zipf_s: 1.1,
            mean_packets: 100.0,
            packet_bytes: 1_000,
            concurrency: 64,
        }
    }
}

impl TraceSpec {
    pub fn validate(&self) -> Result<()> {
        if self.flows == 0 {
            return Err(config("a trace needs at least one flow"));
        }
        if !(self.zipf_s > 0.0 && self.zipf_s.is_finite()) {
            return Err(config("zipf exponent must be positive"));
        }
        if !(self.mean_packets >= 1.0 && self.mean_packets.is_finite()) {
            return Err(config("mean flow size must be at least one packet"));
        }
        if self.packet_bytes == 0 || self.concurrency == 0 {
            return Err(config("packet size and concurrency must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TraceSummary {
    pub flows: u64,
    pub packets: u64,
    pub bytes: u64,
}

/// Generalized harmonic number `sum_{i=1}^{n} i^-a`; the tail past 10^4 terms
/// uses the midpoint integral.
fn harmonic(n: u64, a: f64) -> f64 {
    const EXACT: u64 = 10_000;
    let head: f64 = (1..=n.min(EXACT)).map(|i| (i as f64).powf(-a)).sum();
    if n <= EXACT {
        return head;
    }
    let (lo, hi) = (EXACT as f64 + 0.5, n as f64 + 0.5);
    let tail = if (a - 1.0).abs() < 1e-12 {
        (hi / lo).ln()
    } else {
        (hi.powf(1.0 - a) - lo.powf(1.0 - a)) / (1.0 - a)
    };
    head + tail
}

/// Mean of a Zipf(s) law on `1..=n`.
pub fn zipf_mean(n: u64, s: f64) -> f64 {
    harmonic(n, s - 1.0) / harmonic(n, s)
}

/// Smallest support whose truncated Zipf(s) mean reaches `mean`.
pub fn zipf_support(s: f64, mean: f64) -> Result<u64> {
    const MAX_SUPPORT: u64 = 1 << 40;
    if mean <= 1.0 {
        return Ok(1);
    }
    if zipf_mean(MAX_SUPPORT, s) < mean {
        return Err(config(format!(
            "zipf({s}) cannot reach a mean of {mean} packets"
        )));
    }
    let (mut lo, mut hi) = (1u64, MAX_SUPPORT);
    while lo + 1 < hi {
        let mid = lo + (hi - lo) / 2;
        if zipf_mean(mid, s) >= mean {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `count` i.i.d. flow sizes in packets.
pub fn flow_sizes<R: Rng>(rng: &mut R, count: usize, s: f64, support: u64) -> Result<Vec<u64>> {
    let zipf = Zipf::new(support as f64, s).map_err(|e| config(e.to_string()))?;
    Ok((0..count).map(|_| zipf.sample(rng) as u64).collect())
}

/// Distinct 5-tuple for flow `i` of a trace; the destination side varies with the seed.
pub fn flow_key(seed: u64, i: u64) -> FlowKey {
    let h = seeded_hash(&i.to_le_bytes(), seed);
    let src = Ipv4Addr::from(0x0a00_0000 | (i & 0x00ff_ffff) as u32);
    let src_port = 1_024 + (i >> 24) as u16;
    let dst = Ipv4Addr::from(0xac10_0000 | (h as u32 & 0x000f_ffff));
    let (dst_port, proto) = match (h >> 32) % 4 {
        0 => (53, 17),
        1 => (80, 6),
        _ => (443, 6),
    };
    FlowKey::five_tuple(src, dst, src_port, dst_port, proto)
}

/// Packet stream of a [`TraceSpec`].
pub struct TraceGenerator {
    spec: TraceSpec,
    rng: ChaCha8Rng,
    sizes: Vec<u64>,
    next_flow: usize,
    /// `(flow, packets left)`.
    active: Vec<(usize, u64)>,
    ts: u64,
}

impl TraceGenerator {
    pub fn new(spec: TraceSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let support = zipf_support(spec.zipf_s, spec.mean_packets)?;
        let sizes = flow_sizes(&mut rng, spec.flows, spec.zipf_s, support)?;
        Ok(Self {
            spec,
            rng,
            sizes,
            next_flow: 0,
            active: Vec::new(),
            ts: 0,
        })
    }

    /// Per-flow packet counts, indexed like [`flow_key`].
    pub fn sizes(&self) -> &[u64] {
        &self.sizes
    }
}

impl Iterator for TraceGenerator {
    type Item = Packet;

    fn next(&mut self) -> Option<Packet> {
        while self.active.len() < self.spec.concurrency && self.next_flow < self.sizes.len() {
            self.active
                .push((self.next_flow, self.sizes[self.next_flow]));
            self.next_flow += 1;
        }
        if self.active.is_empty() {
            return None;
        }
        let j = self.rng.random_range(0..self.active.len());
        let flow = self.active[j].0;
        self.active[j].1 -= 1;
        if self.active[j].1 == 0 {
            self.active.swap_remove(j);
        }
        self.ts += self.rng.random_range(500..1_500);
        let key = flow_key(self.spec.seed, flow as u64);
        Some(Packet::new(key, self.spec.packet_bytes, self.ts).expect("packet size validated"))
    }
}

/// Writes the trace as CSV to `out`.
pub fn gen_trace(spec: &TraceSpec, out: &Path) -> Result<TraceSummary> {
    let generator = TraceGenerator::new(spec.clone())?;
    let mut summary = TraceSummary {
        flows: spec.flows as u64,
        ..TraceSummary::default()
    };
    let mut writer = TraceWriter::new(BufWriter::new(File::create(out)?))?;
    for p in generator {
        summary.packets += 1;
        summary.bytes += p.size_bytes;
        writer.write(&p)?;
    }
    writer.finish()?.flush()?;
    Ok(summary)
}
