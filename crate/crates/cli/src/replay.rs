//! Helpers for commands that work from a CSV trace.

use std::io::Read;
use std::net::Ipv4Addr;

use indexmap::IndexMap;
use lss_core::{FlowKey, KMeansConfig, Model};
use lss_pipeline::TraceReader;

use crate::error::{config, Result};

/// Total bytes of the first `limit` flows of a trace, in order of first appearance.
pub fn flow_totals<R: Read>(reader: R, limit: usize) -> Result<Vec<f64>> {
    let mut totals: IndexMap<FlowKey, u64> = IndexMap::new();
    for p in TraceReader::new(reader)? {
        let p = p?;
        if totals.len() == limit && !totals.contains_key(&p.key) {
            continue;
        }
        *totals.entry(p.key).or_default() += p.size_bytes;
    }
    Ok(totals.into_values().map(|v| v as f64).collect())
}

/// Fits `clusters` centers, or one per distinct total if there are fewer.
pub fn train_model<R: Read>(
    reader: R,
    clusters: usize,
    samples: usize,
    seed: u64,
) -> Result<Model> {
    let totals = flow_totals(reader, samples)?;
    if totals.is_empty() {
        return Err(config("trace holds no flows to train on"));
    }
    let mut distinct = totals.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let k = clusters.min(distinct.len());
    Ok(Model::fit(
        &totals,
        &KMeansConfig {
            k,
            seed,
            ..KMeansConfig::default()
        },
    )?)
}

/// Parses the `src:port->dst:port/proto` form that [`FlowKey`] displays.
pub fn parse_flow_key(s: &str) -> Result<FlowKey> {
    let bad = || config(format!("flow key {s:?} is not src:port->dst:port/proto"));
    let (src, rest) = s.split_once("->").ok_or_else(bad)?;
    let (dst, proto) = rest.split_once('/').ok_or_else(bad)?;
    let endpoint = |e: &str| -> Result<(Ipv4Addr, u16)> {
        let (ip, port) = e.rsplit_once(':').ok_or_else(bad)?;
        Ok((
            ip.parse().map_err(|_| bad())?,
            port.parse().map_err(|_| bad())?,
        ))
    };
    let (src, sp) = endpoint(src)?;
    let (dst, dp) = endpoint(dst)?;
    Ok(FlowKey::five_tuple(
        src,
        dst,
        sp,
        dp,
        proto.parse().map_err(|_| bad())?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_text_round_trips() {
        let k = FlowKey::five_tuple(
            Ipv4Addr::new(10, 0, 0, 1),
            Ipv4Addr::new(8, 8, 8, 8),
            5353,
            53,
            17,
        );
        assert_eq!(parse_flow_key(&k.to_string()).unwrap(), k);
        assert!(parse_flow_key("10.0.0.1:1->8.8.8.8:53").is_err());
        assert!(parse_flow_key("10.0.0.1->8.8.8.8:53/6").is_err());
    }
}
