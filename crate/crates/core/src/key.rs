//! Flow identifiers and the seeded hash used by every structure in the crate.

use std::fmt;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::xxh3_64_with_seed;

use crate::error::{invalid, Result};

/// Length of the canonical 5-tuple encoding.
pub const FIVE_TUPLE_LEN: usize = 13;

/// Opaque, non-empty flow identifier. Equality is byte equality.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FlowKey(Box<[u8]>);

impl FlowKey {
    /// Keys longer than 255 bytes are rejected so they fit the one-byte length prefix on the wire.
    pub fn new(bytes: impl Into<Vec<u8>>) -> Result<Self> {
        let bytes = bytes.into();
        if bytes.is_empty() {
            return Err(invalid("flow key must be non-empty"));
        }
        if bytes.len() > u8::MAX as usize {
            return Err(invalid(format!(
                "flow key of {} bytes exceeds 255",
                bytes.len()
            )));
        }
        Ok(Self(bytes.into_boxed_slice()))
    }

    /// src-ip, dst-ip, src-port, dst-port, proto; network byte order.
    pub fn five_tuple(
        src: Ipv4Addr,
        dst: Ipv4Addr,
        src_port: u16,
        dst_port: u16,
        proto: u8,
    ) -> Self {
        let mut b = Vec::with_capacity(FIVE_TUPLE_LEN);
        b.extend_from_slice(&src.octets());
        b.extend_from_slice(&dst.octets());
        b.extend_from_slice(&src_port.to_be_bytes());
        b.extend_from_slice(&dst_port.to_be_bytes());
        b.push(proto);
        Self(b.into_boxed_slice())
    }

    pub fn from_id(id: u64) -> Self {
        Self(id.to_be_bytes().to_vec().into_boxed_slice())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn hash_with(&self, seed: u64) -> u64 {
        seeded_hash(&self.0, seed)
    }

    pub fn as_five_tuple(&self) -> Option<(Ipv4Addr, Ipv4Addr, u16, u16, u8)> {
        let b = &self.0;
        if b.len() != FIVE_TUPLE_LEN {
            return None;
        }
        Some((
            Ipv4Addr::new(b[0], b[1], b[2], b[3]),
            Ipv4Addr::new(b[4], b[5], b[6], b[7]),
            u16::from_be_bytes([b[8], b[9]]),
            u16::from_be_bytes([b[10], b[11]]),
            b[12],
        ))
    }
}

impl fmt::Debug for FlowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FlowKey({self})")
    }
}

impl fmt::Display for FlowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some((s, d, sp, dp, p)) = self.as_five_tuple() {
            return write!(f, "{s}:{sp}->{d}:{dp}/{p}");
        }
        for b in self.0.iter() {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

/// A flow counter increment.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub key: FlowKey,
    pub value: u64,
}

impl FlowRecord {
    pub fn new(key: FlowKey, value: u64) -> Self {
        Self { key, value }
    }
}

/// 64-bit seeded non-cryptographic hash (XXH3).
#[inline]
pub fn seeded_hash(bytes: &[u8], seed: u64) -> u64 {
    xxh3_64_with_seed(bytes, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_oversized_keys() {
        assert!(FlowKey::new(Vec::new()).is_err());
        assert!(FlowKey::new(vec![7u8; 256]).is_err());
        assert!(FlowKey::new(vec![7u8; 255]).is_ok());
    }

    #[test]
    fn five_tuple_layout() {
        let k = FlowKey::five_tuple(
            Ipv4Addr::new(10, 0, 0, 1),
            Ipv4Addr::new(10, 0, 0, 2),
            80,
            443,
            6,
        );
        assert_eq!(k.as_bytes().len(), FIVE_TUPLE_LEN);
        assert_eq!(k.to_string(), "10.0.0.1:80->10.0.0.2:443/6");
        assert_eq!(
            k.as_five_tuple(),
            Some((
                Ipv4Addr::new(10, 0, 0, 1),
                Ipv4Addr::new(10, 0, 0, 2),
                80,
                443,
                6
            ))
        );
    }

    #[test]
    fn hash_depends_on_seed() {
        let k = FlowKey::from_id(42);
        assert_eq!(k.hash_with(1), k.hash_with(1));
        assert_ne!(k.hash_with(1), k.hash_with(2));
    }
}
