//! A closed window's sketch plus the metadata the query stage indexes it by.

use lss_core::codec::{Reader, Writer};
use lss_core::Sketch;
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};

const ENVELOPE_MAGIC: &[u8; 4] = b"LSSE";
const ENVELOPE_VERSION: u8 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SketchEnvelope {
    pub topic: String,
    pub source_id: u32,
    pub window_id: u64,
    pub window_start: u64,
    pub window_end: u64,
    /// Set by the query stage when the envelope is received.
    pub arrival_ns: u64,
    /// Serialized sealed sketch, membership table included.
    pub payload: Vec<u8>,
}

/// Envelope metadata without the payload.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowRef {
    pub topic: String,
    pub source_id: u32,
    pub window_id: u64,
    pub window_start: u64,
    pub window_end: u64,
    pub arrival_ns: u64,
}

impl SketchEnvelope {
    pub fn sketch(&self) -> Result<Sketch> {
        Ok(Sketch::from_bytes(&self.payload)?)
    }

    pub fn window(&self) -> WindowRef {
        WindowRef {
            topic: self.topic.clone(),
            source_id: self.source_id,
            window_id: self.window_id,
            window_start: self.window_start,
            window_end: self.window_end,
            arrival_ns: self.arrival_ns,
        }
    }

    /// `LSSE | version | source u32 | window u64 | start u64 | end u64 |
    /// arrival u64 | topic_len u16 | topic | payload_len u32 | payload`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(ENVELOPE_MAGIC);
        w.u8(ENVELOPE_VERSION);
        w.u32(self.source_id);
        w.u64(self.window_id);
        w.u64(self.window_start);
        w.u64(self.window_end);
        w.u64(self.arrival_ns);
        w.u16(self.topic.len() as u16);
        w.bytes(self.topic.as_bytes());
        w.u32(self.payload.len() as u32);
        w.bytes(&self.payload);
        w.finish()
    }

    /// Decodes the envelope and checks that its payload is a valid sketch.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if r.take(4)? != ENVELOPE_MAGIC {
            return Err(r.error_at(0, "not a sketch envelope").into());
        }
        let version = r.u8()?;
        if version != ENVELOPE_VERSION {
            return Err(r
                .error_at(4, format!("unsupported version {version}"))
                .into());
        }
        let source_id = r.u32()?;
        let window_id = r.u64()?;
        let window_start = r.u64()?;
        let window_end = r.u64()?;
        let arrival_ns = r.u64()?;
        let topic_len = r.u16()? as usize;
        let at = r.offset();
        let topic = String::from_utf8(r.take(topic_len)?.to_vec())
            .map_err(|_| r.error_at(at, "topic is not UTF-8"))?;
        let payload_len = r.u32()? as usize;
        let payload_at = r.offset();
        let payload = r.take(payload_len)?.to_vec();
        r.finish()?;
        Sketch::from_bytes(&payload).map_err(|e| match e {
            lss_core::Error::Decode(d) => PipelineError::Decode {
                offset: payload_at + d.offset,
                reason: d.reason,
            },
            other => other.into(),
        })?;
        Ok(Self {
            topic,
            source_id,
            window_id,
            window_start,
            window_end,
            arrival_ns,
            payload,
        })
    }
}
