//! Versioned little-endian container shared by every serialized structure.
//!
//! Layout of a container: `MAGIC (4) | VERSION (1) | tag (1) | body`. The body
//! layout is owned by the structure named by the tag.

use std::fmt;

use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"LSSK";
pub const VERSION: u8 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum StructureTag {
    Lss = 1,
    CountMin = 2,
    CountSketch = 3,
    Membership = 4,
}

impl StructureTag {
    fn from_u8(v: u8) -> Option<Self> {
        Some(match v {
            1 => Self::Lss,
            2 => Self::CountMin,
            3 => Self::CountSketch,
            4 => Self::Membership,
            _ => return None,
        })
    }
}

impl fmt::Display for StructureTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("decode error at byte {offset}: {reason}")]
pub struct DecodeError {
    pub offset: usize,
    pub reason: String,
}

#[derive(Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_header(tag: StructureTag) -> Self {
        let mut w = Self::new();
        w.bytes(&MAGIC);
        w.u8(VERSION);
        w.u8(tag as u8);
        w
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    pub fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub fn i64(&mut self, v: i64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub fn f32(&mut self, v: f32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    /// Unsigned value stored in `width` bytes (2, 4 or 8).
    pub fn uint(&mut self, v: u64, width: usize) {
        match width {
            2 => self.u16(v as u16),
            4 => self.u32(v as u32),
            8 => self.u64(v),
            _ => unreachable!("unsupported field width {width}"),
        }
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    /// Checks magic, version and tag.
    pub fn with_header(buf: &'a [u8], expected: StructureTag) -> Result<Self, DecodeError> {
        let mut r = Self::new(buf);
        if r.take(4)? != MAGIC {
            return Err(r.error_at(0, "bad magic"));
        }
        let version = r.u8()?;
        if version != VERSION {
            return Err(r.error_at(4, format!("unsupported version {version}")));
        }
        let raw = r.u8()?;
        match StructureTag::from_u8(raw) {
            Some(tag) if tag == expected => Ok(r),
            Some(tag) => Err(r.error_at(5, format!("expected {expected} container, found {tag}"))),
            None => Err(r.error_at(5, format!("unknown structure tag {raw}"))),
        }
    }

    pub fn offset(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn error(&self, reason: impl Into<String>) -> DecodeError {
        self.error_at(self.pos, reason)
    }

    pub fn error_at(&self, offset: usize, reason: impl Into<String>) -> DecodeError {
        DecodeError {
            offset,
            reason: reason.into(),
        }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        if self.remaining() < n {
            return Err(self.error(format!(
                "truncated: need {n} bytes, {} left",
                self.remaining()
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], DecodeError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    pub fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take(1)?[0])
    }
    pub fn u16(&mut self) -> Result<u16, DecodeError> {
        self.array().map(u16::from_le_bytes)
    }
    pub fn u32(&mut self) -> Result<u32, DecodeError> {
        self.array().map(u32::from_le_bytes)
    }
    pub fn u64(&mut self) -> Result<u64, DecodeError> {
        self.array().map(u64::from_le_bytes)
    }
    pub fn i64(&mut self) -> Result<i64, DecodeError> {
        self.array().map(i64::from_le_bytes)
    }
    pub fn f32(&mut self) -> Result<f32, DecodeError> {
        self.array().map(f32::from_le_bytes)
    }

    pub fn uint(&mut self, width: usize) -> Result<u64, DecodeError> {
        match width {
            2 => self.u16().map(u64::from),
            4 => self.u32().map(u64::from),
            8 => self.u64(),
            _ => Err(self.error(format!("unsupported field width {width}"))),
        }
    }

    pub fn finish(self) -> Result<(), DecodeError> {
        if self.remaining() != 0 {
            return Err(self.error(format!("{} trailing bytes", self.remaining())));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_mismatches_report_offsets() {
        let bytes = Writer::with_header(StructureTag::CountMin).finish();
        let err = Reader::with_header(&bytes, StructureTag::Lss)
            .err()
            .unwrap();
        assert_eq!(err.offset, 5);

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(
            Reader::with_header(&bad, StructureTag::CountMin)
                .err()
                .unwrap()
                .offset,
            0
        );

        let err = Reader::with_header(&bytes[..3], StructureTag::CountMin)
            .err()
            .unwrap();
        assert_eq!(err.offset, 0);
        assert!(err.reason.contains("truncated"));
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut w = Writer::with_header(StructureTag::Lss);
        w.u32(7);
        let bytes = w.finish();
        let mut r = Reader::with_header(&bytes, StructureTag::Lss).unwrap();
        r.u16().unwrap();
        let err = r.finish().unwrap_err();
        assert_eq!(err.offset, 8);
    }
}
