//! CSV packet traces: `ts_ns,src_ip,dst_ip,src_port,dst_port,proto,bytes`.

use std::io::{Read, Write};
use std::net::Ipv4Addr;

use lss_core::FlowKey;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, PipelineError, Result};
use crate::packet::Packet;

pub const TRACE_HEADER: [&str; 7] = [
    "ts_ns", "src_ip", "dst_ip", "src_port", "dst_port", "proto", "bytes",
];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRow {
    pub ts_ns: u64,
    pub src_ip: Ipv4Addr,
    pub dst_ip: Ipv4Addr,
    pub src_port: u16,
    pub dst_port: u16,
    pub proto: u8,
    pub bytes: u64,
}

impl TraceRow {
    pub fn key(&self) -> FlowKey {
        FlowKey::five_tuple(
            self.src_ip,
            self.dst_ip,
            self.src_port,
            self.dst_port,
            self.proto,
        )
    }

    pub fn from_packet(p: &Packet) -> Result<Self> {
        let (src_ip, dst_ip, src_port, dst_port, proto) = p
            .key
            .as_five_tuple()
            .ok_or_else(|| invalid("trace rows need 5-tuple keys"))?;
        Ok(Self {
            ts_ns: p.ts_ns,
            src_ip,
            dst_ip,
            src_port,
            dst_port,
            proto,
            bytes: p.size_bytes,
        })
    }
}

/// Streams packets from a CSV trace. Errors carry the 1-based line number.
pub struct TraceReader<R: Read> {
    csv: csv::Reader<R>,
    headers: csv::StringRecord,
    record: csv::StringRecord,
}

impl<R: Read> TraceReader<R> {
    pub fn new(reader: R) -> Result<Self> {
        let mut csv = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let headers = csv.headers().map_err(|e| trace_error(1, e))?.clone();
        if headers.iter().ne(TRACE_HEADER) {
            return Err(PipelineError::Trace {
                line: 1,
                reason: format!("expected header {}", TRACE_HEADER.join(",")),
            });
        }
        Ok(Self {
            csv,
            headers,
            record: csv::StringRecord::new(),
        })
    }
}

fn trace_error(line: u64, e: impl ToString) -> PipelineError {
    PipelineError::Trace {
        line,
        reason: e.to_string(),
    }
}

impl<R: Read> Iterator for TraceReader<R> {
    type Item = Result<Packet>;

    fn next(&mut self) -> Option<Self::Item> {
        match self.csv.read_record(&mut self.record) {
            Ok(false) => None,
            Ok(true) => {
                let line = self.record.position().map_or(0, |p| p.line());
                let row = self
                    .record
                    .deserialize::<TraceRow>(Some(&self.headers))
                    .map_err(|e| trace_error(line, e));
                Some(row.and_then(|row| {
                    Packet::new(row.key(), row.bytes, row.ts_ns).map_err(|e| trace_error(line, e))
                }))
            }
            Err(e) => Some(Err(trace_error(e.position().map_or(0, |p| p.line()), e))),
        }
    }
}

pub struct TraceWriter<W: Write> {
    csv: csv::Writer<W>,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(writer: W) -> Result<Self> {
        let mut csv = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(writer);
        csv.write_record(TRACE_HEADER).map_err(io_error)?;
        Ok(Self { csv })
    }

    pub fn write(&mut self, p: &Packet) -> Result<()> {
        self.csv
            .serialize(TraceRow::from_packet(p)?)
            .map_err(io_error)
    }

    pub fn finish(mut self) -> Result<W> {
        self.csv.flush()?;
        self.csv
            .into_inner()
            .map_err(|e| PipelineError::Io(e.into_error()))
    }
}

fn io_error(e: csv::Error) -> PipelineError {
    PipelineError::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pkt(i: u16, ts: u64, bytes: u64) -> Packet {
        let key = FlowKey::five_tuple(
            Ipv4Addr::new(10, 0, 0, 1),
            Ipv4Addr::new(10, 0, 1, 2),
            i,
            80,
            6,
        );
        Packet::new(key, bytes, ts).unwrap()
    }

    #[test]
    fn round_trip() {
        let packets = vec![pkt(1, 0, 1_000), pkt(2, 5, 40), pkt(1, 9, 1_500)];
        let mut w = TraceWriter::new(Vec::new()).unwrap();
        for p in &packets {
            w.write(p).unwrap();
        }
        let bytes = w.finish().unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with(
            "ts_ns,src_ip,dst_ip,src_port,dst_port,proto,bytes\n0,10.0.0.1,10.0.1.2,1,80,6,1000\n"
        ));
        let back: Vec<Packet> = TraceReader::new(&bytes[..])
            .unwrap()
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(back, packets);
    }

    #[test]
    fn errors_name_the_line() {
        let text = "ts_ns,src_ip,dst_ip,src_port,dst_port,proto,bytes\n1,10.0.0.1,10.0.0.2,1,2,6,100\n2,10.0.0.1,nope,1,2,6,100\n";
        let rows: Vec<_> = TraceReader::new(text.as_bytes()).unwrap().collect();
        assert!(rows[0].is_ok());
        assert!(
            matches!(&rows[1], Err(PipelineError::Trace { line: 3, .. })),
            "{:?}",
            rows[1]
        );

        let zero =
            "ts_ns,src_ip,dst_ip,src_port,dst_port,proto,bytes\n1,10.0.0.1,10.0.0.2,1,2,6,0\n";
        let rows: Vec<_> = TraceReader::new(zero.as_bytes()).unwrap().collect();
        assert!(
            matches!(&rows[0], Err(PipelineError::Trace { line: 2, .. })),
            "{:?}",
            rows[0]
        );

        assert!(matches!(
            TraceReader::new("a,b\n".as_bytes()),
            Err(PipelineError::Trace { line: 1, .. })
        ));
    }
}
