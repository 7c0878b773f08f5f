//! Length-prefixed framing for carrying messages over files or sockets:
//! each frame is a little-endian `u32` length followed by that many bytes.

use std::io::{self, ErrorKind, Read, Write};

/// Largest accepted frame, to bound allocation on corrupt input.
pub const MAX_FRAME: usize = 1 << 30;

pub fn write_frame<W: Write>(w: &mut W, payload: &[u8]) -> io::Result<()> {
    if payload.len() > MAX_FRAME {
        return Err(io::Error::new(ErrorKind::InvalidInput, "frame too large"));
    }
    w.write_all(&(payload.len() as u32).to_le_bytes())?;
    w.write_all(payload)
}

/// Next frame, or `None` at a clean end of stream. A stream that ends inside a
/// frame is an `UnexpectedEof` error.
pub fn read_frame<R: Read>(r: &mut R) -> io::Result<Option<Vec<u8>>> {
    let mut len = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut len[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(ErrorKind::UnexpectedEof.into()),
            Ok(n) => got += n,
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    let len = u32::from_le_bytes(len) as usize;
    if len > MAX_FRAME {
        return Err(io::Error::new(
            ErrorKind::InvalidData,
            format!("frame length {len} exceeds limit"),
        ));
    }
    let mut buf = vec![0; len];
    r.read_exact(&mut buf)?;
    Ok(Some(buf))
}

/// Iterator over the frames of a stream.
pub struct Frames<R>(pub R);

impl<R: Read> Iterator for Frames<R> {
    type Item = io::Result<Vec<u8>>;

    fn next(&mut self) -> Option<Self::Item> {
        read_frame(&mut self.0).transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_truncation() {
        let mut buf = Vec::new();
        write_frame(&mut buf, b"hello").unwrap();
        write_frame(&mut buf, b"").unwrap();
        write_frame(&mut buf, &[9; 300]).unwrap();
        let frames: Vec<Vec<u8>> = Frames(&buf[..]).collect::<io::Result<_>>().unwrap();
        assert_eq!(frames, vec![b"hello".to_vec(), vec![], vec![9; 300]]);

        let cut = &buf[..buf.len() - 1];
        let last = Frames(cut).last().unwrap();
        assert_eq!(last.unwrap_err().kind(), ErrorKind::UnexpectedEof);
        assert_eq!(
            read_frame(&mut &buf[..2]).unwrap_err().kind(),
            ErrorKind::UnexpectedEof
        );
    }
}
