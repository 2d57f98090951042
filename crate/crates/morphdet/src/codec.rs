//! Little-endian binary encoding helpers shared by the filter bank file,
//! the feature cache, and the model bundle. Every container ends with a
//! SHA-256 checksum over the preceding bytes.

use std::io::Write;
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use sha2::{Digest, Sha256};

pub const CHECKSUM_LEN: usize = 32;

#[derive(Default)]
pub struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put_magic(&mut self, magic: &[u8; 8]) {
        self.buf.extend_from_slice(magic);
    }

    pub fn put_u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn put_u32(&mut self, v: u32) {
        self.buf.write_u32::<LittleEndian>(v).unwrap();
    }

    pub fn put_u64(&mut self, v: u64) {
        self.buf.write_u64::<LittleEndian>(v).unwrap();
    }

    pub fn put_f64(&mut self, v: f64) {
        self.buf.write_f64::<LittleEndian>(v).unwrap();
    }

    pub fn put_str(&mut self, s: &str) {
        self.put_u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }

    pub fn put_f64_slice(&mut self, v: &[f64]) {
        self.put_u64(v.len() as u64);
        for x in v {
            self.buf.write_f64::<LittleEndian>(*x).unwrap();
        }
    }

    /// Append the checksum and return the finished container.
    pub fn finish(mut self) -> Vec<u8> {
        let digest = Sha256::digest(&self.buf);
        self.buf.extend_from_slice(&digest);
        self.buf
    }
}

pub struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    /// Verify the trailing checksum and wrap the payload.
    pub fn checked(bytes: &'a [u8]) -> Result<Self, String> {
        if bytes.len() < CHECKSUM_LEN {
            return Err("container shorter than its checksum".into());
        }
        let (payload, stored) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
        let digest = Sha256::digest(payload);
        if digest.as_slice() != stored {
            return Err("checksum mismatch (file truncated or corrupted)".into());
        }
        Ok(Self {
            buf: payload,
            pos: 0,
        })
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], String> {
        if self.pos + n > self.buf.len() {
            return Err("container truncated".into());
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn expect_magic(&mut self, magic: &[u8; 8]) -> Result<(), String> {
        let got = self.take(8)?;
        if got != magic {
            return Err(format!(
                "bad magic {:?}; expected {:?}",
                String::from_utf8_lossy(got),
                String::from_utf8_lossy(magic)
            ));
        }
        Ok(())
    }

    pub fn take_u8(&mut self) -> Result<u8, String> {
        Ok(self.take(1)?[0])
    }

    pub fn take_u32(&mut self) -> Result<u32, String> {
        let mut b = self.take(4)?;
        b.read_u32::<LittleEndian>().map_err(|e| e.to_string())
    }

    pub fn take_u64(&mut self) -> Result<u64, String> {
        let mut b = self.take(8)?;
        b.read_u64::<LittleEndian>().map_err(|e| e.to_string())
    }

    pub fn take_f64(&mut self) -> Result<f64, String> {
        let mut b = self.take(8)?;
        b.read_f64::<LittleEndian>().map_err(|e| e.to_string())
    }

    pub fn take_str(&mut self) -> Result<String, String> {
        let len = self.take_u32()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec()).map_err(|e| e.to_string())
    }

    pub fn take_f64_vec(&mut self) -> Result<Vec<f64>, String> {
        let len = self.take_u64()? as usize;
        if len.checked_mul(8).map_or(true, |b| self.pos + b > self.buf.len()) {
            return Err("container truncated".into());
        }
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            out.push(self.take_f64()?);
        }
        Ok(out)
    }

    pub fn finish(&self) -> Result<(), String> {
        if self.pos != self.buf.len() {
            return Err("trailing bytes in container".into());
        }
        Ok(())
    }
}

/// Write `bytes` to `path` via a temp file and atomic rename, so an
/// interrupted run never leaves a partial artifact at the target path.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_checksum() {
        let mut w = ByteWriter::new();
        w.put_magic(b"TESTMAG1");
        w.put_u32(7);
        w.put_str("hello");
        w.put_f64_slice(&[1.5, -2.25]);
        let bytes = w.finish();

        let mut r = ByteReader::checked(&bytes).unwrap();
        r.expect_magic(b"TESTMAG1").unwrap();
        assert_eq!(r.take_u32().unwrap(), 7);
        assert_eq!(r.take_str().unwrap(), "hello");
        assert_eq!(r.take_f64_vec().unwrap(), vec![1.5, -2.25]);
        r.finish().unwrap();
    }

    #[test]
    fn truncation_detected() {
        let mut w = ByteWriter::new();
        w.put_u64(123);
        let bytes = w.finish();
        assert!(ByteReader::checked(&bytes[..bytes.len() - 1]).is_err());
        let mut flipped = bytes.clone();
        flipped[0] ^= 0xff;
        assert!(ByteReader::checked(&flipped).is_err());
    }
}
