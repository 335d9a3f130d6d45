//! Versioned flat binary encoding shared by the model files.
//!
//! Layout: an 8-byte magic string, a `u32` format version, then the
//! payload. All integers and floats are little-endian; float tensors are
//! stored row-major as 64-bit values.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("unexpected end of data at byte {0}")]
    UnexpectedEof(usize),

    #[error("bad magic: expected {expected:?}")]
    BadMagic { expected: String },

    #[error("unsupported format version {found} (expected {expected})")]
    UnsupportedVersion { expected: u32, found: u32 },

    #[error("corrupt file: {0}")]
    Corrupt(String),

    #[error("trailing bytes after payload")]
    TrailingBytes,
}

pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new(magic: &[u8; 8], version: u32) -> Self {
        let mut w = Self { buf: Vec::new() };
        w.buf.extend_from_slice(magic);
        w.u32(version);
        w
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn f64_slice(&mut self, vs: &[f64]) {
        self.buf.reserve(vs.len() * 8);
        for &v in vs {
            self.f64(v);
        }
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    /// Opens a buffer, checking magic and version.
    pub fn new(data: &'a [u8], magic: &[u8; 8], version: u32) -> Result<Self, FormatError> {
        let mut r = Self { data, pos: 0 };
        let found = r.bytes(8)?;
        if found != magic {
            return Err(FormatError::BadMagic {
                expected: String::from_utf8_lossy(magic).into_owned(),
            });
        }
        let v = r.u32()?;
        if v != version {
            return Err(FormatError::UnsupportedVersion {
                expected: version,
                found: v,
            });
        }
        Ok(r)
    }

    fn bytes(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        if self.pos + n > self.data.len() {
            return Err(FormatError::UnexpectedEof(self.pos));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.bytes(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(
            self.bytes(4)?.try_into().expect("4 bytes"),
        ))
    }

    pub fn u64(&mut self) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(
            self.bytes(8)?.try_into().expect("8 bytes"),
        ))
    }

    pub fn f64(&mut self) -> Result<f64, FormatError> {
        Ok(f64::from_le_bytes(
            self.bytes(8)?.try_into().expect("8 bytes"),
        ))
    }

    pub fn f64_vec(&mut self, n: usize) -> Result<Vec<f64>, FormatError> {
        // Guard the multiplication so corrupt headers cannot trigger an
        // absurd allocation.
        if n > self.data.len() / 8 + 1 {
            return Err(FormatError::Corrupt(format!(
                "tensor length {n} exceeds file size"
            )));
        }
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(self.f64()?);
        }
        Ok(out)
    }

    pub fn expect_end(&self) -> Result<(), FormatError> {
        if self.pos == self.data.len() {
            Ok(())
        } else {
            Err(FormatError::TrailingBytes)
        }
    }
}

/// FNV-1a 64-bit hash, used for source-file checksums in manifests.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_scalars() {
        let mut w = Writer::new(b"TESTMAGC", 3);
        w.u32(42);
        w.f64(-1.5);
        w.u64(u64::MAX);
        w.u8(7);
        let bytes = w.finish();

        let mut r = Reader::new(&bytes, b"TESTMAGC", 3).unwrap();
        assert_eq!(r.u32().unwrap(), 42);
        assert_eq!(r.f64().unwrap(), -1.5);
        assert_eq!(r.u64().unwrap(), u64::MAX);
        assert_eq!(r.u8().unwrap(), 7);
        r.expect_end().unwrap();
    }

    #[test]
    fn detects_bad_magic_and_version() {
        let bytes = Writer::new(b"TESTMAGC", 1).finish();
        assert!(matches!(
            Reader::new(&bytes, b"OTHERMGC", 1),
            Err(FormatError::BadMagic { .. })
        ));
        assert!(matches!(
            Reader::new(&bytes, b"TESTMAGC", 2),
            Err(FormatError::UnsupportedVersion { .. })
        ));
    }

    #[test]
    fn eof_and_trailing_are_reported() {
        let mut w = Writer::new(b"TESTMAGC", 1);
        w.u32(1);
        let bytes = w.finish();
        let mut r = Reader::new(&bytes, b"TESTMAGC", 1).unwrap();
        assert!(r.expect_end().is_err());
        r.u32().unwrap();
        assert!(matches!(r.u32(), Err(FormatError::UnexpectedEof(_))));
    }

    #[test]
    fn fnv_is_stable() {
        // Reference value for "hello" from the FNV-1a specification.
        assert_eq!(fnv1a64(b"hello"), 0xa430d84680aabd0b);
    }
}
