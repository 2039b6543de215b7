//! Length-prefixed field framing shared by every canonical encoding.
//!
//! A frame is a fixed magic string followed by fields, each written as a
//! big-endian `u32` byte length and the raw bytes.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct FrameError(pub String);

impl fmt::Display for FrameError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub(crate) struct FrameWriter {
    buf: Vec<u8>,
}

impl FrameWriter {
    pub fn new(magic: &[u8]) -> Self {
        Self { buf: magic.to_vec() }
    }

    pub fn field(&mut self, bytes: &[u8]) -> &mut Self {
        let len = u32::try_from(bytes.len()).expect("field larger than 4 GiB");
        self.buf.extend_from_slice(&len.to_be_bytes());
        self.buf.extend_from_slice(bytes);
        self
    }

    pub fn text(&mut self, s: &str) -> &mut Self {
        self.field(s.as_bytes())
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub(crate) struct FrameReader<'a> {
    rest: &'a [u8],
}

impl<'a> FrameReader<'a> {
    pub fn new(bytes: &'a [u8], magic: &[u8]) -> Result<Self, FrameError> {
        match bytes.strip_prefix(magic) {
            Some(rest) => Ok(Self { rest }),
            None => Err(FrameError("bad magic".into())),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.rest.is_empty()
    }

    pub fn field(&mut self) -> Result<&'a [u8], FrameError> {
        if self.rest.len() < 4 {
            return Err(FrameError("truncated length prefix".into()));
        }
        let (len, rest) = self.rest.split_at(4);
        let len = u32::from_be_bytes(len.try_into().unwrap()) as usize;
        if rest.len() < len {
            return Err(FrameError(format!(
                "field of {len} bytes overruns input ({} left)",
                rest.len()
            )));
        }
        let (field, rest) = rest.split_at(len);
        self.rest = rest;
        Ok(field)
    }

    pub fn text(&mut self) -> Result<&'a str, FrameError> {
        std::str::from_utf8(self.field()?).map_err(|e| FrameError(format!("invalid utf-8: {e}")))
    }

    pub fn decimal(&mut self) -> Result<u64, FrameError> {
        let s = self.text()?;
        // reject "+1", "01" and friends so the decimal form stays canonical
        if s.is_empty() || (s.len() > 1 && s.starts_with('0')) || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(FrameError(format!("not a canonical decimal: {s:?}")));
        }
        s.parse().map_err(|e| FrameError(format!("{e}")))
    }

    pub fn end(self) -> Result<(), FrameError> {
        if self.rest.is_empty() {
            Ok(())
        } else {
            Err(FrameError(format!("{} trailing bytes", self.rest.len())))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fields_round_trip() {
        let mut w = FrameWriter::new(b"T/1");
        w.text("abc").field(&[]).text("42");
        let bytes = w.finish();
        let mut r = FrameReader::new(&bytes, b"T/1").unwrap();
        assert_eq!(r.text().unwrap(), "abc");
        assert_eq!(r.field().unwrap(), b"");
        assert_eq!(r.decimal().unwrap(), 42);
        r.end().unwrap();
    }

    #[test]
    fn rejects_overrun_and_non_canonical_decimals() {
        let bytes = [b"T/1".as_slice(), &[0, 0, 0, 9], b"abc"].concat();
        assert!(FrameReader::new(&bytes, b"T/1").unwrap().field().is_err());
        for bad in ["007", "+7", "", "7a"] {
            let mut w = FrameWriter::new(b"T/1");
            w.text(bad);
            let bytes = w.finish();
            assert!(FrameReader::new(&bytes, b"T/1").unwrap().decimal().is_err(), "{bad}");
        }
    }
}
