//! Little-endian binary helpers shared by the hop-label stack and
//! checkpoint formats.
//!
//! Decoders treat their input as untrusted: every length is checked against
//! the remaining buffer before anything is allocated.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("truncated input: needed {needed} bytes at offset {offset}, {available} available")]
    Truncated {
        offset: usize,
        needed: usize,
        available: usize,
    },
    #[error("{0} trailing bytes after payload")]
    Trailing(usize),
    #[error("invalid field {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        if n > self.remaining() {
            return Err(DecodeError::Truncated {
                offset: self.pos,
                needed: n,
                available: self.remaining(),
            });
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn magic(&mut self, expected: [u8; 4]) -> Result<(), DecodeError> {
        let found: [u8; 4] = self.take(4)?.try_into().unwrap();
        if found != expected {
            return Err(DecodeError::BadMagic { expected, found });
        }
        Ok(())
    }

    pub fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, DecodeError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64, DecodeError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    /// Reads `count` floats of the given byte width (4 or 8), widening to f64.
    pub fn floats(&mut self, count: usize, width: usize) -> Result<Vec<f64>, DecodeError> {
        let bytes = count.checked_mul(width).ok_or(DecodeError::Invalid {
            field: "length",
            reason: format!("{count} elements of width {width} overflows"),
        })?;
        let raw = self.take(bytes)?;
        let out = match width {
            4 => raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
                .collect(),
            8 => raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
            w => {
                return Err(DecodeError::Invalid {
                    field: "element width",
                    reason: format!("{w} is not 4 or 8"),
                })
            }
        };
        Ok(out)
    }

    pub fn finish(self) -> Result<(), DecodeError> {
        match self.remaining() {
            0 => Ok(()),
            n => Err(DecodeError::Trailing(n)),
        }
    }
}

/// Converts a header count into `usize`, rejecting values that cannot be
/// backed by the bytes still available.
pub(crate) fn checked_len(
    field: &'static str,
    value: u64,
    limit: usize,
) -> Result<usize, DecodeError> {
    let v = usize::try_from(value).map_err(|_| DecodeError::Invalid {
        field,
        reason: format!("{value} does not fit in usize"),
    })?;
    if v > limit {
        return Err(DecodeError::Invalid {
            field,
            reason: format!("{v} exceeds what the remaining {limit} bytes can hold"),
        });
    }
    Ok(v)
}

pub(crate) fn put_f64s(out: &mut Vec<u8>, values: &[f64]) {
    out.reserve(values.len() * 8);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}
