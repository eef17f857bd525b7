//! Binary hop-label stack file.
//!
//! ```text
//! magic        4 bytes  "LDHS"
//! version      u32
//! n_hops       u32      N (the file holds N + 1 blocks)
//! num_nodes    u64
//! num_classes  u64
//! elem_width   u32      4 (f32) or 8 (f64)
//! blocks       (N + 1) · num_nodes · num_classes elements, hop order, row-major
//! ```
//!
//! All integers and floats are little-endian.

use std::path::Path;

use super::HopLabelStack;
use crate::error::{Error, Result};
use crate::format::{checked_len, DecodeError, Reader};
use crate::matrix::Matrix;

pub const HOP_STACK_MAGIC: [u8; 4] = *b"LDHS";
pub const HOP_STACK_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 8 + 8 + 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ElemWidth {
    F32,
    #[default]
    F64,
}

impl ElemWidth {
    fn bytes(self) -> u32 {
        match self {
            ElemWidth::F32 => 4,
            ElemWidth::F64 => 8,
        }
    }
}

impl HopLabelStack {
    pub fn encode(&self, width: ElemWidth) -> Vec<u8> {
        let (n, d) = (self.num_nodes(), self.num_classes());
        let mut out = Vec::with_capacity(HEADER_LEN + self.hops.len() * n * d * width.bytes() as usize);
        out.extend_from_slice(&HOP_STACK_MAGIC);
        out.extend_from_slice(&HOP_STACK_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n_hops() as u32).to_le_bytes());
        out.extend_from_slice(&(n as u64).to_le_bytes());
        out.extend_from_slice(&(d as u64).to_le_bytes());
        out.extend_from_slice(&width.bytes().to_le_bytes());
        for hop in &self.hops {
            for &v in hop.as_slice() {
                match width {
                    ElemWidth::F32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
                    ElemWidth::F64 => out.extend_from_slice(&v.to_le_bytes()),
                }
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        r.magic(HOP_STACK_MAGIC)?;
        let version = r.u32()?;
        if version != HOP_STACK_VERSION {
            return Err(DecodeError::Version {
                found: version,
                expected: HOP_STACK_VERSION,
            });
        }
        let n_hops = r.u32()? as usize;
        let num_nodes = r.u64()?;
        let num_classes = r.u64()?;
        let width = r.u32()? as usize;
        if width != 4 && width != 8 {
            return Err(DecodeError::Invalid {
                field: "elem_width",
                reason: format!("{width} is not 4 or 8"),
            });
        }
        let avail = r.remaining();
        let num_nodes = checked_len("num_nodes", num_nodes, avail)?;
        let num_classes = checked_len("num_classes", num_classes, avail)?;
        if num_nodes == 0 || num_classes == 0 {
            return Err(DecodeError::Invalid {
                field: "shape",
                reason: "blocks must be non-empty".into(),
            });
        }
        let block = num_nodes
            .checked_mul(num_classes)
            .filter(|b| b.checked_mul(width).is_some())
            .ok_or(DecodeError::Invalid {
                field: "shape",
                reason: "block size overflows".into(),
            })?;
        let total_bytes = block
            .checked_mul(width)
            .and_then(|b| b.checked_mul(n_hops + 1))
            .ok_or(DecodeError::Invalid {
                field: "shape",
                reason: "payload size overflows".into(),
            })?;
        if total_bytes != avail {
            return Err(DecodeError::Invalid {
                field: "payload",
                reason: format!("header implies {total_bytes} bytes, found {avail}"),
            });
        }
        let mut hops = Vec::with_capacity(n_hops + 1);
        for _ in 0..=n_hops {
            let data = r.floats(block, width)?;
            hops.push(Matrix::from_vec(num_nodes, num_classes, data).expect("length checked"));
        }
        r.finish()?;
        Ok(HopLabelStack { hops })
    }

    pub fn save(&self, path: &Path, width: ElemWidth) -> Result<()> {
        std::fs::write(path, self.encode(width)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::decode(&bytes)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> HopLabelStack {
        HopLabelStack::from_hops(vec![
            Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]]),
            Matrix::from_rows(&[[0.25, 0.75], [1.0, 0.0], [0.125, 0.875]]),
        ])
        .unwrap()
    }

    #[test]
    fn header_layout() {
        let bytes = sample().encode(ElemWidth::F64);
        assert_eq!(&bytes[..4], b"LDHS");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[12..20].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(bytes[20..28].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[28..32].try_into().unwrap()), 8);
        assert_eq!(bytes.len(), HEADER_LEN + 2 * 3 * 2 * 8);
    }

    #[test]
    fn both_widths_decode() {
        let s = sample();
        assert_eq!(HopLabelStack::decode(&s.encode(ElemWidth::F64)).unwrap(), s);
        // every value above is exactly representable in f32
        assert_eq!(HopLabelStack::decode(&s.encode(ElemWidth::F32)).unwrap(), s);
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        let good = sample().encode(ElemWidth::F64);
        assert!(matches!(
            HopLabelStack::decode(&good[..good.len() - 1]),
            Err(DecodeError::Invalid { .. })
        ));
        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(matches!(HopLabelStack::decode(&bad_magic), Err(DecodeError::BadMagic { .. })));
        let mut bad_version = good.clone();
        bad_version[4] = 9;
        assert!(matches!(
            HopLabelStack::decode(&bad_version),
            Err(DecodeError::Version { found: 9, .. })
        ));
        let mut huge = good.clone();
        huge[12..20].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(HopLabelStack::decode(&huge).is_err());
        assert!(HopLabelStack::decode(&good[..10]).is_err());
    }
}
