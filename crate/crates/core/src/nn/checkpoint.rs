//! Binary parameter checkpoints.
//!
//! ```text
//! magic       4 bytes "LDCK"
//! version     u32
//! has_filter  u8      0 or 1
//! [filter]    learnable u8, count u32, count × f64
//! n_layers    u32
//! per layer   in u64, out u64, activation u8 (0 = identity, 1 = relu)
//! payload     per layer: weight (in·out f64, row-major), bias (out f64)
//! ```
//!
//! Little-endian throughout.

use std::path::Path;

use super::mlp::{Activation, Layer, MlpParams};
use crate::error::{Error, Result};
use crate::format::{checked_len, put_f64s, DecodeError, Reader};
use crate::matrix::Matrix;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"LDCK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// Polynomial filter coefficients and their learnable flag, for GNN checkpoints.
    pub filter: Option<(Vec<f64>, bool)>,
    pub mlp: MlpParams,
}

impl Checkpoint {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        match &self.filter {
            None => out.push(0),
            Some((coeffs, learnable)) => {
                out.push(1);
                out.push(u8::from(*learnable));
                out.extend_from_slice(&(coeffs.len() as u32).to_le_bytes());
                put_f64s(&mut out, coeffs);
            }
        }
        out.extend_from_slice(&(self.mlp.layers.len() as u32).to_le_bytes());
        for l in &self.mlp.layers {
            out.extend_from_slice(&(l.in_dim() as u64).to_le_bytes());
            out.extend_from_slice(&(l.out_dim() as u64).to_le_bytes());
            out.push(match l.activation {
                Activation::Identity => 0,
                Activation::Relu => 1,
            });
        }
        for l in &self.mlp.layers {
            put_f64s(&mut out, l.weight.as_slice());
            put_f64s(&mut out, &l.bias);
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        r.magic(CHECKPOINT_MAGIC)?;
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(DecodeError::Version {
                found: version,
                expected: CHECKPOINT_VERSION,
            });
        }
        let filter = match r.u8()? {
            0 => None,
            1 => {
                let learnable = match r.u8()? {
                    0 => false,
                    1 => true,
                    v => return Err(invalid("learnable", format!("flag {v}"))),
                };
                let count = checked_len("filter count", r.u32()? as u64, r.remaining() / 8)?;
                if count == 0 {
                    return Err(invalid("filter count", "a filter needs at least one coefficient".into()));
                }
                Some((r.floats(count, 8)?, learnable))
            }
            v => return Err(invalid("has_filter", format!("flag {v}"))),
        };
        // each layer header is 17 bytes
        let n_layers = checked_len("n_layers", r.u32()? as u64, r.remaining() / 17)?;
        let mut shapes = Vec::with_capacity(n_layers);
        for _ in 0..n_layers {
            let i = checked_len("layer in", r.u64()?, bytes.len())?;
            let o = checked_len("layer out", r.u64()?, bytes.len())?;
            let act = match r.u8()? {
                0 => Activation::Identity,
                1 => Activation::Relu,
                v => return Err(invalid("activation", format!("tag {v}"))),
            };
            shapes.push((i, o, act));
        }
        for w in shapes.windows(2) {
            if w[0].1 != w[1].0 {
                return Err(invalid("layer shapes", format!("{} does not chain into {}", w[0].1, w[1].0)));
            }
        }
        let mut layers = Vec::with_capacity(n_layers);
        for (i, o, activation) in shapes {
            let n = i
                .checked_mul(o)
                .ok_or_else(|| invalid("layer shape", "overflow".into()))?;
            let weight = Matrix::from_vec(i, o, r.floats(n, 8)?).expect("length checked");
            let bias = r.floats(o, 8)?;
            layers.push(Layer {
                weight,
                bias,
                activation,
            });
        }
        r.finish()?;
        Ok(Self {
            filter,
            mlp: MlpParams { layers },
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::decode(&bytes)?)
    }
}

fn invalid(field: &'static str, reason: String) -> DecodeError {
    DecodeError::Invalid { field, reason }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn encode_decode_with_filter() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ck = Checkpoint {
            filter: Some((vec![0.25, -1.5, 3.0], true)),
            mlp: MlpParams::init(&[4, 3, 2], Activation::Relu, &mut rng),
        };
        let bytes = ck.encode();
        assert_eq!(Checkpoint::decode(&bytes).unwrap(), ck);
        assert!(Checkpoint::decode(&bytes[..bytes.len() - 3]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert_eq!(Checkpoint::decode(&extra), Err(DecodeError::Trailing(1)));
    }

    #[test]
    fn identity_mlp_without_filter() {
        let ck = Checkpoint {
            filter: None,
            mlp: MlpParams::identity(),
        };
        assert_eq!(Checkpoint::decode(&ck.encode()).unwrap(), ck);
    }

    #[test]
    fn broken_chain_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut mlp = MlpParams::init(&[2, 3, 2], Activation::Relu, &mut rng);
        mlp.layers[1] = Layer::xavier(4, 2, Activation::Identity, &mut rng);
        let bytes = Checkpoint { filter: None, mlp }.encode();
        assert!(matches!(Checkpoint::decode(&bytes), Err(DecodeError::Invalid { .. })));
    }
}
