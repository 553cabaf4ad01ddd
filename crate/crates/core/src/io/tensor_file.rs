//! Binary dense-tensor container.
//!
//! Layout, all integers little-endian:
//!
//! | bytes        | field                                   |
//! |--------------|-----------------------------------------|
//! | 4            | magic `EGOC`                            |
//! | 2            | version (`u16`, currently 1)            |
//! | 1            | dtype tag (`1` = f32)                   |
//! | 1            | rank                                    |
//! | 8 x rank     | dims (`u64` each)                       |
//! | 4 x prod(dims) | payload, row-major f32                |
//! | 4            | CRC-32 (IEEE) of every preceding byte   |

use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{FeatureMap, Volume};

pub const MAGIC: &[u8; 4] = b"EGOC";
pub const VERSION: u16 = 1;
pub const DTYPE_F32: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

fn fmt_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let expected: usize = dims.iter().product();
        if expected != data.len() {
            return Err(Error::Shape(format!("dims {dims:?} need {expected} values, got {}", data.len())));
        }
        if dims.len() > usize::from(u8::MAX) {
            return Err(Error::Shape("tensor rank exceeds 255".into()));
        }
        Ok(Self { dims, data })
    }

    pub fn from_f64(dims: Vec<usize>, data: &[f64]) -> Result<Self> {
        Self::new(dims, data.iter().map(|&v| v as f32).collect())
    }

    pub fn from_volume(v: &Volume) -> Result<Self> {
        Self::from_f64(v.dims().to_vec(), &v.flatten())
    }

    pub fn from_feature_map(f: &FeatureMap) -> Result<Self> {
        Self::from_f64(vec![f.channels, f.gh, f.gw], &f.data)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| f64::from(v)).collect()
    }

    pub fn to_feature_map(&self) -> Result<FeatureMap> {
        match self.dims[..] {
            [c, gh, gw] => FeatureMap::from_vec(c, gh, gw, self.to_f64()),
            [1, c, gh, gw] => FeatureMap::from_vec(c, gh, gw, self.to_f64()),
            _ => Err(Error::Shape(format!("expected a C x H x W tensor, got dims {:?}", self.dims))),
        }
    }

    pub fn to_volume(&self) -> Result<Volume> {
        match self.dims[..] {
            [t, c, gh, gw] => Volume::from_flat([t, c, gh, gw], &self.to_f64()),
            _ => Err(Error::Shape(format!("expected a T x C x H x W tensor, got dims {:?}", self.dims))),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 8 * self.dims.len() + 4 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(DTYPE_F32);
        out.push(self.dims.len() as u8);
        for &d in &self.dims {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 {
            return Err(fmt_err("tensor file is truncated"));
        }
        let (body, crc_bytes) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(crc_bytes.try_into().expect("4 bytes"));
        if crc32fast::hash(body) != stored {
            return Err(fmt_err("tensor file checksum mismatch"));
        }
        if &body[..4] != MAGIC {
            return Err(fmt_err("not a tensor file (bad magic)"));
        }
        let version = u16::from_le_bytes([body[4], body[5]]);
        if version != VERSION {
            return Err(fmt_err(format!("unsupported tensor file version {version}")));
        }
        if body[6] != DTYPE_F32 {
            return Err(fmt_err(format!("unsupported dtype tag {}", body[6])));
        }
        let rank = usize::from(body[7]);
        let header = 8 + 8 * rank;
        if body.len() < header {
            return Err(fmt_err("tensor header is truncated"));
        }
        let dims: Vec<usize> = body[8..header]
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes")) as usize)
            .collect();
        let count = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| fmt_err("tensor dims overflow"))?;
        let payload = &body[header..];
        if Some(payload.len()) != count.checked_mul(4) {
            return Err(fmt_err(format!("payload has {} bytes, dims {dims:?} need {}", payload.len(), count * 4)));
        }
        let data = payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
        Ok(Self { dims, data })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::decode(&std::fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let t = Tensor::new(vec![2, 3], vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let b = t.encode();
        assert_eq!(&b[..4], b"EGOC");
        assert_eq!(u16::from_le_bytes([b[4], b[5]]), 1);
        assert_eq!(b[6], DTYPE_F32);
        assert_eq!(b[7], 2);
        assert_eq!(b.len(), 8 + 16 + 24 + 4);
        assert_eq!(Tensor::decode(&b).unwrap(), t);
    }

    #[test]
    fn detects_corruption() {
        let t = Tensor::new(vec![4], vec![1.5, -2.0, 3.25, 0.0]).unwrap();
        let mut b = t.encode();
        b[13] ^= 0x10;
        assert!(Tensor::decode(&b).is_err());
    }

    #[test]
    fn rejects_shape_mismatch() {
        assert!(Tensor::new(vec![2, 2], vec![0.0; 3]).is_err());
    }

    #[test]
    fn scalar_rank_zero() {
        let t = Tensor::new(vec![], vec![7.0]).unwrap();
        assert_eq!(Tensor::decode(&t.encode()).unwrap(), t);
    }
}
