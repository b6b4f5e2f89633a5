//! Binary model checkpoints.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! header   := "LIFTNET\0" version:u32 seed:u64 config_hash:u64 network
//! network  := layer_count:u32 layer*
//! layer    := 0:u8 affine | fixed
//! affine   := kind:u8 (0 direct, 1 exp-generator) trainable:u8
//!             rows:u32 cols:u32 weight:f64[rows*cols] bias:f64[rows]
//!             has_activation:u8 activation_tag:u8 activation_params:f64[2]
//! fixed    := 1:u8 d:u32 base:f64[d*d]       SPD log at base
//!           | 2:u8 d:u32 base:f64[d*d]       SPD exp at base
//!           | 3:u8 n:u32 c:f64               Poincaré log0
//!           | 4:u8 n:u32 c:f64               Poincaré exp0
//!           | 5:u8 n:u32                     logistic
//!           | 6:u8 fixed                     skip connection around `fixed`
//!           | 7:u8 network                   frozen sub-network
//! ```
//!
//! Activation tags: 0 identity, 1 relu, 2 gprelu(α, β), 3 sigmoid, 4 tanh.
//! Matrices are row-major. Custom function maps cannot be stored.

use super::{Affine, FixedMap, Layer, Network, Weight};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, SymMatrix};
use crate::manifold::SpdPoint;
use crate::maps::Activation;
use std::fs;
use std::path::Path;

const MAGIC: &[u8; 8] = b"LIFTNET\0";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub seed: u64,
    pub config_hash: u64,
    pub network: Network,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Vec::new();
        w.extend_from_slice(MAGIC);
        w.extend_from_slice(&VERSION.to_le_bytes());
        w.extend_from_slice(&self.seed.to_le_bytes());
        w.extend_from_slice(&self.config_hash.to_le_bytes());
        write_network(&mut w, &self.network)?;
        Ok(w)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let seed = r.u64()?;
        let config_hash = r.u64()?;
        let network = read_network(&mut r)?;
        if r.pos != bytes.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes",
                bytes.len() - r.pos
            )));
        }
        Ok(Checkpoint {
            seed,
            config_hash,
            network,
        })
    }

    /// Writes to a sibling temporary file, then renames over `path`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, bytes)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        Checkpoint::from_bytes(&fs::read(path)?)
    }
}

fn put_u32(w: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Format(format!("{v} does not fit in u32")))?;
    w.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

fn put_f64s(w: &mut Vec<u8>, vs: &[f64]) {
    for v in vs {
        w.extend_from_slice(&v.to_le_bytes());
    }
}

fn write_network(w: &mut Vec<u8>, net: &Network) -> Result<()> {
    put_u32(w, net.layers().len())?;
    for layer in net.layers() {
        match layer {
            Layer::Affine(a) => {
                w.push(0);
                let (kind, m) = match &a.weight {
                    Weight::Direct(m) => (0u8, m),
                    Weight::ExpGenerator(m) => (1u8, m),
                };
                w.push(kind);
                w.push(a.trainable as u8);
                put_u32(w, m.rows())?;
                put_u32(w, m.cols())?;
                put_f64s(w, m.as_slice());
                put_f64s(w, &a.bias);
                let (has, (tag, p)) = match a.activation {
                    Some(act) => (1u8, act.tag()),
                    None => (0u8, (0u8, [0.0; 2])),
                };
                w.push(has);
                w.push(tag);
                put_f64s(w, &p);
            }
            Layer::Fixed(f) => write_fixed(w, f)?,
        }
    }
    Ok(())
}

fn write_fixed(w: &mut Vec<u8>, f: &FixedMap) -> Result<()> {
    match f {
        FixedMap::SpdLog { base } | FixedMap::SpdExp { base } => {
            w.push(if matches!(f, FixedMap::SpdLog { .. }) { 1 } else { 2 });
            put_u32(w, base.dim())?;
            put_f64s(w, base.matrix().as_matrix().as_slice());
        }
        FixedMap::PoincareLog0 { dim, c } | FixedMap::PoincareExp0 { dim, c } => {
            w.push(if matches!(f, FixedMap::PoincareLog0 { .. }) { 3 } else { 4 });
            put_u32(w, *dim)?;
            put_f64s(w, &[*c]);
        }
        FixedMap::Logistic { dim } => {
            w.push(5);
            put_u32(w, *dim)?;
        }
        FixedMap::Skip(inner) => {
            w.push(6);
            write_fixed(w, inner)?;
        }
        FixedMap::Frozen(net) => {
            w.push(7);
            write_network(w, net)?;
        }
        FixedMap::Custom { name, .. } => {
            return Err(Error::Format(format!("custom map {name} cannot be serialized")))
        }
    }
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Format("truncated checkpoint".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn len(&mut self) -> Result<usize> {
        Ok(self.u32()? as usize)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::Format("size overflow".into()))?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}

fn read_network(r: &mut Reader<'_>) -> Result<Network> {
    let n = r.len()?;
    let mut layers = Vec::with_capacity(n.min(1024));
    for _ in 0..n {
        let tag = r.u8()?;
        layers.push(if tag == 0 {
            Layer::Affine(read_affine(r)?)
        } else {
            Layer::Fixed(read_fixed(r, tag)?)
        });
    }
    Network::new(layers)
}

fn read_affine(r: &mut Reader<'_>) -> Result<Affine> {
    let kind = r.u8()?;
    let trainable = r.u8()? != 0;
    let rows = r.len()?;
    let cols = r.len()?;
    let m = Matrix::from_vec(rows, cols, r.f64s(rows * cols)?)?;
    let bias = r.f64s(rows)?;
    let has = r.u8()?;
    let tag = r.u8()?;
    let p = r.f64s(2)?;
    let activation = if has != 0 {
        Some(Activation::from_tag(tag, [p[0], p[1]])?)
    } else {
        None
    };
    let weight = match kind {
        0 => Weight::Direct(m),
        1 => Weight::ExpGenerator(m),
        k => return Err(Error::Format(format!("unknown weight kind {k}"))),
    };
    Affine::new(weight, bias, activation, trainable)
}

fn read_fixed(r: &mut Reader<'_>, tag: u8) -> Result<FixedMap> {
    Ok(match tag {
        1 | 2 => {
            let d = r.len()?;
            let m = Matrix::from_vec(d, d, r.f64s(d * d)?)?;
            let base = SpdPoint::new(SymMatrix::new(m)?)?;
            if tag == 1 {
                FixedMap::SpdLog { base }
            } else {
                FixedMap::SpdExp { base }
            }
        }
        3 | 4 => {
            let dim = r.len()?;
            let c = r.f64s(1)?[0];
            if tag == 3 {
                FixedMap::PoincareLog0 { dim, c }
            } else {
                FixedMap::PoincareExp0 { dim, c }
            }
        }
        5 => FixedMap::Logistic { dim: r.len()? },
        6 => {
            let inner = r.u8()?;
            FixedMap::Skip(Box::new(read_fixed(r, inner)?))
        }
        7 => FixedMap::Frozen(Box::new(read_network(r)?)),
        t => return Err(Error::Format(format!("unknown layer tag {t}"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::gprelu;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_network() -> Network {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let frozen = Network::mlp(&[3, 3], Activation::Tanh, &mut rng).unwrap().frozen();
        let mut layers = vec![
            Layer::Fixed(FixedMap::SpdLog {
                base: SpdPoint::from_rows(&[&[2.0, 0.1], &[0.1, 1.0]]).unwrap(),
            }),
            Layer::Fixed(FixedMap::Skip(Box::new(FixedMap::Frozen(Box::new(frozen))))),
            Layer::Affine(Affine::exp_identity(6, Some(gprelu(0.25, 1.5).unwrap()))),
        ];
        layers.extend(Network::mlp(&[6, 4, 3], Activation::Relu, &mut rng).unwrap().into_layers());
        layers.push(Layer::Fixed(FixedMap::SpdExp {
            base: SpdPoint::identity(2),
        }));
        Network::new(layers).unwrap()
    }

    #[test]
    fn round_trip_preserves_outputs_bitwise() {
        let ck = Checkpoint {
            seed: 42,
            config_hash: 0xdead_beef,
            network: sample_network(),
        };
        let bytes = ck.to_bytes().unwrap();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back.seed, 42);
        assert_eq!(back.config_hash, 0xdead_beef);
        assert_eq!(back.network.params(), ck.network.params());
        let x = [1.5, 0.2, 0.9];
        assert_eq!(back.network.forward(&x).unwrap(), ck.network.forward(&x).unwrap());
        assert_eq!(back.to_bytes().unwrap(), bytes);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let ck = Checkpoint {
            seed: 7,
            config_hash: 1,
            network: Network::identity(2),
        };
        ck.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(back.network.params(), ck.network.params());
    }

    #[test]
    fn corrupt_input_is_rejected() {
        let ck = Checkpoint {
            seed: 0,
            config_hash: 0,
            network: Network::identity(2),
        };
        let bytes = ck.to_bytes().unwrap();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(Checkpoint::from_bytes(&bad).is_err());
        let mut extra = bytes;
        extra.push(0);
        assert!(Checkpoint::from_bytes(&extra).is_err());
    }
}
