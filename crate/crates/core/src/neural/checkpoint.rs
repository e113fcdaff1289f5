//! Binary checkpoint: `NGCK`, u32 version, u32 tensor count, then per tensor
//! u32 name length, UTF-8 name, u8 dtype (0 = f64), u8 ndim, u32 dims and a
//! little-endian payload; a JSON `TrainConfig` fills the rest of the file.
//! All integers are little-endian.

use std::collections::HashSet;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{build_discriminator, build_generator, Network, NetworkSpec, NeuralError, Tensor, TrainConfig};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"NGCK";
pub const CHECKPOINT_VERSION: u32 = 1;
const DTYPE_F64: u8 = 0;

/// Named tensors of a trained generator/discriminator pair plus the
/// configuration that defines their architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    config: TrainConfig,
    tensors: Vec<(String, Tensor)>,
}

impl Checkpoint {
    pub fn new(config: TrainConfig, tensors: Vec<(String, Tensor)>) -> Result<Self, NeuralError> {
        let mut seen = HashSet::new();
        for (name, _) in &tensors {
            if !seen.insert(name.as_str()) {
                return Err(NeuralError::Malformed(format!("duplicate tensor {name}")));
            }
        }
        Ok(Self { config, tensors })
    }

    pub fn from_networks(config: &TrainConfig, nets: &[&Network]) -> Result<Self, NeuralError> {
        let tensors = nets
            .iter()
            .flat_map(|n| n.named_tensors())
            .map(|(name, t)| (name, Tensor::from_vec(t.shape(), t.data().to_vec()).expect("sized")))
            .collect();
        Self::new(config.clone(), tensors)
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn tensors(&self) -> &[(String, Tensor)] {
        &self.tensors
    }

    pub fn tensor(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn generator(&self) -> Result<Network, NeuralError> {
        self.restore(build_generator(&self.config)?)
    }

    pub fn discriminator(&self) -> Result<Network, NeuralError> {
        self.restore(build_discriminator(&self.config)?)
    }

    fn restore(&self, spec: NetworkSpec) -> Result<Network, NeuralError> {
        // initial values are overwritten below; any seed will do
        let mut net = Network::new(spec, &mut ChaCha8Rng::seed_from_u64(0))?;
        let names: Vec<String> = net.named_tensors().into_iter().map(|(n, _)| n).collect();
        for (name, dst) in names.iter().zip(net.tensors_mut()) {
            let src = self
                .tensor(name)
                .ok_or_else(|| NeuralError::Architecture(format!("missing tensor {name}")))?;
            if src.shape() != dst.shape() {
                return Err(NeuralError::Architecture(format!(
                    "{name}: stored {:?}, expected {:?}",
                    src.shape(),
                    dst.shape()
                )));
            }
            dst.data_mut().copy_from_slice(src.data());
        }
        Ok(net)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for (name, t) in &self.tensors {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.push(DTYPE_F64);
            out.push(4);
            for d in t.shape() {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out.extend_from_slice(
            serde_json::to_string(&self.config)
                .expect("config serializes")
                .as_bytes(),
        );
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, NeuralError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4, "magic")? != CHECKPOINT_MAGIC {
            return Err(NeuralError::BadMagic);
        }
        let version = r.u32("version")?;
        if version != CHECKPOINT_VERSION {
            return Err(NeuralError::BadVersion(version));
        }
        let count = r.u32("tensor count")?;
        let mut tensors = Vec::new();
        for _ in 0..count {
            let len = r.u32("name length")? as usize;
            let name = std::str::from_utf8(r.take(len, "tensor name")?)
                .map_err(|_| NeuralError::Malformed("tensor name is not UTF-8".into()))?
                .to_string();
            let dtype = r.take(1, "dtype")?[0];
            if dtype != DTYPE_F64 {
                return Err(NeuralError::Malformed(format!("{name}: unknown dtype {dtype}")));
            }
            let ndim = r.take(1, "ndim")?[0] as usize;
            if ndim == 0 || ndim > 4 {
                return Err(NeuralError::Malformed(format!("{name}: {ndim} dimensions")));
            }
            let mut shape = [1usize; 4];
            for i in 0..ndim {
                shape[4 - ndim + i] = r.u32("dims")? as usize;
            }
            let n = shape
                .iter()
                .try_fold(1usize, |a, &d| a.checked_mul(d))
                .and_then(|n| n.checked_mul(8))
                .ok_or_else(|| NeuralError::Malformed(format!("{name}: shape overflow")))?;
            let data = r
                .take(n, "tensor payload")?
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            tensors.push((name, Tensor::from_vec(shape, data)?));
        }
        let config: TrainConfig = serde_json::from_slice(&bytes[r.pos..]).map_err(|e| {
            if e.is_eof() {
                NeuralError::Truncated("config")
            } else {
                NeuralError::Malformed(format!("config: {e}"))
            }
        })?;
        Self::new(config, tensors)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], NeuralError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or(NeuralError::Truncated(what))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, NeuralError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<(), NeuralError> {
    std::fs::write(path, ckpt.to_bytes()).map_err(|source| NeuralError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, NeuralError> {
    let bytes = std::fs::read(path).map_err(|source| NeuralError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Checkpoint::from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Checkpoint {
        let cfg = TrainConfig {
            image_size: 32,
            base_channels: 2,
            depth: 3,
            ..TrainConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = Network::new(build_generator(&cfg).unwrap(), &mut rng).unwrap();
        let d = Network::new(build_discriminator(&cfg).unwrap(), &mut rng).unwrap();
        Checkpoint::from_networks(&cfg, &[&g, &d]).unwrap()
    }

    #[test]
    fn roundtrip_is_bitwise() {
        let c = tiny();
        let bytes = c.to_bytes();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_bytes(), bytes);
        let g = back.generator().unwrap();
        for (name, t) in g.named_tensors() {
            assert_eq!(t.data(), c.tensor(&name).unwrap().data());
        }
    }

    #[test]
    fn distinct_errors() {
        let mut bytes = tiny().to_bytes();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(Checkpoint::from_bytes(&bad), Err(NeuralError::BadMagic)));
        bad = bytes.clone();
        bad[4] = 2;
        assert!(matches!(Checkpoint::from_bytes(&bad), Err(NeuralError::BadVersion(2))));
        bytes.truncate(200);
        assert!(matches!(
            Checkpoint::from_bytes(&bytes),
            Err(NeuralError::Truncated("tensor payload"))
        ));
    }

    #[test]
    fn architecture_mismatch() {
        let c = tiny();
        let mut cfg = c.config().clone();
        cfg.base_channels = 4;
        let other = Checkpoint::new(cfg, c.tensors().to_vec()).unwrap();
        assert!(matches!(other.generator(), Err(NeuralError::Architecture(_))));
    }
}
