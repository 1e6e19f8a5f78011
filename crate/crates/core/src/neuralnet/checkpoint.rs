//! Model checkpoints.
//!
//! Layout, little-endian:
//!
//! ```text
//! magic     8 bytes "CHLBMLP\0"
//! version   u32     currently 1
//! n_widths  u32
//! widths    n_widths x u32
//! seed      u64
//! layers    for each layer: weights (out x in, row-major) then biases, f64
//! ```
//!
//! Optimizer state is not stored; a loaded model starts a fresh Adam run.

use std::io::{Read, Write};

use super::mlp::{Layer, MlpModel, MlpSpec};
use crate::error::{Error, Result};
use crate::numkernel::RealMatrix;
use crate::scalar::Real;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"CHLBMLP\0";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn write_checkpoint<T: Real, W: Write>(model: &MlpModel<T>, mut w: W) -> Result<()> {
    let widths = &model.spec().widths;
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(widths.len() as u32).to_le_bytes())?;
    for &x in widths {
        w.write_all(&(x as u32).to_le_bytes())?;
    }
    w.write_all(&model.seed().to_le_bytes())?;
    for p in model.params() {
        w.write_all(&p.to_f64_lossy().to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint<T: Real, R: Read>(mut r: R) -> Result<MlpModel<T>> {
    let mut buf8 = [0u8; 8];
    let mut buf4 = [0u8; 4];
    let truncated = |e: std::io::Error| Error::Data(format!("truncated checkpoint: {e}"));
    r.read_exact(&mut buf8).map_err(truncated)?;
    if &buf8 != CHECKPOINT_MAGIC {
        return Err(Error::Data("not a model checkpoint (bad magic)".into()));
    }
    r.read_exact(&mut buf4).map_err(truncated)?;
    let version = u32::from_le_bytes(buf4);
    if version != CHECKPOINT_VERSION {
        return Err(Error::Data(format!("unsupported checkpoint version {version}")));
    }
    r.read_exact(&mut buf4).map_err(truncated)?;
    let n = u32::from_le_bytes(buf4) as usize;
    if !(2..=64).contains(&n) {
        return Err(Error::Data(format!("implausible layer count {n}")));
    }
    let mut widths = Vec::with_capacity(n);
    for _ in 0..n {
        r.read_exact(&mut buf4).map_err(truncated)?;
        widths.push(u32::from_le_bytes(buf4) as usize);
    }
    r.read_exact(&mut buf8).map_err(truncated)?;
    let seed = u64::from_le_bytes(buf8);
    let spec = MlpSpec::new(widths).map_err(|e| Error::Data(e.to_string()))?;
    let mut layers = Vec::with_capacity(n - 1);
    for w in spec.widths.windows(2) {
        let (n_in, n_out) = (w[0], w[1]);
        let mut read = |count: usize| -> Result<Vec<T>> {
            (0..count)
                .map(|_| {
                    r.read_exact(&mut buf8).map_err(truncated)?;
                    Ok(T::lit(f64::from_le_bytes(buf8)))
                })
                .collect()
        };
        let weights = RealMatrix::new(n_out, n_in, read(n_out * n_in)?)?;
        let bias = read(n_out)?;
        layers.push(Layer { weights, bias });
    }
    MlpModel::from_layers(spec, layers, seed)
}
