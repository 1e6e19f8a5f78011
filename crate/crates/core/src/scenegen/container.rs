//! Binary container for scenario data and feature dumps.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic        8 bytes  "CHLBDATA"
//! version      u32      currently 1
//! payload tag  u32      0 = CSI tensors, 1 = feature vectors
//! dims         4 x u32  tensor dims (A, B, U, W); features use (1, 1, 1, D)
//! n            u64      number of samples
//! positions    n x 2 f64
//! timestamps   n f64
//! payload      CSI: n x A*B*U*W x (re, im) f64, in vectorization order
//!              features: n x D f64
//! ```
//!
//! A scenario container is accompanied by a JSON sidecar holding its
//! [`ScenarioSpec`].

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::spec::ScenarioSpec;
use super::ScenarioData;
use crate::error::{Error, Result};
use crate::numkernel::Dims4;
use crate::Tensor;

pub const CONTAINER_MAGIC: &[u8; 8] = b"CHLBDATA";
pub const CONTAINER_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u32)]
pub enum PayloadTag {
    Csi = 0,
    Features = 1,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    Csi(Vec<Tensor>),
    Features(Vec<Vec<f64>>),
}

/// Decoded container contents.
#[derive(Clone, Debug, PartialEq)]
pub struct Container {
    pub dims: Dims4,
    pub positions: Vec<[f64; 2]>,
    pub timestamps: Vec<f64>,
    pub payload: Payload,
}

fn write_header(w: &mut impl Write, tag: PayloadTag, dims: Dims4, n: usize) -> Result<()> {
    w.write_all(CONTAINER_MAGIC)?;
    w.write_all(&CONTAINER_VERSION.to_le_bytes())?;
    w.write_all(&(tag as u32).to_le_bytes())?;
    for d in dims {
        let d = u32::try_from(d).map_err(|_| Error::Data(format!("dimension {d} too large")))?;
        w.write_all(&d.to_le_bytes())?;
    }
    w.write_all(&(n as u64).to_le_bytes())?;
    Ok(())
}

fn write_f64s(w: &mut impl Write, xs: impl IntoIterator<Item = f64>) -> Result<()> {
    for x in xs {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn write_common(w: &mut impl Write, positions: &[[f64; 2]], timestamps: &[f64]) -> Result<()> {
    write_f64s(w, positions.iter().flatten().copied())?;
    write_f64s(w, timestamps.iter().copied())
}

/// Writes `<stem>.bin` and its `<stem>.json` spec sidecar.
pub fn write_scenario(bin_path: &Path, json_path: &Path, data: &ScenarioData) -> Result<()> {
    data.validate()?;
    let mut w = BufWriter::new(File::create(bin_path)?);
    write_header(&mut w, PayloadTag::Csi, data.spec.dims(), data.len())?;
    write_common(&mut w, &data.positions, &data.timestamps)?;
    for t in &data.csi {
        write_f64s(&mut w, t.data().iter().flat_map(|z| [z.re, z.im]))?;
    }
    w.flush()?;
    let mut json = serde_json::to_string_pretty(&data.spec)?;
    json.push('\n');
    std::fs::write(json_path, json)?;
    Ok(())
}

/// Writes a feature dump (payload tag 1).
pub fn write_features(
    path: &Path,
    positions: &[[f64; 2]],
    timestamps: &[f64],
    features: &[Vec<f64>],
) -> Result<()> {
    let d = features.first().map_or(0, Vec::len);
    if positions.len() != features.len() || timestamps.len() != features.len() {
        return Err(Error::Data("feature dump: length mismatch".into()));
    }
    if features.iter().any(|f| f.len() != d) || d == 0 {
        return Err(Error::Data("feature dump: vectors must share a positive length".into()));
    }
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, PayloadTag::Features, [1, 1, 1, d], features.len())?;
    write_common(&mut w, positions, timestamps)?;
    for f in features {
        write_f64s(&mut w, f.iter().copied())?;
    }
    w.flush()?;
    Ok(())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.inner
            .read_exact(&mut b)
            .map_err(|e| Error::Data(format!("truncated container: {e}")))?;
        Ok(b)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
}

pub fn read_container(path: &Path) -> Result<Container> {
    let mut r = Reader { inner: BufReader::new(File::open(path)?) };
    if &r.bytes::<8>()? != CONTAINER_MAGIC {
        return Err(Error::Data(format!("{}: bad magic", path.display())));
    }
    let version = r.u32()?;
    if version != CONTAINER_VERSION {
        return Err(Error::Data(format!("{}: unsupported version {version}", path.display())));
    }
    let tag = r.u32()?;
    let mut dims = [0usize; 4];
    for d in &mut dims {
        *d = r.u32()? as usize;
    }
    let n = usize::try_from(r.u64()?).map_err(|_| Error::Data("sample count overflow".into()))?;
    let mut positions = Vec::with_capacity(n);
    for _ in 0..n {
        positions.push([r.f64()?, r.f64()?]);
    }
    let timestamps = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let len: usize = dims.iter().product();
    let payload = match tag {
        0 => Payload::Csi(
            (0..n)
                .map(|_| {
                    let data = (0..len)
                        .map(|_| Ok(Complex64::new(r.f64()?, r.f64()?)))
                        .collect::<Result<Vec<_>>>()?;
                    Tensor::new(dims, data).map_err(|e| Error::Data(e.to_string()))
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        1 => Payload::Features(
            (0..n).map(|_| (0..len).map(|_| r.f64()).collect()).collect::<Result<Vec<_>>>()?,
        ),
        other => return Err(Error::Data(format!("{}: unknown payload tag {other}", path.display()))),
    };
    Ok(Container { dims, positions, timestamps, payload })
}

/// Reads a scenario container together with its JSON spec sidecar.
pub fn read_scenario(bin_path: &Path, json_path: &Path) -> Result<ScenarioData> {
    let spec: ScenarioSpec = serde_json::from_str(&std::fs::read_to_string(json_path)?)
        .map_err(|e| Error::Data(format!("{}: {e}", json_path.display())))?;
    let c = read_container(bin_path)?;
    let csi = match c.payload {
        Payload::Csi(t) => t,
        Payload::Features(_) => {
            return Err(Error::Data(format!("{}: expected a CSI payload", bin_path.display())))
        }
    };
    if c.dims != spec.dims() {
        return Err(Error::Data(format!(
            "{}: container dims {:?} differ from spec {:?}",
            bin_path.display(),
            c.dims,
            spec.dims()
        )));
    }
    let data = ScenarioData { spec, positions: c.positions, timestamps: c.timestamps, csi };
    data.validate()?;
    Ok(data)
}
