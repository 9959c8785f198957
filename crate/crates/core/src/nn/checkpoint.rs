//! Versioned binary checkpoints.
//!
//! Layout (little-endian): magic `EEGCKPT\0`, `u32` version, `u8` scalar
//! width, eight `u64` model dims, `u64` Adam step, then the parameter,
//! first-moment and second-moment arrays in [`PARAM_NAMES`] order. Each
//! array is `u8` rank, `u64` per axis, then its elements.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::params::{Moments, Params, PARAM_NAMES};
use super::scalar::{ModelDims, Scalar};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"EEGCKPT\0";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<T> {
    pub dims: ModelDims,
    pub params: Params<T>,
    pub moments: Moments<T>,
}

fn dims_fields(d: &ModelDims) -> [usize; 8] {
    [
        d.n_channels,
        d.window_len,
        d.conv_filters,
        d.kernel,
        d.pool,
        d.lstm_units,
        d.dense_units,
        d.n_classes,
    ]
}

fn write_params<T: Scalar, W: Write>(w: &mut W, p: &Params<T>) -> std::io::Result<()> {
    for (_, t) in p.tensors() {
        w.write_u8(t.ndim() as u8)?;
        for &n in t.shape() {
            w.write_u64::<LittleEndian>(n as u64)?;
        }
        for v in t.iter() {
            if T::WIDTH == 4 {
                w.write_f32::<LittleEndian>(v.to_f32().expect("finite"))?;
            } else {
                w.write_f64::<LittleEndian>(v.to_f64().expect("finite"))?;
            }
        }
    }
    Ok(())
}

pub fn save_checkpoint<T: Scalar>(path: &Path, ckpt: &Checkpoint<T>) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    let body = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(CHECKPOINT_VERSION)?;
        w.write_u8(T::WIDTH)?;
        for v in dims_fields(&ckpt.dims) {
            w.write_u64::<LittleEndian>(v as u64)?;
        }
        w.write_u64::<LittleEndian>(ckpt.moments.step)?;
        write_params(w, &ckpt.params)?;
        write_params(w, &ckpt.moments.m)?;
        write_params(w, &ckpt.moments.v)?;
        w.flush()
    };
    body(&mut w).map_err(io)
}

fn read_params<T: Scalar, R: Read>(r: &mut R, dims: &ModelDims, what: &str) -> Result<Params<T>> {
    let bad = |m: String| Error::Checkpoint(format!("{what}: {m}"));
    let mut p = Params::<T>::zeros(dims);
    for (name, mut t) in p.tensors_mut() {
        let rank = r.read_u8().map_err(|e| bad(e.to_string()))? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.read_u64::<LittleEndian>().map_err(|e| bad(e.to_string()))? as usize);
        }
        if shape != t.shape() {
            return Err(bad(format!("{name} has shape {shape:?}, expected {:?}", t.shape())));
        }
        for v in t.iter_mut() {
            *v = if T::WIDTH == 4 {
                T::from_f32(r.read_f32::<LittleEndian>().map_err(|e| bad(e.to_string()))?)
            } else {
                T::from_f64(r.read_f64::<LittleEndian>().map_err(|e| bad(e.to_string()))?)
            }
            .expect("float conversion");
        }
    }
    debug_assert_eq!(PARAM_NAMES.len(), 8);
    Ok(p)
}

/// Loads a checkpoint and checks it against `expected`, which fixes the
/// channel count and every layer size.
pub fn load_checkpoint<T: Scalar>(path: &Path, expected: &ModelDims) -> Result<Checkpoint<T>> {
    let mut r = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let trunc = |e: std::io::Error| Error::Checkpoint(format!("{}: {e}", path.display()));
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(trunc)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint(format!("{} is not a checkpoint", path.display())));
    }
    let version = r.read_u32::<LittleEndian>().map_err(trunc)?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "version {version}, this build reads {CHECKPOINT_VERSION}"
        )));
    }
    let width = r.read_u8().map_err(trunc)?;
    if width != T::WIDTH {
        return Err(Error::Checkpoint(format!(
            "stored with {width}-byte scalars, requested {}",
            T::WIDTH
        )));
    }
    let mut stored = [0usize; 8];
    for v in stored.iter_mut() {
        *v = r.read_u64::<LittleEndian>().map_err(trunc)? as usize;
    }
    if stored != dims_fields(expected) {
        return Err(Error::Checkpoint(format!(
            "model dims {stored:?} do not match configured {:?}",
            dims_fields(expected)
        )));
    }
    let step = r.read_u64::<LittleEndian>().map_err(trunc)?;
    let params = read_params(&mut r, expected, "params")?;
    let m = read_params(&mut r, expected, "first moments")?;
    let v = read_params(&mut r, expected, "second moments")?;
    Ok(Checkpoint {
        dims: *expected,
        params,
        moments: Moments { m, v, step },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint<f32> {
        let dims = ModelDims {
            conv_filters: 4,
            lstm_units: 3,
            dense_units: 5,
            ..ModelDims::standard(2)
        };
        let params = Params::init(&dims, 3);
        let mut moments = Moments::zeros(&dims);
        moments.m = Params::init(&dims, 4);
        moments.v = Params::init(&dims, 5).clone();
        moments.step = 42;
        Checkpoint { dims, params, moments }
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let c = sample();
        save_checkpoint(&path, &c).unwrap();
        assert_eq!(load_checkpoint::<f32>(&path, &c.dims).unwrap(), c);
    }

    #[test]
    fn rejects_other_channel_count_and_width() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let c = sample();
        save_checkpoint(&path, &c).unwrap();
        let other = ModelDims {
            n_channels: 8,
            ..c.dims
        };
        assert!(matches!(
            load_checkpoint::<f32>(&path, &other),
            Err(Error::Checkpoint(_))
        ));
        assert!(matches!(
            load_checkpoint::<f64>(&path, &c.dims),
            Err(Error::Checkpoint(_))
        ));
    }

    #[test]
    fn rejects_truncated_and_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let c = sample();
        save_checkpoint(&path, &c).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(load_checkpoint::<f32>(&path, &c.dims).is_err());
        std::fs::write(&path, b"not a checkpoint at all").unwrap();
        assert!(load_checkpoint::<f32>(&path, &c.dims).is_err());
    }
}
