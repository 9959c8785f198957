//! Binary window cache.
//!
//! Layout (little-endian): magic `EEGWSET\0`, version u32, N u64, window
//! length u32, channel count u32, lobe u8, split mode u8, N·T·C f32 window
//! values, N label bytes, N partition bytes, then C f64 means and C f64
//! standard deviations.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array3;

use super::windowset::{NormStats, Partition, SplitMode, WindowSet};
use super::LobeName;
use crate::error::{Error, Result};

pub const CACHE_MAGIC: &[u8; 8] = b"EEGWSET\0";
pub const CACHE_VERSION: u32 = 1;

pub fn write_windowset(ws: &WindowSet, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    encode(ws, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn encode<W: Write>(ws: &WindowSet, w: &mut W) -> std::io::Result<()> {
    let (n, t, c) = ws.windows.dim();
    w.write_all(CACHE_MAGIC)?;
    w.write_u32::<LittleEndian>(CACHE_VERSION)?;
    w.write_u64::<LittleEndian>(n as u64)?;
    w.write_u32::<LittleEndian>(t as u32)?;
    w.write_u32::<LittleEndian>(c as u32)?;
    w.write_u8(LobeName::ALL.iter().position(|l| *l == ws.lobe).unwrap_or(0) as u8)?;
    w.write_u8(match ws.split_mode {
        SplitMode::Window => 0,
        SplitMode::Recording => 1,
    })?;
    for v in ws.windows.iter() {
        w.write_f32::<LittleEndian>(*v)?;
    }
    w.write_all(&ws.labels)?;
    let parts: Vec<u8> = ws.partition.iter().map(|p| *p as u8).collect();
    w.write_all(&parts)?;
    for v in ws.norm_stats.mean.iter().chain(&ws.norm_stats.std) {
        w.write_f64::<LittleEndian>(*v)?;
    }
    Ok(())
}

pub fn read_windowset(path: &Path) -> Result<WindowSet> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    decode(&mut r).map_err(|e| match e {
        DecodeError::Io(e) => Error::io(path, e),
        DecodeError::Bad(msg) => Error::Cache(format!("{}: {msg}", path.display())),
    })
}

enum DecodeError {
    Io(std::io::Error),
    Bad(String),
}

impl From<std::io::Error> for DecodeError {
    fn from(e: std::io::Error) -> Self {
        DecodeError::Io(e)
    }
}

fn decode<R: Read>(r: &mut R) -> std::result::Result<WindowSet, DecodeError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CACHE_MAGIC {
        return Err(DecodeError::Bad("bad magic".into()));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != CACHE_VERSION {
        return Err(DecodeError::Bad(format!("unsupported version {version}")));
    }
    let n = r.read_u64::<LittleEndian>()? as usize;
    let t = r.read_u32::<LittleEndian>()? as usize;
    let c = r.read_u32::<LittleEndian>()? as usize;
    let lobe = *LobeName::ALL
        .get(r.read_u8()? as usize)
        .ok_or_else(|| DecodeError::Bad("bad lobe tag".into()))?;
    if lobe.n_channels() != c {
        return Err(DecodeError::Bad(format!(
            "lobe {lobe} has {} channels, header says {c}",
            lobe.n_channels()
        )));
    }
    let split_mode = match r.read_u8()? {
        0 => SplitMode::Window,
        1 => SplitMode::Recording,
        other => return Err(DecodeError::Bad(format!("bad split tag {other}"))),
    };
    let mut data = vec![0f32; n * t * c];
    r.read_f32_into::<LittleEndian>(&mut data)?;
    let mut labels = vec![0u8; n];
    r.read_exact(&mut labels)?;
    let mut parts = vec![0u8; n];
    r.read_exact(&mut parts)?;
    let partition = parts
        .iter()
        .map(|&p| Partition::from_u8(p).ok_or_else(|| DecodeError::Bad(format!("bad partition tag {p}"))))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut stats = vec![0f64; 2 * c];
    r.read_f64_into::<LittleEndian>(&mut stats)?;
    let windows = Array3::from_shape_vec((n, t, c), data).map_err(|e| DecodeError::Bad(e.to_string()))?;
    Ok(WindowSet {
        lobe,
        split_mode,
        windows,
        labels,
        partition,
        norm_stats: NormStats {
            mean: stats[..c].to_vec(),
            std: stats[c..].to_vec(),
        },
        warnings: Vec::new(),
    })
}
