//! Output files: atomic writes, raw I/Q samples and their JSON sidecar.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::Settings;

/// Writes `bytes` to `dir/name` through a temporary file and a rename, so a
/// reader never sees a partial file.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, &target)?;
    Ok(target)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> io::Result<PathBuf> {
    let mut text = serde_json::to_vec_pretty(value).map_err(io::Error::other)?;
    text.push(b'\n');
    write_atomic(dir, name, &text)
}

/// Describes a `.iq` file of little-endian `f64` pairs (I then Q). Antennas
/// are stored one after another, each as a contiguous stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub format: String,
    pub antennas: usize,
    pub samples_per_antenna: usize,
    pub dt: f64,
    pub es: f64,
    pub symbol_time: f64,
    pub blocks: usize,
    /// Transmitted data symbols.
    pub symbols: Vec<i32>,
    pub settings: Settings,
}

pub const IQ_FORMAT: &str = "cf64le-antenna-major";

pub fn encode_iq(streams: &[Vec<Complex64>]) -> Vec<u8> {
    let mut out = Vec::with_capacity(streams.iter().map(|s| s.len() * 16).sum());
    for z in streams.iter().flatten() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

pub fn decode_iq(bytes: &[u8], antennas: usize, per_antenna: usize) -> Result<Vec<Vec<Complex64>>, String> {
    if bytes.len() != antennas * per_antenna * 16 {
        return Err(format!(
            "expected {} bytes for {antennas} x {per_antenna} samples, found {}",
            antennas * per_antenna * 16,
            bytes.len()
        ));
    }
    let f = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8-byte chunk"));
    let samples: Vec<Complex64> = bytes.chunks_exact(16).map(|c| Complex64::new(f(&c[..8]), f(&c[8..]))).collect();
    Ok(samples.chunks(per_antenna.max(1)).map(<[_]>::to_vec).collect())
}

/// Sidecar path next to an `.iq` file.
pub fn sidecar_path(iq: &Path) -> PathBuf {
    iq.with_extension("json")
}

pub fn read_samples(iq: &Path) -> Result<(Sidecar, Vec<Vec<Complex64>>), String> {
    let meta_path = sidecar_path(iq);
    let meta: Sidecar = serde_json::from_slice(
        &fs::read(&meta_path).map_err(|e| format!("cannot read {}: {e}", meta_path.display()))?,
    )
    .map_err(|e| format!("bad sidecar {}: {e}", meta_path.display()))?;
    if meta.format != IQ_FORMAT {
        return Err(format!("unsupported sample format `{}`", meta.format));
    }
    let bytes = fs::read(iq).map_err(|e| format!("cannot read {}: {e}", iq.display()))?;
    let streams = decode_iq(&bytes, meta.antennas, meta.samples_per_antenna)?;
    Ok((meta, streams))
}

/// Cuts a contiguous stream back into blocks of `span + 1` samples that
/// share their boundary samples.
pub fn split_blocks(stream: &[Complex64], span: usize) -> Result<Vec<Vec<Complex64>>, String> {
    if span == 0 || stream.len() < span + 1 || !(stream.len() - 1).is_multiple_of(span) {
        return Err(format!("{} samples do not form whole blocks of {span}", stream.len()));
    }
    Ok((0..(stream.len() - 1) / span)
        .map(|l| stream[l * span..=(l + 1) * span].to_vec())
        .collect())
}
