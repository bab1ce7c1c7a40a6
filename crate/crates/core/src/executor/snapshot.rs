//! Versioned binary snapshots of network state.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! "STNNSNAP"            8 bytes magic
//! version               u32
//! spec digest           32 bytes (SHA-256, see NetworkSpec::digest)
//! layer count           u32
//! per layer: dim u32, then dim x f64 state values
//! step counter          u64
//! ```
//!
//! A snapshot holds state only, so resuming from one never needs a past input.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{NetworkSpec, NetworkState};
use crate::error::{Error, Result};
use crate::tensor::Vector;

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"STNNSNAP";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub version: u32,
    pub digest: [u8; 32],
    pub layers: Vec<Vec<f64>>,
    pub step: u64,
}

/// Captures `state` together with the digest of the spec it belongs to.
pub fn save_snapshot(spec: &NetworkSpec, state: &NetworkState) -> Result<Snapshot> {
    state.check_consistent(spec)?;
    Ok(Snapshot {
        version: SNAPSHOT_VERSION,
        digest: spec.digest(),
        layers: state.layers().iter().map(|l| l.s().as_slice().to_vec()).collect(),
        step: state.step(),
    })
}

/// Restores a state, refusing snapshots taken from a different spec.
pub fn load_snapshot(spec: &NetworkSpec, snapshot: &Snapshot) -> Result<NetworkState> {
    if snapshot.version != SNAPSHOT_VERSION {
        return Err(Error::VersionUnsupported(snapshot.version));
    }
    if snapshot.digest != spec.digest() {
        return Err(Error::DigestMismatch);
    }
    let layers = snapshot
        .layers
        .iter()
        .map(|l| Vector::new(l.clone()).map_err(|_| Error::CorruptSnapshot("non-finite state value".into())))
        .collect::<Result<Vec<_>>>()?;
    NetworkState::from_layers(spec, layers, snapshot.step)
}

impl Snapshot {
    pub fn to_bytes(&self) -> Vec<u8> {
        let values: usize = self.layers.iter().map(Vec::len).sum();
        let mut out = Vec::with_capacity(8 + 4 + 32 + 4 + 4 * self.layers.len() + 8 * values + 8);
        out.extend_from_slice(SNAPSHOT_MAGIC);
        out.extend_from_slice(&self.version.to_le_bytes());
        out.extend_from_slice(&self.digest);
        out.extend_from_slice(&(self.layers.len() as u32).to_le_bytes());
        for layer in &self.layers {
            out.extend_from_slice(&(layer.len() as u32).to_le_bytes());
            for v in layer {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out.extend_from_slice(&self.step.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != SNAPSHOT_MAGIC {
            return Err(Error::CorruptSnapshot("bad magic".into()));
        }
        let version = r.u32()?;
        if version != SNAPSHOT_VERSION {
            return Err(Error::VersionUnsupported(version));
        }
        let digest: [u8; 32] = r.take(32)?.try_into().expect("32-byte slice");
        let count = r.u32()? as usize;
        let mut layers = Vec::with_capacity(count.min(1024));
        for _ in 0..count {
            let dim = r.u32()? as usize;
            let mut layer = Vec::with_capacity(dim.min(r.remaining() / 8));
            for _ in 0..dim {
                let v = f64::from_le_bytes(r.take(8)?.try_into().expect("8-byte slice"));
                if !v.is_finite() {
                    return Err(Error::CorruptSnapshot("non-finite state value".into()));
                }
                layer.push(v);
            }
            layers.push(layer);
        }
        let step = u64::from_le_bytes(r.take(8)?.try_into().expect("8-byte slice"));
        if r.remaining() != 0 {
            return Err(Error::CorruptSnapshot(format!("{} trailing bytes", r.remaining())));
        }
        Ok(Snapshot { version, digest, layers, step })
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        f.sync_all()?;
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let Some(end) = end else {
            return Err(Error::CorruptSnapshot(format!("truncated at byte {}", self.pos)));
        };
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4-byte slice")))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}
