//! Binary grid checkpoints.
//!
//! Layout (all little-endian):
//!
//! | bytes | content |
//! |-------|---------|
//! | 4     | magic `HFRG` |
//! | 4     | version (`u32`, currently 1) |
//! | 12    | resolution `nx, ny, nz` (`u32` each) |
//! | 24    | bounds `min xyz, max xyz` (`f32` each) |
//! | 16 N  | four `f32` planes of N = nx*ny*nz pre-activation values: r, g, b, sigma (x fastest) |
//!
//! Parameters are stored at `f32` precision.

use std::fs;
use std::path::Path;

use super::grid::CHANNELS;
use super::{Aabb, RadianceGrid, TrainableField};
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"HFRG";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 12 + 24;

pub fn encode(grid: &RadianceGrid) -> Vec<u8> {
    let n = grid.voxel_count();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * n);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for r in grid.resolution() {
        out.extend_from_slice(&(r as u32).to_le_bytes());
    }
    let b = grid.bounds_box();
    for v in b.min.iter().chain(&b.max) {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    let params = grid.params();
    for c in 0..CHANNELS {
        for i in 0..n {
            out.extend_from_slice(&(params[i * CHANNELS + c] as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8], origin: &Path) -> Result<RadianceGrid> {
    let bad = |m: &str| Error::format(origin, m);
    if bytes.len() < HEADER_LEN {
        return Err(bad("truncated header"));
    }
    if &bytes[..4] != MAGIC {
        return Err(bad("missing HFRG magic"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let f32_at = |o: usize| f32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as f64;
    let version = u32_at(4);
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let resolution = [u32_at(8) as usize, u32_at(12) as usize, u32_at(16) as usize];
    let min = [f32_at(20), f32_at(24), f32_at(28)];
    let max = [f32_at(32), f32_at(36), f32_at(40)];
    let n = resolution
        .iter()
        .try_fold(1usize, |a, &r| a.checked_mul(r))
        .ok_or_else(|| bad("resolution overflows"))?;
    if bytes.len() != HEADER_LEN + 16 * n {
        return Err(bad(&format!("expected {} bytes, found {}", HEADER_LEN + 16 * n, bytes.len())));
    }
    let mut params = vec![0.0; CHANNELS * n];
    for c in 0..CHANNELS {
        for i in 0..n {
            params[i * CHANNELS + c] = f32_at(HEADER_LEN + 4 * (c * n + i));
        }
    }
    RadianceGrid::from_params(resolution, Aabb::new(min, max), params)
}

pub fn save(path: impl AsRef<Path>, grid: &RadianceGrid) -> Result<()> {
    fs::write(path, encode(grid))?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<RadianceGrid> {
    let path = path.as_ref();
    decode(&fs::read(path)?, path)
}

impl RadianceGrid {
    fn bounds_box(&self) -> Aabb {
        super::RadianceField::bounds(self)
    }

    /// Rounds parameters and bounds to `f32`, i.e. what a checkpoint holds.
    pub fn to_f32_precision(&self) -> Self {
        decode(&encode(self), Path::new("<memory>")).expect("encoded grid decodes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_layout() {
        let mut g = RadianceGrid::new([3, 2, 4], Aabb::new([-1.0, -0.5, 0.0], [1.0, 0.5, 2.0])).unwrap();
        for (i, v) in g.params_mut().iter_mut().enumerate() {
            *v = i as f64 * 0.25 - 3.0;
        }
        let bytes = encode(&g);
        assert_eq!(&bytes[..4], b"HFRG");
        assert_eq!(bytes.len(), HEADER_LEN + 16 * 24);
        // first plane is red: voxel 1's red value sits right after voxel 0's
        let red1 = f32::from_le_bytes(bytes[HEADER_LEN + 4..HEADER_LEN + 8].try_into().unwrap());
        assert_eq!(red1 as f64, g.voxel(1, 0, 0)[0]);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.hfrg");
        save(&path, &g).unwrap();
        assert_eq!(load(&path).unwrap(), g);
    }

    #[test]
    fn rejects_corrupt_files() {
        let g = RadianceGrid::new([2, 2, 2], Aabb::cube(1.0)).unwrap();
        let mut bytes = encode(&g);
        assert!(decode(&bytes[..10], Path::new("x")).is_err());
        bytes[0] = b'X';
        assert!(decode(&bytes, Path::new("x")).is_err());
        let mut bytes = encode(&g);
        bytes[4] = 9;
        assert!(decode(&bytes, Path::new("x")).is_err());
        let mut bytes = encode(&g);
        bytes.pop();
        assert!(decode(&bytes, Path::new("x")).is_err());
    }
}
