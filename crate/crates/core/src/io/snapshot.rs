//! Binary snapshot files.
//!
//! Layout, all little-endian: magic `NLS1`, `u32` version, `f64`
//! circumference, `u64` points, `u64` snapshot count, `f64` t0, `f64`
//! spacing, the samples as `(re, im)` pairs snapshot by snapshot, and a
//! trailing `u64` FNV-1a checksum of every preceding byte.

use std::hash::Hasher;
use std::path::Path;

use fnv::FnvHasher;
use num_complex::Complex64;

use crate::dynamics::{SolverConfig, Trajectory};
use crate::error::{LabError, Result};
use crate::spectral::{ComplexField, Grid};

pub const MAGIC: [u8; 4] = *b"NLS1";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 8 + 8 + 8 + 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotHeader {
    pub circumference: f64,
    pub points: u64,
    pub count: u64,
    pub t0: f64,
    pub spacing: f64,
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}

pub fn encode_snapshot(traj: &Trajectory) -> Vec<u8> {
    let m = traj.grid.points();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * m * traj.len() + 8);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&traj.grid.circumference().to_le_bytes());
    out.extend_from_slice(&(m as u64).to_le_bytes());
    out.extend_from_slice(&(traj.len() as u64).to_le_bytes());
    out.extend_from_slice(&traj.t0.to_le_bytes());
    out.extend_from_slice(&traj.spacing.to_le_bytes());
    for f in &traj.fields {
        for v in f.to_physical().values() {
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    let sum = fnv1a(&out);
    out.extend_from_slice(&sum.to_le_bytes());
    out
}

fn f64_at(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().expect("8 bytes"))
}

fn u64_at(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().expect("8 bytes"))
}

/// Checks magic, version, length and checksum, and returns the header.
pub fn decode_header(bytes: &[u8]) -> Result<SnapshotHeader> {
    if bytes.len() < HEADER_LEN + 8 {
        return Err(LabError::Format(format!("snapshot too short ({} bytes)", bytes.len())));
    }
    if bytes[..4] != MAGIC {
        return Err(LabError::Format(format!("bad snapshot magic {:02X?}", &bytes[..4])));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(LabError::Format(format!("unsupported snapshot version {version}")));
    }
    let header = SnapshotHeader {
        circumference: f64_at(bytes, 8),
        points: u64_at(bytes, 16),
        count: u64_at(bytes, 24),
        t0: f64_at(bytes, 32),
        spacing: f64_at(bytes, 40),
    };
    let samples = header
        .points
        .checked_mul(header.count)
        .and_then(|n| n.checked_mul(16))
        .ok_or_else(|| LabError::Format("snapshot dimensions overflow".into()))?;
    let expected = (HEADER_LEN as u64).checked_add(samples).and_then(|n| n.checked_add(8));
    if expected != Some(bytes.len() as u64) {
        return Err(LabError::Format(format!(
            "snapshot length {} does not match header ({} x {} samples)",
            bytes.len(),
            header.count,
            header.points
        )));
    }
    let body = bytes.len() - 8;
    let stored = u64_at(bytes, body);
    let actual = fnv1a(&bytes[..body]);
    if stored != actual {
        return Err(LabError::Format(format!(
            "snapshot checksum mismatch (stored {stored:016x}, computed {actual:016x})"
        )));
    }
    Ok(header)
}

/// Decodes a snapshot file; the solver configuration is not stored in the
/// file and must be supplied by the caller.
pub fn decode_snapshot(bytes: &[u8], config: &SolverConfig) -> Result<Trajectory> {
    let h = decode_header(bytes)?;
    let m = h.points as usize;
    let grid = Grid::new(h.circumference, m)?;
    let mut fields = Vec::with_capacity(h.count as usize);
    for s in 0..h.count as usize {
        let base = HEADER_LEN + 16 * m * s;
        let values: Vec<Complex64> = (0..m)
            .map(|i| Complex64::new(f64_at(bytes, base + 16 * i), f64_at(bytes, base + 16 * i + 8)))
            .collect();
        fields.push(ComplexField::from_physical(grid.clone(), values)?);
    }
    Trajectory::new(config.clone(), grid, h.t0, h.spacing, fields)
}

pub fn write_snapshot(path: &Path, traj: &Trajectory) -> Result<()> {
    std::fs::write(path, encode_snapshot(traj)).map_err(|e| LabError::io(path, e))
}

pub fn read_snapshot(path: &Path, config: &SolverConfig) -> Result<Trajectory> {
    let bytes = std::fs::read(path).map_err(|e| LabError::io(path, e))?;
    decode_snapshot(&bytes, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{solve, Sign, Truncation};
    use proptest::prelude::*;

    fn traj() -> Trajectory {
        let g = Grid::new(16.0, 32).unwrap();
        let cfg = SolverConfig::new(Sign::Focusing, Truncation::None, 0.01, 0.05).unwrap();
        let u0 = ComplexField::from_fn(&g, |x| Complex64::new((-x * x).exp(), 0.1 * x)).unwrap();
        solve(&u0, &cfg.with_mass_bound(10.0)).unwrap()
    }

    #[test]
    fn header_layout_is_fixed() {
        let t = traj();
        let b = encode_snapshot(&t);
        assert_eq!(&b[..4], &[0x4E, 0x4C, 0x53, 0x31]);
        assert_eq!(&b[4..8], &1u32.to_le_bytes());
        assert_eq!(&b[8..16], &16.0f64.to_le_bytes());
        assert_eq!(&b[16..24], &32u64.to_le_bytes());
        assert_eq!(&b[24..32], &6u64.to_le_bytes());
        assert_eq!(b.len(), 48 + 6 * 32 * 16 + 8);
        let v = t.fields[1].values()[3];
        let at = 48 + 32 * 16 + 3 * 16;
        assert_eq!(&b[at..at + 8], &v.re.to_le_bytes());
        assert_eq!(&b[at + 8..at + 16], &v.im.to_le_bytes());
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let t = traj();
        let b = encode_snapshot(&t);
        let back = decode_snapshot(&b, &t.config).unwrap();
        assert_eq!(back.fields, t.fields);
        assert_eq!(encode_snapshot(&back), b);
    }

    #[test]
    fn corruption_is_detected() {
        let b = encode_snapshot(&traj());
        let mut flipped = b.clone();
        flipped[100] ^= 1;
        assert!(matches!(decode_header(&flipped), Err(LabError::Format(m)) if m.contains("checksum")));
        assert!(decode_header(&b[..b.len() - 1]).is_err());
        let mut magic = b.clone();
        magic[0] = b'X';
        assert!(decode_header(&magic).is_err());
    }

    proptest! {
        #[test]
        fn arbitrary_samples_round_trip(re in proptest::collection::vec(-1e6f64..1e6, 16), t0 in -10.0f64..10.0) {
            let g = Grid::new(4.0, 8).unwrap();
            let a = ComplexField::from_physical(g.clone(), re.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect()).unwrap();
            let cfg = SolverConfig::new(Sign::Defocusing, Truncation::None, 0.5, 1.0).unwrap();
            let t = Trajectory::new(cfg.clone(), g, t0, 0.5, vec![a.clone(), a]).unwrap();
            let b = encode_snapshot(&t);
            let back = decode_snapshot(&b, &cfg).unwrap();
            prop_assert_eq!(encode_snapshot(&back), b);
        }
    }
}
