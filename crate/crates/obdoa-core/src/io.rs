//! Snapshot file formats.
//!
//! The binary container is deliberately minimal:
//!
//! ```text
//! offset  size  field
//! 0       8     magic "OBSNAP01"
//! 8       1     quantized flag (0 or 1)
//! 9       4     sensor count, little-endian u32
//! 13      8     snapshot count, little-endian u64
//! 21      -     x-axis data, then y-axis data
//! ```
//!
//! Each axis block is sensor-major: all snapshots of sensor 0, then sensor 1,
//! and so on. Every complex value is a little-endian f64 real part followed
//! by a little-endian f64 imaginary part. No padding, no trailing bytes.
//!
//! The CSV dump is for eyeballing only (one row per axis/sensor, cells like
//! `0.5-0.25i`); the binary container is the interchange format.

use ndarray::Array2;
use num_complex::Complex;
use std::fmt::Write as _;
use std::io::Read;
use std::io::Write;

use crate::error::{Error, Result};
use crate::signal::{DipoleAxis, SnapshotMatrix};

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"OBSNAP01";

fn fill(r: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::SnapshotFormat(format!("truncated {what}"))
        } else {
            Error::Io(e)
        }
    })
}

/// Write both axes of a snapshot matrix to the binary container.
pub fn write_snapshots<W: Write>(mut w: W, snaps: &SnapshotMatrix<f64>) -> Result<()> {
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&[snaps.quantized() as u8])?;
    let sensors = u32::try_from(snaps.sensors())
        .map_err(|_| Error::SnapshotFormat("sensor count exceeds u32".into()))?;
    w.write_all(&sensors.to_le_bytes())?;
    w.write_all(&(snaps.snapshots() as u64).to_le_bytes())?;
    for axis in DipoleAxis::BOTH {
        for value in snaps.axis(axis).iter() {
            w.write_all(&value.re.to_le_bytes())?;
            w.write_all(&value.im.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Read a snapshot matrix from the binary container, validating the header
/// and insisting the payload size matches exactly.
pub fn read_snapshots<R: Read>(mut r: R) -> Result<SnapshotMatrix<f64>> {
    let mut magic = [0u8; 8];
    fill(&mut r, &mut magic, "header")?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::SnapshotFormat(
            "bad magic; not a snapshot container".into(),
        ));
    }
    let mut flag = [0u8; 1];
    fill(&mut r, &mut flag, "header")?;
    let quantized = match flag[0] {
        0 => false,
        1 => true,
        other => {
            return Err(Error::SnapshotFormat(format!(
                "quantized flag must be 0 or 1, got {other}"
            )))
        }
    };
    let mut b4 = [0u8; 4];
    fill(&mut r, &mut b4, "header")?;
    let sensors = u32::from_le_bytes(b4) as usize;
    let mut b8 = [0u8; 8];
    fill(&mut r, &mut b8, "header")?;
    let snapshots = u64::from_le_bytes(b8) as usize;
    if sensors == 0 || snapshots == 0 {
        return Err(Error::SnapshotFormat("zero-sized dimensions".into()));
    }
    let count = sensors
        .checked_mul(snapshots)
        .and_then(|c| c.checked_mul(16))
        .ok_or_else(|| Error::SnapshotFormat("dimensions overflow".into()))?;

    let mut axes = Vec::with_capacity(2);
    for axis in ["x-axis data", "y-axis data"] {
        let mut bytes = vec![0u8; count];
        fill(&mut r, &mut bytes, axis)?;
        let data: Vec<Complex<f64>> = bytes
            .chunks_exact(16)
            .map(|chunk| {
                Complex::new(
                    f64::from_le_bytes(chunk[..8].try_into().expect("8 bytes")),
                    f64::from_le_bytes(chunk[8..].try_into().expect("8 bytes")),
                )
            })
            .collect();
        axes.push(Array2::from_shape_vec((sensors, snapshots), data).expect("checked size"));
    }
    let mut probe = [0u8; 1];
    match r.read(&mut probe)? {
        0 => {}
        _ => {
            return Err(Error::SnapshotFormat(
                "trailing bytes after snapshot data".into(),
            ))
        }
    }
    let y = axes.pop().expect("two axes");
    let x = axes.pop().expect("two axes");
    SnapshotMatrix::from_parts(x, y, quantized)
}

/// Human-readable CSV dump: `axis,sensor,z0,z1,...` with complex cells.
pub fn snapshots_to_csv(snaps: &SnapshotMatrix<f64>) -> String {
    let mut out = String::from("axis,sensor");
    for z in 0..snaps.snapshots() {
        write!(out, ",z{z}").expect("string write");
    }
    out.push('\n');
    for axis in DipoleAxis::BOTH {
        let name = match axis {
            DipoleAxis::X => 'x',
            DipoleAxis::Y => 'y',
        };
        let m = snaps.axis(axis);
        for (sensor, row) in m.rows().into_iter().enumerate() {
            write!(out, "{name},{sensor}").expect("string write");
            for c in row {
                let sign = if c.im.is_sign_negative() { '-' } else { '+' };
                write!(out, ",{}{}{}i", c.re, sign, c.im.abs()).expect("string write");
            }
            out.push('\n');
        }
    }
    out
}
