//! Binary trajectory dumps, little-endian:
//!
//! ```text
//! u32 d | u32 points[d] | f64 box_length[d] | f64 sample_spacing | u64 count
//! count * len * (f64 re, f64 im)      physical-space samples, row-major
//! ```

use std::io::{self, Read, Write};

use num_complex::Complex64;
use split_nls::grid::Space;
use split_nls::schemes::Trajectory;

pub fn write_trajectory<W: Write>(traj: &Trajectory, mut out: W) -> io::Result<()> {
    let Some(first) = traj.states.first() else {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "empty trajectory"));
    };
    let grid = first.grid();
    out.write_all(&(grid.dim() as u32).to_le_bytes())?;
    for &m in grid.points() {
        out.write_all(&(m as u32).to_le_bytes())?;
    }
    for &l in grid.box_length() {
        out.write_all(&l.to_le_bytes())?;
    }
    out.write_all(&traj.sample_spacing().to_le_bytes())?;
    out.write_all(&(traj.states.len() as u64).to_le_bytes())?;
    for state in &traj.states {
        let state = state.to_space(Space::Physical);
        for v in state.values() {
            out.write_all(&v.re.to_le_bytes())?;
            out.write_all(&v.im.to_le_bytes())?;
        }
    }
    out.flush()
}

/// Header and payload of a trajectory dump.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryDump {
    pub points: Vec<usize>,
    pub box_length: Vec<f64>,
    pub sample_spacing: f64,
    pub samples: Vec<Vec<Complex64>>,
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> io::Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

pub fn read_trajectory<R: Read>(mut input: R) -> io::Result<TrajectoryDump> {
    let bad = |msg: &str| io::Error::new(io::ErrorKind::InvalidData, msg.to_string());
    let d = read_u32(&mut input)? as usize;
    if !(1..=3).contains(&d) {
        return Err(bad("dimension must be 1, 2 or 3"));
    }
    let points = (0..d).map(|_| read_u32(&mut input).map(|m| m as usize)).collect::<io::Result<Vec<_>>>()?;
    let box_length = (0..d).map(|_| read_f64(&mut input)).collect::<io::Result<Vec<_>>>()?;
    let sample_spacing = read_f64(&mut input)?;
    let count = read_u64(&mut input)? as usize;
    let len: usize = points.iter().product();
    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        let state = (0..len)
            .map(|_| Ok(Complex64::new(read_f64(&mut input)?, read_f64(&mut input)?)))
            .collect::<io::Result<Vec<_>>>()?;
        samples.push(state);
    }
    let mut rest = Vec::new();
    input.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(bad("trailing bytes after the last sample"));
    }
    Ok(TrajectoryDump { points, box_length, sample_spacing, samples })
}
