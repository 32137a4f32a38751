//! Binary dump of graph samples.
//!
//! Layout, all little-endian: magic `RGG1`, model tag `u8`, `n: u64`,
//! `d: u64`, `p: f64`, `seed: u64`, then `n * d` row-major `f64`
//! coordinates, then the upper-triangle adjacency bit-packed LSB first in
//! pair order (0,1), (0,2), ..., (n-2,n-1).

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::params::{Model, Threshold};
use crate::sampler::{Adjacency, GraphSample, PointCloud};

const MAGIC: &[u8; 4] = b"RGG1";

pub fn write_graph<W: Write>(g: &GraphSample, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[g.model().tag()])?;
    w.write_all(&(g.n() as u64).to_le_bytes())?;
    w.write_all(&(g.d() as u64).to_le_bytes())?;
    w.write_all(&g.threshold.p.to_le_bytes())?;
    w.write_all(&g.cloud.seed.to_le_bytes())?;
    for x in &g.cloud.points {
        w.write_all(&x.to_le_bytes())?;
    }
    let flags = g.adjacency.upper();
    let mut packed = vec![0u8; flags.len().div_ceil(8)];
    for (k, _) in flags.iter().enumerate().filter(|(_, &b)| b) {
        packed[k / 8] |= 1 << (k % 8);
    }
    w.write_all(&packed)?;
    Ok(())
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated graph dump: {e}")))?;
    Ok(buf)
}

/// Reads a dump back; the threshold is re-solved from `(p, d)`.
pub fn read_graph<R: Read>(mut r: R) -> Result<GraphSample> {
    if &read_array::<4, _>(&mut r)? != MAGIC {
        return Err(Error::Format("not a graph dump (bad magic)".into()));
    }
    let model = Model::from_tag(read_array::<1, _>(&mut r)?[0])?;
    let n = u64::from_le_bytes(read_array(&mut r)?) as usize;
    let d = u64::from_le_bytes(read_array(&mut r)?) as usize;
    let p = f64::from_le_bytes(read_array(&mut r)?);
    let seed = u64::from_le_bytes(read_array(&mut r)?);
    let d32 = u32::try_from(d).map_err(|_| Error::Format(format!("dimension {d} out of range")))?;
    let threshold = Threshold::solve(p, d32)?;
    let mut points = Vec::with_capacity(n * d);
    for _ in 0..n * d {
        points.push(f64::from_le_bytes(read_array(&mut r)?));
    }
    let pairs = n * n.saturating_sub(1) / 2;
    let mut packed = vec![0u8; pairs.div_ceil(8)];
    r.read_exact(&mut packed)
        .map_err(|e| Error::Format(format!("truncated adjacency: {e}")))?;
    let bits = (0..pairs).map(|k| packed[k / 8] >> (k % 8) & 1 == 1).collect();
    Ok(GraphSample {
        cloud: PointCloud {
            model,
            n,
            d,
            points,
            seed,
        },
        threshold,
        adjacency: Adjacency::from_upper(n, bits)?,
    })
}
