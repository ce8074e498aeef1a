//! Binary state snapshots.
//!
//! Layout: 16-byte magic (`VNSSNAP1` padded with zero bytes), then a
//! little-endian header — dim (u64), per-axis position sizes (u64 each),
//! per-axis velocity sizes, per-axis position bounds (lo, hi as f64),
//! per-axis velocity bounds, state time t (f64) — then row-major
//! little-endian f64 payloads for rho, mom (component-major), f, in that
//! order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{FluidState, KineticState, PhaseGrid};

const MAGIC: &[u8; 8] = b"VNSSNAP1";

fn write_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_f64<W: Write>(w: &mut W, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_field<W: Write>(w: &mut W, field: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(field.len() * 8);
    for &v in field {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn write_snapshot(
    path: &Path,
    grid: &PhaseGrid,
    fluid: &FluidState,
    kinetic: &KineticState,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&[0u8; 8])?;
    write_u64(&mut w, grid.dim() as u64)?;
    for _ in 0..grid.dim() {
        write_u64(&mut w, grid.nx() as u64)?;
    }
    for _ in 0..grid.dim() {
        write_u64(&mut w, grid.nxi() as u64)?;
    }
    for _ in 0..grid.dim() {
        write_f64(&mut w, grid.x_lo())?;
        write_f64(&mut w, grid.x_hi())?;
    }
    for _ in 0..grid.dim() {
        write_f64(&mut w, grid.xi_lo())?;
        write_f64(&mut w, grid.xi_hi())?;
    }
    write_f64(&mut w, fluid.t)?;
    write_field(&mut w, &fluid.rho)?;
    for comp in &fluid.mom {
        write_field(&mut w, comp)?;
    }
    write_field(&mut w, &kinetic.f)?;
    w.flush()?;
    Ok(())
}

struct SnapReader<R: Read> {
    inner: R,
}

impl<R: Read> SnapReader<R> {
    fn u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        self.inner.read_exact(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }
    fn f64(&mut self) -> Result<f64> {
        let mut b = [0u8; 8];
        self.inner.read_exact(&mut b)?;
        Ok(f64::from_le_bytes(b))
    }
    fn field(&mut self, len: usize) -> Result<Vec<f64>> {
        let mut buf = vec![0u8; len * 8];
        self.inner.read_exact(&mut buf)?;
        Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

pub fn read_snapshot(path: &Path) -> Result<(PhaseGrid, FluidState, KineticState)> {
    let mut r = SnapReader { inner: BufReader::new(File::open(path)?) };
    let mut magic = [0u8; 16];
    r.inner.read_exact(&mut magic)?;
    if &magic[..8] != MAGIC {
        return Err(Error::SnapshotFormat("bad magic".into()));
    }
    let dim = r.u64()? as usize;
    if dim != 1 && dim != 3 {
        return Err(Error::SnapshotFormat(format!("bad dim {dim}")));
    }
    let mut nxs = Vec::new();
    for _ in 0..dim {
        nxs.push(r.u64()? as usize);
    }
    let mut nxis = Vec::new();
    for _ in 0..dim {
        nxis.push(r.u64()? as usize);
    }
    if nxs.iter().any(|&n| n != nxs[0]) || nxis.iter().any(|&n| n != nxis[0]) {
        return Err(Error::SnapshotFormat("non-uniform per-axis sizes".into()));
    }
    let mut x_bounds = Vec::new();
    for _ in 0..dim {
        x_bounds.push((r.f64()?, r.f64()?));
    }
    let mut xi_bounds = Vec::new();
    for _ in 0..dim {
        xi_bounds.push((r.f64()?, r.f64()?));
    }
    let (x_lo, x_hi) = x_bounds[0];
    let (xi_lo, xi_hi) = xi_bounds[0];
    if x_lo != -x_hi || xi_lo != -xi_hi {
        return Err(Error::SnapshotFormat("domain not centered at the origin".into()));
    }
    let t = r.f64()?;
    let grid = PhaseGrid::new(dim, nxs[0], nxis[0], x_hi, xi_hi)
        .map_err(|e| Error::SnapshotFormat(e.to_string()))?;
    let rho = r.field(grid.x_cells())?;
    let mut mom = Vec::with_capacity(dim);
    for _ in 0..dim {
        mom.push(r.field(grid.x_cells())?);
    }
    let f = r.field(grid.phase_cells())?;
    let fluid = FluidState::new(&grid, rho, mom, t)?;
    let kinetic = KineticState::new(&grid, f, t)?;
    Ok((grid, fluid, kinetic))
}
