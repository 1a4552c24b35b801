//! Flat binary checkpoints of reduced solver states.
//!
//! Layout, all little-endian:
//!
//! | field | type |
//! |---|---|
//! | magic `KLIM` | 4 bytes |
//! | version | u32 |
//! | `n_x`, `n_ξ` | u64, u64 |
//! | ε, time | f64, f64 |
//! | `x0`, `dx`, velocity cutoff | f64 × 3 |
//! | step counter | u64 |
//! | initial totals, boundary inflow (mass, momentum ×3, energy) | f64 × 10 |
//! | `m0`, `m2`, `h2`, `h3` | each `n_x · n_ξ` f64, x outer, ξ1 inner |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::kinetic_model::field::{DistributionField, XGrid};
use crate::kinetic_model::macrostate::Conserved;
use crate::kinetic_model::velocity::{VelocityGrid, VelocityMode};
use crate::kinetic_solver::SolverState;

pub const MAGIC: &[u8; 4] = b"KLIM";
pub const VERSION: u32 = 1;

fn conserved_values(c: &Conserved) -> [f64; 5] {
    [c.mass, c.momentum[0], c.momentum[1], c.momentum[2], c.energy]
}

fn conserved_from(v: &[f64]) -> Conserved {
    Conserved { mass: v[0], momentum: [v[1], v[2], v[3]], energy: v[4] }
}

pub fn write(path: &Path, state: &SolverState) -> Result<()> {
    let f = &state.field;
    if f.vgrid.mode != VelocityMode::Reduced {
        return Err(Error::Checkpoint("only reduced velocity grids can be checkpointed".into()));
    }
    let (nx, n) = (f.xgrid.n, f.vgrid.n_nodes());
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(nx as u64).to_le_bytes())?;
    w.write_all(&(n as u64).to_le_bytes())?;
    let mut head = vec![f.eps, state.time, f.xgrid.x0, f.xgrid.dx, f.vgrid.cutoff];
    for v in &head {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&state.steps.to_le_bytes())?;
    head.clear();
    head.extend(conserved_values(&state.initial));
    head.extend(conserved_values(&state.inflow));
    for v in &head {
        w.write_all(&v.to_le_bytes())?;
    }
    for block in 0..4 {
        for j in 0..nx {
            for v in &f.cell(j)[block * n..(block + 1) * n] {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

struct Reader<R: Read>(R);

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.0.read_exact(&mut b).map_err(|e| Error::Checkpoint(format!("truncated checkpoint: {e}")))?;
        Ok(b)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
}

pub fn read(path: &Path) -> Result<SolverState> {
    let mut r = Reader(BufReader::new(File::open(path)?));
    if &r.bytes::<4>()? != MAGIC {
        return Err(Error::Checkpoint(format!("{} is not a checkpoint (bad magic)", path.display())));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported checkpoint version {version}")));
    }
    let nx = r.u64()? as usize;
    let n = r.u64()? as usize;
    let (eps, time, x0, dx, cutoff) = (r.f64()?, r.f64()?, r.f64()?, r.f64()?, r.f64()?);
    let steps = r.u64()?;
    let mut book = [0.0; 10];
    for v in &mut book {
        *v = r.f64()?;
    }
    let vgrid = VelocityGrid::new(VelocityMode::Reduced, n, cutoff)?;
    let mut field = DistributionField::zeros(XGrid::new(x0, dx, nx), vgrid, eps);
    for block in 0..4 {
        for j in 0..nx {
            for v in &mut field.cell_mut(j)[block * n..(block + 1) * n] {
                *v = r.f64()?;
            }
        }
    }
    if r.0.read(&mut [0u8; 1])? != 0 {
        return Err(Error::Checkpoint("trailing bytes after checkpoint data".into()));
    }
    Ok(SolverState::resume(field, time, steps, conserved_from(&book[..5]), conserved_from(&book[5..])))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let vg = VelocityGrid::new(VelocityMode::Reduced, 8, 5.0).unwrap();
        let mut f = DistributionField::zeros(XGrid::new(-1.0, 0.25, 8), vg, 0.05);
        for (i, v) in f.data.iter_mut().enumerate() {
            *v = (i as f64 * 0.37).sin() / 3.0;
        }
        let mut st = SolverState::new(f, 0.0);
        st.time = 1.0 / 3.0;
        st.steps = 77;
        st.inflow = Conserved { mass: 1e-9, momentum: [2e-9, 0.0, -1e-12], energy: 3e-9 };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.klim");
        write(&p, &st).unwrap();
        let back = read(&p).unwrap();
        assert_eq!(back, st);
    }

    #[test]
    fn bad_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.klim");
        std::fs::write(&p, b"NOPE0000").unwrap();
        assert!(matches!(read(&p), Err(Error::Checkpoint(_))));
    }
}
