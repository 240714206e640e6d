//! Binary checkpoints.
//!
//! Layout (all little-endian):
//!
//! | bytes | content |
//! |---|---|
//! | 5 | magic `GAAM1` |
//! | 1 | version (1) |
//! | 4 + 4 | `dim`, `modes_per_axis` as `u32` |
//! | 7 × 8 | `L, α, β, γ, δ, ν, t` as `f64` |
//! | 8 | coefficient count as `u64` |
//! | 16 × count | `(re, im)` pairs, component-major, modes in enumeration order |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::params::ModelParams;

pub const MAGIC: &[u8; 5] = b"GAAM1";
pub const VERSION: u8 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub time: f64,
    pub field: VectorField,
}

impl Checkpoint {
    /// Pairs a field with its parameters; the grid must match the parameters.
    pub fn new(params: ModelParams, time: f64, field: VectorField) -> Result<Self> {
        let g = field.grid();
        if g.dim() != params.dim || g.modes_per_axis() != params.modes_per_axis || g.box_length() != params.box_length {
            return Err(Error::Format("checkpoint header does not match the field's grid".into()));
        }
        Ok(Self { params, time, field })
    }
}

pub fn encode(ck: &Checkpoint) -> Vec<u8> {
    let p = &ck.params;
    let coeffs = ck.field.coeffs();
    let mut out = Vec::with_capacity(6 + 8 + 56 + 8 + 16 * coeffs.len());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(p.dim as u32).to_le_bytes());
    out.extend_from_slice(&(p.modes_per_axis as u32).to_le_bytes());
    for v in [p.box_length, p.alpha, p.beta, p.gamma, p.delta, p.nu, ck.time] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(coeffs.len() as u64).to_le_bytes());
    for z in coeffs {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            Error::Format(format!("truncated checkpoint: need {n} bytes at offset {}", self.pos))
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint> {
    let mut c = Cursor { buf: bytes, pos: 0 };
    if c.take(5)? != MAGIC {
        return Err(Error::Format("bad magic, not a GAAM1 checkpoint".into()));
    }
    let version = c.take(1)?[0];
    if version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let dim = c.u32()? as usize;
    let modes_per_axis = c.u32()? as usize;
    let box_length = c.f64()?;
    let alpha = c.f64()?;
    let beta = c.f64()?;
    let gamma = c.f64()?;
    let delta = c.f64()?;
    let nu = c.f64()?;
    let time = c.f64()?;
    let count = c.u64()? as usize;
    let params = ModelParams { alpha, beta, gamma, delta, nu, dim, modes_per_axis, box_length };
    params.validate().map_err(|e| Error::Format(format!("invalid header: {e}")))?;
    let grid = params.build_grid()?;
    if count != dim * grid.num_modes() {
        return Err(Error::Format(format!(
            "coefficient count {count} does not match grid ({} expected)",
            dim * grid.num_modes()
        )));
    }
    let mut coeffs = Vec::with_capacity(count);
    for _ in 0..count {
        let re = c.f64()?;
        let im = c.f64()?;
        coeffs.push(Complex64::new(re, im));
    }
    if c.pos != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes after payload", bytes.len() - c.pos)));
    }
    let field = VectorField::from_coeffs(&grid, coeffs)?.certify_divergence_free()?;
    Ok(Checkpoint { params, time, field })
}

pub fn write(path: &Path, ck: &Checkpoint) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&encode(ck))?;
    w.flush()?;
    Ok(())
}

pub fn read(path: &Path) -> Result<Checkpoint> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    decode(&bytes)
}
