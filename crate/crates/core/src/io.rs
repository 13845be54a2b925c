//! Binary field dumps and CSV export.
//!
//! Dump layout (little-endian): magic "NLSF", u32 version = 1, u32 nx, u32 ny,
//! f64 xmin, xmax, ymin, ymax, then nx*ny interleaved (re, im) f64 pairs in
//! row-major y-outer order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::{Grid, SpectralGrid};

const MAGIC: &[u8; 4] = b"NLSF";
const VERSION: u32 = 1;

pub fn dump_field(path: &Path, f: &ComplexField) -> Result<()> {
    let grid = f.grid();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(grid.nx() as u32).to_le_bytes())?;
    w.write_all(&(grid.ny() as u32).to_le_bytes())?;
    let (xmin, xmax, ymin, ymax) = grid.bounds();
    for v in [xmin, xmax, ymin, ymax] {
        w.write_all(&v.to_le_bytes())?;
    }
    for v in f.values() {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

struct DumpHeader {
    nx: usize,
    ny: usize,
    bounds: (f64, f64, f64, f64),
}

fn read_header(r: &mut impl Read, path: &Path) -> Result<DumpHeader> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::BadDump(format!("{}: bad magic", path.display())));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(Error::BadDump(format!(
            "{}: unsupported version {version}",
            path.display()
        )));
    }
    let nx = read_u32(r)? as usize;
    let ny = read_u32(r)? as usize;
    let xmin = read_f64(r)?;
    let xmax = read_f64(r)?;
    let ymin = read_f64(r)?;
    let ymax = read_f64(r)?;
    Ok(DumpHeader {
        nx,
        ny,
        bounds: (xmin, xmax, ymin, ymax),
    })
}

/// Load a dump, reconstructing its grid from the header.
pub fn load_field(path: &Path) -> Result<ComplexField> {
    let mut r = BufReader::new(File::open(path)?);
    let h = read_header(&mut r, path)?;
    let grid = SpectralGrid::shared(h.bounds.0, h.bounds.1, h.bounds.2, h.bounds.3, h.nx, h.ny)
        .map_err(|e| Error::BadDump(format!("{}: {e}", path.display())))?;
    read_body(&mut r, &grid, path)
}

/// Load a dump expected to live on `grid`; header mismatch is an error.
pub fn load_field_on(path: &Path, grid: &Grid) -> Result<ComplexField> {
    let mut r = BufReader::new(File::open(path)?);
    let h = read_header(&mut r, path)?;
    let (xmin, xmax, ymin, ymax) = grid.bounds();
    if h.nx != grid.nx() || h.ny != grid.ny() || h.bounds != (xmin, xmax, ymin, ymax) {
        return Err(Error::GridMismatch(format!(
            "{}: dump is {}x{} on [{},{}]x[{},{}], expected {}x{} on [{},{}]x[{},{}]",
            path.display(),
            h.nx,
            h.ny,
            h.bounds.0,
            h.bounds.1,
            h.bounds.2,
            h.bounds.3,
            grid.nx(),
            grid.ny(),
            xmin,
            xmax,
            ymin,
            ymax
        )));
    }
    read_body(&mut r, grid, path)
}

fn read_body(r: &mut impl Read, grid: &Grid, path: &Path) -> Result<ComplexField> {
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let re = read_f64(r)?;
        let im = read_f64(r)?;
        values.push(Complex64::new(re, im));
    }
    let f = ComplexField::from_values(grid, values);
    if !f.is_finite() {
        return Err(Error::BadDump(format!(
            "{}: non-finite samples",
            path.display()
        )));
    }
    Ok(f)
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Mask threshold below which arg is meaningless noise.
pub const ARG_MASK_FLOOR: f64 = 1e-8;

/// Write `x,y,value` CSVs of |f| and arg(f); the argument is written as nan
/// where |f| < ARG_MASK_FLOOR.
pub fn write_contour_csvs(base: &Path, f: &ComplexField) -> Result<()> {
    let grid = f.grid();
    let mod_path = base.with_extension("mod.csv");
    let arg_path = base.with_extension("arg.csv");
    let mut wm = BufWriter::new(File::create(&mod_path)?);
    let mut wa = BufWriter::new(File::create(&arg_path)?);
    writeln!(wm, "x,y,modulus")?;
    writeln!(wa, "x,y,arg")?;
    for iy in 0..grid.ny() {
        let y = grid.ys()[iy];
        for ix in 0..grid.nx() {
            let x = grid.xs()[ix];
            let v = f.at(iy, ix);
            writeln!(wm, "{x},{y},{}", v.norm())?;
            if v.norm() < ARG_MASK_FLOOR {
                writeln!(wa, "{x},{y},nan")?;
            } else {
                writeln!(wa, "{x},{y},{}", v.arg())?;
            }
        }
    }
    wm.flush()?;
    wa.flush()?;
    Ok(())
}
