//! GKF1 field files.
//!
//! Layout (little-endian): magic "GKF1"; u32 d; u32 N; u32 ncomp;
//! u64 dims[d]; f64 lo[d]; f64 hi[d]; then row-major site data, per site
//! `ncomp` components, per component 2N² reals — the complex N×N matrix,
//! row-major, re/im interleaved.
//!
//! Algebra-valued fields materialize coefficient values into matrices on
//! write; reads validate membership (anti-hermitian traceless, or unitary
//! det-1 for transform fields) and convert back. Writing is a pure function
//! of the in-memory data, so bitwise-equal fields produce bitwise-equal
//! files.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read as IoRead, Write as IoWrite};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{GaugeTransformField, LieField};
use crate::grid::Grid;
use crate::lie::{self, CMat, GroupKind};

const MAGIC: &[u8; 4] = b"GKF1";

fn write_header(w: &mut impl IoWrite, grid: &Grid, n: usize, ncomp: usize) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(grid.d as u32).to_le_bytes())?;
    w.write_all(&(n as u32).to_le_bytes())?;
    w.write_all(&(ncomp as u32).to_le_bytes())?;
    for ax in 0..grid.d {
        w.write_all(&(grid.dims[ax] as u64).to_le_bytes())?;
    }
    for ax in 0..grid.d {
        w.write_all(&grid.lo[ax].to_le_bytes())?;
    }
    for ax in 0..grid.d {
        w.write_all(&grid.hi[ax].to_le_bytes())?;
    }
    Ok(())
}

struct Header {
    grid: Arc<Grid>,
    kind: GroupKind,
    ncomp: usize,
}

fn read_u32(r: &mut impl IoRead) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl IoRead) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl IoRead) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_header(r: &mut impl IoRead) -> Result<Header> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::validation("not a GKF1 file (bad magic)"));
    }
    let d = read_u32(r)? as usize;
    let n = read_u32(r)? as usize;
    let ncomp = read_u32(r)? as usize;
    let kind = GroupKind::from_n(n)?;
    if ncomp == 0 || ncomp > 16 {
        return Err(Error::validation(format!("unreasonable component count {ncomp}")));
    }
    let mut dims = Vec::with_capacity(d.max(1));
    for _ in 0..d {
        let v = read_u64(r)?;
        if v > 1 << 20 {
            return Err(Error::validation("axis dimension too large"));
        }
        dims.push(v as usize);
    }
    let mut lo = Vec::with_capacity(d.max(1));
    let mut hi = Vec::with_capacity(d.max(1));
    for _ in 0..d {
        lo.push(read_f64(r)?);
    }
    for _ in 0..d {
        hi.push(read_f64(r)?);
    }
    let grid = Arc::new(Grid::new(d, &dims, &lo, &hi)?);
    if grid.len().checked_mul(ncomp * 2 * n * n).is_none() {
        return Err(Error::validation("field too large"));
    }
    Ok(Header { grid, kind, ncomp })
}

/// Writes an algebra-valued field (gauge, electric, curvature, or any
/// 𝔤-valued component bundle).
pub fn write_algebra_field(path: impl AsRef<Path>, f: &LieField) -> Result<()> {
    f.validate()?;
    let mut w = BufWriter::new(File::create(path)?);
    let n = f.kind.n();
    write_header(&mut w, &f.grid, n, f.ncomp)?;
    let mut buf = Vec::with_capacity(2 * n * n * 8);
    for site in 0..f.grid.len() {
        for comp in 0..f.ncomp {
            let m = lie::matrix_from_coeffs(f.kind, f.at(site, comp));
            buf.clear();
            for i in 0..n {
                for j in 0..n {
                    let v = m.get(i, j);
                    buf.extend_from_slice(&v.re.to_le_bytes());
                    buf.extend_from_slice(&v.im.to_le_bytes());
                }
            }
            w.write_all(&buf)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_matrix(r: &mut impl IoRead, n: usize) -> Result<CMat> {
    let mut m = CMat::zero(n);
    for i in 0..n {
        for j in 0..n {
            let re = read_f64(r)?;
            let im = read_f64(r)?;
            m.set(i, j, Complex64::new(re, im));
        }
    }
    Ok(m)
}

/// Reads an algebra-valued field, validating per-site membership.
pub fn read_algebra_field(path: impl AsRef<Path>) -> Result<LieField> {
    let mut r = BufReader::new(File::open(path)?);
    let hdr = read_header(&mut r)?;
    let n = hdr.kind.n();
    let dg = hdr.kind.dim_g();
    let mut f = LieField::zeros(hdr.grid.clone(), hdr.kind, hdr.ncomp);
    for site in 0..hdr.grid.len() {
        for comp in 0..hdr.ncomp {
            let m = read_matrix(&mut r, n)?;
            let scale = 1.0_f64.max(m.norm());
            let defect = m.add(&m.adjoint()).norm().max(m.trace().norm());
            if defect > 1e-12 * scale {
                return Err(Error::validation(format!(
                    "site {site} comp {comp}: matrix is not in the algebra"
                )));
            }
            let mut c = [0.0; 8];
            lie::coeffs_from_matrix(hdr.kind, &m, &mut c[..dg]);
            f.set(site, comp, &c[..dg]);
        }
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::validation("trailing bytes after field data"));
    }
    f.validate()?;
    Ok(f)
}

/// Writes a group-valued field (one component per site).
pub fn write_transform_field(path: impl AsRef<Path>, o: &GaugeTransformField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let n = o.kind.n();
    write_header(&mut w, &o.grid, n, 1)?;
    let mut buf = Vec::with_capacity(2 * n * n * 8);
    for site in 0..o.grid.len() {
        let m = o.get(site);
        buf.clear();
        for i in 0..n {
            for j in 0..n {
                let v = m.get(i, j);
                buf.extend_from_slice(&v.re.to_le_bytes());
                buf.extend_from_slice(&v.im.to_le_bytes());
            }
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a group-valued field, validating per-site membership.
pub fn read_transform_field(path: impl AsRef<Path>) -> Result<GaugeTransformField> {
    let mut r = BufReader::new(File::open(path)?);
    let hdr = read_header(&mut r)?;
    if hdr.ncomp != 1 {
        return Err(Error::validation("transform field must have one component"));
    }
    let n = hdr.kind.n();
    let mut o = GaugeTransformField::identity(hdr.grid.clone(), hdr.kind);
    for site in 0..hdr.grid.len() {
        let m = read_matrix(&mut r, n)?;
        lie::GroupElement::new(m)
            .map_err(|e| Error::validation(format!("site {site}: {e}")))?;
        o.set(site, &m);
    }
    Ok(o)
}
