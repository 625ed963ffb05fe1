//! Field snapshot files.
//!
//! Binary layout: 8-byte magic `QHD2DF01`, little-endian `u32 nx`, `u32 ny`,
//! `f64 lx`, `f64 ly`, `u8 kind` (0 = real, 1 = complex), then row-major
//! `f64` values (`re, im` pairs when complex). A JSON sidecar at
//! `<path>.json` carries the same metadata plus the time stamp `t` and
//! `hbar`.

use crate::error::{QhdError, Result};
use crate::fields::{make_grid, Grid, RealField, WaveField};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

pub const MAGIC: &[u8; 8] = b"QHD2DF01";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub nx: u32,
    pub ny: u32,
    pub lx: f64,
    pub ly: f64,
    pub kind: u8,
    pub t: f64,
    pub hbar: f64,
}

fn write_header(w: &mut impl Write, grid: &Grid, kind: u8) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(grid.nx as u32).to_le_bytes())?;
    w.write_all(&(grid.ny as u32).to_le_bytes())?;
    w.write_all(&grid.lx.to_le_bytes())?;
    w.write_all(&grid.ly.to_le_bytes())?;
    w.write_all(&[kind])?;
    Ok(())
}

fn write_sidecar(path: &Path, grid: &Grid, kind: u8, t: f64, hbar: f64) -> Result<()> {
    let sidecar = Sidecar {
        nx: grid.nx as u32,
        ny: grid.ny as u32,
        lx: grid.lx,
        ly: grid.ly,
        kind,
        t,
        hbar,
    };
    let json = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| QhdError::Format(format!("sidecar encode: {e}")))?;
    std::fs::write(sidecar_path(path), json)?;
    Ok(())
}

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    std::path::PathBuf::from(s)
}

pub fn write_real(path: &Path, field: &RealField, t: f64) -> Result<()> {
    let mut buf = Vec::with_capacity(33 + 8 * field.values.len());
    write_header(&mut buf, &field.grid, 0)?;
    for v in &field.values {
        buf.write_all(&v.to_le_bytes())?;
    }
    std::fs::write(path, buf)?;
    write_sidecar(path, &field.grid, 0, t, 0.0)
}

pub fn write_wave(path: &Path, field: &WaveField, t: f64) -> Result<()> {
    let mut buf = Vec::with_capacity(33 + 16 * field.values.len());
    write_header(&mut buf, &field.grid, 1)?;
    for v in &field.values {
        buf.write_all(&v.re.to_le_bytes())?;
        buf.write_all(&v.im.to_le_bytes())?;
    }
    std::fs::write(path, buf)?;
    write_sidecar(path, &field.grid, 1, t, field.hbar)
}

struct Header {
    grid: Arc<Grid>,
    kind: u8,
}

fn read_header(r: &mut impl Read) -> Result<Header> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(QhdError::Format(format!(
            "bad magic {:?}, expected {:?}",
            magic, MAGIC
        )));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)?;
    let nx = u32::from_le_bytes(u32buf) as usize;
    r.read_exact(&mut u32buf)?;
    let ny = u32::from_le_bytes(u32buf) as usize;
    let mut f64buf = [0u8; 8];
    r.read_exact(&mut f64buf)?;
    let lx = f64::from_le_bytes(f64buf);
    r.read_exact(&mut f64buf)?;
    let ly = f64::from_le_bytes(f64buf);
    let mut kind = [0u8; 1];
    r.read_exact(&mut kind)?;
    Ok(Header {
        grid: make_grid(nx, ny, lx, ly)?,
        kind: kind[0],
    })
}

fn read_values(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    let mut buf = [0u8; 8];
    for _ in 0..n {
        r.read_exact(&mut buf)?;
        out.push(f64::from_le_bytes(buf));
    }
    Ok(out)
}

pub fn read_real(path: &Path) -> Result<(RealField, Sidecar)> {
    let data = std::fs::File::open(path)?;
    let mut r = std::io::BufReader::new(data);
    let header = read_header(&mut r)?;
    if header.kind != 0 {
        return Err(QhdError::Format("expected a real snapshot".into()));
    }
    let values = read_values(&mut r, header.grid.len())?;
    let sidecar = read_sidecar(path, &header)?;
    Ok((
        RealField {
            grid: header.grid,
            values,
        },
        sidecar,
    ))
}

pub fn read_wave(path: &Path) -> Result<(WaveField, Sidecar)> {
    let data = std::fs::File::open(path)?;
    let mut r = std::io::BufReader::new(data);
    let header = read_header(&mut r)?;
    if header.kind != 1 {
        return Err(QhdError::Format("expected a complex snapshot".into()));
    }
    let raw = read_values(&mut r, 2 * header.grid.len())?;
    let values: Vec<Complex64> = raw
        .chunks_exact(2)
        .map(|p| Complex64::new(p[0], p[1]))
        .collect();
    let sidecar = read_sidecar(path, &header)?;
    Ok((
        WaveField {
            grid: header.grid,
            values,
            hbar: sidecar.hbar,
        },
        sidecar,
    ))
}

fn read_sidecar(path: &Path, header: &Header) -> Result<Sidecar> {
    let sp = sidecar_path(path);
    if sp.exists() {
        let text = std::fs::read_to_string(&sp)?;
        serde_json::from_str(&text).map_err(|e| QhdError::Format(format!("sidecar decode: {e}")))
    } else {
        Ok(Sidecar {
            nx: header.grid.nx as u32,
            ny: header.grid.ny as u32,
            lx: header.grid.lx,
            ly: header.grid.ly,
            kind: header.kind,
            t: 0.0,
            hbar: 1.0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::make_grid;

    #[test]
    fn wave_snapshot_roundtrip() {
        let dir = std::env::temp_dir().join("qhd2d_snap_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("psi.qhd");
        let g = make_grid(8, 4, 2.0, 3.0).unwrap();
        let psi = WaveField::from_fn(&g, 0.7, |x, y| Complex64::new(x * y, x - y));
        write_wave(&path, &psi, 1.25).unwrap();
        let (back, meta) = read_wave(&path).unwrap();
        assert!(back.grid.same_as(&g));
        assert_eq!(back.values, psi.values);
        assert_eq!(meta.t, 1.25);
        assert_eq!(meta.hbar, 0.7);
    }

    #[test]
    fn header_bytes_are_exact() {
        let dir = std::env::temp_dir().join("qhd2d_snap_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rho.qhd");
        let g = make_grid(4, 4, 1.0, 1.0).unwrap();
        let f = RealField::zeros(&g);
        write_real(&path, &f, 0.0).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[0..8], b"QHD2DF01");
        assert_eq!(&bytes[8..12], &4u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &4u32.to_le_bytes());
        assert_eq!(bytes[32], 0u8);
        assert_eq!(bytes.len(), 33 + 8 * 16);
    }

    #[test]
    fn truncated_file_is_a_format_error() {
        let dir = std::env::temp_dir().join("qhd2d_snap_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.qhd");
        std::fs::write(&path, b"QHD2DF01\x08").unwrap();
        assert!(read_real(&path).is_err());
    }
}
