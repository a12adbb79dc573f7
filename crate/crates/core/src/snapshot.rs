//! SPECF01 snapshots: one JSON header line, then little-endian `(re, im)`
//! f64 pairs per component. Modes are written in ascending wavenumber order,
//! `-N/2 .. N/2-1` on every axis, last axis fastest.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::SpectralGrid;

pub const MAGIC: &str = "SPECF01";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub magic: String,
    pub n_dim: usize,
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K_R")]
    pub k_cut: usize,
    pub components: usize,
    pub hermitian: bool,
    /// Simulation time, when the snapshot comes from a run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
}

impl SnapshotHeader {
    pub fn grid(&self) -> Result<SpectralGrid> {
        SpectralGrid::new(self.n_dim, self.length, self.n, self.k_cut)
    }
}

/// Storage index of every mode, in file order.
fn file_order(grid: &SpectralGrid) -> Vec<usize> {
    let n = grid.n();
    let d = grid.n_dim();
    let half = (n / 2) as i64;
    let mut out = Vec::with_capacity(grid.len());
    for m in 0..grid.len() {
        let mut k = [0i64; 3];
        let mut r = m;
        for j in (0..d).rev() {
            k[j] = (r % n) as i64 - half;
            r /= n;
        }
        out.push(grid.index_of(&k[..d]).expect("mode inside the grid"));
    }
    out
}

pub fn write_snapshot<W: Write>(mut w: W, fields: &[SpectralField], t: Option<f64>) -> Result<()> {
    let first = fields.first().ok_or_else(|| Error::Format("snapshot needs at least one component".into()))?;
    let grid = *first.grid();
    if fields.iter().any(|f| *f.grid() != grid) {
        return Err(Error::GridMismatch("snapshot components live on different grids".into()));
    }
    let header = SnapshotHeader {
        magic: MAGIC.into(),
        n_dim: grid.n_dim(),
        length: grid.length(),
        n: grid.n(),
        k_cut: grid.k_cut(),
        components: fields.len(),
        hermitian: fields.iter().all(|f| f.is_hermitian()),
        t,
    };
    let line = serde_json::to_string(&header).map_err(|e| Error::Format(e.to_string()))?;
    w.write_all(line.as_bytes())?;
    w.write_all(b"\n")?;
    let order = file_order(&grid);
    let mut buf = Vec::with_capacity(16 * grid.len());
    for f in fields {
        buf.clear();
        for &i in &order {
            let z = f.coeffs()[i];
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot<R: Read>(r: R) -> Result<(SnapshotHeader, Vec<SpectralField>)> {
    let mut r = BufReader::new(r);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: SnapshotHeader =
        serde_json::from_str(line.trim_end()).map_err(|e| Error::Format(format!("bad snapshot header: {e}")))?;
    if header.magic != MAGIC {
        return Err(Error::Format(format!("bad magic {:?}", header.magic)));
    }
    let grid = header.grid()?;
    let order = file_order(&grid);
    let mut bytes = vec![0u8; 16 * grid.len()];
    let mut fields = Vec::with_capacity(header.components);
    for _ in 0..header.components {
        r.read_exact(&mut bytes).map_err(|e| Error::Format(format!("truncated snapshot: {e}")))?;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
        for (chunk, &i) in bytes.chunks_exact(16).zip(&order) {
            let re = f64::from_le_bytes(chunk[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(chunk[8..].try_into().expect("8 bytes"));
            coeffs[i] = Complex64::new(re, im);
        }
        fields.push(SpectralField::from_coeffs(grid, coeffs, header.hermitian)?);
    }
    if r.read(&mut [0u8; 1])? != 0 {
        return Err(Error::Format("trailing bytes after the last component".into()));
    }
    Ok((header, fields))
}

pub fn save_snapshot(path: &Path, fields: &[SpectralField], t: Option<f64>) -> Result<()> {
    write_snapshot(BufWriter::new(File::create(path)?), fields, t)
}

pub fn load_snapshot(path: &Path) -> Result<(SnapshotHeader, Vec<SpectralField>)> {
    read_snapshot(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(g: SpectralGrid) -> SpectralField {
        SpectralField::from_fn(g, false, |k| Complex64::new(k[0] as f64 + 0.5, (k[1] * 10 + k[2]) as f64))
    }

    #[test]
    fn roundtrip_bitwise() {
        for g in [SpectralGrid::new(2, 1.5, 8, 2).unwrap(), SpectralGrid::new(3, 1.0, 6, 1).unwrap()] {
            let f = [field(g), field(g).scaled(-3.0)];
            let mut buf = Vec::new();
            write_snapshot(&mut buf, &f, Some(0.25)).unwrap();
            let (h, back) = read_snapshot(buf.as_slice()).unwrap();
            assert_eq!(h.t, Some(0.25));
            assert_eq!(back.len(), 2);
            for (a, b) in f.iter().zip(&back) {
                assert_eq!(a.coeffs(), b.coeffs());
            }
        }
    }

    #[test]
    fn ascending_mode_order() {
        let g = SpectralGrid::new(2, 1.0, 4, 1).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &[field(g)], None).unwrap();
        let start = buf.iter().position(|&b| b == b'\n').unwrap() + 1;
        let header = std::str::from_utf8(&buf[..start - 1]).unwrap();
        assert!(header.starts_with("{\"magic\":\"SPECF01\""));
        assert!(!header.contains("\"t\""));
        let vals: Vec<f64> = buf[start..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        // first record is k = (-2, -2), then (-2, -1)
        assert_eq!(&vals[..4], &[-1.5, -20.0, -1.5, -10.0]);
        assert_eq!(vals.len(), 2 * 16);
    }

    #[test]
    fn rejects_corruption() {
        let g = SpectralGrid::new(2, 1.0, 4, 1).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &[field(g)], None).unwrap();
        assert!(read_snapshot(&buf[..buf.len() - 1]).is_err());
        let mut extra = buf.clone();
        extra.push(0);
        assert!(read_snapshot(extra.as_slice()).is_err());
        let mut bad = buf.clone();
        bad[16] = b'2';
        assert!(std::str::from_utf8(&bad[..20]).unwrap().contains("SPECF02"));
        assert!(read_snapshot(&bad[..]).unwrap_err().to_string().contains("magic"));
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.specf");
        let g = SpectralGrid::new(2, 1.0, 8, 2).unwrap();
        save_snapshot(&p, &[field(g)], None).unwrap();
        assert_eq!(load_snapshot(&p).unwrap().1[0].coeffs(), field(g).coeffs());
    }
}
