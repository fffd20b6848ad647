//! Binary raster (`CIMG`) and dictionary (`CDIC`) formats, plus a CSV
//! converter.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! CIMG: "CIMG" | version u32 | rows u64 | cols u64 | rows·cols × (re f64, im f64), row-major
//! CDIC: "CDIC" | version u32 | M u64 | L u64     | M × L·L × (re f64, im f64), row-major per filter
//! ```
//!
//! Real rasters are stored as CIMG with zero imaginary parts.

use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::image::{ComplexImage, FilterBank, RealImage};

pub const CIMG_MAGIC: &[u8; 4] = b"CIMG";
pub const CDIC_MAGIC: &[u8; 4] = b"CDIC";
pub const FORMAT_VERSION: u32 = 1;

/// Filters further than this from unit norm trigger a load warning.
pub const NORM_TOLERANCE: f64 = 1e-8;

/// Raster payload without any value checks.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRaster {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl RawRaster {
    pub fn into_image(self) -> Result<ComplexImage> {
        ComplexImage::from_vec(self.rows, self.cols, self.data)
    }

    /// Real parts; imaginary parts are dropped.
    pub fn into_real(self) -> RealImage {
        RealImage::from_raw(self.rows, self.cols, self.data.into_iter().map(|z| z.re).collect())
    }
}

/// Writes via a sibling temp file and a rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
    let tmp = temp_path(path);
    let result = (|| {
        let file = fs::File::create(&tmp)?;
        let mut w = BufWriter::new(file);
        f(&mut w)?;
        let file = w.into_inner().map_err(|e| e.into_error())?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(Error::from)
}

fn temp_path(path: &Path) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!(".{name}.{}.tmp", std::process::id()))
}

fn write_pairs(w: &mut dyn Write, values: impl Iterator<Item = Complex64>) -> io::Result<()> {
    for z in values {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

fn write_header(w: &mut dyn Write, magic: &[u8; 4], a: usize, b: usize) -> io::Result<()> {
    w.write_all(magic)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(a as u64).to_le_bytes())?;
    w.write_all(&(b as u64).to_le_bytes())
}

pub fn encode_cimg(w: &mut dyn Write, rows: usize, cols: usize, data: &[Complex64]) -> io::Result<()> {
    write_header(w, CIMG_MAGIC, rows, cols)?;
    write_pairs(w, data.iter().copied())
}

pub fn write_cimg(path: &Path, image: &ComplexImage) -> Result<()> {
    write_atomic(path, |w| encode_cimg(w, image.rows(), image.cols(), image.as_slice()))
}

/// Real raster as CIMG; NaN entries are kept.
pub fn write_real_cimg(path: &Path, image: &RealImage) -> Result<()> {
    write_atomic(path, |w| {
        write_header(w, CIMG_MAGIC, image.rows(), image.cols())?;
        write_pairs(w, image.as_slice().iter().map(|&v| Complex64::new(v, 0.0)))
    })
}

pub fn write_cdic(path: &Path, bank: &FilterBank) -> Result<()> {
    write_atomic(path, |w| encode_cdic(w, bank))
}

pub fn encode_cdic(w: &mut dyn Write, bank: &FilterBank) -> io::Result<()> {
    write_header(w, CDIC_MAGIC, bank.num_filters(), bank.filter_size())?;
    for f in bank.filters() {
        write_pairs(w, f.as_slice().iter().copied())?;
    }
    Ok(())
}

fn eof_as_format(e: io::Error, what: &str) -> Error {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        Error::Format(format!("truncated {what}"))
    } else {
        Error::Io(e)
    }
}

fn read_u32(r: &mut dyn Read) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut dyn Read) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_header(r: &mut dyn Read, magic: &[u8; 4], what: &str) -> Result<(usize, usize)> {
    let mut m = [0u8; 4];
    r.read_exact(&mut m).map_err(|e| eof_as_format(e, what))?;
    if &m != magic {
        return Err(Error::Format(format!("bad magic for {what}: {m:?}")));
    }
    let version = read_u32(r).map_err(|e| eof_as_format(e, what))?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported {what} version {version}")));
    }
    let a = read_u64(r).map_err(|e| eof_as_format(e, what))?;
    let b = read_u64(r).map_err(|e| eof_as_format(e, what))?;
    let to_usize = |v: u64| usize::try_from(v).map_err(|_| Error::Format(format!("{what} dimension {v} too large")));
    Ok((to_usize(a)?, to_usize(b)?))
}

fn read_payload(r: &mut dyn Read, count: usize, what: &str) -> Result<Vec<Complex64>> {
    let bytes = count
        .checked_mul(16)
        .ok_or_else(|| Error::Format(format!("{what} payload size overflows")))?;
    let mut buf = Vec::new();
    r.take(bytes as u64).read_to_end(&mut buf)?;
    if buf.len() != bytes {
        return Err(Error::Format(format!("truncated {what}: expected {bytes} payload bytes, found {}", buf.len())));
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format(format!("trailing bytes after {what} payload")));
    }
    Ok(buf
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect())
}

pub fn decode_cimg_raw(r: &mut dyn Read) -> Result<RawRaster> {
    let (rows, cols) = read_header(r, CIMG_MAGIC, "raster")?;
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Format("raster size overflows".into()))?;
    let data = read_payload(r, count, "raster")?;
    Ok(RawRaster { rows, cols, data })
}

/// Any CIMG file, NaN payloads included.
pub fn read_cimg_raw(path: &Path) -> Result<RawRaster> {
    let mut r = BufReader::new(fs::File::open(path)?);
    decode_cimg_raw(&mut r)
}

/// A CIMG file holding a nonempty, finite complex image.
pub fn read_cimg(path: &Path) -> Result<ComplexImage> {
    read_cimg_raw(path)?.into_image()
}

/// Decodes a dictionary. Filters off unit norm by more than
/// [`NORM_TOLERANCE`] are accepted with a logged warning.
pub fn decode_cdic(r: &mut dyn Read) -> Result<FilterBank> {
    let (m, l) = read_header(r, CDIC_MAGIC, "dictionary")?;
    if m == 0 || l == 0 {
        return Err(Error::Format("dictionary must hold at least one nonempty filter".into()));
    }
    let per = l
        .checked_mul(l)
        .ok_or_else(|| Error::Format("dictionary size overflows".into()))?;
    let count = per
        .checked_mul(m)
        .ok_or_else(|| Error::Format("dictionary size overflows".into()))?;
    let data = read_payload(r, count, "dictionary")?;
    let filters = data
        .chunks_exact(per)
        .map(|c| ComplexImage::from_vec(l, l, c.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    let bank = FilterBank::new(filters)?;
    for (i, f) in bank.filters().iter().enumerate() {
        let dev = (f.norm() - 1.0).abs();
        if dev > NORM_TOLERANCE {
            log::warn!("dictionary filter {i} has norm off unity by {dev:.3e}");
        }
    }
    Ok(bank)
}

pub fn read_cdic(path: &Path) -> Result<FilterBank> {
    let mut r = BufReader::new(fs::File::open(path)?);
    decode_cdic(&mut r)
}

/// CSV view of a raster: header `row,col,re,im`, then one line per pixel in
/// row-major order. Floats use the shortest round-trip representation.
pub fn encode_csv(w: &mut dyn Write, raster: &RawRaster) -> io::Result<()> {
    writeln!(w, "row,col,re,im")?;
    for (i, z) in raster.data.iter().enumerate() {
        writeln!(w, "{},{},{:?},{:?}", i / raster.cols.max(1), i % raster.cols.max(1), z.re, z.im)?;
    }
    Ok(())
}

/// Inverse of [`encode_csv`]. Pixels may appear in any order but every one
/// must appear exactly once.
pub fn decode_csv(r: &mut dyn BufRead) -> Result<RawRaster> {
    let mut entries = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if n == 0 {
            if line != "row,col,re,im" {
                return Err(Error::Format(format!("unexpected csv header `{line}`")));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let bad = || Error::Format(format!("malformed csv line {}: `{line}`", n + 1));
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(bad());
        }
        let row: usize = fields[0].parse().map_err(|_| bad())?;
        let col: usize = fields[1].parse().map_err(|_| bad())?;
        let re: f64 = fields[2].parse().map_err(|_| bad())?;
        let im: f64 = fields[3].parse().map_err(|_| bad())?;
        entries.push((row, col, Complex64::new(re, im)));
    }
    let rows = entries.iter().map(|e| e.0 + 1).max().unwrap_or(0);
    let cols = entries.iter().map(|e| e.1 + 1).max().unwrap_or(0);
    if entries.len() != rows * cols {
        return Err(Error::Format(format!(
            "csv holds {} pixels for a {rows}x{cols} raster",
            entries.len()
        )));
    }
    let mut data = vec![None; rows * cols];
    for (r, c, z) in entries {
        let slot = &mut data[r * cols + c];
        if slot.is_some() {
            return Err(Error::Format(format!("pixel ({r}, {c}) appears twice")));
        }
        *slot = Some(z);
    }
    Ok(RawRaster {
        rows,
        cols,
        data: data.into_iter().map(|z| z.unwrap()).collect(),
    })
}
