//! Grid containers shared across the toolkit.
//!
//! Everything is stored row-major. `ComplexImage` carries interferograms,
//! coefficient maps and zero-padded filters alike; `RealImage` carries phase,
//! coherence and score maps.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Wraps an angle into `(-π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    if x > -PI && x <= PI {
        return x;
    }
    let w = x.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// A dense 2-D grid of finite complex samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexImage {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexImage {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "image dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    /// Builds an image from row-major samples, rejecting wrong lengths and
    /// non-finite values.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidData(format!(
                "image dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidData(format!(
                "{} samples cannot fill a {rows}x{cols} image",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|z| !z.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite sample at ({}, {})",
                i / cols,
                i % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut img = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                img.data[r * cols + c] = f(r, c);
            }
        }
        img
    }

    /// Unit-amplitude image with the given phase.
    pub fn from_phase(phase: &RealImage) -> Self {
        Self::from_fn(phase.rows(), phase.cols(), |r, c| {
            Complex64::from_polar(1.0, phase.get(r, c))
        })
    }

    /// Skips the finiteness check; callers must uphold the invariant.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.is_finite())
    }

    /// Squared ℓ2 norm.
    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Complex ℓ1 norm, the sum of sample amplitudes.
    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).sum()
    }

    pub fn phase(&self) -> RealImage {
        RealImage::from_raw(
            self.rows,
            self.cols,
            self.data.iter().map(|z| z.arg()).collect(),
        )
    }

    pub fn amplitude(&self) -> RealImage {
        RealImage::from_raw(
            self.rows,
            self.cols,
            self.data.iter().map(|z| z.norm()).collect(),
        )
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self::from_raw(self.rows, self.cols, self.data.iter().map(|&z| f(z)).collect())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|z| z * s)
    }

    pub(crate) fn check_same_dims(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: other.dims(),
            });
        }
        Ok(())
    }
}

/// A dense 2-D grid of real samples. May hold NaN to mark invalid pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct RealImage {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealImage {
    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::InvalidData(format!(
                "{} samples cannot fill a {rows}x{cols} image",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn column(&self, c: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.rows).map(move |r| self.get(r, c))
    }

    /// Embeds the samples as the real part of a complex image.
    pub fn to_complex(&self) -> ComplexImage {
        ComplexImage::from_raw(
            self.rows,
            self.cols,
            self.data.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }
}

/// `M` complex filters of spatial size `L×L`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    filter_size: usize,
    filters: Vec<ComplexImage>,
}

impl FilterBank {
    pub fn new(filters: Vec<ComplexImage>) -> Result<Self> {
        let first = filters
            .first()
            .ok_or_else(|| Error::config("a filter bank needs at least one filter"))?;
        let size = first.rows();
        for f in &filters {
            if f.rows() != size || f.cols() != size {
                return Err(Error::DimensionMismatch {
                    expected: (size, size),
                    found: f.dims(),
                });
            }
        }
        Ok(Self {
            filter_size: size,
            filters,
        })
    }

    /// A single unit impulse of size `L×L`.
    pub fn impulse(filter_size: usize) -> Self {
        let mut f = ComplexImage::zeros(filter_size, filter_size);
        f.set(0, 0, Complex64::new(1.0, 0.0));
        Self {
            filter_size,
            filters: vec![f],
        }
    }

    pub fn num_filters(&self) -> usize {
        self.filters.len()
    }

    pub fn filter_size(&self) -> usize {
        self.filter_size
    }

    pub fn filters(&self) -> &[ComplexImage] {
        &self.filters
    }

    pub fn filter(&self, m: usize) -> &ComplexImage {
        &self.filters[m]
    }

    /// Largest deviation of any filter's ℓ2 norm from one.
    pub fn max_norm_deviation(&self) -> f64 {
        self.filters
            .iter()
            .map(|f| (f.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn check_fits(&self, rows: usize, cols: usize) -> Result<()> {
        if self.filter_size > rows || self.filter_size > cols {
            return Err(Error::FilterTooLarge {
                filter_size: self.filter_size,
                rows,
                cols,
            });
        }
        Ok(())
    }

    /// Each filter zero-padded to `rows×cols`, support anchored top-left.
    pub fn padded(&self, rows: usize, cols: usize) -> Result<Vec<ComplexImage>> {
        self.check_fits(rows, cols)?;
        Ok(self
            .filters
            .iter()
            .map(|f| pad_top_left(f, rows, cols))
            .collect())
    }

    /// Recovers a bank from padded filters by cropping the `L×L` support.
    pub fn from_padded(padded: &[ComplexImage], filter_size: usize) -> Result<Self> {
        let filters = padded
            .iter()
            .map(|p| {
                ComplexImage::from_fn(filter_size, filter_size, |r, c| p.get(r, c))
            })
            .collect();
        Self::new(filters)
    }
}

pub(crate) fn pad_top_left(f: &ComplexImage, rows: usize, cols: usize) -> ComplexImage {
    let mut out = ComplexImage::zeros(rows, cols);
    for r in 0..f.rows() {
        let src = &f.as_slice()[r * f.cols()..(r + 1) * f.cols()];
        out.as_mut_slice()[r * cols..r * cols + f.cols()].copy_from_slice(src);
    }
    out
}

/// `M` coefficient maps of identical size.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientStack {
    rows: usize,
    cols: usize,
    maps: Vec<ComplexImage>,
}

impl CoefficientStack {
    pub fn zeros(num_maps: usize, rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            maps: vec![ComplexImage::zeros(rows, cols); num_maps],
        }
    }

    pub fn new(maps: Vec<ComplexImage>) -> Result<Self> {
        let first = maps
            .first()
            .ok_or_else(|| Error::config("a coefficient stack needs at least one map"))?;
        let dims = first.dims();
        for m in &maps {
            if m.dims() != dims {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    found: m.dims(),
                });
            }
        }
        Ok(Self {
            rows: dims.0,
            cols: dims.1,
            maps,
        })
    }

    pub fn num_maps(&self) -> usize {
        self.maps.len()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn maps(&self) -> &[ComplexImage] {
        &self.maps
    }

    pub fn maps_mut(&mut self) -> &mut [ComplexImage] {
        &mut self.maps
    }

    pub fn map(&self, m: usize) -> &ComplexImage {
        &self.maps[m]
    }

    pub fn into_maps(self) -> Vec<ComplexImage> {
        self.maps
    }

    pub fn l1_norm(&self) -> f64 {
        self.maps.iter().map(ComplexImage::l1_norm).sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.maps.iter().map(ComplexImage::norm_sqr).sum()
    }

    /// Largest absolute sample difference against another stack.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.maps
            .iter()
            .zip(&other.maps)
            .flat_map(|(a, b)| a.as_slice().iter().zip(b.as_slice()))
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    /// Per-map ℓ1 mass; ranks which filters contribute most to an image.
    pub fn contributions(&self) -> Vec<f64> {
        self.maps.iter().map(ComplexImage::l1_norm).collect()
    }
}
