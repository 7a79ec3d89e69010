//! Dense row-major matrices with a fixed world frame.
//!
//! An [`Image2D`] is the one container shared by every stage of the pipeline:
//! density images, sinograms (rows = view angles, columns = detectors), frame
//! coefficient planes, and reconstructions. When a matrix is interpreted as a
//! density image it covers the square `[-1, 1] x [-1, 1]` in world
//! coordinates, row 0 at the top (decreasing world y with increasing row).
//!
//! Matrices serialize to the `RM2` format: one ASCII header line
//! `RM2 <rows> <cols>\n` followed by the row-major payload as little-endian
//! IEEE 754 doubles. The format is lossless and byte-reproducible.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Row-major matrix of `f64` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Image2D {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Image2D {
    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Image2D {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Constant matrix.
    pub fn constant(rows: usize, cols: usize, value: f64) -> Self {
        Image2D {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// Wraps an existing row-major buffer; `data.len()` must equal `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                format!("{rows}x{cols} = {} samples", rows * cols),
                format!("{} samples", data.len()),
            ));
        }
        Ok(Image2D { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn same_shape(&self, other: &Image2D) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// World-units width of one pixel (columns span `[-1, 1]`).
    pub fn dx(&self) -> f64 {
        2.0 / self.cols as f64
    }

    /// World-units height of one pixel (rows span `[-1, 1]`).
    pub fn dy(&self) -> f64 {
        2.0 / self.rows as f64
    }

    /// Characteristic pixel spacing, used e.g. as the ray-marching scale.
    /// Equals `dx` and `dy` for square grids; the finer of the two otherwise.
    pub fn pixel_spacing(&self) -> f64 {
        self.dx().min(self.dy())
    }

    /// World coordinates of the center of pixel `(i, j)`.
    pub fn pixel_center(&self, i: usize, j: usize) -> (f64, f64) {
        let x = -1.0 + (j as f64 + 0.5) * self.dx();
        let y = 1.0 - (i as f64 + 0.5) * self.dy();
        (x, y)
    }

    /// Bilinear sample at world coordinates; zero outside the grid.
    pub fn sample_world(&self, x: f64, y: f64) -> f64 {
        // Continuous pixel coordinates with (0, 0) at the center of pixel (0, 0).
        let jf = (x + 1.0) / self.dx() - 0.5;
        let if_ = (1.0 - y) / self.dy() - 0.5;
        self.sample_pixel(if_, jf)
    }

    /// Bilinear sample at fractional pixel coordinates; zero outside.
    pub fn sample_pixel(&self, i: f64, j: f64) -> f64 {
        let i0 = i.floor();
        let j0 = j.floor();
        let fi = i - i0;
        let fj = j - j0;
        let i0 = i0 as isize;
        let j0 = j0 as isize;
        let mut acc = 0.0;
        for (di, wi) in [(0isize, 1.0 - fi), (1, fi)] {
            let ii = i0 + di;
            if ii < 0 || ii >= self.rows as isize || wi == 0.0 {
                continue;
            }
            for (dj, wj) in [(0isize, 1.0 - fj), (1, fj)] {
                let jj = j0 + dj;
                if jj < 0 || jj >= self.cols as isize || wj == 0.0 {
                    continue;
                }
                acc += wi * wj * self.data[ii as usize * self.cols + jj as usize];
            }
        }
        acc
    }

    /// Sum of all samples.
    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            0.0
        } else {
            self.sum() / self.data.len() as f64
        }
    }

    /// Euclidean norm of the sample vector.
    pub fn norm_l2(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest absolute sample.
    pub fn norm_inf(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Elementwise map into a new matrix.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image2D {
        Image2D {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise combination of two same-shape matrices.
    pub fn zip_with(&self, other: &Image2D, f: impl Fn(f64, f64) -> f64) -> Result<Image2D> {
        if !self.same_shape(other) {
            return Err(Error::shape(
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", other.rows, other.cols),
            ));
        }
        Ok(Image2D {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scaled(&self, s: f64) -> Image2D {
        self.map(|v| v * s)
    }

    /// `self - other`.
    pub fn sub(&self, other: &Image2D) -> Result<Image2D> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `self + other`.
    pub fn add(&self, other: &Image2D) -> Result<Image2D> {
        self.zip_with(other, |a, b| a + b)
    }

    /// True if any sample is NaN or infinite.
    pub fn has_non_finite(&self) -> bool {
        self.data.iter().any(|v| !v.is_finite())
    }

    // ---- RM2 serialization ------------------------------------------------

    /// Encodes the matrix in RM2 format.
    pub fn to_rm2_bytes(&self) -> Vec<u8> {
        let header = format!("RM2 {} {}\n", self.rows, self.cols);
        let mut out = Vec::with_capacity(header.len() + self.data.len() * 8);
        out.extend_from_slice(header.as_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Decodes an RM2 byte stream.
    pub fn from_rm2_bytes(bytes: &[u8]) -> Result<Self> {
        let newline = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| malformed("missing header line"))?;
        let header = std::str::from_utf8(&bytes[..newline])
            .map_err(|_| malformed("header is not ASCII"))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("RM2") {
            return Err(malformed("missing RM2 magic"));
        }
        let rows: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| malformed("bad row count"))?;
        let cols: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| malformed("bad column count"))?;
        if parts.next().is_some() {
            return Err(malformed("trailing tokens in header"));
        }
        let payload = &bytes[newline + 1..];
        let expected = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| malformed("dimensions overflow"))?;
        if payload.len() != expected {
            return Err(malformed(format!(
                "payload has {} bytes, expected {expected}",
                payload.len()
            )));
        }
        let data = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Image2D { rows, cols, data })
    }

    pub fn write_rm2(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(&self.to_rm2_bytes())?;
        Ok(())
    }

    pub fn read_rm2(path: impl AsRef<Path>) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Image2D::from_rm2_bytes(&bytes)
    }

    // ---- PGM preview ------------------------------------------------------

    /// Renders an 8-bit binary PGM preview, min-max scaled. A constant image
    /// maps to mid-gray.
    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        let lo = self.min();
        let hi = self.max();
        let span = hi - lo;
        let mut out = format!("P5\n{} {}\n255\n", self.cols, self.rows).into_bytes();
        out.reserve(self.data.len());
        for &v in &self.data {
            let g = if span > 0.0 && span.is_finite() {
                ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8
            } else {
                128
            };
            out.push(g);
        }
        out
    }

    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(&self.to_pgm_bytes())?;
        Ok(())
    }
}

fn malformed(detail: impl Into<String>) -> Error {
    Error::MalformedData {
        format: "RM2",
        detail: detail.into(),
    }
}
