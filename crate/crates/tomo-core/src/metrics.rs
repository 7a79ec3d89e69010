//! Error metrics for comparing images against a reference.
//!
//! The signal-to-noise ratio follows the variance-over-error convention
//! `SNR = 10 log10( ||u0 - mean(u0)||^2 / ||u - u0||^2 )` in decibels, where
//! `u0` is the reference ("ground truth") image. Degenerate cases are explicit:
//! a constant reference has zero signal variance (reported as negative
//! infinity), and `u = u0` has no error to measure (an undefined-SNR error,
//! surfaced as a flagged value in reports).

use crate::error::{Error, Result};
use crate::image::Image2D;

/// A well-defined SNR measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SnrValue {
    /// Finite ratio in decibels.
    Db(f64),
    /// Zero signal variance (constant reference): the ratio collapses to
    /// negative infinity but is reported as a flag, never as a NaN/inf float.
    NegInfinite,
}

impl SnrValue {
    /// The dB value if finite.
    pub fn db(self) -> Option<f64> {
        match self {
            SnrValue::Db(v) => Some(v),
            SnrValue::NegInfinite => None,
        }
    }
}

impl std::fmt::Display for SnrValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SnrValue::Db(v) => write!(f, "{v}"),
            SnrValue::NegInfinite => write!(f, "-inf"),
        }
    }
}

fn check_shapes(u: &Image2D, u0: &Image2D) -> Result<()> {
    if u.rows() != u0.rows() || u.cols() != u0.cols() {
        return Err(Error::shape(
            format!("{}x{}", u0.rows(), u0.cols()),
            format!("{}x{}", u.rows(), u.cols()),
        ));
    }
    Ok(())
}

/// Signal-to-noise ratio of `u` against the reference `u0`, in dB.
pub fn snr(u: &Image2D, u0: &Image2D) -> Result<SnrValue> {
    check_shapes(u, u0)?;
    let mean = u0.mean();
    let signal: f64 = u0.as_slice().iter().map(|&x| (x - mean) * (x - mean)).sum();
    let error: f64 = u
        .as_slice()
        .iter()
        .zip(u0.as_slice())
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum();
    if error == 0.0 {
        return Err(Error::UndefinedSnr);
    }
    if signal == 0.0 {
        return Ok(SnrValue::NegInfinite);
    }
    Ok(SnrValue::Db(10.0 * (signal / error).log10()))
}

/// Frobenius norm of the difference `u - u0`.
pub fn frobenius_error(u: &Image2D, u0: &Image2D) -> Result<f64> {
    check_shapes(u, u0)?;
    Ok(u.sub(u0)?.norm_l2())
}

/// Bundled metrics of one image against a reference.
#[derive(Debug, Clone)]
pub struct MetricReport {
    pub label: String,
    pub rows: usize,
    pub cols: usize,
    /// `None` when the SNR is undefined (`u = u0`).
    pub snr: Option<SnrValue>,
    pub frobenius: f64,
}

impl MetricReport {
    /// Computes both metrics; an undefined SNR becomes a flag, not an error.
    pub fn new(label: impl Into<String>, u: &Image2D, u0: &Image2D) -> Result<MetricReport> {
        let snr_value = match snr(u, u0) {
            Ok(v) => Some(v),
            Err(Error::UndefinedSnr) => None,
            Err(e) => return Err(e),
        };
        Ok(MetricReport {
            label: label.into(),
            rows: u.rows(),
            cols: u.cols(),
            snr: snr_value,
            frobenius: frobenius_error(u, u0)?,
        })
    }

    /// The SNR as a CSV-ready string (`undefined` when flagged).
    pub fn snr_text(&self) -> String {
        match &self.snr {
            Some(v) => v.to_string(),
            None => "undefined".to_string(),
        }
    }
}
