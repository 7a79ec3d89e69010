//! Undecimated tensor-product framelet transforms.
//!
//! The three shipped filter banks come from spline refinements satisfying the
//! unitary extension principle (Ron & Shen 1997): piecewise-constant (Haar,
//! 2 filters), piecewise-linear (3 filters), and piecewise-cubic (5 filters).
//! Their squared symbols sum to one, so the undecimated tensor transform `W`
//! built from them is a tight frame with constant 1: `W^T W = I` exactly (up
//! to rounding), with `W^T` the plain adjoint.
//!
//! Analysis correlates the signal with each kernel (`a[-.]` convolution),
//! synthesis convolves, both with periodic boundary handling. Level `l` uses
//! the a-trous scheme: tap offsets stretched by `2^(l-1)`, no decimation, so
//! the transform commutes with circular shifts at every level.
//!
//! A decomposition stores all `(r+1)^2` tensor planes per level; the low-pass
//! plane of each level is the input cascaded into the next. Reconstruction
//! telescopes from the deepest level, so the shallower low-pass planes are
//! redundant copies kept for inspection and band weighting.

use crate::error::{Error, Result};
use crate::exec;
use crate::image::Image2D;

/// Which spline framelet family a bank holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BankKind {
    Haar,
    Linear,
    Cubic,
}

impl BankKind {
    pub fn name(self) -> &'static str {
        match self {
            BankKind::Haar => "haar",
            BankKind::Linear => "linear",
            BankKind::Cubic => "cubic",
        }
    }
}

impl std::str::FromStr for BankKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "haar" => Ok(BankKind::Haar),
            "linear" => Ok(BankKind::Linear),
            "cubic" => Ok(BankKind::Cubic),
            other => Err(Error::InvalidArgument(format!(
                "unknown filter bank '{other}' (expected haar, linear, or cubic)"
            ))),
        }
    }
}

/// One analysis/synthesis kernel with an anchored origin tap.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel1D {
    pub taps: Vec<f64>,
    /// Index of the tap sitting at offset zero. Odd-length kernels anchor at
    /// the middle tap; the even-length Haar pair anchors at the left tap.
    pub origin: usize,
}

/// A refinable low-pass filter with its framelet high-pass companions.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    pub kind: BankKind,
    pub kernels: Vec<Kernel1D>,
}

impl FilterBank {
    pub fn new(kind: BankKind) -> Self {
        let kernels = match kind {
            BankKind::Haar => vec![
                Kernel1D { taps: vec![0.5, 0.5], origin: 0 },
                Kernel1D { taps: vec![0.5, -0.5], origin: 0 },
            ],
            BankKind::Linear => {
                let s = std::f64::consts::SQRT_2 / 4.0;
                vec![
                    Kernel1D { taps: vec![0.25, 0.5, 0.25], origin: 1 },
                    Kernel1D { taps: vec![s, 0.0, -s], origin: 1 },
                    Kernel1D { taps: vec![-0.25, 0.5, -0.25], origin: 1 },
                ]
            }
            BankKind::Cubic => {
                let s6 = 6.0f64.sqrt() / 16.0;
                vec![
                    Kernel1D {
                        taps: vec![1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0],
                        origin: 2,
                    },
                    Kernel1D {
                        taps: vec![-1.0 / 8.0, -2.0 / 8.0, 0.0, 2.0 / 8.0, 1.0 / 8.0],
                        origin: 2,
                    },
                    Kernel1D {
                        taps: vec![s6, 0.0, -2.0 * s6, 0.0, s6],
                        origin: 2,
                    },
                    Kernel1D {
                        taps: vec![-1.0 / 8.0, 2.0 / 8.0, 0.0, -2.0 / 8.0, 1.0 / 8.0],
                        origin: 2,
                    },
                    Kernel1D {
                        taps: vec![1.0 / 16.0, -4.0 / 16.0, 6.0 / 16.0, -4.0 / 16.0, 1.0 / 16.0],
                        origin: 2,
                    },
                ]
            }
        };
        FilterBank { kind, kernels }
    }

    /// Number of high-pass generators (`r`); the bank holds `r + 1` kernels.
    pub fn order(&self) -> usize {
        self.kernels.len() - 1
    }

    /// Tensor planes per level.
    pub fn bands_per_level(&self) -> usize {
        self.kernels.len() * self.kernels.len()
    }
}

/// Coefficients of a multi-level undecimated framelet decomposition.
///
/// Band index `b` at a level encodes the kernel pair `(i1, i2) =
/// (b / (r+1), b % (r+1))`, `i1` filtering along rows (down columns) and `i2`
/// along columns. Band 0 is the low-pass plane.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameCoefficients {
    kind: BankKind,
    levels: usize,
    bands_per_level: usize,
    rows: usize,
    cols: usize,
    /// Level-major flat storage: `planes[(level-1) * bands_per_level + band]`.
    planes: Vec<Image2D>,
}

impl FrameCoefficients {
    pub fn kind(&self) -> BankKind {
        self.kind
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn bands_per_level(&self) -> usize {
        self.bands_per_level
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn plane(&self, level: usize, band: usize) -> &Image2D {
        assert!(level >= 1 && level <= self.levels, "level out of range");
        assert!(band < self.bands_per_level, "band out of range");
        &self.planes[(level - 1) * self.bands_per_level + band]
    }

    pub fn plane_mut(&mut self, level: usize, band: usize) -> &mut Image2D {
        assert!(level >= 1 && level <= self.levels, "level out of range");
        assert!(band < self.bands_per_level, "band out of range");
        &mut self.planes[(level - 1) * self.bands_per_level + band]
    }

    /// All planes in level-major order.
    pub fn planes(&self) -> &[Image2D] {
        &self.planes
    }

    pub fn planes_mut(&mut self) -> &mut [Image2D] {
        &mut self.planes
    }

    /// Zero coefficients with the same shape.
    pub fn zeros_like(&self) -> FrameCoefficients {
        FrameCoefficients {
            kind: self.kind,
            levels: self.levels,
            bands_per_level: self.bands_per_level,
            rows: self.rows,
            cols: self.cols,
            planes: self
                .planes
                .iter()
                .map(|p| Image2D::zeros(p.rows(), p.cols()))
                .collect(),
        }
    }

    /// True for the planes that form the non-redundant tight frame: every
    /// high-pass plane plus the deepest low-pass plane.
    pub fn is_frame_plane(&self, level: usize, band: usize) -> bool {
        band != 0 || level == self.levels
    }

    /// Frame energy `sum ||plane||_2^2` over the non-redundant planes; equals
    /// `||u||_2^2` for coefficients produced by [`decompose`].
    pub fn energy(&self) -> f64 {
        let mut acc = 0.0;
        for level in 1..=self.levels {
            for band in 0..self.bands_per_level {
                if self.is_frame_plane(level, band) {
                    let n = self.plane(level, band).norm_l2();
                    acc += n * n;
                }
            }
        }
        acc
    }

    fn same_shape(&self, other: &FrameCoefficients) -> bool {
        self.kind == other.kind
            && self.levels == other.levels
            && self.rows == other.rows
            && self.cols == other.cols
    }

    /// Elementwise combination over all planes of two same-shape coefficient sets.
    pub fn zip_with(
        &self,
        other: &FrameCoefficients,
        f: impl Fn(f64, f64) -> f64 + Copy,
    ) -> Result<FrameCoefficients> {
        if !self.same_shape(other) {
            return Err(Error::shape(
                format!("{}x{} x{} levels", self.rows, self.cols, self.levels),
                format!("{}x{} x{} levels", other.rows, other.cols, other.levels),
            ));
        }
        let planes = self
            .planes
            .iter()
            .zip(&other.planes)
            .map(|(a, b)| a.zip_with(b, f))
            .collect::<Result<Vec<_>>>()?;
        Ok(FrameCoefficients {
            kind: self.kind,
            levels: self.levels,
            bands_per_level: self.bands_per_level,
            rows: self.rows,
            cols: self.cols,
            planes,
        })
    }
}

/// Periodic correlation along rows (axis 0) with a-trous stride.
fn correlate_axis0(input: &Image2D, kernel: &Kernel1D, stride: usize, adjoint: bool) -> Image2D {
    let rows = input.rows();
    let cols = input.cols();
    let mut out = Image2D::zeros(rows, cols);
    let taps = &kernel.taps;
    let origin = kernel.origin as isize;
    let stride = stride as isize;
    let rows_i = rows as isize;
    let sign = if adjoint { -1 } else { 1 };
    exec::for_each_row(out.as_mut_slice(), cols, |i, row_out| {
        for (m, &t) in taps.iter().enumerate() {
            if t == 0.0 {
                continue;
            }
            let offset = sign * (m as isize - origin) * stride;
            let src = (i as isize + offset).rem_euclid(rows_i) as usize;
            let src_row = input.row(src);
            for (o, &s) in row_out.iter_mut().zip(src_row) {
                *o += t * s;
            }
        }
    });
    out
}

/// Periodic correlation along columns (axis 1) with a-trous stride.
fn correlate_axis1(input: &Image2D, kernel: &Kernel1D, stride: usize, adjoint: bool) -> Image2D {
    let rows = input.rows();
    let cols = input.cols();
    let mut out = Image2D::zeros(rows, cols);
    let taps = &kernel.taps;
    let origin = kernel.origin as isize;
    let stride = stride as isize;
    let cols_i = cols as isize;
    let sign = if adjoint { -1 } else { 1 };
    let in_data = input.as_slice();
    exec::for_each_row(out.as_mut_slice(), cols, |i, row_out| {
        let src_row = &in_data[i * cols..(i + 1) * cols];
        for (m, &t) in taps.iter().enumerate() {
            if t == 0.0 {
                continue;
            }
            let offset = sign * (m as isize - origin) * stride;
            // The periodic shift splits each row into two contiguous runs,
            // keeping the inner loops free of index arithmetic.
            let shift = offset.rem_euclid(cols_i) as usize;
            let head = cols - shift;
            for (o, &s) in row_out[..head].iter_mut().zip(&src_row[shift..]) {
                *o += t * s;
            }
            for (o, &s) in row_out[head..].iter_mut().zip(&src_row[..shift]) {
                *o += t * s;
            }
        }
    });
    out
}

/// Element-wise `dst += src`; shapes are the caller's responsibility.
fn accumulate(dst: &mut Image2D, src: &Image2D) {
    dst.as_mut_slice()
        .iter_mut()
        .zip(src.as_slice())
        .for_each(|(d, &s)| *d += s);
}

/// Forward transform: all tensor planes for `levels >= 1` levels.
pub fn decompose(u: &Image2D, bank: &FilterBank, levels: usize) -> Result<FrameCoefficients> {
    if levels == 0 {
        return Err(Error::InvalidArgument(
            "decomposition needs at least one level".into(),
        ));
    }
    if u.is_empty() {
        return Err(Error::InvalidArgument("cannot decompose an empty image".into()));
    }
    let nk = bank.kernels.len();
    let mut planes = Vec::with_capacity(levels * nk * nk);
    let mut low = u.clone();
    for level in 1..=levels {
        let stride = 1usize << (level - 1);
        let base = planes.len();
        for k1 in &bank.kernels {
            let pass0 = correlate_axis0(&low, k1, stride, false);
            for k2 in &bank.kernels {
                planes.push(correlate_axis1(&pass0, k2, stride, false));
            }
        }
        // Band (0, 0) of this level cascades into the next.
        low = planes[base].clone();
    }
    Ok(FrameCoefficients {
        kind: bank.kind,
        levels,
        bands_per_level: nk * nk,
        rows: u.rows(),
        cols: u.cols(),
        planes,
    })
}

/// Adjoint transform `W^T`. For coefficients produced by [`decompose`] this
/// reconstructs the input exactly (tight frame): the deepest low-pass plane is
/// synthesized together with the high-pass planes of each level, telescoping
/// back to level 1. Low-pass planes of shallower levels are redundant cascade
/// copies and do not enter.
pub fn reconstruct(coeffs: &FrameCoefficients, bank: &FilterBank) -> Result<Image2D> {
    if bank.kind != coeffs.kind() {
        return Err(Error::InvalidArgument(format!(
            "coefficients built with the {} bank, reconstructing with {}",
            coeffs.kind().name(),
            bank.kind.name()
        )));
    }
    let nk = bank.kernels.len();
    if coeffs.bands_per_level() != nk * nk {
        return Err(Error::shape(
            format!("{} bands per level", nk * nk),
            format!("{} bands per level", coeffs.bands_per_level()),
        ));
    }
    let mut acc = coeffs.plane(coeffs.levels(), 0).clone();
    for level in (1..=coeffs.levels()).rev() {
        let stride = 1usize << (level - 1);
        let mut out = Image2D::zeros(coeffs.rows(), coeffs.cols());
        for (i1, k1) in bank.kernels.iter().enumerate() {
            // Adjoint of corr1(corr0(u)), factorized: sum the column
            // syntheses of every band sharing this row kernel, then run the
            // row synthesis once over the sum.
            let mut inner = Image2D::zeros(coeffs.rows(), coeffs.cols());
            for (i2, k2) in bank.kernels.iter().enumerate() {
                let band = i1 * nk + i2;
                let plane = if band == 0 { &acc } else { coeffs.plane(level, band) };
                accumulate(&mut inner, &correlate_axis1(plane, k2, stride, true));
            }
            accumulate(&mut out, &correlate_axis0(&inner, k1, stride, true));
        }
        acc = out;
    }
    Ok(acc)
}

/// Max-norm round-trip residual `||W^T W u - u||_inf` over the full impulse
/// basis of a `grid x grid` image. A correct UEP bank stays below 1e-12.
pub fn verify_uep(bank: &FilterBank, levels: usize, grid: usize) -> Result<f64> {
    if grid == 0 {
        return Err(Error::InvalidArgument("grid must be positive".into()));
    }
    let residuals = exec::map_indexed(grid * grid, |idx| {
        let mut u = Image2D::zeros(grid, grid);
        u.as_mut_slice()[idx] = 1.0;
        let coeffs = decompose(&u, bank, levels).expect("valid decompose");
        let back = reconstruct(&coeffs, bank).expect("valid reconstruct");
        back.sub(&u).expect("same shape").norm_inf()
    });
    Ok(residuals.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn banks() -> Vec<FilterBank> {
        vec![
            FilterBank::new(BankKind::Haar),
            FilterBank::new(BankKind::Linear),
            FilterBank::new(BankKind::Cubic),
        ]
    }

    fn test_image(rows: usize, cols: usize, seed: u64) -> Image2D {
        // Small deterministic pseudo-random content.
        let mut v = Vec::with_capacity(rows * cols);
        let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        for _ in 0..rows * cols {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            v.push((state >> 11) as f64 / (1u64 << 53) as f64 - 0.5);
        }
        Image2D::from_vec(rows, cols, v).unwrap()
    }

    #[test]
    fn kernel_values_are_the_spline_framelets() {
        let haar = FilterBank::new(BankKind::Haar);
        assert_eq!(haar.kernels[0].taps, vec![0.5, 0.5]);
        assert_eq!(haar.kernels[1].taps, vec![0.5, -0.5]);
        assert_eq!(haar.order(), 1);

        let linear = FilterBank::new(BankKind::Linear);
        assert_eq!(linear.kernels[2].taps, vec![-0.25, 0.5, -0.25]);
        let s = std::f64::consts::SQRT_2 / 4.0;
        assert_eq!(linear.kernels[1].taps, vec![s, 0.0, -s]);
        assert_eq!(linear.order(), 2);

        let cubic = FilterBank::new(BankKind::Cubic);
        assert_eq!(cubic.order(), 4);
        assert_eq!(
            cubic.kernels[4].taps,
            vec![1.0 / 16.0, -4.0 / 16.0, 6.0 / 16.0, -4.0 / 16.0, 1.0 / 16.0]
        );
    }

    #[test]
    fn squared_symbols_sum_to_one() {
        // UEP on the circle: sum_i |a_i(omega)|^2 = 1 for all omega.
        for bank in banks() {
            for k in 0..64 {
                let omega = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
                let mut total = 0.0;
                for kernel in &bank.kernels {
                    let (mut re, mut im) = (0.0, 0.0);
                    for (m, &t) in kernel.taps.iter().enumerate() {
                        let phase = -(m as f64 - kernel.origin as f64) * omega;
                        re += t * phase.cos();
                        im += t * phase.sin();
                    }
                    total += re * re + im * im;
                }
                assert!(
                    (total - 1.0).abs() < 1e-12,
                    "{} bank fails UEP at omega={omega}: {total}",
                    bank.kind.name()
                );
            }
        }
    }

    #[test]
    fn constant_image_concentrates_in_low_pass() {
        let u = Image2D::constant(16, 16, 3.7);
        let bank = FilterBank::new(BankKind::Haar);
        let c = decompose(&u, &bank, 1).unwrap();
        for v in c.plane(1, 0).as_slice() {
            assert!((v - 3.7).abs() < 1e-12);
        }
        for band in 1..c.bands_per_level() {
            assert!(c.plane(1, band).norm_inf() < 1e-12, "band {band} not zero");
        }
    }

    #[test]
    fn linear_ramp_annihilates_second_difference_band() {
        // u(i, j) = j: away from the periodic seam the band filtered by the
        // second-difference kernel vanishes and the first-difference band is
        // constant.
        let cols = 32;
        let u = Image2D::from_vec(
            8,
            cols,
            (0..8 * cols).map(|idx| (idx % cols) as f64).collect(),
        )
        .unwrap();
        let bank = FilterBank::new(BankKind::Linear);
        let c = decompose(&u, &bank, 1).unwrap();
        // band (0, 1): low along rows, first difference along columns.
        let d1 = c.plane(1, 1);
        // band (0, 2): second difference along columns.
        let d2 = c.plane(1, 2);
        let expect = -std::f64::consts::SQRT_2 / 2.0;
        for i in 0..8 {
            for j in 2..cols - 2 {
                assert!((d1.get(i, j) - expect).abs() < 1e-12, "d1 at {j}");
                assert!(d2.get(i, j).abs() < 1e-12, "d2 at {j}");
            }
        }
    }

    #[test]
    fn perfect_reconstruction_all_banks_two_levels() {
        let u = test_image(16, 16, 9);
        for bank in banks() {
            for levels in 1..=2 {
                let c = decompose(&u, &bank, levels).unwrap();
                let back = reconstruct(&c, &bank).unwrap();
                let err = back.sub(&u).unwrap().norm_inf();
                assert!(
                    err < 1e-10,
                    "{} bank levels {levels}: residual {err}",
                    bank.kind.name()
                );
            }
        }
    }

    #[test]
    fn perfect_reconstruction_on_odd_and_tiny_shapes() {
        for (rows, cols) in [(1usize, 7usize), (3, 5), (2, 2), (5, 1)] {
            let u = test_image(rows, cols, rows as u64 * 31 + cols as u64);
            for bank in banks() {
                let c = decompose(&u, &bank, 2).unwrap();
                let back = reconstruct(&c, &bank).unwrap();
                let err = back.sub(&u).unwrap().norm_inf();
                assert!(err < 1e-10, "{}x{cols} {}: {err}", rows, bank.kind.name());
            }
        }
    }

    #[test]
    fn tight_frame_energy_identity() {
        let u = test_image(24, 24, 5);
        let target = u.norm_l2().powi(2);
        for bank in banks() {
            for levels in 1..=2 {
                let c = decompose(&u, &bank, levels).unwrap();
                let e = c.energy();
                assert!(
                    (e - target).abs() <= 1e-10 * target.max(1.0),
                    "{} levels {levels}: energy {e} vs {target}",
                    bank.kind.name()
                );
            }
        }
    }

    #[test]
    fn impulse_round_trip_is_exact() {
        let bank = FilterBank::new(BankKind::Cubic);
        let mut u = Image2D::zeros(8, 8);
        u.set(3, 5, 1.0);
        let c = decompose(&u, &bank, 2).unwrap();
        let back = reconstruct(&c, &bank).unwrap();
        assert!(back.sub(&u).unwrap().norm_inf() < 1e-12);
    }

    #[test]
    fn transform_commutes_with_circular_shift() {
        let u = test_image(12, 12, 3);
        let (di, dj) = (5usize, 2usize);
        let shifted = {
            let mut s = Image2D::zeros(12, 12);
            for i in 0..12 {
                for j in 0..12 {
                    s.set((i + di) % 12, (j + dj) % 12, u.get(i, j));
                }
            }
            s
        };
        for bank in banks() {
            let cu = decompose(&u, &bank, 2).unwrap();
            let cs = decompose(&shifted, &bank, 2).unwrap();
            for level in 1..=2 {
                for band in 0..cu.bands_per_level() {
                    let a = cu.plane(level, band);
                    let b = cs.plane(level, band);
                    for i in 0..12 {
                        for j in 0..12 {
                            let va = a.get(i, j);
                            let vb = b.get((i + di) % 12, (j + dj) % 12);
                            assert!(
                                (va - vb).abs() < 1e-12,
                                "{} level {level} band {band}",
                                bank.kind.name()
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn decompose_is_linear() {
        let a = test_image(10, 14, 1);
        let b = test_image(10, 14, 2);
        let bank = FilterBank::new(BankKind::Linear);
        let combo = a.zip_with(&b, |x, y| 1.5 * x - 0.25 * y).unwrap();
        let ca = decompose(&a, &bank, 2).unwrap();
        let cb = decompose(&b, &bank, 2).unwrap();
        let cc = decompose(&combo, &bank, 2).unwrap();
        let expect = ca.zip_with(&cb, |x, y| 1.5 * x - 0.25 * y).unwrap();
        for (p, q) in cc.planes().iter().zip(expect.planes()) {
            assert!(p.sub(q).unwrap().norm_inf() < 1e-12);
        }
    }

    #[test]
    fn verify_uep_small_grid() {
        for bank in banks() {
            let r = verify_uep(&bank, 1, 8).unwrap();
            assert!(r < 1e-12, "{}: residual {r}", bank.kind.name());
        }
    }

    #[test]
    fn invalid_arguments_are_rejected() {
        let bank = FilterBank::new(BankKind::Haar);
        let u = Image2D::zeros(8, 8);
        assert!(decompose(&u, &bank, 0).is_err());
        let c = decompose(&u, &bank, 1).unwrap();
        let other = FilterBank::new(BankKind::Linear);
        assert!(reconstruct(&c, &other).is_err());
        assert!(verify_uep(&bank, 1, 0).is_err());
    }
}
