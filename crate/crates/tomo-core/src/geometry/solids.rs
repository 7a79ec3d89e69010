//! Exact thickness projections of simple solids and jump detection.
//!
//! A parallel projection of a solid assigns to each detector pixel the length
//! of the intersection between the solid and the ray through that pixel. For
//! axis-aligned boxes (slab intersection) and balls (chord length) this is
//! available in closed form, which makes the projections ideal probes for
//! studying how discontinuities behave under detector refinement: thickness
//! profiles are continuous across silhouettes that are tangent to the ray
//! bundle and jump exactly where the boundary contains ray segments.

use super::{axpy, cross, dot, norm};
use crate::error::{Error, Result};
use crate::exec;
use crate::image::Image2D;

/// A solid with an exact ray-thickness function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Solid {
    /// Axis-aligned cube centred at the origin.
    Cube { side: f64 },
    /// Ball centred at the origin.
    Ball { radius: f64 },
}

impl Solid {
    fn validate(&self) -> Result<()> {
        let (value, label) = match self {
            Solid::Cube { side } => (*side, "cube side"),
            Solid::Ball { radius } => (*radius, "ball radius"),
        };
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "{label} must be positive and finite, got {value}"
            )));
        }
        Ok(())
    }

    /// Length of the intersection of the line `origin + t * dir` with the
    /// solid. `dir` must be a unit vector.
    pub fn thickness(&self, origin: [f64; 3], dir: [f64; 3]) -> f64 {
        match *self {
            Solid::Cube { side } => {
                let half = 0.5 * side;
                let mut t_lo = f64::NEG_INFINITY;
                let mut t_hi = f64::INFINITY;
                for axis in 0..3 {
                    let o = origin[axis];
                    let d = dir[axis];
                    if d.abs() < 1e-15 {
                        if o.abs() > half {
                            return 0.0;
                        }
                    } else {
                        let a = (-half - o) / d;
                        let b = (half - o) / d;
                        t_lo = t_lo.max(a.min(b));
                        t_hi = t_hi.min(a.max(b));
                    }
                }
                (t_hi - t_lo).max(0.0)
            }
            Solid::Ball { radius } => {
                // Squared distance of the line to the centre.
                let along = dot(origin, dir);
                let d2 = dot(origin, origin) - along * along;
                2.0 * (radius * radius - d2).max(0.0).sqrt()
            }
        }
    }
}

/// Exact parallel projection of `solid` along `direction` onto a square
/// detector plane through the origin.
///
/// The detector covers `[-half_span, half_span]^2` with `rows x cols` pixels
/// sampled at pixel centres; rows and columns follow a right-handed
/// orthonormal frame perpendicular to the (normalized) direction.
pub fn solid_projection(
    solid: &Solid,
    direction: [f64; 3],
    rows: usize,
    cols: usize,
    half_span: f64,
) -> Result<Image2D> {
    solid.validate()?;
    if rows < 2 || cols < 2 {
        return Err(Error::InvalidArgument(format!(
            "projection grid must be at least 2x2, got {rows}x{cols}"
        )));
    }
    if !(half_span.is_finite() && half_span > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "half_span must be positive and finite, got {half_span}"
        )));
    }
    if direction.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("projection direction"));
    }
    let len = norm(direction);
    if len <= 1e-12 {
        return Err(Error::InvalidArgument(
            "projection direction must be nonzero".into(),
        ));
    }
    let w = [direction[0] / len, direction[1] / len, direction[2] / len];
    // Deterministic detector frame: seed with whichever coordinate axis is
    // least aligned with the direction.
    let helper = if w[2].abs() < 0.9 {
        [0.0, 0.0, 1.0]
    } else {
        [1.0, 0.0, 0.0]
    };
    let e1 = {
        let c = cross(helper, w);
        let n = norm(c);
        [c[0] / n, c[1] / n, c[2] / n]
    };
    let e2 = cross(w, e1);

    let spacing_r = 2.0 * half_span / rows as f64;
    let spacing_c = 2.0 * half_span / cols as f64;
    let data = exec::map_indexed(rows * cols, |idx| {
        let i = idx / cols;
        let j = idx % cols;
        let b = (i as f64 + 0.5) * spacing_r - half_span;
        let a = (j as f64 + 0.5) * spacing_c - half_span;
        let origin = axpy(
            [a * e1[0], a * e1[1], a * e1[2]],
            b,
            e2,
        );
        solid.thickness(origin, w)
    });
    Image2D::from_vec(rows, cols, data)
}

/// Largest absolute difference between 4-neighbours and the number of
/// neighbour pairs whose difference exceeds a threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpStats {
    /// Number of adjacent pixel pairs with `|difference| > threshold`.
    pub count: usize,
    /// Largest adjacent-pixel absolute difference in the image.
    pub max_jump: f64,
}

/// Scans horizontal and vertical neighbour pairs of `img` for jumps.
pub fn detect_jumps(img: &Image2D, threshold: f64) -> Result<JumpStats> {
    if !(threshold.is_finite() && threshold >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "jump threshold must be non-negative and finite, got {threshold}"
        )));
    }
    let (rows, cols) = (img.rows(), img.cols());
    let mut count = 0usize;
    let mut max_jump = 0.0f64;
    for i in 0..rows {
        for j in 0..cols {
            let here = img.get(i, j);
            if j + 1 < cols {
                let d = (img.get(i, j + 1) - here).abs();
                max_jump = max_jump.max(d);
                if d > threshold {
                    count += 1;
                }
            }
            if i + 1 < rows {
                let d = (img.get(i + 1, j) - here).abs();
                max_jump = max_jump.max(d);
                if d > threshold {
                    count += 1;
                }
            }
        }
    }
    Ok(JumpStats { count, max_jump })
}
