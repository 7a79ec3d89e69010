//! Differential geometry of surface patches and its imaging consequences.
//!
//! Provides second-fundamental-form curvature data with a four-way point
//! classification, the zero-curvature (asymptotic) directions at a point,
//! a sampled measure of singular projection directions, and exact thickness
//! projections of simple solids together with a jump detector for projection
//! images.

mod fraction;
mod solids;
mod surfaces;

pub use fraction::{fraction_ladder, singular_direction_fraction, FractionConfig};
pub use solids::{detect_jumps, solid_projection, JumpStats, Solid};
pub use surfaces::{
    Cylinder, Plane, SaddleDifference, SaddleProduct, Sphere, Surface, Torus,
};

use crate::error::{Error, Result};

/// Tolerance used when classifying second-fundamental-form determinants and
/// entries. Ties resolve toward the more degenerate class.
pub const CLASS_TOL: f64 = 1e-8;

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// `p + t * w`.
pub(crate) fn axpy(p: [f64; 3], t: f64, w: [f64; 3]) -> [f64; 3] {
    [p[0] + t * w[0], p[1] + t * w[1], p[2] + t * w[2]]
}

fn unit(a: [f64; 3]) -> Option<[f64; 3]> {
    let len = norm(a);
    if !len.is_finite() || len <= 1e-300 {
        return None;
    }
    Some([a[0] / len, a[1] / len, a[2] / len])
}

/// Local shape type of a surface point, by the sign structure of the second
/// fundamental form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointClass {
    /// Positive-definite (or negative-definite) second form: locally convex.
    Elliptic,
    /// Rank-one second form: one curvature direction is flat.
    Parabolic,
    /// Indefinite second form: two real asymptotic directions.
    Hyperbolic,
    /// Vanishing second form: flat to second order in every direction.
    Flat,
}

impl PointClass {
    pub fn name(&self) -> &'static str {
        match self {
            PointClass::Elliptic => "elliptic",
            PointClass::Parabolic => "parabolic",
            PointClass::Hyperbolic => "hyperbolic",
            PointClass::Flat => "flat",
        }
    }
}

/// Curvature summary of a surface point: both fundamental forms, the unit
/// normal, principal curvatures/directions, and the point class.
#[derive(Debug, Clone)]
pub struct CurvatureData {
    /// First fundamental form coefficients.
    pub e: f64,
    pub f: f64,
    pub g: f64,
    /// Second fundamental form coefficients.
    pub l: f64,
    pub m: f64,
    pub n: f64,
    /// Unit normal of the chart orientation.
    pub normal: [f64; 3],
    /// Principal curvatures, ordered `k1 >= k2`.
    pub k1: f64,
    pub k2: f64,
    /// Unit principal directions in ambient coordinates; `v1` belongs to `k1`.
    pub v1: [f64; 3],
    pub v2: [f64; 3],
    pub class: PointClass,
}

impl CurvatureData {
    /// Gaussian curvature `k1 * k2`.
    pub fn gaussian(&self) -> f64 {
        self.k1 * self.k2
    }

    /// Sum of the principal curvatures (twice the usual mean curvature).
    pub fn curvature_sum(&self) -> f64 {
        self.k1 + self.k2
    }

    /// Normal curvature of the tangent direction `w` (Euler's formula).
    ///
    /// `w` is projected onto the principal frame; it should have a
    /// non-negligible tangential component.
    pub fn normal_curvature(&self, w: [f64; 3]) -> f64 {
        let c1 = dot(w, self.v1);
        let c2 = dot(w, self.v2);
        let den = (c1 * c1 + c2 * c2).max(1e-300);
        (self.k1 * c1 * c1 + self.k2 * c2 * c2) / den
    }
}

/// Zero-curvature (asymptotic) tangent directions at a classified point.
#[derive(Debug, Clone, PartialEq)]
pub enum NullDirections {
    /// Elliptic point: no tangent direction has zero normal curvature.
    Empty,
    /// Flat point: every tangent direction is a zero-curvature direction.
    All,
    /// Parabolic point: the single flat principal direction (up to sign).
    Line([f64; 3]),
    /// Hyperbolic point: the two independent asymptotic directions.
    Pair([[f64; 3]; 2]),
}

/// Computes both fundamental forms and principal curvature data at `(u, v)`.
///
/// The principal curvatures solve the generalized eigenproblem
/// `II w = k I w`; the returned ambient directions `v1`, `v2` are unit length
/// and mutually orthogonal. Fails on non-finite inputs and on degenerate
/// charts (parallel or vanishing first partials).
pub fn second_fundamental_form(surface: &dyn Surface, u: f64, v: f64) -> Result<CurvatureData> {
    if !(u.is_finite() && v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "chart parameters must be finite, got ({u}, {v})"
        )));
    }
    let pu = surface.partial_u(u, v);
    let pv = surface.partial_v(u, v);
    let nvec = cross(pu, pv);
    let nlen = norm(nvec);
    if !nlen.is_finite() || nlen <= 1e-12 * (norm(pu) * norm(pv)).max(1e-300) {
        return Err(Error::InvalidGeometry(format!(
            "degenerate chart at ({u}, {v}): first partials are parallel or vanish"
        )));
    }
    let normal = [nvec[0] / nlen, nvec[1] / nlen, nvec[2] / nlen];

    let e = dot(pu, pu);
    let f = dot(pu, pv);
    let g = dot(pv, pv);
    let l = dot(normal, surface.partial_uu(u, v));
    let m = dot(normal, surface.partial_uv(u, v));
    let n = dot(normal, surface.partial_vv(u, v));
    if [e, f, g, l, m, n].iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("fundamental form coefficient"));
    }

    // det(II - k I) = 0 expands to a quadratic in k.
    let a = e * g - f * f;
    if !(a > 0.0) {
        return Err(Error::InvalidGeometry(format!(
            "first fundamental form is not positive definite at ({u}, {v})"
        )));
    }
    let b = l * g - 2.0 * m * f + n * e;
    let c = l * n - m * m;
    let sq = (b * b - 4.0 * a * c).max(0.0).sqrt();
    let k1 = (b + sq) / (2.0 * a);
    let k2 = (b - sq) / (2.0 * a);

    let v1 = principal_direction(pu, pv, (e, f, g), (l, m, n), k1)
        .or_else(|| unit(pu))
        .ok_or_else(|| Error::InvalidGeometry("no principal direction".into()))?;
    // The second principal direction is tangent and orthogonal to the first.
    let v2 = unit(cross(normal, v1))
        .ok_or_else(|| Error::InvalidGeometry("no principal direction".into()))?;

    let class = classify(l, m, n, c);
    Ok(CurvatureData {
        e,
        f,
        g,
        l,
        m,
        n,
        normal,
        k1,
        k2,
        v1,
        v2,
        class,
    })
}

/// Chart-coordinate eigenvector of `(II - k I)`, mapped to a unit ambient
/// vector. Returns `None` at (near-)umbilic points where the eigenvector is
/// not isolated.
fn principal_direction(
    pu: [f64; 3],
    pv: [f64; 3],
    (e, f, g): (f64, f64, f64),
    (l, m, n): (f64, f64, f64),
    k: f64,
) -> Option<[f64; 3]> {
    let r1 = (l - k * e, m - k * f);
    let r2 = (m - k * f, n - k * g);
    let n1 = r1.0.hypot(r1.1);
    let n2 = r2.0.hypot(r2.1);
    let scale = [l.abs(), m.abs(), n.abs(), k.abs() * e, k.abs() * g, 1.0]
        .into_iter()
        .fold(0.0f64, f64::max);
    if n1.max(n2) <= 1e-10 * scale {
        return None;
    }
    let (wu, wv) = if n1 >= n2 {
        (-r1.1, r1.0)
    } else {
        (-r2.1, r2.0)
    };
    unit([
        wu * pu[0] + wv * pv[0],
        wu * pu[1] + wv * pv[1],
        wu * pu[2] + wv * pv[2],
    ])
}

fn classify(l: f64, m: f64, n: f64, det: f64) -> PointClass {
    if l.abs() <= CLASS_TOL && m.abs() <= CLASS_TOL && n.abs() <= CLASS_TOL {
        PointClass::Flat
    } else if det.abs() <= CLASS_TOL {
        PointClass::Parabolic
    } else if det > 0.0 {
        PointClass::Elliptic
    } else {
        PointClass::Hyperbolic
    }
}

/// The tangent directions with zero normal curvature at a classified point.
///
/// Elliptic points have none, flat points have all, parabolic points exactly
/// the flat principal direction, and hyperbolic points the two asymptotic
/// directions 'sqrt(|k2|) v1 +- sqrt(|k1|) v2' (normalized).
pub fn zero_curvature_directions(data: &CurvatureData) -> NullDirections {
    match data.class {
        PointClass::Elliptic => NullDirections::Empty,
        PointClass::Flat => NullDirections::All,
        PointClass::Parabolic => {
            let dir = if data.k1.abs() <= data.k2.abs() {
                data.v1
            } else {
                data.v2
            };
            NullDirections::Line(dir)
        }
        PointClass::Hyperbolic => {
            let total = data.k1.abs() + data.k2.abs();
            let cu = (data.k2.abs() / total).sqrt();
            let sv = (data.k1.abs() / total).sqrt();
            let w_plus = [
                cu * data.v1[0] + sv * data.v2[0],
                cu * data.v1[1] + sv * data.v2[1],
                cu * data.v1[2] + sv * data.v2[2],
            ];
            let w_minus = [
                cu * data.v1[0] - sv * data.v2[0],
                cu * data.v1[1] - sv * data.v2[1],
                cu * data.v1[2] - sv * data.v2[2],
            ];
            NullDirections::Pair([w_plus, w_minus])
        }
    }
}
