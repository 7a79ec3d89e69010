//! Parametric surface patches embedded in R^3.
//!
//! A [`Surface`] supplies a chart `(u, v) -> R^3` over a finite parameter
//! rectangle together with first and second partial derivatives (analytic
//! overrides or finite-difference defaults) and a Euclidean
//! distance-to-patch query used by ray probes.

use super::{axpy, cross, norm, sub};

/// A smooth parametric surface patch.
///
/// `point` must remain evaluable in a small open neighbourhood of the stated
/// domain: the finite-difference defaults for the partial derivatives poke a
/// few multiples of `1e-4` past the rectangle edges.
pub trait Surface: Sync {
    /// Short identifier used in reports and CSV output.
    fn name(&self) -> &'static str;

    /// Parameter rectangle as `[(u_min, u_max), (v_min, v_max)]`.
    fn domain(&self) -> [(f64, f64); 2];

    /// Chart evaluation.
    fn point(&self, u: f64, v: f64) -> [f64; 3];

    /// First partial in `u` (central difference by default).
    fn partial_u(&self, u: f64, v: f64) -> [f64; 3] {
        const H: f64 = 1e-5;
        scale_diff(self.point(u + H, v), self.point(u - H, v), 2.0 * H)
    }

    /// First partial in `v` (central difference by default).
    fn partial_v(&self, u: f64, v: f64) -> [f64; 3] {
        const H: f64 = 1e-5;
        scale_diff(self.point(u, v + H), self.point(u, v - H), 2.0 * H)
    }

    /// Second partial in `u` (central difference by default).
    fn partial_uu(&self, u: f64, v: f64) -> [f64; 3] {
        const H: f64 = 1e-4;
        second_diff(
            self.point(u + H, v),
            self.point(u, v),
            self.point(u - H, v),
            H,
        )
    }

    /// Mixed second partial (central difference by default).
    fn partial_uv(&self, u: f64, v: f64) -> [f64; 3] {
        const H: f64 = 1e-4;
        let pp = self.point(u + H, v + H);
        let pm = self.point(u + H, v - H);
        let mp = self.point(u - H, v + H);
        let mm = self.point(u - H, v - H);
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (pp[i] - pm[i] - mp[i] + mm[i]) / (4.0 * H * H);
        }
        out
    }

    /// Second partial in `v` (central difference by default).
    fn partial_vv(&self, u: f64, v: f64) -> [f64; 3] {
        const H: f64 = 1e-4;
        second_diff(
            self.point(u, v + H),
            self.point(u, v),
            self.point(u, v - H),
            H,
        )
    }

    /// Euclidean distance from `p` to the patch.
    ///
    /// The default performs a coarse parameter-grid sweep followed by
    /// shrinking local refinements; shipped surfaces override it with exact
    /// formulas where available. The default is deterministic and accurate to
    /// roughly `1e-3` of the domain scale.
    fn distance(&self, p: [f64; 3]) -> f64 {
        nearest_point_search(self, p)
    }
}

fn scale_diff(a: [f64; 3], b: [f64; 3], denom: f64) -> [f64; 3] {
    [
        (a[0] - b[0]) / denom,
        (a[1] - b[1]) / denom,
        (a[2] - b[2]) / denom,
    ]
}

fn second_diff(plus: [f64; 3], mid: [f64; 3], minus: [f64; 3], h: f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (i, o) in out.iter_mut().enumerate() {
        *o = (plus[i] - 2.0 * mid[i] + minus[i]) / (h * h);
    }
    out
}

/// Grid-plus-refinement nearest-point search shared by the `distance` default.
fn nearest_point_search<S: Surface + ?Sized>(surface: &S, q: [f64; 3]) -> f64 {
    let [(u0, u1), (v0, v1)] = surface.domain();
    let coarse = 16usize;
    let mut best = f64::INFINITY;
    let mut bu = u0;
    let mut bv = v0;
    for i in 0..=coarse {
        let u = u0 + (u1 - u0) * i as f64 / coarse as f64;
        for j in 0..=coarse {
            let v = v0 + (v1 - v0) * j as f64 / coarse as f64;
            let d = norm(sub(surface.point(u, v), q));
            if d < best {
                best = d;
                bu = u;
                bv = v;
            }
        }
    }
    let mut hu = (u1 - u0) / coarse as f64;
    let mut hv = (v1 - v0) / coarse as f64;
    for _ in 0..5 {
        let (cu, cv) = (bu, bv);
        for i in 0..=4 {
            let u = (cu - hu + 2.0 * hu * i as f64 / 4.0).clamp(u0, u1);
            for j in 0..=4 {
                let v = (cv - hv + 2.0 * hv * j as f64 / 4.0).clamp(v0, v1);
                let d = norm(sub(surface.point(u, v), q));
                if d < best {
                    best = d;
                    bu = u;
                    bv = v;
                }
            }
        }
        hu /= 4.0;
        hv /= 4.0;
    }
    best
}

/// Unit sphere, charted as a latitude band that stays clear of the poles.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sphere;

impl Surface for Sphere {
    fn name(&self) -> &'static str {
        "sphere"
    }

    fn domain(&self) -> [(f64, f64); 2] {
        [(0.0, std::f64::consts::TAU), (-1.2, 1.2)]
    }

    fn point(&self, u: f64, v: f64) -> [f64; 3] {
        [u.cos() * v.cos(), u.sin() * v.cos(), v.sin()]
    }

    fn partial_u(&self, u: f64, v: f64) -> [f64; 3] {
        [-u.sin() * v.cos(), u.cos() * v.cos(), 0.0]
    }

    fn partial_v(&self, u: f64, v: f64) -> [f64; 3] {
        [-u.cos() * v.sin(), -u.sin() * v.sin(), v.cos()]
    }

    fn partial_uu(&self, u: f64, v: f64) -> [f64; 3] {
        [-u.cos() * v.cos(), -u.sin() * v.cos(), 0.0]
    }

    fn partial_uv(&self, u: f64, v: f64) -> [f64; 3] {
        [u.sin() * v.sin(), -u.cos() * v.sin(), 0.0]
    }

    fn partial_vv(&self, u: f64, v: f64) -> [f64; 3] {
        [-u.cos() * v.cos(), -u.sin() * v.cos(), -v.sin()]
    }

    fn distance(&self, p: [f64; 3]) -> f64 {
        (norm(p) - 1.0).abs()
    }
}

/// Unit-radius circular cylinder wall around the z axis, height `|z| <= 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Cylinder;

impl Surface for Cylinder {
    fn name(&self) -> &'static str {
        "cylinder"
    }

    fn domain(&self) -> [(f64, f64); 2] {
        [(0.0, std::f64::consts::TAU), (-1.0, 1.0)]
    }

    fn point(&self, u: f64, v: f64) -> [f64; 3] {
        [u.cos(), u.sin(), v]
    }

    fn partial_u(&self, u: f64, _v: f64) -> [f64; 3] {
        [-u.sin(), u.cos(), 0.0]
    }

    fn partial_v(&self, _u: f64, _v: f64) -> [f64; 3] {
        [0.0, 0.0, 1.0]
    }

    fn partial_uu(&self, u: f64, _v: f64) -> [f64; 3] {
        [-u.cos(), -u.sin(), 0.0]
    }

    fn partial_uv(&self, _u: f64, _v: f64) -> [f64; 3] {
        [0.0, 0.0, 0.0]
    }

    fn partial_vv(&self, _u: f64, _v: f64) -> [f64; 3] {
        [0.0, 0.0, 0.0]
    }

    fn distance(&self, p: [f64; 3]) -> f64 {
        let radial = p[0].hypot(p[1]) - 1.0;
        let axial = (p[2].abs() - 1.0).max(0.0);
        radial.hypot(axial)
    }
}

/// Doubly ruled saddle `z = u v` over `[-1, 1]^2`; carries a straight line in
/// each coordinate direction through every point.
#[derive(Debug, Clone, Copy, Default)]
pub struct SaddleProduct;

impl Surface for SaddleProduct {
    fn name(&self) -> &'static str {
        "saddle"
    }

    fn domain(&self) -> [(f64, f64); 2] {
        [(-1.0, 1.0), (-1.0, 1.0)]
    }

    fn point(&self, u: f64, v: f64) -> [f64; 3] {
        [u, v, u * v]
    }

    fn partial_u(&self, _u: f64, v: f64) -> [f64; 3] {
        [1.0, 0.0, v]
    }

    fn partial_v(&self, u: f64, _v: f64) -> [f64; 3] {
        [0.0, 1.0, u]
    }

    fn partial_uu(&self, _u: f64, _v: f64) -> [f64; 3] {
        [0.0, 0.0, 0.0]
    }

    fn partial_uv(&self, _u: f64, _v: f64) -> [f64; 3] {
        [0.0, 0.0, 1.0]
    }

    fn partial_vv(&self, _u: f64, _v: f64) -> [f64; 3] {
        [0.0, 0.0, 0.0]
    }
}

/// Saddle `z = u^2 - v^2` over `[-1, 1]^2`; the 45-degree rotation of the
/// product saddle, kept for its convenient hand-computable curvature values.
#[derive(Debug, Clone, Copy, Default)]
pub struct SaddleDifference;

impl Surface for SaddleDifference {
    fn name(&self) -> &'static str {
        "saddle-diff"
    }

    fn domain(&self) -> [(f64, f64); 2] {
        [(-1.0, 1.0), (-1.0, 1.0)]
    }

    fn point(&self, u: f64, v: f64) -> [f64; 3] {
        [u, v, u * u - v * v]
    }

    fn partial_u(&self, u: f64, _v: f64) -> [f64; 3] {
        [1.0, 0.0, 2.0 * u]
    }

    fn partial_v(&self, _u: f64, v: f64) -> [f64; 3] {
        [0.0, 1.0, -2.0 * v]
    }

    fn partial_uu(&self, _u: f64, _v: f64) -> [f64; 3] {
        [0.0, 0.0, 2.0]
    }

    fn partial_uv(&self, _u: f64, _v: f64) -> [f64; 3] {
        [0.0, 0.0, 0.0]
    }

    fn partial_vv(&self, _u: f64, _v: f64) -> [f64; 3] {
        [0.0, 0.0, -2.0]
    }
}

/// Torus of revolution around the z axis.
#[derive(Debug, Clone, Copy)]
pub struct Torus {
    major: f64,
    minor: f64,
}

impl Torus {
    /// A torus with the given major (centre-to-tube) and minor (tube) radii.
    ///
    /// Requires `0 < minor < major` so the surface is embedded.
    pub fn new(major: f64, minor: f64) -> crate::Result<Self> {
        if !(major.is_finite() && minor.is_finite()) || minor <= 0.0 || minor >= major {
            return Err(crate::Error::InvalidArgument(format!(
                "torus radii must satisfy 0 < minor < major, got major={major}, minor={minor}"
            )));
        }
        Ok(Self { major, minor })
    }

    /// The standard test torus: major radius 1, minor radius 0.4.
    pub fn standard() -> Self {
        Self {
            major: 1.0,
            minor: 0.4,
        }
    }

    pub fn major(&self) -> f64 {
        self.major
    }

    pub fn minor(&self) -> f64 {
        self.minor
    }
}

impl Surface for Torus {
    fn name(&self) -> &'static str {
        "torus"
    }

    fn domain(&self) -> [(f64, f64); 2] {
        [
            (0.0, std::f64::consts::TAU),
            (0.0, std::f64::consts::TAU),
        ]
    }

    fn point(&self, u: f64, v: f64) -> [f64; 3] {
        let ring = self.major + self.minor * v.cos();
        [ring * u.cos(), ring * u.sin(), self.minor * v.sin()]
    }

    fn partial_u(&self, u: f64, v: f64) -> [f64; 3] {
        let ring = self.major + self.minor * v.cos();
        [-ring * u.sin(), ring * u.cos(), 0.0]
    }

    fn partial_v(&self, u: f64, v: f64) -> [f64; 3] {
        let r = self.minor;
        [-r * v.sin() * u.cos(), -r * v.sin() * u.sin(), r * v.cos()]
    }

    fn partial_uu(&self, u: f64, v: f64) -> [f64; 3] {
        let ring = self.major + self.minor * v.cos();
        [-ring * u.cos(), -ring * u.sin(), 0.0]
    }

    fn partial_uv(&self, u: f64, v: f64) -> [f64; 3] {
        let r = self.minor;
        [r * v.sin() * u.sin(), -r * v.sin() * u.cos(), 0.0]
    }

    fn partial_vv(&self, u: f64, v: f64) -> [f64; 3] {
        let r = self.minor;
        [-r * v.cos() * u.cos(), -r * v.cos() * u.sin(), -r * v.sin()]
    }

    fn distance(&self, p: [f64; 3]) -> f64 {
        let ring_gap = p[0].hypot(p[1]) - self.major;
        (ring_gap.hypot(p[2]) - self.minor).abs()
    }
}

/// Flat square patch `z = 0` over `[-1, 1]^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Plane;

impl Surface for Plane {
    fn name(&self) -> &'static str {
        "plane"
    }

    fn domain(&self) -> [(f64, f64); 2] {
        [(-1.0, 1.0), (-1.0, 1.0)]
    }

    fn point(&self, u: f64, v: f64) -> [f64; 3] {
        [u, v, 0.0]
    }

    fn partial_u(&self, _u: f64, _v: f64) -> [f64; 3] {
        [1.0, 0.0, 0.0]
    }

    fn partial_v(&self, _u: f64, _v: f64) -> [f64; 3] {
        [0.0, 1.0, 0.0]
    }

    fn partial_uu(&self, _u: f64, _v: f64) -> [f64; 3] {
        [0.0, 0.0, 0.0]
    }

    fn partial_uv(&self, _u: f64, _v: f64) -> [f64; 3] {
        [0.0, 0.0, 0.0]
    }

    fn partial_vv(&self, _u: f64, _v: f64) -> [f64; 3] {
        [0.0, 0.0, 0.0]
    }

    fn distance(&self, p: [f64; 3]) -> f64 {
        let cx = p[0].clamp(-1.0, 1.0);
        let cy = p[1].clamp(-1.0, 1.0);
        norm(sub(p, [cx, cy, 0.0]))
    }
}

/// Unit normal of the chart at `(u, v)`, or `None` where the chart is
/// degenerate (first partials parallel or vanishing).
pub(super) fn unit_normal<S: Surface + ?Sized>(s: &S, u: f64, v: f64) -> Option<[f64; 3]> {
    let pu = s.partial_u(u, v);
    let pv = s.partial_v(u, v);
    let nvec = cross(pu, pv);
    let len = norm(nvec);
    if !len.is_finite() || len <= 1e-12 * (norm(pu) * norm(pv)).max(1e-300) {
        return None;
    }
    Some([nvec[0] / len, nvec[1] / len, nvec[2] / len])
}

/// Evaluation site used by direction probes: a surface point with its normal.
#[derive(Debug, Clone, Copy)]
pub(super) struct Site {
    pub position: [f64; 3],
    pub normal: [f64; 3],
}

/// Regular grid of sites at parameter cell centres, skipping degenerate spots.
pub(super) fn sample_sites<S: Surface + ?Sized>(s: &S, grid: usize) -> Vec<Site> {
    let [(u0, u1), (v0, v1)] = s.domain();
    let mut sites = Vec::with_capacity(grid * grid);
    for i in 0..grid {
        let u = u0 + (u1 - u0) * (i as f64 + 0.5) / grid as f64;
        for j in 0..grid {
            let v = v0 + (v1 - v0) * (j as f64 + 0.5) / grid as f64;
            if let Some(normal) = unit_normal(s, u, v) {
                sites.push(Site {
                    position: s.point(u, v),
                    normal,
                });
            }
        }
    }
    sites
}

#[allow(unused)]
pub(super) fn probe_point(p: [f64; 3], t: f64, w: [f64; 3]) -> [f64; 3] {
    axpy(p, t, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Wraps a surface but hides its analytic derivative and distance
    /// overrides, forcing the trait defaults.
    struct DefaultsOnly<S: Surface>(S);

    impl<S: Surface> Surface for DefaultsOnly<S> {
        fn name(&self) -> &'static str {
            "defaults-only"
        }
        fn domain(&self) -> [(f64, f64); 2] {
            self.0.domain()
        }
        fn point(&self, u: f64, v: f64) -> [f64; 3] {
            self.0.point(u, v)
        }
    }

    fn assert_vec_close(a: [f64; 3], b: [f64; 3], tol: f64, what: &str) {
        for i in 0..3 {
            assert!(
                (a[i] - b[i]).abs() <= tol,
                "{what}: component {i} differs: {} vs {}",
                a[i],
                b[i]
            );
        }
    }

    #[test]
    fn finite_difference_defaults_match_analytic_partials() {
        let sphere = Sphere;
        let torus = Torus::standard();
        let fd_sphere = DefaultsOnly(Sphere);
        let fd_torus = DefaultsOnly(Torus::standard());
        let pts = [(0.4, 0.2), (2.0, -0.7), (5.5, 1.0)];
        for &(u, v) in &pts {
            assert_vec_close(fd_sphere.partial_u(u, v), sphere.partial_u(u, v), 1e-6, "sphere pu");
            assert_vec_close(fd_sphere.partial_v(u, v), sphere.partial_v(u, v), 1e-6, "sphere pv");
            assert_vec_close(fd_sphere.partial_uu(u, v), sphere.partial_uu(u, v), 1e-6, "sphere puu");
            assert_vec_close(fd_sphere.partial_uv(u, v), sphere.partial_uv(u, v), 1e-6, "sphere puv");
            assert_vec_close(fd_sphere.partial_vv(u, v), sphere.partial_vv(u, v), 1e-6, "sphere pvv");
            assert_vec_close(fd_torus.partial_uu(u, v), torus.partial_uu(u, v), 1e-6, "torus puu");
            assert_vec_close(fd_torus.partial_uv(u, v), torus.partial_uv(u, v), 1e-6, "torus puv");
        }
    }

    #[test]
    fn analytic_distance_formulas_give_known_values() {
        assert!((Sphere.distance([2.0, 0.0, 0.0]) - 1.0).abs() < 1e-12);
        assert!((Sphere.distance([0.0, 0.0, 0.0]) - 1.0).abs() < 1e-12);
        assert!(Sphere.distance([0.6, 0.0, 0.8]) < 1e-12);

        assert!((Cylinder.distance([1.5, 0.0, 0.0]) - 0.5).abs() < 1e-12);
        assert!((Cylinder.distance([1.0, 0.0, 2.0]) - 1.0).abs() < 1e-12);
        assert!((Cylinder.distance([0.0, 0.0, 0.0]) - 1.0).abs() < 1e-12);

        let torus = Torus::standard();
        assert!(torus.distance([1.4, 0.0, 0.0]) < 1e-12);
        assert!((torus.distance([2.0, 0.0, 0.0]) - 0.6).abs() < 1e-12);
        assert!((torus.distance([0.0, 0.0, 0.0]) - 0.6).abs() < 1e-12);

        assert!((Plane.distance([0.5, -0.25, 0.3]) - 0.3).abs() < 1e-12);
        assert!((Plane.distance([2.0, 0.0, 0.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn default_distance_search_matches_analytic_distance() {
        let fd = DefaultsOnly(Sphere);
        let probes = [
            [0.6, 0.0, 0.8],
            [0.0, 1.3, 0.0],
            [0.5, 0.5, -0.2],
            [1.8, -0.4, 0.1],
        ];
        for q in probes {
            let exact = Sphere.distance(q);
            let approx = fd.distance(q);
            assert!(
                (exact - approx).abs() < 2e-3,
                "search {approx} vs exact {exact} at {q:?}"
            );
        }

        // The saddle relies on the default search; on-surface points must
        // report (near) zero and offsets along the normal their offset size.
        let saddle = SaddleProduct;
        let (u, v) = (0.3, -0.5);
        let p = saddle.point(u, v);
        assert!(saddle.distance(p) < 1e-3, "on-surface distance not ~0");
        let n = unit_normal(&saddle, u, v).unwrap();
        let q = axpy(p, 0.25, n);
        assert!(
            (saddle.distance(q) - 0.25).abs() < 2e-3,
            "normal offset distance {}",
            saddle.distance(q)
        );
    }

    #[test]
    fn torus_constructor_validates_radii() {
        assert!(Torus::new(1.0, 0.4).is_ok());
        assert!(Torus::new(0.4, 1.0).is_err());
        assert!(Torus::new(1.0, 0.0).is_err());
        assert!(Torus::new(f64::NAN, 0.1).is_err());
    }

    #[test]
    fn site_sampling_skips_degenerate_charts() {
        struct Collapsed;
        impl Surface for Collapsed {
            fn name(&self) -> &'static str {
                "collapsed"
            }
            fn domain(&self) -> [(f64, f64); 2] {
                [(-1.0, 1.0), (-1.0, 1.0)]
            }
            fn point(&self, u: f64, v: f64) -> [f64; 3] {
                [u + v, u + v, 0.0]
            }
        }
        assert!(sample_sites(&Collapsed, 8).is_empty());
        assert_eq!(sample_sites(&Sphere, 8).len(), 64);
    }
}
