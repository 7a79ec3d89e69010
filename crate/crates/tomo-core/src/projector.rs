//! Parallel-beam and fan-beam projection.
//!
//! Discrete projectors march each ray through the image with a step of half
//! the pixel spacing, accumulating bilinear samples (Joseph-style line
//! integration). Analytic counterparts evaluate exact ellipse chords via
//! [`crate::phantom`] and serve as the projector oracle and the clean-data
//! source for experiments.
//!
//! Conventions: a parallel view at angle `theta` has detector axis
//! `w = (cos theta, sin theta)` and ray direction `w_perp = (-sin theta,
//! cos theta)`; the ray with signed offset `s` is `{s w + t w_perp}`. A fan
//! view places the source at `R (cos beta, sin beta)` with a flat detector
//! line through the origin perpendicular to the central ray; the detector
//! coordinate runs along `(-sin beta, cos beta)`. Detector offsets are
//! centered: `s_k = (k - (n-1)/2) * spacing`.

use crate::error::{Error, Result};
use crate::exec;
use crate::image::Image2D;
use crate::phantom::EllipsePhantom;

/// Circumradius of the `[-1, 1]^2` world square; rays are clipped slightly
/// beyond it and any image content lies inside it.
const WORLD_RADIUS: f64 = std::f64::consts::SQRT_2;

/// How much wider than the support diameter the detector line spans in the
/// `covering` constructors.
const COVER_FACTOR: f64 = 1.1;

/// Parallel-beam acquisition geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelGeometry {
    /// View angles in radians, strictly increasing, within `[0, 2*pi)`.
    /// A non-redundant scan uses `[0, pi)`.
    pub angles: Vec<f64>,
    pub n_detectors: usize,
    /// Detector pitch in world units.
    pub detector_spacing: f64,
}

impl ParallelGeometry {
    pub fn new(angles: Vec<f64>, n_detectors: usize, detector_spacing: f64) -> Result<Self> {
        validate_angles(&angles)?;
        validate_detectors(n_detectors, detector_spacing)?;
        Ok(ParallelGeometry {
            angles,
            n_detectors,
            detector_spacing,
        })
    }

    /// Uniform angles over `[0, pi)` with the detector line spanning the
    /// support diameter times 1.1.
    pub fn covering(n_angles: usize, n_detectors: usize, support_radius: f64) -> Result<Self> {
        if support_radius <= 0.0 || !support_radius.is_finite() {
            return Err(Error::InvalidArgument(
                "support radius must be positive and finite".into(),
            ));
        }
        let angles = uniform_angles(n_angles, std::f64::consts::PI)?;
        let spacing = 2.0 * COVER_FACTOR * support_radius / n_detectors as f64;
        ParallelGeometry::new(angles, n_detectors, spacing)
    }

    /// Signed offset of detector `k`.
    pub fn offset(&self, k: usize) -> f64 {
        (k as f64 - (self.n_detectors as f64 - 1.0) / 2.0) * self.detector_spacing
    }

    pub fn n_angles(&self) -> usize {
        self.angles.len()
    }
}

/// Fan-beam acquisition geometry with a flat detector through the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct FanGeometry {
    /// Source orbit radius in world units.
    pub source_radius: f64,
    /// Source angles in radians, strictly increasing, within `[0, 2*pi)`.
    pub angles: Vec<f64>,
    pub n_detectors: usize,
    /// Detector pitch along the flat detector line, world units.
    pub detector_spacing: f64,
}

impl FanGeometry {
    pub fn new(
        source_radius: f64,
        angles: Vec<f64>,
        n_detectors: usize,
        detector_spacing: f64,
    ) -> Result<Self> {
        if !(source_radius.is_finite() && source_radius > 0.0) {
            return Err(Error::InvalidGeometry(
                "source radius must be positive and finite".into(),
            ));
        }
        validate_angles(&angles)?;
        validate_detectors(n_detectors, detector_spacing)?;
        Ok(FanGeometry {
            source_radius,
            angles,
            n_detectors,
            detector_spacing,
        })
    }

    /// Uniform source angles over `[0, 2*pi)`, detector sized so the rebinned
    /// parallel offsets cover the support diameter times 1.1.
    pub fn covering(
        n_angles: usize,
        n_detectors: usize,
        source_radius: f64,
        support_radius: f64,
    ) -> Result<Self> {
        let s_cov = COVER_FACTOR * support_radius;
        if !(source_radius > s_cov) {
            return Err(Error::InvalidGeometry(format!(
                "source radius {source_radius} must exceed covered offset {s_cov}"
            )));
        }
        let angles = uniform_angles(n_angles, 2.0 * std::f64::consts::PI)?;
        // Flat-detector coordinate whose rebinned parallel offset equals s_cov.
        let p_max = source_radius * s_cov / (source_radius.powi(2) - s_cov.powi(2)).sqrt();
        let spacing = 2.0 * p_max / n_detectors as f64;
        FanGeometry::new(source_radius, angles, n_detectors, spacing)
    }

    /// Signed flat-detector coordinate of detector `k`.
    pub fn offset(&self, k: usize) -> f64 {
        (k as f64 - (self.n_detectors as f64 - 1.0) / 2.0) * self.detector_spacing
    }

    pub fn n_angles(&self) -> usize {
        self.angles.len()
    }
}

fn uniform_angles(n: usize, span: f64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidGeometry("need at least one view angle".into()));
    }
    Ok((0..n).map(|i| i as f64 * span / n as f64).collect())
}

fn validate_angles(angles: &[f64]) -> Result<()> {
    if angles.is_empty() {
        return Err(Error::InvalidGeometry("need at least one view angle".into()));
    }
    let full = 2.0 * std::f64::consts::PI;
    for w in angles.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidGeometry(
                "view angles must be strictly increasing".into(),
            ));
        }
    }
    if angles.iter().any(|&a| !a.is_finite() || a < 0.0 || a >= full) {
        return Err(Error::InvalidGeometry(format!(
            "view angles must lie in [0, {full})"
        )));
    }
    Ok(())
}

fn validate_detectors(n: usize, spacing: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidGeometry("need at least one detector".into()));
    }
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::InvalidGeometry(
            "detector spacing must be positive and finite".into(),
        ));
    }
    Ok(())
}

/// Parallel-beam sinogram: row `i` holds the view at `geometry.angles[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    pub geometry: ParallelGeometry,
    pub data: Image2D,
}

/// Fan-beam sinogram: row `i` holds the fan at source angle `geometry.angles[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FanSinogram {
    pub geometry: FanGeometry,
    pub data: Image2D,
}

impl Sinogram {
    pub fn new(geometry: ParallelGeometry, data: Image2D) -> Result<Self> {
        if data.rows() != geometry.n_angles() || data.cols() != geometry.n_detectors {
            return Err(Error::shape(
                format!("{}x{}", geometry.n_angles(), geometry.n_detectors),
                format!("{}x{}", data.rows(), data.cols()),
            ));
        }
        Ok(Sinogram { geometry, data })
    }

    /// Same geometry, new sample matrix (shape-checked).
    pub fn with_data(&self, data: Image2D) -> Result<Self> {
        Sinogram::new(self.geometry.clone(), data)
    }
}

impl FanSinogram {
    pub fn new(geometry: FanGeometry, data: Image2D) -> Result<Self> {
        if data.rows() != geometry.n_angles() || data.cols() != geometry.n_detectors {
            return Err(Error::shape(
                format!("{}x{}", geometry.n_angles(), geometry.n_detectors),
                format!("{}x{}", data.rows(), data.cols()),
            ));
        }
        Ok(FanSinogram { geometry, data })
    }

    pub fn with_data(&self, data: Image2D) -> Result<Self> {
        FanSinogram::new(self.geometry.clone(), data)
    }
}

/// Sums bilinear samples along `origin + t dir` (unit `dir`) over the part of
/// the ray inside the clipping circle. The nominal step is refined so an
/// integer number of midpoint samples exactly tiles the clipped interval.
fn march_ray(img: &Image2D, origin: (f64, f64), dir: (f64, f64), step: f64) -> f64 {
    let r_clip = WORLD_RADIUS + step;
    // Solve |origin + t dir|^2 = r_clip^2 for the in-circle parameter range.
    let b = origin.0 * dir.0 + origin.1 * dir.1;
    let c = origin.0 * origin.0 + origin.1 * origin.1 - r_clip * r_clip;
    let disc = b * b - c;
    if disc <= 0.0 {
        return 0.0;
    }
    let sq = disc.sqrt();
    let t0 = -b - sq;
    let t1 = -b + sq;
    let len = t1 - t0;
    let n = (len / step).ceil().max(1.0);
    let h = len / n;
    let mut acc = 0.0;
    for k in 0..n as usize {
        let t = t0 + (k as f64 + 0.5) * h;
        acc += img.sample_world(origin.0 + t * dir.0, origin.1 + t * dir.1);
    }
    acc * h
}

/// Discrete line integral of an image along a single parallel-parameterized
/// ray: the line through `offset * (cos angle, sin angle)` with direction
/// `(-sin angle, cos angle)`. Uses the same marching rule as the sinogram
/// projectors, so a full-geometry projection and per-ray calls agree exactly.
///
/// Unlike the sinogram projectors this does not scan the image for non-finite
/// values; callers looping over many rays should validate the image once.
pub fn line_integral(img: &Image2D, angle: f64, offset: f64) -> Result<f64> {
    if !angle.is_finite() || !offset.is_finite() {
        return Err(Error::InvalidArgument(
            "ray angle and offset must be finite".into(),
        ));
    }
    let step = img.pixel_spacing() / 2.0;
    let (sin_t, cos_t) = angle.sin_cos();
    Ok(march_ray(
        img,
        (offset * cos_t, offset * sin_t),
        (-sin_t, cos_t),
        step,
    ))
}

/// Discrete parallel projection of an image.
pub fn parallel_project(img: &Image2D, geom: &ParallelGeometry) -> Result<Sinogram> {
    if img.has_non_finite() {
        return Err(Error::NonFinite("projection input image"));
    }
    let step = img.pixel_spacing() / 2.0;
    let mut data = Image2D::zeros(geom.n_angles(), geom.n_detectors);
    let angles = geom.angles.clone();
    let n_det = geom.n_detectors;
    let spacing = geom.detector_spacing;
    exec::for_each_row(data.as_mut_slice(), n_det, |i, row| {
        let (sin_t, cos_t) = angles[i].sin_cos();
        let dir = (-sin_t, cos_t);
        for (k, out) in row.iter_mut().enumerate() {
            let s = (k as f64 - (n_det as f64 - 1.0) / 2.0) * spacing;
            let origin = (s * cos_t, s * sin_t);
            *out = march_ray(img, origin, dir, step);
        }
    });
    Sinogram::new(geom.clone(), data)
}

/// Discrete fan projection of an image. The source orbit must lie outside the
/// image support circle.
pub fn fan_project(img: &Image2D, geom: &FanGeometry) -> Result<FanSinogram> {
    if img.has_non_finite() {
        return Err(Error::NonFinite("projection input image"));
    }
    if geom.source_radius <= WORLD_RADIUS {
        return Err(Error::InvalidGeometry(format!(
            "source radius {} must exceed the image support radius {WORLD_RADIUS}",
            geom.source_radius
        )));
    }
    let step = img.pixel_spacing() / 2.0;
    let mut data = Image2D::zeros(geom.n_angles(), geom.n_detectors);
    let angles = geom.angles.clone();
    let n_det = geom.n_detectors;
    let spacing = geom.detector_spacing;
    let radius = geom.source_radius;
    exec::for_each_row(data.as_mut_slice(), n_det, |i, row| {
        let (sin_b, cos_b) = angles[i].sin_cos();
        let source = (radius * cos_b, radius * sin_b);
        for (k, out) in row.iter_mut().enumerate() {
            let p = (k as f64 - (n_det as f64 - 1.0) / 2.0) * spacing;
            let det = (-p * sin_b, p * cos_b);
            let dir = (det.0 - source.0, det.1 - source.1);
            let norm = (dir.0 * dir.0 + dir.1 * dir.1).sqrt();
            let dir = (dir.0 / norm, dir.1 / norm);
            *out = march_ray(img, source, dir, step);
        }
    });
    FanSinogram::new(geom.clone(), data)
}

/// Exact parallel sinogram of an ellipse phantom.
pub fn analytic_parallel_sinogram(
    phantom: &EllipsePhantom,
    geom: &ParallelGeometry,
) -> Result<Sinogram> {
    let mut data = Image2D::zeros(geom.n_angles(), geom.n_detectors);
    let angles = geom.angles.clone();
    let n_det = geom.n_detectors;
    let spacing = geom.detector_spacing;
    let rows: Vec<Vec<f64>> = exec::map_indexed(angles.len(), |i| {
        let (sin_t, cos_t) = angles[i].sin_cos();
        let dir = (-sin_t, cos_t);
        (0..n_det)
            .map(|k| {
                let s = (k as f64 - (n_det as f64 - 1.0) / 2.0) * spacing;
                phantom
                    .line_integral((s * cos_t, s * sin_t), dir)
                    .expect("unit direction")
            })
            .collect()
    });
    for (i, row) in rows.into_iter().enumerate() {
        for (k, v) in row.into_iter().enumerate() {
            data.set(i, k, v);
        }
    }
    Sinogram::new(geom.clone(), data)
}

/// Exact fan sinogram of an ellipse phantom (half-line integrals from the
/// source). The source orbit must lie outside the phantom support.
pub fn analytic_fan_sinogram(phantom: &EllipsePhantom, geom: &FanGeometry) -> Result<FanSinogram> {
    if geom.source_radius <= phantom.support_radius() {
        return Err(Error::InvalidGeometry(format!(
            "source radius {} must exceed the phantom support radius {}",
            geom.source_radius,
            phantom.support_radius()
        )));
    }
    let mut data = Image2D::zeros(geom.n_angles(), geom.n_detectors);
    let angles = geom.angles.clone();
    let n_det = geom.n_detectors;
    let spacing = geom.detector_spacing;
    let radius = geom.source_radius;
    let rows: Vec<Vec<f64>> = exec::map_indexed(angles.len(), |i| {
        let (sin_b, cos_b) = angles[i].sin_cos();
        let source = (radius * cos_b, radius * sin_b);
        (0..n_det)
            .map(|k| {
                let p = (k as f64 - (n_det as f64 - 1.0) / 2.0) * spacing;
                let det = (-p * sin_b, p * cos_b);
                phantom
                    .half_line_integral(source, (det.0 - source.0, det.1 - source.1))
                    .expect("nonzero direction")
            })
            .collect()
    });
    for (i, row) in rows.into_iter().enumerate() {
        for (k, v) in row.into_iter().enumerate() {
            data.set(i, k, v);
        }
    }
    FanSinogram::new(geom.clone(), data)
}

// ---- Geometry sidecar ------------------------------------------------------

/// Either acquisition geometry, as stored in a sidecar header.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyGeometry {
    Parallel(ParallelGeometry),
    Fan(FanGeometry),
}

/// Serializes a geometry to `key=value` sidecar text. Only the uniform grids
/// produced by the `covering`/`uniform` constructors are representable:
/// parallel angles spread over `[0, pi)`, fan angles over `[0, 2*pi)`.
pub fn geometry_to_sidecar(geom: &AnyGeometry) -> Result<String> {
    let mut out = String::new();
    match geom {
        AnyGeometry::Parallel(g) => {
            check_uniform(&g.angles, std::f64::consts::PI)?;
            out.push_str("kind=parallel\n");
            out.push_str(&format!("n_angles={}\n", g.n_angles()));
            out.push_str(&format!("n_detectors={}\n", g.n_detectors));
            out.push_str(&format!("spacing={}\n", g.detector_spacing));
        }
        AnyGeometry::Fan(g) => {
            check_uniform(&g.angles, 2.0 * std::f64::consts::PI)?;
            out.push_str("kind=fan\n");
            out.push_str(&format!("n_angles={}\n", g.n_angles()));
            out.push_str(&format!("n_detectors={}\n", g.n_detectors));
            out.push_str(&format!("spacing={}\n", g.detector_spacing));
            out.push_str(&format!("source_radius={}\n", g.source_radius));
        }
    }
    Ok(out)
}

fn check_uniform(angles: &[f64], span: f64) -> Result<()> {
    let n = angles.len();
    for (i, &a) in angles.iter().enumerate() {
        let expect = i as f64 * span / n as f64;
        if (a - expect).abs() > 1e-9 {
            return Err(Error::InvalidGeometry(
                "only uniform default angle grids can be written to a sidecar".into(),
            ));
        }
    }
    Ok(())
}

/// Parses sidecar text produced by [`geometry_to_sidecar`].
pub fn geometry_from_sidecar(text: &str) -> Result<AnyGeometry> {
    let mut kind = None;
    let mut n_angles = None;
    let mut n_detectors = None;
    let mut spacing = None;
    let mut source_radius = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::MalformedData {
            format: "sidecar",
            detail: format!("line {} lacks '='", lineno + 1),
        })?;
        match key.trim() {
            "kind" => kind = Some(value.trim().to_string()),
            "n_angles" => n_angles = Some(parse_num::<usize>("n_angles", value)?),
            "n_detectors" => n_detectors = Some(parse_num::<usize>("n_detectors", value)?),
            "spacing" => spacing = Some(parse_num::<f64>("spacing", value)?),
            "source_radius" => source_radius = Some(parse_num::<f64>("source_radius", value)?),
            other => {
                return Err(Error::MalformedData {
                    format: "sidecar",
                    detail: format!("unknown key '{other}'"),
                })
            }
        }
    }
    let kind = kind.ok_or_else(|| missing("kind"))?;
    let n_angles = n_angles.ok_or_else(|| missing("n_angles"))?;
    let n_detectors = n_detectors.ok_or_else(|| missing("n_detectors"))?;
    let spacing = spacing.ok_or_else(|| missing("spacing"))?;
    match kind.as_str() {
        "parallel" => Ok(AnyGeometry::Parallel(ParallelGeometry::new(
            uniform_angles(n_angles, std::f64::consts::PI)?,
            n_detectors,
            spacing,
        )?)),
        "fan" => {
            let r = source_radius.ok_or_else(|| missing("source_radius"))?;
            Ok(AnyGeometry::Fan(FanGeometry::new(
                r,
                uniform_angles(n_angles, 2.0 * std::f64::consts::PI)?,
                n_detectors,
                spacing,
            )?))
        }
        other => Err(Error::MalformedData {
            format: "sidecar",
            detail: format!("unknown geometry kind '{other}'"),
        }),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| Error::MalformedData {
        format: "sidecar",
        detail: format!("cannot parse value for '{key}'"),
    })
}

fn missing(key: &str) -> Error {
    Error::MalformedData {
        format: "sidecar",
        detail: format!("missing key '{key}'"),
    }
}
