//! Transmission-imaging experiment toolkit.
//!
//! The crate covers a complete 2-D computed-tomography loop plus the
//! differential-geometry experiments built on top of it:
//!
//! * [`phantom`] — ellipse phantoms with exact line integrals;
//! * [`projector`] — parallel- and fan-beam projection, discrete and analytic;
//! * [`noise`] — deterministic counter-based Poisson photon noise;
//! * [`framelet`] — undecimated tight-frame (UEP framelet) transforms;
//! * [`optimizer`] — TV and framelet denoising with a Kullback-Leibler data
//!   term, solved by augmented-Lagrangian splitting;
//! * [`recon`] — filtered backprojection and fan-to-parallel rebinning;
//! * [`metrics`] — SNR and Frobenius error reports;
//! * [`geometry`] — surface curvature classification, singular-direction
//!   measure estimation, and projection jump detection.
//!
//! Data-parallel kernels run on rayon when the default `parallel` feature is
//! enabled and fall back to sequential loops without it; outputs are bitwise
//! identical either way.

pub mod error;
mod exec;
pub mod framelet;
pub mod geometry;
pub mod image;
pub mod metrics;
pub mod noise;
pub mod optimizer;
pub mod phantom;
pub mod recon;
pub mod projector;

pub use error::{Error, Result};
pub use image::Image2D;
