//! Numerical laboratory for the critical fourth-order conformal operator
//! and Q-curvature prescription on explicit closed 4-manifolds.
//!
//! The backgrounds are products of two constant-curvature surfaces
//! (spheres, flat tori, abstract compact hyperbolic surfaces). On these
//! the operator has an exact mode symbol; conformal rescalings
//! `g -> e^{2w} g` are handled through the covariance law, so the
//! operator's null space, the invariant integrals attached to it, and
//! the prescription solvers can all be certified at spectral accuracy.
//!
//! Module map:
//! * [`geometry`] — product manifolds, curvature scalars, quadrature;
//! * [`fields`] — sectors, spectral/grid fields, conformal factors;
//! * [`paneitz`] — operator assembly and the Q transformation law;
//! * [`kernel`] — certified null spaces and parameter scans;
//! * [`qfunctional`] — invariant functionals, forbidden-function
//!   certificates, the kernel decomposition, harmonic dimension report;
//! * [`prescribe`] — the Q-flat solver and a constant-Q iteration;
//! * [`config`] — manifold/experiment configuration files;
//! * [`report`] — report envelopes, CSV import/export, convention hash.

extern crate openblas_src as _openblas;

pub mod basis;
pub mod config;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod kernel;
pub mod paneitz;
pub mod prescribe;
pub mod qfunctional;
pub mod report;

pub use error::{Error, Result};
