//! Product 4-manifolds assembled from two constant-curvature surfaces.
//!
//! Only such products are first-class backgrounds; every other metric in
//! scope is a conformal rescaling `e^{2w} g` handled by the other modules.
//! Spheres and flat tori are grid-backed; compact hyperbolic surfaces are
//! kept abstract (curvature scale, genus, optional Laplace spectrum) since
//! they admit no closed-form discretization.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::basis::FactorBasis;
use crate::error::{Error, Result};
use crate::fields::{SectorBasis, SectorLabel};

/// Specification of one surface factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FactorSpec {
    Sphere2 {
        radius: f64,
    },
    FlatTorus2 {
        periods: [f64; 2],
    },
    AbstractHyperbolic2 {
        /// Gauss curvature is -1/curvature_scale^2.
        curvature_scale: f64,
        genus: u32,
        /// Optional Laplace spectrum, sorted ascending, first entry 0.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        spectrum: Option<Vec<f64>>,
    },
}

impl FactorSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            FactorSpec::Sphere2 { radius } => {
                if !radius.is_finite() || *radius <= 0.0 {
                    return Err(Error::InvalidSpec(format!("sphere radius {radius} must be positive")));
                }
            }
            FactorSpec::FlatTorus2 { periods } => {
                if periods.iter().any(|p| !p.is_finite() || *p <= 0.0) {
                    return Err(Error::InvalidSpec(format!(
                        "torus periods {periods:?} must be positive"
                    )));
                }
            }
            FactorSpec::AbstractHyperbolic2 {
                curvature_scale,
                genus,
                spectrum,
            } => {
                if !curvature_scale.is_finite() || *curvature_scale <= 0.0 {
                    return Err(Error::InvalidSpec(format!(
                        "hyperbolic curvature scale {curvature_scale} must be positive"
                    )));
                }
                if *genus < 2 {
                    return Err(Error::InvalidSpec(format!(
                        "hyperbolic genus {genus} must be at least 2"
                    )));
                }
                if let Some(s) = spectrum {
                    if s.is_empty() || s[0] != 0.0 {
                        return Err(Error::InvalidSpec(
                            "supplied spectrum must start with eigenvalue 0".to_string(),
                        ));
                    }
                    if s.iter().any(|v| !v.is_finite() || *v < 0.0) {
                        return Err(Error::InvalidSpec(
                            "supplied spectrum must be nonnegative".to_string(),
                        ));
                    }
                    if s.windows(2).any(|w| w[0] > w[1]) {
                        return Err(Error::InvalidSpec(
                            "supplied spectrum must be sorted ascending".to_string(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            FactorSpec::Sphere2 { .. } => "sphere2",
            FactorSpec::FlatTorus2 { .. } => "flat_torus2",
            FactorSpec::AbstractHyperbolic2 { .. } => "abstract_hyperbolic2",
        }
    }

    /// Constant Gauss curvature of the factor.
    pub fn gauss_curvature(&self) -> f64 {
        match self {
            FactorSpec::Sphere2 { radius } => 1.0 / (radius * radius),
            FactorSpec::FlatTorus2 { .. } => 0.0,
            FactorSpec::AbstractHyperbolic2 { curvature_scale, .. } => {
                -1.0 / (curvature_scale * curvature_scale)
            }
        }
    }

    /// Intrinsic scalar curvature (twice the Gauss curvature).
    pub fn scalar_curvature(&self) -> f64 {
        2.0 * self.gauss_curvature()
    }

    /// Factor area. For hyperbolic factors this is forced by Gauss-Bonnet.
    pub fn area(&self) -> f64 {
        match self {
            FactorSpec::Sphere2 { radius } => 4.0 * PI * radius * radius,
            FactorSpec::FlatTorus2 { periods } => periods[0] * periods[1],
            FactorSpec::AbstractHyperbolic2 {
                curvature_scale,
                genus,
                ..
            } => 4.0 * PI * (*genus as f64 - 1.0) * curvature_scale * curvature_scale,
        }
    }

    pub fn euler_characteristic(&self) -> i64 {
        match self {
            FactorSpec::Sphere2 { .. } => 2,
            FactorSpec::FlatTorus2 { .. } => 0,
            FactorSpec::AbstractHyperbolic2 { genus, .. } => 2 - 2 * *genus as i64,
        }
    }

    pub fn betti1(&self) -> usize {
        match self {
            FactorSpec::Sphere2 { .. } => 0,
            FactorSpec::FlatTorus2 { .. } => 2,
            FactorSpec::AbstractHyperbolic2 { genus, .. } => 2 * *genus as usize,
        }
    }

    /// Rescale the factor's length scale to `value` (radius, period scale,
    /// or curvature scale). Used by one-parameter family scans.
    pub fn with_scale(&self, value: f64) -> FactorSpec {
        match self {
            FactorSpec::Sphere2 { .. } => FactorSpec::Sphere2 { radius: value },
            FactorSpec::FlatTorus2 { periods } => {
                let ratio = periods[1] / periods[0];
                FactorSpec::FlatTorus2 {
                    periods: [value, value * ratio],
                }
            }
            FactorSpec::AbstractHyperbolic2 { genus, spectrum, .. } => {
                FactorSpec::AbstractHyperbolic2 {
                    curvature_scale: value,
                    genus: *genus,
                    spectrum: spectrum.clone(),
                }
            }
        }
    }
}

/// Curvature scalars of the product metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureData {
    pub r1: f64,
    pub r2: f64,
    /// Total scalar curvature r1 + r2.
    pub r: f64,
    /// |Ric|^2 = r1^2/2 + r2^2/2.
    pub ricci_norm_sq: f64,
    pub volume: f64,
}

/// Product quadrature over both factor grids.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    /// (factor1 chart coords, factor2 chart coords) per node.
    pub nodes: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
}

/// A closed 4-manifold built from two surface factors.
#[derive(Debug)]
pub struct ProductManifold {
    factors: [FactorBasis; 2],
}

impl ProductManifold {
    pub fn new(factor1: FactorSpec, factor2: FactorSpec, resolution: [usize; 2]) -> Result<Self> {
        if resolution.iter().any(|r| *r == 0) {
            return Err(Error::InvalidSpec(
                "spectral resolution must be positive".to_string(),
            ));
        }
        Ok(ProductManifold {
            factors: [
                FactorBasis::new(factor1, resolution[0])?,
                FactorBasis::new(factor2, resolution[1])?,
            ],
        })
    }

    pub fn factor(&self, i: usize) -> &FactorBasis {
        &self.factors[i]
    }

    pub fn volume(&self) -> f64 {
        self.factors[0].area * self.factors[1].area
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.factors[0].spec.euler_characteristic() * self.factors[1].spec.euler_characteristic()
    }

    pub fn betti1(&self) -> usize {
        self.factors[0].spec.betti1() + self.factors[1].spec.betti1()
    }

    pub fn is_grid_backed(&self) -> bool {
        self.factors.iter().all(|f| f.is_grid_backed())
    }

    pub fn curvature_scalars(&self) -> CurvatureData {
        curvature_scalars(self)
    }

    pub fn build_quadrature(&self) -> Result<QuadratureRule> {
        build_quadrature(self)
    }

    /// The invariant subspace of scalar functions named by `label`.
    pub fn sector(self: &Arc<Self>, label: SectorLabel) -> Result<Arc<SectorBasis>> {
        SectorBasis::new(Arc::clone(self), label).map(Arc::new)
    }

    pub fn describe(&self) -> String {
        format!(
            "{}(x){}",
            self.factors[0].spec.kind_name(),
            self.factors[1].spec.kind_name()
        )
    }
}

/// Closed-form curvature scalars of the product metric.
pub fn curvature_scalars(m: &ProductManifold) -> CurvatureData {
    let r1 = m.factor(0).spec.scalar_curvature();
    let r2 = m.factor(1).spec.scalar_curvature();
    CurvatureData {
        r1,
        r2,
        r: r1 + r2,
        ricci_norm_sq: 0.5 * r1 * r1 + 0.5 * r2 * r2,
        volume: m.volume(),
    }
}

/// Product quadrature rule; requires both factors grid-backed.
pub fn build_quadrature(m: &ProductManifold) -> Result<QuadratureRule> {
    let g1 = m.factor(0).require_grid()?;
    let g2 = m.factor(1).require_grid()?;
    let n1 = g1.std.coords.len();
    let n2 = g2.std.coords.len();
    let mut nodes = Vec::with_capacity(n1 * n2);
    let mut weights = Vec::with_capacity(n1 * n2);
    for (c1, w1) in g1.std.coords.iter().zip(g1.std.weights.iter()) {
        for (c2, w2) in g2.std.coords.iter().zip(g2.std.weights.iter()) {
            nodes.push([c1[0], c1[1], c2[0], c2[1]]);
            weights.push(w1 * w2);
        }
    }
    Ok(QuadratureRule { nodes, weights })
}
