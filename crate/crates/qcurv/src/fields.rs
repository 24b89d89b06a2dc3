//! Scalar functions on a product manifold, held in a dual
//! spectral/grid representation inside a declared sector.
//!
//! A sector is a spectrally invariant subspace: either the full product
//! basis or the functions constant on the second factor. All operators
//! and functionals in this crate close over sectors, which is what lets
//! complete pipelines run on products with an abstract hyperbolic factor.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array1;
use rand::Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::basis::GridLevel;
use crate::error::{Error, Result};
use crate::geometry::ProductManifold;

/// Aliasing gate for accepted conformal factors (`e^{2w}` analysis).
pub const FACTOR_ALIASING_LIMIT: f64 = 1e-8;
/// Aliasing gate for pointwise-mapped fields.
pub const MAP_ALIASING_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SectorLabel {
    FullProduct,
    Factor1Only,
}

impl SectorLabel {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "full" | "full_product" => Ok(SectorLabel::FullProduct),
            "factor1" | "factor1_only" => Ok(SectorLabel::Factor1Only),
            other => Err(Error::Config(format!(
                "unknown sector {other:?}; expected full or factor1"
            ))),
        }
    }
}

/// One admitted product mode with its factor eigenvalues.
#[derive(Debug, Clone, Copy)]
pub struct ProductMode {
    pub i1: usize,
    pub i2: usize,
    /// factor-1 Laplace eigenvalue
    pub mu: f64,
    /// factor-2 Laplace eigenvalue
    pub nu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Level {
    Std,
    Fine,
    XFine,
}

/// The basis of a sector: admitted modes plus transform machinery.
#[derive(Debug)]
pub struct SectorBasis {
    manifold: Arc<ProductManifold>,
    label: SectorLabel,
    modes: Vec<ProductMode>,
    signature: String,
}

impl SectorBasis {
    pub fn new(manifold: Arc<ProductManifold>, label: SectorLabel) -> Result<Self> {
        let f1 = manifold.factor(0);
        let f2 = manifold.factor(1);
        let mut modes = Vec::new();
        match label {
            SectorLabel::FullProduct => {
                for (i1, m1) in f1.modes.iter().enumerate() {
                    for (i2, m2) in f2.modes.iter().enumerate() {
                        modes.push(ProductMode {
                            i1,
                            i2,
                            mu: m1.eigenvalue,
                            nu: m2.eigenvalue,
                        });
                    }
                }
            }
            SectorLabel::Factor1Only => {
                if f2.modes[0].eigenvalue != 0.0 {
                    return Err(Error::InvalidSpec(
                        "factor-2 basis does not start with the constant mode".to_string(),
                    ));
                }
                for (i1, m1) in f1.modes.iter().enumerate() {
                    modes.push(ProductMode {
                        i1,
                        i2: 0,
                        mu: m1.eigenvalue,
                        nu: 0.0,
                    });
                }
            }
        }
        let signature = format!(
            "{:?}|{:?}|{:?}|{}x{}",
            label,
            f1.spec,
            f2.spec,
            f1.resolution,
            f2.resolution
        );
        Ok(SectorBasis {
            manifold,
            label,
            modes,
            signature,
        })
    }

    pub fn manifold(&self) -> &Arc<ProductManifold> {
        &self.manifold
    }

    pub fn label(&self) -> SectorLabel {
        self.label
    }

    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &[ProductMode] {
        &self.modes
    }

    pub fn volume(&self) -> f64 {
        self.manifold.volume()
    }

    /// Index of the constant-function mode.
    pub fn constant_mode(&self) -> usize {
        0
    }

    pub fn mode_label(&self, k: usize) -> String {
        let m = &self.modes[k];
        let l1 = &self.manifold.factor(0).modes[m.i1].label;
        let l2 = &self.manifold.factor(1).modes[m.i2].label;
        format!("{l1}(x){l2}")
    }

    /// Spectral bandlimit per factor admitted for generated conformal
    /// factors and nonlinear data (one third of the truncation).
    pub fn generation_bandlimit(&self) -> [usize; 2] {
        [
            self.manifold.factor(0).resolution / 3,
            self.manifold.factor(1).resolution / 3,
        ]
    }

    pub fn is_grid_backed(&self) -> bool {
        match self.label {
            SectorLabel::FullProduct => self.manifold.is_grid_backed(),
            SectorLabel::Factor1Only => self.manifold.factor(0).is_grid_backed(),
        }
    }

    pub fn compatible(&self, other: &SectorBasis) -> Result<()> {
        if self.signature == other.signature {
            Ok(())
        } else {
            Err(Error::SectorMismatch(format!(
                "{} vs {}",
                self.signature, other.signature
            )))
        }
    }

    pub(crate) fn factor_levels(&self, level: Level) -> Result<(&GridLevel, Option<&GridLevel>)> {
        fn pick(grid: &crate::basis::FactorGrid, level: Level) -> &GridLevel {
            match level {
                Level::Std => &grid.std,
                Level::Fine => &grid.fine,
                Level::XFine => &grid.xfine,
            }
        }
        let g1 = pick(self.manifold.factor(0).require_grid()?, level);
        let g2 = match self.label {
            SectorLabel::FullProduct => {
                Some(pick(self.manifold.factor(1).require_grid()?, level))
            }
            SectorLabel::Factor1Only => None,
        };
        Ok((g1, g2))
    }

    pub fn n_nodes(&self) -> Result<usize> {
        let (g1, g2) = self.factor_levels(Level::Std)?;
        Ok(g1.coords.len() * g2.map_or(1, |g| g.coords.len()))
    }

    /// Background quadrature weights over the sector grid (sum = volume).
    pub fn quadrature_weights(&self) -> Result<Array1<f64>> {
        self.weights_level(Level::Std)
    }

    pub(crate) fn weights_level(&self, level: Level) -> Result<Array1<f64>> {
        let (g1, g2) = self.factor_levels(level)?;
        match g2 {
            Some(g2) => {
                let n1 = g1.coords.len();
                let n2 = g2.coords.len();
                let mut w = Array1::zeros(n1 * n2);
                for i in 0..n1 {
                    for j in 0..n2 {
                        w[i * n2 + j] = g1.weights[i] * g2.weights[j];
                    }
                }
                Ok(w)
            }
            None => {
                let area2 = self.manifold.factor(1).area;
                Ok(&g1.weights * area2)
            }
        }
    }

    /// Value of the constant factor-2 mode used by the Factor1Only sector.
    fn factor2_const(&self) -> f64 {
        1.0 / self.manifold.factor(1).area.sqrt()
    }

    pub(crate) fn synthesize_level(
        &self,
        coeffs: &Array1<f64>,
        level: Level,
    ) -> Result<Array1<f64>> {
        if coeffs.len() != self.dim() {
            return Err(Error::SectorMismatch(format!(
                "coefficient length {} does not match sector dimension {}",
                coeffs.len(),
                self.dim()
            )));
        }
        let (g1, g2) = self.factor_levels(level)?;
        match g2 {
            Some(g2) => {
                let m1 = self.manifold.factor(0).dim();
                let m2 = self.manifold.factor(1).dim();
                let c = coeffs
                    .view()
                    .into_shape_with_order((m1, m2))
                    .map_err(|e| Error::InvariantViolation(e.to_string()))?;
                let v = g1.values.dot(&c).dot(&g2.values.t());
                let n = v.len();
                Ok(v.into_shape_with_order(n)
                    .map_err(|e| Error::InvariantViolation(e.to_string()))?)
            }
            None => Ok(g1.values.dot(coeffs) * self.factor2_const()),
        }
    }

    pub(crate) fn analyze_level(&self, values: &Array1<f64>, level: Level) -> Result<Array1<f64>> {
        let (g1, g2) = self.factor_levels(level)?;
        match g2 {
            Some(g2) => {
                let n1 = g1.coords.len();
                let n2 = g2.coords.len();
                if values.len() != n1 * n2 {
                    return Err(Error::SectorMismatch(format!(
                        "value length {} does not match node count {}",
                        values.len(),
                        n1 * n2
                    )));
                }
                let v = values
                    .view()
                    .into_shape_with_order((n1, n2))
                    .map_err(|e| Error::InvariantViolation(e.to_string()))?;
                let mut t = v.to_owned();
                for (i, mut row) in t.outer_iter_mut().enumerate() {
                    row *= g1.weights[i];
                }
                t = t * &g2.weights;
                let c = g1.values.t().dot(&t).dot(&g2.values);
                let n = c.len();
                Ok(c.into_shape_with_order(n)
                    .map_err(|e| Error::InvariantViolation(e.to_string()))?)
            }
            None => {
                if values.len() != g1.coords.len() {
                    return Err(Error::SectorMismatch(format!(
                        "value length {} does not match node count {}",
                        values.len(),
                        g1.coords.len()
                    )));
                }
                let weighted = values * &g1.weights;
                Ok(g1.values.t().dot(&weighted) * (self.manifold.factor(1).area.sqrt()))
            }
        }
    }

    /// Chart coordinates of the sector's quadrature nodes.
    pub fn node_coords(&self) -> Result<Vec<Vec<f64>>> {
        let (g1, g2) = self.factor_levels(Level::Std)?;
        match g2 {
            Some(g2) => {
                let mut out = Vec::with_capacity(g1.coords.len() * g2.coords.len());
                for c1 in &g1.coords {
                    for c2 in &g2.coords {
                        out.push(vec![c1[0], c1[1], c2[0], c2[1]]);
                    }
                }
                Ok(out)
            }
            None => Ok(g1.coords.iter().map(|c| vec![c[0], c[1]]).collect()),
        }
    }
}

/// Identifies a metric in the conformal class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricTag {
    Background,
    Rescaled { id: String },
}

impl MetricTag {
    pub fn compose(&self, factor_id: &str) -> MetricTag {
        let base = match self {
            MetricTag::Background => "background",
            MetricTag::Rescaled { id } => id.as_str(),
        };
        let mut h = Sha256::new();
        h.update(base.as_bytes());
        h.update(b"|");
        h.update(factor_id.as_bytes());
        let digest = h.finalize();
        MetricTag::Rescaled {
            id: hex_prefix(&digest, 12),
        }
    }
}

fn hex_prefix(bytes: &[u8], len: usize) -> String {
    let mut s = String::with_capacity(len);
    for b in bytes {
        use std::fmt::Write;
        let _ = write!(s, "{b:02x}");
        if s.len() >= len {
            break;
        }
    }
    s.truncate(len);
    s
}

/// A scalar function: coefficients over the sector basis plus synthesized
/// grid values when the sector is grid-backed.
#[derive(Debug, Clone)]
pub struct ScalarField {
    sector: Arc<SectorBasis>,
    coeffs: Array1<f64>,
    grid: Option<Array1<f64>>,
}

impl ScalarField {
    pub fn from_coeffs(sector: &Arc<SectorBasis>, coeffs: Array1<f64>) -> Result<Self> {
        if coeffs.len() != sector.dim() {
            return Err(Error::SectorMismatch(format!(
                "coefficient length {} does not match sector dimension {}",
                coeffs.len(),
                sector.dim()
            )));
        }
        let grid = if sector.is_grid_backed() {
            Some(sector.synthesize_level(&coeffs, Level::Std)?)
        } else {
            None
        };
        Ok(ScalarField {
            sector: Arc::clone(sector),
            coeffs,
            grid,
        })
    }

    /// Field with the stated coefficients but explicit pointwise grid
    /// values (used after nonlinear maps, where the grid values are the
    /// defining data and the coefficients are their projection).
    pub(crate) fn from_parts(
        sector: &Arc<SectorBasis>,
        coeffs: Array1<f64>,
        grid: Array1<f64>,
    ) -> ScalarField {
        ScalarField {
            sector: Arc::clone(sector),
            coeffs,
            grid: Some(grid),
        }
    }

    pub fn constant(sector: &Arc<SectorBasis>, value: f64) -> Result<Self> {
        let mut coeffs = Array1::zeros(sector.dim());
        coeffs[sector.constant_mode()] = value * sector.volume().sqrt();
        Self::from_coeffs(sector, coeffs)
    }

    pub fn basis_element(sector: &Arc<SectorBasis>, k: usize) -> Result<Self> {
        let mut coeffs = Array1::zeros(sector.dim());
        coeffs[k] = 1.0;
        Self::from_coeffs(sector, coeffs)
    }

    /// Random mean-zero field with factor degrees at most `bandlimit`
    /// and sup norm `amplitude`.
    pub fn random_bandlimited<R: Rng>(
        sector: &Arc<SectorBasis>,
        rng: &mut R,
        bandlimit: [usize; 2],
        amplitude: f64,
    ) -> Result<Self> {
        let f1 = sector.manifold().factor(0);
        let f2 = sector.manifold().factor(1);
        let mut coeffs = Array1::zeros(sector.dim());
        let mut hit = false;
        for (k, mode) in sector.modes().iter().enumerate() {
            if k == sector.constant_mode() {
                continue;
            }
            if f1.modes[mode.i1].degree <= bandlimit[0] && f2.modes[mode.i2].degree <= bandlimit[1]
            {
                coeffs[k] = rng.random_range(-1.0..1.0);
                hit = true;
            }
        }
        if !hit {
            return Err(Error::InvalidSpec(format!(
                "no nonconstant modes below bandlimit {bandlimit:?}; raise the truncation"
            )));
        }
        let mut field = Self::from_coeffs(sector, coeffs)?;
        let sup = field.sup_norm()?;
        let scale = amplitude / sup;
        field.coeffs *= scale;
        if let Some(g) = field.grid.as_mut() {
            *g *= scale;
        }
        Ok(field)
    }

    pub fn sector(&self) -> &Arc<SectorBasis> {
        &self.sector
    }

    pub fn coeffs(&self) -> &Array1<f64> {
        &self.coeffs
    }

    pub fn grid_values(&self) -> Result<&Array1<f64>> {
        self.grid.as_ref().ok_or_else(|| {
            Error::AbstractFactorNotGridBacked("field has no grid values".to_string())
        })
    }

    /// Background L2 norm (the coefficient norm, by orthonormality).
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn sup_norm(&self) -> Result<f64> {
        Ok(self
            .grid_values()?
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs())))
    }

    pub fn scaled(&self, s: f64) -> ScalarField {
        ScalarField {
            sector: Arc::clone(&self.sector),
            coeffs: &self.coeffs * s,
            grid: self.grid.as_ref().map(|g| g * s),
        }
    }

    pub fn add(&self, other: &ScalarField) -> Result<ScalarField> {
        self.sector.compatible(&other.sector)?;
        Ok(ScalarField {
            sector: Arc::clone(&self.sector),
            coeffs: &self.coeffs + &other.coeffs,
            grid: match (&self.grid, &other.grid) {
                (Some(a), Some(b)) => Some(a + b),
                _ => None,
            },
        })
    }

    pub fn sub(&self, other: &ScalarField) -> Result<ScalarField> {
        self.add(&other.scaled(-1.0))
    }

    pub fn synthesize_fine(&self) -> Result<Array1<f64>> {
        self.sector.synthesize_level(&self.coeffs, Level::Fine)
    }

    /// Inject a Factor1Only field into the full-product sector of the
    /// same manifold.
    pub fn embed_into(&self, full: &Arc<SectorBasis>) -> Result<ScalarField> {
        if self.sector.label() != SectorLabel::Factor1Only
            || full.label() != SectorLabel::FullProduct
        {
            return Err(Error::SectorMismatch(
                "embedding goes from factor1_only into full_product".to_string(),
            ));
        }
        let m2 = full.manifold().factor(1).dim();
        if full.dim() != self.sector.dim() * m2 {
            return Err(Error::SectorMismatch(
                "sectors belong to different manifolds".to_string(),
            ));
        }
        let mut coeffs = Array1::zeros(full.dim());
        for (k, c) in self.coeffs.iter().enumerate() {
            coeffs[k * m2] = *c;
        }
        ScalarField::from_coeffs(full, coeffs)
    }

    /// Index of the first coefficient whose factor degrees exceed the
    /// stated bandlimit, if any.
    pub fn max_degrees(&self) -> [usize; 2] {
        let f1 = self.sector.manifold().factor(0);
        let f2 = self.sector.manifold().factor(1);
        let mut d = [0usize; 2];
        for (k, mode) in self.sector.modes().iter().enumerate() {
            if self.coeffs[k] != 0.0 {
                d[0] = d[0].max(f1.modes[mode.i1].degree);
                d[1] = d[1].max(f2.modes[mode.i2].degree);
            }
        }
        d
    }
}

/// Synthesize a field to its grid values.
pub fn synthesize(f: &ScalarField) -> Result<Array1<f64>> {
    f.sector.synthesize_level(f.coeffs(), Level::Std)
}

/// Analyze grid values into a field of the given sector.
pub fn analyze(sector: &Arc<SectorBasis>, values: &Array1<f64>) -> Result<ScalarField> {
    let coeffs = sector.analyze_level(values, Level::Std)?;
    Ok(ScalarField::from_parts(sector, coeffs, values.clone()))
}

/// Quadrature weights of a metric in the conformal class.
#[derive(Debug, Clone)]
pub struct MeasureWeights {
    pub tag: MetricTag,
    values: Array1<f64>,
}

impl MeasureWeights {
    pub fn background(sector: &SectorBasis) -> Result<Self> {
        Ok(MeasureWeights {
            tag: MetricTag::Background,
            values: sector.quadrature_weights()?,
        })
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.values
    }

    pub fn total(&self) -> f64 {
        self.values.sum()
    }
}

/// Metric-weighted L2 pairing of two fields.
pub fn inner_product(f: &ScalarField, h: &ScalarField, w: &MeasureWeights) -> Result<f64> {
    f.sector.compatible(&h.sector)?;
    let fv = f.grid_values()?;
    let hv = h.grid_values()?;
    if fv.len() != w.values.len() {
        return Err(Error::SectorMismatch(
            "weights do not match the field grid".to_string(),
        ));
    }
    Ok(fv
        .iter()
        .zip(hv.iter())
        .zip(w.values.iter())
        .map(|((a, b), wt)| wt * a * b)
        .sum())
}

/// Apply a pointwise map to a field; returns the mapped field and the
/// aliasing residual of its spectral projection. Errors above the
/// default residual limit (smooth maps of bandlimited data stay well
/// below it; raise the truncation otherwise).
pub fn pointwise_map(
    f: &ScalarField,
    map: impl Fn(f64) -> f64,
) -> Result<(ScalarField, f64)> {
    pointwise_map_with_limit(f, map, MAP_ALIASING_LIMIT)
}

/// [`pointwise_map`] with an explicit residual limit. Non-smooth maps
/// (clamps, signs) define the output pointwise but project poorly; pass
/// a loose limit when only grid values matter downstream.
pub fn pointwise_map_with_limit(
    f: &ScalarField,
    map: impl Fn(f64) -> f64,
    limit: f64,
) -> Result<(ScalarField, f64)> {
    let sector = &f.sector;
    let std_vals = f.grid_values()?.mapv(&map);
    let fine_vals = f.synthesize_fine()?.mapv(&map);
    let coeffs_fine = sector.analyze_level(&fine_vals, Level::Fine)?;
    let coeffs_std = sector.analyze_level(&std_vals, Level::Std)?;
    let scale = coeffs_fine
        .iter()
        .map(|c| c * c)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let residual = (&coeffs_std - &coeffs_fine)
        .iter()
        .map(|c| c * c)
        .sum::<f64>()
        .sqrt()
        / scale;
    if residual > limit {
        return Err(Error::AliasingExceeded { residual, limit });
    }
    Ok((
        ScalarField::from_parts(sector, coeffs_fine, std_vals),
        residual,
    ))
}

/// A conformal factor w defining the metric e^{2w} g, with cached
/// exponential weights on the sector grids.
#[derive(Debug, Clone)]
pub struct ConformalFactor {
    omega: ScalarField,
    exp4_std: Array1<f64>,
    expm4_std: Array1<f64>,
    exp4_fine: Array1<f64>,
    expm4_fine: Array1<f64>,
    aliasing_residual: f64,
    id: String,
}

impl ConformalFactor {
    /// Accept a field as a conformal factor. The analysis aliasing of
    /// e^{2w} is measured against a finer reference grid and must stay
    /// below `FACTOR_ALIASING_LIMIT`.
    pub fn new(omega: ScalarField) -> Result<Self> {
        Self::build(omega, true)
    }

    /// Accept a solver-produced field without the hard gate; the
    /// residual is still measured and reported.
    pub(crate) fn from_solution(omega: ScalarField) -> Result<Self> {
        Self::build(omega, false)
    }

    fn build(omega: ScalarField, enforce: bool) -> Result<Self> {
        let sector = omega.sector();
        let std_vals = omega.grid_values()?;
        let fine_vals = omega.synthesize_fine()?;
        let xfine_vals = sector.synthesize_level(omega.coeffs(), Level::XFine)?;
        let e2_fine = fine_vals.mapv(|v| (2.0 * v).exp());
        let e2_xfine = xfine_vals.mapv(|v| (2.0 * v).exp());
        let c_fine = sector.analyze_level(&e2_fine, Level::Fine)?;
        let c_xfine = sector.analyze_level(&e2_xfine, Level::XFine)?;
        let scale = c_xfine.iter().map(|c| c * c).sum::<f64>().sqrt();
        let aliasing_residual =
            (&c_fine - &c_xfine).iter().map(|c| c * c).sum::<f64>().sqrt() / scale;
        if enforce && aliasing_residual > FACTOR_ALIASING_LIMIT {
            return Err(Error::AliasingExceeded {
                residual: aliasing_residual,
                limit: FACTOR_ALIASING_LIMIT,
            });
        }
        let mut h = Sha256::new();
        for c in omega.coeffs() {
            h.update(c.to_le_bytes());
        }
        let id = hex_prefix(&h.finalize(), 12);
        Ok(ConformalFactor {
            exp4_std: std_vals.mapv(|v| (4.0 * v).exp()),
            expm4_std: std_vals.mapv(|v| (-4.0 * v).exp()),
            exp4_fine: fine_vals.mapv(|v| (4.0 * v).exp()),
            expm4_fine: fine_vals.mapv(|v| (-4.0 * v).exp()),
            aliasing_residual,
            id,
            omega,
        })
    }

    pub fn zero(sector: &Arc<SectorBasis>) -> Result<Self> {
        Self::new(ScalarField::constant(sector, 0.0)?)
    }

    /// Random factor respecting the one-third bandlimit rule.
    pub fn random<R: Rng>(
        sector: &Arc<SectorBasis>,
        rng: &mut R,
        amplitude: f64,
    ) -> Result<Self> {
        let band = sector.generation_bandlimit();
        Self::new(ScalarField::random_bandlimited(
            sector, rng, band, amplitude,
        )?)
    }

    pub fn omega(&self) -> &ScalarField {
        &self.omega
    }

    pub fn sector(&self) -> &Arc<SectorBasis> {
        self.omega.sector()
    }

    pub fn aliasing_residual(&self) -> f64 {
        self.aliasing_residual
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn exp4_std(&self) -> &Array1<f64> {
        &self.exp4_std
    }

    pub fn expm4_std(&self) -> &Array1<f64> {
        &self.expm4_std
    }

    pub fn exp4_fine(&self) -> &Array1<f64> {
        &self.exp4_fine
    }

    pub fn expm4_fine(&self) -> &Array1<f64> {
        &self.expm4_fine
    }

    /// Pointwise sum of conformal factors (metric composition).
    pub fn compose(&self, other: &ConformalFactor) -> Result<ConformalFactor> {
        Self::build(self.omega.add(&other.omega)?, false)
    }

    /// Measure weights of e^{2w} g over weights of g.
    pub fn rescale_weights(&self, base: &MeasureWeights) -> MeasureWeights {
        MeasureWeights {
            tag: base.tag.compose(&self.id),
            values: base.values() * &self.exp4_std,
        }
    }
}

/// Total integral of a field under the given measure.
pub fn integral(f: &ScalarField, w: &MeasureWeights) -> Result<f64> {
    Ok(f.grid_values()?
        .iter()
        .zip(w.values().iter())
        .map(|(v, wt)| v * wt)
        .sum())
}

/// Mean of a field under the given measure.
pub fn mean(f: &ScalarField, w: &MeasureWeights) -> Result<f64> {
    Ok(integral(f, w)? / w.total())
}

pub fn sphere_y10_value(theta: f64) -> f64 {
    (3.0 / (4.0 * PI)).sqrt() * theta.cos()
}
