//! The critical fourth-order operator and the Q scalar for product
//! backgrounds and their conformal rescalings.
//!
//! Convention ledger (one fixed normalization; every number in this
//! crate derives from it):
//!
//! * Laplacian `D = delta d`, spectrally nonnegative;
//! * operator `P = D^2 + delta((2/3) R g - 2 Ric) d`;
//! * scalar `Q = (1/6)(D R + R^2 - 3 |Ric|^2)`;
//! * transformation `Q_hat = e^{-4w} (Q + P w)` for `g_hat = e^{2w} g`,
//!   with `P_hat = e^{-4w} P`.
//!
//! Sanity anchors under this ledger: the round 4-sphere has Q = 6, the
//! product of unit 2-spheres has Q = 2/3, and a unit sphere times a
//! curvature -1 surface has Q = -2.
//!
//! On a product of constant-curvature surfaces the operator is diagonal
//! in the product basis with symbol
//! `lambda(mu, nu) = (mu + nu)^2 + c1 mu + c2 nu`,
//! `c_i = (2/3)(R1 + R2) - R_i`. A rescaled operator is represented
//! exactly as `e^{-4w} P` (covariance), never by re-deriving curvature.

use std::sync::Arc;

use ndarray::{Array1, Array2};
use ndarray_linalg::{Cholesky, Eigh, SolveTriangular, UPLO};

use crate::error::{Error, Result};
use crate::fields::{
    ConformalFactor, Level, MeasureWeights, MetricTag, ScalarField, SectorBasis,
};
use crate::geometry::CurvatureData;

/// Largest sector dimension for which dense (matrix) representations of
/// rescaled operators are materialized.
pub const DENSE_CAP: usize = 3000;

/// First-order coefficients of the background symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolCoefficients {
    pub c1: f64,
    pub c2: f64,
}

pub fn symbol_coefficients(c: &CurvatureData) -> SymbolCoefficients {
    SymbolCoefficients {
        c1: (2.0 / 3.0) * c.r - c.r1,
        c2: (2.0 / 3.0) * c.r - c.r2,
    }
}

/// Background Q value from the curvature scalars (D R = 0 on products).
pub fn q_constant(c: &CurvatureData) -> f64 {
    (c.r * c.r - 3.0 * c.ricci_norm_sq) / 6.0
}

/// The critical operator over a sector, either as the background mode
/// symbol or as `e^{-4w} P` for a conformal rescaling.
#[derive(Debug, Clone)]
pub struct PaneitzOperator {
    sector: Arc<SectorBasis>,
    symbol: Array1<f64>,
    coefficients: SymbolCoefficients,
    omega: Option<Arc<ConformalFactor>>,
    tag: MetricTag,
}

impl PaneitzOperator {
    pub fn sector(&self) -> &Arc<SectorBasis> {
        &self.sector
    }

    pub fn tag(&self) -> &MetricTag {
        &self.tag
    }

    pub fn is_background(&self) -> bool {
        self.omega.is_none()
    }

    /// Diagonal background symbol over the sector modes.
    pub fn symbol(&self) -> &Array1<f64> {
        &self.symbol
    }

    pub fn coefficients(&self) -> SymbolCoefficients {
        self.coefficients
    }

    pub fn conformal_factor(&self) -> Option<&Arc<ConformalFactor>> {
        self.omega.as_ref()
    }

    /// Operator-norm scale used by relative tolerances.
    pub fn norm_scale(&self) -> f64 {
        let s = self.symbol.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        match &self.omega {
            None => s,
            Some(w) => s * w.expm4_std().iter().fold(0.0f64, |a, v| a.max(*v)),
        }
    }

    /// Exact pointwise action on the sector grid:
    /// background `P f`, rescaled `e^{-4w} P f`.
    pub fn apply_grid(&self, f: &ScalarField) -> Result<Array1<f64>> {
        self.sector.compatible(f.sector())?;
        let pf = self.sector.synthesize_level(&(&self.symbol * f.coeffs()), Level::Std)?;
        Ok(match &self.omega {
            None => pf,
            Some(w) => pf * w.expm4_std(),
        })
    }

    /// Same action evaluated on the fine analysis grid.
    pub fn apply_grid_fine(&self, f: &ScalarField) -> Result<Array1<f64>> {
        self.sector.compatible(f.sector())?;
        let pf = self.sector.synthesize_level(&(&self.symbol * f.coeffs()), Level::Fine)?;
        Ok(match &self.omega {
            None => pf,
            Some(w) => pf * w.expm4_fine(),
        })
    }

    /// Action as a field (coefficients from the fine-grid projection).
    pub fn apply(&self, f: &ScalarField) -> Result<ScalarField> {
        match &self.omega {
            None => ScalarField::from_coeffs(&self.sector, &self.symbol * f.coeffs()),
            Some(_) => {
                let std_vals = self.apply_grid(f)?;
                let fine_vals = self.apply_grid_fine(f)?;
                let coeffs = self.sector.analyze_level(&fine_vals, Level::Fine)?;
                Ok(ScalarField::from_parts(&self.sector, coeffs, std_vals))
            }
        }
    }

    /// Measure weights of this operator's metric.
    pub fn measure_weights(&self) -> Result<MeasureWeights> {
        let base = MeasureWeights::background(&self.sector)?;
        Ok(match &self.omega {
            None => base,
            Some(w) => w.rescale_weights(&base),
        })
    }

    /// Relative L2 residual of `P f` in this operator's metric,
    /// normalized by the operator scale and the field norm.
    pub fn relative_residual(&self, f: &ScalarField) -> Result<f64> {
        let w = self.measure_weights()?;
        let pf = self.apply_grid(f)?;
        let norm_sq: f64 = pf
            .iter()
            .zip(w.values().iter())
            .map(|(v, wt)| wt * v * v)
            .sum();
        let fnorm = f.norm().max(f64::MIN_POSITIVE);
        Ok(norm_sq.sqrt() / (self.norm_scale() * fnorm))
    }

    /// Dense representation over the sector basis (capped size): the
    /// diagonal symbol together with the metric mass matrix.
    pub fn dense(&self) -> Result<DenseOperator> {
        let dim = self.sector.dim();
        if dim > DENSE_CAP {
            return Err(Error::DenseCapExceeded {
                dim,
                cap: DENSE_CAP,
            });
        }
        let mass = match &self.omega {
            None => None,
            Some(w) => {
                let weights = self.sector.quadrature_weights()?;
                let wexp = &weights * w.exp4_std();
                let n = self.sector.n_nodes()?;
                let mut b = Array2::zeros((n, dim));
                for k in 0..dim {
                    let e = ScalarField::basis_element(&self.sector, k)?;
                    let col = e.grid_values()?;
                    b.column_mut(k).assign(col);
                }
                let mut bw = b.clone();
                for (i, mut row) in bw.outer_iter_mut().enumerate() {
                    row *= wexp[i];
                }
                Some(b.t().dot(&bw))
            }
        };
        Ok(DenseOperator {
            symbol: self.symbol.clone(),
            mass,
        })
    }
}

/// Dense sector representation: generalized pair (diag symbol, mass).
#[derive(Debug, Clone)]
pub struct DenseOperator {
    pub symbol: Array1<f64>,
    /// Gram matrix of the basis under the rescaled measure; `None`
    /// means the identity (background).
    pub mass: Option<Array2<f64>>,
}

impl DenseOperator {
    pub fn dim(&self) -> usize {
        self.symbol.len()
    }

    /// Eigenvalues and coefficient-space eigenvectors of the operator in
    /// its own metric (generalized problem `D v = lambda M v`).
    pub fn eigen(&self) -> Result<(Array1<f64>, Array2<f64>)> {
        match &self.mass {
            None => {
                let n = self.dim();
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|a, b| self.symbol[*a].total_cmp(&self.symbol[*b]));
                let vals = Array1::from_iter(order.iter().map(|&i| self.symbol[i]));
                let mut vecs = Array2::zeros((n, n));
                for (col, &i) in order.iter().enumerate() {
                    vecs[(i, col)] = 1.0;
                }
                Ok((vals, vecs))
            }
            Some(mass) => {
                let l = mass
                    .cholesky(UPLO::Lower)
                    .map_err(|e| Error::InvariantViolation(format!("mass not SPD: {e}")))?;
                let d = Array2::from_diag(&self.symbol);
                let a = l
                    .solve_triangular(UPLO::Lower, ndarray_linalg::Diag::NonUnit, &d)
                    .map_err(|e| Error::InvariantViolation(e.to_string()))?;
                let s = l
                    .solve_triangular(UPLO::Lower, ndarray_linalg::Diag::NonUnit, &a.t().to_owned())
                    .map_err(|e| Error::InvariantViolation(e.to_string()))?;
                // symmetrize away rounding before the symmetric solver
                let s = (&s + &s.t()) * 0.5;
                let (vals, u) = s
                    .eigh(UPLO::Lower)
                    .map_err(|e| Error::InvariantViolation(e.to_string()))?;
                let lt = l.t().to_owned();
                let vecs = lt
                    .solve_triangular(UPLO::Upper, ndarray_linalg::Diag::NonUnit, &u)
                    .map_err(|e| Error::InvariantViolation(e.to_string()))?;
                Ok((vals, vecs))
            }
        }
    }

    /// The operator's action matrix `M^{-1} D` in the background basis.
    pub fn action_matrix(&self) -> Result<Array2<f64>> {
        let d = Array2::from_diag(&self.symbol);
        match &self.mass {
            None => Ok(d),
            Some(mass) => {
                use ndarray_linalg::Solve;
                let mut out = Array2::zeros((self.dim(), self.dim()));
                for (k, col) in d.columns().into_iter().enumerate() {
                    let x = mass
                        .solve(&col.to_owned())
                        .map_err(|e| Error::InvariantViolation(e.to_string()))?;
                    out.column_mut(k).assign(&x);
                }
                Ok(out)
            }
        }
    }
}

/// Assemble the background operator over a sector.
pub fn assemble_background(sector: &Arc<SectorBasis>) -> PaneitzOperator {
    let curv = sector.manifold().curvature_scalars();
    let coefficients = symbol_coefficients(&curv);
    let symbol = Array1::from_iter(sector.modes().iter().map(|m| {
        let sum = m.mu + m.nu;
        sum * sum + coefficients.c1 * m.mu + coefficients.c2 * m.nu
    }));
    PaneitzOperator {
        sector: Arc::clone(sector),
        symbol,
        coefficients,
        omega: None,
        tag: MetricTag::Background,
    }
}

/// The Q scalar of a metric, with grid values on both analysis levels.
#[derive(Debug, Clone)]
pub struct QField {
    pub field: ScalarField,
    fine_values: Array1<f64>,
    pub tag: MetricTag,
}

impl QField {
    pub fn sup_norm(&self) -> Result<f64> {
        self.field.sup_norm()
    }

    pub fn fine_values(&self) -> &Array1<f64> {
        &self.fine_values
    }

    /// Total integral of Q in its own metric.
    pub fn total(&self, weights: &MeasureWeights) -> Result<f64> {
        crate::fields::integral(&self.field, weights)
    }
}

/// Background Q: the constant `(R^2 - 3 |Ric|^2)/6`.
pub fn q_background(sector: &Arc<SectorBasis>) -> Result<QField> {
    let q = q_constant(&sector.manifold().curvature_scalars());
    let field = ScalarField::constant(sector, q)?;
    let n_fine = sector.synthesize_level(field.coeffs(), Level::Fine)?;
    Ok(QField {
        field,
        fine_values: n_fine,
        tag: MetricTag::Background,
    })
}

/// Rescale a background operator by a conformal factor: `e^{-4w} P`.
pub fn conformal_paneitz(
    p: &PaneitzOperator,
    omega: &Arc<ConformalFactor>,
) -> Result<PaneitzOperator> {
    if !p.is_background() {
        return Err(Error::InvalidSpec(
            "conformal rescaling starts from the background operator; compose factors instead"
                .to_string(),
        ));
    }
    p.sector.compatible(omega.sector())?;
    Ok(PaneitzOperator {
        sector: Arc::clone(&p.sector),
        symbol: p.symbol.clone(),
        coefficients: p.coefficients,
        omega: Some(Arc::clone(omega)),
        tag: p.tag.compose(omega.id()),
    })
}

/// Transformation law: `Q_hat = e^{-4w}(Q + P w)` for `g_hat = e^{2w} g`.
/// `p` and `q` must belong to the same metric.
pub fn q_transform(q: &QField, omega: &ConformalFactor, p: &PaneitzOperator) -> Result<QField> {
    if q.tag != *p.tag() {
        return Err(Error::SectorMismatch(format!(
            "Q is tagged {:?} but the operator is tagged {:?}",
            q.tag,
            p.tag()
        )));
    }
    let sector = p.sector();
    sector.compatible(omega.sector())?;
    let p_omega_std = p.apply_grid(omega.omega())?;
    let p_omega_fine = p.apply_grid_fine(omega.omega())?;
    let std_vals = (q.field.grid_values()? + &p_omega_std) * omega.expm4_std();
    let fine_vals = (&q.fine_values + &p_omega_fine) * omega.expm4_fine();
    let coeffs = sector.analyze_level(&fine_vals, Level::Fine)?;
    Ok(QField {
        field: ScalarField::from_parts(sector, coeffs, std_vals),
        fine_values: fine_vals,
        tag: q.tag.compose(omega.id()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{inner_product, SectorLabel};
    use crate::geometry::{FactorSpec, ProductManifold};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn s2xt2(lmax: usize, kmax: usize) -> Arc<ProductManifold> {
        Arc::new(
            ProductManifold::new(
                FactorSpec::Sphere2 { radius: 1.0 },
                FactorSpec::FlatTorus2 {
                    periods: [2.0 * PI, 2.0 * PI],
                },
                [lmax, kmax],
            )
            .unwrap(),
        )
    }

    fn t4(kmax: usize) -> Arc<ProductManifold> {
        Arc::new(
            ProductManifold::new(
                FactorSpec::FlatTorus2 {
                    periods: [2.0 * PI, 2.0 * PI],
                },
                FactorSpec::FlatTorus2 {
                    periods: [2.0 * PI, 2.0 * PI],
                },
                [kmax, kmax],
            )
            .unwrap(),
        )
    }

    fn es_product(lmax: usize) -> Arc<ProductManifold> {
        Arc::new(
            ProductManifold::new(
                FactorSpec::Sphere2 { radius: 1.0 },
                FactorSpec::AbstractHyperbolic2 {
                    curvature_scale: 1.0,
                    genus: 2,
                    spectrum: None,
                },
                [lmax, 1],
            )
            .unwrap(),
        )
    }

    #[test]
    fn symbol_coefficients_on_reference_products() {
        let c = s2xt2(4, 2).curvature_scalars();
        let sc = symbol_coefficients(&c);
        assert!((sc.c1 + 2.0 / 3.0).abs() < 1e-15);
        assert!((sc.c2 - 4.0 / 3.0).abs() < 1e-15);

        let c = t4(2).curvature_scalars();
        let sc = symbol_coefficients(&c);
        assert_eq!((sc.c1, sc.c2), (0.0, 0.0));

        let c = es_product(4).curvature_scalars();
        let sc = symbol_coefficients(&c);
        assert!((sc.c1 + 2.0).abs() < 1e-15);
        assert!((sc.c2 - 2.0).abs() < 1e-15);
    }

    #[test]
    fn background_symbol_values() {
        // S2 x T2, mode (l=1, k=0): lambda = 4 - (2/3)*2 = 8/3
        let m = s2xt2(4, 2);
        let sector = m.sector(SectorLabel::FullProduct).unwrap();
        let p = assemble_background(&sector);
        let m2 = m.factor(1).dim();
        let lam = p.symbol()[2 * m2];
        assert!((lam - 8.0 / 3.0).abs() < 1e-14, "lambda = {lam}");

        // flat T4: pure squared sum of eigenvalues
        let m = t4(2);
        let sector = m.sector(SectorLabel::FullProduct).unwrap();
        let p = assemble_background(&sector);
        for (k, mode) in sector.modes().iter().enumerate() {
            let expect = (mode.mu + mode.nu).powi(2);
            assert_eq!(p.symbol()[k], expect);
        }

        // Eastwood-Singer zero mode at (l=1, nu=0)
        let m = es_product(4);
        let sector = m.sector(SectorLabel::Factor1Only).unwrap();
        let p = assemble_background(&sector);
        assert_eq!(p.symbol()[2], 0.0);
        assert_eq!(p.symbol()[0], 0.0);
        // l=2 block: mu = 6, lambda = 36 - 12 = 24
        assert!((p.symbol()[4] - 24.0).abs() < 1e-13);
    }

    #[test]
    fn q_background_values() {
        let s2s2 = Arc::new(
            ProductManifold::new(
                FactorSpec::Sphere2 { radius: 1.0 },
                FactorSpec::Sphere2 { radius: 1.0 },
                [4, 4],
            )
            .unwrap(),
        );
        assert!((q_constant(&s2s2.curvature_scalars()) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(q_constant(&t4(2).curvature_scalars()), 0.0);
        assert!((q_constant(&es_product(4).curvature_scalars()) + 2.0).abs() < 1e-15);
        // round-sphere anchor for the ledger: R = 12, |Ric|^2 = 36 gives 6
        let round = CurvatureData {
            r1: 0.0,
            r2: 0.0,
            r: 12.0,
            ricci_norm_sq: 36.0,
            volume: 1.0,
        };
        assert_eq!(q_constant(&round), 6.0);
    }

    #[test]
    fn annihilates_constants() {
        let m = s2xt2(6, 3);
        let sector = m.sector(SectorLabel::FullProduct).unwrap();
        let p = assemble_background(&sector);
        let one = ScalarField::constant(&sector, 1.0).unwrap();
        assert!(p.relative_residual(&one).unwrap() <= 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = Arc::new(ConformalFactor::random(&sector, &mut rng, 0.08).unwrap());
        let pw = conformal_paneitz(&p, &w).unwrap();
        assert!(pw.relative_residual(&one).unwrap() <= 1e-10);
    }

    #[test]
    fn rescaled_with_zero_factor_matches_symbol() {
        let m = s2xt2(4, 2);
        let sector = m.sector(SectorLabel::FullProduct).unwrap();
        let p = assemble_background(&sector);
        let zero = Arc::new(ConformalFactor::zero(&sector).unwrap());
        let pz = conformal_paneitz(&p, &zero).unwrap();
        let dense = pz.dense().unwrap();
        let a = dense.action_matrix().unwrap();
        let scale = p.norm_scale();
        for i in 0..sector.dim() {
            for j in 0..sector.dim() {
                let expect = if i == j { p.symbol()[i] } else { 0.0 };
                assert!(
                    (a[(i, j)] - expect).abs() <= 1e-12 * scale,
                    "entry ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn constant_factor_scales_eigenvalues() {
        let m = s2xt2(3, 2);
        let sector = m.sector(SectorLabel::FullProduct).unwrap();
        let p = assemble_background(&sector);
        let c = 0.17;
        let cf = Arc::new(
            ConformalFactor::new(ScalarField::constant(&sector, c).unwrap()).unwrap(),
        );
        let pc = conformal_paneitz(&p, &cf).unwrap();
        let (vals, _) = pc.dense().unwrap().eigen().unwrap();
        let mut expect: Vec<f64> = p.symbol().iter().map(|l| l * (-4.0 * c).exp()).collect();
        expect.sort_by(|a, b| a.total_cmp(b));
        let scale = expect.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (got, want) in vals.iter().zip(expect.iter()) {
            assert!((got - want).abs() < 1e-10 * scale, "{got} vs {want}");
        }
    }

    #[test]
    fn rescaled_self_adjointness_50_pairs() {
        let m = s2xt2(6, 3);
        let sector = m.sector(SectorLabel::FullProduct).unwrap();
        let p = assemble_background(&sector);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let w = Arc::new(ConformalFactor::random(&sector, &mut rng, 0.08).unwrap());
        let pw = conformal_paneitz(&p, &w).unwrap();
        let weights = pw.measure_weights().unwrap();
        let band = sector.generation_bandlimit();
        for pair in 0..50 {
            let f = ScalarField::random_bandlimited(&sector, &mut rng, band, 1.0).unwrap();
            let h = ScalarField::random_bandlimited(&sector, &mut rng, band, 1.0).unwrap();
            let pf = pw.apply_grid(&f).unwrap();
            let ph = pw.apply_grid(&h).unwrap();
            let lhs: f64 = pf
                .iter()
                .zip(h.grid_values().unwrap())
                .zip(weights.values())
                .map(|((a, b), wt)| wt * a * b)
                .sum();
            let rhs: f64 = f
                .grid_values()
                .unwrap()
                .iter()
                .zip(ph.iter())
                .zip(weights.values())
                .map(|((a, b), wt)| wt * a * b)
                .sum();
            let scale = pw.norm_scale() * f.norm() * h.norm();
            assert!(
                (lhs - rhs).abs() <= 1e-10 * scale,
                "pair {pair}: defect {}",
                (lhs - rhs).abs() / scale
            );
        }
    }

    #[test]
    fn q_transform_identity_and_cocycle() {
        let m = t4(3);
        let sector = m.sector(SectorLabel::FullProduct).unwrap();
        let p = assemble_background(&sector);
        let q0 = q_background(&sector).unwrap();

        let zero = ConformalFactor::zero(&sector).unwrap();
        let q_same = q_transform(&q0, &zero, &p).unwrap();
        let diff = (q_same.field.grid_values().unwrap() - q0.field.grid_values().unwrap())
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(diff < 1e-14);

        // chain w1 then w2 versus w1 + w2 directly
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let w1 = Arc::new(ConformalFactor::random(&sector, &mut rng, 0.06).unwrap());
        let w2 = Arc::new(ConformalFactor::random(&sector, &mut rng, 0.06).unwrap());
        let q1 = q_transform(&q0, &w1, &p).unwrap();
        let p1 = conformal_paneitz(&p, &w1).unwrap();
        let q12 = q_transform(&q1, &w2, &p1).unwrap();
        let w12 = Arc::new(w1.compose(&w2).unwrap());
        let q_direct = q_transform(&q0, &w12, &p).unwrap();
        let scale = q_direct
            .field
            .grid_values()
            .unwrap()
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()));
        let diff = (q12.field.grid_values().unwrap() - q_direct.field.grid_values().unwrap())
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(diff <= 1e-9 * scale.max(1.0), "cocycle residual {diff}");
    }

    #[test]
    fn t4_q_is_bilaplacian_of_omega() {
        let m = t4(3);
        let sector = m.sector(SectorLabel::FullProduct).unwrap();
        let p = assemble_background(&sector);
        let q0 = q_background(&sector).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = Arc::new(ConformalFactor::random(&sector, &mut rng, 0.08).unwrap());
        let qw = q_transform(&q0, &w, &p).unwrap();
        // expected: e^{-4w} * D^2 w with D^2 the diagonal squared symbol
        let bilap = sector
            .synthesize_level(&(p.symbol() * w.omega().coeffs()), Level::Std)
            .unwrap();
        let expect = &bilap * w.expm4_std();
        let scale = expect.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let diff = (qw.field.grid_values().unwrap() - &expect)
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(diff <= 1e-12 * scale, "residual {diff}");
    }

    #[test]
    fn weighted_gram_is_exactly_symmetric() {
        let m = s2xt2(4, 2);
        let sector = m.sector(SectorLabel::FullProduct).unwrap();
        let p = assemble_background(&sector);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let w = Arc::new(ConformalFactor::random(&sector, &mut rng, 0.08).unwrap());
        let pw = conformal_paneitz(&p, &w).unwrap();
        let dense = pw.dense().unwrap();
        let mass = dense.mass.as_ref().unwrap();
        let defect = (mass - &mass.t())
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(defect == 0.0 || defect < 1e-15);
        // inner product of basis fields through the mass matrix matches
        // the direct weighted quadrature
        let weights = pw.measure_weights().unwrap();
        let f = ScalarField::basis_element(&sector, 1).unwrap();
        let h = ScalarField::basis_element(&sector, 2).unwrap();
        let direct = inner_product(&f, &h, &weights).unwrap();
        assert!((mass[(1, 2)] - direct).abs() < 1e-12);
    }
}
