//! Certified null spaces of the assembled operator and kernel-jump
//! parameter scans.
//!
//! Kernel dimension drives everything downstream, so zero modes are
//! accepted only when the spectrum shows a clear gap: the smallest
//! retained nonzero eigenvalue must exceed the zero threshold by a
//! factor of 10^3, otherwise the computation refuses to guess.

use std::sync::Arc;

use ndarray::{Array1, Array2};
use ndarray_linalg::QR;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{ConformalFactor, ScalarField, SectorLabel};
use crate::geometry::{FactorSpec, ProductManifold};
use crate::paneitz::{assemble_background, conformal_paneitz, PaneitzOperator};

/// Required ratio between the spectral gap and the zero threshold.
pub const GAP_RATIO_REQUIRED: f64 = 1e3;

/// Default relative zero threshold.
pub const DEFAULT_KERNEL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, serde::Serialize)]
pub struct KernelCertification {
    /// True when the claim is restricted to the computed sector.
    pub sector_certified: bool,
    /// Ratio gap / (tol * operator scale).
    pub gap_ratio: f64,
    /// For products with an abstract second factor: whether the symbol
    /// is provably positive for every nu > 0 at the admitted mu values,
    /// making the sector kernel the full kernel.
    pub full_kernel_positive: Option<bool>,
    pub note: String,
}

/// Orthonormal basis of the operator null space with tolerance metadata.
#[derive(Debug, Clone)]
pub struct KernelBasis {
    pub fields: Vec<ScalarField>,
    pub dim: usize,
    /// Relative zero threshold used.
    pub tol: f64,
    /// Smallest retained nonzero |eigenvalue|.
    pub gap: f64,
    pub certification: KernelCertification,
}

/// Positivity of the quadratic `nu -> (mu+nu)^2 + c1 mu + c2 nu` over
/// nu > 0 for each admitted mu. Returns (all_positive, description).
fn symbol_positivity_for_nu(p: &PaneitzOperator) -> (bool, String) {
    let c = p.coefficients();
    let mut mus: Vec<f64> = p.sector().modes().iter().map(|m| m.mu).collect();
    mus.sort_by(f64::total_cmp);
    mus.dedup();
    let mut windows = Vec::new();
    for mu in mus {
        let gamma0 = mu * mu + c.c1 * mu;
        let beta = 2.0 * mu + c.c2;
        let ok = if beta >= 0.0 {
            gamma0 >= 0.0
        } else {
            gamma0 > beta * beta / 4.0
        };
        if !ok {
            let disc = (beta * beta - 4.0 * gamma0).max(0.0).sqrt();
            let lo = ((-beta - disc) / 2.0).max(0.0);
            let hi = (-beta + disc) / 2.0;
            windows.push(format!("mu={mu:.6}: nu in [{lo:.6}, {hi:.6}]"));
        }
    }
    if windows.is_empty() {
        (
            true,
            "symbol positive for all nu > 0 at every admitted mu; sector kernel is the full kernel for any factor-2 spectrum".to_string(),
        )
    } else {
        (
            false,
            format!(
                "symbol may vanish for factor-2 eigenvalues in: {}",
                windows.join("; ")
            ),
        )
    }
}

/// Compute the null space of an assembled operator.
///
/// Background operators are diagonal, so zero modes are read off the
/// symbol. Rescaled operators go through the dense generalized
/// eigenproblem in the measure-weighted inner product.
pub fn kernel_basis(p: &PaneitzOperator, tol: f64) -> Result<KernelBasis> {
    if tol <= 0.0 {
        return Err(Error::InvalidSpec("kernel tolerance must be positive".into()));
    }
    let sector = p.sector();
    let (values, vectors): (Array1<f64>, Option<Array2<f64>>) = if p.is_background() {
        (p.symbol().clone(), None)
    } else {
        let (vals, vecs) = p.dense()?.eigen()?;
        (vals, Some(vecs))
    };
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let threshold = tol * scale;
    let mut kernel_idx = Vec::new();
    let mut gap = f64::INFINITY;
    for (k, v) in values.iter().enumerate() {
        if v.abs() <= threshold {
            kernel_idx.push(k);
        } else {
            gap = gap.min(v.abs());
        }
    }
    let gap_ratio = if threshold > 0.0 { gap / threshold } else { f64::INFINITY };
    if gap_ratio < GAP_RATIO_REQUIRED {
        return Err(Error::IndeterminateGap {
            ratio: gap_ratio,
            required: GAP_RATIO_REQUIRED,
        });
    }

    let fields = match &vectors {
        None => {
            // diagonal case: kernel modes are basis elements; put the
            // constant mode first
            let cm = sector.constant_mode();
            if !kernel_idx.contains(&cm) {
                return Err(Error::InvariantViolation(
                    "constant mode missing from the symbol kernel".to_string(),
                ));
            }
            kernel_idx.sort_by_key(|&k| (k != cm, k));
            kernel_idx
                .iter()
                .map(|&k| ScalarField::basis_element(sector, k))
                .collect::<Result<Vec<_>>>()?
        }
        Some(vecs) => {
            let dim = sector.dim();
            let k = kernel_idx.len();
            let mut span = Array2::zeros((dim, k));
            for (col, &idx) in kernel_idx.iter().enumerate() {
                span.column_mut(col).assign(&vecs.column(idx));
            }
            // orthonormalize in the background inner product
            let (q, _r) = span
                .qr()
                .map_err(|e| Error::InvariantViolation(e.to_string()))?;
            // rotate so the constant function comes first
            let mut e0 = Array1::zeros(dim);
            e0[sector.constant_mode()] = 1.0;
            let proj = q.t().dot(&e0);
            let pnorm = proj.iter().map(|c| c * c).sum::<f64>().sqrt();
            if (pnorm - 1.0).abs() > 1e-6 {
                return Err(Error::InvariantViolation(format!(
                    "constant function not inside the computed kernel (projection norm {pnorm})"
                )));
            }
            let first = q.dot(&(&proj / pnorm));
            let mut stacked = Array2::zeros((dim, k + 1));
            stacked.column_mut(0).assign(&first);
            for col in 0..k {
                stacked.column_mut(col + 1).assign(&q.column(col));
            }
            let (qq, _): (Array2<f64>, Array2<f64>) = stacked
                .qr()
                .map_err(|e| Error::InvariantViolation(e.to_string()))?;
            (0..k)
                .map(|col| {
                    let mut v = qq.column(col).to_owned();
                    // keep the constant representative positively oriented
                    if col == 0 && v[sector.constant_mode()] < 0.0 {
                        v *= -1.0;
                    }
                    ScalarField::from_coeffs(sector, v)
                })
                .collect::<Result<Vec<_>>>()?
        }
    };

    let abstract_factor2 = matches!(
        sector.manifold().factor(1).spec,
        FactorSpec::AbstractHyperbolic2 { .. }
    );
    let sector_certified = sector.label() == SectorLabel::Factor1Only;
    let (full_kernel_positive, note) = if abstract_factor2 && sector_certified {
        let (ok, note) = symbol_positivity_for_nu(p);
        (Some(ok), note)
    } else if sector_certified {
        (
            None,
            "kernel certified within the factor1_only sector".to_string(),
        )
    } else {
        (None, "kernel certified over the full product basis".to_string())
    };

    Ok(KernelBasis {
        dim: fields.len(),
        fields,
        tol,
        gap,
        certification: KernelCertification {
            sector_certified,
            gap_ratio,
            full_kernel_positive,
            note,
        },
    })
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct StabilityReport {
    pub max_relative_residual: f64,
    pub dim_background: usize,
    pub dim_rescaled: usize,
    pub pass: bool,
}

/// Verify that a certified kernel survives a conformal rescaling: every
/// member stays a zero mode of the rescaled operator and the recomputed
/// kernel dimension is unchanged. A failure signals a discretization
/// bug, not mathematics, hence the error.
pub fn check_conformal_stability(
    basis: &KernelBasis,
    p_background: &PaneitzOperator,
    omega: &Arc<ConformalFactor>,
) -> Result<StabilityReport> {
    let rescaled = conformal_paneitz(p_background, omega)?;
    let mut max_rel: f64 = 0.0;
    for u in &basis.fields {
        max_rel = max_rel.max(rescaled.relative_residual(u)?);
    }
    let recomputed = kernel_basis(&rescaled, basis.tol)?;
    let pass = max_rel <= 10.0 * basis.tol && recomputed.dim == basis.dim;
    if !pass {
        return Err(Error::StabilityViolation(format!(
            "max residual {max_rel:.3e} (limit {:.3e}), dim {} -> {}",
            10.0 * basis.tol,
            basis.dim,
            recomputed.dim
        )));
    }
    Ok(StabilityReport {
        max_relative_residual: max_rel,
        dim_background: basis.dim,
        dim_rescaled: recomputed.dim,
        pass,
    })
}

/// A one-parameter family of product manifolds obtained by varying the
/// length scale of one factor.
#[derive(Debug, Clone)]
pub struct ManifoldFamily {
    pub factor1: FactorSpec,
    pub factor2: FactorSpec,
    pub resolution: [usize; 2],
    /// Which factor's scale is varied (0 or 1).
    pub vary_factor: usize,
}

impl ManifoldFamily {
    pub fn manifold_at(&self, scale: f64) -> Result<ProductManifold> {
        let (f1, f2) = if self.vary_factor == 0 {
            (self.factor1.with_scale(scale), self.factor2.clone())
        } else {
            (self.factor1.clone(), self.factor2.with_scale(scale))
        };
        ProductManifold::new(f1, f2, self.resolution)
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ScanPoint {
    pub param: f64,
    pub dim: usize,
    /// Smallest |lambda| over the nonconstant sector modes.
    pub min_abs_lambda: f64,
    /// Signed symbol value of that mode (tracks zero crossings).
    pub signed_min_lambda: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ScanResult {
    pub points: Vec<ScanPoint>,
    /// Parameter brackets where the tracked eigenvalue changes sign or
    /// hits the zero threshold.
    pub crossing_brackets: Vec<[f64; 2]>,
}

/// Scan kernel dimension along a one-parameter family. With steps = 1
/// the single evaluation happens at the range start. Dimensions are
/// reported per step; no interpolation beyond bracket endpoints.
pub fn scan_parameter(
    family: &ManifoldFamily,
    range: [f64; 2],
    steps: usize,
    sector: SectorLabel,
    tol: f64,
) -> Result<ScanResult> {
    if steps == 0 {
        return Err(Error::InvalidSpec("scan needs at least one step".into()));
    }
    let params: Vec<f64> = if steps == 1 {
        vec![range[0]]
    } else {
        (0..steps)
            .map(|i| range[0] + i as f64 * (range[1] - range[0]) / (steps - 1) as f64)
            .collect()
    };
    let points: Vec<ScanPoint> = params
        .par_iter()
        .map(|&param| -> Result<ScanPoint> {
            let m = Arc::new(family.manifold_at(param)?);
            let sec = m.sector(sector)?;
            let p = assemble_background(&sec);
            let scale = p.norm_scale();
            let threshold = tol * scale;
            let cm = sec.constant_mode();
            let mut dim = 0usize;
            let mut min_abs = f64::INFINITY;
            let mut signed = f64::INFINITY;
            for (k, lam) in p.symbol().iter().enumerate() {
                if lam.abs() <= threshold {
                    dim += 1;
                }
                if k != cm && lam.abs() < min_abs {
                    min_abs = lam.abs();
                    signed = *lam;
                }
            }
            Ok(ScanPoint {
                param,
                dim,
                min_abs_lambda: min_abs,
                signed_min_lambda: signed,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut crossing_brackets = Vec::new();
    for w in points.windows(2) {
        if w[0].signed_min_lambda * w[1].signed_min_lambda < 0.0 {
            crossing_brackets.push([w[0].param, w[1].param]);
        }
    }
    for p in &points {
        if p.dim > 1 {
            crossing_brackets.push([p.param, p.param]);
        }
    }
    crossing_brackets.sort_by(|a, b| a[0].total_cmp(&b[0]));
    Ok(ScanResult {
        points,
        crossing_brackets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

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

    #[test]
    fn t4_kernel_is_constants_only() {
        let m = t4(4);
        let sector = m.sector(SectorLabel::FullProduct).unwrap();
        let p = assemble_background(&sector);
        let kb = kernel_basis(&p, DEFAULT_KERNEL_TOL).unwrap();
        assert_eq!(kb.dim, 1);
        let c = kb.fields[0].coeffs();
        assert_eq!(c[sector.constant_mode()], 1.0);
    }

    #[test]
    fn es_sector_kernel_is_four_dimensional() {
        let m = es_product(8);
        let sector = m.sector(SectorLabel::Factor1Only).unwrap();
        let p = assemble_background(&sector);
        let kb = kernel_basis(&p, DEFAULT_KERNEL_TOL).unwrap();
        assert_eq!(kb.dim, 4);
        // constant plus the three l=1 harmonics
        let labels: Vec<String> = (0..4).map(|k| sector.mode_label(k)).collect();
        assert!(labels[0].starts_with("Y0,0"));
        for u in &kb.fields {
            assert!(p.relative_residual(u).unwrap() <= DEFAULT_KERNEL_TOL);
        }
        assert_eq!(kb.certification.full_kernel_positive, Some(true));
        assert!(kb.certification.sector_certified);
    }

    #[test]
    fn s2xt2_kernel_and_gap() {
        let m = s2xt2(6, 3);
        // within the sphere-only sector the first nonzero symbol value
        // is the l=1 mode at 8/3
        let sector = m.sector(SectorLabel::Factor1Only).unwrap();
        let p = assemble_background(&sector);
        let kb = kernel_basis(&p, DEFAULT_KERNEL_TOL).unwrap();
        assert_eq!(kb.dim, 1);
        assert!((kb.gap - 8.0 / 3.0).abs() < 1e-12, "gap = {}", kb.gap);
        // the full product adds torus modes below that: (mu=0, nu=1)
        // sits at 1 + 4/3 = 7/3
        let full = m.sector(SectorLabel::FullProduct).unwrap();
        let p = assemble_background(&full);
        let kb = kernel_basis(&p, DEFAULT_KERNEL_TOL).unwrap();
        assert_eq!(kb.dim, 1);
        assert!((kb.gap - 7.0 / 3.0).abs() < 1e-12, "gap = {}", kb.gap);
    }

    #[test]
    fn kernel_dim_independent_of_tol_in_gap_window() {
        let m = es_product(8);
        let sector = m.sector(SectorLabel::Factor1Only).unwrap();
        let p = assemble_background(&sector);
        for tol in [1e-10, 1e-9, 1e-8] {
            assert_eq!(kernel_basis(&p, tol).unwrap().dim, 4);
        }
    }

    #[test]
    fn indeterminate_gap_is_flagged() {
        let m = t4(4);
        let sector = m.sector(SectorLabel::FullProduct).unwrap();
        let p = assemble_background(&sector);
        // threshold 1e-5 * ||P|| puts the first nonzero eigenvalue within
        // 10^3 of the cutoff
        match kernel_basis(&p, 1e-5) {
            Err(Error::IndeterminateGap { .. }) => {}
            other => panic!("expected IndeterminateGap, got {other:?}"),
        }
    }

    #[test]
    fn symbol_kernel_matches_dense_kernel_at_zero_factor() {
        let m = s2xt2(3, 2);
        let sector = m.sector(SectorLabel::FullProduct).unwrap();
        let p = assemble_background(&sector);
        let kb = kernel_basis(&p, DEFAULT_KERNEL_TOL).unwrap();
        let zero = Arc::new(ConformalFactor::zero(&sector).unwrap());
        let pz = conformal_paneitz(&p, &zero).unwrap();
        let kz = kernel_basis(&pz, DEFAULT_KERNEL_TOL).unwrap();
        assert_eq!(kb.dim, kz.dim);
        // spans match: project dense kernel fields onto the symbol one
        for f in &kz.fields {
            let mut proj = 0.0;
            for b in &kb.fields {
                let d: f64 = f
                    .coeffs()
                    .iter()
                    .zip(b.coeffs().iter())
                    .map(|(a, c)| a * c)
                    .sum();
                proj += d * d;
            }
            assert!((proj - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn stability_under_rescaling_t4_sector() {
        let m = t4(8);
        let sector = m.sector(SectorLabel::Factor1Only).unwrap();
        let p = assemble_background(&sector);
        let kb = kernel_basis(&p, DEFAULT_KERNEL_TOL).unwrap();
        assert_eq!(kb.dim, 1);
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = Arc::new(ConformalFactor::random(&sector, &mut rng, 0.08).unwrap());
            let rep = check_conformal_stability(&kb, &p, &w).unwrap();
            assert_eq!(rep.dim_rescaled, 1);
            assert!(rep.pass);
        }
    }

    #[test]
    fn stability_under_rescaling_es_sector() {
        let m = es_product(8);
        let sector = m.sector(SectorLabel::Factor1Only).unwrap();
        let p = assemble_background(&sector);
        let kb = kernel_basis(&p, DEFAULT_KERNEL_TOL).unwrap();
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let w = Arc::new(ConformalFactor::random(&sector, &mut rng, 0.08).unwrap());
            let rep = check_conformal_stability(&kb, &p, &w).unwrap();
            assert_eq!(rep.dim_rescaled, 4);
            assert!(rep.max_relative_residual <= 10.0 * kb.tol);
        }
    }

    #[test]
    fn stability_with_zero_factor_has_zero_residual() {
        let m = t4(3);
        let sector = m.sector(SectorLabel::FullProduct).unwrap();
        let p = assemble_background(&sector);
        let kb = kernel_basis(&p, DEFAULT_KERNEL_TOL).unwrap();
        let zero = Arc::new(ConformalFactor::zero(&sector).unwrap());
        let rep = check_conformal_stability(&kb, &p, &zero).unwrap();
        assert_eq!(rep.max_relative_residual, 0.0);
    }

    #[test]
    fn scan_sphere_hyperbolic_family() {
        let family = ManifoldFamily {
            factor1: FactorSpec::Sphere2 { radius: 1.0 },
            factor2: FactorSpec::AbstractHyperbolic2 {
                curvature_scale: 1.0,
                genus: 2,
                spectrum: None,
            },
            resolution: [8, 1],
            vary_factor: 0,
        };
        let scan = scan_parameter(
            &family,
            [0.5, 1.5],
            101,
            SectorLabel::Factor1Only,
            DEFAULT_KERNEL_TOL,
        )
        .unwrap();
        assert_eq!(scan.points.len(), 101);
        for p in &scan.points {
            if (p.param - 1.0).abs() < 5e-3 {
                assert_eq!(p.dim, 4, "param {}", p.param);
                assert!(p.min_abs_lambda <= 1e-9);
            } else {
                assert_eq!(p.dim, 1, "param {}", p.param);
            }
        }
        assert!(!scan.crossing_brackets.is_empty());
        let hit = scan
            .crossing_brackets
            .iter()
            .any(|b| b[0] <= 1.0 && 1.0 <= b[1]);
        assert!(hit, "no bracket around the crossing at 1.0");
    }

    #[test]
    fn scan_sphere_torus_family_stays_trivial() {
        let family = ManifoldFamily {
            factor1: FactorSpec::Sphere2 { radius: 1.0 },
            factor2: FactorSpec::FlatTorus2 {
                periods: [2.0 * PI, 2.0 * PI],
            },
            resolution: [6, 3],
            vary_factor: 0,
        };
        let scan = scan_parameter(
            &family,
            [0.5, 2.0],
            31,
            SectorLabel::FullProduct,
            DEFAULT_KERNEL_TOL,
        )
        .unwrap();
        assert!(scan.points.iter().all(|p| p.dim == 1));
        assert!(scan.crossing_brackets.is_empty());
    }

    #[test]
    fn scan_with_one_step_evaluates_range_start() {
        let family = ManifoldFamily {
            factor1: FactorSpec::Sphere2 { radius: 1.0 },
            factor2: FactorSpec::AbstractHyperbolic2 {
                curvature_scale: 1.0,
                genus: 2,
                spectrum: None,
            },
            resolution: [6, 1],
            vary_factor: 0,
        };
        let scan = scan_parameter(
            &family,
            [0.75, 1.25],
            1,
            SectorLabel::Factor1Only,
            DEFAULT_KERNEL_TOL,
        )
        .unwrap();
        assert_eq!(scan.points.len(), 1);
        assert_eq!(scan.points[0].param, 0.75);
        assert_eq!(scan.points[0].dim, 1);
    }
}
