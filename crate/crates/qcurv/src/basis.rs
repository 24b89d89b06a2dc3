//! Orthonormal spectral bases for the surface factors.
//!
//! Each factor carries a list of Laplace eigenfunctions (real spherical
//! harmonics on the sphere, real Fourier pairs on the torus, abstract
//! spectrum entries on a hyperbolic surface) together with quadrature
//! grids at three refinement levels:
//!
//! * `std`  — exact for products of two basis functions (Gram matrices,
//!   inner products, bandlimited analysis),
//! * `fine` — exact through roughly three times the truncation degree,
//!   used to analyze pointwise-nonlinear data (`e^{2w}`, powers),
//! * `xfine` — a reference grid one notch finer, used only to measure
//!   the aliasing residual of the `fine` analysis.

use std::f64::consts::PI;
use std::sync::OnceLock;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::geometry::FactorSpec;

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_pair(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_pair(n, z);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Legendre polynomial P_n and its derivative at x.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Fully normalized associated Legendre values q_lm(x) for l <= lmax,
/// 0 <= m <= l, such that Y_l^0 = q_l0 and Y_l^{|m|>0} = sqrt(2) q_lm trig(m phi)
/// are orthonormal on the unit sphere. Flat index m + l(l+1)/2.
fn normalized_assoc_legendre(lmax: usize, x: f64) -> Vec<f64> {
    let size = (lmax + 1) * (lmax + 2) / 2;
    let mut q = vec![0.0; size];
    let idx = |l: usize, m: usize| m + l * (l + 1) / 2;
    let s = (1.0 - x * x).max(0.0).sqrt();
    q[0] = (1.0 / (4.0 * PI)).sqrt();
    for m in 1..=lmax {
        q[idx(m, m)] = -((2.0 * m as f64 + 1.0) / (2.0 * m as f64)).sqrt() * s * q[idx(m - 1, m - 1)];
    }
    for m in 0..lmax {
        q[idx(m + 1, m)] = (2.0 * m as f64 + 3.0).sqrt() * x * q[idx(m, m)];
    }
    for m in 0..=lmax {
        for l in (m + 2)..=lmax {
            let lf = l as f64;
            let mf = m as f64;
            let a = (((2.0 * lf + 1.0) * (2.0 * lf - 1.0)) / ((lf - mf) * (lf + mf))).sqrt();
            let b = (((2.0 * lf + 1.0) * (lf - 1.0 - mf) * (lf - 1.0 + mf))
                / ((2.0 * lf - 3.0) * (lf - mf) * (lf + mf)))
                .sqrt();
            q[idx(l, m)] = a * x * q[idx(l - 1, m)] - b * q[idx(l - 2, m)];
        }
    }
    q
}

/// One basis function of a factor.
#[derive(Debug, Clone)]
pub struct FactorMode {
    /// Laplace eigenvalue (nonnegative convention).
    pub eigenvalue: f64,
    /// Spectral degree used by bandlimit policies (l on the sphere,
    /// max axis index on the torus, list position on abstract factors).
    pub degree: usize,
    /// Human-readable label for reports.
    pub label: String,
}

/// Quadrature grid plus the node-by-mode evaluation table at one level.
#[derive(Debug, Clone)]
pub struct GridLevel {
    /// Chart coordinates of each node.
    pub coords: Vec<[f64; 2]>,
    /// Quadrature weights; their sum is the factor area.
    pub weights: Array1<f64>,
    /// values[(node, mode)] of the orthonormal basis.
    pub values: Array2<f64>,
}

#[derive(Debug)]
pub struct FactorGrid {
    pub std: GridLevel,
    pub fine: GridLevel,
    pub xfine: GridLevel,
}

/// A surface factor with its spectral basis.
#[derive(Debug)]
pub struct FactorBasis {
    pub spec: FactorSpec,
    pub resolution: usize,
    pub area: f64,
    pub modes: Vec<FactorMode>,
    grid: OnceLock<Option<FactorGrid>>,
}

impl FactorBasis {
    pub fn new(spec: FactorSpec, resolution: usize) -> Result<Self> {
        spec.validate()?;
        let modes = match &spec {
            FactorSpec::Sphere2 { radius } => sphere_modes(*radius, resolution),
            FactorSpec::FlatTorus2 { periods } => torus_modes(*periods, resolution),
            FactorSpec::AbstractHyperbolic2 { spectrum, .. } => {
                abstract_modes(spectrum.as_deref(), resolution)
            }
        };
        Ok(FactorBasis {
            area: spec.area(),
            spec,
            resolution,
            modes,
            grid: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn is_grid_backed(&self) -> bool {
        !matches!(self.spec, FactorSpec::AbstractHyperbolic2 { .. })
    }

    /// Grid data, built on first use. None for abstract factors.
    pub fn grid(&self) -> Option<&FactorGrid> {
        self.grid
            .get_or_init(|| match &self.spec {
                FactorSpec::Sphere2 { radius } => Some(sphere_grid(*radius, self.resolution)),
                FactorSpec::FlatTorus2 { periods } => Some(torus_grid(*periods, self.resolution)),
                FactorSpec::AbstractHyperbolic2 { .. } => None,
            })
            .as_ref()
    }

    pub fn require_grid(&self) -> Result<&FactorGrid> {
        self.grid().ok_or_else(|| {
            Error::AbstractFactorNotGridBacked(format!(
                "factor {:?} has no quadrature grid",
                self.spec.kind_name()
            ))
        })
    }
}

fn sphere_modes(radius: f64, lmax: usize) -> Vec<FactorMode> {
    let mut modes = Vec::with_capacity((lmax + 1) * (lmax + 1));
    for l in 0..=lmax {
        let mu = (l * (l + 1)) as f64 / (radius * radius);
        for m in -(l as i64)..=(l as i64) {
            modes.push(FactorMode {
                eigenvalue: mu,
                degree: l,
                label: format!("Y{l},{m}"),
            });
        }
    }
    modes
}

/// Per-axis torus mode: index 0 is the constant, then cos/sin pairs.
fn torus_axis_label(i: usize) -> String {
    if i == 0 {
        "1".to_string()
    } else if i % 2 == 1 {
        format!("c{}", i.div_ceil(2))
    } else {
        format!("s{}", i / 2)
    }
}

fn torus_axis_index(i: usize) -> usize {
    i.div_ceil(2)
}

fn torus_modes(periods: [f64; 2], kmax: usize) -> Vec<FactorMode> {
    let per_axis = 2 * kmax + 1;
    let mut modes = Vec::with_capacity(per_axis * per_axis);
    for i in 0..per_axis {
        let k1 = torus_axis_index(i);
        let e1 = (2.0 * PI * k1 as f64 / periods[0]).powi(2);
        for j in 0..per_axis {
            let k2 = torus_axis_index(j);
            let e2 = (2.0 * PI * k2 as f64 / periods[1]).powi(2);
            modes.push(FactorMode {
                eigenvalue: e1 + e2,
                degree: k1.max(k2),
                label: format!("{}x{}", torus_axis_label(i), torus_axis_label(j)),
            });
        }
    }
    modes
}

fn abstract_modes(spectrum: Option<&[f64]>, count: usize) -> Vec<FactorMode> {
    let eigenvalues: Vec<f64> = match spectrum {
        Some(s) => s.iter().copied().take(count.max(1)).collect(),
        None => vec![0.0],
    };
    eigenvalues
        .into_iter()
        .enumerate()
        .map(|(j, nu)| FactorMode {
            eigenvalue: nu,
            degree: j,
            label: format!("phi{j}"),
        })
        .collect()
}

/// Gauss-Legendre x uniform-longitude grid level on a radius-a sphere,
/// exact for basis products through total degree `exact_degree`.
fn sphere_level(radius: f64, lmax: usize, exact_degree: usize) -> GridLevel {
    let ntheta = exact_degree / 2 + 1;
    let nphi = exact_degree + 1;
    let (xs, ws) = gauss_legendre(ntheta);
    let dphi = 2.0 * PI / nphi as f64;
    let n_nodes = ntheta * nphi;
    let n_modes = (lmax + 1) * (lmax + 1);
    let mut coords = Vec::with_capacity(n_nodes);
    let mut weights = Array1::zeros(n_nodes);
    let mut values = Array2::zeros((n_nodes, n_modes));
    let idx = |l: usize, m: usize| m + l * (l + 1) / 2;
    for (it, (&x, &wt)) in xs.iter().zip(ws.iter()).enumerate() {
        let theta = x.acos();
        let q = normalized_assoc_legendre(lmax, x);
        for ip in 0..nphi {
            let phi = ip as f64 * dphi;
            let node = it * nphi + ip;
            coords.push([theta, phi]);
            weights[node] = wt * dphi * radius * radius;
            let mut col = 0;
            for l in 0..=lmax {
                for m in -(l as i64)..=(l as i64) {
                    let v = if m == 0 {
                        q[idx(l, 0)]
                    } else if m > 0 {
                        std::f64::consts::SQRT_2 * q[idx(l, m as usize)] * (m as f64 * phi).cos()
                    } else {
                        std::f64::consts::SQRT_2 * q[idx(l, (-m) as usize)]
                            * ((-m) as f64 * phi).sin()
                    };
                    values[(node, col)] = v / radius;
                    col += 1;
                }
            }
        }
    }
    GridLevel {
        coords,
        weights,
        values,
    }
}

fn sphere_grid(radius: f64, lmax: usize) -> FactorGrid {
    FactorGrid {
        std: sphere_level(radius, lmax, 2 * lmax + 1),
        fine: sphere_level(radius, lmax, 3 * lmax + 4),
        xfine: sphere_level(radius, lmax, 4 * lmax + 6),
    }
}

/// Uniform periodic grid level on a flat torus, exact for products of
/// Fourier modes with axis frequencies up to `exact_index`.
fn torus_level(periods: [f64; 2], kmax: usize, exact_index: usize) -> GridLevel {
    let n_axis = exact_index + 1;
    let per_axis = 2 * kmax + 1;
    let n_nodes = n_axis * n_axis;
    let n_modes = per_axis * per_axis;
    let mut coords = Vec::with_capacity(n_nodes);
    let mut weights = Array1::zeros(n_nodes);
    let mut values = Array2::zeros((n_nodes, n_modes));
    let axis_table = |period: f64| -> Array2<f64> {
        let mut t = Array2::zeros((n_axis, per_axis));
        let norm0 = (1.0 / period).sqrt();
        let norm = (2.0 / period).sqrt();
        for j in 0..n_axis {
            let x = j as f64 * period / n_axis as f64;
            t[(j, 0)] = norm0;
            for k in 1..=kmax {
                let arg = 2.0 * PI * k as f64 * x / period;
                t[(j, 2 * k - 1)] = norm * arg.cos();
                t[(j, 2 * k)] = norm * arg.sin();
            }
        }
        t
    };
    let tx = axis_table(periods[0]);
    let ty = axis_table(periods[1]);
    let cell = periods[0] * periods[1] / (n_axis * n_axis) as f64;
    for jx in 0..n_axis {
        for jy in 0..n_axis {
            let node = jx * n_axis + jy;
            coords.push([
                jx as f64 * periods[0] / n_axis as f64,
                jy as f64 * periods[1] / n_axis as f64,
            ]);
            weights[node] = cell;
            for ix in 0..per_axis {
                for iy in 0..per_axis {
                    values[(node, ix * per_axis + iy)] = tx[(jx, ix)] * ty[(jy, iy)];
                }
            }
        }
    }
    GridLevel {
        coords,
        weights,
        values,
    }
}

fn torus_grid(periods: [f64; 2], kmax: usize) -> FactorGrid {
    FactorGrid {
        std: torus_level(periods, kmax, 2 * kmax),
        fine: torus_level(periods, kmax, 3 * kmax + 4),
        xfine: torus_level(periods, kmax, 4 * kmax + 6),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FactorSpec;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // degree 15 is the exactness edge for 8 nodes
        let int_x14: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(14)).sum();
        assert!((int_x14 - 2.0 / 15.0).abs() < 1e-13);
    }

    #[test]
    fn sphere_basis_is_orthonormal_under_std_quadrature() {
        let f = FactorBasis::new(FactorSpec::Sphere2 { radius: 1.3 }, 8).unwrap();
        let g = f.grid().unwrap();
        let b = &g.std.values;
        let w = &g.std.weights;
        assert!((w.sum() - f.area).abs() < 1e-12 * f.area);
        let n = f.dim();
        for i in (0..n).step_by(7) {
            for j in (0..n).step_by(5) {
                let dot: f64 = (0..b.nrows()).map(|k| w[k] * b[(k, i)] * b[(k, j)]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (dot - expect).abs() < 1e-12,
                    "gram({i},{j}) = {dot}"
                );
            }
        }
    }

    #[test]
    fn torus_basis_is_orthonormal_under_std_quadrature() {
        let f = FactorBasis::new(
            FactorSpec::FlatTorus2 {
                periods: [2.0 * PI, 4.0],
            },
            4,
        )
        .unwrap();
        let g = f.grid().unwrap();
        let b = &g.std.values;
        let w = &g.std.weights;
        assert!((w.sum() - f.area).abs() < 1e-12 * f.area);
        let n = f.dim();
        for i in 0..n {
            for j in i..n {
                let dot: f64 = (0..b.nrows()).map(|k| w[k] * b[(k, i)] * b[(k, j)]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-12, "gram({i},{j}) = {dot}");
            }
        }
    }

    #[test]
    fn sphere_eigenvalues_scale_with_radius() {
        let f = FactorBasis::new(FactorSpec::Sphere2 { radius: 2.0 }, 3).unwrap();
        // l=1 block sits at indices 1..4
        assert!((f.modes[1].eigenvalue - 2.0 / 4.0).abs() < 1e-15);
        assert!((f.modes[4].eigenvalue - 6.0 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn abstract_factor_has_no_grid() {
        let f = FactorBasis::new(
            FactorSpec::AbstractHyperbolic2 {
                curvature_scale: 1.0,
                genus: 2,
                spectrum: None,
            },
            1,
        )
        .unwrap();
        assert!(f.grid().is_none());
        assert!(f.require_grid().is_err());
        assert_eq!(f.dim(), 1);
        assert_eq!(f.modes[0].eigenvalue, 0.0);
    }
}
