//! The invariant functional on the operator kernel and everything the
//! crate derives from it: its null space, the constant/null
//! decomposition of the kernel, forbidden-function certificates,
//! obstruction detection for constant-Q prescription, and the harmonic
//! dimension report.
//!
//! The guiding facts: for u in the kernel, the integral of u against Q
//! does not depend on the metric chosen in the conformal class; the
//! total integral k_Q is a global invariant; and nonzero kernel fields
//! annihilated by the functional can never equal a Q scalar, which is
//! what the certificates exploit.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use ndarray_linalg::SVD;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{
    inner_product, integral, pointwise_map, ConformalFactor, MeasureWeights, MetricTag,
    ScalarField, SectorBasis,
};
use crate::kernel::{kernel_basis, KernelBasis};
use crate::paneitz::{assemble_background, conformal_paneitz, q_background, q_transform, PaneitzOperator, QField};

/// Relative tolerances used by the functional layer. Every threshold is
/// scaled by the appropriate combination of the Q sup norm, field norms
/// and the volume, so pass/fail is resolution independent.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Tolerances {
    /// Zero threshold for kernel eigenvalues, relative to the operator scale.
    pub kernel_tol: f64,
    /// Relative drift allowed for conformally invariant quantities.
    pub functional_rel: f64,
    /// Membership thresholds for null-space tests.
    pub membership_rel: f64,
    /// Pointwise sign margins, relative to sup norms.
    pub sign_margin_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            kernel_tol: crate::kernel::DEFAULT_KERNEL_TOL,
            functional_rel: 1e-8,
            membership_rel: 1e-9,
            sign_margin_rel: 1e-10,
        }
    }
}

/// Everything needed to evaluate the functional under one metric of the
/// conformal class: the metric's Q field and measure, plus the
/// conformally stable kernel shared by the whole class.
#[derive(Debug, Clone)]
pub struct QContext {
    sector: Arc<SectorBasis>,
    background_operator: PaneitzOperator,
    /// Total conformal factor from the background; None = background.
    total_factor: Option<Arc<ConformalFactor>>,
    operator: PaneitzOperator,
    q: QField,
    weights: MeasureWeights,
    kernel: Arc<KernelBasis>,
    kq: f64,
    /// Largest integrand scale (sup|Q| times volume) seen along the
    /// metric chain; the reference for "this integral is zero" tests.
    invariant_scale: f64,
    tol: Tolerances,
}

impl QContext {
    pub fn background(sector: &Arc<SectorBasis>, tol: Tolerances) -> Result<Self> {
        let p = assemble_background(sector);
        let kernel = Arc::new(kernel_basis(&p, tol.kernel_tol)?);
        let q = q_background(sector)?;
        let weights = p.measure_weights()?;
        let kq = q.total(&weights)?;
        let invariant_scale = (q.sup_norm()? * weights.total()).max(f64::MIN_POSITIVE);
        Ok(QContext {
            sector: Arc::clone(sector),
            background_operator: p.clone(),
            total_factor: None,
            operator: p,
            q,
            weights,
            kernel,
            kq,
            invariant_scale,
            tol,
        })
    }

    /// The context for `e^{2w} g` where `g` is this context's metric.
    /// The kernel is reused (conformal stability); k_Q is recomputed in
    /// the new metric and must agree with the stored invariant.
    pub fn rescaled(&self, omega: Arc<ConformalFactor>) -> Result<Self> {
        let total = match &self.total_factor {
            None => Arc::clone(&omega),
            Some(t) => Arc::new(t.compose(&omega)?),
        };
        let operator = conformal_paneitz(&self.background_operator, &total)?;
        let q = q_transform(&self.q, &omega, &self.operator)?;
        let weights = omega.rescale_weights(&self.weights);
        let kq = q.total(&weights)?;
        // drift is judged against the size of the integrand anywhere in
        // the chain; on Q-flat backgrounds the local scale is degenerate
        let invariant_scale = self
            .invariant_scale
            .max(q.sup_norm()? * weights.total())
            .max(f64::MIN_POSITIVE);
        if (kq - self.kq).abs() > self.tol.functional_rel * invariant_scale {
            return Err(Error::InvariantViolation(format!(
                "k_Q drifted from {:.12e} to {:.12e} under rescaling",
                self.kq, kq
            )));
        }
        Ok(QContext {
            sector: Arc::clone(&self.sector),
            background_operator: self.background_operator.clone(),
            total_factor: Some(total),
            operator,
            q,
            weights,
            kernel: Arc::clone(&self.kernel),
            kq,
            invariant_scale,
            tol: self.tol,
        })
    }

    pub fn sector(&self) -> &Arc<SectorBasis> {
        &self.sector
    }

    pub fn operator(&self) -> &PaneitzOperator {
        &self.operator
    }

    pub fn background_operator(&self) -> &PaneitzOperator {
        &self.background_operator
    }

    pub fn total_factor(&self) -> Option<&Arc<ConformalFactor>> {
        self.total_factor.as_ref()
    }

    pub fn q(&self) -> &QField {
        &self.q
    }

    pub fn weights(&self) -> &MeasureWeights {
        &self.weights
    }

    pub fn kernel(&self) -> &KernelBasis {
        &self.kernel
    }

    pub fn kq(&self) -> f64 {
        self.kq
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    pub fn metric_tag(&self) -> &MetricTag {
        &self.q.tag
    }

    /// Volume in the context metric.
    pub fn volume(&self) -> f64 {
        self.weights.total()
    }

    /// Natural scale of k_Q-sized quantities: sup|Q| times the volume,
    /// floored by the largest such scale along the metric chain so that
    /// zero tests stay meaningful on (near-)Q-flat metrics.
    pub fn kq_scale(&self) -> f64 {
        let q_sup = self.q.sup_norm().unwrap_or(0.0);
        (q_sup * self.volume())
            .max(self.invariant_scale)
            .max(f64::MIN_POSITIVE)
    }

    /// Inject a replacement kernel (test instrumentation for synthetic
    /// configurations).
    pub fn with_injected_kernel(&self, kernel: KernelBasis) -> QContext {
        let mut ctx = self.clone();
        ctx.kernel = Arc::new(kernel);
        ctx
    }
}

/// The invariant functional: the integral of a kernel field against Q
/// in the context metric. Errors when the field is not actually in the
/// kernel, since the invariance claim would then be void.
pub fn q_functional(ctx: &QContext, u: &ScalarField) -> Result<f64> {
    let residual = ctx.operator.relative_residual(u)?;
    if residual > 10.0 * ctx.tol.kernel_tol {
        return Err(Error::NotInKernel { residual });
    }
    inner_product(u, &ctx.q.field, &ctx.weights)
}

/// Basis of the functional's null space inside the kernel.
#[derive(Debug, Clone)]
pub struct NQBasis {
    pub fields: Vec<ScalarField>,
    /// 0 when the functional vanishes identically on the kernel, else 1.
    pub codim_in_np: usize,
    /// Raw functional values against the kernel basis.
    pub functional_values: Vec<f64>,
}

/// Compute the null space of the functional restricted to the kernel.
/// The functional is real valued, so the codimension is 0 or 1.
pub fn nq_basis(ctx: &QContext) -> Result<NQBasis> {
    let kb = ctx.kernel();
    let t: Vec<f64> = kb
        .fields
        .iter()
        .map(|u| inner_product(u, &ctx.q.field, &ctx.weights))
        .collect::<Result<Vec<_>>>()?;
    let threshold = ctx.tol.membership_rel * ctx.kq_scale();
    let tnorm = t.iter().map(|v| v * v).sum::<f64>().sqrt();
    if tnorm <= threshold {
        return Ok(NQBasis {
            fields: kb.fields.clone(),
            codim_in_np: 0,
            functional_values: t,
        });
    }
    // complete t/|t| to an orthonormal basis of R^k via a Householder
    // reflection; columns 2..k span the null space of the functional
    let k = kb.dim;
    let mut v = Array1::from(t.clone()) / tnorm;
    v[0] -= 1.0;
    let vnorm_sq: f64 = v.iter().map(|x| x * x).sum();
    let mut combos: Vec<Array1<f64>> = Vec::with_capacity(k - 1);
    for col in 1..k {
        let mut e = Array1::zeros(k);
        e[col] = 1.0;
        if vnorm_sq > 1e-30 {
            let coeff = 2.0 * v[col] / vnorm_sq;
            e = &e - &(&v * coeff);
        }
        combos.push(e);
    }
    let fields = combos
        .into_iter()
        .map(|c| combine(&kb.fields, &c))
        .collect::<Result<Vec<_>>>()?;
    Ok(NQBasis {
        fields,
        codim_in_np: 1,
        functional_values: t,
    })
}

fn combine(basis: &[ScalarField], coeffs: &Array1<f64>) -> Result<ScalarField> {
    let mut acc = basis[0].scaled(coeffs[0]);
    for (b, c) in basis.iter().zip(coeffs.iter()).skip(1) {
        acc = acc.add(&b.scaled(*c))?;
    }
    Ok(acc)
}

/// Result of splitting a kernel field into a constant plus a member of
/// the functional's null space.
#[derive(Debug, Clone)]
pub struct Decomposition {
    /// Value of the constant part.
    pub constant_part: f64,
    /// The null-space part u - u0.
    pub null_part: ScalarField,
}

/// Split `u = u0 + u1` with `u0 = Q(u)/k_Q` constant and `u1`
/// annihilated by the functional. Requires k_Q away from zero.
pub fn decompose(ctx: &QContext, u: &ScalarField) -> Result<Decomposition> {
    let threshold = ctx.tol.membership_rel * ctx.kq_scale();
    if ctx.kq.abs() <= threshold {
        return Err(Error::KQZero { kq: ctx.kq });
    }
    let qu = q_functional(ctx, u)?;
    let u0 = qu / ctx.kq;
    let constant = ScalarField::constant(ctx.sector(), u0)?;
    let u1 = u.sub(&constant)?;
    Ok(Decomposition {
        constant_part: u0,
        null_part: u1,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HodgeReport {
    pub constant_part: f64,
    pub metric_mean: f64,
    /// L2 norm of the difference of the two splittings.
    pub defect: f64,
    pub pass: bool,
}

/// When Q is constant in the context metric, the invariant splitting
/// must agree with the Hodge splitting (metric mean plus mean-zero
/// part). Errors when Q is not constant.
pub fn hodge_compare(ctx: &QContext, u: &ScalarField) -> Result<HodgeReport> {
    let q_vals = ctx.q.field.grid_values()?;
    let q_mean = integral(&ctx.q.field, &ctx.weights)? / ctx.volume();
    let deviation = q_vals.iter().fold(0.0f64, |a, v| a.max((v - q_mean).abs()));
    let q_scale = ctx.q.sup_norm()?.max(f64::MIN_POSITIVE);
    if deviation > 1e-8 * q_scale {
        return Err(Error::NotConstantQ {
            deviation: deviation / q_scale,
        });
    }
    let dec = decompose(ctx, u)?;
    let mean = integral(u, &ctx.weights)? / ctx.volume();
    let defect = (dec.constant_part - mean).abs() * ctx.volume().sqrt();
    let pass = defect <= 1e-8 * u.norm();
    Ok(HodgeReport {
        constant_part: dec.constant_part,
        metric_mean: mean,
        defect,
        pass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    /// Nonzero member of the functional's null space: cannot be any
    /// multiple of a Q scalar.
    InNullQ,
    /// Single-signed with the sign forbidden by k_Q.
    SignVsKQ,
    /// A null-space witness pairs positively with the function under
    /// every metric in the class.
    FCertificate,
    /// No certificate found. Explicitly NOT a claim of attainability.
    NoCertificate,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct CertificateEvidence {
    pub null_membership_residual: Option<f64>,
    pub pointwise_min: Option<f64>,
    pub pointwise_max: Option<f64>,
    pub sign_margin: Option<f64>,
    pub kq: f64,
    pub witness_label: Option<String>,
    pub witness_pairing: Option<f64>,
    pub pairing_margin: Option<f64>,
    pub witness_pointwise_min: Option<f64>,
    /// True when the witness search used the coarse sphere grid.
    pub search_heuristic: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ForbiddenCertificate {
    pub verdict: Verdict,
    pub witness: Option<ScalarField>,
    pub evidence: CertificateEvidence,
}

fn sign_class(f: &ScalarField, margin_rel: f64) -> Result<(f64, f64, f64, Option<bool>)> {
    let vals = f.grid_values()?;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for v in vals {
        min = min.min(*v);
        max = max.max(*v);
    }
    let sup = min.abs().max(max.abs());
    let margin = margin_rel * sup;
    // None: mixed sign or identically zero; Some(true): nonnegative
    let class = if sup <= f64::MIN_POSITIVE {
        None
    } else if min >= -margin && max > margin {
        Some(true)
    } else if max <= margin && min < -margin {
        Some(false)
    } else {
        None
    };
    Ok((min, max, margin, class))
}

/// Candidate directions on the unit sphere of an n-dimensional
/// coefficient space, at roughly `step_deg` angular resolution.
fn unit_sphere_grid(n: usize, step_deg: f64) -> Vec<Array1<f64>> {
    let step = step_deg.to_radians();
    match n {
        0 => Vec::new(),
        1 => vec![Array1::from(vec![1.0]), Array1::from(vec![-1.0])],
        2 => {
            let m = (2.0 * PI / step).ceil() as usize;
            (0..m)
                .map(|i| {
                    let a = i as f64 * step;
                    Array1::from(vec![a.cos(), a.sin()])
                })
                .collect()
        }
        3 => {
            let mt = (PI / step).ceil() as usize;
            let mp = (2.0 * PI / step).ceil() as usize;
            let mut out = vec![
                Array1::from(vec![0.0, 0.0, 1.0]),
                Array1::from(vec![0.0, 0.0, -1.0]),
            ];
            for i in 1..mt {
                let th = i as f64 * PI / mt as f64;
                for j in 0..mp {
                    let ph = j as f64 * step;
                    out.push(Array1::from(vec![
                        th.sin() * ph.cos(),
                        th.sin() * ph.sin(),
                        th.cos(),
                    ]));
                }
            }
            out
        }
        _ => {
            // dimensions above 3 fall back to a coarser product grid
            let coarse = step_deg.max(15.0).to_radians();
            let m = (2.0 * PI / coarse).ceil() as usize;
            let mut out = Vec::new();
            let mut stack = vec![Vec::<f64>::new()];
            for _ in 0..(n - 1) {
                let mut next = Vec::new();
                for prefix in stack {
                    for i in 0..(m / 2).max(1) {
                        let mut p = prefix.clone();
                        p.push(i as f64 * coarse);
                        next.push(p);
                    }
                }
                stack = next;
            }
            for angles in stack {
                let mut v = vec![1.0; n];
                for (k, a) in angles.iter().enumerate() {
                    let (s, c) = a.sin_cos();
                    for item in v.iter_mut().take(k + 1) {
                        *item *= s;
                    }
                    v[k + 1] = c;
                    let _ = s;
                }
                // normalize defensively
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 0.0 {
                    out.push(Array1::from(v) / norm);
                }
            }
            out
        }
    }
}

/// Certificate that a function is not in the range of the Q map (up to
/// nonzero scaling), using the class's own sufficient conditions:
/// null-space membership, sign against k_Q, or a positive pairing with
/// a null-space witness. `NoCertificate` makes no attainability claim.
pub fn forbidden_certificate(ctx: &QContext, f: &ScalarField) -> Result<ForbiddenCertificate> {
    let mut ev = CertificateEvidence {
        kq: ctx.kq,
        ..Default::default()
    };
    let nq = nq_basis(ctx)?;
    let fnorm = f.norm();

    // (i) membership in span N(Q)
    if !nq.fields.is_empty() && fnorm > 0.0 {
        let mut proj_sq = 0.0;
        for b in &nq.fields {
            let d: f64 = f
                .coeffs()
                .iter()
                .zip(b.coeffs().iter())
                .map(|(a, c)| a * c)
                .sum();
            proj_sq += d * d;
        }
        let residual = ((fnorm * fnorm - proj_sq).max(0.0)).sqrt() / fnorm;
        ev.null_membership_residual = Some(residual);
        if residual <= 1e-8 {
            ev.notes
                .push("nonzero member of the functional null space".to_string());
            return Ok(ForbiddenCertificate {
                verdict: Verdict::InNullQ,
                witness: None,
                evidence: ev,
            });
        }
    }

    // (ii) single sign against k_Q
    let (min, max, margin, class) = sign_class(f, ctx.tol.sign_margin_rel)?;
    ev.pointwise_min = Some(min);
    ev.pointwise_max = Some(max);
    ev.sign_margin = Some(margin);
    let kq_threshold = ctx.tol.membership_rel * ctx.kq_scale();
    if let Some(nonneg) = class {
        let fires = if ctx.kq.abs() <= kq_threshold {
            true
        } else {
            (ctx.kq > 0.0) != nonneg
        };
        if fires {
            ev.notes.push(if ctx.kq.abs() <= kq_threshold {
                "single-signed function with k_Q = 0".to_string()
            } else {
                "single-signed function opposing the sign of k_Q".to_string()
            });
            return Ok(ForbiddenCertificate {
                verdict: Verdict::SignVsKQ,
                witness: None,
                evidence: ev,
            });
        }
    }

    // (iii) witness search over N(Q)
    let f_sup = f.sup_norm()?;
    if !nq.fields.is_empty() && f_sup > 0.0 {
        let mut candidates: Vec<(String, ScalarField)> = Vec::new();
        for (i, b) in nq.fields.iter().enumerate() {
            candidates.push((format!("+nq[{i}]"), b.clone()));
            candidates.push((format!("-nq[{i}]"), b.scaled(-1.0)));
        }
        if nq.fields.len() >= 2 {
            ev.search_heuristic = true;
            for (j, dir) in unit_sphere_grid(nq.fields.len(), 5.0).iter().enumerate() {
                candidates.push((format!("grid[{j}]"), combine(&nq.fields, dir)?));
            }
        }
        let fv = f.grid_values()?;
        let w = ctx.weights.values();
        for (label, u) in candidates {
            let uv = u.grid_values()?;
            let u_sup = u.sup_norm()?;
            let margin_point = ctx.tol.sign_margin_rel * f_sup * u_sup;
            let mut min_pair = f64::INFINITY;
            let mut total = 0.0;
            for ((a, b), wt) in fv.iter().zip(uv.iter()).zip(w.iter()) {
                let prod = a * b;
                min_pair = min_pair.min(prod);
                total += wt * prod;
            }
            let margin_int = ctx.tol.membership_rel * f_sup * u_sup * ctx.volume();
            if min_pair >= -margin_point && total > margin_int {
                ev.witness_label = Some(label);
                ev.witness_pairing = Some(total);
                ev.pairing_margin = Some(margin_int);
                ev.witness_pointwise_min = Some(min_pair);
                ev.notes
                    .push("pointwise-nonnegative pairing with a null-space witness".to_string());
                return Ok(ForbiddenCertificate {
                    verdict: Verdict::FCertificate,
                    witness: Some(u),
                    evidence: ev,
                });
            }
        }
    }

    ev.notes
        .push("no certificate found; this is not a claim of attainability".to_string());
    Ok(ForbiddenCertificate {
        verdict: Verdict::NoCertificate,
        witness: None,
        evidence: ev,
    })
}

#[derive(Debug)]
pub struct ForbiddenFamily {
    pub fields: Vec<ScalarField>,
    pub certificates: Vec<ForbiddenCertificate>,
    pub gram: Array2<f64>,
    pub singular_values: Vec<f64>,
    pub aliasing_residuals: Vec<f64>,
}

/// Odd powers of a nonconstant null-space field form a forbidden family
/// with no linear relations: return the powers, their certificates, and
/// the Gram evidence of linear independence.
pub fn forbidden_family(
    ctx: &QContext,
    u: &ScalarField,
    exponents: &[u32],
) -> Result<ForbiddenFamily> {
    if exponents.is_empty() || exponents.iter().any(|p| p % 2 == 0 || *p == 0) {
        return Err(Error::InvalidSpec(
            "exponents must be odd positive integers".to_string(),
        ));
    }
    // constant input is rejected: its powers stay constant
    let mean_coeff = u.coeffs()[u.sector().constant_mode()];
    let nonconstant_sq: f64 =
        u.coeffs().iter().map(|c| c * c).sum::<f64>() - mean_coeff * mean_coeff;
    if nonconstant_sq.sqrt() <= 1e-12 * u.norm() {
        return Err(Error::ConstantInput);
    }
    // the certificate machinery relies on u in N(Q)
    let nq = nq_basis(ctx)?;
    let mut proj_sq = 0.0;
    for b in &nq.fields {
        let d: f64 = u
            .coeffs()
            .iter()
            .zip(b.coeffs().iter())
            .map(|(a, c)| a * c)
            .sum();
        proj_sq += d * d;
    }
    let residual = ((u.norm().powi(2) - proj_sq).max(0.0)).sqrt() / u.norm();
    if residual > 1e-8 {
        return Err(Error::NotInNullQ { residual });
    }

    let mut fields = Vec::with_capacity(exponents.len());
    let mut aliasing = Vec::with_capacity(exponents.len());
    for &p in exponents {
        if p == 1 {
            fields.push(u.clone());
            aliasing.push(0.0);
        } else {
            let (f, res) = pointwise_map(u, |v| v.powi(p as i32))?;
            fields.push(f);
            aliasing.push(res);
        }
    }
    let certificates = fields
        .iter()
        .map(|f| forbidden_certificate(ctx, f))
        .collect::<Result<Vec<_>>>()?;
    // Gram of the unit-normalized family: numerical rank should reflect
    // linear independence, not the scale spread of the powers
    let n = fields.len();
    let mut gram = Array2::zeros((n, n));
    let norms: Vec<f64> = fields
        .iter()
        .map(|f| inner_product(f, f, &ctx.weights).map(f64::sqrt))
        .collect::<Result<Vec<_>>>()?;
    for i in 0..n {
        for j in 0..n {
            gram[(i, j)] =
                inner_product(&fields[i], &fields[j], &ctx.weights)? / (norms[i] * norms[j]);
        }
    }
    let (_, sv, _) = gram
        .svd(false, false)
        .map_err(|e| Error::InvariantViolation(e.to_string()))?;
    Ok(ForbiddenFamily {
        fields,
        certificates,
        gram,
        singular_values: sv.to_vec(),
        aliasing_residuals: aliasing,
    })
}

#[derive(Debug, Clone)]
pub enum ObstructionOutcome {
    /// A pointwise-nonnegative nonzero null-space element: no metric in
    /// the class has single-signed (in particular constant) Q.
    CertifiedObstructed {
        witness: ScalarField,
        witness_min: f64,
        reason: String,
    },
    NoCertificate {
        note: String,
        search_heuristic: bool,
    },
}

/// Search the functional's null space for a pointwise nonnegative
/// element; delegates to the flat-solvability characterization when
/// k_Q = 0. Exact for null-space dimension <= 1, coarse grid search
/// (flagged heuristic) above that.
pub fn constant_q_obstruction(ctx: &QContext) -> Result<ObstructionOutcome> {
    let nq = nq_basis(ctx)?;
    constant_q_obstruction_with(ctx, &nq)
}

pub fn constant_q_obstruction_with(ctx: &QContext, nq: &NQBasis) -> Result<ObstructionOutcome> {
    let kq_threshold = ctx.tol.membership_rel * ctx.kq_scale();
    if ctx.kq.abs() <= kq_threshold {
        // constant Q must be zero; prescribable iff the functional
        // vanishes on the whole kernel
        if nq.codim_in_np == 0 {
            return Ok(ObstructionOutcome::NoCertificate {
                note: "k_Q = 0 and the functional vanishes on the kernel: zero Q is attainable"
                    .to_string(),
                search_heuristic: false,
            });
        }
        let t = Array1::from(nq.functional_values.clone());
        let tnorm = t.iter().map(|v| v * v).sum::<f64>().sqrt();
        let witness = combine(&ctx.kernel().fields, &(&t / tnorm))?;
        return Ok(ObstructionOutcome::CertifiedObstructed {
            witness_min: f64::NAN,
            witness,
            reason:
                "k_Q = 0 but a kernel element pairs nontrivially with Q: no metric attains constant (zero) Q"
                    .to_string(),
        });
    }

    let dim = nq.fields.len();
    if dim == 0 || nq.codim_in_np == 0 {
        return Ok(ObstructionOutcome::NoCertificate {
            note: "functional null space is trivial".to_string(),
            search_heuristic: false,
        });
    }
    let heuristic = dim >= 2;
    let eval_min = |dir: &Array1<f64>| -> Result<f64> {
        let u = combine(&nq.fields, dir)?;
        let vals = u.grid_values()?;
        Ok(vals.iter().fold(f64::INFINITY, |a, v| a.min(*v)))
    };
    let mut best: Option<(f64, Array1<f64>)> = None;
    let candidates = if dim == 1 {
        vec![Array1::from(vec![1.0]), Array1::from(vec![-1.0])]
    } else {
        unit_sphere_grid(dim, 5.0)
    };
    for dir in candidates {
        let min = eval_min(&dir)?;
        if best.as_ref().map_or(true, |(b, _)| min > *b) {
            best = Some((min, dir));
        }
    }
    if dim >= 2 {
        // local refinement of the best direction: coordinate-wise nudges
        for step_deg in [1.0f64, 0.2] {
            let step = step_deg.to_radians();
            let Some((_, start)) = best.clone() else { break };
            for axis in 0..dim {
                for sgn in [-1.0, 1.0] {
                    let mut d = start.clone();
                    d[axis] += sgn * step;
                    let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
                    let d = d / norm;
                    let min = eval_min(&d)?;
                    if best.as_ref().map_or(true, |(b, _)| min > *b) {
                        best = Some((min, d));
                    }
                }
            }
        }
    }
    if let Some((min, dir)) = best {
        let witness = combine(&nq.fields, &dir)?;
        let sup = witness.sup_norm()?;
        let margin = ctx.tol.sign_margin_rel * sup;
        if min >= -margin && sup > margin {
            return Ok(ObstructionOutcome::CertifiedObstructed {
                witness,
                witness_min: min,
                reason: "pointwise-nonnegative nonzero element of the functional null space"
                    .to_string(),
            });
        }
    }
    Ok(ObstructionOutcome::NoCertificate {
        note: "no pointwise-nonnegative null-space element found".to_string(),
        search_heuristic: heuristic,
    })
}

/// Max over sampled rescalings of the pairing of `f` with the rescaled
/// Q in the rescaled measure. For null-space members this is the
/// residual of the intersection characterization and must stay at
/// invariance tolerance.
pub fn verify_cap(ctx: &QContext, f: &ScalarField, omegas: &[Arc<ConformalFactor>]) -> Result<f64> {
    let mut max_residual: f64 = inner_product(f, &ctx.q.field, &ctx.weights)?.abs();
    for omega in omegas {
        let q_hat = q_transform(&ctx.q, omega, &ctx.operator)?;
        let w_hat = omega.rescale_weights(&ctx.weights);
        let r = inner_product(f, &q_hat.field, &w_hat)?.abs();
        max_residual = max_residual.max(r);
    }
    Ok(max_residual)
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct HarmonicReport {
    pub dim_nd: usize,
    pub dim_np: usize,
    pub dim_dnp: usize,
    pub b1: usize,
    pub strong_0_regular: bool,
    pub note: String,
}

/// Dimension bookkeeping for the degree-one conformal-harmonics
/// complex: the kernel, its image under d, and the first Betti number.
/// Only dimensions are reported; surjectivity onto cohomology is left
/// open.
pub fn harmonic_report(ctx: &QContext) -> HarmonicReport {
    let dim_np = ctx.kernel().dim;
    HarmonicReport {
        dim_nd: 1,
        dim_np,
        dim_dnp: dim_np - 1,
        b1: ctx.sector().manifold().betti1(),
        strong_0_regular: dim_np == 1,
        note: format!(
            "d maps the kernel into a {}-dimensional space of harmonic 1-form candidates inside b1 = {}; surjectivity not claimed",
            dim_np - 1,
            ctx.sector().manifold().betti1()
        ),
    }
}
