//! Prescription solvers: the exact Q-flat solve through the kernel
//! alternative, and an experimental damped iteration for constant Q.
//!
//! The flat solve is linear: `P w = -Q` is solvable exactly when Q
//! integrates to zero against every kernel element; violation of that
//! condition is the mathematically meaningful negative outcome, not a
//! failure. Solves use the spectral pseudo-inverse with the certified
//! kernel projected out, so the returned factor is the minimum-norm
//! solution and carries no regularization parameter.



use ndarray::Array1;


use crate::error::{Error, IterationStep, Result};
use crate::fields::{ConformalFactor, Level, ScalarField};
use crate::paneitz::q_transform;
use crate::qfunctional::QContext;

#[derive(Debug)]
pub struct PrescriptionResult {
    /// Conformal factor relative to the context metric.
    pub omega: ConformalFactor,
    /// Sup-norm mismatch of the achieved Q against the target.
    pub residual: f64,
    /// Integrals of the prescription data against the kernel basis.
    pub fredholm_violation: Vec<f64>,
    pub iterations: usize,
    pub trace: Vec<IterationStep>,
}

/// Background-coordinate right-hand side for `P^ctx w = rhs_ctx`:
/// multiplies by the accumulated conformal weight and projects onto the
/// sector, splitting off the kernel components.
fn background_solve(
    ctx: &QContext,
    rhs_fine_ctx: &Array1<f64>,
) -> Result<(Array1<f64>, Vec<f64>)> {
    let sector = ctx.sector();
    let rho_fine = match ctx.total_factor() {
        None => rhs_fine_ctx.clone(),
        Some(t) => rhs_fine_ctx * t.exp4_fine(),
    };
    let rho = sector.analyze_level(&rho_fine, Level::Fine)?;
    let symbol = ctx.background_operator().symbol();
    let scale = ctx.background_operator().norm_scale();
    let threshold = ctx.tolerances().kernel_tol * scale;
    let mut omega = Array1::zeros(sector.dim());
    let mut kernel_components = Vec::new();
    for (k, lam) in symbol.iter().enumerate() {
        if lam.abs() <= threshold {
            kernel_components.push(rho[k]);
        } else {
            omega[k] = rho[k] / lam;
        }
    }
    Ok((omega, kernel_components))
}

/// Solve for a Q-flat metric in the class of the context metric.
///
/// Checks the kernel integrals of Q first; if any is beyond tolerance
/// the solve is impossible and the offending integrals are returned as
/// `FredholmViolation`. Otherwise solves `P w = -Q` by eigen-expansion
/// with zero modes projected out and verifies the result through the
/// transformation law.
pub fn solve_q_flat(ctx: &QContext) -> Result<PrescriptionResult> {
    let integrals: Vec<f64> = ctx
        .kernel()
        .fields
        .iter()
        .map(|u| crate::fields::inner_product(u, &ctx.q().field, ctx.weights()))
        .collect::<Result<Vec<_>>>()?;
    let threshold = ctx.tolerances().membership_rel * ctx.kq_scale();
    if integrals.iter().any(|v| v.abs() > threshold) {
        return Err(Error::FredholmViolation {
            integrals,
            kq: ctx.kq(),
        });
    }
    let rhs_fine = ctx.q().fine_values() * (-1.0);
    let (omega_coeffs, _kernel_parts) = background_solve(ctx, &rhs_fine)?;
    let omega_field = ScalarField::from_coeffs(ctx.sector(), omega_coeffs)?;
    let omega = ConformalFactor::from_solution(omega_field)?;
    let q_new = q_transform(ctx.q(), &omega, ctx.operator())?;
    let residual = q_new.sup_norm()?;
    Ok(PrescriptionResult {
        omega,
        residual,
        fredholm_violation: integrals,
        iterations: 0,
        trace: Vec::new(),
    })
}

/// Damped fixed-point iteration for constant target Q in the class of
/// the context metric.
///
/// Each step renormalizes the running factor so the volume constraint
/// `target * integral(e^{4w}) = k_Q` holds exactly, solves the linear
/// prescription equation with the kernel projected out, and damps the
/// update. Outcomes: convergence (sup residual below 1e-5 |target|),
/// `SignMismatch` when the target's sign contradicts the invariant,
/// `FredholmViolation` when the iteration settles on data that fails
/// kernel orthogonality, `NonConvergence` with the trace otherwise.
pub fn iterate_constant_q(
    ctx: &QContext,
    target: f64,
    damping: f64,
    max_iter: usize,
) -> Result<PrescriptionResult> {
    if !(0.0..=1.0).contains(&damping) || damping == 0.0 {
        return Err(Error::InvalidSpec(format!(
            "damping {damping} must lie in (0, 1]"
        )));
    }
    let kq = ctx.kq();
    let kq_threshold = ctx.tolerances().membership_rel * ctx.kq_scale();
    let kq_is_zero = kq.abs() <= kq_threshold;
    if kq_is_zero {
        if target != 0.0 {
            return Err(Error::SignMismatch { target, kq });
        }
    } else if target == 0.0 || target.signum() != kq.signum() {
        return Err(Error::SignMismatch { target, kq });
    }

    let q0_sup = ctx.q().sup_norm()?;
    let conv_tol = if target != 0.0 {
        1e-5 * target.abs()
    } else {
        1e-5 * q0_sup.max(f64::MIN_POSITIVE)
    };

    // already there?
    let initial_residual = ctx
        .q()
        .field
        .grid_values()?
        .iter()
        .fold(0.0f64, |a, v| a.max((v - target).abs()));
    if initial_residual <= conv_tol {
        return Ok(PrescriptionResult {
            omega: ConformalFactor::zero(ctx.sector())?,
            residual: initial_residual,
            fredholm_violation: vec![0.0; ctx.kernel().dim],
            iterations: 0,
            trace: Vec::new(),
        });
    }

    // with k_Q = 0 the target is zero and the problem is linear: the
    // kernel integrals of Q are invariant along the class, so violation
    // is detected up front
    if kq_is_zero {
        let integrals: Vec<f64> = ctx
            .kernel()
            .fields
            .iter()
            .map(|u| crate::fields::inner_product(u, &ctx.q().field, ctx.weights()))
            .collect::<Result<Vec<_>>>()?;
        if integrals.iter().any(|v| v.abs() > kq_threshold) {
            return Err(Error::FredholmViolation { integrals, kq });
        }
    }

    let sector = ctx.sector();
    let weights = ctx.weights();
    let kernel_fields = &ctx.kernel().fields;
    let mut omega = ConformalFactor::zero(sector)?;
    let mut trace: Vec<IterationStep> = Vec::new();
    let mut last_residual = initial_residual;

    for iter in 1..=max_iter {
        // the kernel directions are invisible to the projected linear
        // solve but fixed by the solvability constraints
        // F_m = integral (target e^{4w} - Q) u_m: the constant direction
        // is renormalized exactly (volume constraint), the rest get one
        // Newton step on F = 0 per iteration
        if !kq_is_zero {
            let vol_w: f64 = weights
                .values()
                .iter()
                .zip(omega.exp4_std().iter())
                .map(|(w, e)| w * e)
                .sum();
            let shift = 0.25 * (kq / (target * vol_w)).ln();
            if shift.is_finite() && shift != 0.0 {
                let shifted = omega
                    .omega()
                    .add(&ScalarField::constant(sector, shift)?)?;
                omega = ConformalFactor::from_solution(shifted)?;
            }
            if kernel_fields.len() > 1 {
                omega = kernel_newton_step(ctx, omega, target)?;
            }
        }

        // rhs in the context metric: target e^{4w} - Q
        let rhs_fine = omega.exp4_fine().mapv(|e| target * e) - ctx.q().fine_values();
        let (solved, kernel_parts) = background_solve(ctx, &rhs_fine)?;
        let defect = kernel_parts.iter().map(|v| v * v).sum::<f64>().sqrt();

        // damp the range update; kernel components pass through untouched
        let mut new_coeffs = omega.omega().coeffs() * (1.0 - damping) + &(solved * damping);
        let symbol = ctx.background_operator().symbol();
        let sym_threshold =
            ctx.tolerances().kernel_tol * ctx.background_operator().norm_scale();
        for (k, lam) in symbol.iter().enumerate() {
            if lam.abs() <= sym_threshold {
                new_coeffs[k] = omega.omega().coeffs()[k];
            }
        }
        let new_field = ScalarField::from_coeffs(sector, new_coeffs)?;
        let update_norm = new_field.sub(omega.omega())?.norm()
            / omega.omega().norm().max(1.0);
        omega = ConformalFactor::from_solution(new_field)?;

        let q_now = q_transform(ctx.q(), &omega, ctx.operator())?;
        let residual_inf = q_now
            .field
            .grid_values()?
            .iter()
            .fold(0.0f64, |a, v| a.max((v - target).abs()));
        trace.push(IterationStep {
            iter,
            update_norm,
            residual_inf,
            fredholm_defect: defect,
        });
        last_residual = residual_inf;

        if residual_inf <= conv_tol {
            let final_integrals: Vec<f64> = ctx
                .kernel()
                .fields
                .iter()
                .map(|u| {
                    let w_hat = omega.rescale_weights(weights);
                    crate::fields::inner_product(u, &q_now.field, &w_hat)
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(PrescriptionResult {
                omega,
                residual: residual_inf,
                fredholm_violation: final_integrals,
                iterations: iter,
                trace,
            });
        }

        // stalled iterate with persistent kernel obstruction
        if update_norm < 1e-13 {
            let scale = ctx.kq_scale();
            if defect > ctx.tolerances().membership_rel * scale {
                return Err(Error::FredholmViolation {
                    integrals: kernel_parts,
                    kq,
                });
            }
            break;
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        last_residual,
        trace,
    })
}

/// One Newton step on the nonconstant kernel constraints
/// `F_m(w) = integral (target e^{4w} - Q) u_m dmu = 0`, whose Jacobian
/// in the kernel directions is `4 target Gram(e^{4w})`.
fn kernel_newton_step(
    ctx: &QContext,
    omega: ConformalFactor,
    target: f64,
) -> Result<ConformalFactor> {
    use ndarray::Array2;
    use ndarray_linalg::Solve;

    let fields = &ctx.kernel().fields;
    let k = fields.len() - 1;
    let w = ctx.weights().values();
    let e4 = omega.exp4_std();
    let q_vals = ctx.q().field.grid_values()?;
    let mut f_vec = Array1::zeros(k);
    let mut gram = Array2::zeros((k, k));
    for m in 0..k {
        let um = fields[m + 1].grid_values()?;
        let mut fm = 0.0;
        for i in 0..w.len() {
            fm += w[i] * (target * e4[i] - q_vals[i]) * um[i];
        }
        f_vec[m] = fm;
        for j in m..k {
            let uj = fields[j + 1].grid_values()?;
            let mut gm = 0.0;
            for i in 0..w.len() {
                gm += w[i] * e4[i] * um[i] * uj[i];
            }
            gram[(m, j)] = gm;
            gram[(j, m)] = gm;
        }
    }
    let rhs = f_vec.mapv(|v| -v / (4.0 * target));
    let delta = gram
        .solve(&rhs)
        .map_err(|e| Error::InvariantViolation(e.to_string()))?;
    let mut coeffs = omega.omega().coeffs().clone();
    for m in 0..k {
        coeffs = coeffs + fields[m + 1].coeffs() * delta[m];
    }
    ConformalFactor::from_solution(ScalarField::from_coeffs(ctx.sector(), coeffs)?)
}
