//! Damped Newton iteration on the Euler-Lagrange system
//! `F(u) = L u - sigma |u|^{p-1} u = 0`.
//!
//! The Jacobian `L - sigma p |u|^{p-1}` couples harmonics only pointwise in
//! space, so in space-major ordering it is banded with half-bandwidth equal
//! to the number of retained harmonics; steps are computed by a banded LU
//! with partial pivoting. For `p < 2` the pointwise factor is regularized by
//! `(u^2 + 1e-14)^{(p-1)/2}` in the Jacobian only.

use super::field::{xt_norm, BreatherState, TimeFourierField};
use super::functional::{make_diagnostics, p_plus_one_integral, pde_residual_field, project_role};
use super::SolverContext;
use crate::error::{Error, Result};
use crate::linalg::BandedMatrix;
use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    /// residual norm at which the iteration stops
    pub tol: f64,
    pub max_iter: usize,
    pub min_discrete_gap: f64,
    /// replace the raw seed by the half-space maximizer along it; raw seeds
    /// sit far outside the Newton basin (amplitude continuation)
    pub calibrate: bool,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-10,
            max_iter: 200,
            min_discrete_gap: 1e-6,
            calibrate: true,
        }
    }
}

fn flatten(ctx: &SolverContext, f: &TimeFourierField) -> Vec<f64> {
    let jn = ctx.num_harmonics();
    let n = ctx.n();
    let mut out = vec![0.0; n * jn];
    for i in 0..n {
        for jj in 0..jn {
            out[i * jn + jj] = f.coeffs[(i, jj)];
        }
    }
    out
}

fn unflatten(ctx: &SolverContext, x: &[f64]) -> TimeFourierField {
    let jn = ctx.num_harmonics();
    let n = ctx.n();
    let mut coeffs = DMatrix::zeros(n, jn);
    for i in 0..n {
        for jj in 0..jn {
            coeffs[(i, jj)] = x[i * jn + jj];
        }
    }
    TimeFourierField { coeffs }
}

fn assemble_jacobian(ctx: &SolverContext, u: &TimeFourierField) -> BandedMatrix {
    let n = ctx.n();
    let jn = ctx.num_harmonics();
    let p = ctx.config.p;
    let sigma = ctx.sigma();
    let eps_reg: f64 = 1e-14;
    let s = ctx.op.stiffness();
    let w = ctx.op.weights();
    let shifts = ctx.shifts();
    let cos = ctx.cos_table();
    let nt = ctx.nt();
    let samples = u.time_samples(ctx);
    let mut band = BandedMatrix::zeros(n * jn, jn, jn);
    for i in 0..n {
        // pointwise time-coupling block
        let mut block = vec![0.0; jn * jn];
        for q in 0..nt {
            let v = samples[(i, q)];
            let factor = if p >= 2.0 {
                v.abs().powf(p - 1.0)
            } else {
                (v * v + eps_reg).powf(0.5 * (p - 1.0))
            };
            let scale = 2.0 / nt as f64 * p * factor;
            for jj in 0..jn {
                for jk in 0..jn {
                    block[jj * jn + jk] += scale * cos[(jj, q)] * cos[(jk, q)];
                }
            }
        }
        for jj in 0..jn {
            let row = i * jn + jj;
            band.add(row, row, s.diag[i] / w[i] + shifts[jj]);
            if i > 0 {
                band.add(row, (i - 1) * jn + jj, s.off[i - 1] / w[i]);
            }
            if i + 1 < n {
                band.add(row, (i + 1) * jn + jj, s.off[i] / w[i]);
            }
            for jk in 0..jn {
                band.add(row, i * jn + jk, -sigma * block[jj * jn + jk]);
            }
        }
    }
    band
}

/// Damped Newton iteration on the full critical-point system. With
/// `calibrate` set (the default), the start is produced by harmonic-count
/// continuation: the half-space maximizer along the seed feeds a Newton
/// solve with one retained harmonic, whose solution is extended by zero and
/// re-solved with two harmonics, and so on up to the full truncation. Raw
/// seeds (`calibrate = false`) are iterated as given.
pub fn newton_solve(
    ctx: &SolverContext,
    start: &TimeFourierField,
    opts: &NewtonOptions,
) -> Result<BreatherState> {
    ctx.require_discrete_gap(opts.min_discrete_gap)?;
    if !opts.calibrate {
        return newton_core(ctx, start.clone(), opts);
    }
    let jn_full = ctx.num_harmonics();
    let mut carried: Option<TimeFourierField> = None;
    for jn in 1..=jn_full {
        let sub = ctx.truncated(jn)?;
        let u0 = match carried {
            None => {
                let mut seed1 = TimeFourierField::zeros(&sub);
                let cols = start.coeffs.ncols().min(1);
                for c in 0..cols {
                    seed1.coeffs.set_column(c, &start.coeffs.column(c));
                }
                super::nehari::inner_maximize(&sub, &seed1)?.u
            }
            Some(prev) => {
                let mut ext = TimeFourierField::zeros(&sub);
                for c in 0..prev.coeffs.ncols() {
                    ext.coeffs.set_column(c, &prev.coeffs.column(c));
                }
                ext
            }
        };
        let stage_opts = NewtonOptions {
            tol: if jn == jn_full { opts.tol } else { opts.tol.max(1e-9) },
            ..*opts
        };
        let out = newton_core(&sub, u0, &stage_opts)?;
        if jn == jn_full {
            return Ok(out);
        }
        carried = Some(out.field);
    }
    unreachable!("continuation covers at least one stage")
}

fn newton_core(
    ctx: &SolverContext,
    start: TimeFourierField,
    opts: &NewtonOptions,
) -> Result<BreatherState> {
    let mut u = start;
    let mut log = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    loop {
        let f = pde_residual_field(ctx, &u);
        let rn = xt_norm(ctx, &f);
        log.push(rn);
        if rn <= opts.tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            return Err(Error::NonConvergence {
                what: "newton iteration".into(),
                iterations,
                residual: rn,
            });
        }
        iterations += 1;
        let jac = assemble_jacobian(ctx, &u);
        let lu = jac.factor().map_err(|_| Error::NonConvergence {
            what: "newton jacobian factorization (singular)".into(),
            iterations,
            residual: rn,
        })?;
        if lu.pivot_ratio() < 1e-14 {
            return Err(Error::NonConvergence {
                what: "newton jacobian nearly singular".into(),
                iterations,
                residual: rn,
            });
        }
        let mut rhs = flatten(ctx, &f);
        for v in rhs.iter_mut() {
            *v = -*v;
        }
        lu.solve_in_place(&mut rhs);
        let delta = unflatten(ctx, &rhs);
        // backtracking on the residual norm
        let mut alpha = 1.0f64;
        let mut accepted = false;
        for _ in 0..30 {
            let mut trial = u.clone();
            trial.add_scaled(alpha, &delta);
            let tn = xt_norm(ctx, &pde_residual_field(ctx, &trial));
            if tn <= (1.0 - 1e-4 * alpha) * rn {
                u = trial;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(Error::NonConvergence {
                what: "newton line search stagnated".into(),
                iterations,
                residual: rn,
            });
        }
    }
    let mut diagnostics = make_diagnostics(ctx, &u, "newton", iterations, converged);
    diagnostics.convergence_log = log;
    Ok(BreatherState {
        field: u,
        diagnostics,
    })
}

/// Amplitude continuation: start from the half-space maximizer along the
/// seed direction, which already satisfies the ray and negative-subspace
/// stationarity; the zero solution otherwise captures small seeds.
fn calibrated_start(ctx: &SolverContext, seed: &TimeFourierField) -> Result<TimeFourierField> {
    let plus = project_role(ctx, seed, true);
    let norm = xt_norm(ctx, &plus);
    if norm <= 1e-14 {
        return Err(Error::invalid(
            "seed has no component in the positive subspace",
        ));
    }
    Ok(super::nehari::inner_maximize(ctx, seed)?.u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gapcheck::FrequencyConfig;
    use crate::graph::{Boundary, NecklaceGrid};
    use crate::solver::Nonlinearity;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn ctx_small() -> SolverContext {
        let config = FrequencyConfig::new(1, 5, 0.0, 0.0, 3.0, 15).unwrap();
        let grid = NecklaceGrid::new(4, 16, Boundary::DirichletTruncation, true).unwrap();
        SolverContext::new(config, grid, Nonlinearity::Focusing, None).unwrap()
    }

    #[test]
    fn zero_is_a_fixed_point_and_captures_tiny_seeds() {
        let ctx = ctx_small();
        let zero = TimeFourierField::zeros(&ctx);
        let f = pde_residual_field(&ctx, &zero);
        assert_eq!(xt_norm(&ctx, &f), 0.0);
        // uncalibrated tiny random start converges to (numerical) zero
        let mut rng = StdRng::seed_from_u64(1);
        let mut tiny = TimeFourierField::zeros(&ctx);
        for v in tiny.coeffs.iter_mut() {
            *v = 1e-8 * rng.gen_range(-1.0..1.0);
        }
        let opts = NewtonOptions {
            calibrate: false,
            ..Default::default()
        };
        let out = newton_solve(&ctx, &tiny, &opts).unwrap();
        assert!(xt_norm(&ctx, &out.field) < 1e-7, "drifted away from zero");
    }

    #[test]
    fn converges_from_calibrated_bump_with_quadratic_tail() {
        let ctx = ctx_small();
        let seed = ctx.seed_bump();
        let out = newton_solve(&ctx, &seed, &NewtonOptions::default()).unwrap();
        assert!(out.diagnostics.converged);
        assert!(out.diagnostics.pde_residual_abs <= 1e-10);
        assert!(
            xt_norm(&ctx, &out.field) > 1e-2,
            "collapsed to the zero solution"
        );
        // quadratic convergence: ||F_{n+1}|| / ||F_n||^2 bounded near the root
        let log = &out.diagnostics.convergence_log;
        assert!(log.len() >= 3);
        let tail = &log[log.len().saturating_sub(3)..];
        for pair in tail.windows(2) {
            if pair[0] < 1e-3 && pair[1] > 0.0 {
                let ratio = pair[1] / (pair[0] * pair[0]);
                assert!(ratio < 1e3, "not quadratic: {log:?}");
            }
        }
    }

    #[test]
    fn jacobian_matches_directional_differences() {
        let ctx = ctx_small();
        let mut rng = StdRng::seed_from_u64(4);
        let mut u = TimeFourierField::zeros(&ctx);
        for v in u.coeffs.iter_mut() {
            *v = 0.4 * rng.gen_range(-1.0..1.0);
        }
        let mut d = TimeFourierField::zeros(&ctx);
        for v in d.coeffs.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        let jac = assemble_jacobian(&ctx, &u);
        let jd_flat = {
            let mut y = vec![0.0; ctx.n() * ctx.num_harmonics()];
            jac.apply(&flatten(&ctx, &d), &mut y);
            y
        };
        let h = 1e-6;
        let mut up = u.clone();
        up.add_scaled(h, &d);
        let mut um = u.clone();
        um.add_scaled(-h, &d);
        let fp = pde_residual_field(&ctx, &up);
        let fm = pde_residual_field(&ctx, &um);
        let mut fd = fp.coeffs.clone();
        fd -= &fm.coeffs;
        fd /= 2.0 * h;
        let fd_flat = flatten(&ctx, &TimeFourierField { coeffs: fd });
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for (a, b) in jd_flat.iter().zip(&fd_flat) {
            worst = worst.max((a - b).abs());
            scale = scale.max(b.abs());
        }
        assert!(worst <= 1e-5 * scale.max(1.0), "jacobian defect {worst}");
    }
}

// test/diagnostic hooks
#[doc(hidden)]
pub fn debug_jacobian(ctx: &SolverContext, u: &TimeFourierField) -> BandedMatrix {
    assemble_jacobian(ctx, u)
}
#[doc(hidden)]
pub fn debug_flatten(ctx: &SolverContext, f: &TimeFourierField) -> Vec<f64> {
    flatten(ctx, f)
}
#[doc(hidden)]
pub fn debug_unflatten(ctx: &SolverContext, x: &[f64]) -> TimeFourierField {
    unflatten(ctx, x)
}
