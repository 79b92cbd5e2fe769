//! Two-level minimization over the generalized Nehari set.
//!
//! Inner problem: for a direction `w` with nonvanishing positive-role part,
//! `J` restricted to the half-space `R+ w ⊕ (negative subspace)` has a unique
//! global maximizer `m1(w)`; it is found by a damped Newton method with
//! conjugate-gradient steps (the restricted Hessian is negative definite near
//! the maximizer).
//!
//! Outer problem: minimize the reduced functional `w -> J[m1(w)]` over the
//! unit sphere of the positive-role subspace by projected gradient descent
//! with Barzilai-Borwein trial steps, Armijo backtracking and normalization
//! retraction. At convergence the state satisfies the constraint identities
//! `J'[u](u) = 0` and `J'[u](v) = 0` for every `v` in the negative subspace,
//! so it is a critical point of `J` and a discrete solution of the wave
//! equation.

use super::field::{pairing, xt_norm, BreatherState, TimeFourierField};
use super::functional::{evaluate_dj, evaluate_j, hessian_apply, make_diagnostics, p_plus_one_integral};
use super::newton::{newton_solve, NewtonOptions};
use super::SolverContext;
use crate::error::{Error, Result};
use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy)]
pub struct NehariOptions {
    /// reduced-gradient norm at which the outer loop stops
    pub tol_outer: f64,
    /// first-order-condition norm at which the inner Newton stops
    pub tol_inner: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// refuse to run below this spectral distance to zero
    pub min_discrete_gap: f64,
    /// finish with a few Newton steps on the full critical-point system
    pub polish: bool,
}

impl Default for NehariOptions {
    fn default() -> Self {
        NehariOptions {
            tol_outer: 1e-7,
            tol_inner: 1e-10,
            max_outer: 2000,
            max_inner: 200,
            min_discrete_gap: 1e-6,
            polish: true,
        }
    }
}

/// Result of the inner maximization `m1(w)`.
#[derive(Debug, Clone)]
pub struct InnerState {
    /// ray coordinate along the normalized positive-role direction
    pub s: f64,
    /// negative-role mode coefficients
    pub v_modes: DMatrix<f64>,
    pub u: TimeFourierField,
    pub j_value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
}

/// Mode-diagonal data shared by the inner solver.
struct Roles {
    /// |mu| per (mode, harmonic)
    abs_mu: DMatrix<f64>,
    /// 1 for positive-role modes, 0 otherwise
    pos_mask: DMatrix<f64>,
}

fn roles(ctx: &SolverContext) -> Roles {
    let n = ctx.n();
    let jn = ctx.num_harmonics();
    let mut abs_mu = DMatrix::zeros(n, jn);
    let mut pos_mask = DMatrix::zeros(n, jn);
    for jj in 0..jn {
        let mus = ctx.mus(jj);
        for i in 0..n {
            abs_mu[(i, jj)] = mus[i].abs();
            pos_mask[(i, jj)] = if ctx.positive_role(mus[i]) { 1.0 } else { 0.0 };
        }
    }
    Roles { abs_mu, pos_mask }
}

/// `<a, b>` in the spectral norm: `0.5 sum |mu| a b`.
fn h_inner(r: &Roles, a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let mut acc = 0.0;
    for (i, (x, y)) in a.iter().zip(b.iter()).enumerate() {
        acc += r.abs_mu.as_slice()[i] * x * y;
    }
    0.5 * acc
}

fn mask_neg(r: &Roles, a: &mut DMatrix<f64>) {
    for (v, m) in a.iter_mut().zip(r.pos_mask.iter()) {
        if *m != 0.0 {
            *v = 0.0;
        }
    }
}

fn mask_pos(r: &Roles, a: &mut DMatrix<f64>) {
    for (v, m) in a.iter_mut().zip(r.pos_mask.iter()) {
        if *m == 0.0 {
            *v = 0.0;
        }
    }
}

/// Joint inner variable (ray coordinate, negative-role modes).
#[derive(Clone)]
struct Joint {
    s: f64,
    v: DMatrix<f64>,
}

impl Joint {
    fn dot(&self, other: &Joint) -> f64 {
        self.s * other.s + self.v.dot(&other.v)
    }
    fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
    fn axpy(&mut self, c: f64, other: &Joint) {
        self.s += c * other.s;
        for (a, b) in self.v.iter_mut().zip(other.v.iter()) {
            *a += c * *b;
        }
    }
    fn scale(&mut self, c: f64) {
        self.s *= c;
        self.v *= c;
    }
}

struct InnerProblem<'a> {
    ctx: &'a SolverContext,
    roles: &'a Roles,
    /// normalized positive-role direction, mode coefficients
    w_hat: &'a DMatrix<f64>,
}

impl<'a> InnerProblem<'a> {
    fn field(&self, th: &Joint) -> TimeFourierField {
        let modes = self.w_hat * th.s + &th.v;
        TimeFourierField::from_modes(self.ctx, &modes)
    }

    fn value(&self, th: &Joint) -> f64 {
        evaluate_j(self.ctx, &self.field(th))
    }

    /// Gradient of `J` in the joint coordinates.
    fn gradient(&self, u: &TimeFourierField) -> Joint {
        let dj = evaluate_dj(self.ctx, u).to_modes(self.ctx);
        let g_s = 0.5 * dj.dot(self.w_hat);
        let mut g_v = dj * 0.5;
        mask_neg(self.roles, &mut g_v);
        Joint { s: g_s, v: g_v }
    }

    /// Hessian action in the joint coordinates, with `u` frozen through its
    /// time samples.
    fn hess(&self, u_samples: &DMatrix<f64>, d: &Joint) -> Joint {
        let modes = self.w_hat * d.s + &d.v;
        let df = TimeFourierField::from_modes(self.ctx, &modes);
        let hd = hessian_apply(self.ctx, u_samples, &df).to_modes(self.ctx);
        let h_s = 0.5 * hd.dot(self.w_hat);
        let mut h_v = hd * 0.5;
        mask_neg(self.roles, &mut h_v);
        Joint { s: h_s, v: h_v }
    }
}

/// Preconditioned conjugate gradients on `A = -Hess`; returns an ascent
/// direction for the maximization. Truncates on negative curvature.
fn solve_newton_step(
    prob: &InnerProblem,
    u_samples: &DMatrix<f64>,
    g: &Joint,
    precond_s: f64,
    tol_rel: f64,
    max_iter: usize,
) -> Joint {
    let apply_a = |d: &Joint| {
        let mut h = prob.hess(u_samples, d);
        h.scale(-1.0);
        h
    };
    let apply_m_inv = |d: &Joint| {
        let mut v = d.v.clone();
        for (x, mu) in v.iter_mut().zip(prob.roles.abs_mu.iter()) {
            *x /= mu.max(1e-12);
        }
        mask_neg(prob.roles, &mut v);
        Joint {
            s: d.s / precond_s.max(1e-12),
            v,
        }
    };
    let mut z = Joint {
        s: 0.0,
        v: DMatrix::zeros(g.v.nrows(), g.v.ncols()),
    };
    let mut r = g.clone();
    let mut y = apply_m_inv(&r);
    let mut p = y.clone();
    let mut rho = r.dot(&y);
    let g_norm = g.norm().max(1e-300);
    for _ in 0..max_iter {
        let ap = apply_a(&p);
        let curv = p.dot(&ap);
        if curv <= 1e-14 * p.dot(&p) {
            // negative curvature: stop with the progress made so far
            if z.norm() == 0.0 {
                z = y.clone();
            }
            break;
        }
        let alpha = rho / curv;
        z.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        if r.norm() <= tol_rel * g_norm {
            break;
        }
        y = apply_m_inv(&r);
        let rho_new = r.dot(&y);
        let beta = rho_new / rho;
        rho = rho_new;
        let mut p_new = y.clone();
        p_new.axpy(beta, &p);
        p = p_new;
    }
    z
}

/// Unique maximizer of `J` on `R+ w ⊕ (negative subspace)`; `w_hat_modes`
/// must be the normalized positive-role direction. `warm` reuses the
/// previous ray/negative coordinates.
pub fn inner_maximize_modes(
    ctx: &SolverContext,
    roles_: &Roles,
    w_hat: &DMatrix<f64>,
    warm: Option<(f64, DMatrix<f64>)>,
    tol: f64,
    max_iter: usize,
) -> Result<InnerState> {
    let prob = InnerProblem {
        ctx,
        roles: roles_,
        w_hat,
    };
    let mut th = match warm {
        Some((s, v)) => Joint { s: s.max(1e-8), v },
        None => {
            // closed-form ray start: maximize s^2 - J1(s w) along the ray
            let wf = TimeFourierField::from_modes(ctx, w_hat);
            let d = 2.0 / (ctx.config.p + 1.0) * p_plus_one_integral(ctx, &wf);
            let s0 = (2.0 / ((ctx.config.p + 1.0) * d.max(1e-300)))
                .powf(1.0 / (ctx.config.p - 1.0));
            Joint {
                s: s0,
                v: DMatrix::zeros(ctx.n(), ctx.num_harmonics()),
            }
        }
    };
    let mut value = prob.value(&th);
    let mut iterations = 0;
    loop {
        let u = prob.field(&th);
        let g = prob.gradient(&u);
        let gn = g.norm();
        if gn <= tol {
            return Ok(InnerState {
                s: th.s,
                v_modes: th.v,
                u,
                j_value: value,
                grad_norm: gn,
                iterations,
            });
        }
        if iterations >= max_iter {
            return Err(Error::NonConvergence {
                what: "inner maximization".into(),
                iterations,
                residual: gn,
            });
        }
        iterations += 1;
        let u_samples = u.time_samples(ctx);
        // curvature along the ray for the preconditioner
        let e_s = Joint {
            s: 1.0,
            v: DMatrix::zeros(ctx.n(), ctx.num_harmonics()),
        };
        let a_ss = -prob.hess(&u_samples, &e_s).s;
        let precond_s = if a_ss > 1e-12 { a_ss } else { 1.0 };
        let eta = 0.1f64.min(gn.sqrt());
        let mut step = solve_newton_step(&prob, &u_samples, &g, precond_s, eta, 200);
        // ascent safeguard
        if g.dot(&step) <= 0.0 {
            step = Joint {
                s: g.s / precond_s,
                v: {
                    let mut v = g.v.clone();
                    for (x, mu) in v.iter_mut().zip(roles_.abs_mu.iter()) {
                        *x /= mu.max(1e-12);
                    }
                    v
                },
            };
        }
        // keep the ray coordinate positive
        let mut alpha: f64 = 1.0;
        if th.s + alpha * step.s <= 0.0 {
            alpha = -0.9 * th.s / step.s;
        }
        let slope = g.dot(&step);
        // functional increments drop below evaluation roundoff near the
        // maximizer; accept on gradient contraction there instead
        let mut accepted = false;
        for _ in 0..40 {
            let mut trial = th.clone();
            trial.axpy(alpha, &step);
            let tv = prob.value(&trial);
            if tv >= value + 1e-4 * alpha * slope {
                th = trial;
                value = tv;
                accepted = true;
                break;
            }
            let g_trial = prob.gradient(&prob.field(&trial));
            if g_trial.norm() <= 0.9 * gn {
                th = trial;
                value = tv;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(Error::NonConvergence {
                what: "inner maximization line search".into(),
                iterations,
                residual: gn,
            });
        }
    }
}

/// Public entry taking an arbitrary field as the direction.
pub fn inner_maximize(ctx: &SolverContext, w: &TimeFourierField) -> Result<InnerState> {
    ctx.require_discrete_gap(NehariOptions::default().min_discrete_gap)?;
    let r = roles(ctx);
    let mut wm = w.to_modes(ctx);
    mask_pos(&r, &mut wm);
    let nrm = h_inner(&r, &wm, &wm).sqrt();
    if nrm <= 1e-14 {
        return Err(Error::invalid(
            "direction has no component in the positive subspace",
        ));
    }
    wm /= nrm;
    inner_maximize_modes(
        ctx,
        &r,
        &wm,
        None,
        NehariOptions::default().tol_inner,
        NehariOptions::default().max_inner,
    )
}

/// Ground-state search: minimize `w -> J[m1(w)]` over the unit sphere of the
/// positive-role subspace.
pub fn nehari_minimize(
    ctx: &SolverContext,
    start: &TimeFourierField,
    opts: &NehariOptions,
) -> Result<BreatherState> {
    ctx.require_discrete_gap(opts.min_discrete_gap)?;
    let r = roles(ctx);
    let mut w = start.to_modes(ctx);
    mask_pos(&r, &mut w);
    let wn = h_inner(&r, &w, &w).sqrt();
    if wn <= 1e-14 {
        return Err(Error::invalid(
            "start field has no component in the positive subspace",
        ));
    }
    w /= wn;

    let mut warm: Option<(f64, DMatrix<f64>)> = None;
    let mut prev: Option<(DMatrix<f64>, DMatrix<f64>, f64)> = None; // (w, grad, tau)
    let mut outer = 0usize;
    let mut last_inner: Option<InnerState> = None;
    let mut converged = false;

    while outer < opts.max_outer {
        outer += 1;
        let inner = inner_maximize_modes(ctx, &r, &w, warm.take(), opts.tol_inner, opts.max_inner)?;
        // reduced gradient: s* times the positive-role, sphere-tangential
        // part of dJ, measured in the spectral metric
        let dj_modes = evaluate_dj(ctx, &inner.u).to_modes(ctx);
        let mut grad = DMatrix::zeros(ctx.n(), ctx.num_harmonics());
        for (g, (d, mu)) in grad
            .iter_mut()
            .zip(dj_modes.iter().zip(r.abs_mu.iter()))
        {
            *g = d / mu.max(1e-12);
        }
        mask_pos(&r, &mut grad);
        let radial = h_inner(&r, &grad, &w);
        for (g, b) in grad.iter_mut().zip(w.iter()) {
            *g -= radial * *b;
        }
        grad *= inner.s;
        let gn = h_inner(&r, &grad, &grad).sqrt();
        if gn <= opts.tol_outer {
            last_inner = Some(inner);
            converged = true;
            break;
        }
        // Barzilai-Borwein trial step with Armijo backtracking
        let mut tau = match &prev {
            Some((w_old, g_old, tau_old)) => {
                let dw = &w - w_old;
                let dg = &grad - g_old;
                let num = h_inner(&r, &dw, &dw);
                let den = h_inner(&r, &dw, &dg);
                if den > 1e-300 {
                    (num / den).clamp(1e-6, 1e4)
                } else {
                    *tau_old
                }
            }
            None => 0.1 / gn.max(1e-6),
        };
        let phi = inner.j_value;
        let mut moved = false;
        for _ in 0..30 {
            let mut w_new = &w - &grad * tau;
            mask_pos(&r, &mut w_new);
            let nn = h_inner(&r, &w_new, &w_new).sqrt();
            if nn <= 1e-14 {
                tau *= 0.5;
                continue;
            }
            w_new /= nn;
            let trial = inner_maximize_modes(
                ctx,
                &r,
                &w_new,
                Some((inner.s, inner.v_modes.clone())),
                opts.tol_inner,
                opts.max_inner,
            )?;
            if trial.j_value <= phi - 1e-4 * tau * gn * gn {
                prev = Some((w.clone(), grad.clone(), tau));
                w = w_new;
                warm = Some((trial.s, trial.v_modes.clone()));
                last_inner = Some(trial);
                moved = true;
                break;
            }
            tau *= 0.5;
        }
        if !moved {
            // no descent at the smallest step: accept as converged-to-tolerance
            last_inner = Some(inner);
            converged = gn <= opts.tol_outer * 100.0;
            break;
        }
    }

    let inner = last_inner.ok_or_else(|| Error::NonConvergence {
        what: "generalized Nehari minimization".into(),
        iterations: outer,
        residual: f64::NAN,
    })?;
    if !converged && outer >= opts.max_outer {
        return Err(Error::NonConvergence {
            what: "generalized Nehari minimization".into(),
            iterations: outer,
            residual: inner.grad_norm,
        });
    }

    let mut u = inner.u;
    let mut method = "nehari".to_string();
    if opts.polish {
        let newton_opts = NewtonOptions {
            tol: 1e-11,
            max_iter: 30,
            min_discrete_gap: opts.min_discrete_gap,
            calibrate: false,
        };
        if let Ok(refined) = newton_solve(ctx, &u, &newton_opts) {
            let mut diff = refined.field.clone();
            diff.add_scaled(-1.0, &u);
            let rel = xt_norm(ctx, &diff) / xt_norm(ctx, &u).max(1e-300);
            if rel < 1e-2 {
                u = refined.field;
                method = "nehari+polish".to_string();
            }
        }
    }
    let diagnostics = make_diagnostics(ctx, &u, &method, outer, converged);
    Ok(BreatherState {
        field: u,
        diagnostics,
    })
}

/// Expose role/mask computation for tests of the inner problem.
pub(crate) fn roles_for_tests(ctx: &SolverContext) -> Roles {
    roles(ctx)
}
