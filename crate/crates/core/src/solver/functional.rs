//! The action functional, its gradient, and state diagnostics.

use super::field::{pairing, xt_norm, Diagnostics, TimeFourierField};
use super::SolverContext;
use crate::error::Result;
use crate::graph::{max_flux_residual, GraphFunction};
use nalgebra::DMatrix;

/// `|s|^{p-1} s` applied entrywise.
fn odd_power(s: f64, p: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        s.abs().powf(p - 1.0) * s
    }
}

/// Harmonic projection of `|u|^{p-1} u` (no sign), pseudo-spectral in time:
/// sample on the uniform phase grid, apply the odd power pointwise, project
/// back onto the retained cosine harmonics. Returns the projected field and
/// the energy fraction dropped by the truncation.
pub fn nonlinear_term(ctx: &SolverContext, u: &TimeFourierField) -> (TimeFourierField, f64) {
    let samples = u.time_samples(ctx); // n x Nt
    let p = ctx.config.p;
    let g = samples.map(|s| odd_power(s, p));
    // cosine coefficients: N = (2/Nt) G C^T
    let coeffs = &g * ctx.cos_table().transpose() * (2.0 / ctx.nt() as f64);
    // Parseval bookkeeping for the dropped harmonics: the sampled signal has
    // time-mean-square (1/Nt) sum_q g^2, the retained part 0.5 sum_j n_j^2
    let w = ctx.op.weights();
    let mut total = 0.0;
    for i in 0..ctx.n() {
        let mut row = 0.0;
        for q in 0..ctx.nt() {
            row += g[(i, q)] * g[(i, q)];
        }
        total += w[i] * row / ctx.nt() as f64;
    }
    let mut retained = 0.0;
    for i in 0..ctx.n() {
        let mut row = 0.0;
        for jj in 0..ctx.num_harmonics() {
            row += coeffs[(i, jj)] * coeffs[(i, jj)];
        }
        retained += 0.5 * w[i] * row;
    }
    let dropped = if total > 0.0 {
        ((total - retained) / total).max(0.0)
    } else {
        0.0
    };
    (
        TimeFourierField { coeffs },
        dropped,
    )
}

/// Signed nonlinear term `sigma |u|^{p-1} u` as used in the equation.
pub fn nonlinear_term_signed(ctx: &SolverContext, u: &TimeFourierField) -> TimeFourierField {
    let (n, _) = nonlinear_term(ctx, u);
    n.scaled(ctx.sigma())
}

/// Time-averaged p+1 integral `avg_t int_Gamma |u|^{p+1}`.
pub fn p_plus_one_integral(ctx: &SolverContext, u: &TimeFourierField) -> f64 {
    let samples = u.time_samples(ctx);
    let p = ctx.config.p;
    let w = ctx.op.weights();
    let mut acc = 0.0;
    for i in 0..ctx.n() {
        let mut row = 0.0;
        for q in 0..ctx.nt() {
            row += samples[(i, q)].abs().powf(p + 1.0);
        }
        acc += w[i] * row;
    }
    acc / ctx.nt() as f64
}

/// Quadratic part `J0 = sum_k b_{L_k}(u_k, u_k) = 0.5 sum_j b_{L_kj}(a_j, a_j)`.
pub fn quadratic_part(ctx: &SolverContext, u: &TimeFourierField) -> f64 {
    let mut acc = 0.0;
    for (jj, &shift) in ctx.shifts().iter().enumerate() {
        let a = u.coeffs.column(jj).clone_owned();
        acc += ctx.op.bilinear(shift, &a, &a);
    }
    0.5 * acc
}

/// The functional `J[u] = sigma J0[u] - (2/(p+1)) avg_t int |u|^{p+1}`.
/// Ground states have positive value in both sign conventions.
pub fn evaluate_j(ctx: &SolverContext, u: &TimeFourierField) -> f64 {
    ctx.sigma() * quadratic_part(ctx, u) - 2.0 / (ctx.config.p + 1.0) * p_plus_one_integral(ctx, u)
}

/// Gradient with respect to the duality pairing:
/// `dJ = 2 (sigma L u - |u|^{p-1} u)` harmonic by harmonic, so critical
/// points solve the wave equation.
pub fn evaluate_dj(ctx: &SolverContext, u: &TimeFourierField) -> TimeFourierField {
    let (nl, _) = nonlinear_term(ctx, u);
    let sigma = ctx.sigma();
    let mut out = DMatrix::zeros(ctx.n(), ctx.num_harmonics());
    for (jj, &shift) in ctx.shifts().iter().enumerate() {
        let a = u.coeffs.column(jj).clone_owned();
        let la = ctx.op.apply_lk(shift, &a);
        for i in 0..ctx.n() {
            out[(i, jj)] = 2.0 * (sigma * la[i] - nl.coeffs[(i, jj)]);
        }
    }
    TimeFourierField { coeffs: out }
}

/// Hessian action `d^2J[u](d) = 2 (sigma L d - p |u|^{p-1} d)` with the
/// pointwise factor regularized for p < 2 (the odd power is not
/// differentiable at zero).
pub fn hessian_apply(
    ctx: &SolverContext,
    u_samples: &DMatrix<f64>,
    d: &TimeFourierField,
) -> TimeFourierField {
    let p = ctx.config.p;
    let eps_reg: f64 = 1e-14;
    let d_samples = d.time_samples(ctx);
    let mut g = DMatrix::zeros(ctx.n(), ctx.nt());
    for i in 0..ctx.n() {
        for q in 0..ctx.nt() {
            let s = u_samples[(i, q)];
            let factor = if p >= 2.0 {
                s.abs().powf(p - 1.0)
            } else {
                (s * s + eps_reg).powf(0.5 * (p - 1.0))
            };
            g[(i, q)] = p * factor * d_samples[(i, q)];
        }
    }
    let nl_coeffs = &g * ctx.cos_table().transpose() * (2.0 / ctx.nt() as f64);
    let sigma = ctx.sigma();
    let mut out = DMatrix::zeros(ctx.n(), ctx.num_harmonics());
    for (jj, &shift) in ctx.shifts().iter().enumerate() {
        let a = d.coeffs.column(jj).clone_owned();
        let la = ctx.op.apply_lk(shift, &a);
        for i in 0..ctx.n() {
            out[(i, jj)] = 2.0 * (sigma * la[i] - nl_coeffs[(i, jj)]);
        }
    }
    TimeFourierField { coeffs: out }
}

/// Residual field `L u - sigma |u|^{p-1} u` of the wave equation.
pub fn pde_residual_field(ctx: &SolverContext, u: &TimeFourierField) -> TimeFourierField {
    let (nl, _) = nonlinear_term(ctx, u);
    let sigma = ctx.sigma();
    let mut out = DMatrix::zeros(ctx.n(), ctx.num_harmonics());
    for (jj, &shift) in ctx.shifts().iter().enumerate() {
        let a = u.coeffs.column(jj).clone_owned();
        let la = ctx.op.apply_lk(shift, &a);
        for i in 0..ctx.n() {
            out[(i, jj)] = la[i] - sigma * nl.coeffs[(i, jj)];
        }
    }
    TimeFourierField { coeffs: out }
}

/// Spectral projection `P^+` / `P^-` of a field, harmonic by harmonic, from
/// the eigendecomposition of the assembled operators.
pub fn project_pm(ctx: &SolverContext, u: &TimeFourierField, positive: bool) -> TimeFourierField {
    let mut out = DMatrix::zeros(ctx.n(), ctx.num_harmonics());
    for (jj, &shift) in ctx.shifts().iter().enumerate() {
        let a = u.coeffs.column(jj).clone_owned();
        let pa = ctx.op.project(shift, &a, positive);
        out.set_column(jj, &pa);
    }
    TimeFourierField { coeffs: out }
}

/// Role-aware projection: the subspace where the quadratic part of the
/// functional is positive (focusing: `P^+`, defocusing: `P^-`).
pub fn project_role(ctx: &SolverContext, u: &TimeFourierField, positive_role: bool) -> TimeFourierField {
    let positive = if ctx.sigma() > 0.0 {
        positive_role
    } else {
        !positive_role
    };
    project_pm(ctx, u, positive)
}

/// Per-harmonic linear solve `L_k v_k = f_k` (the diagonalized resolvent of
/// the linear wave operator on the ansatz space).
pub fn linear_resolve(ctx: &SolverContext, f: &TimeFourierField) -> Result<TimeFourierField> {
    let mut out = DMatrix::zeros(ctx.n(), ctx.num_harmonics());
    for (jj, &shift) in ctx.shifts().iter().enumerate() {
        let rhs = f.coeffs.column(jj).clone_owned();
        let v = ctx.op.solve_lk(shift, &rhs, ctx.harmonic_k(jj))?;
        out.set_column(jj, &v);
    }
    Ok(TimeFourierField { coeffs: out })
}

/// The two state norms: the spectral norm
/// `||u||^2 = sum_k b_{|L_k|}(u_k, u_k)` and the weighted-Sobolev norm
/// `||u||_H^2 = sum_k |k|^{-1} ||u_k'||^2 + |k| ||u_k||^2`.
pub fn diagnostics_norms(ctx: &SolverContext, u: &TimeFourierField) -> (f64, f64) {
    let mut cal = 0.0;
    let mut hn = 0.0;
    for (jj, &shift) in ctx.shifts().iter().enumerate() {
        let a = u.coeffs.column(jj).clone_owned();
        cal += 0.5 * ctx.op.abs_bilinear(shift, &a);
        let k = ctx.harmonic_k(jj) as f64;
        // ||a'||^2 is the stiffness form, ||a||^2 the weighted mass form
        let stiff = ctx.op.bilinear(0.0, &a, &a) - 0.0;
        let mass = ctx.op.dot_w(&a, &a);
        hn += 0.5 * (stiff / k + k * mass);
    }
    (cal.max(0.0).sqrt(), hn.max(0.0).sqrt())
}

/// Assemble the full diagnostics record for a state.
pub fn make_diagnostics(
    ctx: &SolverContext,
    u: &TimeFourierField,
    method: &str,
    iterations: usize,
    converged: bool,
) -> Diagnostics {
    let p = ctx.config.p;
    let resid = pde_residual_field(ctx, u);
    let pde_abs = xt_norm(ctx, &resid);
    let un = xt_norm(ctx, u);
    let dj = evaluate_dj(ctx, u);
    let (cal_h, h_norm) = diagnostics_norms(ctx, u);
    let self_defect = pairing(ctx, &dj, u).abs() / (cal_h * cal_h).max(1e-300);
    // dual norm of the negative-role component of dJ
    let dj_modes = dj.to_modes(ctx);
    let mut minus_sq = 0.0;
    for jj in 0..ctx.num_harmonics() {
        let mus = ctx.mus(jj);
        for i in 0..ctx.n() {
            if !ctx.positive_role(mus[i]) {
                let g = dj_modes[(i, jj)];
                minus_sq += 0.5 * g * g / mus[i].abs().max(1e-300);
            }
        }
    }
    let j_value = evaluate_j(ctx, u);
    let identity = (p - 1.0) / (p + 1.0) * p_plus_one_integral(ctx, u);
    let ground_defect = (j_value - identity).abs() / identity.abs().max(1e-300);
    let (_, dropped) = nonlinear_term(ctx, u);
    // per-harmonic flux defects on the grid functions
    let mut flux = 0.0f64;
    let mut dominant = ctx.multipliers()[0];
    let mut dom_norm = -1.0;
    for jj in 0..ctx.num_harmonics() {
        let a = u.coeffs.column(jj).as_slice().to_vec();
        let gf = GraphFunction::from_values(*ctx.op.grid(), a).expect("grid matches");
        flux = flux.max(max_flux_residual(&gf));
        let nrm = ctx.op.dot_w(&u.coeffs.column(jj).clone_owned(), &u.coeffs.column(jj).clone_owned());
        if nrm > dom_norm {
            dom_norm = nrm;
            dominant = ctx.multipliers()[jj];
        }
    }
    // time-averaged square mass per cell: 0.5 sum_j a_j^2 against the weights
    let w = ctx.op.weights();
    let cells = ctx.op.grid().cell_of_dof();
    let mut mass: std::collections::BTreeMap<i64, f64> = std::collections::BTreeMap::new();
    for i in 0..ctx.n() {
        let mut s = 0.0;
        for jj in 0..ctx.num_harmonics() {
            s += u.coeffs[(i, jj)] * u.coeffs[(i, jj)];
        }
        *mass.entry(cells[i]).or_insert(0.0) += 0.5 * w[i] * s;
    }
    let (gap, gap_k) = ctx.discrete_gap();
    Diagnostics {
        method: method.to_string(),
        converged,
        iterations,
        pde_residual_abs: pde_abs,
        pde_residual_rel: pde_abs / un.max(1e-300),
        nehari_self: self_defect,
        nehari_minus: minus_sq.max(0.0).sqrt(),
        j_value,
        ground_state_identity: identity,
        ground_state_defect: ground_defect,
        cal_h_norm: cal_h,
        h_norm,
        embedding_ratio: h_norm / cal_h.max(1e-300),
        xt_norm: un,
        amplitude: u.max_abs(),
        cell_mass: mass.into_iter().collect(),
        flux_residual_max: flux,
        dominant_harmonic: dominant,
        dropped_energy_fraction: dropped,
        discrete_gap: gap,
        discrete_gap_harmonic: gap_k,
        convergence_log: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gapcheck::FrequencyConfig;
    use crate::graph::{Boundary, NecklaceGrid};
    use crate::solver::Nonlinearity;
    use nalgebra::DVector;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn small_ctx(p: f64, harmonics: u32) -> SolverContext {
        let kappa = 5;
        let config =
            FrequencyConfig::new(1, kappa, 0.0, 0.0, p, kappa * (2 * harmonics - 1)).unwrap();
        let grid = NecklaceGrid::new(4, 16, Boundary::DirichletTruncation, true).unwrap();
        SolverContext::new(config, grid, Nonlinearity::Focusing, None).unwrap()
    }

    fn random_field(ctx: &SolverContext, seed: u64, amp: f64) -> TimeFourierField {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut f = TimeFourierField::zeros(ctx);
        for v in f.coeffs.iter_mut() {
            *v = amp * rng.gen_range(-1.0..1.0);
        }
        f
    }

    #[test]
    fn cubic_of_single_harmonic_splits_three_one() {
        // cos^3 = (3 cos + cos 3theta)/4
        let ctx = small_ctx(3.0, 2); // harmonics j = 1, 3
        let mut u = TimeFourierField::zeros(&ctx);
        let amp = 0.7;
        for i in 0..ctx.n() {
            u.coeffs[(i, 0)] = amp * (i as f64 * 0.01).sin();
        }
        let (nl, dropped) = nonlinear_term(&ctx, &u);
        for i in 0..ctx.n() {
            let a = u.coeffs[(i, 0)];
            let expect1 = 0.75 * a * a * a;
            let expect3 = 0.25 * a * a * a;
            assert!((nl.coeffs[(i, 0)] - expect1).abs() < 1e-13);
            assert!((nl.coeffs[(i, 1)] - expect3).abs() < 1e-13);
        }
        assert!(dropped < 1e-12, "cubic of j=1 is fully retained, got {dropped}");
    }

    #[test]
    fn nonlinear_term_is_odd_and_zero_at_zero() {
        let ctx = small_ctx(2.3, 2);
        let zero = TimeFourierField::zeros(&ctx);
        assert_eq!(nonlinear_term(&ctx, &zero).0.coeffs.norm(), 0.0);
        let u = random_field(&ctx, 3, 0.8);
        let (a, _) = nonlinear_term(&ctx, &u);
        let (b, _) = nonlinear_term(&ctx, &u.scaled(-1.0));
        let diff = &a.coeffs + &b.coeffs;
        assert!(diff.norm() < 1e-14);
    }

    #[test]
    fn functional_homogeneity_of_nonlinear_part() {
        let ctx = small_ctx(3.0, 2);
        let u = random_field(&ctx, 5, 0.4);
        let s = 1.7;
        let a = p_plus_one_integral(&ctx, &u.scaled(s));
        let b = p_plus_one_integral(&ctx, &u) * s.powf(ctx.config.p + 1.0);
        assert!((a - b).abs() < 1e-12 * b.abs());
        assert_eq!(evaluate_j(&ctx, &TimeFourierField::zeros(&ctx)), 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for &p in &[3.0, 2.2] {
            let ctx = small_ctx(p, 3);
            let u = random_field(&ctx, 11, 0.5);
            let dj = evaluate_dj(&ctx, &u);
            let mut rng = StdRng::seed_from_u64(99);
            for _ in 0..5 {
                let d = random_field(&ctx, rng.gen(), 1.0);
                let h = 1e-5;
                let mut up = u.clone();
                up.add_scaled(h, &d);
                let mut um = u.clone();
                um.add_scaled(-h, &d);
                let fd = (evaluate_j(&ctx, &up) - evaluate_j(&ctx, &um)) / (2.0 * h);
                let an = pairing(&ctx, &dj, &d);
                assert!(
                    (fd - an).abs() <= 1e-5 * an.abs().max(1.0),
                    "p={p}: fd {fd} vs analytic {an}"
                );
            }
        }
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let ctx = small_ctx(3.0, 2);
        let u = random_field(&ctx, 21, 0.5);
        let d = random_field(&ctx, 22, 1.0);
        let h = 1e-6;
        let mut up = u.clone();
        up.add_scaled(h, &d);
        let mut um = u.clone();
        um.add_scaled(-h, &d);
        let gp = evaluate_dj(&ctx, &up);
        let gm = evaluate_dj(&ctx, &um);
        let mut fd = gp.coeffs.clone();
        fd -= &gm.coeffs;
        fd /= 2.0 * h;
        let hu = hessian_apply(&ctx, &u.time_samples(&ctx), &d);
        let diff = &fd - &hu.coeffs;
        assert!(
            diff.norm() <= 1e-6 * hu.coeffs.norm().max(1.0),
            "defect {}",
            diff.norm()
        );
    }

    #[test]
    fn projector_algebra_on_fields() {
        let ctx = small_ctx(3.0, 2);
        let u = random_field(&ctx, 31, 1.0);
        let plus = project_pm(&ctx, &u, true);
        let minus = project_pm(&ctx, &u, false);
        let mut sum = plus.clone();
        sum.add_scaled(1.0, &minus);
        sum.add_scaled(-1.0, &u);
        assert!(xt_norm(&ctx, &sum) < 1e-11 * xt_norm(&ctx, &u));
        let pp = project_pm(&ctx, &plus, true);
        let mut idem = pp.clone();
        idem.add_scaled(-1.0, &plus);
        assert!(xt_norm(&ctx, &idem) < 1e-11 * xt_norm(&ctx, &plus).max(1e-300));
        let cross = project_pm(&ctx, &plus, false);
        assert!(xt_norm(&ctx, &cross) < 1e-11 * xt_norm(&ctx, &plus).max(1e-300));
        // sign definiteness of the quadratic forms
        let q_plus: f64 = quadratic_part(&ctx, &plus);
        let q_minus: f64 = quadratic_part(&ctx, &minus);
        assert!(q_plus >= -1e-10);
        assert!(q_minus <= 1e-10);
    }

    #[test]
    fn negative_mode_count_matches_lattice_classification() {
        // for the first harmonic the discrete negative count per cell matches
        // the number of bands below the shift
        let ctx = small_ctx(3.0, 1);
        let shift = ctx.shifts()[0];
        let discrete = ctx.op.negative_count(shift);
        let kk0 = ctx.harmonic_k(0) * ctx.config.k0 as i64; // 5
        let bands_below = kk0 as usize; // m in -(kk0-1)/2 ..= (kk0-1)/2
        let cells = ctx.op.grid().num_cells();
        let expected = bands_below * cells;
        let slack = 2 + expected / 50;
        assert!(
            discrete.abs_diff(expected) <= slack,
            "discrete {discrete} vs lattice {expected}"
        );
    }

    #[test]
    fn linear_resolve_round_trip() {
        let ctx = small_ctx(3.0, 2);
        let f = random_field(&ctx, 41, 1.0);
        let v = linear_resolve(&ctx, &f).unwrap();
        // apply L back
        let mut back = TimeFourierField::zeros(&ctx);
        for (jj, &shift) in ctx.shifts().iter().enumerate() {
            let col = ctx.op.apply_lk(shift, &v.coeffs.column(jj).clone_owned());
            back.coeffs.set_column(jj, &col);
        }
        back.add_scaled(-1.0, &f);
        assert!(xt_norm(&ctx, &back) <= 1e-10 * xt_norm(&ctx, &f));
        // norm bound by the discrete gap
        let (gap, _) = ctx.discrete_gap();
        assert!(xt_norm(&ctx, &v) <= xt_norm(&ctx, &f) / gap * (1.0 + 1e-9));
    }

    #[test]
    fn norms_vanish_only_at_zero_and_embed() {
        let ctx = small_ctx(3.0, 2);
        let zero = TimeFourierField::zeros(&ctx);
        let (cal, h) = diagnostics_norms(&ctx, &zero);
        assert_eq!(cal, 0.0);
        assert_eq!(h, 0.0);
        let mut ratios = Vec::new();
        for seed in 0..20 {
            let u = random_field(&ctx, seed, 1.0);
            let (cal, h) = diagnostics_norms(&ctx, &u);
            assert!(cal > 0.0 && h > 0.0);
            ratios.push(h / cal);
        }
        let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(max_ratio.is_finite() && max_ratio > 0.0);
        // single eigenvector: ||u||^2 = |mu| ||u_k||^2, cosine-pair bookkeeping halves it
        let mut modes = DMatrix::zeros(ctx.n(), ctx.num_harmonics());
        modes[(7, 0)] = 1.0;
        let u = TimeFourierField::from_modes(&ctx, &modes);
        let (cal, _) = diagnostics_norms(&ctx, &u);
        let mu = ctx.mus(0)[7];
        assert!((cal * cal - 0.5 * mu.abs()).abs() < 1e-10);
    }

    #[test]
    fn defocusing_swaps_projector_roles() {
        let kappa = 5;
        let config = FrequencyConfig::new(1, kappa, 0.0, 0.0, 3.0, kappa).unwrap();
        let grid = NecklaceGrid::new(3, 6, Boundary::DirichletTruncation, true).unwrap();
        let ctx_f = SolverContext::new(config, grid, Nonlinearity::Focusing, None).unwrap();
        let ctx_d = SolverContext::new(config, grid, Nonlinearity::Defocusing, None).unwrap();
        let u = random_field(&ctx_f, 7, 1.0);
        let a = project_role(&ctx_f, &u, true);
        let b = project_role(&ctx_d, &u, false);
        let diff = &a.coeffs - &b.coeffs;
        assert!(diff.norm() < 1e-12);
    }

    #[test]
    fn residual_consistency_with_gradient() {
        // dJ = 2 sigma (L u - sigma N) when sigma^2 = 1
        let ctx = small_ctx(3.0, 2);
        let u = random_field(&ctx, 55, 0.6);
        let dj = evaluate_dj(&ctx, &u);
        let r = pde_residual_field(&ctx, &u);
        let diff = &dj.coeffs - &(r.coeffs * 2.0 * ctx.sigma());
        assert!(diff.norm() < 1e-12);
    }

    #[test]
    fn antiperiodicity_is_exact() {
        let ctx = small_ctx(3.0, 3);
        let u = random_field(&ctx, 61, 0.9);
        for q in 0..64 {
            let theta = 2.0 * std::f64::consts::PI * q as f64 / 64.0;
            let a = u.at_phase(&ctx, theta);
            let b = u.at_phase(&ctx, theta + std::f64::consts::PI);
            let diff = &a + &b;
            assert!(
                diff.amax() <= 1e-12 * u.max_abs().max(1.0),
                "antiperiodicity broken at theta={theta}"
            );
        }
    }
}
