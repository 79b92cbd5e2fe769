//! Time-Fourier fields and converged-state diagnostics.

use super::SolverContext;
use crate::error::{Error, Result};
use crate::graph::{GraphFunction, RealGraphFunction};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Coefficients of the ansatz `u(x, t) = sum_j a_j(x) cos(kappa j omega t)`:
/// one column per retained odd harmonic, rows indexed by the grid degrees of
/// freedom. Reality, circle symmetry, vertex continuity and temporal
/// antiperiodicity are all built into the representation.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeFourierField {
    pub coeffs: DMatrix<f64>,
}

impl TimeFourierField {
    pub fn zeros(ctx: &SolverContext) -> Self {
        TimeFourierField {
            coeffs: DMatrix::zeros(ctx.n(), ctx.num_harmonics()),
        }
    }

    pub fn from_matrix(ctx: &SolverContext, coeffs: DMatrix<f64>) -> Result<Self> {
        if coeffs.nrows() != ctx.n() || coeffs.ncols() != ctx.num_harmonics() {
            return Err(Error::invalid(format!(
                "coefficient matrix {}x{} does not match context {}x{}",
                coeffs.nrows(),
                coeffs.ncols(),
                ctx.n(),
                ctx.num_harmonics()
            )));
        }
        Ok(TimeFourierField { coeffs })
    }

    pub fn harmonic(&self, jj: usize) -> DVector<f64> {
        self.coeffs.column(jj).clone_owned()
    }

    pub fn scaled(&self, c: f64) -> Self {
        TimeFourierField {
            coeffs: &self.coeffs * c,
        }
    }

    pub fn add_scaled(&mut self, c: f64, other: &Self) {
        for (a, b) in self.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *a += c * *b;
        }
    }

    /// Mode-space coefficients, column per harmonic.
    pub fn to_modes(&self, ctx: &SolverContext) -> DMatrix<f64> {
        ctx.op.to_modes_mat(&self.coeffs)
    }

    pub fn from_modes(ctx: &SolverContext, modes: &DMatrix<f64>) -> Self {
        TimeFourierField {
            coeffs: ctx.op.from_modes_mat(modes),
        }
    }

    /// Time samples `U[i, q] = u(x_i, theta_q)` over one temporal period.
    pub fn time_samples(&self, ctx: &SolverContext) -> DMatrix<f64> {
        &self.coeffs * ctx.cos_table()
    }

    /// Spatial profile at phase `theta = 2 pi t / T`.
    pub fn at_phase(&self, ctx: &SolverContext, theta: f64) -> DVector<f64> {
        let J = ctx.num_harmonics();
        let c = DVector::from_fn(J, |jj, _| (ctx.multipliers()[jj] as f64 * theta).cos());
        &self.coeffs * c
    }

    /// Initial displacement `u(·, 0) = sum_j a_j` as a grid function.
    pub fn initial_profile(&self, ctx: &SolverContext) -> RealGraphFunction {
        let v = self.at_phase(ctx, 0.0);
        GraphFunction::from_values(*ctx.op.grid(), v.as_slice().to_vec()).expect("matching grid")
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

/// Duality pairing `sum_{k in kappa Z_odd} <u_k, v_k>` expressed through the
/// cosine coefficients: `0.5 sum_j <a_j, b_j>_W`.
pub fn pairing(ctx: &SolverContext, u: &TimeFourierField, v: &TimeFourierField) -> f64 {
    let w = ctx.op.weights();
    let mut acc = 0.0;
    for jj in 0..ctx.num_harmonics() {
        let cu = u.coeffs.column(jj);
        let cv = v.coeffs.column(jj);
        let mut s = 0.0;
        for i in 0..ctx.n() {
            s += w[i] * cu[i] * cv[i];
        }
        acc += s;
    }
    0.5 * acc
}

/// Space-time L2 norm of the reconstructed field (time averaged):
/// `sqrt(int_Gamma avg_t u^2)`.
pub fn xt_norm(ctx: &SolverContext, u: &TimeFourierField) -> f64 {
    pairing(ctx, u, u).max(0.0).sqrt()
}

/// Diagnostics attached to a converged (or best-effort) state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Diagnostics {
    pub method: String,
    pub converged: bool,
    pub iterations: usize,
    /// `|| L u - sigma |u|^{p-1} u ||` in the space-time norm
    pub pde_residual_abs: f64,
    /// relative to the state norm
    pub pde_residual_rel: f64,
    /// `|J'[u](u)| / ||u||_H^2` (self-direction constraint defect)
    pub nehari_self: f64,
    /// `sup_{v in negative subspace} |J'[u](v)| / ||v||_H`
    pub nehari_minus: f64,
    /// functional value (sign-adjusted so ground states are positive)
    pub j_value: f64,
    /// `(p-1)/(p+1) * avg_t int |u|^{p+1}`; equals `j_value` at critical points
    pub ground_state_identity: f64,
    /// relative defect between the two
    pub ground_state_defect: f64,
    pub cal_h_norm: f64,
    pub h_norm: f64,
    /// `h_norm / cal_h_norm` (embedding diagnostic)
    pub embedding_ratio: f64,
    /// space-time L2 norm of the state
    pub xt_norm: f64,
    pub amplitude: f64,
    /// per-cell mass of the time-averaged square, ordered by cell index
    pub cell_mass: Vec<(i64, f64)>,
    /// worst Kirchhoff flux defect over harmonics and interior vertices
    pub flux_residual_max: f64,
    /// odd multiplier carrying the largest coefficient norm
    pub dominant_harmonic: u32,
    /// energy fraction of the nonlinearity falling outside the retained
    /// harmonics (Galerkin truncation monitor)
    pub dropped_energy_fraction: f64,
    /// smallest |eigenvalue| over the retained shifted operators
    pub discrete_gap: f64,
    /// harmonic attaining the discrete gap
    pub discrete_gap_harmonic: i64,
    /// per-iteration residual norms (populated by the Newton solver)
    #[serde(default)]
    pub convergence_log: Vec<f64>,
}

impl Diagnostics {
    /// Mass fraction in cells `|n| >= n0`.
    pub fn tail_mass_fraction(&self, n0: i64) -> f64 {
        let total: f64 = self.cell_mass.iter().map(|(_, m)| m).sum();
        if total <= 0.0 {
            return 0.0;
        }
        let tail: f64 = self
            .cell_mass
            .iter()
            .filter(|(n, _)| n.abs() >= n0)
            .map(|(_, m)| m)
            .sum();
        tail / total
    }

    /// Pairs compared by `verify` (name, value); every entry must reproduce
    /// under fresh assembly.
    pub fn comparable(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("pde_residual_abs", self.pde_residual_abs),
            ("pde_residual_rel", self.pde_residual_rel),
            ("nehari_self", self.nehari_self),
            ("nehari_minus", self.nehari_minus),
            ("j_value", self.j_value),
            ("ground_state_identity", self.ground_state_identity),
            ("cal_h_norm", self.cal_h_norm),
            ("h_norm", self.h_norm),
            ("xt_norm", self.xt_norm),
            ("amplitude", self.amplitude),
            ("flux_residual_max", self.flux_residual_max),
        ]
    }
}

/// A candidate or converged breather with its diagnostics.
#[derive(Debug, Clone)]
pub struct BreatherState {
    pub field: TimeFourierField,
    pub diagnostics: Diagnostics,
}
