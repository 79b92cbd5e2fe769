//! Time-Fourier Galerkin solver for time-periodic localized waves.
//!
//! The ansatz `u(x, t) = sum_j a_j(x) cos(kappa j omega t)` over odd `j`
//! (time-even, real coefficients, circle-symmetric) decomposes the wave
//! operator into the shifted spatial operators `L_k` and turns the equation
//! into the critical-point problem of the indefinite functional
//!
//! `J[u] = sigma * sum_k b_{L_k}(u_k, u_k) - (2/(p+1)) avg_t int |u|^{p+1}`,
//!
//! where `sigma = +1` (focusing) or `-1` (defocusing) flips the roles of the
//! positive and negative spectral subspaces. Critical points satisfy
//! `L_k a_k = sigma * (|u|^{p-1} u)_k` harmonic by harmonic, i.e. they are
//! discrete weak solutions of the wave equation.

pub mod field;
pub mod functional;
pub mod nehari;
pub mod newton;
pub mod spatial;

pub use field::{BreatherState, Diagnostics, TimeFourierField};
pub use functional::{
    diagnostics_norms, evaluate_dj, evaluate_j, linear_resolve, nonlinear_term, project_pm,
};
pub use nehari::{inner_maximize, nehari_minimize, InnerState, NehariOptions};
pub use newton::{newton_solve, NewtonOptions};
pub use spatial::SpatialOperator;

use crate::error::{Error, Result};
use crate::gapcheck::FrequencyConfig;
use crate::graph::NecklaceGrid;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Sign of the nonlinearity `+-|u|^{p-1} u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nonlinearity {
    Focusing,
    Defocusing,
}

impl Nonlinearity {
    pub fn sigma(self) -> f64 {
        match self {
            Nonlinearity::Focusing => 1.0,
            Nonlinearity::Defocusing => -1.0,
        }
    }
}

/// Immutable assembly shared by all solver operations: the spatial operator
/// with its eigendecomposition, per-harmonic shifts, and the time-sampling
/// table for the pseudo-spectral nonlinearity.
pub struct SolverContext {
    pub config: FrequencyConfig,
    pub sign: Nonlinearity,
    pub op: Arc<SpatialOperator>,
    /// odd multipliers j (harmonic k = kappa * j)
    multipliers: Vec<u32>,
    /// shift alpha - omega^2 k^2 per retained harmonic
    shifts: Vec<f64>,
    /// cos(j * theta_q) table, J x Nt
    cos_table: DMatrix<f64>,
    nt: usize,
}

impl SolverContext {
    /// Assemble on a symmetric grid. `nt` defaults to `8 J` (rounded up to a
    /// multiple of 4), which integrates cubic products of the retained
    /// harmonics exactly; non-integer powers are Galerkin-truncated and the
    /// dropped-harmonic energy is reported as a diagnostic.
    pub fn new(
        config: FrequencyConfig,
        grid: NecklaceGrid,
        sign: Nonlinearity,
        nt: Option<usize>,
    ) -> Result<Self> {
        let op = Arc::new(SpatialOperator::assemble(grid, config.alpha)?);
        Self::with_operator(config, op, sign, nt)
    }

    /// Build a context around an existing operator (the eigendecomposition
    /// is independent of kappa and of the harmonic truncation, so scans can
    /// share it). The operator's alpha must match the configuration.
    pub fn with_operator(
        config: FrequencyConfig,
        op: Arc<SpatialOperator>,
        sign: Nonlinearity,
        nt: Option<usize>,
    ) -> Result<Self> {
        if (op.alpha() - config.alpha).abs() > 1e-14 {
            return Err(Error::invalid(
                "operator was assembled with a different alpha",
            ));
        }
        let multipliers = config.harmonic_multipliers();
        if multipliers.is_empty() {
            return Err(Error::invalid("no harmonics retained"));
        }
        let shifts: Vec<f64> = multipliers.iter().map(|&j| config.shift_of(j)).collect();
        let j_max = *multipliers.last().unwrap() as usize;
        let mut nt = nt.unwrap_or(4 * (j_max + 1)).max(4 * (j_max + 1));
        nt = nt.next_multiple_of(4);
        let jn = multipliers.len();
        let cos_table = DMatrix::from_fn(jn, nt, |r, q| {
            let theta = 2.0 * std::f64::consts::PI * q as f64 / nt as f64;
            (multipliers[r] as f64 * theta).cos()
        });
        Ok(SolverContext {
            config,
            sign,
            op,
            multipliers,
            shifts,
            cos_table,
            nt,
        })
    }

    /// The same problem with only the first `jn` harmonics retained
    /// (harmonic-count continuation); shares the spatial operator.
    pub fn truncated(&self, jn: usize) -> Result<SolverContext> {
        let jn = jn.clamp(1, self.num_harmonics());
        let j_hi = self.multipliers[jn - 1];
        let config = FrequencyConfig::new(
            self.config.k0,
            self.config.kappa,
            self.config.alpha,
            self.config.a_bound,
            self.config.p,
            self.config.kappa * j_hi,
        )?;
        SolverContext::with_operator(config, Arc::clone(&self.op), self.sign, None)
    }

    pub fn n(&self) -> usize {
        self.op.n()
    }

    pub fn num_harmonics(&self) -> usize {
        self.multipliers.len()
    }

    pub fn multipliers(&self) -> &[u32] {
        &self.multipliers
    }

    pub fn shifts(&self) -> &[f64] {
        &self.shifts
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn cos_table(&self) -> &DMatrix<f64> {
        &self.cos_table
    }

    pub fn harmonic_k(&self, jj: usize) -> i64 {
        (self.config.kappa * self.multipliers[jj]) as i64
    }

    pub fn sigma(&self) -> f64 {
        self.sign.sigma()
    }

    /// Smallest |eigenvalue| of any retained `L_k` together with the harmonic
    /// attaining it.
    pub fn discrete_gap(&self) -> (f64, i64) {
        let mut best = f64::INFINITY;
        let mut arg = 0i64;
        for (jj, &shift) in self.shifts.iter().enumerate() {
            let g = self.op.min_abs_mu(shift);
            if g < best {
                best = g;
                arg = self.harmonic_k(jj);
            }
        }
        (best, arg)
    }

    /// Hard error when the assembled operators are too close to singular for
    /// the variational machinery.
    pub fn require_discrete_gap(&self, min_gap: f64) -> Result<()> {
        let (gap, k) = self.discrete_gap();
        if gap < min_gap {
            return Err(Error::DiscreteResonance {
                k,
                min_abs_eig: gap,
            });
        }
        Ok(())
    }

    /// Mode-space eigenvalues of `L_k` for harmonic slot `jj`.
    pub fn mus(&self, jj: usize) -> Vec<f64> {
        self.op.mu(self.shifts[jj]).collect()
    }

    /// Whether a mode is in the positive role of the functional
    /// (`sigma * mu > 0`); the defocusing case swaps the subspaces.
    pub fn positive_role(&self, mu: f64) -> bool {
        self.sigma() * mu > 0.0
    }

    /// Localized single-harmonic seed profile: a Gaussian envelope over a
    /// carrier at the gap frequency `omega kappa`, centered on the link of
    /// cell 0 (a reflection-symmetric point of the graph). The carrier gives
    /// the seed O(1) weight on the band edges bracketing the gap, which is
    /// where localized states bifurcate from.
    pub fn seed_bump(&self) -> TimeFourierField {
        let grid = self.op.grid();
        let center = std::f64::consts::PI / 2.0;
        let sigma_x = 2.0 * std::f64::consts::PI;
        let carrier = self.config.omega() * self.config.kappa as f64;
        let mut f = TimeFourierField::zeros(self);
        for info in grid.dofs() {
            let x = info.x(grid);
            let g = (-(x - center) * (x - center) / (2.0 * sigma_x * sigma_x)).exp();
            f.coeffs[(info.index, 0)] = g * (carrier * (x - center)).cos();
        }
        f
    }
}
