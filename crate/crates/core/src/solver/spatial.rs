//! The discrete spatial operator shared by every temporal harmonic.
//!
//! On a symmetric-storage grid the necklace reduces to a path, so the
//! stiffness matrix is tridiagonal in chain order and one symmetric
//! tridiagonal eigendecomposition of `B = W^{-1/2} S W^{-1/2}` serves every
//! shifted operator `L_k = -Δ_h + (alpha - omega^2 k^2)`: its eigenvalues
//! are `beta_i + alpha - omega^2 k^2` with W-orthonormal eigenvectors
//! `phi_i = W^{-1/2} psi_i` independent of `k`.

use crate::error::{Error, Result};
use crate::graph::{stiffness_tridiag, NecklaceGrid};
use crate::linalg::{BandedMatrix, SymTridiag};
use nalgebra::{DMatrix, DVector};

pub struct SpatialOperator {
    grid: NecklaceGrid,
    alpha: f64,
    stiffness: SymTridiag,
    weights: Vec<f64>,
    sqrt_w: Vec<f64>,
    inv_sqrt_w: Vec<f64>,
    /// ascending eigenvalues of -Δ_h (all >= 0 up to roundoff)
    eigvals: Vec<f64>,
    /// l2-orthonormal eigenvectors of B; column i pairs with eigvals[i]
    psi: DMatrix<f64>,
}

impl SpatialOperator {
    pub fn assemble(grid: NecklaceGrid, alpha: f64) -> Result<Self> {
        if !grid.symmetric() {
            return Err(Error::invalid(
                "the solver operates on the symmetric subspace; use a symmetric grid",
            ));
        }
        if alpha < 0.0 {
            return Err(Error::invalid("alpha must be >= 0"));
        }
        let stiffness = stiffness_tridiag(&grid);
        let weights = grid.quad_weights();
        let sqrt_w: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
        let inv_sqrt_w: Vec<f64> = sqrt_w.iter().map(|w| 1.0 / w).collect();
        let n = grid.n_dofs();
        let mut b = SymTridiag {
            diag: vec![0.0; n],
            off: vec![0.0; n - 1],
        };
        for i in 0..n {
            b.diag[i] = stiffness.diag[i] * inv_sqrt_w[i] * inv_sqrt_w[i];
            if i + 1 < n {
                b.off[i] = stiffness.off[i] * inv_sqrt_w[i] * inv_sqrt_w[i + 1];
            }
        }
        let eig = b.eigen()?;
        Ok(SpatialOperator {
            grid,
            alpha,
            stiffness,
            weights,
            sqrt_w,
            inv_sqrt_w,
            eigvals: eig.values,
            psi: eig.vectors,
        })
    }

    pub fn grid(&self) -> &NecklaceGrid {
        &self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n(&self) -> usize {
        self.grid.n_dofs()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn stiffness(&self) -> &SymTridiag {
        &self.stiffness
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigvals
    }

    /// Weighted inner product `<a, b>_W`.
    pub fn dot_w(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n() {
            s += self.weights[i] * a[i] * b[i];
        }
        s
    }

    /// Mode coefficients `c_i = <a, phi_i>_W = psi_i^T W^{1/2} a`.
    pub fn to_modes(&self, a: &DVector<f64>) -> DVector<f64> {
        let scaled = DVector::from_fn(self.n(), |i, _| a[i] * self.sqrt_w[i]);
        self.psi.tr_mul(&scaled)
    }

    /// Grid values from mode coefficients, `a = W^{-1/2} Psi c`.
    pub fn from_modes(&self, c: &DVector<f64>) -> DVector<f64> {
        let mut a = &self.psi * c;
        for i in 0..self.n() {
            a[i] *= self.inv_sqrt_w[i];
        }
        a
    }

    /// Column-wise mode transform of a whole coefficient matrix (one gemm).
    pub fn to_modes_mat(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let mut scaled = a.clone();
        for j in 0..scaled.ncols() {
            let mut col = scaled.column_mut(j);
            for i in 0..col.nrows() {
                col[i] *= self.sqrt_w[i];
            }
        }
        self.psi.tr_mul(&scaled)
    }

    /// Inverse of [`Self::to_modes_mat`].
    pub fn from_modes_mat(&self, c: &DMatrix<f64>) -> DMatrix<f64> {
        let mut a = &self.psi * c;
        for j in 0..a.ncols() {
            let mut col = a.column_mut(j);
            for i in 0..col.nrows() {
                col[i] *= self.inv_sqrt_w[i];
            }
        }
        a
    }

    /// Eigenvalues of `L_k` for a shift `alpha - omega^2 k^2`.
    pub fn mu(&self, shift: f64) -> impl Iterator<Item = f64> + '_ {
        self.eigvals.iter().map(move |b| b + shift)
    }

    pub fn min_abs_mu(&self, shift: f64) -> f64 {
        self.mu(shift).fold(f64::INFINITY, |a, m| a.min(m.abs()))
    }

    pub fn negative_count(&self, shift: f64) -> usize {
        self.mu(shift).filter(|m| *m < 0.0).count()
    }

    /// `y = L_k a = W^{-1} S a + shift * a`.
    pub fn apply_lk(&self, shift: f64, a: &DVector<f64>) -> DVector<f64> {
        let n = self.n();
        let mut y = DVector::zeros(n);
        self.stiffness.apply(a.as_slice(), y.as_mut_slice());
        for i in 0..n {
            y[i] = y[i] / self.weights[i] + shift * a[i];
        }
        y
    }

    /// Quadratic form `b_{L_k}(a, b) = a^T S b + shift * a^T W b`.
    pub fn bilinear(&self, shift: f64, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        let n = self.n();
        let mut sa = vec![0.0; n];
        self.stiffness.apply(a.as_slice(), &mut sa);
        let mut acc = 0.0;
        for i in 0..n {
            acc += sa[i] * b[i] + shift * self.weights[i] * a[i] * b[i];
        }
        acc
    }

    /// `b_{|L_k|}(a, a)` through the eigenbasis.
    pub fn abs_bilinear(&self, shift: f64, a: &DVector<f64>) -> f64 {
        let c = self.to_modes(a);
        c.iter()
            .zip(self.mu(shift))
            .map(|(ci, mu)| mu.abs() * ci * ci)
            .sum()
    }

    /// Direct sparse solve of `L_k v = f` (tridiagonal LU with partial
    /// pivoting). Near-zero spectrum is reported as discrete resonance.
    pub fn solve_lk(&self, shift: f64, f: &DVector<f64>, k: i64) -> Result<DVector<f64>> {
        let gap = self.min_abs_mu(shift);
        let scale = self.eigvals.last().copied().unwrap_or(1.0).max(shift.abs());
        if gap <= 1e-10 * scale.max(1.0) {
            return Err(Error::DiscreteResonance {
                k,
                min_abs_eig: gap,
            });
        }
        let n = self.n();
        let mut band = BandedMatrix::zeros(n, 1, 1);
        for i in 0..n {
            band.set(i, i, self.stiffness.diag[i] / self.weights[i] + shift);
            if i + 1 < n {
                band.set(i, i + 1, self.stiffness.off[i] / self.weights[i]);
                band.set(i + 1, i, self.stiffness.off[i] / self.weights[i + 1]);
            }
        }
        let lu = band.factor()?;
        let v = DVector::from_vec(lu.solve(f.as_slice()));
        // residual guard: the factorization must reproduce f
        let r = self.apply_lk(shift, &v) - f;
        let rn = self.dot_w(&r, &r).sqrt();
        let fn_ = self.dot_w(f, f).sqrt();
        if rn > 1e-10 * fn_.max(1e-300) {
            return Err(Error::NonConvergence {
                what: format!("tridiagonal solve at harmonic k={k}"),
                iterations: 1,
                residual: rn / fn_.max(1e-300),
            });
        }
        Ok(v)
    }

    /// Spectral projection onto the positive or negative part of `L_k`.
    pub fn project(&self, shift: f64, a: &DVector<f64>, positive: bool) -> DVector<f64> {
        let mut c = self.to_modes(a);
        for (i, mu) in self.mu(shift).enumerate() {
            let keep = (mu > 0.0) == positive;
            if !keep {
                c[i] = 0.0;
            }
        }
        self.from_modes(&c)
    }

    /// Index-shift of the effective discrete wavenumber against the
    /// continuum one at spectral location `c`; harmonics whose shift exceeds
    /// a fraction of a band are not resolved by the grid.
    pub fn dispersion_shift(&self, c: f64) -> f64 {
        let h = self.grid.step();
        let arg = 1.0 - 0.5 * c * h * h;
        if arg <= -1.0 {
            return f64::INFINITY; // beyond the resolvable range
        }
        let theta = arg.clamp(-1.0, 1.0).acos();
        (theta / h - c.max(0.0).sqrt()).abs()
    }
}
