//! Quasiperiodic Bloch eigenfunctions on one periodicity cell.
//!
//! For band `m` and quasimomentum `l` the eigenfunction is built edgewise as
//! `g(x) = A cos(s x) + B sin(s x)` with `s = sqrt(lambda_m(l))`: the link
//! coefficients come from the eigenvector of the monodromy matrix with
//! eigenvalue `e^{i 2 pi l}`, the circle coefficients from transferring the
//! (value, flux) state across the first vertex. The periodic representative
//! is `f(l, x) = e^{-i l x} g(l, x)`, normalized to unit cell norm with a
//! deterministic phase (value at x = 0 real and nonnegative, falling back to
//! the derivative).
//!
//! At `l = 0` the bands `m` and `-m` touch and the symmetric eigenspace is
//! two-dimensional; both basis vectors are returned explicitly: the cosine
//! mode `cos(m x)` on every edge and the sine mode `(2 sin(m x), sin(m x))`
//! on (link, circles).

use super::{band_closed_form, monodromy_matrix};
use crate::error::{Error, Result};
use crate::graph::{Edge, GraphFunction, NecklaceGrid};
use crate::trig::int_trig_product;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Edgewise trigonometric coefficients of a cell eigenfunction in the
/// quasiperiodic representation `g`.
#[derive(Debug, Clone)]
pub struct BlochEigenfunction {
    pub m: i64,
    pub l: f64,
    pub lambda: f64,
    /// sqrt(lambda)
    pub s: f64,
    /// (A, B) on the link, `g = A cos(s x) + B sin(s x)` for x in [0, pi]
    pub link: (Complex64, Complex64),
    /// (A, B) on either circle copy, x in [pi, 2 pi]
    pub circle: (Complex64, Complex64),
}

/// Eigenfunctions at one `(m, l)`: simple for `l != 0` (and for m = 0), a
/// two-dimensional basis at band touchings.
#[derive(Debug, Clone)]
pub enum EigenBasis {
    Simple(BlochEigenfunction),
    Degenerate(BlochEigenfunction, BlochEigenfunction),
}

impl EigenBasis {
    pub fn members(&self) -> Vec<&BlochEigenfunction> {
        match self {
            EigenBasis::Simple(a) => vec![a],
            EigenBasis::Degenerate(a, b) => vec![a, b],
        }
    }
}

impl BlochEigenfunction {
    /// Quasiperiodic value `g` at `x` in `[0, 2 pi]`; the edge picks the
    /// formula on the circle range.
    pub fn eval_g(&self, edge: Edge, x: f64) -> Complex64 {
        let (a, b) = if edge == Edge::Link && x <= PI + 1e-12 {
            self.link
        } else if x >= PI - 1e-12 {
            self.circle
        } else {
            self.link
        };
        a * (self.s * x).cos() + b * (self.s * x).sin()
    }

    /// Edgewise derivative of `g`.
    pub fn eval_g_prime(&self, edge: Edge, x: f64) -> Complex64 {
        let (a, b) = if edge == Edge::Link && x <= PI + 1e-12 {
            self.link
        } else if x >= PI - 1e-12 {
            self.circle
        } else {
            self.link
        };
        (-a * (self.s * x).sin() + b * (self.s * x).cos()) * self.s
    }

    /// Periodic representative `f(l, x) = e^{-i l x} g(l, x)` for x in one
    /// cell; `|f| = |g|` pointwise.
    pub fn eval_f(&self, edge: Edge, x: f64) -> Complex64 {
        Complex64::from_polar(1.0, -self.l * x) * self.eval_g(edge, x)
    }

    /// Exact cell norm squared: `int_0^pi |g_0|^2 + 2 int_pi^{2 pi} |g_c|^2`.
    pub fn norm_sq(&self) -> f64 {
        let (a0, b0) = self.link;
        let (a1, b1) = self.circle;
        let link = int_trig_product(self.s, a0, b0, self.s, a0, b0, 0.0, PI);
        let circ = int_trig_product(self.s, a1, b1, self.s, a1, b1, PI, 2.0 * PI);
        (link + circ * 2.0).re
    }

    /// Exact cell inner product with another eigenfunction at the same `l`.
    pub fn inner(&self, other: &BlochEigenfunction) -> Complex64 {
        let link = int_trig_product(
            self.s,
            self.link.0,
            self.link.1,
            other.s,
            other.link.0,
            other.link.1,
            0.0,
            PI,
        );
        let circ = int_trig_product(
            self.s,
            self.circle.0,
            self.circle.1,
            other.s,
            other.circle.0,
            other.circle.1,
            PI,
            2.0 * PI,
        );
        link + circ * 2.0
    }

    /// Upper bound for the sup norm over the cell (exact modulus maximum of
    /// each edgewise trigonometric form, ignoring the interval restriction).
    pub fn sup_bound(&self) -> f64 {
        let edge_bound = |(a, b): (Complex64, Complex64)| {
            let p = a.norm_sqr();
            let q = b.norm_sqr();
            let mean = 0.5 * (p + q);
            let osc = (0.5 * (p - q)).hypot((a * b.conj()).re);
            (mean + osc).max(0.0).sqrt()
        };
        edge_bound(self.link).max(edge_bound(self.circle))
    }

    /// Worst defect of the four vertex conditions (continuity, flux balance,
    /// quasiperiodic value, quasiperiodic flux), scaled by the coefficient
    /// magnitude.
    pub fn condition_residual(&self) -> f64 {
        let mu = Complex64::from_polar(1.0, 2.0 * PI * self.l);
        let g0_pi = self.eval_g(Edge::Link, PI);
        let gc_pi = self.eval_g(Edge::CirclePlus, PI);
        let d0_pi = self.eval_g_prime(Edge::Link, PI);
        let dc_pi = self.eval_g_prime(Edge::CirclePlus, PI);
        let g0_0 = self.eval_g(Edge::Link, 0.0);
        let d0_0 = self.eval_g_prime(Edge::Link, 0.0);
        let gc_2pi = self.eval_g(Edge::CirclePlus, 2.0 * PI);
        let dc_2pi = self.eval_g_prime(Edge::CirclePlus, 2.0 * PI);
        let scale = [self.link.0, self.link.1, self.circle.0, self.circle.1]
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
            .max(1e-30)
            * self.s.max(1.0);
        let defects = [
            (g0_pi - gc_pi).norm(),
            (d0_pi - dc_pi * 2.0).norm(),
            (mu * g0_0 - gc_2pi).norm(),
            (mu * d0_0 - dc_2pi * 2.0).norm(),
        ];
        defects.iter().fold(0.0f64, |acc, d| acc.max(*d)) / scale
    }

    /// Sample the periodic representative `f` on a one-cell grid.
    pub fn sample_on_cell(&self, cell: NecklaceGrid) -> GraphFunction<Complex64> {
        GraphFunction::from_fn(cell, |edge, x| self.eval_f(edge, x))
    }

    fn scaled(&self, c: Complex64) -> Self {
        BlochEigenfunction {
            link: (self.link.0 * c, self.link.1 * c),
            circle: (self.circle.0 * c, self.circle.1 * c),
            ..self.clone()
        }
    }

    fn normalized(&self) -> Self {
        let n = self.norm_sq().sqrt();
        let unit = self.scaled(Complex64::new(1.0 / n, 0.0));
        // deterministic phase: g(0) real and nonnegative, else g'(0)
        let v0 = unit.eval_g(Edge::Link, 0.0);
        let probe = if v0.norm() > 1e-10 {
            v0
        } else {
            unit.eval_g_prime(Edge::Link, 0.0)
        };
        if probe.norm() == 0.0 {
            return unit;
        }
        unit.scaled(probe.conj() / probe.norm())
    }
}

/// Build the symmetric eigenfunction basis for band `m` at quasimomentum `l`.
pub fn bloch_eigenfunction(m: i64, l: f64) -> Result<EigenBasis> {
    if !(-0.5..=0.5).contains(&l) {
        return Err(Error::invalid(format!("quasimomentum l={l} outside (-1/2, 1/2]")));
    }
    if l == 0.0 {
        return Ok(degenerate_basis(m));
    }
    let bp = band_closed_form(m, l);
    let s = bp.sqrt_lambda();
    let mono = monodromy_matrix(bp.lambda);
    let mu = Complex64::from_polar(1.0, 2.0 * PI * l);

    // null vector of (M - mu I); rows give two candidate representations
    let m11 = Complex64::new(mono[(0, 0)], 0.0);
    let m12 = Complex64::new(mono[(0, 1)], 0.0);
    let m21 = Complex64::new(mono[(1, 0)], 0.0);
    let m22 = Complex64::new(mono[(1, 1)], 0.0);
    let cand1 = (m12, mu - m11);
    let cand2 = (mu - m22, m21);
    let (g0, d0) = if cand1.0.norm() + cand1.1.norm() >= cand2.0.norm() + cand2.1.norm() {
        cand1
    } else {
        cand2
    };
    if g0.norm() + d0.norm() < 1e-14 {
        return Err(Error::invalid(format!(
            "degenerate monodromy eigenspace at m={m}, l={l}"
        )));
    }

    // link coefficients from the initial state
    let link = (g0, d0 / s);
    // transfer across the link, halve the flux entering the circle pair
    let t = super::edge_transfer(s);
    let g_pi = g0 * t[(0, 0)] + d0 * t[(0, 1)];
    let d_pi = (g0 * t[(1, 0)] + d0 * t[(1, 1)]) * 0.5;
    let (cs, sn) = ((PI * s).cos(), (PI * s).sin());
    let circle = (g_pi * cs - d_pi / s * sn, g_pi * sn + d_pi / s * cs);

    let f = BlochEigenfunction {
        m,
        l,
        lambda: bp.lambda,
        s,
        link,
        circle,
    }
    .normalized();
    Ok(EigenBasis::Simple(f))
}

fn degenerate_basis(m: i64) -> EigenBasis {
    let r = m.unsigned_abs() as i64;
    if r == 0 {
        // constant eigenfunction at lambda = 0
        let c = Complex64::new(1.0 / (3.0 * PI).sqrt(), 0.0);
        return EigenBasis::Simple(BlochEigenfunction {
            m: 0,
            l: 0.0,
            lambda: 0.0,
            s: 0.0,
            link: (c, Complex64::new(0.0, 0.0)),
            circle: (c, Complex64::new(0.0, 0.0)),
        });
    }
    let s = r as f64;
    let zero = Complex64::new(0.0, 0.0);
    // cos(m x) on every edge, norm^2 = 3 pi / 2
    let c_cos = Complex64::new((2.0 / (3.0 * PI)).sqrt(), 0.0);
    let cos_mode = BlochEigenfunction {
        m: r,
        l: 0.0,
        lambda: s * s,
        s,
        link: (c_cos, zero),
        circle: (c_cos, zero),
    };
    // 2 sin(m x) on the link, sin(m x) on the circles, norm^2 = 3 pi
    let c_sin = Complex64::new(1.0 / (3.0 * PI).sqrt(), 0.0);
    let sin_mode = BlochEigenfunction {
        m: -r,
        l: 0.0,
        lambda: s * s,
        s,
        link: (zero, c_sin * 2.0),
        circle: (zero, c_sin),
    };
    EigenBasis::Degenerate(cos_mode, sin_mode)
}

/// Deterministic single representative used by consumers that need one
/// eigenfunction per band index: at touchings, `m >= 0` selects the cosine
/// mode and `m < 0` the sine mode.
pub fn select_eigenfunction(m: i64, l: f64) -> Result<BlochEigenfunction> {
    match bloch_eigenfunction(m, l)? {
        EigenBasis::Simple(f) => Ok(f),
        EigenBasis::Degenerate(cos_mode, sin_mode) => {
            Ok(if m >= 0 { cos_mode } else { sin_mode })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SUP_BOUND: f64 = 6.770275; // 12 / sqrt(pi) rounded up

    #[test]
    fn eigenfunctions_are_normalized_and_satisfy_conditions() {
        for m in -4i64..=4 {
            for &l in &[-0.5, -0.37, -0.11, 0.02, 0.25, 0.5] {
                let basis = bloch_eigenfunction(m, l).unwrap();
                for f in basis.members() {
                    assert!((f.norm_sq() - 1.0).abs() < 1e-12, "m={m}, l={l}");
                    assert!(
                        f.condition_residual() < 1e-10,
                        "m={m}, l={l}: residual {}",
                        f.condition_residual()
                    );
                    assert!(f.sup_bound() <= SUP_BOUND + 1e-8);
                }
            }
        }
    }

    #[test]
    fn degenerate_basis_matches_closed_forms() {
        let basis = bloch_eigenfunction(3, 0.0).unwrap();
        let EigenBasis::Degenerate(cos_mode, sin_mode) = basis else {
            panic!("expected a two-dimensional basis at l = 0");
        };
        let c = (2.0 / (3.0 * PI)).sqrt();
        assert!((cos_mode.eval_g(Edge::Link, 0.4) .re - c * (3.0f64 * 0.4).cos()).abs() < 1e-13);
        assert!((cos_mode.norm_sq() - 1.0).abs() < 1e-13);
        assert!((sin_mode.norm_sq() - 1.0).abs() < 1e-13);
        assert!(sin_mode.inner(&cos_mode).norm() < 1e-13);
        // m = 0 constant: (3 pi)^{-1/2}
        let EigenBasis::Simple(konst) = bloch_eigenfunction(0, 0.0).unwrap() else {
            panic!("m = 0 at l = 0 must be simple");
        };
        assert!((konst.eval_g(Edge::Link, 1.0).re - 1.0 / (3.0 * PI).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn orthonormality_within_each_fiber() {
        for &l in &[-0.41, 0.08, 0.5] {
            let fs: Vec<_> = (-5i64..=5)
                .map(|m| select_eigenfunction(m, l).unwrap())
                .collect();
            for (i, a) in fs.iter().enumerate() {
                for (j, b) in fs.iter().enumerate() {
                    let g = a.inner(b);
                    let target = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (g - Complex64::new(target, 0.0)).norm() < 1e-10,
                        "l={l}, bands {} and {}: {g}",
                        a.m,
                        b.m
                    );
                }
            }
        }
    }

    #[test]
    fn quasimomentum_reflection_conjugates() {
        let f = select_eigenfunction(2, 0.3).unwrap();
        let g = select_eigenfunction(2, -0.3).unwrap();
        assert!((f.lambda - g.lambda).abs() < 1e-13);
        // both satisfy their own conditions; spot check values relate by conjugation upate phase
        let v_pos = f.eval_f(Edge::Link, 1.1);
        let v_neg = g.eval_f(Edge::Link, 1.1);
        assert!((v_pos.norm() - v_neg.norm()).abs() < 1e-10);
    }
}
