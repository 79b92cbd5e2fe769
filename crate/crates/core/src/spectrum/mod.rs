//! Floquet-Bloch band structure of the Kirchhoff Laplacian on the necklace
//! graph.
//!
//! In the symmetric (upper = lower semicircle) subspace the transfer across
//! one periodicity cell reduces to 2x2 matrices: an interval transfer over
//! each length-pi edge, with the parallel circle pair entering as a single
//! edge whose flux doubles at one vertex and halves at the other. The trace
//! of the resulting monodromy matrix is the Hill discriminant
//! `(9 cos(2 pi sqrt(lambda)) - 1) / 4`, and the quasiperiodic eigenvalues
//! have the closed form `lambda_m(l) = (m + a(l))^2` with
//! `a(l) = arccos((8 cos(2 pi l) + 1) / 9) / (2 pi)`.

pub mod eigenfunction;

pub use eigenfunction::{bloch_eigenfunction, select_eigenfunction, BlochEigenfunction, EigenBasis};

use crate::error::{Error, Result};
use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// One point of a spectral band: band index, quasimomentum, branch parameter
/// and eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPoint {
    pub m: i64,
    pub l: f64,
    pub a_of_l: f64,
    pub lambda: f64,
}

impl BandPoint {
    /// sqrt(lambda) = |m + a(l)|.
    pub fn sqrt_lambda(&self) -> f64 {
        self.lambda.max(0.0).sqrt()
    }
}

/// Branch parameter `a(l) = arccos((8 cos(2 pi l) + 1) / 9) / (2 pi)`,
/// increasing from 0 at l = 0 to just under 1/2 at l = 1/2.
pub fn a_of_l(l: f64) -> f64 {
    let arg = ((8.0 * (2.0 * PI * l).cos() + 1.0) / 9.0).clamp(-1.0, 1.0);
    arg.acos() / (2.0 * PI)
}

/// Largest value of the branch parameter, `a(1/2) = arccos(-7/9)/(2 pi)`.
pub fn a_max() -> f64 {
    (-7.0f64 / 9.0).acos() / (2.0 * PI)
}

/// The gap parameter `delta0 = 1 - 2 a(1/2) > 0`.
pub fn delta0() -> f64 {
    1.0 - 2.0 * a_max()
}

/// Closed-form band function `lambda_m(l) = (m + a(l))^2`.
pub fn band_closed_form(m: i64, l: f64) -> BandPoint {
    let a = a_of_l(l);
    let s = m as f64 + a;
    BandPoint {
        m,
        l,
        a_of_l: a,
        lambda: s * s,
    }
}

/// Independent evaluation of the band at the Brillouin edge:
/// `lambda_m(1/2) = m^2 + arccos(-7/9)/pi * m + arccos(-7/9)^2/(4 pi^2)`.
pub fn lambda_at_half(m: i64) -> f64 {
    let theta = (-7.0f64 / 9.0).acos();
    let mf = m as f64;
    mf * mf + theta / PI * mf + theta * theta / (4.0 * PI * PI)
}

/// Hill discriminant `tr M(lambda) = (9 cos(2 pi sqrt(lambda)) - 1) / 4`.
pub fn hill_discriminant(lambda: f64) -> Result<f64> {
    if lambda < 0.0 {
        return Err(Error::invalid(format!(
            "hill discriminant needs lambda >= 0, got {lambda}"
        )));
    }
    Ok((9.0 * (2.0 * PI * lambda.sqrt()).cos() - 1.0) / 4.0)
}

/// Interval transfer matrix over one edge of length pi for `-phi'' = lambda phi`:
/// maps (value, derivative) at the left end to the right end. The
/// `sin(pi s)/s` entry is continued through `s -> 0`.
pub(crate) fn edge_transfer(s: f64) -> Matrix2<f64> {
    let c = (PI * s).cos();
    let sl = PI * crate::trig::sinc(PI * s); // sin(pi s) / s
    Matrix2::new(c, sl, -s * (PI * s).sin(), c)
}

/// Monodromy matrix across one cell in the symmetric subspace:
/// `M = D(2) T(lambda) D(1/2) T(lambda)` with `D(c) = diag(1, c)` encoding
/// the flux doubling/halving at the two vertices of the circle pair.
pub fn monodromy_matrix(lambda: f64) -> Matrix2<f64> {
    let s = lambda.max(0.0).sqrt();
    let t = edge_transfer(s);
    let d_half = Matrix2::new(1.0, 0.0, 0.0, 0.5);
    let d_two = Matrix2::new(1.0, 0.0, 0.0, 2.0);
    d_two * t * d_half * t
}

/// sqrt(lambda) range of band `m`: `[|m|, |m| + a(1/2)]` for `m >= 0`,
/// `[|m| - a(1/2), |m|]` for `m < 0`.
pub fn sqrt_band_interval(m: i64) -> (f64, f64) {
    let r = m.unsigned_abs() as f64;
    if m >= 0 {
        (r, r + a_max())
    } else {
        (r - a_max(), r)
    }
}

/// Whether `lambda` lies in the essential spectrum (closed-form band test).
pub fn in_band(lambda: f64) -> bool {
    if lambda < 0.0 {
        return false;
    }
    let frac = lambda.sqrt().fract();
    let am = a_max();
    frac <= am || frac >= 1.0 - am
}

/// Band point recovered from the monodromy matrix: solves
/// `tr M(lambda) = 2 cos(2 pi l)` by bisection in `sqrt(lambda)` on the
/// branch bracket of band `m`, then polishes with Newton in `lambda`.
pub fn band_from_monodromy(m: i64, l: f64) -> Result<BandPoint> {
    if !(-0.5..=0.5).contains(&l) {
        return Err(Error::invalid(format!("quasimomentum l={l} outside (-1/2, 1/2]")));
    }
    let target = 2.0 * (2.0 * PI * l).cos();
    let phi = |s: f64| monodromy_matrix(s * s).trace() - target;
    let (mut lo, mut hi) = if m >= 0 {
        (m as f64, m as f64 + 0.5)
    } else {
        ((-m) as f64 - 0.5, (-m) as f64)
    };
    // For m < 0 the discriminant increases over the bracket; normalize so the
    // sign pattern is (>= 0 at lo, <= 0 at hi).
    let increasing = m < 0;
    let eval = |s: f64| if increasing { -phi(s) } else { phi(s) };
    let (flo, fhi) = (eval(lo), eval(hi));
    if flo.abs() < 1e-13 {
        let s = lo;
        return Ok(finish_band(m, l, s * s));
    }
    if fhi.abs() < 1e-13 {
        let s = hi;
        return Ok(finish_band(m, l, s * s));
    }
    if flo < 0.0 || fhi > 0.0 {
        return Err(Error::BracketFailure {
            m,
            l,
            detail: format!("discriminant values {flo:.3e}, {fhi:.3e} do not bracket a root"),
        });
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if eval(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut lambda = (0.5 * (lo + hi)).powi(2);
    // Newton polish on lambda; d tr/d lambda = -(9 pi / (4 sqrt(lambda))) sin(2 pi sqrt(lambda))
    for _ in 0..8 {
        let s = lambda.max(1e-300).sqrt();
        let f = monodromy_matrix(lambda).trace() - target;
        let df = -(9.0 * PI / (4.0 * s)) * (2.0 * PI * s).sin();
        if df.abs() < 1e-12 {
            break;
        }
        let step = f / df;
        lambda -= step;
        if step.abs() <= 1e-12 * lambda.abs().max(1.0) {
            break;
        }
    }
    Ok(finish_band(m, l, lambda))
}

fn finish_band(m: i64, l: f64, lambda: f64) -> BandPoint {
    let s = lambda.max(0.0).sqrt();
    let a = if m >= 0 { s - m as f64 } else { (-m) as f64 - s };
    BandPoint {
        m,
        l,
        a_of_l: a,
        lambda,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discriminant_anchors() {
        assert!((hill_discriminant(0.0).unwrap() - 2.0).abs() < 1e-15);
        for m in 1..=4 {
            let lam = (m * m) as f64;
            assert!((hill_discriminant(lam).unwrap() - 2.0).abs() < 1e-12);
        }
        assert!((hill_discriminant(0.25).unwrap() + 2.5).abs() < 1e-14);
        assert!(hill_discriminant(-1.0).is_err());
    }

    #[test]
    fn monodromy_trace_matches_discriminant() {
        let mut worst = 0.0f64;
        for i in 0..1000 {
            let lambda = 25.0 * i as f64 / 999.0;
            let tr = monodromy_matrix(lambda).trace();
            worst = worst.max((tr - hill_discriminant(lambda).unwrap()).abs());
        }
        assert!(worst <= 1e-10, "worst trace defect {worst:.3e}");
    }

    #[test]
    fn monodromy_determinant_is_one() {
        for i in 0..200 {
            let lambda = 30.0 * i as f64 / 199.0;
            let det = monodromy_matrix(lambda).determinant();
            assert!((det - 1.0).abs() < 1e-11, "det {det} at lambda {lambda}");
        }
    }

    #[test]
    fn bands_touch_at_integer_squares() {
        for m in -3i64..=3 {
            let bp = band_closed_form(m, 0.0);
            assert!((bp.lambda - (m * m) as f64).abs() < 1e-13);
        }
    }

    #[test]
    fn closed_form_agrees_with_edge_formula() {
        for m in -6i64..=6 {
            let a = band_closed_form(m, 0.5).lambda;
            let b = lambda_at_half(m);
            assert!((a - b).abs() < 1e-12, "m={m}: {a} vs {b}");
        }
        // frozen anchor for the lowest band edge
        assert!((band_closed_form(0, 0.5).lambda - 0.1535).abs() < 2e-4);
    }

    #[test]
    fn monodromy_band_matches_closed_form() {
        for m in -3i64..=3 {
            for i in 0..=128 {
                let l = -0.5 + i as f64 / 128.0;
                let root = band_from_monodromy(m, l).unwrap();
                let cf = band_closed_form(m, l);
                assert!(
                    (root.lambda - cf.lambda).abs() <= 1e-8,
                    "m={m}, l={l}: {} vs {}",
                    root.lambda,
                    cf.lambda
                );
            }
        }
    }

    #[test]
    fn monodromy_band_specific_points() {
        assert!((band_from_monodromy(2, 0.0).unwrap().lambda - 4.0).abs() < 1e-12);
        let oracle = band_closed_form(2, 0.25).lambda;
        assert!((band_from_monodromy(2, 0.25).unwrap().lambda - oracle).abs() < 1e-10);
    }

    #[test]
    fn trace_window_iff_in_band() {
        for i in 0..2000 {
            let lambda = 1e-3 + 24.9 * i as f64 / 1999.0;
            let frac = lambda.sqrt().fract();
            // skip points within 1e-6 of a band edge to avoid boundary fuzz
            if (frac - a_max()).abs() < 1e-6 || (frac - (1.0 - a_max())).abs() < 1e-6 {
                continue;
            }
            let tr = hill_discriminant(lambda).unwrap();
            assert_eq!(
                tr.abs() <= 2.0,
                in_band(lambda),
                "lambda {lambda}, tr {tr}"
            );
        }
    }

    #[test]
    fn bands_are_ordered_and_gapped() {
        // sqrt(lambda) intervals tile [0, a] U [1-a, 1] U [1, 1+a] U ...
        let am = a_max();
        assert!(am < 0.5 && am > 0.0);
        for m in 0..6i64 {
            let (lo_p, hi_p) = sqrt_band_interval(m);
            let (lo_n, hi_n) = sqrt_band_interval(-(m + 1));
            assert!(hi_p < lo_n, "gap between band {m} and band {}", -(m + 1));
            assert!((hi_n - (m + 1) as f64).abs() < 1e-15);
            assert!(lo_p >= 0.0 && hi_p > lo_p);
        }
    }
}
