//! Closed-form integrals of trigonometric products.
//!
//! Edgewise eigenfunctions are of the form `a cos(s x) + b sin(s x)`, so all
//! inner products reduce to primitives of `cos(q x)` and `sin(q x)` with
//! `q = s1 ± s2`. Both primitives are evaluated in a product form that stays
//! accurate as `q → 0` (band touchings, zero modes).

use num_complex::Complex64;

/// sin(z)/z with a series fallback near zero.
pub fn sinc(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        let z2 = z * z;
        1.0 - z2 / 6.0 * (1.0 - z2 / 20.0)
    } else {
        z.sin() / z
    }
}

/// ∫_{x0}^{x1} cos(q x) dx.
pub fn int_cos(q: f64, x0: f64, x1: f64) -> f64 {
    let half = 0.5 * (x1 - x0);
    let mid = 0.5 * (x1 + x0);
    (x1 - x0) * (q * mid).cos() * sinc(q * half)
}

/// ∫_{x0}^{x1} sin(q x) dx.
pub fn int_sin(q: f64, x0: f64, x1: f64) -> f64 {
    let half = 0.5 * (x1 - x0);
    let mid = 0.5 * (x1 + x0);
    (x1 - x0) * (q * mid).sin() * sinc(q * half)
}

/// ∫_{x0}^{x1} (a1 cos(s1 x) + b1 sin(s1 x)) · conj(a2 cos(s2 x) + b2 sin(s2 x)) dx.
///
/// The basis functions are real; conjugation acts on the coefficients only.
#[allow(clippy::too_many_arguments)]
pub fn int_trig_product(
    s1: f64,
    a1: Complex64,
    b1: Complex64,
    s2: f64,
    a2: Complex64,
    b2: Complex64,
    x0: f64,
    x1: f64,
) -> Complex64 {
    let (p, m) = (s1 + s2, s1 - s2);
    let cp = int_cos(p, x0, x1);
    let cm = int_cos(m, x0, x1);
    let sp = int_sin(p, x0, x1);
    let sm = int_sin(m, x0, x1);
    let cc = 0.5 * (cm + cp); // cos(s1 x) cos(s2 x)
    let ss = 0.5 * (cm - cp); // sin(s1 x) sin(s2 x)
    let sc = 0.5 * (sp + sm); // sin(s1 x) cos(s2 x)
    let cs = 0.5 * (sp - sm); // cos(s1 x) sin(s2 x)
    a1 * a2.conj() * cc + b1 * b2.conj() * ss + b1 * a2.conj() * sc + a1 * b2.conj() * cs
}
