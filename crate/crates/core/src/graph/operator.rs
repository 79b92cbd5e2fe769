//! The Kirchhoff Laplacian on the discretized necklace graph.
//!
//! Assembly is Galerkin with piecewise linear elements and lumped
//! (trapezoidal) mass: every segment contributes `factor/h * (u_a - u_b)^2`
//! to the stiffness form. Vertex rows then combine one-sided differences of
//! the incident edges so that the operator is symmetric in the trapezoidal
//! inner product and the flux balance holds weakly; interior rows reduce to
//! the standard second difference.

use super::function::{GraphFunction, GraphScalar};
use super::grid::{Edge, NecklaceGrid};
use crate::linalg::SymTridiag;
use num_complex::Complex64;

/// Stiffness matrix entries `S[i][j]` as triplets. `S` is symmetric positive
/// semidefinite; the quadratic form is `sum_edges integral |u'|^2`.
pub fn stiffness_triplets(grid: &NecklaceGrid) -> Vec<(usize, usize, f64)> {
    let h = grid.step();
    let mut out = Vec::new();
    for seg in grid.segments() {
        let c = seg.factor / h;
        match (seg.a, seg.b) {
            (Some(a), Some(b)) => {
                out.push((a, a, c));
                out.push((b, b, c));
                out.push((a, b, -c));
                out.push((b, a, -c));
            }
            (Some(a), None) => out.push((a, a, c)),
            (None, Some(b)) => out.push((b, b, c)),
            (None, None) => {}
        }
    }
    out
}

/// Apply the stiffness matrix: `y = S u`.
pub fn apply_stiffness<T: GraphScalar>(u: &GraphFunction<T>) -> GraphFunction<T> {
    let grid = *u.grid();
    let mut y = GraphFunction::zeros(grid);
    let uv = u.values();
    let yv = y.values_mut();
    for (i, j, c) in stiffness_triplets(&grid) {
        yv[i] = yv[i] + uv[j] * c;
    }
    y
}

/// Apply the discrete Laplacian `Δ_h = -W^{-1} S` (second derivative along
/// edges, flux balance at vertices). Negative semidefinite with respect to
/// the trapezoidal inner product.
pub fn apply_laplacian<T: GraphScalar>(u: &GraphFunction<T>) -> GraphFunction<T> {
    let mut y = apply_stiffness(u);
    let w = u.grid().quad_weights();
    for (yi, wi) in y.values_mut().iter_mut().zip(&w) {
        *yi = -(*yi * (1.0 / wi));
    }
    y
}

/// Chain-ordered symmetric tridiagonal form of the stiffness matrix, valid
/// for symmetric-storage grids where the necklace reduces to a path.
pub fn stiffness_tridiag(grid: &NecklaceGrid) -> SymTridiag {
    assert!(
        grid.symmetric(),
        "tridiagonal extraction requires symmetric storage"
    );
    let n = grid.n_dofs();
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    for (i, j, c) in stiffness_triplets(grid) {
        if i == j {
            diag[i] += c;
        } else if j == i + 1 {
            off[i] += c;
        } else if i == j + 1 {
            // symmetric counterpart, accumulated once via the (j, j+1) entry
        } else {
            panic!("stiffness entry ({i},{j}) outside the tridiagonal band");
        }
    }
    SymTridiag { diag, off }
}

/// One-sided second-order derivative of `u` at a vertex, taken along the
/// global coordinate. `toward_positive_x` selects the side the edge extends
/// to; samples are (vertex, first, second interior point away from it).
fn one_sided<T: GraphScalar>(v: T, u1: T, u2: T, h: f64, toward_positive_x: bool) -> T {
    let d = (v * 3.0 - u1 * 4.0 + u2) * (1.0 / (2.0 * h));
    if toward_positive_x {
        -d
    } else {
        d
    }
}

/// Flux balance defect `|u_0' - u_+' - u_-'|` at each interior vertex, using
/// second-order one-sided stencils. Returned as (cell, vertex coordinate,
/// defect); Dirichlet boundary vertices are skipped.
pub fn kirchhoff_flux_residual<T: GraphScalar>(u: &GraphFunction<T>) -> Vec<(i64, f64, f64)> {
    let grid = *u.grid();
    let m = grid.points_per_edge();
    let h = grid.step();
    let mut out = Vec::new();
    let half = grid.half_cells() as i64;

    // sample j steps into an edge from one of its ends
    let pt = |cell: i64, edge: Edge, j: u32| u.point_value(cell, edge, j);

    for n in grid.cells() {
        // vertex at 2 pi n + pi: link comes from the left, circles leave right
        {
            let v = pt(n, Edge::Link, m);
            let d_link = one_sided(v, pt(n, Edge::Link, m - 1), pt(n, Edge::Link, m - 2), h, false);
            let d_plus = one_sided(v, pt(n, Edge::CirclePlus, 1), pt(n, Edge::CirclePlus, 2), h, true);
            let d_minus = one_sided(
                v,
                pt(n, Edge::CircleMinus, 1),
                pt(n, Edge::CircleMinus, 2),
                h,
                true,
            );
            let defect = (d_link - d_plus - d_minus).abs();
            out.push((n, 2.0 * std::f64::consts::PI * n as f64 + std::f64::consts::PI, defect));
        }
        // vertex at 2 pi (n+1): circles of cell n from the left, link of cell n+1 right
        let is_last = n == half;
        let wrap_ok = grid.boundary() == super::grid::Boundary::PeriodicCells;
        if !is_last || wrap_ok {
            let next = if is_last { -half } else { n + 1 };
            let v = pt(n, Edge::CirclePlus, m);
            let d_plus = one_sided(v, pt(n, Edge::CirclePlus, m - 1), pt(n, Edge::CirclePlus, m - 2), h, false);
            let d_minus = one_sided(
                v,
                pt(n, Edge::CircleMinus, m - 1),
                pt(n, Edge::CircleMinus, m - 2),
                h,
                false,
            );
            let d_link = one_sided(v, pt(next, Edge::Link, 1), pt(next, Edge::Link, 2), h, true);
            let defect = (d_link - d_plus - d_minus).abs();
            out.push((n, 2.0 * std::f64::consts::PI * (n + 1) as f64, defect));
        }
    }
    out
}

/// Largest flux defect over all interior vertices.
pub fn max_flux_residual<T: GraphScalar>(u: &GraphFunction<T>) -> f64 {
    kirchhoff_flux_residual(u)
        .into_iter()
        .map(|(_, _, d)| d)
        .fold(0.0, f64::max)
}

/// Convenience: complex sample of a symmetric plane-wave-like profile.
pub fn sample_complex(
    grid: NecklaceGrid,
    f: impl FnMut(Edge, f64) -> Complex64,
) -> GraphFunction<Complex64> {
    GraphFunction::from_fn(grid, f)
}
