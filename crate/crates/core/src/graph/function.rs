//! Functions sampled on the necklace grid.

use super::grid::{Boundary, DofLocation, Edge, NecklaceGrid};
use crate::error::{Error, Result};
use num_complex::Complex64;

/// Scalar types a grid function can carry.
pub trait GraphScalar:
    Copy
    + PartialEq
    + std::fmt::Debug
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Neg<Output = Self>
    + std::ops::Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn to_complex(self) -> Complex64;
    fn abs(self) -> f64;
}

impl GraphScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
}

impl GraphScalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn to_complex(self) -> Complex64 {
        self
    }
    fn abs(self) -> f64 {
        self.norm()
    }
}

/// A scalar function on the necklace graph, one value per degree of freedom.
/// Vertex values are single-valued by construction; on symmetric grids the
/// two circle copies share storage.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphFunction<T: GraphScalar> {
    grid: NecklaceGrid,
    values: Vec<T>,
}

pub type RealGraphFunction = GraphFunction<f64>;
pub type ComplexGraphFunction = GraphFunction<Complex64>;

impl<T: GraphScalar> GraphFunction<T> {
    pub fn zeros(grid: NecklaceGrid) -> Self {
        GraphFunction {
            grid,
            values: vec![T::zero(); grid.n_dofs()],
        }
    }

    pub fn from_values(grid: NecklaceGrid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.n_dofs() {
            return Err(Error::invalid(format!(
                "value vector length {} does not match grid dof count {}",
                values.len(),
                grid.n_dofs()
            )));
        }
        Ok(GraphFunction { grid, values })
    }

    /// Sample a function of (edge, global coordinate). Vertex values are
    /// sampled once with `Edge::Link`; the sampled function must be
    /// single-valued at vertices for the result to be meaningful.
    pub fn from_fn(grid: NecklaceGrid, mut f: impl FnMut(Edge, f64) -> T) -> Self {
        let mut values = vec![T::zero(); grid.n_dofs()];
        for info in grid.dofs() {
            let x = info.x(&grid);
            let edge = match info.location {
                DofLocation::PlusInterior(_) => Edge::CirclePlus,
                DofLocation::MinusInterior(_) => Edge::CircleMinus,
                _ => Edge::Link,
            };
            values[info.index] = f(edge, x);
        }
        GraphFunction { grid, values }
    }

    pub fn grid(&self) -> &NecklaceGrid {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Value at edge point `j` in `0..=M`; Dirichlet-constrained endpoints
    /// read as zero.
    pub fn point_value(&self, cell: i64, edge: Edge, j: u32) -> T {
        match self.grid.idx_point(cell, edge, j) {
            Some(i) => self.values[i],
            None => T::zero(),
        }
    }

    pub fn set_point(&mut self, cell: i64, edge: Edge, j: u32, v: T) {
        if let Some(i) = self.grid.idx_point(cell, edge, j) {
            self.values[i] = v;
        }
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.values {
            *v = *v * c;
        }
    }

    pub fn axpy(&mut self, c: f64, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a = *a + *b * c;
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Whether the stored values satisfy the circle exchange symmetry. On
    /// reduced grids this holds by construction.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.grid.symmetric() {
            return true;
        }
        let m = self.grid.points_per_edge();
        for n in self.grid.cells() {
            for j in 1..m {
                let p = self.point_value(n, Edge::CirclePlus, j);
                let q = self.point_value(n, Edge::CircleMinus, j);
                if (p - q).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Expand a symmetric-storage function to the general layout.
    pub fn expand_to_general(&self) -> GraphFunction<T> {
        if !self.grid.symmetric() {
            return self.clone();
        }
        let wide = NecklaceGrid::new(
            self.grid.half_cells(),
            self.grid.points_per_edge(),
            self.grid.boundary(),
            false,
        )
        .expect("valid grid");
        let m = self.grid.points_per_edge();
        let mut out = GraphFunction::zeros(wide);
        for n in self.grid.cells() {
            for j in 0..=m {
                let v = self.point_value(n, Edge::Link, j);
                out.set_point(n, Edge::Link, j, v);
            }
            for j in 1..m {
                let v = self.point_value(n, Edge::CirclePlus, j);
                out.set_point(n, Edge::CirclePlus, j, v);
                out.set_point(n, Edge::CircleMinus, j, v);
            }
        }
        out
    }

    /// Zero-extend Dirichlet data onto the periodic twin grid (the boundary
    /// vertex values are zero, so nothing is lost).
    pub fn to_periodic(&self) -> GraphFunction<T> {
        if self.grid.boundary() == Boundary::PeriodicCells {
            return self.clone();
        }
        let twin = self.grid.periodic_twin();
        let m = self.grid.points_per_edge();
        let mut out = GraphFunction::zeros(twin);
        for n in self.grid.cells() {
            for j in 0..=m {
                out.set_point(n, Edge::Link, j, self.point_value(n, Edge::Link, j));
            }
            let edges: &[Edge] = if self.grid.symmetric() {
                &[Edge::CirclePlus]
            } else {
                &[Edge::CirclePlus, Edge::CircleMinus]
            };
            for &e in edges {
                for j in 1..m {
                    out.set_point(n, e, j, self.point_value(n, e, j));
                }
            }
        }
        out
    }

    /// Mass per cell, `sum_i w_i |u_i|^2` with vertex mass attributed to the
    /// cell owning the degree of freedom. Used for localization diagnostics.
    pub fn cell_mass(&self) -> Vec<(i64, f64)> {
        let w = self.grid.quad_weights();
        let cells = self.grid.cell_of_dof();
        let mut acc: std::collections::BTreeMap<i64, f64> = std::collections::BTreeMap::new();
        for (i, v) in self.values.iter().enumerate() {
            let a = v.abs();
            *acc.entry(cells[i]).or_insert(0.0) += w[i] * a * a;
        }
        acc.into_iter().collect()
    }
}

impl GraphFunction<f64> {
    pub fn to_complex(&self) -> ComplexGraphFunction {
        GraphFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| v.to_complex()).collect(),
        }
    }
}

/// Trapezoidal inner product over the whole graph, conjugate-linear in the
/// second argument. On symmetric grids the circle weights already count both
/// copies.
pub fn l2_inner<T: GraphScalar>(u: &GraphFunction<T>, v: &GraphFunction<T>) -> Result<Complex64> {
    if u.grid != v.grid {
        return Err(Error::GridMismatch);
    }
    let w = u.grid.quad_weights();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..w.len() {
        acc += u.values[i].to_complex() * v.values[i].to_complex().conj() * w[i];
    }
    Ok(acc)
}

pub fn l2_norm<T: GraphScalar>(u: &GraphFunction<T>) -> f64 {
    l2_inner(u, u).expect("same grid").re.max(0.0).sqrt()
}
