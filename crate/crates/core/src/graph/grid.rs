//! Discretization of the periodic necklace graph.
//!
//! The graph is a chain of cells, each consisting of a straight link of
//! length pi followed by a pair of parallel edges (the upper and lower
//! semicircle) of length pi. Cell `n` occupies the global coordinate range
//! `[2 pi n, 2 pi (n+1))`: the link is identified with `[2 pi n, 2 pi n + pi]`
//! and both circle edges with `[2 pi n + pi, 2 pi (n+1)]`.
//!
//! Every edge carries `M + 1` uniformly spaced grid points with step
//! `h = pi / M`; the endpoints are vertex degrees of freedom shared between
//! all incident edges, which builds the continuity condition directly into
//! the indexing. Functions symmetric under exchange of the two semicircles
//! may be stored on a reduced grid that keeps a single circle copy and
//! doubles its quadrature weight.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// The function vanishes at the two outermost vertices; their degrees of
    /// freedom are removed.
    DirichletTruncation,
    /// Cell `N`'s circle pair closes onto cell `-N`'s link.
    PeriodicCells,
}

/// Which edge of a cell a point lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Edge {
    Link,
    CirclePlus,
    CircleMinus,
}

impl Edge {
    pub fn label(self) -> &'static str {
        match self {
            Edge::Link => "0",
            Edge::CirclePlus => "+",
            Edge::CircleMinus => "-",
        }
    }

    pub fn from_label(s: &str) -> Option<Edge> {
        match s {
            "0" => Some(Edge::Link),
            "+" => Some(Edge::CirclePlus),
            "-" => Some(Edge::CircleMinus),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NecklaceGrid {
    half_cells: u32,
    points_per_edge: u32,
    boundary: Boundary,
    symmetric: bool,
}

/// One grid segment (interval of length `h` on some edge) with its endpoint
/// degrees of freedom. `None` marks a Dirichlet-constrained endpoint whose
/// value is identically zero. `factor` is 2 when the segment represents both
/// circle copies of a symmetric grid.
#[derive(Debug, Clone, Copy)]
pub struct Segment {
    pub a: Option<usize>,
    pub b: Option<usize>,
    pub factor: f64,
    pub x_left: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofLocation {
    VertexLeft,
    LinkInterior(u32),
    VertexMid,
    PlusInterior(u32),
    MinusInterior(u32),
}

#[derive(Debug, Clone, Copy)]
pub struct DofInfo {
    pub index: usize,
    pub cell: i64,
    pub location: DofLocation,
}

impl DofInfo {
    pub fn x(&self, grid: &NecklaceGrid) -> f64 {
        let base = 2.0 * PI * self.cell as f64;
        let h = grid.step();
        match self.location {
            DofLocation::VertexLeft => base,
            DofLocation::LinkInterior(j) => base + j as f64 * h,
            DofLocation::VertexMid => base + PI,
            DofLocation::PlusInterior(j) | DofLocation::MinusInterior(j) => {
                base + PI + j as f64 * h
            }
        }
    }

    /// Canonical (edge, local index) pair used by the CSV serialization.
    /// Vertices are reported on the link edge.
    pub fn edge_local(&self, grid: &NecklaceGrid) -> (Edge, u32) {
        match self.location {
            DofLocation::VertexLeft => (Edge::Link, 0),
            DofLocation::LinkInterior(j) => (Edge::Link, j),
            DofLocation::VertexMid => (Edge::Link, grid.points_per_edge),
            DofLocation::PlusInterior(j) => (Edge::CirclePlus, j),
            DofLocation::MinusInterior(j) => (Edge::CircleMinus, j),
        }
    }
}

impl NecklaceGrid {
    pub fn new(
        half_cells: u32,
        points_per_edge: u32,
        boundary: Boundary,
        symmetric: bool,
    ) -> Result<Self> {
        if points_per_edge < 4 {
            return Err(Error::invalid(format!(
                "points_per_edge must be at least 4, got {points_per_edge}"
            )));
        }
        let grid = NecklaceGrid {
            half_cells,
            points_per_edge,
            boundary,
            symmetric,
        };
        grid.check_counts()?;
        Ok(grid)
    }

    pub fn half_cells(&self) -> u32 {
        self.half_cells
    }

    pub fn points_per_edge(&self) -> u32 {
        self.points_per_edge
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn num_cells(&self) -> usize {
        2 * self.half_cells as usize + 1
    }

    pub fn step(&self) -> f64 {
        PI / self.points_per_edge as f64
    }

    pub fn cells(&self) -> impl Iterator<Item = i64> {
        let n = self.half_cells as i64;
        -n..=n
    }

    fn is_periodic(&self) -> bool {
        self.boundary == Boundary::PeriodicCells
    }

    fn cell_has_left_vertex(&self, n: i64) -> bool {
        self.is_periodic() || n > -(self.half_cells as i64)
    }

    fn stride(&self) -> usize {
        let m = self.points_per_edge as usize;
        if self.symmetric {
            2 * m
        } else {
            3 * m - 1
        }
    }

    fn cell_base(&self, n: i64) -> usize {
        let ci = (n + self.half_cells as i64) as usize;
        debug_assert!(ci < self.num_cells());
        if self.is_periodic() {
            ci * self.stride()
        } else if ci == 0 {
            0
        } else {
            (self.stride() - 1) + (ci - 1) * self.stride()
        }
    }

    pub fn n_dofs(&self) -> usize {
        let c = self.num_cells();
        let full = c * self.stride();
        if self.is_periodic() {
            full
        } else {
            full - 1
        }
    }

    fn check_counts(&self) -> Result<()> {
        let c = self.num_cells();
        let m = self.points_per_edge as usize;
        let interiors = if self.symmetric {
            c * 2 * (m - 1)
        } else {
            c * 3 * (m - 1)
        };
        let vertices = if self.is_periodic() { 2 * c } else { 2 * c - 1 };
        if interiors + vertices != self.n_dofs() {
            return Err(Error::invalid(format!(
                "degree-of-freedom bookkeeping is inconsistent: {} interiors + {} vertices != {}",
                interiors,
                vertices,
                self.n_dofs()
            )));
        }
        Ok(())
    }

    /// Vertex at `x = 2 pi n`, valid for `n` in `-N ..= N+1`. The value `N+1`
    /// addresses the rightmost vertex, which wraps around on periodic grids.
    pub fn idx_vertex_left(&self, n: i64) -> Option<usize> {
        let half = self.half_cells as i64;
        if n == half + 1 {
            return if self.is_periodic() {
                self.idx_vertex_left(-half)
            } else {
                None
            };
        }
        debug_assert!((-half..=half).contains(&n));
        if !self.cell_has_left_vertex(n) {
            return None;
        }
        Some(self.cell_base(n))
    }

    /// Vertex at `x = 2 pi n + pi`.
    pub fn idx_vertex_mid(&self, n: i64) -> usize {
        let has_vl = self.cell_has_left_vertex(n) as usize;
        self.cell_base(n) + has_vl + (self.points_per_edge as usize - 1)
    }

    /// Interior link point `j` in `1..=M-1`.
    pub fn idx_link(&self, n: i64, j: u32) -> usize {
        debug_assert!(j >= 1 && j < self.points_per_edge);
        let has_vl = self.cell_has_left_vertex(n) as usize;
        self.cell_base(n) + has_vl + (j as usize - 1)
    }

    /// Interior circle point `j` in `1..=M-1`. On symmetric grids both circle
    /// edges share one set of degrees of freedom.
    pub fn idx_circle(&self, n: i64, edge: Edge, j: u32) -> usize {
        debug_assert!(j >= 1 && j < self.points_per_edge);
        debug_assert!(edge != Edge::Link);
        let m = self.points_per_edge as usize;
        let has_vl = self.cell_has_left_vertex(n) as usize;
        let mut idx = self.cell_base(n) + has_vl + m + (j as usize - 1);
        if edge == Edge::CircleMinus && !self.symmetric {
            idx += m - 1;
        }
        idx
    }

    /// Grid point `j` in `0..=M` along an edge of cell `n`; `None` marks a
    /// Dirichlet-constrained vertex.
    pub fn idx_point(&self, n: i64, edge: Edge, j: u32) -> Option<usize> {
        let m = self.points_per_edge;
        debug_assert!(j <= m);
        match edge {
            Edge::Link => {
                if j == 0 {
                    self.idx_vertex_left(n)
                } else if j == m {
                    Some(self.idx_vertex_mid(n))
                } else {
                    Some(self.idx_link(n, j))
                }
            }
            Edge::CirclePlus | Edge::CircleMinus => {
                if j == 0 {
                    Some(self.idx_vertex_mid(n))
                } else if j == m {
                    self.idx_vertex_left(n + 1)
                } else {
                    Some(self.idx_circle(n, edge, j))
                }
            }
        }
    }

    /// All length-`h` segments of the grid with their endpoint indices.
    pub fn segments(&self) -> Vec<Segment> {
        let m = self.points_per_edge;
        let h = self.step();
        let mut out = Vec::with_capacity(self.num_cells() * 3 * m as usize);
        for n in self.cells() {
            let base = 2.0 * PI * n as f64;
            for t in 0..m {
                out.push(Segment {
                    a: self.idx_point(n, Edge::Link, t),
                    b: self.idx_point(n, Edge::Link, t + 1),
                    factor: 1.0,
                    x_left: base + t as f64 * h,
                });
            }
            let circle_factor = if self.symmetric { 2.0 } else { 1.0 };
            for t in 0..m {
                out.push(Segment {
                    a: self.idx_point(n, Edge::CirclePlus, t),
                    b: self.idx_point(n, Edge::CirclePlus, t + 1),
                    factor: circle_factor,
                    x_left: base + PI + t as f64 * h,
                });
            }
            if !self.symmetric {
                for t in 0..m {
                    out.push(Segment {
                        a: self.idx_point(n, Edge::CircleMinus, t),
                        b: self.idx_point(n, Edge::CircleMinus, t + 1),
                        factor: 1.0,
                        x_left: base + PI + t as f64 * h,
                    });
                }
            }
        }
        out
    }

    /// Trapezoidal quadrature weights (the lumped mass matrix diagonal).
    /// Every incident edge segment contributes `h/2` to its endpoints.
    pub fn quad_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.n_dofs()];
        let h = self.step();
        for seg in self.segments() {
            if let Some(a) = seg.a {
                w[a] += 0.5 * h * seg.factor;
            }
            if let Some(b) = seg.b {
                w[b] += 0.5 * h * seg.factor;
            }
        }
        w
    }

    /// Degrees of freedom in storage order with location metadata.
    pub fn dofs(&self) -> Vec<DofInfo> {
        let m = self.points_per_edge;
        let mut out = Vec::with_capacity(self.n_dofs());
        for n in self.cells() {
            if self.cell_has_left_vertex(n) {
                out.push(DofInfo {
                    index: self.idx_vertex_left(n).unwrap(),
                    cell: n,
                    location: DofLocation::VertexLeft,
                });
            }
            for j in 1..m {
                out.push(DofInfo {
                    index: self.idx_link(n, j),
                    cell: n,
                    location: DofLocation::LinkInterior(j),
                });
            }
            out.push(DofInfo {
                index: self.idx_vertex_mid(n),
                cell: n,
                location: DofLocation::VertexMid,
            });
            for j in 1..m {
                out.push(DofInfo {
                    index: self.idx_circle(n, Edge::CirclePlus, j),
                    cell: n,
                    location: DofLocation::PlusInterior(j),
                });
            }
            if !self.symmetric {
                for j in 1..m {
                    out.push(DofInfo {
                        index: self.idx_circle(n, Edge::CircleMinus, j),
                        cell: n,
                        location: DofLocation::MinusInterior(j),
                    });
                }
            }
        }
        debug_assert_eq!(out.len(), self.n_dofs());
        debug_assert!(out.iter().enumerate().all(|(i, d)| d.index == i));
        out
    }

    /// The cell a degree of freedom is attributed to for localization
    /// diagnostics (left vertices count toward their right cell).
    pub fn cell_of_dof(&self) -> Vec<i64> {
        let mut out = vec![0i64; self.n_dofs()];
        for info in self.dofs() {
            out[info.index] = info.cell;
        }
        out
    }

    /// The one-cell periodic grid with the same edge resolution and storage;
    /// used as the target of the Bloch transform.
    pub fn unit_cell(&self) -> NecklaceGrid {
        NecklaceGrid {
            half_cells: 0,
            points_per_edge: self.points_per_edge,
            boundary: Boundary::PeriodicCells,
            symmetric: self.symmetric,
        }
    }

    /// Same layout with periodic boundary; Dirichlet data embeds by zero.
    pub fn periodic_twin(&self) -> NecklaceGrid {
        NecklaceGrid {
            boundary: Boundary::PeriodicCells,
            ..*self
        }
    }
}
