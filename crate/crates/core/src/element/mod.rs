//! Local virtual element kernel: configuration, cell geometry, DOF layout,
//! edge traces, the elliptic projector, stabilization and the load vector.

mod layout;
mod matrices;
mod projector;
mod stiffness;
mod traces;


pub use layout::{dimension_formula, dof_layout, DofKind, DofLayout};
pub use matrices::{
    interpolate_dofs, matrix_b, matrix_d, matrix_g, pinning_data, vertex_averages, PinningData,
    VertexAverages,
};
pub use projector::{bulk_l2_projector, elliptic_projector, Projector, ProjectorDiagnostics};
pub use stiffness::{local_load, local_stiffness, numerical_rank, ElementReport, LocalElement, LocalMatrices};
pub use traces::{edge_trace_maps, edge_traces, EdgeTraceMaps, EdgeTraceSet};

use serde::{Deserialize, Serialize};

use crate::error::{Result, VemError};
use crate::mesh::{dist, polygon_metrics, PolygonalMesh};
use crate::poly::{poly_dim, ScaledMonomialBasis};
use crate::quad::{is_simple, signed_area};

/// Which length scales the vertex derivative degrees of freedom.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VertexScaling {
    /// `h_v`, the mean diameter of the cells sharing the vertex.
    #[default]
    Vertex,
    /// The diameter of the cell itself.
    Cell,
}

/// Weighting of the stabilization `S = (I - Π)ᵀ W (I - Π)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stabilization {
    /// `W_ii = max((Πᵀ G Π)_ii, floor)`, one weight per DOF.
    #[default]
    Diagonal,
    /// `W = σ I` with `σ = max(trace(Πᵀ G Π) / N, floor)`.
    Scalar,
}

/// Parameters `(p, r, t)` of the local space plus numerical toggles.
///
/// `p` fixes the smoothness (`C^{p-1}` gluing, vertex derivatives up to order
/// `p - 1`), `r` the polynomial degree and `t` the continuity surplus: the
/// operator actually discretized is `Δ^{p-t}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementConfig {
    pub p: usize,
    pub r: usize,
    pub t: usize,
    #[serde(default)]
    pub vertex_scaling: VertexScaling,
    /// Solve the projector in an L²-orthonormalized polynomial basis.
    #[serde(default)]
    pub orthonormal: bool,
    #[serde(default)]
    pub stabilization: Stabilization,
}

impl ElementConfig {
    pub fn new(p: usize, r: usize, t: usize) -> Result<Self> {
        let c = Self {
            p,
            r,
            t,
            vertex_scaling: VertexScaling::Vertex,
            orthonormal: false,
            stabilization: Stabilization::Diagonal,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 1 {
            return Err(VemError::Config("p must be at least 1".into()));
        }
        if self.r + 1 < 2 * self.p {
            return Err(VemError::Config(format!(
                "r = {} violates r >= 2p - 1 = {}",
                self.r,
                2 * self.p - 1
            )));
        }
        if self.t >= self.p {
            return Err(VemError::Config(format!(
                "t = {} violates 0 <= t <= p - 1 = {}",
                self.t,
                self.p - 1
            )));
        }
        Ok(())
    }

    /// Order of the operator actually discretized, `p - t`.
    pub fn p_eff(&self) -> usize {
        self.p - self.t
    }

    /// `ℓ = ⌊p_eff / 2⌋`.
    pub fn ell(&self) -> usize {
        self.p_eff() / 2
    }

    pub fn is_odd(&self) -> bool {
        self.p_eff() % 2 == 1
    }

    /// `dim P_r`.
    pub fn poly_dim(&self) -> usize {
        poly_dim(self.r as i64)
    }

    /// Dimension of `{q ∈ P_r : a(q, q) = 0}`.
    pub fn kernel_dim(&self) -> usize {
        let r = self.r as i64;
        poly_dim(r) - poly_dim(r - 2 * self.ell() as i64) + usize::from(self.is_odd())
    }

    /// Highest degree of the bulk moments, `r - 2 p_eff` (negative: none).
    pub fn bulk_degree(&self) -> i64 {
        self.r as i64 - 2 * self.p_eff() as i64
    }

    /// Number of moments of `∂_n^j v` per edge.
    pub fn edge_moment_count(&self, j: usize) -> usize {
        (self.r as i64 - 2 * self.p as i64 + j as i64 + 1).max(0) as usize
    }
}

/// Local geometry of an oriented mesh edge as seen from one cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeGeometry {
    /// Local vertex at `s = 0` (start of the global orientation).
    pub start: usize,
    pub end: usize,
    pub length: f64,
    /// Unit tangent along the global orientation.
    pub tangent: [f64; 2],
    /// Unit outward normal of the cell.
    pub normal: [f64; 2],
    /// `+1` if the global edge normal equals the outward normal, else `-1`.
    pub sign: f64,
}

impl EdgeGeometry {
    pub fn point(&self, geom: &CellGeometry, s: f64) -> [f64; 2] {
        let a = geom.vertices[self.start];
        [
            a[0] + s * self.length * self.tangent[0],
            a[1] + s * self.length * self.tangent[1],
        ]
    }
}

/// Everything an element computation needs to know about one polygon.
#[derive(Clone, Debug, PartialEq)]
pub struct CellGeometry {
    pub vertices: Vec<[f64; 2]>,
    /// Scaling length of the vertex derivative DOFs, per local vertex.
    pub vertex_scales: Vec<f64>,
    /// Local edge `i` joins local vertices `i` and `i + 1`.
    pub edges: Vec<EdgeGeometry>,
    pub area: f64,
    pub centroid: [f64; 2],
    pub diameter: f64,
}

impl CellGeometry {
    fn build(vertices: Vec<[f64; 2]>, signs: &[f64], vertex_scales: Option<Vec<f64>>) -> Result<Self> {
        if vertices.len() < 3 || !is_simple(&vertices) {
            return Err(VemError::InvalidMesh("cell polygon is not simple".into()));
        }
        if signed_area(&vertices) <= 0.0 {
            return Err(VemError::InvalidMesh("cell polygon is not counterclockwise".into()));
        }
        let m = polygon_metrics(&vertices);
        let n = vertices.len();
        let edges = (0..n)
            .map(|i| {
                let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                let length = dist(a, b);
                let t_loc = [(b[0] - a[0]) / length, (b[1] - a[1]) / length];
                let normal = [t_loc[1], -t_loc[0]];
                let sign = signs[i];
                let (start, end, tangent) = if sign > 0.0 {
                    (i, (i + 1) % n, t_loc)
                } else {
                    ((i + 1) % n, i, [-t_loc[0], -t_loc[1]])
                };
                EdgeGeometry {
                    start,
                    end,
                    length,
                    tangent,
                    normal,
                    sign,
                }
            })
            .collect();
        let vertex_scales = vertex_scales.unwrap_or_else(|| vec![m.diameter; n]);
        Ok(Self {
            vertices,
            vertex_scales,
            edges,
            area: m.area,
            centroid: m.centroid,
            diameter: m.diameter,
        })
    }

    /// A free-standing polygon: edges are oriented from the lower to the higher
    /// local vertex index and vertex DOFs are scaled by the cell diameter.
    pub fn from_polygon(vertices: Vec<[f64; 2]>) -> Result<Self> {
        let n = vertices.len();
        let signs: Vec<f64> = (0..n).map(|i| if i + 1 < n { 1.0 } else { -1.0 }).collect();
        Self::build(vertices, &signs, None)
    }

    pub fn from_mesh(mesh: &PolygonalMesh, cell: usize, scaling: VertexScaling) -> Result<Self> {
        let vertices = mesh.cell_polygon(cell);
        let signs: Vec<f64> = mesh.cell_edges(cell).iter().map(|e| e.sign).collect();
        let scales = match scaling {
            VertexScaling::Vertex => Some(mesh.cells()[cell].iter().map(|&v| mesh.vertex_scale(v)).collect()),
            VertexScaling::Cell => None,
        };
        Self::build(vertices, &signs, scales)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Scaled monomial basis of `P_degree` centered at the centroid.
    pub fn basis(&self, degree: usize) -> ScaledMonomialBasis {
        ScaledMonomialBasis::new(self.centroid, self.diameter, degree)
    }

    /// Point-in-polygon test with a relative tolerance on the boundary.
    pub fn contains(&self, x: [f64; 2]) -> bool {
        let tol = 1e-10 * self.diameter;
        let n = self.vertices.len();
        let mut inside = false;
        for i in 0..n {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
            // on-edge check
            let len = dist(a, b);
            let cross = ((b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0])) / len;
            let dot = (x[0] - a[0]) * (b[0] - a[0]) + (x[1] - a[1]) * (b[1] - a[1]);
            if cross.abs() <= tol && dot >= -tol * len && dot <= len * len + tol * len {
                return true;
            }
            if (a[1] > x[1]) != (b[1] > x[1]) {
                let xc = a[0] + (x[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if x[0] < xc {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

/// A few reference polygons used by diagnostics and tests.
pub mod shapes {
    pub fn unit_square() -> Vec<[f64; 2]> {
        vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
    }

    /// Regular hexagon with circumradius 1 centered at the origin.
    pub fn regular_hexagon() -> Vec<[f64; 2]> {
        (0..6)
            .map(|k| {
                let t = std::f64::consts::PI / 3.0 * k as f64;
                [t.cos(), t.sin()]
            })
            .collect()
    }

    /// A mildly irregular convex pentagon.
    pub fn perturbed_pentagon() -> Vec<[f64; 2]> {
        vec![[0.0, 0.0], [1.1, 0.1], [1.3, 0.9], [0.55, 1.4], [-0.15, 0.8]]
    }
}
