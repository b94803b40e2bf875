use serde::{Deserialize, Serialize};

use super::{CellGeometry, ElementConfig};
use crate::poly::{multi_indices, poly_dim, MultiIndex};

/// One local degree of freedom.
///
/// Each is `scale × raw` where the raw functional is
/// - `Vertex`: `D^ν v(x_v)`, scale `h_v^{|ν|}`;
/// - `Edge`: `∫_e L_k(2s - 1) ∂_n^j v ds` (`s` the unit edge parameter along
///   the global orientation, `n` the outward normal), scale `h_e^{j-1}`;
/// - `Bulk`: `∫_P m_α v dx`, scale `h_P^{-2}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DofKind {
    Vertex { vertex: usize, nu: MultiIndex },
    Edge { edge: usize, normal_order: usize, k: usize },
    Bulk { alpha: MultiIndex },
}

impl DofKind {
    pub fn scale(&self, geom: &CellGeometry) -> f64 {
        match *self {
            DofKind::Vertex { vertex, nu } => geom.vertex_scales[vertex].powi(nu.order() as i32),
            DofKind::Edge { edge, normal_order, .. } => {
                geom.edges[edge].length.powi(normal_order as i32 - 1)
            }
            DofKind::Bulk { .. } => geom.diameter.powi(-2),
        }
    }
}

/// Ordered list of the local DOFs: vertex block, edge block, bulk block.
#[derive(Clone, Debug, PartialEq)]
pub struct DofLayout {
    pub entries: Vec<DofKind>,
    pub per_vertex: usize,
    pub per_edge: usize,
    pub bulk: usize,
    pub num_vertices: usize,
}

impl DofLayout {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn vertex_dof(&self, vertex: usize, nu: MultiIndex) -> usize {
        vertex * self.per_vertex + nu.index()
    }

    /// Offset of the `(j, k)` moment inside an edge block.
    pub fn edge_offset(config: &ElementConfig, j: usize, k: usize) -> usize {
        (0..j).map(|i| config.edge_moment_count(i)).sum::<usize>() + k
    }

    pub fn edge_dof(&self, config: &ElementConfig, edge: usize, j: usize, k: usize) -> usize {
        self.num_vertices * self.per_vertex + edge * self.per_edge + Self::edge_offset(config, j, k)
    }

    pub fn bulk_start(&self) -> usize {
        self.num_vertices * (self.per_vertex + self.per_edge)
    }

    pub fn bulk_dof(&self, alpha: MultiIndex) -> usize {
        self.bulk_start() + alpha.index()
    }
}

pub fn dof_layout(config: &ElementConfig, num_vertices: usize) -> DofLayout {
    let vertex_nus = multi_indices(config.p - 1);
    let mut entries = Vec::new();
    for vertex in 0..num_vertices {
        entries.extend(vertex_nus.iter().map(|&nu| DofKind::Vertex { vertex, nu }));
    }
    let mut per_edge = 0;
    for edge in 0..num_vertices {
        per_edge = 0;
        for j in 0..config.p {
            for k in 0..config.edge_moment_count(j) {
                entries.push(DofKind::Edge { edge, normal_order: j, k });
                per_edge += 1;
            }
        }
    }
    let bulk_degree = config.bulk_degree();
    let bulk = poly_dim(bulk_degree);
    if bulk_degree >= 0 {
        entries.extend(
            multi_indices(bulk_degree as usize)
                .into_iter()
                .map(|alpha| DofKind::Bulk { alpha }),
        );
    }
    DofLayout {
        entries,
        per_vertex: vertex_nus.len(),
        per_edge,
        bulk,
        num_vertices,
    }
}

/// Closed-form local dimension on a polygon with `num_vertices` vertices.
pub fn dimension_formula(config: &ElementConfig, num_vertices: usize) -> usize {
    let per_edge: usize = (0..config.p).map(|j| config.edge_moment_count(j)).sum();
    num_vertices * (poly_dim(config.p as i64 - 1) + per_edge) + poly_dim(config.bulk_degree())
}
