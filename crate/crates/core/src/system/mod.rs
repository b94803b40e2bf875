//! Global DOF numbering, assembly with essential boundary conditions and the
//! sparse direct solve.

mod sparse;


pub use sparse::{extreme_eigenvalues, rcm_ordering, CsrMatrix, SkylineCholesky};

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::element::{local_load, CellGeometry, DofKind, ElementConfig, LocalElement};
use crate::error::{Result, VemError};
use crate::function::SmoothFunction;
use crate::mesh::PolygonalMesh;
use crate::poly::{DerivTable, MultiIndex, Poly2};

/// The mesh entity a global DOF belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "entity", rename_all = "kebab-case")]
pub enum GlobalDofKind {
    Vertex { vertex: usize, nu: MultiIndex },
    Edge { edge: usize, normal_order: usize, k: usize },
    Bulk { cell: usize, alpha: MultiIndex },
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlobalDofMap {
    pub kinds: Vec<GlobalDofKind>,
    /// Per cell, per local DOF: global index and the sign relating the local
    /// (outward-normal) functional to the global one.
    pub cell_dofs: Vec<Vec<(usize, f64)>>,
    pub constrained: Vec<bool>,
}

impl GlobalDofMap {
    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn num_free(&self) -> usize {
        self.constrained.iter().filter(|c| !**c).count()
    }

    /// Local DOF vector of a cell from a global one.
    pub fn gather(&self, cell: usize, global: &[f64]) -> Vec<f64> {
        self.cell_dofs[cell].iter().map(|&(g, s)| s * global[g]).collect()
    }
}

fn is_axis_aligned(a: [f64; 2], b: [f64; 2]) -> Option<usize> {
    let tol = 1e-12 * ((b[0] - a[0]).abs() + (b[1] - a[1]).abs());
    if (b[1] - a[1]).abs() <= tol {
        Some(1) // horizontal: the normal derivative is ∂_y
    } else if (b[0] - a[0]).abs() <= tol {
        Some(0)
    } else {
        None
    }
}

/// Numbers the global DOFs: vertex blocks, then edge blocks, then cell bulk
/// blocks, each in entity order.
///
/// For `t = 0` every DOF on the boundary is constrained. For `t > 0` only the
/// data `∂_n^j u`, `j < p - t`, is essential; a vertex derivative `D^ν` is then
/// constrained when its order normal to some incident boundary edge is below
/// `p - t`, which requires axis-aligned boundary edges.
pub fn number_dofs(mesh: &PolygonalMesh, config: &ElementConfig) -> Result<GlobalDofMap> {
    config.validate()?;
    let nv = mesh.vertices().len();
    let ne = mesh.edges().len();
    let pe = config.p_eff();
    let vertex_nus = crate::poly::multi_indices(config.p - 1);
    let per_vertex = vertex_nus.len();
    let edge_entries: Vec<(usize, usize)> = (0..config.p)
        .flat_map(|j| (0..config.edge_moment_count(j)).map(move |k| (j, k)))
        .collect();
    let per_edge = edge_entries.len();
    let bulk_nus = if config.bulk_degree() >= 0 {
        crate::poly::multi_indices(config.bulk_degree() as usize)
    } else {
        Vec::new()
    };

    // normal directions (0 = x, 1 = y) of boundary edges touching each vertex
    let mut boundary_normals: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for e in mesh.edges() {
        if !e.is_boundary() {
            continue;
        }
        let (a, b) = (mesh.vertices()[e.v[0]], mesh.vertices()[e.v[1]]);
        let dir = match is_axis_aligned(a, b) {
            Some(d) => d,
            None if config.t > 0 => {
                return Err(VemError::Config(
                    "t > 0 needs a boundary made of axis-aligned edges".into(),
                ))
            }
            None => 0,
        };
        for v in e.v {
            boundary_normals[v].push(dir);
        }
    }

    let mut kinds = Vec::new();
    let mut constrained = Vec::new();
    for (v, normals) in boundary_normals.iter().enumerate() {
        for &nu in &vertex_nus {
            kinds.push(GlobalDofKind::Vertex { vertex: v, nu });
            let fixed = if config.t == 0 {
                !normals.is_empty()
            } else {
                normals.iter().any(|&d| (if d == 0 { nu.x } else { nu.y }) < pe)
            };
            constrained.push(fixed);
        }
    }
    for (e, edge) in mesh.edges().iter().enumerate() {
        for &(j, k) in &edge_entries {
            kinds.push(GlobalDofKind::Edge {
                edge: e,
                normal_order: j,
                k,
            });
            constrained.push(edge.is_boundary() && j < pe);
        }
    }
    let bulk_base = kinds.len();
    for c in 0..mesh.num_cells() {
        for &alpha in &bulk_nus {
            kinds.push(GlobalDofKind::Bulk { cell: c, alpha });
            constrained.push(false);
        }
    }

    let mut cell_dofs = Vec::with_capacity(mesh.num_cells());
    for c in 0..mesh.num_cells() {
        let verts = &mesh.cells()[c];
        let layout = crate::element::dof_layout(config, verts.len());
        let map = layout
            .entries
            .iter()
            .map(|kind| match *kind {
                DofKind::Vertex { vertex, nu } => (verts[vertex] * per_vertex + nu.index(), 1.0),
                DofKind::Edge { edge, normal_order, k } => {
                    let ce = mesh.cell_edges(c)[edge];
                    let off = crate::element::DofLayout::edge_offset(config, normal_order, k);
                    let sign = if normal_order % 2 == 1 { ce.sign } else { 1.0 };
                    (nv * per_vertex + ce.edge * per_edge + off, sign)
                }
                DofKind::Bulk { alpha } => (bulk_base + c * bulk_nus.len() + alpha.index(), 1.0),
            })
            .collect();
        cell_dofs.push(map);
    }
    debug_assert_eq!(kinds.len(), nv * per_vertex + ne * per_edge + mesh.num_cells() * bulk_nus.len());
    Ok(GlobalDofMap {
        kinds,
        cell_dofs,
        constrained,
    })
}

/// Essential boundary data.
#[derive(Clone, Copy)]
pub enum BoundaryData<'a> {
    Homogeneous,
    /// Values taken from the DOFs of a known function.
    Function(&'a dyn SmoothFunction),
}

/// Local elements of a mesh plus the global numbering.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub config: ElementConfig,
    pub mesh: PolygonalMesh,
    pub elements: Vec<LocalElement>,
    pub dofs: GlobalDofMap,
}

/// The reduced system on the free DOFs.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Global index of each free unknown.
    pub free: Vec<usize>,
    /// Values of all global DOFs with the constrained ones filled in.
    pub lifted: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SolveReport {
    pub total_dofs: usize,
    pub free_dofs: usize,
    pub matrix_nnz: usize,
    pub factor_nnz: usize,
    pub relative_residual: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub condition_estimate: f64,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub values: Vec<f64>,
    pub report: SolveReport,
}

/// Default quadrature exactness for loads and interpolation.
pub fn default_quad_degree(config: &ElementConfig) -> usize {
    2 * config.r + 2
}

impl Discretization {
    pub fn new(mesh: PolygonalMesh, config: &ElementConfig) -> Result<Self> {
        let dofs = number_dofs(&mesh, config)?;
        let elements = (0..mesh.num_cells())
            .into_par_iter()
            .map(|c| {
                let geom = CellGeometry::from_mesh(&mesh, c, config.vertex_scaling).map_err(|e| e.in_cell(c))?;
                LocalElement::new(config, geom).map_err(|e| e.in_cell(c))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config: *config,
            mesh,
            elements,
            dofs,
        })
    }

    pub fn num_dofs(&self) -> usize {
        self.dofs.len()
    }

    /// Global DOFs of a smooth function; shared DOFs are taken from the first
    /// cell that owns them.
    pub fn interpolate(&self, f: &dyn SmoothFunction, degree: usize) -> Result<Vec<f64>> {
        let local: Vec<Vec<f64>> = self
            .elements
            .par_iter()
            .enumerate()
            .map(|(c, e)| e.interpolate(f, degree).map_err(|err| err.in_cell(c)))
            .collect::<Result<_>>()?;
        let mut out = vec![0.0; self.num_dofs()];
        let mut set = vec![false; self.num_dofs()];
        for (c, vals) in local.iter().enumerate() {
            for (&(g, s), v) in self.dofs.cell_dofs[c].iter().zip(vals) {
                if !set[g] {
                    out[g] = s * v;
                    set[g] = true;
                }
            }
        }
        Ok(out)
    }

    pub fn assemble(
        &self,
        forcing: &dyn SmoothFunction,
        boundary: BoundaryData<'_>,
        quad_degree: usize,
    ) -> Result<LinearSystem> {
        let n = self.num_dofs();
        let mut lifted = vec![0.0; n];
        if let BoundaryData::Function(g) = boundary {
            let gi = self.interpolate(g, quad_degree)?;
            for i in 0..n {
                if self.dofs.constrained[i] {
                    lifted[i] = gi[i];
                }
            }
        }
        let loads: Vec<DVector<f64>> = self
            .elements
            .par_iter()
            .enumerate()
            .map(|(c, e)| local_load(e, forcing, quad_degree).map_err(|err| err.in_cell(c)))
            .collect::<Result<_>>()?;

        let mut free_index = vec![usize::MAX; n];
        let mut free = Vec::new();
        for i in 0..n {
            if !self.dofs.constrained[i] {
                free_index[i] = free.len();
                free.push(i);
            }
        }
        let mut rhs = vec![0.0; free.len()];
        let mut triplets = Vec::new();
        for (c, elem) in self.elements.iter().enumerate() {
            let map = &self.dofs.cell_dofs[c];
            let k = &elem.matrices.k;
            for (a, &(ga, sa)) in map.iter().enumerate() {
                let ia = free_index[ga];
                if ia == usize::MAX {
                    continue;
                }
                rhs[ia] += sa * loads[c][a];
                for (b, &(gb, sb)) in map.iter().enumerate() {
                    let v = sa * sb * k[(a, b)];
                    let ib = free_index[gb];
                    if ib == usize::MAX {
                        rhs[ia] -= v * lifted[gb];
                    } else {
                        triplets.push((ia, ib, v));
                    }
                }
            }
        }
        Ok(LinearSystem {
            matrix: CsrMatrix::from_triplets(free.len(), triplets),
            rhs,
            free,
            lifted,
        })
    }

    pub fn solve_system(&self, system: &LinearSystem) -> Result<Solution> {
        let a = &system.matrix;
        let mut values = system.lifted.clone();
        let mut report = SolveReport {
            total_dofs: self.num_dofs(),
            free_dofs: a.n,
            matrix_nnz: a.nnz(),
            ..Default::default()
        };
        if a.n > 0 {
            let chol = SkylineCholesky::factor(a, rcm_ordering(a))?;
            let x = chol.solve(&system.rhs);
            let ax = a.mul_vec(&x);
            let rnorm = ax.iter().zip(&system.rhs).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
            let bnorm = system.rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
            report.relative_residual = if bnorm > 0.0 { rnorm / bnorm } else { rnorm };
            let (lmin, lmax) = extreme_eigenvalues(a, &chol, 60);
            report.factor_nnz = chol.nnz();
            report.lambda_min = lmin;
            report.lambda_max = lmax;
            report.condition_estimate = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
            for (i, &g) in system.free.iter().enumerate() {
                values[g] = x[i];
            }
        }
        Ok(Solution { values, report })
    }

    pub fn solve(
        &self,
        forcing: &dyn SmoothFunction,
        boundary: BoundaryData<'_>,
        quad_degree: usize,
    ) -> Result<Solution> {
        let system = self.assemble(forcing, boundary, quad_degree)?;
        self.solve_system(&system)
    }

    /// `Π u_h` on one cell.
    pub fn cell_projection(&self, cell: usize, global: &[f64]) -> Poly2 {
        self.elements[cell].project(&self.dofs.gather(cell, global))
    }

    /// Derivatives up to `order` of `Π u_h` at a point of the given cell.
    pub fn evaluate(&self, global: &[f64], cell: usize, x: [f64; 2], order: usize) -> Result<DerivTable> {
        let elem = self
            .elements
            .get(cell)
            .ok_or_else(|| VemError::Contract(format!("no cell {cell}")))?;
        if !elem.geom.contains(x) {
            return Err(VemError::Contract(format!("point {x:?} is outside cell {cell}")));
        }
        Ok(self.cell_projection(cell, global).derivatives(x, order))
    }
}
