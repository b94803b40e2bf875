//! Edge traces of local functions, reconstructed from the DOFs alone.
//!
//! On an edge with unit parameter `s` (along the global orientation) the
//! trace `g_j(s) = ∂_n^j v` (outward `n`) is a polynomial of degree `r - j`.
//! It is fixed by the Hermite data `d^k g_j / ds^k = h_e^k ∂_τ^k ∂_n^j v` at
//! both endpoints for `k <= p - 1 - j` (vertex DOFs) and by the edge moments.

use nalgebra::DMatrix;

use super::{CellGeometry, DofLayout, ElementConfig};
use crate::error::{Result, VemError};
use crate::poly::{binomial, falling, frame_derivative_weights, multi_indices_of_order, shifted_legendre, EdgePoly};
use crate::quad::gauss_legendre_unit;

/// Linear maps from local DOFs to the monomial coefficients (in `s`) of the
/// normal-derivative traces on one edge.
#[derive(Clone, Debug)]
pub struct EdgeTraceMaps {
    pub edge: usize,
    pub length: f64,
    /// `normal[j]` has `r - j + 1` rows and one column per DOF.
    pub normal: Vec<DMatrix<f64>>,
}

/// Traces of one function on one edge.
#[derive(Clone, Debug)]
pub struct EdgeTraceSet {
    pub normal: Vec<EdgePoly>,
}

/// Row-wise `k`-th `s`-derivative of a coefficient map.
fn derive_rows(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    if k == 0 {
        return m.clone();
    }
    let rows = m.nrows();
    if rows <= k {
        return DMatrix::zeros(1, m.ncols());
    }
    let mut out = DMatrix::zeros(rows - k, m.ncols());
    for i in 0..rows - k {
        let f = falling(i + k, k);
        out.row_mut(i).copy_from(&(m.row(i + k) * f));
    }
    out
}

fn add_padded(acc: &mut DMatrix<f64>, m: &DMatrix<f64>, c: f64) {
    if m.nrows() > acc.nrows() {
        let grown = acc.clone().resize_vertically(m.nrows(), 0.0);
        *acc = grown;
    }
    let mut view = acc.rows_mut(0, m.nrows());
    view += m * c;
}

impl EdgeTraceMaps {
    pub fn max_normal_order(&self) -> usize {
        self.normal.len() - 1
    }

    fn combine(&self, i: usize, offset: usize) -> Result<DMatrix<f64>> {
        if 2 * i + offset > self.max_normal_order() {
            return Err(VemError::Contract(format!(
                "trace of order {} needs normal derivatives up to {}, only {} available",
                i,
                2 * i + offset,
                self.max_normal_order()
            )));
        }
        let mut acc = DMatrix::zeros(1, self.normal[0].ncols());
        for k in 0..=i {
            let m = 2 * (i - k);
            let c = binomial(i, k) * self.length.powi(-(m as i32));
            add_padded(&mut acc, &derive_rows(&self.normal[2 * k + offset], m), c);
        }
        Ok(acc)
    }

    /// Coefficient map of `Δ^i v` on the edge.
    pub fn laplacian(&self, i: usize) -> Result<DMatrix<f64>> {
        self.combine(i, 0)
    }

    /// Coefficient map of `∂_n Δ^i v` on the edge.
    pub fn normal_laplacian(&self, i: usize) -> Result<DMatrix<f64>> {
        self.combine(i, 1)
    }

    pub fn apply(map: &DMatrix<f64>, dofs: &[f64]) -> EdgePoly {
        let c = map * nalgebra::DVector::from_column_slice(dofs);
        EdgePoly::new(c.as_slice().to_vec())
    }
}

/// Evaluate each row polynomial of a coefficient map at `s`: a DOF-length row.
pub fn eval_map(map: &DMatrix<f64>, s: f64) -> nalgebra::RowDVector<f64> {
    let mut row = nalgebra::RowDVector::zeros(map.ncols());
    let mut sp = 1.0;
    for i in 0..map.nrows() {
        row += map.row(i) * sp;
        sp *= s;
    }
    row
}

pub fn edge_trace_maps(
    config: &ElementConfig,
    geom: &CellGeometry,
    layout: &DofLayout,
    edge: usize,
) -> Result<EdgeTraceMaps> {
    let eg = &geom.edges[edge];
    let he = eg.length;
    let ndof = layout.len();
    let mut normal = Vec::with_capacity(config.p);
    for j in 0..config.p {
        let d = config.r - j;
        let mut lhs = DMatrix::zeros(d + 1, d + 1);
        let mut rhs = DMatrix::zeros(d + 1, ndof);
        let mut row = 0;
        for (vertex, s0) in [(eg.start, 0.0_f64), (eg.end, 1.0)] {
            let hv = geom.vertex_scales[vertex];
            for k in 0..config.p - j {
                for i in k..=d {
                    lhs[(row, i)] = falling(i, k) * s0.powi((i - k) as i32);
                }
                let w = frame_derivative_weights(eg.normal, eg.tangent, j, k);
                for nu in multi_indices_of_order(j + k) {
                    let dof = layout.vertex_dof(vertex, nu);
                    rhs[(row, dof)] += he.powi(k as i32) * w[nu.y] / hv.powi(nu.order() as i32);
                }
                row += 1;
            }
        }
        let count = config.edge_moment_count(j);
        if count > 0 {
            let (s, w) = gauss_legendre_unit((d + count).div_ceil(2) + 1);
            for m in 0..count {
                for i in 0..=d {
                    lhs[(row, i)] = s
                        .iter()
                        .zip(&w)
                        .map(|(&s, &w)| w * shifted_legendre(m, s) * s.powi(i as i32))
                        .sum();
                }
                rhs[(row, layout.edge_dof(config, edge, j, m))] = he.powi(-(j as i32));
                row += 1;
            }
        }
        debug_assert_eq!(row, d + 1);
        let sv = lhs.clone().singular_values();
        if !(sv.min() > 1e-13 * sv.max()) {
            return Err(VemError::SingularTrace { edge });
        }
        let sol = lhs.lu().solve(&rhs).ok_or(VemError::SingularTrace { edge })?;
        normal.push(sol);
    }
    Ok(EdgeTraceMaps {
        edge,
        length: he,
        normal,
    })
}

/// Normal-derivative traces `∂_n^j v`, `j = 0..p-1`, of the function with the
/// given local DOFs.
pub fn edge_traces(
    config: &ElementConfig,
    geom: &CellGeometry,
    layout: &DofLayout,
    edge: usize,
    dofs: &[f64],
) -> Result<EdgeTraceSet> {
    if dofs.len() != layout.len() {
        return Err(VemError::Contract(format!(
            "expected {} DOFs, got {}",
            layout.len(),
            dofs.len()
        )));
    }
    let maps = edge_trace_maps(config, geom, layout, edge)?;
    Ok(EdgeTraceSet {
        normal: maps.normal.iter().map(|m| EdgeTraceMaps::apply(m, dofs)).collect(),
    })
}
