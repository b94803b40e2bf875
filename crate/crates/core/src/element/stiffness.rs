use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::{json, Value};

use super::matrices::{interpolate_with, matrix_b, matrix_d, matrix_g, pinning_data, vertex_averages, DofRules};
use super::projector::{mass_matrix, orthonormal_transform};
use super::{
    dimension_formula, dof_layout, edge_trace_maps, elliptic_projector, CellGeometry, DofLayout, EdgeTraceMaps, ElementConfig,
    ProjectorDiagnostics, Stabilization,
};
use crate::error::{Result, VemError};
use crate::function::SmoothFunction;
use crate::poly::{Poly2, ScaledMonomialBasis};
use crate::quad::polygon_rule;

/// Floor of the stabilization weights, relative to `h_P^{2 - 2 p_eff}`.
const STAB_FLOOR: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct LocalMatrices {
    /// `N × k`: DOFs of the monomials.
    pub d: DMatrix<f64>,
    /// `k × k`: energy Gram matrix of the monomials.
    pub g: DMatrix<f64>,
    /// `k × N`: energy of the monomials against local functions.
    pub b: DMatrix<f64>,
    /// `k × N`: monomial coefficients of the projection.
    pub pi_poly: DMatrix<f64>,
    /// `N × N`: `D Π_poly`, the projection expressed in DOFs.
    pub pi_dof: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub k: DMatrix<f64>,
    /// `max(trace(Πᵀ G Π) / N, floor)`, the weight of the scalar stabilization.
    pub sigma: f64,
}

/// All local data of one cell.
#[derive(Clone, Debug)]
pub struct LocalElement {
    pub config: ElementConfig,
    pub geom: CellGeometry,
    pub layout: DofLayout,
    pub basis: ScaledMonomialBasis,
    pub traces: Vec<EdgeTraceMaps>,
    pub matrices: LocalMatrices,
    pub diagnostics: ProjectorDiagnostics,
}

/// Number of singular values above `1e-10` times the largest.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().singular_values();
    let smax = sv.max();
    sv.iter().filter(|&&s| s > 1e-10 * smax).count()
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
}

fn relative(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    max_abs(&(a - b)) / max_abs(b).max(f64::MIN_POSITIVE)
}

/// Rank and residual checks of one element.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ElementReport {
    pub dofs: usize,
    pub dimension_formula: usize,
    pub poly_dim: usize,
    pub kernel_dim: usize,
    pub rank_d: usize,
    pub rank_g: usize,
    pub rank_k: usize,
    /// `|Π_poly D - I|`, relative.
    pub polynomial_preservation: f64,
    /// `|Π_dof² - Π_dof|`, relative.
    pub idempotence: f64,
    /// `|B D - G|`, relative.
    pub consistency: f64,
    /// `|S D|` relative to `|S| |D|`.
    pub stabilization_defect: f64,
    pub sigma: f64,
}

impl ElementReport {
    /// `rank(D) = dim P_r`, `rank(G) = dim P_r - dim K_a` and
    /// `rank(K) = N - dim K_a`.
    pub fn ranks_ok(&self) -> bool {
        self.rank_d == self.poly_dim
            && self.rank_g + self.kernel_dim == self.poly_dim
            && self.rank_k + self.kernel_dim == self.dofs
    }
}

impl LocalElement {
    pub fn new(config: &ElementConfig, geom: CellGeometry) -> Result<Self> {
        config.validate()?;
        let layout = dof_layout(config, geom.num_vertices());
        let basis = geom.basis(config.r);
        let traces = (0..geom.edges.len())
            .map(|e| edge_trace_maps(config, &geom, &layout, e))
            .collect::<Result<Vec<_>>>()?;
        let d = matrix_d(config, &geom, &layout, &basis)?;
        let rank = numerical_rank(&d);
        if rank < basis.dim() {
            return Err(VemError::Unisolvence {
                rank,
                expected: basis.dim(),
            });
        }
        let g = matrix_g(config, &geom, &basis, 2 * config.r)?;
        let b = matrix_b(config, &geom, &layout, &basis, &traces)?;
        let averages = vertex_averages(config, &geom, &layout, &basis);
        let pin = pinning_data(config, &geom, &layout, &basis, &traces);
        let transform = if config.orthonormal {
            Some(orthonormal_transform(&geom, config.r)?)
        } else {
            None
        };
        let proj = elliptic_projector(config, &g, &b, &averages, &pin, transform.as_ref())?;
        let pi_poly = proj.pi_poly;
        let n = layout.len();
        let pi_dof = &d * &pi_poly;
        let consistency = pi_poly.transpose() * &g * &pi_poly;
        let hp = geom.diameter;
        let floor = STAB_FLOOR * hp.powi(2 - 2 * config.p_eff() as i32);
        let sigma = (consistency.trace() / n as f64).max(floor);
        let defect = DMatrix::identity(n, n) - &pi_dof;
        let s = match config.stabilization {
            Stabilization::Scalar => defect.transpose() * &defect * sigma,
            Stabilization::Diagonal => {
                let w = DMatrix::from_diagonal(&consistency.diagonal().map(|c| c.max(floor)));
                defect.transpose() * w * &defect
            }
        };
        let mut k = &consistency + &s;
        // remove round-off asymmetry
        k = (&k + k.transpose()) * 0.5;
        Ok(Self {
            config: *config,
            geom,
            layout,
            basis,
            traces,
            matrices: LocalMatrices {
                d,
                g,
                b,
                pi_poly,
                pi_dof,
                s,
                k,
                sigma,
            },
            diagnostics: proj.diagnostics,
        })
    }

    pub fn report(&self) -> ElementReport {
        let m = &self.matrices;
        let k = m.g.nrows();
        ElementReport {
            dofs: self.ndof(),
            dimension_formula: dimension_formula(&self.config, self.geom.num_vertices()),
            poly_dim: k,
            kernel_dim: self.config.kernel_dim(),
            rank_d: numerical_rank(&m.d),
            rank_g: numerical_rank(&m.g),
            rank_k: numerical_rank(&m.k),
            polynomial_preservation: relative(&(&m.pi_poly * &m.d), &DMatrix::identity(k, k)),
            idempotence: relative(&(&m.pi_dof * &m.pi_dof), &m.pi_dof),
            consistency: relative(&(&m.b * &m.d), &m.g),
            stabilization_defect: max_abs(&(&m.s * &m.d)) / (max_abs(&m.s) * max_abs(&m.d)).max(f64::MIN_POSITIVE),
            sigma: m.sigma,
        }
    }

    pub fn ndof(&self) -> usize {
        self.layout.len()
    }

    pub fn interpolate(&self, f: &dyn SmoothFunction, degree: usize) -> Result<Vec<f64>> {
        let rules = DofRules::new(&self.config, &self.geom, degree)?;
        interpolate_with(&self.config, &self.geom, &self.layout, &rules, f)
    }

    /// `Π v` for the local function with the given DOFs.
    pub fn project(&self, dofs: &[f64]) -> Poly2 {
        let c = &self.matrices.pi_poly * DVector::from_column_slice(dofs);
        Poly2::from_coeffs(self.basis, c.as_slice().to_vec())
    }

    /// Matrices as nested arrays, for inspection.
    pub fn to_json(&self) -> Value {
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
        };
        let m = &self.matrices;
        json!({
            "config": self.config,
            "vertices": self.geom.vertices,
            "dofs": self.layout.entries,
            "D": rows(&m.d),
            "G": rows(&m.g),
            "B": rows(&m.b),
            "Pi_poly": rows(&m.pi_poly),
            "S": rows(&m.s),
            "K": rows(&m.k),
            "sigma": m.sigma,
            "diagnostics": self.diagnostics,
        })
    }
}

pub fn local_stiffness(elem: &LocalElement) -> &DMatrix<f64> {
    &elem.matrices.k
}

/// Local load vector `(f_h, π v)`, integrated with quadrature exact to
/// `degree`. With bulk moments, `f_h` is the L² projection of `f` onto
/// `P_{r - 2 p_eff}` and `π` the L² projection from the moments; otherwise
/// `f_h` projects onto `P_{r - p_eff}` and `π` is the elliptic projection.
pub fn local_load(elem: &LocalElement, f: &dyn SmoothFunction, degree: usize) -> Result<DVector<f64>> {
    let cfg = &elem.config;
    let geom = &elem.geom;
    let bulk = cfg.bulk_degree() >= 0;
    let fdeg = if bulk {
        cfg.bulk_degree() as usize
    } else {
        cfg.r - cfg.p_eff()
    };
    let basis = geom.basis(fdeg);
    let rule = polygon_rule(&geom.vertices, degree.max(fdeg + cfg.r))?;
    let mut moments = DVector::zeros(basis.dim());
    for (x, w) in rule.iter() {
        let fx = f.value(x);
        moments += DVector::from_vec(basis.eval_all(x)) * (w * fx);
    }
    let h = mass_matrix(geom, fdeg)?;
    let coeffs = h
        .cholesky()
        .ok_or_else(|| VemError::Projector("mass matrix is not positive definite".into()))?
        .solve(&moments);
    let n = elem.ndof();
    if bulk {
        let mut b = DVector::zeros(n);
        let start = elem.layout.bulk_start();
        for (i, c) in coeffs.iter().enumerate() {
            b[start + i] = c * geom.diameter * geom.diameter;
        }
        Ok(b)
    } else {
        let fh = Poly2::from_coeffs(basis, coeffs.as_slice().to_vec());
        let full = elem.basis;
        let mut w = DVector::zeros(full.dim());
        for (x, wt) in rule.iter() {
            w += DVector::from_vec(full.eval_all(x)) * (wt * fh.eval(x));
        }
        Ok(elem.matrices.pi_poly.transpose() * w)
    }
}
