//! Broken Sobolev seminorm errors of the projected discrete solution.

use rayon::prelude::*;
use serde::Serialize;

use super::ManufacturedCase;
use crate::error::{Result, VemError};
use crate::function::SmoothFunction;
use crate::poly::multi_indices;
use crate::quad::polygon_rule;
use crate::system::Discretization;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorReport {
    pub h: f64,
    pub dofs: usize,
    /// `e_s = (Σ_P |u - Π u_h|²_{s,P})^{1/2}` for `s = 0..=p_eff`.
    pub errors: Vec<f64>,
}

/// Quadrature exactness used for the error integrals of a case.
pub fn error_quad_degree(case: &ManufacturedCase) -> usize {
    let r = case.config.r;
    match case.exact_degree {
        Some(d) => (2 * r + 2).max(2 * d),
        None => 2 * r + 6,
    }
}

/// `e_s` for `s = 0..=max_order` between `exact` and the cellwise
/// projections of the global DOF vector `values`.
pub fn seminorm_errors(
    disc: &Discretization,
    exact: &dyn SmoothFunction,
    values: &[f64],
    max_order: usize,
    degree: usize,
) -> Result<ErrorReport> {
    if values.len() != disc.num_dofs() {
        return Err(VemError::Contract(format!(
            "expected {} DOF values, got {}",
            disc.num_dofs(),
            values.len()
        )));
    }
    let nus = multi_indices(max_order);
    let per_cell: Vec<Vec<f64>> = (0..disc.mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let proj = disc.cell_projection(c, values);
            let rule = polygon_rule(&disc.elements[c].geom.vertices, degree).map_err(|e| e.in_cell(c))?;
            let mut acc = vec![0.0; max_order + 1];
            for (x, w) in rule.iter() {
                let du = exact.derivatives(x, max_order);
                let dp = proj.derivatives(x, max_order);
                for (i, nu) in nus.iter().enumerate() {
                    let diff = du.values()[i] - dp.values()[i];
                    acc[nu.order()] += w * diff * diff;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    // summed in cell order so the result does not depend on scheduling
    let mut sums = vec![0.0; max_order + 1];
    for acc in &per_cell {
        for (s, a) in sums.iter_mut().zip(acc) {
            *s += a;
        }
    }
    Ok(ErrorReport {
        h: disc.mesh.h(),
        dofs: disc.num_dofs(),
        errors: sums.iter().map(|s| s.max(0.0).sqrt()).collect(),
    })
}

/// Errors of a discrete solution against the exact solution of the case.
pub fn compute_errors(disc: &Discretization, case: &ManufacturedCase, values: &[f64]) -> Result<ErrorReport> {
    seminorm_errors(
        disc,
        case.exact.as_ref(),
        values,
        case.config.p_eff(),
        error_quad_degree(case),
    )
}

/// Errors of the projected interpolant of the exact solution (no solve).
pub fn interpolation_errors(disc: &Discretization, case: &ManufacturedCase) -> Result<ErrorReport> {
    let values = disc.interpolate(case.exact.as_ref(), error_quad_degree(case))?;
    compute_errors(disc, case, &values)
}
