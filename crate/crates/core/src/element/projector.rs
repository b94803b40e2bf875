//! The elliptic projector `Π : V_h(P) → P_r(P)`, computable from DOFs.
//!
//! `Π v` satisfies `a(Π v, q) = a(v, q)` for all `q ∈ P_r`. The energy form
//! has a kernel `K_a` of dimension `dim P_r - dim P_{r-2ℓ} (+1 if p_eff odd)`;
//! its component is fixed by matching vertex averages of `h_P^{|ν|} D^ν`,
//! `|ν| < p_eff`, and, for the remaining directions, by a least-squares fit of
//! the boundary traces `∂_n^j`, `j < p`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use super::matrices::{PinningData, VertexAverages};
use super::{CellGeometry, DofLayout, ElementConfig};
use crate::error::{Result, VemError};
use crate::quad::polygon_rule;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ProjectorDiagnostics {
    pub kernel_dim: usize,
    /// Largest kernel eigenvalue of `G` relative to the largest eigenvalue.
    pub kernel_level: f64,
    /// Smallest nonzero eigenvalue of `G` relative to the largest eigenvalue.
    pub range_level: f64,
    /// `max |Zᵀ B| / max |B|`: must vanish for a consistent `B`.
    pub consistency_residual: f64,
}

#[derive(Clone, Debug)]
pub struct Projector {
    /// Monomial coefficients of `Π v` as a linear map of the DOFs (`k × N`).
    pub pi_poly: DMatrix<f64>,
    pub diagnostics: ProjectorDiagnostics,
}

fn sorted_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_columns(&idx.iter().map(|&i| eig.eigenvectors.column(i)).collect::<Vec<_>>());
    (vals, vecs)
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
}

/// Solves for `Π` in the basis given by `transform` (columns: coefficients
/// of the working basis in the monomials); the result is in monomials.
pub fn elliptic_projector(
    config: &ElementConfig,
    g: &DMatrix<f64>,
    b: &DMatrix<f64>,
    averages: &VertexAverages,
    pin: &PinningData,
    transform: Option<&DMatrix<f64>>,
) -> Result<Projector> {
    let (g, b, a_b, m_pin, r_pin) = match transform {
        Some(t) => (
            t.transpose() * g * t,
            t.transpose() * b,
            &averages.a * t,
            t.transpose() * &pin.m * t,
            t.transpose() * &pin.r,
        ),
        None => (g.clone(), b.clone(), averages.a.clone(), pin.m.clone(), pin.r.clone()),
    };
    let k = g.nrows();
    let kdim = config.kernel_dim();
    let (vals, vecs) = sorted_eigen(&g);
    let lmax = vals[k - 1];
    if !(lmax > 0.0) {
        return Err(VemError::Projector("energy Gram matrix vanishes".into()));
    }
    let kernel_level = vals[kdim - 1].abs() / lmax;
    let range_level = if kdim < k { vals[kdim] / lmax } else { 1.0 };
    if kernel_level > 1e-9 || range_level < 1e3 * kernel_level.max(1e-16) {
        return Err(VemError::Projector(format!(
            "energy Gram spectrum does not separate a kernel of dimension {kdim} \
             (kernel level {kernel_level:.3e}, range level {range_level:.3e})"
        )));
    }
    let z = vecs.columns(0, kdim).into_owned();
    let mut g_pinv = DMatrix::zeros(k, k);
    for i in kdim..k {
        let u = vecs.column(i);
        g_pinv += u * u.transpose() / vals[i];
    }
    let consistency_residual = max_abs(&(z.transpose() * &b)) / max_abs(&b).max(f64::MIN_POSITIVE);
    if consistency_residual > 1e-8 {
        return Err(VemError::Projector(format!(
            "B is not orthogonal to the energy kernel (residual {consistency_residual:.3e})"
        )));
    }
    let base = &g_pinv * &b;

    let a_z = &a_b * &z;
    let nb = a_z.nrows();
    if nb > kdim {
        return Err(VemError::Projector("more vertex averages than kernel directions".into()));
    }
    let (avals, avecs) = sorted_eigen(&(a_z.transpose() * &a_z));
    let w = avecs.columns(0, kdim - nb).into_owned();
    if nb > 0 && avals[kdim - nb] <= 1e-12 * avals[kdim - 1] {
        return Err(VemError::Projector("vertex averages are degenerate on the kernel".into()));
    }
    let zmz = z.transpose() * &m_pin * &z;
    let mut q = DMatrix::zeros(kdim, kdim);
    q.rows_mut(0, nb).copy_from(&a_z);
    q.rows_mut(nb, kdim - nb).copy_from(&(w.transpose() * &zmz));
    let n = b.ncols();
    let mut rhs = DMatrix::zeros(kdim, n);
    rhs.rows_mut(0, nb).copy_from(&(&averages.r - &a_b * &base));
    rhs.rows_mut(nb, kdim - nb)
        .copy_from(&(w.transpose() * z.transpose() * (&r_pin - &m_pin * &base)));
    let y = q
        .lu()
        .solve(&rhs)
        .ok_or_else(|| VemError::Projector("kernel pinning system is singular".into()))?;
    let mut pi = base + &z * y;
    if let Some(t) = transform {
        pi = t * pi;
    }
    Ok(Projector {
        pi_poly: pi,
        diagnostics: ProjectorDiagnostics {
            kernel_dim: kdim,
            kernel_level,
            range_level,
            consistency_residual,
        },
    })
}

/// Monomial mass matrix `∫_P m_α m_β` of the given basis.
pub(crate) fn mass_matrix(geom: &CellGeometry, degree: usize) -> Result<DMatrix<f64>> {
    let basis = geom.basis(degree);
    let rule = polygon_rule(&geom.vertices, 2 * degree)?;
    let mut h = DMatrix::zeros(basis.dim(), basis.dim());
    for (x, w) in rule.iter() {
        let m = nalgebra::DVector::from_vec(basis.eval_all(x));
        h += &m * m.transpose() * w;
    }
    Ok(h)
}

/// `T` with `Tᵀ H T = I`, `H` the monomial mass matrix of `P_degree`.
pub(crate) fn orthonormal_transform(geom: &CellGeometry, degree: usize) -> Result<DMatrix<f64>> {
    let h = mass_matrix(geom, degree)?;
    let l = h
        .cholesky()
        .ok_or_else(|| VemError::Projector("monomial mass matrix is not positive definite".into()))?
        .l();
    let lt = l.transpose();
    lt.solve_upper_triangular(&DMatrix::identity(lt.nrows(), lt.nrows()))
        .ok_or_else(|| VemError::Projector("monomial mass matrix is singular".into()))
}

/// The L² projection onto `P_{r - 2 p_eff}` (coefficients in the scaled
/// monomials of the cell), computed from the bulk moments. `None` when the
/// space has no bulk moments.
pub fn bulk_l2_projector(
    config: &ElementConfig,
    geom: &CellGeometry,
    layout: &DofLayout,
) -> Result<Option<DMatrix<f64>>> {
    let deg = config.bulk_degree();
    if deg < 0 {
        return Ok(None);
    }
    let h = mass_matrix(geom, deg as usize)?;
    let nb = h.nrows();
    let mut moments = DMatrix::zeros(nb, layout.len());
    let start = layout.bulk_start();
    for i in 0..nb {
        moments[(i, start + i)] = geom.diameter * geom.diameter;
    }
    let chol = h
        .cholesky()
        .ok_or_else(|| VemError::Projector("bulk mass matrix is not positive definite".into()))?;
    Ok(Some(chol.solve(&moments)))
}
