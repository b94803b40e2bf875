//! The matrices `D` (DOFs of monomials), `G` (energy Gram of monomials) and
//! `B` (energy of monomials against local functions, from DOFs only).

use nalgebra::DMatrix;

use super::traces::eval_map;
use super::{CellGeometry, DofKind, DofLayout, EdgeTraceMaps, ElementConfig};
use crate::error::{Result, VemError};
use crate::function::SmoothFunction;
use crate::poly::{
    directional_derivative, falling, frame_derivative_weights, multi_indices, poly_dim, shifted_legendre,
    MultiIndex, ScaledMonomialBasis,
};
use crate::quad::{gauss_legendre_unit, polygon_rule, QuadratureRule};

/// `D^ν m_α(x)` for every basis monomial (rows) and `|ν| <= order` (columns).
pub(crate) fn monomial_derivatives(basis: &ScaledMonomialBasis, x: [f64; 2], order: usize) -> DMatrix<f64> {
    let u = (x[0] - basis.center[0]) / basis.scale;
    let v = (x[1] - basis.center[1]) / basis.scale;
    let d = basis.degree;
    let mut pu = vec![1.0; d + 1];
    let mut pv = vec![1.0; d + 1];
    for i in 1..=d {
        pu[i] = pu[i - 1] * u;
        pv[i] = pv[i - 1] * v;
    }
    let nus = multi_indices(order);
    let mut out = DMatrix::zeros(basis.dim(), nus.len());
    for i in 0..basis.dim() {
        let a = MultiIndex::from_index(i);
        for (c, nu) in nus.iter().enumerate() {
            if a.x >= nu.x && a.y >= nu.y {
                out[(i, c)] = falling(a.x, nu.x)
                    * falling(a.y, nu.y)
                    * pu[a.x - nu.x]
                    * pv[a.y - nu.y]
                    * basis.scale.powi(-(nu.order() as i32));
            }
        }
    }
    out
}

/// `∂_n^j m_α(x)` for every basis monomial.
fn monomial_normal_derivatives(table: &DMatrix<f64>, n: [f64; 2], j: usize) -> Vec<f64> {
    let w = frame_derivative_weights(n, [-n[1], n[0]], j, 0);
    (0..table.nrows())
        .map(|a| {
            w.iter()
                .enumerate()
                .map(|(y, c)| c * table[(a, MultiIndex::new(j - y, y).index())])
                .sum()
        })
        .collect()
}

/// Quadrature used to evaluate the DOFs of a given function.
#[derive(Clone, Debug)]
pub(crate) struct DofRules {
    pub bulk: Option<QuadratureRule>,
    pub edge_s: Vec<f64>,
    pub edge_w: Vec<f64>,
}

impl DofRules {
    pub(crate) fn new(config: &ElementConfig, geom: &CellGeometry, degree: usize) -> Result<Self> {
        let bulk = if config.bulk_degree() >= 0 {
            Some(polygon_rule(&geom.vertices, degree)?)
        } else {
            None
        };
        let (edge_s, edge_w) = gauss_legendre_unit(degree / 2 + 1);
        Ok(Self { bulk, edge_s, edge_w })
    }
}

pub(crate) fn interpolate_with(
    config: &ElementConfig,
    geom: &CellGeometry,
    layout: &DofLayout,
    rules: &DofRules,
    f: &dyn SmoothFunction,
) -> Result<Vec<f64>> {
    let mut dofs = vec![0.0; layout.len()];
    let vtables: Vec<_> = geom
        .vertices
        .iter()
        .map(|&x| f.derivatives(x, config.p - 1))
        .collect();
    // edge traces ∂_n^j f at the Gauss points, per edge
    let etables: Vec<Vec<Vec<f64>>> = geom
        .edges
        .iter()
        .map(|eg| {
            rules
                .edge_s
                .iter()
                .map(|&s| {
                    let t = f.derivatives(eg.point(geom, s), config.p - 1);
                    (0..config.p)
                        .map(|j| directional_derivative(&t, eg.normal, eg.tangent, j, 0))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let bulk_basis = (config.bulk_degree() >= 0).then(|| geom.basis(config.bulk_degree() as usize));
    let bulk_moments: Vec<f64> = match (&rules.bulk, bulk_basis) {
        (Some(rule), Some(b)) => {
            let mut acc = vec![0.0; b.dim()];
            for (x, w) in rule.iter() {
                let fx = f.value(x);
                for (a, m) in acc.iter_mut().zip(b.eval_all(x)) {
                    *a += w * fx * m;
                }
            }
            acc
        }
        _ => Vec::new(),
    };
    for (slot, kind) in dofs.iter_mut().zip(&layout.entries) {
        let raw = match *kind {
            DofKind::Vertex { vertex, nu } => vtables[vertex].get(nu),
            DofKind::Edge { edge, normal_order, k } => {
                let he = geom.edges[edge].length;
                rules
                    .edge_s
                    .iter()
                    .zip(&rules.edge_w)
                    .zip(&etables[edge])
                    .map(|((&s, &w), g)| he * w * shifted_legendre(k, s) * g[normal_order])
                    .sum()
            }
            DofKind::Bulk { alpha } => bulk_moments[alpha.index()],
        };
        *slot = kind.scale(geom) * raw;
    }
    Ok(dofs)
}

/// The local DOFs of a smooth function, with quadrature exact to `degree`.
pub fn interpolate_dofs(
    config: &ElementConfig,
    geom: &CellGeometry,
    layout: &DofLayout,
    f: &dyn SmoothFunction,
    degree: usize,
) -> Result<Vec<f64>> {
    let rules = DofRules::new(config, geom, degree)?;
    interpolate_with(config, geom, layout, &rules, f)
}

/// `D[i, α] = dof_i(m_α)`, one row per DOF.
pub fn matrix_d(
    config: &ElementConfig,
    geom: &CellGeometry,
    layout: &DofLayout,
    basis: &ScaledMonomialBasis,
) -> Result<DMatrix<f64>> {
    let rules = DofRules::new(config, geom, 2 * config.r + config.p)?;
    let mut d = DMatrix::zeros(layout.len(), basis.dim());
    for (a, mut col) in d.column_iter_mut().enumerate() {
        let m = basis.monomial(MultiIndex::from_index(a));
        let v = interpolate_with(config, geom, layout, &rules, &m)?;
        col.copy_from_slice(&v);
    }
    Ok(d)
}

/// Energy Gram matrix `G[α, β] = a(m_α, m_β)` with quadrature exact to `degree`.
pub fn matrix_g(
    config: &ElementConfig,
    geom: &CellGeometry,
    basis: &ScaledMonomialBasis,
    degree: usize,
) -> Result<DMatrix<f64>> {
    let rule = polygon_rule(&geom.vertices, degree)?;
    let k = basis.dim();
    let ell = config.ell();
    let laps: Vec<_> = (0..k)
        .map(|a| basis.monomial(MultiIndex::from_index(a)).laplacian_power(ell))
        .collect();
    let comps = if config.is_odd() { 2 } else { 1 };
    let mut g = DMatrix::zeros(k, k);
    let mut vals = DMatrix::zeros(k, comps);
    for (x, w) in rule.iter() {
        for (a, q) in laps.iter().enumerate() {
            if config.is_odd() {
                let t = q.derivatives(x, 1);
                vals[(a, 0)] = t.get(MultiIndex::new(1, 0));
                vals[(a, 1)] = t.get(MultiIndex::new(0, 1));
            } else {
                vals[(a, 0)] = q.value(x);
            }
        }
        g += &vals * vals.transpose() * w;
    }
    Ok(g)
}

/// Per-edge evaluation of the DOF-to-trace maps needed by `B`.
struct EdgeTerms {
    /// `Δ^{i} v` maps, `i = 0..`
    lap: Vec<DMatrix<f64>>,
    /// `∂_n Δ^{i} v` maps
    nlap: Vec<DMatrix<f64>>,
}

fn edge_terms(config: &ElementConfig, maps: &EdgeTraceMaps) -> Result<EdgeTerms> {
    let ell = config.ell();
    let lap_count = if config.is_odd() { ell + 1 } else { ell };
    Ok(EdgeTerms {
        lap: (0..lap_count).map(|i| maps.laplacian(i)).collect::<Result<_>>()?,
        nlap: (0..ell).map(|i| maps.normal_laplacian(i)).collect::<Result<_>>()?,
    })
}

/// `B[α, :] · χ(v) = a(m_α, v)` for every local function `v`, computed by
/// integration by parts from edge traces and bulk moments.
pub fn matrix_b(
    config: &ElementConfig,
    geom: &CellGeometry,
    layout: &DofLayout,
    basis: &ScaledMonomialBasis,
    traces: &[EdgeTraceMaps],
) -> Result<DMatrix<f64>> {
    let k = basis.dim();
    let n = layout.len();
    let pe = config.p_eff();
    let ell = config.ell();
    let odd = config.is_odd();
    let hp = geom.diameter;
    let laps: Vec<Vec<_>> = (0..k)
        .map(|a| {
            let m = basis.monomial(MultiIndex::from_index(a));
            (0..=pe).map(|i| m.laplacian_power(i)).collect()
        })
        .collect();
    let mut b = DMatrix::zeros(k, n);

    // volume term ±∫ Δ^{pe} m_α v, expressed through the bulk moments
    let sign = if odd { -1.0 } else { 1.0 };
    for (a, l) in laps.iter().enumerate() {
        let top = &l[pe];
        for (i, &c) in top.coeffs().iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let beta = MultiIndex::from_index(i);
            if (beta.order() as i64) > config.bulk_degree() {
                return Err(VemError::Contract(format!(
                    "Δ^{pe} of a degree-{} monomial needs bulk moments of degree {}",
                    config.r,
                    beta.order()
                )));
            }
            b[(a, layout.bulk_dof(beta))] += sign * c * hp * hp;
        }
    }

    let (gs, gw) = gauss_legendre_unit(config.r + 1);
    for (e, maps) in traces.iter().enumerate() {
        let eg = &geom.edges[e];
        let terms = edge_terms(config, maps)?;
        for (&s, &w) in gs.iter().zip(&gw) {
            let x = eg.point(geom, s);
            let wt = w * eg.length;
            let lap_v: Vec<_> = terms.lap.iter().map(|m| eval_map(m, s)).collect();
            let nlap_v: Vec<_> = terms.nlap.iter().map(|m| eval_map(m, s)).collect();
            for (a, l) in laps.iter().enumerate() {
                // value and outward normal derivative of Δ^m q at x
                let qd = |m: usize| {
                    let t = l[m].derivatives(x, 1);
                    let dn = eg.normal[0] * t.get(MultiIndex::new(1, 0)) + eg.normal[1] * t.get(MultiIndex::new(0, 1));
                    (t.value(), dn)
                };
                let mut row = nalgebra::RowDVector::zeros(n);
                for i in 1..=ell {
                    let (q, dq) = qd(pe - i);
                    // even: + Δ^{pe-i}q ∂_nΔ^{i-1}v - ∂_nΔ^{pe-i}q Δ^{i-1}v; odd: opposite
                    let s_i = if odd { -1.0 } else { 1.0 };
                    row += &nlap_v[i - 1] * (s_i * q);
                    row -= &lap_v[i - 1] * (s_i * dq);
                }
                if odd {
                    let (_, dq) = qd(ell);
                    row += &lap_v[ell] * dq;
                }
                let mut target = b.row_mut(a);
                target += row * wt;
            }
        }
    }
    Ok(b)
}

/// Boundary pinning data used to fix the kernel component of the projector:
/// `M[α, β] = Σ_j h_P^{2j-1} ∫_∂P ∂_n^j m_α ∂_n^j m_β`, and `R` the same
/// functional with `m_β` replaced by a local function (through its traces).
#[derive(Clone, Debug)]
pub struct PinningData {
    pub m: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

pub fn pinning_data(
    config: &ElementConfig,
    geom: &CellGeometry,
    layout: &DofLayout,
    basis: &ScaledMonomialBasis,
    traces: &[EdgeTraceMaps],
) -> PinningData {
    let k = basis.dim();
    let mut m = DMatrix::zeros(k, k);
    let mut r = DMatrix::zeros(k, layout.len());
    let (gs, gw) = gauss_legendre_unit(config.r + 1);
    for (e, maps) in traces.iter().enumerate() {
        let eg = &geom.edges[e];
        for (&s, &w) in gs.iter().zip(&gw) {
            let table = monomial_derivatives(basis, eg.point(geom, s), config.p - 1);
            for j in 0..config.p {
                let wt = w * eg.length * geom.diameter.powi(2 * j as i32 - 1);
                let q = nalgebra::DVector::from_vec(monomial_normal_derivatives(&table, eg.normal, j));
                let v = eval_map(&maps.normal[j], s);
                m += &q * q.transpose() * wt;
                r += &q * v * wt;
            }
        }
    }
    PinningData { m, r }
}

/// Vertex averages of `h_P^{|ν|} D^ν`, `|ν| <= p_eff - 1`, applied to the
/// monomials (`a`) and to local functions through their vertex DOFs (`r`).
#[derive(Clone, Debug)]
pub struct VertexAverages {
    pub a: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

pub fn vertex_averages(
    config: &ElementConfig,
    geom: &CellGeometry,
    layout: &DofLayout,
    basis: &ScaledMonomialBasis,
) -> VertexAverages {
    let order = config.p_eff() - 1;
    let nb = poly_dim(order as i64);
    let nv = geom.num_vertices();
    let hp = geom.diameter;
    let mut a = DMatrix::zeros(nb, basis.dim());
    let mut r = DMatrix::zeros(nb, layout.len());
    for (v, &x) in geom.vertices.iter().enumerate() {
        let table = monomial_derivatives(basis, x, order);
        for (row, nu) in multi_indices(order).into_iter().enumerate() {
            let f = hp.powi(nu.order() as i32) / nv as f64;
            for al in 0..basis.dim() {
                a[(row, al)] += f * table[(al, row)];
            }
            r[(row, layout.vertex_dof(v, nu))] += f / geom.vertex_scales[v].powi(nu.order() as i32);
        }
    }
    VertexAverages { a, r }
}
