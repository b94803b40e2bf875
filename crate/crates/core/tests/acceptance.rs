//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Tolerances are pinned below.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use polyvem::element::shapes::{perturbed_pentagon, regular_hexagon, unit_square};
use polyvem::element::{CellGeometry, DofKind, ElementConfig, LocalElement};
use polyvem::mesh::{generate_mesh, perturb_interior, Domain, MeshKind, PolygonalMesh, DEFAULT_SEED};
use polyvem::poly::{multi_indices, poly_dim, DerivTable, MultiIndex, Poly2, ScaledMonomialBasis};
use polyvem::quad::{gauss_legendre_unit, polygon_rule};
use polyvem::system::{default_quad_degree, BoundaryData, Discretization};
use polyvem::verify::{builtin_case, run_convergence, ConvergenceTable, StudyOptions};
use polyvem::SmoothFunction;

const RANK_TOL: f64 = 1e-10;
const PROJECTOR_TOL: f64 = 1e-10;
const GBD_TOL: f64 = 1e-10;
const ORACLE_TOL: f64 = 1e-8;
const CONSISTENCY_TOL: f64 = 1e-9;
const SD_TOL: f64 = 1e-10;
const PATCH_TOL_LOW: f64 = 1e-7;
const PATCH_TOL_P3: f64 = 1e-5;
const LOWER_NORM_MARGIN: f64 = 0.3;

/// `(p, r)` with `p ∈ {1, 2, 3}`, `r ∈ {2p - 1, 2p}`.
const COMBOS: [(usize, usize); 6] = [(1, 1), (1, 2), (2, 3), (2, 4), (3, 5), (3, 6)];

type Check = Result<String, String>;

fn shapes() -> [(&'static str, Vec<[f64; 2]>); 3] {
    [
        ("square", unit_square()),
        ("hexagon", regular_hexagon()),
        ("pentagon", perturbed_pentagon()),
    ]
}

fn element(p: usize, r: usize, poly: &[[f64; 2]]) -> LocalElement {
    let config = ElementConfig::new(p, r, 0).expect("valid configuration");
    LocalElement::new(&config, CellGeometry::from_polygon(poly.to_vec()).expect("valid polygon"))
        .expect("element builds")
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
}

fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    max_abs(&(a - b)) / max_abs(b).max(f64::MIN_POSITIVE)
}

fn numerical_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    let sv = m.clone().singular_values();
    let top = sv.max();
    sv.iter().filter(|s| **s > tol * top).count()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn falling(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64)
}

/// `(t·∇)^k (n·∇)^j f` from a table of Cartesian derivatives.
fn frame_derivative(table: &DerivTable, t: [f64; 2], n: [f64; 2], k: usize, j: usize) -> f64 {
    let mut terms: BTreeMap<(usize, usize), f64> = BTreeMap::from([((0, 0), 1.0)]);
    let dirs = std::iter::repeat(t).take(k).chain(std::iter::repeat(n).take(j));
    for d in dirs {
        let mut next = BTreeMap::new();
        for (&(a, b), &c) in &terms {
            *next.entry((a + 1, b)).or_insert(0.0) += c * d[0];
            *next.entry((a, b + 1)).or_insert(0.0) += c * d[1];
        }
        terms = next;
    }
    terms.iter().map(|(&(a, b), c)| c * table.get(MultiIndex::new(a, b))).sum()
}

/// Legendre polynomial of degree `k` on `[0, 1]`.
fn legendre01(k: usize, s: f64) -> f64 {
    let x = 2.0 * s - 1.0;
    let (mut p0, mut p1) = (1.0, x);
    if k == 0 {
        return p0;
    }
    for m in 1..k {
        let p2 = ((2 * m + 1) as f64 * x * p1 - m as f64 * p0) / (m + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    p1
}

fn monomials(e: &LocalElement) -> Vec<Poly2> {
    (0..e.basis.dim()).map(|a| e.basis.monomial(MultiIndex::from_index(a))).collect()
}

/// `a(q1, q2)` by quadrature of `Δ^ℓ q1 Δ^ℓ q2` or `∇Δ^ℓ q1 · ∇Δ^ℓ q2`.
fn energy_gram(e: &LocalElement) -> DMatrix<f64> {
    let pe = e.config.p_eff();
    let ell = pe / 2;
    let rule = polygon_rule(&e.geom.vertices, 2 * e.config.r).expect("quadrature");
    let fields: Vec<Vec<Poly2>> = monomials(e)
        .iter()
        .map(|m| {
            let l = m.laplacian_power(ell);
            if pe % 2 == 0 {
                vec![l]
            } else {
                vec![l.dx(), l.dy()]
            }
        })
        .collect();
    let k = fields.len();
    let mut g = DMatrix::zeros(k, k);
    for (x, w) in rule.iter() {
        let vals: Vec<Vec<f64>> = fields.iter().map(|f| f.iter().map(|q| q.eval(x)).collect()).collect();
        for a in 0..k {
            for b in 0..k {
                let dot: f64 = vals[a].iter().zip(&vals[b]).map(|(u, v)| u * v).sum();
                g[(a, b)] += w * dot;
            }
        }
    }
    g
}

/// Traces of a local function rebuilt from its DOFs: `g[j]` holds the power
/// coefficients in the edge parameter `s ∈ [0, 1]` of `∂_n^j v`.
struct EdgeData {
    length: f64,
    start: [f64; 2],
    tangent: [f64; 2],
    normal: [f64; 2],
    g: Vec<Vec<f64>>,
}

impl EdgeData {
    fn point(&self, s: f64) -> [f64; 2] {
        [
            self.start[0] + s * self.length * self.tangent[0],
            self.start[1] + s * self.length * self.tangent[1],
        ]
    }

    /// `∂_t^m ∂_n^j v` at `s`.
    fn deriv(&self, j: usize, m: usize, s: f64) -> f64 {
        let c = &self.g[j];
        let raw: f64 = (m..c.len()).map(|i| c[i] * falling(i, m) * s.powi((i - m) as i32)).sum();
        raw / self.length.powi(m as i32)
    }

    /// `Δ^i v` on the edge, with `Δ = ∂_tt + ∂_nn`.
    fn lap(&self, i: usize, s: f64) -> f64 {
        (0..=i).map(|k| binomial(i, k) * self.deriv(2 * k, 2 * (i - k), s)).sum()
    }

    /// `∂_n Δ^i v` on the edge.
    fn nlap(&self, i: usize, s: f64) -> f64 {
        (0..=i).map(|k| binomial(i, k) * self.deriv(2 * k + 1, 2 * (i - k), s)).sum()
    }
}

fn rebuild_traces(e: &LocalElement, dofs: &[f64]) -> Vec<EdgeData> {
    let c = &e.config;
    let p = c.p;
    let r = c.r;
    let nv = e.geom.num_vertices();
    let mut vertex = vec![vec![0.0; poly_dim(p as i64 - 1)]; nv];
    let mut moments: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
    for (kind, d) in e.layout.entries.iter().zip(dofs) {
        let raw = d / kind.scale(&e.geom);
        match *kind {
            DofKind::Vertex { vertex: v, nu } => vertex[v][nu.index()] = raw,
            DofKind::Edge { edge, normal_order, k } => {
                moments.insert((edge, normal_order, k), raw);
            }
            DofKind::Bulk { .. } => {}
        }
    }
    let tables: Vec<DerivTable> = vertex.into_iter().map(|v| DerivTable::new(p - 1, v)).collect();
    let (gs, gw) = gauss_legendre_unit(r + 2);
    e.geom
        .edges
        .iter()
        .enumerate()
        .map(|(i, eg)| {
            let g = (0..p)
                .map(|j| {
                    let n = r - j + 1;
                    let mut a = DMatrix::zeros(n, n);
                    let mut rhs = DVector::zeros(n);
                    let mut row = 0;
                    for (vtx, s0) in [(eg.start, 0.0_f64), (eg.end, 1.0)] {
                        for k in 0..p - j {
                            for m in k..n {
                                a[(row, m)] = falling(m, k) * s0.powi((m - k) as i32);
                            }
                            rhs[row] = eg.length.powi(k as i32)
                                * frame_derivative(&tables[vtx], eg.tangent, eg.normal, k, j);
                            row += 1;
                        }
                    }
                    for k in 0..c.edge_moment_count(j) {
                        for m in 0..n {
                            a[(row, m)] = eg.length
                                * gs.iter().zip(&gw).map(|(&s, &w)| w * legendre01(k, s) * s.powi(m as i32)).sum::<f64>();
                        }
                        rhs[row] = moments[&(i, j, k)];
                        row += 1;
                    }
                    assert_eq!(row, n, "trace data count");
                    a.lu().solve(&rhs).expect("trace system").iter().copied().collect()
                })
                .collect();
            EdgeData {
                length: eg.length,
                start: e.geom.vertices[eg.start],
                tangent: eg.tangent,
                normal: eg.normal,
                g,
            }
        })
        .collect()
}

/// `∫_P v w` for a polynomial `w` of degree at most `r - 2 p_eff`, from the
/// bulk moments.
fn bulk_integral(e: &LocalElement, dofs: &[f64], w: &Poly2) -> f64 {
    let bd = e.config.bulk_degree();
    let mut total = 0.0;
    for (a, &c) in w.coeffs().iter().enumerate() {
        let alpha = MultiIndex::from_index(a);
        if (alpha.order() as i64) > bd {
            assert!(c.abs() < 1e-12 * (1.0 + max_abs(&DMatrix::from_row_slice(1, w.coeffs().len(), w.coeffs()))));
            continue;
        }
        let idx = e
            .layout
            .entries
            .iter()
            .position(|k| *k == DofKind::Bulk { alpha })
            .expect("bulk moment");
        total += c * dofs[idx] * e.geom.diameter.powi(2);
    }
    total
}

fn normal_derivative(q: &Poly2, x: [f64; 2], n: [f64; 2]) -> f64 {
    let d = q.derivatives(x, 1);
    n[0] * d.get(MultiIndex::new(1, 0)) + n[1] * d.get(MultiIndex::new(0, 1))
}

/// `∫_P Δ^m v · w` by repeated Green identities.
fn green(e: &LocalElement, dofs: &[f64], edges: &[EdgeData], m: usize, w: &Poly2) -> f64 {
    let mut total = bulk_integral(e, dofs, &w.laplacian_power(m));
    let (gs, gw) = gauss_legendre_unit(e.config.r + 2);
    for ed in edges {
        for (&s, &wt) in gs.iter().zip(&gw) {
            let x = ed.point(s);
            for i in 1..=m {
                let lw = w.laplacian_power(m - i);
                total += wt * ed.length * (ed.nlap(i - 1, s) * lw.eval(x) - ed.lap(i - 1, s) * normal_derivative(&lw, x, ed.normal));
            }
        }
    }
    total
}

/// `a(v, q)` from the DOFs of `v` only.
fn energy_against(e: &LocalElement, dofs: &[f64], edges: &[EdgeData], q: &Poly2) -> f64 {
    let pe = e.config.p_eff();
    let ell = pe / 2;
    if pe % 2 == 0 {
        return green(e, dofs, edges, ell, &q.laplacian_power(ell));
    }
    let lq = q.laplacian_power(ell);
    let (gs, gw) = gauss_legendre_unit(e.config.r + 2);
    let mut boundary = 0.0;
    for ed in edges {
        for (&s, &wt) in gs.iter().zip(&gw) {
            boundary += wt * ed.length * ed.lap(ell, s) * normal_derivative(&lq, ed.point(s), ed.normal);
        }
    }
    boundary - green(e, dofs, edges, ell, &q.laplacian_power(ell + 1))
}

/// The projection of a local function, from scratch: energy consistency,
/// vertex averages of `h_P^{|ν|} D^ν` for `|ν| < p_eff`, and stationarity of
/// `Σ_j h_P^{2j-1} ∫_∂P |∂_n^j (Π v - v)|²` over the remaining freedom.
fn oracle_projection(e: &LocalElement, dofs: &[f64]) -> Vec<f64> {
    let c = &e.config;
    let pe = c.p_eff();
    let hp = e.geom.diameter;
    let qs = monomials(e);
    let k = qs.len();
    let edges = rebuild_traces(e, dofs);
    let g = energy_gram(e);
    let b = DVector::from_iterator(k, qs.iter().map(|q| energy_against(e, dofs, &edges, q)));

    let avg_nus = multi_indices(pe - 1);
    let nv = e.geom.num_vertices() as f64;
    let mut avg = DMatrix::zeros(avg_nus.len(), k);
    let mut avg_rhs = DVector::zeros(avg_nus.len());
    for (v, &x) in e.geom.vertices.iter().enumerate() {
        let tables: Vec<DerivTable> = qs.iter().map(|q| q.derivatives(x, pe - 1)).collect();
        for (row, &nu) in avg_nus.iter().enumerate() {
            let f = hp.powi(nu.order() as i32) / nv;
            for a in 0..k {
                avg[(row, a)] += f * tables[a].get(nu);
            }
            let idx = e
                .layout
                .entries
                .iter()
                .position(|kd| *kd == DofKind::Vertex { vertex: v, nu })
                .expect("vertex dof");
            avg_rhs[row] += f * dofs[idx] / DofKind::Vertex { vertex: v, nu }.scale(&e.geom);
        }
    }

    let mut pin = DMatrix::zeros(k, k);
    let mut pin_rhs = DVector::zeros(k);
    let (gs, gw) = gauss_legendre_unit(c.r + 2);
    for ed in &edges {
        for (&s, &w) in gs.iter().zip(&gw) {
            let x = ed.point(s);
            let tables: Vec<DerivTable> = qs.iter().map(|q| q.derivatives(x, c.p - 1)).collect();
            for j in 0..c.p {
                let wt = w * ed.length * hp.powi(2 * j as i32 - 1);
                let dq = DVector::from_iterator(k, tables.iter().map(|t| frame_derivative(t, ed.tangent, ed.normal, 0, j)));
                pin += &dq * dq.transpose() * wt;
                pin_rhs += &dq * (ed.deriv(j, 0, s) * wt);
            }
        }
    }

    let na = avg_nus.len();
    let mut cons = DMatrix::zeros(k + na, k);
    cons.rows_mut(0, k).copy_from(&g);
    cons.rows_mut(k, na).copy_from(&avg);
    let mut rhs = DVector::zeros(k + na);
    rhs.rows_mut(0, k).copy_from(&b);
    rhs.rows_mut(k, na).copy_from(&avg_rhs);
    let svd = cons.svd(true, true);
    let kernel = poly_dim(c.r as i64) - poly_dim(c.r as i64 - 2 * (pe / 2) as i64) + pe % 2;
    let free = kernel - na;
    let top = svd.singular_values.max();
    let c0 = svd.solve(&rhs, 1e-9 * top).expect("least squares");
    let vt = svd.v_t.as_ref().expect("right singular vectors");
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let null: Vec<DVector<f64>> = order[..free].iter().map(|&i| vt.row(i).transpose()).collect();
    if free == 0 {
        return c0.iter().copied().collect();
    }
    let n = DMatrix::from_columns(&null);
    let y = (n.transpose() * &pin * &n)
        .lu()
        .solve(&(n.transpose() * (&pin_rhs - &pin * &c0)))
        .expect("pinning system");
    (c0 + n * y).iter().copied().collect()
}

/// `sin(a·x) + exp(b·x)` with all derivatives.
struct SineExp {
    a: [f64; 2],
    b: [f64; 2],
}

impl SmoothFunction for SineExp {
    fn derivatives(&self, x: [f64; 2], order: usize) -> DerivTable {
        let phase = self.a[0] * x[0] + self.a[1] * x[1];
        let ex = (self.b[0] * x[0] + self.b[1] * x[1]).exp();
        let values = multi_indices(order)
            .iter()
            .map(|nu| {
                let m = nu.order() as f64;
                self.a[0].powi(nu.x as i32) * self.a[1].powi(nu.y as i32) * (phase + m * std::f64::consts::FRAC_PI_2).sin()
                    + self.b[0].powi(nu.x as i32) * self.b[1].powi(nu.y as i32) * ex
            })
            .collect();
        DerivTable::new(order, values)
    }
}

fn expected_dofs(p: usize, r: usize, nv: usize) -> usize {
    let edge: usize = (0..p).map(|j| (r + j + 1).saturating_sub(2 * p)).sum();
    nv * (p * (p + 1) / 2) + nv * edge + poly_dim(r as i64 - 2 * p as i64)
}

fn criterion_1() -> Check {
    let mut worst = String::new();
    for (name, poly) in shapes() {
        for (p, r) in COMBOS {
            let e = element(p, r, &poly);
            let want = expected_dofs(p, r, poly.len());
            if e.ndof() != want {
                return Err(format!("{name} p={p} r={r}: {} DOFs, expected {want}", e.ndof()));
            }
            let rank = numerical_rank(&e.matrices.d, RANK_TOL);
            if rank != poly_dim(r as i64) {
                return Err(format!("{name} p={p} r={r}: rank(D)={rank}, expected {}", poly_dim(r as i64)));
            }
            worst = format!("last: {name} p={p} r={r} dofs={want} rank(D)={rank}");
        }
    }
    Ok(worst)
}

fn criterion_2() -> Check {
    let f = SineExp { a: [0.9, 1.7], b: [0.4, -0.6] };
    let (mut w_pd, mut w_idem, mut w_gbd, mut w_oracle) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for (name, poly) in shapes() {
        for (p, r) in COMBOS {
            let e = element(p, r, &poly);
            let m = &e.matrices;
            let k = m.g.nrows();
            let pd = rel(&(&m.pi_poly * &m.d), &DMatrix::identity(k, k));
            let idem = rel(&(&m.pi_dof * &m.pi_dof), &m.pi_dof);
            let gbd = rel(&(&m.b * &m.d), &m.g);
            let dofs = e.interpolate(&f, 2 * r + 8).map_err(|err| err.to_string())?;
            let got = DMatrix::from_column_slice(k, 1, e.project(&dofs).coeffs());
            let want = DMatrix::from_vec(k, 1, oracle_projection(&e, &dofs));
            let oracle = rel(&got, &want);
            w_pd = w_pd.max(pd);
            w_idem = w_idem.max(idem);
            w_gbd = w_gbd.max(gbd);
            w_oracle = w_oracle.max(oracle);
            if pd > PROJECTOR_TOL || idem > PROJECTOR_TOL || gbd > GBD_TOL || oracle > ORACLE_TOL {
                return Err(format!(
                    "{name} p={p} r={r}: |ΠD-I|={pd:.1e} idempotence={idem:.1e} |BD-G|={gbd:.1e} oracle={oracle:.1e}"
                ));
            }
        }
    }
    Ok(format!(
        "max |ΠD-I|={w_pd:.1e}, idempotence={w_idem:.1e}, |BD-G|={w_gbd:.1e}, oracle={w_oracle:.1e}"
    ))
}

fn criterion_3() -> Check {
    let (mut w_cons, mut w_sd) = (0.0_f64, 0.0_f64);
    let mut ranks = Vec::new();
    let mut failures = Vec::new();
    for (name, poly) in shapes() {
        for (p, r) in COMBOS {
            let e = element(p, r, &poly);
            let m = &e.matrices;
            let cons = rel(&(m.d.transpose() * &m.k * &m.d), &energy_gram(&e));
            let sd = max_abs(&(&m.s * &m.d)) / (max_abs(&m.s) * max_abs(&m.d));
            w_cons = w_cons.max(cons);
            w_sd = w_sd.max(sd);
            if cons > CONSISTENCY_TOL || sd > SD_TOL {
                failures.push(format!(
                    "{name} p={p} r={r}: consistency {cons:.1e}, |SD| {sd:.1e}, max|K| {:.1e}",
                    max_abs(&m.k)
                ));
            }
            let kernel = match (p, r) {
                (1, 1) => Some(1),
                (2, 3) => Some(7),
                (3, 5) => Some(12),
                _ => None,
            };
            if let Some(kernel) = kernel {
                let rank = numerical_rank(&m.k, RANK_TOL);
                if rank != e.ndof() - kernel {
                    failures.push(format!("{name} p={p} r={r}: rank(K)={rank}, expected {}", e.ndof() - kernel));
                }
                if name == "square" {
                    ranks.push(format!("p={p} r={r}: {}/{}", rank, e.ndof()));
                }
            }
        }
    }
    let summary = format!(
        "max consistency {w_cons:.1e}, max |SD| {w_sd:.1e}, square rank(K) {}",
        ranks.join(", ")
    );
    if failures.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{}; {summary}", failures.join("; ")))
    }
}

/// A fixed polynomial of degree `r` with every coefficient nonzero.
fn patch_poly(r: usize) -> Poly2 {
    let b = ScaledMonomialBasis::new([0.4, 0.6], 1.0, r);
    Poly2::from_coeffs(b, (0..b.dim()).map(|i| 0.5 + 0.25 * ((i * 7) % 5) as f64 - 0.3 * (i % 2) as f64).collect())
}

fn patch_meshes() -> Vec<(&'static str, PolygonalMesh)> {
    let square = generate_mesh(MeshKind::SquareGrid, 4, Domain::UNIT_SQUARE, DEFAULT_SEED).expect("mesh");
    let tri = generate_mesh(MeshKind::TriangleGrid, 2, Domain::UNIT_SQUARE, DEFAULT_SEED).expect("mesh");
    let perturbed = perturb_interior(&tri, 0.1, DEFAULT_SEED).expect("mesh");
    vec![("square-4x4", square), ("perturbed-8", perturbed)]
}

const PATCH_CONFIGS: [(usize, usize, usize); 9] = [
    (1, 1, 0),
    (1, 2, 0),
    (2, 3, 0),
    (2, 4, 0),
    (3, 5, 0),
    (3, 6, 0),
    (2, 3, 1),
    (3, 5, 1),
    (3, 5, 2),
];

/// Patch errors as CSV lines `mesh,p,r,t,error`.
fn patch_table() -> Result<Vec<(String, usize, f64)>, String> {
    let mut out = Vec::new();
    for (name, mesh) in patch_meshes() {
        if mesh.num_cells() != if name == "perturbed-8" { 8 } else { 16 } {
            return Err(format!("{name} has {} cells", mesh.num_cells()));
        }
        for (p, r, t) in PATCH_CONFIGS {
            let config = ElementConfig::new(p, r, t).map_err(|e| e.to_string())?;
            let disc = Discretization::new(mesh.clone(), &config).map_err(|e| e.to_string())?;
            let q = patch_poly(r);
            let pe = config.p_eff();
            let f = q.laplacian_power(pe).scaled(if pe % 2 == 0 { 1.0 } else { -1.0 });
            let deg = default_quad_degree(&config);
            let sol = disc
                .solve(&f, BoundaryData::Function(&q), deg)
                .map_err(|e| format!("{name} ({p},{r},{t}): {e}"))?;
            let exact = disc.interpolate(&q, deg).map_err(|e| e.to_string())?;
            let scale = exact.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            let err = sol.values.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
            out.push((format!("{name},{p},{r},{t},{err:e}"), p, err));
        }
    }
    Ok(out)
}

fn patch_csv(rows: &[(String, usize, f64)]) -> String {
    rows.iter().map(|(line, _, _)| format!("{line}\n")).collect()
}

fn criterion_4() -> Check {
    let rows = patch_table()?;
    let mut worst = [0.0_f64; 2];
    for (line, p, err) in &rows {
        let (slot, tol) = if *p <= 2 { (0, PATCH_TOL_LOW) } else { (1, PATCH_TOL_P3) };
        worst[slot] = worst[slot].max(*err);
        if !(*err <= tol) {
            return Err(format!("{line} exceeds {tol:e}"));
        }
    }
    Ok(format!("max DOF error p<=2 {:.1e}, p=3 {:.1e}", worst[0], worst[1]))
}

struct RateCase {
    p: usize,
    r: usize,
    t: usize,
    case: &'static str,
    levels: &'static [usize],
    /// `(norm index, lower bound, upper bound)` on the fitted slope.
    target: (usize, f64, f64),
}

const ENERGY_RATES: [RateCase; 4] = [
    RateCase { p: 1, r: 1, t: 0, case: "poly-bubble", levels: &[8, 16, 32, 64], target: (1, 0.8, 1.2) },
    RateCase { p: 1, r: 2, t: 0, case: "poly-bubble", levels: &[8, 16, 32, 64], target: (1, 1.75, 2.25) },
    RateCase { p: 2, r: 3, t: 0, case: "poly-bubble", levels: &[4, 8, 16, 32], target: (2, 1.75, 2.25) },
    RateCase { p: 3, r: 5, t: 0, case: "poly-bubble", levels: &[2, 4, 8, 16], target: (3, 2.7, 3.3) },
];

const T_VARIANT_RATES: [RateCase; 2] = [
    RateCase { p: 2, r: 3, t: 1, case: "poly-bubble", levels: &[4, 8, 16, 32], target: (1, 2.5, f64::INFINITY) },
    RateCase { p: 3, r: 5, t: 1, case: "poly-bubble", levels: &[2, 4, 8, 16], target: (2, 3.5, f64::INFINITY) },
];

fn study(c: &RateCase) -> Result<ConvergenceTable, String> {
    let case = builtin_case(c.p, c.r, c.t, c.case).map_err(|e| e.to_string())?;
    run_convergence(&case, &StudyOptions::new(MeshKind::SquareGrid, c.levels)).map_err(|e| e.to_string())
}

fn slopes_text(table: &ConvergenceTable) -> String {
    table
        .fitted_slopes()
        .iter()
        .enumerate()
        .map(|(s, v)| format!("e{s} {v:.3}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn rate_check(cases: &[RateCase], tables: &[ConvergenceTable]) -> Check {
    let mut lines = Vec::new();
    let mut failed = false;
    for (c, table) in cases.iter().zip(tables) {
        let (s, lo, hi) = c.target;
        let slope = table.fitted_slopes()[s];
        let ok = slope >= lo && slope <= hi;
        failed |= !ok;
        lines.push(format!("({},{},{}) e{s} {slope:.3} in [{lo}, {hi}]", c.p, c.r, c.t));
    }
    let text = lines.join("; ");
    if failed {
        Err(text)
    } else {
        Ok(text)
    }
}

fn criterion_6(tables: &[ConvergenceTable]) -> Check {
    let mut lines = Vec::new();
    let mut failed = false;
    for (c, table) in ENERGY_RATES.iter().zip(tables) {
        let floor = (c.r + 1 - c.p) as f64 - LOWER_NORM_MARGIN;
        let slopes = table.fitted_slopes();
        failed |= slopes.iter().take(c.p).any(|slope| !(*slope >= floor));
        lines.push(format!("({},{}) {} floor {floor:.1}", c.p, c.r, slopes_text(table)));
    }
    let text = lines.join("; ");
    if failed {
        Err(text)
    } else {
        Ok(text)
    }
}

fn run_studies(cases: &[RateCase]) -> Result<Vec<ConvergenceTable>, String> {
    cases.iter().map(study).collect()
}

fn criterion_8(first: &[String]) -> Check {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| e.to_string())?;
    let second: Vec<String> = pool.install(|| -> Result<Vec<String>, String> {
        let mut out = vec![patch_csv(&patch_table()?)];
        for t in run_studies(&ENERGY_RATES)?.iter().chain(&run_studies(&T_VARIANT_RATES)?) {
            out.push(t.to_csv());
        }
        Ok(out)
    })?;
    if second == first {
        Ok(format!("{} CSV outputs identical across runs (second run single-threaded)", first.len()))
    } else {
        let idx = first.iter().zip(&second).position(|(a, b)| a != b).unwrap_or(first.len());
        Err(format!("output {idx} differs between runs"))
    }
}

struct Suite {
    failures: usize,
}

impl Suite {
    fn record(&mut self, id: usize, name: &str, limit: Duration, start: Instant, outcome: Check) {
        let elapsed = start.elapsed();
        let (status, detail) = match outcome {
            Ok(d) if elapsed <= limit => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d} (over the {:.0} s budget)", limit.as_secs_f64())),
            Err(d) => ("FAIL", d),
        };
        if status == "FAIL" {
            self.failures += 1;
        }
        println!("{status} criterion {id} [{name}] {:.2} s: {detail}", elapsed.as_secs_f64());
    }
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let mut suite = Suite { failures: 0 };

    let t = Instant::now();
    suite.record(1, "unisolvence", secs(5), t, criterion_1());
    let t = Instant::now();
    suite.record(2, "projector", secs(10), t, criterion_2());
    let t = Instant::now();
    suite.record(3, "consistency and stability", secs(10), t, criterion_3());

    let t = Instant::now();
    let patch = patch_table();
    let mut outputs = Vec::new();
    if let Ok(rows) = &patch {
        outputs.push(patch_csv(rows));
    }
    suite.record(4, "patch tests", secs(30), t, criterion_4());

    let t = Instant::now();
    let energy = run_studies(&ENERGY_RATES);
    let energy_check = energy.as_ref().map_err(Clone::clone).and_then(|tabs| rate_check(&ENERGY_RATES, tabs));
    suite.record(5, "energy rates", secs(600), t, energy_check);

    let t = Instant::now();
    let lower = energy.as_ref().map_err(Clone::clone).and_then(|tabs| criterion_6(tabs));
    suite.record(6, "lower-norm rates", secs(600), t, lower);

    let t = Instant::now();
    let tvar = run_studies(&T_VARIANT_RATES);
    let tvar_check = tvar.as_ref().map_err(Clone::clone).and_then(|tabs| {
        let detail = rate_check(&T_VARIANT_RATES, tabs)?;
        let all: Vec<String> = tabs.iter().map(slopes_text).collect();
        Ok(format!("{detail}; all slopes {}", all.join(" / ")))
    });
    suite.record(7, "t-variant rates", secs(300), t, tvar_check);

    let t = Instant::now();
    let determinism = match (&energy, &tvar) {
        (Ok(e), Ok(v)) if patch.is_ok() => {
            outputs.extend(e.iter().chain(v).map(|t| t.to_csv()));
            criterion_8(&outputs)
        }
        _ => Err("an earlier run failed".to_string()),
    };
    suite.record(8, "determinism", secs(900), t, determinism);

    if suite.failures == 0 {
        println!("acceptance: all 8 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} criteria failed", suite.failures);
        ExitCode::FAILURE
    }
}
