//! Bivariate polynomials in scaled monomial bases, edge (1D) polynomials and
//! the Cartesian <-> edge-frame derivative algebra.
//!
//! A scaled monomial is `m_α(x) = ((x - x_P) / h_P)^α`. Multi-indices are
//! enumerated in graded lexicographic order: `(0,0), (1,0), (0,1), (2,0),
//! (1,1), (0,2), ...`, so the position of `(a, b)` is `d(d+1)/2 + b` with
//! `d = a + b`.

use std::cmp::Ordering;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VemError};

/// Exponent pair `(ν₁, ν₂)` of a monomial or a partial derivative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex {
    pub x: usize,
    pub y: usize,
}

impl MultiIndex {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    pub const fn order(self) -> usize {
        self.x + self.y
    }

    /// Position in the graded lexicographic enumeration.
    pub const fn index(self) -> usize {
        let d = self.order();
        d * (d + 1) / 2 + self.y
    }

    pub fn from_index(i: usize) -> Self {
        let mut d = 0;
        while (d + 1) * (d + 2) / 2 <= i {
            d += 1;
        }
        let y = i - d * (d + 1) / 2;
        Self { x: d - y, y }
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.index().cmp(&other.index())
    }
}

/// Dimension of `P_d` in two variables; zero for negative `d`.
pub fn poly_dim(d: i64) -> usize {
    if d < 0 {
        0
    } else {
        let d = d as usize;
        (d + 1) * (d + 2) / 2
    }
}

/// All multi-indices with `|ν| <= max_order`, graded-lex.
pub fn multi_indices(max_order: usize) -> Vec<MultiIndex> {
    (0..poly_dim(max_order as i64))
        .map(MultiIndex::from_index)
        .collect()
}

/// Multi-indices with `|ν| == order`, graded-lex.
pub fn multi_indices_of_order(order: usize) -> impl Iterator<Item = MultiIndex> {
    (0..=order).map(move |y| MultiIndex::new(order - y, y))
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Falling factorial `n (n-1) ... (n-k+1)`.
pub(crate) fn falling(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64)
}

/// Table of partial derivatives `D^ν f(x)` for all `|ν| <= order`.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivTable {
    order: usize,
    values: Vec<f64>,
}

impl DerivTable {
    pub fn new(order: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), poly_dim(order as i64));
        Self { order, values }
    }

    pub fn zeros(order: usize) -> Self {
        Self::new(order, vec![0.0; poly_dim(order as i64)])
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.values[0]
    }

    pub fn get(&self, nu: MultiIndex) -> f64 {
        self.values[nu.index()]
    }

    pub fn try_get(&self, nu: MultiIndex) -> Result<f64> {
        if nu.order() > self.order {
            return Err(VemError::Contract(format!(
                "derivative of order {} requested from a table of order {}",
                nu.order(),
                self.order
            )));
        }
        Ok(self.get(nu))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Center/scale frame of a scaled monomial basis of maximal degree `degree`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledMonomialBasis {
    pub center: [f64; 2],
    pub scale: f64,
    pub degree: usize,
}

impl ScaledMonomialBasis {
    pub fn new(center: [f64; 2], scale: f64, degree: usize) -> Self {
        assert!(scale > 0.0, "monomial scale must be positive");
        Self {
            center,
            scale,
            degree,
        }
    }

    /// Plain monomials `x^a y^b`.
    pub fn unscaled(degree: usize) -> Self {
        Self::new([0.0, 0.0], 1.0, degree)
    }

    pub fn dim(&self) -> usize {
        poly_dim(self.degree as i64)
    }

    pub fn with_degree(&self, degree: usize) -> Self {
        Self { degree, ..*self }
    }

    fn local(&self, x: [f64; 2]) -> [f64; 2] {
        [
            (x[0] - self.center[0]) / self.scale,
            (x[1] - self.center[1]) / self.scale,
        ]
    }

    /// Values of every basis monomial at `x`.
    pub fn eval_all(&self, x: [f64; 2]) -> Vec<f64> {
        let [u, v] = self.local(x);
        let d = self.degree;
        let mut pu = vec![1.0; d + 1];
        let mut pv = vec![1.0; d + 1];
        for i in 1..=d {
            pu[i] = pu[i - 1] * u;
            pv[i] = pv[i - 1] * v;
        }
        (0..self.dim())
            .map(|i| {
                let a = MultiIndex::from_index(i);
                pu[a.x] * pv[a.y]
            })
            .collect()
    }

    pub fn monomial(&self, alpha: MultiIndex) -> Poly2 {
        assert!(alpha.order() <= self.degree);
        let mut p = Poly2::zero(*self);
        p.coeffs[alpha.index()] = 1.0;
        p
    }
}

/// Polynomial in two variables, stored as coefficients over a scaled monomial
/// basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly2 {
    basis: ScaledMonomialBasis,
    coeffs: Vec<f64>,
}

impl Poly2 {
    pub fn zero(basis: ScaledMonomialBasis) -> Self {
        Self {
            coeffs: vec![0.0; basis.dim()],
            basis,
        }
    }

    pub fn constant(basis: ScaledMonomialBasis, c: f64) -> Self {
        let mut p = Self::zero(basis.with_degree(0));
        p.coeffs[0] = c;
        p
    }

    pub fn from_coeffs(basis: ScaledMonomialBasis, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), basis.dim(), "coefficient count mismatch");
        Self { basis, coeffs }
    }

    /// Unscaled polynomial from `(coefficient, (a, b))` terms `c x^a y^b`.
    pub fn from_terms(terms: &[(f64, (usize, usize))]) -> Self {
        let degree = terms.iter().map(|t| t.1 .0 + t.1 .1).max().unwrap_or(0);
        let mut p = Self::zero(ScaledMonomialBasis::unscaled(degree));
        for &(c, (a, b)) in terms {
            p.coeffs[MultiIndex::new(a, b).index()] += c;
        }
        p
    }

    pub fn basis(&self) -> &ScaledMonomialBasis {
        &self.basis
    }

    pub fn degree(&self) -> usize {
        self.basis.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, alpha: MultiIndex) -> f64 {
        self.coeffs.get(alpha.index()).copied().unwrap_or(0.0)
    }

    fn same_frame(&self, other: &Poly2) {
        assert!(
            self.basis.center == other.basis.center && self.basis.scale == other.basis.scale,
            "polynomials live in different monomial frames"
        );
    }

    /// Re-expresses the polynomial with a larger maximal degree.
    pub fn widen(&self, degree: usize) -> Poly2 {
        let degree = degree.max(self.degree());
        let mut out = Poly2::zero(self.basis.with_degree(degree));
        out.coeffs[..self.coeffs.len()].copy_from_slice(&self.coeffs);
        out
    }

    pub fn scaled(&self, c: f64) -> Poly2 {
        Poly2 {
            basis: self.basis,
            coeffs: self.coeffs.iter().map(|v| v * c).collect(),
        }
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        self.basis
            .eval_all(x)
            .iter()
            .zip(&self.coeffs)
            .map(|(m, c)| m * c)
            .sum()
    }

    /// Partial derivative `D^ν`.
    pub fn derivative(&self, nu: MultiIndex) -> Poly2 {
        let d = self.degree();
        if nu.order() > d {
            return Poly2::zero(self.basis.with_degree(0));
        }
        let out_deg = d - nu.order();
        let mut out = Poly2::zero(self.basis.with_degree(out_deg));
        let factor = self.basis.scale.powi(-(nu.order() as i32));
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let a = MultiIndex::from_index(i);
            if a.x < nu.x || a.y < nu.y {
                continue;
            }
            let w = falling(a.x, nu.x) * falling(a.y, nu.y);
            let target = MultiIndex::new(a.x - nu.x, a.y - nu.y);
            out.coeffs[target.index()] += c * w * factor;
        }
        out
    }

    pub fn dx(&self) -> Poly2 {
        self.derivative(MultiIndex::new(1, 0))
    }

    pub fn dy(&self) -> Poly2 {
        self.derivative(MultiIndex::new(0, 1))
    }

    pub fn laplacian(&self) -> Poly2 {
        let xx = self.derivative(MultiIndex::new(2, 0));
        let yy = self.derivative(MultiIndex::new(0, 2));
        &xx + &yy
    }

    /// `Δ^k f`; the degree drops by `2k` (a constant zero once exhausted).
    pub fn laplacian_power(&self, k: usize) -> Poly2 {
        (0..k).fold(self.clone(), |acc, _| acc.laplacian())
    }

    /// `D^ν f(x)` for all `|ν| <= order`.
    pub fn eval_derivatives(&self, x: [f64; 2], order: usize) -> DerivTable {
        let values = multi_indices(order)
            .into_iter()
            .map(|nu| self.derivative(nu).eval(x))
            .collect();
        DerivTable::new(order, values)
    }

    /// Directional derivative `(n·∇) f` as a polynomial.
    pub fn directional(&self, n: [f64; 2]) -> Poly2 {
        &self.dx().scaled(n[0]) + &self.dy().scaled(n[1])
    }

    /// Trace on the segment `a + s (b - a)`, `s ∈ [0, 1]`.
    pub fn restrict_to_edge(&self, a: [f64; 2], b: [f64; 2]) -> EdgePoly {
        let [u0, v0] = self.basis.local(a);
        let du = (b[0] - a[0]) / self.basis.scale;
        let dv = (b[1] - a[1]) / self.basis.scale;
        let d = self.degree();
        let lu = EdgePoly::new(vec![u0, du]);
        let lv = EdgePoly::new(vec![v0, dv]);
        let mut pu = vec![EdgePoly::constant(1.0)];
        let mut pv = vec![EdgePoly::constant(1.0)];
        for i in 1..=d {
            pu.push(&pu[i - 1] * &lu);
            pv.push(&pv[i - 1] * &lv);
        }
        let mut out = EdgePoly::new(vec![0.0; d + 1]);
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let al = MultiIndex::from_index(i);
            let term = &pu[al.x] * &pv[al.y];
            for (k, t) in term.coeffs.iter().enumerate() {
                out.coeffs[k] += c * t;
            }
        }
        out
    }
}

impl Add for &Poly2 {
    type Output = Poly2;
    fn add(self, rhs: &Poly2) -> Poly2 {
        self.same_frame(rhs);
        let mut out = self.widen(rhs.degree());
        for (o, c) in out.coeffs.iter_mut().zip(&rhs.coeffs) {
            *o += c;
        }
        out
    }
}

impl Sub for &Poly2 {
    type Output = Poly2;
    fn sub(self, rhs: &Poly2) -> Poly2 {
        self + &rhs.scaled(-1.0)
    }
}

impl Mul for &Poly2 {
    type Output = Poly2;
    fn mul(self, rhs: &Poly2) -> Poly2 {
        self.same_frame(rhs);
        let mut out = Poly2::zero(self.basis.with_degree(self.degree() + rhs.degree()));
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let ai = MultiIndex::from_index(i);
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                if b == 0.0 {
                    continue;
                }
                let bj = MultiIndex::from_index(j);
                out.coeffs[MultiIndex::new(ai.x + bj.x, ai.y + bj.y).index()] += a * b;
            }
        }
        out
    }
}

/// Univariate polynomial in the edge parameter `s ∈ [0, 1]` (monomial
/// coefficients, ascending).
#[derive(Clone, Debug, PartialEq)]
pub struct EdgePoly {
    coeffs: Vec<f64>,
}

impl EdgePoly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        if coeffs.is_empty() {
            return Self { coeffs: vec![0.0] };
        }
        Self { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Nominal degree (length of the coefficient vector minus one).
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
    }

    pub fn derivative(&self) -> EdgePoly {
        if self.coeffs.len() <= 1 {
            return EdgePoly::constant(0.0);
        }
        EdgePoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| i as f64 * c)
                .collect(),
        )
    }

    pub fn nth_derivative(&self, k: usize) -> EdgePoly {
        (0..k).fold(self.clone(), |acc, _| acc.derivative())
    }

    /// `∫_0^1 p(s) ds`.
    pub fn integrate_unit(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c / (i + 1) as f64)
            .sum()
    }

    pub fn scaled(&self, c: f64) -> EdgePoly {
        EdgePoly::new(self.coeffs.iter().map(|v| v * c).collect())
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

impl Add for &EdgePoly {
    type Output = EdgePoly;
    fn add(self, rhs: &EdgePoly) -> EdgePoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        EdgePoly::new(
            (0..n)
                .map(|i| {
                    self.coeffs.get(i).copied().unwrap_or(0.0)
                        + rhs.coeffs.get(i).copied().unwrap_or(0.0)
                })
                .collect(),
        )
    }
}

impl Sub for &EdgePoly {
    type Output = EdgePoly;
    fn sub(self, rhs: &EdgePoly) -> EdgePoly {
        self + &rhs.scaled(-1.0)
    }
}

impl Mul for &EdgePoly {
    type Output = EdgePoly;
    fn mul(self, rhs: &EdgePoly) -> EdgePoly {
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        EdgePoly::new(out)
    }
}

/// Shifted Legendre polynomial `L_k(2s - 1)` evaluated at `s`.
pub fn shifted_legendre(k: usize, s: f64) -> f64 {
    let x = 2.0 * s - 1.0;
    let (mut p0, mut p1) = (1.0, x);
    if k == 0 {
        return p0;
    }
    for n in 1..k {
        let p2 = ((2 * n + 1) as f64 * x * p1 - n as f64 * p0) / (n + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Weights `c_ν` (indexed by `ν.y`, `|ν| = a + b`) such that
/// `∂_n^a ∂_τ^b f = Σ c_ν D^ν f`.
pub fn frame_derivative_weights(n: [f64; 2], tau: [f64; 2], a: usize, b: usize) -> Vec<f64> {
    let m = a + b;
    let mut w = vec![0.0; m + 1];
    for i in 0..=a {
        let cn = binomial(a, i) * n[0].powi(i as i32) * n[1].powi((a - i) as i32);
        if cn == 0.0 {
            continue;
        }
        for j in 0..=b {
            let ct = binomial(b, j) * tau[0].powi(j as i32) * tau[1].powi((b - j) as i32);
            // x-order i + j, y-order m - i - j
            w[m - i - j] += cn * ct;
        }
    }
    w
}

/// `∂_n^a ∂_τ^b f(x)` from a Cartesian derivative table.
pub fn directional_derivative(
    table: &DerivTable,
    n: [f64; 2],
    tau: [f64; 2],
    a: usize,
    b: usize,
) -> Result<f64> {
    let m = a + b;
    if m > table.order() {
        return Err(VemError::Contract(format!(
            "frame derivative of order {m} needs a derivative table of order >= {m}, got {}",
            table.order()
        )));
    }
    Ok(frame_derivative_weights(n, tau, a, b)
        .iter()
        .enumerate()
        .map(|(y, c)| c * table.get(MultiIndex::new(m - y, y)))
        .sum())
}

/// Change of basis between the `m + 1` Cartesian derivatives of order `m`
/// (columns, graded-lex: `∂_x^{m-i} ∂_y^i`) and the frame derivatives
/// (rows: `∂_n^{m-i} ∂_τ^i`). With `n = e_x`, `τ = e_y` both maps are the
/// identity.
#[derive(Clone, Debug)]
pub struct FrameMap {
    pub forward: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
}

pub fn inverse_directional_map(n: [f64; 2], tau: [f64; 2], m: usize) -> FrameMap {
    let mut forward = DMatrix::zeros(m + 1, m + 1);
    for i in 0..=m {
        for (y, c) in frame_derivative_weights(n, tau, m - i, i).into_iter().enumerate() {
            forward[(i, y)] = c;
        }
    }
    // The inverse is the same expansion with the roles of the frames swapped:
    // ∂_x = n_x ∂_n + τ_x ∂_τ, ∂_y = n_y ∂_n + τ_y ∂_τ.
    let ex = [n[0], tau[0]];
    let ey = [n[1], tau[1]];
    let mut inverse = DMatrix::zeros(m + 1, m + 1);
    for y in 0..=m {
        let x = m - y;
        // (ex·(∂_n,∂_τ))^x (ey·(∂_n,∂_τ))^y, collect the power of ∂_n
        for i in 0..=x {
            let cx = binomial(x, i) * ex[0].powi(i as i32) * ex[1].powi((x - i) as i32);
            if cx == 0.0 {
                continue;
            }
            for j in 0..=y {
                let cy = binomial(y, j) * ey[0].powi(j as i32) * ey[1].powi((y - j) as i32);
                inverse[(y, m - i - j)] += cx * cy;
            }
        }
    }
    FrameMap { forward, inverse }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn graded_lex_indexing_roundtrips() {
        for i in 0..60 {
            assert_eq!(MultiIndex::from_index(i).index(), i);
        }
        assert_eq!(MultiIndex::from_index(3), MultiIndex::new(2, 0));
        assert_eq!(MultiIndex::from_index(5), MultiIndex::new(0, 2));
        assert!(MultiIndex::new(0, 1) < MultiIndex::new(2, 0));
    }

    #[test]
    fn derivatives_of_x2y() {
        let f = Poly2::from_terms(&[(1.0, (2, 1))]);
        let t = f.eval_derivatives([1.0, 1.0], 2);
        let expect = [1.0, 2.0, 1.0, 2.0, 2.0, 0.0];
        for (v, e) in t.values().iter().zip(expect) {
            assert!(close(*v, e, 1e-14));
        }
    }

    #[test]
    fn constant_monomial_derivatives() {
        let b = ScaledMonomialBasis::new([0.3, -0.2], 0.7, 3);
        let t = b.monomial(MultiIndex::new(0, 0)).eval_derivatives([5.0, 1.0], 1);
        assert_eq!(t.values(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn scaled_monomial_chain_rule() {
        let b = ScaledMonomialBasis::new([0.5, 0.5], 0.5, 2);
        let f = b.monomial(MultiIndex::new(2, 0));
        let t = f.eval_derivatives([1.0, 0.0], 1);
        assert!(close(t.value(), 1.0, 1e-14));
        assert!(close(t.get(MultiIndex::new(1, 0)), 4.0, 1e-14));
    }

    #[test]
    fn basis_at_center() {
        let b = ScaledMonomialBasis::new([0.2, 0.9], 0.3, 4);
        let v = b.eval_all([0.2, 0.9]);
        assert_eq!(v[0], 1.0);
        assert!(v[1..].iter().all(|x| *x == 0.0));
    }

    #[test]
    fn laplacian_powers_of_x2y2() {
        let f = Poly2::from_terms(&[(1.0, (2, 2))]);
        let l1 = f.laplacian_power(1);
        assert_eq!(l1.coeff(MultiIndex::new(2, 0)), 2.0);
        assert_eq!(l1.coeff(MultiIndex::new(0, 2)), 2.0);
        assert_eq!(l1.coeff(MultiIndex::new(1, 1)), 0.0);
        let l2 = f.laplacian_power(2);
        assert_eq!(l2.degree(), 0);
        assert_eq!(l2.coeff(MultiIndex::new(0, 0)), 8.0);
        assert_eq!(f.laplacian_power(3).coeffs(), &[0.0]);
    }

    #[test]
    fn frame_derivatives() {
        let t = DerivTable::new(2, vec![0.0, 3.0, 5.0, 2.0, 2.0, 0.0]);
        let dn = directional_derivative(&t, [1.0, 0.0], [0.0, 1.0], 1, 0).unwrap();
        assert_eq!(dn, 3.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let dnn = directional_derivative(&t, [s, s], [-s, s], 2, 0).unwrap();
        assert!(close(dnn, 0.5 * (2.0 + 4.0 + 0.0), 1e-14));
        let dnt = directional_derivative(&t, [0.0, 1.0], [-1.0, 0.0], 1, 1).unwrap();
        assert!(close(dnt, -2.0, 1e-14));
        assert!(directional_derivative(&t, [1.0, 0.0], [0.0, 1.0], 2, 1).is_err());
    }

    #[test]
    fn frame_map_identity_and_inverse() {
        let m1 = inverse_directional_map([1.0, 0.0], [0.0, 1.0], 1);
        assert_eq!(m1.forward, DMatrix::<f64>::identity(2, 2));
        assert_eq!(m1.inverse, DMatrix::<f64>::identity(2, 2));
        for m in 0..6 {
            let th: f64 = 0.37 + m as f64;
            let n = [th.cos(), th.sin()];
            let tau = [-th.sin(), th.cos()];
            let fm = inverse_directional_map(n, tau, m);
            let prod = &fm.inverse * &fm.forward;
            let eye = DMatrix::<f64>::identity(m + 1, m + 1);
            assert!((prod - eye).amax() < 1e-13);
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let fm = inverse_directional_map([s, s], [-s, s], 2);
        let v = &fm.forward * nalgebra::DVector::from_vec(vec![2.0, 2.0, 0.0]);
        assert!(close(v[0], 3.0, 1e-14));
    }

    #[test]
    fn edge_restriction() {
        let x = Poly2::from_terms(&[(1.0, (1, 0))]);
        assert_eq!(x.restrict_to_edge([0.0, 0.0], [1.0, 0.0]).coeffs(), &[0.0, 1.0]);
        let y = Poly2::from_terms(&[(1.0, (0, 1))]);
        assert!(y.restrict_to_edge([0.0, 0.0], [1.0, 0.0]).max_abs() == 0.0);
        let x2 = Poly2::from_terms(&[(1.0, (2, 0))]);
        assert_eq!(x2.restrict_to_edge([0.0, 0.0], [2.0, 0.0]).coeffs(), &[0.0, 0.0, 4.0]);
    }

    #[test]
    fn legendre_values() {
        assert_eq!(shifted_legendre(0, 0.3), 1.0);
        assert!(close(shifted_legendre(1, 0.25), -0.5, 1e-15));
        assert!(close(shifted_legendre(2, 1.0), 1.0, 1e-15));
        assert!(close(shifted_legendre(3, 0.0), -1.0, 1e-15));
    }
}
