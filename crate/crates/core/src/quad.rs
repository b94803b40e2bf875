//! Gauss–Legendre edge rules and polygon rules built on an ear-clipping
//! triangulation with collapsed-coordinate triangle rules.

use crate::error::{Result, VemError};

/// Points and weights of a quadrature rule together with its exactness degree.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn([f64; 2]) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(*x))
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

/// `n`-point Gauss–Legendre rule on `[0, 1]`, exact for degree `2n - 1`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 1..n {
                let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            x = 0.0;
            dp = 1.0;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// Number of Gauss points needed for exactness `degree`.
pub fn gauss_points_for(degree: usize) -> usize {
    (degree + 2) / 2
}

/// Gauss–Legendre rule on the segment `a → b`; weights sum to its length.
pub fn edge_rule(a: [f64; 2], b: [f64; 2], degree: usize) -> QuadratureRule {
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let (s, w) = gauss_legendre_unit(gauss_points_for(degree));
    QuadratureRule {
        points: s
            .iter()
            .map(|&t| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])])
            .collect(),
        weights: w.iter().map(|w| w * len).collect(),
        degree,
    }
}

/// Collapsed (Duffy) Gauss product rule on a triangle.
pub fn triangle_rule(a: [f64; 2], b: [f64; 2], c: [f64; 2], degree: usize) -> QuadratureRule {
    let twice_area = ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs();
    // the Jacobian (1 - u) adds one degree in u
    let (gu, wu) = gauss_legendre_unit(gauss_points_for(degree + 1));
    let (gv, wv) = gauss_legendre_unit(gauss_points_for(degree));
    let mut points = Vec::with_capacity(gu.len() * gv.len());
    let mut weights = Vec::with_capacity(gu.len() * gv.len());
    for (u, wu) in gu.iter().zip(&wu) {
        for (v, wv) in gv.iter().zip(&wv) {
            let xi = *u;
            let eta = v * (1.0 - u);
            points.push([
                a[0] + xi * (b[0] - a[0]) + eta * (c[0] - a[0]),
                a[1] + xi * (b[1] - a[1]) + eta * (c[1] - a[1]),
            ]);
            weights.push(wu * wv * (1.0 - u) * twice_area);
        }
    }
    QuadratureRule {
        points,
        weights,
        degree,
    }
}

pub(crate) fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

pub fn signed_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    0.5 * (0..n)
        .map(|i| {
            let (p, q) = (poly[i], poly[(i + 1) % n]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
}

fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on_seg = |a: [f64; 2], b: [f64; 2], p: [f64; 2], d: f64| {
        d == 0.0
            && p[0] >= a[0].min(b[0])
            && p[0] <= a[0].max(b[0])
            && p[1] >= a[1].min(b[1])
            && p[1] <= a[1].max(b[1])
    };
    on_seg(q1, q2, p1, d1) || on_seg(q1, q2, p2, d2) || on_seg(p1, p2, q1, d3) || on_seg(p1, p2, q2, d4)
}

/// Checks that the closed polyline is simple: non-adjacent edges never touch
/// and no vertex is repeated.
pub fn is_simple(poly: &[[f64; 2]]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if poly[i] == poly[j] {
                return false;
            }
        }
    }
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        for j in (i + 1)..n {
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

fn point_in_triangle(p: [f64; 2], a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> bool {
    cross(a, b, p) >= 0.0 && cross(b, c, p) >= 0.0 && cross(c, a, p) >= 0.0
}

/// Ear-clipping triangulation of a simple counterclockwise polygon. Returns
/// vertex index triples.
pub fn triangulate(poly: &[[f64; 2]]) -> Result<Vec<[usize; 3]>> {
    if !is_simple(poly) {
        return Err(VemError::InvalidMesh("polygon is not simple".into()));
    }
    if signed_area(poly) <= 0.0 {
        return Err(VemError::InvalidMesh("polygon is not counterclockwise".into()));
    }
    let mut idx: Vec<usize> = (0..poly.len()).collect();
    let mut tris = Vec::with_capacity(poly.len() - 2);
    let scale = poly
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    let eps = 1e-14 * scale * scale;
    while idx.len() > 3 {
        let m = idx.len();
        let mut clipped = false;
        // prefer strictly convex ears; accept degenerate (collinear) ones last
        for strict in [true, false] {
            for k in 0..m {
                let (ia, ib, ic) = (idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]);
                let (a, b, c) = (poly[ia], poly[ib], poly[ic]);
                let turn = cross(a, b, c);
                if (strict && turn <= eps) || (!strict && turn < -eps) {
                    continue;
                }
                let blocked = idx.iter().any(|&j| {
                    j != ia && j != ib && j != ic && point_in_triangle(poly[j], a, b, c)
                });
                if blocked && strict {
                    continue;
                }
                if blocked && turn > eps {
                    continue;
                }
                tris.push([ia, ib, ic]);
                idx.remove(k);
                clipped = true;
                break;
            }
            if clipped {
                break;
            }
        }
        if !clipped {
            return Err(VemError::InvalidMesh("ear clipping failed".into()));
        }
    }
    tris.push([idx[0], idx[1], idx[2]]);
    Ok(tris)
}

/// Quadrature rule exact for bivariate polynomials of total degree `degree`
/// on a simple counterclockwise polygon.
pub fn polygon_rule(poly: &[[f64; 2]], degree: usize) -> Result<QuadratureRule> {
    let tris = triangulate(poly)?;
    let mut rule = QuadratureRule {
        points: Vec::new(),
        weights: Vec::new(),
        degree,
    };
    for [a, b, c] in tris {
        let t = triangle_rule(poly[a], poly[b], poly[c], degree);
        rule.points.extend(t.points);
        rule.weights.extend(t.weights);
    }
    Ok(rule)
}
