//! Manufactured solutions on the unit square.

use std::f64::consts::PI;

use crate::element::ElementConfig;
use crate::error::{Result, VemError};
use crate::function::{SmoothFunction, Zero};
use crate::mesh::Domain;
use crate::poly::{binomial, multi_indices, DerivTable, MultiIndex, Poly2};

/// Exact solution and forcing of `(-Δ)^{p_eff} u = f` with homogeneous
/// clamped boundary data on the unit square.
pub struct ManufacturedCase {
    pub name: String,
    pub config: ElementConfig,
    pub domain: Domain,
    pub exact: Box<dyn SmoothFunction + Send>,
    pub forcing: Box<dyn SmoothFunction + Send>,
    /// Degree of `exact` when it is a polynomial.
    pub exact_degree: Option<usize>,
}

impl std::fmt::Debug for ManufacturedCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ManufacturedCase")
            .field("name", &self.name)
            .field("config", &self.config)
            .field("exact_degree", &self.exact_degree)
            .finish()
    }
}

pub const BUILTIN_CASES: [&str; 3] = ["poly-bubble", "trig", "zero"];

/// `(x(1-x) y(1-y))^m` in unscaled monomials.
pub fn bubble(m: usize) -> Poly2 {
    let bx = Poly2::from_terms(&[(1.0, (1, 0)), (-1.0, (2, 0))]);
    let by = Poly2::from_terms(&[(1.0, (0, 1)), (-1.0, (0, 2))]);
    let base = &bx * &by;
    (0..m).fold(Poly2::from_terms(&[(1.0, (0, 0))]), |acc, _| &acc * &base)
}

fn sign(p: usize) -> f64 {
    if p % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `(-Δ)^p q` for a polynomial `q`.
pub fn polyharmonic_of_poly(q: &Poly2, p: usize) -> Poly2 {
    q.laplacian_power(p).scaled(sign(p))
}

impl ManufacturedCase {
    /// Case with a polynomial exact solution; boundary data is not checked.
    pub fn from_poly(name: &str, config: ElementConfig, q: Poly2) -> Self {
        let f = polyharmonic_of_poly(&q, config.p_eff());
        Self {
            name: name.to_string(),
            config,
            domain: Domain::UNIT_SQUARE,
            exact_degree: Some(q.degree()),
            exact: Box::new(q),
            forcing: Box::new(f),
        }
    }

    /// Largest `|∂_n^j u|`, `j < p_eff`, over sample points of the boundary.
    pub fn boundary_defect(&self, samples: usize) -> f64 {
        let pe = self.config.p_eff();
        if pe == 0 {
            return 0.0;
        }
        let [x0, y0] = self.domain.min;
        let [x1, y1] = self.domain.max;
        let mut worst = 0.0_f64;
        for i in 0..=samples {
            let s = i as f64 / samples as f64;
            let sides = [
                ([x0 + s * (x1 - x0), y0], false),
                ([x0 + s * (x1 - x0), y1], false),
                ([x0, y0 + s * (y1 - y0)], true),
                ([x1, y0 + s * (y1 - y0)], true),
            ];
            for (x, vertical) in sides {
                let d = self.exact.derivatives(x, pe - 1);
                for j in 0..pe {
                    let nu = if vertical { MultiIndex::new(j, 0) } else { MultiIndex::new(0, j) };
                    worst = worst.max(d.get(nu).abs());
                }
            }
        }
        worst
    }
}

/// One of the named cases for the configuration `(p, r, t)`:
/// `poly-bubble` is `(x(1-x)y(1-y))^{p_eff}`, `trig` is
/// `(sin πx sin πy)^{p_eff+1}` and `zero` is `u = 0`.
pub fn builtin_case(p: usize, r: usize, t: usize, name: &str) -> Result<ManufacturedCase> {
    let config = ElementConfig::new(p, r, t)?;
    let pe = config.p_eff();
    let case = match name {
        "poly-bubble" => ManufacturedCase::from_poly(name, config, bubble(pe)),
        "trig" => {
            let u = SineProduct { power: pe + 1 };
            ManufacturedCase {
                name: name.to_string(),
                config,
                domain: Domain::UNIT_SQUARE,
                exact: Box::new(u),
                forcing: Box::new(Polyharmonic { inner: u, p: pe }),
                exact_degree: None,
            }
        }
        "zero" => ManufacturedCase {
            name: name.to_string(),
            config,
            domain: Domain::UNIT_SQUARE,
            exact: Box::new(Zero),
            forcing: Box::new(Zero),
            exact_degree: Some(0),
        },
        other => {
            return Err(VemError::Config(format!(
                "unknown case '{other}' (expected one of {})",
                BUILTIN_CASES.join(", ")
            )))
        }
    };
    let defect = case.boundary_defect(64);
    if defect > 1e-10 {
        return Err(VemError::Contract(format!(
            "case '{name}' violates the boundary conditions (defect {defect:.3e})"
        )));
    }
    Ok(case)
}

/// `(sin πx sin πy)^power`.
#[derive(Clone, Copy, Debug)]
pub struct SineProduct {
    pub power: usize,
}

/// Derivatives `0..=order` of `sin(πx)^m` at `x`, from truncated Taylor
/// series.
pub fn sine_power_derivatives(m: usize, x: f64, order: usize) -> Vec<f64> {
    let mut fact = vec![1.0; order + 1];
    for k in 1..=order {
        fact[k] = fact[k - 1] * k as f64;
    }
    let sine: Vec<f64> = (0..=order)
        .map(|k| PI.powi(k as i32) * (PI * x + k as f64 * PI / 2.0).sin() / fact[k])
        .collect();
    let mut acc = vec![0.0; order + 1];
    acc[0] = 1.0;
    for _ in 0..m {
        let mut next = vec![0.0; order + 1];
        for (i, a) in acc.iter().enumerate() {
            for (j, s) in sine.iter().enumerate().take(order + 1 - i) {
                next[i + j] += a * s;
            }
        }
        acc = next;
    }
    acc.iter().zip(&fact).map(|(c, f)| c * f).collect()
}

impl SmoothFunction for SineProduct {
    fn derivatives(&self, x: [f64; 2], order: usize) -> DerivTable {
        let dx = sine_power_derivatives(self.power, x[0], order);
        let dy = sine_power_derivatives(self.power, x[1], order);
        let values = multi_indices(order).iter().map(|nu| dx[nu.x] * dy[nu.y]).collect();
        DerivTable::new(order, values)
    }
}

/// `(-Δ)^p` applied to a function with a derivative oracle.
#[derive(Clone, Copy, Debug)]
pub struct Polyharmonic<F> {
    pub inner: F,
    pub p: usize,
}

impl<F: SmoothFunction> SmoothFunction for Polyharmonic<F> {
    fn derivatives(&self, x: [f64; 2], order: usize) -> DerivTable {
        let p = self.p;
        let d = self.inner.derivatives(x, order + 2 * p);
        let values = multi_indices(order)
            .iter()
            .map(|nu| {
                let sum: f64 = (0..=p)
                    .map(|k| binomial(p, k) * d.get(MultiIndex::new(nu.x + 2 * k, nu.y + 2 * (p - k))))
                    .sum();
                sign(p) * sum
            })
            .collect();
        DerivTable::new(order, values)
    }
}
