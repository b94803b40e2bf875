//! Functions that can report their partial derivatives at a point.

use crate::poly::{falling, multi_indices, DerivTable, MultiIndex, Poly2};

/// A smooth function of two variables with a derivative oracle.
pub trait SmoothFunction: Sync {
    /// `D^ν f(x)` for all `|ν| <= order`.
    fn derivatives(&self, x: [f64; 2], order: usize) -> DerivTable;

    fn value(&self, x: [f64; 2]) -> f64 {
        self.derivatives(x, 0).value()
    }
}

impl SmoothFunction for Poly2 {
    fn derivatives(&self, x: [f64; 2], order: usize) -> DerivTable {
        let b = self.basis();
        let u = (x[0] - b.center[0]) / b.scale;
        let v = (x[1] - b.center[1]) / b.scale;
        let d = self.degree();
        let mut pu = vec![1.0; d + 1];
        let mut pv = vec![1.0; d + 1];
        for i in 1..=d {
            pu[i] = pu[i - 1] * u;
            pv[i] = pv[i - 1] * v;
        }
        let nus = multi_indices(order);
        let mut out = vec![0.0; nus.len()];
        for (i, &c) in self.coeffs().iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let a = MultiIndex::from_index(i);
            for (slot, nu) in out.iter_mut().zip(&nus) {
                if a.x < nu.x || a.y < nu.y {
                    continue;
                }
                *slot += c
                    * falling(a.x, nu.x)
                    * falling(a.y, nu.y)
                    * pu[a.x - nu.x]
                    * pv[a.y - nu.y]
                    * b.scale.powi(-(nu.order() as i32));
            }
        }
        DerivTable::new(order, out)
    }
}

/// The zero function.
#[derive(Clone, Copy, Debug, Default)]
pub struct Zero;

impl SmoothFunction for Zero {
    fn derivatives(&self, _x: [f64; 2], order: usize) -> DerivTable {
        DerivTable::zeros(order)
    }
}

/// A value-only function; asking for derivatives of positive order panics.
pub struct ValueFn<F>(pub F);

impl<F: Fn([f64; 2]) -> f64 + Sync> SmoothFunction for ValueFn<F> {
    fn derivatives(&self, x: [f64; 2], order: usize) -> DerivTable {
        assert_eq!(order, 0, "ValueFn has no derivative oracle");
        DerivTable::new(0, vec![(self.0)(x)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::ScaledMonomialBasis;

    #[test]
    fn closed_form_matches_symbolic_derivatives() {
        let b = ScaledMonomialBasis::new([0.3, 0.1], 0.6, 4);
        let coeffs: Vec<f64> = (0..b.dim()).map(|i| (i as f64 * 0.37).sin()).collect();
        let p = Poly2::from_coeffs(b, coeffs);
        let x = [0.7, -0.4];
        let fast = SmoothFunction::derivatives(&p, x, 3);
        let slow = p.eval_derivatives(x, 3);
        for (a, b) in fast.values().iter().zip(slow.values()) {
            assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
        }
    }
}
