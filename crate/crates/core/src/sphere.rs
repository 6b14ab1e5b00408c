//! Quadrature on the unit sphere and the low-order angular factors used by
//! anisotropic form factors and test functions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::quadrature::gauss_legendre;

/// Points `(x, y, z)` with weights summing to `4π`.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    /// 26-point Lebedev rule, exact for polynomials of degree 7.
    pub fn lebedev26() -> Self {
        let mut points = Vec::with_capacity(26);
        let mut weights = Vec::with_capacity(26);
        let (w1, w2, w3) = (1.0 / 21.0, 4.0 / 105.0, 9.0 / 280.0);
        for axis in 0..3 {
            for s in [1.0, -1.0] {
                let mut p = [0.0; 3];
                p[axis] = s;
                points.push(p);
                weights.push(w1);
            }
        }
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            for si in [1.0, -1.0] {
                for sj in [1.0, -1.0] {
                    let mut p = [0.0; 3];
                    p[i] = si * r;
                    p[j] = sj * r;
                    points.push(p);
                    weights.push(w2);
                }
            }
        }
        let c = 1.0 / 3f64.sqrt();
        for sx in [1.0, -1.0] {
            for sy in [1.0, -1.0] {
                for sz in [1.0, -1.0] {
                    points.push([sx * c, sy * c, sz * c]);
                    weights.push(w3);
                }
            }
        }
        let weights = weights.into_iter().map(|w| w * 4.0 * PI).collect();
        SphereRule { points, weights }
    }

    /// Gauss–Legendre in `cos θ` times the uniform rule in `φ`:
    /// `n` polar and `2n` azimuthal nodes, exact to degree `2n - 1`.
    pub fn product(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        let m = 2 * n;
        let mut points = Vec::with_capacity(n * m);
        let mut weights = Vec::with_capacity(n * m);
        for (ct, wt) in x.iter().zip(&w) {
            let st = (1.0 - ct * ct).max(0.0).sqrt();
            for j in 0..m {
                let phi = 2.0 * PI * (j as f64 + 0.5) / m as f64;
                points.push([st * phi.cos(), st * phi.sin(), *ct]);
                weights.push(wt * 2.0 * PI / m as f64);
            }
        }
        SphereRule { points, weights }
    }

    /// `order = 0` or `26` selects the Lebedev rule, anything else a product
    /// rule with `order` polar nodes.
    pub fn with_order(order: usize) -> Self {
        match order {
            0 | 26 => Self::lebedev26(),
            n => Self::product(n),
        }
    }

    pub fn integrate<F: FnMut([f64; 3]) -> f64>(&self, mut f: F) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(*p)).sum()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Real angular factor `A(Σ) = 1 + a1·cosθ + a2·P₂(cosθ)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Angular {
    #[serde(default)]
    pub a1: f64,
    #[serde(default)]
    pub a2: f64,
}

impl Angular {
    pub const ISOTROPIC: Angular = Angular { a1: 0.0, a2: 0.0 };

    pub fn is_isotropic(&self) -> bool {
        self.a1 == 0.0 && self.a2 == 0.0
    }

    pub fn value(&self, cos_theta: f64) -> f64 {
        let c = cos_theta;
        1.0 + self.a1 * c + self.a2 * 0.5 * (3.0 * c * c - 1.0)
    }

    pub fn at(&self, point: [f64; 3]) -> f64 {
        self.value(point[2])
    }

    /// `∫_{S²} A(Σ) B(Σ) dΣ` from Legendre orthogonality.
    pub fn overlap(&self, other: &Angular) -> f64 {
        4.0 * PI * (1.0 + self.a1 * other.a1 / 3.0 + self.a2 * other.a2 / 5.0)
    }

    pub fn norm_sq(&self) -> f64 {
        self.overlap(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn monomial(p: [f64; 3], e: [i32; 3]) -> f64 {
        p[0].powi(e[0]) * p[1].powi(e[1]) * p[2].powi(e[2])
    }

    // ∫ x^a y^b z^c dΣ for even exponents: 2Γ((a+1)/2)Γ((b+1)/2)Γ((c+1)/2)/Γ((a+b+c+3)/2)
    fn exact_monomial(e: [i32; 3]) -> f64 {
        if e.iter().any(|k| k % 2 != 0) {
            return 0.0;
        }
        fn dfact(n: i32) -> f64 {
            (1..=n).rev().step_by(2).map(|k| k as f64).product::<f64>()
        }
        let num = dfact(e[0] - 1) * dfact(e[1] - 1) * dfact(e[2] - 1);
        let den = dfact(e[0] + e[1] + e[2] + 1);
        4.0 * PI * num / den
    }

    #[test]
    fn lebedev_exact_to_degree_seven() {
        let rule = SphereRule::lebedev26();
        assert_eq!(rule.len(), 26);
        for a in 0..=7 {
            for b in 0..=(7 - a) {
                for c in 0..=(7 - a - b) {
                    let e = [a, b, c];
                    let q = rule.integrate(|p| monomial(p, e));
                    assert!((q - exact_monomial(e)).abs() < 1e-13, "{e:?}: {q}");
                }
            }
        }
    }

    #[test]
    fn product_rule_exact_for_low_degree() {
        let rule = SphereRule::product(6);
        for e in [[0, 0, 0], [2, 0, 0], [2, 2, 2], [0, 4, 6], [4, 0, 2]] {
            let q = rule.integrate(|p| monomial(p, e));
            assert!((q - exact_monomial(e)).abs() < 1e-12, "{e:?}");
        }
    }

    #[test]
    fn angular_overlap_matches_quadrature() {
        let a = Angular { a1: 0.3, a2: -0.7 };
        let b = Angular { a1: -1.2, a2: 0.4 };
        let rule = SphereRule::lebedev26();
        let q = rule.integrate(|p| a.at(p) * b.at(p));
        assert!((q - a.overlap(&b)).abs() < 1e-12);
    }
}
