use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A value together with its time derivative, `real + eps * dual` with
/// `eps^2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DualScalar {
    pub real: f64,
    pub dual: f64,
}

impl DualScalar {
    pub const fn new(real: f64, dual: f64) -> Self {
        Self { real, dual }
    }

    pub const fn constant(real: f64) -> Self {
        Self { real, dual: 0.0 }
    }

    /// First-order extrapolation `real + dual * horizon`.
    pub fn predict(self, horizon: f64) -> f64 {
        self.real + self.dual * horizon
    }
}

impl Add for DualScalar {
    type Output = DualScalar;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.real + rhs.real, self.dual + rhs.dual)
    }
}

impl Sub for DualScalar {
    type Output = DualScalar;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.real - rhs.real, self.dual - rhs.dual)
    }
}

impl Mul for DualScalar {
    type Output = DualScalar;
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.real * rhs.real,
            self.real * rhs.dual + self.dual * rhs.real,
        )
    }
}

impl Mul<f64> for DualScalar {
    type Output = DualScalar;
    fn mul(self, rhs: f64) -> Self {
        Self::new(self.real * rhs, self.dual * rhs)
    }
}

impl Div for DualScalar {
    type Output = DualScalar;
    fn div(self, rhs: Self) -> Self {
        let r = rhs.real;
        Self::new(
            self.real / r,
            (self.dual * r - self.real * rhs.dual) / (r * r),
        )
    }
}

impl Neg for DualScalar {
    type Output = DualScalar;
    fn neg(self) -> Self {
        Self::new(-self.real, -self.dual)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn product_rule_is_exact(a in -1e3f64..1e3, b in -1e3f64..1e3, c in -1e3f64..1e3, d in -1e3f64..1e3) {
            let p = DualScalar::new(a, b) * DualScalar::new(c, d);
            prop_assert_eq!(p.real, a * c);
            prop_assert_eq!(p.dual, a * d + b * c);
        }

        #[test]
        fn quotient_inverts_product(a in 0.5f64..10.0, b in -5.0f64..5.0, c in 0.5f64..10.0, d in -5.0f64..5.0) {
            let x = DualScalar::new(a, b);
            let y = DualScalar::new(c, d);
            let back = (x * y) / y;
            prop_assert!((back.real - a).abs() < 1e-9);
            prop_assert!((back.dual - b).abs() < 1e-9);
        }
    }

    #[test]
    fn predict_extrapolates_linearly() {
        assert_eq!(DualScalar::new(1.5, 0.25).predict(2.0), 2.0);
        assert_eq!(DualScalar::constant(3.0).predict(10.0), 3.0);
    }
}
