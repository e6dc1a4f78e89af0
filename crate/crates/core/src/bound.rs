//! Convergence bounds produced by rate certificates.

use serde::{Deserialize, Serialize};

/// What a bound is indexed by.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Steps,
    Time,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Bound {
    /// `n ↦ (1 − α)^{n/n₀ − 1}`, capped at 1.
    Geometric { alpha: f64, n0: usize },
    /// `t ↦ C_λ e^{−λt}`, capped at 1, valid for `0 < λ < λ_M`.
    Exponential {
        c_lambda: f64,
        lambda: f64,
        lambda_max: f64,
    },
}

impl Bound {
    pub fn axis(&self) -> Axis {
        match self {
            Bound::Geometric { .. } => Axis::Steps,
            Bound::Exponential { .. } => Axis::Time,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Bound::Geometric { alpha, n0 } => {
                if alpha >= 1.0 {
                    return if x / (n0 as f64) - 1.0 > 0.0 {
                        0.0
                    } else {
                        1.0
                    };
                }
                (1.0 - alpha).powf(x / n0 as f64 - 1.0).min(1.0)
            }
            Bound::Exponential {
                c_lambda, lambda, ..
            } => (c_lambda * (-lambda * x).exp()).min(1.0),
        }
    }

    /// `points` samples on `[0, x_max]`.
    pub fn curve(&self, x_max: f64, points: usize) -> Vec<[f64; 2]> {
        let last = points.max(2) - 1;
        (0..=last)
            .map(|i| {
                let x = x_max * i as f64 / last as f64;
                [x, self.value(x)]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_values() {
        let b = Bound::Geometric {
            alpha: 2.0 / 3.0,
            n0: 1,
        };
        assert_eq!(b.value(1.0), 1.0);
        assert!((b.value(3.0) - 1.0 / 9.0).abs() < 1e-15);
        assert_eq!(Bound::Geometric { alpha: 1.0, n0: 1 }.value(2.0), 0.0);
        let curve = Bound::Exponential {
            c_lambda: 3.0,
            lambda: 0.1,
            lambda_max: 0.2,
        }
        .curve(50.0, 256);
        assert_eq!(curve.len(), 256);
        assert!(curve.windows(2).all(|w| w[1][1] <= w[0][1]));
    }
}
