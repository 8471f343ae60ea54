use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible argument of a function that needs a positive input.
pub const DOMAIN_MARGIN: f64 = 1e-6;

/// Scalar component functions with closed-form first and second derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CatalogFn {
    /// `z^theta`
    Power { theta: f64 },
    /// `z^(1-gamma) / (1-gamma)`, `gamma > 0`, `gamma != 1`
    Crra { gamma: f64 },
    /// `-exp(-eta z)`, `eta > 0`
    Exp { eta: f64 },
    /// `-(z-c)^2`
    Quadratic { c: f64 },
    /// `ln z`
    Log,
}

impl CatalogFn {
    pub fn value(&self, z: f64) -> f64 {
        match *self {
            CatalogFn::Power { theta } => z.powf(theta),
            CatalogFn::Crra { gamma } => z.powf(1.0 - gamma) / (1.0 - gamma),
            CatalogFn::Exp { eta } => -(-eta * z).exp(),
            CatalogFn::Quadratic { c } => -(z - c).powi(2),
            CatalogFn::Log => z.ln(),
        }
    }

    pub fn d1(&self, z: f64) -> f64 {
        match *self {
            CatalogFn::Power { theta } => theta * z.powf(theta - 1.0),
            CatalogFn::Crra { gamma } => z.powf(-gamma),
            CatalogFn::Exp { eta } => eta * (-eta * z).exp(),
            CatalogFn::Quadratic { c } => -2.0 * (z - c),
            CatalogFn::Log => 1.0 / z,
        }
    }

    pub fn d2(&self, z: f64) -> f64 {
        match *self {
            CatalogFn::Power { theta } => theta * (theta - 1.0) * z.powf(theta - 2.0),
            CatalogFn::Crra { gamma } => -gamma * z.powf(-gamma - 1.0),
            CatalogFn::Exp { eta } => -eta * eta * (-eta * z).exp(),
            CatalogFn::Quadratic { .. } => -2.0,
            CatalogFn::Log => -1.0 / (z * z),
        }
    }

    pub fn needs_positive_argument(&self) -> bool {
        matches!(
            self,
            CatalogFn::Power { .. } | CatalogFn::Crra { .. } | CatalogFn::Log
        )
    }

    pub fn is_concave(&self) -> bool {
        match *self {
            CatalogFn::Power { theta } => (0.0..=1.0).contains(&theta),
            _ => true,
        }
    }

    /// Reject parameters outside the declared ranges; `name` is used in the error.
    pub fn validate(&self, name: &str) -> Result<()> {
        let bad = |what: &str| Err(Error::domain(name, what.to_string()));
        match *self {
            CatalogFn::Power { theta } if !theta.is_finite() => bad("theta must be finite"),
            CatalogFn::Crra { gamma } if !(gamma > 0.0 && gamma.is_finite()) => {
                bad("gamma must be positive")
            }
            CatalogFn::Crra { gamma: 1.0 } => bad("gamma = 1 is the log case; use kind \"log\""),
            CatalogFn::Exp { eta } if !(eta > 0.0 && eta.is_finite()) => {
                bad("eta must be positive")
            }
            CatalogFn::Quadratic { c } if !c.is_finite() => bad("c must be finite"),
            _ => Ok(()),
        }
    }

    /// Check that every argument in `[lo, hi]` is admissible.
    pub fn check_range(&self, name: &str, lo: f64, hi: f64) -> Result<()> {
        self.check_range_above(name, lo, hi, DOMAIN_MARGIN)
    }

    /// As [`CatalogFn::check_range`] with an explicit positivity floor, for
    /// arguments whose margin is already built into the feasible set.
    pub fn check_range_above(&self, name: &str, lo: f64, hi: f64, floor: f64) -> Result<()> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::domain(
                name,
                format!("argument range [{lo}, {hi}] is not finite"),
            ));
        }
        if self.needs_positive_argument() && !(lo >= floor && lo > 0.0) {
            return Err(Error::domain(
                name,
                format!("argument reaches {lo}, below the positivity margin {floor}"),
            ));
        }
        Ok(())
    }

    /// Exponent `g` with `z d1(z) = const * z^(1-g)`, when the derivative is a
    /// power law.
    pub fn marginal_exponent(&self) -> Option<f64> {
        match *self {
            CatalogFn::Crra { gamma } => Some(gamma),
            CatalogFn::Log => Some(1.0),
            CatalogFn::Power { theta } if theta != 0.0 => Some(1.0 - theta),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd1(f: &CatalogFn, z: f64) -> f64 {
        let h = 1e-6 * (1.0 + z.abs());
        (f.value(z + h) - f.value(z - h)) / (2.0 * h)
    }

    fn fd2(f: &CatalogFn, z: f64) -> f64 {
        let h = 1e-4 * (1.0 + z.abs());
        (f.d1(z + h) - f.d1(z - h)) / (2.0 * h)
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let fns = [
            CatalogFn::Power { theta: 0.5 },
            CatalogFn::Power { theta: 2.5 },
            CatalogFn::Crra { gamma: 2.0 },
            CatalogFn::Crra { gamma: 0.3 },
            CatalogFn::Exp { eta: 1.5 },
            CatalogFn::Quadratic { c: 0.3 },
            CatalogFn::Log,
        ];
        for f in fns {
            for z in [0.2, 1.0, 3.7] {
                assert!(
                    (f.d1(z) - fd1(&f, z)).abs() < 1e-6 * (1.0 + f.d1(z).abs()),
                    "{f:?} d1 at {z}"
                );
                assert!(
                    (f.d2(z) - fd2(&f, z)).abs() < 1e-5 * (1.0 + f.d2(z).abs()),
                    "{f:?} d2 at {z}"
                );
            }
        }
    }

    #[test]
    fn json_shape() {
        let f: CatalogFn = serde_json::from_str(r#"{"kind":"crra","gamma":2}"#).unwrap();
        assert_eq!(f, CatalogFn::Crra { gamma: 2.0 });
        let f: CatalogFn = serde_json::from_str(r#"{"kind":"log"}"#).unwrap();
        assert_eq!(f, CatalogFn::Log);
        assert!(serde_json::from_str::<CatalogFn>(r#"{"kind":"cubic"}"#).is_err());
    }

    #[test]
    fn validation() {
        assert!(CatalogFn::Crra { gamma: 1.0 }.validate("u").is_err());
        assert!(CatalogFn::Exp { eta: -1.0 }.validate("w").is_err());
        assert!(CatalogFn::Log.check_range("u3", 0.0, 1.0).is_err());
        assert!(CatalogFn::Quadratic { c: 0.0 }
            .check_range("v", -5.0, 1.0)
            .is_ok());
    }
}
