//! Solver parameters shared by the library, the CLI config and the C interface.

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Params {
    /// Residual target for balanced points.
    pub tol: f64,
    /// Cap on balance-map evaluations per search.
    #[serde(deserialize_with = "budget_from_number")]
    pub budget: u64,
    pub eps_fuzz: f64,
    pub eps_sign: f64,
    pub seed: u64,
    /// Envy margins down to `-envy_tol` are accepted.
    pub envy_tol: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            tol: 1e-8,
            budget: 2_000_000,
            eps_fuzz: 1e-3,
            eps_sign: 1e-9,
            seed: 42,
            envy_tol: 1e-6,
        }
    }
}

// Configs usually write the budget as `2e6`.
fn budget_from_number<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<u64, D::Error> {
    let x = f64::deserialize(d)?;
    if !(x >= 1.0) || x > u64::MAX as f64 || x.fract() != 0.0 {
        return Err(serde::de::Error::custom(format!(
            "budget must be a positive integer, got {x}"
        )));
    }
    Ok(x as u64)
}

impl Params {
    /// Checks the parameters for a configuration space with `pieces` pieces.
    pub fn validate(&self, pieces: usize) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Invalid(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("tol", self.tol)?;
        positive("eps_fuzz", self.eps_fuzz)?;
        positive("envy_tol", self.envy_tol)?;
        if !(self.eps_sign >= 0.0) {
            return Err(Error::Invalid(format!(
                "eps_sign must be nonnegative, got {}",
                self.eps_sign
            )));
        }
        if self.budget == 0 {
            return Err(Error::Invalid("budget must be positive".into()));
        }
        let bound = self.eps_fuzz / (2.0 * pieces as f64);
        if self.eps_sign >= bound {
            return Err(Error::Invalid(format!(
                "eps_sign = {} must stay below eps_fuzz / (2p) = {bound}",
                self.eps_sign
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_shape() {
        let p: Params =
            serde_json::from_str(r#"{"tol":1e-8,"budget":2e6,"eps_fuzz":1e-3,"eps_sign":1e-9,"seed":42}"#).unwrap();
        assert_eq!(p, Params::default());
        let partial: Params = serde_json::from_str(r#"{"seed":7}"#).unwrap();
        assert_eq!(partial.seed, 7);
        assert_eq!(partial.budget, 2_000_000);
        assert!(serde_json::from_str::<Params>(r#"{"budget":1.5}"#).is_err());
        assert!(serde_json::from_str::<Params>(r#"{"budget":-3}"#).is_err());
    }

    #[test]
    fn validation() {
        let p = Params::default();
        assert!(p.validate(5).is_ok());
        assert!(Params {
            eps_sign: 1e-3,
            ..p.clone()
        }
        .validate(3)
        .is_err());
        assert!(Params { tol: 0.0, ..p.clone() }.validate(3).is_err());
        assert!(Params {
            eps_fuzz: f64::NAN,
            ..p
        }
        .validate(3)
        .is_err());
    }
}
