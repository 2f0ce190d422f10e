//! Moduli of uniform convexity. A modulus `eta(r, eps)` certifies that the
//! midpoint of two points that are `eps * r` apart inside a ball of radius
//! `r` moves toward the center by the factor `1 - eta(r, eps)`. A modulus is
//! *monotone* when it does not increase with `r`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum ModulusForm {
    /// The CAT(0) modulus `eta(r, eps) = eps^2 / 8`, independent of `r` and
    /// quadratic in `eps`. Factors as `eps * (eps / 8)`.
    Cat0Quadratic,
    /// `eta(r, eps) = coeff * eps^exponent`, independent of `r`.
    Power { coeff: f64, exponent: f64 },
    /// Factored form: `eta(r, eps) = eps * eta_tilde(r, eps)` with
    /// `eta_tilde(r, eps) = coeff * eps^exponent` (nondecreasing in `eps`
    /// for `exponent >= 0`).
    FactoredPower { coeff: f64, exponent: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ModulusDescriptor {
    #[serde(flatten)]
    pub form: ModulusForm,
    /// Claim that the modulus does not increase with `r`; audited by the
    /// verification harness.
    #[serde(default = "default_true")]
    pub monotone_in_r: bool,
}

fn default_true() -> bool {
    true
}

impl ModulusDescriptor {
    pub fn cat0() -> Self {
        ModulusDescriptor {
            form: ModulusForm::Cat0Quadratic,
            monotone_in_r: true,
        }
    }

    /// `eta(r, eps)`; must land in (0, 1] for admissible inputs.
    pub fn eta(&self, _r: f64, eps: f64) -> Result<f64> {
        let v = match &self.form {
            ModulusForm::Cat0Quadratic => eps * eps / 8.0,
            ModulusForm::Power { coeff, exponent } => coeff * eps.powf(*exponent),
            ModulusForm::FactoredPower { coeff, exponent } => eps * coeff * eps.powf(*exponent),
        };
        if !(v > 0.0 && v <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "modulus value {v} outside (0, 1] at eps = {eps}"
            )));
        }
        Ok(v)
    }

    /// The factored part `eta_tilde` with `eta = eps * eta_tilde`, when the
    /// descriptor carries one.
    pub fn eta_tilde(&self, _r: f64, eps: f64) -> Option<f64> {
        match &self.form {
            ModulusForm::Cat0Quadratic => Some(eps / 8.0),
            ModulusForm::FactoredPower { coeff, exponent } => Some(coeff * eps.powf(*exponent)),
            ModulusForm::Power { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cat0_modulus_values() {
        let m = ModulusDescriptor::cat0();
        assert!((m.eta(2.0, 0.25).unwrap() - 0.0078125).abs() < 1e-18);
        assert!((m.eta_tilde(2.0, 0.25).unwrap() - 0.03125).abs() < 1e-18);
    }

    #[test]
    fn out_of_range_modulus_rejected() {
        let m = ModulusDescriptor {
            form: ModulusForm::Power {
                coeff: 2.0,
                exponent: 0.0,
            },
            monotone_in_r: true,
        };
        assert!(m.eta(1.0, 1.0).is_err());
    }

    #[test]
    fn descriptor_serialization() {
        let m = ModulusDescriptor::cat0();
        let json = serde_json::to_string(&m).unwrap();
        let back: ModulusDescriptor = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }
}
