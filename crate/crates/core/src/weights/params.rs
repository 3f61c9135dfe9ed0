use super::WeightError;
use serde::{Deserialize, Serialize};

/// The parameters `(a, A, B, p, γ)` shared by every weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightParams {
    /// `a > 1` in `log(a/|x|)`.
    #[serde(rename = "a")]
    pub scale: f64,
    /// Log exponent of the integrability weight.
    #[serde(rename = "A")]
    pub mass_exponent: f64,
    /// Log exponent of the gradient weight, `B < 1`.
    #[serde(rename = "B")]
    pub gradient_exponent: f64,
    /// Integrability exponent `p ≥ 2`.
    #[serde(rename = "p")]
    pub power: f64,
    /// Far-field exponent `γ ∈ (0, 2)`.
    #[serde(rename = "gamma")]
    pub far_field_exponent: f64,
}

impl Default for WeightParams {
    fn default() -> Self {
        Self { scale: std::f64::consts::E, mass_exponent: 2.0, gradient_exponent: 0.0, power: 2.0, far_field_exponent: 1.0 }
    }
}

/// The threshold `1 + (p/2)(1 − B)` of the log exponent.
pub fn critical_exponent(power: f64, gradient_exponent: f64) -> f64 {
    1.0 + 0.5 * power * (1.0 - gradient_exponent)
}

impl WeightParams {
    pub fn validate(&self) -> Result<(), WeightError> {
        check_scale(self.scale)?;
        let bad = |msg: String| Err(WeightError::InvalidParameter(msg));
        if !(self.gradient_exponent < 1.0) {
            return bad(format!("B must be < 1, got {}", self.gradient_exponent));
        }
        if !(self.power >= 2.0) || !self.power.is_finite() {
            return bad(format!("p must be ≥ 2, got {}", self.power));
        }
        if !(self.far_field_exponent > 0.0 && self.far_field_exponent < 2.0) {
            return bad(format!("gamma must lie in (0, 2), got {}", self.far_field_exponent));
        }
        if !self.mass_exponent.is_finite() {
            return bad("A must be finite".into());
        }
        Ok(())
    }

    pub fn critical_mass_exponent(&self) -> f64 {
        critical_exponent(self.power, self.gradient_exponent)
    }

    pub fn is_supercritical(&self) -> bool {
        self.mass_exponent >= self.critical_mass_exponent()
    }

    /// Copy with the log exponent shifted relative to its critical value.
    pub fn with_mass_offset(mut self, offset: f64) -> Self {
        self.mass_exponent = self.critical_mass_exponent() + offset;
        self
    }
}

pub(crate) fn check_scale(a: f64) -> Result<(), WeightError> {
    if a > 1.0 && a.is_finite() {
        Ok(())
    } else {
        Err(WeightError::InvalidParameter(format!("a must be a finite number > 1, got {a}")))
    }
}
