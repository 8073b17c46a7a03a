use serde::{Deserialize, Serialize};

use super::{q_minus, q_plus, rho_bounds};
use crate::constants::OscillationParams;
use crate::error::{Error, Result};

/// The free function rho(t) of the model, chosen from a small family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RhoProfile {
    Zero,
    /// rho = E_S Q_-: saturates the upper short-lived bound.
    SaturateUpperShort,
    /// rho = -E_S Q_+: saturates the lower short-lived bound.
    SaturateLowerShort,
    Tabulated(RhoTable),
}

/// Knots (t in seconds, rho), linearly interpolated. Evaluation outside the
/// knot range is an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoTable {
    knots: Vec<(f64, f64)>,
}

impl RhoTable {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidRhoTable("no knots".into()));
        }
        for w in knots.windows(2) {
            if w[1].0.partial_cmp(&w[0].0) != Some(std::cmp::Ordering::Greater) {
                return Err(Error::InvalidRhoTable(format!(
                    "knot times must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if knots
            .iter()
            .any(|&(t, r)| !t.is_finite() || t < 0.0 || !r.is_finite())
        {
            return Err(Error::InvalidRhoTable(
                "knots must be finite with non-negative times".into(),
            ));
        }
        Ok(RhoTable { knots })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn interpolate(&self, t: f64) -> Result<f64> {
        let (start, end) = (self.knots[0].0, self.knots[self.knots.len() - 1].0);
        if !(t >= start && t <= end) {
            return Err(Error::RhoOutOfRange { t, start, end });
        }
        let idx = self.knots.partition_point(|k| k.0 <= t);
        if idx == 0 {
            return Ok(self.knots[0].1);
        }
        let (t0, r0) = self.knots[idx - 1];
        if idx == self.knots.len() || t == t0 {
            return Ok(r0);
        }
        let (t1, r1) = self.knots[idx];
        let w = (t - t0) / (t1 - t0);
        Ok(r0 + w * (r1 - r0))
    }
}

/// Admissibility slack: relative to the width of the allowed band, so the
/// saturating profiles pass despite rounding in the bound expressions.
const BOUND_SLACK: f64 = 1e-12;

pub(crate) fn scaled_survival(gamma: f64, t: f64, log_scale: f64) -> f64 {
    (-gamma * t + log_scale).exp()
}

impl RhoProfile {
    fn raw(&self, params: &OscillationParams, t: f64) -> Result<f64> {
        Ok(match self {
            RhoProfile::Zero => 0.0,
            RhoProfile::SaturateUpperShort => {
                scaled_survival(params.gamma_s, t, 0.0) * q_minus(params, t)
            }
            RhoProfile::SaturateLowerShort => {
                -(scaled_survival(params.gamma_s, t, 0.0) * q_plus(params, t))
            }
            RhoProfile::Tabulated(table) => table.interpolate(t)?,
        })
    }

    /// rho(t), rejected with the offending time if it leaves the bounds.
    pub fn value(&self, params: &OscillationParams, t: f64) -> Result<f64> {
        let rho = self.raw(params, t)?;
        let (lower, upper) = rho_bounds(params, t);
        let slack = BOUND_SLACK * (upper.abs() + lower.abs());
        if rho < lower - slack || rho > upper + slack || rho.is_nan() {
            return Err(Error::InadmissibleRho {
                t,
                rho,
                lower,
                upper,
            });
        }
        Ok(rho)
    }

    /// rho(t) * exp(log_scale), evaluated without forming exp(log_scale).
    /// `rho` is the already validated value of `self.value(params, t)`.
    pub(crate) fn scaled(&self, params: &OscillationParams, t: f64, rho: f64, log_scale: f64) -> f64 {
        match self {
            RhoProfile::Zero => 0.0,
            RhoProfile::SaturateUpperShort => {
                scaled_survival(params.gamma_s, t, log_scale) * q_minus(params, t)
            }
            RhoProfile::SaturateLowerShort => {
                -(scaled_survival(params.gamma_s, t, log_scale) * q_plus(params, t))
            }
            RhoProfile::Tabulated(_) => {
                if rho == 0.0 {
                    0.0
                } else {
                    rho.signum() * (rho.abs().ln() + log_scale).exp()
                }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RhoProfile::Zero => "zero",
            RhoProfile::SaturateUpperShort => "upper-short",
            RhoProfile::SaturateLowerShort => "lower-short",
            RhoProfile::Tabulated(_) => "tabulated",
        }
    }
}
