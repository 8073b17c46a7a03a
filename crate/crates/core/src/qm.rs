//! Standard quantum-mechanical joint flavor-tag probabilities for a pair
//! produced in the antisymmetric (singlet-like) state.
//!
//! All joints are evaluated in closed form. Like-flavor means both mesons are
//! tagged as the same flavor (antiparticle-antiparticle or
//! particle-particle); CP symmetry of the pair state makes the two like
//! outcomes equal, and likewise the two unlike outcomes.

use serde::{Deserialize, Serialize};

use crate::constants::{OscillationParams, Species};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_semi_infinite, QuadConfig};

/// Proper times (seconds) at which the left and right mesons are tagged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimePair {
    pub t_a: f64,
    pub t_b: f64,
}

impl TimePair {
    pub fn new(t_a: f64, t_b: f64) -> Result<Self> {
        let t = TimePair { t_a, t_b };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if ok(self.t_a) && ok(self.t_b) {
            Ok(())
        } else {
            Err(Error::InvalidTime {
                t_a: self.t_a,
                t_b: self.t_b,
            })
        }
    }

    /// Left-right exchange.
    pub fn swapped(self) -> Self {
        TimePair {
            t_a: self.t_b,
            t_b: self.t_a,
        }
    }

    pub fn is_ordered(&self) -> bool {
        self.t_a <= self.t_b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Flavor {
    Particle,
    Antiparticle,
}

/// Flavor tags of the left and right meson.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FlavorOutcome {
    pub left: Flavor,
    pub right: Flavor,
}

impl FlavorOutcome {
    pub const ALL: [FlavorOutcome; 4] = [
        FlavorOutcome::new(Flavor::Particle, Flavor::Particle),
        FlavorOutcome::new(Flavor::Particle, Flavor::Antiparticle),
        FlavorOutcome::new(Flavor::Antiparticle, Flavor::Particle),
        FlavorOutcome::new(Flavor::Antiparticle, Flavor::Antiparticle),
    ];
    pub const ANTI_ANTI: FlavorOutcome =
        FlavorOutcome::new(Flavor::Antiparticle, Flavor::Antiparticle);
    pub const PARTICLE_ANTI: FlavorOutcome =
        FlavorOutcome::new(Flavor::Particle, Flavor::Antiparticle);

    pub const fn new(left: Flavor, right: Flavor) -> Self {
        FlavorOutcome { left, right }
    }

    pub fn is_like(&self) -> bool {
        self.left == self.right
    }
}

/// Interference sign: -1 for like-flavor, +1 for unlike-flavor.
///
/// The bracket e^{-gs ta - gl tb} + e^{-gl ta - gs tb} + 2 sign e^{-G T} cos
/// is evaluated as 2 e^{-G T} [sinh^2(h) + (1 + sign cos)/2] with
/// h = (gs - gl)|ta - tb|/4, which has no cancellation near the zeros.
fn joint(params: &OscillationParams, t: TimePair, sign: f64) -> Result<f64> {
    t.validate()?;
    let (ta, tb) = (t.t_a, t.t_b);
    let p = match params.species {
        Species::BMeson => {
            let g = params.gamma_mean();
            0.5 * (-g * (ta + tb)).exp() * half_angle(params.delta_m * (ta - tb), sign)
        }
        Species::Kaon => two_width_form(params, ta, tb, sign),
    };
    Ok(p.max(0.0))
}

/// (1 + sign cos theta) / 2.
fn half_angle(theta: f64, sign: f64) -> f64 {
    let half = 0.5 * theta;
    if sign < 0.0 {
        half.sin().powi(2)
    } else {
        half.cos().powi(2)
    }
}

fn two_width_form(params: &OscillationParams, ta: f64, tb: f64, sign: f64) -> f64 {
    let (gs, gl) = (params.gamma_s, params.gamma_l);
    let s = 0.25 * (gs + gl) * (ta + tb);
    let h = 0.25 * (gs - gl) * (ta - tb).abs();
    // sinh(h) e^{-s}; h <= s, so neither exponential overflows.
    let sh = -0.5 * (h - s).exp() * (-2.0 * h).exp_m1();
    0.5 * (sh * sh + (-2.0 * s).exp() * half_angle(params.delta_m * (ta - tb), sign))
}

/// Evaluates the general two-width closed form regardless of species. Used to
/// check that the equal-width specialization agrees with it.
pub fn two_width_like_joint(params: &OscillationParams, t: TimePair) -> Result<f64> {
    t.validate()?;
    Ok(two_width_form(params, t.t_a, t.t_b, -1.0))
}

/// P[antiparticle at t_a, antiparticle at t_b] (equal to the
/// particle-particle joint).
pub fn qm_like_joint(params: &OscillationParams, t: TimePair) -> Result<f64> {
    joint(params, t, -1.0)
}

/// P[particle at t_a, antiparticle at t_b] (equal to the reversed unlike
/// joint).
pub fn qm_unlike_joint(params: &OscillationParams, t: TimePair) -> Result<f64> {
    joint(params, t, 1.0)
}

/// All four outcome probabilities, ordered as [`FlavorOutcome::ALL`].
pub fn qm_flavor_table(params: &OscillationParams, t: TimePair) -> Result<[(FlavorOutcome, f64); 4]> {
    let like = qm_like_joint(params, t)?;
    let unlike = qm_unlike_joint(params, t)?;
    Ok(FlavorOutcome::ALL.map(|o| (o, if o.is_like() { like } else { unlike })))
}

/// Total probability that both mesons are still undecayed:
/// (1/2)[E_S(t_a) E_L(t_b) + E_L(t_a) E_S(t_b)].
pub fn pair_survival(params: &OscillationParams, t: TimePair) -> f64 {
    let (gs, gl) = (params.gamma_s, params.gamma_l);
    0.5 * ((-(gs * t.t_a + gl * t.t_b)).exp() + (-(gl * t.t_a + gs * t.t_b)).exp())
}

/// Source of joint flavor-tag probabilities, so the asymmetry and the
/// time-integrated ratio can be evaluated for any model.
pub trait JointProbabilities {
    fn joint(&self, outcome: FlavorOutcome, t: TimePair) -> Result<f64>;
}

/// The quantum-mechanical prediction for one species.
#[derive(Debug, Clone, Copy)]
pub struct QmPredictor(pub OscillationParams);

impl JointProbabilities for QmPredictor {
    fn joint(&self, outcome: FlavorOutcome, t: TimePair) -> Result<f64> {
        if outcome.is_like() {
            qm_like_joint(&self.0, t)
        } else {
            qm_unlike_joint(&self.0, t)
        }
    }
}

impl<F> JointProbabilities for F
where
    F: Fn(FlavorOutcome, TimePair) -> Result<f64>,
{
    fn joint(&self, outcome: FlavorOutcome, t: TimePair) -> Result<f64> {
        self(outcome, t)
    }
}

const DENOMINATOR_FLOOR: f64 = 1e-300;

/// A(t_a, t_b) = (P[anti, anti] - P[particle, anti]) / (sum of the two).
pub fn asymmetry_with<J: JointProbabilities + ?Sized>(model: &J, t: TimePair) -> Result<f64> {
    let like = model.joint(FlavorOutcome::ANTI_ANTI, t)?;
    let unlike = model.joint(FlavorOutcome::PARTICLE_ANTI, t)?;
    if like.abs() < DENOMINATOR_FLOOR && unlike.abs() < DENOMINATOR_FLOOR {
        return Err(Error::DegenerateDenominator);
    }
    Ok((like - unlike) / (like + unlike))
}

pub fn asymmetry(params: &OscillationParams, t: TimePair) -> Result<f64> {
    asymmetry_with(&QmPredictor(*params), t)
}

/// Relative tolerance required of the time-integrated ratio.
pub const RATIO_REL_TOL: f64 = 1e-8;

/// Double integral of one outcome over t_a, t_b in [0, inf).
///
/// Both axes use u = 1 - exp(-rate t). Nested adaptive Gauss-Kronrod: the
/// inner integral is resolved two orders tighter than the outer one.
pub fn integrate_outcome<J: JointProbabilities + ?Sized>(
    model: &J,
    outcome: FlavorOutcome,
    rate: f64,
) -> Result<f64> {
    let outer = QuadConfig {
        rel_tol: RATIO_REL_TOL,
        abs_tol: 0.0,
        max_intervals: 4000,
    };
    let inner = QuadConfig {
        rel_tol: RATIO_REL_TOL * 1e-2,
        abs_tol: 0.0,
        max_intervals: 4000,
    };
    let r = integrate_semi_infinite(
        |ta| {
            integrate(
                |u| {
                    let one_minus = 1.0 - u;
                    let tb = -(-u).ln_1p() / rate;
                    Ok(model.joint(outcome, TimePair { t_a: ta, t_b: tb })? / (rate * one_minus))
                },
                0.0,
                1.0,
                inner,
            )
            .map(|i| i.value)
        },
        rate,
        outer,
    )?;
    Ok(r.value)
}

/// R = (int P[anti,anti] + int P[part,part]) / (int P[anti,part] + int P[part,anti]).
pub fn integrated_ratio_with<J: JointProbabilities + ?Sized>(model: &J, rate: f64) -> Result<f64> {
    let mut like = 0.0;
    let mut unlike = 0.0;
    for o in FlavorOutcome::ALL {
        let v = integrate_outcome(model, o, rate)?;
        if o.is_like() {
            like += v;
        } else {
            unlike += v;
        }
    }
    if unlike.abs() < DENOMINATOR_FLOOR {
        return Err(Error::DegenerateDenominator);
    }
    Ok(like / unlike)
}

/// Time-integrated like/unlike ratio of the quantum prediction. The
/// substitution rate is the slower width so the long tail is mapped evenly.
pub fn integrated_ratio(params: &OscillationParams) -> Result<f64> {
    params.validate()?;
    integrated_ratio_with(&QmPredictor(*params), params.gamma_l)
}

/// Closed form x^2 / (2 + x^2) of the equal-width ratio.
pub fn equal_width_ratio(x: f64) -> f64 {
    x * x / (2.0 + x * x)
}
