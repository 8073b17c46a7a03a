//! Local-realistic model of the meson pair.
//!
//! Each meson carries a definite CP value and a definite flavor (strangeness
//! for kaons). Flavor jumps at times fixed when the pair is produced, so
//! left and right stay correlated without communicating. The pair starts in
//! one of four configurations with equal probability; [`joint_probabilities`]
//! gives, for each configuration, the probability that both mesons are
//! tagged as antiparticles at (t_a, t_b).
//!
//! The model leaves one function rho(t) free within two bound pairs, see
//! [`rho_bounds`] and [`RhoProfile`].

mod rho;
mod weights;

use serde::{Deserialize, Serialize};

pub use rho::{RhoProfile, RhoTable};
pub use weights::{EfficiencyWeights, Preset};

use crate::constants::{OscillationParams, Species};
use crate::error::{Error, Result};
use crate::qm::TimePair;
use rho::scaled_survival;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HiddenState {
    K1,
    K2,
    K3,
    K4,
}

impl HiddenState {
    pub fn cp(self) -> i8 {
        match self {
            HiddenState::K1 | HiddenState::K2 => 1,
            HiddenState::K3 | HiddenState::K4 => -1,
        }
    }

    pub fn strangeness(self) -> i8 {
        match self {
            HiddenState::K1 | HiddenState::K3 => 1,
            HiddenState::K2 | HiddenState::K4 => -1,
        }
    }
}

/// Initial (left, right) configuration, numbered 1..4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InitialPair {
    K1K4,
    K2K3,
    K3K2,
    K4K1,
}

impl InitialPair {
    pub const ALL: [InitialPair; 4] = [
        InitialPair::K1K4,
        InitialPair::K2K3,
        InitialPair::K3K2,
        InitialPair::K4K1,
    ];

    /// 1-based index used for the weights a_i.
    pub fn index(self) -> usize {
        self as usize + 1
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i.checked_sub(1)?).copied()
    }

    pub fn states(self) -> (HiddenState, HiddenState) {
        use HiddenState::*;
        match self {
            InitialPair::K1K4 => (K1, K4),
            InitialPair::K2K3 => (K2, K3),
            InitialPair::K3K2 => (K3, K2),
            InitialPair::K4K1 => (K4, K1),
        }
    }

    /// The configuration with left and right exchanged.
    pub fn mirrored(self) -> Self {
        match self {
            InitialPair::K1K4 => InitialPair::K4K1,
            InitialPair::K2K3 => InitialPair::K3K2,
            InitialPair::K3K2 => InitialPair::K2K3,
            InitialPair::K4K1 => InitialPair::K1K4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lifetime {
    Short,
    Long,
}

/// E_S(t) or E_L(t).
pub fn survival(params: &OscillationParams, which: Lifetime, t: f64) -> f64 {
    let g = match which {
        Lifetime::Short => params.gamma_s,
        Lifetime::Long => params.gamma_l,
    };
    (-g * t).exp()
}

/// 2 sqrt(E_L E_S) / (E_L + E_S), rewritten in the width difference so it
/// stays finite when both survivals underflow.
fn interference_prefactor(params: &OscillationParams, t: f64) -> f64 {
    let d = (params.gamma_s - params.gamma_l) * t;
    2.0 * (-0.5 * d).exp() / (1.0 + (-d).exp())
}

fn q_pm(params: &OscillationParams, t: f64, sign: f64) -> f64 {
    let c = (params.delta_m * t).cos();
    match params.species {
        Species::BMeson => 0.5 * (1.0 + sign * c),
        Species::Kaon => 0.5 * (1.0 + sign * interference_prefactor(params, t) * c),
    }
}

pub fn q_plus(params: &OscillationParams, t: f64) -> f64 {
    q_pm(params, t, 1.0)
}

pub fn q_minus(params: &OscillationParams, t: f64) -> f64 {
    q_pm(params, t, -1.0)
}

/// Admissible interval for rho(t): the intersection of
/// [-E_S Q_+, E_S Q_-] and [-E_L Q_-, E_L Q_+].
pub fn rho_bounds(params: &OscillationParams, t: f64) -> (f64, f64) {
    let es = survival(params, Lifetime::Short, t);
    let el = survival(params, Lifetime::Long, t);
    let (qp, qm) = (q_plus(params, t), q_minus(params, t));
    let lower = (-(es * qp)).max(-(el * qm));
    let upper = (es * qm).min(el * qp);
    (lower, upper)
}

/// Relative cancellation threshold below which a difference is reported as 0.
const CANCELLATION_EPS: f64 = 1e-15;

fn cancel(a: f64, b: f64) -> f64 {
    let d = a - b;
    if d.abs() <= CANCELLATION_EPS * a.abs().max(b.abs()) {
        0.0
    } else {
        d
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidTime { t_a: t, t_b: t })
    }
}

/// p21(t | 0) = E_S Q_- - rho.
pub fn p21_initial(params: &OscillationParams, rho: &RhoProfile, t: f64) -> Result<f64> {
    check_time(t)?;
    let r = rho.value(params, t)?;
    Ok(cancel(
        scaled_survival(params.gamma_s, t, 0.0) * q_minus(params, t),
        rho.scaled(params, t, r, 0.0),
    ))
}

/// p43(t | 0) = E_L Q_- + rho.
pub fn p43_initial(params: &OscillationParams, rho: &RhoProfile, t: f64) -> Result<f64> {
    check_time(t)?;
    let r = rho.value(params, t)?;
    Ok(cancel(
        scaled_survival(params.gamma_l, t, 0.0) * q_minus(params, t),
        -r,
    ))
}

#[derive(Clone, Copy)]
enum Branch {
    /// p21: short-lived survival, rho enters with a minus sign.
    TwoOne,
    /// p43: long-lived survival, rho enters with a plus sign.
    FourThree,
}

/// exp(gamma t_a) * p(t | 0) for the given branch, without forming the
/// growing exponential.
fn scaled_initial(
    params: &OscillationParams,
    rho: &RhoProfile,
    branch: Branch,
    t: f64,
    t_a: f64,
) -> Result<f64> {
    let r = rho.value(params, t)?;
    let qm = q_minus(params, t);
    Ok(match branch {
        Branch::TwoOne => {
            let x = params.gamma_s * t_a;
            cancel(
                scaled_survival(params.gamma_s, t, x) * qm,
                rho.scaled(params, t, r, x),
            )
        }
        Branch::FourThree => {
            let x = params.gamma_l * t_a;
            cancel(
                scaled_survival(params.gamma_l, t, x) * qm,
                -rho.scaled(params, t, r, x),
            )
        }
    })
}

fn conditional(
    params: &OscillationParams,
    rho: &RhoProfile,
    branch: Branch,
    t_a: f64,
    t_b: f64,
) -> Result<f64> {
    check_time(t_a)?;
    check_time(t_b)?;
    if t_b < t_a {
        return Err(Error::TimeOrdering { t_a, t_b });
    }
    let gamma = match branch {
        Branch::TwoOne => params.gamma_s,
        Branch::FourThree => params.gamma_l,
    };
    let at_b = scaled_initial(params, rho, branch, t_b, t_a)?;
    let at_a = scaled_initial(params, rho, branch, t_a, t_a)?;
    Ok(cancel(at_b, at_a * (-gamma * (t_b - t_a)).exp()) + 0.0)
}

/// p21(t_b | t_a) = E_S^{-1}(t_a) [p21(t_b|0) - p21(t_a|0) E_S(t_b - t_a)].
pub fn p21_conditional(params: &OscillationParams, rho: &RhoProfile, t_a: f64, t_b: f64) -> Result<f64> {
    conditional(params, rho, Branch::TwoOne, t_a, t_b)
}

/// p43(t_b | t_a) = E_L^{-1}(t_a) [p43(t_b|0) - p43(t_a|0) E_L(t_b - t_a)].
pub fn p43_conditional(params: &OscillationParams, rho: &RhoProfile, t_a: f64, t_b: f64) -> Result<f64> {
    conditional(params, rho, Branch::FourThree, t_a, t_b)
}

/// P1..P4 at an ordered time pair (t_a <= t_b).
///
/// The values are returned as computed. The model does not force the jump
/// probabilities to be non-negative, so individual P_i can be negative for
/// some rho and time pairs.
pub fn joint_probabilities_ordered(
    params: &OscillationParams,
    rho: &RhoProfile,
    t: TimePair,
) -> Result<[f64; 4]> {
    t.validate()?;
    if !t.is_ordered() {
        return Err(Error::TimeOrdering {
            t_a: t.t_a,
            t_b: t.t_b,
        });
    }
    let ta = t.t_a;
    let es = survival(params, Lifetime::Short, ta);
    let el = survival(params, Lifetime::Long, ta);
    let (qp, qm) = (q_plus(params, ta), q_minus(params, ta));
    let r = rho.value(params, ta)?;
    let rs = rho.scaled(params, ta, r, 0.0);

    let p43 = p43_conditional(params, rho, ta, t.t_b)?;
    let p21 = p21_conditional(params, rho, ta, t.t_b)?;

    let first = [
        cancel(scaled_survival(params.gamma_s, ta, 0.0) * qm, rs),
        es * qp + r,
        cancel(el * qm, -r),
        cancel(el * qp, r),
    ];
    // `+ 0.0` folds negative zero into zero.
    Ok([
        first[0] * el * p43 + 0.0,
        first[1] * el * p43 + 0.0,
        first[2] * es * p21 + 0.0,
        first[3] * es * p21 + 0.0,
    ])
}

/// P1..P4 at any time pair. For t_a > t_b the left-right mirror image is
/// evaluated: P_i(t_a, t_b) = P_mirror(i)(t_b, t_a).
pub fn joint_probabilities(params: &OscillationParams, rho: &RhoProfile, t: TimePair) -> Result<[f64; 4]> {
    t.validate()?;
    if t.is_ordered() {
        return joint_probabilities_ordered(params, rho, t);
    }
    let m = joint_probabilities_ordered(params, rho, t.swapped())?;
    Ok(InitialPair::ALL.map(|p| m[p.mirrored().index() - 1]))
}

pub fn joint_p(params: &OscillationParams, rho: &RhoProfile, pair: InitialPair, t: TimePair) -> Result<f64> {
    Ok(joint_probabilities(params, rho, t)?[pair.index() - 1])
}

/// (1/4) sum_i a_i P_i: the model's like-flavor joint under
/// hidden-state-dependent acceptance.
pub fn lrm_like_joint(
    params: &OscillationParams,
    rho: &RhoProfile,
    weights: &EfficiencyWeights,
    t: TimePair,
) -> Result<f64> {
    let a = weights.at(t)?;
    let p = joint_probabilities(params, rho, t)?;
    Ok(weighted_sum(&a, &p))
}

/// (1/4) sum_i a_i P_i without any range check on the weights.
pub fn weighted_sum(a: &[f64; 4], p: &[f64; 4]) -> f64 {
    0.25 * (a[0] * p[0] + a[1] * p[1] + a[2] * p[2] + a[3] * p[3])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::species_params;
    use crate::qm::{qm_like_joint, TimePair};
    use std::f64::consts::{E, FRAC_PI_2, PI};

    fn kaon() -> OscillationParams {
        species_params(Species::Kaon)
    }

    fn tp(a: f64, b: f64) -> TimePair {
        TimePair::new(a, b).unwrap()
    }

    #[test]
    fn hidden_state_labels() {
        use HiddenState::*;
        assert_eq!((K1.cp(), K1.strangeness()), (1, 1));
        assert_eq!((K2.cp(), K2.strangeness()), (1, -1));
        assert_eq!((K3.cp(), K3.strangeness()), (-1, 1));
        assert_eq!((K4.cp(), K4.strangeness()), (-1, -1));
        for p in InitialPair::ALL {
            let (l, r) = p.states();
            assert_eq!(l.cp(), -r.cp());
            assert_eq!(l.strangeness(), -r.strangeness());
            assert_eq!(InitialPair::from_index(p.index()), Some(p));
            assert_eq!(p.mirrored().mirrored(), p);
        }
        assert_eq!(InitialPair::from_index(0), None);
        assert_eq!(InitialPair::from_index(5), None);
    }

    #[test]
    fn survival_values() {
        let p = kaon();
        assert_eq!(survival(&p, Lifetime::Short, 0.0), 1.0);
        assert!((survival(&p, Lifetime::Short, 1.0 / p.gamma_s) - 1.0 / E).abs() < 1e-15);
        let el = survival(&p, Lifetime::Long, 1.0 / p.gamma_s);
        assert!((el - 0.998_273_472_152_667).abs() < 1e-14);
    }

    #[test]
    fn q_functions() {
        let p = kaon();
        assert_eq!(q_plus(&p, 0.0), 1.0);
        assert_eq!(q_minus(&p, 0.0), 0.0);
        let t = FRAC_PI_2 / p.delta_m;
        assert!((q_plus(&p, t) - 0.5).abs() < 1e-15);
        assert!((q_minus(&p, t) - 0.5).abs() < 1e-15);
        let b = species_params(Species::BMeson);
        let t = PI / b.delta_m;
        assert!(q_plus(&b, t).abs() < 1e-15);
        assert!((q_minus(&b, t) - 1.0).abs() < 1e-15);
        for k in 0..500 {
            let t = k as f64 * 0.05 / p.gamma_s;
            assert!((q_plus(&p, t) + q_minus(&p, t) - 1.0).abs() < 1e-14);
            assert!((0.0..=1.0).contains(&q_plus(&p, t)));
        }
        // Far tail: prefactor decays to zero instead of producing NaN.
        assert!(!q_plus(&b, 1e4 / b.gamma_s).is_nan());
        assert!((q_plus(&p, 1e5 / p.gamma_s) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bounds() {
        let p = kaon();
        assert_eq!(rho_bounds(&p, 0.0), (0.0, 0.0));
        let t = FRAC_PI_2 / p.delta_m;
        let (lo, hi) = rho_bounds(&p, t);
        let m = survival(&p, Lifetime::Short, t).min(survival(&p, Lifetime::Long, t));
        assert!((lo + 0.5 * m).abs() < 1e-15 && (hi - 0.5 * m).abs() < 1e-15);
        for k in 0..300 {
            let t = k as f64 * 0.03 / p.gamma_s;
            let (lo, hi) = rho_bounds(&p, t);
            assert!(lo <= 0.0 && 0.0 <= hi && lo <= hi);
        }
    }

    #[test]
    fn initial_jumps() {
        let p = kaon();
        let up = RhoProfile::SaturateUpperShort;
        for k in 0..50 {
            let t = k as f64 * 0.1 / p.gamma_s;
            assert_eq!(p21_initial(&p, &up, t).unwrap(), 0.0);
        }
        assert_eq!(p21_initial(&p, &RhoProfile::Zero, 0.0).unwrap(), 0.0);
        assert_eq!(p43_initial(&p, &RhoProfile::Zero, 0.0).unwrap(), 0.0);
        let t = 1.0 / p.gamma_s;
        let expected = (-1.0f64).exp() * q_minus(&p, t);
        assert!((p21_initial(&p, &RhoProfile::Zero, t).unwrap() - expected).abs() < 1e-16);
    }

    #[test]
    fn conditionals_basic() {
        let p = kaon();
        for rho in [RhoProfile::Zero, RhoProfile::SaturateUpperShort] {
            for k in 0..30 {
                let t = k as f64 * 0.2 / p.gamma_s;
                assert_eq!(p21_conditional(&p, &rho, t, t).unwrap(), 0.0);
                assert_eq!(p43_conditional(&p, &rho, t, t).unwrap(), 0.0);
            }
            let tb = 1.3 / p.gamma_s;
            let direct = p21_initial(&p, &rho, tb).unwrap();
            assert!((p21_conditional(&p, &rho, 0.0, tb).unwrap() - direct).abs() < 1e-16);
            let direct = p43_initial(&p, &rho, tb).unwrap();
            assert!((p43_conditional(&p, &rho, 0.0, tb).unwrap() - direct).abs() < 1e-16);
        }
        assert!(matches!(
            p21_conditional(&p, &RhoProfile::Zero, 2e-10, 1e-10),
            Err(Error::TimeOrdering { .. })
        ));
    }

    #[test]
    fn conditionals_match_naive_form_and_stay_finite() {
        // The naive form divides by E(t_a); compare where that is still safe.
        let p = kaon();
        let rho = RhoProfile::Zero;
        let (ta, tb) = (2.0 / p.gamma_s, 3.5 / p.gamma_s);
        let es = |t: f64| survival(&p, Lifetime::Short, t);
        let naive = (p21_initial(&p, &rho, tb).unwrap()
            - p21_initial(&p, &rho, ta).unwrap() * es(tb - ta))
            / es(ta);
        let v = p21_conditional(&p, &rho, ta, tb).unwrap();
        assert!((v - naive).abs() < 1e-14 * naive.abs().max(1.0));

        let ta = 900.0 / p.gamma_s;
        let v = p21_conditional(&p, &rho, ta, ta + 0.5 / p.gamma_s).unwrap();
        assert!(v.is_finite());
        let v = p43_conditional(&p, &RhoProfile::SaturateLowerShort, ta, 2.0 * ta).unwrap();
        assert!(v.is_finite());
    }

    #[test]
    fn saturation_identity() {
        let p = kaon();
        let rho = RhoProfile::SaturateUpperShort;
        for k in 1..=60 {
            let ta = k as f64 * 0.1 / p.gamma_s;
            for tb in [ta, 1.5 * ta, 2.0 * ta, ta + 3.0 / p.gamma_s] {
                let t = tp(ta, tb);
                let pi = joint_probabilities(&p, &rho, t).unwrap();
                assert_eq!(pi[0], 0.0);
                assert_eq!(pi[2], 0.0);
                assert_eq!(pi[3], 0.0);
                let expected = survival(&p, Lifetime::Short, ta)
                    * survival(&p, Lifetime::Long, ta)
                    * p43_conditional(&p, &rho, ta, tb).unwrap();
                assert!((pi[1] - expected).abs() <= 1e-15 * expected.abs());
                let lrm = lrm_like_joint(&p, &rho, &EfficiencyWeights::UNIT, t).unwrap();
                assert_eq!(lrm, 0.25 * pi[1]);
            }
        }
    }

    #[test]
    fn reference_values_rho_zero() {
        // Frozen from an independent high-precision evaluation of the model.
        let p = kaon();
        let t = tp(1.0 / p.gamma_s, 2.0 / p.gamma_s);
        let pi = joint_probabilities(&p, &RhoProfile::Zero, t).unwrap();
        let expected = [
            0.007_919_228_659_357_769,
            0.067_338_135_668_341_45,
            0.002_918_360_043_597_221,
            0.024_815_159_783_598_62,
        ];
        for (v, e) in pi.iter().zip(expected) {
            assert!((v - e).abs() < 1e-15, "{v} vs {e}");
        }
        let lrm = lrm_like_joint(&p, &RhoProfile::Zero, &EfficiencyWeights::UNIT, t).unwrap();
        assert!((lrm - 0.025_747_721_038_723_77).abs() < 1e-15);
    }

    #[test]
    fn mirror_symmetry() {
        let p = kaon();
        let rho = RhoProfile::Zero;
        let t = tp(2.1 / p.gamma_s, 0.7 / p.gamma_s);
        let fwd = joint_probabilities(&p, &rho, t).unwrap();
        let rev = joint_probabilities(&p, &rho, t.swapped()).unwrap();
        assert_eq!(fwd, [rev[3], rev[2], rev[1], rev[0]]);
        assert_eq!(joint_p(&p, &rho, InitialPair::K2K3, t).unwrap(), rev[2]);
        assert!(joint_probabilities_ordered(&p, &rho, t).is_err());
    }

    #[test]
    fn equal_width_kaon_path_matches_bmeson() {
        let b = species_params(Species::BMeson);
        let k = OscillationParams {
            species: Species::Kaon,
            ..b
        };
        for i in 0..100 {
            let t = i as f64 * 0.061 / b.gamma_s;
            for (x, y) in [(q_plus(&k, t), q_plus(&b, t)), (q_minus(&k, t), q_minus(&b, t))] {
                assert!((x - y).abs() <= 1e-12 * y.abs().max(1e-300));
            }
            let tt = tp(t, 2.0 * t);
            let pk = joint_probabilities(&k, &RhoProfile::Zero, tt).unwrap();
            let pb = joint_probabilities(&b, &RhoProfile::Zero, tt).unwrap();
            for (x, y) in pk.iter().zip(pb) {
                assert!((x - y).abs() <= 1e-12 * y.abs() + 1e-300);
            }
        }
    }

    #[test]
    fn weights_scale_the_sum() {
        let p = kaon();
        let t = tp(0.8 / p.gamma_s, 1.6 / p.gamma_s);
        let zero = EfficiencyWeights::constant([0.0; 4]).unwrap();
        assert_eq!(lrm_like_joint(&p, &RhoProfile::Zero, &zero, t).unwrap(), 0.0);

        let qm = qm_like_joint(&p, t).unwrap();
        let pi = joint_probabilities(&p, &RhoProfile::Zero, t).unwrap();
        let a = pi.map(|v| qm / v);
        assert!((weighted_sum(&a, &pi) - qm).abs() < 1e-15);

        let bad = EfficiencyWeights::time_dependent(|_| [2.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            lrm_like_joint(&p, &RhoProfile::Zero, &bad, t),
            Err(Error::WeightOutOfRange { index: 1, .. })
        ));
    }

    #[test]
    fn lower_short_profile_only_admissible_late() {
        // -E_S Q_+ >= -E_L Q_- fails near t = 0 where Q_- vanishes.
        let p = kaon();
        let rho = RhoProfile::SaturateLowerShort;
        assert!(matches!(rho.value(&p, 0.0), Err(Error::InadmissibleRho { .. })));
        assert!(rho.value(&p, 8.0 / p.gamma_s).is_ok());
        let ta = 8.0 / p.gamma_s;
        assert_eq!(p21_conditional(&p, &rho, ta, ta).unwrap(), 0.0);
    }

    #[test]
    fn inadmissible_rho_reports_time() {
        let p = kaon();
        let t1 = 1.0 / p.gamma_s;
        let rho = RhoProfile::Tabulated(RhoTable::new(vec![(0.0, 0.0), (t1, 0.9)]).unwrap());
        match joint_probabilities(&p, &rho, tp(0.5 * t1, t1)) {
            Err(Error::InadmissibleRho { t, .. }) => assert!(t > 0.0),
            other => panic!("{other:?}"),
        }
    }
}
