//! Clauser-Horne sum, its local bound checked by enumeration, and
//! detection-efficiency thresholds.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Joint and single detection probabilities entering the Clauser-Horne sum.
///
/// `p11 = P(θ1, θ2)`, `p12 = P(θ1, θ2')`, `p21 = P(θ1', θ2)`,
/// `p22 = P(θ1', θ2')`, `s1 = P(θ1')`, `s2 = P(θ2)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct CorrelationSet {
    pub p11: f64,
    pub p12: f64,
    pub p21: f64,
    pub p22: f64,
    pub s1: f64,
    pub s2: f64,
}

impl CorrelationSet {
    pub fn is_valid(&self) -> bool {
        self.entries().iter().all(|v| (0.0..=1.0).contains(v))
    }

    pub fn entries(&self) -> [f64; 6] {
        [self.p11, self.p12, self.p21, self.p22, self.s1, self.s2]
    }

    /// Convex combination `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &CorrelationSet, lambda: f64) -> CorrelationSet {
        let m = |a: f64, b: f64| lambda * a + (1.0 - lambda) * b;
        CorrelationSet {
            p11: m(self.p11, other.p11),
            p12: m(self.p12, other.p12),
            p21: m(self.p21, other.p21),
            p22: m(self.p22, other.p22),
            s1: m(self.s1, other.s1),
            s2: m(self.s2, other.s2),
        }
    }
}

/// CHS = P(θ1,θ2) - P(θ1,θ2') + P(θ1',θ2) + P(θ1',θ2') - P(θ1') - P(θ2).
pub fn chs_sum(c: &CorrelationSet) -> f64 {
    c.p11 - c.p12 + c.p21 + c.p22 - c.s1 - c.s2
}

/// Photon-pair model with P(θi, θj) = cos²(θi - θj) / 2 and singles 1/2.
/// Angles in radians.
pub fn singlet_photon_set(theta1: f64, theta1p: f64, theta2: f64, theta2p: f64) -> CorrelationSet {
    let joint = |a: f64, b: f64| 0.5 * (a - b).cos().powi(2);
    CorrelationSet {
        p11: joint(theta1, theta2),
        p12: joint(theta1, theta2p),
        p21: joint(theta1p, theta2),
        p22: joint(theta1p, theta2p),
        s1: 0.5,
        s2: 0.5,
    }
}

/// Deterministic local strategy: whether each side fires for each of its
/// two settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LocalStrategy {
    pub fire_theta1: bool,
    pub fire_theta1p: bool,
    pub fire_theta2: bool,
    pub fire_theta2p: bool,
}

impl LocalStrategy {
    /// All 16 strategies, indexed by a 4-bit mask.
    pub fn all() -> impl Iterator<Item = LocalStrategy> {
        (0u8..16).map(|m| LocalStrategy {
            fire_theta1: m & 1 != 0,
            fire_theta1p: m & 2 != 0,
            fire_theta2: m & 4 != 0,
            fire_theta2p: m & 8 != 0,
        })
    }

    pub fn correlations(&self) -> CorrelationSet {
        let f = |b: bool| if b { 1.0 } else { 0.0 };
        let (a, ap, b, bp) = (
            f(self.fire_theta1),
            f(self.fire_theta1p),
            f(self.fire_theta2),
            f(self.fire_theta2p),
        );
        CorrelationSet {
            p11: a * b,
            p12: a * bp,
            p21: ap * b,
            p22: ap * bp,
            s1: ap,
            s2: b,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalBoundReport {
    /// Largest CHS over the 16 deterministic strategies.
    pub max_deterministic: f64,
    pub maximizer: LocalStrategy,
    /// Largest CHS over the random mixtures.
    pub max_mixture: f64,
    pub mixtures: usize,
    /// Number of strategies or mixtures with CHS > 0.
    pub violations: usize,
}

/// Enumerates all deterministic local strategies and `mixtures` random
/// convex combinations of them, recording the largest CHS found.
pub fn lhv_bound_brute_force(mixtures: usize, seed: u64) -> LocalBoundReport {
    let sets: Vec<(LocalStrategy, CorrelationSet)> =
        LocalStrategy::all().map(|s| (s, s.correlations())).collect();
    let mut violations = 0;
    let (mut maximizer, mut max_det) = (sets[0].0, f64::NEG_INFINITY);
    for (s, c) in &sets {
        let v = chs_sum(c);
        if v > 0.0 {
            violations += 1;
        }
        if v > max_det {
            max_det = v;
            maximizer = *s;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_mix = f64::NEG_INFINITY;
    for _ in 0..mixtures {
        // Uniform on the simplex via normalized exponentials.
        let w: Vec<f64> = (0..sets.len())
            .map(|_| -(1.0 - rng.random::<f64>()).ln())
            .collect();
        let total: f64 = w.iter().sum();
        let mut acc = [0.0; 6];
        for (wi, (_, c)) in w.iter().zip(&sets) {
            for (slot, v) in acc.iter_mut().zip(c.entries()) {
                *slot += wi / total * v;
            }
        }
        let mix = CorrelationSet {
            p11: acc[0],
            p12: acc[1],
            p21: acc[2],
            p22: acc[3],
            s1: acc[4],
            s2: acc[5],
        };
        let v = chs_sum(&mix);
        if v > 1e-12 {
            violations += 1;
        }
        max_mix = max_mix.max(v);
    }
    LocalBoundReport {
        max_deterministic: max_det,
        maximizer,
        max_mixture: max_mix,
        mixtures,
        violations,
    }
}

/// Minimum total efficiency for a loophole-free test with maximally
/// entangled pairs.
pub const MAXIMAL_THRESHOLD: f64 = 0.81;
/// Same, for non-maximally entangled pairs. Holds only without background.
pub const NON_MAXIMAL_THRESHOLD: f64 = 0.67;
pub const NO_BACKGROUND_CAVEAT: &str = "thresholds assume no background";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Entanglement {
    Maximal,
    NonMaximal,
}

impl Entanglement {
    pub fn threshold(self) -> f64 {
        match self {
            Entanglement::Maximal => MAXIMAL_THRESHOLD,
            Entanglement::NonMaximal => NON_MAXIMAL_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    LoopholeFreePossible,
    DetectionLoophole,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::LoopholeFreePossible => f.write_str("LoopholeFreePossible"),
            Verdict::DetectionLoophole => f.write_str("DetectionLoophole"),
        }
    }
}

/// A test can close the detection loophole only if the total efficiency
/// exceeds the threshold for the given state.
pub fn threshold_check(total_efficiency: f64, state: Entanglement) -> Verdict {
    if total_efficiency > state.threshold() {
        Verdict::LoopholeFreePossible
    } else {
        Verdict::DetectionLoophole
    }
}
