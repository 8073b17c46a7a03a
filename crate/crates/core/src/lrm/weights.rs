use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::RhoProfile;
use crate::constants::Species;
use crate::error::{Error, Result};
use crate::qm::TimePair;

type WeightFn = dyn Fn(TimePair) -> [f64; 4] + Send + Sync;

/// Acceptance weights a1..a4 multiplying the four hidden-pair joints.
#[derive(Clone)]
pub enum EfficiencyWeights {
    Constant([f64; 4]),
    TimeDependent(Arc<WeightFn>),
}

impl fmt::Debug for EfficiencyWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EfficiencyWeights::Constant(a) => f.debug_tuple("Constant").field(a).finish(),
            EfficiencyWeights::TimeDependent(_) => f.write_str("TimeDependent(..)"),
        }
    }
}

impl EfficiencyWeights {
    pub const UNIT: EfficiencyWeights = EfficiencyWeights::Constant([1.0; 4]);

    pub fn constant(a: [f64; 4]) -> Result<Self> {
        check(&a)?;
        Ok(EfficiencyWeights::Constant(a))
    }

    pub fn time_dependent<F>(f: F) -> Self
    where
        F: Fn(TimePair) -> [f64; 4] + Send + Sync + 'static,
    {
        EfficiencyWeights::TimeDependent(Arc::new(f))
    }

    /// Weights at `t`, rejected if any leaves [0, 1].
    pub fn at(&self, t: TimePair) -> Result<[f64; 4]> {
        let a = match self {
            EfficiencyWeights::Constant(a) => *a,
            EfficiencyWeights::TimeDependent(f) => f(t),
        };
        check(&a)?;
        Ok(a)
    }

    /// Pointwise total efficiency, the mean of the four weights.
    pub fn eta_at(&self, t: TimePair) -> Result<f64> {
        Ok(self.at(t)?.iter().sum::<f64>() / 4.0)
    }
}

fn check(a: &[f64; 4]) -> Result<()> {
    for (i, &v) in a.iter().enumerate() {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::WeightOutOfRange {
                index: i + 1,
                value: v,
            });
        }
    }
    Ok(())
}

/// Weight sets shown in the figures. The second figure has two variants
/// because its text and caption disagree; both are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig1,
    Fig2Text,
    Fig2Caption,
    Fig3,
    Fig4,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Fig1,
        Preset::Fig2Text,
        Preset::Fig2Caption,
        Preset::Fig3,
        Preset::Fig4,
    ];

    pub fn weights(self) -> [f64; 4] {
        match self {
            Preset::Fig1 => [1.0, 1.0, 1.0, 1.0],
            Preset::Fig2Text => [1.0, 0.07, 0.03, 0.1],
            Preset::Fig2Caption => [0.5, 0.13, 0.5, 0.07],
            Preset::Fig3 => [1.0, 0.13, 0.03, 0.04],
            Preset::Fig4 => [0.52, 0.08, 0.52, 0.08],
        }
    }

    pub fn species(self) -> Species {
        match self {
            Preset::Fig4 => Species::BMeson,
            _ => Species::Kaon,
        }
    }

    pub fn rho(self) -> RhoProfile {
        match self {
            Preset::Fig1 | Preset::Fig2Text | Preset::Fig2Caption => RhoProfile::SaturateUpperShort,
            Preset::Fig3 | Preset::Fig4 => RhoProfile::Zero,
        }
    }

    /// Mean of the preset weights.
    pub fn eta(self) -> f64 {
        self.weights().iter().sum::<f64>() / 4.0
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig1 => "fig1",
            Preset::Fig2Text => "fig2-text",
            Preset::Fig2Caption => "fig2-caption",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset `{s}`")))
    }
}
