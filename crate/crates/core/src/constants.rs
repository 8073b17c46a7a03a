//! Registry of oscillation parameters and semileptonic branching ratios.
//!
//! Natural units (hbar = c = 1): times in seconds, rates and mass splittings
//! in s⁻¹. Only central values enter downstream computations; uncertainties
//! are carried for reporting.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Neutral meson species produced as an entangled pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    Kaon,
    #[serde(alias = "b", alias = "b-meson", alias = "b_meson")]
    BMeson,
}

impl FromStr for Species {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kaon" | "k" => Ok(Species::Kaon),
            "bmeson" | "b" | "b-meson" | "b_meson" => Ok(Species::BMeson),
            _ => Err(Error::UnknownSpecies(s.to_string())),
        }
    }
}

impl fmt::Display for Species {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Species::Kaon => f.write_str("kaon"),
            Species::BMeson => f.write_str("bmeson"),
        }
    }
}

/// Decay rates and mass splitting of one meson species.
///
/// `gamma_s` and `gamma_l` are the widths of the two CP eigenstates. For B
/// mesons they coincide.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillationParams {
    pub species: Species,
    pub gamma_s: f64,
    pub gamma_l: f64,
    pub delta_m: f64,
    pub gamma_s_err: f64,
    pub gamma_l_err: f64,
    pub delta_m_err: f64,
}

impl OscillationParams {
    pub const KAON: OscillationParams = OscillationParams {
        species: Species::Kaon,
        gamma_s: 1.1192e10,
        gamma_l: 1.934e7,
        delta_m: 0.5300e10,
        gamma_s_err: 0.0010e10,
        gamma_l_err: 0.015e7,
        delta_m_err: 0.0012e10,
    };

    pub const B_MESON: OscillationParams = OscillationParams {
        species: Species::BMeson,
        gamma_s: 0.646e12,
        gamma_l: 0.646e12,
        delta_m: 0.472e12,
        gamma_s_err: 0.013e12,
        gamma_l_err: 0.013e12,
        delta_m_err: 0.017e12,
    };

    /// Builds a parameter set with zero uncertainties, validating the rates.
    pub fn new(species: Species, gamma_s: f64, gamma_l: f64, delta_m: f64) -> Result<Self> {
        let p = OscillationParams {
            species,
            gamma_s,
            gamma_l,
            delta_m,
            gamma_s_err: 0.0,
            gamma_l_err: 0.0,
            delta_m_err: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite_pos = |x: f64| x.is_finite() && x > 0.0;
        if !finite_pos(self.gamma_s) || !finite_pos(self.gamma_l) {
            return Err(Error::InvalidParameter(format!(
                "decay rates must be finite and positive (gamma_s = {}, gamma_l = {})",
                self.gamma_s, self.gamma_l
            )));
        }
        // delta_m = 0 is allowed: it switches oscillation off.
        if !(self.delta_m.is_finite() && self.delta_m >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "delta_m must be finite and non-negative, got {}",
                self.delta_m
            )));
        }
        if self.gamma_s < self.gamma_l {
            return Err(Error::InvalidParameter(format!(
                "gamma_s = {} must not be smaller than gamma_l = {}",
                self.gamma_s, self.gamma_l
            )));
        }
        if self.species == Species::BMeson && self.gamma_s != self.gamma_l {
            return Err(Error::InvalidParameter(
                "B mesons use a single width: gamma_s must equal gamma_l".into(),
            ));
        }
        Ok(())
    }

    /// Mean width (gamma_s + gamma_l) / 2.
    pub fn gamma_mean(&self) -> f64 {
        0.5 * (self.gamma_s + self.gamma_l)
    }

    /// Mixing parameter x = delta_m / gamma for equal widths.
    pub fn mixing_x(&self) -> f64 {
        self.delta_m / self.gamma_mean()
    }

    /// Converts a time in units of 1/gamma_s to seconds.
    pub fn from_short_lifetimes(&self, t: f64) -> f64 {
        t / self.gamma_s
    }

    pub fn to_short_lifetimes(&self, t: f64) -> f64 {
        t * self.gamma_s
    }
}

/// Registry default for a species.
pub fn species_params(species: Species) -> OscillationParams {
    match species {
        Species::Kaon => OscillationParams::KAON,
        Species::BMeson => OscillationParams::B_MESON,
    }
}

/// Parent state of a tagging decay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parent {
    KShort,
    KLong,
    B0,
}

impl fmt::Display for Parent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parent::KShort => f.write_str("K_S"),
            Parent::KLong => f.write_str("K_L"),
            Parent::B0 => f.write_str("B0"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchingRecord {
    pub parent: Parent,
    pub channel: &'static str,
    pub ratio: f64,
    pub uncertainty: f64,
    /// Whether the channel counts toward the flavor-tagging total. Exclusive
    /// B channels are subsets of the inclusive l nu X mode and are excluded.
    pub tagging: bool,
}

pub const BRANCHING_RATIOS: [BranchingRecord; 6] = [
    BranchingRecord {
        parent: Parent::KShort,
        channel: "pi+ e- nu_e",
        ratio: 3.6e-4,
        uncertainty: 0.7e-4,
        tagging: true,
    },
    BranchingRecord {
        parent: Parent::KLong,
        channel: "pi+ e- nu_e",
        ratio: 0.1939,
        uncertainty: 0.0014,
        tagging: true,
    },
    BranchingRecord {
        parent: Parent::KLong,
        channel: "pi+ mu- nu_mu",
        ratio: 0.1359,
        uncertainty: 0.0013,
        tagging: true,
    },
    BranchingRecord {
        parent: Parent::B0,
        channel: "l+ nu_l X",
        ratio: 0.105,
        uncertainty: 0.008,
        tagging: true,
    },
    BranchingRecord {
        parent: Parent::B0,
        channel: "l+ nu_l rho-",
        ratio: 2.6e-4,
        uncertainty: 0.7e-4,
        tagging: false,
    },
    BranchingRecord {
        parent: Parent::B0,
        channel: "l+ nu_l pi-",
        ratio: 1.8e-4,
        uncertainty: 0.6e-4,
        tagging: false,
    },
];

pub fn branching_records(parent: Parent) -> impl Iterator<Item = &'static BranchingRecord> {
    BRANCHING_RATIOS.iter().filter(move |r| r.parent == parent)
}

/// Expected flavor-tagging efficiency at a B factory.
pub const B_TAGGING_EFFICIENCY: f64 = 0.45;

/// Sum of the tagging-channel branching ratios for `parent`.
pub fn semileptonic_total(parent: Parent) -> Result<f64> {
    let mut channels = branching_records(parent).filter(|r| r.tagging).peekable();
    if channels.peek().is_none() {
        return Err(Error::NoChannels(parent.to_string()));
    }
    Ok(channels.map(|r| r.ratio).sum())
}

/// Per-species overrides read from JSON. Absent keys keep registry values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsOverride {
    pub gamma_s: Option<f64>,
    pub gamma_l: Option<f64>,
    pub delta_m: Option<f64>,
}

/// JSON layout: `{"kaon": {"gamma_s": ...}, "bmeson": {"delta_m": ...}}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsOverride {
    #[serde(default)]
    pub kaon: ParamsOverride,
    #[serde(default, alias = "b_meson")]
    pub bmeson: ParamsOverride,
}

impl ConstantsOverride {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("constants: {e}")))
    }

    /// Registry values for `species` with overrides applied and validated.
    pub fn resolve(&self, species: Species) -> Result<OscillationParams> {
        let mut p = species_params(species);
        let o = match species {
            Species::Kaon => &self.kaon,
            Species::BMeson => &self.bmeson,
        };
        if let Some(v) = o.gamma_s {
            p.gamma_s = v;
            if species == Species::BMeson && o.gamma_l.is_none() {
                p.gamma_l = v;
            }
        }
        if let Some(v) = o.gamma_l {
            p.gamma_l = v;
            if species == Species::BMeson && o.gamma_s.is_none() {
                p.gamma_s = v;
            }
        }
        if let Some(v) = o.delta_m {
            p.delta_m = v;
        }
        p.validate()?;
        Ok(p)
    }
}
