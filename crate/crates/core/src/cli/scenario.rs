use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use crate::constants::{ConstantsOverride, OscillationParams, Species};
use crate::error::{Error, Result};
use crate::fit::{linear_grid, Objective, TbRule};
use crate::lrm::{EfficiencyWeights, Preset, RhoProfile, RhoTable};
use crate::qm::TimePair;

/// Scenario flags shared by `curve`, `fit` and `mc`. Every flag can also be
/// given in the `--config` JSON file under the same (kebab-case) name; flags
/// win over file values.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ScenarioArgs {
    /// JSON scenario file
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// kaon | bmeson
    #[arg(long)]
    pub species: Option<String>,

    /// zero | upper-short | lower-short | table:<csv of t,rho>
    #[arg(long)]
    pub rho: Option<String>,

    /// fig1 | fig2-text | fig2-caption | fig3 | fig4
    #[arg(long)]
    pub preset: Option<String>,

    /// a1,a2,a3,a4
    #[arg(long)]
    pub weights: Option<WeightsSpec>,

    /// Target total efficiency (mean of the weights)
    #[arg(long)]
    pub eta: Option<f64>,

    /// t_min:t_max:points for t_a
    #[arg(long)]
    pub grid: Option<String>,

    /// t_b as a function of t_a, e.g. "2*t_a", "t_a+0.5"
    #[arg(long)]
    pub tb_rule: Option<String>,

    /// Single t_a for `mc`
    #[arg(long)]
    pub t_a: Option<f64>,

    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long)]
    pub n_events: Option<u64>,

    /// match | underbound
    #[arg(long)]
    pub objective: Option<String>,

    /// JSON file overriding registry constants
    #[arg(long)]
    pub constants: Option<PathBuf>,

    /// Read and write times in seconds instead of units of 1/gamma_s
    #[arg(long)]
    #[serde(default)]
    pub seconds: bool,

    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Weights as "a1,a2,a3,a4" on the command line or an array in JSON.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum WeightsSpec {
    List([f64; 4]),
    #[serde(deserialize_with = "weights_from_text")]
    Text([f64; 4]),
}

impl WeightsSpec {
    pub fn values(&self) -> [f64; 4] {
        match self {
            WeightsSpec::List(a) | WeightsSpec::Text(a) => *a,
        }
    }
}

fn parse_weights(s: &str) -> std::result::Result<[f64; 4], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(format!("expected four comma-separated weights, got `{s}`"));
    }
    let mut a = [0.0; 4];
    for (slot, p) in a.iter_mut().zip(parts) {
        *slot = p.parse().map_err(|_| format!("bad weight `{p}`"))?;
    }
    Ok(a)
}

fn weights_from_text<'de, D>(d: D) -> std::result::Result<[f64; 4], D::Error>
where
    D: serde::Deserializer<'de>,
{
    let s = String::deserialize(d)?;
    parse_weights(&s).map_err(serde::de::Error::custom)
}

impl std::str::FromStr for WeightsSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        parse_weights(s).map(WeightsSpec::Text)
    }
}

impl ScenarioArgs {
    /// File values overlaid by explicitly given flags.
    pub fn merged(self) -> Result<ScenarioArgs> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = read(&path)?;
        let file: ScenarioArgs = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(ScenarioArgs {
            config: self.config,
            species: self.species.or(file.species),
            rho: self.rho.or(file.rho),
            preset: self.preset.or(file.preset),
            weights: self.weights.or(file.weights),
            eta: self.eta.or(file.eta),
            grid: self.grid.or(file.grid),
            tb_rule: self.tb_rule.or(file.tb_rule),
            t_a: self.t_a.or(file.t_a),
            seed: self.seed.or(file.seed),
            n_events: self.n_events.or(file.n_events),
            objective: self.objective.or(file.objective),
            constants: self.constants.or(file.constants),
            seconds: self.seconds || file.seconds,
            out: self.out.or(file.out),
        })
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Grid request in time-axis units, before conversion to seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
}

pub fn parse_grid(s: &str) -> Result<GridSpec> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let bad = || Error::Config(format!("grid must be t_min:t_max:points, got `{s}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let t_min: f64 = parts[0].parse().map_err(|_| bad())?;
    let t_max: f64 = parts[1].parse().map_err(|_| bad())?;
    let points: usize = parts[2].parse().map_err(|_| bad())?;
    if points < 2 {
        return Err(Error::Config(format!("grid needs at least 2 points, got {points}")));
    }
    if !(t_min.is_finite() && t_max.is_finite() && t_min >= 0.0 && t_max >= t_min) {
        return Err(Error::Config(format!("grid range must satisfy 0 <= t_min <= t_max, got `{s}`")));
    }
    Ok(GridSpec {
        t_min,
        t_max,
        points,
    })
}

/// Parses `k*t_a + c`, with either term optional (`t_a`, `2*t_a`, `t_a+1`, `3`).
pub fn parse_tb_rule(s: &str) -> Result<TbRule> {
    let bad = || Error::Config(format!("cannot parse t_b rule `{s}`"));
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(bad());
    }
    let mut rule = TbRule {
        scale: 0.0,
        offset: 0.0,
    };
    for term in compact.split('+') {
        if let Some(k) = term.strip_suffix("t_a") {
            let k = k.strip_suffix('*').unwrap_or(k);
            rule.scale += if k.is_empty() { 1.0 } else { k.parse::<f64>().map_err(|_| bad())? };
        } else {
            rule.offset += term.parse::<f64>().map_err(|_| bad())?;
        }
    }
    Ok(rule)
}

fn parse_rho(s: &str, to_seconds: impl Fn(f64) -> f64) -> Result<RhoProfile> {
    match s {
        "zero" | "0" => Ok(RhoProfile::Zero),
        "upper-short" => Ok(RhoProfile::SaturateUpperShort),
        "lower-short" => Ok(RhoProfile::SaturateLowerShort),
        _ => {
            let path = s
                .strip_prefix("table:")
                .ok_or_else(|| Error::Config(format!("unknown rho profile `{s}`")))?;
            let text = read(Path::new(path))?;
            let mut knots = Vec::new();
            for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
                let mut it = line.split(',').map(str::trim);
                let (Some(t), Some(r)) = (it.next(), it.next()) else {
                    return Err(Error::InvalidRhoTable(format!("bad line `{line}`")));
                };
                let (Ok(t), Ok(r)) = (t.parse::<f64>(), r.parse::<f64>()) else {
                    // header row
                    if knots.is_empty() {
                        continue;
                    }
                    return Err(Error::InvalidRhoTable(format!("bad line `{line}`")));
                };
                knots.push((to_seconds(t), r));
            }
            Ok(RhoProfile::Tabulated(RhoTable::new(knots)?))
        }
    }
}

/// A fully resolved scenario: all times in seconds.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub params: OscillationParams,
    pub rho: RhoProfile,
    pub weights: [f64; 4],
    pub weights_label: String,
    pub eta: Option<f64>,
    pub grid: Vec<TimePair>,
    pub tb_rule: TbRule,
    pub t_a: f64,
    pub seed: u64,
    pub n_events: u64,
    pub objective: Objective,
    pub seconds: bool,
    pub out: Option<PathBuf>,
}

pub const DEFAULT_GRID: &str = "0.2:5:200";
pub const DEFAULT_TB_RULE: &str = "2*t_a";
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_EVENTS: u64 = 1_000_000;

impl Scenario {
    pub fn resolve(args: ScenarioArgs) -> Result<Scenario> {
        let args = args.merged()?;
        let preset = args.preset.as_deref().map(str::parse::<Preset>).transpose()?;
        let species = match &args.species {
            Some(s) => s.parse()?,
            None => preset.map_or(Species::Kaon, Preset::species),
        };
        let overrides = match &args.constants {
            Some(path) => ConstantsOverride::from_json(&read(path)?)?,
            None => ConstantsOverride::default(),
        };
        let params = overrides.resolve(species)?;
        let seconds = args.seconds;
        let to_seconds = move |t: f64| if seconds { t } else { params.from_short_lifetimes(t) };

        let rho = match &args.rho {
            Some(s) => parse_rho(s, to_seconds)?,
            None => preset.map_or(RhoProfile::Zero, Preset::rho),
        };
        let (weights, weights_label) = match (&args.weights, preset) {
            (Some(w), _) => (w.values(), "custom".to_string()),
            (None, Some(p)) => (p.weights(), p.name().to_string()),
            (None, None) => ([1.0; 4], "unit".to_string()),
        };
        EfficiencyWeights::constant(weights)?;

        let g = parse_grid(args.grid.as_deref().unwrap_or(DEFAULT_GRID))?;
        let axis_rule = parse_tb_rule(args.tb_rule.as_deref().unwrap_or(DEFAULT_TB_RULE))?;
        let tb_rule = TbRule {
            scale: axis_rule.scale,
            offset: to_seconds(axis_rule.offset),
        };
        let grid = linear_grid(to_seconds(g.t_min), to_seconds(g.t_max), g.points, tb_rule)?;

        let objective = match args.objective.as_deref().unwrap_or("match") {
            "match" => Objective::MatchQm,
            "underbound" => Objective::UnderboundQm,
            other => return Err(Error::Config(format!("unknown objective `{other}`"))),
        };
        Ok(Scenario {
            params,
            rho,
            weights,
            weights_label,
            eta: args.eta,
            grid,
            tb_rule,
            t_a: to_seconds(args.t_a.unwrap_or(1.0)),
            seed: args.seed.unwrap_or(DEFAULT_SEED),
            n_events: args.n_events.unwrap_or(DEFAULT_EVENTS),
            objective,
            seconds,
            out: args.out,
        })
    }

    /// Time value as written to output (seconds or units of 1/gamma_s).
    pub fn axis(&self, t: f64) -> f64 {
        if self.seconds {
            t
        } else {
            self.params.to_short_lifetimes(t)
        }
    }

    pub fn mc_time(&self) -> Result<TimePair> {
        TimePair::new(self.t_a, self.tb_rule.apply(self.t_a))
    }
}
