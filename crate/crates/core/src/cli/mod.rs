//! Command-line front end: `curve`, `fit`, `thresholds` and `mc`.

mod scenario;

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use scenario::{parse_grid, parse_tb_rule, GridSpec, Scenario, ScenarioArgs, WeightsSpec};

use crate::bell::{threshold_check, Entanglement, MAXIMAL_THRESHOLD, NON_MAXIMAL_THRESHOLD, NO_BACKGROUND_CAVEAT};
use crate::constants::{semileptonic_total, Parent, B_TAGGING_EFFICIENCY};
use crate::error::{Error, Result};
use crate::fit::{evaluate_gap, fit_constant_weights, CurveTable, FitProblem, Objective};
use crate::lrm::{EfficiencyWeights, InitialPair, Preset};
use crate::mc::{analytic_value, simulate, SimConfig};
use crate::qm::qm_like_joint;

#[derive(Debug, Parser)]
#[command(name = "mesonbell", version, about = "Flavor-tag correlations of entangled neutral meson pairs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// QM and local-model curves on a time grid, as CSV
    Curve(ScenarioArgs),
    /// Fit constant efficiency weights at a given total efficiency
    Fit(ScenarioArgs),
    /// Detection-efficiency threshold report
    Thresholds(ThresholdArgs),
    /// Event-level simulation of the local model at one time pair
    Mc(ScenarioArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ThresholdArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Twelve significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.11e}")
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn emit(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => write_file(p, text),
        None => Ok(stdout.write_all(text.as_bytes())?),
    }
}

pub fn curve_csv(s: &Scenario, table: &CurveTable) -> String {
    let mut out = String::from("t_a,qm,lrm,p1,p2,p3,p4,gap\n");
    for r in &table.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            num(s.axis(r.t.t_a)),
            num(r.qm),
            num(r.lrm),
            num(r.p[0]),
            num(r.p[1]),
            num(r.p[2]),
            num(r.p[3]),
            num(r.gap)
        );
    }
    out
}

pub fn cmd_curve(s: &Scenario) -> Result<String> {
    let weights = EfficiencyWeights::constant(s.weights)?;
    let table = evaluate_gap(&s.params, &s.rho, &weights, &s.grid)?;
    Ok(curve_csv(s, &table))
}

/// Fit summary and the curve table at the fitted weights.
pub fn cmd_fit(s: &Scenario) -> Result<(String, String)> {
    let eta = s
        .eta
        .ok_or_else(|| Error::Config("fit needs --eta".into()))?;
    let problem = FitProblem {
        params: s.params,
        rho: s.rho.clone(),
        eta,
        grid: s.grid.clone(),
        objective: s.objective,
    };
    let fit = fit_constant_weights(&problem)?;
    let table = evaluate_gap(&s.params, &s.rho, &EfficiencyWeights::constant(fit.weights)?, &s.grid)?;

    let mut out = String::new();
    let _ = writeln!(out, "species={}", s.params.species);
    let _ = writeln!(out, "rho={}", s.rho.name());
    let objective = match s.objective {
        Objective::MatchQm => "match",
        Objective::UnderboundQm => "underbound",
    };
    let _ = writeln!(out, "objective={objective}");
    let _ = writeln!(out, "eta={}", num(eta));
    let _ = writeln!(out, "weights={}", fit.weights.map(num).join(","));
    let _ = writeln!(out, "achieved_eta={}", num(fit.achieved_eta));
    let _ = writeln!(out, "max_gap={}", num(fit.max_abs_gap));
    let _ = writeln!(out, "evaluations={}", fit.evaluations);
    for preset in Preset::ALL {
        if preset.species() != s.params.species || (preset.eta() - eta).abs() > 1e-12 {
            continue;
        }
        let w = EfficiencyWeights::constant(preset.weights())?;
        if let Ok(t) = evaluate_gap(&s.params, &s.rho, &w, &s.grid) {
            let _ = writeln!(out, "preset_gap.{}={}", preset.name(), num(t.objective(s.objective)));
        }
    }
    Ok((out, curve_csv(s, &table)))
}

pub fn cmd_thresholds() -> Result<String> {
    let rows = [
        ("K_S semileptonic total", semileptonic_total(Parent::KShort)?),
        ("K_L semileptonic total", semileptonic_total(Parent::KLong)?),
        ("B0 semileptonic total", semileptonic_total(Parent::B0)?),
        ("B0 tagging efficiency", B_TAGGING_EFFICIENCY),
    ];
    let mut out = format!(
        "# maximal threshold {MAXIMAL_THRESHOLD}, non-maximal threshold {NON_MAXIMAL_THRESHOLD}; {NO_BACKGROUND_CAVEAT}\n"
    );
    out.push_str("quantity,efficiency,maximal,non_maximal\n");
    for (name, eff) in rows {
        let _ = writeln!(
            out,
            "{name},{eff},{},{}",
            threshold_check(eff, Entanglement::Maximal),
            threshold_check(eff, Entanglement::NonMaximal)
        );
    }
    Ok(out)
}

/// Report text and per-pair CSV.
pub fn cmd_mc(s: &Scenario) -> Result<(String, String)> {
    let config = SimConfig {
        params: s.params,
        rho: s.rho.clone(),
        weights: EfficiencyWeights::constant(s.weights)?,
        t: s.mc_time()?,
        n_events: s.n_events,
        seed: s.seed,
    };
    let sim = simulate(&config)?;
    let analytic = analytic_value(&config)?;
    let qm = qm_like_joint(&s.params, config.t)?;

    let mut out = String::new();
    let _ = writeln!(out, "species={}", s.params.species);
    let _ = writeln!(out, "rho={}", s.rho.name());
    let _ = writeln!(out, "weights={} ({})", s.weights.map(num).join(","), s.weights_label);
    let _ = writeln!(out, "t_a={}", num(s.axis(config.t.t_a)));
    let _ = writeln!(out, "t_b={}", num(s.axis(config.t.t_b)));
    let _ = writeln!(out, "seed={}", s.seed);
    let _ = writeln!(out, "n_events={}", sim.n_events);
    let _ = writeln!(out, "estimate={}", num(sim.estimate));
    let _ = writeln!(out, "stderr={}", num(sim.stderr));
    let _ = writeln!(out, "analytic={}", num(analytic));
    let _ = writeln!(out, "qm={}", num(qm));
    let _ = writeln!(out, "pull={}", num((sim.estimate - analytic) / sim.stderr.max(f64::MIN_POSITIVE)));

    let mut csv = String::from("pair,drawn,like,accepted,accepted_like,acceptance_rate,weight\n");
    for (i, (c, w)) in sim.counts.iter().zip(s.weights).enumerate() {
        let rate = c.acceptance_rate().map_or_else(|| "nan".to_string(), num);
        let _ = writeln!(out, "acceptance_rate.{}={rate}", InitialPair::ALL[i].index());
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{rate},{}",
            InitialPair::ALL[i].index(),
            c.drawn,
            c.like,
            c.accepted,
            c.accepted_like,
            num(w)
        );
    }
    Ok((out, csv))
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Curve(args) => {
            let s = Scenario::resolve(args)?;
            emit(s.out.as_deref(), &cmd_curve(&s)?, stdout)
        }
        Command::Fit(args) => {
            let s = Scenario::resolve(args)?;
            let (summary, csv) = cmd_fit(&s)?;
            stdout.write_all(summary.as_bytes())?;
            match &s.out {
                Some(p) => write_file(p, &csv),
                None => Ok(()),
            }
        }
        Command::Thresholds(args) => emit(args.out.as_deref(), &cmd_thresholds()?, stdout),
        Command::Mc(args) => {
            let s = Scenario::resolve(args)?;
            let (report, csv) = cmd_mc(&s)?;
            stdout.write_all(report.as_bytes())?;
            match &s.out {
                Some(p) => write_file(p, &csv),
                None => Ok(()),
            }
        }
    }
}

/// `error: <kind>: <message>` on one line.
pub fn error_line(e: &Error) -> String {
    let msg = e.to_string().replace('\n', " ");
    format!("error: {}: {msg}", e.kind())
}
