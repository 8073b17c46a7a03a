//! Fitting acceptance weights so the local model reproduces, or stays below,
//! the quantum like-flavor curve at a fixed total efficiency.
//!
//! The total efficiency is the mean of the four weights. For constant
//! weights the problem is three-dimensional: the box [0, 1]^4 cut by the
//! hyperplane mean(a) = eta. The objective is a max-norm over the grid, so
//! it is convex but not smooth; the optimizer is a derivative-free projected
//! coordinate descent run from a fixed lattice of starts.

use rayon::prelude::*;
use serde::Serialize;

use crate::constants::OscillationParams;
use crate::error::{Error, Result};
use crate::lrm::{joint_probabilities, weighted_sum, EfficiencyWeights, RhoProfile};
use crate::qm::{qm_like_joint, TimePair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Objective {
    /// Minimize max |LRM - QM|.
    MatchQm,
    /// Minimize max (LRM - QM)+, i.e. push the model curve under QM.
    UnderboundQm,
}

/// How t_b follows t_a along a curve: t_b = scale * t_a + offset (seconds).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TbRule {
    pub scale: f64,
    pub offset: f64,
}

impl TbRule {
    pub const DOUBLE: TbRule = TbRule {
        scale: 2.0,
        offset: 0.0,
    };

    pub fn apply(&self, t_a: f64) -> f64 {
        self.scale * t_a + self.offset
    }
}

/// `n` evenly spaced t_a in [t_min, t_max] (seconds), t_b from `rule`.
pub fn linear_grid(t_min: f64, t_max: f64, n: usize, rule: TbRule) -> Result<Vec<TimePair>> {
    if n == 0 {
        return Err(Error::EmptyGrid);
    }
    if n == 1 {
        return Ok(vec![TimePair::new(t_min, rule.apply(t_min))?]);
    }
    (0..n)
        .map(|k| {
            let ta = t_min + (t_max - t_min) * k as f64 / (n - 1) as f64;
            TimePair::new(ta, rule.apply(ta))
        })
        .collect()
}

/// The curve shown in the figures: 200 points with t_a in [0.2, 5]/gamma_s
/// and t_b = 2 t_a.
pub fn figure_grid(params: &OscillationParams) -> Vec<TimePair> {
    linear_grid(0.2 / params.gamma_s, 5.0 / params.gamma_s, 200, TbRule::DOUBLE)
        .expect("static grid is valid")
}

#[derive(Debug, Clone)]
pub struct FitProblem {
    pub params: OscillationParams,
    pub rho: RhoProfile,
    pub eta: f64,
    pub grid: Vec<TimePair>,
    pub objective: Objective,
}

impl FitProblem {
    /// Problem on the default figure grid.
    pub fn new(params: OscillationParams, rho: RhoProfile, eta: f64, objective: Objective) -> Self {
        FitProblem {
            grid: figure_grid(&params),
            params,
            rho,
            eta,
            objective,
        }
    }

    pub fn with_grid(mut self, grid: Vec<TimePair>) -> Self {
        self.grid = grid;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveRow {
    pub t: TimePair,
    pub qm: f64,
    pub lrm: f64,
    pub p: [f64; 4],
    /// Signed difference lrm - qm.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveTable {
    pub rows: Vec<CurveRow>,
}

impl CurveTable {
    pub fn max_abs_gap(&self) -> f64 {
        self.rows.iter().map(|r| r.gap.abs()).fold(0.0, f64::max)
    }

    /// Largest positive excess of the model over QM (0 if never above).
    pub fn max_excess(&self) -> f64 {
        self.rows.iter().map(|r| r.gap).fold(0.0, f64::max)
    }

    pub fn objective(&self, objective: Objective) -> f64 {
        match objective {
            Objective::MatchQm => self.max_abs_gap(),
            Objective::UnderboundQm => self.max_excess(),
        }
    }
}

/// Per-point QM, model and the four P_i under `weights`.
pub fn evaluate_gap(
    params: &OscillationParams,
    rho: &RhoProfile,
    weights: &EfficiencyWeights,
    grid: &[TimePair],
) -> Result<CurveTable> {
    let rows = grid
        .par_iter()
        .map(|&t| {
            let qm = qm_like_joint(params, t)?;
            let p = joint_probabilities(params, rho, t)?;
            let lrm = weighted_sum(&weights.at(t)?, &p);
            Ok(CurveRow {
                t,
                qm,
                lrm,
                p,
                gap: lrm - qm,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CurveTable { rows })
}

/// Trivial weights at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrivialPoint {
    pub t: TimePair,
    pub qm: f64,
    pub p: [f64; 4],
    pub weights: [f64; 4],
    /// Mean of the four weights at this point.
    pub pointwise_eta: f64,
    /// The weighted sum can reproduce QM here (some P_i > 0, or QM = 0).
    pub defined: bool,
    /// Defined and every weight lies in [0, 1].
    pub feasible: bool,
}

/// Time-dependent weights a_i = P_QM / P_i evaluated on the grid.
#[derive(Debug, Clone)]
pub struct TrivialSolution {
    pub points: Vec<TrivialPoint>,
    pub weights: EfficiencyWeights,
}

impl TrivialSolution {
    /// Total efficiency is only defined pointwise for time-dependent weights;
    /// an event-averaged efficiency would need the decay-time distribution.
    pub const ETA_NOTE: &'static str =
        "eta reported as pointwise mean of a_i; event-averaged efficiency is not defined";

    pub fn infeasible(&self) -> impl Iterator<Item = &TrivialPoint> {
        self.points.iter().filter(|p| !p.feasible)
    }

    pub fn feasible_count(&self) -> usize {
        self.points.iter().filter(|p| p.feasible).count()
    }
}

/// Weights making (1/4) sum a_i P_i equal QM. Non-positive P_i get weight 0
/// and the remaining ratios are scaled by 4/m (m = number of positive P_i).
/// Weights above 1 are kept and flagged, not capped.
pub fn trivial_point_weights(qm: f64, p: &[f64; 4]) -> ([f64; 4], bool) {
    let m = p.iter().filter(|&&v| v > 0.0).count();
    if m == 0 {
        return ([0.0; 4], qm == 0.0);
    }
    let scale = 4.0 / m as f64;
    (p.map(|v| if v > 0.0 { scale * qm / v } else { 0.0 }), true)
}

pub fn trivial_weights(problem: &FitProblem) -> Result<TrivialSolution> {
    if problem.grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let (params, rho) = (problem.params, problem.rho.clone());
    let points = problem
        .grid
        .par_iter()
        .map(|&t| {
            let qm = qm_like_joint(&params, t)?;
            let p = joint_probabilities(&params, &rho, t)?;
            let (weights, defined) = trivial_point_weights(qm, &p);
            let feasible = defined && weights.iter().all(|w| (0.0..=1.0).contains(w));
            Ok(TrivialPoint {
                t,
                qm,
                p,
                weights,
                pointwise_eta: weights.iter().sum::<f64>() / 4.0,
                defined,
                feasible,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let weights = EfficiencyWeights::time_dependent(move |t| {
        match (qm_like_joint(&params, t), joint_probabilities(&params, &rho, t)) {
            (Ok(qm), Ok(p)) => trivial_point_weights(qm, &p).0,
            _ => [f64::NAN; 4],
        }
    });
    Ok(TrivialSolution { points, weights })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub weights: [f64; 4],
    pub achieved_eta: f64,
    /// Objective value: max |LRM - QM| for MatchQm, max (LRM - QM)+ for
    /// UnderboundQm.
    pub max_abs_gap: f64,
    /// Descent sweeps summed over all starts.
    pub iterations: usize,
    pub evaluations: usize,
    /// Lattice start that produced the result.
    pub start: usize,
}

/// Stop a descent when a full sweep improves the objective by less than this.
pub const IMPROVEMENT_TOL: f64 = 1e-12;
/// Objective evaluations allowed per start.
pub const EVALUATION_BUDGET: usize = 100_000;
const LATTICE_LOW: f64 = 0.15;
const LATTICE_HIGH: f64 = 0.85;
const GOLDEN_ITERATIONS: usize = 80;

/// Grid values needed by the objective, precomputed once.
struct Samples {
    p: Vec<[f64; 4]>,
    qm: Vec<f64>,
    objective: Objective,
}

impl Samples {
    fn new(problem: &FitProblem) -> Result<Self> {
        let rows: Vec<([f64; 4], f64)> = problem
            .grid
            .par_iter()
            .map(|&t| {
                Ok((
                    joint_probabilities(&problem.params, &problem.rho, t)?,
                    qm_like_joint(&problem.params, t)?,
                ))
            })
            .collect::<Result<_>>()?;
        let (p, qm) = rows.into_iter().unzip();
        Ok(Samples {
            p,
            qm,
            objective: problem.objective,
        })
    }

    fn eval(&self, a: &[f64; 4]) -> f64 {
        let gaps = self.p.iter().zip(&self.qm).map(|(p, q)| weighted_sum(a, p) - q);
        match self.objective {
            Objective::MatchQm => gaps.fold(0.0, |m, g| m.max(g.abs())),
            Objective::UnderboundQm => gaps.fold(0.0, f64::max),
        }
    }
}

/// Euclidean projection onto {a in [0,1]^4 : sum a = 4 eta}, found by
/// bisection on the shift tau in clamp(v - tau, 0, 1).
pub fn project_onto_feasible(v: [f64; 4], eta: f64) -> [f64; 4] {
    let target = 4.0 * eta;
    if v.iter().all(|x| (0.0..=1.0).contains(x)) && v.iter().sum::<f64>() == target {
        return v;
    }
    if eta >= 1.0 {
        return [1.0; 4];
    }
    let sum_at = |tau: f64| v.iter().map(|x| (x - tau).clamp(0.0, 1.0)).sum::<f64>();
    let (mut lo, mut hi) = (
        v.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0,
        v.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sum_at(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    let mut x = v.map(|x| (x - tau).clamp(0.0, 1.0));
    // Spread the bisection residual over the coordinates off the box faces.
    let free: Vec<usize> = (0..4).filter(|&i| x[i] > 0.0 && x[i] < 1.0).collect();
    if !free.is_empty() {
        let residual = (target - x.iter().sum::<f64>()) / free.len() as f64;
        for i in free {
            x[i] = (x[i] + residual).clamp(0.0, 1.0);
        }
    }
    x
}

/// The 16 lattice starts: corners of [LOW, HIGH]^4 projected onto the
/// feasible set.
pub fn lattice_starts(eta: f64) -> Vec<[f64; 4]> {
    (0u8..16)
        .map(|mask| {
            let v = [0, 1, 2, 3].map(|i| if mask & (1 << i) != 0 { LATTICE_HIGH } else { LATTICE_LOW });
            project_onto_feasible(v, eta)
        })
        .collect()
}

/// Search directions preserving the weight sum: the six pair transfers
/// e_i - e_j and the three balanced double transfers.
const DIRECTIONS: [[f64; 4]; 9] = [
    [1.0, -1.0, 0.0, 0.0],
    [1.0, 0.0, -1.0, 0.0],
    [1.0, 0.0, 0.0, -1.0],
    [0.0, 1.0, -1.0, 0.0],
    [0.0, 1.0, 0.0, -1.0],
    [0.0, 0.0, 1.0, -1.0],
    [1.0, 1.0, -1.0, -1.0],
    [1.0, -1.0, 1.0, -1.0],
    [1.0, -1.0, -1.0, 1.0],
];

fn step(a: &[f64; 4], d: &[f64; 4], s: f64) -> [f64; 4] {
    [0, 1, 2, 3].map(|i| (a[i] + s * d[i]).clamp(0.0, 1.0))
}

/// Feasible step interval along `d` keeping every weight inside [0, 1].
fn step_range(a: &[f64; 4], d: &[f64; 4]) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..4 {
        if d[i] > 0.0 {
            lo = lo.max(-a[i] / d[i]);
            hi = hi.min((1.0 - a[i]) / d[i]);
        } else if d[i] < 0.0 {
            lo = lo.max((1.0 - a[i]) / d[i]);
            hi = hi.min(-a[i] / d[i]);
        }
    }
    (lo.min(0.0), hi.max(0.0))
}

struct Descent {
    a: [f64; 4],
    f: f64,
    sweeps: usize,
    evaluations: usize,
}

fn line_search(samples: &Samples, a: &[f64; 4], d: &[f64; 4], evals: &mut usize) -> (f64, f64) {
    let (mut lo, mut hi) = step_range(a, d);
    let mut g = |s: f64| {
        *evals += 1;
        samples.eval(&step(a, d, s))
    };
    let mut best = (0.0, g(0.0));
    if hi - lo <= 0.0 {
        return best;
    }
    for s in [lo, hi] {
        let v = g(s);
        if v < best.1 {
            best = (s, v);
        }
    }
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (g(x1), g(x2));
    for _ in 0..GOLDEN_ITERATIONS {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = g(x2);
        }
    }
    for (s, v) in [(x1, f1), (x2, f2)] {
        if v < best.1 {
            best = (s, v);
        }
    }
    best
}

fn descend(samples: &Samples, start: [f64; 4]) -> Descent {
    let mut evaluations = 1;
    let mut a = start;
    let mut f = samples.eval(&a);
    let mut sweeps = 0;
    while evaluations < EVALUATION_BUDGET {
        sweeps += 1;
        let before = f;
        for d in &DIRECTIONS {
            let (s, v) = line_search(samples, &a, d, &mut evaluations);
            if v < f {
                a = step(&a, d, s);
                f = samples.eval(&a);
                evaluations += 1;
            }
        }
        if before - f < IMPROVEMENT_TOL {
            break;
        }
    }
    Descent {
        a,
        f,
        sweeps,
        evaluations,
    }
}

/// Best constant weights with mean eta, over the 16 lattice starts.
pub fn fit_constant_weights(problem: &FitProblem) -> Result<FitResult> {
    if !(problem.eta > 0.0 && problem.eta <= 1.0) {
        return Err(Error::InfeasibleEta(problem.eta));
    }
    if problem.grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let samples = Samples::new(problem)?;
    let mut best: Option<(usize, Descent)> = None;
    let (mut sweeps, mut evaluations) = (0, 0);
    for (k, start) in lattice_starts(problem.eta).into_iter().enumerate() {
        let d = descend(&samples, start);
        sweeps += d.sweeps;
        evaluations += d.evaluations;
        if best.as_ref().is_none_or(|(_, b)| d.f < b.f) {
            best = Some((k, d));
        }
    }
    let (start, d) = best.expect("16 starts");
    Ok(FitResult {
        weights: d.a,
        achieved_eta: d.a.iter().sum::<f64>() / 4.0,
        max_abs_gap: d.f,
        iterations: sweeps,
        evaluations,
        start,
    })
}

/// Objective of fixed constant weights on the problem's grid.
pub fn objective_of(problem: &FitProblem, weights: [f64; 4]) -> Result<f64> {
    let w = EfficiencyWeights::constant(weights)?;
    Ok(evaluate_gap(&problem.params, &problem.rho, &w, &problem.grid)?.objective(problem.objective))
}
