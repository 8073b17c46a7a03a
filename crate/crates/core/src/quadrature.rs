//! Adaptive Gauss-Kronrod (7/15) quadrature on finite intervals, and the
//! exponential map used to fold [0, inf) onto [0, 1).

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            rel_tol: 1e-10,
            abs_tol: 0.0,
            max_intervals: 4000,
        }
    }
}

fn gk15<F>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, &x) in XGK.iter().enumerate().take(7) {
        let dx = h * x;
        let sum = f(c - dx)? + f(c + dx)?;
        kronrod += WGK[j] * sum;
        // Gauss nodes sit at odd Kronrod indices.
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    Ok((kronrod * h, ((kronrod - gauss) * h).abs()))
}

/// Integrates `f` over [a, b], bisecting the interval with the largest error
/// estimate until `error <= max(abs_tol, rel_tol * |value|)`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, cfg: QuadConfig) -> Result<Integral>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut intervals: Vec<(f64, f64, f64, f64)> = Vec::new();
    let (v, e) = gk15(&mut f, a, b)?;
    intervals.push((a, b, v, e));
    let mut evaluations = 15;
    loop {
        let value: f64 = intervals.iter().map(|iv| iv.2).sum();
        let error: f64 = intervals.iter().map(|iv| iv.3).sum();
        let target = cfg.abs_tol.max(cfg.rel_tol * value.abs());
        if error <= target || error == 0.0 {
            return Ok(Integral {
                value,
                error,
                evaluations,
            });
        }
        if intervals.len() >= cfg.max_intervals {
            return Err(Error::QuadratureNonConvergence {
                tolerance: cfg.rel_tol,
                estimate: if value != 0.0 { error / value.abs() } else { error },
            });
        }
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, _, _) = intervals.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Err(Error::QuadratureNonConvergence {
                tolerance: cfg.rel_tol,
                estimate: if value != 0.0 { error / value.abs() } else { error },
            });
        }
        let (v1, e1) = gk15(&mut f, lo, mid)?;
        let (v2, e2) = gk15(&mut f, mid, hi)?;
        evaluations += 30;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
}

/// Integrates `f(t)` over t in [0, inf) through u = 1 - exp(-rate t).
///
/// The transformed integrand is f(t(u)) / (rate (1 - u)). Gauss-Kronrod never
/// samples the endpoint u = 1.
pub fn integrate_semi_infinite<F>(mut f: F, rate: f64, cfg: QuadConfig) -> Result<Integral>
where
    F: FnMut(f64) -> Result<f64>,
{
    integrate(
        |u| {
            let one_minus = 1.0 - u;
            let t = -(-u).ln_1p() / rate;
            Ok(f(t)? / (rate * one_minus))
        },
        0.0,
        1.0,
        cfg,
    )
}
