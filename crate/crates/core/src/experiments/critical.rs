//! Finite-size crossing estimate of the d = 1 ground-state critical point
//! from wired magnetization curves.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geometry::{Bc, LatticeBox, Region};
use crate::rng::{derive_seed, run_chains};
use crate::spin::MagnetizationRun;
use crate::stats::Estimate;

/// How magnetization curves of different sizes are made to cross.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "method")]
pub enum Scaling {
    /// `M_N(λ) L^x` with `L = 2N + 1`.
    KnownExponent { exponent: f64 },
    /// Crossings of `ln(M_N / M_N') / ln(L' / L)` for consecutive size pairs.
    EffectiveExponent,
}

impl Default for Scaling {
    fn default() -> Self {
        Scaling::KnownExponent { exponent: 0.125 }
    }
}

/// `M_N(λ)` on a common `λ` grid.
#[derive(Clone, Debug, Serialize)]
pub struct MagnetizationCurve {
    pub n: usize,
    pub lambdas: Vec<f64>,
    pub values: Vec<Estimate>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Crossing {
    pub sizes: Vec<usize>,
    /// In units of `δ`.
    pub lambda: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalEstimate {
    /// `λ_c / δ`.
    pub estimate: f64,
    /// Half the range of the crossings, or the interpolation error when larger.
    pub uncertainty: f64,
    pub crossings: Vec<Crossing>,
    /// Size groups whose curves do not cross on the grid.
    pub missing: Vec<Vec<usize>>,
    pub scaling: Scaling,
}

fn side(n: usize) -> f64 {
    (2 * n + 1) as f64
}

/// First sign change of `d` on the grid, linearly interpolated, with the
/// error propagated from `se` at the bracketing points.
fn first_crossing(lambdas: &[f64], d: &[f64], se: &[f64]) -> Option<(f64, f64)> {
    (0..d.len().saturating_sub(1)).find_map(|j| {
        let (d0, d1) = (d[j], d[j + 1]);
        if d0 == 0.0 {
            return Some((lambdas[j], se[j]));
        }
        if d0.signum() == d1.signum() {
            return None;
        }
        let slope = (d1 - d0) / (lambdas[j + 1] - lambdas[j]);
        let x = lambdas[j] - d0 / slope;
        let w = (x - lambdas[j]) / (lambdas[j + 1] - lambdas[j]);
        let err = ((1.0 - w) * se[j]).hypot(w * se[j + 1]) / slope.abs();
        Some((x, err))
    })
}

fn scaled(curve: &MagnetizationCurve, exponent: f64) -> (Vec<f64>, Vec<f64>) {
    let f = side(curve.n).powf(exponent);
    (curve.values.iter().map(|e| e.value * f).collect(), curve.values.iter().map(|e| e.stderr * f).collect())
}

fn effective(a: &MagnetizationCurve, b: &MagnetizationCurve) -> (Vec<f64>, Vec<f64>) {
    let log_ratio = (side(b.n) / side(a.n)).ln();
    let values = a.values.iter().zip(&b.values).map(|(x, y)| (x.value / y.value).ln() / log_ratio).collect();
    let errs = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x.stderr / x.value).hypot(y.stderr / y.value) / log_ratio)
        .collect();
    (values, errs)
}

/// Crossing estimate of `λ_c/δ` from curves of several sizes sharing one
/// `λ` grid.
pub fn estimate_lambda_c_1d(curves: &[MagnetizationCurve], delta: f64, scaling: Scaling) -> Result<CriticalEstimate> {
    let mut curves = curves.to_vec();
    curves.sort_by_key(|c| c.n);
    let needed = match scaling {
        Scaling::KnownExponent { .. } => 2,
        Scaling::EffectiveExponent => 3,
    };
    if curves.len() < needed {
        return Err(Error::Estimation(format!("a crossing needs at least {needed} sizes, got {}", curves.len())));
    }
    let lambdas = curves[0].lambdas.clone();
    if curves.iter().any(|c| c.lambdas != lambdas || c.values.len() != lambdas.len()) {
        return Err(domain("curves must share one λ grid"));
    }
    if !(delta > 0.0) {
        return Err(domain("δ must be positive"));
    }
    let mut crossings = Vec::new();
    let mut missing = Vec::new();
    let mut push = |sizes: Vec<usize>, a: (Vec<f64>, Vec<f64>), b: (Vec<f64>, Vec<f64>)| {
        let d: Vec<f64> = a.0.iter().zip(&b.0).map(|(x, y)| x - y).collect();
        let se: Vec<f64> = a.1.iter().zip(&b.1).map(|(x, y)| x.hypot(*y)).collect();
        match first_crossing(&lambdas, &d, &se) {
            Some((x, err)) => crossings.push(Crossing { sizes, lambda: x / delta, stderr: err / delta }),
            None => missing.push(sizes),
        }
    };
    match scaling {
        Scaling::KnownExponent { exponent } => {
            for i in 0..curves.len() {
                for j in i + 1..curves.len() {
                    push(vec![curves[i].n, curves[j].n], scaled(&curves[i], exponent), scaled(&curves[j], exponent));
                }
            }
        }
        Scaling::EffectiveExponent => {
            for w in curves.windows(3) {
                push(vec![w[0].n, w[1].n, w[2].n], effective(&w[0], &w[1]), effective(&w[1], &w[2]));
            }
        }
    }
    if crossings.is_empty() {
        return Err(Error::Estimation(format!("no crossing on the λ grid for size groups {missing:?}")));
    }
    let xs: Vec<f64> = crossings.iter().map(|c| c.lambda).collect();
    let estimate = xs.iter().sum::<f64>() / xs.len() as f64;
    let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let interp = (crossings.iter().map(|c| c.stderr * c.stderr).sum::<f64>()).sqrt() / crossings.len() as f64;
    Ok(CriticalEstimate { estimate, uncertainty: (0.5 * (hi - lo)).max(interp), crossings, missing, scaling })
}

/// Heat-bath settings for one magnetization point.
#[derive(Clone, Copy, Debug)]
pub struct HeatBathPlan {
    pub sweeps: usize,
    pub burn_in: usize,
    pub chains: usize,
    pub workers: usize,
    /// Batch means per chain for the error bar.
    pub batches: usize,
}

/// `M_N(λ)` on the wired ground-state proxy `r = 2N`, d = 1. Point
/// `(i, j)` of sizes × grid uses master seed `derive_seed(seed, i·|grid| + j)`.
pub fn magnetization_curves(sizes: &[usize], lambdas: &[f64], delta: f64, plan: HeatBathPlan, seed: u64) -> Result<Vec<MagnetizationCurve>> {
    let mut curves = Vec::with_capacity(sizes.len());
    for (i, &n) in sizes.iter().enumerate() {
        let region = Region::ground_state(LatticeBox::symmetric(1, n)?, Bc::Wired, Bc::Wired)?;
        let mut values = Vec::with_capacity(lambdas.len());
        for (j, &lambda) in lambdas.iter().enumerate() {
            let task = derive_seed(seed, (i * lambdas.len() + j) as u64);
            values.push(heat_bath_point(&region, lambda, delta, plan, task)?);
        }
        curves.push(MagnetizationCurve { n, lambdas: lambdas.to_vec(), values });
    }
    Ok(curves)
}

/// One magnetization estimate from `plan.chains` independent chains.
pub fn heat_bath_point(region: &Region, lambda: f64, delta: f64, plan: HeatBathPlan, seed: u64) -> Result<Estimate> {
    let per_chain = plan.sweeps.div_ceil(plan.chains.max(1));
    let runs = run_chains(seed, plan.chains.max(1), plan.workers, |_, rng| {
        MagnetizationRun::run(region, lambda, delta, plan.burn_in, per_chain, rng)
    });
    let runs: Vec<MagnetizationRun> = runs.into_iter().collect::<Result<_>>()?;
    Ok(MagnetizationRun::combine(&runs, plan.batches.max(2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::wired_magnetization;

    fn exact_curves(sizes: &[usize], lambdas: &[f64], delta: f64) -> Vec<MagnetizationCurve> {
        sizes
            .iter()
            .map(|&n| MagnetizationCurve {
                n,
                lambdas: lambdas.to_vec(),
                values: lambdas
                    .iter()
                    .map(|&l| Estimate { value: wired_magnetization(1, n, 2.0 * n as f64, l, delta).unwrap(), stderr: 1e-6, n: 1 })
                    .collect(),
            })
            .collect()
    }

    #[test]
    fn exact_curves_cross_near_one() {
        let lambdas = [0.8, 0.9, 1.0, 1.1, 1.2];
        let curves = exact_curves(&[2, 3, 4], &lambdas, 1.0);
        let known = estimate_lambda_c_1d(&curves, 1.0, Scaling::default()).unwrap();
        assert!((known.estimate - 1.0).abs() < 0.05, "{known:?}");
        let eff = estimate_lambda_c_1d(&curves, 1.0, Scaling::EffectiveExponent).unwrap();
        assert!((eff.estimate - 1.0).abs() < 0.15, "{eff:?}");
    }

    #[test]
    fn single_size_is_rejected() {
        let curves = exact_curves(&[3], &[0.9, 1.1], 1.0);
        assert!(matches!(estimate_lambda_c_1d(&curves, 1.0, Scaling::default()), Err(Error::Estimation(_))));
    }

    #[test]
    fn parallel_curves_report_no_crossing() {
        let flat = |n, v| MagnetizationCurve { n, lambdas: vec![1.0, 2.0], values: vec![Estimate::exact(v); 2] };
        let err = estimate_lambda_c_1d(&[flat(1, 0.5), flat(2, 0.1)], 1.0, Scaling::default()).unwrap_err();
        assert!(err.to_string().contains("no crossing"));
    }

    #[test]
    fn interpolation_is_linear() {
        let (x, _) = first_crossing(&[0.0, 1.0], &[1.0, -3.0], &[0.0, 0.0]).unwrap();
        assert!((x - 0.25).abs() < 1e-15);
    }
}
