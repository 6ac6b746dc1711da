//! The infrared kernel `1/E(p, q)` and its lattice and continuum Fourier sums.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::geometry::graph_laplacian_ft;

/// `E(p, q) = (2λL̂(p) + q²/(2δ)) / 48`.
pub fn e_function(p: &[f64], q: f64, lambda: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) || lambda < 0.0 {
        return Err(domain("need δ > 0 and λ >= 0"));
    }
    if q == 0.0 && p.iter().all(|&c| c == 0.0) {
        return Err(Error::Singular("E vanishes at (p, q) = 0".into()));
    }
    let lap = graph_laplacian_ft(p)?;
    Ok((2.0 * lambda * lap + q * q / (2.0 * delta)) / 48.0)
}

/// `Σ_{ℓ ∈ (2π/r)Z} e^{-iℓu} / (c² + ℓ²)`, dropping `ℓ = 0` when `c = 0`.
fn frequency_sum(c: f64, r: f64, u: f64) -> f64 {
    let v = u.rem_euclid(r);
    if c == 0.0 {
        let x = v / r;
        0.5 * r * r * (x * x - x + 1.0 / 6.0)
    } else {
        let denom = -(-c * r).exp_m1();
        r / (2.0 * c) * ((-c * v).exp() + (-c * (r - v)).exp()) / denom
    }
}

fn check_params(lambda: f64, delta: f64) -> Result<()> {
    if lambda > 0.0 && delta > 0.0 {
        Ok(())
    } else {
        Err(domain("G functions need λ > 0 and δ > 0"))
    }
}

/// `G_{N,r}` as an exact dual-lattice sum, the frequency sum in closed form.
/// `dx = x - y`, `dt = s - t`.
pub fn green_lattice(dx: &[i64], dt: f64, half: usize, r: f64, lambda: f64, delta: f64) -> Result<f64> {
    check_params(lambda, delta)?;
    if half == 0 || !(r > 0.0) {
        return Err(domain("need N >= 1 and r > 0"));
    }
    let d = dx.len();
    let side = 2 * half;
    let n_momenta = side.pow(d as u32);
    let mut total = 0.0;
    let mut p = vec![0.0; d];
    for idx in 0..n_momenta {
        let mut rest = idx;
        for c in p.iter_mut() {
            let j = (rest % side) as i64 - half as i64 + 1;
            rest /= side;
            *c = PI * j as f64 / half as f64;
        }
        let c2 = 4.0 * lambda * delta * graph_laplacian_ft(&p)?;
        let phase: f64 = p.iter().zip(dx).map(|(a, &b)| a * b as f64).sum();
        total += phase.cos() * frequency_sum(c2.sqrt(), r, dt);
    }
    Ok(96.0 * delta * total / (n_momenta as f64 * r))
}

/// Quadrature value and the difference between two refinements.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub nodes: usize,
}

/// Midpoint rule on `(-π, π]^d` at `n` and `2n` nodes per axis.
fn momentum_integral(d: usize, n: usize, f: impl Fn(&[f64]) -> f64) -> Quadrature {
    let rule = |m: usize| {
        let h = 2.0 * PI / m as f64;
        let total_nodes = m.pow(d as u32);
        let mut p = vec![0.0; d];
        let mut acc = 0.0;
        for idx in 0..total_nodes {
            let mut rest = idx;
            for c in p.iter_mut() {
                *c = -PI + h * ((rest % m) as f64 + 0.5);
                rest /= m;
            }
            acc += f(&p);
        }
        acc * h.powi(d as i32)
    };
    let coarse = rule(n);
    let fine = rule(2 * n);
    Quadrature { value: fine, error: (fine - coarse).abs(), nodes: (2 * n).pow(d as u32) }
}

/// Continuum `G_β`: momentum integral by quadrature, frequency sum exact.
pub fn green_finite_beta(dx: &[i64], dt: f64, beta: f64, lambda: f64, delta: f64, nodes: usize) -> Result<Quadrature> {
    check_params(lambda, delta)?;
    let d = dx.len();
    if !integrability(d, false).converges {
        return Err(Error::Numerical(format!("∫1/E diverges in d = {d} at finite β")));
    }
    let q = momentum_integral(d, nodes, |p| {
        let c = (4.0 * lambda * delta * p.iter().map(|c| 1.0 - c.cos()).sum::<f64>()).sqrt();
        let phase: f64 = p.iter().zip(dx).map(|(a, &b)| a * b as f64).sum();
        phase.cos() * frequency_sum(c, beta, dt)
    });
    let scale = 96.0 * delta / ((2.0 * PI).powi(d as i32) * beta);
    finite_quadrature(q, scale)
}

/// Continuum `G_∞`: the `q` integral is `π e^{-c|t|}/c`, the momentum
/// integral by quadrature.
pub fn green_ground(dx: &[i64], dt: f64, lambda: f64, delta: f64, nodes: usize) -> Result<Quadrature> {
    check_params(lambda, delta)?;
    let d = dx.len();
    if !integrability(d, true).converges {
        return Err(Error::Numerical(format!("∫1/E diverges in d = {d} at β = ∞")));
    }
    let q = momentum_integral(d, nodes, |p| {
        let c = (4.0 * lambda * delta * p.iter().map(|c| 1.0 - c.cos()).sum::<f64>()).sqrt();
        let phase: f64 = p.iter().zip(dx).map(|(a, &b)| a * b as f64).sum();
        phase.cos() * PI * (-c * dt.abs()).exp() / c
    });
    let scale = 96.0 * delta / (2.0 * PI).powi(d as i32 + 1);
    finite_quadrature(q, scale)
}

fn finite_quadrature(q: Quadrature, scale: f64) -> Result<Quadrature> {
    if !q.value.is_finite() {
        return Err(Error::Numerical(format!("quadrature produced {} with {} nodes", q.value, q.nodes)));
    }
    Ok(Quadrature { value: q.value * scale, error: q.error * scale, nodes: q.nodes })
}

/// Shell-ratio test for `∫ L̂(p)^{-α} dp` near `p = 0`, with `α = 1` at
/// finite β and `α = 1/2` at β = ∞.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Integrability {
    pub dim: usize,
    pub exponent: f64,
    /// `∫_{shell ε/2} / ∫_{shell ε}`; tends to `2^{2α-d}`.
    pub shell_ratio: f64,
    pub converges: bool,
}

pub fn integrability(dim: usize, ground_state: bool) -> Integrability {
    let alpha = if ground_state { 0.5 } else { 1.0 };
    let shell = |eps: f64| {
        // midpoint grid on [-ε, ε]^d minus [-ε/2, ε/2]^d
        let m = 16usize;
        let h = 2.0 * eps / m as f64;
        let total = m.pow(dim as u32);
        let mut p = vec![0.0; dim];
        let mut acc = 0.0;
        for idx in 0..total {
            let mut rest = idx;
            for c in p.iter_mut() {
                *c = -eps + h * ((rest % m) as f64 + 0.5);
                rest /= m;
            }
            if p.iter().all(|c| c.abs() < 0.5 * eps) {
                continue;
            }
            let lap: f64 = p.iter().map(|c| 1.0 - c.cos()).sum();
            acc += lap.powf(-alpha);
        }
        acc * h.powi(dim as i32)
    };
    let eps = 1e-2;
    let shell_ratio = shell(0.5 * eps) / shell(eps);
    Integrability { dim, exponent: alpha, shell_ratio, converges: shell_ratio < 0.75 }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn e_function_values() {
        assert!((e_function(&[PI], 0.0, 1.0, 1.0).unwrap() - 1.0 / 12.0).abs() < 1e-15);
        assert!((e_function(&[0.0, 0.0], 3.0, 0.4, 0.5).unwrap() - 9.0 / 48.0).abs() < 1e-15);
        assert!(matches!(e_function(&[0.0], 0.0, 1.0, 1.0), Err(Error::Singular(_))));
    }

    #[test]
    fn frequency_sum_matches_truncation() {
        let (r, u) = (2.0, 0.3);
        for c in [0.0, 0.7, 3.0] {
            let mut direct = 0.0;
            for m in -200_000i64..=200_000 {
                let l = 2.0 * PI * m as f64 / r;
                if c == 0.0 && m == 0 {
                    continue;
                }
                direct += (l * u).cos() / (c * c + l * l);
            }
            assert!((frequency_sum(c, r, u) - direct).abs() < 1e-6, "c={c}");
        }
    }

    #[test]
    fn lattice_green_is_symmetric() {
        let a = green_lattice(&[1, -1], 0.4, 2, 1.5, 1.0, 1.0).unwrap();
        let b = green_lattice(&[-1, 1], -0.4, 2, 1.5, 1.0, 1.0).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn integrability_thresholds() {
        assert!(integrability(3, false).converges);
        assert!(!integrability(2, false).converges);
        assert!(!integrability(1, false).converges);
        assert!(integrability(2, true).converges);
        assert!(!integrability(1, true).converges);
        assert!((integrability(3, false).shell_ratio - 0.5).abs() < 0.01);
    }

    #[test]
    fn continuum_limits_need_dimension() {
        assert!(green_finite_beta(&[0, 0], 0.0, 1.0, 1.0, 1.0, 8).is_err());
        assert!(green_ground(&[0], 0.0, 1.0, 1.0, 8).is_err());
        let g = green_ground(&[1, 0], 0.5, 1.0, 1.0, 32).unwrap();
        assert!(g.value.is_finite() && g.value > 0.0);
    }
}
