//! Space-time Fourier transform of the periodic Schwinger function, the
//! infrared bound and the quadratic-form identity.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::green::e_function;
use super::model::{phi1, phi2, SpectralModel};
use crate::error::{domain, Error, Result};
use crate::geometry::{Bc, Convention, DualLattice};

const IMAG_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct FourierPoint {
    pub k: Vec<f64>,
    pub l: f64,
    pub c_hat: f64,
    pub imag: f64,
    /// `1/E(k, ℓ)`; infinite where `E` vanishes away from the origin.
    pub bound: f64,
    pub slack: f64,
}

/// `ĉ(k, ℓ)` over a truncated dual lattice, `ℓ = 2πm/β` with `|m| <= m_max`.
#[derive(Clone, Debug, Serialize)]
pub struct FourierTable {
    pub beta: f64,
    pub lambda: f64,
    pub delta: f64,
    pub half: usize,
    pub m_max: i64,
    pub momenta: Vec<Vec<f64>>,
    /// `values[k][m + m_max]`
    pub values: Vec<Vec<f64>>,
    pub chi: f64,
}

impl FourierTable {
    pub fn frequency(&self, m: i64) -> f64 {
        2.0 * PI * m as f64 / self.beta
    }

    pub fn get(&self, k: usize, m: i64) -> f64 {
        self.values[k][(m + self.m_max) as usize]
    }

    pub fn points(&self) -> Vec<FourierPoint> {
        let mut out = Vec::new();
        for (k, p) in self.momenta.iter().enumerate() {
            for m in -self.m_max..=self.m_max {
                let l = self.frequency(m);
                if m == 0 && p.iter().all(|&c| c == 0.0) {
                    continue;
                }
                let c_hat = self.get(k, m);
                let bound = match e_function(p, l, self.lambda, self.delta) {
                    Ok(e) if e > 0.0 => 1.0 / e,
                    _ => f64::INFINITY,
                };
                out.push(FourierPoint { k: p.clone(), l, c_hat, imag: 0.0, bound, slack: bound - c_hat });
            }
        }
        out
    }

    /// `c(x, t)` by Fourier inversion. The frequency tail beyond the table
    /// is added from the `a/ℓ² + b/ℓ⁴` asymptotics fitted to the two
    /// largest frequencies, summed in closed form.
    pub fn invert(&self, x: &[i64], t: f64) -> f64 {
        let omega = 2.0 * PI / self.beta;
        let u = (t / self.beta).rem_euclid(1.0);
        let mm = self.m_max;
        let full2 = PI * PI * (u * u - u + 1.0 / 6.0);
        let b4 = u.powi(4) - 2.0 * u.powi(3) + u * u - 1.0 / 30.0;
        let full4 = -(2.0 * PI).powi(4) * b4 / 48.0;
        let mut tail2 = full2;
        let mut tail4 = full4;
        for m in 1..=mm {
            let c = (2.0 * PI * m as f64 * u).cos();
            tail2 -= c / (m * m) as f64;
            tail4 -= c / ((m * m) as f64).powi(2);
        }
        let mut total = 0.0;
        for (k, p) in self.momenta.iter().enumerate() {
            let phase: f64 = p.iter().zip(x).map(|(a, &b)| a * b as f64).sum();
            let mut s = Complex64::new(0.0, 0.0);
            for m in -mm..=mm {
                let l = self.frequency(m);
                s += self.get(k, m) * Complex64::from_polar(1.0, -l * t);
            }
            if mm >= 2 {
                let (l1, l2) = (self.frequency(mm), self.frequency(mm - 1));
                let (c1, c2) = (self.get(k, mm), self.get(k, mm - 1));
                // c = a/ℓ² + b/ℓ⁴ at the two largest frequencies
                let (q1, q2) = (1.0 / (l1 * l1), 1.0 / (l2 * l2));
                let b = (c1 / q1 - c2 / q2) / (q1 - q2);
                let a = c1 / q1 - b * q1;
                s += 2.0 * (a * tail2 / (omega * omega) + b * tail4 / omega.powi(4));
            }
            total += (s * Complex64::from_polar(1.0, -phase)).re;
        }
        total / (self.momenta.len() as f64 * self.beta)
    }
}

fn check_fourier_model(model: &SpectralModel) -> Result<()> {
    if model.lattice().convention() != Convention::EvenSide || model.space() != Bc::Periodic {
        return Err(domain("Fourier sweep needs an even-side box with periodic edges"));
    }
    Ok(())
}

/// `Σ_{mn} P_mn (w_n - w_m)/(E_m - E_n + iℓ)` with the `ℓ = 0`,
/// near-degenerate terms in their limiting form.
fn frequency_kernel(wm: f64, wn: f64, em: f64, en: f64, beta: f64, l: f64) -> Complex64 {
    let d = em - en;
    if l == 0.0 {
        let lo = em.min(en);
        let g = d.abs();
        Complex64::new((-beta * lo).exp() * beta * phi1(beta * g), 0.0)
    } else {
        Complex64::new(wn - wm, 0.0) / Complex64::new(d, l)
    }
}

/// `ĉ(k, ℓ) = Σ_x ∫_0^β c(x,t) e^{ik·x} e^{iℓt} dt`, time integral per eigenpair in closed form.
pub fn schwinger_fourier(model: &SpectralModel, beta: f64, l_max: f64) -> Result<FourierTable> {
    check_fourier_model(model)?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(domain("Fourier transform needs finite β"));
    }
    let lattice = model.lattice();
    let dual = DualLattice::new(lattice, beta, l_max, true)?;
    let m_max = (dual.frequencies().len() as i64 - 1) / 2;
    let e = model.excitations();
    let dim = model.dim();
    let w: Vec<f64> = e.iter().map(|&x| (-beta * x).exp()).collect();
    let z: f64 = w.iter().sum();
    let origin = lattice.origin();
    let s0 = model.sigma3(origin);
    let mut values = Vec::with_capacity(dual.momenta().len());
    let mut chi = 0.0;
    for p in dual.momenta() {
        // P_mn = Σ_x e^{ik·x} (σ_x)_mn (σ_0)_nm
        let mut pmat = vec![Complex64::new(0.0, 0.0); dim * dim];
        for x in 0..lattice.len() {
            let phase: f64 = p.iter().zip(lattice.coords(x)).map(|(a, &b)| a * b as f64).sum();
            let f = Complex64::from_polar(1.0, phase);
            let sx = model.sigma3(x);
            for m in 0..dim {
                for n in 0..dim {
                    let a = sx[(m, n)] * s0[(n, m)];
                    if a != 0.0 {
                        pmat[m * dim + n] += f * a;
                    }
                }
            }
        }
        let mut row = Vec::with_capacity((2 * m_max + 1) as usize);
        for m in -m_max..=m_max {
            let l = 2.0 * PI * m as f64 / beta;
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..dim {
                for b in 0..dim {
                    let pv = pmat[a * dim + b];
                    if pv.norm_sqr() == 0.0 {
                        continue;
                    }
                    acc += pv * frequency_kernel(w[a], w[b], e[a], e[b], beta, l);
                }
            }
            acc /= z;
            if acc.im.abs() > IMAG_TOL {
                return Err(Error::Numerical(format!(
                    "ĉ(k={p:?}, ℓ={l}) has imaginary part {} beyond {IMAG_TOL}",
                    acc.im
                )));
            }
            if m == 0 && p.iter().all(|&c| c == 0.0) {
                chi = acc.re;
            }
            row.push(acc.re);
        }
        values.push(row);
    }
    let (lambda, delta, _) = model.params();
    Ok(FourierTable {
        beta,
        lambda,
        delta,
        half: lattice.half(),
        m_max,
        momenta: dual.momenta().to_vec(),
        values,
        chi,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct IrbReport {
    pub beta: f64,
    pub l_max: f64,
    pub n_points: usize,
    pub worst: FourierPoint,
    pub min_c_hat: f64,
    pub violations: Vec<FourierPoint>,
    /// `(1/E)/ĉ` at the largest frequency for each momentum.
    pub tail_ratios: Vec<f64>,
    pub chi: f64,
    pub passed: bool,
}

/// Checks `ĉ(ξ) <= 1/E(ξ)` at every `ξ ≠ 0` of the truncated dual lattice.
pub fn irb_check(model: &SpectralModel, beta: f64, l_max: f64) -> Result<(FourierTable, IrbReport)> {
    let table = schwinger_fourier(model, beta, l_max)?;
    let points = table.points();
    let worst = points
        .iter()
        .min_by(|a, b| a.slack.total_cmp(&b.slack))
        .cloned()
        .ok_or_else(|| domain("empty dual lattice"))?;
    let violations: Vec<FourierPoint> = points.iter().filter(|p| p.slack < -1e-9).cloned().collect();
    let min_c_hat = table.values.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
    let tail_ratios = (0..table.momenta.len())
        .map(|k| {
            let l = table.frequency(table.m_max);
            let e = e_function(&table.momenta[k], l, table.lambda, table.delta).unwrap_or(f64::NAN);
            1.0 / (e * table.get(k, table.m_max))
        })
        .collect();
    let report = IrbReport {
        beta,
        l_max,
        n_points: points.len(),
        passed: violations.is_empty() && min_c_hat >= -1e-9,
        worst,
        min_c_hat,
        violations,
        tail_ratios,
        chi: table.chi,
    };
    Ok((table, report))
}

/// Piecewise-constant test function: `values[x * cells + i]` on the `i`-th
/// of `cells` equal time cells of `[-β/2, β/2)`.
#[derive(Clone, Debug)]
pub struct TestFunction {
    pub cells: usize,
    pub values: Vec<Complex64>,
}

/// `Σ_{x,y} ∬ v(x,s) conj(v(y,t)) c(x-y, s-t) ds dt` in the time domain.
pub fn quadratic_form_direct(model: &SpectralModel, beta: f64, v: &TestFunction) -> Result<f64> {
    check_fourier_model(model)?;
    let n = model.n_sites();
    let cells = v.cells;
    if v.values.len() != n * cells || cells == 0 {
        return Err(domain("test function size mismatch"));
    }
    let h = beta / cells as f64;
    let e = model.excitations();
    let z: f64 = e.iter().map(|&x| (-beta * x).exp()).sum();
    let dim = model.dim();
    let mut total = Complex64::new(0.0, 0.0);
    for x in 0..n {
        for y in 0..n {
            let (sx, sy) = (model.sigma3(x), model.sigma3(y));
            // T(k) = ∫ tent_k(u) ⟨σ(y,t)σ(x,t+u)⟩ du, k = i - j
            let mut tent = vec![0.0; 2 * cells - 1];
            for (slot, value) in tent.iter_mut().enumerate() {
                let k = slot as i64 - (cells as i64 - 1);
                let centre = k as f64 * h;
                let mut acc = 0.0;
                for (a, rising) in [(centre - h, true), (centre, false)] {
                    let shift = if a < -1e-12 { beta } else { 0.0 };
                    let start = a + shift;
                    // weight at the start of the piece and its slope
                    let (w0, slope) = if rising { (0.0, 1.0) } else { (h, -1.0) };
                    for m in 0..dim {
                        for nn in 0..dim {
                            let amp = sx[(m, nn)] * sy[(nn, m)];
                            if amp == 0.0 {
                                continue;
                            }
                            let g0 = -(beta - start) * e[m] - start * e[nn];
                            acc += amp * linear_exp_segment(g0, e[m] - e[nn], h, w0, slope);
                        }
                    }
                }
                *value = acc / z;
            }
            for i in 0..cells {
                for j in 0..cells {
                    let k = i as i64 - j as i64 + cells as i64 - 1;
                    total += v.values[x * cells + i] * v.values[y * cells + j].conj() * tent[k as usize];
                }
            }
        }
    }
    Ok(total.re)
}

/// `∫_0^len (w0 + slope·u) exp(g0 + κu) du`.
fn linear_exp_segment(g0: f64, kappa: f64, len: f64, w0: f64, slope: f64) -> f64 {
    let x = kappa * len;
    if x >= 0.0 {
        let w_end = w0 + slope * len;
        (g0 + x).exp() * (w_end * len * phi1(x) - slope * len * len * phi2(x))
    } else {
        g0.exp() * (w0 * len * phi1(-x) + slope * len * len * phi2(-x))
    }
}

/// `(1/((2N)^d β)) Σ_ξ ĉ(ξ) |z_v(ξ)|²` over the table's frequencies.
pub fn quadratic_form_fourier(model: &SpectralModel, table: &FourierTable, v: &TestFunction) -> Result<f64> {
    let lattice = model.lattice();
    let cells = v.cells;
    let beta = table.beta;
    let h = beta / cells as f64;
    let mut total = 0.0;
    for (k, p) in table.momenta.iter().enumerate() {
        for m in -table.m_max..=table.m_max {
            let l = table.frequency(m);
            let mut zv = Complex64::new(0.0, 0.0);
            for x in 0..lattice.len() {
                let phase: f64 = p.iter().zip(lattice.coords(x)).map(|(a, &b)| a * b as f64).sum();
                let fx = Complex64::from_polar(1.0, -phase);
                for i in 0..cells {
                    let a = -0.5 * beta + i as f64 * h;
                    let cell = if m == 0 {
                        Complex64::new(h, 0.0)
                    } else {
                        (Complex64::from_polar(1.0, -l * a) - Complex64::from_polar(1.0, -l * (a + h)))
                            / Complex64::new(0.0, l)
                    };
                    zv += v.values[x * cells + i] * fx * cell;
                }
            }
            total += table.get(k, m) * zv.norm_sqr();
        }
    }
    Ok(total / (lattice.len() as f64 * beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::LatticeBox;

    fn ring(half: usize, lambda: f64) -> SpectralModel {
        let b = LatticeBox::even_side(1, half).unwrap();
        SpectralModel::build(&b, Bc::Periodic, lambda, 1.0, 0.0).unwrap()
    }

    #[test]
    fn needs_even_side_periodic() {
        let b = LatticeBox::symmetric(1, 1).unwrap();
        let m = SpectralModel::build(&b, Bc::Periodic, 1.0, 1.0, 0.0).unwrap();
        assert!(schwinger_fourier(&m, 1.0, 10.0).is_err());
    }

    #[test]
    fn chi_matches_direct_integral() {
        let m = ring(2, 1.0);
        let beta = 1.3;
        let table = schwinger_fourier(&m, beta, 20.0).unwrap();
        // composite Simpson on each site line
        let n = 2000;
        let h = beta / n as f64;
        let mut direct = 0.0;
        let o = m.lattice().origin();
        for x in 0..m.n_sites() {
            for i in 0..=n {
                let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                direct += w * m.schwinger(o, x, 0.0, i as f64 * h, crate::spectral::Beta::Finite(beta)).unwrap();
            }
        }
        direct *= h / 3.0;
        assert!((table.chi - direct).abs() < 1e-9, "{} vs {}", table.chi, direct);
    }

    #[test]
    fn zero_coupling_is_single_line() {
        // λ = 0: c(x,t) = 1{x=0} cosh(δ(β-2t))/cosh(δβ) on [0, β]
        let m = ring(2, 0.0);
        let beta = 2.0;
        let table = schwinger_fourier(&m, beta, 30.0).unwrap();
        for k in 0..table.momenta.len() {
            for mm in [0, 1, 5] {
                let l = table.frequency(mm);
                // ∫_0^β cosh(β - 2t) e^{iℓt} dt / cosh β, δ = 1
                let exact = (2.0 * beta.tanh()) * 2.0 / (4.0 + l * l);
                assert!((table.get(k, mm) - exact).abs() < 1e-12);
            }
        }
        let (_, report) = irb_check(&m, beta, 30.0).unwrap();
        assert!(report.passed);
    }

    #[test]
    fn inversion_recovers_schwinger() {
        let m = ring(2, 1.0);
        let beta = 1.0;
        let table = schwinger_fourier(&m, beta, 400.0 * PI).unwrap();
        let o = m.lattice().origin();
        for x in 0..m.n_sites() {
            for t in [0.0, 0.1, 0.37, 0.5, 0.9] {
                let c = m.schwinger(o, x, 0.0, t, crate::spectral::Beta::Finite(beta)).unwrap();
                let inv = table.invert(m.lattice().coords(x), t);
                assert!((c - inv).abs() < 1e-8, "x={x} t={t}: {c} vs {inv}");
            }
        }
    }

    #[test]
    fn quadratic_form_identity() {
        let m = ring(2, 0.9);
        let beta = 1.0;
        let cells = 6;
        let values = (0..m.n_sites() * cells)
            .map(|i| Complex64::new((i as f64 * 1.7).sin(), (i as f64 * 0.3).cos() - 0.5))
            .collect();
        let v = TestFunction { cells, values };
        let direct = quadratic_form_direct(&m, beta, &v).unwrap();
        let table = schwinger_fourier(&m, beta, 8000.0 * PI).unwrap();
        let fourier = quadratic_form_fourier(&m, &table, &v).unwrap();
        assert!(direct > 0.0);
        assert!((direct - fourier).abs() < 1e-8, "{direct} vs {fourier}");
    }

    #[test]
    fn linear_segment_matches_quadrature() {
        for &(g0, k, l, w0, s) in &[(-1.0, 0.5, 1.0, 0.0, 1.0), (-0.2, -3.0, 0.4, 0.4, -1.0), (-1.0, 0.0, 0.3, 0.3, -1.0)] {
            let n = 100_000;
            let h = l / n as f64;
            let numeric: f64 = (0..n)
                .map(|i| {
                    let u = (i as f64 + 0.5) * h;
                    (w0 + s * u) * (g0 + k * u).exp() * h
                })
                .sum();
            assert!((linear_exp_segment(g0, k, l, w0, s) - numeric).abs() < 1e-9);
        }
    }
}
