use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::hamiltonian::{boundary_vector, Hamiltonian};
use crate::error::{domain, Error, Result};
use crate::geometry::{Bc, LatticeBox};

pub const DEFAULT_STATE_CAP: usize = 1 << 12;

/// Inverse temperature, or the ground state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Beta {
    Finite(f64),
    Infinite,
}

/// Observables on the `2^n`-dimensional space.
#[derive(Clone, Debug)]
pub enum Observable {
    Identity,
    /// `σ¹_x`
    Transverse(usize),
    /// `σ³_x`
    Longitudinal(usize),
    /// `σ³_x σ³_y`
    LongitudinalPair(usize, usize),
    /// Dense matrix in the `σ¹` product basis.
    Matrix(DMatrix<f64>),
}

/// Full eigendecomposition of a finite-volume Hamiltonian.
#[derive(Debug)]
pub struct SpectralModel {
    lattice: LatticeBox,
    space: Bc,
    lambda: f64,
    delta: f64,
    gamma: f64,
    hamiltonian: Hamiltonian,
    energies: DVector<f64>,
    vectors: DMatrix<f64>,
    sigma3: Vec<OnceLock<DMatrix<f64>>>,
}

const DEGENERACY_TOL: f64 = 1e-9;

impl SpectralModel {
    pub fn build(lattice: &LatticeBox, space: Bc, lambda: f64, delta: f64, gamma: f64) -> Result<Self> {
        Self::build_with_cap(lattice, space, lambda, delta, gamma, DEFAULT_STATE_CAP)
    }

    pub fn build_with_cap(
        lattice: &LatticeBox,
        space: Bc,
        lambda: f64,
        delta: f64,
        gamma: f64,
        cap: usize,
    ) -> Result<Self> {
        let n = lattice.len();
        if n >= usize::BITS as usize - 1 || (1usize << n) > cap {
            return Err(Error::TooLarge { sites: n, cap });
        }
        if [lambda, delta, gamma].iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(domain("λ, δ, γ must be finite and nonnegative"));
        }
        let hamiltonian = Hamiltonian::for_box(lattice, space, lambda, delta, gamma)?;
        let eig = hamiltonian.dense().symmetric_eigen();
        let dim = hamiltonian.dim();
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let energies = DVector::from_fn(dim, |i, _| eig.eigenvalues[order[i]]);
        let vectors = DMatrix::from_fn(dim, dim, |s, i| eig.eigenvectors[(s, order[i])]);
        Ok(Self {
            lattice: lattice.clone(),
            space,
            lambda,
            delta,
            gamma,
            hamiltonian,
            energies,
            vectors,
            sigma3: (0..n).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn lattice(&self) -> &LatticeBox {
        &self.lattice
    }

    pub fn space(&self) -> Bc {
        self.space
    }

    pub fn params(&self) -> (f64, f64, f64) {
        (self.lambda, self.delta, self.gamma)
    }

    pub fn n_sites(&self) -> usize {
        self.lattice.len()
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &DVector<f64> {
        &self.energies
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.hamiltonian
    }

    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    /// Energies shifted so the ground state sits at 0.
    pub(crate) fn excitations(&self) -> DVector<f64> {
        self.energies.map(|e| e - self.energies[0])
    }

    pub fn ground_space(&self) -> usize {
        let scale = self.energies[0].abs().max(1.0);
        self.energies.iter().take_while(|&&e| e - self.energies[0] <= DEGENERACY_TOL * scale).count()
    }

    /// `max |H - Hᵀ|` of the assembled matrix.
    pub fn hermiticity_residue(&self) -> f64 {
        let h = self.hamiltonian.dense();
        (&h - h.transpose()).amax()
    }

    /// `max |V diag(E) Vᵀ - H|`.
    pub fn reconstruction_error(&self) -> f64 {
        let h = self.hamiltonian.dense();
        let rebuilt = &self.vectors * DMatrix::from_diagonal(&self.energies) * self.vectors.transpose();
        (rebuilt - h).amax()
    }

    /// `⟨m|σ³_x|n⟩` in the eigenbasis.
    pub fn sigma3(&self, site: usize) -> &DMatrix<f64> {
        self.sigma3[site].get_or_init(|| {
            let bit = 1usize << site;
            let flipped = DMatrix::from_fn(self.dim(), self.dim(), |s, m| self.vectors[(s ^ bit, m)]);
            self.vectors.transpose() * flipped
        })
    }

    fn diagonal_elements(&self, obs: &Observable) -> DVector<f64> {
        let dim = self.dim();
        let v = &self.vectors;
        match obs {
            Observable::Identity => DVector::from_element(dim, 1.0),
            Observable::Transverse(x) => {
                let bit = 1usize << x;
                DVector::from_fn(dim, |m, _| {
                    (0..dim).map(|s| if s & bit == 0 { v[(s, m)].powi(2) } else { -v[(s, m)].powi(2) }).sum()
                })
            }
            Observable::Longitudinal(x) => {
                let bit = 1usize << x;
                DVector::from_fn(dim, |m, _| (0..dim).map(|s| v[(s, m)] * v[(s ^ bit, m)]).sum())
            }
            Observable::LongitudinalPair(x, y) => {
                let bit = (1usize << x) ^ (1usize << y);
                DVector::from_fn(dim, |m, _| (0..dim).map(|s| v[(s, m)] * v[(s ^ bit, m)]).sum())
            }
            Observable::Matrix(q) => {
                let qv = q * v;
                DVector::from_fn(dim, |m, _| v.column(m).dot(&qv.column(m)))
            }
        }
    }

    /// `tr(Q e^{-βH}) / tr(e^{-βH})`; at `β = ∞` the ground space is averaged uniformly.
    pub fn thermal_expectation(&self, obs: &Observable, beta: Beta) -> Result<f64> {
        let diag = self.diagonal_elements(obs);
        let weights = self.boltzmann(beta)?;
        Ok(diag.dot(&weights) / weights.sum())
    }

    fn boltzmann(&self, beta: Beta) -> Result<DVector<f64>> {
        match beta {
            Beta::Finite(b) if b > 0.0 && b.is_finite() => Ok(self.excitations().map(|e| (-b * e).exp())),
            Beta::Finite(b) => Err(domain(format!("β must be positive and finite, got {b}"))),
            Beta::Infinite => {
                let g = self.ground_space();
                Ok(DVector::from_fn(self.dim(), |i, _| if i < g { 1.0 } else { 0.0 }))
            }
        }
    }

    /// `tr(e^{-(β-t+s)H} σ³_y e^{-(t-s)H} σ³_x) / tr(e^{-βH})`.
    pub fn schwinger(&self, x: usize, y: usize, s: f64, t: f64, beta: Beta) -> Result<f64> {
        let u = t - s;
        let e = self.excitations();
        let (sx, sy) = (self.sigma3(x), self.sigma3(y));
        let dim = self.dim();
        match beta {
            Beta::Finite(b) => {
                if !(u >= -1e-12 && u <= b + 1e-12) {
                    return Err(domain(format!("need 0 <= t - s <= β, got {u}")));
                }
                let u = u.clamp(0.0, b);
                let z: f64 = e.iter().map(|&em| (-b * em).exp()).sum();
                let mut acc = 0.0;
                for m in 0..dim {
                    let wm = (-(b - u) * e[m]).exp();
                    if wm == 0.0 {
                        continue;
                    }
                    for n in 0..dim {
                        acc += wm * sy[(m, n)] * (-u * e[n]).exp() * sx[(n, m)];
                    }
                }
                Ok(acc / z)
            }
            Beta::Infinite => {
                let g = self.ground_space();
                let (first, second) = if u >= 0.0 { (sy, sx) } else { (sx, sy) };
                let mut acc = 0.0;
                for m in 0..g {
                    for n in 0..dim {
                        acc += first[(m, n)] * (-u.abs() * e[n]).exp() * second[(n, m)];
                    }
                }
                Ok(acc / g as f64)
            }
        }
    }

    /// `⟨Π σ(x_i, t_i)⟩` for the time boundary condition `time` on
    /// `[-r/2, r/2]`: trace for periodic, boundary vectors for free/wired.
    pub fn correlation(&self, points: &[(usize, f64)], time: Bc, r: f64) -> Result<f64> {
        let h = 0.5 * r;
        if points.iter().any(|&(x, t)| x >= self.n_sites() || t < -h - 1e-12 || t > h + 1e-12) {
            return Err(domain("correlation points must lie in the region"));
        }
        let mut pts = points.to_vec();
        pts.sort_by(|a, b| a.1.total_cmp(&b.1));
        let e = self.excitations();
        let prop = |w: &DVector<f64>, dt: f64| DVector::from_fn(w.len(), |m, _| w[m] * (-dt.max(0.0) * e[m]).exp());
        match boundary_vector(self.n_sites(), time) {
            Some(phi) => {
                let u = self.vectors.transpose() * phi;
                let mut w = u.clone();
                let mut last = -h;
                for &(x, t) in &pts {
                    w = self.sigma3(x) * prop(&w, t - last);
                    last = t;
                }
                w = prop(&w, h - last);
                let z: f64 = u.iter().zip(e.iter()).map(|(c, em)| c * c * (-r * em).exp()).sum();
                Ok(u.dot(&w) / z)
            }
            None => {
                let z: f64 = e.iter().map(|em| (-r * em).exp()).sum();
                if pts.is_empty() {
                    return Ok(1.0);
                }
                let dim = self.dim();
                let span = pts.last().unwrap().1 - pts[0].1;
                let mut m = DMatrix::from_diagonal(&e.map(|em| (-(r - span) * em).exp()));
                let mut last = pts[0].1;
                for (i, &(x, t)) in pts.iter().enumerate() {
                    if i > 0 {
                        let d = e.map(|em| (-(t - last) * em).exp());
                        for c in 0..dim {
                            for rr in 0..dim {
                                m[(rr, c)] *= d[rr];
                            }
                        }
                        last = t;
                    }
                    m = self.sigma3(x) * m;
                }
                Ok(m.trace() / z)
            }
        }
    }

    /// `∫_{t0}^{t1} ⟨σ(0,0) σ(x,t)⟩ dt` for the trace state at inverse
    /// temperature `r`, in closed form; `[t0, t1] ⊂ [-r, r]`.
    pub(crate) fn integrated_pair_trace(&self, origin: usize, x: usize, r: f64, t0: f64, t1: f64) -> f64 {
        // for t >= 0: tr(e^{-(r-t)H} σ_x e^{-tH} σ_0) / Z; negative t wraps to t + r
        let mut total = 0.0;
        let mut pieces = Vec::new();
        if t0 < 0.0 {
            pieces.push((t0 + r, t1.min(0.0) + r));
        }
        if t1 > 0.0 {
            pieces.push((t0.max(0.0), t1));
        }
        let e = self.excitations();
        let z: f64 = e.iter().map(|em| (-r * em).exp()).sum();
        let (sx, s0) = (self.sigma3(x), self.sigma3(origin));
        for (a, b) in pieces {
            for m in 0..self.dim() {
                for n in 0..self.dim() {
                    let amp = sx[(m, n)] * s0[(n, m)];
                    if amp == 0.0 {
                        continue;
                    }
                    // exponent g(t) = -(r - t) E_m - t E_n
                    total += amp * exp_segment(-(r - a) * e[m] - a * e[n], e[m] - e[n], b - a);
                }
            }
        }
        total / z
    }

    /// Ground-state proxy correlation `⟨σ(0,0)σ(x,t)⟩` integrated over
    /// `t ∈ [-r/2, r/2]` with boundary vectors for `time`.
    pub(crate) fn integrated_pair_boundary(&self, origin: usize, x: usize, r: f64, time: Bc) -> Result<f64> {
        let phi = boundary_vector(self.n_sites(), time).ok_or_else(|| domain("needs free or wired time"))?;
        let h = 0.5 * r;
        let e = self.excitations();
        let u = self.vectors.transpose() * phi;
        let decay = |dt: f64| e.map(|em| (-dt * em).exp());
        let z: f64 = u.iter().zip(e.iter()).map(|(c, em)| c * c * (-r * em).exp()).sum();
        let (sx, s0) = (self.sigma3(x), self.sigma3(origin));
        // t >= 0: ⟨u| e^{-(h-t)H} σ_x e^{-tH} [σ_0 e^{-hH} u]⟩
        let right = s0 * u.component_mul(&decay(h));
        let left = u.clone();
        let mut total = 0.0;
        for m in 0..self.dim() {
            for n in 0..self.dim() {
                let amp = left[m] * sx[(m, n)] * right[n];
                if amp != 0.0 {
                    total += amp * exp_segment(-h * e[m], e[m] - e[n], h);
                }
            }
        }
        // t < 0: ⟨[u e^{-hH} σ_0]| e^{-(-t)H} σ_x e^{-(t+h)H} |u⟩
        let left = s0 * u.component_mul(&decay(h));
        for m in 0..self.dim() {
            for n in 0..self.dim() {
                let amp = left[m] * sx[(m, n)] * u[n];
                if amp != 0.0 {
                    // at t = -h + v: exponent -(h - v) E_m - v E_n
                    total += amp * exp_segment(-h * e[m], e[m] - e[n], h);
                }
            }
        }
        Ok(total / z)
    }

    /// `(1/|Λ_n|) Σ_{x∈Λ_n} ∫_{I_β} ⟨σ(0,0)σ(x,t)⟩ dt` for the trace state
    /// (finite β) or `(1/(|Λ_n| r)) Σ_x ∫_{I_r} ⟨σ(0,0)σ(x,t)⟩^{·,f} dt`
    /// with free time ends (ground-state proxy, `r` the time length).
    pub fn box_average(&self, n: usize, beta: Beta, r_ground: Option<f64>) -> Result<f64> {
        let inner = LatticeBox::new(self.lattice.dim(), n, self.lattice.convention())?;
        let origin = self.lattice.origin();
        let mut total = 0.0;
        for i in 0..inner.len() {
            let x = self.lattice.index(inner.coords(i)).ok_or_else(|| domain("averaging box exceeds model box"))?;
            total += match beta {
                Beta::Finite(b) => self.integrated_pair_trace(origin, x, b, -0.5 * b, 0.5 * b),
                Beta::Infinite => {
                    let r = r_ground.ok_or_else(|| domain("ground-state average needs r"))?;
                    self.integrated_pair_boundary(origin, x, r, Bc::Free)? / r
                }
            };
        }
        Ok(total / inner.len() as f64)
    }
}

/// `∫_0^len exp(g0 + κu) du` without overflow when `g0 + κu <= 0` on the range.
pub(crate) fn exp_segment(g0: f64, kappa: f64, len: f64) -> f64 {
    let x = kappa * len;
    if x >= 0.0 {
        // anchor at the right end
        (g0 + x).exp() * len * phi1(x)
    } else {
        g0.exp() * len * phi1(-x)
    }
}

/// `(1 - e^{-x}) / x`, equal to 1 at 0.
pub(crate) fn phi1(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    }
}

/// `(1 - e^{-x}(1 + x)) / x²`, equal to 1/2 at 0.
pub(crate) fn phi2(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        0.5 - x / 3.0 + x * x / 8.0 - x * x * x / 30.0
    } else {
        (1.0 - (-x).exp() * (1.0 + x)) / (x * x)
    }
}
