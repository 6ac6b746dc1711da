//! `H = -λ Σ σ³σ³ - δ Σ σ¹ - Σ h_x σ³_x` on `2^n` states, with
//! `σ¹ = diag(1, -1)` and `σ³ = [[0, 1], [1, 0]]`.
//!
//! Basis state `s` has bit `x` set when `σ¹_x = -1`, so `σ¹` is diagonal
//! and `σ³_x` flips bit `x`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{Bc, EdgeMode, EdgeSet, LatticeBox};

#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    n_sites: usize,
    bonds: Vec<(usize, usize)>,
    coupling: f64,
    transverse: f64,
    fields: Vec<f64>,
}

impl Hamiltonian {
    pub fn new(n_sites: usize, bonds: Vec<(usize, usize)>, coupling: f64, transverse: f64, fields: Vec<f64>) -> Result<Self> {
        if fields.len() != n_sites {
            return Err(Error::Domain("one field per site".into()));
        }
        if bonds.iter().any(|&(i, j)| i >= n_sites || j >= n_sites || i == j) {
            return Err(Error::Domain("bond endpoints must be distinct sites".into()));
        }
        if n_sites >= 31 {
            return Err(Error::TooLarge { sites: n_sites, cap: 1 << 30 });
        }
        Ok(Self { n_sites, bonds, coupling, transverse, fields })
    }

    /// Box Hamiltonian with spatial boundary condition `space`. Wired
    /// boundaries become a longitudinal field `λ·(exterior neighbours)`.
    pub fn for_box(lattice: &LatticeBox, space: Bc, lambda: f64, delta: f64, gamma: f64) -> Result<Self> {
        let n = lattice.len();
        let mut fields = vec![gamma; n];
        let mode = match space {
            Bc::Free => EdgeMode::Free,
            Bc::Wired => EdgeMode::WiredExtended,
            Bc::Periodic => EdgeMode::SpatiallyPeriodic,
        };
        let edges = EdgeSet::new(lattice, mode)?;
        let mut bonds = Vec::new();
        for &(i, j) in edges.edges() {
            match (edges.is_frozen(i), edges.is_frozen(j)) {
                (false, false) => bonds.push((i, j)),
                (false, true) => fields[i] += lambda,
                (true, false) => fields[j] += lambda,
                (true, true) => {}
            }
        }
        Self::new(n, bonds, lambda, delta, fields)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        1 << self.n_sites
    }

    pub fn bonds(&self) -> &[(usize, usize)] {
        &self.bonds
    }

    fn diagonal(&self, s: usize) -> f64 {
        -self.transverse * (self.n_sites as f64 - 2.0 * s.count_ones() as f64)
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let dim = self.dim();
        let mut h = DMatrix::zeros(dim, dim);
        for s in 0..dim {
            h[(s, s)] += self.diagonal(s);
            for &(i, j) in &self.bonds {
                h[(s ^ (1 << i) ^ (1 << j), s)] -= self.coupling;
            }
            for (i, &f) in self.fields.iter().enumerate() {
                if f != 0.0 {
                    h[(s ^ (1 << i), s)] -= f;
                }
            }
        }
        h
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(v.len());
        for s in 0..v.len() {
            let x = v[s];
            if x == 0.0 {
                continue;
            }
            out[s] += self.diagonal(s) * x;
            for &(i, j) in &self.bonds {
                out[s ^ (1 << i) ^ (1 << j)] -= self.coupling * x;
            }
            for (i, &f) in self.fields.iter().enumerate() {
                if f != 0.0 {
                    out[s ^ (1 << i)] -= f * x;
                }
            }
        }
        out
    }

    /// Gershgorin interval containing the spectrum.
    pub fn spectral_bounds(&self) -> (f64, f64) {
        let off = self.coupling.abs() * self.bonds.len() as f64 + self.fields.iter().map(|f| f.abs()).sum::<f64>();
        let diag = self.transverse.abs() * self.n_sites as f64;
        (-diag - off, diag + off)
    }

    /// `e^{-τ(H - E_lo)} v` by Taylor steps, where `E_lo` is the lower
    /// Gershgorin bound. Returns the vector and the accumulated log scale
    /// that was divided out to keep it normalised.
    pub fn propagate(&self, v: &DVector<f64>, tau: f64) -> (DVector<f64>, f64) {
        let (lo, hi) = self.spectral_bounds();
        let width = (hi - lo).max(1e-12);
        let steps = ((tau * width / 0.5).ceil() as usize).max(1);
        let h = tau / steps as f64;
        let mut w = v.clone();
        let mut log_scale = 0.0;
        for _ in 0..steps {
            let mut term = w.clone();
            let mut acc = w.clone();
            for k in 1..40 {
                let ht = self.apply(&term) - &term * lo;
                term = ht * (-h / k as f64);
                acc += &term;
                if term.norm() <= 1e-17 * acc.norm() {
                    break;
                }
            }
            let norm = acc.norm();
            log_scale += norm.ln();
            w = acc / norm;
        }
        (w, log_scale)
    }
}

/// Boundary vector for the time boundary condition at `±r/2`:
/// free is the all-`σ¹ = +1` state, wired the `σ³ = +1` product state.
pub fn boundary_vector(n_sites: usize, time: Bc) -> Option<DVector<f64>> {
    let dim = 1usize << n_sites;
    match time {
        Bc::Free => {
            let mut v = DVector::zeros(dim);
            v[0] = 1.0;
            Some(v)
        }
        Bc::Wired => Some(DVector::from_element(dim, (dim as f64).sqrt().recip())),
        Bc::Periodic => None,
    }
}

/// Applies `σ³_x` (bit flip) to a state vector.
pub fn flip(v: &DVector<f64>, site: usize) -> DVector<f64> {
    DVector::from_fn(v.len(), |s, _| v[s ^ (1 << site)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_is_symmetric_and_matches_apply() {
        let b = LatticeBox::symmetric(1, 1).unwrap();
        let h = Hamiltonian::for_box(&b, Bc::Wired, 0.7, 1.1, 0.2).unwrap();
        let m = h.dense();
        assert!((&m - m.transpose()).amax() < 1e-15);
        let v = DVector::from_fn(8, |i, _| (i as f64 * 0.37).sin());
        assert!((m * &v - h.apply(&v)).amax() < 1e-13);
    }

    #[test]
    fn wired_field_counts_exterior_neighbours() {
        let b = LatticeBox::symmetric(2, 1).unwrap();
        let h = Hamiltonian::for_box(&b, Bc::Wired, 1.0, 1.0, 0.0).unwrap();
        let centre = b.origin();
        assert_eq!(h.fields[centre], 0.0);
        let corner = b.index(&[1, 1]).unwrap();
        assert_eq!(h.fields[corner], 2.0);
        assert_eq!(h.bonds().len(), 12);
    }

    #[test]
    fn propagate_matches_dense_exponential() {
        let b = LatticeBox::symmetric(1, 1).unwrap();
        let h = Hamiltonian::for_box(&b, Bc::Free, 1.0, 0.8, 0.0).unwrap();
        let eig = h.dense().symmetric_eigen();
        let v = boundary_vector(3, Bc::Wired).unwrap();
        let tau = 1.7;
        let (lo, _) = h.spectral_bounds();
        let coeff = eig.eigenvectors.transpose() * &v;
        let scaled = DVector::from_fn(8, |m, _| coeff[m] * (-tau * (eig.eigenvalues[m] - lo)).exp());
        let exact = &eig.eigenvectors * scaled;
        let (w, log_scale) = h.propagate(&v, tau);
        assert!((w * log_scale.exp() - exact).amax() < 1e-12);
    }
}
