//! Parity-sector gaps of periodic chains and exact ground-state
//! magnetizations with wired boundaries.

use nalgebra::DMatrix;
use serde::Serialize;

use super::hamiltonian::{boundary_vector, Hamiltonian};
use crate::error::{domain, Result};
use crate::geometry::{Bc, LatticeBox};

/// Lowest energies in the even and odd sectors of `Π σ¹`.
fn sector_ground_energies(h: &Hamiltonian) -> (f64, f64) {
    let dense = h.dense();
    let lowest = |parity: u32| {
        let states: Vec<usize> = (0..h.dim()).filter(|s| s.count_ones() % 2 == parity).collect();
        let block = DMatrix::from_fn(states.len(), states.len(), |i, j| dense[(states[i], states[j])]);
        block.symmetric_eigenvalues().min()
    };
    (lowest(0), lowest(1))
}

/// `L·(E_odd - E_even)` for the periodic chain of `len` sites.
pub fn scaled_gap(len: usize, lambda: f64, delta: f64) -> Result<f64> {
    if len < 2 || !len.is_multiple_of(2) {
        return Err(domain("periodic chain length must be even and >= 2"));
    }
    let lattice = LatticeBox::even_side(1, len / 2)?;
    let h = Hamiltonian::for_box(&lattice, Bc::Periodic, lambda, delta, 0.0)?;
    let (even, odd) = sector_ground_energies(&h);
    Ok(len as f64 * (odd - even))
}

#[derive(Clone, Debug, Serialize)]
pub struct GapScan {
    pub lengths: Vec<usize>,
    pub lambdas: Vec<f64>,
    /// `gaps[i][j]` for `lengths[i]`, `lambdas[j]`.
    pub gaps: Vec<Vec<f64>>,
    /// Crossing of the scaled-gap curves of consecutive lengths, in units of δ.
    pub crossings: Vec<f64>,
}

impl GapScan {
    pub fn estimate(&self) -> Option<f64> {
        if self.crossings.is_empty() {
            None
        } else {
            Some(self.crossings.iter().sum::<f64>() / self.crossings.len() as f64)
        }
    }
}

/// Scans `λ ∈ [lo, hi]` and locates where `L·gap` curves of consecutive
/// lengths cross, by bisection.
pub fn gap_scan(lengths: &[usize], delta: f64, lo: f64, hi: f64, points: usize) -> Result<GapScan> {
    if points < 2 || !(hi > lo) {
        return Err(domain("need at least two scan points on a non-empty range"));
    }
    let lambdas: Vec<f64> = (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
    let mut gaps = Vec::new();
    for &len in lengths {
        gaps.push(lambdas.iter().map(|&l| scaled_gap(len, l, delta)).collect::<Result<Vec<_>>>()?);
    }
    let mut crossings = Vec::new();
    for pair in lengths.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let diff = |l: f64| -> Result<f64> { Ok(scaled_gap(a, l, delta)? - scaled_gap(b, l, delta)?) };
        let ia = lengths.iter().position(|&x| x == a).unwrap();
        let ib = ia + 1;
        let bracket = (0..points - 1).find(|&j| {
            let (d0, d1) = (gaps[ia][j] - gaps[ib][j], gaps[ia][j + 1] - gaps[ib][j + 1]);
            d0 == 0.0 || d0.signum() != d1.signum()
        });
        if let Some(j) = bracket {
            let (mut x0, mut x1) = (lambdas[j], lambdas[j + 1]);
            let mut f0 = diff(x0)?;
            for _ in 0..60 {
                let mid = 0.5 * (x0 + x1);
                let fm = diff(mid)?;
                if fm.signum() == f0.signum() {
                    x0 = mid;
                    f0 = fm;
                } else {
                    x1 = mid;
                }
                if x1 - x0 < 1e-12 {
                    break;
                }
            }
            crossings.push(0.5 * (x0 + x1) / delta);
        }
    }
    Ok(GapScan { lengths: lengths.to_vec(), lambdas, gaps, crossings })
}

/// `⟨σ³_0⟩` in the box `Λ_N` with wired space and time boundaries on
/// `[-r/2, r/2]`, by sparse propagation (no size cap beyond memory).
pub fn wired_magnetization(dim: usize, half: usize, r: f64, lambda: f64, delta: f64) -> Result<f64> {
    let lattice = LatticeBox::symmetric(dim, half)?;
    let h = Hamiltonian::for_box(&lattice, Bc::Wired, lambda, delta, 0.0)?;
    let u = boundary_vector(lattice.len(), Bc::Wired).expect("wired boundary vector");
    let (w, _) = h.propagate(&u, 0.5 * r);
    let flipped = super::hamiltonian::flip(&w, lattice.origin());
    Ok(w.dot(&flipped) / w.dot(&w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SpectralModel;

    #[test]
    fn sector_split_covers_spectrum() {
        let lattice = LatticeBox::even_side(1, 2).unwrap();
        let h = Hamiltonian::for_box(&lattice, Bc::Periodic, 0.7, 1.0, 0.0).unwrap();
        let (even, odd) = sector_ground_energies(&h);
        let all = h.dense().symmetric_eigenvalues().min();
        assert!((even.min(odd) - all).abs() < 1e-12);
    }

    #[test]
    fn free_spin_gap() {
        // λ = 0: one flipped spin costs 2δ
        assert!((scaled_gap(4, 0.0, 1.0).unwrap() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn crossings_near_self_dual_point() {
        let scan = gap_scan(&[4, 6], 1.0, 0.6, 1.4, 9).unwrap();
        let c = scan.estimate().unwrap();
        assert!((c - 1.0).abs() < 0.05, "{c}");
    }

    #[test]
    fn wired_magnetization_matches_spectral_path() {
        let lattice = LatticeBox::symmetric(1, 1).unwrap();
        let model = SpectralModel::build(&lattice, Bc::Wired, 0.8, 1.0, 0.0).unwrap();
        let r = 2.0;
        let exact = model.correlation(&[(lattice.origin(), 0.0)], Bc::Wired, r).unwrap();
        let m = wired_magnetization(1, 1, r, 0.8, 1.0).unwrap();
        assert!((m - exact).abs() < 1e-10, "{m} vs {exact}");
    }
}
