//! Lattice boxes, edge sets, space-time regions and dual lattices.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Which integer box a half-side `n` denotes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    /// `{-n, ..., n}^d`
    Symmetric,
    /// `{-n+1, ..., n}^d`, used for Fourier work.
    EvenSide,
}

/// A finite box of `Z^d`. Sites are indexed in lexicographic order with
/// the first coordinate varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeBox {
    dim: usize,
    half: usize,
    convention: Convention,
    coords: Vec<i64>,
}

impl LatticeBox {
    pub fn new(dim: usize, half: usize, convention: Convention) -> Result<Self> {
        if dim == 0 {
            return Err(domain("dimension must be positive"));
        }
        if convention == Convention::EvenSide && half == 0 {
            return Err(domain("even-side box needs n >= 1"));
        }
        let side = side_len(half, convention);
        let lo = lower(half, convention);
        let len = side
            .checked_pow(dim as u32)
            .filter(|&n| n <= 1 << 24)
            .ok_or_else(|| domain("box too large"))?;
        let mut coords = Vec::with_capacity(len * dim);
        for i in 0..len {
            let mut rest = i;
            for _ in 0..dim {
                coords.push(lo + (rest % side) as i64);
                rest /= side;
            }
        }
        Ok(Self { dim, half, convention, coords })
    }

    pub fn symmetric(dim: usize, half: usize) -> Result<Self> {
        Self::new(dim, half, Convention::Symmetric)
    }

    pub fn even_side(dim: usize, half: usize) -> Result<Self> {
        Self::new(dim, half, Convention::EvenSide)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half(&self) -> usize {
        self.half
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn side(&self) -> usize {
        side_len(self.half, self.convention)
    }

    pub fn lower(&self) -> i64 {
        lower(self.half, self.convention)
    }

    pub fn upper(&self) -> i64 {
        self.half as i64
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self, site: usize) -> &[i64] {
        &self.coords[site * self.dim..(site + 1) * self.dim]
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        x.len() == self.dim && x.iter().all(|&c| c >= self.lower() && c <= self.upper())
    }

    pub fn index(&self, x: &[i64]) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        let side = self.side();
        let mut idx = 0;
        for &c in x.iter().rev() {
            idx = idx * side + (c - self.lower()) as usize;
        }
        Some(idx)
    }

    /// Index of the zero vector.
    pub fn origin(&self) -> usize {
        self.index(&vec![0; self.dim]).expect("origin lies in every box")
    }

    /// Membership in `∂Λ_n = Λ_n \ Λ_{n-1}`.
    pub fn is_boundary(&self, site: usize) -> bool {
        let (lo, hi) = (self.lower(), self.upper());
        self.coords(site).iter().any(|&c| c == lo || c == hi)
    }

    pub fn boundary(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_boundary(i)).collect()
    }

    /// The `2d` nearest neighbours of a site, `None` where they leave the box.
    pub fn neighbours(&self, site: usize) -> Vec<Option<usize>> {
        let mut x = self.coords(site).to_vec();
        let mut out = Vec::with_capacity(2 * self.dim);
        for j in 0..self.dim {
            for step in [-1, 1] {
                x[j] += step;
                out.push(self.index(&x));
                x[j] -= step;
            }
        }
        out
    }

    pub fn exterior_neighbours(&self, site: usize) -> usize {
        self.neighbours(site).iter().filter(|n| n.is_none()).count()
    }

    pub fn site_norm(&self, site: usize) -> f64 {
        l1_norm(self.coords(site), 0.0)
    }
}

fn side_len(half: usize, convention: Convention) -> usize {
    match convention {
        Convention::Symmetric => 2 * half + 1,
        Convention::EvenSide => 2 * half,
    }
}

fn lower(half: usize, convention: Convention) -> i64 {
    match convention {
        Convention::Symmetric => -(half as i64),
        Convention::EvenSide => 1 - half as i64,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeMode {
    Free,
    /// Edges of the box one larger, whose outer shell is frozen at +1.
    WiredExtended,
    SpatiallyPeriodic,
}

/// Nearest-neighbour edges. Active sites keep their box indices; frozen
/// shell sites (wired mode only) are numbered after them.
#[derive(Clone, Debug)]
pub struct EdgeSet {
    mode: EdgeMode,
    n_active: usize,
    frozen: Vec<Vec<i64>>,
    edges: Vec<(usize, usize)>,
}

impl EdgeSet {
    pub fn new(lattice: &LatticeBox, mode: EdgeMode) -> Result<Self> {
        let n_active = lattice.len();
        let mut frozen = Vec::new();
        let mut edges = BTreeSet::new();
        match mode {
            EdgeMode::Free => {
                for i in 0..n_active {
                    for j in lattice.neighbours(i).into_iter().flatten() {
                        if i < j {
                            edges.insert((i, j));
                        }
                    }
                }
            }
            EdgeMode::SpatiallyPeriodic => {
                let side = lattice.side() as i64;
                let lo = lattice.lower();
                for i in 0..n_active {
                    let x = lattice.coords(i);
                    for k in 0..lattice.dim() {
                        let mut y = x.to_vec();
                        y[k] = (x[k] - lo + 1).rem_euclid(side) + lo;
                        let j = lattice.index(&y).expect("wrapped site in box");
                        if i != j {
                            edges.insert((i.min(j), i.max(j)));
                        }
                    }
                }
            }
            EdgeMode::WiredExtended => {
                let big = LatticeBox::new(lattice.dim(), lattice.half() + 1, lattice.convention())?;
                let mut map = vec![0; big.len()];
                for (b, slot) in map.iter_mut().enumerate() {
                    *slot = match lattice.index(big.coords(b)) {
                        Some(a) => a,
                        None => {
                            frozen.push(big.coords(b).to_vec());
                            n_active + frozen.len() - 1
                        }
                    };
                }
                for b in 0..big.len() {
                    for c in big.neighbours(b).into_iter().flatten() {
                        if b < c {
                            let (i, j) = (map[b], map[c]);
                            edges.insert((i.min(j), i.max(j)));
                        }
                    }
                }
            }
        }
        Ok(Self { mode, n_active, frozen, edges: edges.into_iter().collect() })
    }

    pub fn mode(&self) -> EdgeMode {
        self.mode
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn n_active(&self) -> usize {
        self.n_active
    }

    pub fn n_total(&self) -> usize {
        self.n_active + self.frozen.len()
    }

    pub fn is_frozen(&self, site: usize) -> bool {
        site >= self.n_active
    }

    pub fn frozen_coords(&self) -> &[Vec<i64>] {
        &self.frozen
    }

    /// Neighbour lists over all (active and frozen) sites.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_total()];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        adj
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bc {
    #[serde(alias = "f")]
    Free,
    #[serde(alias = "w")]
    Wired,
    #[serde(alias = "p")]
    Periodic,
}

impl Bc {
    pub fn letter(self) -> char {
        match self {
            Bc::Free => 'f',
            Bc::Wired => 'w',
            Bc::Periodic => 'p',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c {
            'f' => Some(Bc::Free),
            'w' => Some(Bc::Wired),
            'p' => Some(Bc::Periodic),
            _ => None,
        }
    }
}

/// `Λ × I_r` with `I_r = [-r/2, r/2]`, or the circle of length `r` when the
/// time boundary condition is periodic.
#[derive(Clone, Debug)]
pub struct Region {
    lattice: LatticeBox,
    length: f64,
    ground_state: bool,
    space: Bc,
    time: Bc,
}

impl Region {
    /// Finite inverse temperature: `r = β`.
    pub fn finite(lattice: LatticeBox, beta: f64, space: Bc, time: Bc) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(domain(format!("time length must be positive and finite, got {beta}")));
        }
        Ok(Self { lattice, length: beta, ground_state: false, space, time })
    }

    /// Ground-state proxy with `r = 2N`.
    pub fn ground_state(lattice: LatticeBox, space: Bc, time: Bc) -> Result<Self> {
        if lattice.half() == 0 {
            return Err(domain("ground-state regions need N >= 1 so that r = 2N > 0"));
        }
        let length = 2.0 * lattice.half() as f64;
        Ok(Self { lattice, length, ground_state: true, space, time })
    }

    pub fn lattice(&self) -> &LatticeBox {
        &self.lattice
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn half_length(&self) -> f64 {
        0.5 * self.length
    }

    pub fn is_ground_state(&self) -> bool {
        self.ground_state
    }

    pub fn space(&self) -> Bc {
        self.space
    }

    pub fn time(&self) -> Bc {
        self.time
    }

    pub fn is_circle(&self) -> bool {
        self.time == Bc::Periodic
    }

    pub fn with_bc(&self, space: Bc, time: Bc) -> Self {
        Self { space, time, ..self.clone() }
    }

    pub fn n_sites(&self) -> usize {
        self.lattice.len()
    }

    pub fn edge_set(&self) -> Result<EdgeSet> {
        let mode = match self.space {
            Bc::Free => EdgeMode::Free,
            Bc::Wired => EdgeMode::WiredExtended,
            Bc::Periodic => EdgeMode::SpatiallyPeriodic,
        };
        EdgeSet::new(&self.lattice, mode)
    }

    /// True for times strictly inside `I_r` (any time of `[-r/2, r/2)` on the circle).
    pub fn is_interior_time(&self, t: f64) -> bool {
        let h = self.half_length();
        if self.is_circle() {
            t >= -h && t < h
        } else {
            t > -h && t < h
        }
    }

    /// Boundary-condition label such as `"wp"` (space then time).
    pub fn bc_label(&self) -> String {
        format!("{}{}", self.space.letter(), self.time.letter())
    }
}

/// A space-time point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub site: usize,
    pub time: f64,
}

impl Point {
    pub fn new(site: usize, time: f64) -> Self {
        Self { site, time }
    }
}

/// Closed time interval `[start, end]` on one site line; `start == end`
/// is a single point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteInterval {
    pub site: usize,
    pub start: f64,
    pub end: f64,
}

impl SiteInterval {
    pub fn new(site: usize, start: f64, end: f64) -> Result<Self> {
        if !(start <= end) {
            return Err(domain(format!("interval [{start}, {end}] is reversed")));
        }
        Ok(Self { site, start, end })
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }
}

/// `‖x‖ + |t|`.
pub fn l1_norm(x: &[i64], t: f64) -> f64 {
    x.iter().map(|c| c.unsigned_abs() as f64).sum::<f64>() + t.abs()
}

/// `Σ_j (1 - cos p_j)` for `p ∈ (-π, π]^d`.
pub fn graph_laplacian_ft(p: &[f64]) -> Result<f64> {
    let tol = 1e-12;
    if let Some(bad) = p.iter().find(|&&c| !(c > -PI - tol && c <= PI + tol)) {
        return Err(domain(format!("momentum coordinate {bad} outside (-π, π]")));
    }
    Ok(p.iter().map(|c| 1.0 - c.cos()).sum())
}

/// Momenta `(π/N)Λ_N` of an even-side box and frequencies `(2π/r)Z`
/// truncated to `|ℓ| <= l_max`.
#[derive(Clone, Debug)]
pub struct DualLattice {
    momenta: Vec<Vec<f64>>,
    frequencies: Vec<f64>,
    include_zero: bool,
}

impl DualLattice {
    pub fn new(lattice: &LatticeBox, r: f64, l_max: f64, include_zero: bool) -> Result<Self> {
        if lattice.convention() != Convention::EvenSide {
            return Err(domain("dual lattice needs an even-side box"));
        }
        if !(r > 0.0 && l_max >= 0.0) {
            return Err(domain("need r > 0 and l_max >= 0"));
        }
        let scale = PI / lattice.half() as f64;
        let momenta = (0..lattice.len())
            .map(|i| lattice.coords(i).iter().map(|&c| scale * c as f64).collect())
            .collect();
        let step = 2.0 * PI / r;
        let m_max = (l_max / step * (1.0 + 1e-12)).floor() as i64;
        let frequencies = (-m_max..=m_max).map(|m| step * m as f64).collect();
        Ok(Self { momenta, frequencies, include_zero })
    }

    pub fn momenta(&self) -> &[Vec<f64>] {
        &self.momenta
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    /// All `(momentum index, frequency)` pairs, skipping `ξ = 0` unless requested.
    pub fn points(&self) -> Vec<(usize, f64)> {
        let mut out = Vec::with_capacity(self.momenta.len() * self.frequencies.len());
        for (k, p) in self.momenta.iter().enumerate() {
            let zero_k = p.iter().all(|&c| c == 0.0);
            for &l in &self.frequencies {
                if !self.include_zero && zero_k && l == 0.0 {
                    continue;
                }
                out.push((k, l));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn site_counts() {
        assert_eq!(LatticeBox::symmetric(2, 2).unwrap().len(), 25);
        assert_eq!(LatticeBox::even_side(3, 2).unwrap().len(), 64);
        assert_eq!(LatticeBox::symmetric(1, 0).unwrap().len(), 1);
        assert!(LatticeBox::even_side(1, 0).is_err());
    }

    #[test]
    fn index_round_trip() {
        let b = LatticeBox::even_side(2, 3).unwrap();
        for i in 0..b.len() {
            assert_eq!(b.index(b.coords(i)), Some(i));
        }
        assert_eq!(b.coords(b.origin()), &[0, 0]);
    }

    #[test]
    fn boundary_matches_shell() {
        for conv in [Convention::Symmetric, Convention::EvenSide] {
            let b = LatticeBox::new(2, 3, conv).unwrap();
            let inner = LatticeBox::new(2, 2, conv).unwrap();
            for i in 0..b.len() {
                assert_eq!(b.is_boundary(i), !inner.contains(b.coords(i)));
            }
        }
    }

    #[test]
    fn periodic_edge_count() {
        for (d, n) in [(1, 1), (1, 3), (2, 2), (3, 1)] {
            let b = LatticeBox::symmetric(d, n).unwrap();
            let e = EdgeSet::new(&b, EdgeMode::SpatiallyPeriodic).unwrap();
            assert_eq!(e.len(), d * (2 * n + 1).pow(d as u32));
        }
    }

    #[test]
    fn periodic_two_site_ring_has_one_edge() {
        let b = LatticeBox::even_side(1, 1).unwrap();
        assert_eq!(EdgeSet::new(&b, EdgeMode::SpatiallyPeriodic).unwrap().len(), 1);
    }

    #[test]
    fn wired_chain_shell() {
        let b = LatticeBox::symmetric(1, 2).unwrap();
        let e = EdgeSet::new(&b, EdgeMode::WiredExtended).unwrap();
        assert_eq!(e.n_active(), 5);
        assert_eq!(e.n_total(), 7);
        assert_eq!(e.len(), 6);
        assert_eq!(e.frozen_coords(), &[vec![-3], vec![3]]);
        for &(i, j) in e.edges() {
            assert!(!(e.is_frozen(i) && e.is_frozen(j)));
        }
    }

    #[test]
    fn wired_square_has_full_extended_edge_set() {
        let b = LatticeBox::symmetric(2, 1).unwrap();
        let e = EdgeSet::new(&b, EdgeMode::WiredExtended).unwrap();
        assert_eq!(e.n_total(), 25);
        assert_eq!(e.len(), 2 * 5 * 4);
    }

    #[test]
    fn norms() {
        assert_eq!(l1_norm(&[0, 0, 0], 0.0), 0.0);
        assert_eq!(l1_norm(&[1, -2], 0.5), 3.5);
        assert_eq!(l1_norm(&[0, 0], -1.25), 1.25);
    }

    #[test]
    fn laplacian_values() {
        assert_eq!(graph_laplacian_ft(&[0.0]).unwrap(), 0.0);
        assert!((graph_laplacian_ft(&[PI]).unwrap() - 2.0).abs() < 1e-15);
        assert!((graph_laplacian_ft(&[PI / 2.0, PI / 2.0]).unwrap() - 2.0).abs() < 1e-15);
        assert!(graph_laplacian_ft(&[4.0]).is_err());
    }

    #[test]
    fn dual_lattice_sizes() {
        let b = LatticeBox::even_side(1, 2).unwrap();
        let dual = DualLattice::new(&b, 1.0, 100.0 * PI, false).unwrap();
        assert_eq!(dual.momenta().len(), 4);
        assert_eq!(dual.frequencies().len(), 101);
        assert_eq!(dual.points().len(), 4 * 101 - 1);
        assert!(dual.momenta().iter().all(|k| k[0] > -PI && k[0] <= PI));
    }

    #[test]
    fn ground_state_length() {
        let b = LatticeBox::symmetric(1, 3).unwrap();
        let r = Region::ground_state(b, Bc::Wired, Bc::Wired).unwrap();
        assert_eq!(r.length(), 6.0);
        assert!(!r.is_circle());
    }
}
