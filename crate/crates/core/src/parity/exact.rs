//! Exhaustive enumeration of a slot discretization of the coupled measure.
//!
//! Each site line is split into `slots` equal slots. A bridge slot holds
//! one bridge of `B ∪ B̂` with probability `p_bridge`, given to either
//! labelling with probability ½; cut and ghost slots are Bernoulli. Inside
//! a slot of width `w` sources sit at `0.1w`, bridges at `0.25w`, cuts at
//! `0.5w` and ghosts at `0.75w`. A labelling weighs `(1 - p_cut)^{-1/2}`
//! per slot whose midpoint is even.
//!
//! Sharing slots couples `B` and `B̂`, so the connectivity-product
//! identity is checked as `P̄(0 ↔ κ off Γ) = E(∂ψ_{0κ}∂ψ̂_{0κ})/E(∂ψ_∅∂ψ̂_∅)`,
//! which factorises into the two correlations once the bridge sets are
//! independent.

use serde::Serialize;

use super::coupled::{CoupledConfiguration, CoupledSystem, Mode};
use super::{Labelling, ParityDraw};
use crate::error::{domain, Result};
use crate::geometry::{Bc, LatticeBox, Point, Region};
use crate::report::IdentityReport;
use crate::stats::CompensatedSum;

/// Upper limit on enumerated configurations, cut patterns included.
pub const ENUMERATION_CAP: f64 = 5e7;

#[derive(Clone, Debug)]
pub struct DiscreteSystem {
    coupled: CoupledSystem,
    slots: usize,
    p_bridge: f64,
    p_cut: f64,
    p_ghost: f64,
}

/// A source placed in a slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SlotPoint {
    pub site: usize,
    pub slot: usize,
}

/// One enumerated configuration without cuts, with its probability.
struct Atom {
    prob: f64,
    first: ParityDraw,
    second: ParityDraw,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExactReport {
    pub switching: IdentityReport,
    pub product: IdentityReport,
    /// `P̄(0 ↔ κ)` with ghost jumps allowed.
    pub plain_connectivity: f64,
    pub configurations: usize,
}

impl DiscreteSystem {
    /// `length` is the time extent; `(t1, t2)` the two time conditions.
    pub fn new(
        lattice: &LatticeBox,
        length: f64,
        t1: Bc,
        t2: Bc,
        slots: usize,
        p_bridge: f64,
        p_cut: f64,
        p_ghost: f64,
    ) -> Result<Self> {
        for p in [p_bridge, p_cut, p_ghost] {
            if !(0.0..1.0).contains(&p) {
                return Err(domain(format!("slot probabilities must lie in [0, 1), got {p}")));
            }
        }
        if slots == 0 {
            return Err(domain("need at least one slot"));
        }
        let region = Region::finite(lattice.clone(), length, Bc::Wired, t2)?;
        let coupled = CoupledSystem::with_times(&region, t1, t2)?;
        Ok(Self { coupled, slots, p_bridge, p_cut, p_ghost })
    }

    fn width(&self) -> f64 {
        self.coupled.region().length() / self.slots as f64
    }

    fn at(&self, slot: usize, offset: f64) -> f64 {
        -self.coupled.region().half_length() + (slot as f64 + offset) * self.width()
    }

    pub fn point(&self, p: SlotPoint) -> Point {
        Point::new(p.site, self.at(p.slot, 0.1))
    }

    fn check(&self, p: SlotPoint) -> Result<()> {
        if p.site >= self.coupled.region().n_sites() || p.slot >= self.slots {
            return Err(domain(format!("slot point {p:?} outside the system")));
        }
        Ok(())
    }

    fn n_sites(&self) -> usize {
        self.coupled.region().n_sites()
    }

    /// Every cut-free configuration with its probability.
    fn atoms(&self) -> Result<Vec<Atom>> {
        let n = self.n_sites();
        let edges = self.coupled.first().edges().len();
        let (t1, t2) = self.coupled.time_conditions();
        let ghost_sites: Vec<usize> = (0..n).filter(|&x| self.coupled.second().ghost_degree(x) > 0).collect();
        // digits: bridge slots (3 states), ghost slots, τ, τ̂, end bits of both labellings
        let mut radix = vec![3usize; edges * self.slots];
        radix.extend(std::iter::repeat_n(2, ghost_sites.len() * self.slots));
        let tau_bits = |t: Bc| if t == Bc::Periodic { n } else { 0 };
        let end_bits = |t: Bc| if t == Bc::Wired { 2 * n } else { 0 };
        let fair = tau_bits(t1) + tau_bits(t2) + end_bits(t1) + end_bits(t2);
        radix.extend(std::iter::repeat_n(2, fair));
        let total: f64 = radix.iter().map(|&r| r as f64).product();
        let cuts = (n * self.slots) as f64;
        if total * 2f64.powf(cuts) > ENUMERATION_CAP {
            return Err(domain(format!("{total} configurations times {} cut patterns exceed the cap", 2f64.powf(cuts))));
        }
        let mut atoms = Vec::with_capacity(total as usize);
        let mut digits = vec![0usize; radix.len()];
        loop {
            atoms.push(self.atom(&digits, edges, &ghost_sites, t1, t2));
            let mut i = 0;
            loop {
                if i == digits.len() {
                    return Ok(atoms);
                }
                digits[i] += 1;
                if digits[i] < radix[i] {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
        }
    }

    fn atom(&self, digits: &[usize], edges: usize, ghost_sites: &[usize], t1: Bc, t2: Bc) -> Atom {
        let n = self.n_sites();
        let s = self.slots;
        let mut prob = 1.0;
        let mut b1 = vec![Vec::new(); edges];
        let mut b2 = vec![Vec::new(); edges];
        let mut k = 0;
        for e in 0..edges {
            for j in 0..s {
                match digits[k] {
                    0 => prob *= 1.0 - self.p_bridge,
                    d => {
                        prob *= 0.5 * self.p_bridge;
                        let t = self.at(j, 0.25);
                        if d == 1 { b1[e].push(t) } else { b2[e].push(t) }
                    }
                }
                k += 1;
            }
        }
        let mut ghosts = vec![Vec::new(); n];
        for &x in ghost_sites {
            let p = 1.0 - (1.0 - self.p_ghost).powi(self.coupled.second().ghost_degree(x) as i32);
            for j in 0..s {
                if digits[k] == 1 {
                    prob *= p;
                    ghosts[x].push(self.at(j, 0.75));
                } else {
                    prob *= 1.0 - p;
                }
                k += 1;
            }
        }
        let mut fair = |t: Bc| {
            let mut tau = vec![false; n];
            let mut ends = vec![(false, false); n];
            if t == Bc::Periodic {
                for v in tau.iter_mut() {
                    *v = digits[k] == 1;
                    k += 1;
                    prob *= 0.5;
                }
            }
            if t == Bc::Wired {
                for v in ends.iter_mut() {
                    *v = (digits[k] == 1, digits[k + 1] == 1);
                    k += 2;
                    prob *= 0.25;
                }
            }
            (tau, ends)
        };
        let (tau1, ends1) = fair(t1);
        let (tau2, ends2) = fair(t2);
        Atom {
            prob,
            first: ParityDraw { bridges: b1, ghosts: vec![Vec::new(); n], tau: tau1, ends: ends1 },
            second: ParityDraw { bridges: b2, ghosts, tau: tau2, ends: ends2 },
        }
    }

    /// `(1 - p_cut)^{-1/2}` per slot with an even midpoint.
    fn weight(&self, l: &Labelling) -> f64 {
        let per = (1.0 - self.p_cut).powf(-0.5);
        let mut w = 1.0;
        for x in 0..self.n_sites() {
            for j in 0..self.slots {
                if l.is_odd_at(x, self.at(j, 0.5)) == Some(false) {
                    w *= per;
                }
            }
        }
        w
    }

    /// Sums `P · ∂ψ_{A1} ∂ψ̂_{A2} · f` over all configurations. Cuts are
    /// enumerated only in slots even in both labellings, the only ones
    /// that can block.
    fn expectation<F>(&self, atoms: &[Atom], a1: &[Point], a2: &[Point], f: Option<F>) -> f64
    where
        F: Fn(&CoupledConfiguration, &Labelling, &Labelling) -> bool,
    {
        let n = self.n_sites();
        let mut total = CompensatedSum::default();
        for atom in atoms {
            let Some(p) = self.coupled.first().label(&atom.first, a1) else { continue };
            let Some(q) = self.coupled.second().label(&atom.second, a2) else { continue };
            let w = atom.prob * self.weight(&p) * self.weight(&q);
            let Some(f) = &f else {
                total.add(w);
                continue;
            };
            let mut open = Vec::new();
            for x in 0..n {
                for j in 0..self.slots {
                    let t = self.at(j, 0.5);
                    if p.is_odd_at(x, t) == Some(false) && q.is_odd_at(x, t) == Some(false) {
                        open.push((x, t));
                    }
                }
            }
            let mut cfg = CoupledConfiguration { first: atom.first.clone(), second: atom.second.clone(), cuts: vec![Vec::new(); n] };
            for mask in 0u64..(1u64 << open.len()) {
                for c in cfg.cuts.iter_mut() {
                    c.clear();
                }
                let mut pc = 1.0;
                for (i, &(x, t)) in open.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        cfg.cuts[x].push(t);
                        pc *= self.p_cut;
                    } else {
                        pc *= 1.0 - self.p_cut;
                    }
                }
                if f(&cfg, &p, &q) {
                    total.add(w * pc);
                }
            }
        }
        total.value()
    }

    /// Switching lemma and connectivity-product identity for sources
    /// `origin` and `kappa`, both exactly.
    pub fn verify(&self, origin: SlotPoint, kappa: SlotPoint, tol: f64) -> Result<ExactReport> {
        self.check(origin)?;
        self.check(kappa)?;
        let atoms = self.atoms()?;
        let (o, k) = (self.point(origin), self.point(kappa));
        let pair = [o, k];
        let none: Option<fn(&CoupledConfiguration, &Labelling, &Labelling) -> bool> = None;
        let coupled = &self.coupled;
        let off = |cfg: &CoupledConfiguration, p: &Labelling, q: &Labelling| {
            coupled.clusters(cfg, p, q, Mode::OffGhost).connected(o, k)
        };
        let plain = |cfg: &CoupledConfiguration, p: &Labelling, q: &Labelling| {
            coupled.clusters(cfg, p, q, Mode::Plain).connected(o, k)
        };
        let lhs = self.expectation(&atoms, &pair, &[], none);
        let rhs = self.expectation(&atoms, &[], &pair, Some(off));
        let z = self.expectation(&atoms, &[], &[], none);
        // slots hold at most one bridge of B ∪ B̂, so the two labellings are
        // not independent here; the product appears in joint form
        let both = self.expectation(&atoms, &pair, &pair, none) / z;
        let connected = self.expectation(&atoms, &[], &[], Some(off)) / z;
        let plain_connectivity = self.expectation(&atoms, &[], &[], Some(plain)) / z;
        let scale = |r: IdentityReport| {
            r.param("slots", self.slots)
                .param("p_bridge", self.p_bridge)
                .param("p_cut", self.p_cut)
                .param("p_ghost", self.p_ghost)
        };
        Ok(ExactReport {
            switching: scale(IdentityReport::exact("switching-exact", lhs, rhs, tol)),
            product: scale(IdentityReport::exact("connectivity-product-exact", connected, both, tol)),
            plain_connectivity,
            configurations: atoms.len(),
        })
    }
}
