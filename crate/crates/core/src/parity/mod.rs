//! Random-parity representation: Poisson bridges on edges, ghost bonds to
//! the exterior, and even/odd labellings weighted by `e^{2δ·(even length)}`.
//!
//! Weights are handled in reduced form `e^{-2δ·(odd length)}`; the
//! constant `e^{2δ r |Λ|}` cancels from every ratio.

pub mod coupled;
pub mod exact;
mod identities;
pub mod labelling;

pub use coupled::{
    constant_a, constant_b, correlation_difference_bound, product_identity, sample_coupled, verify_local_bounds,
    verify_switching, Clusters, CoupledConfiguration, CoupledSystem, Domain, LocalEvent, Mode, Window,
};
pub use exact::{DiscreteSystem, ExactReport, SlotPoint};
pub use identities::{event_constant, event_probability_identity, holes_identity_check, IdentityPair};
pub use labelling::{label_line, Labelling, LineLabels, Piece, PieceKind};

use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::geometry::{Bc, EdgeMode, EdgeSet, LatticeBox, Point, Region, SiteInterval};
use crate::poisson::push_homogeneous;
use crate::stats::{ratio_of_means, Estimate, RunningStats};

/// One draw of bridges, ghosts and the auxiliary fair bits.
#[derive(Clone, Debug, PartialEq)]
pub struct ParityDraw {
    /// Bridge times per edge, sorted.
    pub bridges: Vec<Vec<f64>>,
    /// Ghost times per site, sorted; empty off the boundary or for free space.
    pub ghosts: Vec<Vec<f64>>,
    /// Label just after `-r/2` on periodic lines.
    pub tau: Vec<bool>,
    /// Optional switches at `(-r/2, r/2)` on time-wired lines.
    pub ends: Vec<(bool, bool)>,
}

/// Geometry and boundary conditions of one random-parity labelling, with
/// optional holes `J` removed from the region.
#[derive(Clone, Debug)]
pub struct ParitySystem {
    lattice: LatticeBox,
    length: f64,
    time: Bc,
    wired: bool,
    edges: Vec<(usize, usize)>,
    ghost_degree: Vec<usize>,
    holes: Vec<Vec<(f64, f64)>>,
}

impl ParitySystem {
    pub fn new(region: &Region) -> Result<Self> {
        Self::with_holes(region, &[])
    }

    pub fn with_holes(region: &Region, holes: &[SiteInterval]) -> Result<Self> {
        let wired = match region.space() {
            Bc::Free => false,
            Bc::Wired => true,
            Bc::Periodic => return Err(domain("the random-parity representation has no periodic spatial boundary")),
        };
        let lattice = region.lattice().clone();
        let edges = EdgeSet::new(&lattice, EdgeMode::Free)?.edges().to_vec();
        let ghost_degree = (0..lattice.len()).map(|x| if wired { lattice.exterior_neighbours(x) } else { 0 }).collect();
        let h = region.half_length();
        let mut per_site = vec![Vec::new(); lattice.len()];
        for iv in holes {
            if iv.site >= lattice.len() || iv.start < -h || iv.end > h {
                return Err(domain("holes must lie in the region"));
            }
            per_site[iv.site].push((iv.start, iv.end));
        }
        for list in per_site.iter_mut() {
            list.sort_by(|a: &(f64, f64), b| a.0.total_cmp(&b.0));
            if list.windows(2).any(|w| w[1].0 <= w[0].1) {
                return Err(domain("holes on one line must be disjoint"));
            }
            let covered: f64 = list.iter().map(|(a, b)| b - a).sum();
            if covered >= 2.0 * h {
                return Err(domain("a hole may not cover a whole line"));
            }
        }
        Ok(Self { lattice, length: region.length(), time: region.time(), wired, edges, ghost_degree, holes: per_site })
    }

    pub fn lattice(&self) -> &LatticeBox {
        &self.lattice
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn time(&self) -> Bc {
        self.time
    }

    pub fn is_wired(&self) -> bool {
        self.wired
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn ghost_degree(&self, site: usize) -> usize {
        self.ghost_degree[site]
    }

    pub fn hole_length(&self) -> f64 {
        self.holes.iter().flatten().map(|(a, b)| b - a).sum()
    }

    fn in_hole(&self, site: usize, t: f64) -> bool {
        self.holes[site].iter().any(|&(a, b)| t >= a && t <= b)
    }

    /// Edge-time measure `|J̃|` of edges with an endpoint in a hole,
    /// ghost bonds included.
    pub fn hole_bond_length(&self) -> f64 {
        let mut total: f64 = self.holes.iter().enumerate().map(|(x, l)| {
            self.ghost_degree[x] as f64 * l.iter().map(|(a, b)| b - a).sum::<f64>()
        }).sum();
        for &(x, y) in &self.edges {
            let mut list: Vec<(f64, f64)> = self.holes[x].iter().chain(&self.holes[y]).copied().collect();
            list.sort_by(|a, b| a.0.total_cmp(&b.0));
            total += crate::spin::merge_intervals(list).iter().map(|(a, b)| b - a).sum::<f64>();
        }
        total
    }

    pub fn sample<R: Rng + ?Sized>(&self, lambda: f64, rng: &mut R) -> ParityDraw {
        let h = 0.5 * self.length;
        let n = self.lattice.len();
        let bridges = self
            .edges
            .iter()
            .map(|&(x, y)| {
                let mut b = Vec::new();
                push_homogeneous(lambda, -h, h, rng, &mut b);
                b.retain(|&t| !self.in_hole(x, t) && !self.in_hole(y, t));
                b
            })
            .collect();
        let ghosts = (0..n)
            .map(|x| {
                let mut g = Vec::new();
                push_homogeneous(lambda * self.ghost_degree[x] as f64, -h, h, rng, &mut g);
                g.retain(|&t| !self.in_hole(x, t));
                g
            })
            .collect();
        let tau = (0..n).map(|_| self.time == Bc::Periodic && rng.random::<bool>()).collect();
        let ends = (0..n)
            .map(|_| if self.time == Bc::Wired { (rng.random::<bool>(), rng.random::<bool>()) } else { (false, false) })
            .collect();
        ParityDraw { bridges, ghosts, tau, ends }
    }

    /// Switching points of each site: sources, bridge endpoints, ghosts.
    pub fn switching_points(&self, draw: &ParityDraw, sources: &[Point]) -> Vec<Vec<f64>> {
        let mut s = vec![Vec::new(); self.lattice.len()];
        for p in sources {
            s[p.site].push(p.time);
        }
        for (k, &(x, y)) in self.edges.iter().enumerate() {
            s[x].extend_from_slice(&draw.bridges[k]);
            s[y].extend_from_slice(&draw.bridges[k]);
        }
        for (x, g) in draw.ghosts.iter().enumerate() {
            s[x].extend_from_slice(g);
        }
        for list in s.iter_mut() {
            list.sort_by(f64::total_cmp);
        }
        s
    }

    fn check_sources(&self, sources: &[Point]) -> Result<()> {
        let h = 0.5 * self.length;
        for p in sources {
            if p.site >= self.lattice.len() {
                return Err(domain(format!("source site {} outside the box", p.site)));
            }
            let boundary = self.time != Bc::Periodic && p.time.abs() >= h;
            if boundary || p.time < -h || p.time >= h {
                return Err(domain(format!("source time {} must be interior", p.time)));
            }
            if self.in_hole(p.site, p.time) {
                return Err(domain("source inside a hole"));
            }
        }
        Ok(())
    }

    fn line_labels(&self, site: usize, draw: &ParityDraw, switches: &[f64]) -> Option<LineLabels> {
        let h = 0.5 * self.length;
        let holes = &self.holes[site];
        if holes.is_empty() {
            let kind = match self.time {
                Bc::Free => PieceKind::Interval { left_odd: false, right_odd: false },
                Bc::Wired => PieceKind::Interval { left_odd: draw.ends[site].0, right_odd: draw.ends[site].1 },
                Bc::Periodic => PieceKind::Circle { start_odd: draw.tau[site] },
            };
            return label_line(&[Piece { start: -h, end: h, kind }], switches);
        }
        let even = PieceKind::Interval { left_odd: false, right_odd: false };
        if self.time == Bc::Periodic {
            // pieces between consecutive holes around the circle; the last wraps the seam
            let mut pieces = Vec::new();
            for w in holes.windows(2) {
                pieces.push(Piece { start: w[0].1, end: w[1].0, kind: even });
            }
            let (first, last) = (holes[0], holes[holes.len() - 1]);
            let wrap = Piece { start: last.1, end: first.0 + self.length, kind: even };
            let shifted: Vec<f64> = switches.iter().map(|&t| if t < first.0 { t + self.length } else { t }).collect();
            let mut sorted = shifted;
            sorted.sort_by(f64::total_cmp);
            pieces.push(wrap);
            let labels = label_line(&pieces, &sorted)?;
            let mut segments = Vec::new();
            for (a, b, odd) in labels.segments {
                if b <= h {
                    segments.push((a, b, odd));
                } else if a >= h {
                    segments.push((a - self.length, b - self.length, odd));
                } else {
                    segments.push((a, h, odd));
                    segments.push((-h, b - self.length, odd));
                }
            }
            segments.sort_by(|a, b| a.0.total_cmp(&b.0));
            return Some(LineLabels::from_segments(segments));
        }
        let (left, right) = match self.time {
            Bc::Wired => (draw.ends[site].0, draw.ends[site].1),
            _ => (false, false),
        };
        let mut pieces = Vec::new();
        let mut t = -h;
        let mut left_odd = left;
        for &(a, b) in holes {
            if a > t {
                pieces.push(Piece { start: t, end: a, kind: PieceKind::Interval { left_odd, right_odd: false } });
            }
            t = b;
            left_odd = false;
        }
        if h > t {
            pieces.push(Piece { start: t, end: h, kind: PieceKind::Interval { left_odd, right_odd: right } });
        }
        label_line(&pieces, switches)
    }

    /// The labelling with sources `sources`, or `None` when inconsistent.
    pub fn label(&self, draw: &ParityDraw, sources: &[Point]) -> Option<Labelling> {
        let switches = self.switching_points(draw, sources);
        let mut lines = Vec::with_capacity(switches.len());
        for (x, s) in switches.iter().enumerate() {
            lines.push(self.line_labels(x, draw, s)?);
        }
        Some(Labelling { lines })
    }

    /// Reduced weight `∂ψ_A`, zero when inconsistent.
    pub fn weight(&self, draw: &ParityDraw, sources: &[Point], delta: f64) -> f64 {
        self.label(draw, sources).map_or(0.0, |l| l.reduced_weight(delta))
    }
}

/// `E(∂ψ_A)` in reduced form over `n` draws.
pub fn mean_weight<R: Rng + ?Sized>(
    system: &ParitySystem,
    sources: &[Point],
    lambda: f64,
    delta: f64,
    n: usize,
    rng: &mut R,
) -> Result<RunningStats> {
    system.check_sources(sources)?;
    let mut stats = RunningStats::new();
    for _ in 0..n {
        let draw = system.sample(lambda, rng);
        stats.push(system.weight(&draw, sources, delta));
    }
    Ok(stats)
}

/// `⟨σ_A⟩ = E(∂ψ_A)/E(∂ψ_∅)` from two independent pools of `n` draws.
pub fn estimate_rpr_correlation<R: Rng + ?Sized>(
    sources: &[Point],
    region: &Region,
    lambda: f64,
    delta: f64,
    n: usize,
    rng: &mut R,
) -> Result<Estimate> {
    let system = ParitySystem::new(region)?;
    if sources.is_empty() {
        return Ok(Estimate::exact(1.0));
    }
    let num = mean_weight(&system, sources, lambda, delta, n, rng)?;
    let den = mean_weight(&system, &[], lambda, delta, n, rng)?;
    if den.mean() <= 0.0 {
        return Err(Error::Estimation("no consistent draw in the denominator pool".into()));
    }
    Ok(ratio_of_means(&num, &den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::chain_rng;
    use crate::spectral::SpectralModel;

    fn chain(half: usize, beta: f64, space: Bc, time: Bc) -> Region {
        Region::finite(LatticeBox::symmetric(1, half).unwrap(), beta, space, time).unwrap()
    }

    #[test]
    fn empty_draw_is_all_even() {
        let r = chain(1, 2.0, Bc::Free, Bc::Free);
        let s = ParitySystem::new(&r).unwrap();
        let draw = ParityDraw { bridges: vec![vec![]; 2], ghosts: vec![vec![]; 3], tau: vec![false; 3], ends: vec![(false, false); 3] };
        let l = s.label(&draw, &[]).unwrap();
        assert!((l.even_length() - 6.0).abs() < 1e-15);
        assert_eq!(l.reduced_weight(1.0), 1.0);
        let two = [Point::new(1, 0.0), Point::new(1, 1.0 - 1e-9)];
        assert!(s.label(&draw, &two).is_some());
        assert!(s.label(&draw, &two[..1]).is_none());
    }

    #[test]
    fn no_bridges_means_no_cross_site_pairing() {
        let r = chain(1, 1.0, Bc::Free, Bc::Free);
        let mut rng = chain_rng(3, 0);
        let pair = [Point::new(0, 0.0), Point::new(1, 0.0)];
        let num = mean_weight(&ParitySystem::new(&r).unwrap(), &pair, 0.0, 1.0, 1000, &mut rng).unwrap();
        assert_eq!(num.mean(), 0.0);
    }

    #[test]
    fn matches_oracle_on_three_sites() {
        let lattice = LatticeBox::symmetric(1, 1).unwrap();
        let mut rng = chain_rng(4, 0);
        for (space, time) in [(Bc::Free, Bc::Free), (Bc::Free, Bc::Periodic), (Bc::Wired, Bc::Wired), (Bc::Wired, Bc::Free)] {
            let region = Region::finite(lattice.clone(), 1.0, space, time).unwrap();
            let model = SpectralModel::build(&lattice, space, 1.0, 1.0, 0.0).unwrap();
            let exact = model.correlation(&[(1, 0.0), (2, 0.3)], time, 1.0).unwrap();
            let pts = [Point::new(1, 0.0), Point::new(2, 0.3)];
            let est = estimate_rpr_correlation(&pts, &region, 1.0, 1.0, 40_000, &mut rng).unwrap();
            assert!(est.z_score(exact).abs() < 4.0, "{space:?}{time:?}: {est:?} vs {exact}");
        }
    }
}
