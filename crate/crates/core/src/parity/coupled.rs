//! The coupled measure: two independent labellings, ghost bonds and cuts,
//! open paths, the switching lemma and the local-modification bounds.

use petgraph::unionfind::UnionFind;
use rand::Rng;
use serde::Serialize;

use super::{estimate_rpr_correlation, Labelling, ParityDraw, ParitySystem};
use crate::error::{domain, Error, Result};
use crate::geometry::{Bc, Point, Region};
use crate::poisson::push_homogeneous;
use crate::report::IdentityReport;
use crate::spectral::Beta;
use crate::stats::{ratio_of_means, Estimate, RunningStats, WeightedSamples};

/// How jumps through the ghost site are treated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Ghost points are joined through one node `Γ`.
    Plain,
    /// No jumps through ghost points, within one line or across.
    OffGhost,
}

/// `ψ` from `(B, τ)` with a free spatial boundary and `ψ̂` from
/// `(B̂, G, τ̂)` with a wired one. Time conditions are `p, p` at finite
/// `β` and `f, w` for ground-state regions.
#[derive(Clone, Debug)]
pub struct CoupledSystem {
    region: Region,
    first: ParitySystem,
    second: ParitySystem,
}

/// One draw of `(B, τ)`, `(B̂, G, τ̂)` and the cuts `Δ`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoupledConfiguration {
    pub first: ParityDraw,
    pub second: ParityDraw,
    /// Cut times per site, sorted.
    pub cuts: Vec<Vec<f64>>,
}

/// Block `Λ_{N} × I_{r}` translated to `centre`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    pub half: usize,
    pub length: f64,
    pub centre: Point,
}

impl Window {
    pub fn around_origin(region: &Region, half: usize, length: f64) -> Self {
        Self { half, length, centre: origin(region) }
    }

    pub fn contains_site(&self, region: &Region, site: usize) -> bool {
        let lattice = region.lattice();
        let c = lattice.coords(self.centre.site);
        lattice.coords(site).iter().zip(c).all(|(&a, &b)| (a - b).unsigned_abs() as usize <= self.half)
    }

    fn times(&self) -> (f64, f64) {
        (self.centre.time - 0.5 * self.length, self.centre.time + 0.5 * self.length)
    }
}

/// Part of the region whose paths are analysed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Domain {
    Whole,
    Inside(Window),
    Outside(Window),
}

impl CoupledSystem {
    pub fn new(region: &Region) -> Result<Self> {
        let (t1, t2) = if region.is_ground_state() { (Bc::Free, Bc::Wired) } else { (Bc::Periodic, Bc::Periodic) };
        Self::with_times(region, t1, t2)
    }

    /// Explicit time conditions; both periodic or neither.
    pub fn with_times(region: &Region, t1: Bc, t2: Bc) -> Result<Self> {
        if (t1 == Bc::Periodic) != (t2 == Bc::Periodic) {
            return Err(domain("the two labellings must share the time topology"));
        }
        let first = ParitySystem::new(&region.with_bc(Bc::Free, t1))?;
        let second = ParitySystem::new(&region.with_bc(Bc::Wired, t2))?;
        Ok(Self { region: region.clone(), first, second })
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn first(&self) -> &ParitySystem {
        &self.first
    }

    pub fn second(&self) -> &ParitySystem {
        &self.second
    }

    /// Time condition of each labelling.
    pub fn time_conditions(&self) -> (Bc, Bc) {
        (self.first.time(), self.second.time())
    }

    pub fn sample<R: Rng + ?Sized>(&self, lambda: f64, delta: f64, rng: &mut R) -> CoupledConfiguration {
        let h = self.region.half_length();
        let first = self.first.sample(lambda, rng);
        let second = self.second.sample(lambda, rng);
        let cuts = (0..self.region.n_sites())
            .map(|_| {
                let mut c = Vec::new();
                push_homogeneous(4.0 * delta, -h, h, rng, &mut c);
                c
            })
            .collect();
        CoupledConfiguration { first, second, cuts }
    }

    /// A draw conditioned on both labellings of `∅` being consistent. Exact
    /// when `ψ` has free time on a forest of edges and `ψ̂` has wired time:
    /// every bridge count of `B` is then even and the end bits of `ψ̂`
    /// match the parity of each line.
    pub fn sample_consistent<R: Rng + ?Sized>(&self, lambda: f64, delta: f64, rng: &mut R) -> Result<CoupledConfiguration> {
        if self.first.time() != Bc::Free || self.second.time() != Bc::Wired {
            return Err(domain("conditional sampling needs free time for ψ and wired time for ψ̂"));
        }
        let edges = self.first.edges();
        let mut forest = UnionFind::new(self.region.n_sites());
        if !edges.iter().all(|&(x, y)| forest.union(x, y)) {
            return Err(domain("conditional sampling needs the edges of ψ to form a forest"));
        }
        let h = self.region.half_length();
        let mut cfg = self.sample(lambda, delta, rng);
        for b in cfg.first.bridges.iter_mut() {
            loop {
                b.clear();
                push_homogeneous(lambda, -h, h, rng, b);
                if b.len() % 2 == 0 {
                    break;
                }
            }
        }
        let switches = self.second.switching_points(&cfg.second, &[]);
        for (end, s) in cfg.second.ends.iter_mut().zip(&switches) {
            end.1 = end.0 ^ (s.len() % 2 == 1);
        }
        Ok(cfg)
    }

    pub fn labels(&self, cfg: &CoupledConfiguration, a1: &[Point], a2: &[Point]) -> Option<(Labelling, Labelling)> {
        Some((self.first.label(&cfg.first, a1)?, self.second.label(&cfg.second, a2)?))
    }

    /// `∂ψ_{A1} ∂ψ̂_{A2}` in reduced form.
    pub fn weight(&self, cfg: &CoupledConfiguration, a1: &[Point], a2: &[Point], delta: f64) -> f64 {
        self.labels(cfg, a1, a2).map_or(0.0, |(p, q)| p.reduced_weight(delta) * q.reduced_weight(delta))
    }

    /// `Ĝ_x`: ghost points, plus both time ends when `ψ̂` is time-wired.
    fn jump_points(&self, cfg: &CoupledConfiguration, site: usize) -> Vec<f64> {
        let mut g = cfg.second.ghosts[site].clone();
        if self.second.time() == Bc::Wired {
            let h = self.region.half_length();
            g.push(-h);
            g.push(h);
        }
        g
    }

    pub fn clusters(&self, cfg: &CoupledConfiguration, psi: &Labelling, psi_hat: &Labelling, mode: Mode) -> Clusters {
        Clusters::build(self, cfg, psi, psi_hat, mode, Domain::Whole)
    }

    /// Connectivity using only paths inside `window`.
    pub fn window_clusters(
        &self,
        cfg: &CoupledConfiguration,
        psi: &Labelling,
        psi_hat: &Labelling,
        window: Window,
    ) -> Clusters {
        Clusters::build(self, cfg, psi, psi_hat, Mode::Plain, Domain::Inside(window))
    }

    pub fn domain_clusters(
        &self,
        cfg: &CoupledConfiguration,
        psi: &Labelling,
        psi_hat: &Labelling,
        mode: Mode,
        domain: Domain,
    ) -> Clusters {
        Clusters::build(self, cfg, psi, psi_hat, mode, domain)
    }

    /// Time pieces of line `site` belonging to `domain`.
    fn pieces(&self, site: usize, domain: Domain) -> Vec<(f64, f64)> {
        let h = self.region.half_length();
        match domain {
            Domain::Whole => vec![(-h, h)],
            Domain::Inside(w) if w.contains_site(&self.region, site) => {
                let (a, b) = w.times();
                let (a, b) = (a.max(-h), b.min(h));
                if a < b { vec![(a, b)] } else { Vec::new() }
            }
            Domain::Inside(_) => Vec::new(),
            Domain::Outside(w) if w.contains_site(&self.region, site) => {
                let (a, b) = w.times();
                let mut out = Vec::new();
                if a > -h {
                    out.push((-h, a.min(h)));
                }
                if b < h {
                    out.push((b.max(-h), h));
                }
                out.retain(|p| p.0 < p.1);
                out
            }
            Domain::Outside(_) => vec![(-h, h)],
        }
    }
}

/// Maximal blocking-cut-free segment of one time piece.
#[derive(Clone, Debug)]
struct LinePiece {
    lo: f64,
    hi: f64,
    /// Blocking cuts inside the piece, sorted.
    cuts: Vec<f64>,
    first: usize,
}

/// Disjoint-set partition of the maximal blocking-cut-free segments of a
/// domain.
pub struct Clusters {
    uf: UnionFind<usize>,
    lines: Vec<Vec<LinePiece>>,
    n_segments: usize,
    ghost: usize,
    circle: bool,
    boundary: Vec<usize>,
}

impl Clusters {
    fn build(
        system: &CoupledSystem,
        cfg: &CoupledConfiguration,
        psi: &Labelling,
        psi_hat: &Labelling,
        mode: Mode,
        domain: Domain,
    ) -> Self {
        let region = &system.region;
        let n = region.n_sites();
        let h = region.half_length();
        let circle = system.first.time() == Bc::Periodic;
        let mut lines = Vec::with_capacity(n);
        let mut count = 0;
        for x in 0..n {
            let mut line = Vec::new();
            for (lo, hi) in system.pieces(x, domain) {
                let cuts: Vec<f64> = cfg.cuts[x]
                    .iter()
                    .copied()
                    .filter(|&c| c > lo && c < hi)
                    .filter(|&c| psi.is_odd_at(x, c) == Some(false) && psi_hat.is_odd_at(x, c) == Some(false))
                    .collect();
                let k = cuts.len();
                line.push(LinePiece { lo, hi, cuts, first: count });
                count += k + 1;
            }
            lines.push(line);
        }
        let ghost = count;
        let mut this = Self { uf: UnionFind::new(count + 1), lines, n_segments: count, ghost, circle, boundary: Vec::new() };
        if circle {
            for x in 0..n {
                if let (Some(a), Some(b)) = (this.segment(x, -h), this.segment(x, h)) {
                    this.uf.union(a, b);
                }
            }
        }
        let bridges = cfg.first.bridges.iter().zip(&cfg.second.bridges);
        for (&(x, y), (b1, b2)) in system.first.edges().iter().zip(bridges) {
            for &t in b1.iter().chain(b2) {
                if let (Some(a), Some(b)) = (this.segment(x, t), this.segment(y, t)) {
                    this.uf.union(a, b);
                }
            }
        }
        for x in (0..n).filter(|_| mode == Mode::Plain) {
            for t in system.jump_points(cfg, x) {
                if let Some(a) = this.segment(x, t) {
                    this.uf.union(a, ghost);
                }
            }
        }
        // segments meeting the spatial or temporal boundary of the region
        let mut boundary = Vec::new();
        for (x, line) in this.lines.iter().enumerate() {
            let spatial = region.lattice().is_boundary(x);
            for p in line {
                let last = p.first + p.cuts.len();
                if spatial {
                    boundary.extend(p.first..=last);
                } else if !circle {
                    if p.lo <= -h {
                        boundary.push(p.first);
                    }
                    if p.hi >= h {
                        boundary.push(last);
                    }
                }
            }
        }
        boundary.dedup();
        this.boundary = boundary;
        this
    }

    /// Segment containing `(site, t)`, if it lies in the analysed domain.
    fn segment(&self, site: usize, t: f64) -> Option<usize> {
        let p = self.lines.get(site)?.iter().find(|p| t >= p.lo && t <= p.hi)?;
        Some(p.first + p.cuts.partition_point(|&c| c < t))
    }

    pub fn connected(&self, a: Point, b: Point) -> bool {
        if a == b {
            return true;
        }
        match (self.segment(a.site, a.time), self.segment(b.site, b.time)) {
            (Some(u), Some(v)) => self.uf.equiv(u, v),
            _ => false,
        }
    }

    /// Connection to the shared ghost node; meaningful for [`Mode::Plain`].
    pub fn to_ghost(&self, a: Point) -> bool {
        self.segment(a.site, a.time).is_some_and(|u| self.uf.equiv(u, self.ghost))
    }

    /// Every analysed segment lies in one class.
    pub fn all_connected(&self) -> bool {
        (1..self.n_segments).all(|i| self.uf.equiv(0, i))
    }

    pub fn n_segments(&self) -> usize {
        self.n_segments
    }

    /// Class representative of every segment.
    pub fn labels(&self) -> Vec<usize> {
        (0..self.n_segments).map(|i| self.uf.find(i)).collect()
    }

    pub fn n_clusters(&self) -> usize {
        let mut l = self.labels();
        l.sort_unstable();
        l.dedup();
        l.len()
    }

    /// Segments meeting the boundary of the region.
    pub fn boundary_segments(&self) -> &[usize] {
        &self.boundary
    }

    /// Distinct classes among the boundary segments.
    pub fn n_boundary_classes(&self) -> usize {
        let mut c: Vec<usize> = self.boundary.iter().map(|&s| self.uf.find(s)).collect();
        c.sort_unstable();
        c.dedup();
        c.len()
    }

    pub fn ghost_class(&self) -> usize {
        self.uf.find(self.ghost)
    }

    /// Time extents `(start, end)` of every segment; a segment joined
    /// around a circle keeps its two parts separate.
    pub fn segment_extents(&self) -> Vec<Vec<(f64, f64)>> {
        let mut out = vec![Vec::new(); self.n_segments];
        for p in self.lines.iter().flatten() {
            let mut t = p.lo;
            for (i, &c) in p.cuts.iter().chain(std::iter::once(&p.hi)).enumerate() {
                out[p.first + i].push((t, c));
                t = c;
            }
        }
        out
    }

    /// Site line of every segment.
    pub fn segment_sites(&self) -> Vec<usize> {
        let mut out = vec![0; self.n_segments];
        for (x, line) in self.lines.iter().enumerate() {
            for p in line {
                out[p.first..=p.first + p.cuts.len()].fill(x);
            }
        }
        out
    }

    pub fn segment_of(&self, p: Point) -> Option<usize> {
        self.segment(p.site, p.time)
    }

    pub fn class_of(&self, segment: usize) -> usize {
        self.uf.find(segment)
    }

    pub fn circle(&self) -> bool {
        self.circle
    }
}

/// A coupled draw with importance weight `∂ψ_{A1} ∂ψ̂_{A2}`.
pub fn sample_coupled<R: Rng + ?Sized>(
    system: &CoupledSystem,
    lambda: f64,
    delta: f64,
    a1: &[Point],
    a2: &[Point],
    rng: &mut R,
) -> (CoupledConfiguration, f64) {
    let cfg = system.sample(lambda, delta, rng);
    let w = system.weight(&cfg, a1, a2, delta);
    (cfg, w)
}

fn origin(region: &Region) -> Point {
    Point::new(region.lattice().origin(), 0.0)
}

fn check_point(region: &Region, p: Point) -> Result<()> {
    if p.site >= region.n_sites() || !region.is_interior_time(p.time) {
        return Err(domain(format!("point ({}, {}) must be interior to the region", p.site, p.time)));
    }
    Ok(())
}

/// `E(∂ψ_{A1} ∂ψ̂_{A2} f)` over `n` draws.
fn coupled_mean<R, F>(system: &CoupledSystem, lambda: f64, delta: f64, a1: &[Point], a2: &[Point], n: usize, rng: &mut R, f: F) -> RunningStats
where
    R: Rng + ?Sized,
    F: Fn(&CoupledConfiguration, &Labelling, &Labelling) -> f64,
{
    let mut stats = RunningStats::new();
    for _ in 0..n {
        let cfg = system.sample(lambda, delta, rng);
        let value = match system.labels(&cfg, a1, a2) {
            Some((p, q)) => p.reduced_weight(delta) * q.reduced_weight(delta) * f(&cfg, &p, &q),
            None => 0.0,
        };
        stats.push(value);
    }
    stats
}

/// `P̄`-weighted samples of `f` under empty sources.
pub fn weighted_events<R, F>(system: &CoupledSystem, lambda: f64, delta: f64, n: usize, rng: &mut R, f: F) -> WeightedSamples
where
    R: Rng + ?Sized,
    F: Fn(&CoupledConfiguration, &Labelling, &Labelling) -> f64,
{
    let mut out = WeightedSamples::with_capacity(n);
    for _ in 0..n {
        let cfg = system.sample(lambda, delta, rng);
        match system.labels(&cfg, &[], &[]) {
            Some((p, q)) => {
                let lw = -2.0 * delta * (p.odd_length() + q.odd_length());
                out.push(f(&cfg, &p, &q), lw);
            }
            None => out.push(0.0, f64::NEG_INFINITY),
        }
    }
    out
}

/// `P̄(f)` by self-normalised weighting.
pub fn coupled_probability<R, F>(system: &CoupledSystem, lambda: f64, delta: f64, n: usize, rng: &mut R, f: F) -> Result<Estimate>
where
    R: Rng + ?Sized,
    F: Fn(&CoupledConfiguration, &Labelling, &Labelling) -> f64,
{
    weighted_events(system, lambda, delta, n, rng, f)
        .ratio()
        .ok_or_else(|| Error::Estimation("no draw with both labellings consistent".into()))
}

/// `E(∂ψ_{0κ} ∂ψ̂_∅)` against `E(∂ψ_∅ ∂ψ̂_{0κ} 1{0 ↔ κ off Γ})`, each from
/// its own `n` draws.
pub fn verify_switching<R: Rng + ?Sized>(
    region: &Region,
    lambda: f64,
    delta: f64,
    kappa: Point,
    n: usize,
    rng: &mut R,
) -> Result<IdentityReport> {
    check_point(region, kappa)?;
    let system = CoupledSystem::new(region)?;
    let pair = [origin(region), kappa];
    let lhs = coupled_mean(&system, lambda, delta, &pair, &[], n, rng, |_, _, _| 1.0);
    let rhs = coupled_mean(&system, lambda, delta, &[], &pair, n, rng, |cfg, p, q| {
        system.clusters(cfg, p, q, Mode::OffGhost).connected(pair[0], pair[1]) as u8 as f64
    });
    Ok(IdentityReport::equality("switching", lhs.estimate(), rhs.estimate(), 3.0)
        .param("lambda", lambda)
        .param("delta", delta)
        .param("kappa_site", kappa.site)
        .param("kappa_time", kappa.time))
}

fn correlations<R: Rng + ?Sized>(
    system: &CoupledSystem,
    lambda: f64,
    delta: f64,
    kappa: Point,
    n: usize,
    rng: &mut R,
) -> Result<(Estimate, Estimate)> {
    let pair = [origin(&system.region), kappa];
    let free = estimate_rpr_correlation(&pair, &system.region.with_bc(Bc::Free, system.first.time()), lambda, delta, n, rng)?;
    let wired =
        estimate_rpr_correlation(&pair, &system.region.with_bc(Bc::Wired, system.second.time()), lambda, delta, n, rng)?;
    Ok((free, wired))
}

#[derive(Clone, Debug, Serialize)]
pub struct DifferenceReport {
    /// `⟨σ0σκ⟩^{w} - ⟨σ0σκ⟩^{f}`.
    pub difference: Estimate,
    /// `E(∂ψ_∅ ∂ψ̂_{0κ} 1{0↔Γ}) / E(∂ψ_∅ ∂ψ̂_∅)`.
    pub bound: Estimate,
    pub lower: IdentityReport,
    pub upper: IdentityReport,
}

/// `0 <= ⟨σ0σκ⟩^{w,t2} - ⟨σ0σκ⟩^{f,t1} <= E(∂ψ_∅∂ψ̂_{0κ}1{0↔Γ})/E(∂ψ_∅∂ψ̂_∅)`.
pub fn correlation_difference_bound<R: Rng + ?Sized>(
    region: &Region,
    lambda: f64,
    delta: f64,
    kappa: Point,
    n: usize,
    rng: &mut R,
) -> Result<DifferenceReport> {
    check_point(region, kappa)?;
    let system = CoupledSystem::new(region)?;
    let (free, wired) = correlations(&system, lambda, delta, kappa, n, rng)?;
    let difference = wired.minus(&free);
    let o = origin(region);
    let pair = [o, kappa];
    let num = coupled_mean(&system, lambda, delta, &[], &pair, n, rng, |cfg, p, q| {
        system.clusters(cfg, p, q, Mode::Plain).to_ghost(o) as u8 as f64
    });
    let den = coupled_mean(&system, lambda, delta, &[], &[], n, rng, |_, _, _| 1.0);
    if den.mean() <= 0.0 {
        return Err(Error::Estimation("no consistent draw in the denominator pool".into()));
    }
    let bound = ratio_of_means(&num, &den);
    let lower = IdentityReport::inequality("difference-nonnegative", Estimate::exact(0.0), difference, 3.0);
    let upper = IdentityReport::inequality("difference-bound", difference, bound, 3.0);
    Ok(DifferenceReport { difference, bound, lower, upper })
}

#[derive(Clone, Debug, Serialize)]
pub struct ProductReport {
    /// `P̄(0 ↔ κ off Γ)`.
    pub off_ghost: Estimate,
    /// `P̄(0 ↔ κ)`, at least the product.
    pub plain: Estimate,
    pub free: Estimate,
    pub wired: Estimate,
    pub report: IdentityReport,
}

/// `P̄(0 ↔ κ off Γ)` against `⟨σ0σκ⟩^{f,t1} ⟨σ0σκ⟩^{w,t2}`.
pub fn product_identity<R: Rng + ?Sized>(
    region: &Region,
    lambda: f64,
    delta: f64,
    kappa: Point,
    n: usize,
    rng: &mut R,
) -> Result<ProductReport> {
    check_point(region, kappa)?;
    let system = CoupledSystem::new(region)?;
    let o = origin(region);
    let samples = weighted_events(&system, lambda, delta, n, rng, |cfg, p, q| {
        let off = system.clusters(cfg, p, q, Mode::OffGhost).connected(o, kappa);
        let plain = system.clusters(cfg, p, q, Mode::Plain).connected(o, kappa);
        (off as u8 * 2 + plain as u8) as f64
    });
    let err = || Error::Estimation("no draw with both labellings consistent".into());
    // decode the two indicators from one weighted pool
    let off_ghost = indicator(&samples, |v| v >= 2.0).ok_or_else(err)?;
    let plain = indicator(&samples, |v| v as u8 % 2 == 1).ok_or_else(err)?;
    let (free, wired) = correlations(&system, lambda, delta, kappa, n, rng)?;
    let product = free.times(&wired);
    let report = IdentityReport::equality("connectivity-product", off_ghost, product, 3.0)
        .param("plain_connectivity", plain.value);
    Ok(ProductReport { off_ghost, plain, free, wired, report })
}

fn indicator(samples: &WeightedSamples, f: impl Fn(f64) -> bool) -> Option<Estimate> {
    samples.map_values(|v| if f(v) { 1.0 } else { 0.0 }).ratio()
}

/// `C_κ` of the first local-modification bound.
pub fn constant_a(x: &[i64], t: f64, lambda: f64, delta: f64, beta: Beta) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(domain("the constant needs λ > 0"));
    }
    let norm: f64 = x.iter().map(|c| c.unsigned_abs() as f64).sum();
    Ok(match beta {
        Beta::Infinite => {
            let m = t.abs() + 2.0 + norm;
            (6.0 * delta * m).exp() * (2.0 / lambda + lambda).powf(m)
        }
        Beta::Finite(b) => (6.0 * delta * b * norm).exp() * (2.0 / (lambda * b) + lambda * b).powf(norm),
    })
}

/// `c(N0, r0)` of the second local-modification bound.
pub fn constant_b(n0: usize, r0: f64, lambda: f64, delta: f64, dim: usize) -> Result<f64> {
    if !(lambda * r0 > 0.0) {
        return Err(domain("the constant needs λ r0 > 0"));
    }
    let volume = ((2 * n0 + 1) as f64).powi(dim as i32);
    let first = (4.0 * delta * r0 * volume).exp();
    Ok(first * first * (1.0 + 2.0 / (lambda * r0).powi(2)).powf(2.0 * dim as f64 * volume))
}

/// Events on one site line used to probe the second bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocalEvent {
    NoBlockingCut,
    SecondOddAtZero,
    HasGhost,
    FirstEvenAtQuarter,
    TwoCuts,
}

impl LocalEvent {
    pub const ALL: [LocalEvent; 5] = [
        LocalEvent::NoBlockingCut,
        LocalEvent::SecondOddAtZero,
        LocalEvent::HasGhost,
        LocalEvent::FirstEvenAtQuarter,
        LocalEvent::TwoCuts,
    ];

    pub fn holds(self, site: usize, cfg: &CoupledConfiguration, psi: &Labelling, psi_hat: &Labelling) -> bool {
        match self {
            LocalEvent::NoBlockingCut => cfg.cuts[site]
                .iter()
                .all(|&c| psi.is_odd_at(site, c) == Some(true) || psi_hat.is_odd_at(site, c) == Some(true)),
            LocalEvent::SecondOddAtZero => psi_hat.is_odd_at(site, 0.0) == Some(true),
            LocalEvent::HasGhost => !cfg.second.ghosts[site].is_empty(),
            LocalEvent::FirstEvenAtQuarter => psi.is_odd_at(site, 0.25) == Some(false),
            LocalEvent::TwoCuts => cfg.cuts[site].len() >= 2,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalBoundsReport {
    pub first: Vec<IdentityReport>,
    pub second: Vec<IdentityReport>,
}

impl LocalBoundsReport {
    pub fn holds(&self) -> bool {
        self.first.iter().chain(&self.second).all(|r| r.holds)
    }
}

/// Checks `⟨σ0σκ⟩^w - ⟨σ0σκ⟩^f <= C_κ P̄(0↔Γ)` for each `κ`, and
/// `P̄(A) <= c P̄(A ∩ 𝒞)` for events `A` on the first site outside
/// `Λ_{n0}`, with `𝒞` the internal connectivity of `K(n0, r0)`.
pub fn verify_local_bounds<R: Rng + ?Sized>(
    region: &Region,
    lambda: f64,
    delta: f64,
    kappas: &[Point],
    n0: usize,
    n: usize,
    rng: &mut R,
) -> Result<LocalBoundsReport> {
    let system = CoupledSystem::new(region)?;
    let lattice = region.lattice();
    if n0 >= lattice.half() {
        return Err(domain("the inner box must be strictly smaller than the region"));
    }
    let beta = if region.is_ground_state() { Beta::Infinite } else { Beta::Finite(region.length()) };
    let r0 = if region.is_ground_state() { 2.0 * n0 as f64 } else { region.length() };
    let o = origin(region);
    let ghost = coupled_probability(&system, lambda, delta, n, rng, |cfg, p, q| {
        system.clusters(cfg, p, q, Mode::Plain).to_ghost(o) as u8 as f64
    })?;
    let mut first = Vec::new();
    for &kappa in kappas {
        check_point(region, kappa)?;
        let (free, wired) = correlations(&system, lambda, delta, kappa, n, rng)?;
        let c = constant_a(lattice.coords(kappa.site), kappa.time, lambda, delta, beta)?;
        first.push(
            IdentityReport::inequality("local-bound-a", wired.minus(&free), ghost.scale(c), 3.0)
                .param("kappa_site", kappa.site)
                .param("kappa_time", kappa.time)
                .param("constant", c),
        );
    }
    let window = Window::around_origin(region, n0, r0);
    let outside = (0..region.n_sites())
        .find(|&x| !window.contains_site(region, x))
        .ok_or_else(|| domain("no site outside the inner box"))?;
    let c = constant_b(n0, r0, lambda, delta, lattice.dim())?;
    let samples = weighted_events(&system, lambda, delta, n, rng, |cfg, p, q| {
        let inner = system.window_clusters(cfg, p, q, window).all_connected();
        let mut code = 0u32;
        for (i, e) in LocalEvent::ALL.iter().enumerate() {
            if e.holds(outside, cfg, p, q) {
                code |= 1 << (2 * i);
                if inner {
                    code |= 1 << (2 * i + 1);
                }
            }
        }
        code as f64
    });
    let mut second = Vec::new();
    for (i, e) in LocalEvent::ALL.iter().enumerate() {
        let err = || Error::Estimation("no draw with both labellings consistent".into());
        let pa = indicator(&samples, |v| (v as u32 >> (2 * i)) & 1 == 1).ok_or_else(err)?;
        let pac = indicator(&samples, |v| (v as u32 >> (2 * i + 1)) & 1 == 1).ok_or_else(err)?;
        second.push(
            IdentityReport::inequality("local-bound-b", pa, pac.scale(c), 3.0)
                .param("event", serde_json::to_value(e)?)
                .param("constant", c),
        );
    }
    Ok(LocalBoundsReport { first, second })
}
