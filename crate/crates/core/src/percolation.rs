//! Cluster statistics of the coupled measure and the coarse-trifurcation
//! diagnostic.

use rand::Rng;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::geometry::{Bc, Point, Region};
use crate::parity::{CoupledConfiguration, CoupledSystem, Domain, Labelling, Mode, Window};
use crate::report::IdentityReport;
use crate::stats::{Estimate, RunningStats, WeightedSamples};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterReport {
    pub n_clusters: usize,
    /// Classes containing a segment on the boundary of the region.
    pub boundary_touching: usize,
    pub origin_to_ghost: bool,
    /// The origin's class leaves the inner block.
    pub origin_to_boundary: bool,
    pub largest_cluster_measure: f64,
}

/// Clusters of the whole region, ghost jumps through `Γ` allowed.
pub fn cluster_report(
    system: &CoupledSystem,
    cfg: &CoupledConfiguration,
    psi: &Labelling,
    psi_hat: &Labelling,
    inner: Window,
) -> ClusterReport {
    let region = system.region();
    let clusters = system.clusters(cfg, psi, psi_hat, Mode::Plain);
    let labels = clusters.labels();
    let extents = clusters.segment_extents();
    let sites = clusters.segment_sites();

    let mut measure: std::collections::HashMap<usize, f64> = std::collections::HashMap::new();
    for (s, parts) in extents.iter().enumerate() {
        *measure.entry(labels[s]).or_default() += parts.iter().map(|(a, b)| b - a).sum::<f64>();
    }
    let largest = measure.values().copied().fold(0.0, f64::max);

    let origin = inner.centre;
    let (lo, hi) = (origin.time - 0.5 * inner.length, origin.time + 0.5 * inner.length);
    let origin_to_boundary = clusters.segment_of(origin).is_some_and(|o| {
        let class = labels[o];
        (0..labels.len()).filter(|&s| labels[s] == class).any(|s| {
            !inner.contains_site(region, sites[s]) || extents[s].iter().any(|&(a, b)| a < lo || b > hi)
        })
    });

    ClusterReport {
        n_clusters: clusters.n_clusters(),
        boundary_touching: clusters.n_boundary_classes(),
        origin_to_ghost: clusters.to_ghost(origin),
        origin_to_boundary,
        largest_cluster_measure: largest,
    }
}

/// Draws of `P̄` with weights `e^{-2δ(odd length)}`, sampled conditionally
/// on consistent labellings where [`CoupledSystem::sample_consistent`]
/// applies and from the product measure otherwise.
pub fn weighted_pool<R, F>(system: &CoupledSystem, lambda: f64, delta: f64, n: usize, rng: &mut R, f: F) -> WeightedSamples
where
    R: Rng + ?Sized,
    F: Fn(&CoupledConfiguration, &Labelling, &Labelling) -> f64,
{
    let conditional = system.sample_consistent(lambda, delta, rng).is_ok();
    let mut out = WeightedSamples::with_capacity(n);
    for _ in 0..n {
        let cfg = match conditional {
            true => system.sample_consistent(lambda, delta, rng).expect("conditional sampling applies"),
            false => system.sample(lambda, delta, rng),
        };
        match system.labels(&cfg, &[], &[]) {
            Some((p, q)) => out.push(f(&cfg, &p, &q), -2.0 * delta * (p.odd_length() + q.odd_length())),
            None => out.push(0.0, f64::NEG_INFINITY),
        }
    }
    out
}

fn pooled_probability<R, F>(system: &CoupledSystem, lambda: f64, delta: f64, n: usize, rng: &mut R, f: F) -> Result<Estimate>
where
    R: Rng + ?Sized,
    F: Fn(&CoupledConfiguration, &Labelling, &Labelling) -> f64,
{
    weighted_pool(system, lambda, delta, n, rng, f)
        .ratio()
        .ok_or_else(|| crate::Error::Estimation("no draw with both labellings consistent".into()))
}

/// `P̄(a ↔ b)` under the chosen jump semantics.
pub fn two_point_connectivity<R: Rng + ?Sized>(
    region: &Region,
    lambda: f64,
    delta: f64,
    a: Point,
    b: Point,
    mode: Mode,
    n: usize,
    rng: &mut R,
) -> Result<Estimate> {
    for p in [a, b] {
        if p.site >= region.n_sites() || !region.is_interior_time(p.time) {
            return Err(domain(format!("point ({}, {}) must be interior to the region", p.site, p.time)));
        }
    }
    if a == b {
        return Ok(Estimate::exact(1.0));
    }
    let system = CoupledSystem::new(region)?;
    pooled_probability(&system, lambda, delta, n, rng, |cfg, p, q| {
        system.clusters(cfg, p, q, mode).connected(a, b) as u8 as f64
    })
}

/// `P̄(origin ↔ Γ)`.
pub fn ghost_connectivity<R: Rng + ?Sized>(region: &Region, lambda: f64, delta: f64, n: usize, rng: &mut R) -> Result<Estimate> {
    let system = CoupledSystem::new(region)?;
    let o = Point::new(region.lattice().origin(), 0.0);
    pooled_probability(&system, lambda, delta, n, rng, |cfg, p, q| {
        system.clusters(cfg, p, q, Mode::Plain).to_ghost(o) as u8 as f64
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrifurcationReport {
    pub n_trifurcations: usize,
    /// Probes whose block fits in the region.
    pub n_probes: usize,
    /// Probes dropped because their block leaves the region.
    pub n_clipped: usize,
    pub n_boundary_intervals: usize,
    pub leaf_bound: f64,
}

/// Probe blocks `K(N0, r0) + (x, t)` with `x ∈ (2N0+1)ℤ^d`, `t ∈ 2r0ℤ`, and
/// the number of those clipped by the region.
pub fn probe_blocks(region: &Region, n0: usize, r0: f64) -> Result<(Vec<Window>, usize)> {
    if !(r0.is_finite() && r0 > 0.0) {
        return Err(domain(format!("probe block length must be positive, got {r0}")));
    }
    let lattice = region.lattice();
    let h = region.half_length();
    let spacing = 2 * n0 as i64 + 1;
    let (lower, upper) = (lattice.lower(), lattice.upper());
    let mut times = Vec::new();
    let k_max = (h / (2.0 * r0)).floor() as i64;
    for k in -k_max..=k_max {
        times.push(2.0 * r0 * k as f64);
    }
    let mut blocks = Vec::new();
    let mut clipped = 0;
    for site in 0..region.n_sites() {
        let x = lattice.coords(site);
        if x.iter().any(|c| c.rem_euclid(spacing) != 0) {
            continue;
        }
        let fits_space = x.iter().all(|&c| c - n0 as i64 >= lower && c + n0 as i64 <= upper);
        for &t in &times {
            let fits_time = t - 0.5 * r0 >= -h - 1e-12 && t + 0.5 * r0 <= h + 1e-12;
            if fits_space && fits_time {
                blocks.push(Window { half: n0, length: r0, centre: Point::new(site, t) });
            } else {
                clipped += 1;
            }
        }
    }
    Ok((blocks, clipped))
}

/// Maximal cut-free intervals meeting the boundary of the region, all cuts
/// counted.
pub fn boundary_intervals(region: &Region, cuts: &[Vec<f64>]) -> usize {
    let lattice = region.lattice();
    let circle = region.is_circle();
    cuts.iter()
        .enumerate()
        .map(|(x, c)| {
            let k = c.len();
            match (lattice.is_boundary(x), circle) {
                (true, true) => k.max(1),
                (true, false) => k + 1,
                (false, true) => 0,
                (false, false) => k.min(1) + 1,
            }
        })
        .sum()
}

/// `2(2N+1)^d + 4δr(2N+1)^{d-1}`.
pub fn leaf_bound(region: &Region, delta: f64) -> f64 {
    let lattice = region.lattice();
    let side = (2 * lattice.half() + 1) as f64;
    let d = lattice.dim() as i32;
    2.0 * side.powi(d) + 4.0 * delta * region.length() * side.powi(d - 1)
}

/// Mean of [`boundary_intervals`] when cuts form a Poisson process of rate
/// `4δ` on every line.
pub fn expected_boundary_intervals(region: &Region, delta: f64) -> f64 {
    let lattice = region.lattice();
    let mass = 4.0 * delta * region.length();
    let b = lattice.boundary().len() as f64;
    let interior = region.n_sites() as f64 - b;
    if region.is_circle() {
        b * (mass + (-mass).exp())
    } else {
        b * (1.0 + mass) + interior * (2.0 - (-mass).exp())
    }
}

/// Counts probe blocks that are internally connected and whose exterior has
/// at least three boundary-touching components. Paths avoid `Γ`.
pub fn trifurcation_diagnostic(
    system: &CoupledSystem,
    cfg: &CoupledConfiguration,
    psi: &Labelling,
    psi_hat: &Labelling,
    n0: usize,
    r0: f64,
    delta: f64,
) -> Result<TrifurcationReport> {
    let region = system.region();
    let (blocks, clipped) = probe_blocks(region, n0, r0)?;
    let mut n_trifurcations = 0;
    for &block in &blocks {
        let inner = system.domain_clusters(cfg, psi, psi_hat, Mode::OffGhost, Domain::Inside(block));
        if !inner.all_connected() {
            continue;
        }
        let outer = system.domain_clusters(cfg, psi, psi_hat, Mode::OffGhost, Domain::Outside(block));
        if outer.n_boundary_classes() >= 3 {
            n_trifurcations += 1;
        }
    }
    Ok(TrifurcationReport {
        n_trifurcations,
        n_probes: blocks.len(),
        n_clipped: clipped,
        n_boundary_intervals: boundary_intervals(region, &cfg.cuts),
        leaf_bound: leaf_bound(region, delta),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LeafBoundReport {
    pub configurations: usize,
    /// Configurations with more trifurcations than boundary intervals.
    pub violations: usize,
    /// `P̄`-weighted mean number of trifurcations.
    pub trifurcations: Estimate,
    /// Unweighted mean over the cut process.
    pub boundary_intervals: Estimate,
    pub leaf_bound: f64,
    pub expected_boundary_intervals: f64,
    pub n_clipped: usize,
    pub per_configuration: IdentityReport,
    pub expectation: IdentityReport,
}

impl LeafBoundReport {
    pub fn holds(&self) -> bool {
        self.per_configuration.holds && self.expectation.holds
    }
}

/// Runs the diagnostic on `n` configurations with consistent labellings,
/// drawn conditionally where [`CoupledSystem::sample_consistent`] applies.
pub fn leaf_bound_check<R: Rng + ?Sized>(
    region: &Region,
    lambda: f64,
    delta: f64,
    n0: usize,
    r0: f64,
    n: usize,
    rng: &mut R,
) -> Result<LeafBoundReport> {
    let system = CoupledSystem::new(region)?;
    let mut weighted = WeightedSamples::with_capacity(n);
    let mut intervals = RunningStats::new();
    let mut violations = 0;
    let mut clipped = 0;
    let mut attempts = 0;
    while weighted.len() < n {
        attempts += 1;
        if attempts > 100 * n.max(1) {
            return Err(crate::Error::Sampling("too few draws with consistent labellings".into()));
        }
        let cfg = match system.sample_consistent(lambda, delta, rng) {
            Ok(cfg) => cfg,
            Err(_) => system.sample(lambda, delta, rng),
        };
        let Some((p, q)) = system.labels(&cfg, &[], &[]) else { continue };
        let report = trifurcation_diagnostic(&system, &cfg, &p, &q, n0, r0, delta)?;
        clipped = report.n_clipped;
        if report.n_trifurcations > report.n_boundary_intervals {
            violations += 1;
        }
        intervals.push(report.n_boundary_intervals as f64);
        weighted.push(report.n_trifurcations as f64, -2.0 * delta * (p.odd_length() + q.odd_length()));
    }
    let trifurcations = weighted.ratio().unwrap_or(Estimate::exact(0.0));
    let bound = leaf_bound(region, delta);
    let expected = expected_boundary_intervals(region, delta);
    let boundary_intervals = intervals.estimate();
    let per_configuration = IdentityReport::exact("leaf-bound-per-configuration", violations as f64, 0.0, 0.0)
        .param("configurations", n);
    let expectation = IdentityReport::inequality("leaf-bound-expectation", boundary_intervals, Estimate::exact(bound), 3.0)
        .param("expected_boundary_intervals", expected);
    Ok(LeafBoundReport {
        configurations: n,
        violations,
        trifurcations,
        boundary_intervals,
        leaf_bound: bound,
        expected_boundary_intervals: expected,
        n_clipped: clipped,
        per_configuration,
        expectation,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub lambda: f64,
    pub ghost: Estimate,
}

/// `P̄(origin ↔ Γ)` along a grid of `λ`.
pub fn ghost_sweep<R: Rng + ?Sized>(region: &Region, lambdas: &[f64], delta: f64, n: usize, rng: &mut R) -> Result<Vec<SweepPoint>> {
    if lambdas.is_empty() {
        return Err(domain("empty lambda grid"));
    }
    lambdas
        .iter()
        .map(|&lambda| Ok(SweepPoint { lambda, ghost: ghost_connectivity(region, lambda, delta, n, rng)? }))
        .collect()
}

/// Consecutive estimates nondecreasing within `k` combined standard errors.
pub fn is_nondecreasing(points: &[SweepPoint], k: f64) -> bool {
    points.windows(2).all(|w| w[1].ghost.value >= w[0].ghost.value - k * w[0].ghost.stderr.hypot(w[1].ghost.stderr))
}

/// Time condition of the coupled pair for a region.
pub fn coupled_times(region: &Region) -> (Bc, Bc) {
    if region.is_ground_state() {
        (Bc::Free, Bc::Wired)
    } else {
        (Bc::Periodic, Bc::Periodic)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::LatticeBox;
    use crate::parity::ParityDraw;
    use crate::rng::chain_rng;

    fn chain(half: usize) -> Region {
        Region::ground_state(LatticeBox::symmetric(1, half).unwrap(), Bc::Wired, Bc::Wired).unwrap()
    }

    fn config(system: &CoupledSystem, bridges: Vec<Vec<f64>>, cuts: Vec<Vec<f64>>) -> CoupledConfiguration {
        let n = system.region().n_sites();
        let e = system.first().edges().len();
        let empty = ParityDraw { bridges: vec![vec![]; e], ghosts: vec![vec![]; n], tau: vec![false; n], ends: vec![(false, false); n] };
        let first = ParityDraw { bridges, ..empty.clone() };
        CoupledConfiguration { first, second: empty, cuts }
    }

    #[test]
    fn fully_bridged_region_is_one_cluster() {
        let region = chain(2);
        let system = CoupledSystem::new(&region).unwrap();
        let e = system.first().edges().len();
        let cfg = config(&system, vec![vec![-1.5, -0.5, 0.5, 1.5]; e], vec![vec![]; region.n_sites()]);
        let (p, q) = system.labels(&cfg, &[], &[]).unwrap();
        let w = Window::around_origin(&region, 1, 2.0);
        let report = cluster_report(&system, &cfg, &p, &q, w);
        assert_eq!(report.n_clusters, 1);
        assert_eq!(report.boundary_touching, 1);
        assert!(report.origin_to_boundary);
        assert!((report.largest_cluster_measure - region.length() * region.n_sites() as f64).abs() < 1e-12);
        let t = trifurcation_diagnostic(&system, &cfg, &p, &q, 1, 2.0, 1.0).unwrap();
        assert_eq!(t.n_trifurcations, 0);
    }

    #[test]
    fn dense_cuts_isolate_every_interval() {
        let region = Region::finite(LatticeBox::symmetric(1, 1).unwrap(), 1.0, Bc::Wired, Bc::Periodic).unwrap();
        let system = CoupledSystem::new(&region).unwrap();
        let n = region.n_sites();
        let e = system.first().edges().len();
        let cuts = vec![vec![-0.25, 0.0, 0.25]; n];
        let cfg = CoupledConfiguration { cuts, ..config(&system, vec![vec![]; e], vec![vec![]; n]) };
        let (p, q) = system.labels(&cfg, &[], &[]).unwrap();
        let report = cluster_report(&system, &cfg, &p, &q, Window::around_origin(&region, 0, 0.5));
        assert_eq!(report.n_clusters, 9);
        assert_eq!(report.boundary_touching, 6);
        assert!(!report.origin_to_ghost);
        assert!((report.largest_cluster_measure - 0.5).abs() < 1e-12);
        assert_eq!(boundary_intervals(&region, &cfg.cuts), 6);
    }

    #[test]
    fn plus_shape_is_a_trifurcation() {
        // block around the origin with arms left, right, up and down
        let region = chain(2);
        let system = CoupledSystem::new(&region).unwrap();
        let n = region.n_sites();
        let e = system.first().edges().len();
        let mut bridges = vec![vec![]; e];
        for (i, &(x, y)) in system.first().edges().iter().enumerate() {
            let (a, b) = (region.lattice().coords(x)[0], region.lattice().coords(y)[0]);
            if a.abs() <= 1 && b.abs() <= 1 {
                bridges[i].extend([0.0, 0.2]);
            }
        }
        let cfg = config(&system, bridges, vec![vec![]; n]);
        let (p, q) = system.labels(&cfg, &[], &[]).unwrap();
        let t = trifurcation_diagnostic(&system, &cfg, &p, &q, 1, 1.0, 1.0).unwrap();
        assert!(t.n_trifurcations >= 1, "{t:?}");
        assert!(t.n_trifurcations <= t.n_boundary_intervals);
    }

    #[test]
    fn zero_coupling_has_no_trifurcations() {
        let region = chain(4);
        let system = CoupledSystem::new(&region).unwrap();
        let mut rng = chain_rng(40, 0);
        for _ in 0..50 {
            let cfg = system.sample_consistent(0.0, 1.0, &mut rng).unwrap();
            let (p, q) = system.labels(&cfg, &[], &[]).unwrap();
            let t = trifurcation_diagnostic(&system, &cfg, &p, &q, 1, 2.0, 1.0).unwrap();
            assert_eq!(t.n_trifurcations, 0);
        }
    }

    #[test]
    fn probe_grid_clips_blocks() {
        let region = chain(4);
        let (blocks, clipped) = probe_blocks(&region, 1, 2.0).unwrap();
        assert_eq!(blocks.len(), 3);
        assert_eq!(clipped, 6);
        assert!(probe_blocks(&region, 1, 0.0).is_err());
    }

    #[test]
    fn leaf_bound_closed_forms() {
        let region = chain(4);
        assert_eq!(leaf_bound(&region, 1.0), 50.0);
        assert!((expected_boundary_intervals(&region, 1.0) - 80.0).abs() < 1e-9);
        let finite = Region::finite(LatticeBox::symmetric(1, 1).unwrap(), 1.0, Bc::Wired, Bc::Periodic).unwrap();
        assert!((expected_boundary_intervals(&finite, 0.25) - 2.0 * (1.0 + (-1f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn boundary_interval_mean_matches_closed_form() {
        let region = chain(2);
        let system = CoupledSystem::new(&region).unwrap();
        let mut rng = chain_rng(41, 0);
        let mut stats = RunningStats::new();
        for _ in 0..4000 {
            let cfg = system.sample(0.5, 0.25, &mut rng);
            stats.push(boundary_intervals(&region, &cfg.cuts) as f64);
        }
        let z = stats.estimate().z_score(expected_boundary_intervals(&region, 0.25));
        assert!(z.abs() < 4.0, "z = {z}");
    }

    #[test]
    fn same_point_connects_and_zero_coupling_separates() {
        let region = Region::finite(LatticeBox::even_side(1, 1).unwrap(), 1.0, Bc::Wired, Bc::Periodic).unwrap();
        let mut rng = chain_rng(42, 0);
        let a = Point::new(0, 0.0);
        let e = two_point_connectivity(&region, 1.0, 1.0, a, a, Mode::OffGhost, 10, &mut rng).unwrap();
        assert_eq!(e.value, 1.0);
        let b = Point::new(1, 0.0);
        let e = two_point_connectivity(&region, 0.0, 1.0, a, b, Mode::Plain, 200, &mut rng).unwrap();
        assert_eq!(e.value, 0.0);
    }
}
