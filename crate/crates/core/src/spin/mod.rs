//! Space-time spin representation: Poisson flip processes reweighted by
//! `exp(λ Σ_{xy} ∫ σ_x σ_y)`.

mod heatbath;

pub use heatbath::{HeatBath, MagnetizationRun};

use rand::Rng;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::geometry::{Bc, EdgeSet, LatticeBox, Point, Region, SiteInterval};
use crate::poisson::push_homogeneous;
use crate::report::IdentityReport;
use crate::stats::{Estimate, WeightedSamples};

/// Attempts per site before rejection sampling gives up.
const REJECTION_BUDGET: usize = 100_000;

/// Effective sample size below which estimates carry a variance warning.
pub const LOW_ESS: f64 = 100.0;

/// Right-continuous `±1` path on `[-r/2, r/2]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinLine {
    pub start: i8,
    pub flips: Vec<f64>,
}

impl SpinLine {
    pub fn constant(value: i8) -> Self {
        Self { start: value, flips: Vec::new() }
    }

    pub fn value_at(&self, t: f64) -> i8 {
        let k = self.flips.partition_point(|&f| f <= t);
        if k % 2 == 0 {
            self.start
        } else {
            -self.start
        }
    }

    pub fn end_value(&self) -> i8 {
        if self.flips.len().is_multiple_of(2) {
            self.start
        } else {
            -self.start
        }
    }
}

/// `∫_a^b σ₁σ₂ dt` for two lines.
pub fn overlap(a_line: &SpinLine, b_line: &SpinLine, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut s1 = a_line.value_at(a) as f64;
    let mut s2 = b_line.value_at(a) as f64;
    let (f1, f2) = (&a_line.flips, &b_line.flips);
    let (mut i, mut j) = (f1.partition_point(|&f| f <= a), f2.partition_point(|&f| f <= a));
    let mut t = a;
    let mut acc = 0.0;
    loop {
        let n1 = f1.get(i).copied().unwrap_or(f64::INFINITY);
        let n2 = f2.get(j).copied().unwrap_or(f64::INFINITY);
        let next = n1.min(n2).min(b);
        acc += s1 * s2 * (next - t);
        if next >= b {
            return acc;
        }
        t = next;
        if n1 == next {
            s1 = -s1;
            i += 1;
        }
        if n2 == next {
            s2 = -s2;
            j += 1;
        }
    }
}

/// Spins on the active sites of a region; frozen wired sites read `+1`.
#[derive(Clone, Debug)]
pub struct SpinConfiguration {
    region: Region,
    edges: EdgeSet,
    lines: Vec<SpinLine>,
}

impl SpinConfiguration {
    pub fn new(region: &Region, lines: Vec<SpinLine>) -> Result<Self> {
        let edges = region.edge_set()?;
        if lines.len() != region.n_sites() {
            return Err(domain("one spin line per site"));
        }
        let h = region.half_length();
        for line in &lines {
            if line.start.abs() != 1 {
                return Err(domain("spins take values ±1"));
            }
            if line.flips.windows(2).any(|w| w[0] >= w[1]) || line.flips.iter().any(|&f| f <= -h || f >= h) {
                return Err(domain("flip times must be increasing and interior"));
            }
            match region.time() {
                Bc::Periodic if line.flips.len() % 2 == 1 => return Err(domain("periodic lines need an even flip count")),
                Bc::Wired if line.start != 1 || line.flips.len() % 2 == 1 => {
                    return Err(domain("wired time needs +1 at both ends"))
                }
                _ => {}
            }
        }
        Ok(Self { region: region.clone(), edges, lines })
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn edges(&self) -> &EdgeSet {
        &self.edges
    }

    pub fn lines(&self) -> &[SpinLine] {
        &self.lines
    }

    pub fn line(&self, site: usize) -> Option<&SpinLine> {
        self.lines.get(site)
    }

    pub(crate) fn set_line(&mut self, site: usize, line: SpinLine) {
        self.lines[site] = line;
    }

    pub fn spin(&self, site: usize, t: f64) -> i8 {
        match self.lines.get(site) {
            Some(line) => line.value_at(t),
            None => 1,
        }
    }

    pub fn product(&self, points: &[Point]) -> f64 {
        points.iter().map(|p| self.spin(p.site, p.time) as f64).product()
    }

    fn line_or_frozen(&self, site: usize) -> SpinLine {
        self.lines.get(site).cloned().unwrap_or_else(|| SpinLine::constant(1))
    }

    /// `Σ_{xy} ∫ σ_x σ_y dt` over the region's edge set.
    pub fn total_overlap(&self) -> f64 {
        let h = self.region.half_length();
        self.edges
            .edges()
            .iter()
            .map(|&(x, y)| overlap(&self.line_or_frozen(x), &self.line_or_frozen(y), -h, h))
            .sum()
    }

    /// `L_J(σ)`: edge overlaps restricted to times where either endpoint lies in `J`.
    pub fn restricted_overlap(&self, j: &[SiteInterval]) -> f64 {
        let mut total = 0.0;
        for &(x, y) in self.edges.edges() {
            let mut pieces: Vec<(f64, f64)> =
                j.iter().filter(|iv| iv.site == x || iv.site == y).map(|iv| (iv.start, iv.end)).collect();
            if pieces.is_empty() {
                continue;
            }
            pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (lx, ly) = (self.line_or_frozen(x), self.line_or_frozen(y));
            for (a, b) in merge_intervals(pieces) {
                total += overlap(&lx, &ly, a, b);
            }
        }
        total
    }
}

/// Unions of sorted closed intervals.
pub(crate) fn merge_intervals(sorted: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (a, b) in sorted {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

/// `λ Σ_{xy} ∫ σ_x σ_y`.
pub fn gibbs_log_weight(config: &SpinConfiguration, lambda: f64) -> f64 {
    if lambda == 0.0 {
        0.0
    } else {
        lambda * config.total_overlap()
    }
}

pub fn gibbs_weight(config: &SpinConfiguration, lambda: f64) -> f64 {
    gibbs_log_weight(config, lambda).exp()
}

/// Draws from the a-priori measure: rate-`δ` flips, fair start, time
/// boundary conditions imposed by rejection per site.
pub fn sample_apriori<R: Rng + ?Sized>(region: &Region, delta: f64, rng: &mut R) -> Result<SpinConfiguration> {
    if !(delta >= 0.0) {
        return Err(domain("δ must be non-negative"));
    }
    let h = region.half_length();
    let mut lines = Vec::with_capacity(region.n_sites());
    for site in 0..region.n_sites() {
        let mut flips = Vec::new();
        let mut attempts = 0;
        loop {
            flips.clear();
            push_homogeneous(delta, -h, h, rng, &mut flips);
            // a flip exactly at -h has probability zero; keep the invariant anyway
            flips.retain(|&f| f > -h);
            attempts += 1;
            if region.time() == Bc::Free || flips.len() % 2 == 0 {
                break;
            }
            if attempts >= REJECTION_BUDGET {
                return Err(Error::Sampling(format!(
                    "site {site}: no even flip count in {attempts} attempts (δ = {delta}, r = {})",
                    region.length()
                )));
            }
        }
        let start = if region.time() == Bc::Wired || rng.random::<bool>() { 1 } else { -1 };
        lines.push(SpinLine { start, flips });
    }
    SpinConfiguration::new(region, lines)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SpinEstimate {
    pub estimate: Estimate,
    pub effective_size: f64,
    /// Set when the effective sample size is below [`LOW_ESS`].
    pub low_ess: bool,
}

impl SpinEstimate {
    fn from_samples(samples: &WeightedSamples) -> Result<Self> {
        let estimate = samples.ratio().ok_or_else(|| Error::Estimation("all importance weights vanish".into()))?;
        let effective_size = samples.effective_size();
        Ok(Self { estimate, effective_size, low_ess: effective_size < LOW_ESS })
    }
}

fn check_points(points: &[Point], region: &Region) -> Result<()> {
    for p in points {
        if p.site >= region.n_sites() {
            return Err(domain(format!("site {} outside the box", p.site)));
        }
        if !region.is_interior_time(p.time) || (!region.is_circle() && p.time.abs() >= region.half_length()) {
            return Err(domain(format!("time {} not interior to the region", p.time)));
        }
    }
    Ok(())
}

/// Importance samples of `f(σ)` under the Gibbs weight.
pub fn weighted_samples<R, F>(region: &Region, lambda: f64, delta: f64, n: usize, rng: &mut R, f: F) -> Result<WeightedSamples>
where
    R: Rng + ?Sized,
    F: Fn(&SpinConfiguration) -> f64,
{
    let mut out = WeightedSamples::with_capacity(n);
    for _ in 0..n {
        let config = sample_apriori(region, delta, rng)?;
        out.push(f(&config), gibbs_log_weight(&config, lambda));
    }
    Ok(out)
}

/// `⟨σ_A⟩` by self-normalised importance sampling.
pub fn estimate_correlation<R: Rng + ?Sized>(
    points: &[Point],
    region: &Region,
    lambda: f64,
    delta: f64,
    n: usize,
    rng: &mut R,
) -> Result<SpinEstimate> {
    check_points(points, region)?;
    let samples = weighted_samples(region, lambda, delta, n, rng, |c| c.product(points))?;
    SpinEstimate::from_samples(&samples)
}

/// `μ[exp(-λ L_J(σ))]`.
pub fn estimate_exp_l<R: Rng + ?Sized>(
    j: &[SiteInterval],
    region: &Region,
    lambda: f64,
    delta: f64,
    n: usize,
    rng: &mut R,
) -> Result<SpinEstimate> {
    let h = region.half_length();
    if j.iter().any(|iv| iv.site >= region.n_sites() || iv.start < -h || iv.end > h) {
        return Err(domain("J must lie in the region"));
    }
    let samples = weighted_samples(region, lambda, delta, n, rng, |c| (-lambda * c.restricted_overlap(j)).exp())?;
    SpinEstimate::from_samples(&samples)
}

/// `⟨σ(0,0)⟩` under a wired spatial boundary.
pub fn estimate_magnetization<R: Rng + ?Sized>(
    region: &Region,
    lambda: f64,
    delta: f64,
    n: usize,
    rng: &mut R,
) -> Result<SpinEstimate> {
    if region.space() != Bc::Wired {
        return Err(domain("magnetization needs a wired spatial boundary"));
    }
    let origin = Point::new(region.lattice().origin(), 0.0);
    estimate_correlation(&[origin], region, lambda, delta, n, rng)
}

/// `⟨σ_A⟩` under `ff`, `fp`, `wp` and `ww` (space then time), in that order.
#[derive(Clone, Debug, Serialize)]
pub struct BoundaryChain {
    pub labels: Vec<String>,
    pub estimates: Vec<SpinEstimate>,
    /// Consecutive inequalities of the chain within 3 SE.
    pub reports: Vec<IdentityReport>,
}

impl BoundaryChain {
    pub fn holds(&self) -> bool {
        self.reports.iter().all(|r| r.holds)
    }
}

pub fn boundary_chain<R: Rng + ?Sized>(
    points: &[Point],
    lattice: &LatticeBox,
    beta: f64,
    lambda: f64,
    delta: f64,
    n: usize,
    rng: &mut R,
) -> Result<BoundaryChain> {
    let order = [(Bc::Free, Bc::Free), (Bc::Free, Bc::Periodic), (Bc::Wired, Bc::Periodic), (Bc::Wired, Bc::Wired)];
    let mut labels = Vec::new();
    let mut estimates = Vec::new();
    for (space, time) in order {
        let region = Region::finite(lattice.clone(), beta, space, time)?;
        labels.push(region.bc_label());
        estimates.push(estimate_correlation(points, &region, lambda, delta, n, rng)?);
    }
    let reports = (0..3)
        .map(|i| {
            IdentityReport::inequality(format!("{}<={}", labels[i], labels[i + 1]), estimates[i].estimate, estimates[i + 1].estimate, 3.0)
        })
        .collect();
    Ok(BoundaryChain { labels, estimates, reports })
}
