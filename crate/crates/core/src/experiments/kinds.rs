//! One runner per experiment kind. Parameter point `(i, j)` of sizes × grid
//! draws from master seed `derive_seed(seed, i·|grid| + j)`; chains within a
//! point are the streams of that seed.

use crate::error::{domain, Result};
use crate::geometry::{Bc, LatticeBox, Point, Region, SiteInterval};
use crate::parity::{
    correlation_difference_bound, estimate_rpr_correlation, event_probability_identity, holes_identity_check,
    product_identity, verify_local_bounds, verify_switching, DiscreteSystem, SlotPoint,
};
use crate::percolation::{ghost_connectivity, leaf_bound_check, two_point_connectivity};
use crate::parity::Mode;
use crate::poisson::{density_property, verify_modification_identity, PointSet, Scheme};
use crate::report::IdentityReport;
use crate::rng::{chain_rng, derive_seed, run_chains, split_draws};
use crate::spectral::{irb_check, wired_magnetization, SpectralModel};
use crate::spin::{boundary_chain, estimate_correlation};
use crate::stats::Estimate;

use super::critical::{heat_bath_point, HeatBathPlan, MagnetizationCurve};
use super::{CriticalEstimate, ExperimentKind, ResultRow, RowContext, RunConfig};

/// Largest box handed to the dense oracle for reference values.
const ORACLE_SITES: usize = 10;
const BATCHES: usize = 20;

type Dispatched = (Vec<ResultRow>, Option<bool>, Option<CriticalEstimate>);

pub(super) fn dispatch(config: &RunConfig, workers: usize) -> Result<Dispatched> {
    match config.kind {
        ExperimentKind::Correlation => Ok((correlation(config, workers)?, None, None)),
        ExperimentKind::MagnetizationSweep => magnetization(config, workers),
        ExperimentKind::SwitchingVerify => Ok((switching(config)?, None, None)),
        ExperimentKind::IrbCheck => Ok((irb(config)?, None, None)),
        ExperimentKind::PercolationSweep => percolation(config, workers),
        ExperimentKind::IdentitySuite => Ok((identity_suite(config)?, None, None)),
    }
}

/// Calls `f` for every parameter point with its region and seed.
fn for_points<F>(config: &RunConfig, mut f: F) -> Result<()>
where
    F: FnMut(usize, &Region, f64, u64) -> Result<()>,
{
    let grid = &config.model.lambdas;
    for (i, &n) in config.region.sizes.iter().enumerate() {
        let region = config.region(n)?;
        for (j, &lambda) in grid.iter().enumerate() {
            f(n, &region, lambda, derive_seed(config.seed, (i * grid.len() + j) as u64))?;
        }
    }
    Ok(())
}

fn ctx<'a>(config: &'a RunConfig, n: usize, region: &'a Region, lambda: f64) -> RowContext<'a> {
    RowContext { config, n, region, lambda, seed: config.seed }
}

/// Runs `f(draws, rng)` on the configured chains and pools the estimates,
/// each weighted by its share of the draws.
fn pooled<F>(config: &RunConfig, seed: u64, workers: usize, f: F) -> Result<Estimate>
where
    F: Fn(usize, &mut crate::rng::ChainRng) -> Result<Estimate> + Sync,
{
    let draws = split_draws(config.sampling.n_samples, config.sampling.n_chains);
    let results = run_chains(seed, draws.len(), workers, |c, rng| f(draws[c], rng));
    let estimates: Vec<Estimate> = results.into_iter().collect::<Result<_>>()?;
    Ok(merge(&estimates, &draws))
}

fn merge(estimates: &[Estimate], draws: &[usize]) -> Estimate {
    let total: f64 = draws.iter().map(|&d| d as f64).sum();
    let value = estimates.iter().zip(draws).map(|(e, &d)| e.value * d as f64).sum::<f64>() / total;
    let var = estimates.iter().zip(draws).map(|(e, &d)| (e.stderr * d as f64).powi(2)).sum::<f64>();
    Estimate { value, stderr: var.sqrt() / total, n: estimates.iter().map(|e| e.n).sum() }
}

fn oracle_correlation(region: &Region, points: &[Point], lambda: f64, delta: f64) -> Result<Option<f64>> {
    if region.n_sites() > ORACLE_SITES {
        return Ok(None);
    }
    let model = SpectralModel::build(region.lattice(), region.space(), lambda, delta, 0.0)?;
    let pts: Vec<(usize, f64)> = points.iter().map(|p| (p.site, p.time)).collect();
    Ok(Some(model.correlation(&pts, region.time(), region.length())?))
}

fn correlation(config: &RunConfig, workers: usize) -> Result<Vec<ResultRow>> {
    let delta = config.model.delta;
    let mut rows = Vec::new();
    for_points(config, |n, region, lambda, seed| {
        let (o, target) = config.points(region)?;
        let pair = [o, target];
        let c = ctx(config, n, region, lambda);
        let reference = oracle_correlation(region, &pair, lambda, delta)?;
        let spin = pooled(config, seed, workers, |draws, rng| {
            Ok(estimate_correlation(&pair, region, lambda, delta, draws, rng)?.estimate)
        })?;
        let parity = pooled(config, derive_seed(seed, 1), workers, |draws, rng| {
            estimate_rpr_correlation(&pair, region, lambda, delta, draws, rng)
        })?;
        for (name, e) in [("spin-correlation", spin), ("parity-correlation", parity)] {
            let mut row = c.row(name, e.value, e.stderr, e.n as f64);
            row.reference = reference;
            rows.push(row);
        }
        Ok(())
    })?;
    Ok(rows)
}

fn monotone_rows(rows: &[ResultRow], quantity: &str) -> bool {
    let mut ok = true;
    for pair in rows.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.quantity == quantity && b.quantity == quantity && a.n == b.n {
            ok &= b.estimate >= a.estimate - 3.0 * a.stderr.hypot(b.stderr);
        }
    }
    ok
}

fn magnetization(config: &RunConfig, workers: usize) -> Result<Dispatched> {
    let delta = config.model.delta;
    let plan = HeatBathPlan {
        sweeps: config.sampling.n_samples,
        burn_in: config.sampling.burn_in,
        chains: config.sampling.n_chains,
        workers,
        batches: BATCHES,
    };
    let wired = config.region.space == Bc::Wired && config.region.time == Bc::Wired;
    let mut rows = Vec::new();
    for_points(config, |n, region, lambda, seed| {
        let e = heat_bath_point(region, lambda, delta, plan, seed)?;
        let mut row = ctx(config, n, region, lambda).row("magnetization", e.value, e.stderr, e.n as f64);
        if wired && region.n_sites() <= 2 * ORACLE_SITES {
            row.reference = Some(wired_magnetization(config.region.dim, n, region.length(), lambda, delta)?);
        }
        rows.push(row);
        Ok(())
    })?;
    let monotone = monotone_rows(&rows, "magnetization");
    let critical = match &config.critical {
        None => None,
        Some(params) => {
            if config.region.dim != 1 || config.region.beta.is_some() || !wired || config.region.even_side {
                return Err(domain("the crossing estimate needs d = 1, the ground-state proxy and wired boundaries"));
            }
            let curves: Vec<MagnetizationCurve> = config
                .region
                .sizes
                .iter()
                .map(|&n| MagnetizationCurve {
                    n,
                    lambdas: config.model.lambdas.clone(),
                    values: rows
                        .iter()
                        .filter(|r| r.n == n)
                        .map(|r| Estimate { value: r.estimate, stderr: r.stderr, n: r.n_effective as u64 })
                        .collect(),
                })
                .collect();
            Some(super::estimate_lambda_c_1d(&curves, delta, params.scaling)?)
        }
    };
    Ok((rows, Some(monotone), critical))
}

/// Exact slot probabilities `1 - e^{-rate·w}` for slot width `w`.
fn slot_probability(rate: f64, width: f64) -> f64 {
    1.0 - (-rate * width).exp()
}

const EXACT_SLOTS: usize = 3;
const EXACT_TOL: f64 = 1e-12;

fn switching(config: &RunConfig) -> Result<Vec<ResultRow>> {
    let delta = config.model.delta;
    let mut rows = Vec::new();
    if config.sampling.exact {
        // two sites, one edge, in every case
        let lattice = LatticeBox::even_side(1, 1)?;
        let length = config.region.beta.unwrap_or(1.0);
        let region = Region::finite(lattice.clone(), length, Bc::Wired, Bc::Periodic)?;
        let width = length / EXACT_SLOTS as f64;
        for &lambda in &config.model.lambdas {
            let c = ctx(config, 1, &region, lambda);
            for (label, t1, t2) in [("pp", Bc::Periodic, Bc::Periodic), ("fw", Bc::Free, Bc::Wired), ("ff", Bc::Free, Bc::Free)] {
                let system = DiscreteSystem::new(
                    &lattice,
                    length,
                    t1,
                    t2,
                    EXACT_SLOTS,
                    slot_probability(lambda, width),
                    slot_probability(4.0 * delta, width),
                    slot_probability(lambda, width),
                )?;
                let report = system.verify(SlotPoint { site: 0, slot: 0 }, SlotPoint { site: 1, slot: 1 }, EXACT_TOL)?;
                for r in [report.switching, report.product] {
                    let mut row = c.report(&r);
                    row.quantity = format!("{}-{label}", r.identity);
                    row.n_effective = report.configurations as f64;
                    rows.push(row);
                }
            }
        }
        return Ok(rows);
    }
    for_points(config, |n, region, lambda, seed| {
        let (_, kappa) = config.points(region)?;
        let mut rng = chain_rng(seed, 0);
        let report = verify_switching(region, lambda, delta, kappa, config.sampling.n_samples, &mut rng)?;
        rows.push(ctx(config, n, region, lambda).report(&report));
        Ok(())
    })?;
    Ok(rows)
}

fn irb(config: &RunConfig) -> Result<Vec<ResultRow>> {
    let beta = config
        .region
        .beta
        .ok_or_else(|| crate::Error::Config("the infrared check needs a finite β".into()))?;
    let delta = config.model.delta;
    let mut rows = Vec::new();
    for_points(config, |n, _, lambda, _| {
        let lattice = config.lattice(n)?;
        let region = Region::finite(lattice.clone(), beta, Bc::Periodic, Bc::Periodic)?;
        let model = SpectralModel::build(&lattice, Bc::Periodic, lambda, delta, 0.0)?;
        let (_, report) = irb_check(&model, beta, config.sampling.l_max)?;
        let c = ctx(config, n, &region, lambda);
        let mut row = c.row("irb-min-slack", report.worst.slack, 0.0, report.n_points as f64);
        row.reference = Some(0.0);
        row.holds = Some(report.passed);
        rows.push(row);
        let mut row = c.row("irb-min-c-hat", report.min_c_hat, 0.0, report.n_points as f64);
        row.reference = Some(0.0);
        rows.push(row);
        Ok(())
    })?;
    Ok(rows)
}

fn percolation(config: &RunConfig, workers: usize) -> Result<Dispatched> {
    let delta = config.model.delta;
    let n0 = config.sampling.n0;
    let r0 = config.sampling.r0.unwrap_or(2.0 * n0 as f64);
    let mut rows = Vec::new();
    for_points(config, |n, region, lambda, seed| {
        let (o, target) = config.points(region)?;
        let c = ctx(config, n, region, lambda);
        let ghost = pooled(config, seed, workers, |draws, rng| ghost_connectivity(region, lambda, delta, draws, rng))?;
        rows.push(c.row("ghost-connectivity", ghost.value, ghost.stderr, ghost.n as f64));
        let two = pooled(config, derive_seed(seed, 1), workers, |draws, rng| {
            two_point_connectivity(region, lambda, delta, o, target, Mode::OffGhost, draws, rng)
        })?;
        rows.push(c.row("two-point-connectivity", two.value, two.stderr, two.n as f64));
        let mut rng = chain_rng(derive_seed(seed, 2), 0);
        let leaf = leaf_bound_check(region, lambda, delta, n0, r0, config.sampling.n_samples, &mut rng)?;
        let t = leaf.trifurcations;
        rows.push(c.row("trifurcations", t.value, t.stderr, leaf.configurations as f64));
        let b = leaf.boundary_intervals;
        let mut row = c.row("boundary-intervals", b.value, b.stderr, leaf.configurations as f64);
        row.reference = Some(leaf.expected_boundary_intervals);
        rows.push(row);
        let mut row = c.row("leaf-violations", leaf.violations as f64, 0.0, leaf.configurations as f64);
        row.reference = Some(0.0);
        rows.push(row);
        Ok(())
    })?;
    let monotone = monotone_rows(&rows, "ghost-connectivity");
    Ok((rows, Some(monotone), None))
}

fn central_interval(region: &Region, site: usize) -> Result<SiteInterval> {
    let q = 0.25 * region.half_length();
    SiteInterval::new(site, -q, q)
}

fn identity_suite(config: &RunConfig) -> Result<Vec<ResultRow>> {
    let delta = config.model.delta;
    let samples = config.sampling.n_samples;
    let mut rows = Vec::new();
    for_points(config, |n, region, lambda, seed| {
        let c = ctx(config, n, region, lambda);
        let (o, kappa) = config.points(region)?;
        let mut rng = chain_rng(seed, 0);
        let mut push = |r: &IdentityReport| rows.push(c.report(r));
        let j = [central_interval(region, o.site)?];
        let holes = holes_identity_check(&j, region, lambda, delta, samples, &mut rng)?;
        push(&holes.stated);
        push(&holes.corrected);
        if region.time() != Bc::Wired {
            let event = event_probability_identity(&j, region, lambda, delta, samples, &mut rng)?;
            push(&event.stated);
            push(&event.corrected);
        }
        push(&verify_switching(region, lambda, delta, kappa, samples, &mut rng)?);
        push(&product_identity(region, lambda, delta, kappa, samples, &mut rng)?.report);
        let difference = correlation_difference_bound(region, lambda, delta, kappa, samples, &mut rng)?;
        push(&difference.lower);
        push(&difference.upper);
        let half = region.lattice().half();
        if half >= 1 {
            let h = region.half_length();
            let kappas = [kappa, Point::new(o.site, 0.5 * h), Point::new(kappa.site, -0.5 * h)];
            let n0 = config.sampling.n0.min(half - 1);
            let local = verify_local_bounds(region, lambda, delta, &kappas, n0, samples, &mut rng)?;
            for r in local.first.iter().chain(&local.second) {
                push(r);
            }
        }
        if let Some(beta) = config.region.beta {
            let chain = boundary_chain(&[o, kappa], region.lattice(), beta, lambda, delta, samples, &mut rng)?;
            for r in &chain.reports {
                push(r);
            }
        }
        Ok(())
    })?;
    rows.extend(rn_suite(config)?);
    Ok(rows)
}

const RN_PRODUCTS: [f64; 3] = [0.5, 1.0, 2.0];

fn scheme_name(scheme: Scheme) -> &'static str {
    match scheme {
        Scheme::DeleteAll => "delete-all",
        Scheme::AddTwoIfEmpty => "add-two-if-empty",
        Scheme::AddOrDelete => "add-or-delete",
    }
}

fn decay(x: &PointSet) -> f64 {
    (-0.3 * x.len() as f64).exp()
}

/// Single-interval Radon-Nikodym checks at `αt ∈ {0.5, 1, 2}`, `t = 1`.
/// Emitted once per run against the first size and `λ`.
fn rn_suite(config: &RunConfig) -> Result<Vec<ResultRow>> {
    let n = config.region.sizes[0];
    let region = config.region(n)?;
    let c = ctx(config, n, &region, config.model.lambdas[0]);
    let samples = config.sampling.n_samples;
    let mut rng = chain_rng(derive_seed(config.seed, u64::MAX), 0);
    let mut rows = Vec::new();
    for scheme in Scheme::ALL {
        for at in RN_PRODUCTS {
            let g = |x: &PointSet| decay(x) * (1.0 + x.points().iter().sum::<f64>());
            let (weighted, modified) = density_property(g, scheme, at, 1.0, samples, &mut rng)?;
            let density = IdentityReport::equality(format!("rn-density-{}", scheme_name(scheme)), weighted, modified, 3.0);
            // f = e^{-0.3|X|} changes by at most e^{0.6} when two points move
            let c1 = if scheme == Scheme::DeleteAll { 1.0 } else { 0.6f64.exp() };
            let m = verify_modification_identity(decay, c1, scheme, at, 1.0, samples, &mut rng)?;
            let bound = IdentityReport::inequality(format!("rn-bound-{}", scheme_name(scheme)), m.lhs, m.rhs, 3.0);
            for r in [density, bound] {
                let mut row = c.report(&r);
                row.quantity = format!("{}@{at}", r.identity);
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_matches_pooled_sample() {
        let e = [Estimate { value: 1.0, stderr: 0.1, n: 10 }, Estimate { value: 3.0, stderr: 0.2, n: 30 }];
        let m = merge(&e, &[10, 30]);
        assert!((m.value - 2.5).abs() < 1e-12);
        assert!((m.stderr - (1.0f64 + 36.0).sqrt() / 40.0).abs() < 1e-12);
        assert_eq!(m.n, 40);
    }

    #[test]
    fn slot_probabilities() {
        assert_eq!(slot_probability(0.0, 1.0), 0.0);
        assert!((slot_probability(2.0, 0.25) - (1.0 - (-0.5f64).exp())).abs() < 1e-15);
    }
}
