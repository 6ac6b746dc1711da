//! Regions with holes: the holes identity and the probability that a
//! labelling is even on a set `J`.

use rand::Rng;
use serde::Serialize;

use super::ParitySystem;
use crate::error::{domain, Result};
use crate::geometry::{Bc, Region, SiteInterval};
use crate::report::IdentityReport;
use crate::spin::weighted_samples;
use crate::stats::{Estimate, RunningStats, WeightedSamples};

/// A relation in its literal form next to the form that holds exactly.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityPair {
    pub stated: IdentityReport,
    pub corrected: IdentityReport,
}

fn even_on_holes(labelling: &super::Labelling, j: &[SiteInterval]) -> bool {
    j.iter().all(|iv| labelling.lines[iv.site].even_on(iv.start, iv.end))
}

/// Number of fair bits the event "even in `J`" pins down: one per
/// time-periodic line meeting `J`, one per time-wired endpoint covered.
fn pinned_bits(region: &Region, j: &[SiteInterval]) -> i32 {
    let h = region.half_length();
    let mut sites: Vec<usize> = j.iter().map(|iv| iv.site).collect();
    sites.sort_unstable();
    sites.dedup();
    match region.time() {
        Bc::Periodic => sites.len() as i32,
        Bc::Wired => j.iter().map(|iv| (iv.start <= -h) as i32 + (iv.end >= h) as i32).sum(),
        Bc::Free => 0,
    }
}

/// `E_{K'}(∂ψ_∅)` against `e^{-2δ|J|} E(∂ψ_∅ 1{ψ even in J})`, both sides
/// from independent draws. The exact form carries the factor
/// `2^m e^{λ|J̃|}` for the bridges and ghosts removed with `J` and the fair
/// bits fixed by the event.
pub fn holes_identity_check<R: Rng + ?Sized>(
    j: &[SiteInterval],
    region: &Region,
    lambda: f64,
    delta: f64,
    n: usize,
    rng: &mut R,
) -> Result<IdentityPair> {
    let holed = ParitySystem::with_holes(region, j)?;
    let full = ParitySystem::new(region)?;
    let mut lhs = RunningStats::new();
    for _ in 0..n {
        let draw = holed.sample(lambda, rng);
        lhs.push(holed.weight(&draw, &[], delta));
    }
    let mut rhs = RunningStats::new();
    for _ in 0..n {
        let draw = full.sample(lambda, rng);
        let value = match full.label(&draw, &[]) {
            Some(l) if even_on_holes(&l, j) => l.reduced_weight(delta),
            _ => 0.0,
        };
        rhs.push(value);
    }
    let (lhs, rhs) = (lhs.estimate(), rhs.estimate());
    let factor = 2f64.powi(pinned_bits(region, j)) * (lambda * holed.hole_bond_length()).exp();
    let stated = IdentityReport::equality("holes", lhs, rhs, 3.0);
    let corrected = IdentityReport::equality("holes-corrected", lhs, rhs.scale(factor), 3.0);
    Ok(IdentityPair { stated, corrected })
}

/// `c(J) = 2^{-n} e^{δ|J| + λ|J̃|}`, `n` the number of intervals of `J`.
pub fn event_constant(j: &[SiteInterval], region: &Region, lambda: f64, delta: f64) -> Result<f64> {
    let system = ParitySystem::with_holes(region, j)?;
    let len: f64 = j.iter().map(SiteInterval::length).sum();
    Ok((delta * len + lambda * system.hole_bond_length() - j.len() as f64 * 2f64.ln()).exp())
}

/// `P(ψ even in J)` against `c(J) μ[e^{-λL_J}]` and against the exact
/// spin-side expression `μ[e^{-λL_J} D_J]`, where `D_J` is the product of
/// `1/(1 + σ(a)σ(b)e^{-2δ(b-a)})` over holes `[a, b]` away from the time
/// boundary (every hole, on a periodic line).
pub fn event_probability_identity<R: Rng + ?Sized>(
    j: &[SiteInterval],
    region: &Region,
    lambda: f64,
    delta: f64,
    n: usize,
    rng: &mut R,
) -> Result<IdentityPair> {
    if region.time() == Bc::Wired {
        return Err(domain("the even-on-J identity is implemented for free and periodic time"));
    }
    ParitySystem::with_holes(region, j)?;
    let full = ParitySystem::new(region)?;
    let mut parity = WeightedSamples::with_capacity(n);
    for _ in 0..n {
        let draw = full.sample(lambda, rng);
        match full.label(&draw, &[]) {
            Some(l) => {
                let even = even_on_holes(&l, j);
                parity.push(if even { 1.0 } else { 0.0 }, -2.0 * delta * l.odd_length());
            }
            None => parity.push(0.0, f64::NEG_INFINITY),
        }
    }
    let lhs = parity.ratio().ok_or_else(|| crate::Error::Estimation("no consistent labelling".into()))?;

    let plain = weighted_samples(region, lambda, delta, n, rng, |c| (-lambda * c.restricted_overlap(j)).exp())?;
    let plain = plain.ratio().ok_or_else(|| crate::Error::Estimation("all spin weights vanish".into()))?;
    let c = event_constant(j, region, lambda, delta)?;

    let h = region.half_length();
    let circle = region.time() == Bc::Periodic;
    let exact = weighted_samples(region, lambda, delta, n, rng, |cfg| {
        let mut d = 1.0;
        for iv in j {
            if !circle && (iv.start <= -h || iv.end >= h) {
                continue;
            }
            let s = (cfg.spin(iv.site, iv.start) * cfg.spin(iv.site, iv.end)) as f64;
            d /= 1.0 + s * (-2.0 * delta * iv.length()).exp();
        }
        (-lambda * cfg.restricted_overlap(j)).exp() * d
    })?;
    let exact: Estimate = exact.ratio().ok_or_else(|| crate::Error::Estimation("all spin weights vanish".into()))?;

    let stated = IdentityReport::equality("event-probability", lhs, plain.scale(c), 3.0).param("c_J", c);
    let corrected = IdentityReport::equality("event-probability-corrected", lhs, exact, 3.0);
    Ok(IdentityPair { stated, corrected })
}
