//! Poisson point processes on intervals and circles, and the three local
//! modifications with their Radon-Nikodym densities.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::stats::{Estimate, RunningStats};

/// Where points live. Circles are stored as `[-length/2, length/2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Carrier {
    Interval { start: f64, end: f64 },
    Circle { length: f64 },
}

impl Carrier {
    pub fn interval(start: f64, end: f64) -> Self {
        Carrier::Interval { start, end }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Carrier::Interval { start, end } => (start, end),
            Carrier::Circle { length } => (-0.5 * length, 0.5 * length),
        }
    }

    pub fn length(&self) -> f64 {
        let (a, b) = self.bounds();
        b - a
    }

    pub fn contains(&self, t: f64) -> bool {
        let (a, b) = self.bounds();
        match self {
            Carrier::Interval { .. } => t >= a && t <= b,
            Carrier::Circle { .. } => t >= a && t < b,
        }
    }
}

/// Strictly increasing times on a carrier.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    carrier: Carrier,
    points: Vec<f64>,
}

impl PointSet {
    pub fn new(carrier: Carrier, points: Vec<f64>) -> Result<Self> {
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(domain("points must be strictly increasing"));
        }
        if let Some(p) = points.iter().find(|&&p| !carrier.contains(p)) {
            return Err(domain(format!("point {p} outside the carrier")));
        }
        Ok(Self { carrier, points })
    }

    pub fn empty(carrier: Carrier) -> Self {
        Self { carrier, points: Vec::new() }
    }

    pub fn carrier(&self) -> Carrier {
        self.carrier
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn into_points(self) -> Vec<f64> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of points in `[a, b]`.
    pub fn count_in(&self, a: f64, b: f64) -> usize {
        let lo = self.points.partition_point(|&p| p < a);
        let hi = self.points.partition_point(|&p| p <= b);
        hi.saturating_sub(lo)
    }

    fn insert(&mut self, t: f64) -> bool {
        match self.points.binary_search_by(|p| p.total_cmp(&t)) {
            Ok(_) => false,
            Err(i) => {
                self.points.insert(i, t);
                true
            }
        }
    }
}

/// Piecewise-constant nonnegative rate over a carrier.
#[derive(Clone, Debug, PartialEq)]
pub struct IntensityProfile {
    carrier: Carrier,
    breaks: Vec<f64>,
    rates: Vec<f64>,
}

impl IntensityProfile {
    pub fn constant(carrier: Carrier, rate: f64) -> Result<Self> {
        let (a, b) = carrier.bounds();
        Self::piecewise(carrier, vec![a, b], vec![rate])
    }

    /// `breaks` runs from the carrier start to its end; piece `i` covers
    /// `[breaks[i], breaks[i+1])` with rate `rates[i]`.
    pub fn piecewise(carrier: Carrier, breaks: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        let (a, b) = carrier.bounds();
        if breaks.len() != rates.len() + 1 || rates.is_empty() {
            return Err(domain("need one more break than rates"));
        }
        if breaks.windows(2).any(|w| w[0] > w[1]) || breaks[0] != a || *breaks.last().unwrap() != b {
            return Err(domain("breaks must increase from the carrier start to its end"));
        }
        if rates.iter().any(|&r| !(r >= 0.0 && r.is_finite())) {
            return Err(domain("rates must be finite and nonnegative"));
        }
        Ok(Self { carrier, breaks, rates })
    }

    pub fn carrier(&self) -> Carrier {
        self.carrier
    }

    pub fn total_mass(&self) -> f64 {
        self.rates.iter().enumerate().map(|(i, r)| r * (self.breaks[i + 1] - self.breaks[i])).sum()
    }
}

/// Appends the points of a rate-`rate` process on `[a, b)` in increasing order.
pub fn push_homogeneous<R: Rng + ?Sized>(rate: f64, a: f64, b: f64, rng: &mut R, out: &mut Vec<f64>) {
    if rate <= 0.0 || b <= a {
        return;
    }
    let mut t = a;
    loop {
        let gap: f64 = Exp1.sample(rng);
        t += gap / rate;
        if t >= b {
            break;
        }
        out.push(t);
    }
}

/// Homogeneous process on `[a, b)`, sorted.
pub fn homogeneous<R: Rng + ?Sized>(rate: f64, a: f64, b: f64, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::new();
    push_homogeneous(rate, a, b, rng, &mut out);
    out
}

pub fn sample<R: Rng + ?Sized>(profile: &IntensityProfile, rng: &mut R) -> PointSet {
    loop {
        let mut points = Vec::new();
        for (i, &rate) in profile.rates.iter().enumerate() {
            push_homogeneous(rate, profile.breaks[i], profile.breaks[i + 1], rng, &mut points);
        }
        if points.windows(2).all(|w| w[0] < w[1]) {
            return PointSet { carrier: profile.carrier, points };
        }
    }
}

fn uniform_on<R: Rng + ?Sized>(carrier: Carrier, rng: &mut R) -> f64 {
    let (a, b) = carrier.bounds();
    loop {
        let t = a + (b - a) * rng.random::<f64>();
        if carrier.contains(t) {
            return t;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    DeleteAll,
    AddTwoIfEmpty,
    AddOrDelete,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::DeleteAll, Scheme::AddTwoIfEmpty, Scheme::AddOrDelete];

    /// Exact density `dẼ/dE` at a configuration with `count` points, for a
    /// rate-`alpha` process on an interval of length `t`.
    pub fn density(self, count: usize, alpha: f64, t: f64) -> f64 {
        let at = alpha * t;
        match self {
            Scheme::DeleteAll => {
                if count == 0 {
                    at.exp()
                } else {
                    0.0
                }
            }
            Scheme::AddTwoIfEmpty => {
                let mut d = if count > 0 { 1.0 } else { 0.0 };
                if count == 2 {
                    d += 2.0 / (at * at);
                }
                d
            }
            Scheme::AddOrDelete => {
                let mut d = 0.0;
                if count == 1 {
                    d += 1.0 / at;
                }
                if count == 2 {
                    d += 2.0 / at;
                }
                if count > 0 {
                    d += at / (count as f64 + 1.0);
                }
                d
            }
        }
    }

    /// Almost-sure upper bound on the density.
    pub fn bound(self, alpha: f64, t: f64) -> f64 {
        let at = alpha * t;
        match self {
            Scheme::DeleteAll => at.exp(),
            Scheme::AddTwoIfEmpty => 1.0 + 2.0 / (at * at),
            Scheme::AddOrDelete => 2.0 / at + at,
        }
    }

    /// The event that always holds for the modified process.
    pub fn target(self, count: usize) -> bool {
        match self {
            Scheme::DeleteAll => count == 0,
            Scheme::AddTwoIfEmpty | Scheme::AddOrDelete => count > 0,
        }
    }

    pub fn modify<R: Rng + ?Sized>(self, x: &PointSet, alpha: f64, t: f64, rng: &mut R) -> Result<Modified> {
        match self {
            Scheme::DeleteAll => Ok(rn_delete_all(x, alpha, t)),
            Scheme::AddTwoIfEmpty => rn_add_two_if_empty(x, alpha, t, rng),
            Scheme::AddOrDelete => rn_add_or_delete(x, alpha, t, rng),
        }
    }
}

/// A modified configuration with the density of its law at the original
/// configuration and the scheme's uniform bound.
#[derive(Clone, Debug, PartialEq)]
pub struct Modified {
    pub points: PointSet,
    pub density: f64,
    pub bound: f64,
}

pub fn rn_delete_all(x: &PointSet, alpha: f64, t: f64) -> Modified {
    Modified {
        points: PointSet::empty(x.carrier()),
        density: Scheme::DeleteAll.density(x.len(), alpha, t),
        bound: Scheme::DeleteAll.bound(alpha, t),
    }
}

fn check_rate(alpha: f64, t: f64) -> Result<()> {
    if alpha * t > 0.0 {
        Ok(())
    } else {
        Err(Error::DegenerateRate(alpha * t))
    }
}

pub fn rn_add_two_if_empty<R: Rng + ?Sized>(x: &PointSet, alpha: f64, t: f64, rng: &mut R) -> Result<Modified> {
    check_rate(alpha, t)?;
    let mut points = x.clone();
    if x.is_empty() {
        while points.len() < 2 {
            points.insert(uniform_on(x.carrier(), rng));
        }
    }
    Ok(Modified {
        points,
        density: Scheme::AddTwoIfEmpty.density(x.len(), alpha, t),
        bound: Scheme::AddTwoIfEmpty.bound(alpha, t),
    })
}

pub fn rn_add_or_delete<R: Rng + ?Sized>(x: &PointSet, alpha: f64, t: f64, rng: &mut R) -> Result<Modified> {
    check_rate(alpha, t)?;
    let mut points = x.clone();
    if x.len() <= 1 {
        while !points.insert(uniform_on(x.carrier(), rng)) {}
    } else {
        let i = rng.random_range(0..points.len());
        points.points.remove(i);
    }
    Ok(Modified {
        points,
        density: Scheme::AddOrDelete.density(x.len(), alpha, t),
        bound: Scheme::AddOrDelete.bound(alpha, t),
    })
}

/// Both sides of `E f(X) <= c₁c₂ E[f(X) 1_A(X)]`.
#[derive(Clone, Debug, Serialize)]
pub struct ModificationReport {
    pub scheme: Scheme,
    pub alpha: f64,
    pub t: f64,
    pub lhs: Estimate,
    pub rhs: Estimate,
    pub c1: f64,
    pub c2: f64,
    pub holds: bool,
}

/// `f` must be nonnegative with `f(X)/f(X̃) <= c1`.
pub fn verify_modification_identity<R, F>(
    f: F,
    c1: f64,
    scheme: Scheme,
    alpha: f64,
    t: f64,
    samples: usize,
    rng: &mut R,
) -> Result<ModificationReport>
where
    R: Rng + ?Sized,
    F: Fn(&PointSet) -> f64,
{
    check_rate(alpha, t)?;
    let profile = IntensityProfile::constant(Carrier::interval(0.0, t), alpha)?;
    let c2 = scheme.bound(alpha, t);
    let mut lhs = RunningStats::new();
    let mut rhs = RunningStats::new();
    for _ in 0..samples {
        let x = sample(&profile, rng);
        let fx = f(&x);
        lhs.push(fx);
        rhs.push(if scheme.target(x.len()) { c1 * c2 * fx } else { 0.0 });
    }
    let (lhs, rhs) = (lhs.estimate(), rhs.estimate());
    let holds = lhs.at_most(&rhs, 3.0);
    Ok(ModificationReport { scheme, alpha, t, lhs, rhs, c1, c2, holds })
}

/// Monte Carlo check of the Radon-Nikodym property: returns
/// `(E[ρ(X) g(X)], E[g(X̃)])` from independent draws.
pub fn density_property<R, G>(
    g: G,
    scheme: Scheme,
    alpha: f64,
    t: f64,
    samples: usize,
    rng: &mut R,
) -> Result<(Estimate, Estimate)>
where
    R: Rng + ?Sized,
    G: Fn(&PointSet) -> f64,
{
    check_rate(alpha, t)?;
    let profile = IntensityProfile::constant(Carrier::interval(0.0, t), alpha)?;
    let mut weighted = RunningStats::new();
    let mut modified = RunningStats::new();
    for _ in 0..samples {
        let x = sample(&profile, rng);
        weighted.push(scheme.density(x.len(), alpha, t) * g(&x));
        let y = sample(&profile, rng);
        modified.push(g(&scheme.modify(&y, alpha, t, rng)?.points));
    }
    Ok((weighted.estimate(), modified.estimate()))
}

/// Total-variation distance between the count law of `⌊tn⌋ + 1` Bernoulli
/// slots of success probability `alpha/n` and Poisson(`alpha t`).
pub fn bernoulli_tv(alpha: f64, t: f64, n: usize) -> f64 {
    let slots = (t * n as f64).floor() as usize + 1;
    let p = alpha / n as f64;
    let mean = alpha * t;
    let mut binom = (1.0 - p).powi(slots as i32);
    let mut pois = (-mean).exp();
    let (mut tv, mut mass_b, mut mass_p) = (0.0, 0.0, 0.0);
    for k in 0..=slots {
        tv += (binom - pois).abs();
        mass_b += binom;
        mass_p += pois;
        binom *= (slots - k) as f64 / (k + 1) as f64 * p / (1.0 - p);
        pois *= mean / (k + 1) as f64;
    }
    tv += (1.0 - mass_b).max(0.0) + (1.0 - mass_p).max(0.0);
    0.5 * tv
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::chain_rng;

    #[test]
    fn zero_rate_is_empty() {
        let mut rng = chain_rng(1, 0);
        let p = IntensityProfile::constant(Carrier::interval(0.0, 3.0), 0.0).unwrap();
        assert!(sample(&p, &mut rng).is_empty());
    }

    #[test]
    fn zero_piece_stays_empty() {
        let mut rng = chain_rng(2, 0);
        let c = Carrier::interval(0.0, 2.0);
        let p = IntensityProfile::piecewise(c, vec![0.0, 1.0, 2.0], vec![5.0, 0.0]).unwrap();
        for _ in 0..200 {
            assert_eq!(sample(&p, &mut rng).count_in(1.0, 2.0), 0);
        }
    }

    #[test]
    fn mean_count() {
        let mut rng = chain_rng(3, 0);
        let p = IntensityProfile::constant(Carrier::interval(0.0, 2.5), 1.3).unwrap();
        let s: RunningStats = (0..20000).map(|_| sample(&p, &mut rng).len() as f64).collect();
        assert!(s.estimate().z_score(1.3 * 2.5).abs() < 3.0);
    }

    #[test]
    fn circle_points_in_range() {
        let mut rng = chain_rng(4, 0);
        let p = IntensityProfile::constant(Carrier::Circle { length: 2.0 }, 4.0).unwrap();
        for _ in 0..100 {
            let x = sample(&p, &mut rng);
            assert!(x.points().iter().all(|&t| (-1.0..1.0).contains(&t)));
        }
    }

    #[test]
    fn densities() {
        let e = std::f64::consts::E;
        let c = Carrier::interval(0.0, 2.0);
        assert!((rn_delete_all(&PointSet::empty(c), 1.0, 2.0).density - e * e).abs() < 1e-12);
        let one = PointSet::new(Carrier::interval(0.0, 1.0), vec![0.3]).unwrap();
        let m = rn_delete_all(&one, 1.0, 1.0);
        assert!(m.points.is_empty());
        assert!((m.bound - e).abs() < 1e-12);
        assert_eq!(rn_delete_all(&one, 0.0, 1.0).bound, 1.0);
        assert_eq!(Scheme::AddTwoIfEmpty.density(1, 1.0, 0.5), 1.0);
        assert!((Scheme::AddTwoIfEmpty.density(2, 1.0, 0.5) - 9.0).abs() < 1e-12);
        let at: f64 = 0.7;
        assert!((Scheme::AddOrDelete.density(5, 1.0, at) - at / 6.0).abs() < 1e-15);
        assert!((Scheme::AddOrDelete.density(1, 1.0, at) - (1.0 / at + at / 2.0)).abs() < 1e-15);
        assert!((Scheme::AddOrDelete.density(2, 1.0, at) - (2.0 / at + at / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn degenerate_rate_rejected() {
        let mut rng = chain_rng(5, 0);
        let x = PointSet::empty(Carrier::interval(0.0, 1.0));
        assert!(matches!(rn_add_two_if_empty(&x, 0.0, 1.0, &mut rng), Err(Error::DegenerateRate(_))));
        assert!(matches!(rn_add_or_delete(&x, 1.0, 0.0, &mut rng), Err(Error::DegenerateRate(_))));
    }

    #[test]
    fn modifications_have_expected_sizes() {
        let mut rng = chain_rng(6, 0);
        let c = Carrier::interval(0.0, 1.0);
        let empty = PointSet::empty(c);
        assert_eq!(rn_add_two_if_empty(&empty, 1.0, 1.0, &mut rng).unwrap().points.len(), 2);
        let three = PointSet::new(c, vec![0.1, 0.5, 0.9]).unwrap();
        assert_eq!(rn_add_or_delete(&three, 1.0, 1.0, &mut rng).unwrap().points.len(), 2);
        assert_eq!(rn_add_or_delete(&empty, 1.0, 1.0, &mut rng).unwrap().points.len(), 1);
    }

    #[test]
    fn density_expectation_is_one() {
        // Σ_k P(k) ρ(k) = 1 for each scheme, computed from the Poisson law.
        for scheme in Scheme::ALL {
            for at in [0.5f64, 1.0, 2.0] {
                let mut pk = (-at).exp();
                let mut total = 0.0;
                for k in 0..60 {
                    total += pk * scheme.density(k, at, 1.0);
                    pk *= at / (k + 1) as f64;
                }
                assert!((total - 1.0).abs() < 1e-12, "{scheme:?} at {at}: {total}");
            }
        }
    }

    #[test]
    fn bernoulli_tv_decreases() {
        let tv: Vec<f64> = [10, 100, 1000].iter().map(|&n| bernoulli_tv(1.5, 2.0, n)).collect();
        assert!(tv[0] > tv[1] && tv[1] > tv[2], "{tv:?}");
        assert!(tv[2] < 0.01);
    }
}
