//! Streaming moments, weighted ratio estimators and error bars.

use serde::{Deserialize, Serialize};

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// A point estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub n: u64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, stderr: 0.0, n: 0 }
    }

    /// `|self - other| <= k·sqrt(se₁² + se₂²)`.
    pub fn agrees_with(&self, other: &Estimate, k: f64) -> bool {
        (self.value - other.value).abs() <= k * self.stderr.hypot(other.stderr)
    }

    /// `self <= other` up to `k` combined standard errors.
    pub fn at_most(&self, other: &Estimate, k: f64) -> bool {
        self.value - other.value <= k * self.stderr.hypot(other.stderr)
    }

    /// Distance to an exact value in units of the standard error.
    pub fn z_score(&self, exact: f64) -> f64 {
        let d = self.value - exact;
        if self.stderr > 0.0 {
            d / self.stderr
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(d)
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { value: c * self.value, stderr: c.abs() * self.stderr, n: self.n }
    }

    pub fn minus(&self, other: &Estimate) -> Self {
        Self {
            value: self.value - other.value,
            stderr: self.stderr.hypot(other.stderr),
            n: self.n.min(other.n),
        }
    }

    /// Product of independent estimates, first-order error propagation.
    pub fn times(&self, other: &Estimate) -> Self {
        Self {
            value: self.value * other.value,
            stderr: (self.value * other.stderr).hypot(other.value * self.stderr),
            n: self.n.min(other.n),
        }
    }
}

/// Welford accumulator with Chan's pairwise merge.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &RunningStats) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let (na, nb) = (self.n as f64, other.n as f64);
        self.mean += d * nb / n as f64;
        self.m2 += other.m2 + d * d * na * nb / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }

    pub fn estimate(&self) -> Estimate {
        Estimate { value: self.mean, stderr: self.stderr(), n: self.n }
    }
}

impl FromIterator<f64> for RunningStats {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::new();
        for x in iter {
            s.push(x);
        }
        s
    }
}

/// Ratio of two independent sample means, delta-method standard error.
pub fn ratio_of_means(num: &RunningStats, den: &RunningStats) -> Estimate {
    let (a, b) = (num.mean(), den.mean());
    let value = a / b;
    let rel = (num.stderr() / b).hypot(a * den.stderr() / (b * b));
    Estimate { value, stderr: rel, n: num.count().min(den.count()) }
}

/// Samples `(value, log weight)` for self-normalised importance sampling.
#[derive(Clone, Debug, Default)]
pub struct WeightedSamples {
    values: Vec<f64>,
    log_weights: Vec<f64>,
}

impl WeightedSamples {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self { values: Vec::with_capacity(n), log_weights: Vec::with_capacity(n) }
    }

    /// `log_weight = -inf` records a zero-weight sample.
    pub fn push(&mut self, value: f64, log_weight: f64) {
        self.values.push(value);
        self.log_weights.push(log_weight);
    }

    pub fn append(&mut self, other: &mut WeightedSamples) {
        self.values.append(&mut other.values);
        self.log_weights.append(&mut other.log_weights);
    }

    /// Same weights, values passed through `f`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { values: self.values.iter().map(|&v| f(v)).collect(), log_weights: self.log_weights.clone() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn weights(&self) -> Vec<f64> {
        let top = self.log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return vec![0.0; self.len()];
        }
        self.log_weights.iter().map(|&l| (l - top).exp()).collect()
    }

    /// Kish effective sample size `(Σw)² / Σw²`.
    pub fn effective_size(&self) -> f64 {
        let w = self.weights();
        let s: f64 = w.iter().sum();
        let s2: f64 = w.iter().map(|x| x * x).sum();
        if s2 == 0.0 {
            0.0
        } else {
            s * s / s2
        }
    }

    /// `Σ v w / Σ w` with a delete-one jackknife standard error.
    /// Returns `None` when every weight vanishes.
    pub fn ratio(&self) -> Option<Estimate> {
        let w = self.weights();
        let n = w.len();
        let a: f64 = self.values.iter().zip(&w).map(|(v, w)| v * w).sum();
        let b: f64 = w.iter().sum();
        if b <= 0.0 {
            return None;
        }
        let value = a / b;
        if n < 2 {
            return Some(Estimate { value, stderr: 0.0, n: n as u64 });
        }
        let mut jk = RunningStats::new();
        for (v, wi) in self.values.iter().zip(&w) {
            let bb = b - wi;
            let theta = if bb > 0.0 { (a - v * wi) / bb } else { value };
            jk.push(theta);
        }
        let var = jk.variance() * (n - 1) as f64 * (n - 1) as f64 / n as f64;
        Some(Estimate { value, stderr: var.sqrt(), n: n as u64 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welford_matches_two_pass() {
        let xs: Vec<f64> = (0..100).map(|i| ((i * 37) % 17) as f64 * 0.3 - 1.0).collect();
        let s: RunningStats = xs.iter().cloned().collect();
        let mean = xs.iter().sum::<f64>() / 100.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 99.0;
        assert!((s.mean() - mean).abs() < 1e-14);
        assert!((s.variance() - var).abs() < 1e-13);
    }

    #[test]
    fn merge_matches_pooled() {
        let xs: Vec<f64> = (0..257).map(|i| (i as f64 * 0.731).sin() * 5.0 + 2.0).collect();
        let pooled: RunningStats = xs.iter().cloned().collect();
        let mut merged = RunningStats::new();
        for chunk in xs.chunks(40) {
            merged.merge(&chunk.iter().cloned().collect());
        }
        assert_eq!(merged.count(), pooled.count());
        assert!((merged.mean() - pooled.mean()).abs() < 1e-12);
        assert!((merged.variance() - pooled.variance()).abs() < 1e-12);
    }

    #[test]
    fn unit_weights_reduce_to_plain_mean() {
        let mut ws = WeightedSamples::new();
        let xs = [1.0, -1.0, 1.0, 1.0, -1.0, 1.0];
        for &x in &xs {
            ws.push(x, 0.0);
        }
        let plain: RunningStats = xs.iter().cloned().collect();
        let est = ws.ratio().unwrap();
        assert!((est.value - plain.mean()).abs() < 1e-15);
        assert!((est.stderr - plain.stderr()).abs() < 1e-12);
        assert!((ws.effective_size() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn weights_are_scale_free() {
        let mut a = WeightedSamples::new();
        let mut b = WeightedSamples::new();
        for i in 0..10 {
            let lw = (i as f64).sqrt();
            a.push(i as f64, lw);
            b.push(i as f64, lw + 700.0);
        }
        let (ra, rb) = (a.ratio().unwrap(), b.ratio().unwrap());
        assert!((ra.value - rb.value).abs() < 1e-12);
        assert!((ra.stderr - rb.stderr).abs() < 1e-12);
    }

    #[test]
    fn all_zero_weights_give_none() {
        let mut a = WeightedSamples::new();
        a.push(1.0, f64::NEG_INFINITY);
        assert!(a.ratio().is_none());
    }
}
