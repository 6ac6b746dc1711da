//! Heat-bath Markov chain over whole site lines. Each update draws the
//! line exactly from its conditional law given the neighbouring lines:
//! forward filtering / backward sampling over the pieces where the local
//! field is constant, and endpoint-conditioned uniformization inside pieces.

use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::Serialize;

use super::{SpinConfiguration, SpinLine};
use crate::error::{domain, Result};
use crate::geometry::{Bc, Region};
use crate::stats::{Estimate, RunningStats};

type Mat = [[f64; 2]; 2];
type Vec2 = [f64; 2];

/// Largest expected uniformization count per piece before it is split.
const MAX_EVENTS_PER_PIECE: f64 = 40.0;

fn spin(i: usize) -> i8 {
    if i == 0 {
        1
    } else {
        -1
    }
}

fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn normalised(m: Mat) -> Mat {
    let s = m[0][0] + m[0][1] + m[1][0] + m[1][1];
    [[m[0][0] / s, m[0][1] / s], [m[1][0] / s, m[1][1] / s]]
}

fn norm2(v: Vec2) -> Vec2 {
    let s = v[0] + v[1];
    [v[0] / s, v[1] / s]
}

/// One piece of constant local field `a = λ·(neighbour spin sum)`.
#[derive(Clone, Copy, Debug)]
struct Piece {
    start: f64,
    len: f64,
    a: f64,
}

impl Piece {
    /// `exp(len·[[a, δ], [δ, -a]])`.
    fn transfer(&self, delta: f64) -> Mat {
        let w = self.a.hypot(delta);
        let x = w * self.len;
        let (c, s) = if x < 1e-8 { (1.0, self.len) } else { (x.cosh(), x.sinh() / w) };
        [[c + s * self.a, s * delta], [s * delta, c - s * self.a]]
    }
}

#[derive(Clone, Debug)]
pub struct HeatBath {
    config: SpinConfiguration,
    lambda: f64,
    delta: f64,
    neighbours: Vec<Vec<usize>>,
    origin: usize,
}

impl HeatBath {
    /// Starts from all spins `+1`.
    pub fn new(region: &Region, lambda: f64, delta: f64) -> Result<Self> {
        if !(lambda >= 0.0 && delta >= 0.0) {
            return Err(domain("λ and δ must be non-negative"));
        }
        let lines = vec![SpinLine::constant(1); region.n_sites()];
        let config = SpinConfiguration::new(region, lines)?;
        let adjacency = config.edges().adjacency();
        let neighbours = adjacency.into_iter().take(region.n_sites()).collect();
        let origin = region.lattice().origin();
        Ok(Self { config, lambda, delta, neighbours, origin })
    }

    pub fn config(&self) -> &SpinConfiguration {
        &self.config
    }

    fn pieces(&self, site: usize) -> Vec<Piece> {
        let h = self.config.region().half_length();
        let mut cuts = vec![-h, 0.0, h];
        for &y in &self.neighbours[site] {
            if let Some(line) = self.config.line(y) {
                cuts.extend(line.flips.iter().copied());
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut out = Vec::with_capacity(cuts.len());
        for w in cuts.windows(2) {
            let (a0, b0) = (w[0], w[1]);
            let mid = 0.5 * (a0 + b0);
            let field: f64 = self.neighbours[site].iter().map(|&y| self.config.spin(y, mid) as f64).sum();
            let a = self.lambda * field;
            let rate = 2.0 * a.abs() + self.delta;
            let parts = ((rate * (b0 - a0) / MAX_EVENTS_PER_PIECE).ceil() as usize).max(1);
            let len = (b0 - a0) / parts as f64;
            for k in 0..parts {
                out.push(Piece { start: a0 + k as f64 * len, len, a });
            }
        }
        out
    }

    /// Redraws the line at `site` from its conditional law and returns
    /// `E[σ(site, 0) | other lines]`.
    pub fn update_line<R: Rng + ?Sized>(&mut self, site: usize, rng: &mut R) -> f64 {
        let pieces = self.pieces(site);
        let k = pieces.len();
        let transfers: Vec<Mat> = pieces.iter().map(|p| normalised(p.transfer(self.delta))).collect();
        let zero_at = pieces.iter().position(|p| p.start == 0.0).unwrap_or(k);
        let time = self.config.region().time();
        // states at the piece boundaries 0..=k
        let mut states = vec![0usize; k + 1];
        let conditional_mean;
        if time == Bc::Periodic {
            let mut before = [[1.0, 0.0], [0.0, 1.0]];
            for t in &transfers[..zero_at] {
                before = normalised(mat_mul(&before, t));
            }
            let mut after = [[1.0, 0.0], [0.0, 1.0]];
            for t in &transfers[zero_at..] {
                after = normalised(mat_mul(&after, t));
            }
            let at_zero = mat_mul(&after, &before);
            let p = norm2([at_zero[0][0], at_zero[1][1]]);
            conditional_mean = p[0] - p[1];
            let full = mat_mul(&before, &after);
            let q = norm2([full[0][0], full[1][1]]);
            let s0 = if rng.random::<f64>() < q[0] { 0 } else { 1 };
            states[0] = s0;
            self.backward_sample(&transfers, &mut states, [1.0 - s0 as f64, s0 as f64], rng);
        } else {
            let ends: Vec2 = if time == Bc::Wired { [1.0, 0.0] } else { [1.0, 1.0] };
            let mut backward = vec![[0.0; 2]; k + 1];
            backward[k] = ends;
            for i in (0..k).rev() {
                let (t, b) = (&transfers[i], backward[i + 1]);
                backward[i] = norm2([t[0][0] * b[0] + t[0][1] * b[1], t[1][0] * b[0] + t[1][1] * b[1]]);
            }
            let mut forward = ends;
            for t in &transfers[..zero_at] {
                forward = norm2([forward[0] * t[0][0] + forward[1] * t[1][0], forward[0] * t[0][1] + forward[1] * t[1][1]]);
            }
            let p = norm2([forward[0] * backward[zero_at][0], forward[1] * backward[zero_at][1]]);
            conditional_mean = p[0] - p[1];
            let p0 = norm2([ends[0] * backward[0][0], ends[1] * backward[0][1]]);
            states[0] = if rng.random::<f64>() < p0[0] { 0 } else { 1 };
            for i in 0..k {
                let (t, b) = (&transfers[i], backward[i + 1]);
                let s = states[i];
                let w = norm2([t[s][0] * b[0], t[s][1] * b[1]]);
                states[i + 1] = if rng.random::<f64>() < w[0] { 0 } else { 1 };
            }
        }
        let mut flips = Vec::new();
        for (i, piece) in pieces.iter().enumerate() {
            bridge(piece, self.delta, states[i], states[i + 1], rng, &mut flips);
        }
        self.config.set_line(site, SpinLine { start: spin(states[0]), flips });
        conditional_mean
    }

    /// Circle case: boundary states after `s0` given the last state returns to `s0`.
    fn backward_sample<R: Rng + ?Sized>(&self, transfers: &[Mat], states: &mut [usize], end: Vec2, rng: &mut R) {
        let k = transfers.len();
        let mut backward = vec![[0.0; 2]; k + 1];
        backward[k] = end;
        for i in (0..k).rev() {
            let (t, b) = (&transfers[i], backward[i + 1]);
            backward[i] = norm2([t[0][0] * b[0] + t[0][1] * b[1], t[1][0] * b[0] + t[1][1] * b[1]]);
        }
        for i in 0..k {
            let (t, b) = (&transfers[i], backward[i + 1]);
            let s = states[i];
            let w = norm2([t[s][0] * b[0], t[s][1] * b[1]]);
            states[i + 1] = if rng.random::<f64>() < w[0] { 0 } else { 1 };
        }
    }

    /// Updates every line once; returns `E[σ(origin, 0) | rest]` from the origin update.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        let mut m = 0.0;
        for site in 0..self.neighbours.len() {
            let v = self.update_line(site, rng);
            if site == self.origin {
                m = v;
            }
        }
        m
    }
}

/// Endpoint-conditioned path on one piece, appending flip times.
fn bridge<R: Rng + ?Sized>(piece: &Piece, delta: f64, from: usize, to: usize, rng: &mut R, out: &mut Vec<f64>) {
    let a = piece.a;
    let mu = 2.0 * a.abs() + delta;
    if mu == 0.0 || delta == 0.0 {
        return;
    }
    // P = I + (G - |a| I)/μ, with G = [[a, δ], [δ, -a]]
    let p: Mat = [[1.0 + (a - a.abs()) / mu, delta / mu], [delta / mu, 1.0 + (-a - a.abs()) / mu]];
    let m = mu * piece.len;
    let target = {
        let t = piece.transfer(delta);
        t[from][to] * (-a.abs() * piece.len).exp()
    };
    // choose the number of uniformization events n ∝ Pois(m)(n)·Pⁿ[from][to]
    let u = rng.random::<f64>() * target;
    let mut row: Vec2 = if from == 0 { [1.0, 0.0] } else { [0.0, 1.0] };
    let mut pois = (-m).exp();
    let mut acc = 0.0;
    let mut n = 0usize;
    let cap = (m + 20.0 * m.sqrt() + 50.0) as usize;
    loop {
        acc += pois * row[to];
        if acc >= u || n >= cap {
            break;
        }
        n += 1;
        pois *= m / n as f64;
        row = [row[0] * p[0][0] + row[1] * p[1][0], row[0] * p[0][1] + row[1] * p[1][1]];
    }
    if n == 0 {
        return;
    }
    // powers Pᵏ[·][to] for k = 0..n
    let mut col = vec![[0.0; 2]; n + 1];
    col[0] = if to == 0 { [1.0, 0.0] } else { [0.0, 1.0] };
    for k in 1..=n {
        let c = col[k - 1];
        col[k] = [p[0][0] * c[0] + p[0][1] * c[1], p[1][0] * c[0] + p[1][1] * c[1]];
    }
    let uni = Uniform::new(piece.start, piece.start + piece.len).expect("positive piece");
    let mut times: Vec<f64> = (0..n).map(|_| uni.sample(rng)).collect();
    times.sort_by(f64::total_cmp);
    let mut s = from;
    for (step, &t) in times.iter().enumerate() {
        let left = n - step - 1;
        let w0 = p[s][0] * col[left][0];
        let w1 = p[s][1] * col[left][1];
        let next = if rng.random::<f64>() * (w0 + w1) < w0 { 0 } else { 1 };
        if next != s {
            out.push(t);
        }
        s = next;
    }
}

/// Rao-Blackwellised `σ(0,0)` per sweep after burn-in.
#[derive(Clone, Debug, Serialize)]
pub struct MagnetizationRun {
    pub values: Vec<f64>,
}

impl MagnetizationRun {
    pub fn run<R: Rng + ?Sized>(
        region: &Region,
        lambda: f64,
        delta: f64,
        burn_in: usize,
        sweeps: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut chain = HeatBath::new(region, lambda, delta)?;
        for _ in 0..burn_in {
            chain.sweep(rng);
        }
        let values = (0..sweeps).map(|_| chain.sweep(rng)).collect();
        Ok(Self { values })
    }

    /// Means of `batches` consecutive blocks.
    pub fn batch_means(&self, batches: usize) -> Vec<f64> {
        let size = (self.values.len() / batches.max(1)).max(1);
        self.values.chunks(size).filter(|c| c.len() == size).map(|c| c.iter().sum::<f64>() / size as f64).collect()
    }

    /// Pools batch means of independent runs.
    pub fn combine(runs: &[MagnetizationRun], batches: usize) -> Estimate {
        let stats: RunningStats = runs.iter().flat_map(|r| r.batch_means(batches)).collect();
        let n = runs.iter().map(|r| r.values.len() as u64).sum();
        Estimate { value: stats.mean(), stderr: stats.stderr(), n }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::LatticeBox;
    use crate::rng::chain_rng;
    use crate::spectral::SpectralModel;

    fn exact(region: &Region, lambda: f64, delta: f64) -> f64 {
        let model = SpectralModel::build(region.lattice(), region.space(), lambda, delta, 0.0).unwrap();
        let o = region.lattice().origin();
        let h = region.half_length();
        // spin correlation of origin at 0 with the wired field sign
        model.correlation(&[(o, 0.0)], region.time(), 2.0 * h).unwrap()
    }

    #[test]
    fn transfer_is_matrix_exponential() {
        let p = Piece { start: 0.0, len: 0.7, a: -0.4 };
        let t = p.transfer(1.3);
        // second-order Taylor check on a tiny piece
        let q = Piece { start: 0.0, len: 1e-4, a: -0.4 };
        let s = q.transfer(1.3);
        assert!((s[0][0] - (1.0 - 0.4e-4)).abs() < 1e-8);
        assert!((s[0][1] - 1.3e-4).abs() < 1e-8);
        assert!((t[0][1] - t[1][0]).abs() < 1e-15);
    }

    #[test]
    fn single_wired_site_matches_oracle() {
        let lattice = LatticeBox::symmetric(1, 0).unwrap();
        let region = Region::finite(lattice, 2.0, Bc::Wired, Bc::Wired).unwrap();
        let target = exact(&region, 0.6, 1.0);
        let mut rng = chain_rng(5, 0);
        let run = MagnetizationRun::run(&region, 0.6, 1.0, 10, 20_000, &mut rng).unwrap();
        let est = MagnetizationRun::combine(&[run], 20);
        // no active neighbours: the conditional mean is already exact
        assert!((est.value - target).abs() < 1e-10, "{est:?} vs {target}");
    }

    #[test]
    fn three_site_chain_matches_oracle() {
        for time in [Bc::Free, Bc::Wired, Bc::Periodic] {
            let lattice = LatticeBox::symmetric(1, 1).unwrap();
            let region = Region::finite(lattice, 1.5, Bc::Wired, time).unwrap();
            let target = exact(&region, 0.8, 1.0);
            let mut rng = chain_rng(6, 0);
            let run = MagnetizationRun::run(&region, 0.8, 1.0, 50, 20_000, &mut rng).unwrap();
            let est = MagnetizationRun::combine(&[run], 20);
            assert!(est.z_score(target).abs() < 4.0, "{time:?}: {est:?} vs {target}");
        }
    }
}
