use proptest::prelude::*;
use tfim::geometry::{Bc, LatticeBox, Point, Region};
use tfim::parity::{CoupledConfiguration, CoupledSystem, Labelling, Mode};
use tfim::rng::chain_rng;
use tfim::stats::RunningStats;

fn system(beta: Option<f64>) -> CoupledSystem {
    let lattice = LatticeBox::symmetric(1, 2).unwrap();
    let region = match beta {
        Some(b) => Region::finite(lattice, b, Bc::Wired, Bc::Periodic).unwrap(),
        None => Region::ground_state(lattice, Bc::Wired, Bc::Wired).unwrap(),
    };
    CoupledSystem::new(&region).unwrap()
}

/// A configuration with both labellings consistent.
fn consistent(system: &CoupledSystem, seed: u64, lambda: f64) -> (CoupledConfiguration, Labelling, Labelling) {
    let mut rng = chain_rng(seed, 0);
    loop {
        let cfg = system.sample_consistent(lambda, 1.0, &mut rng).unwrap_or_else(|_| system.sample(lambda, 1.0, &mut rng));
        if let Some((p, q)) = system.labels(&cfg, &[], &[]) {
            return (cfg, p, q);
        }
    }
}

fn probes(system: &CoupledSystem) -> Vec<Point> {
    let region = system.region();
    let h = region.half_length();
    (0..region.n_sites()).flat_map(|x| (1..8).map(move |k| Point::new(x, -h + 2.0 * h * k as f64 / 8.0))).collect()
}

/// Every pair connected in `a` is connected in `b`, and every point joined
/// to Γ in `a` is joined in `b`.
fn dominated(system: &CoupledSystem, a: &CoupledConfiguration, b: &CoupledConfiguration, p: &Labelling, q: &Labelling) -> bool {
    let pts = probes(system);
    [Mode::Plain, Mode::OffGhost].into_iter().all(|mode| {
        let ca = system.clusters(a, p, q, mode);
        let cb = system.clusters(b, p, q, mode);
        pts.iter().all(|&u| {
            (!ca.to_ghost(u) || cb.to_ghost(u)) && pts.iter().all(|&v| !ca.connected(u, v) || cb.connected(u, v))
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn thinning_cuts_never_disconnects(seed in any::<u64>(), keep in prop::collection::vec(any::<bool>(), 64), ground in any::<bool>()) {
        let system = system(if ground { None } else { Some(1.5) });
        let (cfg, p, q) = consistent(&system, seed, 1.0);
        let mut thinned = cfg.clone();
        let mut i = 0;
        for cuts in thinned.cuts.iter_mut() {
            cuts.retain(|_| {
                i += 1;
                keep[i % keep.len()]
            });
        }
        prop_assert!(dominated(&system, &cfg, &thinned, &p, &q));
    }

    #[test]
    fn adding_bridges_never_disconnects(
        seed in any::<u64>(),
        extra in prop::collection::vec((0usize..4, 0.0f64..1.0, any::<bool>()), 1..6),
        ground in any::<bool>(),
    ) {
        let system = system(if ground { None } else { Some(1.5) });
        let (cfg, p, q) = consistent(&system, seed, 0.7);
        let h = system.region().half_length();
        let mut denser = cfg.clone();
        for (edge, u, second) in extra {
            let draw = if second { &mut denser.second } else { &mut denser.first };
            let t = -h + 2.0 * h * u;
            let k = edge % draw.bridges.len();
            let line = &mut draw.bridges[k];
            line.push(t);
            line.sort_by(f64::total_cmp);
        }
        prop_assert!(dominated(&system, &cfg, &denser, &p, &q));
    }

    #[test]
    fn merged_moments_equal_pooled(xs in prop::collection::vec(-1e3f64..1e3, 2..200), split in prop::collection::vec(0usize..200, 0..6)) {
        let mut cuts: Vec<usize> = split.into_iter().map(|c| c % xs.len()).collect();
        cuts.push(0);
        cuts.push(xs.len());
        cuts.sort_unstable();
        let mut merged = RunningStats::new();
        for w in cuts.windows(2) {
            let part: RunningStats = xs[w[0]..w[1]].iter().copied().collect();
            merged.merge(&part);
        }
        let pooled: RunningStats = xs.iter().copied().collect();
        prop_assert_eq!(merged.count(), pooled.count());
        let scale = xs.iter().map(|x| x.abs()).fold(1.0, f64::max);
        prop_assert!((merged.mean() - pooled.mean()).abs() <= 1e-12 * scale);
        prop_assert!((merged.variance() - pooled.variance()).abs() <= 1e-12 * scale * scale);
    }
}
