use tfim::experiments::{estimate_lambda_c_1d, MagnetizationCurve, Scaling};
use tfim::geometry::{Bc, LatticeBox, Point, Region};
use tfim::rng::chain_rng;
use tfim::spectral::wired_magnetization;
use tfim::spin::{estimate_correlation, estimate_magnetization, MagnetizationRun};
use tfim::stats::Estimate;

/// `⟨σ(0,0)⟩` with wired space and time, `r = 2N`, `δ = 1`, frozen from
/// sparse propagation.
const WIRED: [(f64, [f64; 4]); 3] = [
    (0.95, [0.73913, 0.70757, 0.68054, 0.65641]),
    (1.00, [0.77674, 0.75561, 0.73888, 0.72504]),
    (1.05, [0.80768, 0.79380, 0.78379, 0.77624]),
];

#[test]
fn frozen_wired_magnetizations() {
    for (lambda, row) in WIRED {
        for (k, expected) in row.into_iter().enumerate() {
            let n = k + 3;
            let m = wired_magnetization(1, n, 2.0 * n as f64, lambda, 1.0).unwrap();
            assert!((m - expected).abs() < 5e-6, "N={n} λ={lambda}: {m}");
        }
    }
}

#[test]
fn strong_coupling_magnetization_exceeds_half() {
    let region = Region::ground_state(LatticeBox::symmetric(1, 6).unwrap(), Bc::Wired, Bc::Wired).unwrap();
    let exact = wired_magnetization(1, 6, 12.0, 4.0, 1.0).unwrap();
    assert!(exact > 0.5);
    let mut rng = chain_rng(31, 0);
    let run = MagnetizationRun::run(&region, 4.0, 1.0, 200, 2000, &mut rng).unwrap();
    let e = MagnetizationRun::combine(&[run], 20);
    assert!(e.value > 0.5 && e.agrees_with(&Estimate::exact(exact), 3.0), "{e:?} vs {exact}");
}

fn exact_curves(delta: f64) -> Vec<MagnetizationCurve> {
    let lambdas: Vec<f64> = [0.9, 0.95, 1.0, 1.05, 1.1].iter().map(|l| l * delta).collect();
    (3..=5)
        .map(|n| MagnetizationCurve {
            n,
            lambdas: lambdas.clone(),
            values: lambdas
                .iter()
                .map(|&l| Estimate { value: wired_magnetization(1, n, 2.0 * n as f64, l, delta).unwrap(), stderr: 1e-4, n: 1 })
                .collect(),
        })
        .collect()
}

#[test]
fn crossing_is_invariant_under_rescaling() {
    let one = estimate_lambda_c_1d(&exact_curves(1.0), 1.0, Scaling::default()).unwrap();
    let two = estimate_lambda_c_1d(&exact_curves(2.0), 2.0, Scaling::default()).unwrap();
    assert!((one.estimate - 1.0).abs() < 0.15);
    assert!((one.estimate - two.estimate).abs() <= one.uncertainty.hypot(two.uncertainty), "{one:?} {two:?}");
}

#[test]
fn spin_flip_symmetry_and_griffiths() {
    let mut rng = chain_rng(32, 0);
    let lattice = LatticeBox::symmetric(1, 1).unwrap();
    let free = Region::finite(lattice.clone(), 1.0, Bc::Free, Bc::Periodic).unwrap();
    let odd = estimate_correlation(&[Point::new(1, 0.1)], &free, 1.0, 1.0, 20_000, &mut rng).unwrap().estimate;
    assert!(odd.agrees_with(&Estimate::exact(0.0), 3.0), "{odd:?}");

    let wired = Region::finite(lattice, 1.0, Bc::Wired, Bc::Periodic).unwrap();
    let (a, b) = (Point::new(1, 0.0), Point::new(2, 0.2));
    let pair = estimate_correlation(&[a, b], &wired, 1.0, 1.0, 50_000, &mut rng).unwrap().estimate;
    let sa = estimate_correlation(&[a], &wired, 1.0, 1.0, 50_000, &mut rng).unwrap().estimate;
    let sb = estimate_correlation(&[b], &wired, 1.0, 1.0, 50_000, &mut rng).unwrap().estimate;
    assert!(sa.times(&sb).at_most(&pair, 3.0), "{pair:?} {sa:?} {sb:?}");
    let m = estimate_magnetization(&wired, 1.0, 1.0, 20_000, &mut rng).unwrap().estimate;
    assert!(m.value > 0.0 && m.value < 1.0);
}
