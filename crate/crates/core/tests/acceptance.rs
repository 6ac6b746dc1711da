//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs with `cargo test --test acceptance`. Criteria 7 and 10 contain a
//! stated relation that does not hold; they print FAIL with the numbers and
//! do not fail the process. Any other FAIL does.

use std::process::ExitCode;
use std::time::Instant;

use tfim::experiments::{self, estimate_lambda_c_1d, magnetization_curves, HeatBathPlan, RunConfig, Scaling};
use tfim::geometry::{Bc, LatticeBox, Point, Region, SiteInterval};
use tfim::parity::{
    estimate_rpr_correlation, event_probability_identity, holes_identity_check, product_identity, verify_local_bounds,
    verify_switching, DiscreteSystem, SlotPoint,
};
use tfim::percolation::leaf_bound_check;
use tfim::poisson::{density_property, verify_modification_identity, PointSet, Scheme};
use tfim::report::IdentityReport;
use tfim::rng::{chain_rng, default_workers};
use tfim::spectral::{gap_scan, irb_check, SpectralModel};
use tfim::spin::{boundary_chain, estimate_correlation};
use tfim::stats::Estimate;
use tfim::Result;

const KNOWN_RED: [usize; 2] = [7, 10];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { pass, detail: detail.into() })
}

fn short(r: &IdentityReport) -> String {
    format!("{} {:.5}±{:.2e} vs {:.5}±{:.2e} {}", r.identity, r.lhs, r.se_lhs, r.rhs, r.se_rhs, if r.holds { "ok" } else { "FAILS" })
}

fn chain(half: usize, beta: f64, space: Bc, time: Bc) -> Region {
    Region::finite(LatticeBox::symmetric(1, half).unwrap(), beta, space, time).unwrap()
}

fn two_sites(beta: f64, time: Bc) -> Region {
    Region::finite(LatticeBox::even_side(1, 1).unwrap(), beta, Bc::Wired, time).unwrap()
}

fn oracle_equivalence() -> Result<Outcome> {
    let mut rng = chain_rng(101, 0);
    let mut pass = true;
    let mut parts = Vec::new();
    for (space, time) in [(Bc::Free, Bc::Periodic), (Bc::Wired, Bc::Wired)] {
        let region = chain(1, 1.0, space, time);
        let pts = [Point::new(0, 0.0), Point::new(2, 0.3)];
        let model = SpectralModel::build(region.lattice(), space, 1.0, 1.0, 0.0)?;
        let exact = model.correlation(&[(0, 0.0), (2, 0.3)], time, 1.0)?;
        let spin = estimate_correlation(&pts, &region, 1.0, 1.0, 100_000, &mut rng)?.estimate;
        let parity = estimate_rpr_correlation(&pts, &region, 1.0, 1.0, 100_000, &mut rng)?;
        let ok = spin.agrees_with(&Estimate::exact(exact), 3.0) && parity.agrees_with(&Estimate::exact(exact), 3.0);
        pass &= ok;
        parts.push(format!(
            "{}: oracle {exact:.5}, spin {:.5}±{:.1e}, parity {:.5}±{:.1e}",
            region.bc_label(),
            spin.value,
            spin.stderr,
            parity.value,
            parity.stderr
        ));
    }
    outcome(pass, parts.join("; "))
}

fn switching_lemma() -> Result<Outcome> {
    let lattice = LatticeBox::even_side(1, 1)?;
    let p = |rate: f64| 1.0 - (-rate / 3.0f64).exp();
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for (t1, t2) in [(Bc::Periodic, Bc::Periodic), (Bc::Free, Bc::Wired), (Bc::Free, Bc::Free)] {
        let system = DiscreteSystem::new(&lattice, 1.0, t1, t2, 3, p(1.0), p(4.0), p(1.0))?;
        let r = system.verify(SlotPoint { site: 0, slot: 0 }, SlotPoint { site: 1, slot: 1 }, 1e-12)?;
        worst = worst.max((r.switching.lhs - r.switching.rhs).abs());
        pass &= r.switching.holds;
    }
    let mut rng = chain_rng(102, 0);
    let mc = verify_switching(&two_sites(1.0, Bc::Periodic), 1.0, 1.0, Point::new(1, 0.2), 200_000, &mut rng)?;
    pass &= mc.holds;
    outcome(pass, format!("exact max |lhs-rhs| = {worst:.1e} (2 sites, 3 slots, pp/fw/ff); MC {}", short(&mc)))
}

fn infrared_bound() -> Result<Outcome> {
    let mut pass = true;
    let mut worst = f64::INFINITY;
    for half in [2, 3] {
        let lattice = LatticeBox::even_side(1, half)?;
        let model = SpectralModel::build(&lattice, Bc::Periodic, 1.0, 1.0, 0.0)?;
        for beta in [1.0, 2.0] {
            let (_, report) = irb_check(&model, beta, 100.0 * std::f64::consts::PI)?;
            pass &= report.worst.slack >= -1e-9 && report.passed;
            worst = worst.min(report.worst.slack);
        }
    }
    outcome(pass, format!("4 and 6 sites, β ∈ {{1,2}}, |ℓ| ≤ 100π: min slack {worst:.3e}"))
}

fn boundary_monotonicity() -> Result<Outcome> {
    let mut rng = chain_rng(104, 0);
    let lattice = LatticeBox::symmetric(1, 2)?;
    let o = lattice.origin();
    let pts = [Point::new(o, 0.0), Point::new(o + 1, 0.2)];
    let c = boundary_chain(&pts, &lattice, 1.0, 1.0, 1.0, 100_000, &mut rng)?;
    let values: Vec<String> =
        c.labels.iter().zip(&c.estimates).map(|(l, e)| format!("{l} {:.4}±{:.1e}", e.estimate.value, e.estimate.stderr)).collect();
    outcome(c.holds(), values.join(" <= "))
}

fn product_identity_check() -> Result<Outcome> {
    let mut rng = chain_rng(105, 0);
    let mut pass = true;
    let mut parts = Vec::new();
    let ground = Region::ground_state(LatticeBox::even_side(1, 1)?, Bc::Wired, Bc::Wired)?;
    for region in [two_sites(1.0, Bc::Periodic), ground] {
        let r = product_identity(&region, 1.0, 1.0, Point::new(1, 0.2), 100_000, &mut rng)?;
        pass &= r.report.holds;
        parts.push(format!("r={}: {}", region.length(), short(&r.report)));
    }
    outcome(pass, parts.join("; "))
}

fn local_bounds() -> Result<Outcome> {
    let mut rng = chain_rng(106, 0);
    let region = two_sites(1.0, Bc::Periodic);
    let kappas = [Point::new(1, 0.0), Point::new(1, 0.25), Point::new(0, 0.3)];
    let r = verify_local_bounds(&region, 1.0, 1.0, &kappas, 0, 100_000, &mut rng)?;
    let worst = r.first.iter().chain(&r.second).map(|x| x.lhs / x.rhs).fold(0.0, f64::max);
    outcome(
        r.holds(),
        format!("{} κ bounds, {} event bounds, largest lhs/rhs {worst:.3}", r.first.len(), r.second.len()),
    )
}

fn holes_and_events() -> Result<Outcome> {
    let mut rng = chain_rng(107, 0);
    let mut stated = true;
    let mut corrected = true;
    let mut parts = Vec::new();
    for (space, time) in [(Bc::Free, Bc::Periodic), (Bc::Wired, Bc::Free)] {
        let region = chain(1, 1.0, space, time);
        let j = [SiteInterval::new(1, -0.2, 0.15)?, SiteInterval::new(2, 0.1, 0.4)?];
        let holes = holes_identity_check(&j, &region, 1.0, 1.0, 100_000, &mut rng)?;
        let event = event_probability_identity(&j, &region, 1.0, 1.0, 100_000, &mut rng)?;
        for pair in [holes, event] {
            stated &= pair.stated.holds;
            corrected &= pair.corrected.holds;
            parts.push(format!("{}: {}", region.bc_label(), short(&pair.stated)));
        }
    }
    parts.push(format!("corrected forms {}", if corrected { "hold" } else { "FAIL" }));
    outcome(stated && corrected, parts.join("; "))
}

fn rn_suite() -> Result<Outcome> {
    let mut rng = chain_rng(108, 0);
    let mut pass = true;
    let mut worst: f64 = 0.0;
    let decay = |x: &PointSet| (-0.3 * x.len() as f64).exp();
    let g = |x: &PointSet| decay(x) * (1.0 + x.points().iter().sum::<f64>());
    for scheme in Scheme::ALL {
        for at in [0.5, 1.0, 2.0] {
            let (weighted, modified) = density_property(g, scheme, at, 1.0, 100_000, &mut rng)?;
            let density = IdentityReport::equality("density", weighted, modified, 3.0);
            let c1 = if scheme == Scheme::DeleteAll { 1.0 } else { 0.6f64.exp() };
            let bound = verify_modification_identity(decay, c1, scheme, at, 1.0, 100_000, &mut rng)?;
            pass &= density.holds && bound.holds;
            worst = worst.max(density.z());
        }
    }
    outcome(pass, format!("3 schemes × αt ∈ {{0.5,1,2}}: densities agree (max z {worst:.2}), bounds hold"))
}

fn critical_point() -> Result<Outcome> {
    let scan = gap_scan(&[4, 6, 8, 10], 1.0, 0.6, 1.4, 9)?;
    let reference = scan.estimate().unwrap_or(f64::NAN);
    let lambdas: Vec<f64> = (0..9).map(|i| 0.8 + 0.05 * i as f64).collect();
    let plan = HeatBathPlan { sweeps: 40_000, burn_in: 500, chains: 4, workers: default_workers(), batches: 20 };
    let curves = magnetization_curves(&[3, 4, 5, 6], &lambdas, 1.0, plan, 109)?;
    let est = estimate_lambda_c_1d(&curves, 1.0, Scaling::default())?;
    let pass = (reference - 1.0).abs() < 0.05 && (est.estimate - 1.0).abs() <= 0.15;
    outcome(
        pass,
        format!(
            "oracle gap-scan reference {reference:.4}; heat-bath crossing {:.4} ± {:.4} from {} crossings",
            est.estimate,
            est.uncertainty,
            est.crossings.len()
        ),
    )
}

fn leaf_bound() -> Result<Outcome> {
    let mut rng = chain_rng(110, 0);
    let region = Region::ground_state(LatticeBox::symmetric(1, 4)?, Bc::Wired, Bc::Wired)?;
    let r = leaf_bound_check(&region, 1.0, 1.0, 1, 2.0, 10_000, &mut rng)?;
    outcome(
        r.holds(),
        format!(
            "{} configurations, {} per-configuration violations; E[boundary intervals] {:.2} ± {:.2} vs stated bound {} (closed form {})",
            r.configurations,
            r.violations,
            r.boundary_intervals.value,
            r.boundary_intervals.stderr,
            r.leaf_bound,
            r.expected_boundary_intervals
        ),
    )
}

const DETERMINISM: &str = r#"
kind = "correlation"
seed = 2024
[region]
sizes = [1, 2]
beta = 1.0
time = "periodic"
[model]
lambdas = [0.5, 1.0]
[sampling]
n_samples = 4000
n_chains = 3
"#;

fn determinism() -> Result<Outcome> {
    let config = RunConfig::from_toml(DETERMINISM)?;
    let mut tables = Vec::new();
    for workers in [1, 3, 1] {
        let outcome = experiments::run(&config, workers)?;
        let mut bytes = Vec::new();
        experiments::write_csv(&outcome.rows, &mut bytes)?;
        tables.push(bytes);
    }
    let same = tables.windows(2).all(|w| w[0] == w[1]);
    outcome(same && !tables[0].is_empty(), format!("3 runs (1, 3, 1 workers), {} bytes each, identical: {same}", tables[0].len()))
}

fn main() -> ExitCode {
    type Check = fn() -> Result<Outcome>;
    let criteria: [(&str, Check); 11] = [
        ("oracle equivalence", oracle_equivalence),
        ("switching lemma", switching_lemma),
        ("infrared bound", infrared_bound),
        ("boundary-condition monotonicity", boundary_monotonicity),
        ("connectivity-correlation product", product_identity_check),
        ("local-modification bounds", local_bounds),
        ("holes and event-probability identities", holes_and_events),
        ("Radon-Nikodym densities", rn_suite),
        ("d=1 ground-state critical point", critical_point),
        ("percolation leaf bound", leaf_bound),
        ("determinism", determinism),
    ];
    let mut unexpected = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let k = i + 1;
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = match result {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        println!("{} {k:>2} {name} [{secs:.1}s]: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass && !KNOWN_RED.contains(&k) {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        println!("{unexpected} unexpected failure(s)");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
